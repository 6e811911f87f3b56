use std::collections::BTreeMap;

use crate::maskio::{check_instances, InstanceMap, LabelMask, MaskIoError};
use crate::taxonomy::LabelId;

/// Horizontal run of pixels `[start, start + len)` on one row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub row: u32,
    pub start: u32,
    pub len: u32,
}

/// Pixels sharing one `(label, instance)` pair. Instance 0 collects the
/// label's stuff region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub label: LabelId,
    pub instance: u16,
    pub spans: Vec<Span>,
    pub area: u64,
}

const NONE: u32 = u32::MAX;

/// The non-void segments of one annotation, ordered by `(label, instance)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentSet {
    height: usize,
    width: usize,
    segments: Vec<Segment>,
    index: Vec<u32>,
}

impl SegmentSet {
    pub fn from_annotation(mask: &LabelMask, instances: &InstanceMap) -> Result<Self, MaskIoError> {
        check_instances(mask, instances)?;
        let (height, width) = mask.dims();
        let mut keys: BTreeMap<(LabelId, u16), u32> = BTreeMap::new();
        for (&l, &i) in mask.data().iter().zip(instances.data()) {
            if !l.is_void() {
                keys.insert((l, i), 0);
            }
        }
        let mut segments: Vec<Segment> = keys
            .iter_mut()
            .enumerate()
            .map(|(n, (&(label, instance), slot))| {
                *slot = n as u32;
                Segment {
                    label,
                    instance,
                    spans: Vec::new(),
                    area: 0,
                }
            })
            .collect();
        let mut index = vec![NONE; height * width];
        for r in 0..height {
            let mut c = 0;
            while c < width {
                let p = r * width + c;
                let label = mask.data()[p];
                if label.is_void() {
                    c += 1;
                    continue;
                }
                let key = (label, instances.data()[p]);
                let seg = keys[&key];
                let start = c;
                while c < width && mask.data()[r * width + c] == key.0 && instances.data()[r * width + c] == key.1 {
                    index[r * width + c] = seg;
                    c += 1;
                }
                let s = &mut segments[seg as usize];
                s.spans.push(Span {
                    row: r as u32,
                    start: start as u32,
                    len: (c - start) as u32,
                });
                s.area += (c - start) as u64;
            }
        }
        Ok(SegmentSet {
            height,
            width,
            segments,
            index,
        })
    }

    /// Annotation without instance information: one segment per label.
    pub fn from_mask(mask: &LabelMask) -> Self {
        let inst = mask.map(|_| 0u16);
        Self::from_annotation(mask, &inst).expect("instance 0 is always consistent")
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Segment covering flat pixel `p`, if the pixel is not void.
    pub fn segment_at(&self, p: usize) -> Option<usize> {
        match self.index[p] {
            NONE => None,
            s => Some(s as usize),
        }
    }

    pub fn label_at(&self, p: usize) -> LabelId {
        self.segment_at(p).map_or(LabelId::VOID, |s| self.segments[s].label)
    }

    pub fn pixels(&self) -> usize {
        self.index.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskio::Grid;

    #[test]
    fn spans_partition_non_void_pixels() {
        let mask = Grid::from_vec(2, 4, [1, 1, 2, 2, 0, 1, 1, 2].map(LabelId).to_vec()).unwrap();
        let inst = Grid::from_vec(2, 4, vec![0, 0, 1, 2, 0, 0, 0, 1]).unwrap();
        let set = SegmentSet::from_annotation(&mask, &inst).unwrap();
        assert_eq!(set.len(), 3);
        let areas: Vec<u64> = set.segments().iter().map(|s| s.area).collect();
        assert_eq!(areas, vec![4, 2, 1]);
        assert_eq!(set.segments()[0].spans.len(), 2);
        assert_eq!(set.segment_at(4), None);
        assert_eq!(set.segment_at(7), Some(1));
        let total: u64 = set.segments().iter().map(|s| s.area).sum();
        assert_eq!(total, 7);
    }

    #[test]
    fn inconsistent_instances_rejected() {
        let mask = Grid::from_vec(1, 2, vec![LabelId(1), LabelId(2)]).unwrap();
        let inst = Grid::from_vec(1, 2, vec![3, 3]).unwrap();
        assert!(SegmentSet::from_annotation(&mask, &inst).is_err());
    }
}
