//! Agreement between two annotations of one image, with disagreeing pixels
//! attributed to outline quality, naming, or missing objects.

mod report;
mod segments;

use std::collections::HashMap;

use thiserror::Error;

pub use report::{ConsistencyReport, ImageConsistency, TypeSummary};
pub use segments::{Segment, SegmentSet, Span};

/// Minimum IoU for two segments to count as the same object.
pub const MATCH_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConsistencyError {
    #[error("annotation dimensions differ: {a:?} vs {b:?}")]
    Shape { a: (usize, usize), b: (usize, usize) },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchedPair {
    pub a: usize,
    pub b: usize,
    pub iou: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_a: Vec<usize>,
    pub unmatched_b: Vec<usize>,
}

/// Greedy one-to-one selection from `(a, b, iou)` candidates: highest IoU
/// first, ties by ascending `(a, b)`, candidates below `threshold` dropped.
/// Returned pairs are in selection order.
pub fn greedy_match(candidates: &[(usize, usize, f64)], threshold: f64) -> Vec<MatchedPair> {
    let mut order: Vec<&(usize, usize, f64)> = candidates.iter().filter(|c| c.2 >= threshold).collect();
    order.sort_by(|x, y| y.2.total_cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));
    let mut used_a = std::collections::HashSet::new();
    let mut used_b = std::collections::HashSet::new();
    let mut pairs = Vec::new();
    for &&(a, b, iou) in &order {
        if used_a.contains(&a) || used_b.contains(&b) {
            continue;
        }
        used_a.insert(a);
        used_b.insert(b);
        pairs.push(MatchedPair { a, b, iou });
    }
    pairs
}

/// IoU of every overlapping segment pair, sorted by `(a, b)`.
pub fn overlap_ious(a: &SegmentSet, b: &SegmentSet) -> Result<Vec<(usize, usize, f64)>, ConsistencyError> {
    if a.dims() != b.dims() {
        return Err(ConsistencyError::Shape { a: a.dims(), b: b.dims() });
    }
    let mut inter: HashMap<(usize, usize), u64> = HashMap::new();
    for p in 0..a.pixels() {
        if let (Some(x), Some(y)) = (a.segment_at(p), b.segment_at(p)) {
            *inter.entry((x, y)).or_insert(0) += 1;
        }
    }
    let mut out: Vec<(usize, usize, f64)> = inter
        .into_iter()
        .map(|((x, y), n)| {
            let union = a.segments()[x].area + b.segments()[y].area - n;
            (x, y, n as f64 / union as f64)
        })
        .collect();
    out.sort_by(|p, q| (p.0, p.1).cmp(&(q.0, q.1)));
    Ok(out)
}

/// Matches segments of `a` to segments of `b` with [`MATCH_THRESHOLD`].
pub fn match_segments(a: &SegmentSet, b: &SegmentSet) -> Result<Matching, ConsistencyError> {
    let pairs = greedy_match(&overlap_ious(a, b)?, MATCH_THRESHOLD);
    let mut in_a = vec![false; a.len()];
    let mut in_b = vec![false; b.len()];
    for p in &pairs {
        in_a[p.a] = true;
        in_b[p.b] = true;
    }
    let unmatched = |flags: Vec<bool>| flags.iter().enumerate().filter(|(_, &m)| !m).map(|(i, _)| i).collect();
    Ok(Matching {
        pairs,
        unmatched_a: unmatched(in_a),
        unmatched_b: unmatched(in_b),
    })
}

/// Per-pixel attribution of one image pair.
///
/// A pixel agrees when both labels are equal (void included). A disagreeing
/// pixel is, in priority order: quality when it lies in the symmetric
/// difference of a same-label matched pair; naming when it lies in a matched
/// pair with different labels; quantity when exactly one side has an unmatched
/// segment there and the other side is void; residual otherwise.
pub fn decompose(id: &str, a: &SegmentSet, b: &SegmentSet, matching: &Matching) -> ImageConsistency {
    let mut partner_a = vec![None; a.len()];
    let mut partner_b = vec![None; b.len()];
    for p in &matching.pairs {
        partner_a[p.a] = Some(p.b);
        partner_b[p.b] = Some(p.a);
    }
    let mut row = ImageConsistency::empty(id, a.pixels() as u64);
    for p in 0..a.pixels() {
        let (sa, sb) = (a.segment_at(p), b.segment_at(p));
        if a.label_at(p) == b.label_at(p) {
            row.agreement += 1;
            continue;
        }
        let pair_a = sa.and_then(|x| partner_a[x].map(|y| (x, y)));
        let pair_b = sb.and_then(|y| partner_b[y].map(|x| (x, y)));
        let same_label = |(x, y): (usize, usize)| a.segments()[x].label == b.segments()[y].label;
        // a pixel in the segment of a matched pair is in its symmetric
        // difference unless the other side's segment is the partner
        let in_symdiff_a = pair_a.is_some_and(|(_, y)| sb != Some(y));
        let in_symdiff_b = pair_b.is_some_and(|(x, _)| sa != Some(x));
        if (in_symdiff_a && same_label(pair_a.unwrap())) || (in_symdiff_b && same_label(pair_b.unwrap())) {
            row.quality += 1;
        } else if pair_a.is_some_and(|q| !same_label(q)) || pair_b.is_some_and(|q| !same_label(q)) {
            row.naming += 1;
        } else if sa.is_some() != sb.is_some() {
            row.quantity += 1;
        } else {
            row.residual += 1;
        }
    }
    row
}

/// Match then decompose.
pub fn compare(id: &str, a: &SegmentSet, b: &SegmentSet) -> Result<ImageConsistency, ConsistencyError> {
    let matching = match_segments(a, b)?;
    Ok(decompose(id, a, b, &matching))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskio::{Grid, LabelMask};
    use crate::taxonomy::LabelId;
    use proptest::prelude::*;

    fn scene() -> (LabelMask, Grid<u16>) {
        // wall background, a 10x10 car and a 4x4 chair, both instances
        let mask = Grid::from_fn(16, 16, |r, c| {
            if (1..11).contains(&r) && (1..11).contains(&c) {
                LabelId(3)
            } else if (12..16).contains(&r) && (12..16).contains(&c) {
                LabelId(5)
            } else {
                LabelId(1)
            }
        });
        let inst = mask.map(|l| match l.0 {
            3 => 1,
            5 => 2,
            _ => 0,
        });
        (mask, inst)
    }

    fn set(mask: &LabelMask, inst: &Grid<u16>) -> SegmentSet {
        SegmentSet::from_annotation(mask, inst).unwrap()
    }

    #[test]
    fn identical_annotations_agree_fully() {
        let (m, i) = scene();
        let a = set(&m, &i);
        let matching = match_segments(&a, &a).unwrap();
        assert_eq!(matching.pairs.len(), 3);
        assert!(matching.pairs.iter().all(|p| p.a == p.b && p.iou == 1.0));
        let row = decompose("x", &a, &a, &matching);
        assert_eq!(row.agreement, 256);
        assert_eq!((row.quality, row.naming, row.quantity, row.residual), (0, 0, 0, 0));
    }

    #[test]
    fn empty_side_leaves_everything_unmatched() {
        let (m, i) = scene();
        let a = set(&m, &i);
        let empty = SegmentSet::from_mask(&Grid::filled(16, 16, LabelId::VOID));
        let matching = match_segments(&a, &empty).unwrap();
        assert!(matching.pairs.is_empty());
        assert_eq!(matching.unmatched_a, vec![0, 1, 2]);
        let row = decompose("x", &a, &empty, &matching);
        assert_eq!(row.quantity, 256);
    }

    #[test]
    fn renamed_segment_is_naming() {
        let (m, i) = scene();
        let renamed = m.map(|l| if l == LabelId(3) { LabelId(4) } else { l });
        let row = compare("x", &set(&m, &i), &set(&renamed, &i)).unwrap();
        assert_eq!(row.naming, 100);
        assert_eq!((row.quality, row.quantity, row.residual), (0, 0, 0));
        assert_eq!(row.naming_fraction(), 100.0 / 256.0);
    }

    #[test]
    fn deleted_segment_is_quantity() {
        let (m, i) = scene();
        let deleted = m.map(|l| if l == LabelId(5) { LabelId::VOID } else { l });
        let inst = i.map(|x| if x == 2 { 0 } else { x });
        let row = compare("x", &set(&m, &i), &set(&deleted, &inst)).unwrap();
        assert_eq!(row.quantity, 16);
        assert_eq!((row.quality, row.naming, row.residual), (0, 0, 0));
    }

    #[test]
    fn eroding_a_segment_moves_pixels_into_quality() {
        let (m, i) = scene();
        let eroded = Grid::from_fn(16, 16, |r, c| {
            let ring = (1..11).contains(&r) && (1..11).contains(&c) && !((2..10).contains(&r) && (2..10).contains(&c));
            if ring {
                LabelId(1)
            } else {
                m.get(r, c)
            }
        });
        let inst = Grid::from_fn(16, 16, |r, c| if eroded.get(r, c) == LabelId(1) { 0 } else { i.get(r, c) });
        let base = compare("x", &set(&m, &i), &set(&m, &i)).unwrap();
        let row = compare("x", &set(&m, &i), &set(&eroded, &inst)).unwrap();
        assert_eq!(row.quality, 36);
        assert!(row.quality > base.quality && row.agreement < base.agreement);
        assert_eq!((row.naming, row.quantity), (base.naming, base.quantity));
    }

    #[test]
    fn dimension_mismatch() {
        let a = SegmentSet::from_mask(&Grid::filled(2, 2, LabelId(1)));
        let b = SegmentSet::from_mask(&Grid::filled(2, 3, LabelId(1)));
        assert!(match_segments(&a, &b).is_err());
    }

    // All one-to-one matchings over the candidate pairs.
    fn all_matchings(c: &[(usize, usize, f64)]) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for (i, &(a, b, _)) in c.iter().enumerate() {
            let mut grown = Vec::new();
            for m in &out {
                if m.iter().all(|&j: &usize| c[j].0 != a && c[j].1 != b) {
                    let mut n = m.clone();
                    n.push(i);
                    grown.push(n);
                }
            }
            out.extend(grown);
        }
        out
    }

    #[test]
    fn contending_candidates_highest_wins() {
        // segment a0 is contended by b0 (IoU 0.6) and b1 (IoU 0.8)
        let table = [(0, 0, 0.6), (0, 1, 0.8)];
        let pairs = greedy_match(&table, MATCH_THRESHOLD);
        assert_eq!(pairs, vec![MatchedPair { a: 0, b: 1, iou: 0.8 }]);
        let best = all_matchings(&table)
            .into_iter()
            .max_by(|x, y| {
                let total = |m: &Vec<usize>| m.iter().map(|&j| table[j].2).sum::<f64>();
                total(x).total_cmp(&total(y))
            })
            .unwrap();
        assert_eq!(best, vec![1]);
    }

    #[test]
    fn threshold_and_tie_break() {
        let table = [(1, 0, 0.7), (0, 0, 0.7), (2, 2, 0.49)];
        let pairs = greedy_match(&table, MATCH_THRESHOLD);
        assert_eq!(pairs, vec![MatchedPair { a: 0, b: 0, iou: 0.7 }]);
    }

    fn annotation() -> impl Strategy<Value = (LabelMask, Grid<u16>)> {
        prop::collection::vec((0u16..4, 0u16..3), 64).prop_map(|cells| {
            let mask = Grid::from_vec(8, 8, cells.iter().map(|c| LabelId(c.0)).collect()).unwrap();
            // instance ids made unique per label so the pair is always consistent
            let inst = Grid::from_vec(
                8,
                8,
                cells.iter().map(|&(l, i)| if l == 0 { 0 } else { l * 3 + i }).collect(),
            )
            .unwrap();
            (mask, inst)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn decomposition_is_symmetric_and_complete((ma, ia) in annotation(), (mb, ib) in annotation()) {
            let a = set(&ma, &ia);
            let b = set(&mb, &ib);
            let ab = compare("x", &a, &b).unwrap();
            let ba = compare("x", &b, &a).unwrap();
            prop_assert_eq!(ab.agreement + ab.quality + ab.naming + ab.quantity + ab.residual, 64);
            prop_assert_eq!(
                (ab.agreement, ab.quality, ab.naming, ab.quantity, ab.residual),
                (ba.agreement, ba.quality, ba.naming, ba.quantity, ba.residual)
            );
            let same = ma.data().iter().zip(mb.data()).filter(|(x, y)| x == y).count() as u64;
            prop_assert_eq!(ab.agreement, same);
            let sum = ab.agreement_fraction() + ab.quality_fraction() + ab.naming_fraction()
                + ab.quantity_fraction() + ab.residual_fraction();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
