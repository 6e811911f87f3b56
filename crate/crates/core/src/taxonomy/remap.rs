use serde::{Deserialize, Serialize};

use super::LabelId;
use crate::maskio::LabelMask;

/// Total map `LabelId -> LabelId`. Ids beyond the table map to void.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRemap {
    table: Vec<LabelId>,
}

impl LabelRemap {
    /// `table[i]` is the image of `LabelId(i)`. Entry 0 is forced to void.
    pub fn from_table(mut table: Vec<LabelId>) -> Self {
        if table.is_empty() {
            table.push(LabelId::VOID);
        }
        table[0] = LabelId::VOID;
        LabelRemap { table }
    }

    pub fn identity(id_space: usize) -> Self {
        let table = (0..id_space.max(1))
            .map(|i| LabelId(i as u16))
            .collect();
        LabelRemap { table }
    }

    /// Sends `selected[i]` to `LabelId(i + 1)` and everything else to void.
    /// This is the benchmark class map: raw dictionary ids become dense class indices.
    pub fn from_selection(selected: &[LabelId], id_space: usize) -> Self {
        let size = selected
            .iter()
            .map(|l| l.index() + 1)
            .max()
            .unwrap_or(1)
            .max(id_space);
        let mut table = vec![LabelId::VOID; size];
        for (i, &id) in selected.iter().enumerate() {
            if !id.is_void() {
                table[id.index()] = LabelId(i as u16 + 1);
            }
        }
        LabelRemap { table }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.len() <= 1
    }

    pub fn table(&self) -> &[LabelId] {
        &self.table
    }

    #[inline]
    pub fn apply(&self, id: LabelId) -> LabelId {
        self.table.get(id.index()).copied().unwrap_or(LabelId::VOID)
    }

    /// `self` followed by `next`: `x -> next(self(x))`.
    pub fn then(&self, next: &LabelRemap) -> LabelRemap {
        LabelRemap {
            table: self.table.iter().map(|&id| next.apply(id)).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.table.iter().enumerate().all(|(i, id)| id.index() == i)
    }

    pub fn apply_mask(&self, mask: &LabelMask) -> LabelMask {
        mask.map(|id| self.apply(id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_maps_to_dense_indices() {
        let r = LabelRemap::from_selection(&[LabelId(7), LabelId(3)], 10);
        assert_eq!(r.apply(LabelId(7)), LabelId(1));
        assert_eq!(r.apply(LabelId(3)), LabelId(2));
        assert_eq!(r.apply(LabelId(4)), LabelId::VOID);
        assert_eq!(r.apply(LabelId(500)), LabelId::VOID);
    }

    #[test]
    fn composition_matches_sequential_application() {
        let a = LabelRemap::from_table(vec![LabelId(0), LabelId(2), LabelId(2), LabelId(1)]);
        let b = LabelRemap::from_table(vec![LabelId(0), LabelId(3), LabelId(1), LabelId(3)]);
        let ab = a.then(&b);
        for i in 0..4 {
            let id = LabelId(i);
            assert_eq!(ab.apply(id), b.apply(a.apply(id)));
        }
    }
}
