use super::StatsError;
use crate::maskio::{Grid, LabelMask};
use crate::taxonomy::LabelId;

/// Side of the common grid masks are resampled to before voting.
pub const MODE_GRID: usize = 256;

/// Per-cell label votes on a fixed grid. Void never votes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeAccumulator {
    height: usize,
    width: usize,
    // per cell: (label, votes) sorted by label
    votes: Vec<Vec<(LabelId, u32)>>,
    masks: u64,
}

impl Default for ModeAccumulator {
    fn default() -> Self {
        Self::new(MODE_GRID, MODE_GRID)
    }
}

impl ModeAccumulator {
    pub fn new(height: usize, width: usize) -> Self {
        ModeAccumulator {
            height,
            width,
            votes: vec![Vec::new(); height * width],
            masks: 0,
        }
    }

    pub fn masks(&self) -> u64 {
        self.masks
    }

    /// Nearest-neighbour resamples `mask` to the grid and records its votes.
    pub fn add(&mut self, mask: &LabelMask) {
        let resampled;
        let mask = if mask.dims() == (self.height, self.width) {
            mask
        } else {
            resampled = mask.resize_nearest(self.height, self.width);
            &resampled
        };
        for (cell, &label) in self.votes.iter_mut().zip(mask.data()) {
            if label.is_void() {
                continue;
            }
            match cell.binary_search_by_key(&label, |e| e.0) {
                Ok(i) => cell[i].1 += 1,
                Err(i) => cell.insert(i, (label, 1)),
            }
        }
        self.masks += 1;
    }

    pub fn merge(&mut self, other: &ModeAccumulator) {
        assert_eq!((self.height, self.width), (other.height, other.width), "grid mismatch");
        for (cell, theirs) in self.votes.iter_mut().zip(&other.votes) {
            for &(label, n) in theirs {
                match cell.binary_search_by_key(&label, |e| e.0) {
                    Ok(i) => cell[i].1 += n,
                    Err(i) => cell.insert(i, (label, n)),
                }
            }
        }
        self.masks += other.masks;
    }

    /// Most voted label per cell, ties to the lowest id, void where no mask voted.
    pub fn mode(&self) -> Result<LabelMask, StatsError> {
        if self.masks == 0 {
            return Err(StatsError::EmptyCorpus);
        }
        let data = self
            .votes
            .iter()
            .map(|cell| {
                let mut best = (LabelId::VOID, 0u32);
                for &(label, n) in cell {
                    if n > best.1 {
                        best = (label, n);
                    }
                }
                best.0
            })
            .collect();
        Ok(Grid::from_vec(self.height, self.width, data).expect("grid size"))
    }
}

/// Mean over images of the fraction of non-void ground-truth pixels equal to
/// the mode map resampled to that image. Images without non-void pixels are
/// skipped.
pub fn mode_accuracy<'a>(mode: &LabelMask, masks: impl IntoIterator<Item = &'a LabelMask>) -> Result<f64, StatsError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for gt in masks {
        let resampled;
        let m = if gt.dims() == mode.dims() {
            mode
        } else {
            resampled = mode.resize_nearest(gt.height(), gt.width());
            &resampled
        };
        let mut valid = 0u64;
        let mut hit = 0u64;
        for (&g, &p) in gt.data().iter().zip(m.data()) {
            if !g.is_void() {
                valid += 1;
                hit += u64::from(g == p);
            }
        }
        if valid > 0 {
            sum += hit as f64 / valid as f64;
            n += 1;
        }
    }
    if n == 0 {
        return Err(StatsError::EmptyCorpus);
    }
    Ok(sum / n as f64)
}
