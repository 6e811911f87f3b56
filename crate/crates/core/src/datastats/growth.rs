use std::collections::HashSet;

use crate::taxonomy::LabelId;

/// Width of the sliding window estimating the new-class probability.
pub const GROWTH_WINDOW: usize = 1000;

/// `classes[n]` is the number of distinct classes among the first `n + 1`
/// instances; `p_new[n]` is the share of first occurrences in the window of
/// width `window` centred on instance `n` (clipped at both ends).
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthCurves {
    pub classes: Vec<u64>,
    pub p_new: Vec<f64>,
    pub window: usize,
}

pub fn growth_curves(order: &[LabelId], window: usize) -> GrowthCurves {
    let window = window.max(1);
    let mut seen = HashSet::new();
    let mut first = Vec::with_capacity(order.len());
    let mut classes = Vec::with_capacity(order.len());
    for &label in order {
        first.push(seen.insert(label));
        classes.push(seen.len() as u64);
    }
    let mut prefix = vec![0u64; order.len() + 1];
    for (i, &f) in first.iter().enumerate() {
        prefix[i + 1] = prefix[i] + u64::from(f);
    }
    let half = window / 2;
    let p_new = (0..order.len())
        .map(|n| {
            let lo = n.saturating_sub(half);
            let hi = (lo + window).min(order.len());
            let lo = hi.saturating_sub(window);
            (prefix[hi] - prefix[lo]) as f64 / (hi - lo) as f64
        })
        .collect();
    GrowthCurves {
        classes,
        p_new,
        window,
    }
}

impl GrowthCurves {
    /// `instances, classes, p_new` columns, keeping every `stride`-th row and the last.
    pub fn to_tsv(&self, stride: usize) -> String {
        let stride = stride.max(1);
        let mut out = String::from("instances\tclasses\tp_new\n");
        let n = self.classes.len();
        for i in (0..n).filter(|&i| i % stride == 0 || i + 1 == n) {
            out.push_str(&format!("{}\t{}\t{:.6}\n", i + 1, self.classes[i], self.p_new[i]));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_class_saturates() {
        let order = vec![LabelId(4); 5000];
        let g = growth_curves(&order, GROWTH_WINDOW);
        assert!(g.classes.iter().all(|&c| c == 1));
        assert_eq!(*g.p_new.last().unwrap(), 0.0);
        assert_eq!(g.p_new[0], 1.0 / 1000.0);
    }

    #[test]
    fn all_distinct_is_identity() {
        let order: Vec<LabelId> = (1..=300).map(LabelId).collect();
        let g = growth_curves(&order, 50);
        assert!(g.classes.iter().enumerate().all(|(i, &c)| c == i as u64 + 1));
        assert!(g.p_new.iter().all(|&p| p == 1.0));
    }

    proptest! {
        #[test]
        fn curve_monotone_and_bounded(labels in prop::collection::vec(1u16..30, 1..400), w in 1usize..100) {
            let order: Vec<LabelId> = labels.into_iter().map(LabelId).collect();
            let g = growth_curves(&order, w);
            let vocab = order.iter().collect::<HashSet<_>>().len() as u64;
            for (n, pair) in g.classes.windows(2).enumerate() {
                prop_assert!(pair[0] <= pair[1]);
                prop_assert!(pair[1] <= (n as u64 + 2).min(vocab));
            }
            prop_assert!(g.p_new.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }
}
