use std::collections::BTreeMap;

use proptest::prelude::*;
use spk_core::taxonomy::select_top_k_by_pixel_ratio;
use spk_core::{ConfusionMatrix, Grid, LabelId, LabelMask, LabelRemap, MacroClass, Taxonomy};

/// Label `i + 1` hangs under an earlier label unless its flag makes it a root.
fn forest(parents: &[(bool, prop::sample::Index)]) -> Taxonomy {
    let mut t = Taxonomy::new();
    for i in 0..parents.len() {
        t.intern(&format!("l{i}"), MacroClass::Object).unwrap();
    }
    for (i, (root, idx)) in parents.iter().enumerate().skip(1) {
        if !root {
            t.set_hypernym(LabelId(i as u16 + 1), LabelId(idx.index(i) as u16 + 1)).unwrap();
        }
    }
    t
}

fn trees() -> impl Strategy<Value = Vec<(bool, prop::sample::Index)>> {
    (1usize..16).prop_flat_map(|n| prop::collection::vec((prop::bool::weighted(0.25), any::<prop::sample::Index>()), n))
}

fn masks(labels: u16, h: usize, w: usize) -> impl Strategy<Value = LabelMask> {
    prop::collection::vec(0..=labels, h * w).prop_map(move |v| Grid::from_vec(h, w, v.into_iter().map(LabelId).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn coarsening_composes(parents in trees(), a in 0usize..7, b in 0usize..7) {
        let t = forest(&parents);
        let (fine, coarse) = (a.max(b), a.min(b));
        let composed = t.merge_to_level(fine).then(&t.merge_to_level(coarse));
        let direct = t.merge_to_level(coarse);
        prop_assert_eq!(composed.table(), direct.table());
    }

    #[test]
    fn merge_targets_are_ancestors_at_the_level(parents in trees(), level in 0usize..6) {
        let t = forest(&parents);
        let remap = t.merge_to_level(level);
        for id in t.ids() {
            let target = remap.apply(id);
            prop_assert!(t.ancestors(id).contains(&target));
            prop_assert_eq!(t.depth(target), t.depth(id).min(level));
        }
    }

    #[test]
    fn merging_never_lowers_pixel_accuracy(
        (parents, gt, pred, level) in trees().prop_flat_map(|p| {
            let n = p.len() as u16;
            (Just(p), masks(n, 6, 7), masks(n, 6, 7), 0usize..5)
        })
    ) {
        let t = forest(&parents);
        let classes = parents.len();
        let correct = |remap: &LabelRemap| {
            let mut cm = ConfusionMatrix::new(classes);
            cm.accumulate(&gt, &pred, remap).unwrap();
            (cm.correct(), cm.total())
        };
        let raw = correct(&LabelRemap::identity(classes + 1));
        let fine = correct(&t.merge_to_level(level + 1));
        let coarse = correct(&t.merge_to_level(level));
        prop_assert!(raw.1 == fine.1 && fine.1 == coarse.1);
        prop_assert!(raw.0 <= fine.0 && fine.0 <= coarse.0);
    }

    #[test]
    fn confusion_merge_is_shard_independent(
        pairs in prop::collection::vec((masks(6, 3, 4), masks(8, 3, 4)), 1..8),
        split in any::<prop::sample::Index>(),
    ) {
        let remap = LabelRemap::identity(7);
        let mut whole = ConfusionMatrix::new(6);
        for (g, p) in &pairs {
            whole.accumulate(g, p, &remap).unwrap();
        }
        let at = split.index(pairs.len() + 1);
        let (mut left, mut right) = (ConfusionMatrix::new(6), ConfusionMatrix::new(6));
        for (g, p) in &pairs[..at] {
            left.accumulate(g, p, &remap).unwrap();
        }
        for (g, p) in &pairs[at..] {
            right.accumulate(g, p, &remap).unwrap();
        }
        right.merge(&left).unwrap();
        prop_assert_eq!(right, whole);
    }

    #[test]
    fn top_k_is_prefix_monotone(counts in prop::collection::btree_map(0u16..60, 0u64..50, 0..40), k in 0usize..45) {
        let counts: BTreeMap<LabelId, u64> = counts.into_iter().map(|(k, v)| (LabelId(k), v)).collect();
        let small = select_top_k_by_pixel_ratio(&counts, k);
        let large = select_top_k_by_pixel_ratio(&counts, k + 1);
        prop_assert!(large.labels.starts_with(&small.labels));
    }
}
