use std::collections::BTreeMap;

use super::{CascadeError, FusionMode, StreamSpec};
use crate::maskio::{Grid, LabelMask, ScoreMap};
use crate::taxonomy::{LabelId, Taxonomy};

pub const DEFAULT_PART_THRESHOLD: f64 = 0.3;

/// Index of the first maximum.
fn argmax<T: Copy + Into<f64>>(values: &[T]) -> (usize, f64) {
    let mut best = (0, values[0].into());
    for (k, &v) in values.iter().enumerate().skip(1) {
        let v: f64 = v.into();
        if v > best.1 {
            best = (k, v);
        }
    }
    best
}

fn check_stuff<T: Copy + Into<f64>>(stuff: &ScoreMap<T>, spec: &StreamSpec) -> Result<(), CascadeError> {
    if stuff.channels() != spec.stuff_channels() {
        return Err(CascadeError::Channels {
            stream: "stuff",
            expected: spec.stuff_channels(),
            found: stuff.channels(),
        });
    }
    if !stuff.is_normalized() {
        return Err(CascadeError::NotNormalized("stuff stream"));
    }
    Ok(())
}

fn check_objects<T: Copy + Into<f64>>(
    objects: &ScoreMap<T>,
    dims: (usize, usize),
    spec: &StreamSpec,
) -> Result<(), CascadeError> {
    if objects.dims() != dims {
        return Err(CascadeError::Shape(format!(
            "object scores {:?} vs {:?}",
            objects.dims(),
            dims
        )));
    }
    if objects.channels() != spec.object_ids().len() {
        return Err(CascadeError::Channels {
            stream: "object",
            expected: spec.object_ids().len(),
            found: objects.channels(),
        });
    }
    if !objects.is_normalized() {
        return Err(CascadeError::NotNormalized("object stream"));
    }
    Ok(())
}

/// Foreground channel of the stuff stream as a single-channel map.
pub fn objectness<T: Copy + Into<f64>>(stuff: &ScoreMap<T>, spec: &StreamSpec) -> Result<ScoreMap<T>, CascadeError> {
    check_stuff(stuff, spec)?;
    let fg = spec.foreground_channel();
    let data = (0..stuff.pixels()).map(|p| stuff.pixel(p)[fg]).collect();
    Ok(ScoreMap::new(stuff.height(), stuff.width(), 1, data)?)
}

/// Scene labeling from the stuff and object streams.
///
/// `objects` may be `None` only when the spec has no object classes; the
/// foreground id is then emitted wherever the foreground would win. Ties go to
/// the lowest channel, with stuff channels ahead of object channels in `Soft`.
pub fn fuse_scene<T: Copy + Into<f64>>(
    stuff: &ScoreMap<T>,
    objects: Option<&ScoreMap<T>>,
    spec: &StreamSpec,
    mode: FusionMode,
) -> Result<LabelMask, CascadeError> {
    check_stuff(stuff, spec)?;
    let objects = match objects {
        Some(o) => {
            check_objects(o, stuff.dims(), spec)?;
            Some(o)
        }
        None if spec.object_ids().is_empty() => None,
        None => return Err(CascadeError::MissingObjectScores),
    };
    let fg = spec.foreground_channel();
    let labels = (0..stuff.pixels())
        .map(|p| {
            let s = stuff.pixel(p);
            match mode {
                FusionMode::Hard => {
                    let (k, _) = argmax(s);
                    match (k == fg, objects) {
                        (false, _) => spec.stuff_label(k),
                        (true, Some(o)) => spec.object_ids()[argmax(o.pixel(p)).0],
                        (true, None) => spec.foreground_id(),
                    }
                }
                FusionMode::Soft => {
                    let (k, best) = argmax(&s[..fg]);
                    let mut label = spec.stuff_label(k);
                    let gate: f64 = s[fg].into();
                    match objects {
                        Some(o) => {
                            let (j, v) = argmax(o.pixel(p));
                            if gate * v > best {
                                label = spec.object_ids()[j];
                            }
                        }
                        None => {
                            if gate > best {
                                label = spec.foreground_id();
                            }
                        }
                    }
                    label
                }
            }
        })
        .collect();
    Ok(Grid::from_vec(stuff.height(), stuff.width(), labels)?)
}

/// Part labeling plus the objects that needed a part map and had none.
#[derive(Clone, Debug, PartialEq)]
pub struct PartSegmentation {
    /// Part ids; void is the no-part label.
    pub mask: LabelMask,
    pub missing: Vec<LabelId>,
}

/// Splits each object region of `scene` into parts.
///
/// `part_scores[o]` has one channel per entry of `spec.parts_of(o)` plus a
/// trailing no-part channel. A pixel of object `o` receives the best of `o`'s
/// part channels when that score reaches `threshold`, otherwise no-part. The
/// object stream scores only fix the expected geometry.
pub fn segment_parts<T: Copy + Into<f64>>(
    object_scores: &ScoreMap<T>,
    scene: &LabelMask,
    part_scores: &BTreeMap<LabelId, ScoreMap<T>>,
    spec: &StreamSpec,
    threshold: f64,
) -> Result<PartSegmentation, CascadeError> {
    check_objects(object_scores, scene.dims(), spec)?;
    for (&obj, map) in part_scores {
        let parts = spec
            .parts_of(obj)
            .ok_or_else(|| CascadeError::PartScores(obj, "object has no registered parts".into()))?;
        if map.dims() != scene.dims() {
            return Err(CascadeError::PartScores(
                obj,
                format!("dimensions {:?} differ from scene {:?}", map.dims(), scene.dims()),
            ));
        }
        if map.channels() != parts.len() + 1 {
            return Err(CascadeError::PartScores(
                obj,
                format!("{} channels, expected {}", map.channels(), parts.len() + 1),
            ));
        }
        if !map.is_normalized() {
            return Err(CascadeError::PartScores(obj, "scores are not normalized".into()));
        }
    }
    let mut missing = std::collections::BTreeSet::new();
    let labels = scene
        .data()
        .iter()
        .enumerate()
        .map(|(p, &obj)| {
            let Some(parts) = spec.parts_of(obj) else {
                return LabelId::VOID;
            };
            let Some(map) = part_scores.get(&obj) else {
                missing.insert(obj);
                return LabelId::VOID;
            };
            let (k, score) = argmax(&map.pixel(p)[..parts.len()]);
            if score >= threshold {
                parts[k]
            } else {
                LabelId::VOID
            }
        })
        .collect();
    for obj in &missing {
        log::warn!("no part score map for object {obj}; its pixels get no part");
    }
    Ok(PartSegmentation {
        mask: Grid::from_vec(scene.height(), scene.width(), labels)?,
        missing: missing.into_iter().collect(),
    })
}

/// One coarsened copy of `scene` per requested hypernym level. Labels outside
/// the dictionary (such as a foreground id) pass through unchanged.
pub fn hierarchical_output(scene: &LabelMask, taxonomy: &Taxonomy, levels: &[usize]) -> Vec<LabelMask> {
    let limit = taxonomy.id_space();
    levels
        .iter()
        .map(|&level| {
            let remap = taxonomy.merge_to_level(level);
            scene.map(|id| if id.index() < limit { remap.apply(id) } else { id })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::MacroClass;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec() -> StreamSpec {
        StreamSpec::new(
            [LabelId(1), LabelId(2)],
            [LabelId(3), LabelId(4), LabelId(5)],
            BTreeMap::from([(LabelId(3), vec![LabelId(7), LabelId(6)])]),
            LabelId(9),
        )
        .unwrap()
    }

    fn random_probs(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> ScoreMap<f64> {
        let logits = ScoreMap::from_fn(h, w, c, |_, _, _| rng.gen_range(-3.0..3.0)).unwrap();
        logits.softmax()
    }

    fn one_hot(h: usize, w: usize, c: usize, hot: impl Fn(usize) -> usize) -> ScoreMap<f64> {
        ScoreMap::from_fn(h, w, c, |r, col, k| if hot(r * w + col) == k { 1.0 } else { 0.0 }).unwrap()
    }

    // Independent argmax: largest value, ties to the smallest index.
    fn oracle_argmax(v: &[f64]) -> usize {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap().then(a.cmp(&b)));
        idx[0]
    }

    #[test]
    fn objectness_extracts_foreground_channel() {
        let s = spec();
        let zero_fg = one_hot(2, 3, 3, |p| p % 2);
        assert!(objectness(&zero_fg, &s).unwrap().data().iter().all(|&v| v == 0.0));
        let hot = one_hot(1, 2, 3, |p| if p == 1 { 2 } else { 0 });
        assert_eq!(objectness(&hot, &s).unwrap().data(), &[0.0, 1.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let probs = random_probs(&mut rng, 4, 5, 3);
        let obj = objectness(&probs, &s).unwrap();
        assert_eq!(obj.channels(), 1);
        for r in 0..4 {
            for c in 0..5 {
                assert_eq!(obj.at(r, c, 0), probs.at(r, c, 2));
            }
        }
        let wrong = random_probs(&mut rng, 2, 2, 4);
        assert!(matches!(objectness(&wrong, &s), Err(CascadeError::Channels { .. })));
    }

    #[test]
    fn fusion_extremes() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let objects = random_probs(&mut rng, 3, 4, 3);
        let stuff_only = ScoreMap::from_fn(3, 4, 3, |r, c, k| match k {
            2 => 0.0,
            0 => 0.25 + 0.5 * ((r + c) % 2) as f64,
            _ => 0.75 - 0.5 * ((r + c) % 2) as f64,
        })
        .unwrap();
        for mode in [FusionMode::Hard, FusionMode::Soft] {
            let out = fuse_scene(&stuff_only, Some(&objects), &s, mode).unwrap();
            for p in 0..12 {
                let k = oracle_argmax(&stuff_only.pixel(p)[..2]);
                assert_eq!(out.data()[p], s.stuff_ids()[k]);
            }
        }
        let fg = one_hot(3, 4, 3, |_| 2);
        for mode in [FusionMode::Hard, FusionMode::Soft] {
            let out = fuse_scene(&fg, Some(&objects), &s, mode).unwrap();
            for p in 0..12 {
                assert_eq!(out.data()[p], s.object_ids()[oracle_argmax(objects.pixel(p))]);
            }
        }
    }

    #[test]
    fn hard_fusion_matches_brute_force() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let stuff = random_probs(&mut rng, 5, 6, 3);
            let objects = random_probs(&mut rng, 5, 6, 3);
            let out = fuse_scene(&stuff, Some(&objects), &s, FusionMode::Hard).unwrap();
            for p in 0..30 {
                let k = oracle_argmax(stuff.pixel(p));
                let expected = if k < 2 {
                    s.stuff_ids()[k]
                } else {
                    s.object_ids()[oracle_argmax(objects.pixel(p))]
                };
                assert_eq!(out.data()[p], expected);
            }
        }
    }

    #[test]
    fn soft_fusion_matches_brute_force() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let stuff = random_probs(&mut rng, 5, 6, 3);
        let objects = random_probs(&mut rng, 5, 6, 3);
        let out = fuse_scene(&stuff, Some(&objects), &s, FusionMode::Soft).unwrap();
        for p in 0..30 {
            let sp = stuff.pixel(p);
            let mut scores = vec![sp[0], sp[1]];
            scores.extend(objects.pixel(p).iter().map(|&v| sp[2] * v));
            let labels = [1, 2, 3, 4, 5];
            assert_eq!(out.data()[p], LabelId(labels[oracle_argmax(&scores)]));
        }
    }

    #[test]
    fn fusion_input_errors() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let stuff = random_probs(&mut rng, 2, 2, 3);
        assert_eq!(
            fuse_scene(&stuff, None, &s, FusionMode::Hard).unwrap_err(),
            CascadeError::MissingObjectScores
        );
        let small = random_probs(&mut rng, 2, 1, 3);
        assert!(matches!(
            fuse_scene(&stuff, Some(&small), &s, FusionMode::Hard),
            Err(CascadeError::Shape(_))
        ));
        let raw = ScoreMap::new(2, 2, 3, vec![1.0; 12]).unwrap();
        assert_eq!(
            fuse_scene(&raw, Some(&stuff), &s, FusionMode::Hard).unwrap_err(),
            CascadeError::NotNormalized("stuff stream")
        );
    }

    fn scene_with_objects() -> LabelMask {
        Grid::from_vec(2, 3, [3, 3, 4, 1, 3, 0].map(LabelId).to_vec()).unwrap()
    }

    #[test]
    fn unreachable_threshold_gives_no_parts() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let objects = random_probs(&mut rng, 2, 3, 3);
        let parts = BTreeMap::from([(LabelId(3), random_probs(&mut rng, 2, 3, 3))]);
        let out = segment_parts(&objects, &scene_with_objects(), &parts, &s, 1.0).unwrap();
        assert!(out.mask.data().iter().all(|l| l.is_void()));
        assert!(out.missing.is_empty());
    }

    #[test]
    fn one_hot_parts_inside_object_region() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let objects = random_probs(&mut rng, 2, 3, 3);
        // channels: 7, 6, no-part
        let hot = one_hot(2, 3, 3, |p| [0, 1, 0, 1, 2, 0][p]);
        let parts = BTreeMap::from([(LabelId(3), hot)]);
        let out = segment_parts(&objects, &scene_with_objects(), &parts, &s, 0.5).unwrap();
        assert_eq!(out.mask.data(), &[7, 6, 0, 0, 0, 0].map(LabelId));
    }

    #[test]
    fn parts_match_brute_force_and_report_missing() {
        let s = StreamSpec::new(
            [LabelId(1)],
            [LabelId(3), LabelId(4)],
            BTreeMap::from([
                (LabelId(3), vec![LabelId(7), LabelId(6)]),
                (LabelId(4), vec![LabelId(8)]),
            ]),
            LabelId(9),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let scene = Grid::from_fn(6, 6, |_, _| LabelId([0, 1, 3, 4][rng.gen_range(0..4)]));
        let objects = random_probs(&mut rng, 6, 6, 2);
        let map3 = random_probs(&mut rng, 6, 6, 3);
        let parts = BTreeMap::from([(LabelId(3), map3.clone())]);
        let theta = 0.35;
        let out = segment_parts(&objects, &scene, &parts, &s, theta).unwrap();
        assert_eq!(out.missing, vec![LabelId(4)]);
        for p in 0..36 {
            let expected = if scene.data()[p] == LabelId(3) {
                let v = &map3.pixel(p)[..2];
                let k = oracle_argmax(v);
                if v[k] >= theta {
                    [LabelId(7), LabelId(6)][k]
                } else {
                    LabelId::VOID
                }
            } else {
                LabelId::VOID
            };
            assert_eq!(out.mask.data()[p], expected);
        }
        let bad = BTreeMap::from([(LabelId(1), map3)]);
        assert!(matches!(
            segment_parts(&objects, &scene, &bad, &s, theta),
            Err(CascadeError::PartScores(..))
        ));
    }

    fn furniture() -> (Taxonomy, [LabelId; 6]) {
        let mut t = Taxonomy::new();
        let furniture = t.intern("furniture", MacroClass::Object).unwrap();
        let cabinet = t.intern("cabinet", MacroClass::Object).unwrap();
        let desk = t.intern("desk", MacroClass::Object).unwrap();
        let bench = t.intern("bench", MacroClass::Object).unwrap();
        let table = t.intern("pool table", MacroClass::Object).unwrap();
        let wall = t.intern("wall", MacroClass::Stuff).unwrap();
        for child in [cabinet, desk, bench, table] {
            t.set_hypernym(child, furniture).unwrap();
        }
        (t, [furniture, cabinet, desk, bench, table, wall])
    }

    #[test]
    fn hierarchical_furniture_merge() {
        let (t, [furniture, cabinet, desk, _, _, wall]) = furniture();
        let scene = Grid::from_vec(1, 4, vec![cabinet, desk, wall, LabelId(99)]).unwrap();
        let levels = hierarchical_output(&scene, &t, &[0, t.max_depth()]);
        assert_eq!(levels[0].data(), &[furniture, furniture, wall, LabelId(99)]);
        assert_eq!(levels[1], scene);
    }

    #[test]
    fn hierarchical_matches_ancestor_walk() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let mut t = Taxonomy::new();
            let n = rng.gen_range(3..15);
            let ids: Vec<LabelId> = (0..n)
                .map(|i| t.intern(&format!("n{i}"), MacroClass::Object).unwrap())
                .collect();
            // parent always has a smaller index, so the relation is a forest
            let mut parent = vec![None; n];
            for i in 1..n {
                if rng.gen_bool(0.7) {
                    let p = rng.gen_range(0..i);
                    t.set_hypernym(ids[i], ids[p]).unwrap();
                    parent[i] = Some(p);
                }
            }
            let scene = Grid::from_fn(4, 4, |_, _| ids[rng.gen_range(0..n)]);
            let levels: Vec<usize> = (0..=t.max_depth()).collect();
            let out = hierarchical_output(&scene, &t, &levels);
            for (li, &level) in levels.iter().enumerate() {
                for (p, &id) in scene.data().iter().enumerate() {
                    let mut chain = vec![id.index() - 1];
                    while let Some(q) = parent[*chain.last().unwrap()] {
                        chain.push(q);
                    }
                    let depth = chain.len() - 1;
                    let expected = ids[chain[depth - level.min(depth)]];
                    assert_eq!(out[li].data()[p], expected);
                }
            }
        }
    }

    fn probs_strategy(pixels: usize, channels: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-4.0f64..4.0, pixels * channels)
    }

    proptest! {
        #[test]
        fn hard_gate_ignores_objects_where_stuff_wins(
            stuff in probs_strategy(12, 3),
            objects_a in probs_strategy(12, 3),
            objects_b in probs_strategy(12, 3),
        ) {
            let s = spec();
            let stuff = ScoreMap::new(3, 4, 3, stuff).unwrap().softmax();
            let a = ScoreMap::new(3, 4, 3, objects_a).unwrap().softmax();
            let b = ScoreMap::new(3, 4, 3, objects_b).unwrap().softmax();
            let out_a = fuse_scene(&stuff, Some(&a), &s, FusionMode::Hard).unwrap();
            let out_b = fuse_scene(&stuff, Some(&b), &s, FusionMode::Hard).unwrap();
            for p in 0..12 {
                if s.is_stuff(out_a.data()[p]) {
                    prop_assert_eq!(out_a.data()[p], out_b.data()[p]);
                }
            }
        }

        #[test]
        fn zero_object_spec_is_stuff_argmax(logits in probs_strategy(12, 3)) {
            let s = StreamSpec::new([LabelId(1), LabelId(2)], [], BTreeMap::new(), LabelId(3)).unwrap();
            let stuff = ScoreMap::new(3, 4, 3, logits).unwrap().softmax();
            for mode in [FusionMode::Hard, FusionMode::Soft] {
                let out = fuse_scene(&stuff, None, &s, mode).unwrap();
                for p in 0..12 {
                    prop_assert_eq!(out.data()[p], LabelId(oracle_argmax(stuff.pixel(p)) as u16 + 1));
                }
            }
        }

        #[test]
        fn logit_scaling_keeps_hard_labels(
            stuff in probs_strategy(12, 3),
            objects in probs_strategy(12, 3),
            scale in 0.1f64..10.0,
        ) {
            let s = spec();
            let sl = ScoreMap::new(3, 4, 3, stuff).unwrap();
            let ol = ScoreMap::new(3, 4, 3, objects).unwrap();
            let scaled = |m: &ScoreMap<f64>| {
                ScoreMap::new(3, 4, 3, m.data().iter().map(|v| v * scale).collect()).unwrap().softmax()
            };
            let base = fuse_scene(&sl.softmax(), Some(&ol.softmax()), &s, FusionMode::Hard).unwrap();
            let moved = fuse_scene(&scaled(&sl), Some(&scaled(&ol)), &s, FusionMode::Hard).unwrap();
            prop_assert_eq!(base, moved);
        }
    }
}
