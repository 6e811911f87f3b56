use spk_core::applications::{synth_generate, SyntheticSpec};
use spk_core::cascade::{fuse_scene, total_loss, CascadeInputs, FusionMode, StreamSpec};
use spk_core::consistency::{compare, SegmentSet};
use spk_core::datastats::CorpusStats;
use spk_core::maskio::{corpus, read_scoremap, write_scoremap};
use spk_core::taxonomy::{parse_taxonomy, write_taxonomy};
use spk_core::{ConfusionMatrix, LabelId, LabelRemap, ScoreMap};

fn small_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        images: 40,
        seed,
        ..SyntheticSpec::default()
    }
}

#[test]
fn corpus_survives_a_disk_round_trip() {
    let (scenes, manifest, taxonomy) = synth_generate(&small_spec(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for s in &scenes {
        corpus::write_record(dir.path(), &s.record).unwrap();
    }
    corpus::write_scenes(dir.path(), scenes.iter().map(|s| (s.record.id.as_str(), s.record.scene.as_deref().unwrap()))).unwrap();
    let back = corpus::read_corpus(dir.path()).unwrap();
    assert_eq!(back, scenes.iter().map(|s| s.record.clone()).collect::<Vec<_>>());

    let stats = CorpusStats::from_records(&back).unwrap();
    assert!(manifest.diff(&stats).is_empty(), "{:?}", manifest.diff(&stats));
    let text = write_taxonomy(&taxonomy);
    assert_eq!(write_taxonomy(&parse_taxonomy(&text).unwrap()), text);
}

#[test]
fn sharded_statistics_equal_sequential() {
    let (scenes, _, _) = synth_generate(&small_spec(3)).unwrap();
    let whole = CorpusStats::from_records(scenes.iter().map(|s| &s.record)).unwrap();
    let mut merged = CorpusStats::new();
    for chunk in scenes.chunks(7).rev() {
        merged.merge(CorpusStats::from_records(chunk.iter().map(|s| &s.record)).unwrap()).unwrap();
    }
    assert_eq!(merged.report_json("x").unwrap(), whole.report_json("x").unwrap());
}

#[test]
fn synthetic_annotation_is_consistent_with_itself_and_scores_perfectly() {
    let (scenes, _, taxonomy) = synth_generate(&small_spec(4)).unwrap();
    let remap = LabelRemap::identity(taxonomy.id_space());
    let mut cm = ConfusionMatrix::new(taxonomy.id_space() - 1);
    for s in &scenes {
        let r = &s.record;
        let seg = SegmentSet::from_annotation(&r.mask, &r.instances).unwrap();
        let row = compare(&r.id, &seg, &seg).unwrap();
        assert_eq!(row.agreement, row.pixels);
        cm.accumulate(&r.mask, &r.mask, &remap).unwrap();
    }
    assert_eq!(cm.pixel_accuracy(), Some(1.0));
    assert_eq!(cm.mean_iou(), Some(1.0));
}

#[test]
fn oracle_logits_fuse_back_to_ground_truth() {
    // one-hot stream probabilities derived from the ground truth reproduce it
    let (scenes, _, taxonomy) = synth_generate(&small_spec(5)).unwrap();
    let benchmark: Vec<LabelId> = {
        let mut seen = std::collections::BTreeSet::new();
        for s in &scenes {
            seen.extend(s.record.mask.data().iter().copied().filter(|l| !l.is_void()));
        }
        seen.into_iter().collect()
    };
    let spec = StreamSpec::from_taxonomy(&taxonomy, &benchmark).unwrap();
    let s = spec.stuff_ids().len();
    for scene in scenes.iter().take(10) {
        let gt = &scene.record.mask;
        let (h, w) = gt.dims();
        let stuff = ScoreMap::from_fn(h, w, s + 1, |r, c, k| {
            let l = gt.get(r, c);
            let hot = match spec.stuff_channel(l) {
                Some(ch) => ch == k,
                None => k == s,
            };
            if hot { 1.0f32 } else { 0.0 }
        })
        .unwrap();
        let o = spec.object_ids().len();
        let objects = ScoreMap::from_fn(h, w, o, |r, c, k| {
            let hot = spec.object_channel(gt.get(r, c)).map_or(k == 0, |ch| ch == k);
            if hot { 1.0f32 } else { 0.0 }
        })
        .unwrap();
        // the binary score format is lossless for these maps
        let stuff = read_scoremap(&write_scoremap(&stuff)).unwrap();
        for mode in [FusionMode::Hard, FusionMode::Soft] {
            let fused = fuse_scene(&stuff, Some(&objects), &spec, mode).unwrap();
            for (f, g) in fused.data().iter().zip(gt.data()) {
                if !g.is_void() {
                    assert_eq!(f, g);
                }
            }
        }

        // confident logits on the same targets give a near-zero loss
        let logits = |m: &ScoreMap<f32>| ScoreMap::from_fn(h, w, m.channels(), |r, c, k| f64::from(m.at(r, c, k)) * 30.0).unwrap();
        let (report, _) = total_loss(
            &CascadeInputs {
                gt,
                stuff_logits: &logits(&stuff),
                object_logits: &logits(&objects),
                part: None,
            },
            &spec,
        )
        .unwrap();
        assert!(report.total < 1e-9, "{}", report.total);
    }
}
