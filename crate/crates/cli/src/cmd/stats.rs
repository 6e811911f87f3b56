use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use spk_core::cascade::StreamSpec;
use spk_core::datastats::{growth_curves, mode_accuracy, CorpusStats, ModeAccumulator, SummaryRow, GROWTH_WINDOW, MODE_GRID};
use spk_core::json::Fixed6;
use spk_core::maskio::{corpus, write_mask};
use spk_core::taxonomy::{pixel_coverage, select_top_k_by_pixel_ratio, MacroClass};
use spk_core::LabelId;

use crate::fail::{invalid, CmdResult, Failure};
use crate::out::{read_taxonomy, shards, OutDir};

#[derive(Args, Serialize)]
pub struct StatsArgs {
    /// Corpus directory (`<id>.pgm`, `<id>.inst.pgm`, part levels, `scenes.tsv`).
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset name used in the summary row.
    #[arg(long, default_value = "corpus")]
    pub name: String,
    /// Report the pixel coverage of the K labels with the most pixels.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Taxonomy used to split the top-K coverage into stuff and objects.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    #[arg(long, default_value_t = GROWTH_WINDOW)]
    pub growth_window: usize,
    /// Keep every Nth row of growth.tsv.
    #[arg(long, default_value_t = 10)]
    pub growth_stride: usize,
    /// Masks scored against the mode image; defaults to the corpus itself.
    #[arg(long)]
    pub mode_eval: Option<PathBuf>,
    /// Side of the square grid the mode image is voted on.
    #[arg(long, default_value_t = MODE_GRID)]
    pub mode_grid: usize,
    #[arg(long, default_value_t = 8)]
    pub shards: usize,
}

#[derive(Serialize)]
struct ModeJson {
    grid: usize,
    images_scored: usize,
    mode_accuracy: Option<Fixed6>,
    schema_version: &'static str,
}

#[derive(Serialize)]
struct CoverageJson {
    coverage: Fixed6,
    k: usize,
    object_classes: Option<usize>,
    object_coverage: Option<Fixed6>,
    schema_version: &'static str,
    selected: Vec<LabelId>,
    shortfall: Option<usize>,
    stuff_classes: Option<usize>,
    stuff_coverage: Option<Fixed6>,
}

pub fn run(a: &StatsArgs) -> CmdResult {
    if a.mode_grid == 0 {
        return Err(invalid("--mode-grid must be positive"));
    }
    let out = OutDir::create(&a.out)?;
    out.write_run("stats", a)?;
    let taxonomy = a.taxonomy.as_deref().map(read_taxonomy).transpose()?;
    let ids = corpus::list_ids(&a.annotations)?;
    if ids.is_empty() {
        return Err(invalid(format!("no annotations in {}", a.annotations.display())));
    }
    let scenes = corpus::read_scenes(&a.annotations)?;

    let partial: Vec<CmdResult<(CorpusStats, ModeAccumulator)>> = shards(&ids, a.shards)
        .par_iter()
        .map(|chunk| {
            let mut stats = CorpusStats::new();
            let mut mode = ModeAccumulator::new(a.mode_grid, a.mode_grid);
            for id in chunk.iter() {
                let record = corpus::read_record(&a.annotations, id, scenes.get(id).cloned())?;
                stats.add_record(&record).map_err(|e| Failure::from(e).context(id))?;
                mode.add(&record.mask);
            }
            Ok((stats, mode))
        })
        .collect();
    let mut stats = CorpusStats::new();
    let mut mode_acc = ModeAccumulator::new(a.mode_grid, a.mode_grid);
    for p in partial {
        let (s, m) = p?;
        stats.merge(s)?;
        mode_acc.merge(&m);
    }

    out.write("stats.json", stats.report_json(&a.name)?.as_bytes())?;
    out.write("ranking.tsv", stats.ranking_tsv().as_bytes())?;
    let summary = format!("{}{}", SummaryRow::TSV_HEADER, stats.summary(&a.name).to_tsv_line());
    out.write("summary.tsv", summary.as_bytes())?;
    let growth = growth_curves(&stats.order_log(), a.growth_window);
    out.write("growth.tsv", growth.to_tsv(a.growth_stride).as_bytes())?;

    let mode = mode_acc.mode()?;
    out.write("mode.pgm", &write_mask(&mode))?;
    let (eval_dir, eval_ids) = match &a.mode_eval {
        Some(dir) => (dir.as_path(), corpus::list_ids(dir)?),
        None => (a.annotations.as_path(), ids.clone()),
    };
    let scores = per_image_mode_scores(&mode, eval_dir, &eval_ids, a.shards)?;
    let mode_accuracy = (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64);
    out.write_json(
        "mode.json",
        &ModeJson {
            grid: a.mode_grid,
            images_scored: scores.len(),
            mode_accuracy: mode_accuracy.map(Fixed6),
            schema_version: spk_core::SCHEMA_VERSION,
        },
    )?;

    if let Some(k) = a.top_k {
        let top = select_top_k_by_pixel_ratio(&stats.pixel_counts, k);
        let by_macro = |want: bool| {
            taxonomy.as_ref().map(|t| {
                let ids: Vec<LabelId> = top
                    .labels
                    .iter()
                    .copied()
                    .filter(|&id| (t.macro_class(id) == Some(MacroClass::Stuff)) == want)
                    .collect();
                (ids.len(), Fixed6(pixel_coverage(&stats.pixel_counts, &ids)))
            })
        };
        let (stuff, object) = (by_macro(true), by_macro(false));
        out.write_json(
            "coverage.json",
            &CoverageJson {
                coverage: Fixed6(pixel_coverage(&stats.pixel_counts, &top.labels)),
                k,
                object_classes: object.map(|o| o.0),
                object_coverage: object.map(|o| o.1),
                schema_version: spk_core::SCHEMA_VERSION,
                selected: top.labels.clone(),
                shortfall: top.shortfall,
                stuff_classes: stuff.map(|s| s.0),
                stuff_coverage: stuff.map(|s| s.1),
            },
        )?;
        if let Some(t) = &taxonomy {
            let spec = StreamSpec::from_taxonomy(t, &top.labels)?;
            out.write("benchmark_streams.tsv", spec.to_tsv().as_bytes())?;
        }
    }
    Ok(())
}

/// Per-image mode accuracy in id order; images without labelled pixels are dropped.
fn per_image_mode_scores(mode: &spk_core::LabelMask, dir: &Path, ids: &[String], n: usize) -> CmdResult<Vec<f64>> {
    let partial: Vec<CmdResult<Vec<f64>>> = shards(ids, n)
        .par_iter()
        .map(|chunk| {
            let mut scores = Vec::new();
            for id in chunk.iter() {
                let mask = corpus::read_mask_file(&dir.join(format!("{id}.pgm")))?;
                if let Ok(s) = mode_accuracy(mode, [&mask]) {
                    scores.push(s);
                }
            }
            Ok(scores)
        })
        .collect();
    let mut all = Vec::with_capacity(ids.len());
    for p in partial {
        all.extend(p?);
    }
    Ok(all)
}
