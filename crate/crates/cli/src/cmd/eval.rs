use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use spk_core::cascade::{parse_stream_spec, StreamSpec};
use spk_core::maskio::corpus;
use spk_core::{ConfusionMatrix, LabelId, LabelRemap, MetricsReport};

use crate::fail::{invalid, CmdResult, Failure};
use crate::out::{read_taxonomy, read_text, shards, OutDir, Pairing};
use crate::Strictness;

#[derive(Args, Serialize)]
pub struct EvalArgs {
    /// Ground-truth label masks (`<id>.pgm`).
    #[arg(long)]
    pub gt: PathBuf,
    /// Predicted label masks with the same file names.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Stream spec naming the stuff and object benchmark classes.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Taxonomy for class names; without --split every label is a class,
    /// split by macro class.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub strictness: Strictness,
    #[arg(long, default_value_t = 8)]
    pub shards: usize,
}

pub fn run(a: &EvalArgs) -> CmdResult {
    let out = OutDir::create(&a.out)?;
    out.write_run("eval", a)?;
    let taxonomy = a.taxonomy.as_deref().map(read_taxonomy).transpose()?;
    let spec = match (&a.split, &taxonomy) {
        (Some(path), _) => {
            parse_stream_spec(&read_text(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))?
        }
        (None, Some(t)) => {
            let ids: Vec<LabelId> = t.ids().filter(|id| !id.is_void()).collect();
            StreamSpec::from_taxonomy(t, &ids)?
        }
        (None, None) => return Err(invalid("eval needs --split or --taxonomy to define the benchmark classes")),
    };
    let mut benchmark: Vec<LabelId> = spec.stuff_ids().iter().chain(spec.object_ids()).copied().collect();
    benchmark.sort();
    if benchmark.is_empty() {
        return Err(invalid("the benchmark has no classes"));
    }
    let class_map = LabelRemap::from_selection(&benchmark, 0);
    let classes = |ids: &[LabelId]| -> BTreeSet<usize> { ids.iter().map(|&id| class_map.apply(id).index()).collect() };
    let (stuff, objects) = (classes(spec.stuff_ids()), classes(spec.object_ids()));
    let name = |id: LabelId| {
        taxonomy
            .as_ref()
            .and_then(|t| t.name(id))
            .map_or_else(|| format!("label_{id}"), str::to_string)
    };
    let names: Vec<String> = benchmark.iter().map(|&id| name(id)).collect();

    let mut table = String::from("class\tlabel\tname\tstream\n");
    for (i, &id) in benchmark.iter().enumerate() {
        let stream = if spec.is_stuff(id) { "stuff" } else { "object" };
        let _ = writeln!(table, "{}\t{id}\t{}\t{stream}", i + 1, names[i]);
    }
    out.write("classes.tsv", table.as_bytes())?;

    let pairing = Pairing::new(&corpus::list_ids(&a.gt)?, &corpus::list_ids(&a.pred)?);
    pairing.settle(&out, a.strictness, "gt", "pred")?;

    let partial: Vec<CmdResult<ConfusionMatrix>> = shards(&pairing.both, a.shards)
        .par_iter()
        .map(|chunk| {
            let mut cm = ConfusionMatrix::new(benchmark.len());
            for id in chunk.iter() {
                let gt = corpus::read_mask_file(&a.gt.join(format!("{id}.pgm")))?;
                let pred = corpus::read_mask_file(&a.pred.join(format!("{id}.pgm")))?;
                cm.accumulate(&gt, &pred, &class_map).map_err(|e| Failure::from(e).context(id))?;
            }
            Ok(cm)
        })
        .collect();
    let mut total = ConfusionMatrix::new(benchmark.len());
    for cm in partial {
        total.merge(&cm?)?;
    }

    let split = total.split_report(&stuff, &objects)?;
    let report = MetricsReport::from_matrix(&total, &names, Some(split));
    out.write_json("metrics.json", &report)?;
    out.write("per_class.tsv", report.per_class_tsv().as_bytes())?;
    Ok(())
}
