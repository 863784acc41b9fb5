//! `vidsum eval`: full per-video evaluation (exact + cosine AKM, METEOR
//! over the cosine alignment, optional externally computed metrics) and a
//! corpus aggregate.

use std::collections::HashMap;
use std::path::PathBuf;

use vidsum_core::caption::{aggregate, evaluate_summary};
use vidsum_core::model::{
    load_dataset, load_external_scores, load_predictions, ExternalScores, FeatureStore,
    VideoRecord,
};
use vidsum_core::{io, Error, Result};

use crate::cmd::{ensure_out_dir, par_map_ordered};
use crate::manifest::ManifestBuilder;

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Dataset JSON with reference annotations.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory of VSFT feature files.
    #[arg(long)]
    pub features: PathBuf,
    /// Prediction JSONL (one summary per video).
    #[arg(long)]
    pub pred: PathBuf,
    /// Externally computed pair scores JSONL (e.g. neural metrics).
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new(
        "eval",
        serde_json::json!({
            "dataset": args.dataset.display().to_string(),
            "features": args.features.display().to_string(),
            "pred": args.pred.display().to_string(),
            "external": args.external.as_ref().map(|p| p.display().to_string()),
        }),
    );
    manifest.input_file(&args.dataset)?;
    manifest.input_file(&args.pred)?;
    manifest.input_dir(&args.features)?;

    let dataset = load_dataset(&args.dataset)?;
    for w in &dataset.warnings {
        eprintln!("warning: {w}");
    }
    let by_id: HashMap<&str, &VideoRecord> =
        dataset.records.iter().map(|r| (r.video_id.as_str(), r)).collect();

    let preds = load_predictions(&args.pred)?;
    if preds.is_empty() {
        return Err(Error::validation(format!(
            "{}: no predictions to evaluate",
            args.pred.display()
        )));
    }

    let external: ExternalScores = match &args.external {
        Some(path) => {
            manifest.input_file(path)?;
            load_external_scores(path)?
        }
        None => ExternalScores::new(),
    };

    let store = FeatureStore::open(&args.features)?;
    let reports = par_map_ordered(&preds, |pred| {
        let video = by_id.get(pred.video_id.as_str()).ok_or_else(|| {
            Error::validation(format!("prediction references unknown video {:?}", pred.video_id))
        })?;
        let fm = store.load(&pred.video_id)?;
        evaluate_summary(pred, video, &fm, external.get(&pred.video_id))
    })?;

    let corpus = aggregate(&reports)?;

    ensure_out_dir(&args.out)?;
    io::write_jsonl(&args.out.join("eval.jsonl"), &reports)?;
    io::write_json_pretty(&args.out.join("eval_summary.json"), &corpus)?;
    manifest.write(&args.out)?;

    println!(
        "eval: {} videos, akm_ex {:.6}, akm_cos {:.6}, aligned_akm_ex {:.6}, meteor {:.6}",
        corpus.num_videos,
        corpus.mean_akm_ex,
        corpus.mean_akm_cos,
        corpus.mean_aligned_akm_ex,
        corpus.mean_meteor
    );
    Ok(())
}
