//! `vidsum akm`: score predictions against reference annotations with
//! aligned keyframe matching, under the exact or cosine matcher.

use std::collections::HashMap;
use std::path::PathBuf;

use serde::Serialize;
use vidsum_core::model::{load_dataset, load_predictions, FeatureStore, VideoRecord};
use vidsum_core::{akm, io, Error, Result};

use crate::cmd::{ensure_out_dir, par_map_ordered};
use crate::manifest::ManifestBuilder;

#[derive(Debug, clap::Args)]
pub struct AkmArgs {
    /// Dataset JSON with reference annotations.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory of VSFT feature files (required with --matcher cos).
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Prediction JSONL (one summary per video).
    #[arg(long)]
    pub pred: PathBuf,
    /// Matching function for score-matrix cells.
    #[arg(long, value_enum, default_value_t = Matcher::Cos)]
    pub matcher: Matcher,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Matcher {
    /// Binary keyframe-identity matching.
    Exact,
    /// Mean-centered cosine matching over feature vectors.
    Cos,
}

impl Matcher {
    fn name(self) -> &'static str {
        match self {
            Matcher::Exact => "exact",
            Matcher::Cos => "cos",
        }
    }
}

/// One `akm.jsonl` row.
#[derive(Debug, Serialize)]
struct AkmRow {
    video_id: String,
    akm: f64,
    assign: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct AkmSummary {
    matcher: String,
    num_videos: usize,
    mean_akm: f64,
}

pub fn run(args: &AkmArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new(
        "akm",
        serde_json::json!({
            "dataset": args.dataset.display().to_string(),
            "features": args.features.as_ref().map(|p| p.display().to_string()),
            "pred": args.pred.display().to_string(),
            "matcher": args.matcher.name(),
        }),
    );
    manifest.input_file(&args.dataset)?;
    manifest.input_file(&args.pred)?;

    let dataset = load_dataset(&args.dataset)?;
    for w in &dataset.warnings {
        eprintln!("warning: {w}");
    }
    let by_id: HashMap<&str, &VideoRecord> =
        dataset.records.iter().map(|r| (r.video_id.as_str(), r)).collect();

    let preds = load_predictions(&args.pred)?;
    if preds.is_empty() {
        return Err(Error::validation(format!("{}: no predictions to score", args.pred.display())));
    }

    let store = match (args.matcher, &args.features) {
        (Matcher::Cos, None) => {
            return Err(Error::validation("--features is required with --matcher cos"))
        }
        (Matcher::Cos, Some(dir)) => {
            manifest.input_dir(dir)?;
            Some(FeatureStore::open(dir)?)
        }
        (Matcher::Exact, _) => None,
    };

    let rows = par_map_ordered(&preds, |pred| {
        let video = by_id.get(pred.video_id.as_str()).ok_or_else(|| {
            Error::validation(format!("prediction references unknown video {:?}", pred.video_id))
        })?;
        let frames = pred.frames();
        let alignment = match &store {
            None => akm::akm_ex(&frames, &video.references)?,
            Some(store) => {
                let fm = store.load(&pred.video_id)?;
                akm::akm_cos(&frames, &video.references, &fm)?
            }
        };
        Ok(AkmRow { video_id: pred.video_id.clone(), akm: alignment.score, assign: alignment.assign })
    })?;

    let mean_akm = rows.iter().map(|r| r.akm).sum::<f64>() / rows.len() as f64;
    let summary =
        AkmSummary { matcher: args.matcher.name().to_string(), num_videos: rows.len(), mean_akm };

    ensure_out_dir(&args.out)?;
    io::write_jsonl(&args.out.join("akm.jsonl"), &rows)?;
    io::write_json_pretty(&args.out.join("akm_summary.json"), &summary)?;
    manifest.write(&args.out)?;

    println!("akm ({}): {} videos, mean {:.6}", summary.matcher, summary.num_videos, mean_akm);
    Ok(())
}
