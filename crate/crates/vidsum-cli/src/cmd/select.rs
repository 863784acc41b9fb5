//! `vidsum select`: exact DP selection of N candidates per video under the
//! hard (non-overlapping) or soft (overlap-penalized) objective, after the
//! segment-length prefilter.

use std::collections::HashMap;
use std::path::PathBuf;

use serde::Serialize;
use vidsum_core::model::{
    load_candidates, load_dataset, save_predictions, PredPair, PredictedSummary, VideoRecord,
};
use vidsum_core::selector::{prefilter, select_n_dp, SelectMode, SelectorConfig};
use vidsum_core::{io, Error, Result};

use crate::cmd::{ensure_out_dir, par_map_ordered};
use crate::manifest::ManifestBuilder;

#[derive(Debug, clap::Args)]
pub struct SelectArgs {
    /// Candidate JSONL (segments required).
    #[arg(long)]
    pub candidates: PathBuf,
    /// Dataset JSON (provides per-video durations for the length prefilter).
    #[arg(long)]
    pub dataset: PathBuf,
    /// Number of candidates to choose per video.
    #[arg(long)]
    pub n: usize,
    /// Non-overlap requirement.
    #[arg(long, value_enum, default_value_t = Mode::Hard)]
    pub mode: Mode,
    /// Soft mode: score penalty per second of overlap between chosen
    /// neighbors.
    #[arg(long, default_value_t = 1.0)]
    pub overlap_penalty: f64,
    /// Drop segments longer than this fraction of the video up front.
    #[arg(long, default_value_t = 0.75)]
    pub max_segment_fraction: f64,
    /// Weight of the segment score in the objective.
    #[arg(long, default_value_t = 1.0)]
    pub segment_weight: f64,
    /// Weight of the caption score in the objective.
    #[arg(long, default_value_t = 1.0)]
    pub caption_weight: f64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Mode {
    Hard,
    Soft,
}

/// One `selection.jsonl` row.
#[derive(Debug, Serialize)]
struct SelectionRow {
    video_id: String,
    /// Indices into the video's prefiltered candidate list, ascending.
    indices: Vec<usize>,
    objective: f64,
    mode_used: SelectMode,
    fell_back: bool,
}

pub fn run(args: &SelectArgs) -> Result<()> {
    let mut cfg = SelectorConfig::new(args.n);
    cfg.mode = match args.mode {
        Mode::Hard => SelectMode::Hard,
        Mode::Soft => SelectMode::Soft,
    };
    cfg.overlap_penalty_per_s = args.overlap_penalty;
    cfg.max_segment_fraction = args.max_segment_fraction;
    cfg.segment_weight = args.segment_weight;
    cfg.caption_weight = args.caption_weight;

    let mut manifest = ManifestBuilder::new(
        "select",
        serde_json::json!({
            "candidates": args.candidates.display().to_string(),
            "dataset": args.dataset.display().to_string(),
            "selector": cfg,
        }),
    );
    manifest.input_file(&args.candidates)?;
    manifest.input_file(&args.dataset)?;

    let dataset = load_dataset(&args.dataset)?;
    for w in &dataset.warnings {
        eprintln!("warning: {w}");
    }
    let by_id: HashMap<&str, &VideoRecord> =
        dataset.records.iter().map(|r| (r.video_id.as_str(), r)).collect();

    let candidates = load_candidates(&args.candidates)?;
    if candidates.is_empty() {
        return Err(Error::validation(format!(
            "{}: no candidates to select from",
            args.candidates.display()
        )));
    }
    let per_video: Vec<_> = candidates.into_iter().collect();

    let results = par_map_ordered(&per_video, |(video_id, cands)| {
        let video = by_id.get(video_id.as_str()).ok_or_else(|| {
            Error::validation(format!("candidates reference unknown video {video_id:?}"))
        })?;
        let kept = prefilter(cands, video.duration_s, &cfg)?;
        let selection = select_n_dp(&kept, &cfg)?;
        let mut pairs: Vec<PredPair> = selection
            .chosen
            .iter()
            .map(|c| PredPair { frame: c.keyframe, caption: c.caption.clone() })
            .collect();
        pairs.sort_by_key(|p| p.frame);
        let pred = PredictedSummary { video_id: video_id.clone(), pairs };
        // Distinct chronological keyframes are part of the prediction
        // contract; duplicate picks (possible in soft mode) are an error.
        pred.validate()?;
        let row = SelectionRow {
            video_id: video_id.clone(),
            indices: selection.indices,
            objective: selection.objective,
            mode_used: selection.mode_used,
            fell_back: selection.fell_back,
        };
        Ok((row, pred))
    })?;

    let (rows, preds): (Vec<SelectionRow>, Vec<PredictedSummary>) = results.into_iter().unzip();
    let mean_objective = rows.iter().map(|r| r.objective).sum::<f64>() / rows.len() as f64;
    let fallbacks = rows.iter().filter(|r| r.fell_back).count();

    ensure_out_dir(&args.out)?;
    save_predictions(&args.out.join("predictions.jsonl"), &preds)?;
    io::write_jsonl(&args.out.join("selection.jsonl"), &rows)?;
    manifest.write(&args.out)?;

    println!(
        "select: {} videos, mean objective {:.6}, {} soft fallback(s)",
        rows.len(),
        mean_objective,
        fallbacks
    );
    Ok(())
}
