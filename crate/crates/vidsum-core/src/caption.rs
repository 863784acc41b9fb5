//! Caption evaluation protocol.
//!
//! For an N-pair predicted summary against a video with M >= N reference
//! slots:
//!
//! 1. the cosine AKM alignment selects which N reference slots the
//!    prediction is judged against (and yields `akm_cos`);
//! 2. `akm_ex` is the standalone exact-matcher AKM (its own optimal
//!    alignment), while `aligned_akm_ex` re-scores the exact matcher over
//!    the cosine alignment — so `aligned_akm_ex <= akm_ex` always;
//! 3. predicted captions are METEOR-scored against the captions of their
//!    cosine-aligned slots and averaged;
//! 4. externally computed pair scores (e.g. BLEURT) are averaged per video
//!    and merged in; videos without a metric omit it rather than scoring 0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::akm;
use crate::error::{Error, Result};
use crate::meteor;
use crate::model::{FeatureMatrix, PredictedSummary, ReferenceSlot, VideoRecord};

/// Per-video evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub video_id: String,
    /// Number of predicted pairs.
    pub n: usize,
    /// Standalone exact-matcher AKM (its own optimal alignment).
    pub akm_ex: f64,
    /// Cosine-matcher AKM; its alignment also selects the references.
    pub akm_cos: f64,
    /// Exact matcher evaluated over the cosine alignment.
    pub aligned_akm_ex: f64,
    /// Mean METEOR of predicted captions against their aligned references.
    pub meteor: f64,
    /// Externally computed metrics averaged per video (omitted when absent).
    pub external: BTreeMap<String, f64>,
    /// Slot index each predicted pair was aligned to (cosine alignment).
    pub assign: Vec<usize>,
}

/// Corpus-level aggregate of per-video reports (unweighted means).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub num_videos: usize,
    pub mean_akm_ex: f64,
    pub mean_akm_cos: f64,
    pub mean_aligned_akm_ex: f64,
    pub mean_meteor: f64,
    /// metric -> (mean over videos carrying it, video count).
    pub external: BTreeMap<String, ExternalAggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalAggregate {
    pub mean: f64,
    pub num_videos: usize,
}

/// Select which reference slots a prediction is evaluated against: the
/// cosine AKM alignment. Returns the alignment (slot indices + `akm_cos`).
pub fn select_references(
    pred: &PredictedSummary,
    video: &VideoRecord,
    fm: &FeatureMatrix,
) -> Result<akm::Alignment> {
    pred.validate()?;
    akm::akm_cos(&pred.frames(), &video.references, fm)
}

/// External scores for one video: `metric -> pair_index -> value`.
pub type VideoExternalScores = BTreeMap<String, BTreeMap<usize, f64>>;

/// Evaluate one predicted summary against its video.
pub fn evaluate_summary(
    pred: &PredictedSummary,
    video: &VideoRecord,
    fm: &FeatureMatrix,
    external: Option<&VideoExternalScores>,
) -> Result<EvalReport> {
    pred.validate()?;
    let frames = pred.frames();
    let n = frames.len();
    let refs: &[ReferenceSlot] = &video.references;

    let exact = akm::akm_ex(&frames, refs)?;
    let cosine = akm::akm_cos(&frames, refs, fm)?;

    let mut aligned_sum = 0.0;
    let mut meteor_sum = 0.0;
    for (i, &slot_idx) in cosine.assign.iter().enumerate() {
        let slot = &refs[slot_idx];
        aligned_sum += akm::match_exact(frames[i], slot);
        meteor_sum += meteor::meteor_exact(&pred.pairs[i].caption, &slot.caption).score;
    }

    let mut merged = BTreeMap::new();
    if let Some(per_metric) = external {
        for (metric, by_pair) in per_metric {
            if by_pair.is_empty() {
                continue;
            }
            let mut sum = 0.0;
            for (&pair_index, &value) in by_pair {
                if pair_index >= n {
                    return Err(Error::validation(format!(
                        "external {metric} score for video {}: pair_index {pair_index} out of range (n = {n})",
                        video.video_id
                    )));
                }
                sum += value;
            }
            merged.insert(metric.clone(), sum / by_pair.len() as f64);
        }
    }

    Ok(EvalReport {
        video_id: video.video_id.clone(),
        n,
        akm_ex: exact.score,
        akm_cos: cosine.score,
        aligned_akm_ex: aligned_sum / n as f64,
        meteor: meteor_sum / n as f64,
        external: merged,
        assign: cosine.assign,
    })
}

/// Aggregate per-video reports into a corpus report (unweighted means;
/// external metrics average over the videos that carry them).
pub fn aggregate(reports: &[EvalReport]) -> Result<CorpusReport> {
    if reports.is_empty() {
        return Err(Error::validation("cannot aggregate an empty report list"));
    }
    let n = reports.len() as f64;
    let mut ext_sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in reports {
        for (metric, value) in &r.external {
            let entry = ext_sums.entry(metric.clone()).or_insert((0.0, 0));
            entry.0 += value;
            entry.1 += 1;
        }
    }
    Ok(CorpusReport {
        num_videos: reports.len(),
        mean_akm_ex: reports.iter().map(|r| r.akm_ex).sum::<f64>() / n,
        mean_akm_cos: reports.iter().map(|r| r.akm_cos).sum::<f64>() / n,
        mean_aligned_akm_ex: reports.iter().map(|r| r.aligned_akm_ex).sum::<f64>() / n,
        mean_meteor: reports.iter().map(|r| r.meteor).sum::<f64>() / n,
        external: ext_sums
            .into_iter()
            .map(|(metric, (sum, count))| {
                (metric, ExternalAggregate { mean: sum / count as f64, num_videos: count })
            })
            .collect(),
    })
}
