//! Outlier filtering of reference-slot annotations.
//!
//! Each reference slot carries the keyframes picked by several annotators.
//! For one slot, every keyframe's feature vector is compared to the slot
//! centroid (the per-dimension mean of the raw vectors); a keyframe whose
//! Euclidean distance exceeds `mean(d) + k_sigma * std(d)` is removed. The
//! population standard deviation is used. `min_keep` guards against
//! over-pruning: if fewer keyframes survive, the removed ones closest to
//! the centroid are restored (ties by original position).
//!
//! For `k_sigma >= 1` the per-slot feature variance never increases: a
//! removed point's squared distance exceeds `(mean + std)^2 >= mean^2 +
//! std^2`, the mean squared distance, so dropping it lowers that mean, and
//! recomputing the centroid (which minimizes it) lowers it further.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sort_slots_chronologically, FeatureMatrix, FrameIndex, VideoRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Outlier threshold in standard deviations above the mean distance.
    pub k_sigma: f64,
    /// Minimum annotations to keep per slot.
    pub min_keep: usize,
}

impl Default for FilterConfig {
    fn default() -> FilterConfig {
        FilterConfig { k_sigma: 1.0, min_keep: 1 }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_sigma.is_finite() && self.k_sigma >= 0.0) {
            return Err(Error::validation("filter: k_sigma must be finite and non-negative"));
        }
        if self.min_keep == 0 {
            return Err(Error::validation("filter: min_keep must be at least 1"));
        }
        Ok(())
    }
}

/// Result of filtering one slot, in terms of positions into the slot's
/// keyframe list.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotFilterOutcome {
    /// Kept positions, ascending.
    pub kept: Vec<usize>,
    /// Removed positions, ascending.
    pub removed: Vec<usize>,
    /// Mean squared feature distance to the centroid, per dimension, over
    /// all annotations.
    pub variance_before: f64,
    /// Same measure over the kept annotations, centroid recomputed.
    pub variance_after: f64,
}

/// Per-dimension mean of the keyframes' raw feature rows.
pub fn slot_centroid(features: &FeatureMatrix, keyframes: &[FrameIndex]) -> Result<Vec<f64>> {
    if keyframes.is_empty() {
        return Err(Error::validation("cannot take the centroid of an empty slot"));
    }
    let mut centroid = vec![0.0f64; features.dim() as usize];
    for kf in keyframes {
        let row = features.row(*kf)?;
        for (acc, &v) in centroid.iter_mut().zip(row) {
            *acc += f64::from(v);
        }
    }
    let n = keyframes.len() as f64;
    for acc in &mut centroid {
        *acc /= n;
    }
    Ok(centroid)
}

fn squared_distance(row: &[f32], centroid: &[f64]) -> f64 {
    row.iter()
        .zip(centroid)
        .map(|(&v, &c)| {
            let d = f64::from(v) - c;
            d * d
        })
        .sum()
}

/// Mean per-dimension squared distance of the given keyframes to their own
/// centroid.
fn variance_of(features: &FeatureMatrix, keyframes: &[FrameIndex]) -> Result<f64> {
    let centroid = slot_centroid(features, keyframes)?;
    let mut sum = 0.0;
    for kf in keyframes {
        sum += squared_distance(features.row(*kf)?, &centroid);
    }
    Ok(sum / keyframes.len() as f64 / f64::from(features.dim()))
}

/// Filter one slot's keyframes against the slot centroid.
pub fn filter_slot(
    features: &FeatureMatrix,
    keyframes: &[FrameIndex],
    cfg: &FilterConfig,
) -> Result<SlotFilterOutcome> {
    cfg.validate()?;
    let centroid = slot_centroid(features, keyframes)?;
    let distances: Vec<f64> = keyframes
        .iter()
        .map(|kf| Ok(squared_distance(features.row(*kf)?, &centroid).sqrt()))
        .collect::<Result<_>>()?;
    let n = distances.len() as f64;
    let mean = distances.iter().sum::<f64>() / n;
    let std = (distances.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n).sqrt();
    let threshold = mean + cfg.k_sigma * std;

    let (mut kept, mut removed): (Vec<usize>, Vec<usize>) =
        (0..keyframes.len()).partition(|&i| distances[i] <= threshold);
    if kept.len() < cfg.min_keep {
        // Restore the removed annotations closest to the centroid.
        removed.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
        while kept.len() < cfg.min_keep {
            match removed.first() {
                Some(&i) => {
                    kept.push(i);
                    removed.remove(0);
                }
                None => break,
            }
        }
        kept.sort_unstable();
        removed.sort_unstable();
    }

    let kept_frames: Vec<FrameIndex> = kept.iter().map(|&i| keyframes[i]).collect();
    Ok(SlotFilterOutcome {
        variance_before: variance_of(features, keyframes)?,
        variance_after: variance_of(features, &kept_frames)?,
        kept,
        removed,
    })
}

/// Per-slot filter summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotReport {
    pub slot_index: usize,
    pub caption: String,
    pub annotations_before: usize,
    pub annotations_removed: usize,
    pub variance_before: f64,
    pub variance_after: f64,
}

/// Per-video filter summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoFilterReport {
    pub video_id: String,
    pub slots: Vec<SlotReport>,
    pub annotations_before: usize,
    pub annotations_removed: usize,
}

/// Dataset-level filter summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub videos: Vec<VideoFilterReport>,
    pub annotations_before: usize,
    pub annotations_removed: usize,
    /// Unweighted mean of the per-slot variances.
    pub mean_variance_before: f64,
    pub mean_variance_after: f64,
}

impl FilterReport {
    pub fn from_videos(videos: Vec<VideoFilterReport>) -> FilterReport {
        let annotations_before = videos.iter().map(|v| v.annotations_before).sum();
        let annotations_removed = videos.iter().map(|v| v.annotations_removed).sum();
        let slots: Vec<&SlotReport> = videos.iter().flat_map(|v| &v.slots).collect();
        let count = slots.len().max(1) as f64;
        let mean_variance_before = slots.iter().map(|s| s.variance_before).sum::<f64>() / count;
        let mean_variance_after = slots.iter().map(|s| s.variance_after).sum::<f64>() / count;
        FilterReport {
            videos,
            annotations_before,
            annotations_removed,
            mean_variance_before,
            mean_variance_after,
        }
    }
}

/// Filter every slot of one video. Returns the filtered record (slots
/// re-sorted chronologically, since removing keyframes can change a slot's
/// earliest keyframe) and a report.
pub fn filter_video(
    record: &VideoRecord,
    features: &FeatureMatrix,
    cfg: &FilterConfig,
) -> Result<(VideoRecord, VideoFilterReport)> {
    if features.num_frames() != record.num_frames {
        return Err(Error::validation(format!(
            "video {}: feature matrix has {} frames but the video declares {}",
            record.video_id,
            features.num_frames(),
            record.num_frames
        )));
    }
    let mut filtered = record.clone();
    let mut slots = Vec::with_capacity(record.references.len());
    let mut annotations_before = 0;
    let mut annotations_removed = 0;
    for (slot_index, slot) in record.references.iter().enumerate() {
        let outcome = filter_slot(features, &slot.keyframes, cfg)?;
        annotations_before += slot.keyframes.len();
        annotations_removed += outcome.removed.len();
        filtered.references[slot_index].keyframes =
            outcome.kept.iter().map(|&i| slot.keyframes[i]).collect();
        slots.push(SlotReport {
            slot_index,
            caption: slot.caption.clone(),
            annotations_before: slot.keyframes.len(),
            annotations_removed: outcome.removed.len(),
            variance_before: outcome.variance_before,
            variance_after: outcome.variance_after,
        });
    }
    sort_slots_chronologically(&mut filtered.references);
    let report = VideoFilterReport {
        video_id: record.video_id.clone(),
        slots,
        annotations_before,
        annotations_removed,
    };
    Ok((filtered, report))
}
