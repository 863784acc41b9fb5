//! Core data model: videos, reference annotations, features, predictions,
//! and candidates, together with their on-disk formats.
//!
//! Frames live on a fixed 0.5-second grid: a [`FrameIndex`] `i` denotes the
//! frame sampled at `i * 0.5` seconds, and annotation timestamps are snapped
//! to the grid with `round(t / 0.5)`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Spacing of the frame grid in seconds.
pub const FRAME_STEP_S: f64 = 0.5;

/// Index of a frame on the 0.5-second grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrameIndex(pub u32);

impl FrameIndex {
    /// Snap a timestamp in seconds onto the grid (`round(t / 0.5)`).
    pub fn from_seconds(t: f64) -> FrameIndex {
        FrameIndex((t / FRAME_STEP_S).round() as u32)
    }

    /// The timestamp of this frame in seconds.
    pub fn seconds(self) -> f64 {
        f64::from(self.0) * FRAME_STEP_S
    }
}

impl std::fmt::Display for FrameIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One reference annotation: a caption plus the set of frames annotators
/// accepted as keyframes for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSlot {
    pub caption: String,
    /// Non-empty, sorted, deduplicated.
    pub keyframes: Vec<FrameIndex>,
}

impl ReferenceSlot {
    /// Build a slot, sorting and deduplicating the keyframe set.
    pub fn new(caption: impl Into<String>, keyframes: Vec<FrameIndex>) -> Result<ReferenceSlot> {
        let mut slot = ReferenceSlot { caption: caption.into(), keyframes };
        slot.canonicalize()?;
        Ok(slot)
    }

    /// Smallest keyframe index; defines the slot's chronological position.
    pub fn min_keyframe(&self) -> FrameIndex {
        self.keyframes[0]
    }

    fn canonicalize(&mut self) -> Result<()> {
        if self.keyframes.is_empty() {
            return Err(Error::validation("reference slot has an empty keyframe set"));
        }
        self.keyframes.sort();
        self.keyframes.dedup();
        Ok(())
    }
}

/// A video with its duration, frame count, and reference annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub duration_s: f64,
    /// Number of frames on the 0.5 s grid (within one frame of
    /// `floor(duration_s / 0.5)`).
    pub num_frames: u32,
    /// Sorted chronologically: by smallest keyframe index, ties by caption.
    pub references: Vec<ReferenceSlot>,
}

impl VideoRecord {
    /// Validate and canonicalize this record in place.
    ///
    /// Returns warnings for repairs that are performed silently (slot
    /// re-ordering); hard violations (out-of-range keyframes, implausible
    /// frame counts, empty slot lists) are errors naming the video.
    pub fn canonicalize(&mut self) -> Result<Vec<String>> {
        let id = self.video_id.clone();
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::validation(format!("video {id}: duration_s must be positive and finite")));
        }
        if self.num_frames == 0 {
            return Err(Error::validation(format!("video {id}: num_frames must be at least 1")));
        }
        let expected = (self.duration_s / FRAME_STEP_S).floor() as i64;
        if (i64::from(self.num_frames) - expected).abs() > 1 {
            return Err(Error::validation(format!(
                "video {id}: num_frames = {} is not within one frame of duration_s / {FRAME_STEP_S} = {expected}",
                self.num_frames
            )));
        }
        if self.references.is_empty() {
            return Err(Error::validation(format!("video {id}: no reference slots")));
        }
        for slot in &mut self.references {
            slot.canonicalize()
                .map_err(|e| Error::validation(format!("video {id}: {e}")))?;
            if let Some(bad) = slot.keyframes.iter().find(|k| k.0 >= self.num_frames) {
                return Err(Error::validation(format!(
                    "video {id}: keyframe index {bad} out of range (num_frames = {})",
                    self.num_frames
                )));
            }
        }
        let mut warnings = Vec::new();
        let sorted = self
            .references
            .windows(2)
            .all(|w| (w[0].min_keyframe(), &w[0].caption) <= (w[1].min_keyframe(), &w[1].caption));
        if !sorted {
            self.references
                .sort_by(|a, b| (a.min_keyframe(), &a.caption).cmp(&(b.min_keyframe(), &b.caption)));
            warnings.push(format!("video {id}: reference slots were not in chronological order; re-sorted"));
        }
        Ok(warnings)
    }
}

/// Result of loading a dataset file: canonical records plus any repair
/// warnings emitted along the way.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub records: Vec<VideoRecord>,
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    videos: Vec<VideoRecord>,
}

/// Load and validate a dataset JSON file (`{"videos": [...]}`).
pub fn load_dataset(path: &Path) -> Result<LoadedDataset> {
    let text = io::read_to_string(path)?;
    let file: DatasetFile = serde_json::from_str(&text)
        .map_err(|e| Error::validation(format!("{}: malformed dataset JSON: {e}", path.display())))?;
    let mut records = file.videos;
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();
    for record in &mut records {
        if !seen.insert(record.video_id.clone()) {
            return Err(Error::validation(format!(
                "{}: duplicate video_id {:?}",
                path.display(),
                record.video_id
            )));
        }
        warnings.extend(record.canonicalize()?);
    }
    Ok(LoadedDataset { records, warnings })
}

/// Write a dataset JSON file atomically.
pub fn save_dataset(path: &Path, records: &[VideoRecord]) -> Result<()> {
    io::write_json_pretty(path, &DatasetFile { videos: records.to_vec() })
}

/// Per-video frame features stored as `num_frames x dim` `f32` rows.
///
/// The per-dimension arithmetic mean over all rows is computed once, in
/// double precision, at construction; [`FeatureMatrix::mean_center`] uses it
/// to produce mean-centered rows for cosine scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub video_id: String,
    num_frames: u32,
    dim: u32,
    data: Vec<f32>,
    mean: Vec<f64>,
}

impl FeatureMatrix {
    /// Build a matrix from row-major data; validates shape and finiteness.
    pub fn new(video_id: impl Into<String>, dim: u32, data: Vec<f32>) -> Result<FeatureMatrix> {
        let video_id = video_id.into();
        if dim == 0 {
            return Err(Error::validation(format!("features {video_id}: dim must be at least 1")));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim as usize) {
            return Err(Error::validation(format!(
                "features {video_id}: data length {} is not a positive multiple of dim {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!("features {video_id}: NaN or infinite value detected")));
        }
        let num_frames = (data.len() / dim as usize) as u32;
        let mut mean = vec![0.0f64; dim as usize];
        for row in data.chunks_exact(dim as usize) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += f64::from(*v);
            }
        }
        for m in &mut mean {
            *m /= f64::from(num_frames);
        }
        Ok(FeatureMatrix { video_id, num_frames, dim, data, mean })
    }

    pub fn num_frames(&self) -> u32 {
        self.num_frames
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// The stored `f32` row for a frame.
    pub fn row(&self, frame: FrameIndex) -> Result<&[f32]> {
        let i = frame.0 as usize;
        if frame.0 >= self.num_frames {
            return Err(Error::validation(format!(
                "features {}: frame index {frame} out of range (num_frames = {})",
                self.video_id, self.num_frames
            )));
        }
        let d = self.dim as usize;
        Ok(&self.data[i * d..(i + 1) * d])
    }

    /// Per-dimension arithmetic mean over all rows (double precision).
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// The frame's row minus the video mean, in double precision.
    pub fn mean_center(&self, frame: FrameIndex) -> Result<Vec<f64>> {
        let row = self.row(frame)?;
        Ok(row.iter().zip(&self.mean).map(|(v, m)| f64::from(*v) - m).collect())
    }
}

const VSFT_MAGIC: &[u8; 4] = b"VSFT";
const VSFT_VERSION: u32 = 1;

/// Write a feature matrix in the VSFT binary format.
///
/// Layout: magic `"VSFT"`, `u32` LE version (1), `u32` LE num_frames,
/// `u32` LE dim, then `num_frames * dim` little-endian `f32` values in
/// row-major order.
pub fn save_features(path: &Path, fm: &FeatureMatrix) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + fm.data.len() * 4);
    bytes.extend_from_slice(VSFT_MAGIC);
    bytes.extend_from_slice(&VSFT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&fm.num_frames.to_le_bytes());
    bytes.extend_from_slice(&fm.dim.to_le_bytes());
    for v in &fm.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    io::write_atomic(path, &bytes)
}

/// Read a VSFT feature file; the `video_id` is taken from the file stem.
pub fn load_features(path: &Path) -> Result<FeatureMatrix> {
    let video_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let bytes = io::read_bytes(path)?;
    let fail = |msg: &str| Error::validation(format!("{}: {msg}", path.display()));
    if bytes.len() < 16 {
        return Err(fail("truncated VSFT header"));
    }
    if &bytes[0..4] != VSFT_MAGIC {
        return Err(fail("bad VSFT magic"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != VSFT_VERSION {
        return Err(fail(&format!("unsupported VSFT version {version}")));
    }
    let num_frames = word(8);
    let dim = word(12);
    let expected = 16 + (num_frames as usize) * (dim as usize) * 4;
    if bytes.len() < expected {
        return Err(fail("truncated VSFT payload"));
    }
    if bytes.len() > expected {
        return Err(fail("trailing bytes after VSFT payload"));
    }
    let data: Vec<f32> = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(video_id, dim, data)
        .map_err(|e| Error::validation(format!("{}: {e}", path.display())))
}

/// Resolves per-video feature files inside a directory.
///
/// If `<dir>/features.json` exists it must map `video_id` to a relative file
/// path; otherwise `<dir>/<video_id>.vsft` is used.
#[derive(Debug, Clone)]
pub struct FeatureStore {
    dir: PathBuf,
    index: Option<BTreeMap<String, String>>,
}

impl FeatureStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<FeatureStore> {
        let dir = dir.into();
        let sidecar = dir.join("features.json");
        let index = if sidecar.is_file() {
            let text = io::read_to_string(&sidecar)?;
            Some(serde_json::from_str(&text).map_err(|e| {
                Error::validation(format!("{}: malformed feature index: {e}", sidecar.display()))
            })?)
        } else {
            None
        };
        Ok(FeatureStore { dir, index })
    }

    /// Path that `video_id` resolves to (the file may or may not exist).
    pub fn path_for(&self, video_id: &str) -> PathBuf {
        match &self.index {
            Some(map) => match map.get(video_id) {
                Some(rel) => self.dir.join(rel),
                None => self.dir.join(format!("{video_id}.vsft")),
            },
            None => self.dir.join(format!("{video_id}.vsft")),
        }
    }

    /// Load the features for a video; the returned matrix carries `video_id`.
    pub fn load(&self, video_id: &str) -> Result<FeatureMatrix> {
        let mut fm = load_features(&self.path_for(video_id))?;
        fm.video_id = video_id.to_string();
        Ok(fm)
    }
}

/// One predicted (frame, caption) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredPair {
    pub frame: FrameIndex,
    pub caption: String,
}

/// A predicted summary: N chronologically ordered (frame, caption) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedSummary {
    pub video_id: String,
    pub pairs: Vec<PredPair>,
}

impl PredictedSummary {
    /// Frames of the pairs, in order.
    pub fn frames(&self) -> Vec<FrameIndex> {
        self.pairs.iter().map(|p| p.frame).collect()
    }

    /// Check the strictly-increasing-frames invariant and non-emptiness.
    pub fn validate(&self) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::validation(format!(
                "prediction for video {}: must contain at least one pair",
                self.video_id
            )));
        }
        if self.pairs.windows(2).any(|w| w[0].frame >= w[1].frame) {
            return Err(Error::validation(format!(
                "prediction for video {}: frame indices must be strictly increasing",
                self.video_id
            )));
        }
        Ok(())
    }
}

/// Load predictions (JSONL, one summary per line) and validate each row.
pub fn load_predictions(path: &Path) -> Result<Vec<PredictedSummary>> {
    let rows: Vec<PredictedSummary> = io::read_jsonl(path)?;
    let mut seen = HashSet::new();
    for row in &rows {
        row.validate()?;
        if !seen.insert(row.video_id.clone()) {
            return Err(Error::validation(format!(
                "{}: duplicate prediction for video {:?}",
                path.display(),
                row.video_id
            )));
        }
    }
    Ok(rows)
}

/// Write predictions as JSONL atomically.
pub fn save_predictions(path: &Path, preds: &[PredictedSummary]) -> Result<()> {
    io::write_jsonl(path, preds)
}

/// A scored summary candidate: a segment, its representative keyframe, and a
/// caption, each with a score.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub segment_start_s: f64,
    pub segment_end_s: f64,
    pub segment_score: f64,
    pub keyframe: FrameIndex,
    pub caption: String,
    pub caption_score: f64,
}

impl Candidate {
    /// Segment length in seconds.
    pub fn len_s(&self) -> f64 {
        self.segment_end_s - self.segment_start_s
    }

    fn validate(&self, video_id: &str) -> Result<()> {
        let ok = self.segment_start_s.is_finite()
            && self.segment_end_s.is_finite()
            && self.segment_score.is_finite()
            && self.caption_score.is_finite();
        if !ok {
            return Err(Error::validation(format!(
                "candidate for video {video_id}: non-finite segment bounds or scores"
            )));
        }
        if self.segment_start_s >= self.segment_end_s {
            return Err(Error::validation(format!(
                "candidate for video {video_id}: segment start {} must be before end {}",
                self.segment_start_s, self.segment_end_s
            )));
        }
        let t = self.keyframe.seconds();
        if t < self.segment_start_s || t >= self.segment_end_s {
            return Err(Error::validation(format!(
                "candidate for video {video_id}: keyframe {} at {t}s lies outside segment [{}, {})",
                self.keyframe, self.segment_start_s, self.segment_end_s
            )));
        }
        Ok(())
    }
}

/// Serde row for the candidate JSONL format. The segment fields are optional
/// so the same format can carry bare (frame, caption) candidates for the
/// beam-search command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateRow {
    pub video_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment_score: Option<f64>,
    pub keyframe: FrameIndex,
    pub caption: String,
    pub caption_score: f64,
}

/// Load full candidates (segments required), grouped per video in input
/// order. Videos appear in sorted id order.
pub fn load_candidates(path: &Path) -> Result<BTreeMap<String, Vec<Candidate>>> {
    let rows: Vec<CandidateRow> = io::read_jsonl(path)?;
    let mut by_video: BTreeMap<String, Vec<Candidate>> = BTreeMap::new();
    for row in rows {
        let (segment, segment_score) = match (row.segment, row.segment_score) {
            (Some(seg), Some(score)) => (seg, score),
            _ => {
                return Err(Error::validation(format!(
                    "{}: candidate for video {:?} is missing segment or segment_score",
                    path.display(),
                    row.video_id
                )))
            }
        };
        let cand = Candidate {
            segment_start_s: segment[0],
            segment_end_s: segment[1],
            segment_score,
            keyframe: row.keyframe,
            caption: row.caption,
            caption_score: row.caption_score,
        };
        cand.validate(&row.video_id)?;
        by_video.entry(row.video_id).or_default().push(cand);
    }
    Ok(by_video)
}

/// Load bare (frame, caption) candidates for beam search, grouped per video
/// in input order (segment fields, when present, are ignored).
pub fn load_candidate_pairs(path: &Path) -> Result<BTreeMap<String, Vec<(FrameIndex, String)>>> {
    let rows: Vec<CandidateRow> = io::read_jsonl(path)?;
    let mut by_video: BTreeMap<String, Vec<(FrameIndex, String)>> = BTreeMap::new();
    for row in rows {
        by_video.entry(row.video_id).or_default().push((row.keyframe, row.caption));
    }
    Ok(by_video)
}

/// One externally computed pair-level score (e.g. BLEURT).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExternalScoreRow {
    pub video_id: String,
    pub pair_index: usize,
    pub metric: String,
    pub value: f64,
}

/// Per-video external scores: `video_id -> metric -> pair_index -> value`.
pub type ExternalScores = BTreeMap<String, BTreeMap<String, BTreeMap<usize, f64>>>;

/// Load external pair-level scores from JSONL; duplicates are rejected.
pub fn load_external_scores(path: &Path) -> Result<ExternalScores> {
    let rows: Vec<ExternalScoreRow> = io::read_jsonl(path)?;
    let mut scores: ExternalScores = BTreeMap::new();
    for row in rows {
        if !row.value.is_finite() {
            return Err(Error::validation(format!(
                "{}: non-finite {} score for video {:?} pair {}",
                path.display(),
                row.metric,
                row.video_id,
                row.pair_index
            )));
        }
        let prev = scores
            .entry(row.video_id.clone())
            .or_default()
            .entry(row.metric.clone())
            .or_default()
            .insert(row.pair_index, row.value);
        if prev.is_some() {
            return Err(Error::validation(format!(
                "{}: duplicate {} score for video {:?} pair {}",
                path.display(),
                row.metric,
                row.video_id,
                row.pair_index
            )));
        }
    }
    Ok(scores)
}

/// Canonical chronological ordering for reference slots, exposed for callers
/// that assemble records by hand.
pub fn sort_slots_chronologically(slots: &mut [ReferenceSlot]) {
    slots.sort_by(|a, b| (a.min_keyframe(), &a.caption).cmp(&(b.min_keyframe(), &b.caption)));
}

/// The keyframe set of every slot, deduplicated across slots, sorted.
pub fn all_keyframes(record: &VideoRecord) -> Vec<FrameIndex> {
    let set: BTreeSet<FrameIndex> =
        record.references.iter().flat_map(|s| s.keyframes.iter().copied()).collect();
    set.into_iter().collect()
}
