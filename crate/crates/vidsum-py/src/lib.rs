//! Python bindings for the video summarization toolkit.
//!
//! Build with `cargo build -p vidsum-py --release`, then expose the produced
//! cdylib as `vidsum_py.so` (`.pyd` on Windows) on the Python path;
//! `python/smoke_test.py` automates that for local checks.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::collections::BTreeMap;

use vidsum_core::akm::{akm_align, akm_score_matrix, MatcherKind};
use vidsum_core::beam::{
    beam_select, minmax_normalize, BeamConfig, BeamInput, HashScorer, NormPool, Scorer,
    TableRow, TableScorer,
};
use vidsum_core::caption::evaluate_summary;
use vidsum_core::filter::{filter_slot, FilterConfig};
use vidsum_core::meteor::meteor_exact;
use vidsum_core::model::{
    Candidate, FeatureMatrix, FrameIndex, PredPair, PredictedSummary, ReferenceSlot, VideoRecord,
};
use vidsum_core::pseudo::{gen_instance, story_groups, PseudoConfig, SourceCollection, SourceMode, SourcePair};
use vidsum_core::rng::DetRng;
use vidsum_core::selector::{prefilter, select_n_dp, SelectMode, SelectorConfig};
use vidsum_core::stats::compute_stats;
use vidsum_core::{Error, ErrorKind};

fn to_py_err(e: Error) -> PyErr {
    match e.kind() {
        ErrorKind::Validation => PyValueError::new_err(e.to_string()),
        ErrorKind::Io => PyIOError::new_err(e.to_string()),
        ErrorKind::Infeasible => PyRuntimeError::new_err(e.to_string()),
    }
}

fn build_slots(references: Vec<(String, Vec<u32>)>) -> PyResult<Vec<ReferenceSlot>> {
    references
        .into_iter()
        .map(|(caption, keyframes)| {
            ReferenceSlot::new(caption, keyframes.into_iter().map(FrameIndex).collect())
                .map_err(to_py_err)
        })
        .collect()
}

fn build_features(rows: Vec<Vec<f32>>) -> PyResult<FeatureMatrix> {
    let dim = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|r| r.len() != dim) {
        return Err(PyValueError::new_err("feature rows must all have the same length"));
    }
    let flat: Vec<f32> = rows.into_iter().flatten().collect();
    FeatureMatrix::new("py", dim as u32, flat).map_err(to_py_err)
}

fn alignment_tuple(
    frames: &[FrameIndex],
    refs: &[ReferenceSlot],
    matcher: MatcherKind,
    fm: Option<&FeatureMatrix>,
) -> PyResult<(f64, Vec<usize>)> {
    let matrix = akm_score_matrix(frames, refs, matcher, fm).map_err(to_py_err)?;
    let alignment = akm_align(&matrix);
    Ok((alignment.score, alignment.assign))
}

/// Align predicted frames to reference slots with the exact matcher.
///
/// `references` is a list of `(caption, keyframes)` pairs in temporal order.
/// Returns `(score, assign)` where `assign[i]` is the slot index matched to
/// predicted frame `i` (strictly increasing).
#[pyfunction]
fn align_exact(
    pred_frames: Vec<u32>,
    references: Vec<(String, Vec<u32>)>,
) -> PyResult<(f64, Vec<usize>)> {
    let frames: Vec<FrameIndex> = pred_frames.into_iter().map(FrameIndex).collect();
    let refs = build_slots(references)?;
    alignment_tuple(&frames, &refs, MatcherKind::Exact, None)
}

/// Align predicted frames to reference slots with the cosine matcher.
///
/// `features` is the video's row-major frame-feature matrix (frame index is
/// the row index). Returns `(score, assign)` as `align_exact`.
#[pyfunction]
fn align_cos(
    pred_frames: Vec<u32>,
    references: Vec<(String, Vec<u32>)>,
    features: Vec<Vec<f32>>,
) -> PyResult<(f64, Vec<usize>)> {
    let frames: Vec<FrameIndex> = pred_frames.into_iter().map(FrameIndex).collect();
    let refs = build_slots(references)?;
    let fm = build_features(features)?;
    alignment_tuple(&frames, &refs, MatcherKind::Cosine, Some(&fm))
}

/// Exact-match caption score of a candidate against one reference.
///
/// Returns a dict with `score` in [0, 1] plus the intermediate tallies
/// (`matches`, `chunks`, `candidate_len`, `reference_len`).
#[pyfunction]
fn caption_score(py: Python<'_>, candidate: &str, reference: &str) -> PyResult<Py<PyAny>> {
    let m = meteor_exact(candidate, reference);
    let dict = PyDict::new(py);
    dict.set_item("score", m.score)?;
    dict.set_item("matches", m.matches)?;
    dict.set_item("chunks", m.chunks)?;
    dict.set_item("candidate_len", m.candidate_len)?;
    dict.set_item("reference_len", m.reference_len)?;
    Ok(dict.into_any().unbind())
}

/// Evaluate one predicted summary against its references.
///
/// `pairs` is the prediction as `(frame, caption)` tuples with strictly
/// increasing frames; `references` as in `align_exact`; `features` the
/// video's frame-feature matrix (required: the cosine alignment selects the
/// references each caption is scored against). Returns a dict with `akm_ex`,
/// `akm_cos`, `aligned_akm_ex`, `meteor`, and `assign`.
#[pyfunction]
fn evaluate(
    py: Python<'_>,
    pairs: Vec<(u32, String)>,
    references: Vec<(String, Vec<u32>)>,
    features: Vec<Vec<f32>>,
) -> PyResult<Py<PyAny>> {
    let fm = build_features(features)?;
    let num_frames = fm.num_frames();
    let video = VideoRecord {
        video_id: "py".to_string(),
        duration_s: f64::from(num_frames) * 0.5,
        num_frames,
        references: build_slots(references)?,
    };
    let pred = PredictedSummary {
        video_id: "py".to_string(),
        pairs: pairs
            .into_iter()
            .map(|(frame, caption)| PredPair { frame: FrameIndex(frame), caption })
            .collect(),
    };
    let report = evaluate_summary(&pred, &video, &fm, None).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("akm_ex", report.akm_ex)?;
    dict.set_item("akm_cos", report.akm_cos)?;
    dict.set_item("aligned_akm_ex", report.aligned_akm_ex)?;
    dict.set_item("meteor", report.meteor)?;
    dict.set_item("assign", report.assign)?;
    Ok(dict.into_any().unbind())
}

fn parse_select_mode(mode: &str) -> PyResult<SelectMode> {
    match mode {
        "hard" => Ok(SelectMode::Hard),
        "soft" => Ok(SelectMode::Soft),
        other => Err(PyValueError::new_err(format!(
            "mode must be \"hard\" or \"soft\", got {other:?}"
        ))),
    }
}

/// Select `n` summary candidates by dynamic programming.
///
/// Candidates are `(segment_start_s, segment_end_s, segment_score, keyframe,
/// caption, caption_score)` tuples. Overlong segments are dropped up front
/// (`max_segment_fraction` of `duration_s`). Returns a dict with `chosen`
/// (list of `(keyframe, caption)` in chronological order), `objective`,
/// `mode_used`, and `fell_back`.
#[pyfunction]
#[pyo3(signature = (candidates, n, duration_s, mode="hard", overlap_penalty_per_s=1.0,
                    max_segment_fraction=0.75, segment_weight=1.0, caption_weight=1.0))]
#[allow(clippy::too_many_arguments)]
fn select_pairs(
    py: Python<'_>,
    candidates: Vec<(f64, f64, f64, u32, String, f64)>,
    n: usize,
    duration_s: f64,
    mode: &str,
    overlap_penalty_per_s: f64,
    max_segment_fraction: f64,
    segment_weight: f64,
    caption_weight: f64,
) -> PyResult<Py<PyAny>> {
    let cands: Vec<Candidate> = candidates
        .into_iter()
        .map(
            |(segment_start_s, segment_end_s, segment_score, keyframe, caption, caption_score)| {
                Candidate {
                    segment_start_s,
                    segment_end_s,
                    segment_score,
                    keyframe: FrameIndex(keyframe),
                    caption,
                    caption_score,
                }
            },
        )
        .collect();
    let cfg = SelectorConfig {
        n,
        max_segment_fraction,
        mode: parse_select_mode(mode)?,
        overlap_penalty_per_s,
        segment_weight,
        caption_weight,
    };
    let kept = prefilter(&cands, duration_s, &cfg).map_err(to_py_err)?;
    let selection = select_n_dp(&kept, &cfg).map_err(to_py_err)?;
    let chosen: Vec<(u32, String)> = selection
        .chosen
        .iter()
        .map(|c| (c.keyframe.0, c.caption.clone()))
        .collect();
    let dict = PyDict::new(py);
    dict.set_item("chosen", chosen)?;
    dict.set_item("objective", selection.objective)?;
    dict.set_item(
        "mode_used",
        match selection.mode_used {
            SelectMode::Hard => "hard",
            SelectMode::Soft => "soft",
        },
    )?;
    dict.set_item("fell_back", selection.fell_back)?;
    Ok(dict.into_any().unbind())
}

/// Run chronological beam search over per-frame caption candidates.
///
/// `frames` is a list of `(frame, [caption, ...])` with strictly increasing
/// frames; `scorer` is `"hash:<seed>"` or a list of `(frame, caption_id,
/// frame_ll, caption_ll)` table rows. Returns a dict with `score`, `picks`
/// (list of `(frame, caption)`), `norm_sum_frame`, and `norm_sum_caption`.
#[pyfunction]
#[pyo3(signature = (frames, scorer, n, width=8, alpha=0.5, norm_pool="step_global"))]
fn beam_summarize(
    py: Python<'_>,
    frames: Vec<(u32, Vec<String>)>,
    scorer: Bound<'_, PyAny>,
    n: usize,
    width: usize,
    alpha: f64,
    norm_pool: &str,
) -> PyResult<Py<PyAny>> {
    let (frame_ids, captions): (Vec<u32>, Vec<Vec<String>>) = frames.into_iter().unzip();
    let input = BeamInput {
        video_id: "py".to_string(),
        frames: frame_ids.into_iter().map(FrameIndex).collect(),
        captions,
    };
    let cfg = BeamConfig {
        n,
        width,
        alpha,
        norm_pool: match norm_pool {
            "step_global" => NormPool::StepGlobal,
            "per_beam" => NormPool::PerBeam,
            other => {
                return Err(PyValueError::new_err(format!(
                    "norm_pool must be \"step_global\" or \"per_beam\", got {other:?}"
                )))
            }
        },
    };
    let boxed: Box<dyn Scorer> = if let Ok(spec) = scorer.extract::<String>() {
        let seed = spec
            .strip_prefix("hash:")
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| {
                PyValueError::new_err(format!(
                    "string scorer must be \"hash:<seed>\", got {spec:?}"
                ))
            })?;
        Box::new(HashScorer { seed })
    } else {
        let rows: Vec<(u32, u32, f64, f64)> = scorer.extract().map_err(|_| {
            PyValueError::new_err(
                "scorer must be \"hash:<seed>\" or a list of \
                 (frame, caption_id, frame_ll, caption_ll) rows",
            )
        })?;
        let table: Vec<TableRow> = rows
            .into_iter()
            .map(|(frame, caption_id, frame_ll, caption_ll)| TableRow {
                frame,
                caption_id,
                frame_ll,
                caption_ll,
            })
            .collect();
        Box::new(TableScorer::from_rows(&table).map_err(to_py_err)?)
    };
    let result = beam_select(&input, boxed.as_ref(), &cfg).map_err(to_py_err)?;
    let picks: Vec<(u32, String)> =
        result.pairs.iter().map(|(f, c)| (f.0, c.clone())).collect();
    let dict = PyDict::new(py);
    dict.set_item("score", result.score)?;
    dict.set_item("picks", picks)?;
    dict.set_item("norm_sum_frame", result.norm_sum_frame)?;
    dict.set_item("norm_sum_caption", result.norm_sum_caption)?;
    Ok(dict.into_any().unbind())
}

/// Min-max normalize a pool of values to [0, 1]; a degenerate pool
/// (max == min) maps to all 0.5.
#[pyfunction]
fn normalize_pool(values: Vec<f64>) -> PyResult<Vec<f64>> {
    minmax_normalize(&values).map_err(to_py_err)
}

/// Filter outlier annotations from one reference slot.
///
/// `features` is the video's frame-feature matrix, `keyframes` the slot's
/// annotated frames. Distances are L2 to the slot centroid, thresholded at
/// `mean + k_sigma * std`. Returns a dict with `kept` and `removed`
/// (positions into `keyframes`), `variance_before`, and `variance_after`.
#[pyfunction]
#[pyo3(signature = (features, keyframes, k_sigma=1.0, min_keep=1))]
fn filter_outliers(
    py: Python<'_>,
    features: Vec<Vec<f32>>,
    keyframes: Vec<u32>,
    k_sigma: f64,
    min_keep: usize,
) -> PyResult<Py<PyAny>> {
    let fm = build_features(features)?;
    let frames: Vec<FrameIndex> = keyframes.into_iter().map(FrameIndex).collect();
    let cfg = FilterConfig { k_sigma, min_keep };
    let outcome = filter_slot(&fm, &frames, &cfg).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("kept", outcome.kept)?;
    dict.set_item("removed", outcome.removed)?;
    dict.set_item("variance_before", outcome.variance_before)?;
    dict.set_item("variance_after", outcome.variance_after)?;
    Ok(dict.into_any().unbind())
}

/// Generate one pseudo-annotated instance from an in-memory source pool.
///
/// `pairs` is a list of `(caption, feature_row)`; `story_ids` (parallel to
/// `pairs`) is required for `mode="story"`. Instance `index` uses the
/// derived seed `seed ^ index`. Returns a dict with the instance fields.
#[pyfunction]
#[pyo3(signature = (pairs, n, encoder_len, seed, index=0, beta=0.05,
                    noise_per_element=false, mode="sample", story_ids=None))]
#[allow(clippy::too_many_arguments)]
fn generate_instance(
    py: Python<'_>,
    pairs: Vec<(String, Vec<f32>)>,
    n: usize,
    encoder_len: usize,
    seed: u64,
    index: usize,
    beta: f64,
    noise_per_element: bool,
    mode: &str,
    story_ids: Option<Vec<String>>,
) -> PyResult<Py<PyAny>> {
    let mode = match mode {
        "sample" => SourceMode::Sample,
        "story" => SourceMode::Story,
        other => {
            return Err(PyValueError::new_err(format!(
                "mode must be \"sample\" or \"story\", got {other:?}"
            )))
        }
    };
    if pairs.is_empty() {
        return Err(PyValueError::new_err("pairs must be non-empty"));
    }
    let dim = pairs[0].1.len();
    if pairs.iter().any(|(_, f)| f.len() != dim) {
        return Err(PyValueError::new_err("feature rows must all have the same length"));
    }
    if let Some(ids) = &story_ids {
        if ids.len() != pairs.len() {
            return Err(PyValueError::new_err("story_ids must parallel pairs"));
        }
    }
    let source_pairs: Vec<SourcePair> = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (caption, features))| SourcePair {
            image_id: format!("pair_{i}"),
            caption,
            story_id: story_ids.as_ref().map(|ids| ids[i].clone()),
            features,
        })
        .collect();
    let source = SourceCollection { pairs: source_pairs, dim, feature_files: BTreeMap::new() };
    let cfg = PseudoConfig { n, encoder_len, beta, seed, noise_per_element };
    let stories = match mode {
        SourceMode::Story => Some(story_groups(&source.pairs, n).map_err(to_py_err)?),
        SourceMode::Sample => None,
    };
    let (inst, instance_seed) =
        gen_instance(&source, stories.as_deref(), &cfg, mode, index).map_err(to_py_err)?;
    let rows: Vec<Vec<f32>> = inst.features.chunks(inst.dim).map(<[f32]>::to_vec).collect();
    let dict = PyDict::new(py);
    dict.set_item("features", rows)?;
    dict.set_item("dim", inst.dim)?;
    dict.set_item("keyframe_indices", inst.keyframe_indices)?;
    dict.set_item("captions", inst.captions)?;
    dict.set_item("span_bounds", inst.span_bounds)?;
    dict.set_item("v_bar", inst.v_bar)?;
    dict.set_item("instance_seed", instance_seed)?;
    Ok(dict.into_any().unbind())
}

/// Corpus statistics for a dataset JSON document (the CLI's dataset format:
/// `{"videos": [...]}`). Returns a dict mirroring the `stats` subcommand.
#[pyfunction]
fn dataset_stats(py: Python<'_>, dataset_json: &str) -> PyResult<Py<PyAny>> {
    #[derive(serde::Deserialize)]
    struct DatasetFile {
        videos: Vec<VideoRecord>,
    }
    let parsed: DatasetFile = serde_json::from_str(dataset_json)
        .map_err(|e| PyValueError::new_err(format!("invalid dataset JSON: {e}")))?;
    let mut records = parsed.videos;
    for record in &mut records {
        record.canonicalize().map_err(to_py_err)?;
    }
    let stats = compute_stats(&records).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("num_videos", stats.num_videos)?;
    dict.set_item("num_captions", stats.num_captions)?;
    dict.set_item("num_keyframes", stats.num_keyframes)?;
    dict.set_item("num_words", stats.num_words)?;
    dict.set_item("avg_captions_per_video", stats.avg_captions_per_video)?;
    dict.set_item("avg_keyframes_per_caption", stats.avg_keyframes_per_caption)?;
    dict.set_item("avg_words_per_caption", stats.avg_words_per_caption)?;
    dict.set_item("tokenizer", stats.tokenizer)?;
    Ok(dict.into_any().unbind())
}

/// The deterministic random stream used across the toolkit.
#[pyclass]
struct Rng {
    inner: DetRng,
}

#[pymethods]
impl Rng {
    #[new]
    fn new(seed: u64) -> Self {
        Rng { inner: DetRng::new(seed) }
    }

    /// Next float uniform in [0, 1) with 53-bit precision.
    fn uniform(&mut self) -> f64 {
        self.inner.uniform_f64()
    }

    /// Next integer uniform in [0, bound) by rejection sampling.
    fn uniform_int(&mut self, bound: u32) -> PyResult<u32> {
        if bound == 0 {
            return Err(PyValueError::new_err("bound must be positive"));
        }
        Ok(self.inner.uniform_u32(bound))
    }

    /// Next standard normal deviate.
    fn normal(&mut self) -> f64 {
        self.inner.standard_normal()
    }

    /// `k` distinct values from [0, m), in draw order.
    fn sample_distinct(&mut self, m: u32, k: u32) -> PyResult<Vec<u32>> {
        if k > m {
            return Err(PyValueError::new_err(format!("k = {k} exceeds m = {m}")));
        }
        Ok(self.inner.sample_distinct(m, k))
    }
}

#[pymodule]
fn vidsum_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(align_exact, m)?)?;
    m.add_function(wrap_pyfunction!(align_cos, m)?)?;
    m.add_function(wrap_pyfunction!(caption_score, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(select_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(beam_summarize, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_pool, m)?)?;
    m.add_function(wrap_pyfunction!(filter_outliers, m)?)?;
    m.add_function(wrap_pyfunction!(generate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(dataset_stats, m)?)?;
    m.add_class::<Rng>()?;
    Ok(())
}
