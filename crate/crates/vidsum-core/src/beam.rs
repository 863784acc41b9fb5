//! Width-W beam search over (frame, caption) pairs.
//!
//! Each of N rounds extends every surviving beam with every candidate pair
//! whose frame index exceeds the beam's last frame. The scorer supplies a
//! frame and a caption log-likelihood per expansion; within a round these
//! are pooled (per [`NormPool`]) and min-max normalized separately, and an
//! expansion contributes `alpha * norm_frame + (1 - alpha) * norm_caption`
//! to its beam's running sum. The top W expansions by running sum survive;
//! the final score is the best sum divided by N.
//!
//! [`exhaustive_select`] replays the same per-round normalization over the
//! full unpruned expansion tree, making it the exact W -> infinity limit of
//! [`beam_select`] and the oracle it is tested against.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::model::FrameIndex;

/// Candidate pool for one video: frames (strictly increasing) and the
/// caption candidates of each frame (non-empty, input order; a caption's
/// position in its frame's list is its `caption_id`).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamInput {
    pub video_id: String,
    pub frames: Vec<FrameIndex>,
    pub captions: Vec<Vec<String>>,
}

impl BeamInput {
    /// Group flat (frame, caption) candidates by frame. Frames are sorted;
    /// captions keep their input order within each frame.
    pub fn from_pairs(video_id: impl Into<String>, pairs: &[(FrameIndex, String)]) -> Result<BeamInput> {
        let video_id = video_id.into();
        if pairs.is_empty() {
            return Err(Error::validation(format!("video {video_id}: no beam candidates")));
        }
        let mut by_frame: std::collections::BTreeMap<FrameIndex, Vec<String>> =
            std::collections::BTreeMap::new();
        for (frame, caption) in pairs {
            by_frame.entry(*frame).or_default().push(caption.clone());
        }
        let (frames, captions) = by_frame.into_iter().unzip();
        Ok(BeamInput { video_id, frames, captions })
    }

    fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::validation(format!("video {}: no beam candidates", self.video_id)));
        }
        if self.frames.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation(format!(
                "video {}: beam input frames must be strictly increasing",
                self.video_id
            )));
        }
        if self.captions.len() != self.frames.len() || self.captions.iter().any(Vec::is_empty) {
            return Err(Error::validation(format!(
                "video {}: every frame needs at least one candidate caption",
                self.video_id
            )));
        }
        Ok(())
    }
}

/// One chosen (frame, caption) pair, by position in the [`BeamInput`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairPick {
    pub frame_pos: usize,
    pub caption_id: usize,
}

/// Supplies per-expansion (frame_ll, caption_ll) components.
///
/// Implementations must be deterministic functions of their inputs.
pub trait Scorer {
    fn score_components(
        &self,
        input: &BeamInput,
        prefix: &[PairPick],
        frame_pos: usize,
        caption_id: usize,
    ) -> Result<(f64, f64)>;

    /// Whether components depend on the prefix (affects nothing in the
    /// search itself; informational for callers and tests).
    fn prefix_sensitive(&self) -> bool;
}

/// Which expansions share a min-max normalization pool within a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormPool {
    /// All expansions of the round, across beams (default).
    StepGlobal,
    /// Each beam's own expansion set.
    PerBeam,
}

/// Beam-search parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    /// Number of (frame, caption) pairs to select.
    pub n: usize,
    /// Beam width W.
    pub width: usize,
    /// Weight of the frame component in [0, 1].
    pub alpha: f64,
    pub norm_pool: NormPool,
}

impl BeamConfig {
    /// Defaults: W = 8, alpha = 0.5, step-global normalization.
    pub fn new(n: usize) -> BeamConfig {
        BeamConfig { n, width: 8, alpha: 0.5, norm_pool: NormPool::StepGlobal }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("beam: n must be at least 1"));
        }
        if self.width == 0 {
            return Err(Error::validation("beam: width must be at least 1"));
        }
        if !(self.alpha.is_finite() && (0.0..=1.0).contains(&self.alpha)) {
            return Err(Error::validation("beam: alpha must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// A surviving partial path.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamState {
    pub picks: Vec<PairPick>,
    /// Sum of the per-round normalized frame components.
    pub norm_sum_frame: f64,
    /// Sum of the per-round normalized caption components.
    pub norm_sum_caption: f64,
}

impl BeamState {
    fn total(&self, alpha: f64) -> f64 {
        alpha * self.norm_sum_frame + (1.0 - alpha) * self.norm_sum_caption
    }
}

/// The selected summary path.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamResult {
    pub picks: Vec<PairPick>,
    /// The picks resolved to (frame, caption) pairs.
    pub pairs: Vec<(FrameIndex, String)>,
    /// Best running sum divided by N.
    pub score: f64,
    pub norm_sum_frame: f64,
    pub norm_sum_caption: f64,
}

/// Min-max normalize: `(v - min) / (max - min)`, or all 0.5 when the pool
/// is degenerate (max == min). Fails on an empty or non-finite pool.
pub fn minmax_normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::validation("min-max normalization of an empty pool"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("min-max normalization over non-finite values"));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![0.5; values.len()]);
    }
    let span = max - min;
    Ok(values.iter().map(|v| (v - min) / span).collect())
}

struct Expansion {
    beam_idx: usize,
    pick: PairPick,
    frame_ll: f64,
    caption_ll: f64,
    norm_frame: f64,
    norm_caption: f64,
}

/// Deterministic total order on states: running sum descending, then frame
/// index tuple, caption text tuple, and caption id tuple ascending.
fn rank_states(states: &mut [BeamState], input: &BeamInput, alpha: f64) {
    states.sort_by(|a, b| {
        b.total(alpha)
            .total_cmp(&a.total(alpha))
            .then_with(|| {
                let fa = a.picks.iter().map(|p| input.frames[p.frame_pos]);
                let fb = b.picks.iter().map(|p| input.frames[p.frame_pos]);
                fa.cmp(fb)
            })
            .then_with(|| {
                let ca = a.picks.iter().map(|p| &input.captions[p.frame_pos][p.caption_id]);
                let cb = b.picks.iter().map(|p| &input.captions[p.frame_pos][p.caption_id]);
                ca.cmp(cb)
            })
            .then_with(|| {
                let ia = a.picks.iter().map(|p| p.caption_id);
                let ib = b.picks.iter().map(|p| p.caption_id);
                ia.cmp(ib)
            })
    });
}

fn expand_round(
    input: &BeamInput,
    scorer: &dyn Scorer,
    beams: &[BeamState],
    round: usize,
) -> Result<Vec<Expansion>> {
    let mut expansions = Vec::new();
    for (beam_idx, beam) in beams.iter().enumerate() {
        let first = beam.picks.last().map_or(0, |p| p.frame_pos + 1);
        for frame_pos in first..input.frames.len() {
            for caption_id in 0..input.captions[frame_pos].len() {
                let (frame_ll, caption_ll) =
                    scorer.score_components(input, &beam.picks, frame_pos, caption_id)?;
                if !(frame_ll.is_finite() && caption_ll.is_finite()) {
                    return Err(Error::validation(format!(
                        "video {}: scorer returned a non-finite component at round {round}",
                        input.video_id
                    )));
                }
                expansions.push(Expansion {
                    beam_idx,
                    pick: PairPick { frame_pos, caption_id },
                    frame_ll,
                    caption_ll,
                    norm_frame: 0.0,
                    norm_caption: 0.0,
                });
            }
        }
    }
    if expansions.is_empty() {
        return Err(Error::infeasible(format!(
            "video {}: no chronologically valid expansion at round {round} of the beam search",
            input.video_id
        )));
    }
    Ok(expansions)
}

/// Fill `norm_frame` / `norm_caption` according to the pooling mode.
fn normalize_round(expansions: &mut [Expansion], norm_pool: NormPool) -> Result<()> {
    let groups: Vec<Vec<usize>> = match norm_pool {
        NormPool::StepGlobal => vec![(0..expansions.len()).collect()],
        NormPool::PerBeam => {
            let mut by_beam: HashMap<usize, Vec<usize>> = HashMap::new();
            for (i, e) in expansions.iter().enumerate() {
                by_beam.entry(e.beam_idx).or_default().push(i);
            }
            let mut keys: Vec<usize> = by_beam.keys().copied().collect();
            keys.sort_unstable();
            keys.into_iter().map(|k| by_beam.remove(&k).unwrap()).collect()
        }
    };
    for group in groups {
        let f: Vec<f64> = group.iter().map(|&i| expansions[i].frame_ll).collect();
        let c: Vec<f64> = group.iter().map(|&i| expansions[i].caption_ll).collect();
        let nf = minmax_normalize(&f)?;
        let nc = minmax_normalize(&c)?;
        for (k, &i) in group.iter().enumerate() {
            expansions[i].norm_frame = nf[k];
            expansions[i].norm_caption = nc[k];
        }
    }
    Ok(())
}

/// Run the beam search and return the best complete path.
pub fn beam_select(input: &BeamInput, scorer: &dyn Scorer, cfg: &BeamConfig) -> Result<BeamResult> {
    cfg.validate()?;
    input.validate()?;
    if input.frames.len() < cfg.n {
        return Err(Error::infeasible(format!(
            "video {}: cannot pick {} pairs from {} frames",
            input.video_id,
            cfg.n,
            input.frames.len()
        )));
    }
    let mut beams = vec![BeamState { picks: Vec::new(), norm_sum_frame: 0.0, norm_sum_caption: 0.0 }];
    for round in 1..=cfg.n {
        let mut expansions = expand_round(input, scorer, &beams, round)?;
        normalize_round(&mut expansions, cfg.norm_pool)?;
        // Materialize successor states, deduplicating identical pick lists
        // (keep the higher running sum).
        let mut dedup: HashMap<Vec<PairPick>, BeamState> = HashMap::new();
        for e in &expansions {
            let parent = &beams[e.beam_idx];
            let mut picks = parent.picks.clone();
            picks.push(e.pick);
            let state = BeamState {
                picks: picks.clone(),
                norm_sum_frame: parent.norm_sum_frame + e.norm_frame,
                norm_sum_caption: parent.norm_sum_caption + e.norm_caption,
            };
            match dedup.get_mut(&picks) {
                Some(existing) if existing.total(cfg.alpha) >= state.total(cfg.alpha) => {}
                Some(existing) => *existing = state,
                None => {
                    dedup.insert(picks, state);
                }
            }
        }
        let mut next: Vec<BeamState> = dedup.into_values().collect();
        rank_states(&mut next, input, cfg.alpha);
        next.truncate(cfg.width);
        beams = next;
    }
    let best = beams.into_iter().next().expect("at least one beam survives every round");
    Ok(finish(input, best, cfg))
}

fn finish(input: &BeamInput, state: BeamState, cfg: &BeamConfig) -> BeamResult {
    let pairs = state
        .picks
        .iter()
        .map(|p| (input.frames[p.frame_pos], input.captions[p.frame_pos][p.caption_id].clone()))
        .collect();
    BeamResult {
        score: state.total(cfg.alpha) / cfg.n as f64,
        pairs,
        picks: state.picks,
        norm_sum_frame: state.norm_sum_frame,
        norm_sum_caption: state.norm_sum_caption,
    }
}

/// Number of complete chronologically valid N-paths (caption choices
/// included), saturating.
pub fn count_paths(input: &BeamInput, n: usize) -> u128 {
    level_widths(input, n).last().copied().unwrap_or(0)
}

/// Number of partial paths at every level 1..=n — the beam width needed at
/// each round for the search to be exhaustive.
pub fn level_widths(input: &BeamInput, n: usize) -> Vec<u128> {
    let f = input.frames.len();
    let caps: Vec<u128> = input.captions.iter().map(|c| c.len() as u128).collect();
    // ending[j] = number of partial paths of the current length whose last
    // frame is j.
    let mut ending: Vec<u128> = caps.clone();
    let mut widths = Vec::with_capacity(n);
    widths.push(ending.iter().copied().fold(0u128, u128::saturating_add));
    for _ in 2..=n {
        let mut next = vec![0u128; f];
        let mut prefix = 0u128;
        for j in 0..f {
            next[j] = prefix.saturating_mul(caps[j]);
            prefix = prefix.saturating_add(ending[j]);
        }
        ending = next;
        widths.push(ending.iter().copied().fold(0u128, u128::saturating_add));
    }
    widths
}

/// Maximum number of complete paths [`exhaustive_select`] will walk.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

/// Oracle: enumerate the full unpruned expansion tree level by level,
/// replaying the step-global per-round normalization over each level, and
/// return the best complete path. This is the exact W -> infinity limit of
/// [`beam_select`] with step-global pooling (the pooling mode in `cfg` is
/// ignored). Fails when the tree exceeds [`EXHAUSTIVE_LIMIT`] paths.
pub fn exhaustive_select(
    input: &BeamInput,
    scorer: &dyn Scorer,
    cfg: &BeamConfig,
) -> Result<BeamResult> {
    cfg.validate()?;
    input.validate()?;
    if input.frames.len() < cfg.n {
        return Err(Error::infeasible(format!(
            "video {}: cannot pick {} pairs from {} frames",
            input.video_id,
            cfg.n,
            input.frames.len()
        )));
    }
    if level_widths(input, cfg.n).iter().any(|&w| w > EXHAUSTIVE_LIMIT) {
        return Err(Error::validation(format!(
            "video {}: exhaustive enumeration exceeds the {EXHAUSTIVE_LIMIT}-path limit",
            input.video_id
        )));
    }
    let mut paths = vec![BeamState { picks: Vec::new(), norm_sum_frame: 0.0, norm_sum_caption: 0.0 }];
    for round in 1..=cfg.n {
        // Enumerate every expansion of every partial path.
        let mut exps: Vec<(usize, PairPick, f64, f64)> = Vec::new();
        for (path_idx, path) in paths.iter().enumerate() {
            let first = path.picks.last().map_or(0, |p| p.frame_pos + 1);
            for frame_pos in first..input.frames.len() {
                for caption_id in 0..input.captions[frame_pos].len() {
                    let (f_ll, c_ll) =
                        scorer.score_components(input, &path.picks, frame_pos, caption_id)?;
                    if !(f_ll.is_finite() && c_ll.is_finite()) {
                        return Err(Error::validation(format!(
                            "video {}: scorer returned a non-finite component at round {round}",
                            input.video_id
                        )));
                    }
                    exps.push((path_idx, PairPick { frame_pos, caption_id }, f_ll, c_ll));
                }
            }
        }
        if exps.is_empty() {
            return Err(Error::infeasible(format!(
                "video {}: no chronologically valid expansion at round {round} of the beam search",
                input.video_id
            )));
        }
        // Step-global pools over the whole level.
        let (mut fmin, mut fmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut cmin, mut cmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(_, _, f_ll, c_ll) in &exps {
            fmin = fmin.min(f_ll);
            fmax = fmax.max(f_ll);
            cmin = cmin.min(c_ll);
            cmax = cmax.max(c_ll);
        }
        let norm = |v: f64, lo: f64, hi: f64| if hi == lo { 0.5 } else { (v - lo) / (hi - lo) };
        paths = exps
            .into_iter()
            .map(|(path_idx, pick, f_ll, c_ll)| {
                let parent = &paths[path_idx];
                let mut picks = parent.picks.clone();
                picks.push(pick);
                BeamState {
                    picks,
                    norm_sum_frame: parent.norm_sum_frame + norm(f_ll, fmin, fmax),
                    norm_sum_caption: parent.norm_sum_caption + norm(c_ll, cmin, cmax),
                }
            })
            .collect();
    }
    rank_states(&mut paths, input, cfg.alpha);
    let best = paths.into_iter().next().expect("the tree has at least one complete path");
    Ok(finish(input, best, cfg))
}

/// JSONL row of a scorer table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRow {
    pub frame: u32,
    pub caption_id: u32,
    pub frame_ll: f64,
    pub caption_ll: f64,
}

/// Prefix-insensitive scorer backed by a (frame, caption_id) -> components
/// table.
#[derive(Debug, Clone)]
pub struct TableScorer {
    entries: HashMap<(u32, u32), (f64, f64)>,
}

impl TableScorer {
    pub fn from_rows(rows: &[TableRow]) -> Result<TableScorer> {
        let mut entries = HashMap::with_capacity(rows.len());
        for row in rows {
            if !(row.frame_ll.is_finite() && row.caption_ll.is_finite()) {
                return Err(Error::validation(format!(
                    "scorer table: non-finite component for frame {}, caption_id {}",
                    row.frame, row.caption_id
                )));
            }
            if entries.insert((row.frame, row.caption_id), (row.frame_ll, row.caption_ll)).is_some() {
                return Err(Error::validation(format!(
                    "scorer table: duplicate entry for frame {}, caption_id {}",
                    row.frame, row.caption_id
                )));
            }
        }
        Ok(TableScorer { entries })
    }

    /// Load a table from JSONL.
    pub fn load(path: &std::path::Path) -> Result<TableScorer> {
        let rows: Vec<TableRow> = io::read_jsonl(path)?;
        TableScorer::from_rows(&rows)
    }
}

impl Scorer for TableScorer {
    fn score_components(
        &self,
        input: &BeamInput,
        _prefix: &[PairPick],
        frame_pos: usize,
        caption_id: usize,
    ) -> Result<(f64, f64)> {
        let frame = input.frames[frame_pos].0;
        self.entries.get(&(frame, caption_id as u32)).copied().ok_or_else(|| {
            Error::validation(format!(
                "scorer table: no entry for frame {frame}, caption_id {caption_id}"
            ))
        })
    }

    fn prefix_sensitive(&self) -> bool {
        false
    }
}

/// Deterministic prefix-sensitive scorer: components are a 64-bit mix of
/// (seed, prefix frame indices, candidate frame and caption id), mapped
/// into [-10, 0]. Useful for tests and synthetic benchmarks.
#[derive(Debug, Clone)]
pub struct HashScorer {
    pub seed: u64,
}

const FRAME_TAG: u64 = 0xf7a3;
const CAPTION_TAG: u64 = 0xc19b;

/// splitmix64 finalizer.
fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

fn absorb(h: u64, v: u64) -> u64 {
    mix64(h ^ v.wrapping_add(0x9e37_79b9_7f4a_7c15))
}

impl HashScorer {
    fn ll(&self, tag: u64, input: &BeamInput, prefix: &[PairPick], frame: u32, caption_id: Option<usize>) -> f64 {
        let mut h = absorb(mix64(self.seed), tag);
        h = absorb(h, prefix.len() as u64);
        for p in prefix {
            h = absorb(h, u64::from(input.frames[p.frame_pos].0));
        }
        h = absorb(h, u64::from(frame));
        if let Some(id) = caption_id {
            h = absorb(h, id as u64);
        }
        let unit = (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        -10.0 * unit
    }
}

impl Scorer for HashScorer {
    fn score_components(
        &self,
        input: &BeamInput,
        prefix: &[PairPick],
        frame_pos: usize,
        caption_id: usize,
    ) -> Result<(f64, f64)> {
        let frame = input.frames[frame_pos].0;
        let frame_ll = self.ll(FRAME_TAG, input, prefix, frame, None);
        let caption_ll = self.ll(CAPTION_TAG, input, prefix, frame, Some(caption_id));
        Ok((frame_ll, caption_ll))
    }

    fn prefix_sensitive(&self) -> bool {
        true
    }
}
