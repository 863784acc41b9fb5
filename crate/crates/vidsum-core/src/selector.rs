//! Summary selection: pick exactly N scored candidates from a video.
//!
//! Candidates are first [`prefilter`]ed (over-long segments dropped, the
//! rest sorted chronologically), then [`select_n_dp`] maximizes the summed
//! utility `segment_weight * segment_score + caption_weight * caption_score`
//! over exactly N candidates:
//!
//! * **hard** mode requires the chosen segments to be pairwise
//!   non-overlapping (half-open intervals — touching segments do not
//!   overlap) and falls back to soft mode, flagged, when no such set exists;
//! * **soft** mode permits overlap but charges
//!   `overlap_penalty_per_s * overlap_seconds` against the previously
//!   chosen segment along the chain.
//!
//! [`select_bruteforce`] enumerates candidate subsets outright and is the
//! oracle the DP is verified against; both resolve ties toward the
//! lexicographically smallest index tuple.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Candidate;
use crate::util;

/// Non-overlap requirement for the chosen set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectMode {
    Hard,
    Soft,
}

/// Selection parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    /// Number of candidates to choose.
    pub n: usize,
    /// Segments longer than this fraction of the video are dropped
    /// up front.
    pub max_segment_fraction: f64,
    pub mode: SelectMode,
    /// Soft mode: penalty per second of overlap with the previously chosen
    /// segment.
    pub overlap_penalty_per_s: f64,
    pub segment_weight: f64,
    pub caption_weight: f64,
}

impl SelectorConfig {
    /// Defaults: 0.75 length cap, hard mode, penalty 1.0/s, 1:1 weights.
    pub fn new(n: usize) -> SelectorConfig {
        SelectorConfig {
            n,
            max_segment_fraction: 0.75,
            mode: SelectMode::Hard,
            overlap_penalty_per_s: 1.0,
            segment_weight: 1.0,
            caption_weight: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("selector: n must be at least 1"));
        }
        if !(self.max_segment_fraction.is_finite()
            && self.max_segment_fraction > 0.0
            && self.max_segment_fraction <= 1.0)
        {
            return Err(Error::validation("selector: max_segment_fraction must lie in (0, 1]"));
        }
        if !(self.overlap_penalty_per_s.is_finite() && self.overlap_penalty_per_s >= 0.0) {
            return Err(Error::validation("selector: overlap_penalty_per_s must be non-negative"));
        }
        if !(self.segment_weight.is_finite() && self.caption_weight.is_finite()) {
            return Err(Error::validation("selector: weights must be finite"));
        }
        Ok(())
    }
}

/// Outcome of a selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Chosen candidates in chronological order.
    pub chosen: Vec<Candidate>,
    /// Indices of the chosen candidates in the input list, ascending.
    pub indices: Vec<usize>,
    /// Achieved objective value.
    pub objective: f64,
    /// Mode that actually produced the result.
    pub mode_used: SelectMode,
    /// True when hard mode was infeasible and soft mode answered instead.
    pub fell_back: bool,
}

/// Drop candidates whose segment exceeds `max_segment_fraction * duration_s`
/// and sort the survivors by (segment end, segment start).
pub fn prefilter(cands: &[Candidate], duration_s: f64, cfg: &SelectorConfig) -> Result<Vec<Candidate>> {
    cfg.validate()?;
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::validation("prefilter: duration_s must be positive and finite"));
    }
    let cap = cfg.max_segment_fraction * duration_s;
    let mut kept: Vec<Candidate> = cands.iter().filter(|c| c.len_s() <= cap).cloned().collect();
    kept.sort_by(|a, b| {
        a.segment_end_s
            .total_cmp(&b.segment_end_s)
            .then(a.segment_start_s.total_cmp(&b.segment_start_s))
    });
    Ok(kept)
}

fn utility(c: &Candidate, cfg: &SelectorConfig) -> f64 {
    cfg.segment_weight * c.segment_score + cfg.caption_weight * c.caption_score
}

/// Seconds of overlap between two half-open segments (0 when disjoint or
/// merely touching).
pub fn overlap_s(a: &Candidate, b: &Candidate) -> f64 {
    (a.segment_end_s.min(b.segment_end_s) - a.segment_start_s.max(b.segment_start_s)).max(0.0)
}

/// Objective of a chain of candidates (indices ascending), evaluated with
/// the exact association order the DP uses so the two agree bitwise.
fn chain_objective(cands: &[Candidate], idxs: &[usize], mode: SelectMode, cfg: &SelectorConfig) -> f64 {
    let mut acc = utility(&cands[*idxs.last().expect("chain is non-empty")], cfg);
    for w in idxs.windows(2).rev() {
        let (i, j) = (w[0], w[1]);
        let continuation = match mode {
            SelectMode::Hard => acc,
            SelectMode::Soft => acc - cfg.overlap_penalty_per_s * overlap_s(&cands[i], &cands[j]),
        };
        acc = utility(&cands[i], cfg) + continuation;
    }
    acc
}

fn ensure_sorted(cands: &[Candidate]) -> Result<()> {
    let ordered = cands.windows(2).all(|w| {
        (w[0].segment_end_s, w[0].segment_start_s) <= (w[1].segment_end_s, w[1].segment_start_s)
    });
    if !ordered {
        return Err(Error::validation(
            "selector: candidates must be sorted by (segment end, segment start); run prefilter first",
        ));
    }
    Ok(())
}

/// Can `next` follow `prev` in a hard-mode chain (no overlap)?
fn compatible(prev: &Candidate, next: &Candidate) -> bool {
    next.segment_start_s >= prev.segment_end_s
}

/// `table[j][k-1]` = best chain objective over chains of length k whose
/// first element is candidate j (NEG_INFINITY when impossible).
fn chain_table(cands: &[Candidate], mode: SelectMode, cfg: &SelectorConfig) -> Vec<Vec<f64>> {
    let c = cands.len();
    let n = cfg.n;
    let mut table = vec![vec![f64::NEG_INFINITY; n]; c];
    for j in 0..c {
        table[j][0] = utility(&cands[j], cfg);
    }
    for k in 2..=n {
        for j in 0..c {
            let mut best = f64::NEG_INFINITY;
            for next in j + 1..c {
                if table[next][k - 2] == f64::NEG_INFINITY {
                    continue;
                }
                let continuation = match mode {
                    SelectMode::Hard => {
                        if !compatible(&cands[j], &cands[next]) {
                            continue;
                        }
                        table[next][k - 2]
                    }
                    SelectMode::Soft => {
                        table[next][k - 2]
                            - cfg.overlap_penalty_per_s * overlap_s(&cands[j], &cands[next])
                    }
                };
                if continuation > best {
                    best = continuation;
                }
            }
            if best > f64::NEG_INFINITY {
                table[j][k - 1] = utility(&cands[j], cfg) + best;
            }
        }
    }
    table
}

/// Reconstruct the lexicographically smallest optimal index tuple from the
/// chain table by walking forward: at each level take the smallest index
/// whose table value reproduces the running target bitwise.
fn reconstruct(
    cands: &[Candidate],
    table: &[Vec<f64>],
    mode: SelectMode,
    cfg: &SelectorConfig,
    objective: f64,
) -> Vec<usize> {
    let n = cfg.n;
    let mut j = (0..cands.len())
        .find(|&j| table[j][n - 1] == objective)
        .expect("the optimum came from some row");
    let mut indices = Vec::with_capacity(n);
    indices.push(j);
    let mut target = objective;
    for level in (1..n).rev() {
        let u = utility(&cands[j], cfg);
        let mut found = None;
        for next in j + 1..cands.len() {
            if table[next][level - 1] == f64::NEG_INFINITY {
                continue;
            }
            let continuation = match mode {
                SelectMode::Hard => {
                    if !compatible(&cands[j], &cands[next]) {
                        continue;
                    }
                    table[next][level - 1]
                }
                SelectMode::Soft => {
                    table[next][level - 1]
                        - cfg.overlap_penalty_per_s * overlap_s(&cands[j], &cands[next])
                }
            };
            if u + continuation == target {
                found = Some(next);
                break;
            }
        }
        j = found.expect("an optimal chain continues from every reconstructed link");
        indices.push(j);
        target = table[j][level - 1];
    }
    indices
}

fn build_selection(
    cands: &[Candidate],
    indices: Vec<usize>,
    objective: f64,
    mode_used: SelectMode,
    fell_back: bool,
) -> Selection {
    Selection {
        chosen: indices.iter().map(|&i| cands[i].clone()).collect(),
        indices,
        objective,
        mode_used,
        fell_back,
    }
}

/// Select exactly `cfg.n` candidates by dynamic programming.
///
/// `cands` must already be prefiltered/sorted (see [`prefilter`]). In hard
/// mode an infeasible instance falls back to soft mode with
/// [`Selection::fell_back`] set. Fails with an infeasibility error when
/// fewer than N candidates exist at all.
pub fn select_n_dp(cands: &[Candidate], cfg: &SelectorConfig) -> Result<Selection> {
    cfg.validate()?;
    ensure_sorted(cands)?;
    if cands.len() < cfg.n {
        return Err(Error::infeasible(format!(
            "cannot choose {} candidates from {}",
            cfg.n,
            cands.len()
        )));
    }
    let run = |mode: SelectMode| -> Option<(Vec<usize>, f64)> {
        let table = chain_table(cands, mode, cfg);
        let objective = table
            .iter()
            .map(|row| row[cfg.n - 1])
            .fold(f64::NEG_INFINITY, f64::max);
        if objective == f64::NEG_INFINITY {
            return None;
        }
        Some((reconstruct(cands, &table, mode, cfg, objective), objective))
    };
    match cfg.mode {
        SelectMode::Soft => {
            let (indices, objective) =
                run(SelectMode::Soft).expect("soft chains always exist when C >= N");
            Ok(build_selection(cands, indices, objective, SelectMode::Soft, false))
        }
        SelectMode::Hard => match run(SelectMode::Hard) {
            Some((indices, objective)) => {
                Ok(build_selection(cands, indices, objective, SelectMode::Hard, false))
            }
            None => {
                let (indices, objective) =
                    run(SelectMode::Soft).expect("soft chains always exist when C >= N");
                Ok(build_selection(cands, indices, objective, SelectMode::Soft, true))
            }
        },
    }
}

/// Maximum number of subsets [`select_bruteforce`] will enumerate.
pub const BRUTEFORCE_LIMIT: u128 = 1_000_000;

/// Oracle: enumerate every N-subset, evaluate the chain objective directly,
/// and keep the best (ties: first in lexicographic enumeration order, i.e.
/// the smallest index tuple). Applies the same hard-to-soft fallback as the
/// DP so the two stay comparable.
pub fn select_bruteforce(cands: &[Candidate], cfg: &SelectorConfig) -> Result<Selection> {
    cfg.validate()?;
    ensure_sorted(cands)?;
    if cands.len() < cfg.n {
        return Err(Error::infeasible(format!(
            "cannot choose {} candidates from {}",
            cfg.n,
            cands.len()
        )));
    }
    if util::combinations(cands.len(), cfg.n, BRUTEFORCE_LIMIT) > BRUTEFORCE_LIMIT {
        return Err(Error::validation(format!(
            "brute-force selection over C({}, {}) subsets exceeds the {BRUTEFORCE_LIMIT} limit",
            cands.len(),
            cfg.n
        )));
    }
    let run = |mode: SelectMode| -> Option<(Vec<usize>, f64)> {
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut comb: Vec<usize> = (0..cfg.n).collect();
        loop {
            let feasible = mode == SelectMode::Soft
                || comb.windows(2).all(|w| compatible(&cands[w[0]], &cands[w[1]]));
            if feasible {
                let objective = chain_objective(cands, &comb, mode, cfg);
                if best.as_ref().is_none_or(|(_, b)| objective > *b) {
                    best = Some((comb.clone(), objective));
                }
            }
            if !util::next_combination(&mut comb, cands.len()) {
                break;
            }
        }
        best
    };
    match cfg.mode {
        SelectMode::Soft => {
            let (indices, objective) = run(SelectMode::Soft).expect("C >= N");
            Ok(build_selection(cands, indices, objective, SelectMode::Soft, false))
        }
        SelectMode::Hard => match run(SelectMode::Hard) {
            Some((indices, objective)) => {
                Ok(build_selection(cands, indices, objective, SelectMode::Hard, false))
            }
            None => {
                let (indices, objective) = run(SelectMode::Soft).expect("C >= N");
                Ok(build_selection(cands, indices, objective, SelectMode::Soft, true))
            }
        },
    }
}
