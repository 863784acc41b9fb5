//! Aligned keyframe matching (AKM).
//!
//! A predicted summary contributes N frames; a video carries M >= N
//! chronologically ordered reference slots. AKM assigns each predicted frame
//! `p_i` to a distinct slot, keeping slot order strictly increasing, and
//! scores the best such assignment:
//!
//! ```text
//! AKM = max over strictly increasing (a_1 < ... < a_N) of
//!       (1/N) * sum_i  m(p_i, slot a_i)
//! ```
//!
//! where `m` is either exact keyframe membership or the clamped cosine
//! relaxation over mean-centered features. The optimum is found by dynamic
//! programming in O(N*M); [`akm_bruteforce`] enumerates assignments directly
//! and serves as the oracle the DP is tested against.

use crate::error::{Error, Result};
use crate::model::{FeatureMatrix, FrameIndex, ReferenceSlot};

/// Which per-(frame, slot) matcher produced a [`ScoreMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatcherKind {
    /// 1 if the predicted frame is in the slot's keyframe set, else 0.
    Exact,
    /// Best clamped cosine between mean-centered features, in [0, 1].
    Cosine,
}

/// N x M matrix of per-(prediction, slot) match scores in [0, 1], N <= M.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    n: usize,
    m: usize,
    s: Vec<f64>,
    pub matcher: MatcherKind,
}

impl ScoreMatrix {
    /// Build a matrix from row-major values; validates shape and range.
    pub fn new(n: usize, m: usize, s: Vec<f64>, matcher: MatcherKind) -> Result<ScoreMatrix> {
        if n == 0 {
            return Err(Error::validation("score matrix needs at least one prediction row"));
        }
        if n > m {
            return Err(Error::validation(format!(
                "prediction is longer than the reference list ({n} > {m})"
            )));
        }
        if s.len() != n * m {
            return Err(Error::validation(format!(
                "score matrix data length {} does not match {n} x {m}",
                s.len()
            )));
        }
        if s.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::validation("score matrix entries must lie in [0, 1]"));
        }
        Ok(ScoreMatrix { n, m, s, matcher })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Score of prediction `i` against slot `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.s[i * self.m + j]
    }
}

/// An optimal assignment: `assign[i]` is the slot index of prediction `i`
/// (strictly increasing), `score` the achieved AKM value in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub assign: Vec<usize>,
    pub score: f64,
}

/// Exact matcher: membership of the predicted frame in the slot keyframes.
pub fn match_exact(p: FrameIndex, slot: &ReferenceSlot) -> f64 {
    if slot.keyframes.binary_search(&p).is_ok() {
        1.0
    } else {
        0.0
    }
}

/// Cosine matcher: the best `max(0, cos(v_p - mean, v_a - mean))` over the
/// slot's keyframes `a`, computed in double precision on mean-centered rows.
/// A centered vector with L2 norm below 1e-12 contributes 0.
pub fn match_cos(p: FrameIndex, slot: &ReferenceSlot, fm: &FeatureMatrix) -> Result<f64> {
    let vp = fm.mean_center(p)?;
    let np = l2_norm(&vp);
    let mut best = 0.0f64;
    for &a in &slot.keyframes {
        let va = fm.mean_center(a)?;
        let na = l2_norm(&va);
        if np < 1e-12 || na < 1e-12 {
            continue;
        }
        let cos = dot(&vp, &va) / (np * na);
        best = best.max(cos.clamp(0.0, 1.0));
    }
    Ok(best)
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Score every predicted frame against every reference slot.
///
/// `features` is required for the cosine matcher. Fails when the prediction
/// is longer than the reference list.
pub fn akm_score_matrix(
    frames: &[FrameIndex],
    refs: &[ReferenceSlot],
    matcher: MatcherKind,
    features: Option<&FeatureMatrix>,
) -> Result<ScoreMatrix> {
    let n = frames.len();
    let m = refs.len();
    if n == 0 {
        return Err(Error::validation("empty prediction"));
    }
    if n > m {
        return Err(Error::validation(format!(
            "prediction is longer than the reference list ({n} > {m})"
        )));
    }
    let mut s = Vec::with_capacity(n * m);
    match matcher {
        MatcherKind::Exact => {
            for &p in frames {
                for slot in refs {
                    s.push(match_exact(p, slot));
                }
            }
        }
        MatcherKind::Cosine => {
            let fm = features
                .ok_or_else(|| Error::validation("cosine matcher requires frame features"))?;
            for &p in frames {
                for slot in refs {
                    s.push(match_cos(p, slot, fm)?);
                }
            }
        }
    }
    ScoreMatrix::new(n, m, s, matcher)
}

/// Optimal strictly-increasing assignment by dynamic programming.
///
/// Recurrence over `D[i][j]` = best total for the first `i` predictions
/// using the first `j` slots:
///
/// ```text
/// D[0][j] = 0,  D[i][0] = -inf (i > 0)
/// D[i][j] = max(D[i][j-1], D[i-1][j-1] + S[i][j])
/// ```
///
/// Backtracking prefers the skip move on ties (`D[i][j] == D[i][j-1]`),
/// which resolves ties toward the smallest-index assignment.
pub fn akm_align(s: &ScoreMatrix) -> Alignment {
    let (n, m) = (s.n, s.m);
    // D is (n + 1) x (m + 1), row-major.
    let width = m + 1;
    let mut d = vec![f64::NEG_INFINITY; (n + 1) * width];
    for cell in &mut d[..width] {
        *cell = 0.0;
    }
    for i in 1..=n {
        for j in 1..=m {
            let skip = d[i * width + j - 1];
            let take = d[(i - 1) * width + j - 1] + s.get(i - 1, j - 1);
            d[i * width + j] = skip.max(take);
        }
    }
    let total = d[n * width + m];
    let mut assign = vec![0usize; n];
    let (mut i, mut j) = (n, m);
    while i > 0 {
        if d[i * width + j] == d[i * width + j - 1] {
            j -= 1;
        } else {
            assign[i - 1] = j - 1;
            i -= 1;
            j -= 1;
        }
    }
    Alignment { assign, score: total / n as f64 }
}

/// Exact AKM of a prediction under the exact matcher.
pub fn akm_ex(frames: &[FrameIndex], refs: &[ReferenceSlot]) -> Result<Alignment> {
    Ok(akm_align(&akm_score_matrix(frames, refs, MatcherKind::Exact, None)?))
}

/// Exact AKM of a prediction under the cosine matcher.
pub fn akm_cos(
    frames: &[FrameIndex],
    refs: &[ReferenceSlot],
    fm: &FeatureMatrix,
) -> Result<Alignment> {
    Ok(akm_align(&akm_score_matrix(frames, refs, MatcherKind::Cosine, Some(fm))?))
}

/// Maximum number of assignments [`akm_bruteforce`] will enumerate.
pub const BRUTEFORCE_LIMIT: u128 = 1_000_000;

/// Brute-force oracle: enumerate every strictly increasing assignment.
///
/// Ties resolve to the assignment whose reversed index tuple is smallest,
/// which is the same assignment the DP backtrack produces. Fails when
/// C(M, N) exceeds [`BRUTEFORCE_LIMIT`].
pub fn akm_bruteforce(s: &ScoreMatrix) -> Result<Alignment> {
    let (n, m) = (s.n, s.m);
    if crate::util::combinations(m, n, BRUTEFORCE_LIMIT) > BRUTEFORCE_LIMIT {
        return Err(Error::validation(format!(
            "brute-force AKM over C({m}, {n}) assignments exceeds the {BRUTEFORCE_LIMIT} limit"
        )));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut comb: Vec<usize> = (0..n).collect();
    loop {
        let mut total = 0.0;
        for (i, &j) in comb.iter().enumerate() {
            total += s.get(i, j);
        }
        let better = match &best {
            None => true,
            Some((bt, bc)) => {
                total > *bt
                    || (total == *bt
                        && comb.iter().rev().lt(bc.iter().rev()))
            }
        };
        if better {
            best = Some((total, comb.clone()));
        }
        if !crate::util::next_combination(&mut comb, m) {
            break;
        }
    }
    let (total, assign) = best.expect("at least one assignment exists when n <= m");
    Ok(Alignment { assign, score: total / n as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ReferenceSlot;

    fn matrix(n: usize, m: usize, values: &[f64]) -> ScoreMatrix {
        ScoreMatrix::new(n, m, values.to_vec(), MatcherKind::Cosine).unwrap()
    }

    #[test]
    fn worked_2x3_matrix() {
        // Best assignment is (0, 1): 0.9 + 0.8 = 1.7, mean 0.85.
        let s = matrix(2, 3, &[0.9, 0.1, 0.0, 0.2, 0.8, 0.4]);
        let a = akm_align(&s);
        assert_eq!(a.assign, vec![0, 1]);
        assert!((a.score - 0.85).abs() < 1e-12);
    }

    #[test]
    fn worked_3x5_matrix() {
        // Best assignment is (1, 2, 4): 0.9 + 0.7 + 0.9 = 2.5, mean 2.5/3.
        let s = matrix(
            3,
            5,
            &[
                0.5, 0.9, 0.1, 0.0, 0.2, //
                0.3, 0.6, 0.7, 0.2, 0.1, //
                0.0, 0.4, 0.5, 0.8, 0.9,
            ],
        );
        let a = akm_align(&s);
        assert_eq!(a.assign, vec![1, 2, 4]);
        assert!((a.score - 2.5 / 3.0).abs() < 1e-12);
        let b = akm_bruteforce(&s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn all_zero_matrix_ties_break_leftmost() {
        let s = matrix(2, 4, &[0.0; 8]);
        let a = akm_align(&s);
        assert_eq!(a.score, 0.0);
        assert_eq!(a.assign, vec![0, 1]);
        assert_eq!(akm_bruteforce(&s).unwrap(), a);
    }

    #[test]
    fn tied_optima_agree_between_dp_and_bruteforce() {
        // Two optimal assignments: (0, 5) and (1, 2) both sum to 2; the
        // tie-break prefers the one with the smaller trailing index.
        let mut v = vec![0.0; 12];
        v[0] = 1.0; // S[0][0]
        v[1] = 1.0; // S[0][1]
        v[6 + 5] = 1.0; // S[1][5]
        v[6 + 2] = 1.0; // S[1][2]
        let s = matrix(2, 6, &v);
        let a = akm_align(&s);
        let b = akm_bruteforce(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.assign, vec![0, 2]);
    }

    #[test]
    fn square_matrix_has_single_assignment() {
        let s = matrix(3, 3, &[0.1, 0.9, 0.9, 0.9, 0.2, 0.9, 0.9, 0.9, 0.3]);
        let a = akm_align(&s);
        assert_eq!(a.assign, vec![0, 1, 2]);
        assert!((a.score - (0.1 + 0.2 + 0.3) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn score_matrix_rejects_bad_shapes_and_ranges() {
        assert!(ScoreMatrix::new(3, 2, vec![0.0; 6], MatcherKind::Exact).is_err());
        assert!(ScoreMatrix::new(0, 2, vec![], MatcherKind::Exact).is_err());
        assert!(ScoreMatrix::new(1, 2, vec![0.5, 1.5], MatcherKind::Exact).is_err());
        assert!(ScoreMatrix::new(1, 2, vec![0.5], MatcherKind::Exact).is_err());
    }

    #[test]
    fn exact_matcher_is_membership() {
        let slot = ReferenceSlot::new("c", vec![FrameIndex(2), FrameIndex(5)]).unwrap();
        assert_eq!(match_exact(FrameIndex(5), &slot), 1.0);
        assert_eq!(match_exact(FrameIndex(4), &slot), 0.0);
    }

    #[test]
    fn cosine_matcher_clamps_and_handles_zero_norm() {
        // Rows: mean is (1, 1); rows 0/1 center to (±1, ±1), row 2 to (0, 0).
        let fm = FeatureMatrix::new("v", 2, vec![2.0, 2.0, 0.0, 0.0, 1.0, 1.0]).unwrap();
        let slot0 = ReferenceSlot::new("c", vec![FrameIndex(0)]).unwrap();
        let slot1 = ReferenceSlot::new("c", vec![FrameIndex(1)]).unwrap();
        let slot2 = ReferenceSlot::new("c", vec![FrameIndex(2)]).unwrap();
        // Same direction: cosine 1.
        assert!((match_cos(FrameIndex(0), &slot0, &fm).unwrap() - 1.0).abs() < 1e-12);
        // Opposite direction: clamped to 0.
        assert_eq!(match_cos(FrameIndex(0), &slot1, &fm).unwrap(), 0.0);
        // Zero-norm centered vector contributes 0.
        assert_eq!(match_cos(FrameIndex(2), &slot0, &fm).unwrap(), 0.0);
        assert_eq!(match_cos(FrameIndex(0), &slot2, &fm).unwrap(), 0.0);
    }

    #[test]
    fn akm_ex_on_a_small_video() {
        let refs = vec![
            ReferenceSlot::new("first", vec![FrameIndex(0), FrameIndex(2)]).unwrap(),
            ReferenceSlot::new("second", vec![FrameIndex(4)]).unwrap(),
            ReferenceSlot::new("third", vec![FrameIndex(7), FrameIndex(9)]).unwrap(),
        ];
        let a = akm_ex(&[FrameIndex(2), FrameIndex(9)], &refs).unwrap();
        assert_eq!(a.score, 1.0);
        assert_eq!(a.assign, vec![0, 2]);
        let b = akm_ex(&[FrameIndex(3), FrameIndex(9)], &refs).unwrap();
        assert!((b.score - 0.5).abs() < 1e-12);
    }

    #[test]
    fn longer_prediction_than_references_is_rejected() {
        let refs = vec![ReferenceSlot::new("only", vec![FrameIndex(0)]).unwrap()];
        let err = akm_ex(&[FrameIndex(0), FrameIndex(1)], &refs).unwrap_err();
        assert!(err.to_string().contains("longer than the reference list"));
    }

    #[test]
    fn bruteforce_refuses_excessive_enumerations() {
        let s = ScoreMatrix::new(15, 40, vec![0.0; 600], MatcherKind::Exact).unwrap();
        assert!(akm_bruteforce(&s).is_err());
    }
}
