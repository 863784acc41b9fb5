//! Exact-unigram METEOR stage.
//!
//! Candidate and reference captions are tokenized (lowercase, ASCII
//! punctuation stripped, whitespace split), matched one-to-one on exact
//! unigrams, and scored:
//!
//! ```text
//! P = m / |cand|      R = m / |ref|      Fmean = 10 P R / (R + 9 P)
//! penalty = 0.5 * (chunks / m)^3        score = Fmean * (1 - penalty)
//! ```
//!
//! `m` is the size of the maximum matching; among maximum matchings the one
//! minimizing the chunk count is used, ties resolved toward leftmost pairs.
//! `m = 0` scores 0.

use std::collections::HashMap;

/// Node budget for the chunk-minimizing search; within the budget the search
/// is exact, beyond it (mass duplicate tokens) the best alignment found so
/// far — deterministically — is used.
const SEARCH_NODE_BUDGET: usize = 500_000;

/// Result of [`meteor_exact`], with the intermediate tallies exposed.
#[derive(Debug, Clone, PartialEq)]
pub struct MeteorScore {
    pub score: f64,
    /// Matched unigram count `m`.
    pub matches: usize,
    /// Number of contiguous matched chunks (0 when `m` is 0).
    pub chunks: usize,
    pub candidate_len: usize,
    pub reference_len: usize,
    /// True when either side tokenized to nothing (score forced to 0).
    pub empty_input: bool,
}

/// Lowercase, strip ASCII punctuation, split on whitespace.
///
/// Punctuation characters are removed in place ("don't" becomes "dont");
/// tokens reduced to nothing disappear.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .filter_map(|w| {
            let token: String = w.chars().filter(|c| !c.is_ascii_punctuation()).collect();
            if token.is_empty() {
                None
            } else {
                Some(token)
            }
        })
        .collect()
}

/// Score a candidate caption against one reference caption.
pub fn meteor_exact(candidate: &str, reference: &str) -> MeteorScore {
    let cand = tokenize(candidate);
    let reference = tokenize(reference);
    let (candidate_len, reference_len) = (cand.len(), reference.len());
    if candidate_len == 0 || reference_len == 0 {
        return MeteorScore {
            score: 0.0,
            matches: 0,
            chunks: 0,
            candidate_len,
            reference_len,
            empty_input: true,
        };
    }
    let (m, chunks) = align(&cand, &reference);
    if m == 0 {
        return MeteorScore { score: 0.0, matches: 0, chunks: 0, candidate_len, reference_len, empty_input: false };
    }
    let p = m as f64 / candidate_len as f64;
    let r = m as f64 / reference_len as f64;
    let fmean = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (chunks as f64 / m as f64).powi(3);
    MeteorScore {
        score: fmean * (1.0 - penalty),
        matches: m,
        chunks,
        candidate_len,
        reference_len,
        empty_input: false,
    }
}

/// Per-token-type bookkeeping for the alignment search.
struct TokenType {
    /// Remaining candidate occurrences at or after the current position.
    cand_remaining: usize,
    /// Number of pairs this type must still contribute.
    quota: usize,
    /// Reference positions of this type, ascending; `used` marks taken ones.
    ref_positions: Vec<usize>,
    used: Vec<bool>,
}

struct Search<'a> {
    type_of_cand: &'a [Option<usize>],
    types: &'a mut [TokenType],
    /// Matched (candidate, reference) pairs so far, candidate order.
    pairs: Vec<(usize, usize)>,
    chunks_so_far: usize,
    best: Option<(usize, Vec<(usize, usize)>)>,
    nodes: usize,
    target_m: usize,
}

/// Maximum matching size and the minimum chunk count among maximum
/// matchings (leftmost-pair tie-break).
fn align(cand: &[String], reference: &[String]) -> (usize, usize) {
    // Group occurrences by token type.
    let mut type_ids: HashMap<&str, usize> = HashMap::new();
    let mut types: Vec<TokenType> = Vec::new();
    let mut type_of_cand: Vec<Option<usize>> = Vec::with_capacity(cand.len());
    let mut cand_counts: Vec<usize> = Vec::new();
    for token in cand {
        let id = *type_ids.entry(token.as_str()).or_insert_with(|| {
            types.push(TokenType {
                cand_remaining: 0,
                quota: 0,
                ref_positions: Vec::new(),
                used: Vec::new(),
            });
            cand_counts.push(0);
            types.len() - 1
        });
        cand_counts[id] += 1;
        types[id].cand_remaining += 1;
        type_of_cand.push(Some(id));
    }
    for (j, token) in reference.iter().enumerate() {
        if let Some(&id) = type_ids.get(token.as_str()) {
            types[id].ref_positions.push(j);
        }
    }
    let mut m = 0;
    for (id, t) in types.iter_mut().enumerate() {
        t.quota = cand_counts[id].min(t.ref_positions.len());
        t.used = vec![false; t.ref_positions.len()];
        m += t.quota;
    }
    // Candidate tokens whose type cannot match at all are fixed skips.
    for slot in &mut type_of_cand {
        let id = slot.unwrap();
        if types[id].ref_positions.is_empty() {
            types[id].cand_remaining -= 1;
            *slot = None;
        }
    }
    if m == 0 {
        return (0, 0);
    }
    let mut search = Search {
        type_of_cand: &type_of_cand,
        types: &mut types,
        pairs: Vec::with_capacity(m),
        chunks_so_far: 0,
        best: None,
        nodes: 0,
        target_m: m,
    };
    search.dfs(0);
    let (chunks, _) = search.best.expect("a maximum matching always exists when m > 0");
    (m, chunks)
}

impl Search<'_> {
    /// Depth-first over candidate positions in leftmost-pair order: at each
    /// matchable position try reference positions ascending, then the skip.
    /// The first complete solution is the greedy-leftmost alignment; the
    /// incumbent is replaced only on strictly fewer chunks, so among
    /// minimum-chunk alignments the leftmost one wins.
    fn dfs(&mut self, pos: usize) {
        if self.nodes >= SEARCH_NODE_BUDGET {
            return;
        }
        self.nodes += 1;
        // Bound: chunks never decrease as pairs are appended.
        if let Some((best_chunks, _)) = &self.best {
            if self.chunks_so_far >= *best_chunks {
                return;
            }
        }
        if self.pairs.len() == self.target_m {
            self.best = Some((self.chunks_so_far, self.pairs.clone()));
            return;
        }
        debug_assert!(pos < self.type_of_cand.len());
        let Some(id) = self.type_of_cand[pos] else {
            self.dfs(pos + 1);
            return;
        };
        let quota = self.types[id].quota;
        if quota > 0 {
            for k in 0..self.types[id].ref_positions.len() {
                if self.types[id].used[k] {
                    continue;
                }
                let rj = self.types[id].ref_positions[k];
                let extends = matches!(self.pairs.last(), Some(&(pc, pr)) if pc + 1 == pos && pr + 1 == rj);
                self.types[id].used[k] = true;
                self.types[id].quota -= 1;
                self.types[id].cand_remaining -= 1;
                self.pairs.push((pos, rj));
                let added = usize::from(!extends);
                self.chunks_so_far += added;
                self.dfs(pos + 1);
                self.chunks_so_far -= added;
                self.pairs.pop();
                self.types[id].cand_remaining += 1;
                self.types[id].quota += 1;
                self.types[id].used[k] = false;
            }
        }
        // Skipping is allowed only if later occurrences can still fill the
        // quota (otherwise the matching would not be maximum).
        if self.types[id].cand_remaining > self.types[id].quota {
            self.types[id].cand_remaining -= 1;
            self.dfs(pos + 1);
            self.types[id].cand_remaining += 1;
        }
    }
}
