//! Shared enumeration helpers for the brute-force oracles.

/// Advance `comb` to the next k-combination of `0..m` in lexicographic
/// order; returns false when exhausted.
pub(crate) fn next_combination(comb: &mut [usize], m: usize) -> bool {
    let n = comb.len();
    let mut i = n;
    while i > 0 {
        i -= 1;
        if comb[i] < m - (n - i) {
            comb[i] += 1;
            for k in i + 1..n {
                comb[k] = comb[k - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// C(m, n), saturating once it exceeds `cap * 2` (enough for limit checks).
pub(crate) fn combinations(m: usize, n: usize, cap: u128) -> u128 {
    if n > m {
        return 0;
    }
    let mut result: u128 = 1;
    for k in 0..n.min(m - n) {
        result = result.saturating_mul((m - k) as u128) / (k as u128 + 1);
        if result > cap.saturating_mul(2) {
            return result;
        }
    }
    result
}
