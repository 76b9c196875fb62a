//! Mann-Whitney U test.

use statrs::distribution::{ContinuousCDF, Normal};

/// Samples with `min(n, m)` at or below this use the exact distribution.
pub const EXACT_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MwuResult {
    /// U statistic of the first sample: pairs `(x, y)` with `x > y`, ties ½.
    pub u: f64,
    /// P(U ≤ u) under the null: evidence that `x` tends to be smaller.
    pub p_less: f64,
    /// P(U ≥ u) under the null.
    pub p_greater: f64,
    pub p_two_sided: f64,
    pub exact: bool,
}

/// Midranks (1-based) of the pooled sample.
fn midranks(pooled: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Counts, for every achievable doubled rank sum of an `n`-subset, how many
/// subsets reach it. Doubled midranks are integers, so ties are exact.
fn subset_sum_counts(doubled: &[usize], n: usize) -> Vec<f64> {
    let total: usize = doubled.iter().sum();
    let mut dp = vec![vec![0.0f64; total + 1]; n + 1];
    dp[0][0] = 1.0;
    for &r in doubled {
        for k in (1..=n).rev() {
            let (lo, hi) = dp.split_at_mut(k);
            let (src, dst) = (&lo[k - 1], &mut hi[0]);
            for s in (r..=total).rev() {
                if src[s - r] != 0.0 {
                    dst[s] += src[s - r];
                }
            }
        }
    }
    dp.swap_remove(n)
}

pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> MwuResult {
    assert!(
        !x.is_empty() && !y.is_empty(),
        "both samples must be non-empty"
    );
    let (n, m) = (x.len(), y.len());
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    let rx: f64 = ranks[..n].iter().sum();
    let u = rx - (n * (n + 1)) as f64 / 2.0;
    let nm = (n * m) as f64;
    if n.min(m) <= EXACT_MAX {
        let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
        let counts = subset_sum_counts(&doubled, n);
        let total: f64 = counts.iter().sum();
        let obs = (rx * 2.0).round() as usize;
        let le: f64 = counts[..=obs].iter().sum::<f64>() / total;
        let ge: f64 = counts[obs..].iter().sum::<f64>() / total;
        return MwuResult {
            u,
            p_less: le,
            p_greater: ge,
            p_two_sided: (2.0 * le.min(ge)).min(1.0),
            exact: true,
        };
    }
    let big_n = (n + m) as f64;
    let mut tie_sum = 0.0;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_sum += t * t * t - t;
        i = j + 1;
    }
    let var = nm / 12.0 * ((big_n + 1.0) - tie_sum / (big_n * (big_n - 1.0)));
    let mean = nm / 2.0;
    if var <= 0.0 {
        return MwuResult {
            u,
            p_less: 1.0,
            p_greater: 1.0,
            p_two_sided: 1.0,
            exact: false,
        };
    }
    let sd = var.sqrt();
    let normal = Normal::standard();
    let p_less = normal.cdf((u - mean + 0.5) / sd);
    let p_greater = 1.0 - normal.cdf((u - mean - 0.5) / sd);
    let z = ((u - mean).abs() - 0.5).max(0.0) / sd;
    MwuResult {
        u,
        p_less,
        p_greater,
        p_two_sided: (2.0 * (1.0 - normal.cdf(z))).min(1.0),
        exact: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_samples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]);
        assert_eq!(r.u, 0.0);
        assert!((r.p_less - 0.05).abs() < 1e-15);
        assert!((r.p_two_sided - 0.1).abs() < 1e-15);
        assert!(r.exact);
    }

    #[test]
    fn identical_samples_give_one() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert_eq!(r.u, 4.5);
        assert_eq!(r.p_two_sided, 1.0);
    }

    #[test]
    fn u_identity() {
        let x = [0.3, 0.9, 0.1, 0.5, 0.5];
        let y = [0.2, 0.5, 0.8, 0.7];
        let a = mann_whitney_u(&x, &y).u;
        let b = mann_whitney_u(&y, &x).u;
        assert_eq!(a + b, 20.0);
    }
}
