use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub p_value: f64,
    pub df: usize,
}

/// Average ranks (1-based) of `values`, plus `Σ (t³ - t)` over tie groups.
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Kruskal-Wallis H test with average-rank tie correction; the p-value is
/// the chi-square survival function with `groups - 1` degrees of freedom.
pub fn kruskal_wallis<G: AsRef<[f64]>>(groups: &[G]) -> Result<KruskalWallis> {
    if groups.len() < 2 {
        return Err(Error::Contract("Kruskal-Wallis needs at least two groups".into()));
    }
    if groups.iter().any(|g| g.as_ref().is_empty()) {
        return Err(Error::Contract("every group must be non-empty".into()));
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    if pooled.iter().any(|v| v.is_nan()) {
        return Err(Error::Contract("values must not be NaN".into()));
    }
    let n = pooled.len() as f64;
    if pooled.len() < 3 {
        return Err(Error::Contract("Kruskal-Wallis needs at least three observations".into()));
    }
    let (ranks, ties) = average_ranks(&pooled);
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        return Err(Error::DegenerateRanking(pooled.len()));
    }
    let centre = (n + 1.0) / 2.0;
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let len = g.as_ref().len();
        let mean_rank = ranks[offset..offset + len].iter().sum::<f64>() / len as f64;
        sum += len as f64 * (mean_rank - centre).powi(2);
        offset += len;
    }
    let h = (12.0 / (n * (n + 1.0)) * sum / correction).max(0.0);
    let df = groups.len() - 1;
    let chi = ChiSquared::new(df as f64).map_err(|e| Error::Contract(e.to_string()))?;
    Ok(KruskalWallis {
        h,
        p_value: chi.sf(h).clamp(0.0, 1.0),
        df,
    })
}
