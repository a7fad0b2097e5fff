//! Univariate Gaussian mixtures fitted by expectation-maximisation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ClusteringConfig;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Samples per partial reduction. Fixed so that summation order, and hence
/// the fitted parameters, do not depend on the number of threads.
const CHUNK: usize = 1 << 14;

/// A fitted `K`-component mixture `p(x) = Σ π_k N(x | μ_k, σ²_k)`.
///
/// Components are ordered by ascending mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub k: usize,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub weights: Vec<f64>,
    /// Total log-likelihood of the fit samples, one entry for the initial
    /// parameters and one per EM iteration.
    pub log_likelihood_trace: Vec<f64>,
    pub n_iter: usize,
    pub converged: bool,
}

impl GmmModel {
    /// Per-component `(ln π_k - ½ ln 2πσ²_k, 1 / 2σ²_k)`.
    fn log_terms(&self) -> Vec<(f64, f64, f64)> {
        (0..self.k)
            .map(|j| {
                let var = self.variances[j];
                (
                    self.weights[j].ln() - 0.5 * (LN_2PI + var.ln()),
                    0.5 / var,
                    self.means[j],
                )
            })
            .collect()
    }

    /// Index of the component with the largest posterior; ties go to the
    /// lowest index.
    pub fn classifier(&self) -> impl Fn(f64) -> usize + Sync + '_ {
        let terms = self.log_terms();
        move |x: f64| {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (j, &(c, inv, mu)) in terms.iter().enumerate() {
                let d = x - mu;
                let s = c - d * d * inv;
                if s > best_score {
                    best_score = s;
                    best = j;
                }
            }
            best
        }
    }

    /// Posterior responsibilities of each component for `x`.
    pub fn responsibilities(&self, x: f64) -> Vec<f64> {
        let logs: Vec<f64> = self
            .log_terms()
            .iter()
            .map(|&(c, inv, mu)| c - (x - mu).powi(2) * inv)
            .collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        e_step(samples, &self.log_terms()).0
    }

    pub fn final_log_likelihood(&self) -> f64 {
        *self.log_likelihood_trace.last().unwrap_or(&f64::NAN)
    }
}

/// Responsibility-weighted sums per component, taken around a shift point
/// (the current mean) for numerical stability.
#[derive(Clone)]
struct Stats {
    n: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Stats {
    fn zeros(k: usize) -> Self {
        Stats {
            n: vec![0.0; k],
            s1: vec![0.0; k],
            s2: vec![0.0; k],
        }
    }

    fn add(&mut self, o: &Stats) {
        for j in 0..self.n.len() {
            self.n[j] += o.n[j];
            self.s1[j] += o.s1[j];
            self.s2[j] += o.s2[j];
        }
    }
}

fn e_step_chunk(xs: &[f64], terms: &[(f64, f64, f64)]) -> (f64, Stats) {
    let k = terms.len();
    let mut st = Stats::zeros(k);
    let mut ll = 0.0;
    let mut logs = vec![0.0; k];
    for &x in xs {
        let mut m = f64::NEG_INFINITY;
        for (j, &(c, inv, mu)) in terms.iter().enumerate() {
            let d = x - mu;
            logs[j] = c - d * d * inv;
            m = m.max(logs[j]);
        }
        let mut sum = 0.0;
        for l in logs.iter_mut() {
            *l = (*l - m).exp();
            sum += *l;
        }
        ll += m + sum.ln();
        for (j, &(_, _, mu)) in terms.iter().enumerate() {
            let r = logs[j] / sum;
            let d = x - mu;
            st.n[j] += r;
            st.s1[j] += r * d;
            st.s2[j] += r * d * d;
        }
    }
    (ll, st)
}

fn e_step(samples: &[f64], terms: &[(f64, f64, f64)]) -> (f64, Stats) {
    let parts: Vec<(f64, Stats)> = samples
        .par_chunks(CHUNK)
        .map(|c| e_step_chunk(c, terms))
        .collect();
    let mut ll = 0.0;
    let mut st = Stats::zeros(terms.len());
    for (l, s) in &parts {
        ll += l;
        st.add(s);
    }
    (ll, st)
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Fits a `k`-component mixture to `samples`.
///
/// Component `j` starts at the `(j + ½) / k` quantile with variance
/// `(range / k)² / 12` and weight `1 / k`. Iteration stops once the relative
/// log-likelihood gain drops below `cfg.rel_tol` or after `cfg.max_iter`
/// iterations. Variances never fall below `cfg.variance_floor · range²`.
pub fn fit_gmm_em(samples: &[f64], k: usize, cfg: &ClusteringConfig) -> Result<GmmModel> {
    if samples.is_empty() {
        return Err(Error::Contract("cannot fit a mixture to zero samples".into()));
    }
    if k == 0 {
        return Err(Error::Contract("component count must be >= 1".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Contract("samples must be finite".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let distinct = 1 + sorted.windows(2).filter(|w| w[0] != w[1]).count();
    if k > distinct {
        return Err(Error::DegenerateFit(format!(
            "{k} components requested but only {distinct} distinct values"
        )));
    }

    let range = sorted[sorted.len() - 1] - sorted[0];
    let floor = if range > 0.0 {
        cfg.variance_floor * range * range
    } else {
        cfg.variance_floor
    };

    let mut model = GmmModel {
        k,
        means: (0..k)
            .map(|j| quantile(&sorted, (j as f64 + 0.5) / k as f64))
            .collect(),
        variances: vec![((range / k as f64).powi(2) / 12.0).max(floor); k],
        weights: vec![1.0 / k as f64; k],
        log_likelihood_trace: Vec::new(),
        n_iter: 0,
        converged: false,
    };
    drop(sorted);

    let (mut ll, mut stats) = e_step(samples, &model.log_terms());
    model.log_likelihood_trace.push(ll);

    for iter in 1..=cfg.max_iter {
        // M-step
        let total: f64 = stats.n.iter().sum();
        for j in 0..k {
            let nj = stats.n[j];
            if nj > 1e-300 {
                let shift = stats.s1[j] / nj;
                model.means[j] += shift;
                model.variances[j] = (stats.s2[j] / nj - shift * shift).max(floor);
            }
            model.weights[j] = nj / total;
        }

        let (ll_new, stats_new) = e_step(samples, &model.log_terms());
        model.log_likelihood_trace.push(ll_new);
        model.n_iter = iter;
        let gain = ll_new - ll;
        ll = ll_new;
        stats = stats_new;
        if gain < cfg.rel_tol * ll.abs().max(f64::MIN_POSITIVE) {
            model.converged = true;
            break;
        }
    }

    sort_components(&mut model);
    Ok(model)
}

fn sort_components(m: &mut GmmModel) {
    let mut order: Vec<usize> = (0..m.k).collect();
    order.sort_by(|&a, &b| m.means[a].total_cmp(&m.means[b]));
    m.means = order.iter().map(|&i| m.means[i]).collect();
    m.variances = order.iter().map(|&i| m.variances[i]).collect();
    m.weights = order.iter().map(|&i| m.weights[i]).collect();
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn cfg() -> ClusteringConfig {
        ClusteringConfig::default()
    }

    #[test]
    fn single_component_is_closed_form() {
        let xs = [1.0, 2.0, 4.0, 7.0, 11.0];
        let m = fit_gmm_em(&xs, 1, &cfg()).unwrap();
        let mean = 5.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 5.0;
        assert!((m.means[0] - mean).abs() < 1e-12);
        assert!((m.variances[0] - var).abs() < 1e-12);
        assert_eq!(m.weights, vec![1.0]);

        let one_iter = ClusteringConfig { max_iter: 1, ..cfg() };
        let m1 = fit_gmm_em(&xs, 1, &one_iter).unwrap();
        assert_eq!(m1.n_iter, 1);
        assert!((m1.means[0] - mean).abs() < 1e-12);
    }

    #[test]
    fn constant_samples_floor_variance() {
        let m = fit_gmm_em(&[3.0; 10], 1, &cfg()).unwrap();
        assert_eq!(m.means[0], 3.0);
        assert!(m.variances[0] > 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_gmm_em(&[], 1, &cfg()), Err(Error::Contract(_))));
        assert!(matches!(
            fit_gmm_em(&[1.0, 1.0, 2.0], 3, &cfg()),
            Err(Error::DegenerateFit(_))
        ));
        assert!(fit_gmm_em(&[1.0, f64::NAN], 1, &cfg()).is_err());
    }

    #[test]
    fn recovers_two_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Normal::new(-5.0, 0.5).unwrap();
        let b = Normal::new(5.0, 0.5).unwrap();
        let xs: Vec<f64> = (0..50_000)
            .map(|i| if i % 2 == 0 { a.sample(&mut rng) } else { b.sample(&mut rng) })
            .collect();
        let m = fit_gmm_em(&xs, 2, &cfg()).unwrap();
        assert!((m.means[0] + 5.0).abs() < 0.1);
        assert!((m.means[1] - 5.0).abs() < 0.1);
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for w in m.log_likelihood_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs());
        }
    }

    #[test]
    fn classifier_agrees_with_responsibilities() {
        let m = GmmModel {
            k: 3,
            means: vec![0.0, 1.0, 4.0],
            variances: vec![0.2, 1.5, 0.1],
            weights: vec![0.5, 0.3, 0.2],
            log_likelihood_trace: vec![],
            n_iter: 0,
            converged: true,
        };
        let cls = m.classifier();
        for i in 0..200 {
            let x = -2.0 + i as f64 * 0.04;
            let r = m.responsibilities(x);
            let best = (0..3).fold(0, |b, j| if r[j] > r[b] { j } else { b });
            assert_eq!(cls(x), best, "x = {x}");
        }
    }
}
