//! Lower-bound lab: can a sketch `S x` with `r` orthonormal rows tell a
//! Gaussian vector from a Gaussian vector with `t` planted spikes?
//!
//! The test statistic is `||S x||_2` with a threshold learned on a holdout
//! set; the advantage is `TPR - FPR` on fresh samples.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LbParams {
    pub n: usize,
    pub r: usize,
    pub eps: f64,
    pub delta: f64,
    pub p: f64,
    pub c_prime: f64,
    /// Overrides `t = ceil(log_3(1/sqrt(delta)))`.
    pub t: Option<usize>,
    /// Test samples per distribution; the holdout set has the same size.
    pub samples: usize,
    /// Draws used to estimate `E ||g||_p` for `g ~ N(0, I_{n-t})`.
    pub norm_draws: usize,
    pub seed: u64,
}

impl LbParams {
    pub fn new(n: usize, r: usize, eps: f64, delta: f64) -> Self {
        Self { n, r, eps, delta, p: 3.0, c_prime: 4.0, t: None, samples: 1000, norm_draws: 10_000, seed: 0 }
    }

    pub fn spike_count(&self) -> usize {
        self.t.unwrap_or_else(|| ((1.0 / self.delta.sqrt()).ln() / 3f64.ln()).ceil().max(1.0) as usize)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LbReport {
    pub params: LbParams,
    pub t: usize,
    pub e_norm: f64,
    pub spike: f64,
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub advantage: f64,
    /// Fraction of spiked samples with `||z||_p^p >= (1 + eps) median ||y||_p^p`.
    pub separation_rate: f64,
    /// Fraction of spiked samples whose spike columns all have
    /// `||S_i||^2 <= 2r/n`.
    pub event_g_rate: f64,
}

/// `r x n` matrix with orthonormal rows.
pub fn orthonormal_rows(r: usize, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    if r == 0 {
        return DMatrix::zeros(0, n);
    }
    let g = DMatrix::from_fn(n, r, |_, _| StandardNormal.sample(rng));
    g.qr().q().transpose()
}

/// Monte Carlo `E ||g||_p` over `draws` samples of `g ~ N(0, I_dim)`.
pub fn mean_p_norm(dim: usize, p: f64, draws: usize, rng: &mut ChaCha8Rng) -> f64 {
    let total: f64 = (0..draws)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(rng);
                    g.abs().powf(p)
                })
                .sum::<f64>()
                .powf(1.0 / p)
        })
        .sum();
    total / draws.max(1) as f64
}

struct Draw {
    stat: f64,
    pnorm_p: f64,
    event_g: bool,
}

fn draw(s: &DMatrix<f64>, col_norms: &[f64], spikes: Option<(usize, f64)>, p: f64, rng: &mut ChaCha8Rng) -> Draw {
    let n = s.ncols();
    let mut x = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    let mut event_g = true;
    if let Some((t, spike)) = spikes {
        let bound = 2.0 * s.nrows() as f64 / n as f64;
        for i in sample(rng, n, t) {
            x[i] += spike;
            event_g &= col_norms[i] <= bound;
        }
    }
    let stat = if s.nrows() == 0 { 0.0 } else { (s * &x).norm() };
    Draw { stat, pnorm_p: x.iter().map(|v| v.abs().powf(p)).sum(), event_g }
}

/// Threshold maximizing `TPR - FPR` for the rule "spiked iff stat >= thr".
fn best_threshold(null: &[f64], alt: &[f64]) -> f64 {
    let mut cands: Vec<f64> = null.iter().chain(alt).copied().collect();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    cands.push(f64::INFINITY);
    let rate = |xs: &[f64], thr: f64| xs.iter().filter(|&&v| v >= thr).count() as f64 / xs.len() as f64;
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    for &thr in &cands {
        let adv = rate(alt, thr) - rate(null, thr);
        if adv > best.0 {
            best = (adv, thr);
        }
    }
    best.1
}

pub fn lb_distinguish(params: &LbParams) -> Result<LbReport> {
    let LbParams { n, r, eps, p, c_prime, samples, norm_draws, seed, .. } = *params;
    let t = params.spike_count();
    if r > n || n == 0 || t >= n || samples == 0 {
        return Err(HarnessError::Instance(format!("need 0 <= r <= n, t < n, samples > 0 (n={n}, r={r}, t={t})")));
    }
    if !(eps > 0.0 && params.delta > 0.0 && params.delta < 1.0 && p > 0.0) {
        return Err(HarnessError::Instance("eps, delta in (0,1) and p > 0 required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = orthonormal_rows(r, n, &mut rng);
    let col_norms: Vec<f64> = (0..n).map(|i| s.column(i).norm_squared()).collect();
    let e_norm = mean_p_norm(n - t, p, norm_draws, &mut rng);
    let spike = c_prime * eps.powf(1.0 / p) * e_norm / (t as f64).powf(1.0 / p);

    let mut batch = |spiked: bool| -> Vec<Draw> {
        (0..samples).map(|_| draw(&s, &col_norms, spiked.then_some((t, spike)), p, &mut rng)).collect()
    };
    let train_null: Vec<f64> = batch(false).iter().map(|d| d.stat).collect();
    let train_alt: Vec<f64> = batch(true).iter().map(|d| d.stat).collect();
    let threshold = best_threshold(&train_null, &train_alt);
    let test_null = batch(false);
    let test_alt = batch(true);

    let frac = |xs: &[Draw], f: &dyn Fn(&Draw) -> bool| xs.iter().filter(|d| f(d)).count() as f64 / xs.len() as f64;
    let tpr = frac(&test_alt, &|d| d.stat >= threshold);
    let fpr = frac(&test_null, &|d| d.stat >= threshold);
    let mut null_norms: Vec<f64> = test_null.iter().map(|d| d.pnorm_p).collect();
    null_norms.sort_by(f64::total_cmp);
    let median = null_norms[(null_norms.len() - 1) / 2];
    Ok(LbReport {
        params: *params,
        t,
        e_norm,
        spike,
        threshold,
        tpr,
        fpr,
        advantage: tpr - fpr,
        separation_rate: frac(&test_alt, &|d| d.pnorm_p >= (1.0 + eps) * median),
        event_g_rate: frac(&test_alt, &|d| d.event_g),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = orthonormal_rows(5, 12, &mut rng);
        let g = &s * s.transpose();
        assert!((g - DMatrix::identity(5, 5)).norm() < 1e-12);
    }

    #[test]
    fn spike_count_formula() {
        assert_eq!(LbParams::new(128, 0, 0.5, 1.0 / 81.0).spike_count(), 2);
        assert_eq!(LbParams::new(128, 0, 0.5, 0.5).spike_count(), 1);
    }

    #[test]
    fn threshold_separates() {
        assert_eq!(best_threshold(&[1.0, 2.0], &[3.0, 4.0]), 3.0);
        // identical samples: nothing beats chance
        let thr = best_threshold(&[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(thr, 0.0);
    }
}
