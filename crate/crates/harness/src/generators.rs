//! Deterministic workload vectors. A vector depends only on `(kind, n, seed)`;
//! trials vary the sketch seed, never the data.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InstanceKind {
    /// `x_{π(r)} = max(1, round(n r^{-s}))` for a random permutation `π`.
    Zipf { s: f64 },
    /// `m` coordinates set to `magnitude`, the rest `N(0, sigma^2)`.
    Spike { m: usize, magnitude: f64, sigma: f64 },
    /// `t` coordinates set to `(n/t)^{1/p}`, the rest `N(0, sigma^2)`.
    Largeish { t: usize, p: f64, sigma: f64 },
    /// `N(0, I_n)`.
    LbAlpha,
    /// `N(0, I_n)` plus `spike` added on `t` random coordinates.
    LbBeta { t: usize, spike: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardInstanceSpec {
    pub kind: InstanceKind,
    pub n: u64,
    pub seed: u64,
}

impl HardInstanceSpec {
    pub fn new(kind: InstanceKind, n: u64, seed: u64) -> Self {
        Self { kind, n, seed }
    }

    pub fn vector(&self) -> Result<Vec<f64>> {
        let n = self.n as usize;
        if n == 0 {
            return Err(HarnessError::Instance("n must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match self.kind {
            InstanceKind::Zipf { s } => {
                if !(s > 0.0) {
                    return Err(HarnessError::Instance(format!("zipf exponent must be positive, got {s}")));
                }
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                let mut x = vec![0.0; n];
                for (r, &i) in perm.iter().enumerate() {
                    x[i] = (n as f64 * ((r + 1) as f64).powf(-s)).round().max(1.0);
                }
                Ok(x)
            }
            InstanceKind::Spike { m, magnitude, sigma } => planted(&mut rng, n, m, magnitude, sigma),
            InstanceKind::Largeish { t, p, sigma } => {
                if t == 0 || !(p > 0.0) {
                    return Err(HarnessError::Instance("largeish needs t >= 1 and p > 0".into()));
                }
                planted(&mut rng, n, t, largeish_magnitude(self.n, t, p), sigma)
            }
            InstanceKind::LbAlpha => Ok(gaussian(&mut rng, n, 1.0)),
            InstanceKind::LbBeta { t, spike } => {
                if t > n {
                    return Err(HarnessError::Instance(format!("{t} spikes exceed n = {n}")));
                }
                let mut x = gaussian(&mut rng, n, 1.0);
                for i in sample(&mut rng, n, t) {
                    x[i] += spike;
                }
                Ok(x)
            }
        }
    }

    /// Nonzero coordinates as single updates.
    pub fn stream(&self) -> Result<Vec<(u64, f64)>> {
        Ok(self.vector()?.into_iter().enumerate().filter(|(_, v)| *v != 0.0).map(|(i, v)| (i as u64, v)).collect())
    }
}

/// `(n/t)^{1/p}`.
pub fn largeish_magnitude(n: u64, t: usize, p: f64) -> f64 {
    (n as f64 / t as f64).powf(1.0 / p)
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    (0..n).map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, rng)).collect()
}

fn planted(rng: &mut ChaCha8Rng, n: usize, m: usize, magnitude: f64, sigma: f64) -> Result<Vec<f64>> {
    if m > n {
        return Err(HarnessError::Instance(format!("{m} spikes exceed n = {n}")));
    }
    if !(sigma >= 0.0) {
        return Err(HarnessError::Instance(format!("sigma must be >= 0, got {sigma}")));
    }
    let mut x = if sigma > 0.0 { gaussian(rng, n, sigma) } else { vec![0.0; n] };
    for i in sample(rng, n, m) {
        x[i] = magnitude;
    }
    Ok(x)
}

/// Splits `x` into a turnstile stream: every coordinate arrives as
/// `rounds` signed fragments whose sum is `x_i`, interleaved at random.
pub fn turnstile(x: &[f64], rounds: usize, seed: u64) -> Vec<(u64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(x.len() * rounds.max(1));
    for (i, &v) in x.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let mut rest = v;
        for _ in 1..rounds {
            let f = (rng.random_range(-4..=4) as f64) * v.abs().max(1.0);
            out.push((i as u64, f));
            rest -= f;
        }
        out.push((i as u64, rest));
    }
    out.shuffle(&mut rng);
    out
}
