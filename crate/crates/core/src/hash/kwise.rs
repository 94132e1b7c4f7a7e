use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{field_modulus, mix64, reduce};
use crate::error::{Result, SketchError};

/// How a family evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HashMode {
    /// Degree-(k-1) polynomial over a prime field: exactly k-wise independent.
    #[default]
    Polynomial,
    /// Keyed 64-bit mixer treated as a fully random function. Much faster,
    /// no provable independence.
    Prf,
}

impl HashMode {
    pub(crate) fn code(self) -> u8 {
        match self {
            HashMode::Polynomial => 0,
            HashMode::Prf => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(HashMode::Polynomial),
            1 => Ok(HashMode::Prf),
            other => Err(SketchError::Format(format!("unknown hash mode {other}"))),
        }
    }
}

/// Shared construction parameters for the hash families of one structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashParams {
    pub domain: u64,
    pub k: usize,
    pub mode: HashMode,
}

impl HashParams {
    pub fn new(domain: u64, k: usize, mode: HashMode) -> Self {
        Self { domain, k, mode }
    }
}

/// A seeded hash `[domain] -> [range)` drawn from a k-wise independent family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KWiseHash {
    seed: u64,
    k: usize,
    domain: u64,
    range: u64,
    modulus: u64,
    mode: HashMode,
    /// Polynomial coefficients, constant term first. Empty in PRF mode.
    coefficients: Vec<u64>,
    key: u64,
}

impl KWiseHash {
    /// Polynomial family with coefficients expanded from `seed` by ChaCha8.
    pub fn new(seed: u64, k: usize, domain: u64, range: u64) -> Result<Self> {
        Self::with_mode(seed, k, domain, range, HashMode::Polynomial)
    }

    pub fn with_params(seed: u64, params: HashParams, range: u64) -> Result<Self> {
        Self::with_mode(seed, params.k, params.domain, range, params.mode)
    }

    pub fn with_mode(seed: u64, k: usize, domain: u64, range: u64, mode: HashMode) -> Result<Self> {
        if k == 0 {
            return Err(SketchError::InvalidParameter("independence degree k must be >= 1".into()));
        }
        if range == 0 {
            return Err(SketchError::InvalidParameter("hash range must be >= 1".into()));
        }
        if domain == 0 {
            return Err(SketchError::InvalidParameter("hash domain must be >= 1".into()));
        }
        let modulus = field_modulus(domain.max(range));
        let coefficients = match mode {
            HashMode::Polynomial => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..k).map(|_| rng.random_range(0..modulus)).collect()
            }
            HashMode::Prf => Vec::new(),
        };
        Ok(Self { seed, k, domain, range, modulus, mode, coefficients, key: mix64(seed ^ 0x005E_ED0F_4A5E) })
    }

    /// Polynomial family with caller-chosen coefficients (constant term
    /// first). The modulus must exceed every domain element.
    pub fn from_coefficients(coefficients: Vec<u64>, modulus: u64, domain: u64, range: u64) -> Result<Self> {
        if coefficients.is_empty() || range == 0 || domain == 0 {
            return Err(SketchError::InvalidParameter("coefficients, range and domain must be non-empty".into()));
        }
        if modulus < 2 || domain > modulus {
            return Err(SketchError::InvalidParameter(format!("modulus {modulus} must cover the domain {domain}")));
        }
        let coefficients = coefficients.into_iter().map(|c| c % modulus).collect::<Vec<_>>();
        Ok(Self {
            seed: 0,
            k: coefficients.len(),
            domain,
            range,
            modulus,
            mode: HashMode::Polynomial,
            coefficients,
            key: 0,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    pub fn range(&self) -> u64 {
        self.range
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn mode(&self) -> HashMode {
        self.mode
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    /// Evaluates the hash, rejecting indices outside the domain.
    pub fn eval(&self, i: u64) -> Result<u64> {
        if i >= self.domain {
            return Err(SketchError::IndexOutOfDomain { index: i, domain: self.domain });
        }
        Ok(self.eval_unchecked(i))
    }

    /// Evaluates without the domain check; callers validate indices once at
    /// the sketch boundary.
    #[inline]
    pub fn eval_unchecked(&self, i: u64) -> u64 {
        match self.mode {
            HashMode::Prf => reduce(mix64(self.key ^ mix64(i)), self.range),
            HashMode::Polynomial => self.poly(i) % self.range,
        }
    }

    #[inline]
    fn poly(&self, i: u64) -> u64 {
        let m = self.modulus;
        let x = i % m;
        let mut acc = 0u64;
        if m <= 1 << 32 {
            for &c in self.coefficients.iter().rev() {
                acc = (acc * x + c) % m;
            }
        } else {
            for &c in self.coefficients.iter().rev() {
                acc = ((acc as u128 * x as u128 + c as u128) % m as u128) as u64;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_polynomial_maps_everything_to_zero() {
        let h = KWiseHash::from_coefficients(vec![0, 0, 0, 0], 101, 101, 7).unwrap();
        assert!((0..101).all(|i| h.eval(i).unwrap() == 0));
    }

    #[test]
    fn identity_polynomial() {
        let h = KWiseHash::from_coefficients(vec![0, 1], 101, 101, 101).unwrap();
        assert_eq!(h.eval(5).unwrap(), 5);
        assert_eq!(h.eval(100).unwrap(), 100);
        assert!(matches!(h.eval(101), Err(SketchError::IndexOutOfDomain { .. })));
    }

    #[test]
    fn determinism_across_instances() {
        let a = KWiseHash::new(7, 4, 100, 16).unwrap();
        let b = KWiseHash::new(7, 4, 100, 16).unwrap();
        assert_eq!(a.eval(42).unwrap(), a.eval(42).unwrap());
        assert_eq!(a, b);
        for i in 0..100 {
            assert_eq!(a.eval(i).unwrap(), b.eval(i).unwrap());
        }
        let c = KWiseHash::new(8, 4, 100, 16).unwrap();
        assert!((0..100).any(|i| a.eval(i).unwrap() != c.eval(i).unwrap()));
    }

    #[test]
    fn rejects_degenerate_parameters() {
        assert!(KWiseHash::new(1, 0, 10, 4).is_err());
        assert!(KWiseHash::new(1, 4, 10, 0).is_err());
        assert!(KWiseHash::new(1, 4, 0, 4).is_err());
    }

    #[test]
    fn outputs_stay_in_range() {
        for mode in [HashMode::Polynomial, HashMode::Prf] {
            let h = KWiseHash::with_mode(3, 5, 1 << 12, 13, mode).unwrap();
            assert!((0..1 << 12).all(|i| h.eval(i).unwrap() < 13));
        }
    }

    #[test]
    fn modulus_is_prime_above_domain() {
        let h = KWiseHash::new(1, 3, 1 << 33, 16).unwrap();
        assert!(h.modulus() > 1 << 33);
        assert!(super::super::is_prime(h.modulus()));
        // the u128 path agrees with a direct evaluation
        let i = (1u64 << 33) - 5;
        let m = h.modulus() as u128;
        let direct = h.coefficients().iter().enumerate().fold(0u128, |acc, (j, &c)| {
            let mut pw = 1u128;
            for _ in 0..j {
                pw = pw * i as u128 % m;
            }
            (acc + c as u128 * pw) % m
        });
        assert_eq!(h.eval(i).unwrap(), (direct % 16) as u64);
    }

    /// Collision rate of a 2-wise family over independent seeds sits within
    /// 3 standard errors of 1/range. Pairs sharing a seed are correlated, so
    /// the error is taken across seeds.
    #[test]
    fn pairwise_collision_rate_matches_uniform() {
        let range = 16u64;
        let pairs: Vec<(u64, u64)> = (0..64u64).map(|t| (t * 7 + 1, t * 13 + 500)).collect();
        let seeds = 4000u64;
        let fracs: Vec<f64> = (0..seeds)
            .map(|seed| {
                let h = KWiseHash::new(seed, 2, 1 << 12, range).unwrap();
                let hits = pairs.iter().filter(|&&(a, b)| h.eval(a).unwrap() == h.eval(b).unwrap()).count();
                hits as f64 / pairs.len() as f64
            })
            .collect();
        let mean = fracs.iter().sum::<f64>() / seeds as f64;
        let var = fracs.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
        let se = (var / seeds as f64).sqrt();
        let p = 1.0 / range as f64;
        assert!((mean - p).abs() <= 3.0 * se, "rate {mean} vs {p} (se {se})");
    }
}
