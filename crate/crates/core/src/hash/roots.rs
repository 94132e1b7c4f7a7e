use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{HashParams, KWiseHash};
use crate::error::{Result, SketchError};

/// A k-wise independent family of random q-th roots of unity, `ω(i) = e^{2πi·u(i)/q}`.
#[derive(Clone, Debug)]
pub struct RootsFamily {
    q: u64,
    index_hash: KWiseHash,
    table: Vec<Complex64>,
}

/// `e^{2πi·u/q}`, exact on the real and imaginary axes.
pub fn unit_root(u: u64, q: u64) -> Complex64 {
    let u = u % q;
    if (4 * u).is_multiple_of(q) {
        return match 4 * u / q {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let (s, c) = (TAU * u as f64 / q as f64).sin_cos();
    Complex64::new(c, s)
}

impl RootsFamily {
    pub fn new(seed: u64, q: u64, params: HashParams) -> Result<Self> {
        if q < 2 {
            return Err(SketchError::InvalidParameter(format!("root order q = {q} must be >= 2")));
        }
        let index_hash = KWiseHash::with_params(seed, params, q)?;
        Ok(Self::from_hash(index_hash))
    }

    /// Wraps an existing hash whose range is the root order.
    pub fn from_hash(index_hash: KWiseHash) -> Self {
        let q = index_hash.range();
        let table = (0..q).map(|u| unit_root(u, q)).collect();
        Self { q, index_hash, table }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn index_hash(&self) -> &KWiseHash {
        &self.index_hash
    }

    pub fn exponent(&self, i: u64) -> Result<u64> {
        self.index_hash.eval(i)
    }

    pub fn root(&self, i: u64) -> Result<Complex64> {
        Ok(self.table[self.index_hash.eval(i)? as usize])
    }

    #[inline]
    pub fn root_unchecked(&self, i: u64) -> Complex64 {
        self.table[self.index_hash.eval_unchecked(i) as usize]
    }

    /// `ω(i)^v`, looked up rather than multiplied out.
    pub fn root_pow(&self, i: u64, v: u64) -> Result<Complex64> {
        let u = self.index_hash.eval(i)?;
        Ok(self.table[((u as u128 * v as u128) % self.q as u128) as usize])
    }

    /// All q roots in exponent order.
    pub fn table(&self) -> &[Complex64] {
        &self.table
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::HashMode;

    fn forced(u: u64, q: u64) -> RootsFamily {
        let h = KWiseHash::from_coefficients(vec![u], 101, 100, q).unwrap();
        RootsFamily::from_hash(h)
    }

    #[test]
    fn quarter_turns_are_exact() {
        assert_eq!(forced(0, 4).root(3).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(forced(1, 4).root(3).unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(forced(2, 4).root(3).unwrap(), Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn table_sums_to_zero_and_has_unit_modulus() {
        for q in [2u64, 3, 8, 36, 64, 257] {
            let f = RootsFamily::new(5, q, HashParams::new(1000, 4, HashMode::Polynomial)).unwrap();
            let sum: Complex64 = f.table().iter().sum();
            assert!(sum.norm() <= 1e-12, "q = {q}: |sum| = {}", sum.norm());
            for w in f.table() {
                assert!((w * w.conj() - 1.0).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn emitted_values_have_unit_modulus() {
        let f = RootsFamily::new(11, 36, HashParams::new(4096, 8, HashMode::Polynomial)).unwrap();
        for i in 0..4096 {
            let w = f.root(i).unwrap();
            assert!(((w * w.conj()).re - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_small_q() {
        assert!(RootsFamily::new(1, 1, HashParams::new(10, 2, HashMode::Polynomial)).is_err());
    }

    #[test]
    fn powers_cancel_on_average() {
        let f = RootsFamily::new(99, 8, HashParams::new(4096, 4, HashMode::Polynomial)).unwrap();
        for v in 1..=3u64 {
            let mean: Complex64 = (0..4096).map(|i| f.root_pow(i, v).unwrap()).sum::<Complex64>() / 4096.0;
            assert!(mean.norm() <= 0.1, "v = {v}: {}", mean.norm());
        }
    }
}
