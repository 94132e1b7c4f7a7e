//! Upper-biased estimate of `F_2 = ||x||_2^2` from a bank of signed hash
//! tables. Each row's sum of squared cells is an unbiased estimate of `F_2`
//! with variance at most `2 F_2^2 / buckets`; the bank reports the lower
//! median over rows, inflated by `1 + kappa`.

use crate::codec::{ByteReader, ByteWriter};
use crate::error::Result;
use crate::hash::HashParams;
use crate::heavy_hitter::{lower_median, CsStructure};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct F2Sketch<S: Scalar> {
    table: CsStructure<S>,
    kappa: f64,
}

impl<S: Scalar> F2Sketch<S> {
    pub fn new(rows: usize, buckets: usize, kappa: f64, seed: u64, params: HashParams) -> Result<Self> {
        Ok(Self { table: CsStructure::new(rows, buckets, seed, params)?, kappa })
    }

    pub fn table(&self) -> &CsStructure<S> {
        &self.table
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    #[inline]
    pub fn update_unchecked(&mut self, i: u64, v: S) {
        self.table.update_unchecked(i, v);
    }

    /// Per-row `Σ_b T[r][b]^2`.
    pub fn row_sums(&self) -> Vec<f64> {
        let b = self.table.buckets();
        self.table.cells().chunks(b).map(|row| row.iter().map(|c| c.as_f64() * c.as_f64()).sum()).collect()
    }

    /// Median row sum without the `1 + kappa` inflation.
    pub fn raw_estimate(&self) -> f64 {
        lower_median(&mut self.row_sums())
    }

    pub fn estimate(&self) -> f64 {
        (1.0 + self.kappa) * self.raw_estimate()
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        self.table.merge_from(&other.table)
    }

    pub fn write_blob(&self, w: &mut ByteWriter) {
        self.table.write_blob(w);
    }

    pub fn read_blob(r: &mut ByteReader<'_>, kappa: f64) -> Result<Self> {
        Ok(Self { table: CsStructure::read_blob(r)?, kappa })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::HashMode;

    #[test]
    fn single_item_is_exact_before_inflation() {
        let mut f = F2Sketch::<f64>::new(5, 64, 0.05, 3, HashParams::new(100, 4, HashMode::Polynomial)).unwrap();
        f.update_unchecked(17, 3.0);
        assert_eq!(f.raw_estimate(), 9.0);
        assert!((f.estimate() - 9.45).abs() < 1e-12);
    }

    #[test]
    fn row_sum_is_unbiased() {
        // Two items: a row sum is 13 when they separate and 13 ± 12 when they
        // share a bucket, so the mean over seeds is 13.
        let trials = 4000;
        let mut total = 0.0;
        for seed in 0..trials {
            let mut f = F2Sketch::<f64>::new(1, 4, 0.0, seed, HashParams::new(100, 4, HashMode::Prf)).unwrap();
            f.update_unchecked(1, 3.0);
            f.update_unchecked(2, 2.0);
            total += f.row_sums()[0];
        }
        let mean = total / trials as f64;
        // per-trial sd <= 12 * sqrt(1/4)
        assert!((mean - 13.0).abs() < 3.0 * 6.0 / (trials as f64).sqrt(), "mean {mean}");
    }
}
