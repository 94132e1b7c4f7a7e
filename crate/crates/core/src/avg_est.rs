//! AvgEst tables: CountSketch layout with random q-th roots of unity in place
//! of random signs. The estimate of `|x_i|` averages the de-rotated buckets
//! over the rows where `i` shares no bucket with a blocked (heavy) item.

use std::collections::HashSet;

use num_complex::Complex;

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Result, SketchError};
use crate::hash::{derive_seed, HashMode, HashParams, KWiseHash, RootsFamily};
use crate::scalar::Scalar;

const TAG_BUCKET: u64 = 0xAE_B0C7;
const TAG_ROOT: u64 = 0xAE_2007;
const MAGIC: &[u8; 4] = b"FPAE";
const VERSION: u16 = 1;

#[derive(Clone, Debug)]
pub struct AeStructure<S: Scalar> {
    rows: usize,
    buckets: usize,
    q: u64,
    seed: u64,
    params: HashParams,
    cells: Vec<Complex<S>>,
    bucket_hashes: Vec<KWiseHash>,
    roots: Vec<RootsFamily>,
    update_count: u64,
}

/// Rows of an AvgEst table in which an item is free of blocked items.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollisionReport {
    pub item: u64,
    pub free_rows: Vec<usize>,
    pub rows: usize,
    /// Size of the blocked set the report was computed against.
    pub blocked: usize,
}

impl CollisionReport {
    /// NOCOLLISION: at least half of the rows are free.
    pub fn no_collision(&self) -> bool {
        !self.free_rows.is_empty() && self.free_rows.len() >= self.rows.div_ceil(2)
    }
}

/// The averaged estimate. `re` is the estimate of `|x_i|`; `im` is zero-mean
/// noise kept for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AvgEstimate {
    pub re: f64,
    pub im: f64,
    pub rows_used: usize,
}

/// Per-row bucket occupancy of a blocked set, reusable across many queries.
#[derive(Clone, Debug)]
pub struct BlockedIndex {
    counts: Vec<u32>,
    members: HashSet<u64>,
    buckets: usize,
}

impl<S: Scalar> AeStructure<S> {
    pub fn new(rows: usize, buckets: usize, q: u64, seed: u64, params: HashParams) -> Result<Self> {
        if rows == 0 || buckets == 0 {
            return Err(SketchError::InvalidParameter(format!(
                "AvgEst needs rows >= 1 and buckets >= 1, got {rows} x {buckets}"
            )));
        }
        if !rows.is_multiple_of(2) {
            return Err(SketchError::InvalidParameter(format!("AvgEst row count must be even, got {rows}")));
        }
        let bucket_hashes = (0..rows)
            .map(|r| KWiseHash::with_params(derive_seed(seed, TAG_BUCKET, r as u64), params, buckets as u64))
            .collect::<Result<Vec<_>>>()?;
        let roots = (0..rows)
            .map(|r| RootsFamily::new(derive_seed(seed, TAG_ROOT, r as u64), q, params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rows,
            buckets,
            q,
            seed,
            params,
            cells: vec![Complex::new(S::zero(), S::zero()); rows * buckets],
            bucket_hashes,
            roots,
            update_count: 0,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> HashParams {
        self.params
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Complex<S>] {
        &self.cells
    }

    pub fn cell(&self, row: usize, bucket: usize) -> Complex<S> {
        self.cells[row * self.buckets + bucket]
    }

    pub fn roots(&self, row: usize) -> &RootsFamily {
        &self.roots[row]
    }

    #[inline]
    pub fn bucket_of(&self, i: u64, row: usize) -> usize {
        self.bucket_hashes[row].eval_unchecked(i) as usize
    }

    pub fn update(&mut self, i: u64, v: S) -> Result<()> {
        if i >= self.params.domain {
            return Err(SketchError::IndexOutOfDomain { index: i, domain: self.params.domain });
        }
        self.update_unchecked(i, v);
        Ok(())
    }

    #[inline]
    pub fn update_unchecked(&mut self, i: u64, v: S) {
        for r in 0..self.rows {
            let b = self.bucket_of(i, r);
            let w = self.roots[r].root_unchecked(i);
            let cell = &mut self.cells[r * self.buckets + b];
            cell.re += v * S::from_f64_lossy(w.re);
            cell.im += v * S::from_f64_lossy(w.im);
        }
        self.update_count += 1;
    }

    /// Indexes `blocked` for repeated collision queries.
    pub fn blocked_index(&self, blocked: &[u64]) -> BlockedIndex {
        let mut counts = vec![0u32; self.rows * self.buckets];
        let mut members = HashSet::with_capacity(blocked.len());
        for &j in blocked {
            if !members.insert(j) {
                continue;
            }
            for r in 0..self.rows {
                counts[r * self.buckets + self.bucket_of(j, r)] += 1;
            }
        }
        BlockedIndex { counts, members, buckets: self.buckets }
    }

    /// Rows where no blocked item other than `i` itself lands in `i`'s bucket.
    pub fn collision_free_rows(&self, i: u64, blocked: &[u64]) -> CollisionReport {
        self.collision_free_rows_indexed(i, &self.blocked_index(blocked))
    }

    pub fn collision_free_rows_indexed(&self, i: u64, index: &BlockedIndex) -> CollisionReport {
        debug_assert_eq!(index.buckets, self.buckets);
        let own = index.members.contains(&i) as u32;
        let free_rows =
            (0..self.rows).filter(|&r| index.counts[r * self.buckets + self.bucket_of(i, r)] == own).collect();
        CollisionReport { item: i, free_rows, rows: self.rows, blocked: index.members.len() }
    }

    /// `(1/|R|) Σ_{r ∈ R} T_r[h_r(i)] · conj(ω_r(i)) · sign` over the free rows.
    pub fn avg_estimate(&self, report: &CollisionReport, sign: f64) -> Result<AvgEstimate> {
        if report.free_rows.is_empty() {
            return Err(SketchError::NoCollisionFreeRow(report.item));
        }
        let i = report.item;
        let mut acc = Complex::new(0.0f64, 0.0f64);
        for &r in &report.free_rows {
            let c = self.cells[r * self.buckets + self.bucket_of(i, r)];
            let c = Complex::new(c.re.as_f64(), c.im.as_f64());
            acc += c * self.roots[r].root_unchecked(i).conj();
        }
        let m = report.free_rows.len() as f64;
        let sign = if sign < 0.0 { -1.0 } else { 1.0 };
        Ok(AvgEstimate { re: sign * acc.re / m, im: sign * acc.im / m, rows_used: report.free_rows.len() })
    }

    /// Median-of-rows estimate of `|x_i|` over the same free rows, for
    /// comparison against the averaged estimator.
    pub fn median_estimate(&self, report: &CollisionReport, sign: f64) -> Result<f64> {
        if report.free_rows.is_empty() {
            return Err(SketchError::NoCollisionFreeRow(report.item));
        }
        let i = report.item;
        let mut vals: Vec<f64> = report
            .free_rows
            .iter()
            .map(|&r| {
                let c = self.cells[r * self.buckets + self.bucket_of(i, r)];
                let c = Complex::new(c.re.as_f64(), c.im.as_f64());
                (c * self.roots[r].root_unchecked(i).conj()).re
            })
            .collect();
        let sign = if sign < 0.0 { -1.0 } else { 1.0 };
        Ok(sign * crate::heavy_hitter::lower_median(&mut vals))
    }

    pub fn compatible(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.buckets != other.buckets || self.q != other.q {
            return Err(SketchError::Incompatible(format!(
                "AvgEst shapes differ: {}x{} (q={}) vs {}x{} (q={})",
                self.rows, self.buckets, self.q, other.rows, other.buckets, other.q
            )));
        }
        if self.seed != other.seed || self.params != other.params {
            return Err(SketchError::Incompatible("AvgEst seeds or families differ".into()));
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        self.compatible(other)?;
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.re += b.re;
            a.im += b.im;
        }
        self.update_count += other.update_count;
        Ok(())
    }

    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn max_abs_cell(&self) -> f64 {
        self.cells.iter().map(|c| c.re.as_f64().hypot(c.im.as_f64())).fold(0.0, f64::max)
    }

    pub fn write_blob(&self, w: &mut ByteWriter) {
        w.bytes(MAGIC);
        w.u16(VERSION);
        w.u32(self.rows as u32);
        w.u32(self.buckets as u32);
        w.u64(self.seed);
        w.u32(self.params.k as u32);
        w.u64(self.params.domain);
        w.u8(self.params.mode.code());
        w.u64(self.q);
        w.u64(self.update_count);
        for c in &self.cells {
            w.f64(c.re.as_f64());
            w.f64(c.im.as_f64());
        }
    }

    pub fn read_blob(r: &mut ByteReader<'_>) -> Result<Self> {
        r.expect_magic(MAGIC)?;
        let version = r.u16()?;
        if version != VERSION {
            return Err(SketchError::Format(format!("AvgEst blob version {version} unsupported")));
        }
        let rows = r.u32()? as usize;
        let buckets = r.u32()? as usize;
        let seed = r.u64()?;
        let k = r.u32()? as usize;
        let domain = r.u64()?;
        let mode = HashMode::from_code(r.u8()?)?;
        let q = r.u64()?;
        let update_count = r.u64()?;
        let mut t = Self::new(rows, buckets, q, seed, HashParams::new(domain, k, mode))?;
        for c in t.cells.iter_mut() {
            c.re = S::from_f64_lossy(r.f64()?);
            c.im = S::from_f64_lossy(r.f64()?);
        }
        t.update_count = update_count;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heavy_hitter::CsStructure;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(domain: u64, mode: HashMode) -> HashParams {
        HashParams::new(domain, 6, mode)
    }

    #[test]
    fn update_and_negation_cancel() {
        let mut t = AeStructure::<f64>::new(4, 16, 8, 1, params(100, HashMode::Polynomial)).unwrap();
        t.update(5, 2.5).unwrap();
        t.update(5, -2.5).unwrap();
        assert!(t.max_abs_cell() <= 1e-9);
    }

    #[test]
    fn rejects_odd_rows() {
        assert!(AeStructure::<f64>::new(3, 16, 8, 1, params(100, HashMode::Polynomial)).is_err());
    }

    #[test]
    fn quarter_root_rotates_the_value() {
        let h = KWiseHash::from_coefficients(vec![1], 101, 100, 4).unwrap();
        let mut t = AeStructure::<f64>::new(2, 1, 4, 1, params(100, HashMode::Polynomial)).unwrap();
        t.roots = vec![RootsFamily::from_hash(h.clone()), RootsFamily::from_hash(h)];
        t.update(7, 3.0).unwrap();
        assert_eq!(t.cell(0, 0), Complex::new(0.0, 3.0));
    }

    #[test]
    fn lone_item_estimates_are_exact() {
        let mut t = AeStructure::<f64>::new(6, 32, 16, 3, params(1000, HashMode::Polynomial)).unwrap();
        t.update(77, 5.0).unwrap();
        let rep = t.collision_free_rows(77, &[]);
        assert_eq!(rep.free_rows.len(), 6);
        let est = t.avg_estimate(&rep, 1.0).unwrap();
        assert!((est.re - 5.0).abs() < 1e-12 && est.im.abs() < 1e-12);

        let mut t = AeStructure::<f64>::new(6, 32, 16, 3, params(1000, HashMode::Polynomial)).unwrap();
        t.update(77, -5.0).unwrap();
        let rep = t.collision_free_rows(77, &[]);
        assert!((t.avg_estimate(&rep, -1.0).unwrap().re - 5.0).abs() < 1e-12);
    }

    #[test]
    fn forced_collision_leaves_no_free_rows() {
        let t = AeStructure::<f64>::new(4, 1, 8, 3, params(100, HashMode::Polynomial)).unwrap();
        let rep = t.collision_free_rows(1, &[2]);
        assert!(rep.free_rows.is_empty());
        assert!(!rep.no_collision());
        assert!(matches!(t.avg_estimate(&rep, 1.0), Err(SketchError::NoCollisionFreeRow(1))));
        // an item never blocks itself
        let rep = t.collision_free_rows(1, &[1]);
        assert_eq!(rep.free_rows.len(), 4);
    }

    /// 16 blocked items over 256 buckets: each row is free with probability
    /// (1 - 1/256)^16 exactly, so the mean free-row count over seeds sits
    /// within 3 standard errors of 18 · (255/256)^16.
    #[test]
    fn mean_free_rows_matches_exact_expectation() {
        let rows = 18usize;
        let p_free = (255.0f64 / 256.0).powi(16);
        let expect = rows as f64 * p_free;
        let trials = 500;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sum = 0.0;
        for seed in 0..trials {
            let t = AeStructure::<f64>::new(rows, 256, 8, seed, params(1 << 16, HashMode::Prf)).unwrap();
            let blocked: Vec<u64> = (0..16).map(|_| rng.random_range(1..1u64 << 16)).collect();
            sum += t.collision_free_rows(0, &blocked).free_rows.len() as f64;
        }
        let mean = sum / trials as f64;
        let se = (rows as f64 * p_free * (1.0 - p_free) / trials as f64).sqrt();
        assert!(mean >= 16.0);
        assert!((mean - expect).abs() <= 3.0 * se, "mean {mean} vs {expect} (se {se})");
    }

    #[test]
    fn merge_matches_resketch() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = params(500, HashMode::Polynomial);
        let mut a = AeStructure::<f64>::new(4, 32, 12, 9, p).unwrap();
        let mut b = a.clone();
        let mut whole = a.clone();
        for k in 0..200 {
            let i = rng.random_range(0..500u64);
            let v: f64 = rng.random_range(-10.0..10.0);
            whole.update(i, v).unwrap();
            if k % 2 == 0 {
                a.update(i, v).unwrap()
            } else {
                b.update(i, v).unwrap()
            }
        }
        let m = a.merge(&b).unwrap();
        for (x, y) in m.cells().iter().zip(whole.cells()) {
            assert!((x - y).norm() <= 1e-9);
        }
        let other = AeStructure::<f64>::new(4, 32, 12, 10, p).unwrap();
        assert!(a.merge(&other).is_err());
    }

    #[test]
    fn blob_round_trip() {
        let mut a = AeStructure::<f64>::new(2, 8, 5, 4, params(50, HashMode::Prf)).unwrap();
        a.update(3, 1.5).unwrap();
        let mut w = ByteWriter::new();
        a.write_blob(&mut w);
        let bytes = w.into_inner();
        let b = AeStructure::<f64>::read_blob(&mut ByteReader::new(&bytes)).unwrap();
        assert_eq!(a.cells(), b.cells());
    }

    /// Planted spike over Gaussian noise: the averaged estimator is unbiased
    /// for |x_i|, and its p-th power is nearly unbiased.
    #[test]
    fn planted_spike_mean_is_unbiased() {
        use rand_distr::{Distribution, StandardNormal};
        let n = 4096u64;
        let spike = 50.0;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let item = 1234u64;
        let trials = 2000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for seed in 0..trials {
            let p = params(n, HashMode::Prf);
            let mut hh = CsStructure::<f64>::new(9, 512, seed ^ 0xABCD, p).unwrap();
            let mut ae = AeStructure::<f64>::new(18, 512, 36, seed, p).unwrap();
            for i in 0..n {
                let v = if i == item { -spike } else { noise[i as usize] };
                hh.update(i, v).unwrap();
                ae.update(i, v).unwrap();
            }
            let blocked: Vec<u64> = hh.topk(32, 0..n).into_iter().map(|(i, _)| i).collect();
            let rep = ae.collision_free_rows(item, &blocked);
            let sign = hh.point_estimate(item).signum();
            let x = ae.avg_estimate(&rep, sign).unwrap().re;
            s1 += x;
            s2 += x * x;
        }
        let mean = s1 / trials as f64;
        let se = ((s2 / trials as f64 - mean * mean) / trials as f64).sqrt();
        assert!((mean - spike).abs() <= 3.0 * se, "mean {mean}, se {se}");
    }
}
