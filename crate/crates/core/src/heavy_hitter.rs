//! CountSketch heavy-hitter tables: `rows` independent repetitions of
//! `buckets` signed accumulators. Point estimates take the median over rows.

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Result, SketchError};
use crate::hash::{derive_seed, HashMode, HashParams, KWiseHash};
use crate::scalar::Scalar;

const TAG_BUCKET: u64 = 0xB0C7;
const TAG_SIGN: u64 = 0x5167;
const MAGIC: &[u8; 4] = b"FPCS";
const VERSION: u16 = 1;

#[derive(Clone, Debug)]
pub struct CsStructure<S: Scalar> {
    rows: usize,
    buckets: usize,
    seed: u64,
    params: HashParams,
    cells: Vec<S>,
    bucket_hashes: Vec<KWiseHash>,
    sign_hashes: Vec<KWiseHash>,
    update_count: u64,
}

impl<S: Scalar> CsStructure<S> {
    pub fn new(rows: usize, buckets: usize, seed: u64, params: HashParams) -> Result<Self> {
        if rows == 0 || buckets == 0 {
            return Err(SketchError::InvalidParameter(format!(
                "count sketch needs rows >= 1 and buckets >= 1, got {rows} x {buckets}"
            )));
        }
        let bucket_hashes = (0..rows)
            .map(|r| KWiseHash::with_params(derive_seed(seed, TAG_BUCKET, r as u64), params, buckets as u64))
            .collect::<Result<Vec<_>>>()?;
        let sign_hashes = (0..rows)
            .map(|r| KWiseHash::with_params(derive_seed(seed, TAG_SIGN, r as u64), params, 2))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rows,
            buckets,
            seed,
            params,
            cells: vec![S::zero(); rows * buckets],
            bucket_hashes,
            sign_hashes,
            update_count: 0,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn buckets(&self) -> usize {
        self.buckets
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

    /// Number of stored measurements.
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[S] {
        &self.cells
    }

    pub fn cell(&self, row: usize, bucket: usize) -> S {
        self.cells[row * self.buckets + bucket]
    }

    /// Bucket and sign of item `i` in `row`.
    #[inline]
    pub fn locate(&self, i: u64, row: usize) -> (usize, S) {
        let b = self.bucket_hashes[row].eval_unchecked(i) as usize;
        let sign = if self.sign_hashes[row].eval_unchecked(i) == 1 { S::one() } else { -S::one() };
        (b, sign)
    }

    fn check(&self, i: u64) -> Result<()> {
        if i >= self.params.domain {
            return Err(SketchError::IndexOutOfDomain { index: i, domain: self.params.domain });
        }
        Ok(())
    }

    pub fn update(&mut self, i: u64, v: S) -> Result<()> {
        self.check(i)?;
        self.update_unchecked(i, v);
        Ok(())
    }

    #[inline]
    pub fn update_unchecked(&mut self, i: u64, v: S) {
        for r in 0..self.rows {
            let (b, sign) = self.locate(i, r);
            self.cells[r * self.buckets + b] += sign * v;
        }
        self.update_count += 1;
    }

    /// Signed single-row estimate `sign_r(i) · cells[r][h_r(i)]`.
    #[inline]
    pub fn row_estimate(&self, i: u64, row: usize) -> f64 {
        let (b, sign) = self.locate(i, row);
        (sign * self.cells[row * self.buckets + b]).as_f64()
    }

    /// Median over rows; the lower median when the row count is even.
    pub fn point_estimate(&self, i: u64) -> f64 {
        let mut buf = Vec::with_capacity(self.rows);
        self.point_estimate_with(i, &mut buf)
    }

    /// As [`point_estimate`](Self::point_estimate) with a caller-owned scratch buffer.
    pub fn point_estimate_with(&self, i: u64, buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.extend((0..self.rows).map(|r| self.row_estimate(i, r)));
        lower_median(buf)
    }

    /// The `k` candidates with the largest `|estimate|`, ties broken by the
    /// smaller index. Asking for more than there are returns them all.
    pub fn topk(&self, k: usize, candidates: impl IntoIterator<Item = u64>) -> Vec<(u64, f64)> {
        let mut buf = Vec::with_capacity(self.rows);
        let scored = candidates.into_iter().map(|i| (i, self.point_estimate_with(i, &mut buf))).collect();
        top_by_magnitude(scored, k)
    }

    pub fn compatible(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.buckets != other.buckets {
            return Err(SketchError::Incompatible(format!(
                "table shapes differ: {}x{} vs {}x{}",
                self.rows, self.buckets, other.rows, other.buckets
            )));
        }
        if self.seed != other.seed || self.params != other.params {
            return Err(SketchError::Incompatible("hash seeds or families differ".into()));
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        self.compatible(other)?;
        for (a, &b) in self.cells.iter_mut().zip(&other.cells) {
            *a += b;
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
        self.cells.iter().map(|c| c.as_f64().abs()).fold(0.0, f64::max)
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
        w.u64(self.update_count);
        for c in &self.cells {
            w.f64(c.as_f64());
        }
    }

    pub fn read_blob(r: &mut ByteReader<'_>) -> Result<Self> {
        r.expect_magic(MAGIC)?;
        let version = r.u16()?;
        if version != VERSION {
            return Err(SketchError::Format(format!("count sketch blob version {version} unsupported")));
        }
        let rows = r.u32()? as usize;
        let buckets = r.u32()? as usize;
        let seed = r.u64()?;
        let k = r.u32()? as usize;
        let domain = r.u64()?;
        let mode = HashMode::from_code(r.u8()?)?;
        let update_count = r.u64()?;
        let mut t = Self::new(rows, buckets, seed, HashParams::new(domain, k, mode))?;
        for c in t.cells.iter_mut() {
            *c = S::from_f64_lossy(r.f64()?);
        }
        t.update_count = update_count;
        Ok(t)
    }
}

/// Lower median, reordering `values` in place. Zero for an empty slice.
pub fn lower_median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mid = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    *m
}

/// Sorts `(index, estimate)` pairs by `|estimate|` descending, then index
/// ascending, and keeps the first `k`.
pub fn top_by_magnitude(mut scored: Vec<(u64, f64)>, k: usize) -> Vec<(u64, f64)> {
    let order = |a: &(u64, f64), b: &(u64, f64)| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0));
    if k < scored.len() {
        if k == 0 {
            return Vec::new();
        }
        scored.select_nth_unstable_by(k - 1, order);
        scored.truncate(k);
    }
    scored.sort_unstable_by(order);
    scored
}
