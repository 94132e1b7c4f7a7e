//! Exact recovery of the sparse level-L vector by peeling a CountSketch.
//!
//! The candidate set is known (every item subsampled to level L), so a bucket
//! holding exactly one unresolved candidate yields that candidate's value;
//! subtracting it may expose further singletons. Recovery succeeds iff the
//! residual is zero once peeling stalls.

use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Result, SketchError};
use crate::hash::HashParams;
use crate::heavy_hitter::CsStructure;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct RecoveryStructure<S: Scalar> {
    table: CsStructure<S>,
    capacity: usize,
}

/// Recovered nonzeros, sorted by index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Recovered {
    pub entries: Vec<(u64, f64)>,
    /// Candidates that peeling never isolated; they are implied zero.
    pub unresolved: usize,
}

impl Recovered {
    pub fn get(&self, i: u64) -> f64 {
        self.entries.binary_search_by_key(&i, |e| e.0).map(|k| self.entries[k].1).unwrap_or(0.0)
    }
}

impl<S: Scalar> RecoveryStructure<S> {
    pub fn new(rows: usize, buckets: usize, capacity: usize, seed: u64, params: HashParams) -> Result<Self> {
        Ok(Self { table: CsStructure::new(rows, buckets, seed, params)?, capacity })
    }

    pub fn table(&self) -> &CsStructure<S> {
        &self.table
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn update_unchecked(&mut self, i: u64, v: S) {
        self.table.update_unchecked(i, v);
    }

    pub fn update(&mut self, i: u64, v: S) -> Result<()> {
        self.table.update(i, v)
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.capacity != other.capacity {
            return Err(SketchError::Incompatible("recovery capacities differ".into()));
        }
        self.table.merge_from(&other.table)
    }

    /// Absolute tolerance below which a recovered value or residual cell is
    /// treated as zero.
    fn tolerance(&self) -> f64 {
        let scale = self.table.max_abs_cell().max(1.0);
        scale * 1e3 * S::epsilon().as_f64()
    }

    pub fn recover(&self, candidates: impl IntoIterator<Item = u64>) -> Result<Recovered> {
        let rows = self.table.rows();
        let nb = self.table.buckets();
        let mut cands: Vec<u64> = candidates.into_iter().collect();
        cands.sort_unstable();
        cands.dedup();

        let mut residual: Vec<f64> = self.table.cells().iter().map(|c| c.as_f64()).collect();
        let mut count = vec![0u32; rows * nb];
        let mut xor = vec![0usize; rows * nb];
        let mut locs = Vec::with_capacity(cands.len() * rows);
        for (c, &i) in cands.iter().enumerate() {
            for r in 0..rows {
                let (b, sign) = self.table.locate(i, r);
                let cell = r * nb + b;
                locs.push((cell, sign.as_f64()));
                count[cell] += 1;
                xor[cell] ^= c;
            }
        }

        let mut queue: Vec<usize> = (0..rows * nb).filter(|&k| count[k] == 1).collect();
        let mut value: Vec<Option<f64>> = vec![None; cands.len()];
        while let Some(cell) = queue.pop() {
            if count[cell] != 1 {
                continue;
            }
            let c = xor[cell];
            let (_, sign) = locs[c * rows + cell / nb];
            let v = sign * residual[cell];
            value[c] = Some(v);
            for &(k, sgn) in &locs[c * rows..(c + 1) * rows] {
                residual[k] -= sgn * v;
                count[k] -= 1;
                xor[k] ^= c;
                if count[k] == 1 {
                    queue.push(k);
                }
            }
        }

        let tol = self.tolerance();
        let unresolved = value.iter().filter(|v| v.is_none()).count();
        let worst = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if worst > 16.0 * tol {
            return Err(SketchError::RecoveryFailed(format!(
                "peeling stalled with {unresolved} of {} candidates unresolved (residual {worst:.3e})",
                cands.len()
            )));
        }
        let entries: Vec<(u64, f64)> =
            cands.iter().zip(&value).filter_map(|(&i, v)| v.filter(|v| v.abs() > tol).map(|v| (i, v))).collect();
        if entries.len() > self.capacity {
            return Err(SketchError::RecoveryFailed(format!(
                "{} nonzeros exceed level capacity {}",
                entries.len(),
                self.capacity
            )));
        }
        Ok(Recovered { entries, unresolved })
    }

    pub fn write_blob(&self, w: &mut ByteWriter) {
        w.u64(self.capacity as u64);
        self.table.write_blob(w);
    }

    pub fn read_blob(r: &mut ByteReader<'_>) -> Result<Self> {
        let capacity = r.u64()? as usize;
        Ok(Self { capacity, table: CsStructure::read_blob(r)? })
    }
}
