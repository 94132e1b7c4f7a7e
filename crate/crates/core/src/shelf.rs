//! Shelves: unsampled (HH, AvgEst) pairs of decreasing height and increasing
//! width that estimate items too large for the level hierarchy's
//! thresholds. Shelf 0 is level 0 and is not stored here.

use serde::{Deserialize, Serialize};

use crate::avg_est::AeStructure;
use crate::config::{FpConfig, ShelfDims};
use crate::error::{Result, SketchError};
use crate::ghss::{Assignment, AssignmentKind, Discovery, DropReason};
use crate::hash::HashParams;
use crate::heavy_hitter::CsStructure;
use crate::oracle::NeumaierSum;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct ShelfLevel<S: Scalar> {
    pub dims: ShelfDims,
    pub hh: CsStructure<S>,
    pub ae: AeStructure<S>,
}

impl<S: Scalar> ShelfLevel<S> {
    pub fn new(dims: ShelfDims, q: u64, seeds: (u64, u64), params: HashParams) -> Result<Self> {
        Ok(Self {
            dims,
            hh: CsStructure::new(dims.width, dims.buckets, seeds.0, params)?,
            ae: AeStructure::new(2 * dims.width, dims.buckets, q, seeds.1, params)?,
        })
    }

    #[inline]
    pub fn update_unchecked(&mut self, i: u64, v: S) {
        self.hh.update_unchecked(i, v);
        self.ae.update_unchecked(i, v);
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(SketchError::Incompatible(format!("shelf {} dimensions differ", self.dims.j)));
        }
        self.hh.merge_from(&other.hh)?;
        self.ae.merge_from(&other.ae)
    }

    pub fn cell_count(&self) -> usize {
        self.hh.cell_count() + self.ae.cell_count()
    }
}

/// `U_0..=U_{J+1}` with `U_0 = T_0` and `U_{J+1} = +inf`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShelfThresholds {
    pub u: Vec<f64>,
    pub eps_bar: f64,
}

impl ShelfThresholds {
    pub fn new(f2_hat: f64, b: f64, eps_bar: f64, shelves: &[ShelfDims]) -> Self {
        let mut u = Vec::with_capacity(shelves.len() + 2);
        u.push((f2_hat / b).sqrt());
        u.extend(shelves.iter().map(|d| (f2_hat / d.e).sqrt()));
        u.push(f64::INFINITY);
        Self { u, eps_bar }
    }

    pub fn derive(cfg: &FpConfig, f2_hat: f64) -> Self {
        Self::new(f2_hat, cfg.b, cfg.eps_bar, cfg.active_shelves())
    }

    /// `J`; zero when no shelves are active.
    pub fn count(&self) -> usize {
        self.u.len() - 2
    }

    /// `T_{-1}` for the level hierarchy.
    pub fn level_ceiling(&self) -> f64 {
        self.u[1]
    }

    /// `(1 - eps_bar) U_j <= |x| <= (1 + eps_bar) U_{j+1}`.
    pub fn in_band(&self, j: usize, x: f64) -> bool {
        let a = x.abs();
        a >= (1.0 - self.eps_bar) * self.u[j] && a <= (1.0 + self.eps_bar) * self.u[j + 1]
    }
}

/// Highest shelf `j` in `1..=J` whose band contains the point estimate;
/// `ests[j - 1]` is shelf `j`'s estimate.
pub fn classify_shelf(ests: &[f64], thr: &ShelfThresholds) -> Option<usize> {
    (1..=ests.len().min(thr.count())).rev().find(|&j| thr.in_band(j, ests[j - 1]))
}

/// Band-checks an AvgEst estimate for an item discovered at shelf `j`.
pub fn shelf_assignment(item: u64, j: usize, x: f64, thr: &ShelfThresholds) -> Assignment {
    let discovered = Discovery::Shelf(j);
    if x > 0.0 && thr.in_band(j, x) {
        Assignment { item, discovered, kind: AssignmentKind::Shelf { shelf: j }, estimate: x, scale: 1.0 }
    } else {
        Assignment::dropped(item, discovered, DropReason::OutOfBand, x)
    }
}

/// `Σ X^p` over shelf-kind assignments.
pub fn shelf_contribution(assignments: &[Assignment], p: f64) -> f64 {
    let mut sum = NeumaierSum::default();
    for a in assignments {
        if matches!(a.kind, AssignmentKind::Shelf { .. }) {
            sum.add(a.contribution(p));
        }
    }
    sum.total()
}

/// Cells of shelves `1..=J` as derived, whether or not they are active.
pub fn shelf_cells(cfg: &FpConfig) -> usize {
    cfg.shelves.iter().map(|d| d.buckets * 3 * d.width).sum()
}
