//! The subsampled level hierarchy: thresholds, discovery, margin sampling and
//! the per-item records that feed the final sum.

mod recovery;

pub use recovery::{Recovered, RecoveryStructure};

use serde::{Deserialize, Serialize};

use crate::avg_est::AeStructure;
use crate::config::FpConfig;
use crate::error::{Result, SketchError};
use crate::hash::{coin, HashParams};
use crate::heavy_hitter::CsStructure;
use crate::oracle::NeumaierSum;
use crate::scalar::Scalar;

/// HH and AvgEst tables of one subsampled level.
#[derive(Clone, Debug)]
pub struct GhssLevel<S: Scalar> {
    pub level: usize,
    pub height: usize,
    pub hh: CsStructure<S>,
    pub ae: AeStructure<S>,
}

impl<S: Scalar> GhssLevel<S> {
    pub fn new(
        level: usize,
        height: usize,
        buckets: usize,
        rows: usize,
        q: u64,
        seeds: (u64, u64),
        params: HashParams,
    ) -> Result<Self> {
        Ok(Self {
            level,
            height,
            hh: CsStructure::new(rows, buckets, seeds.0, params)?,
            ae: AeStructure::new(2 * rows, buckets, q, seeds.1, params)?,
        })
    }

    #[inline]
    pub fn update_unchecked(&mut self, i: u64, v: S) {
        self.hh.update_unchecked(i, v);
        self.ae.update_unchecked(i, v);
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        if self.level != other.level || self.height != other.height {
            return Err(SketchError::Incompatible(format!("level {} vs {}", self.level, other.level)));
        }
        self.hh.merge_from(&other.hh)?;
        self.ae.merge_from(&other.ae)
    }

    pub fn cell_count(&self) -> usize {
        self.hh.cell_count() + self.ae.cell_count()
    }
}

/// Level thresholds `T_l` and margins `Q_l`, with `T_L = 0+` and `T_{-1}`
/// (`top`) equal to `U_1` when shelves are active and `+inf` otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub f2_hat: f64,
    pub b: f64,
    pub eps_bar: f64,
    /// `T_0..=T_L`; the last entry is 0.
    pub t: Vec<f64>,
    /// `Q_0..=Q_L`; the last entry is 0.
    pub q: Vec<f64>,
    pub top: f64,
}

impl Thresholds {
    pub fn new(f2_hat: f64, b: f64, alpha: f64, eps_bar: f64, levels: usize, top: f64) -> Result<Self> {
        if !(f2_hat > 0.0) || !f2_hat.is_finite() {
            return Err(SketchError::InvalidParameter(format!("F2 estimate must be positive, got {f2_hat}")));
        }
        if !(b > 0.0) {
            return Err(SketchError::InvalidParameter(format!("B must be positive, got {b}")));
        }
        let t0 = (f2_hat / b).sqrt();
        let mut t: Vec<f64> = (0..levels).map(|l| t0 * (2.0 * alpha).powf(-(l as f64) / 2.0)).collect();
        t.push(0.0);
        let q = t.iter().map(|&x| x * (1.0 - eps_bar)).collect();
        Ok(Self { f2_hat, b, eps_bar, t, q, top })
    }

    pub fn derive(cfg: &FpConfig, f2_hat: f64, top: f64) -> Result<Self> {
        Self::new(f2_hat, cfg.b, cfg.alpha, cfg.eps_bar, cfg.levels, top)
    }

    pub fn levels(&self) -> usize {
        self.t.len() - 1
    }

    pub fn t0(&self) -> f64 {
        self.t[0]
    }

    /// `T_{l-1}`, with `T_{-1} = top`.
    pub fn upper(&self, l: usize) -> f64 {
        if l == 0 {
            self.top
        } else {
            self.t[l - 1]
        }
    }

    /// `T_l (1 - eps_bar) < |x| <= T_{l-1} (1 + eps_bar)`.
    pub fn in_discovery_band(&self, l: usize, xhat: f64) -> bool {
        let a = xhat.abs();
        a > self.q[l] && a <= self.upper(l) * (1.0 + self.eps_bar)
    }

    /// `(1 - eps_bar) T_l <= X < (1 + eps_bar) T_{l-1}`.
    pub fn in_estimate_band(&self, l: usize, x: f64) -> bool {
        x > 0.0 && x >= (1.0 - self.eps_bar) * self.t[l] && x < (1.0 + self.eps_bar) * self.upper(l)
    }
}

/// Where an item was discovered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "at", content = "index")]
pub enum Discovery {
    Shelf(usize),
    Level(usize),
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    NoCollision,
    OutOfBand,
    NotDiscovered,
    CoinTails,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AssignmentKind {
    /// Sampled into group `group` of the level hierarchy.
    Level {
        group: usize,
    },
    Shelf {
        shelf: usize,
    },
    Dropped {
        reason: DropReason,
    },
}

/// Outcome for one discovered item. `scale * estimate^p` is its contribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub item: u64,
    pub discovered: Discovery,
    pub kind: AssignmentKind,
    pub estimate: f64,
    pub scale: f64,
}

impl Assignment {
    pub fn dropped(item: u64, discovered: Discovery, reason: DropReason, estimate: f64) -> Self {
        Self { item, discovered, kind: AssignmentKind::Dropped { reason }, estimate, scale: 0.0 }
    }

    pub fn contribution(&self, p: f64) -> f64 {
        match self.kind {
            AssignmentKind::Dropped { .. } => 0.0,
            _ => self.scale * self.estimate.powf(p),
        }
    }
}

/// Smallest level `l <= L` whose discovery band contains the estimate.
/// `level_ests[l]` is the level-`l` estimate and is only supplied for levels
/// the item is subsampled to.
pub fn discover_level(level_ests: &[f64], thr: &Thresholds) -> Option<usize> {
    level_ests.iter().enumerate().find(|&(l, &x)| thr.in_discovery_band(l, x)).map(|(l, _)| l)
}

/// Group an item discovered at `l_d` lands in: `Some(l_d)` above `T_{l_d}`,
/// `Some(l_d + 1)` on a heads toss in the margin, `None` on tails.
pub fn margin_group(l_d: usize, xhat: f64, thr: &Thresholds, heads: bool) -> Option<usize> {
    if xhat.abs() >= thr.t[l_d] {
        Some(l_d)
    } else if heads {
        Some(l_d + 1)
    } else {
        None
    }
}

/// Applies the margin coin and then the estimate band to an item discovered
/// at `l_d` with point estimate `xhat` and AvgEst estimate `x`.
pub fn sample_into_group(item: u64, l_d: usize, xhat: f64, x: f64, thr: &Thresholds, coin_seed: u64) -> Assignment {
    let discovered = Discovery::Level(l_d);
    let Some(group) = margin_group(l_d, xhat, thr, coin(coin_seed, item)) else {
        return Assignment::dropped(item, discovered, DropReason::CoinTails, x);
    };
    if !thr.in_estimate_band(l_d, x) {
        return Assignment::dropped(item, discovered, DropReason::OutOfBand, x);
    }
    Assignment { item, discovered, kind: AssignmentKind::Level { group }, estimate: x, scale: 2f64.powi(group as i32) }
}

/// `Σ scale · X^p` over level-kind assignments.
pub fn ghss_contribution(assignments: &[Assignment], p: f64) -> f64 {
    let mut sum = NeumaierSum::default();
    for a in assignments {
        if matches!(a.kind, AssignmentKind::Level { .. }) {
            sum.add(a.contribution(p));
        }
    }
    sum.total()
}
