//! Cell counts derived from a configuration, without allocating tables. A
//! complex AvgEst cell counts as one measurement.

use serde::Serialize;

use crate::config::{ConfigSpec, FpConfig, ShelfMode};
use crate::error::Result;
use crate::hash::ceil_log2;

/// Confidence of one copy of the median-amplified baseline.
pub const BASELINE_DELTA: f64 = 0.125;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MeasurementReport {
    pub cells_ghss: usize,
    pub cells_shelf: usize,
    pub cells_f2: usize,
    pub total: usize,
    /// `ceil(log2(1/delta))` independent constant-confidence copies (levels
    /// and F2 bank, no shelves) at `delta = 1/8`.
    pub baseline_total: usize,
}

pub fn ghss_cells(cfg: &FpConfig) -> usize {
    let levels: usize = cfg.buckets.iter().map(|b| b * 3 * cfg.s).sum();
    levels + cfg.recovery_rows * cfg.recovery_buckets
}

pub fn f2_cells(cfg: &FpConfig) -> usize {
    if cfg.overrides().exact_f2 {
        0
    } else {
        cfg.f2_rows * cfg.f2_buckets
    }
}

pub fn active_shelf_cells(cfg: &FpConfig) -> usize {
    cfg.active_shelves().iter().map(|d| d.buckets * 3 * d.width).sum()
}

pub fn measurement_report(cfg: &FpConfig) -> Result<MeasurementReport> {
    let cells_ghss = ghss_cells(cfg);
    let cells_shelf = active_shelf_cells(cfg);
    let cells_f2 = f2_cells(cfg);
    let mut overrides = *cfg.overrides();
    overrides.shelves = ShelfMode::Off;
    let copy = FpConfig::derive(ConfigSpec { delta: BASELINE_DELTA, overrides, ..cfg.spec })?;
    let copies = ceil_log2(1.0 / cfg.delta()).max(1) as usize;
    Ok(MeasurementReport {
        cells_ghss,
        cells_shelf,
        cells_f2,
        total: cells_ghss + cells_shelf + cells_f2,
        baseline_total: copies * (ghss_cells(&copy) + f2_cells(&copy)),
    })
}
