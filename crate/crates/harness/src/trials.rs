//! Monte Carlo trial runner: one fresh sketch seed per trial, the same data
//! every time, failures judged against the exact oracle.

use std::io::Write;
use std::time::Instant;

use fpsketch::hash::derive_seed;
use fpsketch::oracle::exact_fp;
use fpsketch::{FpConfig, FpSketch64};
use rayon::prelude::*;
use serde::Serialize;

use crate::{HarnessError, Result};

const TAG_TRIAL: u64 = 0x7121;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub exact: f64,
    pub estimate: f64,
    pub rel_error: f64,
    pub failed: bool,
    /// Set when estimation returned an error (counted as a failure).
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialStats {
    pub trials: usize,
    pub failures: usize,
    pub errors: usize,
    pub failure_rate: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub wall_secs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialReport {
    pub stats: TrialStats,
    pub rows: Vec<TrialRow>,
}

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    derive_seed(base, TAG_TRIAL, trial as u64)
}

/// Sketches `x` under `trials` independent seeds and compares each estimate
/// with `F_p(x)`. In exact-F2 mode the oracle `F_2` is supplied to the
/// estimator.
pub fn run_trials(cfg: &FpConfig, x: &[f64], trials: usize, parallelism: usize, seed_base: u64) -> Result<TrialReport> {
    if trials == 0 {
        return Err(HarnessError::Instance("trials must be >= 1".into()));
    }
    if x.len() as u64 != cfg.n() {
        return Err(HarnessError::Instance(format!("vector length {} != n = {}", x.len(), cfg.n())));
    }
    let start = Instant::now();
    let exact = exact_fp(x, cfg.p());
    let f2 = exact_fp(x, 2.0);
    let updates: Vec<(u64, f64)> =
        x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (i as u64, v)).collect();
    let eps = cfg.eps();
    let one = |t: usize| -> Result<TrialRow> {
        let seed = trial_seed(seed_base, t);
        let mut sk = FpSketch64::new(cfg.clone(), seed)?;
        sk.extend(updates.iter().copied())?;
        let est = if cfg.overrides().exact_f2 { sk.estimate_fp_with_f2(f2) } else { sk.estimate_fp() };
        Ok(match est {
            Ok(e) => {
                let rel = relative_error(e.value, exact);
                TrialRow { trial: t, seed, exact, estimate: e.value, rel_error: rel, failed: rel > eps, error: None }
            }
            Err(err) => TrialRow {
                trial: t,
                seed,
                exact,
                estimate: f64::NAN,
                rel_error: f64::INFINITY,
                failed: true,
                error: Some(err.to_string()),
            },
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let rows = pool.install(|| (0..trials).into_par_iter().map(one).collect::<Result<Vec<_>>>())?;
    let stats = summarize(&rows, start.elapsed().as_secs_f64());
    Ok(TrialReport { stats, rows })
}

fn relative_error(est: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        if est == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (est - exact).abs() / exact
    }
}

pub fn summarize(rows: &[TrialRow], wall_secs: f64) -> TrialStats {
    let mut errs: Vec<f64> = rows.iter().map(|r| r.rel_error).collect();
    errs.sort_by(f64::total_cmp);
    let failures = rows.iter().filter(|r| r.failed).count();
    TrialStats {
        trials: rows.len(),
        failures,
        errors: rows.iter().filter(|r| r.error.is_some()).count(),
        failure_rate: failures as f64 / rows.len().max(1) as f64,
        p50: quantile(&errs, 0.5),
        p90: quantile(&errs, 0.9),
        p99: quantile(&errs, 0.99),
        wall_secs,
    }
}

/// Nearest-rank quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

pub fn write_csv(rows: &[TrialRow], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["trial", "seed", "F_p", "F_p_hat", "rel_error", "failed", "error"])?;
    for r in rows {
        out.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.exact.to_string(),
            r.estimate.to_string(),
            r.rel_error.to_string(),
            r.failed.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(quantile(&v, 0.5), 0.2);
        assert_eq!(quantile(&v, 0.99), 0.4);
        assert_eq!(quantile(&v, 0.0), 0.1);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn relative_error_edges() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!(relative_error(1.0, 0.0).is_infinite());
        assert_eq!(relative_error(9.0, 10.0), 0.1);
    }
}
