//! The full linear sketch and its estimation pipeline.

use serde::Serialize;

use crate::avg_est::BlockedIndex;
use crate::codec::{ByteReader, ByteWriter};
use crate::config::{ConfigSpec, FpConfig};
use crate::error::{Result, SketchError};
use crate::f2::F2Sketch;
use crate::ghss::{
    discover_level, ghss_contribution, margin_group, sample_into_group, Assignment, Discovery, DropReason, GhssLevel,
    Recovered, RecoveryStructure, Thresholds,
};
use crate::hash::{coin, derive_seed, SubsampleHashes};
use crate::heavy_hitter::{top_by_magnitude, CsStructure};
use crate::scalar::Scalar;
use crate::shelf::{classify_shelf, shelf_assignment, shelf_contribution, ShelfLevel, ShelfThresholds};

const MAGIC: &[u8; 4] = b"FPSK";
const VERSION: u16 = 1;

const TAG_F2: u64 = 0xF2;
const TAG_SUB: u64 = 0x5B;
const TAG_LEVEL_HH: u64 = 0x1E_01;
const TAG_LEVEL_AE: u64 = 0x1E_02;
const TAG_RECOVERY: u64 = 0x1E_03;
const TAG_SHELF_HH: u64 = 0x5E_01;
const TAG_SHELF_AE: u64 = 0x5E_02;
const TAG_COIN: u64 = 0xC0;

#[derive(Clone, Debug)]
pub struct FpSketch<S: Scalar> {
    config: FpConfig,
    seed: u64,
    f2: Option<F2Sketch<S>>,
    subsample: SubsampleHashes,
    levels: Vec<GhssLevel<S>>,
    recovery: RecoveryStructure<S>,
    shelves: Vec<ShelfLevel<S>>,
    update_count: u64,
}

/// Estimate plus everything needed to audit it.
#[derive(Clone, Debug, Serialize)]
pub struct FpEstimate {
    pub value: f64,
    pub f2_hat: f64,
    pub shelf_part: f64,
    pub ghss_part: f64,
    pub thresholds: Option<Thresholds>,
    pub shelf_thresholds: Option<ShelfThresholds>,
    pub recovered_nonzeros: usize,
    pub assignments: Vec<Assignment>,
}

impl FpEstimate {
    fn zero(f2_hat: f64) -> Self {
        Self {
            value: 0.0,
            f2_hat,
            shelf_part: 0.0,
            ghss_part: 0.0,
            thresholds: None,
            shelf_thresholds: None,
            recovered_nonzeros: 0,
            assignments: Vec::new(),
        }
    }

    pub fn count(&self, pred: impl Fn(&Assignment) -> bool) -> usize {
        self.assignments.iter().filter(|a| pred(a)).count()
    }
}

impl<S: Scalar> FpSketch<S> {
    pub fn new(config: FpConfig, seed: u64) -> Result<Self> {
        let params = config.hash_params();
        let f2 = if config.overrides().exact_f2 {
            None
        } else {
            Some(F2Sketch::new(
                config.f2_rows,
                config.f2_buckets,
                config.overrides().kappa,
                derive_seed(seed, TAG_F2, 0),
                params,
            )?)
        };
        let subsample = SubsampleHashes::new(config.levels, params, |l| derive_seed(seed, TAG_SUB, l as u64))?;
        let levels = (0..config.levels)
            .map(|l| {
                let seeds = (derive_seed(seed, TAG_LEVEL_HH, l as u64), derive_seed(seed, TAG_LEVEL_AE, l as u64));
                GhssLevel::new(l, config.heights[l], config.buckets[l], config.s, config.q, seeds, params)
            })
            .collect::<Result<Vec<_>>>()?;
        let recovery = RecoveryStructure::new(
            config.recovery_rows,
            config.recovery_buckets,
            config.recovery_capacity,
            derive_seed(seed, TAG_RECOVERY, 0),
            params,
        )?;
        let shelves = config
            .active_shelves()
            .iter()
            .map(|&d| {
                let seeds = (derive_seed(seed, TAG_SHELF_HH, d.j as u64), derive_seed(seed, TAG_SHELF_AE, d.j as u64));
                ShelfLevel::new(d, config.q, seeds, params)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { config, seed, f2, subsample, levels, recovery, shelves, update_count: 0 })
    }

    pub fn config(&self) -> &FpConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    pub fn f2_sketch(&self) -> Option<&F2Sketch<S>> {
        self.f2.as_ref()
    }

    pub fn subsample(&self) -> &SubsampleHashes {
        &self.subsample
    }

    pub fn levels(&self) -> &[GhssLevel<S>] {
        &self.levels
    }

    pub fn recovery(&self) -> &RecoveryStructure<S> {
        &self.recovery
    }

    pub fn shelves(&self) -> &[ShelfLevel<S>] {
        &self.shelves
    }

    /// Shelf 0 is level 0: the same tables, not a copy.
    pub fn shelf_zero(&self) -> &GhssLevel<S> {
        &self.levels[0]
    }

    pub fn shelf_zero_mut(&mut self) -> &mut GhssLevel<S> {
        &mut self.levels[0]
    }

    /// Updates applied to each level's tables, levels `0..L` then recovery.
    pub fn level_fanout(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.levels.iter().map(|l| l.hh.update_count()).collect();
        v.push(self.recovery.table().update_count());
        v
    }

    pub fn cell_count(&self) -> usize {
        self.f2.as_ref().map_or(0, |f| f.table().cell_count())
            + self.levels.iter().map(GhssLevel::cell_count).sum::<usize>()
            + self.recovery.table().cell_count()
            + self.shelves.iter().map(ShelfLevel::cell_count).sum::<usize>()
    }

    pub fn update(&mut self, i: u64, v: S) -> Result<()> {
        if i >= self.config.n() {
            return Err(SketchError::IndexOutOfDomain { index: i, domain: self.config.n() });
        }
        if let Some(f2) = self.f2.as_mut() {
            f2.update_unchecked(i, v);
        }
        let depth = self.subsample.depth(i);
        let reach = (depth + 1).min(self.levels.len());
        for level in &mut self.levels[..reach] {
            level.update_unchecked(i, v);
        }
        if depth >= self.config.levels {
            self.recovery.update_unchecked(i, v);
        }
        for shelf in &mut self.shelves {
            shelf.update_unchecked(i, v);
        }
        self.update_count += 1;
        Ok(())
    }

    pub fn extend(&mut self, updates: impl IntoIterator<Item = (u64, f64)>) -> Result<()> {
        for (i, v) in updates {
            self.update(i, S::from_f64_lossy(v))?;
        }
        Ok(())
    }

    pub fn compatible(&self, other: &Self) -> Result<()> {
        if self.config != other.config {
            return Err(SketchError::Incompatible("sketch configurations differ".into()));
        }
        if self.seed != other.seed {
            return Err(SketchError::Incompatible(format!("seeds differ: {} vs {}", self.seed, other.seed)));
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: &Self) -> Result<()> {
        self.compatible(other)?;
        if let (Some(a), Some(b)) = (self.f2.as_mut(), other.f2.as_ref()) {
            a.merge_from(b)?;
        }
        for (a, b) in self.levels.iter_mut().zip(&other.levels) {
            a.merge_from(b)?;
        }
        self.recovery.merge_from(&other.recovery)?;
        for (a, b) in self.shelves.iter_mut().zip(&other.shelves) {
            a.merge_from(b)?;
        }
        self.update_count += other.update_count;
        Ok(())
    }

    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// Upper-biased `F_2` estimate from the sketch bank.
    pub fn estimate_f2(&self) -> Result<f64> {
        self.f2.as_ref().map(F2Sketch::estimate).ok_or_else(|| {
            SketchError::Unsupported("sketch was built in exact-F2 mode; supply F2 to estimate_fp_with_f2".into())
        })
    }

    pub fn estimate_fp(&self) -> Result<FpEstimate> {
        self.estimate_fp_with_f2(self.estimate_f2()?)
    }

    /// Runs the estimation pipeline with a caller-supplied `F_2` value.
    pub fn estimate_fp_with_f2(&self, f2_hat: f64) -> Result<FpEstimate> {
        if !(f2_hat >= 0.0) {
            return Err(SketchError::InvalidParameter(format!("F2 estimate must be >= 0, got {f2_hat}")));
        }
        if f2_hat == 0.0 {
            return Ok(FpEstimate::zero(f2_hat));
        }
        let cfg = &self.config;
        let n = cfg.n();
        let p = cfg.p();
        let big_l = cfg.levels;

        let shelf_thr = ShelfThresholds::derive(cfg, f2_hat);
        let top = if self.shelves.is_empty() { f64::INFINITY } else { shelf_thr.level_ceiling() };
        let thr = Thresholds::derive(cfg, f2_hat, top)?;

        let depth: Vec<u8> = (0..n).map(|i| self.subsample.depth(i) as u8).collect();
        let recovered = self.recovery.recover((0..n).filter(|&i| depth[i as usize] as usize >= big_l))?;

        let shelf_ests: Vec<Vec<f64>> = self.shelves.iter().map(|s| estimates(&s.hh, 0..n)).collect();
        let level_ests: Vec<Vec<f64>> = self
            .levels
            .iter()
            .enumerate()
            .map(|(l, lv)| estimates(&lv.hh, (0..n).filter(|&i| depth[i as usize] as usize >= l)))
            .collect();

        let shelf_blocked: Vec<BlockedIndex> = self
            .shelves
            .iter()
            .zip(&shelf_ests)
            .map(|(s, e)| s.ae.blocked_index(&blocked_set(e, s.dims.blocked())))
            .collect();
        let level_blocked: Vec<BlockedIndex> = self
            .levels
            .iter()
            .zip(&level_ests)
            .map(|(lv, e)| lv.ae.blocked_index(&blocked_set(e, lv.height)))
            .collect();

        let mut assignments = Vec::new();
        let mut shelf_point = Vec::with_capacity(self.shelves.len());
        let mut level_point = Vec::with_capacity(big_l + 1);
        for i in 0..n {
            let iu = i as usize;
            shelf_point.clear();
            shelf_point.extend(shelf_ests.iter().map(|e| e[iu]));
            if let Some(j) = classify_shelf(&shelf_point, &shelf_thr) {
                let shelf = &self.shelves[j - 1];
                let rep = shelf.ae.collision_free_rows_indexed(i, &shelf_blocked[j - 1]);
                let a = if rep.no_collision() {
                    let x = shelf.ae.avg_estimate(&rep, shelf_point[j - 1])?.re;
                    shelf_assignment(i, j, x, &shelf_thr)
                } else {
                    Assignment::dropped(i, Discovery::Shelf(j), DropReason::NoCollision, 0.0)
                };
                assignments.push(a);
                continue;
            }

            let d = depth[iu] as usize;
            level_point.clear();
            level_point.extend(level_ests[..(d + 1).min(big_l)].iter().map(|e| e[iu]));
            let rec = if d >= big_l { recovered.get(i) } else { 0.0 };
            if d >= big_l {
                level_point.push(rec);
            }
            let Some(l) = discover_level(&level_point, &thr) else {
                if rec != 0.0 {
                    assignments.push(Assignment::dropped(i, Discovery::None, DropReason::NotDiscovered, rec.abs()));
                }
                continue;
            };
            if l == big_l {
                assignments.push(sample_into_group(i, l, rec, rec.abs(), &thr, 0));
                continue;
            }
            let xhat = level_point[l];
            let coin_seed = derive_seed(self.seed, TAG_COIN, l as u64);
            if margin_group(l, xhat, &thr, coin(coin_seed, i)).is_none() {
                assignments.push(Assignment::dropped(i, Discovery::Level(l), DropReason::CoinTails, 0.0));
                continue;
            }
            let ae = &self.levels[l].ae;
            let rep = ae.collision_free_rows_indexed(i, &level_blocked[l]);
            if !rep.no_collision() {
                assignments.push(Assignment::dropped(i, Discovery::Level(l), DropReason::NoCollision, 0.0));
                continue;
            }
            let x = ae.avg_estimate(&rep, xhat)?.re;
            assignments.push(sample_into_group(i, l, xhat, x, &thr, coin_seed));
        }

        let shelf_part = shelf_contribution(&assignments, p);
        let ghss_part = ghss_contribution(&assignments, p);
        Ok(FpEstimate {
            value: shelf_part + ghss_part,
            f2_hat,
            shelf_part,
            ghss_part,
            thresholds: Some(thr),
            shelf_thresholds: Some(shelf_thr),
            recovered_nonzeros: recovered.entries.len(),
            assignments,
        })
    }

    /// Exact level-L vector for the items subsampled to level L.
    pub fn recover_last_level(&self) -> Result<Recovered> {
        let big_l = self.config.levels;
        self.recovery.recover((0..self.config.n()).filter(|&i| self.subsample.depth(i) >= big_l))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MAGIC);
        w.u16(VERSION);
        let spec = serde_json::to_vec(&self.config.spec).expect("config spec serializes");
        w.block(&spec);
        w.u64(self.seed);
        w.u64(self.update_count);
        match &self.f2 {
            Some(f2) => {
                w.u8(1);
                f2.write_blob(&mut w);
            }
            None => w.u8(0),
        }
        w.u32(self.levels.len() as u32);
        for level in &self.levels {
            level.hh.write_blob(&mut w);
            level.ae.write_blob(&mut w);
        }
        self.recovery.write_blob(&mut w);
        w.u32(self.shelves.len() as u32);
        for shelf in &self.shelves {
            shelf.hh.write_blob(&mut w);
            shelf.ae.write_blob(&mut w);
        }
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.expect_magic(MAGIC)?;
        let version = r.u16()?;
        if version != VERSION {
            return Err(SketchError::Format(format!("sketch version {version} unsupported")));
        }
        let spec: ConfigSpec =
            serde_json::from_slice(r.block()?).map_err(|e| SketchError::Format(format!("config block: {e}")))?;
        let seed = r.u64()?;
        let mut sk = Self::new(FpConfig::derive(spec)?, seed)?;
        sk.update_count = r.u64()?;
        let has_f2 = r.u8()? == 1;
        match (&mut sk.f2, has_f2) {
            (Some(f2), true) => {
                let read = F2Sketch::read_blob(&mut r, f2.kappa())?;
                f2.table().compatible(read.table())?;
                *f2 = read;
            }
            (None, false) => {}
            _ => return Err(SketchError::Format("F2 section disagrees with the configuration".into())),
        }
        if r.u32()? as usize != sk.levels.len() {
            return Err(SketchError::Format("level count disagrees with the configuration".into()));
        }
        for level in &mut sk.levels {
            let hh = CsStructure::read_blob(&mut r)?;
            level.hh.compatible(&hh)?;
            level.hh = hh;
            let ae = crate::avg_est::AeStructure::read_blob(&mut r)?;
            level.ae.compatible(&ae)?;
            level.ae = ae;
        }
        let recovery = RecoveryStructure::read_blob(&mut r)?;
        sk.recovery.table().compatible(recovery.table())?;
        sk.recovery = recovery;
        if r.u32()? as usize != sk.shelves.len() {
            return Err(SketchError::Format("shelf count disagrees with the configuration".into()));
        }
        for shelf in &mut sk.shelves {
            let hh = CsStructure::read_blob(&mut r)?;
            shelf.hh.compatible(&hh)?;
            shelf.hh = hh;
            let ae = crate::avg_est::AeStructure::read_blob(&mut r)?;
            shelf.ae.compatible(&ae)?;
            shelf.ae = ae;
        }
        if r.remaining() != 0 {
            return Err(SketchError::Format(format!("{} trailing bytes", r.remaining())));
        }
        Ok(sk)
    }
}

/// Point estimates for `members`, 0 elsewhere.
fn estimates<S: Scalar>(hh: &CsStructure<S>, members: impl Iterator<Item = u64>) -> Vec<f64> {
    let mut out = vec![0.0; hh.params().domain as usize];
    let mut buf = Vec::with_capacity(hh.rows());
    for i in members {
        out[i as usize] = hh.point_estimate_with(i, &mut buf);
    }
    out
}

/// Top-`k` items by `|estimate|`, ignoring exact zeros (non-members).
fn blocked_set(ests: &[f64], k: usize) -> Vec<u64> {
    let scored: Vec<(u64, f64)> =
        ests.iter().enumerate().filter(|(_, e)| **e != 0.0).map(|(i, &e)| (i as u64, e)).collect();
    top_by_magnitude(scored, k).into_iter().map(|(i, _)| i).collect()
}
