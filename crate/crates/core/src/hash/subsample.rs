use super::{HashParams, KWiseHash};
use crate::error::{Result, SketchError};

/// The bits `g_1, ..., g_L`; item `i` reaches level `l` iff
/// `g_1(i) = ... = g_l(i) = 1`. Level 0 holds every item.
#[derive(Clone, Debug)]
pub struct SubsampleHashes {
    bits: Vec<KWiseHash>,
}

impl SubsampleHashes {
    /// `levels` is L, the deepest level; one bit hash per level 1..=L.
    pub fn new(levels: usize, params: HashParams, seed_of: impl Fn(usize) -> u64) -> Result<Self> {
        let bits = (1..=levels).map(|l| KWiseHash::with_params(seed_of(l), params, 2)).collect::<Result<Vec<_>>>()?;
        Ok(Self { bits })
    }

    pub fn from_hashes(bits: Vec<KWiseHash>) -> Result<Self> {
        if let Some(h) = bits.iter().find(|h| h.range() != 2) {
            return Err(SketchError::InvalidParameter(format!("subsampling bits need range 2, got {}", h.range())));
        }
        Ok(Self { bits })
    }

    pub fn max_level(&self) -> usize {
        self.bits.len()
    }

    pub fn member(&self, i: u64, level: usize) -> Result<bool> {
        if level > self.bits.len() {
            return Err(SketchError::LevelOutOfRange { level, max: self.bits.len() });
        }
        for h in &self.bits[..level] {
            if h.eval(i)? != 1 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Deepest level that `i` reaches.
    #[inline]
    pub fn depth(&self, i: u64) -> usize {
        self.bits.iter().take_while(|h| h.eval_unchecked(i) == 1).count()
    }
}
