//! Exact reference computations.

use crate::error::{Result, SketchError};

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// `Σ |x_i|^p`.
pub fn exact_fp(x: &[f64], p: f64) -> f64 {
    x.iter().map(|v| v.abs().powf(p)).collect::<NeumaierSum>().total()
}

/// `Σ |x_i|^p` over a sparse vector.
pub fn exact_fp_sparse<'a>(x: impl IntoIterator<Item = &'a (u64, f64)>, p: f64) -> f64 {
    x.into_iter().map(|(_, v)| v.abs().powf(p)).collect::<NeumaierSum>().total()
}

/// Sum of squares outside the top-`k` coordinates by magnitude; ties go to
/// the smaller index.
pub fn exact_f2_res(x: &[f64], k: usize) -> f64 {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    order.iter().skip(k).map(|&i| x[i] * x[i]).collect::<NeumaierSum>().total()
}

/// Aggregates `(i, v)` updates into a dense vector of length `n`.
pub fn accumulate_stream(n: u64, updates: impl IntoIterator<Item = (u64, f64)>) -> Result<Vec<f64>> {
    let mut x = vec![0.0; n as usize];
    for (i, v) in updates {
        let slot =
            x.get_mut(i as usize).filter(|_| i < n).ok_or(SketchError::IndexOutOfDomain { index: i, domain: n })?;
        *slot += v;
    }
    Ok(x)
}
