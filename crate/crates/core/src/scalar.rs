use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Cell type of every sketch table: `f32` or `f64`.
///
/// Threshold logic and estimates are carried out in `f64`; the scalar only
/// decides how table cells are stored and accumulated.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + AddAssign + SubAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
