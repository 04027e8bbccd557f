//! Scalar abstraction shared by the numeric parts of the crate.
//!
//! Probability tables and statistics are generic over [`Real`] so callers can
//! trade precision for memory (`f32` n-gram tables on large corpora) without
//! touching the algorithms. Concrete aliases live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Real: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static {
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable as a float")
    }

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable as a float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Real>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let total: T = values.iter().copied().sum();
    Some(total / T::from_usize_lossy(values.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_works_for_both_widths() {
        assert_eq!(mean(&[1.0f64, 2.0, 3.0]), Some(2.0));
        assert_eq!(mean(&[1.0f32, 2.0]), Some(1.5));
        assert_eq!(mean::<f64>(&[]), None);
    }
}
