use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Num, ToPrimitive};

/// Scalar type used for distances, weights and interpolated scores.
pub trait Score: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    /// `num / den`; `den` must be non-zero.
    fn from_ratio(num: u64, den: u64) -> Self;

    /// Nearest representable value. Exact types use the best rational
    /// approximation, so decimal grid points such as 0.7 map to 7/10.
    fn from_f64(x: f64) -> Self;

    fn to_f64(self) -> f64;

    /// Two scores closer than this are treated as tied during argmin.
    fn tie_tolerance() -> Self;

    fn name() -> &'static str;
}

impl Score for f64 {
    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn tie_tolerance() -> Self {
        1e-12
    }

    fn name() -> &'static str {
        "f64"
    }
}

impl Score for f32 {
    fn from_ratio(num: u64, den: u64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn from_f64(x: f64) -> Self {
        x as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn tie_tolerance() -> Self {
        1e-6
    }

    fn name() -> &'static str {
        "f32"
    }
}

impl Score for Ratio<i64> {
    fn from_ratio(num: u64, den: u64) -> Self {
        Ratio::new(num as i64, den as i64)
    }

    fn from_f64(x: f64) -> Self {
        // Decimal inputs first, so "0.1" becomes 1/10 rather than the
        // continued-fraction approximation of its binary expansion.
        let scaled = x * 1e6;
        if scaled.is_finite() && scaled.fract() == 0.0 && scaled.abs() < 9e15 {
            return Ratio::new(scaled as i64, 1_000_000);
        }
        Ratio::approximate_float(x).unwrap_or_else(|| Ratio::from_integer(0))
    }

    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn tie_tolerance() -> Self {
        Ratio::from_integer(0)
    }

    fn name() -> &'static str {
        "rational"
    }
}
