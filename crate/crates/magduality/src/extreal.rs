//! Extended reals for convex-analysis bookkeeping.
//!
//! Indicator densities take the value +inf outside their effective domain
//! and concave conjugates can reach -inf, so density evaluations return
//! [`ExtReal`] rather than bare floats. Addition with one infinite operand
//! keeps the infinity; `inf - inf` (addition of opposite infinities) is an
//! error rather than a NaN.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    /// Classify a float; infinities map to the matching variant.
    ///
    /// Panics on NaN: a NaN density value is always a bug upstream.
    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            panic!("ExtReal::from_f64 called with NaN");
        }
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Collapse to `f64`, mapping the infinite variants to IEEE infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// Convex-analysis addition: `inf + finite = inf`, `inf + inf = inf`,
    /// opposite infinities are an error.
    pub fn try_add(self, other: Self) -> Result<Self> {
        use ExtReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Ok(Finite(a + b)),
            (PosInf, NegInf) | (NegInf, PosInf) => Err(Error::InfMinusInf),
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
        }
    }

    pub fn try_sub(self, other: Self) -> Result<Self> {
        self.try_add(-other)
    }

    /// |a - b| with the convention that equal infinities agree exactly and a
    /// finite/infinite mismatch deviates infinitely.
    pub fn abs_deviation(self, other: Self) -> f64 {
        use ExtReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => (a - b).abs(),
            (PosInf, PosInf) | (NegInf, NegInf) => 0.0,
            _ => f64::INFINITY,
        }
    }
}

impl std::ops::Neg for ExtReal {
    type Output = ExtReal;

    fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(x) => ExtReal::Finite(-x),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (NegInf, NegInf) | (PosInf, PosInf) => Some(Ordering::Equal),
            (NegInf, _) | (_, PosInf) => Some(Ordering::Less),
            (PosInf, _) | (_, NegInf) => Some(Ordering::Greater),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => write!(f, "inf"),
        }
    }
}
