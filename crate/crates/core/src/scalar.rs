//! Element types for band storage.
//!
//! Storage precision and arithmetic precision are separate: every kernel
//! loads values into [`Scalar::Acc`], computes there, and rounds on store.
//! For `f32` and `f64` the two coincide. Half precision has no native
//! arithmetic on most targets, so it computes in `f32` and rounds each stored
//! value to the nearest `f16`.

use std::fmt::{self, Debug, Display};
use std::str::FromStr;

use half::f16;
use num_traits::Float;

/// Arithmetic type used inside kernels.
pub trait Real: Float + Send + Sync + Debug + Display + Default + 'static {
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

/// Storage element of a [`crate::BandedMatrix`].
pub trait Scalar: Copy + Send + Sync + PartialEq + Debug + Display + Default + 'static {
    type Acc: Real;
    const PRECISION: Precision;

    fn to_acc(self) -> Self::Acc;
    fn from_acc(v: Self::Acc) -> Self;

    #[inline]
    fn to_f64(self) -> f64 {
        self.to_acc().to_f64()
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        Self::from_acc(Self::Acc::from_f64(v))
    }
    #[inline]
    fn zero() -> Self {
        Self::default()
    }
    #[inline]
    fn is_zero(self) -> bool {
        self.to_acc() == <Self::Acc as num_traits::Zero>::zero()
    }
    /// Unit roundoff of the storage format, as `f64`.
    fn epsilon() -> f64 {
        Self::PRECISION.epsilon()
    }
}

impl Scalar for f64 {
    type Acc = f64;
    const PRECISION: Precision = Precision::Double;
    #[inline]
    fn to_acc(self) -> f64 {
        self
    }
    #[inline]
    fn from_acc(v: f64) -> Self {
        v
    }
}

impl Scalar for f32 {
    type Acc = f32;
    const PRECISION: Precision = Precision::Single;
    #[inline]
    fn to_acc(self) -> f32 {
        self
    }
    #[inline]
    fn from_acc(v: f32) -> Self {
        v
    }
}

impl Scalar for f16 {
    type Acc = f32;
    const PRECISION: Precision = Precision::Half;
    #[inline]
    fn to_acc(self) -> f32 {
        self.to_f32()
    }
    #[inline]
    fn from_acc(v: f32) -> Self {
        f16::from_f32(v)
    }
}

/// Storage precision tag, as it appears in `.bnd` headers and CLI flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Precision {
    Half,
    Single,
    Double,
}

impl Precision {
    pub const ALL: [Precision; 3] = [Precision::Half, Precision::Single, Precision::Double];

    pub fn epsilon(self) -> f64 {
        match self {
            Precision::Half => f16::EPSILON.to_f64(),
            Precision::Single => f32::EPSILON as f64,
            Precision::Double => f64::EPSILON,
        }
    }

    pub fn bytes(self) -> usize {
        match self {
            Precision::Half => 2,
            Precision::Single => 4,
            Precision::Double => 8,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Half => "f16",
            Precision::Single => "f32",
            Precision::Double => "f64",
        }
    }
}

impl Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown precision `{0}` (expected f16, f32 or f64)")]
pub struct ParsePrecisionError(pub String);

impl FromStr for Precision {
    type Err = ParsePrecisionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "f16" | "half" => Ok(Precision::Half),
            "f32" | "single" => Ok(Precision::Single),
            "f64" | "double" => Ok(Precision::Double),
            _ => Err(ParsePrecisionError(s.to_string())),
        }
    }
}
