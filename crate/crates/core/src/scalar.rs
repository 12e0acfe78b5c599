//! Arithmetic abstraction so the dense kernels can run in plain `f64` or in
//! double-double precision.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use twofloat::TwoFloat;

pub trait Scalar:
    Copy
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Unit roundoff of the format.
    fn epsilon() -> f64;
    /// Correctly rounded (to the format) quotient.
    fn quot(self, rhs: Self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }
    fn is_zero(self) -> bool {
        self.to_f64() == 0.0
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn epsilon() -> f64 {
        f64::EPSILON
    }
    fn quot(self, rhs: Self) -> Self {
        self / rhs
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

impl Scalar for TwoFloat {
    fn from_f64(x: f64) -> Self {
        TwoFloat::from(x)
    }
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }
    fn epsilon() -> f64 {
        // 2^-104
        4.930380657631324e-32
    }
    /// Long division with three f64 quotient digits. The crate's own
    /// `TwoFloat / TwoFloat` loses the low word (it forms `1 - hi * (1/hi)`
    /// without an FMA), so it is not used.
    fn quot(self, rhs: Self) -> Self {
        let d = rhs.hi();
        let q1 = self.hi() / d;
        let r = self - rhs * q1;
        let q2 = r.hi() / d;
        let r = r - rhs * q2;
        let q3 = r.hi() / d;
        TwoFloat::new_add(q1, q2) + q3
    }
}

/// Working precision for the condition-number kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Double,
    /// Double-double (about 32 significant digits).
    #[default]
    Extended,
}

impl std::str::FromStr for Precision {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "double" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(format!("unknown precision `{other}` (expected double|extended)")),
        }
    }
}
