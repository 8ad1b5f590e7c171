//! Exact half-integer labels stored as twice their value.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HalfError {
    #[error("labels {lo} and {hi} do not span a non-negative integer range")]
    IncompatibleRange { lo: Half, hi: Half },
    #[error("cannot parse half-integer from {0:?}")]
    Parse(String),
}

/// A half-integer `twice / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Half {
    pub twice: i32,
}

impl Half {
    pub const ZERO: Half = Half { twice: 0 };
    pub const HALF: Half = Half { twice: 1 };
    pub const ONE: Half = Half { twice: 2 };

    pub const fn from_twice(twice: i32) -> Self {
        Half { twice }
    }

    pub const fn int(n: i32) -> Self {
        Half { twice: 2 * n }
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    /// True for integer labels (tensorial), false for half-odd ones (spinorial).
    pub fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    pub fn abs(self) -> Self {
        Half { twice: self.twice.abs() }
    }

    /// Projections `-self, -self+1, ..., self`.
    pub fn projections(self) -> Vec<Half> {
        (-self.twice..=self.twice).step_by(2).map(Half::from_twice).collect()
    }
}

impl Add for Half {
    type Output = Half;
    fn add(self, o: Half) -> Half {
        Half { twice: self.twice + o.twice }
    }
}

impl Sub for Half {
    type Output = Half;
    fn sub(self, o: Half) -> Half {
        Half { twice: self.twice - o.twice }
    }
}

impl Neg for Half {
    type Output = Half;
    fn neg(self) -> Half {
        Half { twice: -self.twice }
    }
}

impl Mul<i32> for Half {
    type Output = Half;
    fn mul(self, k: i32) -> Half {
        Half { twice: self.twice * k }
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl FromStr for Half {
    type Err = HalfError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || HalfError::Parse(s.to_string());
        if let Some((num, den)) = t.split_once('/') {
            let num: i32 = num.trim().parse().map_err(|_| err())?;
            match den.trim() {
                "1" => Ok(Half::int(num)),
                "2" => Ok(Half::from_twice(num)),
                _ => Err(err()),
            }
        } else {
            let n: i32 = t.parse().map_err(|_| err())?;
            Ok(Half::int(n))
        }
    }
}

impl Serialize for Half {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Half {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `lo, lo+1, ..., hi`.
pub fn half_range(lo: Half, hi: Half) -> Result<Vec<Half>, HalfError> {
    let span = hi.twice - lo.twice;
    if span < 0 || span % 2 != 0 {
        return Err(HalfError::IncompatibleRange { lo, hi });
    }
    Ok((lo.twice..=hi.twice).step_by(2).map(Half::from_twice).collect())
}

/// Triangle rule: `|a-b| <= c <= a+b` with `a+b+c` an integer.
pub fn tri(a: Half, b: Half, c: Half) -> bool {
    let (a, b, c) = (a.twice, b.twice, c.twice);
    a >= 0 && b >= 0 && c >= 0 && (a + b + c) % 2 == 0 && c <= a + b && c >= (a - b).abs()
}
