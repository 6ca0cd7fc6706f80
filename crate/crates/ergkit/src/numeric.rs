//! Exact rational arithmetic for graph evaluation and predicate parameters.
//!
//! Graph values stay rational all the way through so that derived bounds like
//! `33 * 2 - 2` never drift; narrowing to an integer happens only where a
//! consuming predicate demands one.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// An exact rational number backed by `i128`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Num(Ratio<i128>);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NumError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("value {0} is not an integer")]
    NotAnInteger(String),
    #[error("value {0} does not fit in 64 bits")]
    Overflow(String),
    #[error("malformed rational literal {0:?}")]
    Malformed(String),
}

impl Num {
    pub fn from_int(v: i64) -> Self {
        Num(Ratio::from_integer(v as i128))
    }

    pub fn new(numer: i128, denom: i128) -> Result<Self, NumError> {
        if denom == 0 {
            return Err(NumError::DivisionByZero);
        }
        Ok(Num(Ratio::new(numer, denom)))
    }

    pub fn zero() -> Self {
        Num(Ratio::zero())
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// Narrows to `i64`, failing when the value is fractional or out of range.
    pub fn to_i64(&self) -> Result<i64, NumError> {
        if !self.0.is_integer() {
            return Err(NumError::NotAnInteger(self.to_string()));
        }
        let v = self.0.to_integer();
        i64::try_from(v).map_err(|_| NumError::Overflow(self.to_string()))
    }

    pub fn checked_add(&self, other: &Num) -> Num {
        Num(self.0 + other.0)
    }

    pub fn checked_sub(&self, other: &Num) -> Num {
        Num(self.0 - other.0)
    }

    pub fn checked_mul(&self, other: &Num) -> Num {
        Num(self.0 * other.0)
    }

    pub fn checked_div(&self, other: &Num) -> Result<Num, NumError> {
        if other.0.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        Ok(Num(self.0 / other.0))
    }

    /// Compares against a plain integer without narrowing.
    pub fn cmp_i64(&self, v: i64) -> std::cmp::Ordering {
        self.0.cmp(&Ratio::from_integer(v as i128))
    }

    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Num {
    type Err = NumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let malformed = || NumError::Malformed(s.to_string());
        match s.split_once('/') {
            Some((n, d)) => {
                let n: i128 = n.trim().parse().map_err(|_| malformed())?;
                let d: i128 = d.trim().parse().map_err(|_| malformed())?;
                Num::new(n, d)
            }
            None => {
                let n: i128 = s.parse().map_err(|_| malformed())?;
                Ok(Num(Ratio::from_integer(n)))
            }
        }
    }
}

impl From<i64> for Num {
    fn from(v: i64) -> Self {
        Num::from_int(v)
    }
}

// Serialized as a string ("5" or "7/2") so files stay readable and i128
// never hits JSON number limits.
impl Serialize for Num {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_division_round_trips() {
        let a = Num::from_int(7).checked_div(&Num::from_int(2)).unwrap();
        assert_eq!(a.to_string(), "7/2");
        assert_eq!(a.checked_mul(&Num::from_int(2)), Num::from_int(7));
        assert!(!a.is_integer());
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let err = Num::from_int(1).checked_div(&Num::zero()).unwrap_err();
        assert_eq!(err, NumError::DivisionByZero);
    }

    #[test]
    fn narrowing_demands_an_integer() {
        assert_eq!(Num::from_int(5).to_i64().unwrap(), 5);
        assert!(Num::new(5, 2).unwrap().to_i64().is_err());
    }

    #[test]
    fn parse_display_round_trip() {
        for s in ["0", "-3", "7/2", "-9/4"] {
            let n: Num = s.parse().unwrap();
            assert_eq!(n.to_string(), s);
        }
        assert!("1/0".parse::<Num>().is_err());
        assert!("abc".parse::<Num>().is_err());
    }
}
