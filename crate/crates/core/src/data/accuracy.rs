use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of correctly classified examples, always in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Accuracy(f64);

impl Accuracy {
    pub const ZERO: Accuracy = Accuracy(0.0);
    pub const ONE: Accuracy = Accuracy(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Validation(format!("accuracy {value} outside [0, 1]")))
        }
    }

    /// `correct / total`, divided once.
    pub fn from_counts(correct: u64, total: u64) -> Result<Self> {
        if total == 0 {
            return Err(Error::Argument("accuracy over zero examples".into()));
        }
        if correct > total {
            return Err(Error::Argument(format!("{correct} correct out of {total}")));
        }
        Ok(Self(correct as f64 / total as f64))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// True when strictly inside `(0, 1)`, the domain of logit and probit.
    pub fn is_interior(self) -> bool {
        self.0 > 0.0 && self.0 < 1.0
    }
}

impl TryFrom<f64> for Accuracy {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Accuracy::new(v)
    }
}

impl From<Accuracy> for f64 {
    fn from(a: Accuracy) -> f64 {
        a.0
    }
}

impl fmt::Display for Accuracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(Accuracy::new(0.0).is_ok());
        assert!(Accuracy::new(1.0).is_ok());
        assert!(Accuracy::new(1.2).is_err());
        assert!(Accuracy::new(-0.01).is_err());
        assert!(Accuracy::new(f64::NAN).is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(Accuracy::from_counts(2, 3).unwrap().value(), 2.0 / 3.0);
        assert!(Accuracy::from_counts(1, 0).is_err());
        assert!(Accuracy::from_counts(4, 3).is_err());
    }
}
