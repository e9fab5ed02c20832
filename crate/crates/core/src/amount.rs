//! Floor-area-ratio balances.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use rust_decimal::Decimal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A non-negative FAR quantity held in minimal fixed-point form.
///
/// The textual form is canonical: `"40"`, never `"40.0"`. Deserialization
/// rejects any non-canonical spelling so a serialized value has exactly one
/// representation.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Far(Decimal);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FarError {
    #[error("not a decimal number: {0:?}")]
    Malformed(String),
    #[error("FAR cannot be negative: {0}")]
    Negative(String),
    #[error("non-canonical FAR spelling {given:?}, expected {canonical:?}")]
    NonCanonical { given: String, canonical: String },
}

impl Far {
    pub const ZERO: Far = Far(Decimal::ZERO);

    pub fn new(value: Decimal) -> Result<Self, FarError> {
        if value.is_sign_negative() && !value.is_zero() {
            return Err(FarError::Negative(value.to_string()));
        }
        Ok(Far(value.normalize()))
    }

    pub fn from_int(value: u64) -> Self {
        Far(Decimal::from(value))
    }

    pub fn decimal(&self) -> Decimal {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn checked_sub(self, other: Far) -> Option<Far> {
        (self.0 >= other.0).then(|| Far((self.0 - other.0).normalize()))
    }

    /// Parses any decimal spelling, normalizing it.
    pub fn parse_lenient(s: &str) -> Result<Self, FarError> {
        let d = Decimal::from_str_exact(s.trim()).map_err(|_| FarError::Malformed(s.to_owned()))?;
        Far::new(d)
    }
}

impl Add for Far {
    type Output = Far;
    fn add(self, rhs: Far) -> Far {
        Far((self.0 + rhs.0).normalize())
    }
}

impl Sub for Far {
    type Output = Far;
    fn sub(self, rhs: Far) -> Far {
        self.checked_sub(rhs).expect("FAR underflow")
    }
}

impl std::iter::Sum for Far {
    fn sum<I: Iterator<Item = Far>>(iter: I) -> Far {
        iter.fold(Far::ZERO, |a, b| a + b)
    }
}

impl FromStr for Far {
    type Err = FarError;

    /// Strict parse: only the canonical spelling is accepted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let far = Far::parse_lenient(s)?;
        let canonical = far.to_string();
        if canonical != s {
            return Err(FarError::NonCanonical {
                given: s.to_owned(),
                canonical,
            });
        }
        Ok(far)
    }
}

impl fmt::Display for Far {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Far {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Far({})", self.0)
    }
}

impl Serialize for Far {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Far {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
