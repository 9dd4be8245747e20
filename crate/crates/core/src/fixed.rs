//! Non-negative decimal fixed-point numbers with four fractional digits.

use std::fmt;
use std::iter::Sum;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Raw units per whole number.
pub const SCALE: u64 = 10_000;

/// A value `raw / 10_000`. All simulation arithmetic happens on the raw
/// integer; there is no floating point anywhere in the response model.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed(u64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid fixed-point literal {0:?}")]
pub struct ParseFixedError(pub String);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);
    pub const ONE: Fixed = Fixed(SCALE);

    pub const fn from_raw(raw: u64) -> Self {
        Fixed(raw)
    }

    pub const fn from_int(whole: u64) -> Self {
        Fixed(whole * SCALE)
    }

    pub const fn raw(self) -> u64 {
        self.0
    }

    pub fn checked_add(self, other: Fixed) -> Option<Fixed> {
        self.0.checked_add(other.0).map(Fixed)
    }

    pub fn checked_sub(self, other: Fixed) -> Option<Fixed> {
        self.0.checked_sub(other.0).map(Fixed)
    }

    /// Product rounded half-up to the nearest raw unit.
    pub fn mul_round(self, other: Fixed) -> Fixed {
        let wide = self.0 as u128 * other.0 as u128;
        Fixed(div_round_half_up(wide, SCALE as u128) as u64)
    }
}

/// `numerator / denominator` rounded half-up. Panics on a zero denominator.
pub fn div_round_half_up(numerator: u128, denominator: u128) -> u128 {
    assert!(denominator > 0, "division by zero");
    let quotient = numerator / denominator;
    let remainder = numerator % denominator;
    if remainder >= denominator - remainder {
        quotient + 1
    } else {
        quotient
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:04}", self.0 / SCALE, self.0 % SCALE)
    }
}

impl fmt::Debug for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Fixed {
    type Err = ParseFixedError;

    /// Accepts `123`, `123.4` … `123.4567`; no sign, no exponent.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseFixedError(s.to_string());
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty()
            || !whole.bytes().all(|b| b.is_ascii_digit())
            || frac.len() > 4
            || !frac.bytes().all(|b| b.is_ascii_digit())
            || (s.contains('.') && frac.is_empty())
        {
            return Err(err());
        }
        let whole: u64 = whole.parse().map_err(|_| err())?;
        let mut frac_raw: u64 = 0;
        for (i, digit) in frac.bytes().enumerate() {
            frac_raw += u64::from(digit - b'0') * 10u64.pow(3 - i as u32);
        }
        whole
            .checked_mul(SCALE)
            .and_then(|w| w.checked_add(frac_raw))
            .map(Fixed)
            .ok_or_else(err)
    }
}

impl Sum for Fixed {
    fn sum<I: Iterator<Item = Fixed>>(iter: I) -> Fixed {
        Fixed(iter.map(|f| f.0).sum())
    }
}

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fixed {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
