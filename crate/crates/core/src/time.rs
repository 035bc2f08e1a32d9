//! Fixed-point decimal used for timestamps, durations and numeric fluents.
//!
//! Values carry exactly four fractional digits, matching the plan format
//! (`0.0003: (MOVE ...) [5.0000]`). Ordering and equality are exact, so
//! timeline keys never suffer from binary floating point drift.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const SCALE: i64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(i64);

impl Time {
    pub const ZERO: Time = Time(0);

    /// Builds a value from ten-thousandths.
    pub const fn from_ticks(ticks: i64) -> Self {
        Time(ticks)
    }

    pub const fn from_int(units: i64) -> Self {
        Time(units * SCALE)
    }

    pub const fn ticks(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:04}", abs / SCALE as u64, abs % SCALE as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid decimal `{0}` (expected at most 4 fractional digits)")]
pub struct ParseTimeError(pub String);

impl FromStr for Time {
    type Err = ParseTimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseTimeError(s.to_string());
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if frac_part.len() > 4
            || !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        let int: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| err())?
        };
        let mut frac: i64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| err())?
        };
        for _ in frac_part.len()..4 {
            frac *= 10;
        }
        let ticks = int
            .checked_mul(SCALE)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(err)?;
        Ok(Time(if neg { -ticks } else { ticks }))
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Time {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(serde_json::Number),
        }
        let text = match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s,
            Repr::Number(n) => n.to_string(),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plan_timestamps() {
        assert_eq!("0.0003".parse::<Time>().unwrap(), Time::from_ticks(3));
        assert_eq!("5".parse::<Time>().unwrap(), Time::from_int(5));
        assert_eq!("98.25".parse::<Time>().unwrap(), Time::from_ticks(982_500));
        assert_eq!("-1.5".parse::<Time>().unwrap(), Time::from_ticks(-15_000));
    }

    #[test]
    fn rejects_excess_precision_and_garbage() {
        assert!("0.00001".parse::<Time>().is_err());
        assert!("abc".parse::<Time>().is_err());
        assert!(".".parse::<Time>().is_err());
        assert!("1e3".parse::<Time>().is_err());
    }

    #[test]
    fn display_pads_four_digits() {
        assert_eq!(Time::from_ticks(3).to_string(), "0.0003");
        assert_eq!(Time::from_int(80).to_string(), "80.0000");
        assert_eq!(Time::from_ticks(-15_000).to_string(), "-1.5000");
    }

    #[test]
    fn json_accepts_numbers_and_strings() {
        let t: Time = serde_json::from_str("98.0095").unwrap();
        assert_eq!(t, Time::from_ticks(980_095));
        let t: Time = serde_json::from_str("\"12\"").unwrap();
        assert_eq!(t, Time::from_int(12));
    }
}
