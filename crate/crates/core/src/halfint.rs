//! Exact half-integer quantum numbers (J, F, I, m).

use std::fmt;
use std::ops::Neg;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A half-integer stored as twice its value, so `9/2` is `HalfInt(9)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i32);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a half-integer: {0:?}")]
pub struct HalfIntError(pub String);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt(2 * n)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// `x(x+1)`, the eigenvalue of the squared angular momentum.
    pub fn casimir(self) -> f64 {
        let x = self.value();
        x * (x + 1.0)
    }

    pub fn from_f64(x: f64) -> Result<Self, HalfIntError> {
        let twice = 2.0 * x;
        if !twice.is_finite() || twice.fract() != 0.0 || twice.abs() > f64::from(i32::MAX) {
            return Err(HalfIntError(x.to_string()));
        }
        Ok(HalfInt(twice as i32))
    }

    /// True when `self - other` is an integer.
    pub fn same_parity(self, other: HalfInt) -> bool {
        (self.0 - other.0) % 2 == 0
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for HalfInt {
    type Err = HalfIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || HalfIntError(s.to_string());
        if let Some((num, den)) = t.split_once('/') {
            let num: i32 = num.trim().parse().map_err(|_| err())?;
            match den.trim() {
                "2" => Ok(HalfInt(num)),
                "1" => num.checked_mul(2).map(HalfInt).ok_or_else(err),
                _ => Err(err()),
            }
        } else {
            let x: f64 = t.parse().map_err(|_| err())?;
            HalfInt::from_f64(x).map_err(|_| err())
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(x) => HalfInt::from_f64(x).map_err(serde::de::Error::custom),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_and_decimal_forms() {
        assert_eq!("9/2".parse::<HalfInt>().unwrap(), HalfInt::from_twice(9));
        assert_eq!("-13/2".parse::<HalfInt>().unwrap(), HalfInt::from_twice(-13));
        assert_eq!("4.5".parse::<HalfInt>().unwrap(), HalfInt::from_twice(9));
        assert_eq!("2".parse::<HalfInt>().unwrap(), HalfInt::from_int(2));
        assert!("1/3".parse::<HalfInt>().is_err());
        assert!("0.25".parse::<HalfInt>().is_err());
    }

    #[test]
    fn json_accepts_strings_and_numbers() {
        let v: Vec<HalfInt> = serde_json::from_str(r#"["9/2", 4.5, 2, "-1/2"]"#).unwrap();
        assert_eq!(v[0], v[1]);
        assert_eq!(v[2], HalfInt::from_int(2));
        assert_eq!(serde_json::to_string(&v[3]).unwrap(), "\"-1/2\"");
    }

    #[test]
    fn casimir() {
        assert_eq!(HalfInt::from_twice(13).casimir(), 6.5 * 7.5);
    }
}
