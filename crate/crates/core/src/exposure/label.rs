//! Exact rational exposure labels.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An exposure label. Proportion mappings produce fractions such as `1/3`;
/// per-unit and indicator mappings produce integers. Stored reduced, so
/// equality is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(Ratio<u64>);

impl Label {
    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidLabel("zero denominator".into()));
        }
        Ok(Self(Ratio::new(numer, denom)))
    }

    pub fn integer(v: u64) -> Self {
        Self(Ratio::from_integer(v))
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn to_f64(self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// Parses `"3"`, `"1/3"` or a decimal such as `"0.5"` (decimals must be
    /// exact binary fractions with a small denominator to round-trip).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((n, d)) = text.split_once('/') {
            let n = n.trim().parse::<u64>().map_err(|e| Error::InvalidLabel(format!("{text}: {e}")))?;
            let d = d.trim().parse::<u64>().map_err(|e| Error::InvalidLabel(format!("{text}: {e}")))?;
            return Self::new(n, d);
        }
        if let Ok(v) = text.parse::<u64>() {
            return Ok(Self::integer(v));
        }
        let x = text
            .parse::<f64>()
            .map_err(|e| Error::InvalidLabel(format!("{text}: {e}")))?;
        Self::from_f64(x)
    }

    /// Converts a float to the nearest label with denominator at most 2^20,
    /// accepting it only if the conversion is exact to 1e-12.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidLabel(format!("{x} is not a nonnegative finite number")));
        }
        for denom in 1..=(1u64 << 20) {
            let numer = (x * denom as f64).round();
            if (numer / denom as f64 - x).abs() <= 1e-12 {
                return Self::new(numer as u64, denom);
            }
        }
        Err(Error::InvalidLabel(format!("{x} has no small exact fraction")))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Label as written in JSON: an integer, a float, or a `"p/q"` string.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawLabel {
    Int(u64),
    Float(f64),
    Text(String),
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawLabel::deserialize(d)?;
        let parsed = match raw {
            RawLabel::Int(v) => Ok(Label::integer(v)),
            RawLabel::Float(x) => Label::from_f64(x),
            RawLabel::Text(t) => Label::parse(&t),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_and_orders() {
        assert_eq!(Label::new(2, 4).unwrap(), Label::new(1, 2).unwrap());
        assert!(Label::new(1, 3).unwrap() < Label::new(1, 2).unwrap());
        assert!(Label::new(1, 0).is_err());
    }

    #[test]
    fn parses_forms() {
        assert_eq!(Label::parse("1/3").unwrap(), Label::new(1, 3).unwrap());
        assert_eq!(Label::parse("0.5").unwrap(), Label::new(1, 2).unwrap());
        assert_eq!(Label::parse("2").unwrap(), Label::integer(2));
        let v: Vec<Label> = serde_json::from_str(r#"[0, 1, 0.25, "2/3"]"#).unwrap();
        assert_eq!(
            v,
            vec![
                Label::integer(0),
                Label::integer(1),
                Label::new(1, 4).unwrap(),
                Label::new(2, 3).unwrap()
            ]
        );
        assert_eq!(serde_json::to_string(&Label::new(2, 6).unwrap()).unwrap(), "\"1/3\"");
    }
}
