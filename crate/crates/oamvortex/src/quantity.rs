//! Numbers with unit suffixes, e.g. `"132 s^-1"`, `"2.35 um"`, `"86.909 amu"`.

use std::f64::consts::TAU;
use std::fmt;

use oamvortex_core::units::AMU;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Angular rate, stored in rad/s.
    Rate,
    /// Metres.
    Length,
    /// Kilograms.
    Mass,
    /// Seconds.
    Time,
    Dimensionless,
}

impl Dimension {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            // Hz counts cycles, so it carries the 2 pi; s^-1 is already angular
            Dimension::Rate => &[
                ("rad/s", 1.0),
                ("krad/s", 1e3),
                ("Mrad/s", 1e6),
                ("s^-1", 1.0),
                ("1/s", 1.0),
                ("Hz", TAU),
                ("kHz", TAU * 1e3),
                ("MHz", TAU * 1e6),
            ],
            Dimension::Length => &[("m", 1.0), ("mm", 1e-3), ("um", 1e-6), ("µm", 1e-6), ("nm", 1e-9)],
            Dimension::Mass => &[("kg", 1.0), ("amu", AMU), ("u", AMU)],
            Dimension::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6)],
            Dimension::Dimensionless => &[],
        }
    }

    pub fn describe(self) -> String {
        match self {
            Dimension::Dimensionless => "a plain number".to_string(),
            _ => {
                let names: Vec<&str> = self.units().iter().map(|(u, _)| *u).collect();
                format!("a number followed by one of {}", names.join(", "))
            }
        }
    }
}

/// A config scalar: either a bare number or a string with a unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Number(x) => write!(f, "{x}"),
            Scalar::Text(s) => write!(f, "\"{s}\""),
        }
    }
}

/// Value in SI (rad/s for rates).
pub fn parse(value: &Scalar, dim: Dimension) -> Result<f64, String> {
    let out = match (value, dim) {
        (Scalar::Number(x), Dimension::Dimensionless) => *x,
        (Scalar::Number(_), _) => return Err(format!("needs a unit: expected {}", dim.describe())),
        (Scalar::Text(s), _) => parse_text(s, dim)?,
    };
    if !out.is_finite() {
        return Err("must be finite".into());
    }
    Ok(out)
}

fn parse_text(s: &str, dim: Dimension) -> Result<f64, String> {
    let s = s.trim();
    if dim == Dimension::Dimensionless {
        return parse_number(s).ok_or_else(|| format!("cannot read `{s}` as a number"));
    }
    let (num, unit) = match s.split_once(char::is_whitespace) {
        Some((n, u)) => (n, u.trim()),
        None => return Err(format!("`{s}` has no unit: expected {}", dim.describe())),
    };
    let x = parse_number(num).ok_or_else(|| format!("cannot read `{num}` as a number"))?;
    let factor = dim
        .units()
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, f)| *f)
        .ok_or_else(|| format!("unknown unit `{unit}`: expected {}", dim.describe()))?;
    Ok(x * factor)
}

/// Plain float, or `pi` optionally scaled (`2pi`, `pi/2`, `0.5*pi`).
fn parse_number(s: &str) -> Option<f64> {
    if let Ok(x) = s.parse::<f64>() {
        return Some(x);
    }
    let t = s.replace(' ', "");
    let (head, div) = match t.split_once('/') {
        Some((h, d)) => (h.to_string(), d.parse::<f64>().ok()?),
        None => (t.clone(), 1.0),
    };
    let coeff = head.strip_suffix("pi")?.trim_end_matches('*');
    let c = match coeff {
        "" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    Some(c * std::f64::consts::PI / div)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(s: &str) -> Scalar {
        Scalar::Text(s.into())
    }

    #[test]
    fn rates() {
        assert_eq!(parse(&text("132 s^-1"), Dimension::Rate).unwrap(), 132.0);
        assert_eq!(parse(&text("200 krad/s"), Dimension::Rate).unwrap(), 2e5);
        assert!((parse(&text("1 kHz"), Dimension::Rate).unwrap() - 6283.185307179586).abs() < 1e-9);
    }

    #[test]
    fn lengths_and_masses() {
        assert!((parse(&text("2.35 um"), Dimension::Length).unwrap() - 2.35e-6).abs() < 1e-20);
        assert_eq!(parse(&text("5 nm"), Dimension::Length).unwrap(), 5e-9);
        assert_eq!(parse(&text("1 amu"), Dimension::Mass).unwrap(), AMU);
    }

    #[test]
    fn dimensionless_and_pi() {
        assert_eq!(parse(&Scalar::Number(0.6), Dimension::Dimensionless).unwrap(), 0.6);
        let pi = std::f64::consts::PI;
        assert_eq!(parse(&text("pi"), Dimension::Dimensionless).unwrap(), pi);
        assert_eq!(parse(&text("2pi"), Dimension::Dimensionless).unwrap(), 2.0 * pi);
        assert_eq!(parse(&text("pi/2"), Dimension::Dimensionless).unwrap(), pi / 2.0);
        assert_eq!(parse(&text("-pi"), Dimension::Dimensionless).unwrap(), -pi);
    }

    #[test]
    fn rejects() {
        assert!(parse(&Scalar::Number(132.0), Dimension::Rate).is_err());
        assert!(parse(&text("132"), Dimension::Rate).is_err());
        assert!(parse(&text("132 furlongs"), Dimension::Length).is_err());
        assert!(parse(&text("x m"), Dimension::Length).is_err());
        assert!(parse(&Scalar::Number(f64::NAN), Dimension::Dimensionless).is_err());
    }
}
