//! Physical constants and unit-suffixed quantities.
//!
//! Configuration files spell every dimensional value with its unit, e.g.
//! `probe_power = "130 uW"` or `drive_calibration = "40 fm/mV"`. A
//! [`Quantity`] is tagged with the SI unit it must carry; SI prefixes are
//! accepted on every factor of a compound unit and the stored value is always
//! in base SI units.

use std::fmt;
use std::marker::PhantomData;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Energy of one photon at `wavelength` (J).
pub fn photon_energy(wavelength: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength
}

/// Optical power (W) to photon flux (photons/s).
pub fn photon_rate(power: f64, wavelength: f64) -> f64 {
    power / photon_energy(wavelength)
}

pub fn db_to_ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn ratio_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Marker for the SI unit a [`Quantity`] must be written in.
pub trait Unit {
    const SYMBOL: &'static str;
}

macro_rules! unit {
    ($name:ident, $sym:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name;
        impl Unit for $name {
            const SYMBOL: &'static str = $sym;
        }
    };
}

unit!(Watt, "W");
unit!(Meter, "m");
unit!(Hertz, "Hz");
unit!(Second, "s");
unit!(Kelvin, "K");
unit!(Radian, "rad");
unit!(NewtonPerMeter, "N/m");
unit!(MeterPerVolt, "m/V");
unit!(Volt, "V");
unit!(AmperePerWatt, "A/W");

pub struct Quantity<U> {
    value: f64,
    unit: PhantomData<U>,
}

impl<U> Clone for Quantity<U> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<U> Copy for Quantity<U> {}

impl<U> PartialEq for Quantity<U> {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl<U: Unit> fmt::Debug for Quantity<U> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, U::SYMBOL)
    }
}

impl<U: Unit> fmt::Display for Quantity<U> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, U::SYMBOL)
    }
}

impl<U: Unit> Quantity<U> {
    pub const fn new(value: f64) -> Self {
        Quantity {
            value,
            unit: PhantomData,
        }
    }

    /// Value in base SI units.
    pub fn si(self) -> f64 {
        self.value
    }
}

impl<U: Unit> FromStr for Quantity<U> {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        parse_scaled(text, U::SYMBOL).map(Quantity::new)
    }
}

impl<U: Unit> Serialize for Quantity<U> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de, U: Unit> Deserialize<'de> for Quantity<U> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

fn prefix_factor(prefix: &str) -> Option<f64> {
    Some(match prefix {
        "" => 1.0,
        "f" => 1e-15,
        "p" => 1e-12,
        "n" => 1e-9,
        "u" | "µ" | "μ" => 1e-6,
        "m" => 1e-3,
        "k" => 1e3,
        "M" => 1e6,
        "G" => 1e9,
        "a" => 1e-18,
        _ => return None,
    })
}

/// Scale factor of a single unit factor such as `mW` against its base `W`.
fn factor_scale(written: &str, base: &str) -> Option<f64> {
    written.strip_suffix(base).and_then(prefix_factor)
}

/// Parses `"<number> <unit>"` (space optional) where `<unit>` must match
/// `symbol` up to SI prefixes on each `/`-separated factor.
pub fn parse_scaled(text: &str, symbol: &str) -> Result<f64> {
    let err = |reason: String| Error::Quantity {
        text: text.to_string(),
        reason,
    };
    let trimmed = text.trim();
    let split = trimmed
        .char_indices()
        .find(|&(i, c)| {
            c.is_alphabetic() && !(matches!(c, 'e' | 'E') && exponent_follows(trimmed, i))
        })
        .map(|(i, _)| i)
        .ok_or_else(|| err(format!("missing unit, expected {symbol}")))?;
    let (number, unit) = trimmed.split_at(split);
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| err(format!("'{}' is not a number", number.trim())))?;
    if !value.is_finite() {
        return Err(err("value must be finite".into()));
    }

    let written: Vec<&str> = unit.trim().split('/').collect();
    let bases: Vec<&str> = symbol.split('/').collect();
    if written.len() != bases.len() {
        return Err(err(format!("unit '{}' is not {symbol}", unit.trim())));
    }
    let mut scale = 1.0;
    for (i, (w, b)) in written.iter().zip(&bases).enumerate() {
        let f = factor_scale(w.trim(), b)
            .ok_or_else(|| err(format!("unit '{}' is not {symbol}", unit.trim())))?;
        if i == 0 {
            scale *= f;
        } else {
            scale /= f;
        }
    }
    Ok(value * scale)
}

// "1e-3 W": the 'e' belongs to the number when a digit or sign follows it.
fn exponent_follows(text: &str, i: usize) -> bool {
    let before = text[..i].chars().last();
    let after = text[i + 1..].chars().next();
    matches!(before, Some(c) if c.is_ascii_digit() || c == '.')
        && matches!(after, Some(c) if c.is_ascii_digit() || c == '-' || c == '+')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixes_and_spacing() {
        assert!((parse_scaled("130 uW", "W").unwrap() - 130e-6).abs() < 1e-18);
        assert!((parse_scaled("15mW", "W").unwrap() - 15e-3).abs() < 1e-15);
        assert_eq!(parse_scaled("795 nm", "m").unwrap(), 795e-9);
        assert_eq!(parse_scaled("2 m", "m").unwrap(), 2.0);
        assert_eq!(parse_scaled("10 kHz", "Hz").unwrap(), 10e3);
        assert_eq!(parse_scaled("0.2 N/m", "N/m").unwrap(), 0.2);
        assert_eq!(parse_scaled("1.5e-3 W", "W").unwrap(), 1.5e-3);
    }

    #[test]
    fn compound_prefix_on_denominator() {
        let v = parse_scaled("40 fm/mV", "m/V").unwrap();
        assert!((v - 40e-15 / 1e-3).abs() < 1e-20);
    }

    #[test]
    fn rejects_wrong_or_missing_unit() {
        assert!(parse_scaled("130", "W").is_err());
        assert!(parse_scaled("130 uJ", "W").is_err());
        assert!(parse_scaled("130 xW", "W").is_err());
        assert!(parse_scaled("abc W", "W").is_err());
    }

    #[test]
    fn quantity_serde_round_trip() {
        #[derive(Serialize, Deserialize)]
        struct T {
            p: Quantity<Watt>,
        }
        let t: T = toml::from_str("p = \"2 mW\"").unwrap();
        assert_eq!(t.p.si(), 2e-3);
        let back: T = toml::from_str(&toml::to_string(&t).unwrap()).unwrap();
        assert_eq!(back.p.si(), 2e-3);
    }
}
