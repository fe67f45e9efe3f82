//! Physical quantities written as `"<value> <unit>"` strings.
//!
//! Frequencies quoted in Hz (and its multiples) are ordinary frequencies
//! ω/2π and are multiplied by 2π on parse; `rad/s` values are taken as
//! angular. A quantity keeps its source text so a manifest reproduces the
//! exact same numbers when parsed again.

use std::fmt;
use std::marker::PhantomData;

use magnonlab::units::{ghz, hz_to_rad, khz, mhz, rad_to_hz};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

pub trait Dimension {
    const WHAT: &'static str;
    const UNITS: &'static [&'static str];
    /// Value in internal units, or `None` for an unknown unit.
    fn convert(num: &str, unit: &str) -> Option<f64>;
}

/// `num × 10^shift`, rounded once from the decimal text so that "2.78 us"
/// gives exactly the literal 2.78e-6.
fn decimal(num: &str, shift: i32) -> f64 {
    let (mant, exp) = match num.find(['e', 'E']) {
        Some(i) => (&num[..i], num[i + 1..].parse::<i32>().expect("checked by caller")),
        None => (num, 0),
    };
    format!("{mant}e{}", exp + shift).parse().expect("checked by caller")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyDim;
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDim;
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDim;
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerWattDim;
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleDim;

impl Dimension for FrequencyDim {
    const WHAT: &'static str = "frequency";
    const UNITS: &'static [&'static str] = &["Hz", "kHz", "MHz", "GHz", "rad/s", "krad/s", "Mrad/s", "Grad/s"];
    fn convert(num: &str, unit: &str) -> Option<f64> {
        let v: f64 = num.parse().ok()?;
        Some(match unit {
            "Hz" => hz_to_rad(v),
            "kHz" => khz(v),
            "MHz" => mhz(v),
            "GHz" => ghz(v),
            "rad/s" => v,
            "krad/s" => decimal(num, 3),
            "Mrad/s" => decimal(num, 6),
            "Grad/s" => decimal(num, 9),
            _ => return None,
        })
    }
}

impl Dimension for TimeDim {
    const WHAT: &'static str = "time";
    const UNITS: &'static [&'static str] = &["s", "ms", "us", "µs", "ns", "ps"];
    fn convert(num: &str, unit: &str) -> Option<f64> {
        let shift = match unit {
            "s" => 0,
            "ms" => -3,
            "us" | "µs" => -6,
            "ns" => -9,
            "ps" => -12,
            _ => return None,
        };
        Some(decimal(num, shift))
    }
}

impl Dimension for PowerDim {
    const WHAT: &'static str = "power";
    const UNITS: &'static [&'static str] = &["W", "mW", "uW", "µW", "nW", "pW"];
    fn convert(num: &str, unit: &str) -> Option<f64> {
        let shift = match unit {
            "W" => 0,
            "mW" => -3,
            "uW" | "µW" => -6,
            "nW" => -9,
            "pW" => -12,
            _ => return None,
        };
        Some(decimal(num, shift))
    }
}

impl Dimension for PerWattDim {
    const WHAT: &'static str = "magnons per watt";
    const UNITS: &'static [&'static str] = &["1/W", "magnons/W"];
    fn convert(num: &str, unit: &str) -> Option<f64> {
        matches!(unit, "1/W" | "magnons/W").then(|| num.parse().ok()).flatten()
    }
}

impl Dimension for AngleDim {
    const WHAT: &'static str = "angle";
    const UNITS: &'static [&'static str] = &["rad", "deg"];
    fn convert(num: &str, unit: &str) -> Option<f64> {
        let v: f64 = num.parse().ok()?;
        match unit {
            "rad" => Some(v),
            "deg" => Some(v.to_radians()),
            _ => None,
        }
    }
}

pub struct Quantity<D> {
    value: f64,
    text: String,
    _dim: PhantomData<D>,
}

pub type Frequency = Quantity<FrequencyDim>;
pub type Time = Quantity<TimeDim>;
pub type Power = Quantity<PowerDim>;
pub type PerWatt = Quantity<PerWattDim>;
pub type Angle = Quantity<AngleDim>;

impl<D: Dimension> Quantity<D> {
    pub fn parse(text: &str) -> Result<Self, String> {
        let t = text.trim();
        let (num, unit) = t.split_once(char::is_whitespace).ok_or_else(|| {
            format!("{} `{t}` needs a unit tag (one of {})", D::WHAT, D::UNITS.join(", "))
        })?;
        let v: f64 = num.parse().map_err(|_| format!("`{num}` is not a number"))?;
        if !v.is_finite() {
            return Err(format!("{} `{t}` is not finite", D::WHAT));
        }
        let unit = unit.trim();
        let value = D::convert(num, unit)
            .ok_or_else(|| format!("unknown {} unit `{unit}` (expected one of {})", D::WHAT, D::UNITS.join(", ")))?;
        Ok(Self {
            value,
            text: t.to_string(),
            _dim: PhantomData,
        })
    }

    /// Literal used for built-in defaults.
    pub fn lit(text: &str) -> Self {
        Self::parse(text).expect("valid literal")
    }

    /// Value in internal units: rad/s, s, W, 1/W or rad.
    pub fn si(&self) -> f64 {
        self.value
    }
}

impl Frequency {
    /// Exact-round-trip text for a computed angular frequency.
    pub fn from_rad(v: f64) -> Self {
        Self::lit(&format!("{v:e} rad/s"))
    }

    /// Ordinary frequency f = ω/2π, computed without the 2π round trip when
    /// the source text was already in Hz.
    pub fn hz(&self) -> f64 {
        let (num, unit) = self.text.split_once(char::is_whitespace).expect("parsed");
        match unit.trim() {
            "Hz" => decimal(num, 0),
            "kHz" => decimal(num, 3),
            "MHz" => decimal(num, 6),
            "GHz" => decimal(num, 9),
            _ => rad_to_hz(self.value),
        }
    }
}

impl<D> Clone for Quantity<D> {
    fn clone(&self) -> Self {
        Self {
            value: self.value,
            text: self.text.clone(),
            _dim: PhantomData,
        }
    }
}

impl<D> PartialEq for Quantity<D> {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl<D> fmt::Debug for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.text)
    }
}

impl<D> fmt::Display for Quantity<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl<D> Serialize for Quantity<D> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de, D: Dimension> Deserialize<'de> for Quantity<D> {
    fn deserialize<De: Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        struct V<D>(PhantomData<D>);
        impl<D: Dimension> de::Visitor<'_> for V<D> {
            type Value = Quantity<D>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a {} string such as \"1.5 {}\"", D::WHAT, D::UNITS[0])
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                Quantity::parse(v).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Err(E::custom(format!("{} {v} needs a unit tag (one of {})", D::WHAT, D::UNITS.join(", "))))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                self.visit_i64(v as i64)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Err(E::custom(format!("{} {v} needs a unit tag (one of {})", D::WHAT, D::UNITS.join(", "))))
            }
        }
        d.deserialize_any(V(PhantomData))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hz_values_pick_up_two_pi() {
        let f = Frequency::parse("4.81 MHz").unwrap();
        assert_eq!(f.si(), mhz(4.81));
        assert_eq!(f.hz(), 4.81e6);
        assert_eq!(Frequency::parse("3 rad/s").unwrap().si(), 3.0);
        assert_eq!(Time::parse("2.78 us").unwrap().si(), 2.78e-6);
        assert_eq!(Power::parse("1 uW").unwrap().si(), 1e-6);
        assert!((Angle::parse("180 deg").unwrap().si() - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn unit_errors() {
        assert!(Frequency::parse("4.81").unwrap_err().contains("unit tag"));
        assert!(Frequency::parse("4.81 s").unwrap_err().contains("unknown frequency unit"));
        assert!(Time::parse("abc ns").is_err());
    }

    #[test]
    fn computed_values_round_trip() {
        let v = 3.0221236376e7_f64 / 7.0;
        assert_eq!(Frequency::from_rad(v).si(), v);
        assert_eq!(Frequency::parse(&Frequency::from_rad(v).to_string()).unwrap().si(), v);
    }
}
