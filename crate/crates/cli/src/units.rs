//! Unit-tagged quantities. A quantity is either a bare number in the internal
//! unit or `{"value": …, "unit": "…"}`; it is stored converted.

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use std::marker::PhantomData;

/// A physical dimension with its accepted unit spellings.
pub trait Dimension {
    const NAME: &'static str;
    /// (spelling, factor to the internal unit); the first entry is internal.
    const UNITS: &'static [(&'static str, f64)];

    fn factor(unit: &str) -> Option<f64> {
        Self::UNITS.iter().find(|(u, _)| *u == unit).map(|&(_, f)| f)
    }

    fn spellings() -> String {
        Self::UNITS.iter().map(|(u, _)| *u).collect::<Vec<_>>().join(", ")
    }
}

macro_rules! dimension {
    ($name:ident, $label:literal, [$(($u:literal, $f:expr)),+ $(,)?]) => {
        #[derive(Copy, Clone, Debug, PartialEq)]
        pub struct $name;
        impl Dimension for $name {
            const NAME: &'static str = $label;
            const UNITS: &'static [(&'static str, f64)] = &[$(($u, $f)),+];
        }
    };
}

dimension!(Length, "length", [("Å", 1.0), ("A", 1.0), ("angstrom", 1.0), ("nm", 10.0), ("µm", 1e4), ("um", 1e4)]);
dimension!(Wavevector, "wavevector", [
    ("1/Å", 1.0), ("1/A", 1.0), ("Å^-1", 1.0), ("1/nm", 0.1), ("nm^-1", 0.1), ("1/µm", 1e-4), ("1/um", 1e-4), ("µm^-1", 1e-4),
]);
dimension!(Energy, "energy", [("meV", 1.0), ("µeV", 1e-3), ("ueV", 1e-3), ("eV", 1e3)]);
dimension!(Temperature, "temperature", [("K", 1.0), ("mK", 1e-3)]);
dimension!(Angle, "angle", [("rad", 1.0), ("deg", std::f64::consts::PI / 180.0)]);

/// Numeric payload of a quantity.
pub trait Payload: Copy + fmt::Debug + PartialEq + Serialize {
    fn from_json(v: &Value) -> Option<Self>;
    fn scaled(self, f: f64) -> Self;
    const SHAPE: &'static str;
}

impl Payload for f64 {
    fn from_json(v: &Value) -> Option<Self> { v.as_f64() }
    fn scaled(self, f: f64) -> Self { self * f }
    const SHAPE: &'static str = "a number";
}

impl Payload for [f64; 3] {
    fn from_json(v: &Value) -> Option<Self> {
        let a = v.as_array()?;
        if a.len() != 3 {
            return None;
        }
        Some([a[0].as_f64()?, a[1].as_f64()?, a[2].as_f64()?])
    }
    fn scaled(self, f: f64) -> Self { self.map(|x| x * f) }
    const SHAPE: &'static str = "a 3-vector";
}

/// Value of dimension `D`, held in the internal unit.
#[derive(Copy, Clone, PartialEq)]
pub struct Quantity<D, T = f64> {
    pub value: T,
    _dim: PhantomData<D>,
}

pub type Vector<D> = Quantity<D, [f64; 3]>;

impl<D, T> Quantity<D, T> {
    pub const fn new(value: T) -> Self { Self { value, _dim: PhantomData } }
}

impl<D, T: fmt::Debug> fmt::Debug for Quantity<D, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result { self.value.fmt(f) }
}

impl<D: Dimension, T: Payload> Serialize for Quantity<D, T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> { self.value.serialize(s) }
}

impl<'de, D: Dimension, T: Payload> Deserialize<'de> for Quantity<D, T> {
    fn deserialize<De: Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        let v = Value::deserialize(d)?;
        let expected = || {
            de::Error::custom(format!(
                "expected {} ({} in {}) or {{\"value\": …, \"unit\": …}}",
                T::SHAPE,
                D::NAME,
                D::UNITS[0].0
            ))
        };
        if let Some(x) = T::from_json(&v) {
            return Ok(Self::new(x));
        }
        let obj = v.as_object().ok_or_else(expected)?;
        if let Some(k) = obj.keys().find(|k| *k != "value" && *k != "unit") {
            return Err(de::Error::custom(format!("unknown field `{k}` in quantity, expected `value` and `unit`")));
        }
        let x = obj.get("value").and_then(T::from_json).ok_or_else(expected)?;
        let unit = obj.get("unit").and_then(Value::as_str).ok_or_else(|| de::Error::custom("quantity needs a string `unit`"))?;
        let f = D::factor(unit).ok_or_else(|| {
            de::Error::custom(format!("unit `{unit}` is not a {} unit (accepted: {})", D::NAME, D::spellings()))
        })?;
        Ok(Self::new(x.scaled(f)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        let k: Vector<Wavevector> = serde_json::from_str(r#"{"value": [0, 0, 1.5e4], "unit": "1/µm"}"#).unwrap();
        assert!((k.value[2] - 1.5).abs() < 1e-12);
        let d: Quantity<Length> = serde_json::from_str(r#"{"value": 8, "unit": "nm"}"#).unwrap();
        assert_eq!(d.value, 80.0);
        let bare: Quantity<Energy> = serde_json::from_str("0.25").unwrap();
        assert_eq!(bare.value, 0.25);
    }

    #[test]
    fn mismatched_unit() {
        let e = serde_json::from_str::<Quantity<Length>>(r#"{"value": 1, "unit": "meV"}"#).unwrap_err();
        assert!(e.to_string().contains("not a length unit"), "{e}");
        assert!(serde_json::from_str::<Vector<Length>>("[1, 2]").is_err());
    }
}
