//! Deterministic JSON output.
//!
//! Reals are written with exactly six decimals and map keys come out sorted
//! (structs declare their fields alphabetically, maps are `BTreeMap`s), so a
//! given report always serializes to the same bytes.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// A real serialized with six fixed decimals. Non-finite values become `null`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Fixed6(pub f64);

impl Serialize for Fixed6 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let mut text = format!("{:.6}", self.0);
        if text == "-0.000000" {
            text.remove(0);
        }
        let raw = RawValue::from_string(text).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl From<f64> for Fixed6 {
    fn from(v: f64) -> Self {
        Fixed6(v)
    }
}

pub fn fixed(v: Option<f64>) -> Option<Fixed6> {
    v.map(Fixed6)
}

/// Pretty-printed JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
