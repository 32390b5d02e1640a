//! Parameter vector of the compact model.
//!
//! Every fitted quantity is addressable through [`Param`], which lets the
//! fitting, sampling and sensitivity code treat the parameter set as a
//! fixed-order vector while the model code reads named fields.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Direction in which a positive threshold response moves the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Polarity {
    #[default]
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }

    pub fn from_sign(value: f64) -> Result<Self> {
        if value == 1.0 {
            Ok(Polarity::Positive)
        } else if value == -1.0 {
            Ok(Polarity::Negative)
        } else {
            Err(Error::validation(format!("eta must be +1 or -1, got {value}")))
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

impl Serialize for Polarity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.sign() as i8)
    }
}

impl<'de> Deserialize<'de> for Polarity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Polarity::from_sign(v).map_err(D::Error::custom)
    }
}

/// One of the sixteen fitted model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    Ap,
    An,
    Vp,
    Vn,
    Xp,
    Xn,
    AlphaP,
    AlphaN,
    GMaxP,
    BMaxP,
    GMaxN,
    BMaxN,
    GMinP,
    BMinP,
    GMinN,
    BMinN,
}

impl Param {
    pub const ALL: [Param; 16] = [
        Param::Ap,
        Param::An,
        Param::Vp,
        Param::Vn,
        Param::Xp,
        Param::Xn,
        Param::AlphaP,
        Param::AlphaN,
        Param::GMaxP,
        Param::BMaxP,
        Param::GMaxN,
        Param::BMaxN,
        Param::GMinP,
        Param::BMinP,
        Param::GMinN,
        Param::BMinN,
    ];

    /// Parameters held at zero by the fitting pipeline (no switching threshold).
    pub const THRESHOLDS: [Param; 2] = [Param::Vp, Param::Vn];

    /// Parameters frozen to their cross-area average in the second regression.
    pub const AREA_INDEPENDENT: [Param; 3] = [Param::Ap, Param::AlphaP, Param::Xp];

    pub fn name(self) -> &'static str {
        match self {
            Param::Ap => "A_p",
            Param::An => "A_n",
            Param::Vp => "V_p",
            Param::Vn => "V_n",
            Param::Xp => "x_p",
            Param::Xn => "x_n",
            Param::AlphaP => "alpha_p",
            Param::AlphaN => "alpha_n",
            Param::GMaxP => "g_max_p",
            Param::BMaxP => "b_max_p",
            Param::GMaxN => "g_max_n",
            Param::BMaxN => "b_max_n",
            Param::GMinP => "g_min_p",
            Param::BMinP => "b_min_p",
            Param::GMinN => "g_min_n",
            Param::BMinN => "b_min_n",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Window onsets live in the open unit interval; everything else is a
    /// non-negative magnitude.
    pub fn is_onset(self) -> bool {
        matches!(self, Param::Xp | Param::Xn)
    }

    pub fn admits(self, value: f64) -> bool {
        if !value.is_finite() {
            return false;
        }
        if self.is_onset() {
            value > 0.0 && value < 1.0
        } else {
            value >= 0.0
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::format(None, format!("unknown parameter name '{s}'")))
    }
}

impl Serialize for Param {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Param {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParameters {
    pub a_p: f64,
    pub a_n: f64,
    pub v_p: f64,
    pub v_n: f64,
    pub x_p: f64,
    pub x_n: f64,
    pub alpha_p: f64,
    pub alpha_n: f64,
    /// LRS forward (tunnelling) magnitude, amperes.
    pub g_max_p: f64,
    pub b_max_p: f64,
    /// LRS reverse (Schottky-like) magnitude, amperes.
    pub g_max_n: f64,
    pub b_max_n: f64,
    /// HRS forward (Schottky-like) magnitude, amperes.
    pub g_min_p: f64,
    pub b_min_p: f64,
    /// HRS reverse (tunnelling) magnitude, amperes.
    pub g_min_n: f64,
    pub b_min_n: f64,
    pub eta: Polarity,
    pub x0: f64,
}

impl ModelParameters {
    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Ap => self.a_p,
            Param::An => self.a_n,
            Param::Vp => self.v_p,
            Param::Vn => self.v_n,
            Param::Xp => self.x_p,
            Param::Xn => self.x_n,
            Param::AlphaP => self.alpha_p,
            Param::AlphaN => self.alpha_n,
            Param::GMaxP => self.g_max_p,
            Param::BMaxP => self.b_max_p,
            Param::GMaxN => self.g_max_n,
            Param::BMaxN => self.b_max_n,
            Param::GMinP => self.g_min_p,
            Param::BMinP => self.b_min_p,
            Param::GMinN => self.g_min_n,
            Param::BMinN => self.b_min_n,
        }
    }

    pub fn set(&mut self, p: Param, value: f64) {
        let slot = match p {
            Param::Ap => &mut self.a_p,
            Param::An => &mut self.a_n,
            Param::Vp => &mut self.v_p,
            Param::Vn => &mut self.v_n,
            Param::Xp => &mut self.x_p,
            Param::Xn => &mut self.x_n,
            Param::AlphaP => &mut self.alpha_p,
            Param::AlphaN => &mut self.alpha_n,
            Param::GMaxP => &mut self.g_max_p,
            Param::BMaxP => &mut self.b_max_p,
            Param::GMaxN => &mut self.g_max_n,
            Param::BMaxN => &mut self.b_max_n,
            Param::GMinP => &mut self.g_min_p,
            Param::BMinP => &mut self.b_min_p,
            Param::GMinN => &mut self.g_min_n,
            Param::BMinN => &mut self.b_min_n,
        };
        *slot = value;
    }

    pub fn with(mut self, p: Param, value: f64) -> Self {
        self.set(p, value);
        self
    }

    /// Build a parameter set from values listed in [`Param::ALL`] order.
    pub fn from_values(values: [f64; 16], eta: Polarity, x0: f64) -> Self {
        let mut out = ModelParameters {
            a_p: 0.0,
            a_n: 0.0,
            v_p: 0.0,
            v_n: 0.0,
            x_p: 0.0,
            x_n: 0.0,
            alpha_p: 0.0,
            alpha_n: 0.0,
            g_max_p: 0.0,
            b_max_p: 0.0,
            g_max_n: 0.0,
            b_max_n: 0.0,
            g_min_p: 0.0,
            b_min_p: 0.0,
            g_min_n: 0.0,
            b_min_n: 0.0,
            eta,
            x0,
        };
        for (p, v) in Param::ALL.into_iter().zip(values) {
            out.set(p, v);
        }
        out
    }

    pub fn values(&self) -> [f64; 16] {
        Param::ALL.map(|p| self.get(p))
    }

    pub fn validate(&self) -> Result<()> {
        let bad: Vec<String> = Param::ALL
            .into_iter()
            .filter(|p| !p.admits(self.get(*p)))
            .map(|p| format!("{}={}", p.name(), self.get(p)))
            .collect();
        if !bad.is_empty() {
            return Err(Error::validation(format!(
                "parameters outside their admissible range: {}",
                bad.join(", ")
            )));
        }
        if !(0.0..=1.0).contains(&self.x0) {
            return Err(Error::validation(format!("x0 must lie in [0, 1], got {}", self.x0)));
        }
        Ok(())
    }

    pub fn to_json_map(&self) -> Map<String, Value> {
        let mut map = Map::new();
        for p in Param::ALL {
            map.insert(p.name().to_string(), Value::from(self.get(p)));
        }
        map.insert("eta".into(), Value::from(self.eta.sign() as i64));
        map.insert("x0".into(), Value::from(self.x0));
        map
    }

    /// Parse the flat JSON object layout; does not check value ranges.
    pub fn from_json_map(map: &Map<String, Value>) -> Result<Self> {
        let expected: Vec<&str> = Param::ALL
            .iter()
            .map(|p| p.name())
            .chain(["eta", "x0"])
            .collect();
        check_keys(map, &expected, "parameter set")?;
        let mut values = [0.0; 16];
        for (slot, p) in values.iter_mut().zip(Param::ALL) {
            *slot = number(map, p.name())?;
        }
        let eta = Polarity::from_sign(number(map, "eta")?)
            .map_err(|e| Error::format(None, e.to_string()))?;
        Ok(Self::from_values(values, eta, number(map, "x0")?))
    }
}

impl Serialize for ModelParameters {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelParameters {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = Map::deserialize(d)?;
        ModelParameters::from_json_map(&map).map_err(D::Error::custom)
    }
}

pub(crate) fn check_keys(map: &Map<String, Value>, expected: &[&str], what: &str) -> Result<()> {
    let missing: Vec<&str> = expected
        .iter()
        .copied()
        .filter(|k| !map.contains_key(*k))
        .collect();
    let unknown: Vec<&str> = map
        .keys()
        .map(String::as_str)
        .filter(|k| !expected.contains(k))
        .collect();
    if missing.is_empty() && unknown.is_empty() {
        return Ok(());
    }
    let mut parts = Vec::new();
    if !missing.is_empty() {
        parts.push(format!("missing keys [{}]", missing.join(", ")));
    }
    if !unknown.is_empty() {
        parts.push(format!("unknown keys [{}]", unknown.join(", ")));
    }
    Err(Error::format(None, format!("{what}: {}", parts.join("; "))))
}

pub(crate) fn number(map: &Map<String, Value>, key: &str) -> Result<f64> {
    map.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::format(None, format!("key '{key}' must be a number")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn param_names_round_trip() {
        for p in Param::ALL {
            assert_eq!(p.name().parse::<Param>().unwrap(), p);
            assert_eq!(Param::ALL[p.index()], p);
        }
        assert!("Vth".parse::<Param>().is_err());
    }

    #[test]
    fn onsets_are_open_interval() {
        assert!(!Param::Xp.admits(0.0));
        assert!(!Param::Xn.admits(1.0));
        assert!(Param::Xn.admits(0.5));
        assert!(Param::GMaxP.admits(0.0));
        assert!(!Param::GMaxP.admits(-1e-30));
        assert!(!Param::BMinN.admits(f64::NAN));
    }

    #[test]
    fn validate_rejects_bad_x0() {
        let p = fixtures::reference_means()[0];
        assert!(p.validate().is_ok());
        assert!(ModelParameters { x0: 1.5, ..p }.validate().is_err());
        assert!(p.with(Param::GMaxP, -1.0).validate().is_err());
    }

    #[test]
    fn json_keys_are_checked() {
        let p = fixtures::reference_means()[0];
        let mut map = p.to_json_map();
        map.remove("b_min_n");
        map.insert("bogus".into(), Value::from(1.0));
        let err = ModelParameters::from_json_map(&map).unwrap_err().to_string();
        assert!(err.contains("missing keys [b_min_n]"), "{err}");
        assert!(err.contains("unknown keys [bogus]"), "{err}");
    }

    #[test]
    fn eta_must_be_unit() {
        assert!(Polarity::from_sign(0.5).is_err());
        assert_eq!(Polarity::from_sign(-1.0).unwrap(), Polarity::Negative);
        assert_eq!(Polarity::Negative.flipped(), Polarity::Positive);
    }
}
