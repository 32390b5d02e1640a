//! Classification of how mean parameters change with device area.

use std::fmt;

use serde::Serialize;

use crate::data_io::GaussianParamSet;
use crate::error::{Error, Result};
use crate::params::Param;

/// Relative spread below which a parameter counts as constant.
pub const FLAT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Decreasing,
    Increasing,
    Flat,
    NonMonotonic,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::Decreasing => "decreasing",
            Trend::Increasing => "increasing",
            Trend::Flat => "flat",
            Trend::NonMonotonic => "non-monotonic",
        })
    }
}

pub fn classify(values: &[f64]) -> Trend {
    let hi = values.iter().cloned().fold(f64::MIN, f64::max);
    let lo = values.iter().cloned().fold(f64::MAX, f64::min);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || (hi - lo) / scale < FLAT_TOLERANCE {
        Trend::Flat
    } else if values.windows(2).all(|w| w[1] < w[0]) {
        Trend::Decreasing
    } else if values.windows(2).all(|w| w[1] > w[0]) {
        Trend::Increasing
    } else {
        Trend::NonMonotonic
    }
}

/// Trend of every parameter mean across `sets`, ordered small to large area.
pub fn trend_check(sets: &[GaussianParamSet]) -> Result<Vec<(Param, Trend)>> {
    if sets.len() < 2 {
        return Err(Error::validation(format!(
            "trend check needs at least two areas, got {}",
            sets.len()
        )));
    }
    Ok(Param::ALL
        .into_iter()
        .map(|p| {
            let means: Vec<f64> = sets.iter().map(|s| s.get(p).mean).collect();
            (p, classify(&means))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn classification() {
        assert_eq!(classify(&[3.0, 2.0, 1.0]), Trend::Decreasing);
        assert_eq!(classify(&[1.0, 2.0, 3.0]), Trend::Increasing);
        assert_eq!(classify(&[1.0, 3.0, 2.0]), Trend::NonMonotonic);
        assert_eq!(classify(&[0.0, 0.0]), Trend::Flat);
        assert_eq!(classify(&[1.0, 1.0 + 1e-9]), Trend::Flat);
        assert_eq!(classify(&[1.0, 1.0, 2.0]), Trend::NonMonotonic);
    }

    #[test]
    fn identical_sets_are_flat() {
        let s = fixtures::reference_sets()[0].clone();
        let t = trend_check(&[s.clone(), s]).unwrap();
        assert!(t.iter().all(|(_, tr)| *tr == Trend::Flat));
        assert!(trend_check(&fixtures::reference_sets()[..1]).is_err());
    }
}
