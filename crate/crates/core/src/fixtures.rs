//! Bundled per-area parameter distributions for the 10, 32 and 100 um devices.

use crate::data_io::{parse_gaussian, GaussianParamSet};
use crate::params::ModelParameters;

const REFERENCE_JSON: [&str; 3] = [
    include_str!("../fixtures/reference_10um.json"),
    include_str!("../fixtures/reference_32um.json"),
    include_str!("../fixtures/reference_100um.json"),
];

/// The three reference distributions, smallest area first.
pub fn reference_sets() -> Vec<GaussianParamSet> {
    REFERENCE_JSON
        .iter()
        .map(|s| parse_gaussian(s).expect("bundled fixture is valid"))
        .collect()
}

/// Mean models of [`reference_sets`], smallest area first.
pub fn reference_means() -> [ModelParameters; 3] {
    let sets = reference_sets();
    [sets[0].means(), sets[1].means(), sets[2].means()]
}

/// Raw JSON text of the bundled fixture for `label` ("10um", "32um" or "100um").
pub fn reference_json(label: &str) -> Option<&'static str> {
    match label {
        "10um" => Some(REFERENCE_JSON[0]),
        "32um" => Some(REFERENCE_JSON[1]),
        "100um" => Some(REFERENCE_JSON[2]),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Param;

    #[test]
    fn reference_values_as_typed() {
        let sets = reference_sets();
        let labels: Vec<&str> = sets.iter().map(|s| s.area_label.as_str()).collect();
        assert_eq!(labels, ["10um", "32um", "100um"]);
        let a_n: Vec<f64> = sets.iter().map(|s| s.get(Param::An).mean).collect();
        assert_eq!(a_n, [2.66e-2, 2.57e-2, 2.43e-2]);
        let g_min_p: Vec<f64> = sets.iter().map(|s| s.get(Param::GMinP).mean).collect();
        assert_eq!(g_min_p, [3.14e-2, 5.99e-2, 8.55e-2]);
        assert_eq!(sets[0].get(Param::BMaxN).mean, 6.27);
        assert_eq!(sets[0].get(Param::BMaxN).sd, 1.35e-1);
        assert_eq!(sets[2].get(Param::GMaxP).sd, 1.12e-2);
        for s in &sets {
            for (p, v) in [(Param::Ap, 7.10e-2), (Param::Xp, 1.10e-1), (Param::AlphaP, 9.20)] {
                assert_eq!(s.get(p).mean, v);
                assert_eq!(s.get(p).sd, 0.0);
            }
            for p in Param::THRESHOLDS {
                assert_eq!(s.get(p).mean, 0.0);
                assert_eq!(s.get(p).sd, 0.0);
            }
        }
    }
}
