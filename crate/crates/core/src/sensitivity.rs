//! One-at-a-time sensitivity: the relative change in a single parameter that
//! moves the simulated trace 10 % (MPE) away from the reference trace.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fitting::mpe_currents;
use crate::params::{ModelParameters, Param};
use crate::simulator::{simulate, SimulationConfig};
use crate::waveform::{SampledWaveform, SweepSpec};

/// MPE, percent, that a perturbation must reach.
pub const TARGET_MPE: f64 = 10.0;
/// Accepted distance from [`TARGET_MPE`].
pub const MPE_TOLERANCE: f64 = 0.1;
pub const MAX_BISECTIONS: usize = 60;
/// Points of the fallback scan over `(0, 1]`.
pub const SCAN_POINTS: usize = 200;
/// Largest relative decrease probed for `x_p` and `x_n`, which must stay positive.
pub const ONSET_MAX_DECREASE: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Decrease,
    Increase,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Decrease, Direction::Increase];

    fn factor(self, delta: f64) -> f64 {
        match self {
            Direction::Decrease => 1.0 - delta,
            Direction::Increase => 1.0 + delta,
        }
    }
}

/// Change needed to reach the target error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sensitivity {
    /// Relative change in percent, in `(0, 100]`.
    Percent(f64),
    /// Even a 100 % change stays below the target.
    OverCutoff,
}

impl Sensitivity {
    /// Value used for averaging; over-cutoff counts as 100.
    pub fn score(self) -> f64 {
        match self {
            Sensitivity::Percent(p) => p,
            Sensitivity::OverCutoff => 100.0,
        }
    }

    pub fn label(self) -> String {
        match self {
            Sensitivity::Percent(p) => format!("{p:.1}"),
            Sensitivity::OverCutoff => ">100.0".into(),
        }
    }
}

impl Serialize for Sensitivity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Sensitivity::Percent(p) => s.serialize_f64(*p),
            Sensitivity::OverCutoff => s.serialize_str("over-cutoff"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSensitivity {
    pub param: Param,
    pub decrease: Sensitivity,
    pub increase: Sensitivity,
}

impl ParamSensitivity {
    pub fn average(&self) -> f64 {
        0.5 * (self.decrease.score() + self.increase.score())
    }
}

/// Both directions for every parameter except the thresholds, in parameter order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub entries: Vec<ParamSensitivity>,
    /// Searches that fell back to a scan because the error was not monotone.
    pub warnings: Vec<String>,
}

impl SensitivityReport {
    pub fn entry(&self, p: Param) -> Option<&ParamSensitivity> {
        self.entries.iter().find(|e| e.param == p)
    }

    /// Parameters by ascending average change (most sensitive first).
    pub fn ranking(&self) -> Vec<(Param, f64)> {
        rank(self.entries.iter().map(|e| (e.param, e.average())).collect())
    }
}

fn rank(mut scores: Vec<(Param, f64)>) -> Vec<(Param, f64)> {
    // stable sort keeps parameter order among ties
    scores.sort_by(|a, b| a.1.total_cmp(&b.1));
    scores
}

/// Reports for several areas side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityTable {
    pub labels: Vec<String>,
    pub reports: Vec<SensitivityReport>,
}

impl SensitivityTable {
    pub fn new(labels: Vec<String>, reports: Vec<SensitivityReport>) -> Result<Self> {
        if labels.len() != reports.len() || reports.is_empty() {
            return Err(Error::validation("one label is needed per sensitivity report"));
        }
        Ok(SensitivityTable { labels, reports })
    }

    fn params(&self) -> Vec<Param> {
        self.reports[0].entries.iter().map(|e| e.param).collect()
    }

    /// Mean of all decrease/increase scores of `p` across the reports.
    pub fn average(&self, p: Param) -> f64 {
        let scores: Vec<f64> = self
            .reports
            .iter()
            .filter_map(|r| r.entry(p))
            .flat_map(|e| [e.decrease.score(), e.increase.score()])
            .collect();
        scores.iter().sum::<f64>() / scores.len() as f64
    }

    pub fn ranking(&self) -> Vec<(Param, f64)> {
        rank(self.params().into_iter().map(|p| (p, self.average(p))).collect())
    }

    /// One row per parameter in ranking order; decrease and increase columns
    /// per area followed by the average.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter");
        for l in &self.labels {
            let _ = write!(out, ",{l} decrease %,{l} increase %");
        }
        out.push_str(",average %\n");
        for (p, avg) in self.ranking() {
            out.push_str(p.name());
            for r in &self.reports {
                let e = r.entry(p).expect("reports cover the same parameters");
                let _ = write!(out, ",{},{}", e.decrease.label(), e.increase.label());
            }
            let _ = writeln!(out, ",{avg:.1}");
        }
        out
    }
}

struct Probe<'a> {
    params: &'a ModelParameters,
    param: Param,
    direction: Direction,
    waveform: &'a SampledWaveform,
    cfg: &'a SimulationConfig,
    reference: &'a [f64],
}

impl Probe<'_> {
    fn mpe(&self, delta: f64) -> Result<f64> {
        let delta = if self.param.is_onset() && self.direction == Direction::Decrease {
            delta.min(ONSET_MAX_DECREASE)
        } else {
            delta
        };
        let mut value = self.params.get(self.param) * self.direction.factor(delta);
        if self.param.is_onset() {
            value = value.min(1.0 - 1e-9);
        }
        let varied = self.params.with(self.param, value);
        let wrap = |e: Error| Error::Probe {
            param: self.param.name(),
            delta,
            source: Box::new(e),
        };
        let tr = simulate(&varied, self.waveform, self.cfg).map_err(wrap)?;
        mpe_currents(tr.currents(), self.reference).map_err(wrap)
    }
}

fn hit(m: f64) -> bool {
    (m - TARGET_MPE).abs() <= MPE_TOLERANCE
}

/// Bisect between `lo` (below target) and `hi` (above target). Returns the
/// delta and whether the probes stayed monotone.
fn bisect(probe: &Probe, mut lo: (f64, f64), mut hi: (f64, f64), check: bool) -> Result<(f64, bool)> {
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo.0 + hi.0);
        let m = probe.mpe(mid)?;
        if check && (m < lo.1 || m > hi.1) {
            return Ok((mid, false));
        }
        if hit(m) {
            return Ok((mid, true));
        }
        if m < TARGET_MPE {
            lo = (mid, m);
        } else {
            hi = (mid, m);
        }
    }
    Ok((hi.0, true))
}

fn search_one(probe: &Probe, warnings: &mut Vec<String>) -> Result<Sensitivity> {
    let m1 = probe.mpe(1.0)?;
    if m1 < TARGET_MPE - MPE_TOLERANCE {
        return Ok(Sensitivity::OverCutoff);
    }
    if hit(m1) {
        return Ok(Sensitivity::Percent(100.0));
    }
    let (delta, monotone) = bisect(probe, (0.0, 0.0), (1.0, m1), true)?;
    if monotone {
        return Ok(Sensitivity::Percent(100.0 * delta));
    }
    let msg = format!(
        "{} {:?}: MPE not monotone in the perturbation, fell back to a scan",
        probe.param, probe.direction
    );
    log::warn!("{msg}");
    warnings.push(msg);
    // first grid point at or above the target, then bisect inside that cell
    let mut prev = (0.0, 0.0);
    for k in 1..=SCAN_POINTS {
        let d = k as f64 / SCAN_POINTS as f64;
        let m = probe.mpe(d)?;
        if hit(m) {
            return Ok(Sensitivity::Percent(100.0 * d));
        }
        if m > TARGET_MPE {
            let (delta, _) = bisect(probe, prev, (d, m), false)?;
            return Ok(Sensitivity::Percent(100.0 * delta));
        }
        prev = (d, m);
    }
    Ok(Sensitivity::OverCutoff)
}

/// Run the search for every parameter except `V_p`, `V_n` in both directions.
pub fn sensitivity_search(
    params: &ModelParameters,
    spec: &SweepSpec,
    cfg: &SimulationConfig,
) -> Result<SensitivityReport> {
    params.validate().map_err(|e| Error::domain(e.to_string()))?;
    let waveform = spec.sample(cfg.dt)?;
    let reference = simulate(params, &waveform, cfg)?;
    let jobs: Vec<(Param, Direction)> = Param::ALL
        .into_iter()
        .filter(|p| !Param::THRESHOLDS.contains(p))
        .flat_map(|p| Direction::BOTH.map(|d| (p, d)))
        .collect();
    let outcomes: Vec<(Sensitivity, Vec<String>)> = jobs
        .par_iter()
        .map(|&(param, direction)| {
            let probe = Probe {
                params,
                param,
                direction,
                waveform: &waveform,
                cfg,
                reference: reference.currents(),
            };
            let mut warnings = Vec::new();
            search_one(&probe, &mut warnings).map(|s| (s, warnings))
        })
        .collect::<Result<_>>()?;
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for (pair, chunk) in jobs.chunks(2).zip(outcomes.chunks(2)) {
        entries.push(ParamSensitivity {
            param: pair[0].0,
            decrease: chunk[0].0,
            increase: chunk[1].0,
        });
        warnings.extend(chunk.iter().flat_map(|c| c.1.iter().cloned()));
    }
    Ok(SensitivityReport { entries, warnings })
}
