//! Parameter extraction from I-V traces.
//!
//! [`fit_single`] minimizes the mean absolute error between a simulated and a
//! measured trace with a bounded simplex search. Magnitudes are searched in
//! log coordinates and the onsets `x_p`, `x_n` linearly. [`two_step_fit`]
//! fits every trace, freezes the area-independent parameters to their
//! cross-area average (and `area_frozen` ones to their per-area average) and
//! refits, then summarizes each area as a Gaussian set.

pub mod objective;
pub mod optimizer;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::{GaussianParamSet, MeasurementSet, Normal};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::params::{ModelParameters, Param, Polarity};
use crate::simulator::{simulate_substepped, IVTrace, SimulationConfig};
use crate::waveform::SampledWaveform;

pub use objective::{mae, mae_currents, mpe, mpe_currents};
use optimizer::{minimize, SearchOptions};

/// Margin kept between a searched onset and the ends of `[0, 1]`.
const ONSET_MARGIN: f64 = 1e-6;
/// Smallest searched magnitude relative to its upper bound.
const LOG_FLOOR: f64 = 1e-9;

/// Search settings. Fields missing from a JSON config take their [`Default`] value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub theta0: ModelParameters,
    /// Parameters held at their `theta0` value. `V_p` and `V_n` are always held.
    pub frozen: BTreeSet<Param>,
    /// Parameters held at their per-area first-step mean during the second step.
    pub area_frozen: BTreeSet<Param>,
    /// Inclusive `(low, high)` search range for every parameter.
    pub bounds: BTreeMap<Param, (f64, f64)>,
    /// Relative spread of the simplex objective values that ends a pass.
    pub rel_tol: f64,
    /// Absolute objective tolerance, amperes.
    pub abs_tol: f64,
    pub max_evals: usize,
    pub max_restarts: usize,
    /// Initial simplex edge as a fraction of each searched coordinate's range.
    pub initial_step: f64,
    /// Integration step; `None` integrates at the measured sample spacing.
    pub sim_dt: Option<f64>,
    pub seed: u64,
}

impl Default for FitConfig {
    /// Start from the cross-area average of the bundled means, bound magnitudes
    /// by ten times their largest bundled mean and onsets by `[0, 1]`.
    fn default() -> Self {
        let means = fixtures::reference_means();
        let mut avg = [0.0; 16];
        let mut bounds = BTreeMap::new();
        for p in Param::ALL {
            let vals = means.map(|m| m.get(p));
            avg[p.index()] = vals.iter().sum::<f64>() / vals.len() as f64;
            let range = if p.is_onset() {
                (0.0, 1.0)
            } else {
                (0.0, 10.0 * vals.iter().cloned().fold(0.0, f64::max))
            };
            bounds.insert(p, range);
        }
        FitConfig {
            theta0: ModelParameters::from_values(avg, Polarity::Positive, 0.0),
            frozen: Param::THRESHOLDS.into_iter().collect(),
            area_frozen: [Param::Xn].into_iter().collect(),
            bounds,
            rel_tol: 1e-8,
            abs_tol: 1e-15,
            max_evals: 60_000,
            max_restarts: 4,
            initial_step: 0.05,
            sim_dt: None,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.theta0.validate()?;
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::validation("tolerances must be > 0"));
        }
        if !(self.initial_step > 0.0 && self.initial_step <= 1.0) {
            return Err(Error::validation("initial_step must lie in (0, 1]"));
        }
        if let Some(p) = self
            .area_frozen
            .iter()
            .find(|p| Param::THRESHOLDS.contains(p) || Param::AREA_INDEPENDENT.contains(p))
        {
            return Err(Error::validation(format!(
                "{p} cannot be frozen per area: it is shared across areas"
            )));
        }
        if self.max_evals == 0 {
            return Err(Error::validation("max_evals must be >= 1"));
        }
        if let Some(dt) = self.sim_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::domain(format!("dt must be positive, got {dt}")));
            }
        }
        for p in Param::ALL {
            let (lo, hi) = self
                .bounds
                .get(&p)
                .copied()
                .ok_or_else(|| Error::validation(format!("no bounds for {p}")))?;
            let v = self.theta0.get(p);
            if !(lo <= v && v <= hi) {
                return Err(Error::validation(format!(
                    "{p}: theta0 value {v} lies outside bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn is_frozen(&self, p: Param) -> bool {
        Param::THRESHOLDS.contains(&p) || self.frozen.contains(&p)
    }

    /// Copy with `values` frozen into `theta0`.
    pub fn freezing(&self, values: &[(Param, f64)]) -> FitConfig {
        let mut cfg = self.clone();
        for &(p, v) in values {
            cfg.theta0.set(p, v);
            cfg.frozen.insert(p);
        }
        cfg
    }

    fn search_options(&self) -> SearchOptions {
        SearchOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_evals: self.max_evals,
            max_restarts: self.max_restarts,
            initial_step: self.initial_step,
            seed: self.seed,
            ..SearchOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: ModelParameters,
    /// Amperes.
    pub mae: f64,
    /// Percent.
    pub mpe: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// A searched parameter and its coordinate range.
struct Coord {
    param: Param,
    log: bool,
    low: f64,
    high: f64,
    lo_u: f64,
    hi_u: f64,
}

impl Coord {
    fn new(param: Param, (low, high): (f64, f64)) -> Self {
        let log = !param.is_onset();
        let (lo_u, hi_u) = if log {
            let floor = high * LOG_FLOOR;
            (low.max(floor).ln(), high.ln())
        } else {
            (low.max(ONSET_MARGIN), high.min(1.0 - ONSET_MARGIN))
        };
        Coord { param, log, low, high, lo_u, hi_u }
    }

    fn encode(&self, v: f64) -> f64 {
        let u = if self.log { v.max(self.high * LOG_FLOOR).ln() } else { v };
        u.clamp(self.lo_u, self.hi_u)
    }

    fn decode(&self, u: f64) -> f64 {
        let v = if self.log { u.exp() } else { u };
        v.clamp(self.low, self.high)
    }
}

/// Simulates `theta` on the voltages of one measured trace.
struct TraceModel<'a> {
    measured: &'a IVTrace,
    waveform: SampledWaveform,
    substeps: usize,
}

impl<'a> TraceModel<'a> {
    fn new(measured: &'a IVTrace, sim_dt: Option<f64>) -> Result<Self> {
        if measured.len() < 2 {
            return Err(Error::validation("a trace needs at least two samples to fit"));
        }
        let spacing = measured.dt();
        let waveform = SampledWaveform::new(spacing, measured.voltages().to_vec())?;
        let substeps = sim_dt.map_or(1, |dt| ((spacing / dt).round() as usize).max(1));
        Ok(TraceModel {
            measured,
            waveform,
            substeps,
        })
    }

    fn currents(&self, theta: &ModelParameters) -> Result<Vec<f64>> {
        let tr = simulate_substepped(theta, &self.waveform, &SimulationConfig::default(), self.substeps)?;
        Ok(tr.currents().to_vec())
    }

    fn mae(&self, theta: &ModelParameters) -> Result<f64> {
        mae_currents(&self.currents(theta)?, self.measured.currents())
    }
}

/// MPE of `theta` simulated on the voltages of `measured`, integrated as a fit would.
pub fn trace_mpe(theta: &ModelParameters, measured: &IVTrace, sim_dt: Option<f64>) -> Result<f64> {
    let model = TraceModel::new(measured, sim_dt)?;
    mpe_currents(&model.currents(theta)?, measured.currents())
}

/// Fit one trace. Never returns a model worse than `cfg.theta0`, and frozen
/// parameters are copied from `cfg.theta0` unchanged.
pub fn fit_single(measured: &IVTrace, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let model = TraceModel::new(measured, cfg.sim_dt)?;
    let theta0 = cfg.theta0;
    let f0 = model.mae(&theta0)?;

    let coords: Vec<Coord> = Param::ALL
        .into_iter()
        .filter(|&p| !cfg.is_frozen(p))
        .map(|p| Coord::new(p, cfg.bounds[&p]))
        .filter(|c| c.hi_u > c.lo_u)
        .collect();
    let decode = |u: &[f64]| {
        let mut theta = theta0;
        for (c, &ui) in coords.iter().zip(u) {
            theta.set(c.param, c.decode(ui));
        }
        theta
    };

    let (mut theta_hat, mut best, mut evaluations, mut converged) = (theta0, f0, 1, true);
    if !coords.is_empty() && f0 > cfg.abs_tol {
        let u0: Vec<f64> = coords.iter().map(|c| c.encode(theta0.get(c.param))).collect();
        let lo: Vec<f64> = coords.iter().map(|c| c.lo_u).collect();
        let hi: Vec<f64> = coords.iter().map(|c| c.hi_u).collect();
        let objective = |u: &[f64]| model.mae(&decode(u)).unwrap_or(f64::INFINITY);
        let r = minimize(objective, &u0, &lo, &hi, &cfg.search_options());
        evaluations += r.evaluations;
        converged = r.converged;
        if r.f < f0 {
            theta_hat = decode(&r.x);
            best = r.f;
        }
    }
    let mpe = mpe_currents(&model.currents(&theta_hat)?, measured.currents())?;
    Ok(FitResult {
        theta_hat,
        mae: best,
        mpe,
        evaluations,
        converged,
    })
}

/// Outcome of [`two_step_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStepFit {
    /// One set per input area, in input order.
    pub sets: Vec<GaussianParamSet>,
    /// Cross-area averages frozen for the second step.
    pub shared: Vec<(Param, f64)>,
    /// Per-area, per-trace results of the first and second regressions.
    pub step1: Vec<Vec<FitResult>>,
    pub step2: Vec<Vec<FitResult>>,
}

impl TwoStepFit {
    pub fn all_converged(&self) -> bool {
        self.step1
            .iter()
            .chain(&self.step2)
            .flatten()
            .all(|r| r.converged)
    }
}

/// Fits every trace of area `a` with `cfgs[a]`.
fn fit_all(datasets: &[MeasurementSet], cfgs: &[FitConfig]) -> Result<Vec<Vec<FitResult>>> {
    let jobs: Vec<(usize, &IVTrace)> = datasets
        .iter()
        .enumerate()
        .flat_map(|(a, set)| set.traces.iter().map(move |t| (a, t)))
        .collect();
    let results: Vec<FitResult> = jobs
        .par_iter()
        .map(|(a, t)| fit_single(t, &cfgs[*a]))
        .collect::<Result<_>>()?;
    let mut grouped: Vec<Vec<FitResult>> = vec![Vec::new(); datasets.len()];
    for ((a, _), r) in jobs.iter().zip(results) {
        grouped[*a].push(r);
    }
    Ok(grouped)
}

/// Sample mean and sample standard deviation (zero for a single value).
pub fn gaussian_summary(values: &[f64]) -> Normal {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Normal { mean, sd }
}

fn area_mean(results: &[FitResult], p: Param) -> f64 {
    results.iter().map(|r| r.theta_hat.get(p)).sum::<f64>() / results.len() as f64
}

pub fn two_step_fit(datasets: &[MeasurementSet], cfg: &FitConfig) -> Result<TwoStepFit> {
    cfg.validate()?;
    if datasets.is_empty() {
        return Err(Error::validation("no measurement sets to fit"));
    }
    if let Some(empty) = datasets.iter().find(|d| d.traces.is_empty()) {
        return Err(Error::validation(format!(
            "area '{}' has no traces",
            empty.device_area_label
        )));
    }

    let step1 = fit_all(datasets, &vec![cfg.clone(); datasets.len()])?;
    let shared: Vec<(Param, f64)> = Param::AREA_INDEPENDENT
        .into_iter()
        .map(|p| {
            let per_area: Vec<f64> = step1.iter().map(|rs| area_mean(rs, p)).collect();
            (p, per_area.iter().sum::<f64>() / per_area.len() as f64)
        })
        .collect();

    let cfgs2: Vec<FitConfig> = step1
        .iter()
        .map(|rs| {
            let own: Vec<(Param, f64)> = cfg
                .area_frozen
                .iter()
                .filter(|p| !cfg.is_frozen(**p))
                .map(|&p| (p, area_mean(rs, p)))
                .collect();
            cfg.freezing(&shared).freezing(&own)
        })
        .collect();
    let step2 = fit_all(datasets, &cfgs2)?;

    let sets = datasets
        .iter()
        .zip(&step2)
        .zip(&cfgs2)
        .map(|((data, results), cfg2)| {
            let params = Param::ALL.map(|p| {
                if cfg2.is_frozen(p) {
                    Normal {
                        mean: cfg2.theta0.get(p),
                        sd: 0.0,
                    }
                } else {
                    let vals: Vec<f64> = results.iter().map(|r| r.theta_hat.get(p)).collect();
                    gaussian_summary(&vals)
                }
            });
            GaussianParamSet {
                area_label: data.device_area_label.clone(),
                params,
                eta: cfg.theta0.eta,
                x0: cfg.theta0.x0,
            }
        })
        .collect();

    Ok(TwoStepFit {
        sets,
        shared,
        step1,
        step2,
    })
}

/// Plain-text table with one row per parameter and a `mean (sd)` column per area.
pub fn summary_table(sets: &[GaussianParamSet]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<10}", "parameter");
    for s in sets {
        let _ = write!(out, " {:>24}", s.area_label);
    }
    out.push('\n');
    for p in Param::ALL {
        let _ = write!(out, "{:<10}", p.name());
        for s in sets {
            let n = s.get(p);
            let _ = write!(out, " {:>24}", format!("{:.2e} ({:.2e})", n.mean, n.sd));
        }
        out.push('\n');
    }
    out
}
