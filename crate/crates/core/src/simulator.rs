//! Fixed-step integration of the state equation over a sampled waveform.
//!
//! Explicit Euler with the voltage held constant over each step. The state is
//! clamped to `[0, 1]` after every step unless clamping is disabled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    instantaneous_current_unchecked, legacy_mim_current_unchecked, state_derivative_unchecked,
    LegacyMimParams,
};
use crate::params::ModelParameters;
use crate::waveform::{SampledWaveform, SweepSpec, DEFAULT_DURATION, DEFAULT_STEPS};

/// Which current equation maps `(v, x)` to amperes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransmissionModel {
    /// Separate forward/reverse transmissions for each resistance state.
    #[default]
    Interface,
    /// Single sinh transmission scaled by the state.
    LegacyMim(LegacyMimParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Step used when a sweep program is sampled.
    pub dt: f64,
    pub clamp_state: bool,
    pub transmission: TransmissionModel,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            dt: DEFAULT_DURATION / DEFAULT_STEPS,
            clamp_state: true,
            transmission: TransmissionModel::Interface,
        }
    }
}

impl SimulationConfig {
    pub fn with_dt(dt: f64) -> Self {
        SimulationConfig {
            dt,
            ..Default::default()
        }
    }
}

/// Aligned time/voltage/current(/state) columns.
#[derive(Debug, Clone, PartialEq)]
pub struct IVTrace {
    dt: f64,
    time: Vec<f64>,
    voltage: Vec<f64>,
    current: Vec<f64>,
    state: Option<Vec<f64>>,
}

impl IVTrace {
    /// Build a trace from columns. Times must be strictly increasing and every
    /// value finite; states, when present, must lie in `[0, 1]`.
    pub fn new(
        time: Vec<f64>,
        voltage: Vec<f64>,
        current: Vec<f64>,
        state: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = time.len();
        if n == 0 {
            return Err(Error::validation("trace is empty"));
        }
        if voltage.len() != n || current.len() != n || state.as_ref().is_some_and(|s| s.len() != n)
        {
            return Err(Error::validation("trace columns have different lengths"));
        }
        for (col, name) in [(&time, "time"), (&voltage, "voltage"), (&current, "current")] {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::validation(format!("{name} at row {} is not finite", i + 1)));
            }
        }
        if let Some(i) = time.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::validation(format!("time is non-monotonic at row {}", i + 2)));
        }
        if let Some(s) = &state {
            if let Some(i) = s.iter().position(|x| !(0.0..=1.0).contains(x)) {
                return Err(Error::validation(format!(
                    "state at row {} is outside [0, 1]",
                    i + 1
                )));
            }
        }
        let dt = if n > 1 {
            (time[n - 1] - time[0]) / (n - 1) as f64
        } else {
            0.0
        };
        Ok(IVTrace {
            dt,
            time,
            voltage,
            current,
            state,
        })
    }

    /// Nominal sample spacing (mean spacing for measured data).
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.time
    }

    pub fn voltages(&self) -> &[f64] {
        &self.voltage
    }

    pub fn currents(&self) -> &[f64] {
        &self.current
    }

    pub fn states(&self) -> Option<&[f64]> {
        self.state.as_deref()
    }

    /// The drive voltages as a uniform waveform with the trace's mean spacing.
    pub fn waveform(&self) -> Result<SampledWaveform> {
        if self.len() < 2 {
            return Err(Error::validation("need at least two samples to recover a waveform"));
        }
        SampledWaveform::new(self.dt, self.voltage.clone())
    }

    /// Same trace with the state column dropped, as a measurement would be.
    pub fn without_state(&self) -> IVTrace {
        IVTrace {
            state: None,
            ..self.clone()
        }
    }

    pub fn with_currents(&self, current: Vec<f64>) -> Result<IVTrace> {
        IVTrace::new(
            self.time.clone(),
            self.voltage.clone(),
            current,
            self.state.clone(),
        )
    }

    /// Multiply every current by `1 + rel_sd * N(0, 1)`.
    pub fn with_current_noise(&self, rel_sd: f64, seed: u64) -> Result<IVTrace> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noisy = self
            .current
            .iter()
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                i * (1.0 + rel_sd * z)
            })
            .collect();
        self.with_currents(noisy)
    }

    /// Index of the sample whose voltage is closest to `v` (first on ties).
    pub fn nearest_voltage_index(&self, v: f64) -> usize {
        let mut best = 0;
        for (i, u) in self.voltage.iter().enumerate() {
            if (u - v).abs() < (self.voltage[best] - v).abs() {
                best = i;
            }
        }
        best
    }

    /// Currents interpolated at every crossing of voltage `level`, in time order.
    pub fn currents_at_voltage(&self, level: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..self.len().saturating_sub(1) {
            let (v0, v1) = (self.voltage[i], self.voltage[i + 1]);
            if v0 == v1 || (v0 - level) * (v1 - level) > 0.0 || v1 == level {
                continue;
            }
            let w = (level - v0) / (v1 - v0);
            out.push(self.current[i] + w * (self.current[i + 1] - self.current[i]));
        }
        out
    }

    /// Signed area enclosed by the I-V curve, `sum I dV` (trapezoidal), in watts.
    pub fn loop_area(&self) -> f64 {
        self.voltage
            .windows(2)
            .zip(self.current.windows(2))
            .map(|(v, i)| (v[1] - v[0]) * 0.5 * (i[0] + i[1]))
            .sum()
    }
}

/// Integrate the state over `waveform` and record the current at every sample.
pub fn simulate(
    params: &ModelParameters,
    waveform: &SampledWaveform,
    cfg: &SimulationConfig,
) -> Result<IVTrace> {
    simulate_substepped(params, waveform, cfg, 1)
}

/// Like [`simulate`], but advance the state with `substeps` Euler steps of
/// `dt / substeps` between consecutive samples (voltage still held per sample).
pub fn simulate_substepped(
    params: &ModelParameters,
    waveform: &SampledWaveform,
    cfg: &SimulationConfig,
    substeps: usize,
) -> Result<IVTrace> {
    params.validate().map_err(|e| Error::domain(e.to_string()))?;
    if let TransmissionModel::LegacyMim(mim) = &cfg.transmission {
        mim.validate()?;
    }
    if substeps == 0 {
        return Err(Error::domain("substeps must be at least 1"));
    }
    let n = waveform.len();
    let h = waveform.dt() / substeps as f64;
    let mut time = Vec::with_capacity(n);
    let mut current = Vec::with_capacity(n);
    let mut state = Vec::with_capacity(n);
    let mut x = params.x0;
    for (i, &v) in waveform.voltages().iter().enumerate() {
        let amps = match &cfg.transmission {
            TransmissionModel::Interface => instantaneous_current_unchecked(params, v, x),
            TransmissionModel::LegacyMim(mim) => legacy_mim_current_unchecked(mim, v, x),
        };
        if !amps.is_finite() {
            return Err(Error::Numerical {
                index: i,
                message: format!("current is {amps} at v={v}, x={x}"),
            });
        }
        time.push(waveform.time(i));
        current.push(amps);
        state.push(x);
        for _ in 0..substeps {
            x += h * state_derivative_unchecked(params, v, x);
            if cfg.clamp_state {
                x = x.clamp(0.0, 1.0);
            }
        }
        if !x.is_finite() {
            return Err(Error::Numerical {
                index: i + 1,
                message: format!("state became {x}"),
            });
        }
    }
    // without clamping the state column may overshoot [0, 1] by up to one step
    Ok(IVTrace {
        dt: waveform.dt(),
        time,
        voltage: waveform.voltages().to_vec(),
        current,
        state: Some(state),
    })
}

/// Sample `spec` at `cfg.dt` and simulate.
pub fn simulate_sweep(
    params: &ModelParameters,
    spec: &SweepSpec,
    cfg: &SimulationConfig,
) -> Result<IVTrace> {
    let waveform = spec.sample(cfg.dt)?;
    simulate(params, &waveform, cfg)
}

/// Relative change in current when the step is halved.
///
/// Returns `max |I_dt - I_dt/2| / (max |I_dt/2| + 1e-15)` over the time points
/// the two grids share.
pub fn convergence_check(params: &ModelParameters, spec: &SweepSpec, dt: f64) -> Result<f64> {
    let coarse = simulate_sweep(params, spec, &SimulationConfig::with_dt(dt))?;
    let fine = simulate_sweep(params, spec, &SimulationConfig::with_dt(dt / 2.0))?;
    let (ic, jf) = (coarse.currents(), fine.currents());
    let mut shared: Vec<(usize, usize)> = (0..ic.len() - 1)
        .filter(|i| 2 * i < jf.len() - 1)
        .map(|i| (i, 2 * i))
        .collect();
    // the pinned final samples coincide only when the fine grid is exactly twice as long
    if jf.len() - 1 == 2 * (ic.len() - 1) {
        shared.push((ic.len() - 1, jf.len() - 1));
    }
    let scale = jf.iter().fold(0.0f64, |m, i| m.max(i.abs())) + 1e-15;
    let worst = shared
        .into_iter()
        .map(|(a, b)| (ic[a] - jf[b]).abs())
        .fold(0.0f64, f64::max);
    Ok(worst / scale)
}
