//! Pointwise evaluation of the compact model.
//!
//! The current is a state-weighted mix of an LRS transmission `h1` and an HRS
//! transmission `h2`; the state moves according to a threshold response `g`
//! damped by a direction-dependent window `f`.
//!
//! The public functions validate their inputs. The `*_unchecked` variants are
//! what the integrator calls in its inner loop after validating once.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::params::ModelParameters;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Direction the state is being driven in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Motion {
    Up,
    Down,
    Still,
}

impl Motion {
    pub fn of(rate: f64) -> Self {
        if rate > 0.0 {
            Motion::Up
        } else if rate < 0.0 {
            Motion::Down
        } else {
            Motion::Still
        }
    }
}

fn check_state(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::domain(format!("state must lie in [0, 1], got {x}")))
    }
}

/// LRS transmission: tunnelling in forward bias, Schottky-like in reverse.
pub fn h1(params: &ModelParameters, v: f64) -> Result<f64> {
    ensure_finite("voltage", v)?;
    Ok(h1_unchecked(params, v))
}

#[inline]
pub fn h1_unchecked(params: &ModelParameters, v: f64) -> f64 {
    if v >= 0.0 {
        params.g_max_p * (params.b_max_p * v).sinh()
    } else {
        // 1 - e^{-b v}
        -params.g_max_n * (-params.b_max_n * v).exp_m1()
    }
}

/// HRS transmission: Schottky-like in forward bias, tunnelling in reverse.
pub fn h2(params: &ModelParameters, v: f64) -> Result<f64> {
    ensure_finite("voltage", v)?;
    Ok(h2_unchecked(params, v))
}

#[inline]
pub fn h2_unchecked(params: &ModelParameters, v: f64) -> f64 {
    if v >= 0.0 {
        -params.g_min_p * (-params.b_min_p * v).exp_m1()
    } else {
        params.g_min_n * (params.b_min_n * v).sinh()
    }
}

pub fn instantaneous_current(params: &ModelParameters, v: f64, x: f64) -> Result<f64> {
    ensure_finite("voltage", v)?;
    check_state(x)?;
    Ok(instantaneous_current_unchecked(params, v, x))
}

#[inline]
pub fn instantaneous_current_unchecked(params: &ModelParameters, v: f64, x: f64) -> f64 {
    h1_unchecked(params, v) * x + h2_unchecked(params, v) * (1.0 - x)
}

/// Threshold response: zero inside `[-V_n, V_p]`, exponential outside.
pub fn threshold_g(params: &ModelParameters, v: f64) -> Result<f64> {
    ensure_finite("voltage", v)?;
    Ok(threshold_g_unchecked(params, v))
}

#[inline]
pub fn threshold_g_unchecked(params: &ModelParameters, v: f64) -> f64 {
    if v > params.v_p {
        // A_p (e^v - e^{V_p}) written around the threshold to keep precision near it
        params.a_p * params.v_p.exp() * (v - params.v_p).exp_m1()
    } else if v < -params.v_n {
        -params.a_n * params.v_n.exp() * (-v - params.v_n).exp_m1()
    } else {
        0.0
    }
}

/// Ion-motion window. Upward motion is damped past `x_p` and stops at 1,
/// downward motion is damped below `x_n` and stops at 0.
pub fn window_f(params: &ModelParameters, x: f64, motion: Motion) -> Result<f64> {
    check_state(x)?;
    Ok(window_f_unchecked(params, x, motion))
}

#[inline]
pub fn window_f_unchecked(params: &ModelParameters, x: f64, motion: Motion) -> f64 {
    match motion {
        Motion::Up => {
            if x < params.x_p {
                1.0
            } else {
                let w = (params.x_p - x) / (1.0 - params.x_p) + 1.0;
                (-params.alpha_p * (x - params.x_p)).exp() * w
            }
        }
        Motion::Down => {
            if x > params.x_n {
                1.0
            } else {
                let w = x / params.x_n;
                (params.alpha_n * (x - params.x_n)).exp() * w
            }
        }
        Motion::Still => 1.0,
    }
}

/// `dx/dt = eta * g(v) * f(x)`, with `f` chosen by the direction of motion.
pub fn state_derivative(params: &ModelParameters, v: f64, x: f64) -> Result<f64> {
    ensure_finite("voltage", v)?;
    check_state(x)?;
    Ok(state_derivative_unchecked(params, v, x))
}

#[inline]
pub fn state_derivative_unchecked(params: &ModelParameters, v: f64, x: f64) -> f64 {
    let drive = params.eta.sign() * threshold_g_unchecked(params, v);
    if drive == 0.0 {
        return 0.0;
    }
    drive * window_f_unchecked(params, x, Motion::of(drive))
}

/// Thermionic-emission reference junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSchottkyParams {
    /// Junction area, m^2.
    pub area: f64,
    /// Effective Richardson constant, A m^-2 K^-2.
    pub richardson: f64,
    /// Kelvin.
    pub temperature: f64,
    /// Barrier height in eV.
    pub barrier_height: f64,
    pub ideality: f64,
}

impl PhysicalSchottkyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("area", self.area),
            ("richardson", self.richardson),
            ("temperature", self.temperature),
            ("barrier_height", self.barrier_height),
            ("ideality", self.ideality),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::domain(format!("{name} must be finite and > 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Reverse saturation current `A A* T^2 exp(-q phi_B / k_B T)`.
    pub fn saturation_current(&self) -> f64 {
        let thermal = BOLTZMANN * self.temperature;
        self.area
            * self.richardson
            * self.temperature.powi(2)
            * (-ELEMENTARY_CHARGE * self.barrier_height / thermal).exp()
    }
}

pub fn schottky_reference_current(p: &PhysicalSchottkyParams, v: f64) -> Result<f64> {
    p.validate()?;
    ensure_finite("voltage", v)?;
    let thermal = BOLTZMANN * p.temperature;
    Ok(p.saturation_current() * (ELEMENTARY_CHARGE * v / (p.ideality * thermal)).exp_m1())
}

/// Generalised tunnelling reference, `beta sinh(alpha v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimmonsParams {
    pub alpha: f64,
    pub beta: f64,
}

pub fn simmons_reference_current(p: &SimmonsParams, v: f64) -> Result<f64> {
    ensure_finite("alpha", p.alpha)?;
    ensure_finite("beta", p.beta)?;
    ensure_finite("voltage", v)?;
    if p.beta < 0.0 {
        return Err(Error::domain(format!("beta must be >= 0, got {}", p.beta)));
    }
    Ok(p.beta * (p.alpha * v).sinh())
}

/// Original metal-insulator-metal transmission, kept for comparison runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegacyMimParams {
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
}

impl LegacyMimParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("a1", self.a1), ("a2", self.a2), ("b", self.b)] {
            ensure_finite(name, value)?;
        }
        if self.a1 < 0.0 || self.a2 < 0.0 {
            return Err(Error::domain("a1 and a2 must be >= 0"));
        }
        Ok(())
    }
}

pub fn legacy_mim_current(p: &LegacyMimParams, v: f64, x: f64) -> Result<f64> {
    p.validate()?;
    ensure_finite("voltage", v)?;
    check_state(x)?;
    Ok(legacy_mim_current_unchecked(p, v, x))
}

#[inline]
pub fn legacy_mim_current_unchecked(p: &LegacyMimParams, v: f64, x: f64) -> f64 {
    let a = if v >= 0.0 { p.a1 } else { p.a2 };
    a * x * (p.b * v).sinh()
}
