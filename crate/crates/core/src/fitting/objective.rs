//! Error metrics between a simulated and a measured current series.

use crate::error::{Error, Result};
use crate::simulator::IVTrace;

fn check_lengths(simulated: &[f64], measured: &[f64]) -> Result<()> {
    if simulated.len() != measured.len() {
        return Err(Error::Alignment(format!(
            "simulated trace has {} samples, measured has {}",
            simulated.len(),
            measured.len()
        )));
    }
    if measured.is_empty() {
        return Err(Error::Alignment("traces are empty".into()));
    }
    Ok(())
}

fn abs_error_sum(simulated: &[f64], measured: &[f64]) -> f64 {
    simulated
        .iter()
        .zip(measured)
        .map(|(s, m)| (s - m).abs())
        .sum()
}

/// Mean absolute difference of two equally long current series, amperes.
pub fn mae_currents(simulated: &[f64], measured: &[f64]) -> Result<f64> {
    check_lengths(simulated, measured)?;
    Ok(abs_error_sum(simulated, measured) / measured.len() as f64)
}

/// `100 * sum|sim - meas| / sum|meas|`, percent.
pub fn mpe_currents(simulated: &[f64], measured: &[f64]) -> Result<f64> {
    check_lengths(simulated, measured)?;
    let norm: f64 = measured.iter().map(|m| m.abs()).sum();
    if norm == 0.0 {
        return Err(Error::UndefinedNormalization);
    }
    Ok(100.0 * abs_error_sum(simulated, measured) / norm)
}

/// Sample times must agree to within half the measured spacing.
fn check_alignment(simulated: &IVTrace, measured: &IVTrace) -> Result<()> {
    check_lengths(simulated.currents(), measured.currents())?;
    let tol = 0.5 * measured.dt();
    let worst = simulated
        .times()
        .iter()
        .zip(measured.times())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if measured.len() > 1 && worst >= tol {
        return Err(Error::Alignment(format!(
            "sample times differ by up to {worst} s (limit {tol} s)"
        )));
    }
    Ok(())
}

pub fn mae(simulated: &IVTrace, measured: &IVTrace) -> Result<f64> {
    check_alignment(simulated, measured)?;
    mae_currents(simulated.currents(), measured.currents())
}

pub fn mpe(simulated: &IVTrace, measured: &IVTrace) -> Result<f64> {
    check_alignment(simulated, measured)?;
    mpe_currents(simulated.currents(), measured.currents())
}
