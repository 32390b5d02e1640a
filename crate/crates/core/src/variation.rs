//! Device-to-device variation by independent Gaussian parameter draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal as NormalDist};
use rayon::prelude::*;

use crate::data_io::GaussianParamSet;
use crate::error::{Error, Result};
use crate::params::{ModelParameters, Param};
use crate::simulator::{simulate, IVTrace, SimulationConfig};
use crate::waveform::SweepSpec;

/// Redraws allowed per parameter before the distribution is declared infeasible.
pub const MAX_ATTEMPTS: usize = 1000;

/// Draw every parameter from its normal distribution, redrawing values that
/// violate the parameter's range. Zero-spread parameters return the mean.
pub fn sample_parameters(dist: &GaussianParamSet, seed: u64) -> Result<ModelParameters> {
    dist.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = [0.0; 16];
    for p in Param::ALL {
        let n = dist.get(p);
        values[p.index()] = if n.sd == 0.0 {
            n.mean
        } else {
            let normal = NormalDist::new(n.mean, n.sd)
                .map_err(|e| Error::validation(format!("{p}: {e}")))?;
            (0..MAX_ATTEMPTS)
                .map(|_| normal.sample(&mut rng))
                .find(|&v| p.admits(v))
                .ok_or(Error::InfeasibleDistribution {
                    param: p.name(),
                    attempts: MAX_ATTEMPTS,
                })?
        };
    }
    Ok(ModelParameters::from_values(values, dist.eta, dist.x0))
}

/// Per-member seeds derived from `seed`; member `i` always gets the same seed.
pub fn member_seeds(n: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen()).collect()
}

/// `n` independently sampled parameter sets.
pub fn ensemble_params(dist: &GaussianParamSet, n: usize, seed: u64) -> Result<Vec<ModelParameters>> {
    if n == 0 {
        return Err(Error::domain("ensemble size must be at least 1"));
    }
    member_seeds(n, seed)
        .into_iter()
        .map(|s| sample_parameters(dist, s))
        .collect()
}

/// Simulate `n` sampled devices over `spec`, in member order.
pub fn ensemble(
    dist: &GaussianParamSet,
    n: usize,
    spec: &SweepSpec,
    cfg: &SimulationConfig,
    seed: u64,
) -> Result<Vec<IVTrace>> {
    let members = ensemble_params(dist, n, seed)?;
    let waveform = spec.sample(cfg.dt)?;
    members
        .par_iter()
        .map(|p| simulate(p, &waveform, cfg))
        .collect()
}
