//! Compact model of interface-type memristors: current and state equations,
//! sweep simulation, parameter extraction from I-V traces, device-to-device
//! variation and one-at-a-time sensitivity analysis.

pub mod data_io;
pub mod error;
pub mod fitting;
pub mod fixtures;
pub mod model;
pub mod params;
pub mod sensitivity;
pub mod simulator;
pub mod trends;
pub mod variation;
pub mod waveform;

pub use data_io::{GaussianParamSet, MeasurementSet, Normal, ParamsFile};
pub use error::{Error, Result};
pub use fitting::{fit_single, mae, mpe, two_step_fit, FitConfig, FitResult, TwoStepFit};
pub use params::{ModelParameters, Param, Polarity};
pub use sensitivity::{sensitivity_search, SensitivityReport, SensitivityTable, Sensitivity};
pub use simulator::{simulate, simulate_sweep, IVTrace, SimulationConfig, TransmissionModel};
pub use trends::{trend_check, Trend};
pub use variation::{ensemble, sample_parameters};
pub use waveform::{standard_sweep, SampledWaveform, SweepSpec};
