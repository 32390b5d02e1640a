//! Driving voltage waveforms.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default peak of the forward sweep, volts.
pub const DEFAULT_V_MAX: f64 = 1.0;
/// Default trough of the reverse sweep, volts.
pub const DEFAULT_V_MIN: f64 = -2.0;
/// Default sweep duration, seconds (0.1 V/s over the 6 V round trip).
pub const DEFAULT_DURATION: f64 = 60.0;
/// Default number of integration steps per sweep.
pub const DEFAULT_STEPS: f64 = 10_000.0;

/// Piecewise-linear voltage program given by `(time, voltage)` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    vertices: Vec<(f64, f64)>,
}

impl SweepSpec {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::validation("a sweep needs at least two vertices"));
        }
        if vertices.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::validation("sweep vertices must be finite"));
        }
        if vertices[0].0 != 0.0 {
            return Err(Error::validation(format!(
                "sweep must start at t=0, starts at {}",
                vertices[0].0
            )));
        }
        if let Some(i) = vertices.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::validation(format!(
                "sweep times must be strictly increasing (vertex {})",
                i + 1
            )));
        }
        Ok(SweepSpec { vertices })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn duration(&self) -> f64 {
        self.vertices[self.vertices.len() - 1].0
    }

    /// Voltage at time `t`, clamped to the end vertices outside the program.
    pub fn voltage_at(&self, t: f64) -> f64 {
        let vs = &self.vertices;
        if t <= 0.0 {
            return vs[0].1;
        }
        if t >= self.duration() {
            return vs[vs.len() - 1].1;
        }
        // first segment whose end lies strictly after t, so a vertex time
        // starts the next segment and returns that vertex's voltage exactly
        let seg = vs.partition_point(|(tv, _)| *tv <= t) - 1;
        let (t0, v0) = vs[seg];
        let (t1, v1) = vs[seg + 1];
        v0 + (t - t0) / (t1 - t0) * (v1 - v0)
    }

    /// Sample at `t = 0, dt, 2dt, ...`; the last sample always carries the
    /// final vertex voltage. A trailing remainder longer than `dt/2` gets its
    /// own sample, a shorter one is folded into the last grid point.
    pub fn sample(&self, dt: f64) -> Result<SampledWaveform> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::domain(format!("dt must be positive, got {dt}")));
        }
        let total = self.duration();
        if dt > total {
            return Err(Error::domain(format!(
                "dt ({dt}) must not exceed the sweep duration ({total})"
            )));
        }
        let full = (total / dt).floor();
        let steps = if total - full * dt > 0.5 * dt { full + 1.0 } else { full } as usize;
        let mut voltages: Vec<f64> = (0..steps).map(|i| self.voltage_at(i as f64 * dt)).collect();
        voltages.push(self.vertices[self.vertices.len() - 1].1);
        Ok(SampledWaveform { dt, voltages })
    }
}

impl Serialize for SweepSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.vertices.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SweepSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let vertices = Vec::<(f64, f64)>::deserialize(d)?;
        SweepSpec::new(vertices).map_err(serde::de::Error::custom)
    }
}

/// The `0 -> v_max -> 0 -> v_min -> 0` DC sweep at constant slew rate.
pub fn standard_sweep(v_max: f64, v_min: f64, total_duration: f64) -> Result<SweepSpec> {
    if !(v_max.is_finite() && v_max > 0.0) {
        return Err(Error::domain(format!("v_max must be > 0, got {v_max}")));
    }
    if !(v_min.is_finite() && v_min < 0.0) {
        return Err(Error::domain(format!("v_min must be < 0, got {v_min}")));
    }
    if !(total_duration.is_finite() && total_duration > 0.0) {
        return Err(Error::domain(format!(
            "duration must be > 0, got {total_duration}"
        )));
    }
    let levels = [0.0, v_max, 0.0, v_min, 0.0];
    let span = 2.0 * v_max - 2.0 * v_min;
    let mut vertices = Vec::with_capacity(levels.len());
    let mut travelled = 0.0;
    vertices.push((0.0, 0.0));
    for w in levels.windows(2) {
        travelled += (w[1] - w[0]).abs();
        let t = if vertices.len() == levels.len() - 1 {
            total_duration
        } else {
            travelled * total_duration / span
        };
        vertices.push((t, w[1]));
    }
    SweepSpec::new(vertices)
}

/// Uniformly sampled voltage sequence with implied times `t_i = i * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWaveform {
    dt: f64,
    voltages: Vec<f64>,
}

impl SampledWaveform {
    pub fn new(dt: f64, voltages: Vec<f64>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::domain(format!("dt must be positive, got {dt}")));
        }
        if voltages.is_empty() {
            return Err(Error::validation("waveform has no samples"));
        }
        if let Some(i) = voltages.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("voltage sample {i} is not finite")));
        }
        Ok(SampledWaveform { dt, voltages })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn voltages(&self) -> &[f64] {
        &self.voltages
    }

    pub fn len(&self) -> usize {
        self.voltages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voltages.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standard_sweep_vertices() {
        let s = standard_sweep(1.0, -2.0, 6.0).unwrap();
        assert_eq!(
            s.vertices(),
            &[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (4.0, -2.0), (6.0, 0.0)]
        );
        let sym = standard_sweep(1.0, -1.0, 4.0).unwrap();
        assert_eq!(
            sym.vertices(),
            &[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (3.0, -1.0), (4.0, 0.0)]
        );
        let defaults = standard_sweep(DEFAULT_V_MAX, DEFAULT_V_MIN, DEFAULT_DURATION).unwrap();
        let vmax = defaults.vertices().iter().map(|v| v.1).fold(f64::MIN, f64::max);
        let vmin = defaults.vertices().iter().map(|v| v.1).fold(f64::MAX, f64::min);
        assert_eq!((vmax, vmin), (1.0, -2.0));
    }

    #[test]
    fn standard_sweep_rejects_bad_input() {
        assert!(standard_sweep(0.0, -2.0, 4.0).is_err());
        assert!(standard_sweep(1.0, 0.5, 4.0).is_err());
        assert!(standard_sweep(1.0, -2.0, 0.0).is_err());
        assert!(standard_sweep(f64::NAN, -2.0, 1.0).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(SweepSpec::new(vec![(0.0, 0.0)]).is_err());
        assert!(SweepSpec::new(vec![(0.5, 0.0), (1.0, 1.0)]).is_err());
        assert!(SweepSpec::new(vec![(0.0, 0.0), (1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(SweepSpec::new(vec![(0.0, 0.0), (1.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn sampling_examples() {
        let ramp = SweepSpec::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(ramp.sample(0.5).unwrap().voltages(), &[0.0, 0.5, 1.0]);
        assert_eq!(ramp.sample(1.0).unwrap().voltages(), &[0.0, 1.0]);
        assert!(ramp.sample(0.0).is_err());
        assert!(ramp.sample(-1.0).is_err());
        assert!(ramp.sample(2.0).is_err());

        // remainder 0.1 < dt/2: folded into the last grid point
        let w = ramp.sample(0.3).unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(*w.voltages().last().unwrap(), 1.0);
        // remainder 0.4 > dt/2 gets its own sample
        assert_eq!(ramp.sample(0.6).unwrap().voltages(), &[0.0, 0.6, 1.0]);
        assert_eq!(ramp.sample(0.4).unwrap().voltages(), &[0.0, 0.4, 1.0]);

        let sweep = standard_sweep(1.0, -2.0, 4.0).unwrap();
        for dt in [0.001, 0.0137, 0.3] {
            let w = sweep.sample(dt).unwrap();
            assert_eq!(w.voltages()[0], 0.0);
            assert_eq!(*w.voltages().last().unwrap(), 0.0);
        }
    }

    #[test]
    fn json_is_array_of_pairs() {
        let s = standard_sweep(1.0, -2.0, 6.0).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[[0.0,0.0],[1.0,1.0],[2.0,0.0],[4.0,-2.0],[6.0,0.0]]");
        let back: SweepSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<SweepSpec>("[[0,0],[0,1]]").is_err());
    }

    proptest! {
        #[test]
        fn extrema_recovered_within_one_step(
            vmax in 0.1f64..3.0, vmin in -3.0f64..-0.1, dur in 0.5f64..100.0, n in 10usize..3000
        ) {
            let s = standard_sweep(vmax, vmin, dur).unwrap();
            let dt = dur / n as f64;
            let w = s.sample(dt).unwrap();
            let slew = (2.0 * vmax - 2.0 * vmin) / dur;
            let hi = w.voltages().iter().cloned().fold(f64::MIN, f64::max);
            let lo = w.voltages().iter().cloned().fold(f64::MAX, f64::min);
            prop_assert!(vmax - hi <= slew * dt + 1e-12 && hi <= vmax + 1e-12);
            prop_assert!(lo - vmin <= slew * dt + 1e-12 && lo >= vmin - 1e-12);
        }

        #[test]
        fn refinement_is_supersequence(dur in 0.5f64..100.0, n in 2usize..2000) {
            let s = standard_sweep(1.0, -2.0, dur).unwrap();
            let dt = dur / n as f64;
            let coarse = s.sample(dt).unwrap();
            let fine = s.sample(dt / 2.0).unwrap();
            // the last coarse sample is pinned to the final vertex; compare the grid
            for i in 0..coarse.len() - 1 {
                prop_assert_eq!(coarse.voltages()[i], fine.voltages()[2 * i]);
            }
        }
    }
}
