//! Measurement ingestion and parameter/trace persistence.
//!
//! File formats:
//!
//! * traces: CSV with header `time,voltage,current[,state]`, one sample per row;
//! * model parameters: flat JSON object with the sixteen parameter names plus
//!   `eta` and `x0`;
//! * Gaussian sets: `{"area_label", "eta", "x0", "params": {name: {"mean", "sd"}}}`;
//! * sweeps: JSON array of `[time, voltage]` pairs.
//!
//! Numbers are written in shortest round-trip form, so loading a saved file
//! reproduces the in-memory values exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::params::{check_keys, number, ModelParameters, Param, Polarity};
use crate::simulator::IVTrace;
use crate::waveform::SweepSpec;

/// All traces recorded on devices of one area.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub device_area_label: String,
    pub traces: Vec<IVTrace>,
}

impl MeasurementSet {
    pub fn new(device_area_label: impl Into<String>, traces: Vec<IVTrace>) -> Self {
        MeasurementSet {
            device_area_label: device_area_label.into(),
            traces,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal {
    pub mean: f64,
    pub sd: f64,
}

/// Per-parameter normal distributions describing devices of one area.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParamSet {
    pub area_label: String,
    /// Indexed by [`Param::index`].
    pub params: [Normal; 16],
    pub eta: Polarity,
    pub x0: f64,
}

impl GaussianParamSet {
    pub fn get(&self, p: Param) -> Normal {
        self.params[p.index()]
    }

    pub fn means(&self) -> ModelParameters {
        ModelParameters::from_values(self.params.map(|n| n.mean), self.eta, self.x0)
    }

    /// A set with zero spread around `params`.
    pub fn point(area_label: impl Into<String>, params: &ModelParameters) -> Self {
        GaussianParamSet {
            area_label: area_label.into(),
            params: params.values().map(|mean| Normal { mean, sd: 0.0 }),
            eta: params.eta,
            x0: params.x0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in Param::ALL {
            let n = self.get(p);
            if !(n.sd.is_finite() && n.sd >= 0.0) {
                return Err(Error::validation(format!(
                    "{}: sd must be finite and >= 0, got {}",
                    p, n.sd
                )));
            }
        }
        self.means().validate()
    }

    pub fn to_json_value(&self) -> Value {
        let mut params = Map::new();
        for p in Param::ALL {
            let n = self.get(p);
            let mut entry = Map::new();
            entry.insert("mean".into(), Value::from(n.mean));
            entry.insert("sd".into(), Value::from(n.sd));
            params.insert(p.name().into(), Value::Object(entry));
        }
        let mut root = Map::new();
        root.insert("area_label".into(), Value::from(self.area_label.clone()));
        root.insert("eta".into(), Value::from(self.eta.sign() as i64));
        root.insert("x0".into(), Value::from(self.x0));
        root.insert("params".into(), Value::Object(params));
        Value::Object(root)
    }

    /// Parse the JSON layout; does not check value ranges.
    pub fn from_json_value(value: &Value) -> Result<Self> {
        let root = value
            .as_object()
            .ok_or_else(|| Error::format(None, "Gaussian set must be a JSON object"))?;
        check_keys(root, &["area_label", "eta", "x0", "params"], "Gaussian set")?;
        let area_label = root["area_label"]
            .as_str()
            .ok_or_else(|| Error::format(None, "area_label must be a string"))?
            .to_string();
        let eta = Polarity::from_sign(number(root, "eta")?)
            .map_err(|e| Error::format(None, e.to_string()))?;
        let x0 = number(root, "x0")?;
        let table = root["params"]
            .as_object()
            .ok_or_else(|| Error::format(None, "params must be an object"))?;
        let names: Vec<&str> = Param::ALL.iter().map(|p| p.name()).collect();
        check_keys(table, &names, "params")?;
        let mut params = [Normal { mean: 0.0, sd: 0.0 }; 16];
        for p in Param::ALL {
            let entry = table[p.name()]
                .as_object()
                .ok_or_else(|| Error::format(None, format!("params.{p} must be an object")))?;
            check_keys(entry, &["mean", "sd"], &format!("params.{p}"))?;
            params[p.index()] = Normal {
                mean: number(entry, "mean")?,
                sd: number(entry, "sd")?,
            };
        }
        Ok(GaussianParamSet {
            area_label,
            params,
            eta,
            x0,
        })
    }
}

/// Contents of a parameter file of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamsFile {
    Model(ModelParameters),
    Gaussian(GaussianParamSet),
}

impl ParamsFile {
    /// The deterministic model: the parameter set itself, or the means.
    pub fn model(&self) -> ModelParameters {
        match self {
            ParamsFile::Model(p) => *p,
            ParamsFile::Gaussian(g) => g.means(),
        }
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::format(Some(e.line()), e.to_string()))
}

pub fn model_params_to_json(params: &ModelParameters) -> String {
    let mut s = serde_json::to_string_pretty(&Value::Object(params.to_json_map()))
        .expect("a JSON map always serializes");
    s.push('\n');
    s
}

pub fn gaussian_to_json(set: &GaussianParamSet) -> String {
    let mut s =
        serde_json::to_string_pretty(&set.to_json_value()).expect("a JSON map always serializes");
    s.push('\n');
    s
}

pub fn parse_model_params(text: &str) -> Result<ModelParameters> {
    let value = parse_json(text)?;
    let map = value
        .as_object()
        .ok_or_else(|| Error::format(None, "parameter set must be a JSON object"))?;
    let params = ModelParameters::from_json_map(map)?;
    params.validate()?;
    Ok(params)
}

pub fn parse_gaussian(text: &str) -> Result<GaussianParamSet> {
    let set = GaussianParamSet::from_json_value(&parse_json(text)?)?;
    set.validate()?;
    Ok(set)
}

/// Parse either file kind, telling them apart by the `params` table.
pub fn parse_params_file(text: &str) -> Result<ParamsFile> {
    let value = parse_json(text)?;
    if value.get("params").is_some() {
        let set = GaussianParamSet::from_json_value(&value)?;
        set.validate()?;
        Ok(ParamsFile::Gaussian(set))
    } else {
        let map = value
            .as_object()
            .ok_or_else(|| Error::format(None, "parameter file must be a JSON object"))?;
        let params = ModelParameters::from_json_map(map)?;
        params.validate()?;
        Ok(ParamsFile::Model(params))
    }
}

pub fn save_model_params(path: &Path, params: &ModelParameters) -> Result<()> {
    fs::write(path, model_params_to_json(params)).map_err(|e| Error::io(path, e))
}

pub fn load_model_params(path: &Path) -> Result<ModelParameters> {
    parse_model_params(&read_to_string(path)?)
}

pub fn save_gaussian(path: &Path, set: &GaussianParamSet) -> Result<()> {
    fs::write(path, gaussian_to_json(set)).map_err(|e| Error::io(path, e))
}

pub fn load_gaussian(path: &Path) -> Result<GaussianParamSet> {
    parse_gaussian(&read_to_string(path)?)
}

pub fn load_params_file(path: &Path) -> Result<ParamsFile> {
    parse_params_file(&read_to_string(path)?)
}

pub fn sweep_to_json(spec: &SweepSpec) -> String {
    serde_json::to_string(spec).expect("vertex list always serializes")
}

pub fn parse_sweep(text: &str) -> Result<SweepSpec> {
    serde_json::from_str(text).map_err(|e| Error::format(Some(e.line()), e.to_string()))
}

/// Render a trace as CSV; the state column is written when present.
pub fn trace_to_csv(trace: &IVTrace) -> String {
    let mut out = String::with_capacity(trace.len() * 64);
    let states = trace.states();
    out.push_str(if states.is_some() {
        "time,voltage,current,state\n"
    } else {
        "time,voltage,current\n"
    });
    for i in 0..trace.len() {
        let _ = write!(
            out,
            "{},{},{}",
            trace.times()[i],
            trace.voltages()[i],
            trace.currents()[i]
        );
        if let Some(s) = states {
            let _ = write!(out, ",{}", s[i]);
        }
        out.push('\n');
    }
    out
}

pub fn parse_trace_csv(text: &str) -> Result<IVTrace> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::format(Some(1), e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let with_state = match names.as_slice() {
        ["time", "voltage", "current"] => false,
        ["time", "voltage", "current", "state"] => true,
        _ => {
            return Err(Error::format(
                Some(1),
                format!(
                    "expected header 'time,voltage,current[,state]', found '{}'",
                    names.join(",")
                ),
            ))
        }
    };
    let (mut t, mut v, mut i) = (Vec::new(), Vec::new(), Vec::new());
    let mut s = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            Error::format(e.position().map(|p| p.line() as usize), e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize);
        let field = |k: usize| -> Result<f64> {
            record[k].parse::<f64>().map_err(|_| {
                Error::format(line, format!("'{}' is not a number", &record[k]))
            })
        };
        t.push(field(0)?);
        v.push(field(1)?);
        i.push(field(2)?);
        if with_state {
            s.push(field(3)?);
        }
    }
    IVTrace::new(t, v, i, with_state.then_some(s))
}

pub fn save_trace(path: &Path, trace: &IVTrace) -> Result<()> {
    fs::write(path, trace_to_csv(trace)).map_err(|e| Error::io(path, e))
}

pub fn load_trace(path: &Path) -> Result<IVTrace> {
    parse_trace_csv(&read_to_string(path)?)
}

/// Load one measurement file as a single-trace set.
pub fn load_measurements(path: &Path, device_area_label: &str) -> Result<MeasurementSet> {
    Ok(MeasurementSet::new(
        device_area_label,
        vec![load_trace(path)?.without_state()],
    ))
}

/// Load `dir/<area label>/*.csv`, one set per subdirectory, ordered from the
/// smallest to the largest area by the label's leading number.
pub fn load_data_dir(dir: &Path) -> Result<Vec<MeasurementSet>> {
    let mut groups: Vec<(String, Vec<PathBuf>)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let label = entry.file_name().to_string_lossy().into_owned();
        let mut files: Vec<PathBuf> = fs::read_dir(&path)
            .map_err(|e| Error::io(&path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        groups.push((label, files));
    }
    if groups.is_empty() {
        return Err(Error::validation(format!(
            "{} contains no area subdirectories",
            dir.display()
        )));
    }
    groups.sort_by(|a, b| area_order(&a.0, &b.0));
    groups
        .into_iter()
        .map(|(label, files)| {
            if files.is_empty() {
                return Err(Error::validation(format!("area '{label}' has no CSV traces")));
            }
            let traces = files
                .iter()
                .map(|f| load_trace(f).map(|t| t.without_state()))
                .collect::<Result<Vec<_>>>()?;
            Ok(MeasurementSet::new(label, traces))
        })
        .collect()
}

fn leading_number(label: &str) -> Option<f64> {
    let end = label
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(label.len());
    label[..end].parse().ok()
}

/// Order area labels small to large, numerically where they start with a number.
pub fn area_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (leading_number(a), leading_number(b)) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.cmp(b)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cmp(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn three_row_csv() {
        let tr = parse_trace_csv("time,voltage,current\n0,0,0\n0.1,0.1,1e-6\n0.2,0.2,2e-6\n").unwrap();
        assert_eq!(tr.len(), 3);
        assert!(tr.states().is_none());
        assert_eq!(tr.currents()[2], 2e-6);
    }

    #[test]
    fn wrong_header_is_a_format_error() {
        let err = parse_trace_csv("t,v,i\n0,0,0\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: Some(1), .. }), "{err}");
    }

    #[test]
    fn repeated_time_is_reported_by_row() {
        let err = parse_trace_csv("time,voltage,current\n0,0,0\n1,0,0\n1,0,0\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("non-monotonic at row 3"), "{err}");
    }

    #[test]
    fn bad_cells() {
        assert!(matches!(
            parse_trace_csv("time,voltage,current\n0,0,abc\n").unwrap_err(),
            Error::Format { line: Some(2), .. }
        ));
        assert!(matches!(
            parse_trace_csv("time,voltage,current\n0,0,NaN\n").unwrap_err(),
            Error::Validation(_)
        ));
    }

    #[test]
    fn trace_round_trip_with_state() {
        let p = fixtures::reference_means()[0];
        let spec = crate::waveform::standard_sweep(1.0, -2.0, 6.0).unwrap();
        let tr = crate::simulator::simulate_sweep(
            &p,
            &spec,
            &crate::simulator::SimulationConfig::with_dt(0.01),
        )
        .unwrap();
        let back = parse_trace_csv(&trace_to_csv(&tr)).unwrap();
        assert_eq!(back.times(), tr.times());
        assert_eq!(back.currents(), tr.currents());
        assert_eq!(back.states(), tr.states());
    }

    #[test]
    fn model_params_file_round_trip() {
        let p = fixtures::reference_means()[0];
        let json = model_params_to_json(&p);
        assert!(json.contains("\"A_n\": 0.0266"), "{json}");
        assert_eq!(parse_model_params(&json).unwrap(), p);
    }

    #[test]
    fn negative_magnitude_is_an_invariant_error() {
        let json = model_params_to_json(&fixtures::reference_means()[0]).replace(
            "\"g_max_p\": 0.000434",
            "\"g_max_p\": -0.000434",
        );
        assert!(matches!(parse_model_params(&json).unwrap_err(), Error::Validation(_)));
    }

    #[test]
    fn missing_sd_names_the_parameter() {
        let set = &fixtures::reference_sets()[1];
        let mut value = set.to_json_value();
        value["params"]["b_max_n"]
            .as_object_mut()
            .unwrap()
            .remove("sd");
        let err = parse_gaussian(&value.to_string()).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
        let msg = err.to_string();
        assert!(msg.contains("params.b_max_n") && msg.contains("sd"), "{msg}");
    }

    #[test]
    fn gaussian_round_trip_and_detection() {
        for set in fixtures::reference_sets() {
            let json = gaussian_to_json(&set);
            assert_eq!(parse_gaussian(&json).unwrap(), set);
            assert_eq!(parse_params_file(&json).unwrap(), ParamsFile::Gaussian(set.clone()));
        }
        let json = model_params_to_json(&fixtures::reference_means()[2]);
        assert!(matches!(parse_params_file(&json).unwrap(), ParamsFile::Model(_)));
    }

    #[test]
    fn negative_sd_rejected() {
        let mut set = fixtures::reference_sets()[0].clone();
        set.params[Param::AlphaN.index()].sd = -0.1;
        assert!(parse_gaussian(&gaussian_to_json(&set)).is_err());
    }

    #[test]
    fn area_labels_sort_numerically() {
        let mut labels = vec!["100um", "10um", "32um", "misc"];
        labels.sort_by(|a, b| area_order(a, b));
        assert_eq!(labels, ["10um", "32um", "100um", "misc"]);
    }

    #[test]
    fn data_dir_layout() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_data_dir(dir.path()).is_err());
        for (label, n) in [("32um", 2), ("10um", 1)] {
            let sub = dir.path().join(label);
            fs::create_dir(&sub).unwrap();
            for k in 0..n {
                fs::write(
                    sub.join(format!("run{k}.csv")),
                    "time,voltage,current\n0,0,0\n1,1,1e-3\n",
                )
                .unwrap();
            }
        }
        let sets = load_data_dir(dir.path()).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].device_area_label, "10um");
        assert_eq!(sets[1].traces.len(), 2);
    }

    #[test]
    fn sweep_json() {
        let s = parse_sweep("[[0, 0], [1, 1], [2, 0]]").unwrap();
        assert_eq!(s.duration(), 2.0);
        assert_eq!(parse_sweep(&sweep_to_json(&s)).unwrap(), s);
        assert!(parse_sweep("[[0,0]]").is_err());
    }
}
