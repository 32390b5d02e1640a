//! Fully resolved command invocations and their execution.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ifmem_core::data_io::{
    area_order, gaussian_to_json, model_params_to_json, parse_gaussian, parse_params_file,
    parse_trace_csv, trace_to_csv, ParamsFile,
};
use ifmem_core::fitting::{summary_table, trace_mpe};
use ifmem_core::variation::ensemble_params;
use ifmem_core::{
    sensitivity_search, simulate, standard_sweep, trend_check, two_step_fit, FitConfig,
    GaussianParamSet, IVTrace, MeasurementSet, ModelParameters, Polarity, SensitivityTable,
    SimulationConfig, SweepSpec,
};

use crate::output::{absolute, Inputs, OutDir};
use crate::svg;
use crate::CliError;

/// Sweep program and integration step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub v_max: f64,
    pub v_min: f64,
    pub duration: f64,
    pub dt: f64,
}

impl Sweep {
    fn spec(&self) -> Result<SweepSpec, CliError> {
        Ok(standard_sweep(self.v_max, self.v_min, self.duration)?)
    }

    fn config(&self) -> SimulationConfig {
        SimulationConfig::with_dt(self.dt)
    }
}

/// Initial state and polarity applied to every loaded parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    pub x0: f64,
    pub eta: i8,
}

impl Initial {
    fn apply(&self, params: ModelParameters) -> Result<ModelParameters, CliError> {
        let p = ModelParameters {
            x0: self.x0,
            eta: Polarity::from_sign(self.eta as f64)?,
            ..params
        };
        p.validate()?;
        Ok(p)
    }

    fn apply_set(&self, set: GaussianParamSet) -> Result<GaussianParamSet, CliError> {
        let set = GaussianParamSet {
            x0: self.x0,
            eta: Polarity::from_sign(self.eta as f64)?,
            ..set
        };
        set.validate()?;
        Ok(set)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum Run {
    Simulate {
        params: PathBuf,
        sweep: Sweep,
        initial: Initial,
        svg: bool,
    },
    Fit {
        data_dir: PathBuf,
        config_file: Option<PathBuf>,
        config: FitConfig,
    },
    Sample {
        gaussian: PathBuf,
        n: usize,
        seed: u64,
        sweep: Sweep,
        initial: Initial,
        svg: bool,
    },
    Sensitivity {
        params: Vec<PathBuf>,
        sweep: Sweep,
        initial: Initial,
    },
    Trends {
        gaussian: Vec<PathBuf>,
    },
}

impl Run {
    pub fn name(&self) -> &'static str {
        match self {
            Run::Simulate { .. } => "simulate",
            Run::Fit { .. } => "fit",
            Run::Sample { .. } => "sample",
            Run::Sensitivity { .. } => "sensitivity",
            Run::Trends { .. } => "trends",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Run::Fit { config, .. } => Some(config.seed),
            Run::Sample { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

/// What a run produced besides its files.
pub struct Outcome {
    pub inputs: Inputs,
    pub summary: String,
    /// Nonzero when outputs were written but the run is incomplete.
    pub status: i32,
}

pub fn execute(run: &Run, out: &mut OutDir) -> Result<Outcome, CliError> {
    let mut inputs = Inputs::default();
    let (summary, status) = match run {
        Run::Simulate {
            params,
            sweep,
            initial,
            svg,
        } => simulate_cmd(&mut inputs, out, params, sweep, initial, *svg)?,
        Run::Fit {
            data_dir,
            config_file,
            config,
        } => {
            // the materialized config is authoritative; the file is only hashed
            if let Some(path) = config_file {
                inputs.read(path)?;
            }
            fit_cmd(&mut inputs, out, data_dir, config)?
        }
        Run::Sample {
            gaussian,
            n,
            seed,
            sweep,
            initial,
            svg,
        } => sample_cmd(&mut inputs, out, gaussian, *n, *seed, sweep, initial, *svg)?,
        Run::Sensitivity {
            params,
            sweep,
            initial,
        } => sensitivity_cmd(&mut inputs, out, params, sweep, initial)?,
        Run::Trends { gaussian } => trends_cmd(&mut inputs, out, gaussian)?,
    };
    Ok(Outcome {
        inputs,
        summary,
        status,
    })
}

fn load_params(inputs: &mut Inputs, path: &Path) -> Result<ParamsFile, CliError> {
    let text = inputs.read(path)?;
    parse_params_file(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn simulate_cmd(
    inputs: &mut Inputs,
    out: &mut OutDir,
    params: &Path,
    sweep: &Sweep,
    initial: &Initial,
    plot: bool,
) -> Result<(String, i32), CliError> {
    let p = initial.apply(load_params(inputs, params)?.model())?;
    let spec = sweep.spec()?;
    let trace = simulate(&p, &spec.sample(sweep.dt)?, &sweep.config())?;
    out.write("trace.csv", &trace_to_csv(&trace))?;
    if plot {
        out.write("iv.svg", &svg::iv_plot(&[&trace], "simulated I-V"))?;
    }
    let at = |v: f64| trace.currents()[trace.nearest_voltage_index(v)];
    let summary = format!(
        "I({} V) = {:e} A\nI({} V) = {:e} A\nloop area = {:e} W\n",
        sweep.v_max,
        at(sweep.v_max),
        sweep.v_min,
        at(sweep.v_min),
        trace.loop_area()
    );
    Ok((summary, 0))
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

/// `dir/<area label>/*.csv`, smallest area first, each file hashed into `inputs`.
fn load_data_dir(inputs: &mut Inputs, dir: &Path) -> Result<Vec<MeasurementSet>, CliError> {
    let mut areas: Vec<(String, PathBuf)> = fs::read_dir(dir)
        .map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), e.path()))
        .collect();
    if areas.is_empty() {
        return Err(CliError::input(format!(
            "{} contains no area subdirectories",
            dir.display()
        )));
    }
    areas.sort_by(|a, b| area_order(&a.0, &b.0));
    let mut sets = Vec::new();
    for (label, path) in areas {
        let files = csv_files(&path)?;
        if files.is_empty() {
            return Err(CliError::input(format!("area '{label}' has no CSV traces")));
        }
        let mut traces = Vec::new();
        for f in files {
            let text = inputs.read(&f)?;
            let trace = parse_trace_csv(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", f.display())))?;
            traces.push(trace.without_state());
        }
        sets.push(MeasurementSet::new(label, traces));
    }
    Ok(sets)
}

fn fit_cmd(
    inputs: &mut Inputs,
    out: &mut OutDir,
    data_dir: &Path,
    config: &FitConfig,
) -> Result<(String, i32), CliError> {
    let data = load_data_dir(inputs, data_dir)?;
    let fit = two_step_fit(&data, config)?;
    for set in &fit.sets {
        out.write(&format!("{}.json", set.area_label), &gaussian_to_json(set))?;
    }
    let mut report = summary_table(&fit.sets);
    report.push_str("\nshared (frozen in step 2):");
    for (p, v) in &fit.shared {
        let _ = write!(report, " {p}={v:.3e}");
    }
    report.push_str("\n\nmean model of each area against its traces, mpe (%):\n");
    for (set, area) in fit.sets.iter().zip(&data) {
        let errs = area
            .traces
            .iter()
            .map(|t| trace_mpe(&set.means(), t, config.sim_dt))
            .collect::<Result<Vec<f64>, _>>()?;
        let _ = write!(report, "{:<10}", set.area_label);
        for e in errs {
            let _ = write!(report, " {e:.3}");
        }
        report.push('\n');
    }
    report.push_str("\narea       trace  step  mae (A)     mpe (%)   evals  converged\n");
    for (step, results) in [(1, &fit.step1), (2, &fit.step2)] {
        for (set, rs) in fit.sets.iter().zip(results.iter()) {
            for (k, r) in rs.iter().enumerate() {
                let _ = writeln!(
                    report,
                    "{:<10} {:>5}  {:>4}  {:<10.3e}  {:<8.3}  {:>5}  {}",
                    set.area_label, k, step, r.mae, r.mpe, r.evaluations, r.converged
                );
            }
        }
    }
    out.write("report.txt", &report)?;
    let detail = serde_json::json!({
        "shared": fit.shared.iter().map(|(p, v)| (p.name().to_string(), *v)).collect::<BTreeMap<_, _>>(),
        "step1": fit.step1,
        "step2": fit.step2,
    });
    out.write("fit.json", &(serde_json::to_string_pretty(&detail).expect("serializable") + "\n"))?;
    let status = if fit.all_converged() { 0 } else { 4 };
    let mut summary = summary_table(&fit.sets);
    if status != 0 {
        summary.push_str("warning: at least one regression hit the evaluation limit\n");
    }
    Ok((summary, status))
}

#[allow(clippy::too_many_arguments)]
fn sample_cmd(
    inputs: &mut Inputs,
    out: &mut OutDir,
    gaussian: &Path,
    n: usize,
    seed: u64,
    sweep: &Sweep,
    initial: &Initial,
    plot: bool,
) -> Result<(String, i32), CliError> {
    if n == 0 {
        return Err(CliError::input("--n must be at least 1"));
    }
    let text = inputs.read(gaussian)?;
    let dist = parse_gaussian(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", gaussian.display())))?;
    let dist = initial.apply_set(dist)?;
    let spec = sweep.spec()?;
    let waveform = spec.sample(sweep.dt)?;
    let cfg = sweep.config();
    let members = ensemble_params(&dist, n, seed)?;
    let width = (n - 1).to_string().len().max(3);
    let mut traces = Vec::with_capacity(n);
    for (k, p) in members.iter().enumerate() {
        let trace = simulate(p, &waveform, &cfg)?;
        out.write(&format!("member_{k:0width$}.json"), &model_params_to_json(p))?;
        out.write(&format!("member_{k:0width$}.csv"), &trace_to_csv(&trace))?;
        traces.push(trace);
    }
    let mean_trace = simulate(&dist.means(), &waveform, &cfg)?;
    out.write("mean.csv", &trace_to_csv(&mean_trace))?;
    if plot {
        let mut all: Vec<&IVTrace> = vec![&mean_trace];
        all.extend(traces.iter());
        out.write("ensemble.svg", &svg::iv_plot(&all, &dist.area_label))?;
    }
    Ok((format!("{n} members written to {}\n", out.path().display()), 0))
}

fn sensitivity_cmd(
    inputs: &mut Inputs,
    out: &mut OutDir,
    params: &[PathBuf],
    sweep: &Sweep,
    initial: &Initial,
) -> Result<(String, i32), CliError> {
    if params.is_empty() {
        return Err(CliError::input("at least one --params file is required"));
    }
    let spec = sweep.spec()?;
    let cfg = sweep.config();
    let mut labels = Vec::new();
    let mut reports = Vec::new();
    for path in params {
        let file = load_params(inputs, path)?;
        let label = match &file {
            ParamsFile::Gaussian(g) => g.area_label.clone(),
            ParamsFile::Model(_) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".into()),
        };
        let p = initial.apply(file.model())?;
        labels.push(label);
        reports.push(sensitivity_search(&p, &spec, &cfg)?);
    }
    let table = SensitivityTable::new(labels, reports)?;
    out.write("sensitivity.csv", &table.to_csv())?;
    let json = serde_json::json!({
        "areas": table.labels,
        "reports": table.reports,
        "ranking": table.ranking().iter().map(|(p, a)| serde_json::json!({"parameter": p, "average": a})).collect::<Vec<_>>(),
    });
    out.write("sensitivity.json", &(serde_json::to_string_pretty(&json).expect("serializable") + "\n"))?;
    let mut ranking = String::from("rank  parameter  average %\n");
    for (k, (p, a)) in table.ranking().iter().enumerate() {
        let _ = writeln!(ranking, "{:>4}  {:<9}  {a:.1}", k + 1, p.name());
    }
    out.write("ranking.txt", &ranking)?;
    for r in &table.reports {
        for w in &r.warnings {
            log::warn!("{w}");
        }
    }
    Ok((ranking, 0))
}

fn trends_cmd(
    inputs: &mut Inputs,
    out: &mut OutDir,
    gaussian: &[PathBuf],
) -> Result<(String, i32), CliError> {
    if gaussian.len() < 2 {
        return Err(CliError::input("trends needs at least two --gaussian files"));
    }
    let mut sets = Vec::new();
    for path in gaussian {
        let text = inputs.read(path)?;
        sets.push(
            parse_gaussian(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?,
        );
    }
    sets.sort_by(|a, b| area_order(&a.area_label, &b.area_label));
    let trends = trend_check(&sets)?;
    let mut table = String::from("parameter,trend\n");
    for (p, t) in &trends {
        let _ = writeln!(table, "{p},{t}");
    }
    out.write("trends.csv", &table)?;
    let mut tidy = String::from("area_label,parameter,mean,sd\n");
    for s in &sets {
        for (p, _) in &trends {
            let n = s.get(*p);
            let _ = writeln!(tidy, "{},{p},{},{}", s.area_label, n.mean, n.sd);
        }
    }
    out.write("parameter_vs_area.csv", &tidy)?;
    Ok((table, 0))
}

/// Absolute form of every path in `run`.
pub fn absolutize(run: Run) -> Run {
    match run {
        Run::Simulate {
            params,
            sweep,
            initial,
            svg,
        } => Run::Simulate {
            params: absolute(&params),
            sweep,
            initial,
            svg,
        },
        Run::Fit {
            data_dir,
            config_file,
            config,
        } => Run::Fit {
            data_dir: absolute(&data_dir),
            config_file: config_file.map(|p| absolute(&p)),
            config,
        },
        Run::Sample {
            gaussian,
            n,
            seed,
            sweep,
            initial,
            svg,
        } => Run::Sample {
            gaussian: absolute(&gaussian),
            n,
            seed,
            sweep,
            initial,
            svg,
        },
        Run::Sensitivity {
            params,
            sweep,
            initial,
        } => Run::Sensitivity {
            params: params.iter().map(|p| absolute(p)).collect(),
            sweep,
            initial,
        },
        Run::Trends { gaussian } => Run::Trends {
            gaussian: gaussian.iter().map(|p| absolute(p)).collect(),
        },
    }
}

pub fn load_fit_config(inputs: &mut Inputs, path: &Path) -> Result<FitConfig, CliError> {
    let text = inputs.read(path)?;
    let cfg: FitConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}
