//! `ifmem`: simulate, fit, sample and analyse interface-type memristor models.
//!
//! Every command writes its outputs and a `manifest.json` into `--out`;
//! `ifmem rerun <manifest> --out <dir>` repeats the run byte for byte.

mod commands;
mod manifest;
mod output;
mod svg;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ifmem_core::waveform::{DEFAULT_DURATION, DEFAULT_STEPS, DEFAULT_V_MAX, DEFAULT_V_MIN};
use ifmem_core::FitConfig;

use commands::{Initial, Run, Sweep};
use manifest::Manifest;
use output::{Inputs, OutDir};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<ifmem_core::Error> for CliError {
    fn from(e: ifmem_core::Error) -> Self {
        let numerical = match &e {
            ifmem_core::Error::Probe { source, .. } => source.is_numerical(),
            other => other.is_numerical(),
        };
        CliError {
            code: if numerical { EXIT_NUMERICAL } else { EXIT_INPUT },
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "ifmem", version, about = "Interface-type memristor model toolkit")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SweepArgs {
    /// Peak forward voltage, V.
    #[arg(long, default_value_t = DEFAULT_V_MAX, allow_negative_numbers = true)]
    vmax: f64,
    /// Most negative reverse voltage, V.
    #[arg(long, default_value_t = DEFAULT_V_MIN, allow_negative_numbers = true)]
    vmin: f64,
    /// Duration of the full 0 -> vmax -> 0 -> vmin -> 0 sweep, s.
    #[arg(long, default_value_t = DEFAULT_DURATION)]
    duration: f64,
    /// Integration step, s [default: duration / 10000].
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
}

impl SweepArgs {
    fn resolve(&self) -> Sweep {
        Sweep {
            v_max: self.vmax,
            v_min: self.vmin,
            duration: self.duration,
            dt: self.dt.unwrap_or(self.duration / DEFAULT_STEPS),
        }
    }
}

#[derive(Args)]
struct InitialArgs {
    /// Initial state variable in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    /// Polarity of the state motion, 1 or -1.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    eta: i8,
}

impl InitialArgs {
    fn resolve(&self) -> Initial {
        Initial {
            x0: self.x0,
            eta: self.eta,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one parameter set over the standard sweep.
    Simulate {
        /// Parameter file (a Gaussian set is replaced by its means).
        #[arg(long)]
        params: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        initial: InitialArgs,
        /// Also write an SVG I-V plot.
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-step regression over `<data-dir>/<area>/*.csv`.
    Fit {
        #[arg(long)]
        data_dir: PathBuf,
        /// Fit configuration JSON [default: built-in starting point and bounds].
        #[arg(long)]
        config: Option<PathBuf>,
        /// Integration step, s [default: the measured sample spacing].
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw devices from a Gaussian set and simulate each.
    Sample {
        #[arg(long)]
        gaussian: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        initial: InitialArgs,
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Change per parameter that moves the trace 10 % away from the reference.
    Sensitivity {
        /// Parameter or Gaussian file; repeat for several areas.
        #[arg(long, required = true)]
        params: Vec<PathBuf>,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        initial: InitialArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify how each parameter mean changes with device area.
    Trends {
        /// Gaussian set file; give at least two.
        #[arg(long)]
        gaussian: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat the run recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve(command: Command) -> Result<(Run, PathBuf), CliError> {
    let run = match command {
        Command::Simulate {
            params,
            sweep,
            initial,
            svg,
            out,
        } => (
            Run::Simulate {
                params,
                sweep: sweep.resolve(),
                initial: initial.resolve(),
                svg,
            },
            out,
        ),
        Command::Fit {
            data_dir,
            config,
            dt,
            seed,
            out,
        } => {
            let mut cfg = match &config {
                Some(path) => commands::load_fit_config(&mut Inputs::default(), path)?,
                None => FitConfig::default(),
            };
            if dt.is_some() {
                cfg.sim_dt = dt;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            cfg.validate()?;
            (
                Run::Fit {
                    data_dir,
                    config_file: config,
                    config: cfg,
                },
                out,
            )
        }
        Command::Sample {
            gaussian,
            n,
            seed,
            sweep,
            initial,
            svg,
            out,
        } => (
            Run::Sample {
                gaussian,
                n,
                seed,
                sweep: sweep.resolve(),
                initial: initial.resolve(),
                svg,
            },
            out,
        ),
        Command::Sensitivity {
            params,
            sweep,
            initial,
            out,
        } => (
            Run::Sensitivity {
                params,
                sweep: sweep.resolve(),
                initial: initial.resolve(),
            },
            out,
        ),
        Command::Trends { gaussian, out } => (Run::Trends { gaussian }, out),
        Command::Rerun { manifest, out } => (Manifest::load(&manifest)?.verified_run()?, out),
    };
    Ok((commands::absolutize(run.0), run.1))
}

fn run_and_record(run: Run, out: &Path) -> Result<(String, i32), CliError> {
    let mut dir = OutDir::create(out)?;
    let outcome = commands::execute(&run, &mut dir)?;
    let manifest = Manifest::new(run, outcome.inputs, dir.written.clone());
    dir.write(manifest::FILE_NAME, &manifest.to_json())?;
    Ok((outcome.summary, outcome.status))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match resolve(cli.command).and_then(|(run, out)| run_and_record(run, &out)) {
        Ok((summary, status)) => {
            print!("{summary}");
            if status == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_NOT_CONVERGED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
