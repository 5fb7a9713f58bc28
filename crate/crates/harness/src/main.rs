#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use spinchain::dual::LogicalQubit;
use spinchain_harness::checks::{converge, oracle_check, OracleCheckSpec};
use spinchain_harness::portrait::{portrait_csv, portrait_svg, PortraitSpec};
use spinchain_harness::{
    apply_overrides, parse_config, preset, replay, run_dual, run_preset, run_sweep, threshold_speed_search,
    ExperimentPreset, HarnessError, Override, PresetName, SweepSpec,
};

#[derive(Parser)]
#[command(name = "spinchain", version, about = "Adiabatic transfer along a spin chain driven by a moving parabolic potential")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PresetArgs {
    /// fig2 .. fig10 or custom
    preset: String,
    /// Flat `key = value` file applied before --set
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted-path override, e.g. --set chain.field_amplitude_c=2
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl PresetArgs {
    fn resolve(&self) -> Result<ExperimentPreset, HarnessError> {
        let base = preset(self.preset.parse::<PresetName>()?);
        let mut all = match &self.config {
            Some(path) => parse_config(&fs::read_to_string(path)?)?,
            None => Vec::new(),
        };
        for o in &self.overrides {
            all.push(o.parse::<Override>()?);
        }
        apply_overrides(&base, &all)
    }
}

#[derive(Subcommand)]
enum Command {
    /// List the named presets
    Presets,
    /// Run a preset and write CSV, JSON and SVG artifacts
    Run {
        #[command(flatten)]
        preset: PresetArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a parameter or seed sweep over a preset
    Sweep {
        #[command(flatten)]
        preset: PresetArgs,
        /// Parameter path or alias (speed, delta, omega_max, seed, ...)
        #[arg(long)]
        param: String,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        ensemble: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Bisect for the fastest speed that still reaches a target end-site probability
    Threshold {
        #[command(flatten)]
        preset: PresetArgs,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = 0.005)]
        tol: f64,
    },
    /// Dual-chain encode, transport and CNOT decode
    Dual {
        #[command(flatten)]
        preset: PresetArgs,
        /// Bloch polar angle of the logical qubit
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        theta: f64,
        /// Bloch azimuth of the logical qubit
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Pendulum phase portrait with its separatrix
    Portrait {
        #[arg(long, default_value_t = 1.0)]
        j: f64,
        #[arg(long, default_value_t = 2.0)]
        c: f64,
        #[arg(long, default_value_t = 8)]
        orbits: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare the production integrator with the dense oracle on random small chains
    OracleCheck {
        #[arg(long, default_value_t = 6)]
        cases: usize,
        #[arg(long, default_value_t = 8)]
        sites: usize,
        #[arg(long, default_value_t = 50.0)]
        t1: f64,
        #[arg(long, default_value_t = 5e-6)]
        dt: f64,
        #[arg(long, default_value_t = 5e-5)]
        fine_dt: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Final-profile deviation between dt and dt/2
    Converge {
        #[command(flatten)]
        preset: PresetArgs,
    },
    /// Re-run from a summary file and compare artifacts byte for byte
    Replay { summary: PathBuf },
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    message: String,
}

/// Writes a stdout line; a closed pipe (e.g. `| head`) is not an error.
fn say(line: &str) -> Result<(), HarnessError> {
    match writeln!(io::stdout().lock(), "{line}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn emit<T: Serialize>(value: &T) -> Result<(), HarnessError> {
    say(&serde_json::to_string_pretty(value)?)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

fn execute(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Presets => {
            for p in PresetName::ALL {
                say(p.as_str())?;
            }
        }
        Command::Run { preset, out } => {
            let artifacts = run_preset(&preset.resolve()?)?;
            for path in artifacts.write_to(&out)? {
                eprintln!("wrote {}", path.display());
            }
            emit(&artifacts.report.points.iter().map(|p| &p.final_row).collect::<Vec<_>>())?;
        }
        Command::Sweep {
            preset,
            param,
            values,
            ensemble,
            out,
        } => {
            let base = preset.resolve()?;
            let table = run_sweep(&base, &SweepSpec { parameter: param, values, ensemble })?;
            let stem = format!("{}_sweep", base.name);
            eprintln!("wrote {}", write(&out, &format!("{stem}.csv"), &table.to_csv()?)?.display());
            eprintln!(
                "wrote {}",
                write(&out, &format!("{stem}.json"), &(serde_json::to_string_pretty(&table)? + "\n"))?.display()
            );
            emit(&table.stats)?;
        }
        Command::Threshold { preset, target, tol } => {
            emit(&threshold_speed_search(&preset.resolve()?, target, tol)?)?;
        }
        Command::Dual { preset, theta, phi, out } => {
            let p = preset.resolve()?;
            let report = run_dual(&p, LogicalQubit::from_bloch(theta, phi))?;
            let body = serde_json::to_string_pretty(&report)? + "\n";
            eprintln!("wrote {}", write(&out, &format!("{}_dual.json", p.name), &body)?.display());
            emit(&report.outcome.status)?;
            say(&format!("success_probability {}", report.outcome.success_probability))?;
        }
        Command::Portrait { j, c, orbits, out } => {
            let spec = PortraitSpec {
                coupling_j: j,
                field_amplitude_c: c,
                orbits,
                ..PortraitSpec::default()
            };
            let text = portrait_csv(&spec)?;
            eprintln!("wrote {}", write(&out, "portrait.svg", &portrait_svg(&text)?)?.display());
            eprintln!("wrote {}", write(&out, "portrait.csv", &text)?.display());
        }
        Command::OracleCheck {
            cases,
            sites,
            t1,
            dt,
            fine_dt,
            seed,
        } => {
            let report = oracle_check(&OracleCheckSpec {
                cases,
                num_sites: sites,
                t1,
                dt,
                fine_dt,
                seed,
                ..OracleCheckSpec::default()
            })?;
            emit(&report)?;
            if !report.passed {
                return Err(HarnessError::Invalid(format!(
                    "oracle deviation {:.3e} exceeds {:.1e}",
                    report.max_deviation, report.spec.tolerance
                )));
            }
        }
        Command::Converge { preset } => {
            let report = converge(&preset.resolve()?)?;
            emit(&report)?;
            if !report.passed {
                return Err(HarnessError::Invalid(format!(
                    "dt-halving deviation {:.3e} exceeds {:.1e}",
                    report.deviation, report.threshold
                )));
            }
        }
        Command::Replay { summary } => emit(&replay(&summary)?)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = ErrorLine {
                error: e.class(),
                message: e.to_string(),
            };
            eprintln!("{}", serde_json::to_string(&line).unwrap_or_else(|_| e.to_string()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
