use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use floquet_ep::experiments::emit::{
    self, ChiralitySummary, EvolveJson, EvolveSummary, FloquetStateSummary, SpectrumSummary,
    SweepSummary,
};
use floquet_ep::experiments::{
    run_chirality, run_evolve, run_single_cycle, run_sweep, Circulation, ExperimentConfig,
    TrajectoryRow,
};
use floquet_ep::floquet::{
    build_floquet_state, build_generalized_state, floquet_spectrum, DEFAULT_TRUNC_TOL,
};
use floquet_ep::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "floquet-ep",
    version,
    about = "Floquet spectra, Floquet EPs and multi-cycle chirality"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Accepted for interface compatibility; no computation is random.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplies the integrator tolerances.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Quasi-energies, defectivity and predicted Floquet EPs.
    Spectrum,
    /// Evolve the initial state and project on the adiabatic frame.
    Evolve,
    /// Dominant final state for both circulation directions.
    Chirality,
    /// Fourier-recursion Floquet eigenstate of one H0 eigenvalue.
    Eigenstate {
        /// 1-based H0 eigenvalue label (ascending order).
        #[arg(long)]
        state: usize,
        #[arg(long)]
        l_max: Option<i64>,
    },
    /// Secular generalized Floquet eigenstate of a resonant pair.
    Generalized {
        /// Two 1-based labels, e.g. `1,3`.
        #[arg(long, value_delimiter = ',', required = true)]
        pair: Vec<usize>,
        #[arg(long)]
        l_max: Option<i64>,
    },
    /// Spectral diagnostics and dominance across a frequency grid.
    Sweep {
        /// Comma-separated |omega| values; defaults to the config's omega_grid.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Chirality => "chirality",
            Command::Eigenstate { .. } => "eigenstate",
            Command::Generalized { .. } => "generalized",
            Command::Sweep { .. } => "sweep",
        }
    }
}

struct Sink<'a> {
    out: Option<&'a Path>,
    cfg: &'a ExperimentConfig,
    command: &'static str,
}

impl Sink<'_> {
    fn path(
        &self,
        configured: &Option<String>,
        ext: &str,
        suffix: Option<&str>,
    ) -> Option<PathBuf> {
        let base = match (configured, self.out) {
            (Some(p), Some(dir)) => dir.join(p),
            (Some(p), None) => PathBuf::from(p),
            (None, Some(dir)) => dir.join(format!("{}.{ext}", self.command)),
            (None, None) => return None,
        };
        Some(match suffix {
            Some(s) => {
                let stem = base
                    .file_stem()
                    .map(|x| x.to_string_lossy().into_owned())
                    .unwrap_or_default();
                base.with_file_name(format!("{stem}_{s}.{ext}"))
            }
            None => base,
        })
    }

    fn csv(&self, text: &str, suffix: Option<&str>) -> Result<()> {
        match self.path(&self.cfg.outputs.csv, "csv", suffix) {
            Some(p) => emit::write_text(&p, text),
            None => Ok(()),
        }
    }

    fn json<T: Serialize>(&self, result: &T) -> Result<()> {
        match self.path(&self.cfg.outputs.json, "json", None) {
            Some(p) => emit::write_text(&p, &emit::summary_json(self.command, self.cfg, result)?),
            None => Ok(()),
        }
    }

    fn trajectories(&self, runs: &[(Circulation, &[TrajectoryRow])]) -> Result<()> {
        for (c, rows) in runs {
            let suffix = (runs.len() > 1).then(|| c.name());
            self.csv(&emit::trajectory_csv(rows), suffix)?;
        }
        Ok(())
    }
}

fn fmt_label(i: Option<usize>) -> String {
    i.map_or_else(|| "undecided".into(), |i| (i + 1).to_string())
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Serialize)]
struct StateEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<FloquetStateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct StatesSummary {
    states: BTreeMap<&'static str, StateEntry>,
}

fn run(cli: &Cli) -> Result<String> {
    let path = cli
        .global
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    if !(cli.global.tol_scale > 0.0 && cli.global.tol_scale.is_finite()) {
        return Err(Error::Config(format!(
            "--tol-scale must be positive, got {}",
            cli.global.tol_scale
        )));
    }
    let mut cfg = ExperimentConfig::from_path(path)?;
    cfg.integrator = cfg.integrator.scaled(cli.global.tol_scale);
    cfg.validate()?;
    let sink = Sink {
        out: cli.global.out.as_deref(),
        cfg: &cfg,
        command: cli.command.name(),
    };
    let circulations = cfg.direction.circulations();

    match &cli.command {
        Command::Spectrum => {
            let runs = circulations
                .iter()
                .map(|&c| {
                    Ok((
                        c,
                        floquet_spectrum(&cfg.hamiltonian(cfg.omega(c))?, &cfg.integrator)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            sink.json(&SpectrumSummary::new(&runs))?;
            let a = &runs[0].1;
            Ok(format!(
                "spectrum: |omega|={} max|Im mu|={:.3e} defectivity={:.3e} subsets={} ep_flag={}",
                cfg.omega_abs,
                a.spectrum.max_abs_imag(),
                a.spectrum.defectivity,
                a.ep_report.subsets.len(),
                runs.iter().any(|(_, a)| a.ep_flag)
            ))
        }
        Command::Evolve => {
            let mut json = Vec::new();
            let mut rows = Vec::new();
            for &c in &circulations {
                if cfg.cycles == 1 {
                    let r = run_single_cycle(&cfg, c)?;
                    json.push(EvolveJson::from(&r));
                    rows.push((c, r.rows));
                } else {
                    let r = run_evolve(&cfg, c)?;
                    json.push(EvolveJson::from(&r));
                    rows.push((c, r.rows));
                }
            }
            let views: Vec<_> = rows.iter().map(|(c, r)| (*c, r.as_slice())).collect();
            sink.trajectories(&views)?;
            let line = json
                .iter()
                .map(|j| match j.fidelity {
                    Some(f) => format!(
                        "{} fidelity={f:.4} leakage={:.4}",
                        j.circulation.name(),
                        j.leakage.unwrap_or(0.0)
                    ),
                    None => format!(
                        "{} fractions={}",
                        j.circulation.name(),
                        fmt_vec(&j.final_fractions)
                    ),
                })
                .collect::<Vec<_>>()
                .join("; ");
            sink.json(&EvolveSummary { runs: json })?;
            Ok(format!("evolve: cycles={} {line}", cfg.cycles))
        }
        Command::Chirality => {
            let r = run_chirality(&cfg)?;
            sink.trajectories(&[
                (Circulation::Cw, &r.cw.rows),
                (Circulation::Ccw, &r.ccw.rows),
            ])?;
            sink.json(&ChiralitySummary::from(&r))?;
            Ok(format!(
                "chirality: cycles={} dominant_cw={} dominant_ccw={} chiral={}",
                cfg.cycles,
                fmt_label(r.dominant_cw),
                fmt_label(r.dominant_ccw),
                r.chiral
            ))
        }
        Command::Eigenstate { state, l_max } => {
            let n = state
                .checked_sub(1)
                .ok_or_else(|| Error::Config("--state is 1-based".into()))?;
            states_command(&cfg, &sink, &circulations, &[n], |h| {
                build_floquet_state(h, n, *l_max, DEFAULT_TRUNC_TOL)
            })
        }
        Command::Generalized { pair, l_max } => {
            let (y1, y2) = match pair.as_slice() {
                [a, b] if *a >= 1 && *b >= 1 => (a - 1, b - 1),
                _ => return Err(Error::Config("--pair takes two 1-based labels".into())),
            };
            states_command(&cfg, &sink, &circulations, &[y1, y2], |h| {
                build_generalized_state(h, y1, y2, *l_max, DEFAULT_TRUNC_TOL)
            })
        }
        Command::Sweep { grid } => {
            let grid = grid.clone().unwrap_or_else(|| cfg.omega_grid.clone());
            let rows = run_sweep(&cfg, &grid);
            sink.csv(&emit::sweep_csv(&rows), None)?;
            sink.json(&SweepSummary::from(rows.as_slice()))?;
            let flagged: Vec<String> = rows
                .iter()
                .filter(|r| r.outcome.as_ref().is_ok_and(|p| p.ep_flag))
                .map(|r| r.omega_abs.to_string())
                .collect();
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            Ok(format!(
                "sweep: points={} ep_flag_at=[{}] failed={failed}",
                rows.len(),
                flagged.join(", ")
            ))
        }
    }
}

fn states_command(
    cfg: &ExperimentConfig,
    sink: &Sink<'_>,
    circulations: &[Circulation],
    labels: &[usize],
    build: impl Fn(
        &floquet_ep::model::PeriodicHamiltonian,
    ) -> Result<floquet_ep::floquet::FourierFloquetState>,
) -> Result<String> {
    let mut states = BTreeMap::new();
    let mut parts = Vec::new();
    let mut last_err = None;
    for &c in circulations {
        let h = cfg.hamiltonian(cfg.omega(c))?;
        let entry = match build(&h) {
            Ok(s) => {
                parts.push(format!(
                    "{} mu={:.6}{:+.2e}i residual={:.2e}",
                    c.name(),
                    s.mu.re,
                    s.mu.im,
                    s.residual_bound
                ));
                StateEntry {
                    state: Some(FloquetStateSummary::new(labels, &s)),
                    error: None,
                }
            }
            Err(e) if e.is_config_error() => return Err(e),
            Err(e) => {
                parts.push(format!("{} failed: {e}", c.name()));
                let entry = StateEntry {
                    state: None,
                    error: Some(e.to_string()),
                };
                last_err = Some(e);
                entry
            }
        };
        states.insert(c.name(), entry);
    }
    sink.json(&StatesSummary {
        states: states.into_iter().collect(),
    })?;
    let all_failed = parts.iter().all(|p| p.contains("failed"));
    match last_err {
        Some(e) if all_failed => Err(e),
        _ => Ok(format!("{}: {}", sink.command, parts.join("; "))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
