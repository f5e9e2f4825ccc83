//! Command-line front end.
//!
//! Exit codes: 0 success, 1 property or hypothesis violation,
//! 2 non-convergence, 3 input error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::comparison::comparison_suite;
use crate::config::{Config, ConfigError};
use crate::grid::Grid;
use crate::mnc::{self, check_inequality_2_1, darbo_trace, first_increase, Ensemble};
use crate::problem::{self, check_hypotheses, HypothesisOptions, IntegralProblem};
use crate::sampling::TrigSums;
use crate::solver::{self, Mode};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Exit {
    Ok = 0,
    Violation = 1,
    NonConvergence = 2,
    Input = 3,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "volterra-mnc",
    version,
    about = "Volterra integral equations: hypothesis checks, fixed-point solves and noncompactness experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check every hypothesis and comparison-function property.
    Check {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Solve for a fixed point and write it as CSV.
    Solve {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the sampled set iteration and write the noncompactness estimates as CSV.
    Mnc {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Audit the comparison triple alone.
    Compare {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Each flag replaces the config key of the same name.
#[derive(Debug, Args, Default)]
struct Overrides {
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    ensemble_size: Option<usize>,
    #[arg(long)]
    hull_count: Option<usize>,
    #[arg(long)]
    tail_fraction: Option<f64>,
    /// Horizon L.
    #[arg(long)]
    horizon: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut Config) {
        let s = &mut cfg.solver;
        if let Some(v) = self.grid_n {
            s.grid_n = v;
        }
        if let Some(v) = self.tol {
            s.tol = v;
        }
        if let Some(v) = self.max_iter {
            s.max_iter = v;
        }
        if let Some(v) = self.mode {
            s.mode = v;
        }
        let m = &mut cfg.mnc;
        if let Some(v) = self.seed {
            m.seed = v;
        }
        if let Some(v) = self.steps {
            m.steps = v;
        }
        if let Some(v) = self.ensemble_size {
            m.ensemble_size = v;
        }
        if let Some(v) = self.hull_count {
            m.hull_count = Some(v);
        }
        if let Some(v) = self.tail_fraction {
            m.tail_fraction = v;
        }
        if let (Some(v), Some(p)) = (self.horizon, cfg.problem.as_mut()) {
            p.horizon = v;
        }
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn input_error(&mut self, e: impl std::fmt::Display) -> Exit {
        let _ = writeln!(self.err, "error: {e}");
        Exit::Input
    }

    /// Evaluation failures are violations; anything else is bad input.
    fn failure(&mut self, e: Error) -> Exit {
        match e {
            Error::Eval { .. } => {
                let _ = writeln!(self.err, "violation: {e}");
                Exit::Violation
            }
            other => self.input_error(other),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> Exit
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut io = Io { out, err };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(io.out, "{e}");
                    Exit::Ok
                }
                _ => {
                    let _ = write!(io.err, "{e}");
                    Exit::Input
                }
            };
        }
    };
    let (path, overrides) = match &cli.command {
        Command::Check { config, overrides }
        | Command::Solve { config, overrides, .. }
        | Command::Mnc { config, overrides, .. }
        | Command::Compare { config, overrides } => (config, overrides),
    };
    let mut cfg = match Config::load(path) {
        Ok(cfg) => cfg,
        Err(e) => return io.input_error(e),
    };
    overrides.apply(&mut cfg);
    match &cli.command {
        Command::Check { .. } => cmd_check(&cfg, &mut io),
        Command::Solve { out, .. } => cmd_solve(&cfg, out, &mut io),
        Command::Mnc { out, .. } => cmd_mnc(&cfg, out, &mut io),
        Command::Compare { .. } => cmd_compare(&cfg, &mut io),
    }
}

fn load_problem(cfg: &Config, io: &mut Io) -> Result<IntegralProblem, Exit> {
    cfg.problem().map_err(|e| match e {
        ConfigError::Build(inner) => io.failure(inner),
        other => io.input_error(other),
    })
}

fn write_file(path: &Path, contents: &str, io: &mut Io) -> Result<(), Exit> {
    fs::write(path, contents).map_err(|e| io.input_error(format!("cannot write {}: {e}", path.display())))
}

/// r₀ when the self-mapping search finds one, otherwise the default radius.
fn ball_radius(p: &IntegralProblem) -> f64 {
    problem::find_r0(p, problem::DEFAULT_R_MAX, problem::DEFAULT_R_RESOLUTION)
        .ok()
        .flatten()
        .unwrap_or(problem::DEFAULT_SAMPLE_RADIUS)
}

fn cmd_check(cfg: &Config, io: &mut Io) -> Exit {
    let p = match load_problem(cfg, io) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let opts = HypothesisOptions {
        tail_fraction: cfg.mnc.tail_fraction,
        n_max: cfg.comparison.n_max,
        decay_tol: cfg.comparison.decay_tol,
        ..HypothesisOptions::default()
    };
    let report = match check_hypotheses(&p, &opts) {
        Ok(r) => r,
        Err(e) => return io.failure(e),
    };
    let suite = match comparison_suite(&p.triple, cfg.comparison.n_max, cfg.comparison.decay_tol) {
        Ok(s) => s,
        Err(e) => return io.failure(e),
    };
    let _ = write!(io.out, "{report}");
    for r in &suite {
        let _ = writeln!(io.out, "comparison.{r}");
    }
    if report.all_passed() && suite.iter().all(|r| r.passed) {
        Exit::Ok
    } else {
        Exit::Violation
    }
}

fn cmd_solve(cfg: &Config, out: &Path, io: &mut Io) -> Exit {
    let p = match load_problem(cfg, io) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let grid = match Grid::new(p.horizon, cfg.solver.grid_n) {
        Ok(g) => g,
        Err(e) => return io.input_error(e),
    };
    let scfg = cfg.solver_config(ball_radius(&p));
    let result = match solver::solve(&p, grid, &scfg) {
        Ok(r) => r,
        Err(e) => return io.input_error(e),
    };
    if let Err(code) = write_file(out, &result.solution.to_csv(), io) {
        return code;
    }
    let _ = write!(io.out, "{}", result.report());
    if result.converged {
        Exit::Ok
    } else {
        let _ = writeln!(io.err, "not converged: {}", result.stop);
        Exit::NonConvergence
    }
}

fn cmd_mnc(cfg: &Config, out: &Path, io: &mut Io) -> Exit {
    let p = match load_problem(cfg, io) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let grid = match Grid::new(p.horizon, cfg.solver.grid_n) {
        Ok(g) => g,
        Err(e) => return io.input_error(e),
    };
    if cfg.mnc.ensemble_size == 0 {
        return io.input_error("ensemble_size must be at least 1");
    }
    let radius = ball_radius(&p);
    let members = TrigSums::default().ensemble(grid, cfg.mnc.ensemble_size, radius, p.domain, cfg.mnc.seed);
    let x0 = Ensemble::new(members).expect("nonempty ensemble");
    let dcfg = cfg.darbo_config();
    if dcfg.hull_count < x0.len() {
        return io.input_error(format!("hull_count {} is below ensemble_size {}", dcfg.hull_count, x0.len()));
    }
    let (estimates, failure) = match darbo_trace(&p, &x0, &dcfg) {
        Ok(trace) => trace,
        Err(e) => return io.failure(e),
    };
    if let Err(code) = write_file(out, &mnc::to_csv(&estimates), io) {
        return code;
    }
    let mut status = Exit::Ok;
    if let Some(e) = failure {
        let _ = writeln!(io.err, "violation: set iteration stopped after {} steps: {e}", estimates.len() - 1);
        status = Exit::Violation;
    }
    if let Some(step) = first_increase(&estimates, mnc::MONOTONE_TOL) {
        let _ = writeln!(
            io.err,
            "violation: mu_hat increased at step {step}: {} -> {}",
            estimates[step - 1].mu_hat,
            estimates[step].mu_hat
        );
        status = Exit::Violation;
    }
    match check_inequality_2_1(&p, &x0, dcfg.hull_count, dcfg.seed, dcfg.tail_fraction, dcfg.rule) {
        Ok(r) if !r.passed => {
            let _ = writeln!(io.err, "warning: {r}");
        }
        Err(e) => {
            let _ = writeln!(io.err, "warning: inequality probe could not run: {e}");
        }
        Ok(_) => {}
    }
    let (first, last) = (&estimates[0], &estimates[estimates.len() - 1]);
    let _ = writeln!(io.out, "steps={}", estimates.len() - 1);
    let _ = writeln!(io.out, "radius={radius}");
    let _ = writeln!(io.out, "initial_mu_hat={}", first.mu_hat);
    let _ = writeln!(io.out, "final_mu_hat={}", last.mu_hat);
    status
}

fn cmd_compare(cfg: &Config, io: &mut Io) -> Exit {
    let triple = match cfg.triple() {
        Ok(t) => t,
        Err(ConfigError::Build(e)) => return io.failure(e),
        Err(e) => return io.input_error(e),
    };
    let suite = match comparison_suite(&triple, cfg.comparison.n_max, cfg.comparison.decay_tol) {
        Ok(s) => s,
        Err(e) => return io.failure(e),
    };
    let _ = writeln!(io.out, "psi = {}", triple.psi);
    let _ = writeln!(io.out, "phi_big = {}", triple.phi_big);
    let _ = writeln!(io.out, "phi_density = {}", triple.phi_density);
    if let Some(k) = triple.darbo_form() {
        let _ = writeln!(io.out, "darbo_constant = {k}");
    }
    for r in &suite {
        let _ = writeln!(io.out, "{r}");
    }
    let mut status = Exit::Ok;
    for r in suite.iter().filter(|r| !r.passed) {
        let _ = writeln!(io.out, "WARNING: {} failed; witness {:?}", r.name, r.witness);
        status = Exit::Violation;
    }
    status
}
