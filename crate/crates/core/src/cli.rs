//! `fracflow` command line: read a JSON config, run an engine, write CSV.
//!
//! Exit codes: 0 success, 1 config/schema/input error, 2 numerical
//! failure, 3 validation battery failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{
    DensityConfig, ExitLawConfig, LinearConfig, McBlock, Method, MixedConfig, MlConfig, ValidateConfig,
};
use crate::curve::SolutionCurve;
use crate::error::{Error, Result};
use crate::kernels::validate_hypotheses;
use crate::paths::write_exit_csv;
use crate::paths::exit_time_density_stable;
use crate::solve_mc::{
    exit_times_mc, resolve_workers, solve_caputo_mc, solve_mixed_mc, solve_rl_mc, with_workers, LinearProblem,
    MixedProblem,
};
use crate::solve_quad::{laplace_exit_quad, solve_caputo_closed_form, solve_caputo_quad, solve_mixed_quad, solve_rl_quad};
use crate::special::{mittag_leffler2, try_stable_cdf, try_stable_density, StableParams};
use crate::validate::{run_battery, BatteryOptions};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fracflow", version, about = "Solvers for linear equations with Caputo and RL type operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// JSON run configuration
    #[arg(long)]
    pub config: PathBuf,
    /// output file (overrides `output` in the config; default stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// worker threads (fallback FRACFLOW_WORKERS); never changes the numbers
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Caputo-type problem D*u = -lambda u + g, u(a) = u_a
    SolveCaputo(Common),
    /// RL-type problem Dw = -lambda w + g, w(a) = 0
    SolveRl(Common),
    /// mixed RL/Caputo problem on a rectangle
    SolveMixed(Common),
    /// exit-time law of the interrupted process
    ExitLaw(Common),
    /// Mittag-Leffler table
    Ml(Common),
    /// stable density and distribution function table
    Density(Common),
    /// cross-engine validation battery
    Validate(Common),
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fracflow: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_CONFIG
            }
        }
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    let common = match cmd {
        Command::SolveCaputo(c)
        | Command::SolveRl(c)
        | Command::SolveMixed(c)
        | Command::ExitLaw(c)
        | Command::Ml(c)
        | Command::Density(c)
        | Command::Validate(c) => c,
    };
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", common.config.display())))?;
    let workers = resolve_workers(common.workers)?;
    with_workers(workers, || match cmd {
        Command::SolveCaputo(c) => solve_linear(c, &text, workers, false),
        Command::SolveRl(c) => solve_linear(c, &text, workers, true),
        Command::SolveMixed(c) => solve_mixed(c, &text, workers),
        Command::ExitLaw(c) => exit_law(c, &text, workers),
        Command::Ml(c) => ml(c, &text),
        Command::Density(c) => density(c, &text),
        Command::Validate(c) => validate(c, &text, workers),
    })?
}

fn emit(common: &Common, configured: &Option<String>, bytes: &[u8]) -> Result<()> {
    let target = common.out.clone().or_else(|| configured.as_ref().map(PathBuf::from));
    match target {
        Some(p) => fs::write(&p, bytes).map_err(|e| Error::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn check_truncation(curve: &SolutionCurve, mc: &McBlock) -> Result<()> {
    let limit = mc.truncation_limit();
    if let Some(p) = curve.points.iter().find(|p| p.truncated_fraction > limit) {
        return Err(Error::Numerical(format!(
            "{:.3e} of the paths from t = {} hit the horizon before exiting (limit {limit:e}); \
             raise mc.horizon_override",
            p.truncated_fraction, p.t
        )));
    }
    Ok(())
}

fn solve_linear(common: &Common, text: &str, workers: Option<usize>, rl: bool) -> Result<i32> {
    let c = LinearConfig::from_json(text)?;
    let spec = c.kernel_spec()?;
    let grid = c.grid.points("grid")?;
    let g = c.g.build().map_err(|e| Error::config("g", e.to_string()))?;
    if rl && c.u_a != 0.0 {
        return Err(Error::config("u_a", "the RL problem has zero boundary value"));
    }
    let curve = match c.method {
        Method::Mc => {
            let kernel = spec.build((c.a, c.b)).map_err(|e| Error::config("kernel", e.to_string()))?;
            if c.report {
                let r = validate_hypotheses(&kernel, (c.a, c.b), Default::default());
                eprintln!("{}: hypothesis probe {:?}", kernel.label(), r.pass);
                for n in &r.notes {
                    eprintln!("  {n}");
                }
            }
            let p = LinearProblem {
                kernel,
                lambda: c.lambda,
                g,
                u_a: c.u_a,
                a: c.a,
                b: c.b,
            };
            let cfg = c.mc.to_config(workers);
            let curve = if rl {
                solve_rl_mc(&p, &grid, &cfg)?
            } else {
                solve_caputo_mc(&p, &grid, &cfg)?
            };
            check_truncation(&curve, &c.mc)?;
            curve
        }
        Method::Quad => {
            let beta = spec.stable_beta().expect("checked at parse time");
            if rl {
                solve_rl_quad(beta, c.lambda, &g, c.a, &grid)?
            } else {
                solve_caputo_quad(beta, c.lambda, &g, c.u_a, c.a, &grid)?
            }
        }
        Method::ClosedForm => {
            let beta = spec.stable_beta().expect("checked at parse time");
            // with zero boundary value the two problems coincide
            solve_caputo_closed_form(beta, c.lambda, &g, c.u_a, c.a, &grid)?
        }
    };
    if c.report {
        eprintln!("{} points, method {}", curve.points.len(), curve.method);
    }
    emit(common, &c.output, curve.to_csv_string()?.as_bytes())?;
    Ok(0)
}

fn solve_mixed(common: &Common, text: &str, workers: Option<usize>) -> Result<i32> {
    let c = MixedConfig::from_json(text)?;
    let (k1, k2) = c.kernel_specs()?;
    let g = c.g.build().map_err(|e| Error::config("g", e.to_string()))?;
    let phi = c.phi.build().map_err(|e| Error::config("phi", e.to_string()))?;
    let grid: Vec<(f64, f64)> = c.grid.iter().map(|p| (p[0], p[1])).collect();
    let curve = match c.method {
        Method::Mc => {
            let p = MixedProblem {
                kernel1: k1.build((0.0, c.b1)).map_err(|e| Error::config("kernel1", e.to_string()))?,
                kernel2: k2.build((0.0, c.b2)).map_err(|e| Error::config("kernel2", e.to_string()))?,
                lambda: c.lambda,
                g,
                phi,
                b1: c.b1,
                b2: c.b2,
            };
            let curve = solve_mixed_mc(&p, &grid, &c.mc.to_config(workers))?;
            check_truncation(&curve, &c.mc)?;
            if c.report {
                let ties = curve.points.iter().filter_map(|p| p.tie_fraction).fold(0.0, f64::max);
                eprintln!("largest same-step exit fraction {ties:.3e}");
            }
            curve
        }
        _ => {
            let (b1, b2) = (k1.stable_beta(), k2.stable_beta());
            solve_mixed_quad(b1.expect("checked"), b2.expect("checked"), c.lambda, &g, &phi, &grid)?
        }
    };
    emit(common, &c.output, curve.to_csv_string()?.as_bytes())?;
    Ok(0)
}

fn exit_law(common: &Common, text: &str, workers: Option<usize>) -> Result<i32> {
    let c = ExitLawConfig::from_json(text)?;
    let spec = c.kernel_spec()?;
    let mut buf = Vec::new();
    match spec.stable_beta() {
        Some(beta) => {
            let grid = c.grid.as_ref().expect("checked at parse time").points("grid")?;
            let laplace = laplace_exit_quad(beta, c.lambda, c.t, c.a)?;
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["s", "density", "laplace_at_lambda"])?;
            for s in grid {
                let d = exit_time_density_stable(beta, c.t, c.a, s)?;
                w.write_record([s.to_string(), d.to_string(), laplace.to_string()])?;
            }
            w.flush()?;
        }
        None => {
            let kernel = spec.build((c.a, c.t)).map_err(|e| Error::config("kernel", e.to_string()))?;
            let taus = exit_times_mc(&kernel, c.t, c.a, &c.mc.to_config(workers))?;
            write_exit_csv(&mut buf, &taus)?;
        }
    }
    emit(common, &c.output, &buf)?;
    Ok(0)
}

fn ml(common: &Common, text: &str) -> Result<i32> {
    let c = MlConfig::from_json(text)?;
    let mut buf = Vec::new();
    let mut w = csv::Writer::from_writer(&mut buf);
    w.write_record(["z", "value"])?;
    for z in c.grid.points("grid")? {
        w.write_record([z.to_string(), mittag_leffler2(c.alpha, c.beta, z)?.to_string()])?;
    }
    w.flush()?;
    drop(w);
    emit(common, &c.output, &buf)?;
    Ok(0)
}

fn density(common: &Common, text: &str) -> Result<i32> {
    let c = DensityConfig::from_json(text)?;
    let p = StableParams::new(c.beta).map_err(|e| Error::config("beta", e.to_string()))?;
    let mut buf = Vec::new();
    let mut w = csv::Writer::from_writer(&mut buf);
    w.write_record(["x", "density", "cdf"])?;
    for x in c.grid.points("grid")? {
        w.write_record([
            x.to_string(),
            try_stable_density(p, x)?.to_string(),
            try_stable_cdf(p, x)?.to_string(),
        ])?;
    }
    w.flush()?;
    drop(w);
    emit(common, &c.output, &buf)?;
    Ok(0)
}

fn validate(common: &Common, text: &str, workers: Option<usize>) -> Result<i32> {
    let c = ValidateConfig::from_json(text)?;
    let report = run_battery(&BatteryOptions {
        mode: c.mode,
        n_paths: c.n_paths,
        master_seed: c.master_seed,
        workers,
    })?;
    emit(common, &c.output, report.to_text().as_bytes())?;
    Ok(if report.passed() { 0 } else { EXIT_VALIDATION })
}
