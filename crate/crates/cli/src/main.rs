mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hmix_core::io::write_field;
use hmix_core::oracle;
use hmix_core::problems::{check_problem, presets, BoxSpec, Chi0Spec, Deflation, ProblemConfig};
use hmix_core::solver::{continuity_solve, SolveReport, SolverConfig};
use hmix_core::{Descriptor, HmixError};
use log::info;
use serde::Serialize;
use serde_json::json;

use manifest::{Clock, RunManifest};

#[derive(Parser)]
#[command(name = "hmix", version, about = "Dirichlet solver for complex mixed Hessian equations on boxes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// seed for sampled suites (recorded in every manifest)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// refine every axis: points -> (points - 1) * scale + 1
    #[arg(long, global = true, default_value_t = 1)]
    grid_scale: usize,
    #[arg(long, global = true)]
    max_threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem and write the solution, report and manifest
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a problem and print its margins
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a property suite: symfun, spectral, operator or convergence
    Suite {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a manufactured-solution config from a u* descriptor
    Manufacture {
        /// u* descriptor as JSON, or @path to a file holding it
        #[arg(long, conflicts_with = "preset")]
        ustar: Option<String>,
        /// named configuration: ci, quadratic, n3k2, n3k3
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        points: Option<usize>,
        /// constant α_0..α_{k−2}; repeat per coefficient
        #[arg(long)]
        alpha: Vec<f64>,
        /// χ_0 = c·I
        #[arg(long, default_value_t = 0.0)]
        chi0: f64,
        /// deflation constant for the sine-bump subsolution
        #[arg(long)]
        deflate: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure {
    code: u8,
    error: HmixError,
}

impl From<HmixError> for Failure {
    fn from(error: HmixError) -> Self {
        let code = match error {
            HmixError::HomotopyFailure { .. } | HmixError::NewtonStall { .. } | HmixError::LinearFailure { .. } => 2,
            _ => 1,
        };
        Failure { code, error }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 1, error: HmixError::Io(e) }
    }
}

fn error_json(e: &HmixError, code: u8) -> serde_json::Value {
    let mut v = json!({ "status": "error", "kind": e.kind(), "message": e.to_string(), "exit_code": code });
    match e {
        HmixError::ConeViolation { points, worst } | HmixError::Construction { points, worst, .. } => {
            v["points"] = json!(points.iter().take(100).collect::<Vec<_>>());
            v["point_count"] = json!(points.len());
            v["worst"] = json!(worst);
        }
        HmixError::HomotopyFailure { t, trace } => {
            v["t"] = json!(t);
            v["trace"] = json!(trace);
        }
        _ => {}
    }
    v
}

fn read_config(path: &Path) -> Result<ProblemConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| {
        Failure::from(HmixError::Config(format!("cannot read {}: {e}", path.display())))
    })?;
    Ok(ProblemConfig::from_json(&text)?)
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<PathBuf, Failure> {
    fs::write(path, serde_json::to_string_pretty(v).map_err(HmixError::from)? + "\n")?;
    Ok(path.to_path_buf())
}

#[derive(Serialize)]
struct RunReport<'a> {
    status: &'static str,
    config: &'a ProblemConfig,
    grid_scale: usize,
    solver: &'a SolverConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_error_vs_ustar: Option<f64>,
    #[serde(flatten)]
    result: &'a SolveReport,
}

fn cmd_solve(cli: &Cli, config: &Path, out: &Path) -> Result<(), Failure> {
    let clock = Clock::start();
    let cfg = read_config(config)?;
    fs::create_dir_all(out)?;
    let manifest = RunManifest::new("solve", Some(config), out, cli.seed, cli.grid_scale);
    let solver = cfg.solver.clone().unwrap_or_default();
    let outcome = cfg.build(cli.grid_scale).and_then(|built| {
        continuity_solve(&built.spec, &solver).map(|sol| (built, sol))
    });
    let (built, sol) = match outcome {
        Ok(v) => v,
        Err(e) => {
            let f = Failure::from(e);
            let path = write_json(&out.join("error.json"), &error_json(&f.error, f.code))?;
            manifest.finish(&clock, out, &[path])?;
            return Err(f);
        }
    };
    let (bin, sidecar) = write_field(&out.join("solution"), &sol.u)?;
    let report = RunReport {
        status: "converged",
        config: &cfg,
        grid_scale: cli.grid_scale,
        solver: &solver,
        max_error_vs_ustar: built.manufactured.as_ref().map(|mp| sol.u.max_abs_diff(&mp.ustar)),
        result: &sol.report,
    };
    let report_path = write_json(&out.join("report.json"), &report)?;
    manifest.finish(&clock, out, &[bin, sidecar, report_path])?;
    println!(
        "{}",
        json!({
            "status": "converged",
            "final_residual": sol.report.final_residual,
            "newton_iterations": sol.report.total_newton_iterations,
            "max_error_vs_ustar": report.max_error_vs_ustar,
            "out": out.display().to_string(),
        })
    );
    Ok(())
}

fn cmd_check(cli: &Cli, config: &Path) -> Result<(), Failure> {
    let cfg = read_config(config)?;
    let built = cfg.build(cli.grid_scale)?;
    let report = check_problem(&built.spec)?;
    let ok = report.ok();
    println!("{}", serde_json::to_string_pretty(&json!({ "ok": ok, "margins": report })).map_err(HmixError::from)?);
    if ok {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            error: HmixError::Precondition("cone bounds or supersolution checks failed".into()),
        })
    }
}

fn cmd_suite(cli: &Cli, name: &str, out: Option<&Path>) -> Result<(), Failure> {
    let clock = Clock::start();
    let rep = oracle::run_suite(name, cli.seed)?;
    let summary = json!({
        "suite": rep.suite,
        "passed": rep.passed(),
        "cases": rep.cases,
        "max_abs_err": rep.max_abs_err,
        "max_rel_err": rep.max_rel_err,
        "details": rep.details,
    });
    println!("{}", serde_json::to_string_pretty(&summary).map_err(HmixError::from)?);
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        let path = write_json(&out.join("oracle_report.json"), &rep)?;
        RunManifest::new(&format!("suite {name}"), None, out, cli.seed, cli.grid_scale).finish(&clock, out, &[path])?;
    }
    if rep.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            error: HmixError::Precondition(format!("{} suite: {}", name, rep.failures.join("; "))),
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_manufacture(
    cli: &Cli,
    ustar: Option<&str>,
    preset: Option<&str>,
    n: usize,
    k: usize,
    points: Option<usize>,
    alpha: &[f64],
    chi0: f64,
    deflate: Option<f64>,
    out: &Path,
) -> Result<(), Failure> {
    let clock = Clock::start();
    let cfg = match (preset, ustar) {
        (Some(name), _) => presets::by_name(name, points)
            .ok_or_else(|| HmixError::Config(format!("unknown preset '{name}'")))?,
        (None, Some(text)) => {
            let text = match text.strip_prefix('@') {
                Some(path) => fs::read_to_string(path)?,
                None => text.to_string(),
            };
            let desc: Descriptor = serde_json::from_str(&text)
                .map_err(|e| HmixError::Config(format!("invalid u* descriptor: {e}")))?;
            let pts = points.unwrap_or(9);
            let alpha = if alpha.is_empty() { vec![0.5; k.saturating_sub(1)] } else { alpha.to_vec() };
            ProblemConfig {
                n,
                k,
                bbox: BoxSpec { lo: vec![-1.0; 2 * n], hi: vec![1.0; 2 * n] },
                shape: vec![pts; 2 * n],
                chi0: Chi0Spec::ScaledIdentity { c: chi0 },
                alpha: alpha.into_iter().map(|value| Descriptor::Constant { value }).collect(),
                ustar: Some(desc),
                phi: None,
                usub: None,
                deflation: deflate.map(|c| Deflation { c, bump: Descriptor::SineBump { coef: 1.0 } }),
                solver: None,
            }
        }
        (None, None) => return Err(HmixError::Config("either --ustar or --preset is required".into()).into()),
    };
    // refuse to write a config that would not build
    cfg.build(1)?;
    fs::create_dir_all(out)?;
    let path = out.join("config.json");
    fs::write(&path, cfg.to_json() + "\n")?;
    RunManifest::new("manufacture", None, out, cli.seed, cli.grid_scale).finish(&clock, out, &[path.clone()])?;
    println!("{}", json!({ "status": "ok", "config": path.display().to_string() }));
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if cli.grid_scale == 0 {
        return Err(HmixError::Config("--grid-scale must be at least 1".into()).into());
    }
    if let Some(t) = cli.max_threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| HmixError::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Solve { config, out } => cmd_solve(cli, config, out),
        Command::Check { config } => cmd_check(cli, config),
        Command::Suite { name, out } => cmd_suite(cli, name, out.as_deref()),
        Command::Manufacture { ustar, preset, n, k, points, alpha, chi0, deflate, out } => cmd_manufacture(
            cli,
            ustar.as_deref(),
            preset.as_deref(),
            *n,
            *k,
            *points,
            alpha,
            *chi0,
            *deflate,
            out,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HMIX_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => {
            info!("done");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", error_json(&f.error, f.code));
            ExitCode::from(f.code)
        }
    }
}
