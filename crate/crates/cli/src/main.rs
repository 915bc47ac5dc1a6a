//! `nehari`: command line driver for the Nehari/fibering solver.
//!
//! Exit codes: 0 success, 1 property failure, 2 configuration error,
//! 3 hypothesis failure, 4 solver or output failure.

mod config;
mod expr;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nehari_core::energy::Fiber;
use nehari_core::fibering::find_fibering_roots;
use nehari_core::nehari::{default_start, lambda_scan, random_positive_direction, rng_stream, solve_two_solutions};
use nehari_core::output::{format_f64, solution_csv, to_json};
use nehari_core::problem::{check_hypotheses, HypothesisReport};
use nehari_core::properties::run_property_suite;
use nehari_core::Error;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "nehari", version, about = "Two positive solutions of singular Kirchhoff problems via the Nehari manifold")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize on both Nehari branches and write the report and solutions.
    Solve(Common),
    /// Run the property suite and write pass/fail JSON.
    Check(Common),
    /// Fibering root structure over a lambda grid.
    Scan(Common),
    /// Dump the fibering profile of one direction.
    Fibering {
        #[command(flatten)]
        common: Common,
        /// random direction index (overrides `fibering.direction`)
        #[arg(long)]
        direction: Option<u64>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    override_hypotheses: bool,
    /// output directory (overrides `output.dir`)
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn solver(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }

    fn from_core(e: Error) -> Self {
        match e {
            Error::Hypothesis(m) => Self {
                code: 3,
                message: format!("hypotheses not satisfied: {m} (use --override-hypotheses to run anyway)"),
            },
            e => Self::solver(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Solve(c) => setup(&c).and_then(|(cfg, out)| solve(&cfg, &out)),
        Command::Check(c) => setup(&c).and_then(|(cfg, out)| check(&cfg, &out)),
        Command::Scan(c) => setup(&c).and_then(|(cfg, out)| scan(&cfg, &out)),
        Command::Fibering { common, direction } => setup(&common).and_then(|(mut cfg, out)| {
            if direction.is_some() {
                cfg.fibering.direction = direction;
            }
            fibering(&cfg, &out)
        }),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn setup(c: &Common) -> Result<(RunConfig, PathBuf), Failure> {
    let mut cfg = config::load(&c.config).map_err(Failure::config)?;
    if let Some(seed) = c.seed {
        cfg.solver.seed = seed;
        cfg.check.seed = seed;
    }
    if c.override_hypotheses {
        cfg.solver.override_hypotheses = true;
    }
    let out = c.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    Ok((cfg, out))
}

fn write(dir: &Path, name: &str, contents: &str) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::solver(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::solver(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn json<T: serde::Serialize + ?Sized>(v: &T) -> Result<String, Failure> {
    to_json(v).map_err(Failure::from_core)
}

fn print_audit(audit: &HypothesisReport) {
    println!("hypothesis audit:");
    for c in &audit.checks {
        println!("  [{}] {}: {}", if c.ok { " ok " } else { "FAIL" }, c.name, c.detail);
    }
}

/// Audit gate shared by `solve` and `scan`.
fn audit(cfg: &RunConfig, audit: &HypothesisReport) -> Outcome {
    print_audit(audit);
    if audit.all_ok() || cfg.solver.override_hypotheses {
        return Ok(());
    }
    let names: Vec<String> = audit.failures().iter().map(|c| c.name.clone()).collect();
    Err(Failure::from_core(Error::Hypothesis(names.join("; "))))
}

fn solve(cfg: &RunConfig, out: &Path) -> Outcome {
    let problem = cfg.problem(cfg.lambda().map_err(Failure::config)?).map_err(Failure::config)?;
    audit(cfg, &check_hypotheses(&problem))?;
    let report = solve_two_solutions(&problem, &cfg.solver).map_err(Failure::from_core)?;
    write(out, "report.json", &json(&report)?)?;
    for (name, b) in [("u_plus.csv", &report.plus), ("u_minus.csv", &report.minus)] {
        if let Some(p) = &b.point {
            write(out, name, &solution_csv(&p.u))?;
            println!(
                "{:<6} energy {}  relative residual {:.3e}  iterations {}",
                p.branch.name(),
                format_f64(p.energy),
                b.relative_residual,
                b.iterations
            );
        }
    }
    if report.success {
        Ok(())
    } else {
        Err(Failure::solver(format!("solve failed: {}", report.failures.join("; "))))
    }
}

fn check(cfg: &RunConfig, out: &Path) -> Outcome {
    let problem = cfg.problem(cfg.lambda().map_err(Failure::config)?).map_err(Failure::config)?;
    let results = run_property_suite(&problem, &cfg.check).map_err(Failure::from_core)?;
    write(out, "properties.json", &json(&results)?)?;
    let mut failed = Vec::new();
    for r in &results {
        println!(
            "[{}] {} ({} samples, max violation {:.3e}, tolerance {:.1e})",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.samples,
            r.max_violation,
            r.tolerance
        );
        if !r.passed {
            failed.push(format!("{}: {}", r.name, r.detail));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("{} properties failed: {}", failed.len(), failed.join("; ")),
        })
    }
}

fn scan(cfg: &RunConfig, out: &Path) -> Outcome {
    let lambdas = cfg.lambda_grid().map_err(Failure::config)?;
    let problem = cfg.problem(lambdas[0]).map_err(Failure::config)?;
    audit(cfg, &check_hypotheses(&problem))?;
    let scan = lambda_scan(&problem, &lambdas, cfg.scan.n_directions, &cfg.solver).map_err(Failure::from_core)?;
    write(out, "scan.csv", &scan.to_csv())?;
    write(out, "scan.json", &json(&scan)?)?;
    for d in &scan.diagnostics {
        println!(
            "lambda {}  D1 {}  D2 {}  sigma {}  {}/{} directions",
            format_f64(d.lambda),
            format_f64(d.d1_estimate),
            format_f64(d.d2_estimate),
            format_f64(d.sigma_estimate),
            d.n_success,
            d.n_directions
        );
    }
    match scan.lambda_empirical {
        Some(l) => println!("lambda_empirical = {}", format_f64(l)),
        None => println!("lambda_empirical = none (no lambda in the grid had two roots for every direction)"),
    }
    Ok(())
}

fn fibering(cfg: &RunConfig, out: &Path) -> Outcome {
    let problem = cfg.problem(cfg.lambda().map_err(Failure::config)?).map_err(Failure::config)?;
    let u = match cfg.fibering.direction {
        Some(i) => random_positive_direction(&problem.mesh, &mut rng_stream(cfg.solver.seed, i)),
        None => default_start(&problem.mesh),
    };
    let fiber = Fiber::new(&problem, &u).map_err(Failure::from_core)?;
    let profile = find_fibering_roots(&fiber, &cfg.solver.roots, cfg.solver.execution).map_err(Failure::from_core)?;
    write(out, "fibering.csv", &profile.to_csv())?;
    if profile.roots.is_empty() {
        println!("no roots of psi' in [{:e}, {:e}]", cfg.solver.roots.t_min, cfg.solver.roots.t_max);
    }
    for r in &profile.roots {
        println!("root t = {}  psi'' = {}  ({})", format_f64(r.t), format_f64(r.d2psi), r.branch.name());
    }
    Ok(())
}
