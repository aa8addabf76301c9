use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evd::checks::{check_material, oracle0d};
use evd::converge::converge;
use evd::ledger::read_ledger;
use evd::runner::run_scenario;
use evd::scenarios::{resolve, BUILTIN};
use evd::{EvdError, Result, ScenarioConfig};

/// Eulerian visco-elastodynamics: scenario runs, convergence studies and
/// oracle checks.
#[derive(Parser)]
#[command(name = "evd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file, or the name of a shipped scenario.
    #[arg(long)]
    config: String,
    /// Dotted-path override, e.g. `--set solver.tau=1e-3`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for `--set solver.tau=...`.
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario, writing ledger.csv and snapshots.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory (default: $EVD_OUT_DIR, else out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// τ-refinement study with observed orders.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the 0D stepper with the RK4 reference.
    Oracle0d {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Finite-difference, seam and conjugate checks of a scenario's material.
    CheckMaterial {
        #[command(flatten)]
        common: Common,
        /// Random samples per truncation region.
        #[arg(long, default_value_t = 25)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Check a deliberately broken derivative instead (negative control).
        #[arg(long, hide = true)]
        fault_fixture: bool,
    },
    /// Summarize a ledger CSV (file or run directory).
    Report { path: PathBuf },
    /// List the shipped scenarios.
    List,
}

const OUT_ENV: &str = "EVD_OUT_DIR";

fn load(c: &Common) -> Result<ScenarioConfig> {
    let mut sets = c.set.clone();
    if let Some(t) = c.tau {
        sets.push(format!("solver.tau={t:e}"));
    }
    resolve(&c.config, &sets)
}

fn out_dir(flag: Option<PathBuf>, cfg: &ScenarioConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| Path::new("out").join(&cfg.name))
}

fn report(path: &Path) -> Result<()> {
    let file = if path.is_dir() { path.join("ledger.csv") } else { path.to_path_buf() };
    let rows = read_ledger(std::fs::File::open(&file)?)?;
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(EvdError::Format("empty ledger".into())),
    };
    let max_r = rows.iter().fold(0.0f64, |m, r| m.max(r.residual.abs()));
    let min_rho = rows.iter().filter(|r| !r.min_rho.is_nan()).fold(f64::INFINITY, |m, r| m.min(r.min_rho));
    let min_det = rows.iter().fold(f64::INFINITY, |m, r| m.min(r.min_det_fe));
    let act = rows.iter().fold(0.0f64, |m, r| m.max(r.activation_fraction));
    println!("ledger          {}", file.display());
    println!("steps           {}", last.step);
    println!("time            {} .. {}", first.t, last.t);
    println!("total energy    {:.6e} -> {:.6e}", first.total, last.total);
    println!("max |residual|  {max_r:.3e}");
    println!("cum residual    {:.3e}", last.cum_residual);
    if min_rho.is_finite() {
        println!("min rho         {min_rho:.6e}");
    } else {
        println!("min rho         n/a (0D drive)");
    }
    println!("min det Fe      {min_det:.6e}");
    println!("max activation  {act}");
    Ok(())
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { common, out } => {
            let cfg = load(&common)?;
            let dir = out_dir(out, &cfg);
            let res = run_scenario(&cfg, Some(&dir))?;
            let last = res.rows.last().unwrap();
            println!(
                "{}: {} steps to t = {}, cum residual {:.3e}, output in {}",
                cfg.name,
                last.step,
                last.t,
                last.cum_residual,
                dir.display()
            );
        }
        Command::Converge { common, levels, out } => {
            let cfg = load(&common)?;
            let rep = converge(&cfg, levels)?;
            print!("{rep}");
            let dir = out_dir(out, &cfg);
            std::fs::create_dir_all(&dir)?;
            rep.write_csv(std::fs::File::create(dir.join("converge.csv"))?)?;
            if let Some((k, e)) = rep.failure {
                return Err(EvdError::Tolerance(format!("level {k} failed: {e}")));
            }
        }
        Command::Oracle0d { common, levels } => {
            let cfg = load(&common)?;
            let rep = oracle0d(&cfg, levels)?;
            print!("{rep}");
            rep.into_result()?;
        }
        Command::CheckMaterial {
            common,
            samples,
            seed,
            fault_fixture,
        } => {
            let cfg = load(&common)?;
            let rep = check_material(&cfg.material, samples, seed, fault_fixture)?;
            print!("{rep}");
            rep.into_result()?;
        }
        Command::Report { path } => report(&path)?,
        Command::List => {
            for (name, _) in BUILTIN {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // usage errors are configuration errors (exit 1); 2 is reserved for run failures
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
