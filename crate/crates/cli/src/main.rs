//! `hexctl`: design optimization, limit analysis and closed-loop simulation.
//!
//! Results go to stdout as JSON; diagnostics go to stderr.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hexrotor::design::{OptimizerSettings, ParetoFront};
use hexrotor::nalgebra::Vector3;
use hexrotor::scenario::{run_scenario, summarize_metrics, Outcome, Scenario};
use hexrotor::wrench::{ActuationMatrix, DesignConfig, WrenchKind};
use hexrotor::Error;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "hexctl",
    version,
    about = "Fully actuated hexarotor design and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize tilt angles and spin pattern; writes front.csv and selected_design.json.
    Design {
        /// Optimizer settings JSON (all fields optional).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated λ values, e.g. 0,0.25,0.5.
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        /// Random starts per spin orbit.
        #[arg(long)]
        n_starts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report force and torque limits of a design.
    Limits {
        design: PathBuf,
        /// Direction x,y,z (normalized before use).
        #[arg(long, allow_hyphen_values = true)]
        direction: Option<String>,
    },
    /// Run a scenario; writes log.csv and metrics.json.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Exit status plus a message for stderr.
struct Failure(u8, String);

impl Failure {
    fn io(context: &Path, e: impl std::fmt::Display) -> Self {
        Failure(1, format!("{}: {e}", context.display()))
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design {
            config,
            lambda,
            n_starts,
            seed,
            out,
        } => cmd_design(config.as_deref(), lambda, n_starts, seed, &out),
        Command::Limits { design, direction } => cmd_limits(&design, direction),
        Command::Simulate { scenario, out } => cmd_simulate(&scenario, &out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("hexctl: {msg}");
            ExitCode::from(code)
        }
    }
}

fn configure_threads() {
    let Ok(value) = std::env::var("HEXCTL_THREADS") else {
        return;
    };
    match value.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                eprintln!("hexctl: could not size thread pool: {e}");
            }
        }
        _ => eprintln!("hexctl: ignoring HEXCTL_THREADS={value}"),
    }
}

/// Creates `dir` and makes sure each named file can be written.
fn prepare_output(dir: &Path, files: &[&str]) -> Result<Vec<PathBuf>, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    files
        .iter()
        .map(|name| {
            let path = dir.join(name);
            File::create(&path).map_err(|e| Failure::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn cmd_design(
    config: Option<&Path>,
    lambda: Option<Vec<f64>>,
    n_starts: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> CmdResult {
    let mut settings = match config {
        Some(path) => OptimizerSettings::from_json(&read(path)?)
            .map_err(|e| Failure(1, format!("{}: {e}", path.display())))?,
        None => OptimizerSettings::default(),
    };
    if let Some(mut grid) = lambda {
        grid.sort_by(f64::total_cmp);
        settings.lambda_grid = grid;
    }
    if let Some(n) = n_starts {
        settings.n_starts = n;
    }
    if let Some(s) = seed {
        settings.seed = s;
    }
    settings.validate().map_err(|e| Failure(1, e.to_string()))?;
    let paths = prepare_output(out, &["front.csv", "selected_design.json"])?;

    eprintln!(
        "hexctl: optimizing {} lambda values, {} starts per orbit",
        settings.lambda_grid.len(),
        settings.n_starts
    );
    let front = ParetoFront::compute(&settings).map_err(|e| Failure(2, e.to_string()))?;
    let selected = front
        .selected_design(&settings)
        .ok_or_else(|| Failure(2, "no lambda value converged".into()))?;

    let csv = File::create(&paths[0]).map_err(|e| Failure::io(&paths[0], e))?;
    front
        .write_csv(BufWriter::new(csv))
        .map_err(|e| Failure::io(&paths[0], e))?;
    let text = serde_json::to_string_pretty(&selected).expect("design serializes");
    fs::write(&paths[1], text + "\n").map_err(|e| Failure::io(&paths[1], e))?;

    let converged = front.points.iter().filter(|p| p.solution.is_some()).count();
    let sh = &front.shadow;
    let summary = json!({
        "p_star": sh.p_star,
        "q_star": sh.q_star,
        "q0": sh.q0,
        "p0": sh.p0,
        "lambda_count": front.points.len(),
        "converged": converged,
        "front_csv": paths[0],
        "selected_design": paths[1],
    });
    println!("{summary:#}");
    Ok(0)
}

fn parse_direction(text: &str) -> Result<Vector3<f64>, Failure> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure(1, format!("direction '{text}': {e}")))?;
    match parts[..] {
        [x, y, z] => Ok(Vector3::new(x, y, z)),
        _ => Err(Failure(
            1,
            format!("direction '{text}' needs three components"),
        )),
    }
}

fn cmd_limits(path: &Path, direction: Option<String>) -> CmdResult {
    let direction = direction.as_deref().map(parse_direction).transpose()?;
    let design: DesignConfig = serde_json::from_str(&read(path)?)
        .map_err(|e| Failure(1, format!("{}: {e}", path.display())))?;
    let am = ActuationMatrix::new(&design);
    let singular = |e: Error| Failure(2, e.to_string());
    let limits = am.limits().map_err(singular)?;
    let mut report = json!({
        "f_max": limits.force,
        "m_max": limits.torque,
        "rank": am.rank(),
        "condition_number": am.condition_number(),
    });
    if let Some(v) = direction {
        if !(v.norm() > 0.0 && v.norm().is_finite()) {
            return Err(Failure(1, "direction must be a non-zero vector".into()));
        }
        let unit = v.normalize();
        report["direction"] = json!([unit.x, unit.y, unit.z]);
        report["force_limit_along"] =
            json!(am.limit_along(WrenchKind::Force, &unit).map_err(singular)?);
        report["torque_limit_along"] = json!(am
            .limit_along(WrenchKind::Torque, &unit)
            .map_err(singular)?);
    }
    println!("{report:#}");
    Ok(0)
}

fn cmd_simulate(path: &Path, out: &Path) -> CmdResult {
    let scenario = Scenario::from_json(&read(path)?)
        .map_err(|e| Failure(1, format!("{}: {e}", path.display())))?;
    let paths = prepare_output(out, &["log.csv", "metrics.json"])?;
    let log = run_scenario(&scenario).map_err(|e| match e {
        Error::SingularDesign { .. } => Failure(2, e.to_string()),
        Error::AttitudeSingularity { .. } => Failure(4, e.to_string()),
        other => Failure(1, other.to_string()),
    })?;
    let file = File::create(&paths[0]).map_err(|e| Failure::io(&paths[0], e))?;
    log.write_csv(BufWriter::new(file))
        .map_err(|e| Failure::io(&paths[0], e))?;
    let metrics = summarize_metrics(&log).map_err(|e| Failure(1, e.to_string()))?;
    let text = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    fs::write(&paths[1], text.clone() + "\n").map_err(|e| Failure::io(&paths[1], e))?;
    println!("{text}");
    Ok(match log.outcome {
        Outcome::Completed => 0,
        Outcome::TimedOut => {
            eprintln!(
                "hexctl: t_max reached with {} of {} waypoints",
                log.achieved,
                log.waypoints.len()
            );
            3
        }
        Outcome::AttitudeSingularity => {
            eprintln!("hexctl: attitude error undefined, run aborted");
            4
        }
    })
}
