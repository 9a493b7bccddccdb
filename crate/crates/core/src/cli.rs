//! Command-line front end: `gen`, `solve`, `profile` and `bench`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

use crate::baselines::{run_hill_climb, run_sa_observed, BaselineConfig};
use crate::bench::{load_plan, run_bench, write_report, ReportFormat};
use crate::cnf::{generate_random_ksat, read_dimacs_file, serialize_dimacs};
use crate::eda::{run_eda_observed, EdaConfig, RunResult, StepEvent, TemperatureSchedule};
use crate::landscape::EntropyEstimator;
use crate::profiler::{profile, DEFAULT_ENUMERATION_LIMIT};

pub const EXIT_SAT: i32 = 10;
pub const EXIT_UNKNOWN: i32 = 20;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "eda-sat", version, about = "Entropy-driven annealing SAT solver and landscape profiler")]
pub struct Cli {
    /// Seed for every random choice; a fresh one is drawn and printed when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Eda,
    Sa,
    Hc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Clause,
    Bits,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a uniform random k-SAT instance in DIMACS format.
    Gen {
        #[arg(short = 'n', long = "vars")]
        n: usize,
        #[arg(short = 'm', long = "clauses")]
        m: usize,
        #[arg(short = 'k', long = "width", default_value_t = 3)]
        k: usize,
        /// Output file (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a solver on a DIMACS file. Exits 10 when solved, 20 otherwise.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Engine::Eda)]
        engine: Engine,
        #[arg(long, default_value_t = 100_000)]
        max_iterations: u64,
        #[arg(long, default_value_t = 2.0)]
        t_start: f64,
        #[arg(long, default_value_t = 0.05)]
        t_final: f64,
        #[arg(long, default_value_t = 5)]
        tabu: usize,
        #[arg(long, default_value_t = 0.4)]
        theta0: f64,
        #[arg(long, default_value_t = 0.9999)]
        theta_decay: f64,
        #[arg(long, default_value_t = 1.0)]
        entropy_weight: f64,
        #[arg(long, value_enum, default_value_t = Estimator::Clause)]
        estimator: Estimator,
        /// Hill-climbing restarts.
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        /// Write the downsampled energy trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Exact landscape report (JSON) by full enumeration.
    Profile {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_LIMIT)]
        limit: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a benchmark plan and write CSV rows plus a JSON report.
    Bench {
        plan: PathBuf,
        /// CSV output; overrides the plan's `output.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// JSON output; overrides the plan's `output.json`.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn usage_error(message: String) -> clap::Error {
    Cli::command().error(ErrorKind::ValueValidation, message)
}

/// Parses `args` and runs the subcommand, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();

    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            let _ = write!(err, "{}", e.render());
            EXIT_USAGE
        }
        Err(Failure::Other(message)) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_ERROR
        }
    }
}

enum Failure {
    Usage(clap::Error),
    Other(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Other(e.to_string())
    }
}

fn resolve_seed(seed: Option<u64>, err: &mut dyn Write) -> u64 {
    seed.unwrap_or_else(|| {
        let seed = rand::random::<u64>();
        let _ = writeln!(err, "no --seed given, using {seed}");
        seed
    })
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Other(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(Failure::from),
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match cli.command {
        Command::Gen { n, m, k, output } => {
            if k == 0 || k > n {
                return Err(Failure::Usage(usage_error(format!(
                    "clause width must satisfy 1 <= k <= n (got k = {k}, n = {n})"
                ))));
            }
            let seed = resolve_seed(cli.seed, err);
            let formula = generate_random_ksat(n, m, k, seed)?;
            write_output(output.as_deref(), &serialize_dimacs(&formula), out)?;
            Ok(0)
        }
        Command::Solve {
            file,
            engine,
            max_iterations,
            t_start,
            t_final,
            tabu,
            theta0,
            theta_decay,
            entropy_weight,
            estimator,
            restarts,
            trace,
        } => {
            let schedule = TemperatureSchedule::EndpointExponential {
                t_start,
                t_final,
                max_iterations,
            };
            let eda = EdaConfig {
                schedule,
                max_iterations,
                tabu_capacity: tabu,
                estimator: match estimator {
                    Estimator::Clause => EntropyEstimator::ClauseSatisfaction,
                    Estimator::Bits => EntropyEstimator::BitBalance,
                },
                theta0,
                theta_decay,
                entropy_weight,
                ..EdaConfig::default()
            };
            let baseline = BaselineConfig {
                schedule,
                max_iterations,
                restarts,
                ..BaselineConfig::default()
            };
            let checked = match engine {
                Engine::Eda => eda.validate().map_err(|e| e.to_string()),
                Engine::Sa | Engine::Hc => baseline.validate().map_err(|e| e.to_string()),
            };
            checked.map_err(|e| Failure::Usage(usage_error(e)))?;

            let formula = read_dimacs_file(&file)?;
            let seed = resolve_seed(cli.seed, err);
            let progress = |e: &StepEvent| {
                if e.iteration.is_multiple_of(1000) {
                    log::debug!("iteration {} energy {} T {:.4}", e.iteration, e.energy_current, e.temperature);
                }
            };
            let result = match engine {
                Engine::Eda => run_eda_observed(&formula, &eda.with_seed(seed), progress)?,
                Engine::Sa => run_sa_observed(&formula, &baseline.with_seed(seed), progress)?,
                Engine::Hc => run_hill_climb(&formula, &baseline.with_seed(seed))?,
            };
            if let Some(path) = trace {
                fs::write(&path, trace_csv(&result))
                    .map_err(|e| Failure::Other(format!("cannot write {}: {e}", path.display())))?;
            }
            write_output(None, &solve_report(engine, seed, &result), out)?;
            Ok(if result.solved { EXIT_SAT } else { EXIT_UNKNOWN })
        }
        Command::Profile { file, limit, output } => {
            let formula = read_dimacs_file(&file)?;
            let report = profile(&formula, limit)?;
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            write_output(output.as_deref(), &text, out)?;
            Ok(0)
        }
        Command::Bench { plan, csv, json } => {
            let plan = load_plan(&plan)?;
            let csv = csv.or_else(|| plan.output.csv.as_deref().map(|p| plan.resolve(p)));
            let json = json.or_else(|| plan.output.json.as_deref().map(|p| plan.resolve(p)));
            let (csv, json) = match (csv, json) {
                (Some(c), Some(j)) => (c, j),
                _ => {
                    return Err(Failure::Usage(usage_error(
                        "bench needs both a CSV and a JSON output path (plan `output` or --csv/--json)"
                            .to_string(),
                    )))
                }
            };
            let report = run_bench(&plan)?;
            for e in &report.errors {
                let _ = writeln!(err, "instance {}: {}", e.instance_id, e.message);
            }
            write_report(&report, ReportFormat::Csv, &csv)?;
            write_report(&report, ReportFormat::Json, &json)?;
            let mut summary = String::from("instance\tengine\tsuccess_rate\tmedian_iterations\n");
            for a in &report.aggregates {
                let median = a.median_iterations.map_or("-".to_string(), |m| m.to_string());
                summary.push_str(&format!("{}\t{}\t{}\t{}\n", a.instance_id, a.engine, a.success_rate, median));
            }
            write_output(None, &summary, out)?;
            if report.rows.is_empty() {
                return Err(Failure::Other("no benchmark cell ran".to_string()));
            }
            Ok(0)
        }
    }
}

fn solve_report(engine: Engine, seed: u64, result: &RunResult) -> String {
    let name = match engine {
        Engine::Eda => "eda",
        Engine::Sa => "sa",
        Engine::Hc => "hc",
    };
    let mut s = format!(
        "c engine {name}\nc seed {seed}\nc iterations {}\nc best_energy {}\nc accepts {} rejects {}\n",
        result.iterations_used, result.best_energy, result.accept_count, result.reject_count
    );
    match &result.witness {
        Some(w) if result.solved => {
            s.push_str("s SATISFIABLE\nv");
            for lit in w.literals() {
                s.push_str(&format!(" {lit}"));
            }
            s.push_str(" 0\n");
        }
        _ => s.push_str("s UNKNOWN\n"),
    }
    s
}

fn trace_csv(result: &RunResult) -> String {
    let mut s = String::from("iteration,energy,entropy,temperature\n");
    for p in &result.energy_trace {
        s.push_str(&format!("{},{},{},{}\n", p.iteration, p.energy, p.entropy, p.temperature));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("eda-sat").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn gen_rejects_wide_clauses_with_usage() {
        let (code, _, err) = call(&["gen", "-n", "2", "-m", "1", "-k", "3", "--seed", "1"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("1 <= k <= n"), "{err}");
        assert!(err.contains("Usage"), "{err}");
    }

    #[test]
    fn gen_to_stdout() {
        let (code, out, _) = call(&["gen", "-n", "4", "-m", "2", "-k", "2", "--seed", "5"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("p cnf 4 2\n"));
    }

    #[test]
    fn solve_trivial_and_contradiction() {
        let dir = tempfile::tempdir().unwrap();
        let sat = dir.path().join("s.cnf");
        fs::write(&sat, "p cnf 1 1\n1 0\n").unwrap();
        let (code, out, _) = call(&["solve", sat.to_str().unwrap(), "--seed", "3"]);
        assert_eq!(code, EXIT_SAT);
        assert!(out.contains("s SATISFIABLE\nv 1 0\n"), "{out}");

        let unsat = dir.path().join("u.cnf");
        fs::write(&unsat, "p cnf 1 2\n1 0\n-1 0\n").unwrap();
        for engine in ["eda", "sa", "hc"] {
            let (code, out, _) = call(&[
                "solve", unsat.to_str().unwrap(), "--engine", engine, "--max-iterations", "200", "--seed", "3",
            ]);
            assert_eq!(code, EXIT_UNKNOWN, "{engine}");
            assert!(out.contains("s UNKNOWN"));
        }
    }

    #[test]
    fn solve_validates_flags_before_reading() {
        let (code, _, err) = call(&["solve", "/nonexistent.cnf", "--theta0", "2", "--seed", "1"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("theta0"), "{err}");
        let (code, _, _) = call(&["solve", "/nonexistent.cnf", "--seed", "1"]);
        assert_eq!(code, EXIT_ERROR);
    }

    #[test]
    fn solve_writes_trace() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("f.cnf");
        fs::write(&f, "p cnf 3 3\n1 2 0\n-1 3 0\n-2 -3 0\n").unwrap();
        let trace = dir.path().join("t.csv");
        let (code, _, _) = call(&["solve", f.to_str().unwrap(), "--seed", "1", "--trace", trace.to_str().unwrap()]);
        assert_eq!(code, EXIT_SAT);
        assert!(fs::read_to_string(trace).unwrap().starts_with("iteration,energy,entropy,temperature\n"));
    }

    #[test]
    fn profile_refuses_oversize() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("big.cnf");
        fs::write(&f, "p cnf 30 1\n1 0\n").unwrap();
        let (code, _, err) = call(&["profile", f.to_str().unwrap()]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("enumeration limit of 26"), "{err}");
    }

    #[test]
    fn missing_subcommand_is_usage_error() {
        let (code, _, err) = call(&[]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("Usage"));
    }
}
