//! Entropy-driven annealing for SAT.
//!
//! - [`cnf`]: formulas, DIMACS parsing/serialization, random k-SAT generation
//! - [`landscape`]: energy, per-state entropy estimators, flips, the generic [`landscape::Landscape`] contract
//! - [`eda`]: cooling schedules, free-energy Metropolis acceptance, tabu memory and the solver loop
//! - [`baselines`]: classical simulated annealing and restarted hill climbing
//! - [`profiler`]: exact enumeration metrics (solution count, entropy profile, minima, barriers, ruggedness)
//! - [`bench`]: seeded run-matrix harness with CSV/JSON reports
//! - [`cli`]: the `eda-sat` command line

pub mod baselines;
pub mod bench;
pub mod cli;
pub mod cnf;
pub mod eda;
pub mod landscape;
pub mod profiler;

pub use baselines::{run_hill_climb, run_sa, BaselineConfig};
pub use cnf::{generate_random_ksat, parse_dimacs, serialize_dimacs, CnfFormula, Literal};
pub use eda::{run_eda, EdaConfig, RunResult, TemperatureSchedule};
pub use landscape::{Assignment, EntropyEstimator};
pub use profiler::{LandscapeReport, Profiler};
