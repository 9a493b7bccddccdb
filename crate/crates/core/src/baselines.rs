//! Reference solvers: classical simulated annealing on raw energy and
//! best-improvement hill climbing with random restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cnf::CnfFormula;
use crate::eda::{
    acceptance_probability, finish, validate_budget, EdaError, RunResult, StepEvent,
    TemperatureSchedule, TracePoint, TraceRecorder, DEFAULT_MAX_ITERATIONS,
};
use crate::landscape::{Assignment, EntropyEstimator, FlipCache, OccurrenceIndex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub schedule: TemperatureSchedule,
    pub max_iterations: u64,
    pub seed: u64,
    /// Hill climbing only: fresh random starts after the first local minimum.
    pub restarts: usize,
    pub trace_interval: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            schedule: TemperatureSchedule::EndpointExponential {
                t_start: 2.0,
                t_final: 0.05,
                max_iterations: DEFAULT_MAX_ITERATIONS,
            },
            max_iterations: DEFAULT_MAX_ITERATIONS,
            seed: 0,
            restarts: 100,
            trace_interval: 100,
        }
    }
}

impl BaselineConfig {
    pub fn with_max_iterations(mut self, max_iterations: u64) -> Self {
        self.max_iterations = max_iterations;
        if let TemperatureSchedule::EndpointExponential { max_iterations: ref mut h, .. } =
            self.schedule
        {
            *h = max_iterations;
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), EdaError> {
        self.schedule.validate()?;
        validate_budget(&self.schedule, self.max_iterations)?;
        if self.trace_interval == 0 {
            return Err(crate::eda::ConfigError::OutOfRange {
                name: "trace_interval",
                value: 0.0,
                expected: ">= 1",
            }
            .into());
        }
        Ok(())
    }
}

// trace entropies for the baselines use the default estimator
const TRACE_ESTIMATOR: EntropyEstimator = EntropyEstimator::ClauseSatisfaction;

fn trace_point(cache: &FlipCache<'_>, iteration: u64, temperature: f64) -> TracePoint {
    TracePoint {
        iteration,
        energy: cache.energy(),
        entropy: cache.entropy(TRACE_ESTIMATOR),
        temperature,
    }
}

pub fn run_sa(formula: &CnfFormula, config: &BaselineConfig) -> Result<RunResult, EdaError> {
    run_sa_observed(formula, config, |_| {})
}

/// Metropolis annealing with uniformly random single flips. Consumes the RNG
/// exactly like the entropy-driven solver does in its always-explore,
/// tabu-free, zero-weight configuration.
pub fn run_sa_observed<F: FnMut(&StepEvent)>(
    formula: &CnfFormula,
    config: &BaselineConfig,
    mut observer: F,
) -> Result<RunResult, EdaError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = formula.num_vars();
    let index = OccurrenceIndex::new(formula);
    let mut cache = FlipCache::new(formula, &index, Assignment::random(n, &mut rng))?;
    let mut temps = config.schedule.temperatures();
    let t0 = temps.next().unwrap();
    let mut trace = TraceRecorder::new(config.trace_interval, trace_point(&cache, 0, t0));
    let mut last = trace_point(&cache, 0, t0);
    let (mut accepts, mut rejects) = (0u64, 0u64);
    let mut iteration = 0;

    if cache.energy() != 0 && n > 0 {
        for i in 1..=config.max_iterations {
            iteration = i;
            let temp = temps.next().unwrap();
            let var = rng.gen_range(0..n) + 1;
            let energy_current = cache.energy();
            let energy_new = (energy_current as i64 + cache.flip_delta(var)) as usize;
            let p = acceptance_probability(energy_current as f64, energy_new as f64, temp, 1.0);
            let accepted = rng.gen::<f64>() < p;
            if accepted {
                cache.flip(var);
                accepts += 1;
            } else {
                rejects += 1;
            }
            observer(&StepEvent {
                iteration: i,
                temperature: temp,
                var,
                explored: true,
                energy_current,
                energy_candidate: energy_new,
                accepted,
            });
            last = trace_point(&cache, i, temp);
            trace.record(last);
            if cache.energy() == 0 {
                break;
            }
        }
    }
    Ok(finish(formula, cache.into_state(), iteration, trace, last, accepts, rejects))
}

pub fn run_hill_climb(formula: &CnfFormula, config: &BaselineConfig) -> Result<RunResult, EdaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial = Assignment::random(formula.num_vars(), &mut rng);
    hill_climb(formula, initial, config, &mut rng)
}

/// Hill climbing from a given start; restarts still draw from `config.seed`.
pub fn run_hill_climb_from(
    formula: &CnfFormula,
    initial: Assignment,
    config: &BaselineConfig,
) -> Result<RunResult, EdaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    hill_climb(formula, initial, config, &mut rng)
}

/// Takes the best strictly improving flip (ties to the smallest index) until
/// none exists, then restarts from a fresh random state, at most
/// `config.restarts` times. Iterations count moves; `accept_count` is the
/// number of moves and `reject_count` the number of local minima reached.
/// A failed run reports the lowest energy seen in any segment.
fn hill_climb(
    formula: &CnfFormula,
    initial: Assignment,
    config: &BaselineConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RunResult, EdaError> {
    config.validate()?;
    let n = formula.num_vars();
    let index = OccurrenceIndex::new(formula);
    let mut cache = FlipCache::new(formula, &index, initial)?;
    let mut trace = TraceRecorder::new(config.trace_interval, trace_point(&cache, 0, 0.0));
    let mut moves = 0u64;
    let mut minima = 0u64;
    let mut restarts_left = config.restarts;

    while cache.energy() != 0 && moves < config.max_iterations {
        let best = (1..=n)
            .map(|v| (cache.flip_delta(v), v))
            .filter(|&(delta, _)| delta < 0)
            .min();
        match best {
            Some((_, var)) => {
                cache.flip(var);
                moves += 1;
                trace.record(trace_point(&cache, moves, 0.0));
            }
            None => {
                minima += 1;
                if restarts_left == 0 {
                    break;
                }
                restarts_left -= 1;
                cache = FlipCache::new(formula, &index, Assignment::random(n, rng))?;
                // a restart may land on a new best without moving
                if cache.energy() < trace.best() {
                    trace.record(trace_point(&cache, moves, 0.0));
                }
            }
        }
    }
    let last = trace_point(&cache, moves, 0.0);
    Ok(finish(formula, cache.into_state(), moves, trace, last, moves, minima))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::generate_random_ksat;
    use crate::landscape::{energy, is_solution};
    use proptest::prelude::*;

    #[test]
    fn sa_solves_unit_clause() {
        let f = CnfFormula::from_ints(1, &[&[1]]);
        for seed in 0..10 {
            let r = run_sa(&f, &BaselineConfig::default().with_max_iterations(100).with_seed(seed)).unwrap();
            assert!(r.solved);
        }
    }

    #[test]
    fn sa_always_accepts_non_worsening_moves() {
        let f = generate_random_ksat(15, 60, 3, 2).unwrap();
        let config = BaselineConfig::default().with_max_iterations(3000);
        run_sa_observed(&f, &config, |e| {
            if e.energy_candidate <= e.energy_current {
                assert!(e.accepted);
            }
        })
        .unwrap();
    }

    #[test]
    fn hill_climb_descends_to_solution() {
        let f = CnfFormula::from_ints(2, &[&[1], &[2]]);
        let r = run_hill_climb_from(&f, Assignment::all_false(2), &BaselineConfig::default()).unwrap();
        assert!(r.solved);
        assert!(r.iterations_used <= 2);
        assert_eq!(r.witness, Some(Assignment::new(vec![true, true])));
    }

    #[test]
    fn hill_climb_reports_unsat_best() {
        let f = CnfFormula::from_ints(1, &[&[1], &[-1]]);
        let r = run_hill_climb(&f, &BaselineConfig { restarts: 3, ..BaselineConfig::default() }).unwrap();
        assert!(!r.solved);
        assert_eq!(r.best_energy, 1);
        assert_eq!(r.reject_count, 4);
    }

    #[test]
    fn hill_climb_respects_iteration_budget() {
        let f = generate_random_ksat(40, 200, 3, 8).unwrap();
        let config = BaselineConfig { restarts: 10_000, ..BaselineConfig::default().with_max_iterations(50) };
        let r = run_hill_climb(&f, &config).unwrap();
        assert!(r.iterations_used <= 50);
    }

    proptest! {
        #[test]
        fn hill_climb_segments_never_go_uphill(seed: u64, n in 3usize..14) {
            let f = generate_random_ksat(n, 4 * n, 3, seed).unwrap();
            let config = BaselineConfig { restarts: 0, seed, ..BaselineConfig::default() };
            let r = run_hill_climb(&f, &config).unwrap();
            // one segment: every recorded point is strictly below the previous
            for w in r.energy_trace.windows(2) {
                prop_assert!(w[1].energy <= w[0].energy);
            }
            prop_assert!(r.reject_count <= 1);
        }

        #[test]
        fn baselines_are_sound_and_deterministic(seed: u64, n in 3usize..16) {
            let f = generate_random_ksat(n, (4.2 * n as f64) as usize, 3, seed).unwrap();
            let config = BaselineConfig { restarts: 5, ..BaselineConfig::default().with_max_iterations(3000).with_seed(seed) };
            for run in [run_sa, run_hill_climb] {
                let a = run(&f, &config).unwrap();
                let b = run(&f, &config).unwrap();
                prop_assert_eq!(&a, &b);
                if a.solved {
                    prop_assert!(is_solution(&f, a.witness.as_ref().unwrap()).unwrap());
                } else {
                    prop_assert!(a.best_energy >= 1);
                }
                prop_assert!(a.iterations_used <= config.max_iterations);
            }
        }
    }

    #[test]
    fn hill_climb_energy_non_increasing_within_segments() {
        let f = generate_random_ksat(12, 55, 3, 17).unwrap();
        let index = OccurrenceIndex::new(&f);
        let start = Assignment::from_mask(12, 0xABC);
        let mut cache = FlipCache::new(&f, &index, start.clone()).unwrap();
        let r = run_hill_climb_from(&f, start, &BaselineConfig { restarts: 0, ..BaselineConfig::default() }).unwrap();
        // replay the deterministic descent and check each step
        let mut e = cache.energy();
        loop {
            let best = (1..=12).map(|v| (cache.flip_delta(v), v)).filter(|d| d.0 < 0).min();
            match best {
                Some((_, v)) => {
                    cache.flip(v);
                    assert!(cache.energy() < e);
                    e = cache.energy();
                }
                None => break,
            }
        }
        assert_eq!(r.best_energy, energy(&f, cache.state()).unwrap());
    }
}
