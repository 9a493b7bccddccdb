//! Entropy-driven annealing.
//!
//! Each iteration proposes a single flip. While the current state's entropy
//! is at or above a decaying threshold the flip is a uniformly random
//! non-tabu variable (explore); below it the flip is the non-tabu variable
//! with the largest energy decrease (exploit). The candidate is accepted by
//! the Metropolis rule applied to the free energy `F = E - T * w * H`.

use std::collections::VecDeque;
use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::CnfFormula;
use crate::landscape::{
    is_solution, Assignment, EntropyEstimator, FlipCache, Landscape, LandscapeError,
    OccurrenceIndex,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{name} = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("schedule horizon {horizon} is shorter than max_iterations {max_iterations}")]
    ScheduleHorizon { horizon: u64, max_iterations: u64 },
}

fn check(name: &'static str, value: f64, ok: bool, expected: &'static str) -> Result<(), ConfigError> {
    if ok && !value.is_nan() {
        Ok(())
    } else {
        Err(ConfigError::OutOfRange { name, value, expected })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EdaError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
    #[error("formula has no variables to flip")]
    NoVariables,
}

/// Cooling schedule. Temperatures are floored at `f64::MIN_POSITIVE` so they
/// stay strictly positive when the closed form underflows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemperatureSchedule {
    /// `t_start * (t_final / t_start)^(i / max_iterations)`; held at `t_final` past the horizon.
    EndpointExponential {
        t_start: f64,
        t_final: f64,
        max_iterations: u64,
    },
    /// `t_start * exp(-i / tau)`.
    PureExponential { t_start: f64, tau: f64 },
    /// `t_start * gamma^i`, evaluated as repeated multiplication.
    Geometric { t_start: f64, gamma: f64 },
}

impl TemperatureSchedule {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match *self {
            TemperatureSchedule::EndpointExponential { t_start, t_final, max_iterations } => {
                check("t_start", t_start, t_start > 0.0 && t_start.is_finite(), "> 0")?;
                check("t_final", t_final, t_final > 0.0 && t_final <= t_start, "0 < t_final <= t_start")?;
                check("max_iterations", max_iterations as f64, max_iterations > 0, ">= 1")
            }
            TemperatureSchedule::PureExponential { t_start, tau } => {
                check("t_start", t_start, t_start > 0.0 && t_start.is_finite(), "> 0")?;
                check("tau", tau, tau > 0.0, "> 0")
            }
            TemperatureSchedule::Geometric { t_start, gamma } => {
                check("t_start", t_start, t_start > 0.0 && t_start.is_finite(), "> 0")?;
                check("gamma", gamma, gamma > 0.0 && gamma < 1.0, "0 < gamma < 1")
            }
        }
    }

    pub fn t_start(&self) -> f64 {
        match *self {
            TemperatureSchedule::EndpointExponential { t_start, .. }
            | TemperatureSchedule::PureExponential { t_start, .. }
            | TemperatureSchedule::Geometric { t_start, .. } => t_start,
        }
    }

    /// Temperature at iteration `i`. Geometric schedules cost `O(i)` here;
    /// use [`TemperatureSchedule::temperatures`] to walk a run.
    pub fn temperature_at(&self, i: u64) -> f64 {
        match *self {
            TemperatureSchedule::Geometric { t_start, gamma } => {
                let mut t = t_start;
                for _ in 0..i {
                    t = (t * gamma).max(f64::MIN_POSITIVE);
                }
                t
            }
            _ => self.closed_form(i),
        }
    }

    fn closed_form(&self, i: u64) -> f64 {
        let t = match *self {
            TemperatureSchedule::EndpointExponential { t_start, t_final, max_iterations } => {
                let i = i.min(max_iterations);
                t_start * (t_final / t_start).powf(i as f64 / max_iterations as f64)
            }
            TemperatureSchedule::PureExponential { t_start, tau } => {
                t_start * (-(i as f64) / tau).exp()
            }
            TemperatureSchedule::Geometric { t_start, gamma } => t_start * gamma.powf(i as f64),
        };
        t.max(f64::MIN_POSITIVE)
    }

    /// Temperatures for iterations `0, 1, 2, ...`.
    pub fn temperatures(&self) -> Temperatures {
        Temperatures { schedule: *self, next_index: 0, last: self.t_start() }
    }
}

/// Iterator over successive temperatures; agrees exactly with `temperature_at`.
#[derive(Debug, Clone)]
pub struct Temperatures {
    schedule: TemperatureSchedule,
    next_index: u64,
    last: f64,
}

impl Iterator for Temperatures {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let i = self.next_index;
        let t = match self.schedule {
            TemperatureSchedule::Geometric { t_start, gamma } => {
                if i == 0 {
                    t_start
                } else {
                    (self.last * gamma).max(f64::MIN_POSITIVE)
                }
            }
            _ => self.schedule.closed_form(i),
        };
        self.next_index += 1;
        self.last = t;
        Some(t)
    }
}

/// `E - T * w * H`.
#[inline]
pub fn free_energy(energy: f64, entropy: f64, temp: f64, entropy_weight: f64) -> f64 {
    energy - temp * entropy_weight * entropy
}

/// Metropolis probability `min(1, exp(-(F_new - F_current) / (k T)))`.
pub fn acceptance_probability(f_current: f64, f_new: f64, temp: f64, boltzmann_k: f64) -> f64 {
    let delta = f_new - f_current;
    if delta <= 0.0 {
        return 1.0;
    }
    let p = (-delta / (boltzmann_k * temp)).exp();
    if p.is_nan() {
        0.0
    } else {
        p.min(1.0)
    }
}

/// Bounded FIFO of recently flipped variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabuList {
    entries: VecDeque<usize>,
    capacity: usize,
}

impl TabuList {
    pub fn new(capacity: usize) -> Self {
        TabuList { entries: VecDeque::with_capacity(capacity), capacity }
    }

    /// Pushes `var`, evicting the oldest entry at capacity. No-op when the capacity is 0.
    pub fn push(&mut self, var: usize) {
        if self.capacity == 0 {
            return;
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(var);
    }

    pub fn contains(&self, var: usize) -> bool {
        self.entries.contains(&var)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdaConfig {
    pub schedule: TemperatureSchedule,
    pub max_iterations: u64,
    pub tabu_capacity: usize,
    pub estimator: EntropyEstimator,
    /// Initial explore threshold, in nats.
    pub theta0: f64,
    /// Per-iteration multiplier of the explore threshold.
    pub theta_decay: f64,
    /// Weight `w` of the entropy term in `F = E - T * w * H`.
    pub entropy_weight: f64,
    pub boltzmann_k: f64,
    pub seed: u64,
    /// Trace sampling period; improvements of the best energy are always recorded.
    pub trace_interval: u64,
}

pub const DEFAULT_MAX_ITERATIONS: u64 = 100_000;

impl Default for EdaConfig {
    fn default() -> Self {
        EdaConfig {
            schedule: TemperatureSchedule::EndpointExponential {
                t_start: 2.0,
                t_final: 0.05,
                max_iterations: DEFAULT_MAX_ITERATIONS,
            },
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tabu_capacity: 5,
            estimator: EntropyEstimator::ClauseSatisfaction,
            theta0: 0.4,
            theta_decay: 0.9999,
            entropy_weight: 1.0,
            boltzmann_k: 1.0,
            seed: 0,
            trace_interval: 100,
        }
    }
}

impl EdaConfig {
    /// Sets the iteration budget, stretching an endpoint schedule to match.
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

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.schedule.validate()?;
        validate_budget(&self.schedule, self.max_iterations)?;
        check("theta0", self.theta0, (0.0..=LN_2).contains(&self.theta0), "0 <= theta0 <= ln 2")?;
        check(
            "theta_decay",
            self.theta_decay,
            self.theta_decay > 0.0 && self.theta_decay <= 1.0,
            "0 < theta_decay <= 1",
        )?;
        check(
            "entropy_weight",
            self.entropy_weight,
            self.entropy_weight >= 0.0 && self.entropy_weight.is_finite(),
            ">= 0",
        )?;
        check(
            "boltzmann_k",
            self.boltzmann_k,
            self.boltzmann_k > 0.0 && self.boltzmann_k.is_finite(),
            "> 0",
        )?;
        check("trace_interval", self.trace_interval as f64, self.trace_interval > 0, ">= 1")
    }

    /// Explore threshold at iteration `i`.
    pub fn theta_at(&self, i: u64) -> f64 {
        self.theta0 * self.theta_decay.powf(i as f64)
    }
}

pub(crate) fn validate_budget(
    schedule: &TemperatureSchedule,
    max_iterations: u64,
) -> Result<(), ConfigError> {
    check("max_iterations", max_iterations as f64, max_iterations > 0, ">= 1")?;
    if let TemperatureSchedule::EndpointExponential { max_iterations: horizon, .. } = *schedule {
        if horizon < max_iterations {
            return Err(ConfigError::ScheduleHorizon { horizon, max_iterations });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: u64,
    pub energy: usize,
    pub entropy: f64,
    pub temperature: f64,
}

/// Outcome of a single solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub solved: bool,
    pub witness: Option<Assignment>,
    pub iterations_used: u64,
    pub best_energy: usize,
    pub energy_trace: Vec<TracePoint>,
    pub accept_count: u64,
    pub reject_count: u64,
}

/// One iteration of an annealing run, reported to observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEvent {
    pub iteration: u64,
    pub temperature: f64,
    pub var: usize,
    pub explored: bool,
    pub energy_current: usize,
    pub energy_candidate: usize,
    pub accepted: bool,
}

/// A proposed single-variable flip.
#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    pub candidate: Assignment,
    pub var: usize,
    pub explored: bool,
}

/// Downsampled trace: every `interval` iterations, every new best energy,
/// and the final iteration.
pub(crate) struct TraceRecorder {
    interval: u64,
    points: Vec<TracePoint>,
    best: usize,
}

impl TraceRecorder {
    pub(crate) fn new(interval: u64, initial: TracePoint) -> Self {
        TraceRecorder { interval, best: initial.energy, points: vec![initial] }
    }

    pub(crate) fn best(&self) -> usize {
        self.best
    }

    pub(crate) fn record(&mut self, point: TracePoint) {
        let improved = point.energy < self.best;
        self.best = self.best.min(point.energy);
        if improved || point.iteration.is_multiple_of(self.interval) {
            self.points.push(point);
        }
    }

    pub(crate) fn finish(mut self, last: TracePoint) -> (usize, Vec<TracePoint>) {
        if self.points.last().map(|p| p.iteration) != Some(last.iteration) {
            self.points.push(last);
        }
        (self.best, self.points)
    }
}

fn non_tabu(n: usize, tabu: &TabuList) -> Vec<usize> {
    let free: Vec<usize> = (1..=n).filter(|&v| !tabu.contains(v)).collect();
    if free.is_empty() {
        // aspiration: every variable is tabu, so the constraint is waived
        (1..=n).collect()
    } else {
        free
    }
}

/// Picks the variable to flip. Returns `(var, explored)`.
pub(crate) fn propose<R: Rng + ?Sized>(
    cache: &FlipCache<'_>,
    tabu: &TabuList,
    iteration: u64,
    config: &EdaConfig,
    rng: &mut R,
) -> (usize, bool) {
    let candidates = non_tabu(cache.num_vars(), tabu);
    let local_entropy = cache.entropy(config.estimator);
    if local_entropy >= config.theta_at(iteration) {
        let var = candidates[rng.gen_range(0..candidates.len())];
        (var, true)
    } else {
        // min_by_key keeps the first minimum, so ties go to the smallest index
        let var = *candidates
            .iter()
            .min_by_key(|&&v| cache.flip_delta(v))
            .unwrap();
        (var, false)
    }
}

/// Proposes the next candidate state for `state` at `iteration`.
pub fn generate_new_state<R: Rng + ?Sized>(
    formula: &CnfFormula,
    state: &Assignment,
    tabu: &TabuList,
    iteration: u64,
    config: &EdaConfig,
    rng: &mut R,
) -> Result<Move, EdaError> {
    if formula.num_vars() == 0 {
        return Err(EdaError::NoVariables);
    }
    let index = OccurrenceIndex::new(formula);
    let cache = FlipCache::new(formula, &index, state.clone())?;
    let (var, explored) = propose(&cache, tabu, iteration, config, rng);
    let mut candidate = state.clone();
    candidate.toggle(var);
    Ok(Move { candidate, var, explored })
}

/// Draws `u ~ U[0, 1)` and accepts when `u` is below the free-energy
/// Metropolis probability. Always consumes exactly one draw.
#[allow(clippy::too_many_arguments)]
pub fn accept<R: Rng + ?Sized>(
    energy_current: f64,
    energy_new: f64,
    entropy_current: f64,
    entropy_new: f64,
    temp: f64,
    config: &EdaConfig,
    rng: &mut R,
) -> bool {
    let f_cur = free_energy(energy_current, entropy_current, temp, config.entropy_weight);
    let f_new = free_energy(energy_new, entropy_new, temp, config.entropy_weight);
    let p = acceptance_probability(f_cur, f_new, temp, config.boltzmann_k);
    rng.gen::<f64>() < p
}

pub fn run_eda(formula: &CnfFormula, config: &EdaConfig) -> Result<RunResult, EdaError> {
    run_eda_observed(formula, config, |_| {})
}

/// [`run_eda`] with a callback invoked after every iteration.
pub fn run_eda_observed<F: FnMut(&StepEvent)>(
    formula: &CnfFormula,
    config: &EdaConfig,
    mut observer: F,
) -> Result<RunResult, EdaError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = formula.num_vars();
    let index = OccurrenceIndex::new(formula);
    let mut cache = FlipCache::new(formula, &index, Assignment::random(n, &mut rng))?;
    let mut tabu = TabuList::new(config.tabu_capacity);
    let mut temps = config.schedule.temperatures();
    let t0 = temps.next().unwrap();

    let point = |cache: &FlipCache<'_>, iteration, temperature| TracePoint {
        iteration,
        energy: cache.energy(),
        entropy: cache.entropy(config.estimator),
        temperature,
    };
    let mut trace = TraceRecorder::new(config.trace_interval, point(&cache, 0, t0));
    let (mut accepts, mut rejects) = (0u64, 0u64);
    let mut last = point(&cache, 0, t0);

    let mut iteration = 0;
    if cache.energy() != 0 && n > 0 {
        for i in 1..=config.max_iterations {
            iteration = i;
            let temp = temps.next().unwrap();
            let (var, explored) = propose(&cache, &tabu, i, config, &mut rng);
            let energy_current = cache.energy();
            let energy_new = (energy_current as i64 + cache.flip_delta(var)) as usize;
            let entropy_current = cache.entropy(config.estimator);
            let entropy_new = cache.entropy_after_flip(var, config.estimator);
            let accepted = accept(
                energy_current as f64,
                energy_new as f64,
                entropy_current,
                entropy_new,
                temp,
                config,
                &mut rng,
            );
            if accepted {
                cache.flip(var);
                tabu.push(var);
                accepts += 1;
            } else {
                rejects += 1;
            }
            observer(&StepEvent {
                iteration: i,
                temperature: temp,
                var,
                explored,
                energy_current,
                energy_candidate: energy_new,
                accepted,
            });
            last = point(&cache, i, temp);
            trace.record(last);
            if cache.energy() == 0 {
                break;
            }
        }
    }
    Ok(finish(formula, cache.into_state(), iteration, trace, last, accepts, rejects))
}

pub(crate) fn finish(
    formula: &CnfFormula,
    state: Assignment,
    iterations_used: u64,
    trace: TraceRecorder,
    last: TracePoint,
    accept_count: u64,
    reject_count: u64,
) -> RunResult {
    // the cache is never trusted for the verdict
    let solved = is_solution(formula, &state).expect("state length matches formula");
    assert_eq!(solved, last.energy == 0, "incremental energy diverged from definition");
    let (best_energy, energy_trace) = trace.finish(last);
    RunResult {
        solved,
        witness: solved.then_some(state),
        iterations_used,
        best_energy,
        energy_trace,
        accept_count,
        reject_count,
    }
}

/// Settings for [`anneal_landscape`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSettings {
    pub schedule: TemperatureSchedule,
    pub max_iterations: u64,
    pub entropy_weight: f64,
    pub boltzmann_k: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealOutcome<S> {
    pub state: S,
    pub solved: bool,
    pub iterations_used: u64,
    pub best_energy: f64,
    pub best_state: S,
}

/// Free-energy annealing over any [`Landscape`]: propose a uniformly random
/// neighbour, accept by Metropolis on `E - T * w * H`, stop at a solution.
pub fn anneal_landscape<L: Landscape>(
    landscape: &L,
    initial: L::State,
    settings: &AnnealSettings,
) -> Result<AnnealOutcome<L::State>, ConfigError> {
    settings.schedule.validate()?;
    validate_budget(&settings.schedule, settings.max_iterations)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut state = initial;
    let mut energy = landscape.energy(&state);
    let mut entropy = landscape.entropy(&state);
    let mut best = (energy, state.clone());
    let mut temps = settings.schedule.temperatures().skip(1);
    let mut iterations_used = 0;

    while !landscape.is_solution(&state) && iterations_used < settings.max_iterations {
        iterations_used += 1;
        let temp = temps.next().unwrap();
        let mut neighbors = landscape.neighbors(&state);
        if neighbors.is_empty() {
            break;
        }
        let next = neighbors.swap_remove(rng.gen_range(0..neighbors.len()));
        let next_energy = landscape.energy(&next);
        let next_entropy = landscape.entropy(&next);
        let p = acceptance_probability(
            free_energy(energy, entropy, temp, settings.entropy_weight),
            free_energy(next_energy, next_entropy, temp, settings.entropy_weight),
            temp,
            settings.boltzmann_k,
        );
        if rng.gen::<f64>() < p {
            state = next;
            energy = next_energy;
            entropy = next_entropy;
            if energy < best.0 {
                best = (energy, state.clone());
            }
        }
    }
    Ok(AnnealOutcome {
        solved: landscape.is_solution(&state),
        state,
        iterations_used,
        best_energy: best.0,
        best_state: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::generate_random_ksat;
    use crate::landscape::energy;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn pure_exponential_values() {
        let s = TemperatureSchedule::PureExponential { t_start: 2.0, tau: 100.0 };
        assert_eq!(s.temperature_at(0), 2.0);
        assert!((s.temperature_at(100) - 2.0 / E).abs() < 1e-12);
    }

    #[test]
    fn endpoint_exponential_midpoint_is_geometric_mean() {
        let s = TemperatureSchedule::EndpointExponential {
            t_start: 10.0,
            t_final: 0.1,
            max_iterations: 1000,
        };
        assert!((s.temperature_at(500) - 1.0).abs() < 1e-12);
        assert_eq!(s.temperature_at(0), 10.0);
        assert!((s.temperature_at(1000) / 0.1 - 1.0).abs() < 1e-9);
        assert_eq!(s.temperature_at(5000), s.temperature_at(1000));
    }

    #[test]
    fn geometric_is_repeated_multiplication() {
        let s = TemperatureSchedule::Geometric { t_start: 3.0, gamma: 0.95 };
        let seq: Vec<f64> = s.temperatures().take(200).collect();
        for i in 0..199 {
            assert_eq!(seq[i + 1], 0.95 * seq[i]);
            assert_eq!(seq[i], s.temperature_at(i as u64));
        }
    }

    #[test]
    fn temperatures_stay_positive_after_underflow() {
        let s = TemperatureSchedule::Geometric { t_start: 1.0, gamma: 0.5 };
        assert!(s.temperatures().take(3000).all(|t| t > 0.0));
        let p = TemperatureSchedule::PureExponential { t_start: 1.0, tau: 1.0 };
        assert!(p.temperature_at(10_000) > 0.0);
    }

    #[test]
    fn schedule_validation() {
        let bad = [
            TemperatureSchedule::Geometric { t_start: 1.0, gamma: 1.0 },
            TemperatureSchedule::Geometric { t_start: 0.0, gamma: 0.5 },
            TemperatureSchedule::PureExponential { t_start: 1.0, tau: 0.0 },
            TemperatureSchedule::EndpointExponential { t_start: 1.0, t_final: 2.0, max_iterations: 5 },
            TemperatureSchedule::EndpointExponential { t_start: 1.0, t_final: 0.5, max_iterations: 0 },
            TemperatureSchedule::PureExponential { t_start: f64::NAN, tau: 1.0 },
        ];
        for s in bad {
            assert!(s.validate().is_err(), "{s:?}");
        }
    }

    #[test]
    fn free_energy_examples() {
        assert_eq!(free_energy(5.0, 0.6, 3.0, 0.0), 5.0);
        assert_eq!(free_energy(5.0, LN_2, 2.0, 1.0), 5.0 - 2.0 * LN_2);
        assert!((free_energy(5.0, LN_2, 1e-12, 1.0) - 5.0).abs() < 1e-11);
    }

    #[test]
    fn acceptance_probability_examples() {
        assert_eq!(acceptance_probability(2.0, 2.0, 1.0, 1.0), 1.0);
        assert!((acceptance_probability(0.0, 1.0, 1.0, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(acceptance_probability(3.0, 0.0, 1e-9, 1.0), 1.0);
        assert_eq!(acceptance_probability(0.0, 1e300, 1e-300, 1.0), 0.0);
        assert_eq!(acceptance_probability(0.0, f64::INFINITY, 1.0, 1.0), 0.0);
    }

    #[test]
    fn tabu_list_is_bounded_fifo() {
        let mut t = TabuList::new(2);
        t.push(1);
        t.push(2);
        t.push(3);
        assert_eq!(t.len(), 2);
        assert!(!t.contains(1));
        assert!(t.contains(2) && t.contains(3));
        let mut z = TabuList::new(0);
        z.push(1);
        assert!(z.is_empty());
    }

    fn exploit_config() -> EdaConfig {
        // theta above any entropy: always exploit
        EdaConfig { theta0: LN_2, theta_decay: 1.0, ..EdaConfig::default() }
    }

    #[test]
    fn single_variable_exploit_flips_it() {
        let f = CnfFormula::from_ints(1, &[&[1]]);
        let s = Assignment::all_false(1);
        let mv = generate_new_state(&f, &s, &TabuList::new(3), 1, &exploit_config(), &mut rng(0)).unwrap();
        assert_eq!(mv.var, 1);
        assert!(!mv.explored);
        assert_eq!(mv.candidate, Assignment::new(vec![true]));
    }

    #[test]
    fn aspiration_when_everything_is_tabu() {
        let f = CnfFormula::from_ints(2, &[&[1, 2]]);
        let s = Assignment::all_false(2);
        let mut tabu = TabuList::new(2);
        tabu.push(1);
        tabu.push(2);
        for config in [exploit_config(), EdaConfig { theta0: 0.0, ..EdaConfig::default() }] {
            let mv = generate_new_state(&f, &s, &tabu, 1, &config, &mut rng(1)).unwrap();
            assert_eq!(s.hamming(&mv.candidate), 1);
        }
    }

    #[test]
    fn exploit_tie_breaks_to_smallest_index() {
        let f = CnfFormula::from_ints(2, &[&[1], &[2]]);
        let s = Assignment::all_false(2);
        // both flips lower the energy by exactly one
        for v in 1..=2 {
            let t = crate::landscape::flip(&s, v).unwrap();
            assert_eq!(energy(&f, &t).unwrap() + 1, energy(&f, &s).unwrap());
        }
        let mv = generate_new_state(&f, &s, &TabuList::new(1), 1, &exploit_config(), &mut rng(2)).unwrap();
        assert_eq!(mv.var, 1);
        let mut tabu = TabuList::new(1);
        tabu.push(1);
        let mv = generate_new_state(&f, &s, &tabu, 1, &exploit_config(), &mut rng(2)).unwrap();
        assert_eq!(mv.var, 2);
    }

    #[test]
    fn explore_avoids_tabu_variables() {
        let f = generate_random_ksat(6, 10, 3, 5).unwrap();
        let s = Assignment::all_false(6);
        let mut tabu = TabuList::new(3);
        for v in [2, 4, 6] {
            tabu.push(v);
        }
        let config = EdaConfig { theta0: 0.0, ..EdaConfig::default() };
        let mut r = rng(9);
        for _ in 0..200 {
            let mv = generate_new_state(&f, &s, &tabu, 1, &config, &mut r).unwrap();
            assert!(mv.explored);
            assert!([1, 3, 5].contains(&mv.var));
        }
    }

    #[test]
    fn no_variables_is_an_error() {
        let f = CnfFormula::from_ints(0, &[&[]]);
        let r = generate_new_state(&f, &Assignment::all_false(0), &TabuList::new(1), 1, &EdaConfig::default(), &mut rng(0));
        assert_eq!(r, Err(EdaError::NoVariables));
    }

    #[test]
    fn improvements_and_ties_always_accepted() {
        let config = EdaConfig { entropy_weight: 0.0, ..EdaConfig::default() };
        let mut r = rng(3);
        for _ in 0..10_000 {
            assert!(accept(3.0, 2.0, 0.1, 0.5, 0.01, &config, &mut r));
            assert!(accept(3.0, 3.0, 0.4, 0.4, 0.01, &config, &mut r));
        }
    }

    #[test]
    fn metropolis_frequency_at_unit_delta() {
        let config = EdaConfig { entropy_weight: 0.0, ..EdaConfig::default() };
        let mut r = rng(11);
        let hits = (0..100_000)
            .filter(|_| accept(0.0, 1.0, 0.0, 0.0, 1.0, &config, &mut r))
            .count();
        let rate = hits as f64 / 100_000.0;
        assert!((0.358..=0.378).contains(&rate), "rate {rate}");
    }

    #[test]
    fn unit_clause_is_solved() {
        let f = CnfFormula::from_ints(1, &[&[1]]);
        for seed in 0..20 {
            let r = run_eda(&f, &EdaConfig::default().with_max_iterations(2).with_seed(seed)).unwrap();
            assert!(r.solved);
            assert_eq!(r.witness, Some(Assignment::new(vec![true])));
        }
    }

    #[test]
    fn contradiction_exhausts_budget() {
        let f = CnfFormula::from_ints(1, &[&[1], &[-1]]);
        let r = run_eda(&f, &EdaConfig::default().with_max_iterations(500)).unwrap();
        assert!(!r.solved);
        assert_eq!(r.best_energy, 1);
        assert_eq!(r.iterations_used, 500);
        assert!(r.witness.is_none());
        assert_eq!(r.accept_count + r.reject_count, 500);
    }

    #[test]
    fn clause_free_formula_solved_without_moves() {
        let f = CnfFormula::from_ints(4, &[]);
        let r = run_eda(&f, &EdaConfig::default()).unwrap();
        assert!(r.solved);
        assert_eq!(r.iterations_used, 0);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let f = CnfFormula::from_ints(1, &[&[1]]);
        let bad = [
            EdaConfig { theta0: 1.0, ..EdaConfig::default() },
            EdaConfig { theta_decay: 0.0, ..EdaConfig::default() },
            EdaConfig { entropy_weight: -1.0, ..EdaConfig::default() },
            EdaConfig { boltzmann_k: 0.0, ..EdaConfig::default() },
            EdaConfig { max_iterations: 0, ..EdaConfig::default() },
            EdaConfig::default().with_max_iterations(10).tap_horizon(5),
        ];
        for c in bad {
            assert!(matches!(run_eda(&f, &c), Err(EdaError::Config(_))), "{c:?}");
        }
    }

    impl EdaConfig {
        fn tap_horizon(mut self, horizon: u64) -> Self {
            if let TemperatureSchedule::EndpointExponential { max_iterations: ref mut h, .. } = self.schedule {
                *h = horizon;
            }
            self
        }
    }

    #[test]
    fn tabu_frees_first_variable_after_capacity_plus_one_moves() {
        let mut t = TabuList::new(3);
        for v in 1..=4 {
            t.push(v);
        }
        assert!(!t.contains(1));
        assert!(t.len() <= t.capacity());
    }

    #[test]
    fn trace_is_bounded_and_ordered() {
        let f = generate_random_ksat(30, 140, 3, 1).unwrap();
        let r = run_eda(&f, &EdaConfig::default().with_max_iterations(5000)).unwrap();
        assert!(r.energy_trace.windows(2).all(|w| w[0].iteration < w[1].iteration));
        assert_eq!(r.energy_trace[0].iteration, 0);
        assert_eq!(r.energy_trace.last().unwrap().iteration, r.iterations_used);
        assert!(r.energy_trace.iter().all(|p| p.energy >= r.best_energy));
        assert!(r.energy_trace.iter().any(|p| p.energy == r.best_energy));
    }

    #[test]
    fn observer_sees_every_iteration() {
        let f = CnfFormula::from_ints(2, &[&[1], &[-1], &[2]]);
        let mut seen = 0;
        let r = run_eda_observed(&f, &EdaConfig::default().with_max_iterations(300), |e| {
            seen += 1;
            assert_eq!(e.iteration, seen);
        })
        .unwrap();
        assert_eq!(seen, r.iterations_used);
        assert_eq!(seen, 300);
    }

    // Toy non-SAT landscape: integers in [-50, 50], energy |x - 17|.
    struct Line;

    impl Landscape for Line {
        type State = i64;
        fn energy(&self, s: &i64) -> f64 {
            (s - 17).abs() as f64
        }
        fn entropy(&self, _: &i64) -> f64 {
            0.0
        }
        fn neighbors(&self, s: &i64) -> Vec<i64> {
            [s - 1, s + 1].into_iter().filter(|x| x.abs() <= 50).collect()
        }
        fn is_solution(&self, s: &i64) -> bool {
            *s == 17
        }
    }

    #[test]
    fn anneals_a_non_sat_landscape() {
        let settings = AnnealSettings {
            schedule: TemperatureSchedule::Geometric { t_start: 1.0, gamma: 0.999 },
            max_iterations: 50_000,
            entropy_weight: 1.0,
            boltzmann_k: 1.0,
            seed: 4,
        };
        let out = anneal_landscape(&Line, -40, &settings).unwrap();
        assert!(out.solved);
        assert_eq!(out.state, 17);
        assert_eq!(out.best_energy, 0.0);
    }

    proptest! {
        #[test]
        fn schedules_are_positive_and_non_increasing(
            t_start in 1e-3f64..100.0,
            ratio in 1e-4f64..1.0,
            tau in 0.5f64..1e4,
            gamma in 0.5f64..0.999_999,
            horizon in 1u64..5000,
        ) {
            let schedules = [
                TemperatureSchedule::EndpointExponential { t_start, t_final: t_start * ratio, max_iterations: horizon },
                TemperatureSchedule::PureExponential { t_start, tau },
                TemperatureSchedule::Geometric { t_start, gamma },
            ];
            for s in schedules {
                let temps: Vec<f64> = s.temperatures().take(horizon as usize + 1).collect();
                for w in temps.windows(2) {
                    prop_assert!(w[1] <= w[0] && w[1] > 0.0);
                }
            }
        }

        #[test]
        fn acceptance_is_monotone(d1 in -5.0f64..5.0, d2 in -5.0f64..5.0, t1 in 0.01f64..10.0, t2 in 0.01f64..10.0) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(acceptance_probability(0.0, lo, t1, 1.0) >= acceptance_probability(0.0, hi, t1, 1.0));
            let (tl, th) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            if d1 > 0.0 {
                prop_assert!(acceptance_probability(0.0, d1, tl, 1.0) <= acceptance_probability(0.0, d1, th, 1.0));
            } else {
                prop_assert_eq!(acceptance_probability(0.0, d1, tl, 1.0), 1.0);
            }
        }

        #[test]
        fn runs_are_sound_and_deterministic(seed: u64, n in 3usize..16, ratio in 1.0f64..5.0) {
            let f = generate_random_ksat(n, (n as f64 * ratio) as usize, 3, seed).unwrap();
            let config = EdaConfig::default().with_max_iterations(2000).with_seed(seed);
            let a = run_eda(&f, &config).unwrap();
            let b = run_eda(&f, &config).unwrap();
            prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
            prop_assert!(a.iterations_used <= config.max_iterations);
            if a.solved {
                prop_assert!(is_solution(&f, a.witness.as_ref().unwrap()).unwrap());
            }
        }
    }
}
