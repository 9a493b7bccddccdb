//! Exact landscape analysis for small instances by full enumeration of the
//! `2^n` assignments.
//!
//! States are bit masks: bit `i` holds variable `i + 1`. Each clause is
//! compiled to a pair of masks (positive and negative occurrences) so a
//! state's energy is two `and`s per clause.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::CnfFormula;
use crate::landscape::{Assignment, LandscapeError};

pub const DEFAULT_ENUMERATION_LIMIT: usize = 26;
/// Largest `n` for which per-state lists (solutions, probabilities) are built.
pub const MATERIALIZE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("{n} variables exceeds the enumeration limit of {limit}")]
    TooManyVariables { n: usize, limit: usize },
    #[error("temperature and Boltzmann constant must be positive (T = {temperature}, k = {k})")]
    InvalidTemperature { temperature: f64, k: f64 },
    #[error("{name} = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error(transparent)]
    Landscape(#[from] LandscapeError),
}

#[derive(Debug, Clone, Copy)]
struct MaskClause {
    pos: u32,
    neg: u32,
}

/// A formula compiled for enumeration, with its full energy table.
#[derive(Debug, Clone)]
pub struct Profiler {
    n: usize,
    m: usize,
    energies: Vec<u32>,
}

fn compile(formula: &CnfFormula) -> Vec<MaskClause> {
    formula
        .clauses()
        .iter()
        .map(|clause| {
            clause.iter().fold(MaskClause { pos: 0, neg: 0 }, |mut mc, lit| {
                let bit = 1u32 << (lit.var() - 1);
                if lit.is_positive() {
                    mc.pos |= bit;
                } else {
                    mc.neg |= bit;
                }
                mc
            })
        })
        .collect()
}

#[inline]
fn mask_energy(clauses: &[MaskClause], state: u32) -> u32 {
    clauses
        .iter()
        .filter(|c| state & c.pos == 0 && !state & c.neg == 0)
        .count() as u32
}

fn check_limit(formula: &CnfFormula, limit: usize) -> Result<(), ProfileError> {
    let n = formula.num_vars();
    // states are u32 masks
    let limit = limit.min(31);
    if n > limit {
        return Err(ProfileError::TooManyVariables { n, limit });
    }
    Ok(())
}

/// Lexicographic key (variable 1 most significant, false < true).
#[inline]
fn lex_key(mask: u32, n: usize) -> u32 {
    if n == 0 {
        0
    } else {
        mask.reverse_bits() >> (32 - n)
    }
}

impl Profiler {
    pub fn new(formula: &CnfFormula) -> Result<Self, ProfileError> {
        Self::with_limit(formula, DEFAULT_ENUMERATION_LIMIT)
    }

    /// Builds the energy table; `limit` may not exceed 31.
    pub fn with_limit(formula: &CnfFormula, limit: usize) -> Result<Self, ProfileError> {
        check_limit(formula, limit)?;
        let n = formula.num_vars();
        let clauses = compile(formula);
        let energies = (0..1u32 << n)
            .into_par_iter()
            .map(|s| mask_energy(&clauses, s))
            .collect();
        Ok(Profiler { n, m: formula.num_clauses(), energies })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn energies(&self) -> &[u32] {
        &self.energies
    }

    pub fn energy_of(&self, state: &Assignment) -> Result<u32, ProfileError> {
        Ok(self.energies[self.mask_of(state)? as usize])
    }

    fn mask_of(&self, state: &Assignment) -> Result<u32, ProfileError> {
        if state.len() != self.n {
            return Err(LandscapeError::LengthMismatch { expected: self.n, found: state.len() }.into());
        }
        Ok(state.to_mask() as u32)
    }

    /// Number of states at each energy `0..=m`.
    pub fn energy_histogram(&self) -> Vec<u64> {
        self.energies
            .par_iter()
            .fold(
                || vec![0u64; self.m + 1],
                |mut h, &e| {
                    h[e as usize] += 1;
                    h
                },
            )
            .reduce(
                || vec![0u64; self.m + 1],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    }

    pub fn solution_count(&self) -> u64 {
        self.energies.par_iter().filter(|&&e| e == 0).count() as u64
    }

    fn is_minimum(&self, s: u32) -> bool {
        let e = self.energies[s as usize];
        (0..self.n).all(|i| self.energies[(s ^ 1 << i) as usize] >= e)
    }

    fn is_strict_minimum(&self, s: u32) -> bool {
        let e = self.energies[s as usize];
        (0..self.n).all(|i| self.energies[(s ^ 1 << i) as usize] > e)
    }

    /// Masks of all 1-flip local minima (plateaus included), ordered by
    /// energy then lexicographically.
    fn minima_masks(&self) -> Vec<u32> {
        let mut minima: Vec<u32> = (0..1u32 << self.n)
            .into_par_iter()
            .filter(|&s| self.is_minimum(s))
            .collect();
        minima.sort_by_key(|&s| (self.energies[s as usize], lex_key(s, self.n)));
        minima
    }

    pub fn local_minima(&self) -> Vec<Minimum> {
        self.minima_masks()
            .into_iter()
            .map(|s| Minimum {
                assignment: Assignment::from_mask(self.n, s as u64),
                energy: self.energies[s as usize],
                strict: self.is_strict_minimum(s),
            })
            .collect()
    }

    /// Minimax peak energy for each `(a, b)` pair: the lowest level `L` such
    /// that `a` and `b` are connected through states of energy `<= L`.
    /// Sublevel sets are grown level by level with a union-find.
    fn minimax_peaks(&self, queries: &[(u32, u32)]) -> Vec<u32> {
        let size = 1usize << self.n;
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); self.m + 1];
        for (s, &e) in self.energies.iter().enumerate() {
            buckets[e as usize].push(s as u32);
        }
        let mut uf = UnionFind::new(size);
        let mut active = vec![false; size];
        let mut peaks: Vec<Option<u32>> = queries
            .iter()
            .map(|&(a, b)| (a == b).then(|| self.energies[a as usize]))
            .collect();
        let mut pending: Vec<usize> = (0..queries.len()).filter(|&q| peaks[q].is_none()).collect();

        for (level, bucket) in buckets.iter().enumerate() {
            if pending.is_empty() {
                break;
            }
            for &s in bucket {
                active[s as usize] = true;
                for i in 0..self.n {
                    let t = s ^ 1 << i;
                    if active[t as usize] {
                        uf.union(s, t);
                    }
                }
            }
            pending.retain(|&q| {
                let (a, b) = queries[q];
                if active[a as usize] && active[b as usize] && uf.find(a) == uf.find(b) {
                    peaks[q] = Some(level as u32);
                    false
                } else {
                    true
                }
            });
        }
        // the hypercube is connected, so every query resolves by level m
        peaks.into_iter().map(|p| p.expect("hypercube is connected")).collect()
    }

    pub fn barrier(&self, a: &Assignment, b: &Assignment) -> Result<Barrier, ProfileError> {
        let (ma, mb) = (self.mask_of(a)?, self.mask_of(b)?);
        let peak = self.minimax_peaks(&[(ma, mb)])[0];
        Ok(Barrier { height: peak - self.energies[ma as usize], peak })
    }

    /// Barriers along the canonical chain of minima and their sum.
    pub fn ruggedness(&self) -> Ruggedness {
        let minima = self.minima_masks();
        self.ruggedness_over(&minima)
    }

    fn ruggedness_over(&self, minima: &[u32]) -> Ruggedness {
        let queries: Vec<(u32, u32)> = minima.windows(2).map(|w| (w[0], w[1])).collect();
        let peaks = self.minimax_peaks(&queries);
        let barriers: Vec<ChainBarrier> = queries
            .iter()
            .zip(peaks)
            .enumerate()
            .map(|(i, (&(a, _), peak))| ChainBarrier {
                from: i,
                to: i + 1,
                height: peak - self.energies[a as usize],
                peak,
            })
            .collect();
        let lambda = barriers.iter().map(|b| b.height as f64).sum();
        Ruggedness { lambda, barriers }
    }

    /// Boltzmann weights per energy level at temperature `t`.
    pub fn boltzmann(&self, temperature: f64, k: f64) -> Result<BoltzmannLevels, ProfileError> {
        if !(temperature > 0.0 && k > 0.0 && temperature.is_finite() && k.is_finite()) {
            return Err(ProfileError::InvalidTemperature { temperature, k });
        }
        let histogram = self.energy_histogram();
        let ground = histogram.iter().position(|&c| c > 0).unwrap_or(0);
        let kt = k * temperature;
        // shift by the ground energy so the largest factor is exactly 1
        let factors: Vec<f64> = (0..histogram.len())
            .map(|e| if e < ground { 0.0 } else { (-((e - ground) as f64) / kt).exp() })
            .collect();
        let z: f64 = histogram.iter().zip(&factors).map(|(&c, &f)| c as f64 * f).sum();
        let state_probability = factors.iter().map(|f| f / z).collect();
        Ok(BoltzmannLevels {
            temperature,
            k,
            ground_energy: ground as u32,
            log_partition: z.ln() - ground as f64 / kt,
            histogram,
            state_probability,
        })
    }

    pub fn report(&self) -> LandscapeReport {
        let solution_count = self.solution_count();
        let minima_masks = self.minima_masks();
        let rug = self.ruggedness_over(&minima_masks);
        LandscapeReport {
            n: self.n,
            m: self.m,
            solution_count,
            unsatisfiable: solution_count == 0,
            h_prof: h_prof(solution_count),
            h_prof_bits: h_prof(solution_count) / LN_2,
            energy_histogram: self.energy_histogram(),
            minima_count: minima_masks.len(),
            minima: minima_masks
                .into_iter()
                .map(|s| Minimum {
                    assignment: Assignment::from_mask(self.n, s as u64),
                    energy: self.energies[s as usize],
                    strict: self.is_strict_minimum(s),
                })
                .collect(),
            barriers: rug.barriers,
            lambda_ruggedness: rug.lambda,
        }
    }
}

fn h_prof(solution_count: u64) -> f64 {
    if solution_count == 0 {
        0.0
    } else {
        (solution_count as f64).ln()
    }
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(size: usize) -> Self {
        UnionFind { parent: (0..size as u32).collect(), rank: vec![0; size] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (hi, lo) = if self.rank[ra as usize] >= self.rank[rb as usize] { (ra, rb) } else { (rb, ra) };
        self.parent[lo as usize] = hi;
        if self.rank[hi as usize] == self.rank[lo as usize] {
            self.rank[hi as usize] += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Minimum {
    pub assignment: Assignment,
    pub energy: u32,
    /// Every 1-flip neighbour is strictly higher.
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Barrier {
    /// Peak minus the start state's energy.
    pub height: u32,
    /// Minimax path energy; symmetric in the endpoints.
    pub peak: u32,
}

/// Barrier between consecutive minima `from` and `to` (indices into the minima list).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainBarrier {
    pub from: usize,
    pub to: usize,
    pub height: u32,
    pub peak: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ruggedness {
    pub lambda: f64,
    pub barriers: Vec<ChainBarrier>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoltzmannLevels {
    pub temperature: f64,
    pub k: f64,
    pub ground_energy: u32,
    /// `ln Z` with `Z = sum_s exp(-E(s) / kT)`.
    pub log_partition: f64,
    pub histogram: Vec<u64>,
    /// Probability of one state at each energy level.
    pub state_probability: Vec<f64>,
}

impl BoltzmannLevels {
    pub fn total_mass(&self) -> f64 {
        self.histogram
            .iter()
            .zip(&self.state_probability)
            .map(|(&c, &p)| c as f64 * p)
            .sum()
    }

    pub fn ground_mass(&self) -> f64 {
        let g = self.ground_energy as usize;
        self.histogram[g] as f64 * self.state_probability[g]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub count: u64,
    /// Present when `n <= MATERIALIZE_LIMIT`, in increasing mask order.
    pub solutions: Option<Vec<Assignment>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    /// `ln(solution count)`, or 0 when unsatisfiable.
    pub nats: f64,
    pub solution_count: u64,
    pub unsatisfiable: bool,
}

/// Everything the profiler knows about one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub n: usize,
    pub m: usize,
    pub solution_count: u64,
    pub unsatisfiable: bool,
    pub h_prof: f64,
    pub h_prof_bits: f64,
    pub energy_histogram: Vec<u64>,
    pub minima_count: usize,
    pub minima: Vec<Minimum>,
    pub barriers: Vec<ChainBarrier>,
    pub lambda_ruggedness: f64,
}

pub fn enumerate_solutions(formula: &CnfFormula) -> Result<SolutionSet, ProfileError> {
    enumerate_solutions_with_limit(formula, DEFAULT_ENUMERATION_LIMIT)
}

/// Exact count over all `2^n` states, streaming (no energy table).
pub fn enumerate_solutions_with_limit(
    formula: &CnfFormula,
    limit: usize,
) -> Result<SolutionSet, ProfileError> {
    check_limit(formula, limit)?;
    let n = formula.num_vars();
    let clauses = compile(formula);
    if n <= MATERIALIZE_LIMIT {
        let masks: Vec<u32> = (0..1u32 << n)
            .into_par_iter()
            .filter(|&s| mask_energy(&clauses, s) == 0)
            .collect();
        Ok(SolutionSet {
            count: masks.len() as u64,
            solutions: Some(masks.into_iter().map(|s| Assignment::from_mask(n, s as u64)).collect()),
        })
    } else {
        let count = (0..1u32 << n)
            .into_par_iter()
            .filter(|&s| clauses.iter().all(|c| s & c.pos != 0 || !s & c.neg != 0))
            .count() as u64;
        Ok(SolutionSet { count, solutions: None })
    }
}

/// `ln |S|` for the uniform distribution over satisfying assignments.
pub fn entropy_profile(formula: &CnfFormula) -> Result<EntropyProfile, ProfileError> {
    let count = enumerate_solutions(formula)?.count;
    Ok(EntropyProfile { nats: h_prof(count), solution_count: count, unsatisfiable: count == 0 })
}

/// Per-state Boltzmann probabilities `exp(-E(s) / kT) / Z`, indexed by mask.
pub fn boltzmann_distribution(
    formula: &CnfFormula,
    temperature: f64,
    k: f64,
) -> Result<Vec<f64>, ProfileError> {
    check_limit(formula, MATERIALIZE_LIMIT)?;
    let profiler = Profiler::new(formula)?;
    let levels = profiler.boltzmann(temperature, k)?;
    Ok(profiler
        .energies
        .iter()
        .map(|&e| levels.state_probability[e as usize])
        .collect())
}

pub fn count_local_minima(formula: &CnfFormula) -> Result<Vec<Minimum>, ProfileError> {
    Ok(Profiler::new(formula)?.local_minima())
}

pub fn barrier_height(
    formula: &CnfFormula,
    a: &Assignment,
    b: &Assignment,
) -> Result<Barrier, ProfileError> {
    Profiler::new(formula)?.barrier(a, b)
}

pub fn ruggedness(formula: &CnfFormula) -> Result<Ruggedness, ProfileError> {
    Ok(Profiler::new(formula)?.ruggedness())
}

pub fn profile(formula: &CnfFormula, limit: usize) -> Result<LandscapeReport, ProfileError> {
    Ok(Profiler::with_limit(formula, limit)?.report())
}

/// Smallest `k` with `d0 * alpha^k <= eps`.
pub fn convergence_bound(d0: f64, alpha: f64, eps: f64) -> Result<u64, ProfileError> {
    let range = |name, value: f64, ok: bool, expected| {
        if ok && value.is_finite() {
            Ok(())
        } else {
            Err(ProfileError::OutOfRange { name, value, expected })
        }
    };
    range("d0", d0, d0 > 0.0, "> 0")?;
    range("alpha", alpha, alpha > 0.0 && alpha < 1.0, "0 < alpha < 1")?;
    range("eps", eps, eps > 0.0 && eps <= d0, "0 < eps <= d0")?;

    let reached = |k: u64| d0 * alpha.powf(k as f64) <= eps;
    let mut k = ((eps / d0).ln() / alpha.ln()).ceil().max(0.0) as u64;
    // the logarithm ratio can land one step either side of the boundary
    while k > 0 && reached(k - 1) {
        k -= 1;
    }
    while !reached(k) {
        k += 1;
    }
    Ok(k)
}
