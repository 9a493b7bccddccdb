//! The SAT energy/entropy landscape.
//!
//! Energy is the number of falsified clauses. Per-state entropy is a binary
//! Shannon entropy (in nats) of either the satisfied-clause fraction or the
//! fraction of true bits, so every estimator lives in `[0, ln 2]`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{Clause, CnfFormula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LandscapeError {
    #[error("assignment has {found} variables, formula has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("variable {var} out of range 1..={n}")]
    VarOutOfRange { var: usize, n: usize },
}

/// Truth values for variables `1..=n`, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment(bits)
    }

    pub fn all_false(n: usize) -> Self {
        Assignment(vec![false; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Assignment((0..n).map(|_| rng.gen::<bool>()).collect())
    }

    /// Bit `i` of `mask` is the value of variable `i + 1`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Assignment((0..n).map(|i| mask >> i & 1 == 1).collect())
    }

    /// Inverse of [`Assignment::from_mask`]; only meaningful for `len() <= 64`.
    pub fn to_mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (b as u64) << i)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Value of the 1-based variable `var`.
    #[inline]
    pub fn value(&self, var: usize) -> bool {
        self.0[var - 1]
    }

    pub fn count_true(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn hamming(&self, other: &Assignment) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub(crate) fn toggle(&mut self, var: usize) {
        let bit = &mut self.0[var - 1];
        *bit = !*bit;
    }

    /// Signed literals of the model, e.g. `[1, -2, 3]`.
    pub fn literals(&self) -> Vec<i32> {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &b)| if b { i as i32 + 1 } else { -(i as i32 + 1) })
            .collect()
    }

    fn check_len(&self, formula: &CnfFormula) -> Result<(), LandscapeError> {
        if self.len() != formula.num_vars() {
            return Err(LandscapeError::LengthMismatch {
                expected: formula.num_vars(),
                found: self.len(),
            });
        }
        Ok(())
    }
}

/// Written as a `0`/`1` string, variable 1 first.
impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Assignment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid assignment character `{other}`")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Assignment)
    }
}

impl Serialize for Assignment {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-state entropy estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyEstimator {
    /// Binary entropy of the satisfied-clause fraction.
    #[default]
    ClauseSatisfaction,
    /// Binary entropy of the fraction of variables set to true.
    BitBalance,
}

impl EntropyEstimator {
    /// Entropy from the counts the estimators depend on. Degenerate
    /// denominators (`m = 0` or `n = 0`) give 0.
    pub fn from_counts(self, satisfied: usize, m: usize, ones: usize, n: usize) -> f64 {
        match self {
            EntropyEstimator::ClauseSatisfaction if m > 0 => {
                binary_entropy(satisfied as f64 / m as f64)
            }
            EntropyEstimator::BitBalance if n > 0 => binary_entropy(ones as f64 / n as f64),
            _ => 0.0,
        }
    }
}

impl FromStr for EntropyEstimator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clause" | "clause_satisfaction" => Ok(EntropyEstimator::ClauseSatisfaction),
            "bits" | "bit_balance" => Ok(EntropyEstimator::BitBalance),
            other => Err(format!("unknown entropy estimator `{other}`")),
        }
    }
}

/// `-(p ln p + (1-p) ln(1-p))` with `0 ln 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
    let h = -(term(p) + term(1.0 - p));
    h.clamp(0.0, std::f64::consts::LN_2)
}

#[inline]
fn clause_satisfied(clause: &Clause, state: &Assignment) -> bool {
    clause.iter().any(|lit| lit.holds(state.value(lit.var())))
}

/// Clauses with at least one true literal. An empty clause is never satisfied.
pub fn satisfied_clauses(formula: &CnfFormula, state: &Assignment) -> Result<usize, LandscapeError> {
    state.check_len(formula)?;
    Ok(formula
        .clauses()
        .iter()
        .filter(|c| clause_satisfied(c, state))
        .count())
}

/// Number of falsified clauses.
pub fn energy(formula: &CnfFormula, state: &Assignment) -> Result<usize, LandscapeError> {
    Ok(formula.num_clauses() - satisfied_clauses(formula, state)?)
}

pub fn is_solution(formula: &CnfFormula, state: &Assignment) -> Result<bool, LandscapeError> {
    state.check_len(formula)?;
    Ok(formula.clauses().iter().all(|c| clause_satisfied(c, state)))
}

pub fn state_entropy(
    formula: &CnfFormula,
    state: &Assignment,
    estimator: EntropyEstimator,
) -> Result<f64, LandscapeError> {
    let satisfied = satisfied_clauses(formula, state)?;
    Ok(estimator.from_counts(
        satisfied,
        formula.num_clauses(),
        state.count_true(),
        state.len(),
    ))
}

/// Copy of `state` with the 1-based `var` negated.
pub fn flip(state: &Assignment, var: usize) -> Result<Assignment, LandscapeError> {
    if var == 0 || var > state.len() {
        return Err(LandscapeError::VarOutOfRange { var, n: state.len() });
    }
    let mut next = state.clone();
    next.toggle(var);
    Ok(next)
}

/// Entry `v - 1` is `H(flip(state, v)) - H(state)`: a per-variable stand-in
/// for the entropy gradient on the hypercube.
pub fn entropy_gain_scores(
    formula: &CnfFormula,
    state: &Assignment,
    estimator: EntropyEstimator,
) -> Result<Vec<f64>, LandscapeError> {
    state.check_len(formula)?;
    let index = OccurrenceIndex::new(formula);
    let cache = FlipCache::new(formula, &index, state.clone())?;
    let base = cache.entropy(estimator);
    Ok((1..=state.len())
        .map(|v| cache.entropy_after_flip(v, estimator) - base)
        .collect())
}

#[derive(Debug, Clone, Copy)]
struct Occurrence {
    clause: u32,
    pos: u32,
    neg: u32,
}

/// Variable-to-clause occurrence lists, built once per formula.
#[derive(Debug, Clone)]
pub struct OccurrenceIndex {
    by_var: Vec<Vec<Occurrence>>,
}

impl OccurrenceIndex {
    pub fn new(formula: &CnfFormula) -> Self {
        let mut by_var: Vec<Vec<Occurrence>> = vec![Vec::new(); formula.num_vars()];
        for (ci, clause) in formula.clauses().iter().enumerate() {
            for lit in clause {
                let occ = &mut by_var[lit.var() - 1];
                let entry = match occ.last_mut() {
                    Some(o) if o.clause == ci as u32 => o,
                    _ => {
                        occ.push(Occurrence { clause: ci as u32, pos: 0, neg: 0 });
                        occ.last_mut().unwrap()
                    }
                };
                if lit.is_positive() {
                    entry.pos += 1;
                } else {
                    entry.neg += 1;
                }
            }
        }
        // a variable repeated non-adjacently in one clause still needs one entry
        for occ in &mut by_var {
            occ.sort_by_key(|o| o.clause);
            occ.dedup_by(|b, a| {
                if a.clause == b.clause {
                    a.pos += b.pos;
                    a.neg += b.neg;
                    true
                } else {
                    false
                }
            });
        }
        OccurrenceIndex { by_var }
    }
}

/// Incremental satisfied-count cache over one assignment. Flip deltas cost
/// one pass over the flipped variable's occurrences.
#[derive(Debug, Clone)]
pub struct FlipCache<'a> {
    index: &'a OccurrenceIndex,
    num_clauses: usize,
    state: Assignment,
    true_counts: Vec<u32>,
    unsat: usize,
    ones: usize,
}

impl<'a> FlipCache<'a> {
    pub fn new(
        formula: &CnfFormula,
        index: &'a OccurrenceIndex,
        state: Assignment,
    ) -> Result<Self, LandscapeError> {
        state.check_len(formula)?;
        let true_counts: Vec<u32> = formula
            .clauses()
            .iter()
            .map(|c| c.iter().filter(|l| l.holds(state.value(l.var()))).count() as u32)
            .collect();
        let unsat = true_counts.iter().filter(|&&t| t == 0).count();
        let ones = state.count_true();
        Ok(FlipCache {
            index,
            num_clauses: formula.num_clauses(),
            state,
            true_counts,
            unsat,
            ones,
        })
    }

    #[inline]
    pub fn state(&self) -> &Assignment {
        &self.state
    }

    pub fn into_state(self) -> Assignment {
        self.state
    }

    #[inline]
    pub fn energy(&self) -> usize {
        self.unsat
    }

    #[inline]
    pub fn satisfied(&self) -> usize {
        self.num_clauses - self.unsat
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.state.len()
    }

    pub fn entropy(&self, estimator: EntropyEstimator) -> f64 {
        estimator.from_counts(self.satisfied(), self.num_clauses, self.ones, self.num_vars())
    }

    /// Energy change caused by flipping the 1-based `var`.
    pub fn flip_delta(&self, var: usize) -> i64 {
        let value = self.state.value(var);
        let mut delta = 0i64;
        for occ in &self.index.by_var[var - 1] {
            let (now_true, now_false) = if value { (occ.pos, occ.neg) } else { (occ.neg, occ.pos) };
            let before = self.true_counts[occ.clause as usize];
            let after = before - now_true + now_false;
            delta += (after == 0) as i64 - (before == 0) as i64;
        }
        delta
    }

    /// Entropy of the state reached by flipping `var`, without flipping it.
    pub fn entropy_after_flip(&self, var: usize, estimator: EntropyEstimator) -> f64 {
        let energy = (self.unsat as i64 + self.flip_delta(var)) as usize;
        let ones = if self.state.value(var) { self.ones - 1 } else { self.ones + 1 };
        estimator.from_counts(self.num_clauses - energy, self.num_clauses, ones, self.num_vars())
    }

    pub fn flip(&mut self, var: usize) {
        let value = self.state.value(var);
        for occ in &self.index.by_var[var - 1] {
            let (now_true, now_false) = if value { (occ.pos, occ.neg) } else { (occ.neg, occ.pos) };
            let count = &mut self.true_counts[occ.clause as usize];
            let before = *count;
            *count = before - now_true + now_false;
            if before == 0 && *count > 0 {
                self.unsat -= 1;
            } else if before > 0 && *count == 0 {
                self.unsat += 1;
            }
        }
        if value {
            self.ones -= 1;
        } else {
            self.ones += 1;
        }
        self.state.toggle(var);
    }
}

/// A search space that can be annealed: anything with an energy, a per-state
/// entropy, a neighbourhood and a solution predicate.
pub trait Landscape {
    type State: Clone;

    fn energy(&self, state: &Self::State) -> f64;

    fn entropy(&self, state: &Self::State) -> f64;

    fn neighbors(&self, state: &Self::State) -> Vec<Self::State>;

    fn is_solution(&self, state: &Self::State) -> bool;
}

/// SAT as a [`Landscape`]: 1-flip neighbourhood, energy = falsified clauses.
///
/// States must have the formula's length; the trait methods panic otherwise.
#[derive(Debug, Clone, Copy)]
pub struct SatLandscape<'a> {
    pub formula: &'a CnfFormula,
    pub estimator: EntropyEstimator,
}

impl Landscape for SatLandscape<'_> {
    type State = Assignment;

    fn energy(&self, state: &Assignment) -> f64 {
        energy(self.formula, state).expect("assignment length") as f64
    }

    fn entropy(&self, state: &Assignment) -> f64 {
        state_entropy(self.formula, state, self.estimator).expect("assignment length")
    }

    fn neighbors(&self, state: &Assignment) -> Vec<Assignment> {
        (1..=state.len()).map(|v| flip(state, v).unwrap()).collect()
    }

    fn is_solution(&self, state: &Assignment) -> bool {
        is_solution(self.formula, state).expect("assignment length")
    }
}
