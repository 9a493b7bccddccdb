//! CNF formulas and the DIMACS text format.
//!
//! The parser accepts the usual DIMACS CNF layout:
//! - comment lines starting with `c` (anywhere in the file)
//! - exactly one problem line `p cnf <num_vars> <num_clauses>` before any literal
//! - whitespace separated literals, each clause terminated by `0` (clauses may span lines)
//! - an optional `%` line, which ends the input (SATLIB style trailer)
//!
//! Empty clauses, duplicate literals and tautologies are kept verbatim.

use std::fmt;
use std::io::Read;
use std::num::NonZeroI32;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A signed variable reference. `|value|` is the 1-based variable index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct Literal(NonZeroI32);

impl Literal {
    pub fn new(value: i32) -> Option<Self> {
        // i32::MIN has no positive counterpart
        if value == i32::MIN {
            return None;
        }
        NonZeroI32::new(value).map(Literal)
    }

    pub fn positive(var: usize) -> Self {
        Literal::new(var as i32).expect("variable index must be nonzero")
    }

    pub fn negative(var: usize) -> Self {
        Literal::new(-(var as i32)).expect("variable index must be nonzero")
    }

    #[inline]
    pub fn value(self) -> i32 {
        self.0.get()
    }

    /// 1-based variable index.
    #[inline]
    pub fn var(self) -> usize {
        self.0.get().unsigned_abs() as usize
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0.get() > 0
    }

    pub fn negate(self) -> Self {
        Literal(NonZeroI32::new(-self.0.get()).unwrap())
    }

    /// Truth value of the literal when its variable is set to `value`.
    #[inline]
    pub fn holds(self, value: bool) -> bool {
        value == self.is_positive()
    }
}

impl TryFrom<i32> for Literal {
    type Error = String;

    fn try_from(value: i32) -> Result<Self, Self::Error> {
        Literal::new(value).ok_or_else(|| format!("invalid literal {value}"))
    }
}

impl From<Literal> for i32 {
    fn from(lit: Literal) -> i32 {
        lit.value()
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

pub type Clause = Vec<Literal>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("literal {literal} in clause {clause} exceeds declared variable count {num_vars}")]
    LiteralOutOfRange {
        literal: i32,
        clause: usize,
        num_vars: usize,
    },
    #[error("variable count {0} does not fit a signed 32-bit literal")]
    TooManyVariables(usize),
}

/// A CNF instance: variable count plus an ordered clause list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self, FormulaError> {
        if num_vars > i32::MAX as usize {
            return Err(FormulaError::TooManyVariables(num_vars));
        }
        for (ci, clause) in clauses.iter().enumerate() {
            if let Some(lit) = clause.iter().find(|l| l.var() > num_vars) {
                return Err(FormulaError::LiteralOutOfRange {
                    literal: lit.value(),
                    clause: ci,
                    num_vars,
                });
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    /// Builds a formula from raw signed integers. Panics on zero or out-of-range
    /// literals; meant for tests and literals written in source.
    pub fn from_ints(num_vars: usize, clauses: &[&[i32]]) -> Self {
        let clauses = clauses
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&v| Literal::new(v).expect("zero literal"))
                    .collect()
            })
            .collect();
        CnfFormula::new(num_vars, clauses).expect("invalid formula")
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    #[inline]
    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    #[inline]
    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("duplicate `p` header")]
    DuplicateHeader,
    #[error("literal token `{0}` is not an integer")]
    InvalidLiteral(String),
    #[error("literal {literal} out of range (num_vars = {num_vars})")]
    LiteralOutOfRange { literal: i64, num_vars: usize },
    #[error("clause not terminated by `0` before end of input")]
    UnterminatedClause,
    #[error("header declares {declared} clauses but {found} were found")]
    ClauseCountMismatch { declared: usize, found: usize },
}

/// A DIMACS parse failure, positioned at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn at(line: usize, column: usize, kind: ParseErrorKind) -> Self {
        ParseError { line, column, kind }
    }
}

/// Splits a line into `(1-based column, token)` pairs.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_ascii_whitespace().map(move |tok| {
        let offset = tok.as_ptr() as usize - line.as_ptr() as usize;
        (offset + 1, tok)
    })
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, usize), ParseError> {
    let toks: Vec<(usize, &str)> = tokens(line).collect();
    let malformed = |col: usize, msg: String| {
        Err(ParseError::at(line_no, col, ParseErrorKind::MalformedHeader(msg)))
    };
    if toks.len() != 4 || toks[0].1 != "p" {
        return malformed(1, format!("expected `p cnf <vars> <clauses>`, got `{}`", line.trim()));
    }
    if toks[1].1 != "cnf" {
        return malformed(toks[1].0, format!("unsupported format `{}`", toks[1].1));
    }
    let num_vars: usize = match toks[2].1.parse() {
        Ok(v) if v <= i32::MAX as usize => v,
        _ => return malformed(toks[2].0, format!("bad variable count `{}`", toks[2].1)),
    };
    let num_clauses: usize = match toks[3].1.parse() {
        Ok(v) => v,
        Err(_) => return malformed(toks[3].0, format!("bad clause count `{}`", toks[3].1)),
    };
    Ok((num_vars, num_clauses))
}

/// Parses DIMACS CNF text.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, ParseError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Clause = Vec::new();
    let mut open_clause = false;
    let mut last_line = 0;
    let mut last_col = 1;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        last_col = line.len() + 1;
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(ParseError::at(line_no, 1, ParseErrorKind::DuplicateHeader));
            }
            header = Some(parse_header(line, line_no)?);
            continue;
        }
        let (num_vars, _) = match header {
            Some(h) => h,
            None => {
                return Err(ParseError::at(line_no, 1, ParseErrorKind::MissingHeader));
            }
        };
        for (col, tok) in tokens(line) {
            let value: i64 = tok.parse().map_err(|_| {
                ParseError::at(line_no, col, ParseErrorKind::InvalidLiteral(tok.to_string()))
            })?;
            if value == 0 {
                clauses.push(std::mem::take(&mut current));
                open_clause = false;
                continue;
            }
            if value.unsigned_abs() > num_vars as u64 {
                return Err(ParseError::at(
                    line_no,
                    col,
                    ParseErrorKind::LiteralOutOfRange { literal: value, num_vars },
                ));
            }
            // in range and nonzero, so the conversion cannot fail
            current.push(Literal::new(value as i32).unwrap());
            open_clause = true;
        }
    }

    let (num_vars, declared) = match header {
        Some(h) => h,
        None => return Err(ParseError::at(last_line.max(1), 1, ParseErrorKind::MissingHeader)),
    };
    if open_clause {
        return Err(ParseError::at(last_line, last_col, ParseErrorKind::UnterminatedClause));
    }
    if clauses.len() != declared {
        return Err(ParseError::at(
            last_line,
            last_col,
            ParseErrorKind::ClauseCountMismatch { declared, found: clauses.len() },
        ));
    }
    Ok(CnfFormula { num_vars, clauses })
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: ParseError,
    },
}

pub fn read_dimacs_file(path: impl AsRef<Path>) -> Result<CnfFormula, LoadError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| LoadError::Io { path: display.clone(), source })?;
    parse_dimacs(&text).map_err(|source| LoadError::Parse { path: display, source })
}

/// Emits the header and one `0`-terminated clause per line.
pub fn serialize_dimacs(formula: &CnfFormula) -> String {
    use std::fmt::Write;
    let mut out = String::with_capacity(16 + formula.num_clauses() * 12);
    writeln!(out, "p cnf {} {}", formula.num_vars, formula.clauses.len()).unwrap();
    for clause in &formula.clauses {
        for lit in clause {
            write!(out, "{} ", lit.value()).unwrap();
        }
        out.push_str("0\n");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("clause width k = {k} must satisfy 1 <= k <= n (n = {n})")]
    InvalidWidth { n: usize, k: usize },
}

/// Uniform random k-SAT: each clause picks `k` distinct variables without
/// replacement and an independent fair sign for each.
pub fn generate_random_ksat(
    n: usize,
    m: usize,
    k: usize,
    seed: u64,
) -> Result<CnfFormula, GenerateError> {
    if k == 0 || k > n || n > i32::MAX as usize {
        return Err(GenerateError::InvalidWidth { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clauses = (0..m)
        .map(|_| {
            index::sample(&mut rng, n, k)
                .into_iter()
                .map(|i| {
                    if rng.gen::<bool>() {
                        Literal::positive(i + 1)
                    } else {
                        Literal::negative(i + 1)
                    }
                })
                .collect()
        })
        .collect();
    Ok(CnfFormula { num_vars: n, clauses })
}
