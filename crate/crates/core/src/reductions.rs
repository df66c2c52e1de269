//! 3-CNF model counting through grammar-constrained likelihood.
//!
//! Each clause becomes a deterministic, position-indexed right-linear
//! grammar over `{0, 1}` whose language is the set of length-`n`
//! assignments falsifying the clause. The union of those grammars derives
//! `w` once per falsified clause, so for the uniform model over `{0, 1}`
//!
//! ```text
//! #F = 2^n · (1 − f_A(L_G ∩ {0,1}^n))
//! ```

use std::fmt;

use serde::Serialize;

use crate::alphabet::Alphabet;
use crate::approx::{fpras_likelihood, FprasConfig};
use crate::error::{Error, Result};
use crate::grammar::{union_all, AmbiguityBound, CnfGrammar, GrammarBuilder};
use crate::hmm::uniform_hmm;
use crate::inference::ucfg_likelihood;
use crate::oracle::brute_force_likelihood;

/// Clause counts up to which the DP mode uses exact inclusion–exclusion.
pub const INCLUSION_EXCLUSION_MAX_CLAUSES: usize = 16;

/// Largest variable count accepted by [`brute_force_model_count`].
pub const BRUTE_FORCE_MAX_VARIABLES: usize = 24;

/// Nonzero signed variable index; the sign is the polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal(i32);

impl Literal {
    pub fn new(value: i32) -> Option<Self> {
        (value != 0).then_some(Literal(value))
    }

    /// 1-based variable index.
    pub fn variable(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn satisfied_by(self, value: bool) -> bool {
        value == self.is_positive()
    }
}

pub type Clause = [Literal; 3];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf3Formula {
    variable_count: usize,
    clauses: Vec<Clause>,
}

impl Cnf3Formula {
    pub fn new(variable_count: usize, clauses: Vec<Clause>) -> Result<Self> {
        if clauses.is_empty() {
            return Err(Error::Dimacs("formula needs at least one clause".into()));
        }
        for clause in &clauses {
            for lit in clause {
                if lit.variable() > variable_count {
                    return Err(Error::Dimacs(format!(
                        "literal {} exceeds {variable_count} variables",
                        lit.0
                    )));
                }
            }
        }
        Ok(Cnf3Formula {
            variable_count,
            clauses,
        })
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Evaluates the formula; `assignment[i]` is the value of `x_{i+1}`.
    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|l| l.satisfied_by(assignment[l.variable() - 1]))
        })
    }
}

impl fmt::Display for Cnf3Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p cnf {} {}", self.variable_count, self.clauses.len())?;
        for c in &self.clauses {
            writeln!(f, "{} {} {} 0", c[0].0, c[1].0, c[2].0)?;
        }
        Ok(())
    }
}

/// Parses DIMACS CNF where every clause has exactly three literals.
pub fn parse_dimacs(text: &str) -> Result<Cnf3Formula> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    'lines: for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                ["p", "cnf", v, c] => v.parse().ok().zip(c.parse().ok()),
                _ => None,
            };
            if header.is_some() || parsed.is_none() {
                return Err(Error::Dimacs(format!("line {}: malformed header", i + 1)));
            }
            header = parsed;
            continue;
        }
        if header.is_none() {
            return Err(Error::Dimacs(format!(
                "line {}: clause before `p cnf` header",
                i + 1
            )));
        }
        for tok in line.split_whitespace() {
            if tok == "%" {
                break 'lines;
            }
            let v: i32 = tok
                .parse()
                .map_err(|_| Error::Dimacs(format!("line {}: bad literal {tok:?}", i + 1)))?;
            match Literal::new(v) {
                Some(l) => current.push(l),
                None => {
                    let lits = std::mem::take(&mut current);
                    let clause: Clause = lits.as_slice().try_into().map_err(|_| {
                        Error::Dimacs(format!(
                            "line {}: clause has {} literals, expected 3",
                            i + 1,
                            lits.len()
                        ))
                    })?;
                    clauses.push(clause);
                }
            }
        }
    }
    let (vars, count) = header.ok_or_else(|| Error::Dimacs("missing `p cnf` header".into()))?;
    if !current.is_empty() {
        return Err(Error::Dimacs("last clause is not terminated by 0".into()));
    }
    if clauses.len() != count {
        return Err(Error::Dimacs(format!(
            "header declares {count} clauses, found {}",
            clauses.len()
        )));
    }
    Cnf3Formula::new(vars, clauses)
}

/// Right-linear grammar for the strings in `{0,1}^n` whose bit at each
/// position lies in `allowed[i]` (`allowed[i][b]` for bit `b`).
/// When some position allows nothing the language is empty, realized by
/// `Q1 -> X0 Q1` which has no finite derivation.
fn pattern_grammar(allowed: &[[bool; 2]]) -> CnfGrammar {
    let n = allowed.len();
    let mut b = GrammarBuilder::new();
    let q = |i: usize| format!("Q{i}");
    let x = |bit: usize| format!("X{bit}");
    if allowed.iter().any(|a| !a[0] && !a[1]) {
        b.binary("Q1", "X0", "Q1");
    } else {
        for (i, bits) in allowed.iter().enumerate() {
            for (bit, &ok) in bits.iter().enumerate() {
                if !ok {
                    continue;
                }
                if i + 1 < n {
                    b.binary(&q(i + 1), &x(bit), &q(i + 2));
                } else {
                    b.lexical(&q(i + 1), if bit == 0 { '0' } else { '1' });
                }
            }
        }
    }
    b.lexical("X0", '0');
    b.lexical("X1", '1');
    b.build("Q1").expect("pattern grammar is valid")
}

/// Per-position bits allowed by "every clause in `clauses` is falsified".
fn falsifying_pattern<'a>(clauses: impl IntoIterator<Item = &'a Clause>, n: usize) -> Vec<[bool; 2]> {
    let mut allowed = vec![[true, true]; n];
    for clause in clauses {
        for lit in clause {
            // A positive literal is falsified by 0, a negative one by 1.
            let keep = usize::from(!lit.is_positive());
            allowed[lit.variable() - 1][1 - keep] = false;
        }
    }
    allowed
}

/// Unambiguous grammar for the length-`n` assignments falsifying `clause`.
pub fn clause_complement_grammar(clause: &Clause, n: usize) -> Result<CnfGrammar> {
    if n < 2 {
        return Err(Error::OutOfRange(format!(
            "clause grammars need n >= 2 variables, got {n}"
        )));
    }
    if let Some(l) = clause.iter().find(|l| l.variable() > n) {
        return Err(Error::OutOfRange(format!(
            "literal {} exceeds {n} variables",
            l.0
        )));
    }
    Ok(pattern_grammar(&falsifying_pattern([clause], n)))
}

/// Union of the clause-complement grammars; `f_G(w)` is the number of
/// clauses falsified by `w`.
pub fn formula_to_cfg(formula: &Cnf3Formula) -> Result<CnfGrammar> {
    let parts = formula
        .clauses()
        .iter()
        .map(|c| clause_complement_grammar(c, formula.variable_count()))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&CnfGrammar> = parts.iter().collect();
    Ok(union_all(&refs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelCountMode {
    /// Membership-wise likelihood of the union grammar by enumeration.
    ExactBruteforceOverGrammar,
    /// Inclusion–exclusion over clause subsets, each term an exact
    /// unambiguous-grammar likelihood from the forward table; falls back to
    /// the randomized estimator above [`INCLUSION_EXCLUSION_MAX_CLAUSES`].
    DpWithMembership,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelCount {
    pub count: u64,
    /// `f_A(L_G ∩ {0,1}^n)` used for the count.
    pub likelihood: f64,
    /// `false` only for the randomized fallback.
    pub exact: bool,
}

/// `#F = round(2^n · (1 − f_A(L_G ∩ {0,1}^n)))` with `A` uniform over `{0,1}`.
pub fn model_count_via_likelihood(formula: &Cnf3Formula, mode: ModelCountMode) -> Result<ModelCount> {
    let n = formula.variable_count();
    if n > 62 {
        return Err(Error::OutOfRange(format!("{n} variables do not fit a u64 count")));
    }
    let hmm = uniform_hmm(&Alphabet::new(['0', '1']))?;
    let k = formula.clauses().len();
    let (likelihood, exact) = match mode {
        ModelCountMode::ExactBruteforceOverGrammar => {
            let g = formula_to_cfg(formula)?;
            (brute_force_likelihood(&g, &hmm, n)?, true)
        }
        ModelCountMode::DpWithMembership if k <= INCLUSION_EXCLUSION_MAX_CLAUSES => {
            if n < 2 {
                return Err(Error::OutOfRange(format!(
                    "clause grammars need n >= 2 variables, got {n}"
                )));
            }
            let mut total = 0.0;
            for subset in 1u32..(1 << k) {
                let chosen = formula
                    .clauses()
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| subset >> j & 1 == 1)
                    .map(|(_, c)| c);
                let g = pattern_grammar(&falsifying_pattern(chosen, n));
                let p = ucfg_likelihood(&g, &hmm, n, true)?.value;
                if subset.count_ones() % 2 == 1 {
                    total += p;
                } else {
                    total -= p;
                }
            }
            (total, true)
        }
        ModelCountMode::DpWithMembership => {
            let g = formula_to_cfg(formula)?;
            let config = FprasConfig::new(0.01, AmbiguityBound::constant(k as u64), 0);
            (fpras_likelihood(&g, &hmm, n, &config)?.estimate.min(1.0), false)
        }
    };
    let scale = (n as f64).exp2();
    let raw = scale * (1.0 - likelihood);
    let count = raw.round();
    if exact && (raw - count).abs() > 1e-6 * scale {
        return Err(Error::Inconsistency(format!(
            "model count {raw} is not an integer"
        )));
    }
    Ok(ModelCount {
        count: count.max(0.0) as u64,
        likelihood,
        exact,
    })
}

/// Exhaustive count of satisfying assignments.
pub fn brute_force_model_count(formula: &Cnf3Formula) -> Result<u64> {
    let n = formula.variable_count();
    if n > BRUTE_FORCE_MAX_VARIABLES {
        return Err(Error::OutOfRange(format!(
            "{n} variables exceed the brute-force limit {BRUTE_FORCE_MAX_VARIABLES}"
        )));
    }
    let mut assignment = vec![false; n];
    let mut count = 0;
    for bits in 0u64..(1 << n) {
        for (i, v) in assignment.iter_mut().enumerate() {
            // x_1 is the leftmost character, i.e. the most significant bit.
            *v = bits >> (n - 1 - i) & 1 == 1;
        }
        if formula.is_satisfied_by(&assignment) {
            count += 1;
        }
    }
    Ok(count)
}
