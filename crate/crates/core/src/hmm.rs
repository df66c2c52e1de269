//! Observable-operator hidden Markov models.
//!
//! An HMM over `n` states is an initial distribution `π` together with one
//! nonnegative `n × n` matrix `A_σ` per symbol such that `Σ_σ A_σ` is
//! row-stochastic. The probability of a word is `πᵀ A_{w1} ⋯ A_{wL} 𝟙`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};

/// Tolerance for the probability-vector and row-stochastic checks.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// Dense square matrix stored row-major: entry `(s, t)` sits at the pair
/// index `s * n + t`, which is also the vectorization used by the
/// forward tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.data[s * self.n + t]
    }

    #[inline]
    pub fn set(&mut self, s: usize, t: usize, v: f64) {
        self.data[s * self.n + t] = v;
    }

    /// Row-major vectorization; entry `(s, t)` at `s * n + t`.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for s in 0..n {
            for u in 0..n {
                let x = self.data[s * n + u];
                if x == 0.0 {
                    continue;
                }
                for t in 0..n {
                    out.data[s * n + t] += x * other.data[u * n + t];
                }
            }
        }
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HmmDocument {
    states: usize,
    alphabet: Vec<String>,
    initial: Vec<f64>,
    matrices: BTreeMap<String, Vec<Vec<f64>>>,
}

/// A validated observable-operator HMM. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Hmm {
    alphabet: Alphabet,
    initial: Vec<f64>,
    /// One operator per alphabet symbol, in alphabet order.
    operators: Vec<Matrix>,
}

impl Hmm {
    /// Builds and validates a model. `operators` maps each symbol to its
    /// matrix; every alphabet symbol needs exactly one entry.
    pub fn new(initial: Vec<f64>, operators: BTreeMap<char, Matrix>) -> Result<Self> {
        let n = initial.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("HMM needs at least one state".into()));
        }
        if operators.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        let alphabet = Alphabet::new(operators.keys().copied());
        for (i, &p) in initial.iter().enumerate() {
            check_entry(p, || format!("initial[{i}]"))?;
        }
        let total: f64 = initial.iter().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::NotStochastic(format!(
                "initial distribution sums to {total}"
            )));
        }
        for (c, m) in &operators {
            if m.dim() != n {
                return Err(Error::DimensionMismatch(format!(
                    "matrix for {c:?} is {0}x{0}, expected {n}x{n}",
                    m.dim()
                )));
            }
            for s in 0..n {
                for t in 0..n {
                    check_entry(m.get(s, t), || format!("matrix {c:?}[{s}][{t}]"))?;
                }
            }
        }
        for s in 0..n {
            let row: f64 = operators
                .values()
                .map(|m| (0..n).map(|t| m.get(s, t)).sum::<f64>())
                .sum();
            if (row - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(Error::NotStochastic(format!(
                    "row {s} of the summed operator sums to {row}"
                )));
            }
        }
        Ok(Hmm {
            alphabet,
            initial,
            operators: operators.into_values().collect(),
        })
    }

    pub fn state_count(&self) -> usize {
        self.initial.len()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Operator for the symbol at alphabet index `symbol`.
    pub fn operator(&self, symbol: usize) -> &Matrix {
        &self.operators[symbol]
    }

    pub fn operator_for(&self, symbol: char) -> Option<&Matrix> {
        self.alphabet.index_of(symbol).map(|i| &self.operators[i])
    }

    /// Serializes to the JSON document format accepted by [`parse_hmm`].
    pub fn to_json(&self) -> String {
        let doc = HmmDocument {
            states: self.state_count(),
            alphabet: self.alphabet.symbols().iter().map(|c| c.to_string()).collect(),
            initial: self.initial.clone(),
            matrices: self
                .alphabet
                .symbols()
                .iter()
                .zip(&self.operators)
                .map(|(c, m)| (c.to_string(), m.rows()))
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("HMM serializes")
    }

    /// `πᵀ A_w 𝟙` for a word given as alphabet indices.
    pub fn likelihood_of_indices(&self, word: &[usize]) -> f64 {
        let n = self.state_count();
        let mut v = self.initial.clone();
        let mut next = vec![0.0; n];
        for &sym in word {
            let a = &self.operators[sym];
            next.iter_mut().for_each(|x| *x = 0.0);
            for (s, &vs) in v.iter().enumerate() {
                if vs == 0.0 {
                    continue;
                }
                for (t, x) in next.iter_mut().enumerate() {
                    *x += vs * a.get(s, t);
                }
            }
            std::mem::swap(&mut v, &mut next);
        }
        v.iter().sum()
    }

    /// `f_A(w) = πᵀ A_{w1} ⋯ A_{wL} 𝟙`.
    pub fn string_likelihood(&self, word: &str) -> Result<f64> {
        if word.is_empty() {
            return Err(Error::EmptyWord);
        }
        let w = self.alphabet.encode(word)?;
        Ok(self.likelihood_of_indices(&w))
    }

    /// Operator product `A_w` for a word given as alphabet indices.
    pub fn operator_product(&self, word: &[usize]) -> Matrix {
        word.iter()
            .fold(Matrix::identity(self.state_count()), |acc, &s| {
                acc.matmul(&self.operators[s])
            })
    }

    /// Likelihood through the factorization `w = w1 · w2` at `cut`:
    /// `Σ_{s,u,t} π[s] · A_{w1}[s,u] · A_{w2}[u,t]`.
    ///
    /// This is the contraction `(𝟙 ⊗ π)ᵀ T (vec A_{w1} ⊗ vec A_{w2})` with the
    /// order-3 tensor `T` applied implicitly: `T` links the pair indices
    /// `(s,u)` and `(u',t)` to `(s,t)` exactly when `u = u'`.
    pub fn split_likelihood(&self, word: &str, cut: usize) -> Result<f64> {
        let w = self.alphabet.encode(word)?;
        if cut == 0 || cut >= w.len() {
            return Err(Error::InvalidCut { cut, len: w.len() });
        }
        let n = self.state_count();
        let left = self.operator_product(&w[..cut]);
        let right = self.operator_product(&w[cut..]);
        let (vl, vr) = (left.as_slice(), right.as_slice());
        let mut total = 0.0;
        for s in 0..n {
            let ps = self.initial[s];
            if ps == 0.0 {
                continue;
            }
            for u in 0..n {
                let x = ps * vl[s * n + u];
                for t in 0..n {
                    total += x * vr[u * n + t];
                }
            }
        }
        Ok(total)
    }
}

fn check_entry(value: f64, location: impl FnOnce() -> String) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::MalformedHmm(format!(
            "non-finite entry {value} in {}",
            location()
        )));
    }
    if value < 0.0 {
        return Err(Error::NegativeEntry {
            location: location(),
            value,
        });
    }
    Ok(())
}

/// Parses the JSON HMM document format.
pub fn parse_hmm(text: &str) -> Result<Hmm> {
    let doc: HmmDocument =
        serde_json::from_str(text).map_err(|e| Error::MalformedHmm(e.to_string()))?;
    if doc.states == 0 {
        return Err(Error::MalformedHmm("`states` must be positive".into()));
    }
    if doc.initial.len() != doc.states {
        return Err(Error::DimensionMismatch(format!(
            "`initial` has {} entries for {} states",
            doc.initial.len(),
            doc.states
        )));
    }
    let mut symbols = Vec::with_capacity(doc.alphabet.len());
    for s in &doc.alphabet {
        symbols.push(single_char(s)?);
    }
    let alphabet = Alphabet::new(symbols.iter().copied());
    if alphabet.len() != symbols.len() {
        return Err(Error::MalformedHmm("duplicate alphabet symbol".into()));
    }
    let mut operators = BTreeMap::new();
    for (key, rows) in &doc.matrices {
        let c = single_char(key)?;
        if !alphabet.contains(c) {
            return Err(Error::MalformedHmm(format!(
                "matrix for {c:?} which is not in the alphabet"
            )));
        }
        if rows.len() != doc.states {
            return Err(Error::DimensionMismatch(format!(
                "matrix for {c:?} has {} rows for {} states",
                rows.len(),
                doc.states
            )));
        }
        operators.insert(c, Matrix::from_rows(rows)?);
    }
    if let Some(&c) = alphabet.symbols().iter().find(|c| !operators.contains_key(c)) {
        return Err(Error::MalformedHmm(format!("no matrix for symbol {c:?}")));
    }
    Hmm::new(doc.initial, operators)
}

fn single_char(s: &str) -> Result<char> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(Error::MalformedHmm(format!(
            "alphabet entries must be single characters, got {s:?}"
        ))),
    }
}

/// Single-state model with `f(w) = |Σ|^{-|w|}`.
pub fn uniform_hmm(alphabet: &Alphabet) -> Result<Hmm> {
    if alphabet.is_empty() {
        return Err(Error::EmptyAlphabet);
    }
    let p = 1.0 / alphabet.len() as f64;
    let operators = alphabet
        .symbols()
        .iter()
        .map(|&c| (c, Matrix { n: 1, data: vec![p] }))
        .collect();
    Hmm::new(vec![1.0], operators)
}

/// Seeded random model. Each row of the concatenated operators
/// `[A_σ1 | A_σ2 | …]` and the initial vector are normalized
/// exponential draws, i.e. flat Dirichlet samples.
pub fn random_hmm(state_count: usize, alphabet: &Alphabet, seed: u64) -> Result<Hmm> {
    if state_count == 0 {
        return Err(Error::OutOfRange("state count must be positive".into()));
    }
    if alphabet.is_empty() {
        return Err(Error::EmptyAlphabet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = state_count;
    let k = alphabet.len();
    let initial = dirichlet(&mut rng, n);
    let mut mats = vec![Matrix::zeros(n); k];
    for s in 0..n {
        let row = dirichlet(&mut rng, n * k);
        for (j, &p) in row.iter().enumerate() {
            mats[j / n].set(s, j % n, p);
        }
    }
    Hmm::new(initial, alphabet.symbols().iter().copied().zip(mats).collect())
}

fn dirichlet(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..len)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln() + f64::MIN_POSITIVE)
        .collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}
