//! Derivation counting with the CYK-style inside recursion.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::CnfGrammar;
use crate::alphabet::check_guard;
use crate::error::{Error, Result};

/// Number of derivation trees yielding a string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DerivationCount(pub BigUint);

impl DerivationCount {
    pub fn zero() -> Self {
        DerivationCount(BigUint::zero())
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Lossy conversion, `inf` when out of range.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }
}

impl From<u64> for DerivationCount {
    fn from(v: u64) -> Self {
        DerivationCount(BigUint::from(v))
    }
}

impl From<BigUint> for DerivationCount {
    fn from(v: BigUint) -> Self {
        DerivationCount(v)
    }
}

impl fmt::Display for DerivationCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Cell arithmetic for the inside chart; `mul_add` reports overflow as `false`.
trait Cell: Clone {
    fn nil() -> Self;
    fn unit() -> Self;
    fn is_nil(&self) -> bool;
    fn mul_add(&mut self, a: &Self, b: &Self) -> bool;
}

impl Cell for u128 {
    fn nil() -> Self {
        0
    }
    fn unit() -> Self {
        1
    }
    fn is_nil(&self) -> bool {
        *self == 0
    }
    fn mul_add(&mut self, a: &Self, b: &Self) -> bool {
        match a.checked_mul(*b).and_then(|p| self.checked_add(p)) {
            Some(v) => {
                *self = v;
                true
            }
            None => false,
        }
    }
}

impl Cell for BigUint {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        self.is_zero()
    }
    fn mul_add(&mut self, a: &Self, b: &Self) -> bool {
        *self += a * b;
        true
    }
}

impl CnfGrammar {
    /// Inside chart over all spans; `None` on overflow of the cell type.
    /// Symbols outside the alphabet simply have no lexical heads.
    fn inside_chart<C: Cell>(&self, word: &[char]) -> Option<Vec<C>> {
        let len = word.len();
        let n = self.nonterminal_count();
        // chart[span_len - 1][start] is a vector over nonterminals.
        let mut chart: Vec<Vec<Vec<C>>> = Vec::with_capacity(len);
        chart.push(
            word.iter()
                .map(|&c| {
                    let mut cell = vec![C::nil(); n];
                    for &a in self.lexical_heads(c) {
                        cell[a] = C::unit();
                    }
                    cell
                })
                .collect(),
        );
        for span in 2..=len {
            let mut row = Vec::with_capacity(len - span + 1);
            for i in 0..=len - span {
                let mut cell = vec![C::nil(); n];
                for m in 1..span {
                    let left = &chart[m - 1][i];
                    let right = &chart[span - m - 1][i + m];
                    for r in self.binary_rules() {
                        let (l, rr) = (&left[r.left], &right[r.right]);
                        if l.is_nil() || rr.is_nil() {
                            continue;
                        }
                        if !cell[r.lhs].mul_add(l, rr) {
                            return None;
                        }
                    }
                }
                row.push(cell);
            }
            chart.push(row);
        }
        chart.pop().and_then(|mut row| row.pop())
    }

    /// Inside vector without alphabet validation; symbols outside the
    /// alphabet yield all-zero counts.
    pub(crate) fn inside_unchecked(&self, word: &[char]) -> Vec<DerivationCount> {
        if word.is_empty() {
            return vec![DerivationCount::zero(); self.nonterminal_count()];
        }
        match self.inside_chart::<u128>(word) {
            Some(cell) => cell
                .into_iter()
                .map(|v| DerivationCount(BigUint::from(v)))
                .collect(),
            None => self
                .inside_chart::<BigUint>(word)
                .expect("big integers do not overflow")
                .into_iter()
                .map(DerivationCount)
                .collect(),
        }
    }

    pub(crate) fn count_unchecked(&self, word: &[char]) -> DerivationCount {
        self.inside_unchecked(word).swap_remove(self.start())
    }

    /// Number of derivation trees rooted at each nonterminal yielding `word`.
    pub fn inside_vector(&self, word: &str) -> Result<Vec<DerivationCount>> {
        self.check_word(word)?;
        let chars: Vec<char> = word.chars().collect();
        Ok(self.inside_unchecked(&chars))
    }

    /// `f_G(w)`: derivation trees from the start symbol; zero iff `w ∉ L(G)`.
    pub fn derivation_count(&self, word: &str) -> Result<DerivationCount> {
        self.check_word(word)?;
        let chars: Vec<char> = word.chars().collect();
        Ok(self.count_unchecked(&chars))
    }

    /// `L(G) ∩ Σ^length` by exhaustive membership testing.
    pub fn enumerate_language(&self, length: usize) -> Result<BTreeSet<String>> {
        let alphabet = self.alphabet();
        let mut out = BTreeSet::new();
        if length == 0 {
            return Ok(out);
        }
        for w in alphabet.words(length)? {
            let chars: Vec<char> = w.iter().map(|&i| alphabet.symbols()[i]).collect();
            if !self.count_unchecked(&chars).is_zero() {
                out.insert(chars.into_iter().collect());
            }
        }
        Ok(out)
    }

    /// `max_{w ∈ Σ^length} f_G(w)` by brute force.
    pub fn max_ambiguity(&self, length: usize) -> Result<DerivationCount> {
        let alphabet = self.alphabet();
        check_guard(alphabet.len(), length)?;
        let mut best = DerivationCount::zero();
        if length == 0 {
            return Ok(best);
        }
        for w in alphabet.words(length)? {
            let chars: Vec<char> = w.iter().map(|&i| alphabet.symbols()[i]).collect();
            let c = self.count_unchecked(&chars);
            if c > best {
                best = c;
            }
        }
        Ok(best)
    }
}

/// Caller-supplied upper bound `B(L) >= max_{|w| = L} f_G(w)`.
#[derive(Clone)]
pub struct AmbiguityBound {
    bound: Arc<dyn Fn(usize) -> BigUint + Send + Sync>,
    description: String,
}

impl AmbiguityBound {
    /// `B(L) = value` for every length.
    pub fn constant(value: u64) -> Self {
        AmbiguityBound {
            bound: Arc::new(move |_| BigUint::from(value)),
            description: format!("{value}"),
        }
    }

    /// `B(L) = coefficient * L^degree`.
    pub fn polynomial(coefficient: u64, degree: u32) -> Self {
        AmbiguityBound {
            bound: Arc::new(move |l| BigUint::from(coefficient) * BigUint::from(l).pow(degree)),
            description: format!("{coefficient}*L^{degree}"),
        }
    }

    pub fn from_fn<F>(description: impl Into<String>, f: F) -> Self
    where
        F: Fn(usize) -> BigUint + Send + Sync + 'static,
    {
        AmbiguityBound {
            bound: Arc::new(f),
            description: description.into(),
        }
    }

    /// `B(length)`; errors when the bound is below 1.
    pub fn at(&self, length: usize) -> Result<BigUint> {
        let b = (self.bound)(length);
        if b.is_zero() {
            return Err(Error::OutOfRange(format!(
                "ambiguity bound {} is 0 at length {length}",
                self.description
            )));
        }
        Ok(b)
    }

    /// Checks the bound against [`CnfGrammar::max_ambiguity`] at `length`.
    pub fn holds_for(&self, grammar: &CnfGrammar, length: usize) -> Result<bool> {
        let b = self.at(length)?;
        Ok(grammar.max_ambiguity(length)?.0 <= b)
    }
}

impl fmt::Debug for AmbiguityBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AmbiguityBound({})", self.description)
    }
}

impl fmt::Display for AmbiguityBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.description)
    }
}
