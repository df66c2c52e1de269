//! Brute-force reference computations over `Σ^L`.
//!
//! Everything here enumerates the HMM alphabet exhaustively and sums in
//! lexicographic order with compensated summation, so these values can
//! serve as ground truth for the dynamic programs.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grammar::CnfGrammar;
use crate::hmm::Hmm;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Calls `visit(word, f_G(w) as f64, f_A(w))` for every `w ∈ Σ^L`.
fn for_each_word(
    grammar: &CnfGrammar,
    hmm: &Hmm,
    length: usize,
    mut visit: impl FnMut(&[char], f64, f64),
) -> Result<()> {
    if !grammar.alphabet().is_subset_of(hmm.alphabet()) {
        return Err(Error::AlphabetMismatch(format!(
            "grammar terminals {} are not all in the HMM alphabet {}",
            grammar.alphabet(),
            hmm.alphabet()
        )));
    }
    if length == 0 {
        return Err(Error::EmptyWord);
    }
    let sigma = hmm.alphabet();
    for w in sigma.words(length)? {
        let chars: Vec<char> = w.iter().map(|&i| sigma.symbols()[i]).collect();
        let count = grammar.count_unchecked(&chars);
        let f_hmm = hmm.likelihood_of_indices(&w);
        visit(&chars, count.to_f64(), f_hmm);
    }
    Ok(())
}

/// `Σ_{w ∈ Σ^L} f_G(w) · f_A(w)`.
pub fn brute_force_weighted_mass(grammar: &CnfGrammar, hmm: &Hmm, length: usize) -> Result<f64> {
    let mut acc = CompensatedSum::default();
    for_each_word(grammar, hmm, length, |_, f, p| {
        if f > 0.0 {
            acc.add(f * p);
        }
    })?;
    Ok(acc.value())
}

/// `f_A(L_G ∩ Σ^L) = Σ_{w ∈ L_G, |w| = L} f_A(w)`.
pub fn brute_force_likelihood(grammar: &CnfGrammar, hmm: &Hmm, length: usize) -> Result<f64> {
    let mut acc = CompensatedSum::default();
    for_each_word(grammar, hmm, length, |_, f, p| {
        if f > 0.0 {
            acc.add(p);
        }
    })?;
    Ok(acc.value())
}

/// `f_A(L_{G1} ∩ L_{G2} ∩ Σ^L)` by joint membership.
pub fn brute_force_intersection_likelihood(
    first: &CnfGrammar,
    second: &CnfGrammar,
    hmm: &Hmm,
    length: usize,
) -> Result<f64> {
    if !second.alphabet().is_subset_of(hmm.alphabet()) {
        return Err(Error::AlphabetMismatch(format!(
            "grammar terminals {} are not all in the HMM alphabet {}",
            second.alphabet(),
            hmm.alphabet()
        )));
    }
    let mut acc = CompensatedSum::default();
    for_each_word(first, hmm, length, |w, f, p| {
        if f > 0.0 && !second.count_unchecked(w).is_zero() {
            acc.add(p);
        }
    })?;
    Ok(acc.value())
}

/// Normalized proposal distribution `f_G(w) f_A(w) / Z` over `Σ^L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactDistribution {
    /// Only words with positive probability are listed.
    pub probabilities: BTreeMap<String, f64>,
    /// `Σ_w f_G(w) f_A(w)`.
    pub z: f64,
    /// `f_A(L_G ∩ Σ^L)`.
    pub likelihood: f64,
}

impl ExactDistribution {
    pub fn probability(&self, word: &str) -> f64 {
        self.probabilities.get(word).copied().unwrap_or(0.0)
    }
}

pub fn exact_distribution(
    grammar: &CnfGrammar,
    hmm: &Hmm,
    length: usize,
) -> Result<ExactDistribution> {
    let mut weights = Vec::new();
    let mut z = CompensatedSum::default();
    let mut likelihood = CompensatedSum::default();
    for_each_word(grammar, hmm, length, |w, f, p| {
        if f > 0.0 && p > 0.0 {
            weights.push((w.iter().collect::<String>(), f * p));
            z.add(f * p);
            likelihood.add(p);
        }
    })?;
    let z = z.value();
    if z <= 0.0 {
        return Err(Error::EmptySupport);
    }
    Ok(ExactDistribution {
        probabilities: weights.into_iter().map(|(w, x)| (w, x / z)).collect(),
        z,
        likelihood: likelihood.value(),
    })
}

/// Relative frequencies of the given words.
pub fn empirical_distribution<'a, I>(words: I) -> BTreeMap<String, f64>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut total = 0usize;
    for w in words {
        *counts.entry(w.to_owned()).or_default() += 1;
        total += 1;
    }
    counts
        .into_iter()
        .map(|(w, c)| (w, c as f64 / total as f64))
        .collect()
}

/// `½ Σ_w |p̂(w) − p(w)|` over the union of both supports.
pub fn tv_distance(empirical: &BTreeMap<String, f64>, exact: &ExactDistribution) -> f64 {
    tv_between(empirical, &exact.probabilities)
}

/// Total variation between two finitely supported distributions.
pub fn tv_between(p: &BTreeMap<String, f64>, q: &BTreeMap<String, f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for (w, &x) in p {
        acc.add((x - q.get(w).copied().unwrap_or(0.0)).abs());
    }
    for (w, &y) in q {
        if !p.contains_key(w) {
            acc.add(y.abs());
        }
    }
    0.5 * acc.value()
}
