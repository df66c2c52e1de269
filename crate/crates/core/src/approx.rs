//! Randomized approximation of `f_A(L_G ∩ Σ^L)` for grammars of bounded
//! ambiguity.
//!
//! Proposals `w` are drawn with probability `f_G(w) f_A(w) / Z` and
//! accepted with probability exactly `1 / f_G(w)`. The acceptance rate is
//! `p = f_A(L_G ∩ Σ^L) / Z >= 1 / B(L)`, so `Z · p̂` estimates the
//! likelihood, and `N = ⌈ln(2/δ) B² / (2ε²)⌉` draws put `p̂` within
//! `ε / B` of `p` (hence the estimate within relative error `ε`) with
//! probability at least `1 - δ` by Hoeffding's inequality.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grammar::{AmbiguityBound, CnfGrammar, DerivationCount};
use crate::hmm::Hmm;
use crate::inference::ForwardTable;
use crate::sampling::{self, Sampler};

/// Default failure probability `δ`; the estimate is within `ε` with
/// probability at least 3/4.
pub const DEFAULT_FAILURE_PROBABILITY: f64 = 0.25;

/// Hoeffding sample size `⌈ln(2/δ) · B² / (2ε²)⌉`.
pub fn sample_size(bound: &BigUint, epsilon: f64, failure: f64) -> Result<u64> {
    if bound.is_zero() {
        return Err(Error::OutOfRange("ambiguity bound must be >= 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange(format!("epsilon {epsilon} not in (0, 1)")));
    }
    if !(failure > 0.0 && failure < 1.0) {
        return Err(Error::OutOfRange(format!(
            "failure probability {failure} not in (0, 1)"
        )));
    }
    let b = bound.to_f64().unwrap_or(f64::INFINITY);
    let n = ((2.0 / failure).ln() * b * b / (2.0 * epsilon * epsilon)).ceil();
    if !n.is_finite() || n > u64::MAX as f64 {
        return Err(Error::OutOfRange(format!(
            "sample size {n} for bound {bound} does not fit"
        )));
    }
    Ok(n as u64)
}

/// Uniform integer in `[0, bound)` by rejection from `bits(bound - 1)`-bit
/// blocks.
fn uniform_below<R: Rng + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    let max = bound - 1u32;
    let bits = max.bits();
    if bits == 0 {
        return BigUint::zero();
    }
    let words = bits.div_ceil(32) as usize;
    let top_bits = bits - 32 * (words as u64 - 1);
    let top_mask = if top_bits == 32 {
        u32::MAX
    } else {
        (1u32 << top_bits) - 1
    };
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.gen::<u32>()).collect();
        *digits.last_mut().expect("at least one word") &= top_mask;
        let candidate = BigUint::from_slice(&digits);
        if candidate <= max {
            return candidate;
        }
    }
}

/// Returns `true` with probability exactly `1 / count`.
pub fn exact_bernoulli<R: Rng + ?Sized>(count: &DerivationCount, rng: &mut R) -> Result<bool> {
    if count.is_zero() {
        return Err(Error::OutOfRange(
            "Bernoulli(1/count) needs count >= 1".into(),
        ));
    }
    if count.value().is_one() {
        return Ok(true);
    }
    Ok(uniform_below(rng, count.value()).is_zero())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FprasReport {
    /// `z_weighted · accepted / samples`.
    pub estimate: f64,
    /// `Z = Σ_w f_G(w) f_A(w)`.
    pub z_weighted: f64,
    pub samples: u64,
    pub accepted: u64,
    pub epsilon: f64,
    pub failure_probability: f64,
    /// `B(L)` as a decimal string.
    pub bound_value: String,
    pub seed: u64,
}

impl FprasReport {
    pub fn acceptance_rate(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.accepted as f64 / self.samples as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct FprasConfig {
    pub epsilon: f64,
    pub failure_probability: f64,
    pub bound: AmbiguityBound,
    pub seed: u64,
}

impl FprasConfig {
    pub fn new(epsilon: f64, bound: AmbiguityBound, seed: u64) -> Self {
        FprasConfig {
            epsilon,
            failure_probability: DEFAULT_FAILURE_PROBABILITY,
            bound,
            seed,
        }
    }
}

/// Rejection estimator of `f_A(L_G ∩ Σ^L)`.
///
/// Trials run in fixed chunks on RNG streams `(seed, chunk)`, so the report
/// does not depend on the number of threads.
pub fn fpras_likelihood(
    grammar: &CnfGrammar,
    hmm: &Hmm,
    length: usize,
    config: &FprasConfig,
) -> Result<FprasReport> {
    let bound = config.bound.at(length)?;
    let samples = sample_size(&bound, config.epsilon, config.failure_probability)?;
    let table = ForwardTable::build(grammar, hmm, length)?;
    let z = table.mass(length);
    let mut report = FprasReport {
        estimate: 0.0,
        z_weighted: z,
        samples: 0,
        accepted: 0,
        epsilon: config.epsilon,
        failure_probability: config.failure_probability,
        bound_value: bound.to_string(),
        seed: config.seed,
    };
    if z == 0.0 {
        return Ok(report);
    }
    let sampler = Sampler::new(grammar, hmm, &table, length)?;
    let count = usize::try_from(samples)
        .map_err(|_| Error::OutOfRange(format!("sample size {samples} too large")))?;
    let outcomes = sampling::streamed(count, config.seed, |rng| {
        let trace = sampler.sample(rng)?;
        let chars: Vec<char> = trace.string.chars().collect();
        let f = grammar.count_unchecked(&chars);
        exact_bernoulli(&f, rng)
    })?;
    let accepted = outcomes.iter().filter(|&&x| x).count() as u64;
    report.samples = samples;
    report.accepted = accepted;
    report.estimate = z * accepted as f64 / samples as f64;
    Ok(report)
}
