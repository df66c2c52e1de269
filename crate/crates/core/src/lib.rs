//! Grammar-constrained inference for hidden Markov models.
//!
//! Given a context-free grammar `G` in Chomsky normal form and an HMM `A`,
//! this crate computes
//!
//! * the weighted mass `Z = Σ_{|w| = L} f_G(w) · f_A(w)`, where `f_G(w)`
//!   counts derivation trees; for an unambiguous grammar this is exactly
//!   `f_A(L_G ∩ Σ^L)` ([`inference`]);
//! * exact samples from `f_G(w) f_A(w) / Z` ([`sampling`]);
//! * a randomized approximation of `f_A(L_G ∩ Σ^L)` for grammars whose
//!   ambiguity is bounded by a known `B(L)` ([`approx`]);
//! * brute-force references for all of the above ([`oracle`]) and a 3-CNF
//!   model-counting reduction built on them ([`reductions`]).

pub mod alphabet;
pub mod approx;
pub mod cli;
pub mod error;
pub mod grammar;
pub mod hmm;
pub mod inference;
pub mod oracle;
pub mod reductions;
pub mod sampling;

pub use alphabet::Alphabet;
pub use error::{Error, Result};
pub use grammar::{parse_grammar, union, union_all, AmbiguityBound, CnfGrammar, DerivationCount};
pub use hmm::{parse_hmm, random_hmm, uniform_hmm, Hmm};
pub use inference::{
    likelihood_upto, ucfg_likelihood, weighted_mass, ForwardTable, LikelihoodMode,
    LikelihoodResult,
};
pub use sampling::{sample, sample_many, RngSeed, SampleTrace, Sampler};
