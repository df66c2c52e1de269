//! Forward-table dynamic program for grammar-constrained HMM mass.
//!
//! Layer `l` holds, for every nonterminal `a` and state pair `(s, t)`,
//!
//! ```text
//! F_l[a][s][t] = Σ_{w ∈ Σ^l} (#trees rooted at a yielding w) · A_w[s, t]
//! ```
//!
//! Layers are built bottom-up with
//!
//! ```text
//! F_l[a][s][t] = Σ_{a → b c} Σ_{m=1}^{l-1} Σ_u F_m[b][s][u] · F_{l-m}[c][u][t]
//! ```
//!
//! which is the Kronecker-form recursion `β^(l) = (M ⊗ T)₁ · P · Σ_m β^(m) ⊗ β^(l-m)`
//! with every operator applied through index arithmetic: `P` is the
//! [`InterleaveShuffle`], `T` is the contraction over the middle state `u`
//! and `M` is iteration over the binary rules. Layer `l` costs
//! `O(l · |G| · n'^3)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grammar::CnfGrammar;
use crate::hmm::Hmm;

/// Tolerance above 1 tolerated before an unambiguity attestation is
/// considered broken.
pub const ATTESTATION_TOLERANCE: f64 = 1e-9;

/// All forward layers `F_1 … F_L` for a (grammar, HMM) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTable {
    nonterminals: usize,
    states: usize,
    start: usize,
    initial: Vec<f64>,
    /// `layers[l - 1][(a * n' + s) * n' + t] = F_l[a][s][t]`.
    layers: Vec<Vec<f64>>,
}

impl ForwardTable {
    /// Builds layers `1..=length`.
    pub fn build(grammar: &CnfGrammar, hmm: &Hmm, length: usize) -> Result<Self> {
        check_alphabets(grammar, hmm)?;
        if length == 0 {
            return Err(Error::EmptyWord);
        }
        let n = grammar.nonterminal_count();
        let ns = hmm.state_count();
        let block = ns * ns;

        let mut first = vec![0.0; n * block];
        for rule in grammar.lexical_rules() {
            let op = hmm.operator_for(rule.symbol).expect("alphabet checked");
            let dst = &mut first[rule.lhs * block..(rule.lhs + 1) * block];
            for (d, &x) in dst.iter_mut().zip(op.as_slice()) {
                *d += x;
            }
        }
        let mut layers = Vec::with_capacity(length);
        layers.push(first);

        for l in 2..=length {
            let mut layer = vec![0.0; n * block];
            let done = &layers;
            layer
                .par_chunks_mut(block)
                .enumerate()
                .for_each(|(a, out)| combine_into(out, grammar, a, l, done, ns));
            layers.push(layer);
        }
        Ok(ForwardTable {
            nonterminals: n,
            states: ns,
            start: grammar.start(),
            initial: hmm.initial().to_vec(),
            layers,
        })
    }

    pub fn length(&self) -> usize {
        self.layers.len()
    }

    pub fn nonterminal_count(&self) -> usize {
        self.nonterminals
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    /// `F_l[a][s][t]`.
    #[inline]
    pub fn get(&self, l: usize, a: usize, s: usize, t: usize) -> f64 {
        self.layers[l - 1][(a * self.states + s) * self.states + t]
    }

    /// Layer `l` as the flat forward vector, indexed `(a, s * n' + t)`.
    pub fn layer(&self, l: usize) -> &[f64] {
        &self.layers[l - 1]
    }

    /// `n' × n'` block `F_l[a]`, row-major.
    pub fn block(&self, l: usize, a: usize) -> &[f64] {
        let b = self.states * self.states;
        &self.layers[l - 1][a * b..(a + 1) * b]
    }

    /// `Z_l = Σ_{s,t} π'[s] · F_l[S][s][t]`, summed in ascending `(s, t)`.
    pub fn mass(&self, l: usize) -> f64 {
        let block = self.block(l, self.start);
        let ns = self.states;
        let mut z = 0.0;
        for s in 0..ns {
            for t in 0..ns {
                z += self.initial[s] * block[s * ns + t];
            }
        }
        z
    }

    /// True when this table was built for `grammar` and `hmm` and covers `length`.
    pub fn matches(&self, grammar: &CnfGrammar, hmm: &Hmm, length: usize) -> bool {
        self.nonterminals == grammar.nonterminal_count()
            && self.start == grammar.start()
            && self.states == hmm.state_count()
            && self.initial == hmm.initial()
            && length >= 1
            && length <= self.length()
    }
}

/// Accumulates `F_l[a]` into `out` in the fixed order: ascending split `m`,
/// ascending rule index, ascending middle state `u`.
fn combine_into(
    out: &mut [f64],
    grammar: &CnfGrammar,
    a: usize,
    l: usize,
    layers: &[Vec<f64>],
    ns: usize,
) {
    let block = ns * ns;
    let rules = grammar.binary_rules_for(a);
    if rules.is_empty() {
        return;
    }
    for m in 1..l {
        let left_layer = &layers[m - 1];
        let right_layer = &layers[l - m - 1];
        for &ri in rules {
            let r = grammar.binary_rules()[ri];
            let x = &left_layer[r.left * block..(r.left + 1) * block];
            let y = &right_layer[r.right * block..(r.right + 1) * block];
            for s in 0..ns {
                let row = &mut out[s * ns..(s + 1) * ns];
                for u in 0..ns {
                    let xsu = x[s * ns + u];
                    if xsu == 0.0 {
                        continue;
                    }
                    let yrow = &y[u * ns..(u + 1) * ns];
                    for (o, &yut) in row.iter_mut().zip(yrow) {
                        *o += xsu * yut;
                    }
                }
            }
        }
    }
}

fn check_alphabets(grammar: &CnfGrammar, hmm: &Hmm) -> Result<()> {
    if grammar.alphabet().is_subset_of(hmm.alphabet()) {
        Ok(())
    } else {
        Err(Error::AlphabetMismatch(format!(
            "grammar terminals {} are not all in the HMM alphabet {}",
            grammar.alphabet(),
            hmm.alphabet()
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikelihoodMode {
    /// `Σ_w f_G(w) f_A(w)`, meaningful for any grammar.
    WeightedMass,
    /// Exact `f_A(L_G ∩ Σ^L)` under an unambiguity attestation.
    UcfgExact,
    /// `Σ_{l ≤ L} f_A(L_G ∩ Σ^l)` under an unambiguity attestation.
    UptoL,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodResult {
    pub value: f64,
    pub length: usize,
    pub mode: LikelihoodMode,
}

/// `Z = Σ_{w ∈ Σ^L} f_G(w) · f_A(w)`.
pub fn weighted_mass(grammar: &CnfGrammar, hmm: &Hmm, length: usize) -> Result<LikelihoodResult> {
    let table = ForwardTable::build(grammar, hmm, length)?;
    Ok(LikelihoodResult {
        value: table.mass(length),
        length,
        mode: LikelihoodMode::WeightedMass,
    })
}

fn attested_value(value: f64, length: usize) -> Result<f64> {
    if value > 1.0 + ATTESTATION_TOLERANCE {
        return Err(Error::AttestationViolated { value, length });
    }
    Ok(value)
}

/// Exact `f_A(L_G ∩ Σ^L)` for a grammar the caller attests to be unambiguous.
///
/// Unambiguity cannot be decided here; a value above `1 + 1e-9` proves the
/// attestation wrong and is reported as an error.
pub fn ucfg_likelihood(
    grammar: &CnfGrammar,
    hmm: &Hmm,
    length: usize,
    unambiguity_attested: bool,
) -> Result<LikelihoodResult> {
    if !unambiguity_attested {
        return Err(Error::AttestationMissing);
    }
    let table = ForwardTable::build(grammar, hmm, length)?;
    Ok(LikelihoodResult {
        value: attested_value(table.mass(length), length)?,
        length,
        mode: LikelihoodMode::UcfgExact,
    })
}

/// `Σ_{l=1}^{L} f_A(L_G ∩ Σ^l)` from one shared table. The attestation
/// check applies to each length separately; the sum may exceed 1.
pub fn likelihood_upto(
    grammar: &CnfGrammar,
    hmm: &Hmm,
    length: usize,
    unambiguity_attested: bool,
) -> Result<LikelihoodResult> {
    if !unambiguity_attested {
        return Err(Error::AttestationMissing);
    }
    let table = ForwardTable::build(grammar, hmm, length)?;
    let mut total = 0.0;
    for l in 1..=length {
        total += attested_value(table.mass(l), l)?;
    }
    Ok(LikelihoodResult {
        value: total,
        length,
        mode: LikelihoodMode::UptoL,
    })
}

/// The permutation `P` taking `β^(m) ⊗ β^(l-m)`, laid out as
/// `[a][p][b][q]` (nonterminal, state-pair, nonterminal, state-pair), to the
/// layout `[a][b][p][q]` expected by the columns of `(M ⊗ T)₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterleaveShuffle {
    pub nonterminals: usize,
    pub pairs: usize,
}

impl InterleaveShuffle {
    /// Swaps the two middle coordinates; an involution on coordinates.
    pub fn swap_middle<T>(coord: (usize, T, T, usize)) -> (usize, T, T, usize) {
        (coord.0, coord.2, coord.1, coord.3)
    }

    pub fn len(&self) -> usize {
        self.nonterminals * self.nonterminals * self.pairs * self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index in `[a][p][b][q]` → flat index in `[a][b][p][q]`.
    pub fn apply(&self, index: usize) -> usize {
        let (n, p) = (self.nonterminals, self.pairs);
        let q = index % p;
        let b = (index / p) % n;
        let pp = (index / (p * n)) % p;
        let a = index / (p * n * p);
        ((a * n + b) * p + pp) * p + q
    }

    /// Inverse of [`Self::apply`].
    pub fn invert(&self, index: usize) -> usize {
        let (n, p) = (self.nonterminals, self.pairs);
        let q = index % p;
        let pp = (index / p) % p;
        let b = (index / (p * p)) % n;
        let a = index / (p * p * n);
        ((a * p + pp) * n + b) * p + q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::grammar::library::{catalan, dyck, universal};
    use crate::grammar::{parse_grammar, union};
    use crate::hmm::{random_hmm, uniform_hmm};

    fn parens() -> Hmm {
        uniform_hmm(&Alphabet::new("()".chars())).unwrap()
    }

    #[test]
    fn single_lexical_rule_layer() {
        let g = parse_grammar("start S\nS -> 'a'").unwrap();
        let h = uniform_hmm(&Alphabet::new("ab".chars())).unwrap();
        let t = ForwardTable::build(&g, &h, 1).unwrap();
        assert_eq!(t.get(1, 0, 0, 0), 0.5);
    }

    #[test]
    fn dyck_masses() {
        let g = dyck();
        let t = ForwardTable::build(&g, &parens(), 4).unwrap();
        assert_eq!(t.mass(2), 0.25);
        assert_eq!(t.mass(3), 0.0);
        assert_eq!(t.mass(4), 0.125);
    }

    #[test]
    fn catalan_mass() {
        let h = uniform_hmm(&Alphabet::new("a".chars())).unwrap();
        let z = weighted_mass(&catalan('a'), &h, 4).unwrap();
        assert_eq!(z.value, 5.0);
        assert_eq!(z.mode, LikelihoodMode::WeightedMass);
    }

    #[test]
    fn universal_grammar_has_unit_mass() {
        let sigma = Alphabet::new("abc".chars());
        let g = universal(&sigma);
        let h = random_hmm(3, &sigma, 5).unwrap();
        for l in 1..=6 {
            assert!((weighted_mass(&g, &h, l).unwrap().value - 1.0).abs() < 1e-9);
        }
        let uu = union(&g, &g);
        let z = weighted_mass(&uu, &uniform_hmm(&sigma).unwrap(), 3).unwrap();
        assert!((z.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn attestation_handling() {
        let g = dyck();
        assert_eq!(
            ucfg_likelihood(&g, &parens(), 4, false),
            Err(Error::AttestationMissing)
        );
        assert_eq!(ucfg_likelihood(&g, &parens(), 4, true).unwrap().value, 0.125);
        assert_eq!(ucfg_likelihood(&g, &parens(), 3, true).unwrap().value, 0.0);
        let sigma = Alphabet::new("ab".chars());
        let u = universal(&sigma);
        let uu = union(&u, &u);
        match ucfg_likelihood(&uu, &uniform_hmm(&sigma).unwrap(), 2, true) {
            Err(Error::AttestationViolated { value, length: 2 }) => {
                assert!((value - 2.0).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn upto_sums_per_length() {
        let r = likelihood_upto(&dyck(), &parens(), 4, true).unwrap();
        assert_eq!(r.value, 0.375);
        let g = parse_grammar("start S\nS -> A B\nA -> 'a'\nB -> 'b'").unwrap();
        let h = uniform_hmm(&Alphabet::new("ab".chars())).unwrap();
        assert_eq!(likelihood_upto(&g, &h, 1, true).unwrap().value, 0.0);
        let sigma = Alphabet::new("ab".chars());
        let r = likelihood_upto(&universal(&sigma), &uniform_hmm(&sigma).unwrap(), 3, true);
        assert!((r.unwrap().value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_foreign_terminals_and_zero_length() {
        let g = parse_grammar("start S\nS -> 'z'").unwrap();
        assert!(matches!(
            ForwardTable::build(&g, &parens(), 2),
            Err(Error::AlphabetMismatch(_))
        ));
        assert_eq!(
            ForwardTable::build(&dyck(), &parens(), 0),
            Err(Error::EmptyWord)
        );
    }

    #[test]
    fn shuffle_is_a_bijection_with_inverse() {
        let p = InterleaveShuffle {
            nonterminals: 3,
            pairs: 4,
        };
        let mut seen = vec![false; p.len()];
        for i in 0..p.len() {
            let j = p.apply(i);
            assert!(!seen[j]);
            seen[j] = true;
            assert_eq!(p.invert(j), i);
        }
        let c = (1, 2usize, 3usize, 0);
        assert_eq!(InterleaveShuffle::swap_middle(InterleaveShuffle::swap_middle(c)), c);
    }

    /// Materializes `(M ⊗ T)₁ · P · Σ_m β^(m) ⊗ β^(l-m)` densely and checks it
    /// against the unrolled layers.
    #[test]
    fn unrolled_layers_match_materialized_kronecker_form() {
        let g = parse_grammar(
            "start S\nS -> S A\nS -> A B\nA -> B S\nS -> 'x'\nA -> 'y'\nB -> 'x'\nB -> 'y'",
        )
        .unwrap();
        let sigma = Alphabet::new("xy".chars());
        let h = random_hmm(2, &sigma, 3).unwrap();
        let length = 5;
        let table = ForwardTable::build(&g, &h, length).unwrap();
        let n = g.nonterminal_count();
        let ns = h.state_count();
        let p = ns * ns;
        let shuffle = InterleaveShuffle {
            nonterminals: n,
            pairs: p,
        };
        // (M_1 ⊗ T_1): rows (c, φ(s,t)), columns ((a,b), (φ(s,u), φ(u',t))).
        let cols = n * n * p * p;
        let mut mt = vec![0.0; n * p * cols];
        for r in g.binary_rules() {
            for s in 0..ns {
                for t in 0..ns {
                    for u in 0..ns {
                        let row = r.lhs * p + s * ns + t;
                        let col = ((r.left * n + r.right) * p + (s * ns + u)) * p + (u * ns + t);
                        mt[row * cols + col] = 1.0;
                    }
                }
            }
        }
        let mut betas: Vec<Vec<f64>> = vec![table.layer(1).to_vec()];
        for l in 2..=length {
            let mut kron_sum = vec![0.0; cols];
            for m in 1..l {
                let (x, y) = (&betas[m - 1], &betas[l - m - 1]);
                for (i, &xi) in x.iter().enumerate() {
                    for (j, &yj) in y.iter().enumerate() {
                        kron_sum[shuffle.apply(i * (n * p) + j)] += xi * yj;
                    }
                }
            }
            let beta: Vec<f64> = (0..n * p)
                .map(|row| {
                    (0..cols)
                        .map(|c| mt[row * cols + c] * kron_sum[c])
                        .sum()
                })
                .collect();
            for (a, b) in beta.iter().zip(table.layer(l)) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "layer {l}: {a} vs {b}");
            }
            betas.push(beta);
        }
    }
}
