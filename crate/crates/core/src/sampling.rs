//! Exact ancestral sampling of derivations from a forward table.
//!
//! A derivation is drawn top-down over labels `(a, s, t)`: a nonterminal
//! plus the HMM states entering and leaving its span. The root pair is
//! drawn proportionally to `π'[s] · F_L[S][s][t]`, an internal node picks
//! `(rule, split, middle state)` proportionally to
//! `F_m[b][s][u] · F_{l-m}[c][u][t]`, and a leaf picks its terminal
//! proportionally to `A_σ[s, t]`. The yielded string has probability
//! `f_G(w) · f_A(w) / Z`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grammar::CnfGrammar;
use crate::hmm::Hmm;
use crate::inference::ForwardTable;

/// Local weight totals below this abort sampling instead of renormalizing.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Draws per RNG stream in the parallel drivers. Fixed so results do not
/// depend on the number of worker threads.
pub const STREAM_CHUNK: usize = 4096;

/// `(seed, stream)` pair identifying an independent RNG stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        RngSeed { stream, ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum NodeKind {
    Leaf {
        symbol: char,
    },
    Binary {
        /// Index into [`CnfGrammar::binary_rules`].
        rule: usize,
        /// Length of the left child's span.
        split: usize,
        mid_state: usize,
        left: usize,
        right: usize,
    },
}

/// One node of a sampled derivation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    pub nonterminal: usize,
    pub position: usize,
    pub length: usize,
    pub from_state: usize,
    pub to_state: usize,
    /// Sum of the local choice weights divided by the table entry; 1 up
    /// to rounding.
    pub local_mass: f64,
    pub kind: NodeKind,
}

/// A sampled string with its derivation. `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleTrace {
    pub string: String,
    pub nodes: Vec<TreeNode>,
    /// `π'[s_0] · Π_leaves A_σ[s, t]` along the sampled state path.
    pub weight: f64,
}

impl SampleTrace {
    /// Bracketed derivation with state labels, e.g. `(S@0>1 (A@0>0 'a') …)`.
    pub fn tree_string(&self, grammar: &CnfGrammar) -> String {
        let mut out = String::new();
        self.write_node(grammar, 0, true, &mut out);
        out
    }

    /// Bracketed derivation without states; identifies the tree itself.
    pub fn tree_shape(&self, grammar: &CnfGrammar) -> String {
        let mut out = String::new();
        self.write_node(grammar, 0, false, &mut out);
        out
    }

    fn write_node(&self, grammar: &CnfGrammar, i: usize, states: bool, out: &mut String) {
        let node = &self.nodes[i];
        out.push('(');
        out.push_str(grammar.name(node.nonterminal));
        if states {
            let _ = write!(out, "@{}>{}", node.from_state, node.to_state);
        }
        match node.kind {
            NodeKind::Leaf { symbol } => {
                let _ = write!(out, " '{symbol}'");
            }
            NodeKind::Binary { left, right, .. } => {
                out.push(' ');
                self.write_node(grammar, left, states, out);
                out.push(' ');
                self.write_node(grammar, right, states, out);
            }
        }
        out.push(')');
    }
}

/// Sampler over a shared, read-only forward table.
#[derive(Debug)]
pub struct Sampler<'a> {
    grammar: &'a CnfGrammar,
    hmm: &'a Hmm,
    table: &'a ForwardTable,
    length: usize,
    mass: f64,
}

impl<'a> Sampler<'a> {
    pub fn new(
        grammar: &'a CnfGrammar,
        hmm: &'a Hmm,
        table: &'a ForwardTable,
        length: usize,
    ) -> Result<Self> {
        if !table.matches(grammar, hmm, length) {
            return Err(Error::TableMismatch(format!(
                "table of length {} over {} nonterminals and {} states",
                table.length(),
                table.nonterminal_count(),
                table.state_count()
            )));
        }
        let mass = table.mass(length);
        if mass <= 0.0 {
            return Err(Error::EmptySupport);
        }
        Ok(Sampler {
            grammar,
            hmm,
            table,
            length,
            mass,
        })
    }

    /// `Z` for the sampled length.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SampleTrace> {
        let ns = self.table.state_count();
        let l = self.length;
        let start = self.grammar.start();
        let initial = self.hmm.initial();

        let root_weight = |k: usize| {
            let (s, t) = (k / ns, k % ns);
            initial[s] * self.table.get(l, start, s, t)
        };
        let (k, total) = draw(rng, ns * ns, root_weight)?;
        let (s0, t0) = (k / ns, k % ns);

        let mut nodes = vec![TreeNode {
            nonterminal: start,
            position: 0,
            length: l,
            from_state: s0,
            to_state: t0,
            local_mass: total / self.mass,
            kind: NodeKind::Leaf { symbol: '\0' },
        }];
        let mut chars = vec!['\0'; l];
        let mut weight = initial[s0];
        let mut pending = vec![0usize];
        while let Some(i) = pending.pop() {
            let TreeNode {
                nonterminal: a,
                position,
                length: span,
                from_state: s,
                to_state: t,
                ..
            } = nodes[i];
            let entry = self.table.get(span, a, s, t);
            if span == 1 {
                let lexical = self.grammar.lexical_rules();
                let weight_of = |j: usize| {
                    let r = lexical[j];
                    if r.lhs != a {
                        return 0.0;
                    }
                    self.hmm.operator_for(r.symbol).map_or(0.0, |m| m.get(s, t))
                };
                let (j, total) = draw(rng, lexical.len(), weight_of)?;
                let symbol = lexical[j].symbol;
                chars[position] = symbol;
                weight *= weight_of(j);
                nodes[i].local_mass = total / entry;
                nodes[i].kind = NodeKind::Leaf { symbol };
                continue;
            }
            let rules = self.grammar.binary_rules_for(a);
            let per_split = rules.len() * ns;
            // Candidate k = ((m - 1) * rules + rule) * ns + u: ascending split,
            // rule index, middle state.
            let candidate = |k: usize| {
                let m = k / per_split + 1;
                let r = self.grammar.binary_rules()[rules[(k / ns) % rules.len()]];
                let u = k % ns;
                (m, r, u)
            };
            let weight_of = |k: usize| {
                let (m, r, u) = candidate(k);
                self.table.get(m, r.left, s, u) * self.table.get(span - m, r.right, u, t)
            };
            let (k, total) = draw(rng, (span - 1) * per_split, weight_of)?;
            let (m, r, u) = candidate(k);
            let left = nodes.len();
            let right = left + 1;
            nodes.push(TreeNode {
                nonterminal: r.left,
                position,
                length: m,
                from_state: s,
                to_state: u,
                local_mass: 0.0,
                kind: NodeKind::Leaf { symbol: '\0' },
            });
            nodes.push(TreeNode {
                nonterminal: r.right,
                position: position + m,
                length: span - m,
                from_state: u,
                to_state: t,
                local_mass: 0.0,
                kind: NodeKind::Leaf { symbol: '\0' },
            });
            nodes[i].local_mass = total / entry;
            nodes[i].kind = NodeKind::Binary {
                rule: rules[(k / ns) % rules.len()],
                split: m,
                mid_state: u,
                left,
                right,
            };
            pending.push(right);
            pending.push(left);
        }
        Ok(SampleTrace {
            string: chars.into_iter().collect(),
            nodes,
            weight,
        })
    }

    /// `count` draws from streams `(seed, 0), (seed, 1), …`, each stream
    /// serving [`STREAM_CHUNK`] consecutive draws.
    pub fn sample_many(&self, count: usize, seed: u64) -> Result<Vec<SampleTrace>> {
        streamed(count, seed, |rng| self.sample(rng))
    }
}

/// Inverse-CDF draw over candidates `0..count` with the given weights,
/// using one uniform deviate. Returns the index and the weight total.
fn draw<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    weight: impl Fn(usize) -> f64,
) -> Result<(usize, f64)> {
    let total: f64 = (0..count).map(&weight).sum();
    if total.is_nan() || total < UNDERFLOW_FLOOR {
        return Err(Error::Underflow(total));
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for k in 0..count {
        let w = weight(k);
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last_positive = Some(k);
        if target < acc {
            return Ok((k, total));
        }
    }
    Ok((last_positive.expect("total is positive"), total))
}

/// Runs `count` independent trials in fixed-size chunks, chunk `i` on RNG
/// stream `(seed, i)`, concatenating results in chunk order.
pub(crate) fn streamed<T, F>(count: usize, seed: u64, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    let chunks = count.div_ceil(STREAM_CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = RngSeed::new(seed).with_stream(c as u64).rng();
            let n = STREAM_CHUNK.min(count - c * STREAM_CHUNK);
            (0..n).map(|_| trial(&mut rng)).collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// One draw, building the forward table on the fly.
pub fn sample<R: Rng + ?Sized>(
    grammar: &CnfGrammar,
    hmm: &Hmm,
    length: usize,
    table: &ForwardTable,
    rng: &mut R,
) -> Result<SampleTrace> {
    Sampler::new(grammar, hmm, table, length)?.sample(rng)
}

/// `count` draws sharing one forward table.
pub fn sample_many(
    grammar: &CnfGrammar,
    hmm: &Hmm,
    length: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<SampleTrace>> {
    let table = ForwardTable::build(grammar, hmm, length)?;
    Sampler::new(grammar, hmm, &table, length)?.sample_many(count, seed)
}
