//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use gramhmm::grammar::{CnfGrammar, GrammarBuilder, Rule};
use gramhmm::hmm::Hmm;
use gramhmm::Alphabet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counts derivation trees by top-down generation: every tree rooted at
/// `a` with `len` leaves is produced (memoized by yield) and tallied per
/// yielded string. No parsing of a target string is involved.
pub struct TreeEnumerator<'g> {
    grammar: &'g CnfGrammar,
    memo: HashMap<(usize, usize), HashMap<String, u128>>,
}

impl<'g> TreeEnumerator<'g> {
    pub fn new(grammar: &'g CnfGrammar) -> Self {
        TreeEnumerator {
            grammar,
            memo: HashMap::new(),
        }
    }

    /// Map from yield to the number of trees rooted at `a` producing it.
    pub fn yields(&mut self, a: usize, len: usize) -> HashMap<String, u128> {
        if let Some(m) = self.memo.get(&(a, len)) {
            return m.clone();
        }
        let mut out: HashMap<String, u128> = HashMap::new();
        if len == 1 {
            for r in self.grammar.lexical_rules().iter().filter(|r| r.lhs == a) {
                *out.entry(r.symbol.to_string()).or_default() += 1;
            }
        } else {
            let rules: Vec<_> = self
                .grammar
                .binary_rules()
                .iter()
                .filter(|r| r.lhs == a)
                .copied()
                .collect();
            for r in rules {
                for m in 1..len {
                    let left = self.yields(r.left, m);
                    if left.is_empty() {
                        continue;
                    }
                    let right = self.yields(r.right, len - m);
                    for (x, cx) in &left {
                        for (y, cy) in &right {
                            *out.entry(format!("{x}{y}")).or_default() += cx * cy;
                        }
                    }
                }
            }
        }
        self.memo.insert((a, len), out.clone());
        out
    }

    pub fn count(&mut self, word: &str) -> u128 {
        let start = self.grammar.start();
        self.yields(start, word.chars().count())
            .get(word)
            .copied()
            .unwrap_or(0)
    }
}

/// Explicit list of every derivation tree (as a bracketing) of length `len`
/// rooted at `a`. Exponential; small inputs only.
pub fn all_trees(g: &CnfGrammar, a: usize, len: usize) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if len == 1 {
        for r in g.lexical_rules().iter().filter(|r| r.lhs == a) {
            out.push((
                r.symbol.to_string(),
                format!("({} '{}')", g.name(a), r.symbol),
            ));
        }
        return out;
    }
    for r in g.binary_rules().iter().filter(|r| r.lhs == a) {
        for m in 1..len {
            for (wl, tl) in all_trees(g, r.left, m) {
                for (wr, tr) in all_trees(g, r.right, len - m) {
                    out.push((format!("{wl}{wr}"), format!("({} {tl} {tr})", g.name(a))));
                }
            }
        }
    }
    out
}

/// `Σ_paths π[s0] Π A_{w_i}[s_{i-1}, s_i]` over all `n^{L+1}` state paths.
pub fn path_sum_likelihood(hmm: &Hmm, word: &str) -> f64 {
    let n = hmm.state_count();
    let syms: Vec<usize> = word
        .chars()
        .map(|c| hmm.alphabet().index_of(c).unwrap())
        .collect();
    let len = syms.len();
    let mut total = 0.0;
    let mut path = vec![0usize; len + 1];
    loop {
        let mut p = hmm.initial()[path[0]];
        for i in 0..len {
            p *= hmm.operator(syms[i]).get(path[i], path[i + 1]);
        }
        total += p;
        let mut k = 0;
        loop {
            if k > len {
                return total;
            }
            path[k] += 1;
            if path[k] < n {
                break;
            }
            path[k] = 0;
            k += 1;
        }
    }
}

/// All words of length `len` over `alphabet`, lexicographic.
pub fn words(alphabet: &Alphabet, len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| alphabet.symbols().iter().map(move |c| format!("{w}{c}")))
            .collect();
    }
    out
}

/// Balanced-parenthesis check by running depth.
pub fn is_balanced(word: &str) -> bool {
    let mut depth = 0i64;
    for c in word.chars() {
        depth += if c == '(' { 1 } else { -1 };
        if depth < 0 {
            return false;
        }
    }
    depth == 0 && !word.is_empty()
}

/// Random CNF grammar with up to `max_nt` nonterminals over the first
/// `sigma` letters of "abc". Start is `N0`.
pub fn random_grammar(seed: u64, max_nt: usize, sigma: usize) -> CnfGrammar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_nt);
    let letters: Vec<char> = "abc".chars().take(sigma).collect();
    let name = |i: usize| format!("N{i}");
    let mut b = GrammarBuilder::new();
    // Start first so it is interned even if it has only lexical rules.
    let start_symbol = letters[rng.gen_range(0..letters.len())];
    let mut lexical = vec![(0usize, start_symbol)];
    for a in 0..n {
        for &c in &letters {
            if rng.gen_bool(0.35) {
                lexical.push((a, c));
            }
        }
    }
    let mut binary = Vec::new();
    for a in 0..n {
        for l in 0..n {
            for r in 0..n {
                if rng.gen_bool(0.25) {
                    binary.push((a, l, r));
                }
            }
        }
    }
    if n > 1 && !binary.iter().any(|&(a, _, _)| a == 0) {
        binary.push((0, rng.gen_range(0..n), rng.gen_range(0..n)));
    }
    // Interleave rule kinds so interning order varies.
    type Candidate = Result<(usize, usize, usize), (usize, char)>;
    let mut rules: Vec<Candidate> = binary
        .into_iter()
        .map(Ok)
        .chain(lexical.into_iter().map(Err))
        .collect();
    for i in (1..rules.len()).rev() {
        let j = rng.gen_range(0..=i);
        rules.swap(i, j);
    }
    for rule in rules {
        match rule {
            Ok((a, l, r)) => {
                b.binary(&name(a), &name(l), &name(r));
            }
            Err((a, c)) => {
                b.lexical(&name(a), c);
            }
        }
    }
    b.build("N0").unwrap()
}

/// The grammar with one extra rule (monotonicity tests).
pub fn with_extra_rule(g: &CnfGrammar, extra: Rule) -> Option<CnfGrammar> {
    let mut b = GrammarBuilder::new();
    for r in g.rules().iter().chain(std::iter::once(&extra)) {
        match *r {
            Rule::Binary(r) => {
                b.binary(g.name(r.lhs), g.name(r.left), g.name(r.right));
            }
            Rule::Lexical(r) => {
                b.lexical(g.name(r.lhs), r.symbol);
            }
        }
    }
    let out = b.build(g.name(g.start())).ok()?;
    (out.size() == g.size() + 1).then_some(out)
}

/// `P(Bin(n, p) <= k)`.
pub fn binomial_cdf(k: u64, n: u64, p: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..=k {
        total += binomial_pmf(i, n, p);
    }
    total
}

fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    let ln_choose: f64 = (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum();
    (ln_choose + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Random 3-CNF over `n` variables with distinct variables per clause.
pub fn random_formula(seed: u64, n: usize, k: usize) -> gramhmm::reductions::Cnf3Formula {
    use gramhmm::reductions::{Cnf3Formula, Literal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clauses = (0..k)
        .map(|_| {
            let mut vars: Vec<i32> = (1..=n as i32).collect();
            for i in 0..3 {
                let j = rng.gen_range(i..vars.len());
                vars.swap(i, j);
            }
            let lit = |v: i32, neg: bool| Literal::new(if neg { -v } else { v }).unwrap();
            [
                lit(vars[0], rng.gen_bool(0.5)),
                lit(vars[1], rng.gen_bool(0.5)),
                lit(vars[2], rng.gen_bool(0.5)),
            ]
        })
        .collect();
    Cnf3Formula::new(n, clauses).unwrap()
}
