//! Context-free grammars in Chomsky normal form.
//!
//! A [`CnfGrammar`] keeps its rules in declaration order. Nonterminals are
//! interned in order of first appearance in that rule list, so a grammar
//! written out with `Display` parses back to an identical value.

mod count;
pub mod library;
mod parse;

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};

pub use count::{AmbiguityBound, DerivationCount};
pub use parse::parse_grammar;

/// `lhs -> left right`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinaryRule {
    pub lhs: usize,
    pub left: usize,
    pub right: usize,
}

/// `lhs -> 'symbol'`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LexicalRule {
    pub lhs: usize,
    pub symbol: char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Binary(BinaryRule),
    Lexical(LexicalRule),
}

impl Rule {
    pub fn lhs(&self) -> usize {
        match self {
            Rule::Binary(r) => r.lhs,
            Rule::Lexical(r) => r.lhs,
        }
    }
}

/// An immutable, validated CNF grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfGrammar {
    names: Vec<String>,
    start: usize,
    rules: Vec<Rule>,
    binary: Vec<BinaryRule>,
    lexical: Vec<LexicalRule>,
    alphabet: Alphabet,
    /// Nonterminals with a lexical rule for each alphabet symbol.
    lexical_by_symbol: Vec<Vec<usize>>,
    /// Binary rule indices grouped by left-hand side, ascending.
    binary_by_lhs: Vec<Vec<usize>>,
}

impl CnfGrammar {
    pub fn nonterminal_count(&self) -> usize {
        self.names.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn name(&self, nonterminal: usize) -> &str {
        &self.names[nonterminal]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// All rules in declaration order.
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn binary_rules(&self) -> &[BinaryRule] {
        &self.binary
    }

    pub fn lexical_rules(&self) -> &[LexicalRule] {
        &self.lexical
    }

    /// Indices into [`Self::binary_rules`] whose left-hand side is `lhs`.
    pub fn binary_rules_for(&self, lhs: usize) -> &[usize] {
        &self.binary_by_lhs[lhs]
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Nonterminals `a` with a rule `a -> symbol`.
    pub fn lexical_heads(&self, symbol: char) -> &[usize] {
        match self.alphabet.index_of(symbol) {
            Some(i) => &self.lexical_by_symbol[i],
            None => &[],
        }
    }

    /// Grammar size `|G|`: number of rules.
    pub fn size(&self) -> usize {
        self.rules.len()
    }

    /// Checks that `word` is nonempty and uses only symbols of this grammar.
    pub fn check_word(&self, word: &str) -> Result<()> {
        if word.is_empty() {
            return Err(Error::EmptyWord);
        }
        match word.chars().find(|&c| !self.alphabet.contains(c)) {
            Some(c) => Err(Error::UnknownSymbol(c)),
            None => Ok(()),
        }
    }
}

impl fmt::Display for CnfGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "start {}", self.names[self.start])?;
        for rule in &self.rules {
            match rule {
                Rule::Binary(r) => writeln!(
                    f,
                    "{} -> {} {}",
                    self.names[r.lhs], self.names[r.left], self.names[r.right]
                )?,
                Rule::Lexical(r) => writeln!(f, "{} -> '{}'", self.names[r.lhs], r.symbol)?,
            }
        }
        Ok(())
    }
}

/// Incremental construction of a [`CnfGrammar`] from named rules.
#[derive(Debug, Default, Clone)]
pub struct GrammarBuilder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    rules: Vec<Rule>,
    seen: HashSet<Rule>,
}

impl GrammarBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), i);
        i
    }

    fn push(&mut self, rule: Rule) -> bool {
        if !self.seen.insert(rule) {
            return false;
        }
        self.rules.push(rule);
        true
    }

    /// Adds `lhs -> left right`; returns `false` if the rule already exists.
    pub fn binary(&mut self, lhs: &str, left: &str, right: &str) -> bool {
        let lhs = self.intern(lhs);
        let left = self.intern(left);
        let right = self.intern(right);
        self.push(Rule::Binary(BinaryRule { lhs, left, right }))
    }

    /// Adds `lhs -> 'symbol'`; returns `false` if the rule already exists.
    pub fn lexical(&mut self, lhs: &str, symbol: char) -> bool {
        let lhs = self.intern(lhs);
        self.push(Rule::Lexical(LexicalRule { lhs, symbol }))
    }

    pub fn build(self, start: &str) -> Result<CnfGrammar> {
        if self.rules.is_empty() {
            return Err(Error::EmptyGrammar);
        }
        let start = *self
            .index
            .get(start)
            .ok_or_else(|| Error::UndeclaredStart(start.to_owned()))?;
        let n = self.names.len();
        let mut binary = Vec::new();
        let mut lexical = Vec::new();
        for rule in &self.rules {
            match *rule {
                Rule::Binary(r) => binary.push(r),
                Rule::Lexical(r) => lexical.push(r),
            }
        }
        let alphabet = Alphabet::new(lexical.iter().map(|r| r.symbol));
        let mut lexical_by_symbol = vec![Vec::new(); alphabet.len()];
        for r in &lexical {
            let i = alphabet.index_of(r.symbol).expect("symbol interned above");
            lexical_by_symbol[i].push(r.lhs);
        }
        let mut binary_by_lhs = vec![Vec::new(); n];
        for (i, r) in binary.iter().enumerate() {
            binary_by_lhs[r.lhs].push(i);
        }
        Ok(CnfGrammar {
            names: self.names,
            start,
            rules: self.rules,
            binary,
            lexical,
            alphabet,
            lexical_by_symbol,
            binary_by_lhs,
        })
    }
}

/// Union of two grammars: `L = L1 ∪ L2` and `f(w) = f1(w) + f2(w)`.
pub fn union(first: &CnfGrammar, second: &CnfGrammar) -> CnfGrammar {
    union_all(&[first, second])
}

/// k-ary union. A fresh start `S` receives a copy of every start rule of
/// each operand (binary and lexical); operand nonterminals are renamed
/// `j.<name>` for the j-th operand (1-based) and all their rules are kept.
///
/// Counts add exactly for every word of length >= 2. A length-1 word is
/// derived from the new start by a single lexical rule, and rules form a
/// set, so two operands sharing a lexical start rule `S -> 'x'` yield
/// `f("x") = 1` rather than 2.
///
/// # Panics
/// If `grammars` is empty.
pub fn union_all(grammars: &[&CnfGrammar]) -> CnfGrammar {
    assert!(!grammars.is_empty(), "union of zero grammars");
    let mut builder = GrammarBuilder::new();
    let renamed = |j: usize, g: &CnfGrammar, a: usize| format!("{}.{}", j + 1, g.name(a));
    // Fresh start first so it is interned at index 0.
    builder.intern("S");
    for (j, g) in grammars.iter().enumerate() {
        for rule in g.rules().iter().filter(|r| r.lhs() == g.start()) {
            match *rule {
                Rule::Binary(r) => {
                    builder.binary("S", &renamed(j, g, r.left), &renamed(j, g, r.right));
                }
                Rule::Lexical(r) => {
                    builder.lexical("S", r.symbol);
                }
            }
        }
    }
    for (j, g) in grammars.iter().enumerate() {
        for rule in g.rules() {
            match *rule {
                Rule::Binary(r) => {
                    builder.binary(
                        &renamed(j, g, r.lhs),
                        &renamed(j, g, r.left),
                        &renamed(j, g, r.right),
                    );
                }
                Rule::Lexical(r) => {
                    builder.lexical(&renamed(j, g, r.lhs), r.symbol);
                }
            }
        }
    }
    builder.build("S").expect("union of valid grammars is valid")
}
