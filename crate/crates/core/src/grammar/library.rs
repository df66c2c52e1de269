//! Small grammars used throughout the tests, examples and CLI fixtures.

use super::{CnfGrammar, GrammarBuilder};
use crate::alphabet::Alphabet;

/// Nonempty balanced parentheses over `{(, )}`, unambiguous.
///
/// `S -> B | B S` with primitive blocks `B -> ( ) | ( S )`, unit rules
/// folded into `S`.
pub fn dyck() -> CnfGrammar {
    let mut b = GrammarBuilder::new();
    b.binary("S", "O", "C");
    b.binary("S", "O", "T");
    b.binary("S", "B", "S");
    b.binary("B", "O", "C");
    b.binary("B", "O", "T");
    b.binary("T", "S", "C");
    b.lexical("O", '(');
    b.lexical("C", ')');
    b.build("S").expect("valid grammar")
}

/// Right-linear grammar for `Σ^+`, unambiguous.
///
/// # Panics
/// If the alphabet is empty.
pub fn universal(alphabet: &Alphabet) -> CnfGrammar {
    assert!(!alphabet.is_empty(), "universal grammar needs symbols");
    let mut b = GrammarBuilder::new();
    for i in 0..alphabet.len() {
        b.binary("S", &format!("X{i}"), "S");
    }
    for &c in alphabet.symbols() {
        b.lexical("S", c);
    }
    for (i, &c) in alphabet.symbols().iter().enumerate() {
        b.lexical(&format!("X{i}"), c);
    }
    b.build("S").expect("valid grammar")
}

/// `S -> S S | 'symbol'`: `f(symbol^L)` is the Catalan number `C_{L-1}`.
pub fn catalan(symbol: char) -> CnfGrammar {
    let mut b = GrammarBuilder::new();
    b.binary("S", "S", "S");
    b.lexical("S", symbol);
    b.build("S").expect("valid grammar")
}
