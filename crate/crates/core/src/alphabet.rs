//! Ordered terminal alphabets and length-L word enumeration.

use crate::error::{Error, Result};

/// Default cap on the number of strings a brute-force enumeration may visit.
pub const DEFAULT_ENUMERATION_GUARD: u64 = 10_000_000;

/// Environment variable overriding [`DEFAULT_ENUMERATION_GUARD`].
pub const GUARD_ENV: &str = "GRAMHMM_ORACLE_GUARD";

/// A sorted set of single-character terminals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Alphabet(Vec<char>);

impl Alphabet {
    pub fn new<I: IntoIterator<Item = char>>(symbols: I) -> Self {
        let mut v: Vec<char> = symbols.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Alphabet(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.0
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.0.binary_search(&c).ok()
    }

    pub fn contains(&self, c: char) -> bool {
        self.index_of(c).is_some()
    }

    pub fn is_subset_of(&self, other: &Alphabet) -> bool {
        self.0.iter().all(|&c| other.contains(c))
    }

    pub fn union(&self, other: &Alphabet) -> Alphabet {
        Alphabet::new(self.0.iter().chain(other.0.iter()).copied())
    }

    /// Maps a word to symbol indices, failing on the first unknown symbol.
    pub fn encode(&self, word: &str) -> Result<Vec<usize>> {
        word.chars()
            .map(|c| self.index_of(c).ok_or(Error::UnknownSymbol(c)))
            .collect()
    }

    pub fn decode(&self, indices: &[usize]) -> String {
        indices.iter().map(|&i| self.0[i]).collect()
    }

    /// Every word of `Σ^length` in lexicographic order, subject to the guard.
    pub fn words(&self, length: usize) -> Result<Words<'_>> {
        check_guard(self.len(), length)?;
        Ok(Words {
            alphabet: self,
            current: if self.is_empty() && length > 0 {
                None
            } else {
                Some(vec![0; length])
            },
        })
    }
}

impl std::fmt::Display for Alphabet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

/// The active enumeration guard, honoring `GRAMHMM_ORACLE_GUARD`.
pub fn enumeration_guard() -> u64 {
    std::env::var(GUARD_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ENUMERATION_GUARD)
}

/// Fails when `|Σ|^length` exceeds the enumeration guard.
pub fn check_guard(alphabet_size: usize, length: usize) -> Result<()> {
    let guard = enumeration_guard();
    let count = (alphabet_size as f64).powi(length as i32);
    if count > guard as f64 {
        return Err(Error::GuardExceeded { count, guard });
    }
    Ok(())
}

/// Odometer over `Σ^L` yielding symbol-index vectors.
pub struct Words<'a> {
    alphabet: &'a Alphabet,
    current: Option<Vec<usize>>,
}

impl Iterator for Words<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let word = self.current.take()?;
        let mut next = word.clone();
        let k = self.alphabet.len();
        let mut advanced = false;
        for pos in (0..next.len()).rev() {
            next[pos] += 1;
            if next[pos] < k {
                advanced = true;
                break;
            }
            next[pos] = 0;
        }
        if advanced {
            self.current = Some(next);
        }
        Some(word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_are_lexicographic_and_complete() {
        let a = Alphabet::new("ba".chars());
        let all: Vec<String> = a.words(2).unwrap().map(|w| a.decode(&w)).collect();
        assert_eq!(all, ["aa", "ab", "ba", "bb"]);
        assert_eq!(a.words(0).unwrap().count(), 1);
    }

    #[test]
    fn encode_rejects_unknown() {
        let a = Alphabet::new("ab".chars());
        assert_eq!(a.encode("ab").unwrap(), vec![0, 1]);
        assert_eq!(a.encode("ac"), Err(Error::UnknownSymbol('c')));
    }

    #[test]
    fn guard_rejects_large_spaces() {
        assert!(check_guard(10, 7).is_ok());
        assert!(matches!(
            check_guard(10, 8),
            Err(Error::GuardExceeded { .. })
        ));
    }
}
