use super::{CnfGrammar, GrammarBuilder};
use crate::error::{Error, Result};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, c)) in line.char_indices().enumerate() {
        if c.is_whitespace() {
            if let Some((b, column)) = start.take() {
                tokens.push(Token {
                    text: &line[b..byte],
                    column,
                });
            }
        } else if start.is_none() {
            start = Some((byte, col + 1));
        }
    }
    if let Some((b, column)) = start {
        tokens.push(Token {
            text: &line[b..],
            column,
        });
    }
    tokens
}

enum Symbol {
    Nonterminal(String),
    Terminal(char),
}

fn classify(token: &Token<'_>, line: usize) -> Result<Symbol> {
    let text = token.text;
    if text.starts_with('\'') {
        let inner: Vec<char> = text.chars().collect();
        if inner.len() == 3 && inner[2] == '\'' {
            return Ok(Symbol::Terminal(inner[1]));
        }
        return Err(Error::Syntax {
            line,
            column: token.column,
            message: format!("terminal must be one character in single quotes, got {text}"),
        });
    }
    if text == "->" {
        return Err(Error::Syntax {
            line,
            column: token.column,
            message: "unexpected `->`".into(),
        });
    }
    Ok(Symbol::Nonterminal(text.to_owned()))
}

/// Parses the line-oriented grammar format:
///
/// ```text
/// # comment
/// start S
/// S -> A B
/// A -> 'a'
/// ```
pub fn parse_grammar(text: &str) -> Result<CnfGrammar> {
    let mut builder = GrammarBuilder::new();
    let mut start: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let tokens = tokenize(raw);
        if tokens.is_empty() || tokens[0].text.starts_with('#') {
            continue;
        }
        if tokens[0].text == "start" && tokens.get(1).is_none_or(|t| t.text != "->") {
            if tokens.len() != 2 {
                return Err(Error::Syntax {
                    line: line_no,
                    column: tokens[0].column,
                    message: "expected `start <NAME>`".into(),
                });
            }
            if start.is_some() {
                return Err(Error::Syntax {
                    line: line_no,
                    column: tokens[0].column,
                    message: "duplicate `start` header".into(),
                });
            }
            match classify(&tokens[1], line_no)? {
                Symbol::Nonterminal(name) => start = Some(name),
                Symbol::Terminal(_) => {
                    return Err(Error::Syntax {
                        line: line_no,
                        column: tokens[1].column,
                        message: "start symbol must be a nonterminal".into(),
                    })
                }
            }
            continue;
        }
        let arrow = tokens.get(1).ok_or_else(|| Error::Syntax {
            line: line_no,
            column: tokens[0].column + tokens[0].text.chars().count(),
            message: "expected `->`".into(),
        })?;
        if arrow.text != "->" {
            return Err(Error::Syntax {
                line: line_no,
                column: arrow.column,
                message: format!("expected `->`, found `{}`", arrow.text),
            });
        }
        let lhs = match classify(&tokens[0], line_no)? {
            Symbol::Nonterminal(name) => name,
            Symbol::Terminal(_) => {
                return Err(Error::NotChomskyForm {
                    line: line_no,
                    rule: raw.trim().to_owned(),
                })
            }
        };
        let rhs = tokens[2..]
            .iter()
            .map(|t| classify(t, line_no))
            .collect::<Result<Vec<_>>>()?;
        let added = match rhs.as_slice() {
            [Symbol::Terminal(c)] => builder.lexical(&lhs, *c),
            [Symbol::Nonterminal(b), Symbol::Nonterminal(c)] => builder.binary(&lhs, b, c),
            _ => {
                return Err(Error::NotChomskyForm {
                    line: line_no,
                    rule: raw.trim().to_owned(),
                })
            }
        };
        if !added {
            return Err(Error::DuplicateRule {
                line: line_no,
                rule: raw.trim().to_owned(),
            });
        }
    }
    let start = start.ok_or(Error::MissingStart)?;
    builder.build(&start)
}
