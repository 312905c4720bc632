use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CircuitAst, ElementNode, PhaseValue};
use crate::optics::Arm;

/// A syntax or structure error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    fn new(line: usize, column: usize, message: impl Into<String>, expected: &[&str]) -> Self {
        Self {
            line,
            column,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.column, self.message
        )?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

impl Token<'_> {
    fn error(&self, message: impl Into<String>, expected: &[&str]) -> ParseError {
        ParseError::new(self.line, self.column, message, expected)
    }
}

/// Splits one line into whitespace-separated tokens, dropping any `#` comment.
fn tokenize(line: &str, line_no: usize) -> Vec<Token<'_>> {
    let code = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut tokens = Vec::new();
    let mut start = None;
    for (byte, ch) in code
        .char_indices()
        .chain(std::iter::once((code.len(), ' ')))
    {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(byte),
            (true, Some(s)) => {
                tokens.push(Token {
                    text: &code[s..byte],
                    line: line_no,
                    column: code[..s].chars().count() + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    tokens
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn looks_numeric(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_digit() || matches!(c, '+' | '-' | '.'))
}

fn parse_number(tok: &Token<'_>, value: &str, value_column: usize) -> Result<f64, ParseError> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParseError::new(
            tok.line,
            value_column,
            format!("malformed number `{value}`"),
            &["number"],
        )),
    }
}

fn parse_identifier(tok: &Token<'_>, what: &str) -> Result<String, ParseError> {
    if is_identifier(tok.text) {
        Ok(tok.text.to_string())
    } else {
        Err(tok.error(format!("invalid {what} `{}`", tok.text), &["identifier"]))
    }
}

/// The `key=value` pairs after a statement keyword, checked against the keys
/// that statement accepts. Every allowed key is required exactly once.
struct Pairs<'a> {
    entries: Vec<(&'a str, &'a str, usize, Token<'a>)>,
}

impl<'a> Pairs<'a> {
    fn collect(
        keyword: &Token<'a>,
        tokens: &[Token<'a>],
        allowed: &[&str],
    ) -> Result<Self, ParseError> {
        let mut entries: Vec<(&str, &str, usize, Token<'a>)> = Vec::new();
        for tok in tokens {
            let (key, value) = tok.text.split_once('=').ok_or_else(|| {
                tok.error(format!("expected key=value, found `{}`", tok.text), allowed)
            })?;
            if !allowed.contains(&key) {
                return Err(tok.error(
                    format!("unknown key `{key}` for `{}`", keyword.text),
                    allowed,
                ));
            }
            if entries.iter().any(|(k, ..)| *k == key) {
                return Err(tok.error(format!("duplicate key `{key}`"), &[]));
            }
            let value_column = tok.column + key.chars().count() + 1;
            if value.is_empty() {
                return Err(ParseError::new(
                    tok.line,
                    value_column,
                    format!("missing value for `{key}`"),
                    &[],
                ));
            }
            entries.push((key, value, value_column, *tok));
        }
        for key in allowed {
            if !entries.iter().any(|(k, ..)| k == key) {
                let (line, column) = tokens
                    .last()
                    .map(|t| (t.line, t.column + t.text.chars().count()))
                    .unwrap_or((keyword.line, keyword.column + keyword.text.chars().count()));
                return Err(ParseError::new(
                    line,
                    column,
                    format!("`{}` is missing `{key}=`", keyword.text),
                    &[&format!("{key}=")],
                ));
            }
        }
        Ok(Self { entries })
    }

    fn get(&self, key: &str) -> (&'a str, usize, Token<'a>) {
        let (_, value, col, tok) = self
            .entries
            .iter()
            .find(|(k, ..)| *k == key)
            .expect("presence checked in collect");
        (value, *col, *tok)
    }

    fn arm(&self) -> Result<Arm, ParseError> {
        let (value, col, tok) = self.get("arm");
        match value {
            "upper" => Ok(Arm::Upper),
            "lower" => Ok(Arm::Lower),
            other => Err(ParseError::new(
                tok.line,
                col,
                format!("unknown arm `{other}`"),
                &["upper", "lower"],
            )),
        }
    }

    fn phase(&self, key: &str) -> Result<PhaseValue, ParseError> {
        let (value, col, tok) = self.get(key);
        if looks_numeric(value) {
            parse_number(&tok, value, col).map(PhaseValue::Literal)
        } else if is_identifier(value) {
            Ok(PhaseValue::Param(value.to_string()))
        } else {
            Err(ParseError::new(
                tok.line,
                col,
                format!("invalid phase `{value}`"),
                &["number", "parameter name"],
            ))
        }
    }
}

fn expect_arity(
    keyword: &Token<'_>,
    rest: &[Token<'_>],
    n: usize,
    what: &[&str],
) -> Result<(), ParseError> {
    if rest.len() > n {
        return Err(rest[n].error(format!("unexpected `{}`", rest[n].text), &["end of line"]));
    }
    if rest.len() < n {
        let (line, column) = rest
            .last()
            .map(|t| (t.line, t.column + t.text.chars().count()))
            .unwrap_or((keyword.line, keyword.column + keyword.text.chars().count()));
        return Err(ParseError::new(
            line,
            column,
            format!("`{}` is incomplete", keyword.text),
            what,
        ));
    }
    Ok(())
}

/// Parses `.mzi` circuit text. Statement order is preserved.
pub fn parse_circuit(text: &str) -> Result<CircuitAst, ParseError> {
    let mut source: Option<(f64, usize)> = None;
    let mut detect: Option<(String, String, Token<'_>)> = None;
    let mut elements = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let tokens = tokenize(line, idx + 1);
        let Some((keyword, rest)) = tokens.split_first() else {
            continue;
        };
        match keyword.text {
            "source" => {
                if let Some((_, first)) = source {
                    return Err(
                        keyword.error(format!("duplicate `source` (first on line {first})"), &[])
                    );
                }
                let pairs = Pairs::collect(keyword, rest, &["intensity"])?;
                let (value, col, tok) = pairs.get("intensity");
                let i0 = parse_number(&tok, value, col)?;
                if i0 < 0.0 {
                    return Err(ParseError::new(
                        tok.line,
                        col,
                        format!("source intensity must be >= 0, got {i0}"),
                        &["non-negative number"],
                    ));
                }
                source = Some((i0, keyword.line));
            }
            "mzi" => {
                let Some((name_tok, kv)) = rest.split_first() else {
                    return Err(ParseError::new(
                        keyword.line,
                        keyword.column + keyword.text.len(),
                        "`mzi` is incomplete",
                        &["name"],
                    ));
                };
                if name_tok.text.contains('=') {
                    return Err(name_tok.error("`mzi` needs a name before its settings", &["name"]));
                }
                let name = parse_identifier(name_tok, "stage name")?;
                let pairs = Pairs::collect(keyword, kv, &["arm", "phase"])?;
                elements.push(ElementNode::mzi(name, pairs.arm()?, pairs.phase("phase")?));
            }
            "phase" => {
                let pairs = Pairs::collect(keyword, rest, &["arm", "value"])?;
                elements.push(ElementNode::phase_shifter(
                    pairs.arm()?,
                    pairs.phase("value")?,
                ));
            }
            "detect" => {
                if let Some((.., first)) = &detect {
                    return Err(keyword.error(
                        format!("duplicate `detect` (first on line {})", first.line),
                        &[],
                    ));
                }
                expect_arity(keyword, rest, 2, &["detector name"])?;
                let a = parse_identifier(&rest[0], "detector name")?;
                let b = parse_identifier(&rest[1], "detector name")?;
                if a == b {
                    return Err(
                        rest[1].error(format!("detector labels must differ, both are `{a}`"), &[])
                    );
                }
                detect = Some((a, b, *keyword));
            }
            other => {
                return Err(keyword.error(
                    format!("unknown keyword `{other}`"),
                    &["source", "mzi", "phase", "detect"],
                ))
            }
        }
    }

    let end = end_position(text);
    if elements.is_empty() {
        return Err(ParseError::new(
            end.0,
            end.1,
            "circuit has no elements",
            &["mzi", "phase"],
        ));
    }
    let Some((a, b, _)) = detect else {
        return Err(ParseError::new(
            end.0,
            end.1,
            "missing `detect` statement",
            &["detect"],
        ));
    };
    let i0 = source.map(|(v, _)| v).unwrap_or(1.0);
    Ok(CircuitAst::new(i0, elements, (a, b)).expect("parser enforces every AST invariant"))
}

/// Position just past the last character of the input.
fn end_position(text: &str) -> (usize, usize) {
    match text.lines().enumerate().last() {
        Some((i, line)) => (i + 1, line.chars().count() + 1),
        None => (1, 1),
    }
}
