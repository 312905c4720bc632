//! `key=value` run configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Keys are the long command-line flag names with `-` replaced by `_`.
//! Values given on the command line win over the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {}",
            self.path.display(),
            self.line,
            self.column,
            self.message
        )
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
    /// Column of the first value character.
    column: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    path: PathBuf,
    entries: BTreeMap<String, Entry>,
}

fn is_key(text: &str) -> bool {
    let mut chars = text.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl ConfigFile {
    pub fn parse(path: &Path, text: &str) -> Result<Self, ConfigError> {
        let err = |line, column, message: String| ConfigError {
            path: path.to_path_buf(),
            line,
            column,
            message,
        };
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let indent = content.len() - content.trim_start().len();
            let Some(eq) = content.find('=') else {
                return Err(err(line_no, indent + 1, "expected `key=value`".into()));
            };
            let key = content[..eq].trim();
            if !is_key(key) {
                return Err(err(line_no, indent + 1, format!("invalid key `{key}`")));
            }
            let after = &content[eq + 1..];
            let value = after.trim();
            let column = eq + 2 + (after.len() - after.trim_start().len());
            if value.is_empty() {
                return Err(err(line_no, column, format!("missing value for `{key}`")));
            }
            let entry = Entry {
                value: value.to_string(),
                line: line_no,
                column,
            };
            if let Some(prev) = entries.insert(key.to_string(), entry) {
                return Err(err(
                    line_no,
                    indent + 1,
                    format!("duplicate key `{key}` (first set on line {})", prev.line),
                ));
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: 0,
            column: 0,
            message: e.to_string(),
        })?;
        Self::parse(path, &text)
    }

    /// Rejects keys outside `allowed`, naming the first offender.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        let unknown = self
            .entries
            .iter()
            .filter(|(k, _)| !allowed.contains(&k.as_str()))
            .min_by_key(|(_, e)| e.line);
        match unknown {
            Some((key, e)) => Err(ConfigError {
                path: self.path.clone(),
                line: e.line,
                column: 1,
                message: format!("unknown key `{key}`"),
            }),
            None => Ok(()),
        }
    }

    /// The value of `key` from the command line if given, else from the file.
    pub fn resolve<T>(
        &self,
        key: &str,
        flag: Option<T>,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, ConfigError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|message| ConfigError {
                path: self.path.clone(),
                line: e.line,
                column: e.column,
                message: format!("`{key}`: {message}"),
            }),
        }
    }
}

/// `FromStr` adapter for [`ConfigFile::resolve`].
pub fn parsed<T: std::str::FromStr>(text: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    text.parse::<T>().map_err(|e| format!("`{text}`: {e}"))
}
