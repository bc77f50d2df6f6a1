//! Plain-text `key = value` configuration with optional `[section]` headers.
//!
//! `#` starts a comment. Keys outside any section belong to the unnamed
//! section `""`. Consumers take the keys they understand and then call
//! [`Section::finish`], which rejects anything left over.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed configuration file.
#[derive(Clone, Debug, Default)]
pub struct KvConfig {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = KvConfig::default();
        let mut current = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: format!("unterminated section header `{line}`"),
                })?;
                current = name.trim().to_string();
                cfg.sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse { line: line_no, msg: "empty key".into() });
            }
            let section = cfg.sections.entry(current.clone()).or_default();
            if section.contains_key(&key) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            section.insert(
                key,
                Entry {
                    value: value.trim().to_string(),
                    line: line_no,
                },
            );
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Removes and returns a section (empty if absent).
    pub fn take_section(&mut self, name: &str) -> Section {
        Section {
            name: name.to_string(),
            entries: self.sections.remove(name).unwrap_or_default(),
        }
    }

    /// Errors if any section was not consumed.
    pub fn finish(self) -> Result<()> {
        if let Some((name, entries)) = self.sections.into_iter().find(|(_, e)| !e.is_empty()) {
            let (key, entry) = entries.into_iter().next().expect("non-empty");
            return Err(Error::Config(format!(
                "unknown section [{name}] (key `{key}` at line {})",
                entry.line
            )));
        }
        Ok(())
    }
}

/// Keys of one section, consumed one by one.
#[derive(Clone, Debug, Default)]
pub struct Section {
    name: String,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    pub fn from_pairs<'a>(name: &str, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Section {
            name: name.to_string(),
            entries: pairs
                .into_iter()
                .map(|(k, v)| (k.to_string(), Entry { value: v.to_string(), line: 0 }))
                .collect(),
        }
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|e| e.value)
    }

    /// Parses `key` if present.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!(
                    "[{}] key `{key}` (line {}): cannot parse `{}`",
                    self.name, e.line, e.value
                ))
            }),
        }
    }

    /// Parses a comma-separated list if present.
    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(e) => parse_list(&e.value).map(Some).map_err(|bad| {
                Error::Config(format!(
                    "[{}] key `{key}` (line {}): cannot parse list item `{bad}`",
                    self.name, e.line
                ))
            }),
        }
    }

    /// Errors on the first unconsumed key.
    pub fn finish(self) -> Result<()> {
        if let Some((key, e)) = self.entries.into_iter().next() {
            return Err(Error::Config(format!(
                "unknown key `{key}` in [{}] at line {}",
                self.name, e.line
            )));
        }
        Ok(())
    }
}

/// Parses `a, b, c`; returns the offending item on failure.
pub fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| t.to_string()))
        .collect()
}

/// Parses `a:b, c:d` into pairs.
pub fn parse_pairs<A: FromStr, B: FromStr>(s: &str) -> std::result::Result<Vec<(A, B)>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (a, b) = t.split_once(':').ok_or_else(|| t.to_string())?;
            Ok((
                a.trim().parse::<A>().map_err(|_| t.to_string())?,
                b.trim().parse::<B>().map_err(|_| t.to_string())?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let mut cfg = KvConfig::parse("seed = 4 # trailing\n[glnn]\nalpha=0.01\n\n[wmmse]\nmax_outer_iters = 7").unwrap();
        let mut root = cfg.take_section("");
        assert_eq!(root.take::<u64>("seed").unwrap(), Some(4));
        root.finish().unwrap();
        let mut g = cfg.take_section("glnn");
        assert_eq!(g.take::<f64>("alpha").unwrap(), Some(0.01));
        g.finish().unwrap();
        assert!(cfg.clone().finish().is_err());
        cfg.take_section("wmmse");
        cfg.finish().unwrap();
    }

    #[test]
    fn unknown_key_is_error_with_name() {
        let mut cfg = KvConfig::parse("[glnn]\nalpah = 0.1\n").unwrap();
        let s = cfg.take_section("glnn");
        let err = s.finish().unwrap_err().to_string();
        assert!(err.contains("alpah"), "{err}");
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(KvConfig::parse("novalue"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(KvConfig::parse("a=1\na=2"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(KvConfig::parse("[x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn lists_and_pairs() {
        assert_eq!(parse_list::<f64>("1, 2.5,3").unwrap(), vec![1.0, 2.5, 3.0]);
        assert_eq!(parse_pairs::<f64, usize>("6:700, 15:600").unwrap(), vec![(6.0, 700), (15.0, 600)]);
        assert_eq!(parse_list::<f64>("1, x").unwrap_err(), "x");
    }
}
