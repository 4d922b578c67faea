//! Plain-text `[section]` / `key = value` documents.
//!
//! Used for experiment configs and for the model description embedded in
//! checkpoints. Lines starting with `#` are comments. Every parse error and
//! validation error names the offending line.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cell::Cell;
use core::fmt::{Display, Write as _};
use core::str::FromStr;

use crate::error::{bail, Result};
use crate::Error;

/// One `key = value` line.
#[derive(Debug, Clone)]
pub struct Entry {
    #[allow(missing_docs)]
    pub key: String,
    #[allow(missing_docs)]
    pub value: String,
    /// 1-based source line, 0 for entries built in memory.
    pub line: usize,
    used: Cell<bool>,
}

/// A named block of entries.
#[derive(Debug, Clone)]
pub struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    /// Empty section.
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            line: 0,
            entries: Vec::new(),
        }
    }

    #[allow(missing_docs)]
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Line of the `[name]` header.
    pub fn line(&self) -> usize {
        self.line
    }

    #[allow(missing_docs)]
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Set `key`, replacing an earlier value.
    pub fn set(&mut self, key: &str, value: impl Display) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value,
            None => self.entries.push(Entry {
                key: key.to_string(),
                value,
                line: 0,
                used: Cell::new(false),
            }),
        }
    }

    /// Set `key` to a comma-separated list.
    pub fn set_list<T: Display>(&mut self, key: &str, values: &[T]) {
        let mut s = String::new();
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v}");
        }
        self.set(key, s);
    }

    fn entry(&self, key: &str) -> Option<&Entry> {
        let e = self.entries.iter().find(|e| e.key == key)?;
        e.used.set(true);
        Some(e)
    }

    /// Raw value of `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entry(key).map(|e| e.value.as_str())
    }

    /// True when any key equals `prefix` or starts with `prefix.`.
    pub fn has_prefix(&self, prefix: &str) -> bool {
        self.entries.iter().any(|e| e.key.starts_with(prefix))
    }

    /// Parsed value of `key`, if present.
    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => parse_value(e, &e.value).map(Some),
        }
    }

    /// Parsed value of `key`, or `default` when absent.
    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    /// Parsed value of a key that must be present.
    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parse(key)?.ok_or_else(|| self.missing(key))
    }

    /// Comma-separated list under `key`, if present.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .split(',')
                .map(|part| parse_value(e, part.trim()))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// List under a key that must be present.
    pub fn require_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        self.list(key)?.ok_or_else(|| self.missing(key))
    }

    /// Configuration error pointing at `key`, or at the header when the key is absent.
    pub fn error(&self, key: &str, msg: impl Display) -> Error {
        let line = self.entries.iter().find(|e| e.key == key).map_or(self.line, |e| e.line);
        Error::Config(format!("line {}: [{}] {}: {}", line, self.name, key, msg))
    }

    fn missing(&self, key: &str) -> Error {
        Error::Config(format!("line {}: [{}] missing key `{}`", self.line, self.name, key))
    }
}

fn parse_value<T: FromStr>(e: &Entry, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("line {}: cannot parse `{}` for key `{}`", e.line, raw, e.key)))
}

/// Ordered list of sections.
#[derive(Debug, Clone, Default)]
pub struct Document {
    sections: Vec<Section>,
}

impl Document {
    #[allow(missing_docs)]
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse text; errors carry the 1-based line number.
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    bail!(Config, "line {}: unterminated section header", n);
                };
                let name = name.trim();
                if name.is_empty() {
                    bail!(Config, "line {}: empty section name", n);
                }
                if doc.section(name).is_some() {
                    bail!(Config, "line {}: duplicate section [{}]", n, name);
                }
                doc.sections.push(Section {
                    name: name.to_string(),
                    line: n,
                    entries: Vec::new(),
                });
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(Config, "line {}: expected `key = value`", n);
            };
            let key = key.trim();
            if key.is_empty() {
                bail!(Config, "line {}: empty key", n);
            }
            let Some(section) = doc.sections.last_mut() else {
                bail!(Config, "line {}: `{}` appears before any [section]", n, key);
            };
            if section.entries.iter().any(|e| e.key == key) {
                bail!(Config, "line {}: duplicate key `{}`", n, key);
            }
            section.entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line: n,
                used: Cell::new(false),
            });
        }
        Ok(doc)
    }

    #[allow(missing_docs)]
    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    #[allow(missing_docs)]
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Section that must exist.
    pub fn require(&self, name: &str) -> Result<&Section> {
        self.section(name)
            .ok_or_else(|| Error::Config(format!("missing section [{name}]")))
    }

    /// Mutable section, created at the end when absent.
    pub fn section_mut(&mut self, name: &str) -> &mut Section {
        match self.sections.iter().position(|s| s.name == name) {
            Some(i) => &mut self.sections[i],
            None => {
                self.sections.push(Section::new(name));
                self.sections.last_mut().expect("just pushed")
            }
        }
    }

    /// Append a section, replacing any of the same name.
    pub fn push(&mut self, section: Section) {
        self.sections.retain(|s| s.name != section.name);
        self.sections.push(section);
    }

    /// Reject sections and keys that were never read.
    pub fn check_all_used(&self, known_sections: &[&str]) -> Result<()> {
        for s in &self.sections {
            if !known_sections.contains(&s.name.as_str()) {
                bail!(Config, "line {}: unknown section [{}]", s.line, s.name);
            }
            if let Some(e) = s.entries.iter().find(|e| !e.used.get()) {
                bail!(Config, "line {}: unknown key `{}` in [{}]", e.line, e.key, s.name);
            }
        }
        Ok(())
    }

    /// Canonical text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{}]", s.name);
            for e in &s.entries {
                let _ = writeln!(out, "{} = {}", e.key, e.value);
            }
        }
        out
    }
}
