//! Ordered `# key: value` header blocks carried by every output file.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces `key`, keeping first-insertion order.
    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        let key = key.into();
        let value = value.to_string().replace(['\n', '\r'], " ");
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
        self
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    pub fn extend(&mut self, other: &Metadata) {
        for (k, v) in &other.entries {
            self.set(k.clone(), v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out
    }

    /// Consumes leading `# key: value` lines; returns the metadata and the
    /// first line that is not part of the header.
    pub fn parse_header<R: BufRead>(lines: &mut std::io::Lines<R>) -> Result<(Metadata, Option<String>)> {
        let mut meta = Metadata::new();
        for line in lines.by_ref() {
            let line = line?;
            match line.strip_prefix("# ") {
                Some(body) => {
                    let (k, v) = body
                        .split_once(": ")
                        .or_else(|| body.strip_suffix(':').map(|k| (k, "")))
                        .ok_or_else(|| Error::Sidecar(format!("bad metadata line '{line}'")))?;
                    meta.set(k, v);
                }
                None => return Ok((meta, Some(line))),
            }
        }
        Ok((meta, None))
    }
}
