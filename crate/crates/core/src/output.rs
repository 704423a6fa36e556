//! Shared text-output helpers: numeric formatting, metadata headers and
//! atomic file writes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::Result;

/// Fixed 17-significant-digit representation, round-trips every `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Ordered `key: value` pairs written as a `#` comment block.
#[derive(Clone, Debug, Default)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn extend(&mut self, other: &Metadata) -> &mut Self {
        self.entries.extend(other.entries.iter().cloned());
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Renders the block, each line prefixed with `prefix` (`"# "` for CSV).
    pub fn render(&self, prefix: &str) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{prefix}{k}: {v}");
        }
        s
    }
}

/// Builds a CSV document: metadata comments, header row, data rows.
pub struct CsvTable {
    text: String,
}

impl CsvTable {
    pub fn new(meta: &Metadata, header: &[&str]) -> Self {
        let mut text = meta.render("# ");
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.text.push(',');
            }
            self.text.push_str(f.as_ref());
            first = false;
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Data lines of a CSV document (comments and header stripped).
pub fn csv_data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn num_round_trips() {
        for v in [0.0, -1.5, std::f64::consts::PI, 1e-300, 6.02e23, f64::MIN_POSITIVE] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_layout() {
        let mut meta = Metadata::new();
        meta.push("seed", 7).push("degree", 6);
        let mut t = CsvTable::new(&meta, &["k", "energy"]);
        t.row(["0", "1.5"]);
        assert_eq!(t.as_str(), "# seed: 7\n# degree: 6\nk,energy\n0,1.5\n");
        assert_eq!(csv_data_lines(t.as_str()).collect::<Vec<_>>(), vec!["0,1.5"]);
        assert_eq!(meta.get("degree"), Some("6"));
    }
}
