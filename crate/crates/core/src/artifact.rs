//! Self-describing delimited artifacts: `# key: value` metadata lines, a
//! header row, then tab-separated records.

use std::collections::BTreeMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::{Error, Result};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Metadata block written at the top of every artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new(config_hash: &str, seed: u64) -> Self {
        Metadata {
            entries: vec![
                ("tool".into(), TOOL_NAME.into()),
                ("version".into(), TOOL_VERSION.into()),
                ("config_hash".into(), config_hash.into()),
                ("seed".into(), seed.to_string()),
            ],
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn write(&self, w: &mut dyn Write) -> std::io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries.iter().cloned().collect()
    }
}

/// Parses the leading `# key: value` block of an artifact.
pub fn read_metadata(reader: impl BufRead) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for line in reader.lines() {
        let line = line?;
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        if let Some((k, v)) = rest.trim().split_once(':') {
            out.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    Ok(out)
}

/// Drops metadata lines, leaving header and records.
pub fn strip_metadata(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| [l, "\n"])
        .collect()
}

/// Reads a tab-separated table, checking that the header starts with
/// `expected`. Returns the data rows, each at least `expected.len()` wide.
pub fn read_table(reader: impl BufRead, expected: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut lines = reader
        .lines()
        .filter(|l| !matches!(l, Ok(s) if s.starts_with('#') || s.trim().is_empty()));
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(Error::EmptyInput("table has no header row".into())),
    };
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.len() < expected.len() || cols[..expected.len()] != *expected {
        return Err(Error::Malformed(format!(
            "unexpected header {header:?}, expected columns {expected:?}"
        )));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        let row: Vec<String> = line.split('\t').map(str::to_string).collect();
        if row.len() < expected.len() {
            return Err(Error::Malformed(format!("short row {line:?}")));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Writes `path` through a temporary file in the same directory that is only
/// renamed over the target once `body` has succeeded, so a failed write never
/// clobbers a previous good artifact.
pub fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let tmp = tempfile::Builder::new()
        .prefix(".partial-")
        .tempfile_in(dir)
        .map_err(|e| Error::io(dir, e))?;
    let mut w = BufWriter::new(tmp);
    body(&mut w).map_err(|e| Error::io(path, e))?;
    let tmp = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Formats a float for machine-readable tables: shortest round-trip
/// representation, `NA` for missing, `inf` for infinity.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NA".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{:?}", x + 0.0)
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "NA".into())
}

pub fn parse_f64(s: &str) -> Result<f64> {
    match s {
        "NA" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse()
            .map_err(|_| Error::Malformed(format!("bad number {s:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metadata_round_trips() {
        let m = Metadata::new("abc123", 7).with("q", 10);
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        buf.extend_from_slice(b"a\tb\n1\t2\n");
        let back = read_metadata(&buf[..]).unwrap();
        assert_eq!(back, m.to_map());
        let rows = read_table(&buf[..], &["a", "b"]).unwrap();
        assert_eq!(rows, vec![vec!["1".to_string(), "2".to_string()]]);
        assert_eq!(strip_metadata(std::str::from_utf8(&buf).unwrap()), "a\tb\n1\t2\n");
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_table(&b"x\ty\n"[..], &["a"]).is_err());
        assert!(read_table(&b""[..], &["a"]).is_err());
    }

    #[test]
    fn negative_zero_prints_as_zero() {
        assert_eq!(fmt_f64(-0.0), "0.0");
        assert_eq!(fmt_f64(-2.5), "-2.5");
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, f64::INFINITY] {
            assert_eq!(parse_f64(&fmt_f64(x)).unwrap(), x);
        }
        assert!(parse_f64(&fmt_f64(f64::NAN)).unwrap().is_nan());
    }

    #[test]
    fn failed_write_keeps_previous_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.tsv");
        write_atomic(&path, |w| w.write_all(b"good\n")).unwrap();
        let err = write_atomic(&path, |w| {
            w.write_all(b"partial")?;
            Err(std::io::Error::other("boom"))
        });
        assert!(err.is_err());
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "good\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
