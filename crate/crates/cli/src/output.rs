//! Deterministic artifact emission.
//!
//! All numbers are printed with 12 significant digits in a %g-like layout,
//! so identical inputs and configuration produce byte-identical files on any
//! platform. When an output directory is set, every artifact is written there
//! and a manifest with SHA-256 checksums is produced; otherwise the artifact
//! goes to stdout.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

use crate::config::OutputFormat;

/// Formats with 12 significant digits, positional for exponents in [-4, 12),
/// scientific otherwise, trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp_str) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp_str.parse().expect("scientific exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 12);
    let body = if (-4..12).contains(&exp) {
        if exp >= 0 {
            let point = exp as usize + 1;
            let frac = digits[point..].trim_end_matches('0');
            if frac.is_empty() {
                digits[..point].to_string()
            } else {
                format!("{}.{}", &digits[..point], frac)
            }
        } else {
            let mut s = String::from("0.");
            for _ in 0..(-exp - 1) {
                s.push('0');
            }
            s.push_str(digits.trim_end_matches('0'));
            s
        }
    } else {
        let rest = digits[1..].trim_end_matches('0');
        if rest.is_empty() {
            format!("{}e{}", &digits[..1], exp)
        } else {
            format!("{}.{}e{}", &digits[..1], rest, exp)
        }
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Float(f64),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

/// A rectangular artifact: header plus rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: Vec<S>) -> Self {
        Self { headers: headers.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.headers.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for cell in row {
                if !first {
                    out.push(',');
                }
                first = false;
                match cell {
                    Cell::Text(s) => {
                        debug_assert!(
                            !s.contains([',', '"', '\n']),
                            "labels must not need CSV quoting"
                        );
                        out.push_str(s);
                    }
                    Cell::Int(v) => {
                        let _ = write!(out, "{v}");
                    }
                    Cell::Float(v) => out.push_str(&fmt_sig(*v)),
                    Cell::Empty => {}
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("[\n");
        for (i, row) in self.rows.iter().enumerate() {
            out.push('{');
            for (j, (header, cell)) in self.headers.iter().zip(row).enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}:", json_string(header));
                match cell {
                    Cell::Text(s) => out.push_str(&json_string(s)),
                    Cell::Int(v) => {
                        let _ = write!(out, "{v}");
                    }
                    Cell::Float(v) => out.push_str(&fmt_sig(*v)),
                    Cell::Empty => out.push_str("null"),
                }
            }
            out.push('}');
            if i + 1 < self.rows.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("]\n");
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Writes artifacts to the output directory (plus a checksum manifest) or to
/// stdout when no directory is configured.
pub struct Emitter {
    out_dir: Option<PathBuf>,
    format: OutputFormat,
    produced: Vec<(String, String, usize)>, // file, sha256, bytes
}

impl Emitter {
    pub fn new(out_dir: Option<PathBuf>, format: OutputFormat) -> Self {
        Self { out_dir, format, produced: Vec::new() }
    }

    pub fn format(&self) -> OutputFormat {
        self.format
    }

    pub fn emit(&mut self, stem: &str, table: &Table) -> Result<()> {
        let content = table.render(self.format);
        match &self.out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                let file = format!("{stem}.{}", self.format.extension());
                let path = dir.join(&file);
                std::fs::write(&path, &content)
                    .with_context(|| format!("writing {}", path.display()))?;
                let digest = Sha256::digest(content.as_bytes());
                let mut hex = String::with_capacity(64);
                for byte in digest {
                    let _ = write!(hex, "{byte:02x}");
                }
                self.produced.push((file, hex, content.len()));
            }
            None => {
                std::io::stdout()
                    .write_all(content.as_bytes())
                    .context("writing artifact to stdout")?;
            }
        }
        Ok(())
    }

    /// Writes `manifest.json` listing this run's artifacts.
    pub fn finish(mut self) -> Result<()> {
        let Some(dir) = &self.out_dir else {
            return Ok(());
        };
        if self.produced.is_empty() {
            return Ok(());
        }
        self.produced.sort();
        let mut body = String::from("{\n  \"artifacts\": [\n");
        for (i, (file, sha, bytes)) in self.produced.iter().enumerate() {
            let _ = write!(
                body,
                "    {{\"file\": {}, \"sha256\": \"{sha}\", \"bytes\": {bytes}}}",
                json_string(file)
            );
            if i + 1 < self.produced.len() {
                body.push(',');
            }
            body.push('\n');
        }
        body.push_str("  ]\n}\n");
        let path = dir.join("manifest.json");
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
