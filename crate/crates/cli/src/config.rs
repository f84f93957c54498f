//! Run configuration: defaults, the flat key-value config file, and
//! validation.
//!
//! The file format is one `key = value` pair per line; `#` starts a comment.
//! Data files are registered per year with `data.<year> = path`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::ingest::MissingFile;

/// Output encoding for artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

/// Everything a run needs beyond the subcommand arguments.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub delta: f64,
    pub k: usize,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub countries_file: PathBuf,
    pub products_file: PathBuf,
    pub data: BTreeMap<i32, PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            tol: 1e-12,
            max_iter: 1000,
            delta: 1e-3,
            k: 4,
            format: OutputFormat::Csv,
            out: None,
            countries_file: PathBuf::from("data/countries.csv"),
            products_file: PathBuf::from("data/products.csv"),
            data: BTreeMap::new(),
        }
    }
}

/// The only supported dangling-node policy; the key exists for forward
/// compatibility and anything else is rejected.
const DANGLING_POLICY: &str = "uniform_1_over_N";

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(MissingFile(path.to_path_buf()).into());
        }
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {}: expected `key = value`, got {raw:?}", lineno + 1);
            };
            config
                .apply(key.trim(), value.trim())
                .with_context(|| format!("config line {}", lineno + 1))?;
        }
        config.validate()?;
        Ok(config)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "alpha" => self.alpha = parse_num(key, value)?,
            "tol" => self.tol = parse_num(key, value)?,
            "max_iter" => {
                self.max_iter = value.parse().with_context(|| format!("bad {key}: {value:?}"))?
            }
            "delta" => self.delta = parse_num(key, value)?,
            "k" => self.k = value.parse().with_context(|| format!("bad {key}: {value:?}"))?,
            "format" => {
                self.format = match value {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    other => bail!("unknown format {other:?} (expected csv or json)"),
                }
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "countries_file" => self.countries_file = PathBuf::from(value),
            "products_file" => self.products_file = PathBuf::from(value),
            "dangling_policy" => {
                if value != DANGLING_POLICY {
                    bail!("unsupported dangling_policy {value:?} (only {DANGLING_POLICY})");
                }
            }
            _ => {
                if let Some(year) = key.strip_prefix("data.") {
                    let year: i32 =
                        year.parse().with_context(|| format!("bad year in key {key:?}"))?;
                    self.data.insert(year, PathBuf::from(value));
                } else {
                    bail!("unknown config key {key:?}");
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!("alpha = {} must lie strictly inside (0, 1)", self.alpha);
        }
        if !(self.tol > 0.0) {
            bail!("tol = {} must be positive", self.tol);
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            bail!("delta = {} must lie in (0, 1)", self.delta);
        }
        if self.k == 0 {
            bail!("k must be at least 1");
        }
        Ok(())
    }

    /// Path of the trade data for one year, from the override or the config.
    pub fn data_path(&self, year: i32, override_path: Option<&PathBuf>) -> Result<PathBuf> {
        if let Some(p) = override_path {
            return Ok(p.clone());
        }
        match self.data.get(&year) {
            Some(p) => Ok(p.clone()),
            None => bail!(
                "no data file configured for year {year}; add `data.{year} = <path>` to the \
                 config or pass --data"
            ),
        }
    }
}

fn parse_num(key: &str, value: &str) -> Result<f64> {
    let parsed: f64 = value.parse().with_context(|| format!("bad {key}: {value:?}"))?;
    if !parsed.is_finite() {
        bail!("{key} must be finite, got {value:?}");
    }
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn parses_keys_comments_and_year_paths() {
        let f = write_config(
            "# comment\nalpha = 0.6\nk = 3\ndata.2018 = a.csv # trailing\n\ndata.2020 = b.csv\n",
        );
        let c = RunConfig::load(f.path()).unwrap();
        assert_eq!(c.alpha, 0.6);
        assert_eq!(c.k, 3);
        assert_eq!(c.data[&2018], PathBuf::from("a.csv"));
        assert_eq!(c.data[&2020], PathBuf::from("b.csv"));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_alpha() {
        let f = write_config("wat = 1\n");
        assert!(RunConfig::load(f.path()).is_err());
        let f = write_config("alpha = 1.0\n");
        assert!(RunConfig::load(f.path()).is_err());
    }

    #[test]
    fn rejects_other_dangling_policies() {
        let f = write_config("dangling_policy = per_product\n");
        assert!(RunConfig::load(f.path()).is_err());
        let f = write_config("dangling_policy = uniform_1_over_N\n");
        assert!(RunConfig::load(f.path()).is_ok());
    }

    #[test]
    fn missing_config_file_is_typed() {
        let err = RunConfig::load(Path::new("/nonexistent/wtn.conf")).unwrap_err();
        assert!(err.downcast_ref::<MissingFile>().is_some());
    }

    #[test]
    fn data_path_falls_back_to_config() {
        let mut c = RunConfig::default();
        c.data.insert(2018, PathBuf::from("x.csv"));
        assert_eq!(c.data_path(2018, None).unwrap(), PathBuf::from("x.csv"));
        let over = PathBuf::from("y.csv");
        assert_eq!(c.data_path(2018, Some(&over)).unwrap(), over);
        assert!(c.data_path(2019, None).is_err());
    }
}
