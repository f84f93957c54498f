//! File ingestion: registries and bilateral trade records.
//!
//! Trade records arrive as CSV with the header
//! `year,reporter,partner,sitc,flow,value_usd`. Rows naming codes outside the
//! registries are skipped and counted rather than failing the run, because
//! real trade extracts carry aggregates ("World", regions) that must be
//! dropped. Malformed rows are collected as per-line diagnostics.

use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use wtn_core::registry::{CountryRegistry, ProductRegistry, Registries};
use wtn_core::tensor::{Flow, MoneyTensor, TradeRecord};

/// A file the run needs but cannot find. Mapped to exit code 2.
#[derive(Debug)]
pub struct MissingFile(pub PathBuf);

impl fmt::Display for MissingFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing file: {}", self.0.display())
    }
}

impl std::error::Error for MissingFile {}

fn open(path: &Path) -> Result<File> {
    if !path.exists() {
        return Err(MissingFile(path.to_path_buf()).into());
    }
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

/// Loads the `iso2,name` and `sitc,label` registry files.
pub fn load_registries(countries: &Path, products: &Path) -> Result<Registries> {
    let mut reader = csv::Reader::from_reader(open(countries)?);
    expect_header(&mut reader, &["iso2", "name"], countries)?;
    let mut country_entries = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("reading {}", countries.display()))?;
        country_entries.push((field(&record, 0), field(&record, 1)));
    }
    let country_registry = CountryRegistry::new(country_entries)
        .with_context(|| format!("validating {}", countries.display()))?;

    let mut reader = csv::Reader::from_reader(open(products)?);
    expect_header(&mut reader, &["sitc", "label"], products)?;
    let mut product_entries = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("reading {}", products.display()))?;
        let code: u8 = field(&record, 0)
            .parse()
            .with_context(|| format!("bad sitc code in {}", products.display()))?;
        product_entries.push((code, field(&record, 1)));
    }
    let product_registry = ProductRegistry::new(product_entries)
        .with_context(|| format!("validating {}", products.display()))?;

    Ok(Registries::new(product_registry, country_registry))
}

fn field(record: &csv::StringRecord, idx: usize) -> String {
    record.get(idx).unwrap_or("").trim().to_string()
}

fn expect_header<R: Read>(
    reader: &mut csv::Reader<R>,
    expected: &[&str],
    path: &Path,
) -> Result<()> {
    let headers = reader.headers().with_context(|| format!("reading {}", path.display()))?;
    let got: Vec<String> =
        headers.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    if got != expected {
        bail!(
            "{}: expected header {}, got {}",
            path.display(),
            expected.join(","),
            got.join(",")
        );
    }
    Ok(())
}

/// One rejected row with its location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDiagnostic {
    pub line: u64,
    pub message: String,
}

/// Counters describing what happened to the input rows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseSummary {
    pub rows: usize,
    pub accepted: usize,
    pub skipped_self_trade: usize,
    pub skipped_unknown_country: usize,
    pub skipped_unknown_product: usize,
    pub rejected: Vec<RowDiagnostic>,
}

impl ParseSummary {
    pub fn describe(&self) -> String {
        format!(
            "{} rows: {} accepted, {} self-trades skipped, {} unknown-country skipped, \
             {} unknown-product skipped, {} rejected",
            self.rows,
            self.accepted,
            self.skipped_self_trade,
            self.skipped_unknown_country,
            self.skipped_unknown_product,
            self.rejected.len()
        )
    }
}

const TRADE_HEADER: [&str; 6] = ["year", "reporter", "partner", "sitc", "flow", "value_usd"];

/// Parses and validates trade records from a CSV stream.
///
/// Returns the retained records (all years) and the skip/reject summary.
/// A stream without a single data row is a hard error.
pub fn parse_records<R: Read>(
    reader: R,
    registries: &Registries,
) -> Result<(Vec<TradeRecord>, ParseSummary)> {
    let mut csv_reader = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    {
        let headers = csv_reader.headers().context("reading trade record header")?;
        let got: Vec<String> = headers.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
        if got != TRADE_HEADER {
            bail!(
                "trade records: expected header {}, got {}",
                TRADE_HEADER.join(","),
                got.join(",")
            );
        }
    }

    let mut records = Vec::new();
    let mut summary = ParseSummary::default();
    for row in csv_reader.records() {
        let row = row.context("reading trade records")?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        summary.rows += 1;
        match parse_row(&row, registries) {
            Ok(RowOutcome::Record(rec)) => {
                summary.accepted += 1;
                records.push(rec);
            }
            Ok(RowOutcome::SelfTrade) => summary.skipped_self_trade += 1,
            Ok(RowOutcome::UnknownCountry) => summary.skipped_unknown_country += 1,
            Ok(RowOutcome::UnknownProduct) => summary.skipped_unknown_product += 1,
            Err(message) => summary.rejected.push(RowDiagnostic { line, message }),
        }
    }
    if summary.rows == 0 {
        bail!("trade record stream contains no data rows");
    }
    Ok((records, summary))
}

enum RowOutcome {
    Record(TradeRecord),
    SelfTrade,
    UnknownCountry,
    UnknownProduct,
}

fn parse_row(row: &csv::StringRecord, registries: &Registries) -> std::result::Result<RowOutcome, String> {
    if row.len() != TRADE_HEADER.len() {
        return Err(format!("expected {} fields, got {}", TRADE_HEADER.len(), row.len()));
    }
    let get = |i: usize| row.get(i).unwrap_or("").trim();
    let year: i32 = get(0).parse().map_err(|_| format!("bad year {:?}", get(0)))?;
    let Some(reporter) = registries.countries.index_of(get(1)) else {
        return Ok(RowOutcome::UnknownCountry);
    };
    let Some(partner) = registries.countries.index_of(get(2)) else {
        return Ok(RowOutcome::UnknownCountry);
    };
    let sitc: u8 = get(3).parse().map_err(|_| format!("bad sitc code {:?}", get(3)))?;
    if !registries.products.contains(sitc) {
        return Ok(RowOutcome::UnknownProduct);
    }
    let flow = match get(4).to_ascii_lowercase().as_str() {
        "import" => Flow::Import,
        "export" => Flow::Export,
        other => return Err(format!("bad flow {other:?} (expected import or export)")),
    };
    let value: f64 = get(5).parse().map_err(|_| format!("bad value {:?}", get(5)))?;
    if !value.is_finite() || value < 0.0 {
        return Err(format!("value {value} is not finite and non-negative"));
    }
    if reporter == partner {
        return Ok(RowOutcome::SelfTrade);
    }
    Ok(RowOutcome::Record(TradeRecord { year, reporter, partner, product: sitc, flow, value }))
}

/// Reads a trade file and builds the money tensor for one year.
pub fn load_tensor(
    path: &Path,
    year: i32,
    registries: &Registries,
) -> Result<(MoneyTensor, ParseSummary)> {
    let file = open(path)?;
    let (records, summary) =
        parse_records(file, registries).with_context(|| format!("parsing {}", path.display()))?;
    let tensor = MoneyTensor::build(&records, year, registries.clone())
        .with_context(|| format!("building money tensor for {year} from {}", path.display()))?;
    Ok((tensor, summary))
}
