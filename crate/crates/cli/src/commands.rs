//! Subcommand dispatch: one command, one artifact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Parser, Subcommand, ValueEnum};

use wtn_core::balance::{self, balance_sensitivity, BalanceReport, SensitivityReport};
use wtn_core::google::{assemble_google, build_personalization, build_stochastic, Direction};
use wtn_core::metrics::{kendall_distance, RankingList};
use wtn_core::netreduce::{diff_networks, top_k_network, EdgeClass};
use wtn_core::ranks::{
    compute_ranks, import_export_rank, pagerank, sort_index, two_d_rank, Level, PipelineParams,
    RankKind, RankSet, RankVector,
};
use wtn_core::regomax::{reduce, reduced_for_product, ReducedMatrix};
use wtn_core::registry::Registries;
use wtn_core::tensor::MoneyTensor;
use wtn_core::GoogleMatrix;

use crate::config::{OutputFormat, RunConfig};
use crate::ingest;
use crate::output::{Cell, Emitter, Table};

#[derive(Parser)]
#[command(
    name = "wtn",
    version,
    about = "Google-matrix analysis of the multiproduct world trade network"
)]
pub struct Cli {
    /// Flat key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; artifacts go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Artifact encoding.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Country registry (`iso2,name`).
    #[arg(long, global = true)]
    countries_file: Option<PathBuf>,

    /// Product registry (`sitc,label`).
    #[arg(long, global = true)]
    products_file: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Pagerank,
    Cheirank,
    Importrank,
    Exportrank,
}

impl MetricArg {
    fn kind(self) -> RankKind {
        match self {
            MetricArg::Pagerank => RankKind::PageRank,
            MetricArg::Cheirank => RankKind::CheiRank,
            MetricArg::Importrank => RankKind::ImportRank,
            MetricArg::Exportrank => RankKind::ExportRank,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    Node,
    Country,
    Product,
}

impl LevelArg {
    fn level(self) -> Level {
        match self {
            LevelArg::Node => Level::Node,
            LevelArg::Country => Level::Country,
            LevelArg::Product => Level::Product,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ranking probabilities at a chosen aggregation level.
    Rank {
        #[arg(long)]
        year: i32,
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[arg(long, value_enum, default_value = "country")]
        level: LevelArg,
        /// Trade data file, overriding the config entry for the year.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Country trade balances (network-aware and volume-based).
    Balance {
        #[arg(long)]
        year: i32,
        /// Emit the change diff-year minus year instead.
        #[arg(long)]
        diff_year: Option<i32>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        diff_data: Option<PathBuf>,
    },
    /// (Product, country) balance matrix, rows = products.
    BalanceMatrix {
        #[arg(long)]
        year: i32,
        #[arg(long)]
        diff_year: Option<i32>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        diff_data: Option<PathBuf>,
    },
    /// Sensitivity of country balances to one product's price.
    Sensitivity {
        #[arg(long)]
        year: i32,
        #[arg(long)]
        product: u8,
        /// Finite-difference step (default from config).
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        diff_year: Option<i32>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        diff_data: Option<PathBuf>,
    },
    /// Reduced Google matrix for one product over a country subset.
    Regomax {
        #[arg(long)]
        year: i32,
        #[arg(long)]
        product: u8,
        /// Comma-separated codes or a file with one code per line;
        /// defaults to the top 20 countries by 2DRank.
        #[arg(long)]
        countries: Option<String>,
        #[arg(long)]
        diff_year: Option<i32>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        diff_data: Option<PathBuf>,
    },
    /// Strongest export transitions and their change between two years.
    Network {
        #[arg(long)]
        year: i32,
        #[arg(long)]
        diff_year: i32,
        #[arg(long)]
        product: u8,
        /// Outgoing edges kept per country (default from config).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        countries: Option<String>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        diff_data: Option<PathBuf>,
    },
    /// Kendall tau distances between the years' ranking lists.
    Kendall {
        #[arg(long, value_enum)]
        metric: MetricArg,
        /// Comma-separated list, e.g. 2018,2019,2020.
        #[arg(long)]
        years: String,
        #[arg(long, value_enum, default_value = "country")]
        level: LevelArg,
    },
    /// Link count and total volume of a year's tensor.
    Stats {
        #[arg(long)]
        year: i32,
        #[arg(long)]
        diff_year: Option<i32>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        diff_data: Option<PathBuf>,
    },
}

pub fn run() -> Result<()> {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    if let Some(format) = cli.format {
        config.format = match format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    if let Some(path) = &cli.countries_file {
        config.countries_file = path.clone();
    }
    if let Some(path) = &cli.products_file {
        config.products_file = path.clone();
    }
    config.validate()?;

    let registries = ingest::load_registries(&config.countries_file, &config.products_file)?;
    let mut ctx = Context {
        emitter: Emitter::new(config.out.clone(), config.format),
        config,
        registries,
        tensors: BTreeMap::new(),
    };
    ctx.dispatch(cli.command)?;
    ctx.emitter.finish()
}

struct Context {
    config: RunConfig,
    registries: Registries,
    tensors: BTreeMap<i32, MoneyTensor>,
    emitter: Emitter,
}

impl Context {
    fn params(&self) -> PipelineParams {
        PipelineParams {
            alpha: self.config.alpha,
            tol: self.config.tol,
            max_iter: self.config.max_iter,
        }
    }

    fn load_year(&mut self, year: i32, override_path: Option<&PathBuf>) -> Result<()> {
        if self.tensors.contains_key(&year) {
            return Ok(());
        }
        let path = self.config.data_path(year, override_path)?;
        let (tensor, summary) = ingest::load_tensor(&path, year, &self.registries)?;
        eprintln!("{} ({year}): {}", path.display(), summary.describe());
        for diag in summary.rejected.iter().take(10) {
            eprintln!("  rejected line {}: {}", diag.line, diag.message);
        }
        self.tensors.insert(year, tensor);
        Ok(())
    }

    fn tensor(&self, year: i32) -> &MoneyTensor {
        &self.tensors[&year]
    }

    fn google(&self, year: i32, direction: Direction) -> Result<GoogleMatrix> {
        let m = self.tensor(year);
        let s = build_stochastic(m, direction)?;
        let v = build_personalization(m)?;
        Ok(assemble_google(s, v, self.config.alpha)?)
    }

    fn rank_vector(&self, year: i32, metric: MetricArg) -> Result<RankVector> {
        let params = self.params();
        Ok(match metric {
            MetricArg::Pagerank => {
                let g = self.google(year, Direction::Direct)?;
                pagerank(&g, params.tol, params.max_iter)?.0
            }
            MetricArg::Cheirank => {
                let g = self.google(year, Direction::Inverted)?;
                pagerank(&g, params.tol, params.max_iter)?.0
            }
            MetricArg::Importrank => import_export_rank(self.tensor(year))?.0,
            MetricArg::Exportrank => import_export_rank(self.tensor(year))?.1,
        })
    }

    fn rank_set(&self, year: i32) -> Result<RankSet> {
        Ok(compute_ranks(self.tensor(year), &self.params())?)
    }

    fn country_code(&self, c: u16) -> &str {
        self.registries.countries.code(c).unwrap_or("??")
    }

    fn node_label(&self, node: u32) -> String {
        let (p, c) = self.registries.node_parts(node);
        format!("p{p}:{}", self.country_code(c))
    }

    fn entity_label(&self, level: Level, entity: u32) -> String {
        match level {
            Level::Node => self.node_label(entity),
            Level::Country => self.country_code(entity as u16).to_string(),
            Level::Product => format!("p{entity}"),
        }
    }

    /// Country subset for reduced-matrix commands: explicit list, file, or
    /// the top 20 countries of the year's 2DRank.
    fn resolve_countries(&self, spec: Option<&str>, year: i32) -> Result<Vec<u16>> {
        let codes: Vec<String> = match spec {
            None => {
                let ranks = self.rank_set(year)?;
                let k = sort_index(&ranks.pagerank, Level::Country);
                let kstar = sort_index(&ranks.cheirank, Level::Country);
                let k2 = two_d_rank(&k, &kstar)?;
                let take = k2.len().min(20);
                return Ok(k2.entries()[..take].iter().map(|e| e.entity as u16).collect());
            }
            Some(spec) if Path::new(spec).exists() => std::fs::read_to_string(spec)
                .with_context(|| format!("reading country list {spec}"))?
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim().to_string())
                .filter(|l| !l.is_empty())
                .collect(),
            Some(spec) => spec.split(',').map(|s| s.trim().to_string()).collect(),
        };
        if codes.is_empty() {
            bail!("country subset is empty");
        }
        let mut out = Vec::with_capacity(codes.len());
        for code in &codes {
            let idx = self
                .registries
                .countries
                .index_of(code)
                .ok_or_else(|| anyhow!("unknown country code {code:?}"))?;
            if out.contains(&idx) {
                bail!("country {code:?} listed twice");
            }
            out.push(idx);
        }
        Ok(out)
    }

    /// Reduced matrices for the base year and optionally a comparison year,
    /// over the same subset ordering (fixed by the base year's PageRank).
    fn reduced_pair(
        &mut self,
        year: i32,
        diff_year: Option<i32>,
        product: u8,
        countries: Option<&str>,
        data: Option<&PathBuf>,
        diff_data: Option<&PathBuf>,
    ) -> Result<(ReducedMatrix, Option<ReducedMatrix>)> {
        self.load_year(year, data)?;
        let subset_countries = self.resolve_countries(countries, year)?;
        let g = self.google(year, Direction::Direct)?;
        let params = self.params();
        let (node_rank, _) = pagerank(&g, params.tol, params.max_iter)?;
        let base = reduced_for_product(&g, &node_rank, &subset_countries, product)?;
        let other = match diff_year {
            Some(y2) => {
                self.load_year(y2, diff_data)?;
                let g2 = self.google(y2, Direction::Direct)?;
                Some(reduce(&g2, base.subset().clone())?)
            }
            None => None,
        };
        Ok((base, other))
    }

    fn dispatch(&mut self, command: Command) -> Result<()> {
        match command {
            Command::Rank { year, metric, level, data } => {
                self.load_year(year, data.as_ref())?;
                let vector = self.rank_vector(year, metric)?;
                let level = level.level();
                let index = sort_index(&vector, level);
                let probs = vector.probs(level);
                let mut table = Table::new(vec!["rank", "entity", "probability"]);
                for (pos, &entity) in index.ordering().iter().enumerate() {
                    table.push(vec![
                        Cell::Int(pos as i64 + 1),
                        self.entity_label(level, entity).into(),
                        Cell::Float(probs[entity as usize]),
                    ]);
                }
                let stem =
                    format!("rank_{}_{}_{year}", metric.kind().as_str(), level.as_str());
                self.emitter.emit(&stem, &table)
            }

            Command::Balance { year, diff_year, data, diff_data } => {
                self.load_year(year, data.as_ref())?;
                let report = BalanceReport::compute(&self.rank_set(year)?)?;
                match diff_year {
                    None => {
                        let mut table = Table::new(vec!["country", "B", "Bhat"]);
                        for c in 0..report.country_count() {
                            table.push(vec![
                                self.country_code(c as u16).into(),
                                Cell::Float(report.country[c]),
                                Cell::Float(report.country_volume[c]),
                            ]);
                        }
                        self.emitter.emit(&format!("balance_{year}"), &table)
                    }
                    Some(y2) => {
                        self.load_year(y2, diff_data.as_ref())?;
                        let later = BalanceReport::compute(&self.rank_set(y2)?)?;
                        let delta = balance::diff(&report, &later)?;
                        let mut table = Table::new(vec!["country", "dB", "dBhat"]);
                        for c in 0..report.country_count() {
                            table.push(vec![
                                self.country_code(c as u16).into(),
                                Cell::Float(delta.country[c]),
                                Cell::Float(delta.country_volume[c]),
                            ]);
                        }
                        self.emitter.emit(&format!("balance_diff_{year}_{y2}"), &table)
                    }
                }
            }

            Command::BalanceMatrix { year, diff_year, data, diff_data } => {
                self.load_year(year, data.as_ref())?;
                let report = BalanceReport::compute(&self.rank_set(year)?)?;
                let nc = report.country_count();
                let np = report.product_count();
                let mut headers = vec!["product".to_string()];
                headers.extend((0..nc).map(|c| self.country_code(c as u16).to_string()));
                let (values, stem) = match diff_year {
                    None => (report.product_country.clone(), format!("balance_matrix_{year}")),
                    Some(y2) => {
                        self.load_year(y2, diff_data.as_ref())?;
                        let later = BalanceReport::compute(&self.rank_set(y2)?)?;
                        let delta = balance::diff(&report, &later)?;
                        (delta.product_country, format!("balance_matrix_diff_{year}_{y2}"))
                    }
                };
                let mut table = Table::new(headers);
                for p in 0..np {
                    let mut row: Vec<Cell> = vec![format!("p{p}").into()];
                    row.extend((0..nc).map(|c| Cell::Float(values[p * nc + c])));
                    table.push(row);
                }
                self.emitter.emit(&stem, &table)
            }

            Command::Sensitivity { year, product, delta, diff_year, data, diff_data } => {
                let delta = delta.unwrap_or(self.config.delta);
                self.load_year(year, data.as_ref())?;
                let report =
                    balance_sensitivity(self.tensor(year), product, delta, &self.params())?;
                let (values, stem) = match diff_year {
                    None => {
                        (report.d_balance.clone(), format!("sensitivity_p{product}_{year}"))
                    }
                    Some(y2) => {
                        self.load_year(y2, diff_data.as_ref())?;
                        let later = balance_sensitivity(
                            self.tensor(y2),
                            product,
                            delta,
                            &self.params(),
                        )?;
                        (
                            SensitivityReport::diff(&report, &later)?,
                            format!("sensitivity_p{product}_diff_{year}_{y2}"),
                        )
                    }
                };
                let mut table = Table::new(vec!["country", "dBddelta"]);
                for (c, &value) in values.iter().enumerate() {
                    table.push(vec![self.country_code(c as u16).into(), Cell::Float(value)]);
                }
                self.emitter.emit(&stem, &table)
            }

            Command::Regomax { year, product, countries, diff_year, data, diff_data } => {
                let (base, other) = self.reduced_pair(
                    year,
                    diff_year,
                    product,
                    countries.as_deref(),
                    data.as_ref(),
                    diff_data.as_ref(),
                )?;
                let labels: Vec<String> = base
                    .subset()
                    .members()
                    .iter()
                    .map(|&node| {
                        let (_, c) = self.registries.node_parts(node);
                        self.country_code(c).to_string()
                    })
                    .collect();
                let mut headers = vec!["entity".to_string()];
                headers.extend(labels.iter().cloned());
                let mut table = Table::new(headers);
                let n = base.order();
                let stem = match &other {
                    None => format!("regomax_p{product}_{year}"),
                    Some(later) => {
                        format!("regomax_p{product}_diff_{year}_{}", later.year())
                    }
                };
                match other {
                    None => {
                        for i in 0..n {
                            let mut row: Vec<Cell> = vec![labels[i].clone().into()];
                            row.extend((0..n).map(|j| Cell::Float(base.at(i, j))));
                            table.push(row);
                        }
                    }
                    Some(later) => {
                        let delta = ReducedMatrix::diff(&base, &later)?;
                        for i in 0..n {
                            let mut row: Vec<Cell> = vec![labels[i].clone().into()];
                            row.extend((0..n).map(|j| Cell::Float(delta.at(i, j))));
                            table.push(row);
                        }
                    }
                }
                self.emitter.emit(&stem, &table)
            }

            Command::Network { year, diff_year, product, k, countries, data, diff_data } => {
                let k = k.unwrap_or(self.config.k);
                let (base, other) = self.reduced_pair(
                    year,
                    Some(diff_year),
                    product,
                    countries.as_deref(),
                    data.as_ref(),
                    diff_data.as_ref(),
                )?;
                let later = other.expect("diff year is mandatory for network");
                let net_a = top_k_network(&base, k)?;
                let net_b = top_k_network(&later, k)?;
                let diff = diff_networks(&net_a, &net_b)?;
                let mut table =
                    Table::new(vec!["source", "target", "class", "weight_y1", "weight_y2"]);
                // Order: gone, stable, new; alphabetical inside each class.
                let class_order = |class: EdgeClass| match class {
                    EdgeClass::Disappearing => 0,
                    EdgeClass::StableUp | EdgeClass::StableDown => 1,
                    EdgeClass::Appearing => 2,
                };
                let mut edges = diff.edges.clone();
                edges.sort_by_key(|e| (class_order(e.class), e.from, e.to));
                for edge in &edges {
                    let (_, from_c) = self.registries.node_parts(edge.from);
                    let (_, to_c) = self.registries.node_parts(edge.to);
                    table.push(vec![
                        self.country_code(from_c).into(),
                        self.country_code(to_c).into(),
                        edge.class.as_str().into(),
                        edge.weight_from.map_or(Cell::Empty, Cell::Float),
                        edge.weight_to.map_or(Cell::Empty, Cell::Float),
                    ]);
                }
                let stem = format!("network_p{product}_{year}_{diff_year}_k{k}");
                self.emitter.emit(&stem, &table)
            }

            Command::Kendall { metric, years, level } => {
                let mut year_list: Vec<i32> = Vec::new();
                for part in years.split(',') {
                    let year: i32 = part
                        .trim()
                        .parse()
                        .with_context(|| format!("bad year {:?} in --years", part.trim()))?;
                    if year_list.contains(&year) {
                        bail!("year {year} listed twice in --years");
                    }
                    year_list.push(year);
                }
                if year_list.len() < 2 {
                    bail!("--years needs at least two distinct years");
                }
                year_list.sort_unstable();
                let level = level.level();
                let mut lists = Vec::with_capacity(year_list.len());
                for &year in &year_list {
                    self.load_year(year, None)?;
                    let vector = self.rank_vector(year, metric)?;
                    let index = sort_index(&vector, level);
                    lists.push(RankingList::from_rank_index(&index));
                }
                let mut table = Table::new(vec!["year_a", "year_b", "distance"]);
                for i in 0..year_list.len() {
                    for j in i + 1..year_list.len() {
                        let d = kendall_distance(&lists[i], &lists[j])?;
                        table.push(vec![
                            Cell::Int(year_list[i] as i64),
                            Cell::Int(year_list[j] as i64),
                            Cell::Float(d),
                        ]);
                    }
                }
                let stem =
                    format!("kendall_{}_{}", metric.kind().as_str(), level.as_str());
                self.emitter.emit(&stem, &table)
            }

            Command::Stats { year, diff_year, data, diff_data } => {
                self.load_year(year, data.as_ref())?;
                let base = self.tensor(year).stats();
                match diff_year {
                    None => {
                        let mut table = Table::new(vec!["year", "links", "volume"]);
                        table.push(vec![
                            Cell::Int(year as i64),
                            Cell::Int(base.links as i64),
                            Cell::Float(base.volume),
                        ]);
                        self.emitter.emit(&format!("stats_{year}"), &table)
                    }
                    Some(y2) => {
                        self.load_year(y2, diff_data.as_ref())?;
                        let later = self.tensor(y2).stats();
                        let pct = |a: f64, b: f64| if a == 0.0 { 0.0 } else { (b - a) / a * 100.0 };
                        let mut table = Table::new(vec![
                            "year",
                            "links",
                            "volume",
                            "links_pct_change",
                            "volume_pct_change",
                        ]);
                        table.push(vec![
                            Cell::Int(year as i64),
                            Cell::Int(base.links as i64),
                            Cell::Float(base.volume),
                            Cell::Empty,
                            Cell::Empty,
                        ]);
                        table.push(vec![
                            Cell::Int(y2 as i64),
                            Cell::Int(later.links as i64),
                            Cell::Float(later.volume),
                            Cell::Float(pct(base.links as f64, later.links as f64)),
                            Cell::Float(pct(base.volume, later.volume)),
                        ]);
                        self.emitter.emit(&format!("stats_{year}_{y2}"), &table)
                    }
                }
            }
        }
    }
}
