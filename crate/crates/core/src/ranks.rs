//! PageRank, CheiRank and volume-based rankings.
//!
//! PageRank is the stationary vector of G (import ability); CheiRank is the
//! stationary vector of the inverted-flow matrix G* (export ability). Both
//! are computed by power iteration starting from the personalization vector.
//! ImportRank and ExportRank are the plain volume shares, kept as the
//! conventional point of comparison.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::google::{
    assemble_google, build_personalization, build_stochastic, Direction, GoogleMatrix,
    DEFAULT_ALPHA,
};
use crate::tensor::MoneyTensor;

/// Default L1 residual tolerance for power iteration. At alpha = 0.5 this
/// converges in roughly forty iterations.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Default iteration budget for power iteration.
pub const DEFAULT_MAX_ITER: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankKind {
    PageRank,
    CheiRank,
    ImportRank,
    ExportRank,
}

impl RankKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RankKind::PageRank => "pagerank",
            RankKind::CheiRank => "cheirank",
            RankKind::ImportRank => "importrank",
            RankKind::ExportRank => "exportrank",
        }
    }
}

/// Aggregation level of a ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Node,
    Country,
    Product,
}

impl Level {
    pub fn as_str(&self) -> &'static str {
        match self {
            Level::Node => "node",
            Level::Country => "country",
            Level::Product => "product",
        }
    }
}

/// A probability vector over nodes with its country and product aggregations.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    kind: RankKind,
    year: i32,
    n_products: usize,
    n_countries: usize,
    node: Vec<f64>,
    country: Vec<f64>,
    product: Vec<f64>,
}

impl RankVector {
    /// Wraps node-level probabilities, normalizing them to sum 1 and
    /// aggregating by summation.
    fn from_node_probs(
        kind: RankKind,
        year: i32,
        n_products: usize,
        n_countries: usize,
        mut node: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(node.len(), n_products * n_countries);
        let total: f64 = node.iter().sum();
        debug_assert!(total > 0.0);
        for x in &mut node {
            *x /= total;
        }
        let (country, product) = aggregate(&node, n_products, n_countries);
        Self { kind, year, n_products, n_countries, node, country, product }
    }

    /// Wraps volume shares. The product aggregation is supplied by the caller
    /// so that import and export vectors share bitwise-identical product
    /// probabilities (their per-product totals are the same sums of the same
    /// cells, and keeping them identical makes the product-level
    /// import-export balance vanish exactly).
    fn from_volume_shares(
        kind: RankKind,
        year: i32,
        n_products: usize,
        n_countries: usize,
        node: Vec<f64>,
        product: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(node.len(), n_products * n_countries);
        let (country, _) = aggregate(&node, n_products, n_countries);
        Self { kind, year, n_products, n_countries, node, country, product }
    }

    pub fn kind(&self) -> RankKind {
        self.kind
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn product_count(&self) -> usize {
        self.n_products
    }

    pub fn country_count(&self) -> usize {
        self.n_countries
    }

    pub fn node_probs(&self) -> &[f64] {
        &self.node
    }

    pub fn country_probs(&self) -> &[f64] {
        &self.country
    }

    pub fn product_probs(&self) -> &[f64] {
        &self.product
    }

    pub fn probs(&self, level: Level) -> &[f64] {
        match level {
            Level::Node => &self.node,
            Level::Country => &self.country,
            Level::Product => &self.product,
        }
    }

    #[inline]
    pub fn node_prob(&self, product: u8, country: u16) -> f64 {
        self.node[product as usize * self.n_countries + country as usize]
    }
}

fn aggregate(node: &[f64], n_products: usize, n_countries: usize) -> (Vec<f64>, Vec<f64>) {
    let mut country = vec![0.0; n_countries];
    let mut product = vec![0.0; n_products];
    for p in 0..n_products {
        for c in 0..n_countries {
            let x = node[p * n_countries + c];
            country[c] += x;
            product[p] += x;
        }
    }
    (country, product)
}

/// Power-iteration diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub iterations: usize,
    /// L1 residual of the last step.
    pub residual: f64,
}

fn kind_for(g: &GoogleMatrix) -> RankKind {
    match g.direction() {
        Direction::Direct => RankKind::PageRank,
        Direction::Inverted => RankKind::CheiRank,
    }
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn normalize_l1(x: &mut [f64]) {
    let total: f64 = x.iter().sum();
    if total > 0.0 {
        for v in x.iter_mut() {
            *v /= total;
        }
    }
}

/// Computes the stationary vector of `g` by power iteration.
///
/// Starts from the personalization vector and stops once the L1 residual
/// ||G x - x|| drops to `tol`. Since the returned vector is itself G x, its
/// own residual is no larger than the measured one.
pub fn pagerank(
    g: &GoogleMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(RankVector, Convergence), Error> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidTolerance(tol));
    }
    let mut x = g.personalization().values().to_vec();
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        let mut y = g.matvec(&x);
        residual = l1_distance(&y, &x);
        normalize_l1(&mut y);
        x = y;
        if residual <= tol {
            let rank = RankVector::from_node_probs(
                kind_for(g),
                g.year(),
                g.product_count(),
                g.country_count(),
                x,
            );
            return Ok((rank, Convergence { iterations: iteration, residual }));
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual })
}

/// Power iteration with a fixed step count, for runs whose iteration count
/// must not depend on the data (finite-difference pipelines).
pub fn pagerank_fixed(g: &GoogleMatrix, iterations: usize) -> (RankVector, Convergence) {
    let mut x = g.personalization().values().to_vec();
    let mut residual = f64::INFINITY;
    for _ in 0..iterations {
        let mut y = g.matvec(&x);
        residual = l1_distance(&y, &x);
        normalize_l1(&mut y);
        x = y;
    }
    let rank = RankVector::from_node_probs(
        kind_for(g),
        g.year(),
        g.product_count(),
        g.country_count(),
        x,
    );
    (rank, Convergence { iterations, residual })
}

/// Normalized import and export volume shares, returned as
/// (ImportRank, ExportRank).
pub fn import_export_rank(m: &MoneyTensor) -> Result<(RankVector, RankVector), Error> {
    let total = m.total_volume();
    if total <= 0.0 {
        return Err(Error::EmptyNetwork);
    }
    let reg = m.registries();
    let np = reg.product_count();
    let nc = reg.country_count();
    let mut imports = vec![0.0; np * nc];
    let mut exports = vec![0.0; np * nc];
    for (&(product, exporter, importer), &value) in m.iter() {
        imports[reg.node_index(product, importer) as usize] += value;
        exports[reg.node_index(product, exporter) as usize] += value;
    }
    for x in imports.iter_mut().chain(exports.iter_mut()) {
        *x /= total;
    }
    let product_shares: Vec<f64> = (0..np).map(|p| m.product_volume(p as u8) / total).collect();
    let import_rank = RankVector::from_volume_shares(
        RankKind::ImportRank,
        m.year(),
        np,
        nc,
        imports,
        product_shares.clone(),
    );
    let export_rank = RankVector::from_volume_shares(
        RankKind::ExportRank,
        m.year(),
        np,
        nc,
        exports,
        product_shares,
    );
    Ok((import_rank, export_rank))
}

/// Entities sorted by descending probability; ties broken by ascending
/// registry index for determinism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankIndex {
    kind: RankKind,
    year: i32,
    level: Level,
    ordering: Vec<u32>,
}

impl RankIndex {
    /// Builds an index from an explicit ordering (must be a permutation).
    pub fn from_ordering(
        kind: RankKind,
        year: i32,
        level: Level,
        ordering: Vec<u32>,
    ) -> Result<Self, Error> {
        let n = ordering.len();
        let mut seen = vec![false; n];
        for &e in &ordering {
            let idx = e as usize;
            if idx >= n || seen[idx] {
                return Err(Error::NotAPermutation);
            }
            seen[idx] = true;
        }
        Ok(Self { kind, year, level, ordering })
    }

    pub fn kind(&self) -> RankKind {
        self.kind
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }

    /// Entity at rank `rank` (1-based).
    pub fn entity_at(&self, rank: usize) -> Option<u32> {
        self.ordering.get(rank - 1).copied()
    }

    /// Entities in rank order, best first.
    pub fn ordering(&self) -> &[u32] {
        &self.ordering
    }

    /// Inverse view: ranks[entity] = 1-based rank of the entity.
    pub fn ranks(&self) -> Vec<u32> {
        let mut ranks = vec![0u32; self.ordering.len()];
        for (pos, &entity) in self.ordering.iter().enumerate() {
            ranks[entity as usize] = pos as u32 + 1;
        }
        ranks
    }
}

/// Sorts a rank vector at the requested level into a rank index.
pub fn sort_index(r: &RankVector, level: Level) -> RankIndex {
    let probs = r.probs(level);
    let mut ordering: Vec<u32> = (0..probs.len() as u32).collect();
    ordering.sort_unstable_by(|&a, &b| {
        probs[b as usize]
            .total_cmp(&probs[a as usize])
            .then(a.cmp(&b))
    });
    RankIndex { kind: r.kind(), year: r.year(), level, ordering }
}

/// One row of a 2DRank ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoDEntry {
    pub entity: u32,
    /// Combined rank K2 (1-based).
    pub rank: u32,
    /// Rank in the first (PageRank-style) index.
    pub k: u32,
    /// Rank in the second (CheiRank-style) index.
    pub kstar: u32,
}

/// Entities ordered by ascending max(K, K*), ties by ascending K*.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoDRank {
    entries: Vec<TwoDEntry>,
}

impl TwoDRank {
    pub fn entries(&self) -> &[TwoDEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Combines two rank indexes over the same entity set into the 2DRank order.
pub fn two_d_rank(k_index: &RankIndex, kstar_index: &RankIndex) -> Result<TwoDRank, Error> {
    if k_index.level() != kstar_index.level() {
        return Err(Error::Incompatible(String::from(
            "2DRank inputs must be at the same aggregation level",
        )));
    }
    if k_index.len() != kstar_index.len() {
        return Err(Error::LengthMismatch { left: k_index.len(), right: kstar_index.len() });
    }
    let k = k_index.ranks();
    let kstar = kstar_index.ranks();
    let mut order: Vec<u32> = (0..k.len() as u32).collect();
    order.sort_unstable_by_key(|&e| {
        let i = e as usize;
        (k[i].max(kstar[i]), kstar[i])
    });
    let entries = order
        .into_iter()
        .enumerate()
        .map(|(pos, entity)| TwoDEntry {
            entity,
            rank: pos as u32 + 1,
            k: k[entity as usize],
            kstar: kstar[entity as usize],
        })
        .collect();
    Ok(TwoDRank { entries })
}

/// Shared knobs for the matrix-and-rank rebuild pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA, tol: DEFAULT_TOLERANCE, max_iter: DEFAULT_MAX_ITER }
    }
}

impl PipelineParams {
    /// Smallest step count guaranteeing an L1 residual below `tol` assuming
    /// the residual contracts by `alpha` per step from an initial value of at
    /// most 2. Capped by `max_iter`.
    pub fn fixed_iteration_budget(&self) -> usize {
        let mut bound = 2.0;
        let mut steps = 0usize;
        while bound > self.tol && steps < self.max_iter {
            bound *= self.alpha;
            steps += 1;
        }
        steps.max(1)
    }
}

/// All four rankings of one year.
#[derive(Debug, Clone, PartialEq)]
pub struct RankSet {
    pub pagerank: RankVector,
    pub cheirank: RankVector,
    pub importrank: RankVector,
    pub exportrank: RankVector,
    pub pagerank_convergence: Convergence,
    pub cheirank_convergence: Convergence,
}

/// Builds both Google matrices and computes all four rankings.
pub fn compute_ranks(m: &MoneyTensor, params: &PipelineParams) -> Result<RankSet, Error> {
    let direct = build_stochastic(m, Direction::Direct)?;
    let inverted = build_stochastic(m, Direction::Inverted)?;
    let v = build_personalization(m)?;
    let g = assemble_google(direct, v.clone(), params.alpha)?;
    let g_star = assemble_google(inverted, v, params.alpha)?;
    let (pagerank_vec, pagerank_convergence) = pagerank(&g, params.tol, params.max_iter)?;
    let (cheirank_vec, cheirank_convergence) = pagerank(&g_star, params.tol, params.max_iter)?;
    let (importrank, exportrank) = import_export_rank(m)?;
    Ok(RankSet {
        pagerank: pagerank_vec,
        cheirank: cheirank_vec,
        importrank,
        exportrank,
        pagerank_convergence,
        cheirank_convergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::test_registries;
    use alloc::vec;

    fn google_for(
        countries: &[&str],
        np: u8,
        flows: &[(u8, u16, u16, f64)],
        direction: Direction,
        alpha: f64,
    ) -> GoogleMatrix {
        let m = MoneyTensor::from_flows(2018, test_registries(countries, np), flows).unwrap();
        let s = build_stochastic(&m, direction).unwrap();
        let v = build_personalization(&m).unwrap();
        assemble_google(s, v, alpha).unwrap()
    }

    #[test]
    fn cyclic_network_ranks_uniformly() {
        let g = google_for(
            &["AA", "BB", "CC"],
            1,
            &[(0, 0, 1, 1.0), (0, 1, 2, 1.0), (0, 2, 0, 1.0)],
            Direction::Direct,
            0.7,
        );
        let (p, info) = pagerank(&g, 1e-13, 1000).unwrap();
        for &x in p.node_probs() {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(info.residual <= 1e-13);
    }

    #[test]
    fn dangling_chain_fixed_point() {
        // 1 -> 2 -> 3 with 3 dangling, alpha = 0.5, uniform v. The exact
        // stationary vector solves (I - alpha S) P = (1 - alpha) v with the
        // dangling column filled uniformly: P = (4, 6, 7) / 17.
        let g = google_for(
            &["AA", "BB", "CC"],
            1,
            &[(0, 0, 1, 1.0), (0, 1, 2, 1.0)],
            Direction::Direct,
            0.5,
        );
        let (p, _) = pagerank(&g, 1e-14, 1000).unwrap();
        let expected = [4.0 / 17.0, 6.0 / 17.0, 7.0 / 17.0];
        for (got, want) in p.node_probs().iter().zip(expected) {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
    }

    #[test]
    fn non_convergence_carries_residual() {
        let g = google_for(&["AA", "BB"], 1, &[(0, 0, 1, 1.0)], Direction::Direct, 0.5);
        match pagerank(&g, 1e-13, 2) {
            Err(Error::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-13);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn bad_tolerance_rejected() {
        let g = google_for(&["AA", "BB"], 1, &[(0, 0, 1, 1.0)], Direction::Direct, 0.5);
        assert!(matches!(pagerank(&g, 0.0, 10), Err(Error::InvalidTolerance(_))));
        assert!(matches!(pagerank(&g, -1.0, 10), Err(Error::InvalidTolerance(_))));
    }

    #[test]
    fn fixed_iteration_budget_reaches_tolerance() {
        let params = PipelineParams::default();
        let budget = params.fixed_iteration_budget();
        // 2 * 0.5^41 < 1e-12 <= 2 * 0.5^40
        assert_eq!(budget, 41);
        let g = google_for(
            &["AA", "BB", "CC"],
            1,
            &[(0, 0, 1, 2.0), (0, 1, 2, 1.0), (0, 1, 0, 3.0)],
            Direction::Direct,
            params.alpha,
        );
        let (_, info) = pagerank_fixed(&g, budget);
        assert!(info.residual <= params.tol);
    }

    #[test]
    fn single_flow_import_export() {
        let reg = test_registries(&["AA", "BB"], 1);
        let m = MoneyTensor::from_flows(2018, reg, &[(0, 0, 1, 4.0)]).unwrap();
        let (imp, exp) = import_export_rank(&m).unwrap();
        assert_eq!(exp.country_probs(), &[1.0, 0.0]);
        assert_eq!(imp.country_probs(), &[0.0, 1.0]);
    }

    #[test]
    fn import_shares_normalize() {
        let reg = test_registries(&["AA", "BB", "CC"], 1);
        let m = MoneyTensor::from_flows(2018, reg, &[(0, 0, 1, 3.0), (0, 0, 2, 1.0)]).unwrap();
        let (imp, _) = import_export_rank(&m).unwrap();
        assert_eq!(imp.country_probs(), &[0.0, 0.75, 0.25]);
    }

    #[test]
    fn product_shares_identical_for_both_directions() {
        let reg = test_registries(&["AA", "BB", "CC"], 3);
        let m = MoneyTensor::from_flows(
            2018,
            reg,
            &[(0, 0, 1, 3.0), (1, 1, 2, 2.0), (1, 2, 0, 0.5), (2, 2, 1, 9.0)],
        )
        .unwrap();
        let (imp, exp) = import_export_rank(&m).unwrap();
        assert_eq!(imp.product_probs(), exp.product_probs());
        let total: f64 = imp.product_probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sorting_is_descending_with_index_ties() {
        let reg = test_registries(&["AA", "BB", "CC"], 1);
        let m = MoneyTensor::from_flows(
            2018,
            reg,
            &[(0, 0, 2, 0.2), (0, 1, 2, 0.3), (0, 2, 0, 0.5)],
        )
        .unwrap();
        let (imp, _) = import_export_rank(&m).unwrap();
        // import shares: AA 0.5, BB 0.0, CC 0.5 -> tie between AA and CC
        let idx = sort_index(&imp, Level::Country);
        assert_eq!(idx.ordering(), &[0, 2, 1]);
        assert_eq!(idx.ranks(), vec![1, 3, 2]);
    }

    #[test]
    fn two_d_rank_orders_by_max_then_kstar() {
        // K: CN 2, US 1, DE 3; K*: CN 1, US 2, DE 3 (entities 0, 1, 2).
        let k = RankIndex::from_ordering(RankKind::PageRank, 2018, Level::Country, vec![1, 0, 2])
            .unwrap();
        let kstar =
            RankIndex::from_ordering(RankKind::CheiRank, 2018, Level::Country, vec![0, 1, 2])
                .unwrap();
        let k2 = two_d_rank(&k, &kstar).unwrap();
        let order: Vec<u32> = k2.entries().iter().map(|e| e.entity).collect();
        // Both CN and US have max = 2; CN wins on smaller K*.
        assert_eq!(order, vec![0, 1, 2]);
        assert_eq!(k2.entries()[2].rank, 3);
        assert_eq!(k2.entries()[2].k, 3);
        assert_eq!(k2.entries()[2].kstar, 3);
    }

    #[test]
    fn two_d_rank_top_spot_for_double_first() {
        let k = RankIndex::from_ordering(RankKind::PageRank, 2018, Level::Country, vec![2, 0, 1])
            .unwrap();
        let kstar =
            RankIndex::from_ordering(RankKind::CheiRank, 2018, Level::Country, vec![2, 1, 0])
                .unwrap();
        let k2 = two_d_rank(&k, &kstar).unwrap();
        assert_eq!(k2.entries()[0].entity, 2);
        assert_eq!((k2.entries()[0].k, k2.entries()[0].kstar), (1, 1));
    }

    #[test]
    fn two_d_rank_rejects_mismatched_sets() {
        let k = RankIndex::from_ordering(RankKind::PageRank, 2018, Level::Country, vec![0, 1])
            .unwrap();
        let kstar =
            RankIndex::from_ordering(RankKind::CheiRank, 2018, Level::Country, vec![0, 1, 2])
                .unwrap();
        assert!(matches!(two_d_rank(&k, &kstar), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn reproduces_published_top20_two_d_rank_order() {
        // Twenty major traders plus six fillers whose max(K, K*) pushes them
        // below the cut. Expected order checked by hand against the combined
        // rank definition.
        let table: &[(&str, u32, u32)] = &[
            ("CN", 2, 1),
            ("US", 1, 2),
            ("DE", 3, 3),
            ("FR", 4, 6),
            ("NL", 7, 5),
            ("IN", 6, 7),
            ("IT", 8, 9),
            ("JP", 10, 8),
            ("AE", 9, 10),
            ("KR", 12, 11),
            ("UK", 5, 12),
            ("ES", 11, 15),
            ("SG", 16, 13),
            ("CA", 13, 16),
            ("RU", 17, 4),
            ("BE", 14, 19),
            ("ZA", 20, 18),
            ("AU", 21, 17),
            ("TR", 18, 21),
            ("MX", 15, 22),
        ];
        let fillers: &[(u32, u32)] = &[(19, 23), (22, 24), (25, 14), (26, 20), (23, 25), (24, 26)];
        let n = table.len() + fillers.len();
        let mut k_ranks = vec![0u32; n];
        let mut kstar_ranks = vec![0u32; n];
        for (i, &(_, k, ks)) in table.iter().enumerate() {
            k_ranks[i] = k;
            kstar_ranks[i] = ks;
        }
        for (j, &(k, ks)) in fillers.iter().enumerate() {
            k_ranks[table.len() + j] = k;
            kstar_ranks[table.len() + j] = ks;
        }
        let to_ordering = |ranks: &[u32]| {
            let mut ordering = vec![0u32; n];
            for (entity, &rank) in ranks.iter().enumerate() {
                ordering[rank as usize - 1] = entity as u32;
            }
            ordering
        };
        let k = RankIndex::from_ordering(
            RankKind::PageRank,
            2018,
            Level::Country,
            to_ordering(&k_ranks),
        )
        .unwrap();
        let kstar = RankIndex::from_ordering(
            RankKind::CheiRank,
            2018,
            Level::Country,
            to_ordering(&kstar_ranks),
        )
        .unwrap();
        let k2 = two_d_rank(&k, &kstar).unwrap();
        let top: Vec<usize> = k2.entries()[..20].iter().map(|e| e.entity as usize).collect();
        let expected: Vec<usize> = (0..20).collect();
        assert_eq!(top, expected, "2DRank top 20 should follow the table order");
    }
}
