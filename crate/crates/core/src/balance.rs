//! Trade balances and their sensitivity to product price shifts.
//!
//! Every balance is a normalized difference (export side - import side) over
//! their sum, so it always lies in [-1, 1]. Country balances divide by the
//! country's own totals; the (product, country) balance divides by the
//! product-level totals P*_p + P_p, not the node's own sums. That choice
//! makes the per-country entries of one product comparable with each other.
//!
//! Balances exist in two flavors: PageRank-CheiRank (network-aware) and
//! ImportRank-ExportRank (plain volumes). The volume flavor has identically
//! zero product balances since total imports equal total exports per product.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Error;
use crate::google::{assemble_google, build_personalization, build_stochastic, Direction};
use crate::ranks::{pagerank_fixed, PipelineParams, RankSet, RankVector};
use crate::tensor::MoneyTensor;

/// Default relative step for the finite-difference sensitivity.
pub const DEFAULT_DELTA: f64 = 1e-3;

fn check_pair(import_side: &RankVector, export_side: &RankVector) -> Result<(), Error> {
    if import_side.country_count() != export_side.country_count()
        || import_side.product_count() != export_side.product_count()
    {
        return Err(Error::Incompatible(String::from(
            "balance inputs cover different registries",
        )));
    }
    if import_side.year() != export_side.year() {
        return Err(Error::Incompatible(String::from("balance inputs cover different years")));
    }
    Ok(())
}

#[inline]
fn normalized_difference(export_side: f64, import_side: f64) -> f64 {
    let denom = export_side + import_side;
    if denom == 0.0 {
        // Entity with no trade either way: neutral balance. Cannot occur for
        // PageRank vectors, whose entries are strictly positive.
        0.0
    } else {
        (export_side - import_side) / denom
    }
}

/// Per-country balance B_c = (P*_c - P_c) / (P*_c + P_c).
pub fn country_balance(
    import_side: &RankVector,
    export_side: &RankVector,
) -> Result<Vec<f64>, Error> {
    check_pair(import_side, export_side)?;
    Ok(import_side
        .country_probs()
        .iter()
        .zip(export_side.country_probs())
        .map(|(&p, &p_star)| normalized_difference(p_star, p))
        .collect())
}

/// Per-product balance B_p = (P*_p - P_p) / (P*_p + P_p).
pub fn product_balance(
    import_side: &RankVector,
    export_side: &RankVector,
) -> Result<Vec<f64>, Error> {
    check_pair(import_side, export_side)?;
    Ok(import_side
        .product_probs()
        .iter()
        .zip(export_side.product_probs())
        .map(|(&p, &p_star)| normalized_difference(p_star, p))
        .collect())
}

/// Per-(product, country) balance with the product-level denominator:
/// B_pc = (P*_pc - P_pc) / (P*_p + P_p), stored product-major.
pub fn product_country_balance(
    import_side: &RankVector,
    export_side: &RankVector,
) -> Result<Vec<f64>, Error> {
    check_pair(import_side, export_side)?;
    let nc = import_side.country_count();
    let np = import_side.product_count();
    let mut out = Vec::with_capacity(np * nc);
    for p in 0..np {
        let denom = export_side.product_probs()[p] + import_side.product_probs()[p];
        for c in 0..nc {
            let i = p * nc + c;
            let diff = export_side.node_probs()[i] - import_side.node_probs()[i];
            out.push(if denom == 0.0 { 0.0 } else { diff / denom });
        }
    }
    Ok(out)
}

/// All balances of one year.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    year: i32,
    n_products: usize,
    n_countries: usize,
    /// PageRank-CheiRank country balances B_c.
    pub country: Vec<f64>,
    /// ImportRank-ExportRank country balances.
    pub country_volume: Vec<f64>,
    /// PageRank-CheiRank product balances B_p.
    pub product: Vec<f64>,
    /// PageRank-CheiRank (product, country) balances, product-major.
    pub product_country: Vec<f64>,
    /// ImportRank-ExportRank (product, country) balances, product-major.
    pub product_country_volume: Vec<f64>,
}

impl BalanceReport {
    pub fn compute(ranks: &RankSet) -> Result<Self, Error> {
        let country = country_balance(&ranks.pagerank, &ranks.cheirank)?;
        let country_volume = country_balance(&ranks.importrank, &ranks.exportrank)?;
        let product = product_balance(&ranks.pagerank, &ranks.cheirank)?;
        let product_country = product_country_balance(&ranks.pagerank, &ranks.cheirank)?;
        let product_country_volume =
            product_country_balance(&ranks.importrank, &ranks.exportrank)?;
        Ok(Self {
            year: ranks.pagerank.year(),
            n_products: ranks.pagerank.product_count(),
            n_countries: ranks.pagerank.country_count(),
            country,
            country_volume,
            product,
            product_country,
            product_country_volume,
        })
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

    #[inline]
    pub fn product_country_at(&self, product: u8, country: u16) -> f64 {
        self.product_country[product as usize * self.n_countries + country as usize]
    }
}

/// Component-wise change between two years' balance reports.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceDelta {
    pub year_from: i32,
    pub year_to: i32,
    pub country: Vec<f64>,
    pub country_volume: Vec<f64>,
    pub product: Vec<f64>,
    pub product_country: Vec<f64>,
    pub product_country_volume: Vec<f64>,
}

/// Year difference `to - from` of every balance component.
pub fn diff(from: &BalanceReport, to: &BalanceReport) -> Result<BalanceDelta, Error> {
    if from.n_products != to.n_products || from.n_countries != to.n_countries {
        return Err(Error::Incompatible(String::from(
            "balance reports cover different registries",
        )));
    }
    let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| y - x).collect::<Vec<f64>>();
    Ok(BalanceDelta {
        year_from: from.year,
        year_to: to.year,
        country: sub(&from.country, &to.country),
        country_volume: sub(&from.country_volume, &to.country_volume),
        product: sub(&from.product, &to.product),
        product_country: sub(&from.product_country, &to.product_country),
        product_country_volume: sub(&from.product_country_volume, &to.product_country_volume),
    })
}

/// Finite-difference scheme for the sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffScheme {
    /// (B(+d) - B(-d)) / 2d, second-order accurate.
    Central,
    /// (B(+d) - B(0)) / d.
    Forward,
}

impl DiffScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiffScheme::Central => "central",
            DiffScheme::Forward => "forward",
        }
    }
}

/// Per-country derivative of the PageRank-CheiRank balance with respect to a
/// uniform (1 + delta) rescale of one product's flows.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub year: i32,
    pub product: u8,
    /// dB_c / d delta per country.
    pub d_balance: Vec<f64>,
    pub delta: f64,
    pub scheme: DiffScheme,
}

impl SensitivityReport {
    /// Year difference `to - from`; products, deltas and schemes must match.
    pub fn diff(from: &Self, to: &Self) -> Result<Vec<f64>, Error> {
        if from.product != to.product
            || from.delta != to.delta
            || from.scheme != to.scheme
            || from.d_balance.len() != to.d_balance.len()
        {
            return Err(Error::Incompatible(String::from(
                "sensitivity reports use different products or schemes",
            )));
        }
        Ok(from.d_balance.iter().zip(&to.d_balance).map(|(a, b)| b - a).collect())
    }
}

/// Country balances for a tensor, using a data-independent iteration count so
/// that perturbed runs stay in lockstep and truncation error cancels in the
/// finite difference.
fn country_balance_fixed(
    m: &MoneyTensor,
    params: &PipelineParams,
    iterations: usize,
) -> Result<Vec<f64>, Error> {
    let direct = build_stochastic(m, Direction::Direct)?;
    let inverted = build_stochastic(m, Direction::Inverted)?;
    let v = build_personalization(m)?;
    let g = assemble_google(direct, v.clone(), params.alpha)?;
    let g_star = assemble_google(inverted, v, params.alpha)?;
    let (p, info) = pagerank_fixed(&g, iterations);
    if info.residual > params.tol {
        return Err(Error::NotConverged { iterations, residual: info.residual });
    }
    let (p_star, info_star) = pagerank_fixed(&g_star, iterations);
    if info_star.residual > params.tol {
        return Err(Error::NotConverged { iterations, residual: info_star.residual });
    }
    country_balance(&p, &p_star)
}

/// Central-difference sensitivity dB_c / d delta for one product.
pub fn balance_sensitivity(
    m: &MoneyTensor,
    product: u8,
    delta: f64,
    params: &PipelineParams,
) -> Result<SensitivityReport, Error> {
    balance_sensitivity_with_scheme(m, product, delta, params, DiffScheme::Central)
}

/// Sensitivity with an explicit finite-difference scheme. The whole pipeline
/// (S, v, G, G*, both rank vectors) is rebuilt for each perturbed tensor.
pub fn balance_sensitivity_with_scheme(
    m: &MoneyTensor,
    product: u8,
    delta: f64,
    params: &PipelineParams,
    scheme: DiffScheme,
) -> Result<SensitivityReport, Error> {
    if !m.registries().products.contains(product) {
        return Err(Error::UnknownProduct(product));
    }
    if !(delta > 0.0 && delta < 1.0) || !delta.is_finite() {
        return Err(Error::InvalidDelta(delta));
    }
    let iterations = params.fixed_iteration_budget();
    let plus = country_balance_fixed(&m.scale_product(product, 1.0 + delta)?, params, iterations)?;
    let d_balance = match scheme {
        DiffScheme::Central => {
            let minus =
                country_balance_fixed(&m.scale_product(product, 1.0 - delta)?, params, iterations)?;
            plus.iter()
                .zip(&minus)
                .map(|(bp, bm)| (bp - bm) / (2.0 * delta))
                .collect()
        }
        DiffScheme::Forward => {
            let base = country_balance_fixed(m, params, iterations)?;
            plus.iter().zip(&base).map(|(bp, b0)| (bp - b0) / delta).collect()
        }
    };
    Ok(SensitivityReport { year: m.year(), product, d_balance, delta, scheme })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranks::compute_ranks;
    use crate::testutil::test_registries;
    use alloc::vec::Vec;

    fn tensor(countries: &[&str], np: u8, flows: &[(u8, u16, u16, f64)]) -> MoneyTensor {
        MoneyTensor::from_flows(2018, test_registries(countries, np), flows).unwrap()
    }

    #[test]
    fn symmetric_trade_balances_to_zero() {
        let m = tensor(&["AA", "BB"], 1, &[(0, 0, 1, 5.0), (0, 1, 0, 5.0)]);
        let ranks = compute_ranks(&m, &PipelineParams::default()).unwrap();
        let b = country_balance(&ranks.pagerank, &ranks.cheirank).unwrap();
        for x in b {
            assert!(x.abs() < 1e-12);
        }
        let bp = product_balance(&ranks.pagerank, &ranks.cheirank).unwrap();
        assert!(bp[0].abs() < 1e-12);
    }

    #[test]
    fn country_balance_arithmetic() {
        // Direct check of the normalized difference: 0.06 vs 0.04 -> 0.2.
        assert_eq!(normalized_difference(0.06, 0.04), (0.06 - 0.04) / (0.06 + 0.04));
        assert!((normalized_difference(0.06, 0.04) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn volume_product_balance_is_exactly_zero() {
        let m = tensor(
            &["AA", "BB", "CC"],
            2,
            &[(0, 0, 1, 3.0), (0, 1, 2, 0.4), (1, 2, 0, 2.2), (1, 0, 2, 1.1)],
        );
        let ranks = compute_ranks(&m, &PipelineParams::default()).unwrap();
        let bp_hat = product_balance(&ranks.importrank, &ranks.exportrank).unwrap();
        for x in bp_hat {
            assert_eq!(x, 0.0);
        }
    }

    #[test]
    fn balances_stay_within_unit_interval() {
        let m = tensor(
            &["AA", "BB", "CC", "DD"],
            3,
            &[
                (0, 0, 1, 1e9),
                (0, 2, 3, 1e-3),
                (1, 1, 0, 42.0),
                (1, 3, 2, 7.0),
                (2, 0, 3, 1e6),
            ],
        );
        let ranks = compute_ranks(&m, &PipelineParams::default()).unwrap();
        let report = BalanceReport::compute(&ranks).unwrap();
        for values in [
            &report.country,
            &report.country_volume,
            &report.product,
            &report.product_country,
            &report.product_country_volume,
        ] {
            for &x in values.iter() {
                assert!(x.abs() <= 1.0, "balance {x} escaped [-1, 1]");
            }
        }
    }

    #[test]
    fn product_country_balance_uses_product_denominator() {
        let m = tensor(&["AA", "BB"], 1, &[(0, 0, 1, 3.0), (0, 1, 0, 1.0)]);
        let ranks = compute_ranks(&m, &PipelineParams::default()).unwrap();
        let bpc = product_country_balance(&ranks.pagerank, &ranks.cheirank).unwrap();
        let p = &ranks.pagerank;
        let ps = &ranks.cheirank;
        let denom = p.product_probs()[0] + ps.product_probs()[0];
        for c in 0..2u16 {
            let want = (ps.node_prob(0, c) - p.node_prob(0, c)) / denom;
            assert!((bpc[c as usize] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn volume_symmetry_weighted_row_sums_vanish() {
        let m = tensor(
            &["AA", "BB", "CC"],
            2,
            &[(0, 0, 1, 3.0), (0, 1, 2, 5.0), (1, 2, 0, 1.0), (1, 0, 1, 2.0)],
        );
        let ranks = compute_ranks(&m, &PipelineParams::default()).unwrap();
        let report = BalanceReport::compute(&ranks).unwrap();
        for p in 0..2usize {
            let weight = ranks.importrank.product_probs()[p] + ranks.exportrank.product_probs()[p];
            let total: f64 = (0..3)
                .map(|c| report.product_country_volume[p * 3 + c] * weight)
                .sum();
            assert!(total.abs() < 1e-13, "product {p} weighted row sum {total}");
        }
    }

    #[test]
    fn diff_subtracts_componentwise() {
        let m18 = tensor(&["AA", "BB"], 1, &[(0, 0, 1, 3.0), (0, 1, 0, 1.0)]);
        let m20 = MoneyTensor::from_flows(
            2020,
            test_registries(&["AA", "BB"], 1),
            &[(0, 0, 1, 1.0), (0, 1, 0, 3.0)],
        )
        .unwrap();
        let params = PipelineParams::default();
        let r18 = BalanceReport::compute(&compute_ranks(&m18, &params).unwrap()).unwrap();
        let r20 = BalanceReport::compute(&compute_ranks(&m20, &params).unwrap()).unwrap();
        let delta = diff(&r18, &r20).unwrap();
        assert_eq!(delta.year_from, 2018);
        assert_eq!(delta.year_to, 2020);
        for c in 0..2 {
            let want = r20.country[c] - r18.country[c];
            assert_eq!(delta.country[c], want);
        }
        // The flows are mirrored, so the diff is twice the 2020 balance.
        assert!((delta.country[0] - 2.0 * r20.country[0]).abs() < 1e-12);
    }

    #[test]
    fn single_product_sensitivity_vanishes() {
        // One product: rescaling all its flows rescales the whole tensor,
        // which leaves S and v invariant.
        let m = tensor(&["AA", "BB", "CC"], 1, &[(0, 0, 1, 2.0), (0, 1, 2, 3.0), (0, 2, 0, 1.0)]);
        let report = balance_sensitivity(&m, 0, 1e-3, &PipelineParams::default()).unwrap();
        for &d in &report.d_balance {
            assert!(d.abs() < 1e-10, "sensitivity {d} should vanish");
        }
    }

    #[test]
    fn central_difference_halving_agrees_quadratically() {
        let m = tensor(
            &["AA", "BB", "CC"],
            2,
            &[(0, 0, 1, 4.0), (0, 1, 2, 2.0), (1, 2, 0, 3.0), (1, 1, 0, 1.0)],
        );
        let params = PipelineParams::default();
        let coarse = balance_sensitivity(&m, 0, 2e-3, &params).unwrap();
        let fine = balance_sensitivity(&m, 0, 1e-3, &params).unwrap();
        let gap: f64 = coarse
            .d_balance
            .iter()
            .zip(&fine.d_balance)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        // Central differences carry O(delta^2) truncation error.
        assert!(gap < 1e-4, "halving the step moved the estimate by {gap}");
    }

    #[test]
    fn forward_scheme_close_to_central() {
        let m = tensor(
            &["AA", "BB", "CC"],
            2,
            &[(0, 0, 1, 4.0), (0, 1, 2, 2.0), (1, 2, 0, 3.0)],
        );
        let params = PipelineParams::default();
        let central = balance_sensitivity(&m, 1, 1e-4, &params).unwrap();
        let forward =
            balance_sensitivity_with_scheme(&m, 1, 1e-4, &params, DiffScheme::Forward).unwrap();
        let gap: f64 = central
            .d_balance
            .iter()
            .zip(&forward.d_balance)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-2);
    }

    #[test]
    fn sensitivity_rejects_bad_inputs() {
        let m = tensor(&["AA", "BB"], 1, &[(0, 0, 1, 1.0)]);
        let params = PipelineParams::default();
        assert!(matches!(
            balance_sensitivity(&m, 7, 1e-3, &params),
            Err(Error::UnknownProduct(7))
        ));
        assert!(matches!(
            balance_sensitivity(&m, 0, 0.0, &params),
            Err(Error::InvalidDelta(_))
        ));
        assert!(matches!(
            balance_sensitivity(&m, 0, 1.0, &params),
            Err(Error::InvalidDelta(_))
        ));
    }

    #[test]
    fn sensitivity_diff_requires_matching_setup() {
        let m = tensor(&["AA", "BB", "CC"], 2, &[(0, 0, 1, 2.0), (1, 1, 2, 3.0)]);
        let params = PipelineParams::default();
        let a = balance_sensitivity(&m, 0, 1e-3, &params).unwrap();
        let b = balance_sensitivity(&m, 1, 1e-3, &params).unwrap();
        assert!(SensitivityReport::diff(&a, &b).is_err());
        let same = balance_sensitivity(&m, 0, 1e-3, &params).unwrap();
        let delta: Vec<f64> = SensitivityReport::diff(&a, &same).unwrap();
        assert!(delta.iter().all(|d| *d == 0.0));
    }
}
