//! Google matrix assembly for the trade network.
//!
//! Nodes are (product, country) pairs. Column j = (p, c') of the transition
//! matrix S distributes the outgoing trade of product p from country c'
//! proportionally to the money flows, so links never leave a product group;
//! products couple only through the personalization vector. A column with no
//! outgoing flow (a dangling node) is replaced by the uniform column 1/N.
//!
//! The Google matrix itself is G_ij = alpha * S_ij + (1 - alpha) * v_i with
//! the personalization vector v giving each product a weight proportional to
//! its share of the global trade volume, split evenly over countries. G is
//! never materialized for ranking: the operator form
//!
//!   y = alpha * S x + alpha * (sum over dangling j of x_j) / N
//!     + (1 - alpha) * (sum x) * v
//!
//! reproduces the dense matrix exactly while keeping the sparse structure.
//! The inverted-direction matrix G* is built the same way from the tensor
//! with all flows reversed.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::tensor::MoneyTensor;

/// Default damping factor for trade networks.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Mixing weight of the uniform floor applied to the personalization vector
/// when some product has zero global volume.
pub const PERSONALIZATION_FLOOR: f64 = 1e-12;

/// Flow orientation of the transition matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Columns distribute export flows: links point exporter -> importer.
    Direct,
    /// All flows reversed before normalization: links point importer -> exporter.
    Inverted,
}

/// Column-stochastic trade transition matrix with explicit dangling flags.
///
/// Dangling columns are stored empty; consumers substitute the uniform
/// column 1/N where the dense matrix is required.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    year: i32,
    direction: Direction,
    n_products: usize,
    n_countries: usize,
    columns: Vec<Vec<(u32, f64)>>,
    dangling: Vec<bool>,
}

impl StochasticMatrix {
    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn node_count(&self) -> usize {
        self.columns.len()
    }

    pub fn product_count(&self) -> usize {
        self.n_products
    }

    pub fn country_count(&self) -> usize {
        self.n_countries
    }

    /// Sparse entries of column `j`, sorted by row. Empty for dangling columns.
    pub fn column(&self, j: usize) -> &[(u32, f64)] {
        &self.columns[j]
    }

    pub fn is_dangling(&self, j: usize) -> bool {
        self.dangling[j]
    }

    pub fn dangling_count(&self) -> usize {
        self.dangling.iter().filter(|d| **d).count()
    }
}

/// Builds the column-stochastic matrix S from the money tensor.
pub fn build_stochastic(m: &MoneyTensor, direction: Direction) -> Result<StochasticMatrix, Error> {
    if m.total_volume() <= 0.0 {
        return Err(Error::EmptyNetwork);
    }
    let reg = m.registries();
    let n = reg.node_count();
    let mut columns: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for (&(product, exporter, importer), &value) in m.iter() {
        let (col, row) = match direction {
            Direction::Direct => (
                reg.node_index(product, exporter),
                reg.node_index(product, importer),
            ),
            Direction::Inverted => (
                reg.node_index(product, importer),
                reg.node_index(product, exporter),
            ),
        };
        columns[col as usize].push((row, value));
    }
    let mut dangling = vec![false; n];
    for (j, col) in columns.iter_mut().enumerate() {
        if col.is_empty() {
            dangling[j] = true;
            continue;
        }
        let total: f64 = col.iter().map(|(_, w)| *w).sum();
        for entry in col.iter_mut() {
            entry.1 /= total;
        }
        col.sort_unstable_by_key(|(row, _)| *row);
    }
    Ok(StochasticMatrix {
        year: m.year(),
        direction,
        n_products: reg.product_count(),
        n_countries: reg.country_count(),
        columns,
        dangling,
    })
}

/// Teleportation distribution: per-product mass proportional to the product's
/// global volume share, uniform over countries.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonalizationVector {
    n_products: usize,
    n_countries: usize,
    values: Vec<f64>,
}

impl PersonalizationVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Builds the personalization vector v with v_(p,c) = (V_p / V) / N_c.
///
/// If some product has zero global volume its nodes would get zero mass, so
/// the whole vector is mixed with a uniform floor, v' = (1-eps) v + eps / N,
/// keeping every component strictly positive. Real trade data never triggers
/// the floor.
pub fn build_personalization(m: &MoneyTensor) -> Result<PersonalizationVector, Error> {
    let total = m.total_volume();
    if total <= 0.0 {
        return Err(Error::EmptyNetwork);
    }
    let reg = m.registries();
    let np = reg.product_count();
    let nc = reg.country_count();
    let mut values = Vec::with_capacity(np * nc);
    let mut needs_floor = false;
    for p in 0..np {
        let volume = m.product_volume(p as u8);
        if volume == 0.0 {
            needs_floor = true;
        }
        let share = volume / total / nc as f64;
        values.extend(core::iter::repeat(share).take(nc));
    }
    if needs_floor {
        let uniform = 1.0 / (np * nc) as f64;
        for v in &mut values {
            *v = (1.0 - PERSONALIZATION_FLOOR) * *v + PERSONALIZATION_FLOOR * uniform;
        }
    }
    Ok(PersonalizationVector { n_products: np, n_countries: nc, values })
}

/// The Google matrix in operator form: (S, v, alpha), never densified for
/// ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct GoogleMatrix {
    s: StochasticMatrix,
    v: PersonalizationVector,
    alpha: f64,
}

/// Combines S, v and the damping factor. `alpha` must lie strictly in (0, 1).
pub fn assemble_google(
    s: StochasticMatrix,
    v: PersonalizationVector,
    alpha: f64,
) -> Result<GoogleMatrix, Error> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if s.node_count() != v.len() {
        return Err(Error::DimensionMismatch { expected: s.node_count(), got: v.len() });
    }
    Ok(GoogleMatrix { s, v, alpha })
}

impl GoogleMatrix {
    pub fn node_count(&self) -> usize {
        self.s.node_count()
    }

    pub fn product_count(&self) -> usize {
        self.s.product_count()
    }

    pub fn country_count(&self) -> usize {
        self.s.country_count()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn year(&self) -> i32 {
        self.s.year()
    }

    pub fn direction(&self) -> Direction {
        self.s.direction()
    }

    pub fn stochastic(&self) -> &StochasticMatrix {
        &self.s
    }

    pub fn personalization(&self) -> &PersonalizationVector {
        &self.v
    }

    /// Applies the implied dense matrix to `x` without materializing it.
    ///
    /// For a probability vector the result is again a probability vector up
    /// to rounding; the operator is linear in `x` and matches `to_dense()`
    /// entry for entry.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.node_count();
        assert_eq!(x.len(), n, "operand length must match node count");
        let sum_x: f64 = x.iter().sum();
        let dangling_x: f64 = x
            .iter()
            .enumerate()
            .filter(|(j, _)| self.s.is_dangling(*j))
            .map(|(_, xj)| *xj)
            .sum();
        let base = self.alpha * dangling_x / n as f64;
        let mut y = vec![base; n];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 || self.s.is_dangling(j) {
                continue;
            }
            let scaled = self.alpha * xj;
            for &(row, weight) in self.s.column(j) {
                y[row as usize] += scaled * weight;
            }
        }
        let teleport = (1.0 - self.alpha) * sum_x;
        for (yi, vi) in y.iter_mut().zip(self.v.values()) {
            *yi += teleport * vi;
        }
        y
    }

    /// One dense column of G, including dangling and personalization parts.
    pub fn dense_column(&self, j: usize, out: &mut [f64]) {
        let n = self.node_count();
        assert_eq!(out.len(), n);
        let base = if self.s.is_dangling(j) { self.alpha / n as f64 } else { 0.0 };
        let teleport = 1.0 - self.alpha;
        for (i, o) in out.iter_mut().enumerate() {
            *o = base + teleport * self.v.values()[i];
        }
        for &(row, weight) in self.s.column(j) {
            out[row as usize] += self.alpha * weight;
        }
    }

    /// Fully materialized G as rows; intended for small networks and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.node_count();
        let mut g = vec![vec![0.0; n]; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            self.dense_column(j, &mut col);
            for i in 0..n {
                g[i][j] = col[i];
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::test_registries;

    fn money(countries: &[&str], np: u8, flows: &[(u8, u16, u16, f64)]) -> MoneyTensor {
        MoneyTensor::from_flows(2018, test_registries(countries, np), flows).unwrap()
    }

    #[test]
    fn cycle_gives_permutation_matrix() {
        let m = money(&["AA", "BB", "CC"], 1, &[(0, 0, 1, 1.0), (0, 1, 2, 1.0), (0, 2, 0, 1.0)]);
        let s = build_stochastic(&m, Direction::Direct).unwrap();
        assert_eq!(s.dangling_count(), 0);
        assert_eq!(s.column(0), &[(1, 1.0)]);
        assert_eq!(s.column(1), &[(2, 1.0)]);
        assert_eq!(s.column(2), &[(0, 1.0)]);
    }

    #[test]
    fn columns_normalize_outgoing_flows() {
        // AA exports to BB:3 and CC:1.
        let m = money(&["AA", "BB", "CC"], 1, &[(0, 0, 1, 3.0), (0, 0, 2, 1.0)]);
        let s = build_stochastic(&m, Direction::Direct).unwrap();
        assert_eq!(s.column(0), &[(1, 0.75), (2, 0.25)]);
        assert!(s.is_dangling(1) && s.is_dangling(2));
    }

    #[test]
    fn zero_exporter_is_dangling() {
        let m = money(&["AA", "BB"], 1, &[(0, 0, 1, 5.0)]);
        let s = build_stochastic(&m, Direction::Direct).unwrap();
        assert!(!s.is_dangling(0));
        assert!(s.is_dangling(1));
        // Inverted flows swap the roles.
        let si = build_stochastic(&m, Direction::Inverted).unwrap();
        assert!(si.is_dangling(0));
        assert!(!si.is_dangling(1));
    }

    #[test]
    fn all_zero_tensor_is_an_error() {
        let m = money(&["AA", "BB"], 1, &[]);
        assert!(matches!(build_stochastic(&m, Direction::Direct), Err(Error::EmptyNetwork)));
        assert!(matches!(build_personalization(&m), Err(Error::EmptyNetwork)));
    }

    #[test]
    fn personalization_equal_volumes_is_uniform() {
        let m = money(&["AA", "BB"], 2, &[(0, 0, 1, 2.0), (1, 1, 0, 2.0)]);
        let v = build_personalization(&m).unwrap();
        assert_eq!(v.values(), &[0.25, 0.25, 0.25, 0.25]);
    }

    #[test]
    fn personalization_tracks_volume_ratio() {
        let m = money(&["AA", "BB"], 2, &[(0, 0, 1, 6.0), (1, 1, 0, 2.0)]);
        let v = build_personalization(&m).unwrap();
        for c in 0..2 {
            let ratio = v.values()[c] / v.values()[2 + c];
            assert!((ratio - 3.0).abs() < 1e-12);
        }
        let total: f64 = v.values().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_product_personalization_is_uniform() {
        let m = money(&["AA", "BB", "CC"], 1, &[(0, 0, 1, 7.0)]);
        let v = build_personalization(&m).unwrap();
        for &val in v.values() {
            assert!((val - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_volume_product_gets_floored_mass() {
        let m = money(&["AA", "BB"], 2, &[(0, 0, 1, 1.0)]);
        let v = build_personalization(&m).unwrap();
        assert!(v.values()[2] > 0.0 && v.values()[3] > 0.0);
        let total: f64 = v.values().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_must_be_inside_unit_interval() {
        let m = money(&["AA", "BB"], 1, &[(0, 0, 1, 1.0)]);
        let s = build_stochastic(&m, Direction::Direct).unwrap();
        let v = build_personalization(&m).unwrap();
        for bad in [0.0, 1.0, -0.2, 1.7] {
            assert!(matches!(
                assemble_google(s.clone(), v.clone(), bad),
                Err(Error::InvalidAlpha(_))
            ));
        }
    }

    #[test]
    fn uniform_fixed_point_is_preserved() {
        // Symmetric cycle: S is a permutation, v is uniform, so v is a fixed
        // point of G for every alpha.
        let m = money(&["AA", "BB", "CC"], 1, &[(0, 0, 1, 1.0), (0, 1, 2, 1.0), (0, 2, 0, 1.0)]);
        let s = build_stochastic(&m, Direction::Direct).unwrap();
        let v = build_personalization(&m).unwrap();
        let g = assemble_google(s, v.clone(), 0.85).unwrap();
        let y = g.matvec(v.values());
        for (yi, vi) in y.iter().zip(v.values()) {
            assert!((yi - vi).abs() < 1e-15);
        }
    }

    #[test]
    fn small_alpha_limit_approaches_teleportation() {
        let m = money(&["AA", "BB"], 1, &[(0, 0, 1, 1.0)]);
        let s = build_stochastic(&m, Direction::Direct).unwrap();
        let v = build_personalization(&m).unwrap();
        let alpha = 1e-9;
        let g = assemble_google(s, v.clone(), alpha).unwrap();
        let x = [0.3, 0.7];
        let y = g.matvec(&x);
        let sum_x: f64 = x.iter().sum();
        for (yi, vi) in y.iter().zip(v.values()) {
            assert!((yi - sum_x * vi).abs() < 1e-8);
        }
    }

    #[test]
    fn matvec_matches_dense_matrix() {
        let m = money(
            &["AA", "BB", "CC", "DD"],
            2,
            &[(0, 0, 1, 2.0), (0, 1, 2, 1.0), (0, 1, 3, 3.0), (1, 3, 0, 5.0), (1, 2, 0, 0.5)],
        );
        let s = build_stochastic(&m, Direction::Direct).unwrap();
        let v = build_personalization(&m).unwrap();
        let g = assemble_google(s, v, 0.5).unwrap();
        let dense = g.to_dense();
        let n = g.node_count();
        // Column sums of the dense matrix are exactly 1 up to rounding.
        for j in 0..n {
            let col_sum: f64 = (0..n).map(|i| dense[i][j]).sum();
            assert!((col_sum - 1.0).abs() < 1e-12, "column {j} sums to {col_sum}");
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0) / n as f64).collect();
        let y = g.matvec(&x);
        for i in 0..n {
            let want: f64 = (0..n).map(|j| dense[i][j] * x[j]).sum();
            assert!((y[i] - want).abs() < 1e-14);
        }
    }
}
