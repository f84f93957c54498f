//! Reduced Google matrix for a node subset.
//!
//! Partition the dense Google matrix over the subset r (reduced) and its
//! complement s (scattering):
//!
//!   G = | G_rr  G_rs |
//!       | G_sr  G_ss |
//!
//! The reduced matrix G_R = G_rr + G_rs (1 - G_ss)^-1 G_sr folds every
//! direct and indirect pathway through the scattering nodes into an
//! N_r x N_r column-stochastic matrix. Its stationary vector is the
//! restriction of the full PageRank to the subset, up to normalization.
//!
//! The inverse exists whenever alpha < 1 and the personalization vector is
//! strictly positive: every column of G then leaks mass into the subset, so
//! the column sums of G_ss stay strictly below 1 and 1 - G_ss is strictly
//! diagonally dominant by columns. The solve is a dense LU factorization;
//! truncating the Neumann series would trade exactness for nothing at this
//! scale.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::google::GoogleMatrix;
use crate::linalg::{lu_factor, mat_vec};
use crate::ranks::RankVector;

/// Tolerance for the column-stochasticity check of the reduced matrix.
const COLUMN_SUM_TOLERANCE: f64 = 1e-10;

/// Negative entries no larger than this (in magnitude) are rounding noise
/// from the solve and get clamped to zero.
const NEGATIVE_CLAMP: f64 = 1e-12;

/// An ordered subset of network nodes; order defines the matrix layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSubset {
    members: Vec<u32>,
}

impl NodeSubset {
    pub fn new(members: Vec<u32>, node_count: usize) -> Result<Self, Error> {
        if members.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut seen = vec![false; node_count];
        for &node in &members {
            if node as usize >= node_count {
                return Err(Error::NodeOutOfRange { node, node_count });
            }
            if seen[node as usize] {
                return Err(Error::DuplicateNode(node));
            }
            seen[node as usize] = true;
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// The reduced Google matrix over a node subset, column-stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedMatrix {
    subset: NodeSubset,
    year: i32,
    order: usize,
    /// Row-major entries; entry (i, j) is the effective transition j -> i.
    data: Vec<f64>,
    residual: f64,
}

impl ReducedMatrix {
    pub fn subset(&self) -> &NodeSubset {
        &self.subset
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    /// Matrix order N_r.
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.order + col]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    /// Max-norm residual of the block solve, a solver health indicator.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let n = self.order;
        let mut sums = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                sums[j] += self.at(i, j);
            }
        }
        sums
    }

    /// Entrywise change `to - from` for matrices over the same ordered subset.
    pub fn diff(from: &Self, to: &Self) -> Result<ReducedDelta, Error> {
        if from.subset != to.subset {
            return Err(Error::NodeSetMismatch);
        }
        let data = from
            .data
            .iter()
            .zip(&to.data)
            .map(|(a, b)| b - a)
            .collect();
        Ok(ReducedDelta {
            subset: from.subset.clone(),
            year_from: from.year,
            year_to: to.year,
            order: from.order,
            data,
        })
    }
}

/// Year difference of two reduced matrices over the same subset.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDelta {
    pub subset: NodeSubset,
    pub year_from: i32,
    pub year_to: i32,
    pub order: usize,
    /// Row-major, same layout as the inputs.
    pub data: Vec<f64>,
}

impl ReducedDelta {
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.order + col]
    }
}

/// Computes the reduced Google matrix for `subset`.
pub fn reduce(g: &GoogleMatrix, subset: NodeSubset) -> Result<ReducedMatrix, Error> {
    let n = g.node_count();
    let nr = subset.len();
    if let Some(&bad) = subset.members().iter().find(|&&m| m as usize >= n) {
        return Err(Error::NodeOutOfRange { node: bad, node_count: n });
    }
    let ns = n - nr;

    // Local position of each global node in the r block or the s block.
    const UNSET: u32 = u32::MAX;
    let mut pos_r = vec![UNSET; n];
    for (i, &node) in subset.members().iter().enumerate() {
        pos_r[node as usize] = i as u32;
    }
    let mut pos_s = vec![UNSET; n];
    let mut scatter_nodes = Vec::with_capacity(ns);
    for node in 0..n {
        if pos_r[node] == UNSET {
            pos_s[node] = scatter_nodes.len() as u32;
            scatter_nodes.push(node);
        }
    }

    let mut g_rr = vec![0.0; nr * nr];
    let mut g_rs = vec![0.0; nr * ns];
    // G_sr and the solve operate column by column.
    let mut g_sr_cols: Vec<Vec<f64>> = vec![vec![0.0; ns]; nr];
    let mut m_ss = vec![0.0; ns * ns];
    for k in 0..ns {
        m_ss[k * ns + k] = 1.0;
    }

    let mut col = vec![0.0; n];
    for j in 0..n {
        g.dense_column(j, &mut col);
        if pos_r[j] != UNSET {
            let jr = pos_r[j] as usize;
            for (i, &value) in col.iter().enumerate() {
                if pos_r[i] != UNSET {
                    g_rr[pos_r[i] as usize * nr + jr] = value;
                } else {
                    g_sr_cols[jr][pos_s[i] as usize] = value;
                }
            }
        } else {
            let js = pos_s[j] as usize;
            for (i, &value) in col.iter().enumerate() {
                if pos_r[i] != UNSET {
                    g_rs[pos_r[i] as usize * ns + js] = value;
                } else {
                    m_ss[pos_s[i] as usize * ns + js] -= value;
                }
            }
        }
    }

    let (solution_cols, residual) = if ns == 0 {
        (Vec::new(), 0.0)
    } else {
        let lu = lu_factor(ns, m_ss.clone())?;
        let mut residual = 0.0f64;
        let mut xs = Vec::with_capacity(nr);
        let mut check = vec![0.0; ns];
        for rhs in &g_sr_cols {
            let mut x = rhs.clone();
            lu.solve(&mut x);
            mat_vec(ns, &m_ss, &x, &mut check);
            for (mx, b) in check.iter().zip(rhs) {
                residual = residual.max((mx - b).abs());
            }
            xs.push(x);
        }
        (xs, residual)
    };

    // G_R = G_rr + G_rs X
    let mut data = g_rr;
    for (jc, x) in solution_cols.iter().enumerate() {
        for i in 0..nr {
            let row = &g_rs[i * ns..(i + 1) * ns];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            data[i * nr + jc] += acc;
        }
    }

    for value in &mut data {
        if *value < 0.0 {
            if *value < -NEGATIVE_CLAMP {
                return Err(Error::StochasticityViolated { deviation: -*value });
            }
            *value = 0.0;
        }
    }
    let mut deviation = 0.0f64;
    for j in 0..nr {
        let sum: f64 = (0..nr).map(|i| data[i * nr + j]).sum();
        deviation = deviation.max((sum - 1.0).abs());
    }
    if deviation > COLUMN_SUM_TOLERANCE {
        return Err(Error::StochasticityViolated { deviation });
    }

    Ok(ReducedMatrix { subset, year: g.year(), order: nr, data, residual })
}

/// Reduced matrix for one product over a set of countries.
///
/// The subset holds the nodes (product, c) for the given countries, ordered
/// by descending node PageRank within that product (ties by ascending
/// registry index), so rows and columns follow the product-specific ranking.
pub fn reduced_for_product(
    g: &GoogleMatrix,
    node_pagerank: &RankVector,
    countries: &[u16],
    product: u8,
) -> Result<ReducedMatrix, Error> {
    let nc = g.country_count();
    if (product as usize) >= g.product_count() {
        return Err(Error::UnknownProduct(product));
    }
    if node_pagerank.country_count() != nc || node_pagerank.product_count() != g.product_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: node_pagerank.node_probs().len(),
        });
    }
    if countries.is_empty() {
        return Err(Error::EmptySubset);
    }
    for &c in countries {
        if c as usize >= nc {
            return Err(Error::CountryOutOfRange { country: c, count: nc });
        }
    }
    let mut ordered: Vec<u16> = countries.to_vec();
    ordered.sort_unstable_by(|&a, &b| {
        node_pagerank
            .node_prob(product, b)
            .total_cmp(&node_pagerank.node_prob(product, a))
            .then(a.cmp(&b))
    });
    let members: Vec<u32> = ordered
        .iter()
        .map(|&c| product as u32 * nc as u32 + c as u32)
        .collect();
    let subset = NodeSubset::new(members, g.node_count())?;
    reduce(g, subset)
}
