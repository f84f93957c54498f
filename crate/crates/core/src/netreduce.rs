//! Reduced trade networks: the strongest export transitions per country and
//! their classification across two years.
//!
//! From each column of a reduced matrix the k largest off-diagonal entries
//! become directed edges source -> target: the most important importers from
//! that source. Diagonal entries are skipped, the drawn networks carry only
//! inter-country arrows.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::Error;
use crate::regomax::ReducedMatrix;

/// A directed edge of the reduced network, weighted by its matrix entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: u32,
    pub to: u32,
    pub weight: f64,
}

/// Top-k export transitions per node of a reduced matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedNetwork {
    year: i32,
    k: usize,
    nodes: Vec<u32>,
    edges: Vec<Edge>,
}

impl ReducedNetwork {
    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Node ids in subset order.
    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

/// Keeps the k strongest off-diagonal entries of every column as edges.
///
/// Ties at the cut rank are broken by ascending node id. Requires k < N_r so
/// that every column has k off-diagonal candidates.
pub fn top_k_network(gr: &ReducedMatrix, k: usize) -> Result<ReducedNetwork, Error> {
    let n = gr.order();
    if k == 0 || k >= n {
        return Err(Error::KTooLarge { k, subset_size: n });
    }
    let nodes = gr.subset().members().to_vec();
    let mut edges = Vec::with_capacity(n * k);
    for j in 0..n {
        let mut candidates: Vec<(usize, f64)> = (0..n)
            .filter(|&i| i != j)
            .map(|i| (i, gr.at(i, j)))
            .collect();
        candidates.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(nodes[a.0].cmp(&nodes[b.0])));
        for &(i, weight) in candidates.iter().take(k) {
            edges.push(Edge { from: nodes[j], to: nodes[i], weight });
        }
    }
    Ok(ReducedNetwork { year: gr.year(), k, nodes, edges })
}

/// How an edge changed between the two years.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeClass {
    /// Present only in the later network.
    Appearing,
    /// Present only in the earlier network.
    Disappearing,
    /// Present in both with a non-decreasing weight.
    StableUp,
    /// Present in both with a decreasing weight.
    StableDown,
}

impl EdgeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeClass::Appearing => "appearing",
            EdgeClass::Disappearing => "disappearing",
            EdgeClass::StableUp => "stable_up",
            EdgeClass::StableDown => "stable_down",
        }
    }
}

/// An edge of the union of two years' networks with its weights where present.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffEdge {
    pub from: u32,
    pub to: u32,
    pub class: EdgeClass,
    pub weight_from: Option<f64>,
    pub weight_to: Option<f64>,
}

/// Classified union of two reduced networks' edge sets.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDiff {
    pub year_from: i32,
    pub year_to: i32,
    pub edges: Vec<DiffEdge>,
}

impl NetworkDiff {
    pub fn count(&self, class: EdgeClass) -> usize {
        self.edges.iter().filter(|e| e.class == class).count()
    }
}

/// Classifies the edges of `from` and `to` over the same node set and k.
pub fn diff_networks(from: &ReducedNetwork, to: &ReducedNetwork) -> Result<NetworkDiff, Error> {
    if from.k != to.k {
        return Err(Error::Incompatible(alloc::string::String::from(
            "networks keep different numbers of edges per node",
        )));
    }
    let mut nodes_a = from.nodes.clone();
    let mut nodes_b = to.nodes.clone();
    nodes_a.sort_unstable();
    nodes_b.sort_unstable();
    if nodes_a != nodes_b {
        return Err(Error::NodeSetMismatch);
    }

    let mut merged: BTreeMap<(u32, u32), (Option<f64>, Option<f64>)> = BTreeMap::new();
    for e in &from.edges {
        merged.entry((e.from, e.to)).or_insert((None, None)).0 = Some(e.weight);
    }
    for e in &to.edges {
        merged.entry((e.from, e.to)).or_insert((None, None)).1 = Some(e.weight);
    }
    let edges = merged
        .into_iter()
        .map(|((src, dst), (wa, wb))| {
            let class = match (wa, wb) {
                (None, Some(_)) => EdgeClass::Appearing,
                (Some(_), None) => EdgeClass::Disappearing,
                (Some(a), Some(b)) => {
                    if b >= a {
                        EdgeClass::StableUp
                    } else {
                        EdgeClass::StableDown
                    }
                }
                (None, None) => unreachable!("edge came from one of the two networks"),
            };
            DiffEdge { from: src, to: dst, class, weight_from: wa, weight_to: wb }
        })
        .collect();
    Ok(NetworkDiff { year_from: from.year, year_to: to.year, edges })
}
