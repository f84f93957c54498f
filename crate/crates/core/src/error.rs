use alloc::string::String;
use core::fmt;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Registry input violated a structural rule (duplicates, gaps, bad codes).
    Registry(String),
    /// A trade record or tensor cell violated a tensor invariant.
    Tensor(String),
    /// Product code outside the product registry.
    UnknownProduct(u8),
    /// Country index outside the country registry.
    CountryOutOfRange { country: u16, count: usize },
    /// The tensor carries no trade volume at all.
    EmptyNetwork,
    /// Damping factor must lie strictly inside (0, 1).
    InvalidAlpha(f64),
    /// Convergence tolerance must be positive.
    InvalidTolerance(f64),
    /// Finite-difference step must be positive and small.
    InvalidDelta(f64),
    /// Power iteration did not reach the tolerance within the iteration budget.
    NotConverged { iterations: usize, residual: f64 },
    /// Two objects that must describe the same space do not.
    Incompatible(String),
    /// Vector or matrix sizes do not line up.
    DimensionMismatch { expected: usize, got: usize },
    /// Node subset for a reduced matrix is empty.
    EmptySubset,
    /// Node subset contains the same node twice.
    DuplicateNode(u32),
    /// Node id outside the network.
    NodeOutOfRange { node: u32, node_count: usize },
    /// The scattering-block system is singular (cannot happen for alpha < 1).
    SingularSystem,
    /// A column of a reduced matrix failed the stochasticity check.
    StochasticityViolated { deviation: f64 },
    /// Requested more outgoing edges per node than the subset allows.
    KTooLarge { k: usize, subset_size: usize },
    /// The two networks being diffed are over different node sets.
    NodeSetMismatch,
    /// Ranking lists have different lengths.
    LengthMismatch { left: usize, right: usize },
    /// Ranking positions are not a bijection onto 1..=N.
    NotAPermutation,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Registry(msg) => write!(f, "registry error: {msg}"),
            Error::Tensor(msg) => write!(f, "tensor error: {msg}"),
            Error::UnknownProduct(p) => write!(f, "unknown product code {p}"),
            Error::CountryOutOfRange { country, count } => {
                write!(f, "country index {country} outside registry of {count}")
            }
            Error::EmptyNetwork => write!(f, "network has no trade volume"),
            Error::InvalidAlpha(a) => write!(f, "damping factor {a} outside (0, 1)"),
            Error::InvalidTolerance(t) => write!(f, "tolerance {t} must be positive"),
            Error::InvalidDelta(d) => write!(f, "finite-difference step {d} must be in (0, 1)"),
            Error::NotConverged { iterations, residual } => write!(
                f,
                "power iteration did not converge after {iterations} iterations (residual {residual:e})"
            ),
            Error::Incompatible(msg) => write!(f, "incompatible operands: {msg}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::EmptySubset => write!(f, "node subset is empty"),
            Error::DuplicateNode(n) => write!(f, "node {n} appears twice in subset"),
            Error::NodeOutOfRange { node, node_count } => {
                write!(f, "node {node} outside network of {node_count} nodes")
            }
            Error::SingularSystem => write!(f, "scattering block system is singular"),
            Error::StochasticityViolated { deviation } => {
                write!(f, "reduced matrix column sums deviate from 1 by {deviation:e}")
            }
            Error::KTooLarge { k, subset_size } => {
                write!(f, "k = {k} too large for subset of {subset_size} nodes")
            }
            Error::NodeSetMismatch => write!(f, "networks are over different node sets"),
            Error::LengthMismatch { left, right } => {
                write!(f, "ranking lists have different lengths: {left} vs {right}")
            }
            Error::NotAPermutation => write!(f, "positions are not a permutation of 1..=N"),
        }
    }
}

impl core::error::Error for Error {}
