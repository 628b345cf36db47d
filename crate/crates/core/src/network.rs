//! Interference network and unit clustering.
//!
//! Both objects are immutable once validated and are shared read-only across
//! replications.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `n x n` matrix of nonnegative interference weights with a zero diagonal.
///
/// Symmetry is not required.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    n: usize,
    weights: Vec<f64>,
}

impl AdjacencyMatrix {
    /// Builds a validated matrix from sparse `(i, j, weight)` entries.
    /// Entries that are not listed are zero; repeated entries overwrite.
    pub fn build(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("network must have at least one unit".into()));
        }
        let mut weights = vec![0.0; n * n];
        for &(i, j, w) in entries {
            if i >= n {
                return Err(Error::UnitOutOfRange { index: i, n });
            }
            if j >= n {
                return Err(Error::UnitOutOfRange { index: j, n });
            }
            if !w.is_finite() {
                return Err(Error::NonFiniteWeight { i, j });
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { i, j, weight: w });
            }
            if i == j && w != 0.0 {
                return Err(Error::NonzeroDiagonal(i));
            }
            weights[i * n + j] = w;
        }
        Ok(Self { n, weights })
    }

    /// The no-interference network on `n` units.
    pub fn empty(n: usize) -> Result<Self> {
        Self::build(n, &[])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    /// Total interference weight received by unit `i`.
    pub fn neighbor_weight_sum(&self, i: usize) -> Result<f64> {
        if i >= self.n {
            return Err(Error::UnitOutOfRange { index: i, n: self.n });
        }
        Ok(self.row(i).iter().sum())
    }

    /// Nonzero entries in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for (j, &w) in self.row(i).iter().enumerate() {
                if w != 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile {
            n: self.n,
            edges: self.edges(),
        }
    }
}

/// On-disk network format: `{ "n": int, "edges": [[i, j, w], ...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub n: usize,
    #[serde(default)]
    pub edges: Vec<(usize, usize, f64)>,
}

impl TryFrom<NetworkFile> for AdjacencyMatrix {
    type Error = Error;

    fn try_from(file: NetworkFile) -> Result<Self> {
        AdjacencyMatrix::build(file.n, &file.edges)
    }
}

/// Partition of units into nonempty clusters with contiguous ids `0..C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Clustering {
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::InvalidClustering("assignment is empty".into()));
        }
        let num_clusters = assignment.iter().max().map_or(0, |m| m + 1);
        let mut members = vec![Vec::new(); num_clusters];
        for (unit, &c) in assignment.iter().enumerate() {
            members[c].push(unit);
        }
        if let Some(q) = members.iter().position(Vec::is_empty) {
            return Err(Error::InvalidClustering(format!(
                "cluster id {q} is unused; ids must be contiguous in [0, {num_clusters})"
            )));
        }
        Ok(Self { assignment, members })
    }

    /// Every unit in its own cluster.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::new((0..n).collect())
    }

    /// All units in one cluster.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(vec![0; n])
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.members.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, i: usize) -> Result<usize> {
        self.assignment
            .get(i)
            .copied()
            .ok_or(Error::UnitOutOfRange { index: i, n: self.n() })
    }

    /// Units of cluster `q`, in increasing order.
    pub fn members(&self, q: usize) -> &[usize] {
        &self.members[q]
    }

    pub fn clusters(&self) -> impl Iterator<Item = &[usize]> {
        self.members.iter().map(Vec::as_slice)
    }

    pub fn to_file(&self) -> ClusteringFile {
        ClusteringFile {
            assignment: self.assignment.clone(),
        }
    }
}

/// On-disk clustering format: `{ "assignment": [int, ...] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusteringFile {
    pub assignment: Vec<usize>,
}

impl TryFrom<ClusteringFile> for Clustering {
    type Error = Error;

    fn try_from(file: ClusteringFile) -> Result<Self> {
        Clustering::new(file.assignment)
    }
}
