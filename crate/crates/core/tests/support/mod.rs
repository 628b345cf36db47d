//! Brute-force reference implementations, written independently of the
//! library's analytic enumerators and samplers.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::Ratio;

use netband::exposure::{ExposureMapping, ExposureModel, ExposureSuperArm, Label};
use netband::network::{AdjacencyMatrix, Clustering};

pub type Q = Ratio<u64>;

/// A small interference model described by raw data.
#[derive(Debug, Clone)]
pub struct Toy {
    pub name: String,
    pub mapping: ExposureMapping,
    pub k: usize,
    pub n: usize,
    /// Directed weighted edges `(i, j, h_ij)`.
    pub edges: Vec<(usize, usize, f64)>,
    pub clusters: Vec<usize>,
}

impl Toy {
    pub fn new(name: &str, mapping: ExposureMapping, k: usize, clusters: Vec<usize>) -> Self {
        Self {
            name: name.to_string(),
            mapping,
            k,
            n: clusters.len(),
            edges: Vec::new(),
            clusters,
        }
    }

    /// Adds `i -- j` in both directions.
    pub fn undirected(mut self, edges: &[(usize, usize, f64)]) -> Self {
        for &(i, j, w) in edges {
            self.edges.push((i, j, w));
            self.edges.push((j, i, w));
        }
        self
    }

    pub fn model(&self) -> Arc<ExposureModel> {
        Arc::new(
            ExposureModel::new(
                self.mapping,
                self.k,
                AdjacencyMatrix::build(self.n, &self.edges).unwrap(),
                Clustering::new(self.clusters.clone()).unwrap(),
            )
            .unwrap(),
        )
    }

    fn weight(&self, i: usize, j: usize) -> f64 {
        self.edges
            .iter()
            .rev()
            .find(|&&(a, b, _)| a == i && b == j)
            .map_or(0.0, |e| e.2)
    }

    fn cluster_members(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.clusters[j] == self.clusters[i]).collect()
    }

    pub fn label(&self, i: usize, a: &[usize]) -> Q {
        match self.mapping {
            ExposureMapping::PerUnit => Q::from_integer(a[i] as u64),
            ExposureMapping::GlobalProportion => Q::new(a.iter().sum::<usize>() as u64, self.n as u64),
            ExposureMapping::NeighborhoodThreshold { threshold } => {
                let mut num = 0.0;
                let mut den = 0.0;
                for (j, &aj) in a.iter().enumerate() {
                    let h = self.weight(i, j);
                    num += h * aj as f64;
                    den += h;
                }
                assert!(den > 0.0, "isolated unit in toy {}", self.name);
                Q::from_integer(u64::from(num / den < threshold))
            }
            ExposureMapping::ClusterProportion => {
                let members = self.cluster_members(i);
                let total: usize = members.iter().map(|&j| a[j]).sum();
                Q::new(total as u64, members.len() as u64)
            }
        }
    }

    pub fn profile(&self, a: &[usize]) -> Vec<Q> {
        (0..self.n).map(|i| self.label(i, a)).collect()
    }

    /// Every joint assignment, in lexicographic order.
    pub fn assignments(&self) -> Vec<Vec<usize>> {
        let total = self.k.pow(self.n as u32);
        (0..total)
            .map(|mut code| {
                let mut a = vec![0; self.n];
                for slot in a.iter_mut().rev() {
                    *slot = code % self.k;
                    code /= self.k;
                }
                a
            })
            .collect()
    }

    pub fn codomain(&self) -> Vec<Q> {
        let mut labels: Vec<Q> = match self.mapping {
            ExposureMapping::PerUnit => (0..self.k as u64).map(Q::from_integer).collect(),
            ExposureMapping::GlobalProportion => (0..=(self.n * (self.k - 1)) as u64)
                .map(|c| Q::new(c, self.n as u64))
                .collect(),
            ExposureMapping::NeighborhoodThreshold { .. } => vec![Q::from_integer(0), Q::from_integer(1)],
            ExposureMapping::ClusterProportion => (0..self.n)
                .flat_map(|i| {
                    let m = self.cluster_members(i).len() as u64;
                    (0..=m * (self.k as u64 - 1)).map(move |c| Q::new(c, m))
                })
                .collect(),
        };
        labels.sort();
        labels.dedup();
        labels
    }

    fn cluster_constant(&self, p: &[Q]) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.clusters[i] != self.clusters[j] || p[i] == p[j]))
    }

    pub fn num_clusters(&self) -> usize {
        let mut ids = self.clusters.clone();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// Realizable, cluster-constant profiles with their compatible sets.
    pub fn space(&self, restriction: Option<&[Q]>) -> BruteSpace {
        let mut realizable: BTreeMap<Vec<Q>, Vec<Vec<usize>>> = BTreeMap::new();
        for a in self.assignments() {
            realizable.entry(self.profile(&a)).or_default().push(a);
        }
        let num_realizable = realizable.len();
        let arms: BTreeMap<Vec<Q>, Vec<Vec<usize>>> = realizable
            .into_iter()
            .filter(|(p, _)| self.cluster_constant(p))
            .filter(|(p, _)| restriction.is_none_or(|allowed| p.iter().all(|l| allowed.contains(l))))
            .collect();
        BruteSpace {
            arms,
            num_realizable,
            num_cluster_constant: self.codomain().len().pow(self.num_clusters() as u32),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BruteSpace {
    /// Sorted by label vector, which is the library's arm order.
    pub arms: BTreeMap<Vec<Q>, Vec<Vec<usize>>>,
    pub num_realizable: usize,
    pub num_cluster_constant: usize,
}

pub fn to_q(label: Label) -> Q {
    Q::new(label.numer(), label.denom())
}

pub fn to_label(q: Q) -> Label {
    Label::new(*q.numer(), *q.denom()).unwrap()
}

/// Library arm as a label vector.
pub fn labels_of(model: &ExposureModel, s: &ExposureSuperArm) -> Vec<Q> {
    s.0.iter().map(|&l| to_q(model.label(l))).collect()
}

/// The standard battery of toys with `K^N <= 4096`.
pub fn toys() -> Vec<Toy> {
    let path4 = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)];
    let weighted5 = [(0, 1, 2.0), (1, 2, 1.0), (2, 3, 3.0), (3, 4, 1.0), (4, 0, 1.0), (1, 3, 1.0)];
    vec![
        Toy::new("per-unit singletons n3 k3", ExposureMapping::PerUnit, 3, vec![0, 1, 2]),
        Toy::new("per-unit pairs n4 k2", ExposureMapping::PerUnit, 2, vec![0, 0, 1, 1]),
        Toy::new("per-unit n6 k4", ExposureMapping::PerUnit, 4, vec![0, 1, 0, 2, 1, 2]),
        Toy::new("global n4 k3", ExposureMapping::GlobalProportion, 3, vec![0; 4]),
        Toy::new("global n6 k4", ExposureMapping::GlobalProportion, 4, vec![0; 6]),
        Toy::new("global n12 k2", ExposureMapping::GlobalProportion, 2, vec![0; 12]),
        Toy::new("global split clusters n5 k2", ExposureMapping::GlobalProportion, 2, vec![0, 0, 1, 1, 1]),
        Toy::new(
            "threshold path n4 k2 t=0.5",
            ExposureMapping::NeighborhoodThreshold { threshold: 0.5 },
            2,
            vec![0, 1, 2, 3],
        )
        .undirected(&path4),
        Toy::new(
            "threshold path n4 k2 t=1 one cluster",
            ExposureMapping::NeighborhoodThreshold { threshold: 1.0 },
            2,
            vec![0; 4],
        )
        .undirected(&path4),
        Toy::new(
            "threshold weighted n5 k3 t=0.3",
            ExposureMapping::NeighborhoodThreshold { threshold: 0.3 },
            3,
            vec![0, 1, 2, 3, 4],
        )
        .undirected(&weighted5),
        Toy {
            name: "threshold directed n3 k2 t=0.5".into(),
            mapping: ExposureMapping::NeighborhoodThreshold { threshold: 0.5 },
            k: 2,
            n: 3,
            edges: vec![(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0), (2, 1, 1.0)],
            clusters: vec![0, 1, 2],
        },
        Toy::new("cluster pairs n4 k2", ExposureMapping::ClusterProportion, 2, vec![0, 0, 1, 1]),
        Toy::new("cluster uneven n6 k2", ExposureMapping::ClusterProportion, 2, vec![0, 0, 1, 1, 1, 2]),
        Toy::new("cluster pairs n4 k4", ExposureMapping::ClusterProportion, 4, vec![0, 0, 1, 1]),
        Toy::new("cluster thirds n12 k2", ExposureMapping::ClusterProportion, 2, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]),
    ]
}
