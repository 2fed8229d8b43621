use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Disjoint, non-empty clusters covering `[0, universe)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    universe: usize,
    clusters: Vec<Vec<NodeId>>,
}

impl Partition {
    /// Validates and wraps `clusters`, keeping the given cluster and member order.
    pub fn new(universe: usize, clusters: Vec<Vec<NodeId>>) -> Result<Self> {
        let mut seen = vec![false; universe];
        let mut covered = 0;
        for (c, cluster) in clusters.iter().enumerate() {
            if cluster.is_empty() {
                return Err(Error::Partition(format!("cluster {c} is empty")));
            }
            for &v in cluster {
                if v >= universe {
                    return Err(Error::Partition(format!(
                        "node {v} is outside [0, {universe})"
                    )));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::Partition(format!("node {v} appears twice")));
                }
                covered += 1;
            }
        }
        if covered != universe {
            let missing = seen.iter().position(|&s| !s).unwrap_or_default();
            return Err(Error::Partition(format!(
                "node {missing} is not covered ({covered} of {universe} nodes assigned)"
            )));
        }
        Ok(Partition { universe, clusters })
    }

    pub fn singletons(universe: usize) -> Self {
        Partition {
            universe,
            clusters: (0..universe).map(|v| vec![v]).collect(),
        }
    }

    /// Groups nodes by label; clusters appear in order of first occurrence.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut slot = std::collections::HashMap::new();
        let mut clusters: Vec<Vec<NodeId>> = Vec::new();
        for (v, &label) in labels.iter().enumerate() {
            let c = *slot.entry(label).or_insert_with(|| {
                clusters.push(Vec::new());
                clusters.len() - 1
            });
            clusters[c].push(v);
        }
        Partition {
            universe: labels.len(),
            clusters,
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn clusters(&self) -> &[Vec<NodeId>] {
        &self.clusters
    }

    pub fn into_clusters(self) -> Vec<Vec<NodeId>> {
        self.clusters
    }

    /// Number of clusters `M`.
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Cluster index of every node.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.universe];
        for (c, cluster) in self.clusters.iter().enumerate() {
            for &v in cluster {
                labels[v] = c;
            }
        }
        labels
    }

    /// Members sorted within clusters, clusters sorted by smallest member.
    pub fn canonical(mut self) -> Self {
        for cluster in &mut self.clusters {
            cluster.sort_unstable();
        }
        self.clusters.sort_unstable_by_key(|c| c[0]);
        self
    }

    /// True when both describe the same set of clusters, ignoring order.
    pub fn same_clusters(&self, other: &Partition) -> bool {
        self.universe == other.universe && self.clone().canonical() == other.clone().canonical()
    }
}
