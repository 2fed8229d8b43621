//! External clustering agreement: ARI, AMI and NMI.
//!
//! All three are computed from the contingency table of two labelings.
//! Entropies use natural logarithms; every score is a ratio, so the base
//! does not matter.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Predicted and ground-truth labels over the same items, relabeled densely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPartition {
    pred: Vec<usize>,
    truth: Vec<usize>,
}

fn densify<L: Eq + Hash>(labels: &[L]) -> Vec<usize> {
    let mut ids: HashMap<&L, usize> = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(l).or_insert(next)
        })
        .collect()
}

impl LabeledPartition {
    pub fn new<L: Eq + Hash>(pred: &[L], truth: &[L]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::Input(format!(
                "labelings cover different items: {} predicted vs {} true labels",
                pred.len(),
                truth.len()
            )));
        }
        Ok(LabeledPartition {
            pred: densify(pred),
            truth: densify(truth),
        })
    }

    pub fn from_partitions(pred: &Partition, truth: &Partition) -> Result<Self> {
        if pred.universe() != truth.universe() {
            return Err(Error::Input(format!(
                "partitions cover different universes: {} vs {} items",
                pred.universe(),
                truth.universe()
            )));
        }
        Self::new(&pred.labels(), &truth.labels())
    }

    pub fn len(&self) -> usize {
        self.pred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pred.is_empty()
    }

    /// Same data with predicted and true labels swapped.
    pub fn swapped(&self) -> Self {
        LabeledPartition {
            pred: self.truth.clone(),
            truth: self.pred.clone(),
        }
    }

    fn contingency(&self) -> Contingency {
        let rows = self.truth.iter().max().map_or(0, |m| m + 1);
        let cols = self.pred.iter().max().map_or(0, |m| m + 1);
        let mut cells: HashMap<(usize, usize), u64> = HashMap::new();
        let mut row_sums = vec![0u64; rows];
        let mut col_sums = vec![0u64; cols];
        for (&t, &p) in self.truth.iter().zip(&self.pred) {
            *cells.entry((t, p)).or_insert(0) += 1;
            row_sums[t] += 1;
            col_sums[p] += 1;
        }
        let mut cells: Vec<(usize, usize, u64)> =
            cells.into_iter().map(|((t, p), n)| (t, p, n)).collect();
        cells.sort_unstable();
        Contingency {
            n: self.truth.len() as u64,
            cells,
            row_sums,
            col_sums,
        }
    }
}

struct Contingency {
    n: u64,
    /// Non-zero cells `(row, col, count)`.
    cells: Vec<(usize, usize, u64)>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
}

impl Contingency {
    /// Both labelings induce the same partition.
    fn is_bijective(&self) -> bool {
        self.cells.len() == self.row_sums.len() && self.cells.len() == self.col_sums.len()
    }

    fn entropy(sums: &[u64], n: u64) -> f64 {
        let n = n as f64;
        -sums
            .iter()
            .filter(|&&s| s > 0)
            .map(|&s| {
                let p = s as f64 / n;
                p * p.ln()
            })
            .sum::<f64>()
    }

    fn mutual_information(&self) -> f64 {
        let n = self.n as f64;
        self.cells
            .iter()
            .map(|&(r, c, nij)| {
                let nij = nij as f64;
                let outer = self.row_sums[r] as f64 * self.col_sums[c] as f64;
                nij / n * (n * nij / outer).ln()
            })
            .sum::<f64>()
            .max(0.0)
    }

    /// Expected mutual information under the hypergeometric permutation model.
    fn expected_mutual_information(&self) -> f64 {
        let n = self.n as usize;
        let nf = n as f64;
        let mut log_fact = vec![0.0f64; n + 1];
        for i in 1..=n {
            log_fact[i] = log_fact[i - 1] + (i as f64).ln();
        }
        let mut emi = 0.0;
        for &a in &self.row_sums {
            for &b in &self.col_sums {
                let (a, b) = (a as usize, b as usize);
                let lo = (a + b).saturating_sub(n).max(1);
                let hi = a.min(b);
                let fixed = log_fact[a] + log_fact[b] + log_fact[n - a] + log_fact[n - b]
                    - log_fact[n];
                for nij in lo..=hi {
                    let nijf = nij as f64;
                    let term = nijf / nf * (nf * nijf / (a as f64 * b as f64)).ln();
                    let log_prob = fixed
                        - log_fact[nij]
                        - log_fact[a - nij]
                        - log_fact[b - nij]
                        - log_fact[n + nij - a - b];
                    emi += term * log_prob.exp();
                }
            }
        }
        emi
    }
}

fn choose2(x: u64) -> f64 {
    (x as f64) * (x.saturating_sub(1) as f64) / 2.0
}

/// Adjusted Rand index, in `[-1, 1]`; 1 for identical partitions, 0 at chance.
pub fn ari(labels: &LabeledPartition) -> f64 {
    let table = labels.contingency();
    if table.is_bijective() {
        return 1.0;
    }
    let index: f64 = table.cells.iter().map(|&(_, _, nij)| choose2(nij)).sum();
    let rows: f64 = table.row_sums.iter().map(|&a| choose2(a)).sum();
    let cols: f64 = table.col_sums.iter().map(|&b| choose2(b)).sum();
    let pairs = choose2(table.n);
    let expected = rows * cols / pairs;
    let max = (rows + cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Adjusted mutual information with max-normalization and exact expected MI.
pub fn ami(labels: &LabeledPartition) -> f64 {
    let table = labels.contingency();
    if table.is_bijective() {
        return 1.0;
    }
    let mi = table.mutual_information();
    let emi = table.expected_mutual_information();
    let h_true = Contingency::entropy(&table.row_sums, table.n);
    let h_pred = Contingency::entropy(&table.col_sums, table.n);
    let mut denominator = h_true.max(h_pred) - emi;
    if denominator < 0.0 {
        denominator = denominator.min(-f64::EPSILON);
    } else {
        denominator = denominator.max(f64::EPSILON);
    }
    (mi - emi) / denominator
}

/// Mutual information normalized by the arithmetic mean of the two entropies.
pub fn nmi(labels: &LabeledPartition) -> f64 {
    let table = labels.contingency();
    if table.is_bijective() {
        return 1.0;
    }
    let mi = table.mutual_information();
    let h_true = Contingency::entropy(&table.row_sums, table.n);
    let h_pred = Contingency::entropy(&table.col_sums, table.n);
    let mean = (h_true + h_pred) / 2.0;
    if mean <= 0.0 {
        return 1.0;
    }
    (mi / mean).clamp(0.0, 1.0)
}

/// All three scores at once.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Agreement {
    pub ari: f64,
    pub ami: f64,
    pub nmi: f64,
}

pub fn agreement(labels: &LabeledPartition) -> Agreement {
    Agreement {
        ari: ari(labels),
        ami: ami(labels),
        nmi: nmi(labels),
    }
}
