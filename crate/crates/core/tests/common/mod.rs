//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library: each oracle recomputes its quantity
//! from plain edge lists and label vectors with the most direct formula.
#![allow(dead_code)]

use rand::Rng;

pub type Edges = Vec<(usize, usize, f64)>;

/// Random simple graph with weights in `[0.1, 1.0]`.
pub fn random_graph<R: Rng>(rng: &mut R, nodes: usize, density: f64) -> Edges {
    let mut edges = Vec::new();
    for u in 0..nodes {
        for v in u + 1..nodes {
            if rng.random_bool(density) {
                edges.push((u, v, rng.random_range(0.1..=1.0)));
            }
        }
    }
    edges
}

/// Random labels with at most `clusters` distinct values.
pub fn random_labels<R: Rng>(rng: &mut R, nodes: usize, clusters: usize) -> Vec<usize> {
    (0..nodes).map(|_| rng.random_range(0..clusters)).collect()
}

pub fn groups(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut slot = std::collections::HashMap::new();
    for (v, &l) in labels.iter().enumerate() {
        let i = *slot.entry(l).or_insert_with(|| {
            out.push(Vec::new());
            out.len() - 1
        });
        out[i].push(v);
    }
    out
}

pub fn degrees(nodes: usize, edges: &Edges) -> Vec<f64> {
    let mut d = vec![0.0; nodes];
    for &(u, v, w) in edges {
        d[u] += w;
        d[v] += w;
    }
    d
}

/// Degree-distribution entropy, base 2.
pub fn flat_entropy(nodes: usize, edges: &Edges) -> f64 {
    let d = degrees(nodes, edges);
    let total: f64 = d.iter().sum();
    d.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -(x / total) * (x / total).log2())
        .sum()
}

/// Entropy of the two-level tree whose clusters are `parts`, straight from the
/// definition: every non-root node contributes `-(g / vol(root)) log2(vol / vol(parent))`.
pub fn two_level_entropy(nodes: usize, edges: &Edges, parts: &[Vec<usize>]) -> f64 {
    let d = degrees(nodes, edges);
    let total: f64 = d.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut owner = vec![usize::MAX; nodes];
    for (i, p) in parts.iter().enumerate() {
        for &v in p {
            owner[v] = i;
        }
    }
    let mut h = 0.0;
    for (i, p) in parts.iter().enumerate() {
        let vol: f64 = p.iter().map(|&v| d[v]).sum();
        let cut: f64 = edges
            .iter()
            .filter(|&&(u, v, _)| (owner[u] == i) != (owner[v] == i))
            .map(|e| e.2)
            .sum();
        if vol > 0.0 && cut > 0.0 {
            h -= cut / total * (vol / total).log2();
        }
        for &v in p {
            if d[v] > 0.0 {
                h -= d[v] / total * (d[v] / vol).log2();
            }
        }
    }
    h
}

/// The five-term merge change for clusters with volumes `v1`, `v2`, cuts `g1`,
/// `g2`, merged cut `gn`, in a graph of volume `total`.
pub fn literal_merge_delta(v1: f64, g1: f64, v2: f64, g2: f64, gn: f64, total: f64) -> f64 {
    let vn = v1 + v2;
    let term = |coef: f64, ratio: f64| if coef == 0.0 { 0.0 } else { coef / total * ratio.log2() };
    -term(gn, vn / total) - term(v1, v1 / vn) - term(v2, v2 / vn)
        + term(g1, v1 / total)
        + term(g2, v2 / total)
}

/// Every set partition of `0..n`.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(next: usize, n: usize, current: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if next == n {
            out.push(current.clone());
            return;
        }
        for i in 0..current.len() {
            current[i].push(next);
            go(next + 1, n, current, out);
            current[i].pop();
        }
        current.push(vec![next]);
        go(next + 1, n, current, out);
        current.pop();
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), &mut out);
    out
}

pub fn normalize(mut parts: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for p in &mut parts {
        p.sort_unstable();
    }
    parts.sort();
    parts
}

/// ARI by counting every pair of items.
pub fn pair_counting_ari(pred: &[usize], truth: &[usize]) -> f64 {
    let (mut both, mut only_pred, mut only_truth, mut neither) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..pred.len() {
        for j in i + 1..pred.len() {
            match (pred[i] == pred[j], truth[i] == truth[j]) {
                (true, true) => both += 1.0,
                (true, false) => only_pred += 1.0,
                (false, true) => only_truth += 1.0,
                (false, false) => neither += 1.0,
            }
        }
    }
    let num = 2.0 * (neither * both - only_pred * only_truth);
    let den = (neither + only_pred) * (only_pred + both) + (neither + only_truth) * (only_truth + both);
    num / den
}

fn counts(labels: &[usize]) -> Vec<f64> {
    groups(labels).iter().map(|g| g.len() as f64).collect()
}

fn table(pred: &[usize], truth: &[usize]) -> Vec<Vec<f64>> {
    let t = groups(truth);
    let p = groups(pred);
    t.iter()
        .map(|a| {
            p.iter()
                .map(|b| a.iter().filter(|x| b.contains(x)).count() as f64)
                .collect()
        })
        .collect()
}

fn entropy_nat(sizes: &[f64], n: f64) -> f64 {
    sizes.iter().map(|&s| -(s / n) * (s / n).ln()).sum()
}

pub fn mutual_information(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len() as f64;
    let a = counts(truth);
    let b = counts(pred);
    let mut mi = 0.0;
    for (i, row) in table(pred, truth).iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0.0 {
                mi += nij / n * (n * nij / (a[i] * b[j])).ln();
            }
        }
    }
    mi
}

fn factorial(x: f64) -> f64 {
    (1..=x as u64).map(|i| i as f64).product()
}

/// Expected mutual information under random permutations, summed term by term
/// with plain factorials (fine for small `n`).
pub fn expected_mutual_information(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len() as f64;
    let mut emi = 0.0;
    for &a in &counts(truth) {
        for &b in &counts(pred) {
            let lo = (a + b - n).max(1.0);
            let mut nij = lo;
            while nij <= a.min(b) {
                let p = factorial(a) * factorial(b) * factorial(n - a) * factorial(n - b)
                    / (factorial(n)
                        * factorial(nij)
                        * factorial(a - nij)
                        * factorial(b - nij)
                        * factorial(n - a - b + nij));
                emi += nij / n * (n * nij / (a * b)).ln() * p;
                nij += 1.0;
            }
        }
    }
    emi
}

pub fn direct_ami(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len() as f64;
    let mi = mutual_information(pred, truth);
    let emi = expected_mutual_information(pred, truth);
    let h = entropy_nat(&counts(truth), n).max(entropy_nat(&counts(pred), n));
    (mi - emi) / (h - emi)
}

pub fn direct_nmi(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len() as f64;
    let mi = mutual_information(pred, truth);
    mi / ((entropy_nat(&counts(truth), n) + entropy_nat(&counts(pred), n)) / 2.0)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Connected components by union-find over an edge list.
pub fn components(nodes: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut x = x;
        while parent[x] != r {
            let next = parent[x];
            parent[x] = r;
            x = next;
        }
        r
    }
    let mut parent: Vec<usize> = (0..nodes).collect();
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let labels: Vec<usize> = (0..nodes).map(|v| find(&mut parent, v)).collect();
    normalize(groups(&labels))
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `a` and `b` agree to relative `tolerance`, or differ by no more than the
/// rounding floor of an entropy of magnitude `scale` (a difference of two
/// entropies cannot resolve a true zero any finer than that).
pub fn agrees(a: f64, b: f64, tolerance: f64, scale: f64) -> bool {
    relative_gap(a, b) <= tolerance || (a - b).abs() <= 16.0 * f64::EPSILON * scale.abs()
}
