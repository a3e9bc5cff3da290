//! Attributed, labeled, undirected graphs and the generative models behind
//! the synthetic ones.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Edge-generation rule of a generative model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum Structure {
    /// Contextual stochastic block model: independent edges with probability
    /// `p` within a class and `q` across classes.
    #[serde(rename = "CSBM")]
    Csbm { p: f64, q: f64 },
    /// Contextual Barabási–Albert model with communities: each new node draws
    /// `m` neighbors weighted by `(1 + degree) * omega[own][other]`.
    #[serde(rename = "CBA")]
    Cba { m: usize, omega: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenModel {
    pub n: usize,
    pub structure: Structure,
    /// Class-mean vector; class `c` of a binary model has mean `(2c - 1) * mu`.
    pub mu: Vec<f64>,
    /// Feature standard deviation (covariance `sigma^2 I`).
    pub sigma: f64,
    pub num_classes: usize,
    /// Explicit per-class means; overrides the `±mu` convention when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_means: Option<Vec<Vec<f64>>>,
}

/// Feature dimension `round(n / ln(n)^2)`, rounding halves to even.
pub fn default_dimension(n: usize) -> usize {
    if n < 2 {
        return 1;
    }
    let ln = (n as f64).ln();
    let d = (n as f64 / (ln * ln)).round_ties_even() as usize;
    d.max(1)
}

/// Class-mean vector whose two classes sit `k * sigma` apart.
pub fn mean_vector(k: f64, sigma: f64, d: usize) -> Vec<f64> {
    vec![k * sigma / (2.0 * (d as f64).sqrt()); d]
}

impl GenModel {
    pub fn csbm(n: usize, p: f64, q: f64, k: f64, d: usize, sigma: f64) -> Self {
        GenModel {
            n,
            structure: Structure::Csbm { p, q },
            mu: mean_vector(k, sigma, d),
            sigma,
            num_classes: 2,
            class_means: None,
        }
    }

    pub fn cba(n: usize, m: usize, omega: Vec<Vec<f64>>, k: f64, d: usize, sigma: f64) -> Self {
        GenModel {
            n,
            structure: Structure::Cba { m, omega },
            mu: mean_vector(k, sigma, d),
            sigma,
            num_classes: 2,
            class_means: None,
        }
    }

    pub fn d(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return param("node count must be at least 1");
        }
        if self.mu.is_empty() {
            return param("feature dimension must be positive");
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return param(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.mu.iter().any(|x| !x.is_finite()) {
            return param("mu has non-finite entries");
        }
        if self.num_classes < 2 {
            return param("need at least two classes");
        }
        match &self.class_means {
            Some(means) => {
                if means.len() != self.num_classes || means.iter().any(|m| m.len() != self.d()) {
                    return param("class_means must be num_classes x d");
                }
            }
            None if self.num_classes != 2 => {
                return param("more than two classes requires explicit class_means");
            }
            None => {}
        }
        match &self.structure {
            Structure::Csbm { p, q } => {
                if !(0.0..=1.0).contains(p) || !(0.0..=1.0).contains(q) {
                    return param(format!("edge probabilities must lie in [0,1]: p={p}, q={q}"));
                }
                if q > p {
                    return param(format!("homophily requires q <= p: p={p}, q={q}"));
                }
            }
            Structure::Cba { m, omega } => {
                if *m < 1 {
                    return param("CBA needs m >= 1");
                }
                let c = self.num_classes;
                if omega.len() != c || omega.iter().any(|r| r.len() != c) {
                    return param("omega must be num_classes x num_classes");
                }
                for a in 0..c {
                    if !(omega[a][a].is_finite() && omega[a][a] > 0.0) {
                        return param("same-class affinities must be positive");
                    }
                    for b in 0..c {
                        let w = omega[a][b];
                        if !w.is_finite() || w < 0.0 {
                            return param("affinities must be finite and nonnegative");
                        }
                        if w != omega[b][a] {
                            return param("omega must be symmetric");
                        }
                        if a != b && w >= omega[a][a] {
                            return param("same-class affinity must exceed cross-class affinity");
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn class_mean(&self, c: usize) -> Vec<f64> {
        match &self.class_means {
            Some(means) => means[c].clone(),
            None => {
                let sign = if c == 0 { -1.0 } else { 1.0 };
                self.mu.iter().map(|m| sign * m).collect()
            }
        }
    }

    /// CSBM edge probability between classes `a` and `b`.
    pub fn edge_prob(&self, a: usize, b: usize) -> Option<f64> {
        match self.structure {
            Structure::Csbm { p, q } => Some(if a == b { p } else { q }),
            Structure::Cba { .. } => None,
        }
    }
}

/// Undirected attributed graph. Edges are unordered pairs without self-loops,
/// stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct Graph {
    d: usize,
    num_classes: usize,
    features: Vec<f64>,
    adj: Vec<Vec<usize>>,
    labels: Vec<usize>,
    known_mask: Vec<bool>,
    gen: Option<GenModel>,
}

/// On-disk layout of a graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    d: usize,
    num_classes: usize,
    features: Vec<f64>,
    edges: Vec<[usize; 2]>,
    labels: Vec<usize>,
    known_mask: Vec<bool>,
    #[serde(default)]
    gen: Option<GenModel>,
}

impl From<Graph> for GraphFile {
    fn from(g: Graph) -> Self {
        GraphFile {
            n: g.n(),
            d: g.d,
            num_classes: g.num_classes,
            edges: g.edges().map(|(i, j)| [i, j]).collect(),
            features: g.features,
            labels: g.labels,
            known_mask: g.known_mask,
            gen: g.gen,
        }
    }
}

impl TryFrom<GraphFile> for Graph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        if f.labels.len() != f.n {
            return param("labels length differs from n");
        }
        let edges: Vec<(usize, usize)> = f.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::new(f.d, f.num_classes, f.features, &edges, f.labels, f.known_mask, f.gen)
    }
}

impl Graph {
    pub fn new(
        d: usize,
        num_classes: usize,
        features: Vec<f64>,
        edges: &[(usize, usize)],
        labels: Vec<usize>,
        known_mask: Vec<bool>,
        gen: Option<GenModel>,
    ) -> Result<Self> {
        let n = labels.len();
        if features.len() != n * d {
            return param(format!("features has {} entries, expected {}x{}", features.len(), n, d));
        }
        if known_mask.len() != n {
            return param("known_mask length differs from n");
        }
        if num_classes < 1 {
            return param("num_classes must be positive");
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return param(format!("label {bad} out of range for {num_classes} classes"));
        }
        let mut g = Graph {
            d,
            num_classes,
            features,
            adj: vec![Vec::new(); n],
            labels,
            known_mask,
            gen,
        };
        for &(i, j) in edges {
            if i >= n || j >= n {
                return param(format!("edge ({i},{j}) out of range"));
            }
            if i == j {
                return param(format!("self-loop at {i}"));
            }
            g.insert_edge(i, j);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn known_mask(&self) -> &[bool] {
        &self.known_mask
    }

    pub fn set_known_mask(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.n() {
            return param("known_mask length differs from n");
        }
        self.known_mask = mask;
        Ok(())
    }

    pub fn gen(&self) -> Option<&GenModel> {
        self.gen.as_ref()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&j).is_ok()
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Inserts `{i, j}`; returns false if it was already present.
    pub fn insert_edge(&mut self, i: usize, j: usize) -> bool {
        debug_assert_ne!(i, j);
        match self.adj[i].binary_search(&j) {
            Ok(_) => false,
            Err(pos) => {
                self.adj[i].insert(pos, j);
                let pos_j = self.adj[j].binary_search(&i).unwrap_err();
                self.adj[j].insert(pos_j, i);
                true
            }
        }
    }

    /// Removes `{i, j}`; returns false if it was absent.
    pub fn remove_edge(&mut self, i: usize, j: usize) -> bool {
        match self.adj[i].binary_search(&j) {
            Err(_) => false,
            Ok(pos) => {
                self.adj[i].remove(pos);
                let pos_j = self.adj[j].binary_search(&i).unwrap();
                self.adj[j].remove(pos_j);
                true
            }
        }
    }

    /// Appends a node and returns its index.
    pub fn push_node(&mut self, row: &[f64], label: usize, known: bool) -> usize {
        assert_eq!(row.len(), self.d, "feature row has wrong dimension");
        self.features.extend_from_slice(row);
        self.labels.push(label);
        self.known_mask.push(known);
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    /// Subgraph induced by `keep` (in the given order); node `keep[k]` becomes `k`.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.n()];
        for (k, &i) in keep.iter().enumerate() {
            index[i] = k;
        }
        let mut features = Vec::with_capacity(keep.len() * self.d);
        for &i in keep {
            features.extend_from_slice(self.row(i));
        }
        let adj = keep
            .iter()
            .map(|&i| {
                let mut nb: Vec<usize> = self.adj[i]
                    .iter()
                    .filter_map(|&j| (index[j] != usize::MAX).then_some(index[j]))
                    .collect();
                nb.sort_unstable();
                nb
            })
            .collect();
        Graph {
            d: self.d,
            num_classes: self.num_classes,
            features,
            adj,
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
            known_mask: keep.iter().map(|&i| self.known_mask[i]).collect(),
            gen: self.gen.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::harness::emit::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::new(1, 2, vec![0.0, 1.0, 2.0], &[(0, 1), (2, 1)], vec![0, 1, 0], vec![true; 3], None)
            .unwrap()
    }

    #[test]
    fn edges_are_symmetric_and_sorted() {
        let g = path3();
        assert!(g.has_edge(1, 0) && g.has_edge(0, 1));
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn rejects_self_loops_and_bad_labels() {
        assert!(Graph::new(1, 2, vec![0.0], &[(0, 0)], vec![0], vec![true], None).is_err());
        assert!(Graph::new(1, 2, vec![0.0], &[], vec![2], vec![true], None).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let g = path3();
        let back = Graph::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn dimension_rounding() {
        assert_eq!(default_dimension(1000), 21);
    }

    #[test]
    fn mean_distance_is_k_sigma() {
        let mu = mean_vector(1.5, 2.0, 21);
        let dist = 2.0 * mu.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((dist - 3.0).abs() < 1e-12);
    }

    #[test]
    fn omega_validation() {
        let mut m = GenModel::cba(10, 2, vec![vec![1.0, 0.5], vec![0.5, 1.0]], 1.0, 3, 1.0);
        assert!(m.validate().is_ok());
        m.structure = Structure::Cba { m: 2, omega: vec![vec![1.0, 0.5], vec![0.4, 1.0]] };
        assert!(m.validate().is_err());
        m.structure = Structure::Cba { m: 2, omega: vec![vec![1.0, 1.5], vec![1.5, 1.0]] };
        assert!(m.validate().is_err());
        let bad = GenModel::csbm(10, 0.1, 0.2, 1.0, 3, 1.0);
        assert!(bad.validate().is_err());
    }
}
