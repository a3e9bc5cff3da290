//! Global graph statistics: degree assortativity and homophily measures.

use std::collections::BTreeMap;

use crate::graph::Graph;

/// Pearson correlation of the degrees at both ends of an edge, computed from
/// the symmetric degree mixing matrix. `None` without edges or when every
/// edge end has the same degree.
pub fn degree_assortativity(g: &Graph) -> Option<f64> {
    let deg = g.degrees();
    let mut mixing: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, j) in g.edges() {
        *mixing.entry((deg[i], deg[j])).or_default() += 1;
        *mixing.entry((deg[j], deg[i])).or_default() += 1;
    }
    let total: usize = mixing.values().sum();
    if total == 0 {
        return None;
    }
    let total = total as f64;
    let mut marginal: BTreeMap<usize, f64> = BTreeMap::new();
    let mut joint = 0.0;
    for (&(a, b), &c) in &mixing {
        let e = c as f64 / total;
        *marginal.entry(a).or_default() += e;
        joint += (a * b) as f64 * e;
    }
    let mean: f64 = marginal.iter().map(|(&a, &p)| a as f64 * p).sum();
    let second: f64 = marginal.iter().map(|(&a, &p)| (a * a) as f64 * p).sum();
    let var = second - mean * mean;
    if var <= 1e-15 * second.max(1.0) {
        return None;
    }
    Some((joint - mean * mean) / var)
}

/// Relative change of degree assortativity, `|r' - r| / |r|`.
pub fn dac(g: &Graph, perturbed: &Graph) -> Option<f64> {
    let r = degree_assortativity(g)?;
    let r2 = degree_assortativity(perturbed)?;
    if r == 0.0 {
        return None;
    }
    Some((r2 - r).abs() / r.abs())
}

/// Cosine similarity between `u`'s features and the degree-normalized sum
/// of its neighbors' features. `None` for isolated nodes or zero vectors.
pub fn node_centric_homophily(g: &Graph, u: usize) -> Option<f64> {
    let du = g.degree(u);
    if du == 0 {
        return None;
    }
    let mut r = vec![0.0; g.d()];
    for &j in g.neighbors(u) {
        let w = 1.0 / ((g.degree(j) * du) as f64).sqrt();
        for (a, x) in r.iter_mut().zip(g.row(j)) {
            *a += w * x;
        }
    }
    let x = g.row(u);
    let nr = r.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nr == 0.0 || nx == 0.0 {
        return None;
    }
    Some(r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / (nr * nx))
}

/// Fraction of edges joining nodes of the same class.
pub fn homophilic_edge_fraction(g: &Graph) -> Option<f64> {
    let m = g.num_edges();
    if m == 0 {
        return None;
    }
    let same = g.edges().filter(|&(i, j)| g.label(i) == g.label(j)).count();
    Some(same as f64 / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::new(1, 1, vec![1.0; n], edges, vec![0; n], vec![true; n], None).unwrap()
    }

    #[test]
    fn regular_graph_is_undefined() {
        let cycle = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        assert_eq!(degree_assortativity(&cycle), None);
        assert_eq!(degree_assortativity(&graph(3, &[])), None);
    }

    #[test]
    fn star_is_perfectly_disassortative() {
        let star = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert!((degree_assortativity(&star).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_neighbors_give_unit_homophily() {
        let g = graph(3, &[(0, 1), (0, 2), (1, 2)]);
        assert!((node_centric_homophily(&g, 0).unwrap() - 1.0).abs() < 1e-12);
        let iso = graph(2, &[]);
        assert_eq!(node_centric_homophily(&iso, 0), None);
    }

    #[test]
    fn orthogonal_aggregate_gives_zero() {
        let g = Graph::new(2, 1, vec![1.0, 0.0, 0.0, 1.0], &[(0, 1)], vec![0, 0], vec![true; 2], None).unwrap();
        assert_eq!(node_centric_homophily(&g, 0), Some(0.0));
    }
}
