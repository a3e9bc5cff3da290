//! Bayes-optimal classification of an inductively added node under the
//! known generative model.
//!
//! Labels are uniform a priori, so the posterior argmax equals the argmax of
//! the class-conditional log-likelihood of the node's feature row and its
//! adjacency row given every other label. Both terms are computed exactly in
//! log space.

use std::f64::consts::PI;

use crate::error::{param, Error, Result};
use crate::graph::{GenModel, Graph, Structure};
use crate::predictor::{argmax, NodePredictor};

/// Which evidence the classifier may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum BayesMode {
    Full,
    FeaturesOnly,
    StructureOnly,
}

impl BayesMode {
    pub const ALL: [BayesMode; 3] = [BayesMode::FeaturesOnly, BayesMode::StructureOnly, BayesMode::Full];

    pub fn tag(self) -> &'static str {
        match self {
            BayesMode::Full => "full",
            BayesMode::FeaturesOnly => "features_only",
            BayesMode::StructureOnly => "structure_only",
        }
    }
}

/// Per-class log-likelihoods, up to a constant shared by all classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScore {
    pub feature_term: Vec<f64>,
    pub structure_term: Vec<f64>,
}

impl ClassScore {
    pub fn total(&self) -> Vec<f64> {
        self.feature_term
            .iter()
            .zip(&self.structure_term)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Edge likelihood model for the adjacency row of `v`.
enum EdgeModel<'a> {
    Csbm { p: f64, q: f64 },
    Cba {
        m: f64,
        omega: &'a [Vec<f64>],
        /// Per hypothesized class: sum over predecessors of `(1 + k) * omega`.
        normalizer: Vec<f64>,
    },
}

struct Scorer<'a> {
    g: &'a Graph,
    v: usize,
    model: &'a GenModel,
    edges: EdgeModel<'a>,
}

impl<'a> Scorer<'a> {
    fn new(g: &'a Graph, v: usize) -> Result<Self> {
        let model = g.gen().ok_or(Error::Unsupported)?;
        if v >= g.n() {
            return param(format!("node {v} out of range"));
        }
        if let Some(u) = (0..g.n()).find(|&u| u != v && !g.known_mask()[u]) {
            return Err(Error::Precondition(format!(
                "label of node {u} is unknown; Bayes needs every other label"
            )));
        }
        let edges = match &model.structure {
            Structure::Csbm { p, q } => EdgeModel::Csbm { p: *p, q: *q },
            Structure::Cba { m, omega } => {
                if v + 1 != g.n() {
                    return Err(Error::Precondition(format!(
                        "CBA likelihood is defined for the newest node only (got {v} of {})",
                        g.n()
                    )));
                }
                let normalizer = (0..g.num_classes())
                    .map(|c| (0..v).map(|j| (1.0 + pre_degree(g, v, j)) * omega[c][g.label(j)]).sum())
                    .collect();
                EdgeModel::Cba { m: *m as f64, omega, normalizer }
            }
        };
        Ok(Scorer { g, v, model, edges })
    }

    fn feature_term(&self, c: usize) -> f64 {
        let sigma2 = self.model.sigma * self.model.sigma;
        let mean = self.model.class_mean(c);
        let sq: f64 = self
            .g
            .row(self.v)
            .iter()
            .zip(&mean)
            .map(|(x, m)| (x - m) * (x - m))
            .sum();
        -0.5 * sq / sigma2 - 0.5 * self.g.d() as f64 * (2.0 * PI * sigma2).ln()
    }

    /// Log-probability that `A[v,u]` equals `present` if `v` had class `c`.
    fn edge_logprob(&self, c: usize, u: usize, present: bool) -> f64 {
        let yu = self.g.label(u);
        match &self.edges {
            EdgeModel::Csbm { p, q } => {
                let pe = if c == yu { *p } else { *q };
                if present {
                    pe.ln()
                } else {
                    (-pe).ln_1p()
                }
            }
            EdgeModel::Cba { m, omega, normalizer } => {
                let pu = (1.0 + pre_degree(self.g, self.v, u)) * omega[c][yu] / normalizer[c];
                // P[no draw hits u] = (1 - pu)^m
                let log_miss = m * (-pu).ln_1p();
                if present {
                    (-log_miss.exp_m1()).ln()
                } else {
                    log_miss
                }
            }
        }
    }

    fn others(&self) -> impl Iterator<Item = usize> + '_ {
        let upto = match self.edges {
            EdgeModel::Csbm { .. } => self.g.n(),
            EdgeModel::Cba { .. } => self.v,
        };
        (0..upto).filter(move |&u| u != self.v)
    }

    fn structure_term(&self, c: usize) -> f64 {
        self.others()
            .map(|u| self.edge_logprob(c, u, self.g.has_edge(self.v, u)))
            .sum()
    }

    /// Log-odds of `(v, u)` being present if `v` had class `c`.
    fn edge_log_odds(&self, c: usize, u: usize) -> f64 {
        self.edge_logprob(c, u, true) - self.edge_logprob(c, u, false)
    }

    fn scores(&self, mode: BayesMode) -> ClassScore {
        let k = self.g.num_classes();
        let feature_term = (0..k)
            .map(|c| if mode == BayesMode::StructureOnly { 0.0 } else { self.feature_term(c) })
            .collect();
        let structure_term = (0..k)
            .map(|c| if mode == BayesMode::FeaturesOnly { 0.0 } else { self.structure_term(c) })
            .collect();
        ClassScore { feature_term, structure_term }
    }
}

/// Degree of `j` before the newest node `v` attached.
fn pre_degree(g: &Graph, v: usize, j: usize) -> f64 {
    (g.degree(j) - usize::from(g.has_edge(v, j))) as f64
}

pub fn class_scores(g: &Graph, v: usize, mode: BayesMode) -> Result<ClassScore> {
    Ok(Scorer::new(g, v)?.scores(mode))
}

/// Most likely class of `v`; ties go to the smallest class index.
pub fn classify_bayes(g: &Graph, v: usize, mode: BayesMode) -> Result<usize> {
    Ok(argmax(&class_scores(g, v, mode)?.total()))
}

/// Exact change in the binary log-margin `score[y*] - score[1 - y*]` caused by
/// toggling edge `(v, u)`, where `y*` is the current Bayes decision at `v`.
/// Negative values push `v` towards the other class.
pub fn change_potential(g: &Graph, v: usize, u: usize) -> Result<f64> {
    if u == v {
        return param("change potential needs u != v");
    }
    if u >= g.n() {
        return param(format!("node {u} out of range"));
    }
    let pots = change_potentials(g, v)?;
    pots[u].ok_or_else(|| Error::Parameter(format!("node {u} does not enter the likelihood of {v}")))
}

/// Change potentials of all nodes with respect to `v` (None for `v` itself
/// and for nodes outside the likelihood).
pub fn change_potentials(g: &Graph, v: usize) -> Result<Vec<Option<f64>>> {
    if g.num_classes() != 2 {
        return param("change potentials are defined for binary models");
    }
    let scorer = Scorer::new(g, v)?;
    let y = argmax(&scorer.scores(BayesMode::Full).total());
    let mut out = vec![None; g.n()];
    for u in scorer.others() {
        // Inserting adds the log-odds to each class score, deleting subtracts
        // them; negating the same difference keeps both cases bitwise equal.
        let diff = scorer.edge_log_odds(y, u) - scorer.edge_log_odds(1 - y, u);
        out[u] = Some(if g.has_edge(v, u) { -diff } else { diff });
    }
    Ok(out)
}

/// Closed-form CSBM change potential of a heterophilic toggle.
pub fn csbm_potential(p: f64, q: f64) -> f64 {
    q.ln() - p.ln() - (-q).ln_1p() + (-p).ln_1p()
}

/// Margin-reducing toggles at `v`, strongest first: inserts before deletes at
/// equal strength, then by node index. Entries are `(u, insert, potential)`.
pub(crate) fn ordered_negative_toggles(g: &Graph, v: usize) -> Result<Vec<(usize, bool, f64)>> {
    let pots = change_potentials(g, v)?;
    let mut toggles: Vec<(usize, bool, f64)> = pots
        .iter()
        .enumerate()
        .filter_map(|(u, p)| p.filter(|&p| p < 0.0).map(|p| (u, !g.has_edge(v, u), p)))
        .collect();
    toggles.sort_by(|a, b| {
        a.2.partial_cmp(&b.2)
            .unwrap()
            .then(b.1.cmp(&a.1))
            .then(a.0.cmp(&b.0))
    });
    Ok(toggles)
}

/// Fewest edge toggles at `v` that change the full Bayes decision, applying
/// margin-reducing toggles strongest first. `None` when no flip happens
/// within `budget` toggles (or at all, for an unbounded budget).
pub fn semantic_flip_count(g: &Graph, v: usize, budget: Option<usize>) -> Result<Option<usize>> {
    let clean = classify_bayes(g, v, BayesMode::Full)?;
    let toggles = ordered_negative_toggles(g, v)?;
    let limit = budget.unwrap_or(usize::MAX);
    let mut work = g.clone();
    for (step, &(u, insert, _)) in toggles.iter().enumerate() {
        if step >= limit {
            break;
        }
        if insert {
            work.insert_edge(v, u);
        } else {
            work.remove_edge(v, u);
        }
        if classify_bayes(&work, v, BayesMode::Full)? != clean {
            return Ok(Some(step + 1));
        }
    }
    Ok(None)
}

/// Bayes classifier as a [`NodePredictor`]; probabilities are the posterior.
#[derive(Debug, Clone, Copy)]
pub struct BayesPredictor {
    pub mode: BayesMode,
}

impl NodePredictor for BayesPredictor {
    fn predict_node(&self, g: &Graph, v: usize) -> Result<Vec<f64>> {
        let s = class_scores(g, v, self.mode)?.total();
        let mx = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = s.iter().map(|x| (x - mx).exp()).collect();
        let z: f64 = e.iter().sum();
        Ok(e.into_iter().map(|x| x / z).collect())
    }

    fn classify_node(&self, g: &Graph, v: usize) -> Result<usize> {
        classify_bayes(g, v, self.mode)
    }
}

/// Reverses the binary Bayes decision.
#[derive(Debug, Clone, Copy)]
pub struct FlippedBayes;

impl NodePredictor for FlippedBayes {
    fn predict_node(&self, g: &Graph, v: usize) -> Result<Vec<f64>> {
        let mut p = vec![0.0; 2];
        p[1 - classify_bayes(g, v, BayesMode::Full)?] = 1.0;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{extend_graph, sample_graph};

    /// Two classes of three nodes each plus a fresh node 6 with the given
    /// features and neighbors.
    fn toy(p: f64, q: f64, x: f64, nbrs: &[usize]) -> Graph {
        let model = GenModel::csbm(6, p, q, 1.0, 1, 1.0);
        let labels = vec![0, 0, 0, 1, 1, 1, 0];
        let mut known = vec![true; 7];
        known[6] = false;
        let mut feats = vec![-0.5, -0.5, -0.5, 0.5, 0.5, 0.5];
        feats.push(x);
        let edges: Vec<(usize, usize)> = nbrs.iter().map(|&u| (6, u)).collect();
        Graph::new(1, 2, feats, &edges, labels, known, Some(model)).unwrap()
    }

    #[test]
    fn zero_features_tie_on_feature_term() {
        let g = toy(0.3, 0.1, 0.0, &[]);
        let s = class_scores(&g, 6, BayesMode::FeaturesOnly).unwrap();
        assert_eq!(s.feature_term[0], s.feature_term[1]);
        assert_eq!(classify_bayes(&g, 6, BayesMode::FeaturesOnly).unwrap(), 0);
    }

    #[test]
    fn isolated_node_with_p_equal_q_is_class_independent() {
        let g = toy(0.2, 0.2, 0.3, &[]);
        let s = class_scores(&g, 6, BayesMode::Full).unwrap();
        assert!((s.structure_term[0] - s.structure_term[1]).abs() < 1e-12);
        let expect = 6.0 * (0.8f64).ln();
        assert!((s.structure_term[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn one_class1_neighbor_votes_class1() {
        let g = toy(0.3, 0.1, 0.0, &[4]);
        assert_eq!(classify_bayes(&g, 6, BayesMode::StructureOnly).unwrap(), 1);
    }

    #[test]
    fn zero_features_no_edges_tie_breaks_to_zero() {
        let g = toy(0.2, 0.2, 0.0, &[]);
        assert_eq!(classify_bayes(&g, 6, BayesMode::Full).unwrap(), 0);
    }

    #[test]
    fn closed_form_potential_value() {
        // ln(q/p) + ln((1-p)/(1-q)) for p = 0.63%, q = 0.15%
        let c = csbm_potential(0.0063, 0.0015);
        assert!((c - (-1.4399)).abs() < 5e-5, "{c}");
        assert_eq!(csbm_potential(0.2, 0.2), 0.0);
    }

    #[test]
    fn potentials_match_closed_form_and_score_difference() {
        let g = toy(0.0063, 0.0015, -0.2, &[1]);
        // y* = 0: inserting a class-1 edge and deleting the class-0 edge are equally strong
        let c = csbm_potential(0.0063, 0.0015);
        assert!((change_potential(&g, 6, 4).unwrap() - c).abs() < 1e-12);
        assert!((change_potential(&g, 6, 1).unwrap() - c).abs() < 1e-12);
        assert!((change_potential(&g, 6, 2).unwrap() + c).abs() < 1e-12);

        let before = class_scores(&g, 6, BayesMode::Full).unwrap().total();
        let mut h = g.clone();
        h.insert_edge(6, 4);
        let after = class_scores(&h, 6, BayesMode::Full).unwrap().total();
        let diff = (after[0] - after[1]) - (before[0] - before[1]);
        assert!((diff - c).abs() < 1e-10);
    }

    #[test]
    fn potential_rejects_self() {
        let g = toy(0.3, 0.1, 0.0, &[]);
        assert!(change_potential(&g, 6, 6).is_err());
    }

    #[test]
    fn flip_count_is_ceil_of_margin_over_potential() {
        let g = toy(0.3, 0.05, -0.4, &[0, 1]);
        let s = class_scores(&g, 6, BayesMode::Full).unwrap().total();
        let margin = s[0] - s[1];
        let c = csbm_potential(0.3, 0.05).abs();
        let expect = (margin / c).ceil() as usize;
        assert_eq!(semantic_flip_count(&g, 6, None).unwrap(), Some(expect));
        assert_eq!(semantic_flip_count(&g, 6, Some(expect - 1)).unwrap(), None);
    }

    #[test]
    fn unknown_other_label_is_rejected() {
        let mut g = toy(0.3, 0.1, 0.0, &[]);
        let mut mask = g.known_mask().to_vec();
        mask[2] = false;
        g.set_known_mask(mask).unwrap();
        assert!(matches!(class_scores(&g, 6, BayesMode::Full), Err(Error::Precondition(_))));
    }

    #[test]
    fn cba_requires_newest_node() {
        let omega = vec![vec![3.16, 0.74], vec![0.74, 3.16]];
        let model = GenModel::cba(40, 2, omega, 1.0, 3, 1.0);
        let g = extend_graph(&sample_graph(&model, 1).unwrap(), 1, 2).unwrap();
        assert!(class_scores(&g, 40, BayesMode::Full).is_ok());
        let mut h = g.clone();
        h.set_known_mask(vec![true; 41]).unwrap();
        assert!(matches!(class_scores(&h, 10, BayesMode::Full), Err(Error::Precondition(_))));
    }

    #[test]
    fn cba_potentials_are_exact_score_differences() {
        let omega = vec![vec![3.16, 0.74], vec![0.74, 3.16]];
        let model = GenModel::cba(60, 2, omega, 1.0, 3, 1.0);
        let g = extend_graph(&sample_graph(&model, 4).unwrap(), 1, 8).unwrap();
        let v = 60;
        let y = classify_bayes(&g, v, BayesMode::Full).unwrap();
        let base = class_scores(&g, v, BayesMode::Full).unwrap().total();
        for u in [0, 5, 17, 59] {
            let mut h = g.clone();
            if !h.remove_edge(v, u) {
                h.insert_edge(v, u);
            }
            let s = class_scores(&h, v, BayesMode::Full).unwrap().total();
            let diff = (s[y] - s[1 - y]) - (base[y] - base[1 - y]);
            assert!((diff - change_potential(&g, v, u).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn multiclass_scores_use_explicit_means() {
        let mut model = GenModel::csbm(3, 0.5, 0.1, 1.0, 2, 1.0);
        model.num_classes = 3;
        model.class_means = Some(vec![vec![0.0, 0.0], vec![3.0, 0.0], vec![0.0, 3.0]]);
        let g = Graph::new(
            2,
            3,
            vec![0.0, 0.0, 3.0, 0.0, 0.0, 3.0, 0.1, 2.9],
            &[],
            vec![0, 1, 2, 0],
            vec![true, true, true, false],
            Some(model),
        )
        .unwrap();
        assert_eq!(classify_bayes(&g, 3, BayesMode::FeaturesOnly).unwrap(), 2);
        assert_eq!(class_scores(&g, 3, BayesMode::Full).unwrap().total().len(), 3);
    }
}
