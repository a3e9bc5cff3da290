//! Conventional robustness against per-class attacks, grouped by degree.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GraphSpec};
use super::{build_classifiers, graph_seed, Built, Cell};
use crate::attacks::{plan_per_class_l2, BudgetSpec};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::graphgen::ingest_real_graph;
use crate::metrics::robustness_trace;
use crate::predictor::LabelOracle;

/// Steps until the classifier changes its clean prediction under the
/// per-class attack, minimized and maximized over target classes.
/// `None` means no change within the cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileNode {
    pub k: f64,
    pub seed_index: usize,
    pub node: usize,
    pub degree: usize,
    pub clean_correct: bool,
    pub min_steps: Option<usize>,
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeRow {
    pub k: f64,
    pub degree: usize,
    /// Correctly classified nodes of this degree.
    pub nodes: usize,
    pub min_censored: usize,
    pub min_mean: Option<f64>,
    pub min_q1: Option<f64>,
    pub min_median: Option<f64>,
    pub min_q3: Option<f64>,
    pub max_censored: usize,
    pub max_mean: Option<f64>,
    pub max_q1: Option<f64>,
    pub max_median: Option<f64>,
    pub max_q3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeProfile {
    pub classifier: String,
    pub cap: usize,
    pub rows: Vec<DegreeRow>,
    pub nodes: Vec<ProfileNode>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn node_profile(g: &Graph, v: usize, model: &Built, cap: usize) -> Result<(bool, Option<usize>, Option<usize>)> {
    let clean = model.predictor.classify_node(g, v)?;
    let correct = clean == g.label(v);
    let budget = BudgetSpec::Unbounded { cap };
    let mut steps = Vec::new();
    for c in (0..g.num_classes()).filter(|&c| c != g.label(v)) {
        let plan = match plan_per_class_l2(g, v, c, &budget, model.projection.as_deref()) {
            Ok(p) => p,
            Err(Error::EmptyCandidates(_)) => continue,
            Err(e) => return Err(e),
        };
        let r = robustness_trace(g, v, &plan, model.predictor.as_ref(), &LabelOracle, cap)?;
        steps.push(r.t_f.map(|t| t - 1));
    }
    let min = if steps.iter().any(Option::is_some) { steps.iter().flatten().min().copied() } else { None };
    let max = if steps.iter().any(Option::is_none) { None } else { steps.iter().flatten().max().copied() };
    Ok((correct, min, max))
}

fn summarize(k: f64, nodes: &[ProfileNode]) -> Vec<DegreeRow> {
    let mut by_degree: BTreeMap<usize, Vec<&ProfileNode>> = BTreeMap::new();
    for n in nodes.iter().filter(|n| n.k == k && n.clean_correct) {
        by_degree.entry(n.degree).or_default().push(n);
    }
    let stats = |xs: Vec<Option<usize>>| {
        let censored = xs.iter().filter(|x| x.is_none()).count();
        let mut v: Vec<f64> = xs.into_iter().flatten().map(|x| x as f64).collect();
        v.sort_by(f64::total_cmp);
        let mean = (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        (censored, mean, quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75))
    };
    by_degree
        .into_iter()
        .map(|(degree, ns)| {
            let (min_censored, min_mean, min_q1, min_median, min_q3) = stats(ns.iter().map(|n| n.min_steps).collect());
            let (max_censored, max_mean, max_q1, max_median, max_q3) = stats(ns.iter().map(|n| n.max_steps).collect());
            DegreeRow {
                k,
                degree,
                nodes: ns.len(),
                min_censored,
                min_mean,
                min_q1,
                min_median,
                min_q3,
                max_censored,
                max_mean,
                max_q1,
                max_median,
                max_q3,
            }
        })
        .collect()
}

/// Attacks each test node towards every other class with the per-class
/// nearest-neighbor insertion plan (in the first-layer space of the first
/// configured classifier) and records how many insertions it withstands.
///
/// Synthetic graphs use inductive test nodes; real graphs use the nodes with
/// unknown labels, up to `test_nodes` of them.
pub fn degree_robustness_profile(cfg: &ExperimentConfig) -> Result<DegreeProfile> {
    cfg.validate()?;
    let Some(&kind) = cfg.classifiers.first() else {
        return Err(Error::Config("profile needs a classifier".into()));
    };
    let cap = cfg.profile_cap;
    let one = ExperimentConfig { classifiers: vec![kind], ..cfg.clone() };
    let mut nodes = Vec::new();
    let ks: Vec<f64> = match &cfg.graph {
        GraphSpec::Synthetic { .. } => {
            let grid: Vec<(f64, usize)> = super::cell_grid(cfg);
            let per_cell: Vec<Vec<ProfileNode>> = grid
                .into_par_iter()
                .map(|(k, s)| -> Result<Vec<ProfileNode>> {
                    let cell = Cell::sample(cfg, k, s)?;
                    let built = build_classifiers(&one, &cell.graph, cell.seed)?.remove(0);
                    (0..cfg.test_nodes)
                        .into_par_iter()
                        .map(|t| {
                            let g = cell.test_graph(t)?;
                            let v = g.n() - 1;
                            let (clean_correct, min_steps, max_steps) = node_profile(&g, v, &built, cap)?;
                            Ok(ProfileNode {
                                k,
                                seed_index: s,
                                node: t,
                                degree: g.degree(v),
                                clean_correct,
                                min_steps,
                                max_steps,
                            })
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            nodes.extend(per_cell.into_iter().flatten());
            cfg.k_values.clone()
        }
        GraphSpec::Real { edges, features, labels, mask } => {
            let g = ingest_real_graph(edges, features, labels, mask.as_deref())?;
            let targets: Vec<usize> = (0..g.n()).filter(|&i| !g.known_mask()[i]).take(cfg.test_nodes).collect();
            if targets.is_empty() {
                return Err(Error::EmptySample("real graph has no unlabeled nodes to attack".into()));
            }
            for s in 0..cfg.seeds {
                let built = build_classifiers(&one, &g, graph_seed(cfg.base_seed, 0.0, s))?.remove(0);
                let per_node: Vec<ProfileNode> = targets
                    .par_iter()
                    .map(|&v| {
                        let (clean_correct, min_steps, max_steps) = node_profile(&g, v, &built, cap)?;
                        Ok(ProfileNode { k: 0.0, seed_index: s, node: v, degree: g.degree(v), clean_correct, min_steps, max_steps })
                    })
                    .collect::<Result<_>>()?;
                nodes.extend(per_node);
            }
            vec![0.0]
        }
    };
    let rows = ks.iter().flat_map(|&k| summarize(k, &nodes)).collect();
    Ok(DegreeProfile { classifier: kind.tag().into(), cap, rows, nodes })
}
