//! Bayes accuracy and semantic-violation tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AttackKind, ExperimentConfig};
use super::{build_classifiers, cell_grid, make_plan, Built, Cell, ClassifierKind};
use crate::attacks::BudgetSpec;
use crate::bayes::{classify_bayes, BayesMode, BayesPredictor};
use crate::error::{Error, Result};
use crate::metrics::robustness_trace;
use crate::metrics::stats::mean_std;
use crate::predictor::LabelOracle;
use crate::rng::{derive, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesRow {
    pub k: f64,
    pub mode: String,
    pub accuracy_pct_mean: f64,
    pub accuracy_pct_std: f64,
    pub accuracy_pct_stderr: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesSeedRow {
    pub k: f64,
    pub seed_index: usize,
    pub mode: String,
    pub accuracy_pct: f64,
    pub test_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesTable {
    pub rows: Vec<BayesRow>,
    pub per_seed: Vec<BayesSeedRow>,
}

impl BayesTable {
    pub fn get(&self, k: f64, mode: BayesMode) -> Option<&BayesRow> {
        self.rows.iter().find(|r| r.k == k && r.mode == mode.tag())
    }
}

fn require_synthetic(cfg: &ExperimentConfig) -> Result<()> {
    if !cfg.is_synthetic() {
        return Err(Error::Config("this table needs a synthetic graph model".into()));
    }
    Ok(())
}

/// Accuracy of the Bayes classifier with each kind of evidence on inductively
/// sampled test nodes, per K (mean and spread over seeds).
pub fn bayes_accuracy_table(cfg: &ExperimentConfig) -> Result<BayesTable> {
    cfg.validate()?;
    require_synthetic(cfg)?;
    let per_cell: Vec<Vec<BayesSeedRow>> = cell_grid(cfg)
        .into_par_iter()
        .map(|(k, s)| -> Result<Vec<BayesSeedRow>> {
            let cell = Cell::sample(cfg, k, s)?;
            let hits: Vec<[bool; 3]> = (0..cfg.test_nodes)
                .into_par_iter()
                .map(|t| -> Result<[bool; 3]> {
                    let g = cell.test_graph(t)?;
                    let v = g.n() - 1;
                    let mut out = [false; 3];
                    for (i, mode) in BayesMode::ALL.iter().enumerate() {
                        out[i] = classify_bayes(&g, v, *mode)? == g.label(v);
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?;
            Ok(BayesMode::ALL
                .iter()
                .enumerate()
                .map(|(i, mode)| BayesSeedRow {
                    k,
                    seed_index: s,
                    mode: mode.tag().into(),
                    accuracy_pct: 100.0 * hits.iter().filter(|h| h[i]).count() as f64 / hits.len() as f64,
                    test_nodes: hits.len(),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let per_seed: Vec<BayesSeedRow> = per_cell.into_iter().flatten().collect();
    let mut rows = Vec::new();
    for &k in &cfg.k_values {
        for mode in BayesMode::ALL {
            let xs: Vec<f64> = per_seed
                .iter()
                .filter(|r| r.k == k && r.mode == mode.tag())
                .map(|r| r.accuracy_pct)
                .collect();
            let st = mean_std(&xs).expect("seeds > 0");
            rows.push(BayesRow {
                k,
                mode: mode.tag().into(),
                accuracy_pct_mean: st.mean,
                accuracy_pct_std: st.std,
                accuracy_pct_stderr: st.stderr,
                seeds: st.n,
            });
        }
    }
    Ok(BayesTable { rows, per_seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRow {
    pub attack: String,
    pub budget: String,
    pub k: f64,
    pub violated_pct_mean: f64,
    pub violated_pct_std: f64,
    pub violated_pct_stderr: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationSeedRow {
    pub attack: String,
    pub budget: String,
    pub k: f64,
    pub seed_index: usize,
    pub counted_nodes: usize,
    pub flipped: usize,
    pub violated_pct: f64,
}

/// Per test node: the step at which the Bayes decision first changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationNode {
    pub attack: String,
    pub k: f64,
    pub seed_index: usize,
    pub test_index: usize,
    pub degree: usize,
    pub bayes_correct: bool,
    pub model_correct: bool,
    pub plan_len: usize,
    pub t_g: Option<usize>,
}

impl ViolationNode {
    /// Counted nodes: nonisolated, and both the attacked model and the
    /// Bayes classifier are right on the clean graph.
    pub fn eligible(&self) -> bool {
        self.degree > 0 && self.bayes_correct && self.model_correct
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationTable {
    pub model: String,
    pub rows: Vec<ViolationRow>,
    pub per_seed: Vec<ViolationSeedRow>,
    pub nodes: Vec<ViolationNode>,
}

impl ViolationTable {
    pub fn get(&self, attack: AttackKind, budget: &BudgetSpec, k: f64) -> Option<&ViolationRow> {
        self.rows
            .iter()
            .find(|r| r.attack == attack.tag() && r.budget == budget.tag() && r.k == k)
    }
}

fn violation_model(cfg: &ExperimentConfig, cell: &Cell) -> Result<Built> {
    if cfg.violation_model == ClassifierKind::Bayes {
        return Ok(Built {
            kind: ClassifierKind::Bayes,
            predictor: Box::new(BayesPredictor { mode: BayesMode::Full }),
            projection: None,
        });
    }
    let one = ExperimentConfig { classifiers: vec![cfg.violation_model], ..cfg.clone() };
    Ok(build_classifiers(&one, &cell.graph, cell.seed)?.remove(0))
}

/// Percentage of test nodes whose Bayes decision changes within each budget
/// when the attack's plan against `cfg.violation_model` is applied.
///
/// Only nonisolated nodes that both the attacked model and the Bayes
/// classifier get right on the clean graph are counted, as in the
/// robustness metrics.
pub fn semantic_violation_table(cfg: &ExperimentConfig) -> Result<ViolationTable> {
    cfg.validate()?;
    require_synthetic(cfg)?;
    let per_cell: Vec<Vec<ViolationNode>> = cell_grid(cfg)
        .into_par_iter()
        .map(|(k, s)| -> Result<Vec<ViolationNode>> {
            let cell = Cell::sample(cfg, k, s)?;
            let model = violation_model(cfg, &cell)?;
            let bayes = BayesPredictor { mode: BayesMode::Full };
            let per_node: Vec<Vec<ViolationNode>> = (0..cfg.test_nodes)
                .into_par_iter()
                .map(|t| -> Result<Vec<ViolationNode>> {
                    let g = cell.test_graph(t)?;
                    let v = g.n() - 1;
                    let deg = g.degree(v);
                    let y = g.label(v);
                    let bayes_correct = classify_bayes(&g, v, BayesMode::Full)? == y;
                    let model_correct = model.predictor.classify_node(&g, v)? == y;
                    let steps = cfg.violation_budgets.iter().map(|b| b.resolve(deg)).max().unwrap_or(0);
                    let dice_seed = derive(cell.seed, &[Purpose::Dice as u64, t as u64]);
                    let mut out = Vec::new();
                    for &attack in &cfg.attacks {
                        let (plan_len, t_g) = if steps == 0 {
                            (0, None)
                        } else {
                            let budget = BudgetSpec::Fixed { delta: steps };
                            let plan = make_plan(attack, &g, v, &budget, &model, 1 - y, dice_seed)?;
                            let rec = robustness_trace(&g, v, &plan, &LabelOracle, &bayes, steps)?;
                            (plan.len(), rec.t_g)
                        };
                        out.push(ViolationNode {
                            attack: attack.tag().into(),
                            k,
                            seed_index: s,
                            test_index: t,
                            degree: deg,
                            bayes_correct,
                            model_correct,
                            plan_len,
                            t_g,
                        });
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?;
            Ok(per_node.into_iter().flatten().collect())
        })
        .collect::<Result<_>>()?;
    let nodes: Vec<ViolationNode> = per_cell.into_iter().flatten().collect();

    let mut per_seed = Vec::new();
    let mut rows = Vec::new();
    for &attack in &cfg.attacks {
        for budget in &cfg.violation_budgets {
            for &k in &cfg.k_values {
                let mut pcts = Vec::new();
                for s in 0..cfg.seeds {
                    let sel = nodes
                        .iter()
                        .filter(|n| n.attack == attack.tag() && n.k == k && n.seed_index == s && n.eligible());
                    let (mut total, mut flipped) = (0, 0);
                    for n in sel {
                        total += 1;
                        if n.t_g.is_some_and(|t| t <= budget.resolve(n.degree)) {
                            flipped += 1;
                        }
                    }
                    let pct = if total > 0 { 100.0 * flipped as f64 / total as f64 } else { 0.0 };
                    pcts.push(pct);
                    per_seed.push(ViolationSeedRow {
                        attack: attack.tag().into(),
                        budget: budget.tag(),
                        k,
                        seed_index: s,
                        counted_nodes: total,
                        flipped,
                        violated_pct: pct,
                    });
                }
                let st = mean_std(&pcts).expect("seeds > 0");
                rows.push(ViolationRow {
                    attack: attack.tag().into(),
                    budget: budget.tag(),
                    k,
                    violated_pct_mean: st.mean,
                    violated_pct_std: st.std,
                    violated_pct_stderr: st.stderr,
                    seeds: st.n,
                });
            }
        }
    }
    Ok(ViolationTable { model: cfg.violation_model.tag().into(), rows, per_seed, nodes })
}
