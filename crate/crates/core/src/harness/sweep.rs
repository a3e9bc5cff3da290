//! Over-robustness sweep: trained classifiers against the Bayes reference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AttackKind, ClassifierKind, ExperimentConfig};
use super::{build_classifiers, cell_grid, make_plan, Built, Cell};
use crate::attacks::{BudgetSpec, PerturbationPlan};
use crate::bayes::{BayesMode, BayesPredictor};
use crate::error::{Error, Result};
use crate::metrics::stats::mean_std;
use crate::metrics::{aggregate, robustness_trace, RobustnessRecord};
use crate::rng::{derive, Purpose};

/// One node-level replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub k: f64,
    pub seed_index: usize,
    pub classifier: String,
    pub attack: String,
    pub budget: String,
    pub test_index: usize,
    pub degree: usize,
    pub t_f: Option<usize>,
    pub t_g: Option<usize>,
    pub budget_used: usize,
    pub clean_f_correct: bool,
    pub clean_agree: bool,
}

impl SweepRecord {
    pub fn record(&self) -> RobustnessRecord {
        RobustnessRecord {
            node: self.test_index,
            degree: self.degree,
            t_f: self.t_f,
            t_g: self.t_g,
            budget_used: self.budget_used,
            clean_f_correct: self.clean_f_correct,
            clean_agree: self.clean_agree,
        }
    }
}

/// Metrics of one (K, seed, classifier, attack, budget) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub k: f64,
    pub seed_index: usize,
    pub classifier: String,
    pub attack: String,
    pub budget: String,
    pub test_accuracy_pct: Option<f64>,
    pub r_fg: Option<f64>,
    pub r_f: Option<f64>,
    pub r_g: Option<f64>,
    pub r_over: Option<f64>,
    pub r_adv: Option<f64>,
    pub f_beta: Option<f64>,
    pub node_count: usize,
    pub excluded_degree0: usize,
    pub excluded_incorrect: usize,
    pub excluded_disagree: usize,
    pub censored_f: usize,
    pub censored_g: usize,
    pub error: Option<String>,
}

/// Across-seed means and spreads; ratios average only over seeds where
/// they are defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub k: f64,
    pub classifier: String,
    pub attack: String,
    pub budget: String,
    pub seeds_ok: usize,
    pub test_accuracy_pct_mean: Option<f64>,
    pub r_over_mean: Option<f64>,
    pub r_over_std: Option<f64>,
    pub r_over_stderr: Option<f64>,
    pub r_adv_mean: Option<f64>,
    pub r_adv_std: Option<f64>,
    pub f_beta_mean: Option<f64>,
    pub f_beta_std: Option<f64>,
    pub r_f_mean: Option<f64>,
    pub r_fg_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub aggregates: Vec<SweepAggregate>,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn aggregate(
        &self,
        k: f64,
        classifier: ClassifierKind,
        attack: AttackKind,
        budget: &BudgetSpec,
    ) -> Option<&SweepAggregate> {
        self.aggregates.iter().find(|a| {
            a.k == k && a.classifier == classifier.tag() && a.attack == attack.tag() && a.budget == budget.tag()
        })
    }
}

fn node_records(
    cfg: &ExperimentConfig,
    cell: &Cell,
    built: &[Built],
    reference: &BayesPredictor,
    t: usize,
) -> Result<Vec<SweepRecord>> {
    let g = cell.test_graph(t)?;
    let v = g.n() - 1;
    let y = g.label(v);
    let deg = g.degree(v);
    let dice_seed = derive(cell.seed, &[Purpose::Dice as u64, t as u64]);
    let mut out = Vec::new();
    for &attack in &cfg.attacks {
        for budget in &cfg.sweep_budgets {
            let shared: Option<PerturbationPlan> = if attack.model_agnostic() {
                Some(make_plan(attack, &g, v, budget, &built[0], 1 - y, dice_seed)?)
            } else {
                None
            };
            for b in built {
                let plan = match &shared {
                    Some(p) => p.clone(),
                    None => make_plan(attack, &g, v, budget, b, 1 - y, dice_seed)?,
                };
                let r = robustness_trace(&g, v, &plan, b.predictor.as_ref(), reference, budget.resolve(deg))?;
                out.push(SweepRecord {
                    k: cell.k,
                    seed_index: cell.seed_index,
                    classifier: b.kind.tag().into(),
                    attack: attack.tag().into(),
                    budget: budget.tag(),
                    test_index: t,
                    degree: r.degree,
                    t_f: r.t_f,
                    t_g: r.t_g,
                    budget_used: r.budget_used,
                    clean_f_correct: r.clean_f_correct,
                    clean_agree: r.clean_agree,
                });
            }
        }
    }
    Ok(out)
}

fn run_cell(cfg: &ExperimentConfig, k: f64, s: usize) -> Result<Vec<SweepRecord>> {
    let cell = Cell::sample(cfg, k, s)?;
    let built = build_classifiers(cfg, &cell.graph, cell.seed)?;
    let reference = BayesPredictor { mode: BayesMode::Full };
    let per_node: Vec<Vec<SweepRecord>> = (0..cfg.test_nodes)
        .into_par_iter()
        .map(|t| node_records(cfg, &cell, &built, &reference, t))
        .collect::<Result<_>>()?;
    Ok(per_node.into_iter().flatten().collect())
}

fn cell_row(
    cfg: &ExperimentConfig,
    (k, s): (f64, usize),
    classifier: ClassifierKind,
    attack: AttackKind,
    budget: &BudgetSpec,
    records: std::result::Result<&[SweepRecord], &str>,
) -> SweepCell {
    let mut row = SweepCell {
        k,
        seed_index: s,
        classifier: classifier.tag().into(),
        attack: attack.tag().into(),
        budget: budget.tag(),
        test_accuracy_pct: None,
        r_fg: None,
        r_f: None,
        r_g: None,
        r_over: None,
        r_adv: None,
        f_beta: None,
        node_count: 0,
        excluded_degree0: 0,
        excluded_incorrect: 0,
        excluded_disagree: 0,
        censored_f: 0,
        censored_g: 0,
        error: None,
    };
    let records = match records {
        Ok(r) => r,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let mine: Vec<RobustnessRecord> = records
        .iter()
        .filter(|r| r.classifier == row.classifier && r.attack == row.attack && r.budget == row.budget)
        .map(SweepRecord::record)
        .collect();
    if !mine.is_empty() {
        let correct = mine.iter().filter(|r| r.clean_f_correct).count();
        row.test_accuracy_pct = Some(100.0 * correct as f64 / mine.len() as f64);
    }
    match aggregate(&mine, cfg.beta) {
        Ok(m) => {
            row.r_fg = Some(m.r_fg);
            row.r_f = Some(m.r_f);
            row.r_g = Some(m.r_g);
            row.r_over = m.r_over;
            row.r_adv = m.r_adv;
            row.f_beta = m.f_beta;
            row.node_count = m.node_count;
            row.excluded_degree0 = m.excluded_degree0;
            row.excluded_incorrect = m.excluded_incorrect;
            row.excluded_disagree = m.excluded_disagree;
            row.censored_f = m.censored_f;
            row.censored_g = m.censored_g;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn stats_of(xs: impl Iterator<Item = Option<f64>>) -> (Option<f64>, Option<f64>, Option<f64>) {
    let v: Vec<f64> = xs.flatten().collect();
    match mean_std(&v) {
        Some(s) => (Some(s.mean), Some(s.std), Some(s.stderr)),
        None => (None, None, None),
    }
}

/// Replays every configured attack against every classifier on inductive
/// test nodes and scores the classifiers against the Bayes decision.
///
/// A failure inside one (K, seed) cell is recorded on that cell's rows and
/// the remaining cells still run.
pub fn over_robustness_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    if !cfg.is_synthetic() {
        return Err(Error::Config("the sweep needs a synthetic graph model".into()));
    }
    if cfg.classifiers.is_empty() || cfg.attacks.is_empty() || cfg.sweep_budgets.is_empty() {
        return Err(Error::Config("sweep needs classifiers, attacks and budgets".into()));
    }
    let grid = cell_grid(cfg);
    let outcomes: Vec<std::result::Result<Vec<SweepRecord>, String>> = grid
        .par_iter()
        .map(|&(k, s)| run_cell(cfg, k, s).map_err(|e| e.to_string()))
        .collect();

    let mut cells = Vec::new();
    for (&ks, outcome) in grid.iter().zip(&outcomes) {
        for &classifier in &cfg.classifiers {
            for &attack in &cfg.attacks {
                for budget in &cfg.sweep_budgets {
                    let recs = outcome.as_deref().map_err(String::as_str);
                    cells.push(cell_row(cfg, ks, classifier, attack, budget, recs));
                }
            }
        }
    }

    let mut aggregates = Vec::new();
    for &k in &cfg.k_values {
        for &classifier in &cfg.classifiers {
            for &attack in &cfg.attacks {
                for budget in &cfg.sweep_budgets {
                    let sel: Vec<&SweepCell> = cells
                        .iter()
                        .filter(|c| {
                            c.k == k
                                && c.classifier == classifier.tag()
                                && c.attack == attack.tag()
                                && c.budget == budget.tag()
                                && c.error.is_none()
                        })
                        .collect();
                    let (r_over_mean, r_over_std, r_over_stderr) = stats_of(sel.iter().map(|c| c.r_over));
                    let (r_adv_mean, r_adv_std, _) = stats_of(sel.iter().map(|c| c.r_adv));
                    let (f_beta_mean, f_beta_std, _) = stats_of(sel.iter().map(|c| c.f_beta));
                    aggregates.push(SweepAggregate {
                        k,
                        classifier: classifier.tag().into(),
                        attack: attack.tag().into(),
                        budget: budget.tag(),
                        seeds_ok: sel.len(),
                        test_accuracy_pct_mean: stats_of(sel.iter().map(|c| c.test_accuracy_pct)).0,
                        r_over_mean,
                        r_over_std,
                        r_over_stderr,
                        r_adv_mean,
                        r_adv_std,
                        f_beta_mean,
                        f_beta_std,
                        r_f_mean: stats_of(sel.iter().map(|c| c.r_f)).0,
                        r_fg_mean: stats_of(sel.iter().map(|c| c.r_fg)).0,
                    });
                }
            }
        }
    }
    let records = outcomes.into_iter().flat_map(|o| o.unwrap_or_default()).collect();
    Ok(SweepResult { cells, aggregates, records })
}
