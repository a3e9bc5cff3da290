//! Robustness traces and the semantics-aware metric stack.

pub mod losses;
pub mod stats;
pub mod structure;

use serde::{Deserialize, Serialize};

pub use losses::{expected_losses_bruteforce, ExpectedLosses, SampleLoss};
pub use structure::{dac, degree_assortativity, homophilic_edge_fraction, node_centric_homophily};

use crate::attacks::PerturbationPlan;
use crate::error::{param, Error, Result};
use crate::graph::Graph;
use crate::predictor::NodePredictor;

/// Replay outcome for one target node. Flip steps are 1-based; `None` means
/// no flip within `budget_used` steps (censored).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobustnessRecord {
    pub node: usize,
    pub degree: usize,
    pub t_f: Option<usize>,
    pub t_g: Option<usize>,
    pub budget_used: usize,
    pub clean_f_correct: bool,
    pub clean_agree: bool,
}

impl RobustnessRecord {
    fn censor(&self, t: Option<usize>) -> usize {
        t.unwrap_or(self.budget_used + 1) - 1
    }

    /// Steps `f` withstands before either `f` or the reference changes.
    pub fn robustness(&self) -> usize {
        self.censor(self.t_f).min(self.censor(self.t_g))
    }

    /// Steps `f` withstands, ignoring the reference.
    pub fn conventional(&self) -> usize {
        self.censor(self.t_f)
    }

    /// Steps before the reference changes.
    pub fn reference(&self) -> usize {
        self.censor(self.t_g)
    }
}

/// Replays `plan` on `g` step by step (up to `budget` steps) and records the
/// first step at which `f` and the reference `g_ref` change their clean
/// prediction at `v`.
pub fn robustness_trace(
    g: &Graph,
    v: usize,
    plan: &PerturbationPlan,
    f: &dyn NodePredictor,
    g_ref: &dyn NodePredictor,
    budget: usize,
) -> Result<RobustnessRecord> {
    if plan.target != v {
        return param(format!("plan targets {} but trace is for {v}", plan.target));
    }
    let clean_f = f.classify_node(g, v)?;
    let clean_g = g_ref.classify_node(g, v)?;
    let steps = budget.min(plan.len());
    let mut work = g.clone();
    let (mut t_f, mut t_g) = (None, None);
    for step in 0..steps {
        plan.apply_step(&mut work, step)?;
        if t_f.is_none() && f.classify_node(&work, v)? != clean_f {
            t_f = Some(step + 1);
        }
        if t_g.is_none() && g_ref.classify_node(&work, v)? != clean_g {
            t_g = Some(step + 1);
        }
        if t_f.is_some() && t_g.is_some() {
            break;
        }
    }
    Ok(RobustnessRecord {
        node: v,
        degree: g.degree(v),
        t_f,
        t_g,
        budget_used: steps,
        clean_f_correct: clean_f == g.label(v),
        clean_agree: clean_f == clean_g,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub r_fg: f64,
    pub r_f: f64,
    pub r_g: f64,
    /// `1 - R(f,g) / R(f)`; `None` when `R(f) = 0`.
    pub r_over: Option<f64>,
    /// `R(f,g) / R(g)`; `None` when `R(g) = 0`.
    pub r_adv: Option<f64>,
    pub f_beta: Option<f64>,
    pub beta: f64,
    pub node_count: usize,
    pub excluded_degree0: usize,
    pub excluded_incorrect: usize,
    pub excluded_disagree: usize,
    pub censored_f: usize,
    pub censored_g: usize,
}

/// Weighted harmonic mean of `1 - r_over` and `r_adv`, with `r_adv` counting
/// `beta` times as much.
pub fn f_beta(r_over: f64, r_adv: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * (1.0 - r_over) + r_adv;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * (1.0 - r_over) * r_adv / denom
    }
}

/// Degree-normalized averages over nodes with degree >= 1 whose clean
/// prediction is correct and agrees with the reference.
pub fn aggregate(records: &[RobustnessRecord], beta: f64) -> Result<MetricsSummary> {
    if !(beta > 0.0 && beta.is_finite()) {
        return param("beta must be positive");
    }
    let (mut excluded_degree0, mut excluded_incorrect, mut excluded_disagree) = (0, 0, 0);
    let mut kept = Vec::new();
    for r in records {
        if r.degree == 0 {
            excluded_degree0 += 1;
        } else if !r.clean_f_correct {
            excluded_incorrect += 1;
        } else if !r.clean_agree {
            excluded_disagree += 1;
        } else {
            kept.push(r);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptySample(format!("all {} records filtered out", records.len())));
    }
    let n = kept.len() as f64;
    let mean = |f: &dyn Fn(&RobustnessRecord) -> usize| -> f64 {
        kept.iter().map(|r| f(r) as f64 / r.degree as f64).sum::<f64>() / n
    };
    let r_fg = mean(&|r| r.robustness());
    let r_f = mean(&|r| r.conventional());
    let r_g = mean(&|r| r.reference());
    let r_over = (r_f > 0.0).then(|| 1.0 - r_fg / r_f);
    let r_adv = (r_g > 0.0).then(|| r_fg / r_g);
    let fb = match (r_over, r_adv) {
        (Some(o), Some(a)) => Some(f_beta(o, a, beta)),
        _ => None,
    };
    Ok(MetricsSummary {
        r_fg,
        r_f,
        r_g,
        r_over,
        r_adv,
        f_beta: fb,
        beta,
        node_count: kept.len(),
        excluded_degree0,
        excluded_incorrect,
        excluded_disagree,
        censored_f: kept.iter().filter(|r| r.t_f.is_none()).count(),
        censored_g: kept.iter().filter(|r| r.t_g.is_none()).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(degree: usize, t_f: Option<usize>, t_g: Option<usize>, budget: usize) -> RobustnessRecord {
        RobustnessRecord {
            node: 0,
            degree,
            t_f,
            t_g,
            budget_used: budget,
            clean_f_correct: true,
            clean_agree: true,
        }
    }

    #[test]
    fn definitional_arithmetic() {
        let r = rec(3, Some(5), Some(3), 6);
        assert_eq!((r.robustness(), r.conventional(), r.reference()), (2, 4, 2));
        let never = rec(3, Some(4), None, 6);
        assert_eq!(never.robustness(), never.conventional());
    }

    #[test]
    fn single_node_summary() {
        let s = aggregate(&[rec(2, Some(2), None, 4)], 1.0).unwrap();
        assert_eq!(s.r_fg, 0.5);
        assert_eq!(s.r_over, Some(0.0));
        assert_eq!(s.r_adv, Some(0.25));
        assert_eq!(s.censored_g, 1);
    }

    #[test]
    fn f_beta_extremes() {
        assert_eq!(f_beta(0.0, 1.0, 1.0), 1.0);
        assert_eq!(f_beta(1.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn undefined_ratios_are_none() {
        let s = aggregate(&[rec(1, Some(1), Some(1), 3)], 1.0).unwrap();
        assert_eq!(s.r_f, 0.0);
        assert_eq!(s.r_over, None);
        assert_eq!(s.f_beta, None);
    }

    #[test]
    fn filters_are_counted() {
        let mut a = rec(0, None, None, 0);
        let mut b = rec(2, None, None, 2);
        b.clean_f_correct = false;
        let mut c = rec(2, None, None, 2);
        c.clean_agree = false;
        assert!(matches!(aggregate(&[a.clone(), b.clone(), c.clone()], 1.0), Err(Error::EmptySample(_))));
        a.degree = 1;
        a.budget_used = 1;
        let s = aggregate(&[a, b, c], 1.0).unwrap();
        assert_eq!((s.node_count, s.excluded_incorrect, s.excluded_disagree), (1, 1, 1));
    }
}
