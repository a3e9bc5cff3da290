//! Comparison of a result bundle against the published reference values.

use serde::{Deserialize, Serialize};

use super::config::{AttackKind, ClassifierKind};
use super::ResultBundle;
use crate::attacks::BudgetSpec;
use crate::bayes::BayesMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: Option<f64>,
    pub expected: String,
    pub pass: bool,
}

fn within(name: &str, value: Option<f64>, target: f64, tol: f64) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        value,
        expected: format!("{target} +- {tol}"),
        pass: value.is_some_and(|v| (v - target).abs() <= tol),
    }
}

fn at_least(name: &str, value: Option<f64>, bound: f64) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        value,
        expected: format!(">= {bound}"),
        pass: value.is_some_and(|v| v >= bound),
    }
}

/// Checks every reference cell the bundle contains; cells the bundle did not
/// compute are skipped.
pub fn check_bundle(bundle: &ResultBundle) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    if let Some(t) = &bundle.bayes {
        for (k, mode, target, tol) in [
            (0.1, BayesMode::Full, 89.7, 2.0),
            (5.0, BayesMode::Full, 99.8, 0.5),
            (5.0, BayesMode::FeaturesOnly, 99.3, 0.7),
        ] {
            if let Some(r) = t.get(k, mode) {
                out.push(within(&format!("bayes {} K={k}", mode.tag()), Some(r.accuracy_pct_mean), target, tol));
            }
        }
    }
    if let Some(t) = &bundle.violations {
        let weak = AttackKind::L2Weak;
        for (budget, k, target, tol) in
            [(BudgetSpec::Fixed { delta: 2 }, 1.0, 25.7, 2.5), (BudgetSpec::Fixed { delta: 1 }, 2.0, 4.4, 1.5)]
        {
            if let Some(r) = t.get(weak, &budget, k) {
                let name = format!("violation {} {} K={k}", weak.tag(), budget.tag());
                out.push(within(&name, Some(r.violated_pct_mean), target, tol));
            }
        }
        let budget = BudgetSpec::DegreePlus { k: 2 };
        if let Some(r) = t.get(weak, &budget, 0.1) {
            let name = format!("violation {} {} K=0.1", weak.tag(), budget.tag());
            out.push(at_least(&name, Some(r.violated_pct_mean), 99.0));
        }
    }
    if let Some(s) = &bundle.sweep {
        let (k, attack, budget) = (0.5, AttackKind::L2Weak, BudgetSpec::Degree);
        let gcn = s.aggregate(k, ClassifierKind::Gcn, attack, &budget);
        let lp = s.aggregate(k, ClassifierKind::GcnLp, attack, &budget);
        if let Some(a) = gcn {
            out.push(within("R_over GCN K=0.5 Bdeg", a.r_over_mean.map(|x| 100.0 * x), 30.3, 6.0));
        }
        if let Some(a) = lp {
            out.push(within("R_over GCN+LP K=0.5 Bdeg", a.r_over_mean.map(|x| 100.0 * x), 20.9, 6.0));
        }
        if gcn.is_some() && lp.is_some() {
            let per_seed = |c: ClassifierKind| -> Vec<Option<f64>> {
                let mut v: Vec<(usize, Option<f64>)> = s
                    .cells
                    .iter()
                    .filter(|x| x.k == k && x.classifier == c.tag() && x.attack == attack.tag() && x.budget == budget.tag())
                    .map(|x| (x.seed_index, x.r_over))
                    .collect();
                v.sort_by_key(|x| x.0);
                v.into_iter().map(|x| x.1).collect()
            };
            let (a, b) = (per_seed(ClassifierKind::Gcn), per_seed(ClassifierKind::GcnLp));
            let held = a.len() == b.len()
                && !a.is_empty()
                && a.iter().zip(&b).all(|(x, y)| matches!((x, y), (Some(x), Some(y)) if y < x));
            let count = a.iter().zip(&b).filter(|(x, y)| matches!((x, y), (Some(x), Some(y)) if y < x)).count();
            out.push(CheckOutcome {
                name: "R_over GCN+LP < GCN in every seed".into(),
                value: Some(count as f64),
                expected: format!("{} of {}", a.len(), a.len()),
                pass: held,
            });
        }
    }
    out
}
