//! Monte-Carlo estimates of the expected standard, adversarial and
//! over-robust 0/1-losses, with the inner maxima found by enumeration.

use serde::{Deserialize, Serialize};

use crate::bayes::{classify_bayes, BayesMode};
use crate::error::{param, Error, Result};
use crate::graph::Graph;
use crate::graphgen::extend_graph;
use crate::predictor::NodePredictor;
use crate::rng::derive;

/// Largest number of toggle sets enumerated per sample.
pub const MAX_TOGGLE_SETS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleLoss {
    pub std: bool,
    pub adv: bool,
    pub over: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedLosses {
    pub std_loss: f64,
    pub adv_loss: f64,
    pub over_loss: f64,
    pub robust_loss: f64,
    pub per_sample: Vec<SampleLoss>,
}

fn binom(n: usize, k: usize) -> usize {
    let mut r: usize = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

/// Calls `visit` with every subset of `0..n` of size at most `k`, in
/// lexicographic order of index vectors, starting with the empty set.
fn for_each_subset(n: usize, k: usize, visit: &mut dyn FnMut(&[usize]) -> Result<()>) -> Result<()> {
    fn rec(
        start: usize,
        n: usize,
        k: usize,
        cur: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]) -> Result<()>,
    ) -> Result<()> {
        visit(cur)?;
        if cur.len() == k {
            return Ok(());
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, visit)?;
            cur.pop();
        }
        Ok(())
    }
    rec(0, n, k, &mut Vec::new(), visit)
}

fn flip(g: &mut Graph, v: usize, u: usize) {
    if !g.remove_edge(v, u) {
        g.insert_edge(v, u);
    }
}

/// Expected losses of `f` against the Bayes reference on nodes sampled
/// conditionally on `g_train`.
///
/// Each sample adds one node `v`; every set of at most `toggle_budget`
/// toggles incident to `v` (the empty set included) is a candidate
/// perturbation. A sample counts as adversarial if some set keeps the
/// reference label while `f` moves off it (and `f` was on it), and as
/// over-robust if some set keeps `f` while the reference moves off `f`'s
/// clean label (and had agreed with it).
pub fn expected_losses_bruteforce(
    g_train: &Graph,
    f: &dyn NodePredictor,
    samples: usize,
    toggle_budget: usize,
    lambda1: f64,
    lambda2: f64,
    seed: u64,
) -> Result<ExpectedLosses> {
    g_train.gen().ok_or(Error::Unsupported)?;
    if samples == 0 {
        return param("need at least one sample");
    }
    if lambda1 < 0.0 || lambda2 < 0.0 {
        return param("loss weights must be nonnegative");
    }
    let n = g_train.n();
    let sets: usize = (0..=toggle_budget).map(|k| binom(n, k)).fold(0usize, |a, b| a.saturating_add(b));
    if sets > MAX_TOGGLE_SETS {
        return Err(Error::Size(format!("{sets} toggle sets for n={n}, budget {toggle_budget}")));
    }
    let mut per_sample = Vec::with_capacity(samples);
    for s in 0..samples {
        let mut g = extend_graph(g_train, 1, derive(seed, &[s as u64]))?;
        let v = n;
        let f0 = f.classify_node(&g, v)?;
        let g0 = classify_bayes(&g, v, BayesMode::Full)?;
        let disagree = f0 != g0;
        let mut adv = false;
        let mut over = false;
        for_each_subset(n, toggle_budget, &mut |set| {
            if adv && over {
                return Ok(());
            }
            set.iter().for_each(|&u| flip(&mut g, v, u));
            let fs = f.classify_node(&g, v)?;
            let gs = classify_bayes(&g, v, BayesMode::Full)?;
            set.iter().rev().for_each(|&u| flip(&mut g, v, u));
            if gs == g0 && fs != g0 && !disagree {
                adv = true;
            }
            if fs == f0 && gs != f0 && !disagree {
                over = true;
            }
            Ok(())
        })?;
        per_sample.push(SampleLoss { std: f0 != g.label(v), adv, over });
    }
    let frac = |p: fn(&SampleLoss) -> bool| per_sample.iter().filter(|s| p(s)).count() as f64 / samples as f64;
    let std_loss = frac(|s| s.std);
    let adv_loss = frac(|s| s.adv);
    let over_loss = frac(|s| s.over);
    Ok(ExpectedLosses {
        std_loss,
        adv_loss,
        over_loss,
        robust_loss: lambda1 * adv_loss + lambda2 * over_loss,
        per_sample,
    })
}
