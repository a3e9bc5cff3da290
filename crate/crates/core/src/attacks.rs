//! Perturbation plans against a single target node.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::change_potentials;
use crate::error::{param, Error, Result};
use crate::graph::Graph;
use crate::predictor::NodePredictor;
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Insert,
    Delete,
}

/// Toggle of edge `(target, u)`; the target is implied by the plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeOp {
    pub kind: OpKind,
    pub u: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationPlan {
    pub target: usize,
    pub attack_tag: String,
    pub ops: Vec<EdgeOp>,
}

impl PerturbationPlan {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Applies `ops[step]` to `g` in place.
    pub fn apply_step(&self, g: &mut Graph, step: usize) -> Result<()> {
        let op = self.ops[step];
        let v = self.target;
        if op.u == v || op.u >= g.n() || v >= g.n() {
            return Err(Error::Replay { step, msg: format!("invalid endpoint pair ({v},{})", op.u) });
        }
        let ok = match op.kind {
            OpKind::Insert => g.insert_edge(v, op.u),
            OpKind::Delete => g.remove_edge(v, op.u),
        };
        if !ok {
            let msg = match op.kind {
                OpKind::Insert => format!("edge ({v},{}) already present", op.u),
                OpKind::Delete => format!("edge ({v},{}) absent", op.u),
            };
            return Err(Error::Replay { step, msg });
        }
        Ok(())
    }

    /// Graph after the first `steps` operations.
    pub fn apply_prefix(&self, g: &Graph, steps: usize) -> Result<Graph> {
        self.check_unique()?;
        let mut out = g.clone();
        for step in 0..steps.min(self.ops.len()) {
            self.apply_step(&mut out, step)?;
        }
        Ok(out)
    }

    pub fn apply(&self, g: &Graph) -> Result<Graph> {
        self.apply_prefix(g, self.ops.len())
    }

    fn check_unique(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (step, op) in self.ops.iter().enumerate() {
            if !seen.insert(op.u) {
                return Err(Error::Replay { step, msg: format!("pair ({},{}) toggled twice", self.target, op.u) });
            }
        }
        Ok(())
    }
}

/// Local perturbation budget of a target node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BudgetSpec {
    Fixed { delta: usize },
    Degree,
    DegreePlus { k: usize },
    Unbounded { cap: usize },
}

impl BudgetSpec {
    pub const DEFAULT_CAP: usize = 128;

    pub fn validate(&self) -> Result<()> {
        match *self {
            BudgetSpec::Fixed { delta: 0 } => param("fixed budget must be positive"),
            BudgetSpec::DegreePlus { k: 0 } => param("degree offset must be positive"),
            BudgetSpec::Unbounded { cap: 0 } => param("budget cap must be positive"),
            _ => Ok(()),
        }
    }

    pub fn resolve(&self, degree: usize) -> usize {
        match *self {
            BudgetSpec::Fixed { delta } => delta,
            BudgetSpec::Degree => degree,
            BudgetSpec::DegreePlus { k } => degree + k,
            BudgetSpec::Unbounded { cap } => cap,
        }
    }

    /// Short name used in file names and tables, e.g. `B2`, `Bdeg+2`.
    pub fn tag(&self) -> String {
        match *self {
            BudgetSpec::Fixed { delta } => format!("B{delta}"),
            BudgetSpec::Degree => "Bdeg".into(),
            BudgetSpec::DegreePlus { k } => format!("Bdeg+{k}"),
            BudgetSpec::Unbounded { cap } => format!("Bmax{cap}"),
        }
    }
}

fn check_target(g: &Graph, v: usize) -> Result<()> {
    if v >= g.n() {
        return param(format!("target {v} out of range"));
    }
    Ok(())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Non-adjacent nodes of class `c != y_v`; errors if the class is empty.
fn insertion_candidates(g: &Graph, v: usize, class: Option<usize>) -> Result<Vec<usize>> {
    let yv = g.label(v);
    let wanted = |y: usize| match class {
        Some(c) => y == c,
        None => y != yv,
    };
    if !(0..g.n()).any(|u| u != v && wanted(g.label(u))) {
        return Err(Error::EmptyCandidates(format!("no node of a different class than node {v}")));
    }
    Ok((0..g.n())
        .filter(|&u| u != v && wanted(g.label(u)) && !g.has_edge(v, u))
        .collect())
}

fn insertion_plan(v: usize, tag: &str, nodes: impl IntoIterator<Item = usize>, budget: usize) -> PerturbationPlan {
    PerturbationPlan {
        target: v,
        attack_tag: tag.into(),
        ops: nodes
            .into_iter()
            .take(budget)
            .map(|u| EdgeOp { kind: OpKind::Insert, u })
            .collect(),
    }
}

fn distance_plan(g: &Graph, v: usize, budget: &BudgetSpec, farthest: bool, tag: &str) -> Result<PerturbationPlan> {
    check_target(g, v)?;
    budget.validate()?;
    let cands = insertion_candidates(g, v, None)?;
    let x = g.row(v);
    let mut scored: Vec<(f64, usize)> = cands.into_iter().map(|u| (sq_dist(x, g.row(u)), u)).collect();
    scored.sort_by(|a, b| {
        let by_dist = if farthest { b.0.total_cmp(&a.0) } else { a.0.total_cmp(&b.0) };
        by_dist.then(a.1.cmp(&b.1))
    });
    Ok(insertion_plan(v, tag, scored.into_iter().map(|s| s.1), budget.resolve(g.degree(v))))
}

/// Connects `v` to its closest different-class nodes in feature space.
pub fn plan_l2_weak(g: &Graph, v: usize, budget: &BudgetSpec) -> Result<PerturbationPlan> {
    distance_plan(g, v, budget, false, "l2-weak")
}

/// Connects `v` to its most distant different-class nodes in feature space.
pub fn plan_l2_strong(g: &Graph, v: usize, budget: &BudgetSpec) -> Result<PerturbationPlan> {
    distance_plan(g, v, budget, true, "l2-strong")
}

/// Connects `v` to uniformly random different-class nodes.
pub fn plan_dice(g: &Graph, v: usize, budget: &BudgetSpec, seed: u64) -> Result<PerturbationPlan> {
    check_target(g, v)?;
    budget.validate()?;
    let mut cands = insertion_candidates(g, v, None)?;
    cands.shuffle(&mut stream(seed, Purpose::Dice, v as u64));
    Ok(insertion_plan(v, "dice", cands, budget.resolve(g.degree(v))))
}

/// Margin-reducing toggles against the Bayes decision at `v`, strongest
/// change potential first; inserts precede deletes at equal strength.
pub fn plan_optimal_bayes(g: &Graph, v: usize, budget: &BudgetSpec) -> Result<PerturbationPlan> {
    check_target(g, v)?;
    budget.validate()?;
    let pots = change_potentials(g, v)?;
    let mut toggles: Vec<(f64, OpKind, usize)> = Vec::new();
    for (u, p) in pots.into_iter().enumerate() {
        if let Some(p) = p.filter(|&p| p < 0.0) {
            let kind = if g.has_edge(v, u) { OpKind::Delete } else { OpKind::Insert };
            toggles.push((p, kind, u));
        }
    }
    toggles.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let n = budget.resolve(g.degree(v));
    Ok(PerturbationPlan {
        target: v,
        attack_tag: "optimal-bayes".into(),
        ops: toggles.into_iter().take(n).map(|(_, kind, u)| EdgeOp { kind, u }).collect(),
    })
}

/// Connects `v` to the closest nodes of `target_class`, with distances
/// measured after the optional linear `projection` (rows x d).
pub fn plan_per_class_l2(
    g: &Graph,
    v: usize,
    target_class: usize,
    budget: &BudgetSpec,
    projection: Option<&[Vec<f64>]>,
) -> Result<PerturbationPlan> {
    check_target(g, v)?;
    budget.validate()?;
    if target_class == g.label(v) || target_class >= g.num_classes() {
        return param(format!("target class {target_class} must differ from the label of node {v}"));
    }
    if let Some(p) = projection {
        if p.iter().any(|r| r.len() != g.d() || r.iter().any(|x| !x.is_finite())) {
            return param("projection rows must be finite with length d");
        }
    }
    let project = |row: &[f64]| -> Vec<f64> {
        match projection {
            Some(p) => p.iter().map(|r| r.iter().zip(row).map(|(a, b)| a * b).sum()).collect(),
            None => row.to_vec(),
        }
    };
    if !(0..g.n()).any(|u| g.label(u) == target_class) {
        return Err(Error::EmptyCandidates(format!("class {target_class} has no nodes")));
    }
    let cands = insertion_candidates(g, v, Some(target_class))?;
    let xv = project(g.row(v));
    let mut scored: Vec<(f64, usize)> = cands
        .into_iter()
        .map(|u| (sq_dist(&xv, &project(g.row(u))), u))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(insertion_plan(
        v,
        &format!("l2-class{target_class}"),
        scored.into_iter().map(|s| s.1),
        budget.resolve(g.degree(v)),
    ))
}

/// Adaptive attack: each step applies the single toggle at `v` that most
/// lowers the model's probability of its clean prediction. Ties go to
/// insertions, then to the smaller node index. Pairs are toggled at most once.
pub fn greedy_margin_attack(
    g: &Graph,
    v: usize,
    model: &dyn NodePredictor,
    budget: &BudgetSpec,
) -> Result<PerturbationPlan> {
    check_target(g, v)?;
    budget.validate()?;
    let steps = budget.resolve(g.degree(v));
    let clean = model.classify_node(g, v)?;
    let mut work = g.clone();
    let mut used = vec![false; g.n()];
    used[v] = true;
    let mut plan = PerturbationPlan { target: v, attack_tag: "greedy-margin".into(), ops: Vec::new() };
    for _ in 0..steps {
        let mut cands: Vec<EdgeOp> = (0..g.n())
            .filter(|&u| !used[u])
            .map(|u| EdgeOp { kind: if work.has_edge(v, u) { OpKind::Delete } else { OpKind::Insert }, u })
            .collect();
        if cands.is_empty() {
            break;
        }
        cands.sort_by_key(|op| (op.kind, op.u));
        let mut best: Option<(f64, EdgeOp)> = None;
        for op in cands {
            toggle(&mut work, v, op);
            let p = model.predict_node(&work, v)?[clean];
            undo(&mut work, v, op);
            if best.is_none_or(|(b, _)| p < b) {
                best = Some((p, op));
            }
        }
        let (_, op) = best.unwrap();
        toggle(&mut work, v, op);
        used[op.u] = true;
        plan.ops.push(op);
        if model.classify_node(&work, v)? != clean {
            break;
        }
    }
    Ok(plan)
}

fn toggle(g: &mut Graph, v: usize, op: EdgeOp) {
    match op.kind {
        OpKind::Insert => g.insert_edge(v, op.u),
        OpKind::Delete => g.remove_edge(v, op.u),
    };
}

fn undo(g: &mut Graph, v: usize, op: EdgeOp) {
    match op.kind {
        OpKind::Insert => g.remove_edge(v, op.u),
        OpKind::Delete => g.insert_edge(v, op.u),
    };
}

/// Replaces edges `(i, j)` and `(u, w)` by `(i, w)` and `(u, j)`.
///
/// Requires `deg(i) = deg(u)` and `deg(j) = deg(w)`, so that every node keeps
/// its degree and the degree mixing matrix is unchanged.
pub fn degree_preserving_rewire(g: &Graph, e1: (usize, usize), e2: (usize, usize)) -> Result<Graph> {
    let ((i, j), (u, w)) = (e1, e2);
    let n = g.n();
    if [i, j, u, w].iter().any(|&x| x >= n) {
        return param("rewire endpoint out of range");
    }
    if !g.has_edge(i, j) || !g.has_edge(u, w) {
        return Err(Error::RewireConflict("both edges must be present".into()));
    }
    let nodes = BTreeSet::from([i, j, u, w]);
    if nodes.len() != 4 {
        return Err(Error::RewireConflict("edges must be vertex-disjoint".into()));
    }
    if g.has_edge(i, w) || g.has_edge(u, j) {
        return Err(Error::RewireConflict("a replacement edge already exists".into()));
    }
    if g.degree(i) != g.degree(u) || g.degree(j) != g.degree(w) {
        return Err(Error::RewireConflict("endpoint degrees must match pairwise".into()));
    }
    let mut out = g.clone();
    out.remove_edge(i, j);
    out.remove_edge(u, w);
    out.insert_edge(i, w);
    out.insert_edge(u, j);
    Ok(out)
}

/// Randomly rewires pairs of same-class edges of opposite classes into
/// pairs of different-class edges, `rounds` times where possible. Returns
/// the rewired graph and the number of successful rewirings.
pub fn rewire_same_class_pairs(g: &Graph, rounds: usize, seed: u64) -> Result<(Graph, usize)> {
    if g.num_classes() != 2 {
        return param("rewiring of opposite-class edges needs a binary graph");
    }
    let mut rng = stream(seed, Purpose::Rewire, 0);
    let mut out = g.clone();
    let mut done = 0;
    let max_attempts = rounds.saturating_mul(200).max(1000);
    let mut attempts = 0;
    while done < rounds && attempts < max_attempts {
        attempts += 1;
        let by_class: [Vec<(usize, usize)>; 2] = [0, 1].map(|c| {
            out.edges()
                .filter(|&(a, b)| out.label(a) == c && out.label(b) == c)
                .collect()
        });
        if by_class[0].is_empty() || by_class[1].is_empty() {
            break;
        }
        let e1 = by_class[0][rng.random_range(0..by_class[0].len())];
        let (a, b) = by_class[1][rng.random_range(0..by_class[1].len())];
        for e2 in [(a, b), (b, a)] {
            if let Ok(next) = degree_preserving_rewire(&out, e1, e2) {
                out = next;
                done += 1;
                break;
            }
        }
    }
    Ok((out, done))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::csbm_potential;
    use crate::graph::GenModel;
    use crate::predictor::ConstantPredictor;

    /// Node 0 (class 0) at x=0 and class-1 nodes at the given positions.
    fn line(xs: &[f64]) -> Graph {
        let mut feats = vec![0.0];
        feats.extend_from_slice(xs);
        let mut labels = vec![0];
        labels.extend(std::iter::repeat_n(1, xs.len()));
        let n = labels.len();
        Graph::new(1, 2, feats, &[], labels, vec![true; n], None).unwrap()
    }

    #[test]
    fn equidistant_candidates_order_by_index() {
        let g = line(&[1.0, -1.0, 1.0]);
        let p = plan_l2_weak(&g, 0, &BudgetSpec::Fixed { delta: 3 }).unwrap();
        assert_eq!(p.ops.iter().map(|o| o.u).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn plan_is_truncated_to_candidates() {
        let g = line(&[2.0]);
        assert_eq!(plan_l2_weak(&g, 0, &BudgetSpec::Fixed { delta: 2 }).unwrap().len(), 1);
        assert_eq!(plan_dice(&g, 0, &BudgetSpec::Fixed { delta: 2 }, 1).unwrap().len(), 1);
    }

    #[test]
    fn strong_picks_farthest_first() {
        let g = line(&[1.0, 3.0]);
        let p = plan_l2_strong(&g, 0, &BudgetSpec::Fixed { delta: 2 }).unwrap();
        assert_eq!(p.ops[0].u, 2);
        let single = line(&[1.0]);
        let b = BudgetSpec::Fixed { delta: 1 };
        assert_eq!(plan_l2_strong(&single, 0, &b).unwrap().ops, plan_l2_weak(&single, 0, &b).unwrap().ops);
    }

    #[test]
    fn no_other_class_is_an_error() {
        let g = Graph::new(1, 2, vec![0.0, 1.0], &[], vec![0, 0], vec![true; 2], None).unwrap();
        let b = BudgetSpec::Fixed { delta: 1 };
        assert!(matches!(plan_l2_weak(&g, 0, &b), Err(Error::EmptyCandidates(_))));
    }

    #[test]
    fn dice_is_seeded() {
        let g = line(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = BudgetSpec::Fixed { delta: 4 };
        assert_eq!(plan_dice(&g, 0, &b, 3).unwrap(), plan_dice(&g, 0, &b, 3).unwrap());
    }

    #[test]
    fn per_class_projection_cases() {
        let g = line(&[3.0, 1.0, 2.0]);
        let b = BudgetSpec::Fixed { delta: 3 };
        let id = vec![vec![1.0]];
        let with_id = plan_per_class_l2(&g, 0, 1, &b, Some(&id)).unwrap();
        assert_eq!(with_id.ops, plan_l2_weak(&g, 0, &b).unwrap().ops);
        let zero = vec![vec![0.0]];
        let with_zero = plan_per_class_l2(&g, 0, 1, &b, Some(&zero)).unwrap();
        assert_eq!(with_zero.ops.iter().map(|o| o.u).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(plan_per_class_l2(&g, 0, 0, &b, None).is_err());
    }

    #[test]
    fn optimal_bayes_plan_shares_one_potential() {
        let model = GenModel::csbm(30, 0.3, 0.05, 1.0, 2, 1.0);
        let mut g = crate::graphgen::sample_graph(&model, 2).unwrap();
        let mut mask = vec![true; 30];
        mask[29] = false;
        g.set_known_mask(mask).unwrap();
        let plan = plan_optimal_bayes(&g, 29, &BudgetSpec::Unbounded { cap: 128 }).unwrap();
        let c = csbm_potential(0.3, 0.05);
        for op in &plan.ops {
            assert_eq!(crate::bayes::change_potential(&g, 29, op.u).unwrap(), c);
        }
        let first_delete = plan.ops.iter().position(|o| o.kind == OpKind::Delete).unwrap_or(plan.len());
        assert!(plan.ops[first_delete..].iter().all(|o| o.kind == OpKind::Delete));
    }

    #[test]
    fn greedy_against_constant_exhausts_budget() {
        let g = line(&[1.0, 2.0, 3.0, 4.0]);
        let f = ConstantPredictor { class: 0, num_classes: 2 };
        let p = greedy_margin_attack(&g, 0, &f, &BudgetSpec::Fixed { delta: 3 }).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.ops.iter().map(|o| o.u).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn replay_detects_conflicts() {
        let g = line(&[1.0]);
        let bad = PerturbationPlan {
            target: 0,
            attack_tag: "x".into(),
            ops: vec![EdgeOp { kind: OpKind::Delete, u: 1 }],
        };
        assert!(matches!(bad.apply(&g), Err(Error::Replay { step: 0, .. })));
        let twice = PerturbationPlan {
            target: 0,
            attack_tag: "x".into(),
            ops: vec![EdgeOp { kind: OpKind::Insert, u: 1 }, EdgeOp { kind: OpKind::Delete, u: 1 }],
        };
        assert!(matches!(twice.apply(&g), Err(Error::Replay { step: 1, .. })));
    }

    #[test]
    fn plan_json_layout() {
        let p = PerturbationPlan {
            target: 4,
            attack_tag: "dice".into(),
            ops: vec![EdgeOp { kind: OpKind::Insert, u: 2 }],
        };
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"target":4,"attack_tag":"dice","ops":[{"kind":"insert","u":2}]}"#
        );
    }

    #[test]
    fn rewire_keeps_degrees_and_rejects_conflicts() {
        // two disjoint same-class edges: 0-1 (class 0), 2-3 (class 1)
        let g = Graph::new(1, 2, vec![0.0; 4], &[(0, 1), (2, 3)], vec![0, 0, 1, 1], vec![true; 4], None).unwrap();
        let r = degree_preserving_rewire(&g, (0, 1), (2, 3)).unwrap();
        assert_eq!(r.degrees(), g.degrees());
        assert!(r.edges().all(|(a, b)| r.label(a) != r.label(b)));
        assert!(matches!(degree_preserving_rewire(&g, (0, 1), (1, 0)), Err(Error::RewireConflict(_))));
        let mut closed = g.clone();
        closed.insert_edge(0, 3);
        assert!(matches!(degree_preserving_rewire(&closed, (0, 1), (2, 3)), Err(Error::RewireConflict(_))));
    }

    #[test]
    fn budget_tags_and_resolution() {
        assert_eq!(BudgetSpec::DegreePlus { k: 2 }.resolve(3), 5);
        assert_eq!(BudgetSpec::Degree.tag(), "Bdeg");
        assert!(BudgetSpec::Fixed { delta: 0 }.validate().is_err());
        let j = serde_json::to_string(&BudgetSpec::Fixed { delta: 2 }).unwrap();
        assert_eq!(j, r#"{"kind":"fixed","delta":2}"#);
    }
}
