//! Experiment runner: seeds, table reproduction, sweeps and output files.

pub mod check;
pub mod config;
pub mod emit;
pub mod profile;
pub mod sweep;
pub mod svg;
pub mod tables;

use serde::{Deserialize, Serialize};

pub use check::{check_bundle, CheckOutcome};
pub use config::{AttackKind, ClassifierKind, ExperimentConfig, Format, GraphSpec, Profile};
pub use emit::emit_results;
pub use profile::{degree_robustness_profile, DegreeProfile};
pub use sweep::{over_robustness_sweep, SweepResult};
pub use tables::{bayes_accuracy_table, semantic_violation_table, BayesTable, ViolationTable};

use crate::attacks::{
    greedy_margin_attack, plan_dice, plan_l2_strong, plan_l2_weak, plan_optimal_bayes, plan_per_class_l2,
    BudgetSpec, PerturbationPlan,
};
use crate::bayes::{BayesMode, BayesPredictor};
use crate::classifiers::{train, Architecture, Classifier, ModelParams};
use crate::error::Result;
use crate::graph::Graph;
use crate::graphgen::{extend_graph, sample_graph};
use crate::predictor::NodePredictor;
use crate::rng::{derive, Purpose};

/// Seed of the training graph for `(k, seed_index)`; independent of the
/// order of the K list.
pub fn graph_seed(base: u64, k: f64, seed_index: usize) -> u64 {
    derive(base, &[Purpose::Graph as u64, k.to_bits(), seed_index as u64])
}

/// Seed of inductive test node `t` on a training graph.
pub fn test_node_seed(graph_seed: u64, t: usize) -> u64 {
    derive(graph_seed, &[Purpose::TestNode as u64, t as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub k: f64,
    pub seed_index: usize,
    pub seed: u64,
}

/// Everything needed to re-run a result exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedEntry>,
    pub build: String,
}

impl Provenance {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let seeds = if cfg.is_synthetic() {
            cfg.k_values
                .iter()
                .flat_map(|&k| {
                    (0..cfg.seeds).map(move |s| SeedEntry { k, seed_index: s, seed: graph_seed(cfg.base_seed, k, s) })
                })
                .collect()
        } else {
            (0..cfg.seeds)
                .map(|s| SeedEntry { k: 0.0, seed_index: s, seed: graph_seed(cfg.base_seed, 0.0, s) })
                .collect()
        };
        Provenance {
            config_hash: cfg.hash(),
            config: cfg.clone(),
            seeds,
            build: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub experiment: String,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bayes: Option<BayesTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violations: Option<ViolationTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<DegreeProfile>,
}

impl ResultBundle {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        ResultBundle {
            experiment: cfg.name.clone(),
            provenance: Provenance::new(cfg),
            bayes: None,
            violations: None,
            sweep: None,
            profile: None,
        }
    }
}

/// One sampled training graph of a synthetic configuration.
pub(crate) struct Cell {
    pub k: f64,
    pub seed_index: usize,
    pub seed: u64,
    pub graph: Graph,
}

impl Cell {
    pub fn sample(cfg: &ExperimentConfig, k: f64, seed_index: usize) -> Result<Cell> {
        let seed = graph_seed(cfg.base_seed, k, seed_index);
        let graph = sample_graph(&cfg.gen_model(k)?, seed)?;
        Ok(Cell { k, seed_index, seed, graph })
    }

    /// Training graph extended by inductive test node `t` (the last node).
    pub fn test_graph(&self, t: usize) -> Result<Graph> {
        extend_graph(&self.graph, 1, test_node_seed(self.seed, t))
    }
}

pub(crate) fn cell_grid(cfg: &ExperimentConfig) -> Vec<(f64, usize)> {
    cfg.k_values
        .iter()
        .flat_map(|&k| (0..cfg.seeds).map(move |s| (k, s)))
        .collect()
}

/// A classifier evaluated by the harness plus what attacks may need from it.
pub(crate) struct Built {
    pub kind: ClassifierKind,
    pub predictor: Box<dyn NodePredictor>,
    /// First-layer map of the underlying network, rows x d.
    pub projection: Option<Vec<Vec<f64>>>,
}

fn arch_of(kind: ClassifierKind) -> Option<Architecture> {
    match kind {
        ClassifierKind::Mlp | ClassifierKind::MlpLp => Some(Architecture::Mlp),
        ClassifierKind::Sgc | ClassifierKind::SgcLp => Some(Architecture::Sgc),
        ClassifierKind::Gcn | ClassifierKind::GcnLp => Some(Architecture::Gcn),
        ClassifierKind::Lp | ClassifierKind::Bayes => None,
    }
}

fn projection_of(params: &ModelParams) -> Vec<Vec<f64>> {
    let w = &params.layers[0].weight;
    (0..w.cols).map(|j| (0..w.rows).map(|k| w.get(k, j)).collect()).collect()
}

/// Trains each needed architecture once on `g` and assembles the requested
/// classifiers, in config order.
pub(crate) fn build_classifiers(cfg: &ExperimentConfig, g: &Graph, seed: u64) -> Result<Vec<Built>> {
    let mut trained: Vec<(Architecture, ModelParams)> = Vec::new();
    let mut out = Vec::new();
    for &kind in &cfg.classifiers {
        let params = match arch_of(kind) {
            Some(arch) => Some(match trained.iter().find(|(a, _)| *a == arch) {
                Some((_, p)) => p.clone(),
                None => {
                    let mut tc = cfg.train.clone();
                    tc.seed = derive(seed, &[Purpose::Init as u64, arch as u64]);
                    let p = train(arch, g, &tc, cfg.val_split)?;
                    trained.push((arch, p.clone()));
                    p
                }
            }),
            None => None,
        };
        let projection = params.as_ref().map(projection_of);
        let predictor: Box<dyn NodePredictor> = match kind {
            ClassifierKind::Mlp | ClassifierKind::Sgc | ClassifierKind::Gcn => {
                Box::new(Classifier::Model { params: params.unwrap() })
            }
            ClassifierKind::MlpLp | ClassifierKind::SgcLp | ClassifierKind::GcnLp => {
                Box::new(Classifier::ModelLp { params: params.unwrap(), lp: cfg.lp })
            }
            ClassifierKind::Lp => Box::new(Classifier::Lp { lp: cfg.lp }),
            ClassifierKind::Bayes => Box::new(BayesPredictor { mode: BayesMode::Full }),
        };
        out.push(Built { kind, predictor, projection });
    }
    Ok(out)
}

/// Plan of `attack` against node `v`; `target_class` only matters for the
/// per-class attack.
pub(crate) fn make_plan(
    attack: AttackKind,
    g: &Graph,
    v: usize,
    budget: &BudgetSpec,
    model: &Built,
    target_class: usize,
    dice_seed: u64,
) -> Result<PerturbationPlan> {
    match attack {
        AttackKind::L2Weak => plan_l2_weak(g, v, budget),
        AttackKind::L2Strong => plan_l2_strong(g, v, budget),
        AttackKind::Dice => plan_dice(g, v, budget, dice_seed),
        AttackKind::OptimalBayes => plan_optimal_bayes(g, v, budget),
        AttackKind::GreedyMargin => greedy_margin_attack(g, v, model.predictor.as_ref(), budget),
        AttackKind::PerClassL2 => plan_per_class_l2(g, v, target_class, budget, model.projection.as_deref()),
    }
}
