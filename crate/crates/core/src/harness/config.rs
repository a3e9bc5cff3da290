use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attacks::BudgetSpec;
use crate::classifiers::{LPConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::{default_dimension, mean_vector, GenModel, Structure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSpec {
    Synthetic {
        n: usize,
        structure: Structure,
        /// Feature dimension; `round(n / ln(n)^2)` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
        #[serde(default = "one")]
        sigma: f64,
    },
    Real {
        edges: PathBuf,
        features: PathBuf,
        labels: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mask: Option<PathBuf>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "MLP")]
    Mlp,
    #[serde(rename = "SGC")]
    Sgc,
    #[serde(rename = "GCN")]
    Gcn,
    #[serde(rename = "MLP+LP")]
    MlpLp,
    #[serde(rename = "SGC+LP")]
    SgcLp,
    #[serde(rename = "GCN+LP")]
    GcnLp,
    #[serde(rename = "LP")]
    Lp,
    #[serde(rename = "Bayes")]
    Bayes,
}

impl ClassifierKind {
    pub fn tag(self) -> &'static str {
        match self {
            ClassifierKind::Mlp => "MLP",
            ClassifierKind::Sgc => "SGC",
            ClassifierKind::Gcn => "GCN",
            ClassifierKind::MlpLp => "MLP+LP",
            ClassifierKind::SgcLp => "SGC+LP",
            ClassifierKind::GcnLp => "GCN+LP",
            ClassifierKind::Lp => "LP",
            ClassifierKind::Bayes => "Bayes",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    L2Weak,
    L2Strong,
    Dice,
    OptimalBayes,
    GreedyMargin,
    PerClassL2,
}

impl AttackKind {
    pub fn tag(self) -> &'static str {
        match self {
            AttackKind::L2Weak => "l2-weak",
            AttackKind::L2Strong => "l2-strong",
            AttackKind::Dice => "dice",
            AttackKind::OptimalBayes => "optimal-bayes",
            AttackKind::GreedyMargin => "greedy-margin",
            AttackKind::PerClassL2 => "per-class-l2",
        }
    }

    /// Whether the plan ignores the attacked classifier.
    pub fn model_agnostic(self) -> bool {
        !matches!(self, AttackKind::GreedyMargin | AttackKind::PerClassL2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Full,
    Quick,
}

/// Declarative description of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub graph: GraphSpec,
    /// Class separation values; mean vectors are built per value.
    pub k_values: Vec<f64>,
    pub seeds: usize,
    pub base_seed: u64,
    pub test_nodes: usize,
    pub classifiers: Vec<ClassifierKind>,
    pub train: TrainConfig,
    pub lp: LPConfig,
    pub val_split: f64,
    pub attacks: Vec<AttackKind>,
    pub violation_budgets: Vec<BudgetSpec>,
    pub sweep_budgets: Vec<BudgetSpec>,
    /// Model attacked when counting semantic violations; only test nodes it
    /// classifies correctly are counted.
    pub violation_model: ClassifierKind,
    pub profile_cap: usize,
    pub beta: f64,
    pub formats: Vec<Format>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "csbm".into(),
            graph: GraphSpec::Synthetic {
                n: 1000,
                structure: Structure::Csbm { p: 0.0063, q: 0.0015 },
                d: None,
                sigma: 1.0,
            },
            k_values: vec![0.1, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0],
            seeds: 10,
            base_seed: 0,
            test_nodes: 1000,
            classifiers: vec![ClassifierKind::Mlp, ClassifierKind::Gcn, ClassifierKind::GcnLp],
            train: TrainConfig::default(),
            lp: LPConfig::default(),
            val_split: 0.2,
            attacks: vec![AttackKind::L2Weak],
            violation_budgets: vec![
                BudgetSpec::Fixed { delta: 1 },
                BudgetSpec::Fixed { delta: 2 },
                BudgetSpec::Fixed { delta: 3 },
                BudgetSpec::Fixed { delta: 4 },
                BudgetSpec::Degree,
                BudgetSpec::DegreePlus { k: 2 },
            ],
            sweep_budgets: vec![BudgetSpec::Degree],
            violation_model: ClassifierKind::Mlp,
            profile_cap: BudgetSpec::DEFAULT_CAP,
            beta: 1.0,
            formats: vec![Format::Csv, Format::Json, Format::Svg],
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies a run-size profile; `Quick` caps seeds at 3 and test nodes at 200.
    pub fn with_profile(mut self, profile: Profile) -> Self {
        if profile == Profile::Quick {
            self.seeds = self.seeds.min(3);
            self.test_nodes = self.test_nodes.min(200);
        }
        self
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self.graph, GraphSpec::Synthetic { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(cfg_err("name must be a nonempty single path component"));
        }
        if self.seeds == 0 {
            return Err(cfg_err("seeds must be positive"));
        }
        if self.test_nodes == 0 {
            return Err(cfg_err("test_nodes must be positive"));
        }
        if self.is_synthetic() {
            if self.k_values.is_empty() {
                return Err(cfg_err("k_values must be nonempty for synthetic graphs"));
            }
            if self.k_values.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
                return Err(cfg_err("k_values must be finite and nonnegative"));
            }
            for &k in &self.k_values {
                self.gen_model(k)?.validate().map_err(|e| cfg_err(e.to_string()))?;
            }
        } else if self.classifiers.contains(&ClassifierKind::Bayes) {
            return Err(cfg_err("Bayes classifier needs a synthetic graph"));
        }
        self.train.validate().map_err(|e| cfg_err(e.to_string()))?;
        self.lp.validate().map_err(|e| cfg_err(e.to_string()))?;
        for b in self.violation_budgets.iter().chain(&self.sweep_budgets) {
            b.validate().map_err(|e| cfg_err(e.to_string()))?;
        }
        if !(0.0..1.0).contains(&self.val_split) {
            return Err(cfg_err("val_split must lie in [0,1)"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(cfg_err("beta must be positive"));
        }
        if self.profile_cap == 0 {
            return Err(cfg_err("profile_cap must be positive"));
        }
        Ok(())
    }

    /// Generative model for class separation `k`.
    pub fn gen_model(&self, k: f64) -> Result<GenModel> {
        match &self.graph {
            GraphSpec::Synthetic { n, structure, d, sigma } => {
                let d = d.unwrap_or_else(|| default_dimension(*n));
                Ok(GenModel {
                    n: *n,
                    structure: structure.clone(),
                    mu: mean_vector(k, *sigma, d),
                    sigma: *sigma,
                    num_classes: 2,
                    class_means: None,
                })
            }
            GraphSpec::Real { .. } => Err(cfg_err("real graphs have no generative model")),
        }
    }

    /// SHA-256 of the canonical JSON form (object keys sorted).
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
