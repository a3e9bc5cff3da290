//! Semantics-aware adversarial robustness for node classification.
//!
//! Synthetic graphs come from contextual stochastic block models (CSBM) or a
//! contextual Barabási–Albert model with communities (CBA). Because the
//! generative model is known, the Bayes-optimal classifier serves as a
//! reference for whether a structure perturbation changed the semantic
//! content at a node, which separates adversarial examples from over-robust
//! behavior of a learned classifier.

pub mod attacks;
pub mod bayes;
pub mod classifiers;
pub mod error;
pub mod graph;
pub mod graphgen;
pub mod harness;
pub mod metrics;
pub mod predictor;
pub mod rng;

pub use attacks::{BudgetSpec, EdgeOp, OpKind, PerturbationPlan};
pub use bayes::{classify_bayes, BayesMode, ClassScore};
pub use classifiers::{Architecture, LPConfig, ModelParams, TrainConfig};
pub use error::{Error, Result};
pub use graph::{GenModel, Graph, Structure};
pub use harness::config::ExperimentConfig;
pub use metrics::{MetricsSummary, RobustnessRecord};
pub use predictor::NodePredictor;
