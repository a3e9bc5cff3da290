//! Label propagation, small trainable node classifiers and their composition.

pub mod dense;
pub mod lp;
pub mod model;
pub mod train;

use serde::{Deserialize, Serialize};

pub use dense::Mat;
pub use lp::{label_propagation, LPConfig};
pub use model::{predict, predict_node, Architecture, ModelParams};
pub use train::{train, train_with_report, TrainConfig, TrainReport};

use crate::error::Result;
use crate::graph::Graph;
use crate::predictor::NodePredictor;

/// Label propagation seeded with the model's soft predictions on the nodes
/// whose labels are unknown.
pub fn combine_with_lp(params: &ModelParams, g: &Graph, cfg: &LPConfig) -> Result<Mat> {
    let mut seed = Mat::zeros(g.n(), g.num_classes());
    for i in 0..g.n() {
        if !g.known_mask()[i] {
            seed.row_mut(i).copy_from_slice(&predict_node(params, g, i)?);
        }
    }
    label_propagation(g, Some(&seed), cfg)
}

/// Any of the node classifiers evaluated by the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Classifier {
    Model { params: ModelParams },
    ModelLp { params: ModelParams, lp: LPConfig },
    Lp { lp: LPConfig },
}

impl Classifier {
    pub fn tag(&self) -> String {
        match self {
            Classifier::Model { params } => params.architecture.tag().to_string(),
            Classifier::ModelLp { params, .. } => format!("{}+LP", params.architecture.tag()),
            Classifier::Lp { .. } => "LP".to_string(),
        }
    }
}

impl NodePredictor for Classifier {
    fn predict_node(&self, g: &Graph, v: usize) -> Result<Vec<f64>> {
        match self {
            Classifier::Model { params } => predict_node(params, g, v),
            Classifier::ModelLp { params, lp } => Ok(combine_with_lp(params, g, lp)?.row(v).to_vec()),
            Classifier::Lp { lp } => Ok(label_propagation(g, None, lp)?.row(v).to_vec()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_model_with_zero_alpha_keeps_seed() {
        let g = Graph::new(
            1,
            2,
            vec![0.3, -0.1, 0.7],
            &[(0, 1), (1, 2)],
            vec![1, 0, 1],
            vec![true, false, true],
            None,
        )
        .unwrap();
        let mut p = ModelParams::init(Architecture::Gcn, 1, 2, 3, 0, 1);
        for l in &mut p.layers {
            l.weight.data.iter_mut().for_each(|x| *x = 0.0);
        }
        let f = combine_with_lp(&p, &g, &LPConfig { alpha: 0.0, iterations: 50 }).unwrap();
        assert_eq!(f.data, vec![0.0, 1.0, 0.5, 0.5, 0.0, 1.0]);
    }
}
