use crate::error::Result;
use crate::graph::Graph;

/// Index of the largest entry; ties go to the smallest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// A node classifier evaluated on (possibly perturbed) graphs.
pub trait NodePredictor: Send + Sync {
    /// Class probabilities at node `v`.
    fn predict_node(&self, g: &Graph, v: usize) -> Result<Vec<f64>>;

    fn classify_node(&self, g: &Graph, v: usize) -> Result<usize> {
        Ok(argmax(&self.predict_node(g, v)?))
    }
}

/// Always predicts the same class.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPredictor {
    pub class: usize,
    pub num_classes: usize,
}

impl NodePredictor for ConstantPredictor {
    fn predict_node(&self, _g: &Graph, _v: usize) -> Result<Vec<f64>> {
        let mut p = vec![0.0; self.num_classes];
        p[self.class] = 1.0;
        Ok(p)
    }
}

/// Reports the stored label of the node, whatever the structure. Used as the
/// reference when measuring robustness against ground truth.
#[derive(Debug, Clone, Copy, Default)]
pub struct LabelOracle;

impl NodePredictor for LabelOracle {
    fn predict_node(&self, g: &Graph, v: usize) -> Result<Vec<f64>> {
        let mut p = vec![0.0; g.num_classes()];
        p[g.label(v)] = 1.0;
        Ok(p)
    }
}

/// Adapter for closures `Fn(&Graph, usize) -> Result<Vec<f64>>`.
pub struct FnPredictor<F>(pub F);

impl<F> NodePredictor for FnPredictor<F>
where
    F: Fn(&Graph, usize) -> Result<Vec<f64>> + Send + Sync,
{
    fn predict_node(&self, g: &Graph, v: usize) -> Result<Vec<f64>> {
        (self.0)(g, v)
    }
}
