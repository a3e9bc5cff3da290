use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dense::{self_loop_row, softmax_in_place, softmax_rows, Mat, Propagation};
use crate::error::{param, Error, Result};
use crate::graph::Graph;
use crate::predictor::NodePredictor;
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Architecture {
    /// Structure-blind perceptron, relu between layers.
    Mlp,
    /// Logistic regression on `S^K X`.
    Sgc,
    /// Graph convolution per layer, relu between layers.
    Gcn,
}

impl Architecture {
    pub fn tag(self) -> &'static str {
        match self {
            Architecture::Mlp => "MLP",
            Architecture::Sgc => "SGC",
            Architecture::Gcn => "GCN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `in x out`
    pub weight: Mat,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub architecture: Architecture,
    /// Propagation steps of SGC; ignored otherwise.
    pub hops: usize,
    pub hidden_dim: usize,
    pub activation: String,
    pub layers: Vec<Layer>,
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-a..a)).collect();
    Mat::from_vec(rows, cols, data)
}

impl ModelParams {
    /// Glorot-uniform weights and zero biases. `hidden_dim = 0` gives a
    /// single linear layer for MLP and GCN.
    pub fn init(
        architecture: Architecture,
        d: usize,
        num_classes: usize,
        hidden_dim: usize,
        hops: usize,
        seed: u64,
    ) -> Self {
        let dims: Vec<usize> = match architecture {
            Architecture::Sgc => vec![d, num_classes],
            _ if hidden_dim == 0 => vec![d, num_classes],
            _ => vec![d, hidden_dim, num_classes],
        };
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let mut rng = stream(seed, Purpose::Init, l as u64);
                Layer { weight: glorot(w[0], w[1], &mut rng), bias: vec![0.0; w[1]] }
            })
            .collect();
        ModelParams {
            architecture,
            hops,
            hidden_dim: if architecture == Architecture::Sgc { 0 } else { hidden_dim },
            activation: "relu".into(),
            layers,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.rows
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().unwrap().weight.cols
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        if self.layers.is_empty() {
            return param("model has no layers");
        }
        if self.architecture == Architecture::Sgc && self.layers.len() != 1 {
            return param("SGC has exactly one layer");
        }
        if self.activation != "relu" {
            return param(format!("unsupported activation {:?}", self.activation));
        }
        if self.input_dim() != g.d() {
            return param(format!("model expects d={}, graph has d={}", self.input_dim(), g.d()));
        }
        if self.num_classes() != g.num_classes() {
            return param("model and graph disagree on the number of classes");
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let w = &layer.weight;
            if w.data.len() != w.rows * w.cols || layer.bias.len() != w.cols {
                return param(format!("layer {l} has inconsistent shapes"));
            }
            if l > 0 && w.rows != self.layers[l - 1].weight.cols {
                return param(format!("layer {l} input does not match previous output"));
            }
            if !w.is_finite() || layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::Numeric(format!("layer {l} parameters")));
            }
        }
        Ok(())
    }
}

/// Graph-dependent inputs shared across forward passes.
pub(crate) struct Prepared {
    /// Input of the first layer: `X` or, for SGC, `S^K X`.
    pub x: Mat,
    /// Per-layer propagation, GCN only.
    pub s: Option<Propagation>,
}

impl Prepared {
    pub fn new(params: &ModelParams, g: &Graph) -> Self {
        let x = Mat::features(g);
        match params.architecture {
            Architecture::Mlp => Prepared { x, s: None },
            Architecture::Sgc => {
                let s = Propagation::with_self_loops(g);
                let mut x = x;
                for _ in 0..params.hops {
                    x = s.apply(&x);
                }
                Prepared { x, s: None }
            }
            Architecture::Gcn => Prepared { x, s: Some(Propagation::with_self_loops(g)) },
        }
    }
}

pub(crate) struct Cache {
    /// Input of each layer.
    pub inputs: Vec<Mat>,
    /// Pre-activation output of each layer; the last is the logits.
    pub pre: Vec<Mat>,
    pub probs: Mat,
}

pub(crate) fn forward(params: &ModelParams, prep: &Prepared) -> Cache {
    let mut inputs = Vec::with_capacity(params.layers.len());
    let mut pre = Vec::with_capacity(params.layers.len());
    let mut h = prep.x.clone();
    for (l, layer) in params.layers.iter().enumerate() {
        let mut z = h.matmul(&layer.weight);
        if let Some(s) = &prep.s {
            z = s.apply(&z);
        }
        z.add_row_vec(&layer.bias);
        inputs.push(h);
        h = z.clone();
        if l + 1 < params.layers.len() {
            for x in &mut h.data {
                *x = x.max(0.0);
            }
        }
        pre.push(z);
    }
    softmax_rows(&mut h);
    Cache { inputs, pre, probs: h }
}

/// Gradients of a scalar loss given its gradient with respect to the logits.
pub(crate) fn backward(params: &ModelParams, prep: &Prepared, cache: &Cache, dlogits: Mat) -> Vec<Layer> {
    let mut grads: Vec<Layer> = Vec::with_capacity(params.layers.len());
    let mut dz = dlogits;
    for l in (0..params.layers.len()).rev() {
        let bias = dz.col_sums();
        let dt = match &prep.s {
            Some(s) => s.apply(&dz),
            None => dz,
        };
        let weight = cache.inputs[l].t_matmul(&dt);
        if l > 0 {
            let mut dh = dt.matmul_t(&params.layers[l].weight);
            for (g, &z) in dh.data.iter_mut().zip(&cache.pre[l - 1].data) {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }
            dz = dh;
        } else {
            dz = Mat::zeros(0, 0);
        }
        grads.push(Layer { weight, bias });
    }
    grads.reverse();
    grads
}

/// Class probabilities for every node.
pub fn predict(params: &ModelParams, g: &Graph) -> Result<Mat> {
    params.validate(g)?;
    let probs = forward(params, &Prepared::new(params, g)).probs;
    if !probs.is_finite() {
        return Err(Error::Numeric("predictions".into()));
    }
    Ok(probs)
}

/// Nodes within `k` hops of `v`, sorted.
fn ball(g: &Graph, v: usize, k: usize) -> Vec<usize> {
    let mut set = BTreeSet::from([v]);
    let mut frontier = vec![v];
    for _ in 0..k {
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in g.neighbors(u) {
                if set.insert(w) {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    set.into_iter().collect()
}

/// Rows of `S * H` for `targets`, given rows of `H` covering their neighbors.
/// Accumulates in the same order as [`Propagation::apply`].
fn propagate_local(
    g: &Graph,
    targets: &[usize],
    h: &HashMap<usize, Vec<f64>>,
    cols: usize,
) -> HashMap<usize, Vec<f64>> {
    targets
        .iter()
        .map(|&i| {
            let mut out = vec![0.0; cols];
            for (j, w) in self_loop_row(g, i) {
                for (a, &b) in out.iter_mut().zip(&h[&j]) {
                    *a += w * b;
                }
            }
            (i, out)
        })
        .collect()
}

fn row_times(row: &[f64], w: &Mat) -> Vec<f64> {
    let mut out = vec![0.0; w.cols];
    for (k, &a) in row.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (x, &b) in out.iter_mut().zip(w.row(k)) {
            *x += a * b;
        }
    }
    out
}

/// Class probabilities at one node, computed from its receptive field only.
/// Bitwise equal to the corresponding row of [`predict`].
pub fn predict_node(params: &ModelParams, g: &Graph, v: usize) -> Result<Vec<f64>> {
    params.validate(g)?;
    if v >= g.n() {
        return param(format!("node {v} out of range"));
    }
    let last = params.layers.len() - 1;
    let mut z = match params.architecture {
        Architecture::Mlp | Architecture::Sgc => {
            let mut h = if params.architecture == Architecture::Sgc && params.hops > 0 {
                let rings: Vec<Vec<usize>> = (0..=params.hops).map(|k| ball(g, v, k)).collect();
                let mut cur: HashMap<usize, Vec<f64>> =
                    rings[params.hops].iter().map(|&u| (u, g.row(u).to_vec())).collect();
                for k in (0..params.hops).rev() {
                    cur = propagate_local(g, &rings[k], &cur, g.d());
                }
                cur.remove(&v).unwrap()
            } else {
                g.row(v).to_vec()
            };
            for (l, layer) in params.layers.iter().enumerate() {
                let mut z = row_times(&h, &layer.weight);
                for (a, b) in z.iter_mut().zip(&layer.bias) {
                    *a += b;
                }
                if l < last {
                    for x in &mut z {
                        *x = x.max(0.0);
                    }
                }
                h = z;
            }
            h
        }
        Architecture::Gcn => {
            let depth = params.layers.len();
            let rings: Vec<Vec<usize>> = (0..=depth).map(|k| ball(g, v, k)).collect();
            let mut cur: HashMap<usize, Vec<f64>> =
                rings[depth].iter().map(|&u| (u, g.row(u).to_vec())).collect();
            for (l, layer) in params.layers.iter().enumerate() {
                let k = depth - l - 1;
                let t: HashMap<usize, Vec<f64>> =
                    rings[k + 1].iter().map(|&u| (u, row_times(&cur[&u], &layer.weight))).collect();
                let mut next = propagate_local(g, &rings[k], &t, layer.weight.cols);
                for row in next.values_mut() {
                    for (a, b) in row.iter_mut().zip(&layer.bias) {
                        *a += b;
                    }
                    if l < last {
                        for x in row.iter_mut() {
                            *x = x.max(0.0);
                        }
                    }
                }
                cur = next;
            }
            cur.remove(&v).unwrap()
        }
    };
    softmax_in_place(&mut z);
    if z.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("predictions".into()));
    }
    Ok(z)
}

impl NodePredictor for ModelParams {
    fn predict_node(&self, g: &Graph, v: usize) -> Result<Vec<f64>> {
        predict_node(self, g, v)
    }
}

/// First-layer linear map applied to a feature row (no bias, no activation).
pub fn project_row(params: &ModelParams, row: &[f64]) -> Vec<f64> {
    row_times(row, &params.layers[0].weight)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, edges: &[(usize, usize)], d: usize, seed: u64) -> Graph {
        let mut rng = stream(seed, Purpose::Sample, 0);
        let feats = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels = (0..n).map(|i| i % 2).collect();
        Graph::new(d, 2, feats, edges, labels, vec![true; n], None).unwrap()
    }

    #[test]
    fn zero_weights_give_uniform_probabilities() {
        let g = toy(5, &[(0, 1), (1, 2)], 3, 1);
        for arch in [Architecture::Mlp, Architecture::Sgc, Architecture::Gcn] {
            let mut p = ModelParams::init(arch, 3, 2, 4, 2, 0);
            for l in &mut p.layers {
                l.weight.data.iter_mut().for_each(|x| *x = 0.0);
            }
            let out = predict(&p, &g).unwrap();
            assert!(out.data.iter().all(|&x| x == 0.5));
        }
    }

    #[test]
    fn sgc_without_hops_is_logistic_regression() {
        let g = toy(6, &[(0, 1), (2, 3), (3, 4)], 4, 2);
        let sgc = ModelParams::init(Architecture::Sgc, 4, 2, 0, 0, 3);
        let mut lr = ModelParams::init(Architecture::Mlp, 4, 2, 0, 0, 3);
        lr.layers = sgc.layers.clone();
        assert_eq!(predict(&sgc, &g).unwrap(), predict(&lr, &g).unwrap());
    }

    #[test]
    fn local_prediction_equals_full_row() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (1, 5), (6, 7)];
        let g = toy(8, &edges, 3, 4);
        for arch in [Architecture::Mlp, Architecture::Sgc, Architecture::Gcn] {
            let p = ModelParams::init(arch, 3, 2, 5, 2, 9);
            let full = predict(&p, &g).unwrap();
            for v in 0..8 {
                assert_eq!(predict_node(&p, &g, v).unwrap(), full.row(v), "{arch:?} node {v}");
            }
        }
    }

    #[test]
    fn rows_sum_to_one() {
        let g = toy(7, &[(0, 1), (1, 2), (4, 5)], 3, 5);
        for arch in [Architecture::Mlp, Architecture::Sgc, Architecture::Gcn] {
            let p = ModelParams::init(arch, 3, 2, 8, 2, 1);
            let out = predict(&p, &g).unwrap();
            for i in 0..7 {
                assert!((out.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn non_finite_parameters_are_rejected() {
        let g = toy(3, &[], 2, 0);
        let mut p = ModelParams::init(Architecture::Mlp, 2, 2, 3, 0, 0);
        p.layers[0].weight.data[0] = f64::NAN;
        assert!(matches!(predict(&p, &g), Err(Error::Numeric(_))));
    }

    #[test]
    fn json_roundtrip() {
        let p = ModelParams::init(Architecture::Gcn, 3, 2, 4, 0, 7);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"architecture\":\"GCN\""));
        assert_eq!(serde_json::from_str::<ModelParams>(&s).unwrap(), p);
    }
}
