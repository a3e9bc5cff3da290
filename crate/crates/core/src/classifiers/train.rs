use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dense::Mat;
use super::model::{backward, forward, Architecture, Layer, ModelParams, Prepared};
use crate::error::{param, Result};
use crate::graph::Graph;
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub hidden_dim: usize,
    /// SGC propagation steps.
    pub hops: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            weight_decay: 1e-3,
            max_epochs: 500,
            patience: 50,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            hidden_dim: 64,
            hops: 2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return param("learning rate must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return param("weight decay must be nonnegative");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return param("moment coefficients must lie in [0,1)");
        }
        if !(self.eps > 0.0) {
            return param("eps must be positive");
        }
        // With no epochs at all the patience is irrelevant.
        if self.max_epochs > 0 && (self.patience == 0 || self.patience > self.max_epochs) {
            return param("patience must lie in [1, max_epochs]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub val_losses: Vec<f64>,
}

fn cross_entropy(probs: &Mat, g: &Graph, nodes: &[usize]) -> f64 {
    let total: f64 = nodes
        .iter()
        .map(|&i| -probs.get(i, g.label(i)).max(f64::MIN_POSITIVE).ln())
        .sum();
    total / nodes.len() as f64
}

/// Mean cross-entropy over `nodes` and its gradient for every parameter.
pub fn loss_and_gradient(params: &ModelParams, g: &Graph, nodes: &[usize]) -> Result<(f64, Vec<Layer>)> {
    params.validate(g)?;
    if nodes.is_empty() {
        return param("loss needs at least one node");
    }
    let prep = Prepared::new(params, g);
    let cache = forward(params, &prep);
    let loss = cross_entropy(&cache.probs, g, nodes);
    let c = params.num_classes();
    let mut dz = Mat::zeros(g.n(), c);
    let scale = 1.0 / nodes.len() as f64;
    for &i in nodes {
        for k in 0..c {
            let t = if g.label(i) == k { 1.0 } else { 0.0 };
            dz.set(i, k, dz.get(i, k) + scale * (cache.probs.get(i, k) - t));
        }
    }
    Ok((loss, backward(params, &prep, &cache, dz)))
}

/// Mean cross-entropy over `nodes` only.
pub fn loss(params: &ModelParams, g: &Graph, nodes: &[usize]) -> Result<f64> {
    params.validate(g)?;
    let cache = forward(params, &Prepared::new(params, g));
    Ok(cross_entropy(&cache.probs, g, nodes))
}

struct AdamW {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl AdamW {
    fn new(params: &ModelParams) -> Self {
        let sizes: Vec<usize> = slots(params).map(|s| s.len()).collect();
        AdamW {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &[Layer], cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t);
        let bc2 = 1.0 - cfg.beta2.powi(self.t);
        let grad_slots = grads.iter().flat_map(|l| [&l.weight.data, &l.bias]);
        for (k, (p, g)) in slots_mut(params).zip(grad_slots).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let update = (m[i] / bc1) / ((v[i] / bc2).sqrt() + cfg.eps);
                p[i] -= cfg.learning_rate * (update + cfg.weight_decay * p[i]);
            }
        }
    }
}

fn slots(params: &ModelParams) -> impl Iterator<Item = &Vec<f64>> {
    params.layers.iter().flat_map(|l| [&l.weight.data, &l.bias])
}

fn slots_mut(params: &mut ModelParams) -> impl Iterator<Item = &mut Vec<f64>> {
    params.layers.iter_mut().flat_map(|l| [&mut l.weight.data, &mut l.bias])
}

/// Splits the known nodes into (train, validation) by a seeded shuffle.
pub fn split_nodes(g: &Graph, val_split: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&val_split) {
        return param("validation fraction must lie in [0,1)");
    }
    let mut known: Vec<usize> = (0..g.n()).filter(|&i| g.known_mask()[i]).collect();
    known.shuffle(&mut stream(seed, Purpose::Split, 0));
    let n_val = (val_split * known.len() as f64).round() as usize;
    let mut val = known.split_off(known.len() - n_val);
    if known.is_empty() || val.is_empty() {
        return param(format!(
            "split of {} known nodes leaves an empty train or validation set",
            known.len() + val.len()
        ));
    }
    known.sort_unstable();
    val.sort_unstable();
    Ok((known, val))
}

/// Trains a model on the known labels of `g`.
pub fn train(arch: Architecture, g: &Graph, cfg: &TrainConfig, val_split: f64) -> Result<ModelParams> {
    Ok(train_with_report(arch, g, cfg, val_split)?.0)
}

/// Full-batch training with AdamW and early stopping on validation loss.
///
/// Validation nodes and their edges are removed from the graph seen during
/// gradient steps; validation loss is measured on the whole graph. The
/// returned parameters are those of the best validation epoch.
pub fn train_with_report(
    arch: Architecture,
    g: &Graph,
    cfg: &TrainConfig,
    val_split: f64,
) -> Result<(ModelParams, TrainReport)> {
    cfg.validate()?;
    let (_, val_nodes) = split_nodes(g, val_split, cfg.seed)?;
    let mut params = ModelParams::init(arch, g.d(), g.num_classes(), cfg.hidden_dim, cfg.hops, cfg.seed);

    let is_val = {
        let mut m = vec![false; g.n()];
        val_nodes.iter().for_each(|&i| m[i] = true);
        m
    };
    let keep: Vec<usize> = (0..g.n()).filter(|&i| !is_val[i]).collect();
    let sub = g.induced_subgraph(&keep);
    let sub_train: Vec<usize> = keep
        .iter()
        .enumerate()
        .filter(|(_, &i)| g.known_mask()[i])
        .map(|(k, _)| k)
        .collect();

    let train_prep = Prepared::new(&params, &sub);
    let val_prep = Prepared::new(&params, g);
    let val_loss = |p: &ModelParams| cross_entropy(&forward(p, &val_prep).probs, g, &val_nodes);

    let mut best = params.clone();
    let mut best_loss = val_loss(&params);
    let mut best_epoch = 0;
    let mut history = Vec::new();
    let mut opt = AdamW::new(&params);
    let mut epoch = 0;
    while epoch < cfg.max_epochs {
        epoch += 1;
        let cache = forward(&params, &train_prep);
        let c = params.num_classes();
        let mut dz = Mat::zeros(sub.n(), c);
        let scale = 1.0 / sub_train.len() as f64;
        for &i in &sub_train {
            for k in 0..c {
                let t = if sub.label(i) == k { 1.0 } else { 0.0 };
                dz.set(i, k, scale * (cache.probs.get(i, k) - t));
            }
        }
        let grads = backward(&params, &train_prep, &cache, dz);
        opt.step(&mut params, &grads, cfg);

        let l = val_loss(&params);
        history.push(l);
        if l < best_loss {
            best_loss = l;
            best_epoch = epoch;
            best = params.clone();
        } else if epoch - best_epoch >= cfg.patience {
            break;
        }
    }
    let report = TrainReport { epochs_run: epoch, best_epoch, best_val_loss: best_loss, val_losses: history };
    Ok((best, report))
}
