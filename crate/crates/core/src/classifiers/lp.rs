use serde::{Deserialize, Serialize};

use super::dense::{Mat, Propagation};
use crate::error::{param, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LPConfig {
    pub alpha: f64,
    pub iterations: usize,
}

impl Default for LPConfig {
    fn default() -> Self {
        LPConfig { alpha: 0.7, iterations: 50 }
    }
}

impl LPConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return param(format!("LP alpha must lie in [0,1], got {}", self.alpha));
        }
        if self.iterations == 0 {
            return param("LP needs at least one iteration");
        }
        Ok(())
    }
}

/// Seed matrix: one-hot rows for known labels, `soft_seed` rows (or zeros)
/// for the rest.
pub fn seed_matrix(g: &Graph, soft_seed: Option<&Mat>) -> Result<Mat> {
    let c = g.num_classes();
    if let Some(s) = soft_seed {
        if s.rows != g.n() || s.cols != c {
            return param(format!(
                "soft seed is {}x{}, expected {}x{}",
                s.rows,
                s.cols,
                g.n(),
                c
            ));
        }
    }
    let mut y = Mat::zeros(g.n(), c);
    for i in 0..g.n() {
        if g.known_mask()[i] {
            y.set(i, g.label(i), 1.0);
        } else if let Some(s) = soft_seed {
            y.row_mut(i).copy_from_slice(s.row(i));
        }
    }
    Ok(y)
}

/// Label spreading `F <- alpha * S * F + (1 - alpha) * Y`, starting at `F = Y`.
pub fn label_propagation(g: &Graph, soft_seed: Option<&Mat>, cfg: &LPConfig) -> Result<Mat> {
    cfg.validate()?;
    let y = seed_matrix(g, soft_seed)?;
    let s = Propagation::normalized(g);
    let mut f = y.clone();
    for _ in 0..cfg.iterations {
        let mut next = s.apply(&f);
        for (a, &b) in next.data.iter_mut().zip(&y.data) {
            *a = cfg.alpha * *a + (1.0 - cfg.alpha) * b;
        }
        f = next;
    }
    Ok(f)
}
