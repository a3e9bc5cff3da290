use serde::{Deserialize, Serialize};

use crate::graph::Graph;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.cols + j] = x;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let o = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (x, &b) in o.iter_mut().zip(other.row(k)) {
                    *x += a * b;
                }
            }
        }
        out
    }

    /// `self^T * other`.
    pub fn t_matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let mut out = Mat::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let b = other.row(r);
            for (i, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let o = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (x, &y) in o.iter_mut().zip(b) {
                    *x += a * y;
                }
            }
        }
        out
    }

    /// `self * other^T`.
    pub fn matmul_t(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        let mut out = Mat::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                out.data[i * other.rows + j] = dot(self.row(i), other.row(j));
            }
        }
        out
    }

    pub fn add_row_vec(&mut self, b: &[f64]) {
        for i in 0..self.rows {
            for (x, y) in self.row_mut(i).iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (a, x) in s.iter_mut().zip(self.row(i)) {
                *a += x;
            }
        }
        s
    }

    pub fn select_rows(&self, idx: &[usize]) -> Mat {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Mat::from_vec(idx.len(), self.cols, data)
    }

    pub fn features(g: &Graph) -> Mat {
        Mat::from_vec(g.n(), g.d(), g.features().to_vec())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// In-place numerically stable softmax of one row.
pub fn softmax_in_place(z: &mut [f64]) {
    let mx = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in z.iter_mut() {
        *x = (*x - mx).exp();
        s += *x;
    }
    for x in z.iter_mut() {
        *x /= s;
    }
}

pub fn softmax_rows(m: &mut Mat) {
    for i in 0..m.rows {
        softmax_in_place(m.row_mut(i));
    }
}

/// Sparse symmetric propagation matrix stored as weighted adjacency lists.
#[derive(Debug, Clone)]
pub struct Propagation {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Propagation {
    /// `D^{-1/2} A D^{-1/2}`, isolated nodes get an empty row.
    pub fn normalized(g: &Graph) -> Self {
        let deg = g.degrees();
        let rows = (0..g.n())
            .map(|i| {
                g.neighbors(i)
                    .iter()
                    .map(|&j| (j, 1.0 / ((deg[i] * deg[j]) as f64).sqrt()))
                    .collect()
            })
            .collect();
        Propagation { rows }
    }

    /// Same normalization after adding a self-loop to every node.
    pub fn with_self_loops(g: &Graph) -> Self {
        let rows = (0..g.n()).map(|i| self_loop_row(g, i)).collect();
        Propagation { rows }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn apply(&self, x: &Mat) -> Mat {
        let mut out = Mat::zeros(x.rows, x.cols);
        for (i, row) in self.rows.iter().enumerate() {
            let o = &mut out.data[i * x.cols..(i + 1) * x.cols];
            for &(j, w) in row {
                for (a, &b) in o.iter_mut().zip(x.row(j)) {
                    *a += w * b;
                }
            }
        }
        out
    }
}

/// Row `i` of the self-loop normalized adjacency, in ascending column order.
pub fn self_loop_row(g: &Graph, i: usize) -> Vec<(usize, f64)> {
    let di = (g.degree(i) + 1) as f64;
    let mut row = Vec::with_capacity(g.degree(i) + 1);
    let mut pushed_self = false;
    for &j in g.neighbors(i) {
        if !pushed_self && j > i {
            row.push((i, 1.0 / di));
            pushed_self = true;
        }
        row.push((j, 1.0 / (di * (g.degree(j) + 1) as f64).sqrt()));
    }
    if !pushed_self {
        row.push((i, 1.0 / di));
    }
    row
}
