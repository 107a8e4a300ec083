//! Linear SVM trained by hinge-loss subgradient descent (Pegasos schedule).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{dot, SparseVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Hinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearConfig {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub loss: Loss,
    pub lambda: f64,
}

impl LinearModel {
    pub fn decision(&self, x: &SparseVec) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    /// `true` for the positive class. A zero score counts as positive.
    pub fn predict(&self, x: &SparseVec) -> bool {
        self.decision(x) >= 0.0
    }

    pub fn accuracy(&self, xs: &[SparseVec], ys: &[bool]) -> f64 {
        if xs.is_empty() {
            return 0.0;
        }
        let hits = xs.iter().zip(ys).filter(|(x, &y)| self.predict(x) == y).count();
        hits as f64 / xs.len() as f64
    }
}

/// Train on `xs` (dimension `dim`) with labels `ys`.
///
/// The bias is an extra always-one feature and is regularized with the rest.
/// The weight vector is kept as `scale * v` so each step costs O(nnz).
pub fn train_hinge(xs: &[SparseVec], ys: &[bool], dim: usize, cfg: LinearConfig, seed: u64) -> LinearModel {
    let lambda = cfg.lambda;
    let mut v = vec![0.0; dim];
    let mut vb = 0.0;
    let mut scale = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut t: u64 = 0;

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let y = if ys[i] { 1.0 } else { -1.0 };
            let margin = y * scale * (dot(&v, &xs[i]) + vb);

            scale *= 1.0 - eta * lambda;
            if scale == 0.0 {
                v.iter_mut().for_each(|w| *w = 0.0);
                vb = 0.0;
                scale = 1.0;
            }
            if margin < 1.0 {
                let step = eta * y / scale;
                for &(j, x) in &xs[i] {
                    v[j] += step * x;
                }
                vb += step;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                vb *= scale;
                scale = 1.0;
            }
        }
    }
    LinearModel {
        weights: v.into_iter().map(|w| w * scale).collect(),
        bias: vb * scale,
        loss: Loss::Hinge,
        lambda,
    }
}
