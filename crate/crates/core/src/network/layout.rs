//! Fruchterman–Reingold force-directed layout.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CooccurrenceGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub iterations: usize,
    pub width: f64,
    pub height: f64,
    /// Optimal distance; `None` means sqrt(area / n).
    pub k: Option<f64>,
    /// Starting displacement cap; `None` means width / 10. Decays linearly to 0.
    pub initial_temperature: Option<f64>,
    pub seed: u64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            width: 1000.0,
            height: 1000.0,
            k: None,
            initial_temperature: None,
            seed: 0,
        }
    }
}

impl LayoutConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("layout needs at least one iteration".into()));
        }
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return Err(Error::InvalidArgument("layout frame must be positive and finite".into()));
        }
        if self.k.is_some_and(|k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidArgument("layout k must be positive".into()));
        }
        Ok(())
    }

    pub fn effective_k(&self, n: usize) -> f64 {
        self.k
            .unwrap_or_else(|| (self.width * self.height / n.max(1) as f64).sqrt())
    }
}

pub type Layout = BTreeMap<String, (f64, f64)>;

/// Node positions inside `[0, width] × [0, height]`.
pub fn layout_force_directed(graph: &CooccurrenceGraph, cfg: &LayoutConfig) -> Result<Layout> {
    cfg.validate()?;
    let keys: Vec<&String> = graph.nodes.keys().collect();
    let n = keys.len();
    if n == 0 {
        return Err(Error::EmptyInput("layout of an empty graph".into()));
    }
    let (w, h) = (cfg.width, cfg.height);
    if n == 1 {
        return Ok([(keys[0].clone(), (w / 2.0, h / 2.0))].into());
    }
    let index: BTreeMap<&str, usize> = keys.iter().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    let edges: Vec<(usize, usize)> = graph
        .edges
        .keys()
        .map(|(a, b)| (index[a.as_str()], index[b.as_str()]))
        .collect();

    let k = cfg.effective_k(n);
    let t0 = cfg.initial_temperature.unwrap_or(w / 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pos: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0.0..w), rng.random_range(0.0..h)))
        .collect();

    for it in 0..cfg.iterations {
        let temp = t0 * (1.0 - it as f64 / cfg.iterations as f64);
        let mut disp = vec![(0.0f64, 0.0f64); n];
        for i in 0..n {
            for j in i + 1..n {
                let (dx, dy, d) = delta(pos[i], pos[j], i, j);
                let f = k * k / d;
                disp[i].0 += dx / d * f;
                disp[i].1 += dy / d * f;
                disp[j].0 -= dx / d * f;
                disp[j].1 -= dy / d * f;
            }
        }
        for &(i, j) in &edges {
            let (dx, dy, d) = delta(pos[i], pos[j], i, j);
            let f = d * d / k;
            disp[i].0 -= dx / d * f;
            disp[i].1 -= dy / d * f;
            disp[j].0 += dx / d * f;
            disp[j].1 += dy / d * f;
        }
        for (p, (ddx, ddy)) in pos.iter_mut().zip(&disp) {
            let len = (ddx * ddx + ddy * ddy).sqrt();
            if len > 0.0 {
                let step = len.min(temp);
                p.0 = (p.0 + ddx / len * step).clamp(0.0, w);
                p.1 = (p.1 + ddy / len * step).clamp(0.0, h);
            }
        }
    }
    Ok(keys.into_iter().cloned().zip(pos).collect())
}

/// Vector from `b` to `a` and its length. Coincident points are separated
/// along a fixed index-dependent direction.
fn delta(a: (f64, f64), b: (f64, f64), i: usize, j: usize) -> (f64, f64, f64) {
    let (dx, dy) = (a.0 - b.0, a.1 - b.1);
    let d = (dx * dx + dy * dy).sqrt();
    if d > 1e-9 {
        (dx, dy, d)
    } else {
        let angle = (i * 31 + j * 17) as f64;
        (angle.cos() * 1e-9, angle.sin() * 1e-9, 1e-9)
    }
}
