use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::data::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Architecture {
    /// Softmax regression.
    #[default]
    Linear,
    /// One tanh hidden layer.
    Mlp { hidden: usize },
}

/// Classifier with a flat parameter vector.
///
/// Linear layout: `W (classes x dim)`, then `b (classes)`.
/// MLP layout: `W1 (hidden x dim)`, `b1`, `W2 (classes x hidden)`, `b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub arch: Architecture,
    pub dim: usize,
    pub n_classes: usize,
    pub params: Vec<f64>,
}

pub fn parameter_count(arch: Architecture, dim: usize, n_classes: usize) -> usize {
    match arch {
        Architecture::Linear => n_classes * dim + n_classes,
        Architecture::Mlp { hidden } => hidden * dim + hidden + n_classes * hidden + n_classes,
    }
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        z += *x;
    }
    for x in v.iter_mut() {
        *x /= z;
    }
}

/// `out = M x + b` for row-major `M (rows x x.len())`.
fn affine(m: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        let row = &m[r * cols..(r + 1) * cols];
        *o = b[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

impl Model {
    pub fn zeros(arch: Architecture, dim: usize, n_classes: usize) -> Self {
        Model {
            arch,
            dim,
            n_classes,
            params: vec![0.0; parameter_count(arch, dim, n_classes)],
        }
    }

    /// Small Gaussian weights (scaled by fan-in), zero biases.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, dim: usize, n_classes: usize, rng: &mut R) -> Self {
        let mut model = Model::zeros(arch, dim, n_classes);
        let mut fill = |slice: &mut [f64], fan_in: usize| {
            let normal = Normal::new(0.0, 1.0 / (fan_in as f64).sqrt()).expect("positive std");
            for p in slice {
                *p = normal.sample(rng);
            }
        };
        match arch {
            Architecture::Linear => {
                let w = n_classes * dim;
                fill(&mut model.params[..w], dim.max(1));
            }
            Architecture::Mlp { hidden } => {
                let w1 = hidden * dim;
                fill(&mut model.params[..w1], dim.max(1));
                let w2_start = w1 + hidden;
                fill(&mut model.params[w2_start..w2_start + n_classes * hidden], hidden.max(1));
            }
        }
        model
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut logits = vec![0.0; self.n_classes];
        match self.arch {
            Architecture::Linear => {
                let w = self.n_classes * self.dim;
                affine(&self.params[..w], &self.params[w..], x, &mut logits);
            }
            Architecture::Mlp { hidden } => {
                let (w1, rest) = self.params.split_at(hidden * self.dim);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(self.n_classes * hidden);
                let mut h = vec![0.0; hidden];
                affine(w1, b1, x, &mut h);
                h.iter_mut().for_each(|v| *v = v.tanh());
                affine(w2, b2, &h, &mut logits);
            }
        }
        softmax_in_place(&mut logits);
        logits
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let p = self.probabilities(x);
        let mut best = 0;
        for c in 1..p.len() {
            if p[c] > p[best] {
                best = c;
            }
        }
        best
    }

    /// Mean cross-entropy over `indices` and its gradient.
    pub fn loss_and_gradient(&self, data: &Dataset, indices: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        if indices.is_empty() {
            return (0.0, grad);
        }
        let l = self.n_classes;
        let d = self.dim;
        match self.arch {
            Architecture::Linear => {
                let w = l * d;
                for &i in indices {
                    let x = data.features(i);
                    let y = data.label(i);
                    let mut p = self.probabilities(x);
                    loss -= p[y].max(f64::MIN_POSITIVE).ln();
                    p[y] -= 1.0;
                    for c in 0..l {
                        let g = p[c];
                        for k in 0..d {
                            grad[c * d + k] += g * x[k];
                        }
                        grad[w + c] += g;
                    }
                }
            }
            Architecture::Mlp { hidden } => {
                let (w1, rest) = self.params.split_at(hidden * d);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(l * hidden);
                let b1_off = hidden * d;
                let w2_off = b1_off + hidden;
                let b2_off = w2_off + l * hidden;
                let mut h = vec![0.0; hidden];
                let mut logits = vec![0.0; l];
                for &i in indices {
                    let x = data.features(i);
                    let y = data.label(i);
                    affine(w1, b1, x, &mut h);
                    h.iter_mut().for_each(|v| *v = v.tanh());
                    affine(w2, b2, &h, &mut logits);
                    softmax_in_place(&mut logits);
                    loss -= logits[y].max(f64::MIN_POSITIVE).ln();
                    logits[y] -= 1.0;
                    let mut dh = vec![0.0; hidden];
                    for c in 0..l {
                        let g = logits[c];
                        for j in 0..hidden {
                            grad[w2_off + c * hidden + j] += g * h[j];
                            dh[j] += g * w2[c * hidden + j];
                        }
                        grad[b2_off + c] += g;
                    }
                    for j in 0..hidden {
                        let dpre = dh[j] * (1.0 - h[j] * h[j]);
                        for k in 0..d {
                            grad[j * d + k] += dpre * x[k];
                        }
                        grad[b1_off + j] += dpre;
                    }
                }
            }
        }
        let scale = 1.0 / indices.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        (loss * scale, grad)
    }
}
