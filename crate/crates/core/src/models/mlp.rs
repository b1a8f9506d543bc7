//! Single-hidden-layer perceptron trained by full-batch gradient descent
//! with momentum 0.9 over the L2-penalized binary log-loss.

use crate::models::{dot, sigmoid, Activation, ModelConfig, ModelError, ModelState};
use crate::rng::SplitMix64;

const ITERATIONS: usize = 3_000;
const MOMENTUM: f64 = 0.9;
const INIT_SPAN: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct MlpParams {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpParams {
    /// Seeded uniform init in [-0.1, 0.1]; draw order is w1 row by row,
    /// then b1, w2, b2.
    pub fn init(d: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut draw = |_: usize| rng.next_f64() * 2.0 * INIT_SPAN - INIT_SPAN;
        Self {
            w1: (0..hidden).map(|_| (0..d).map(&mut draw).collect()).collect(),
            b1: (0..hidden).map(&mut draw).collect(),
            w2: (0..hidden).map(&mut draw).collect(),
            b2: draw(0),
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            w1: vec![vec![0.0; self.w1[0].len()]; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: 0.0,
        }
    }
}

fn activate(a: f64, activation: Activation) -> f64 {
    match activation {
        Activation::Logistic => sigmoid(a),
        Activation::Tanh => a.tanh(),
        Activation::Relu => a.max(0.0),
    }
}

/// Derivative in terms of pre-activation `a` and output `h`.
fn activate_grad(a: f64, h: f64, activation: Activation) -> f64 {
    match activation {
        Activation::Logistic => h * (1.0 - h),
        Activation::Tanh => 1.0 - h * h,
        Activation::Relu => {
            if a > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Output probability for one input row.
pub(crate) fn forward(
    w1: &[Vec<f64>],
    b1: &[f64],
    w2: &[f64],
    b2: f64,
    activation: Activation,
    row: &[f64],
) -> f64 {
    let mut z = b2;
    for ((weights, &bias), &out_weight) in w1.iter().zip(b1).zip(w2) {
        z += out_weight * activate(dot(weights, row) + bias, activation);
    }
    sigmoid(z)
}

/// Mean log-loss plus alpha/(2n) times the squared weight norms (biases
/// unpenalized), with the full analytic gradient. Exposed for the
/// finite-difference oracle.
pub fn loss_grad(
    params: &MlpParams,
    x: &[Vec<f64>],
    y: &[u8],
    alpha: f64,
    activation: Activation,
) -> (f64, MlpParams) {
    let n = x.len() as f64;
    let hidden = params.b1.len();
    let mut loss = 0.0;
    let mut grad = params.zeros_like();

    for (row, &label) in x.iter().zip(y) {
        let pre: Vec<f64> = params
            .w1
            .iter()
            .zip(&params.b1)
            .map(|(w, &b)| dot(w, row) + b)
            .collect();
        let h: Vec<f64> = pre.iter().map(|&a| activate(a, activation)).collect();
        let z = dot(&params.w2, &h) + params.b2;
        let p = sigmoid(z);

        let signed = if label == 1 { z } else { -z };
        loss += (-signed).max(0.0) + (1.0 + (-signed.abs()).exp()).ln();

        let dz = (p - label as f64) / n;
        grad.b2 += dz;
        for j in 0..hidden {
            grad.w2[j] += dz * h[j];
            let dh = dz * params.w2[j] * activate_grad(pre[j], h[j], activation);
            grad.b1[j] += dh;
            for (g, &v) in grad.w1[j].iter_mut().zip(row) {
                *g += dh * v;
            }
        }
    }
    loss /= n;

    for j in 0..hidden {
        for (g, &w) in grad.w1[j].iter_mut().zip(&params.w1[j]) {
            *g += alpha * w / n;
            loss += alpha * w * w / (2.0 * n);
        }
        grad.w2[j] += alpha * params.w2[j] / n;
        loss += alpha * params.w2[j] * params.w2[j] / (2.0 * n);
    }
    (loss, grad)
}

pub(crate) fn fit(x: &[Vec<f64>], y: &[u8], cfg: &ModelConfig) -> Result<ModelState, ModelError> {
    let ModelConfig::Mlp {
        hidden_size,
        activation,
        alpha,
        learning_rate,
        seed,
    } = *cfg
    else {
        unreachable!()
    };
    let mut params = MlpParams::init(x[0].len(), hidden_size, seed);
    let mut velocity = params.zeros_like();
    for _ in 0..ITERATIONS {
        let (loss, grad) = loss_grad(&params, x, y, alpha, activation);
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss);
        }
        let hidden = params.b1.len();
        for j in 0..hidden {
            for k in 0..params.w1[j].len() {
                velocity.w1[j][k] = MOMENTUM * velocity.w1[j][k] - learning_rate * grad.w1[j][k];
                params.w1[j][k] += velocity.w1[j][k];
            }
            velocity.b1[j] = MOMENTUM * velocity.b1[j] - learning_rate * grad.b1[j];
            params.b1[j] += velocity.b1[j];
            velocity.w2[j] = MOMENTUM * velocity.w2[j] - learning_rate * grad.w2[j];
            params.w2[j] += velocity.w2[j];
        }
        velocity.b2 = MOMENTUM * velocity.b2 - learning_rate * grad.b2;
        params.b2 += velocity.b2;
    }
    Ok(ModelState::Mlp {
        w1: params.w1,
        b1: params.b1,
        w2: params.w2,
        b2: params.b2,
        activation,
    })
}
