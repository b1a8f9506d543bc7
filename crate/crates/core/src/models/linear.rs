//! Linear classifiers: L2 logistic regression by full-batch gradient
//! descent and a linear SVM by hinge subgradient descent.

use crate::models::{dot, sigmoid, ModelError};

const LOGREG_MAX_ITERS: usize = 5_000;
const LOGREG_TOLERANCE: f64 = 1e-6;
const SVM_EPOCHS: usize = 2_000;

/// Mean logistic loss plus (lambda / 2n) * ||w||^2 and its gradient. The
/// bias is unregularized. Exposed for the finite-difference oracle.
pub fn logreg_loss_grad(
    x: &[Vec<f64>],
    y: &[u8],
    lambda: f64,
    weights: &[f64],
    bias: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z = dot(weights, row) + bias;
        let signed = if label == 1 { z } else { -z };
        // ln(1 + exp(-signed)), computed without overflow.
        loss += (-signed).max(0.0) + (1.0 + (-signed.abs()).exp()).ln();
        let delta = sigmoid(z) - label as f64;
        for (g, &v) in grad_w.iter_mut().zip(row) {
            *g += delta * v;
        }
        grad_b += delta;
    }
    loss /= n;
    grad_b /= n;
    for (g, &w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + lambda * w / n;
        loss += lambda * w * w / (2.0 * n);
    }
    (loss, grad_w, grad_b)
}

/// Full-batch gradient descent with a fixed step from the curvature
/// bound: the logistic Hessian is at most X'X / 4n plus the ridge term.
/// Stops when the gradient's infinity norm drops under 1e-6 or after
/// 5,000 iterations.
pub(crate) fn fit_logreg(x: &[Vec<f64>], y: &[u8], lambda: f64) -> Result<(Vec<f64>, f64), ModelError> {
    let n = x.len() as f64;
    let d = x[0].len();
    let squared: f64 = x.iter().map(|row| dot(row, row) + 1.0).sum();
    let lipschitz = squared / (4.0 * n) + lambda / n;
    let step = 1.0 / lipschitz.max(1e-12);

    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    for _ in 0..LOGREG_MAX_ITERS {
        let (loss, grad_w, grad_b) = logreg_loss_grad(x, y, lambda, &weights, bias);
        if !loss.is_finite() {
            return Err(ModelError::NonFiniteLoss);
        }
        let inf_norm = grad_w
            .iter()
            .chain(std::iter::once(&grad_b))
            .fold(0.0f64, |m, g| m.max(g.abs()));
        if inf_norm < LOGREG_TOLERANCE {
            break;
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= step * g;
        }
        bias -= step * grad_b;
    }
    Ok((weights, bias))
}

/// Regularized hinge objective (lambda / 2) * ||w||^2 + mean hinge, with
/// labels read as +/-1. Exposed for the brute-force grid oracle.
#[cfg(test)]
pub(crate) fn svm_objective(x: &[Vec<f64>], y: &[u8], lambda: f64, weights: &[f64], bias: f64) -> f64 {
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &label)| {
            let signed = if label == 1 { 1.0 } else { -1.0 };
            (1.0 - signed * (dot(weights, row) + bias)).max(0.0)
        })
        .sum::<f64>()
        / x.len() as f64;
    lambda / 2.0 * dot(weights, weights) + hinge
}

/// Full-batch subgradient descent, 2,000 epochs. Weights take the
/// classic 1/(lambda t) step and are projected onto the ball of radius
/// 1/sqrt(lambda) that contains the optimum; the bias is unregularized
/// and follows a plain 1/t schedule so the intercept can still move when
/// regularization is strong.
pub(crate) fn fit_linsvm(x: &[Vec<f64>], y: &[u8], lambda: f64) -> Result<(Vec<f64>, f64), ModelError> {
    let n = x.len() as f64;
    let d = x[0].len();
    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    for t in 1..=SVM_EPOCHS {
        let mut grad_w: Vec<f64> = weights.iter().map(|&w| lambda * w).collect();
        let mut grad_b = 0.0;
        for (row, &label) in x.iter().zip(y) {
            let signed = if label == 1 { 1.0 } else { -1.0 };
            if signed * (dot(&weights, row) + bias) < 1.0 {
                for (g, &v) in grad_w.iter_mut().zip(row) {
                    *g -= signed * v / n;
                }
                grad_b -= signed / n;
            }
        }
        let step = 1.0 / (lambda * t as f64);
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= step * g;
        }
        bias -= grad_b / t as f64;

        let norm = dot(&weights, &weights).sqrt();
        let radius = 1.0 / lambda.sqrt();
        if norm > radius {
            let shrink = radius / norm;
            for w in weights.iter_mut() {
                *w *= shrink;
            }
        }
    }
    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(ModelError::NonFiniteLoss);
    }
    Ok((weights, bias))
}
