//! Unidirectional multinomial logistic regression on the ball: one
//! orientation vector plus one scalar bias per class.

use crate::ball::{exp_map_origin, BallPoint, TangentVector};
use crate::error::{PoincareError, Result};
use crate::layers::params::LinearParams;
use crate::numeric::{asinh_capped, cosh_capped, dot, sech, sinh_capped, unit};

/// Per-class score
/// `v_k = (2||z_k||/sqrt(c)) asinh(lambda_x <sqrt(c) x, z_k_hat> cosh(2 sqrt(c) r_k)
///        - (lambda_x - 1) sinh(2 sqrt(c) r_k))`.
/// A zero orientation row scores zero.
pub fn mlr_score(x: &BallPoint, params: &LinearParams) -> Result<Vec<f64>> {
    if x.dim() != params.in_dim() {
        return Err(PoincareError::DimensionMismatch {
            expected: params.in_dim(),
            got: x.dim(),
        });
    }
    if x.curvature() != params.curvature() {
        return Err(PoincareError::CurvatureMismatch {
            left: params.curvature().get(),
            right: x.curvature().get(),
        });
    }
    let sc = x.curvature().sqrt();
    let lambda = x.lambda();
    let mut scores = Vec::with_capacity(params.out_dim());
    for (z, &r) in params.z().iter().zip(params.r()) {
        let zn = crate::numeric::norm(z);
        if zn == 0.0 {
            scores.push(0.0);
            continue;
        }
        let zu = unit(z);
        let inner = lambda * sc * dot(x.coords(), &zu);
        let arg = inner * cosh_capped(2.0 * sc * r) - (lambda - 1.0) * sinh_capped(2.0 * sc * r);
        scores.push(2.0 * zn / sc * asinh_capped(arg));
    }
    Ok(scores)
}

/// Unravel one `(z, r)` row into the bias point `q = exp_0(r z_hat)` and
/// the transported orientation `a = sech^2(sqrt(c) r) z` rooted at `q`.
pub fn transport_orientation(
    z: &[f64],
    r: f64,
    curvature: crate::ball::Curvature,
) -> Result<(TangentVector, BallPoint)> {
    let zu = unit(z);
    let q = exp_map_origin(curvature, &zu.iter().map(|u| r * u).collect::<Vec<_>>());
    let s = sech(curvature.sqrt() * r);
    let a = TangentVector::new(z.iter().map(|u| s * s * u).collect(), q.clone())?;
    Ok((a, q))
}

/// Class prediction: softmax probabilities over the scores, argmax with
/// ties broken toward the lowest index.
pub fn mlr_predict(x: &BallPoint, params: &LinearParams) -> Result<(usize, Vec<f64>)> {
    if params.out_dim() < 2 {
        return Err(PoincareError::Contract(
            "prediction needs at least two classes".into(),
        ));
    }
    let scores = mlr_score(x, params)?;
    let probs = softmax(&scores);
    let mut best = 0;
    for (k, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = k;
        }
    }
    Ok((best, probs))
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}
