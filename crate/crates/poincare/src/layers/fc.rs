//! Fully connected layer whose output coordinates are signed distances to
//! the axis hyperplanes of the output ball.

use crate::ball::BallPoint;
use crate::error::Result;
use crate::layers::mlr::mlr_score;
use crate::layers::params::LinearParams;
use crate::numeric::{asinh_capped, norm_sq, sinh_capped};

/// `y = w / (1 + sqrt(1 + c ||w||^2))` with
/// `w_k = sinh(sqrt(c) v_k(x)) / sqrt(c)`; always strictly inside the ball.
pub fn poincare_fc(x: &BallPoint, params: &LinearParams) -> Result<BallPoint> {
    let scores = mlr_score(x, params)?;
    let c = params.curvature().get();
    let sc = c.sqrt();
    let w: Vec<f64> = scores.iter().map(|v| sinh_capped(sc * v) / sc).collect();
    let denom = 1.0 + (1.0 + c * norm_sq(&w)).sqrt();
    Ok(BallPoint::project(
        w.iter().map(|u| u / denom).collect(),
        params.curvature(),
    ))
}

/// Signed distance from `y` to the hyperplane through the origin orthogonal
/// to the `k`-th axis: `(1/sqrt(c)) asinh(2 sqrt(c) y_k / (1 - c ||y||^2))`.
/// For the FC output this recovers the score vector.
pub fn signed_axis_distances(y: &BallPoint) -> Vec<f64> {
    let c = y.curvature().get();
    let sc = c.sqrt();
    let denom = 1.0 - c * norm_sq(y.coords());
    y.coords()
        .iter()
        .map(|&yk| asinh_capped(2.0 * sc * yk / denom) / sc)
        .collect()
}
