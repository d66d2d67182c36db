//! Norm-preserving split and concatenation through the origin tangent
//! space, rescaled by `beta_n = B(n/2, 1/2)`.

use crate::ball::{exp_map_origin, log_map_origin, BallPoint, Curvature};
use crate::error::{PoincareError, Result};
use statrs::function::gamma::ln_gamma;

/// `beta_n = B(n/2, 1/2)`, evaluated through log-gamma so large `n` cannot
/// overflow the gamma function.
pub fn beta_coefficient(n: usize) -> f64 {
    assert!(n >= 1, "beta coefficient needs n >= 1");
    let n = n as f64;
    (ln_gamma(n / 2.0) + ln_gamma(0.5) - ln_gamma((n + 1.0) / 2.0)).exp()
}

/// Table of `beta_n` values for repeated lookups.
#[derive(Clone, Debug)]
pub struct BetaCoefficients {
    table: Vec<f64>,
}

impl BetaCoefficients {
    pub fn up_to(max_n: usize) -> Self {
        Self {
            table: (1..=max_n).map(beta_coefficient).collect(),
        }
    }

    pub fn get(&self, n: usize) -> f64 {
        self.table[n - 1]
    }
}

/// Split `x` in the origin tangent space into pieces of the given sizes,
/// scaling each piece by `beta_{n_i} / beta_n`.
pub fn beta_split(x: &BallPoint, sizes: &[usize]) -> Result<Vec<BallPoint>> {
    let n = x.dim();
    if sizes.is_empty() || sizes.iter().any(|&s| s == 0) {
        return Err(PoincareError::Contract(
            "split sizes must be positive".into(),
        ));
    }
    if sizes.iter().sum::<usize>() != n {
        return Err(PoincareError::Contract(format!(
            "split sizes sum to {}, input dimension is {n}",
            sizes.iter().sum::<usize>()
        )));
    }
    let v = log_map_origin(x);
    let beta_n = beta_coefficient(n);
    let mut out = Vec::with_capacity(sizes.len());
    let mut offset = 0;
    for &ni in sizes {
        let scale = beta_coefficient(ni) / beta_n;
        let piece: Vec<f64> = v[offset..offset + ni].iter().map(|u| scale * u).collect();
        out.push(exp_map_origin(x.curvature(), &piece));
        offset += ni;
    }
    Ok(out)
}

/// Inverse of [`beta_split`]: rescale each tangent piece by
/// `beta_n / beta_{n_i}`, concatenate, and map back to the ball.
pub fn beta_concat(xs: &[BallPoint]) -> Result<BallPoint> {
    if xs.is_empty() {
        return Err(PoincareError::Domain(
            "cannot concatenate an empty list".into(),
        ));
    }
    let c: Curvature = xs[0].curvature();
    if xs.iter().any(|x| x.curvature() != c) {
        return Err(PoincareError::CurvatureMismatch {
            left: c.get(),
            right: xs.iter().find(|x| x.curvature() != c).unwrap().curvature().get(),
        });
    }
    let n: usize = xs.iter().map(|x| x.dim()).sum();
    let beta_n = beta_coefficient(n);
    let mut v = Vec::with_capacity(n);
    for x in xs {
        let scale = beta_n / beta_coefficient(x.dim());
        v.extend(log_map_origin(x).iter().map(|u| scale * u));
    }
    Ok(exp_map_origin(c, &v))
}
