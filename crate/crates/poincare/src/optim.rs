//! Parameter initialization and the two optimizers: adaptive-moment
//! updates for Euclidean (tangent-at-origin) parameters and Riemannian
//! updates for ball-resident parameters.

use crate::ball::{exp_map, parallel_transport, BallPoint, Curvature, TangentVector};
use crate::error::{PoincareError, Result};
use crate::layers::params::LinearParams;
use crate::numeric::unit;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// What to initialize and with which fan values.
#[derive(Clone, Debug)]
pub enum InitSpec {
    /// MLR head: `Z ~ N(0, 1/n)`, `r = 0`.
    Mlr { in_dim: usize, classes: usize },
    /// FC layer: `Z ~ N(0, 1/(2 n m))`, `r = 0`.
    Fc { in_dim: usize, out_dim: usize },
    /// Convolution: `Z ~ N(0, 1/(2 n K m))`, `r = 0`.
    Conv {
        in_channels: usize,
        kernel: usize,
        out_channels: usize,
    },
    /// Ball embeddings: uniform direction, norm drawn inside a ball of
    /// radius `gain / sqrt(c)` (`gain` is the embedding scale epsilon_E,
    /// default 1e-2).
    Embedding { dim: usize, count: usize, gain: f64 },
}

#[derive(Clone, Debug)]
pub enum Initialized {
    Linear(LinearParams),
    Embedding(Vec<BallPoint>),
}

impl Initialized {
    pub fn into_linear(self) -> LinearParams {
        match self {
            Initialized::Linear(p) => p,
            Initialized::Embedding(_) => panic!("embedding initialization is not a linear layer"),
        }
    }

    pub fn into_embedding(self) -> Vec<BallPoint> {
        match self {
            Initialized::Embedding(p) => p,
            Initialized::Linear(_) => panic!("linear initialization is not an embedding"),
        }
    }
}

/// Deterministic parameter initialization from a seed.
pub fn init_params(spec: &InitSpec, curvature: Curvature, seed: u64) -> Result<Initialized> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian_linear = |rng: &mut ChaCha8Rng, n: usize, m: usize, std: f64| {
        let normal = Normal::new(0.0, std).expect("positive std");
        let z = (0..m)
            .map(|_| (0..n).map(|_| normal.sample(rng)).collect())
            .collect();
        LinearParams::new(z, vec![0.0; m], curvature)
    };
    match *spec {
        InitSpec::Mlr { in_dim, classes } => {
            if in_dim == 0 || classes == 0 {
                return Err(PoincareError::Contract("fan values must be positive".into()));
            }
            let std = (in_dim as f64).powf(-0.5);
            Ok(Initialized::Linear(gaussian_linear(
                &mut rng, in_dim, classes, std,
            )?))
        }
        InitSpec::Fc { in_dim, out_dim } => {
            if in_dim == 0 || out_dim == 0 {
                return Err(PoincareError::Contract("fan values must be positive".into()));
            }
            let std = (2.0 * in_dim as f64 * out_dim as f64).powf(-0.5);
            Ok(Initialized::Linear(gaussian_linear(
                &mut rng, in_dim, out_dim, std,
            )?))
        }
        InitSpec::Conv {
            in_channels,
            kernel,
            out_channels,
        } => {
            if in_channels == 0 || kernel == 0 || out_channels == 0 {
                return Err(PoincareError::Contract("fan values must be positive".into()));
            }
            let std =
                (2.0 * in_channels as f64 * kernel as f64 * out_channels as f64).powf(-0.5);
            Ok(Initialized::Linear(gaussian_linear(
                &mut rng,
                in_channels * kernel,
                out_channels,
                std,
            )?))
        }
        InitSpec::Embedding { dim, count, gain } => {
            if !(gain > 0.0) {
                return Err(PoincareError::Domain("embedding gain must be positive".into()));
            }
            let normal = Normal::new(0.0, 1.0).unwrap();
            let radius = gain / curvature.sqrt();
            let points = (0..count)
                .map(|_| {
                    let dir: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
                    let u: f64 = rng.gen_range(0.0..1.0f64);
                    let r = radius * u.powf(1.0 / dim as f64);
                    BallPoint::project(unit(&dir).iter().map(|d| d * r).collect(), curvature)
                })
                .collect();
            Ok(Initialized::Embedding(points))
        }
    }
}

/// Shared adaptive-moment hyperparameters.
#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// Flat-parameter adaptive-moment optimizer.
#[derive(Clone, Debug)]
pub struct EuclideanAdam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl EuclideanAdam {
    pub fn new(cfg: AdamConfig, len: usize) -> Self {
        Self {
            cfg,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn state(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    /// Standard bias-corrected update in place; rejects non-finite
    /// gradients before touching any state.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(PoincareError::DimensionMismatch {
                expected: self.m.len(),
                got: grads.len(),
            });
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(PoincareError::NonFinite("gradient in optimizer step".into()));
        }
        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - self.cfg.beta1.powf(t);
        let bc2 = 1.0 - self.cfg.beta2.powf(t);
        for i in 0..params.len() {
            self.m[i] = self.cfg.beta1 * self.m[i] + (1.0 - self.cfg.beta1) * grads[i];
            self.v[i] = self.cfg.beta2 * self.v[i] + (1.0 - self.cfg.beta2) * grads[i] * grads[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.cfg.lr * mhat / (vhat.sqrt() + self.cfg.eps);
        }
        Ok(())
    }
}

/// Moment handling of the Riemannian optimizer.
#[derive(Clone, Copy, Debug)]
pub enum MomentConfig {
    /// Pure Riemannian gradient descent: `x <- exp_x(-lr * grad / lambda^2)`.
    Plain,
    /// Adaptive moments: first moment is a tangent vector transported to
    /// each new base point, second moment is the squared Riemannian
    /// gradient norm per point (row-wise adaptivity).
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

/// Optimizer state for a group of ball-resident points.
#[derive(Clone, Debug)]
pub struct RiemannianOptimizer {
    lr: f64,
    moments: MomentConfig,
    first: Vec<Vec<f64>>,
    second: Vec<f64>,
    step: u64,
}

impl RiemannianOptimizer {
    pub fn new(lr: f64, moments: MomentConfig, points: &[BallPoint]) -> Self {
        Self {
            lr,
            moments,
            first: points.iter().map(|p| vec![0.0; p.dim()]).collect(),
            second: vec![0.0; points.len()],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update of every point given ambient Euclidean gradients.
    pub fn step(&mut self, points: &mut [BallPoint], grads: &[Vec<f64>]) -> Result<()> {
        if points.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(PoincareError::DimensionMismatch {
                expected: self.first.len(),
                got: grads.len(),
            });
        }
        if grads.iter().flatten().any(|g| !g.is_finite()) {
            return Err(PoincareError::NonFinite("gradient in optimizer step".into()));
        }
        self.step += 1;
        for (i, point) in points.iter_mut().enumerate() {
            let lambda = point.lambda();
            // Riemannian gradient: metric inverse rescaling of the
            // ambient gradient
            let rgrad: Vec<f64> = grads[i].iter().map(|g| g / (lambda * lambda)).collect();
            let direction: Vec<f64> = match self.moments {
                MomentConfig::Plain => rgrad,
                MomentConfig::Adam { beta1, beta2, eps } => {
                    let t = self.step as f64;
                    for (m, g) in self.first[i].iter_mut().zip(&rgrad) {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                    }
                    let g2 = crate::numeric::norm_sq(&rgrad);
                    self.second[i] = beta2 * self.second[i] + (1.0 - beta2) * g2;
                    let bc1 = 1.0 - beta1.powf(t);
                    let bc2 = 1.0 - beta2.powf(t);
                    let denom = (self.second[i] / bc2).sqrt() + eps;
                    self.first[i].iter().map(|m| m / bc1 / denom).collect()
                }
            };
            let v = TangentVector::new(
                direction.iter().map(|d| -self.lr * d).collect(),
                point.clone(),
            )?;
            let new_point = exp_map(point, &v)?;
            if let MomentConfig::Adam { .. } = self.moments {
                let m = TangentVector::new(self.first[i].clone(), point.clone())?;
                self.first[i] = parallel_transport(point, &new_point, &m)?
                    .coords()
                    .to_vec();
            }
            *point = new_point;
        }
        Ok(())
    }
}
