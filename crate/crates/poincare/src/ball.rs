//! Möbius gyrovector algebra and Riemannian primitives on the Poincaré ball.
//!
//! The ball `B^n_c = { x in R^n : c ||x||^2 < 1 }` of curvature `-c` carries
//! the conformal metric `(lambda_x)^2 I` with `lambda_x = 2 / (1 - c||x||^2)`.
//! Everything here is a pure function; points are immutable once built and
//! every producing operation re-projects onto the stability-clamped ball
//! (see [`crate::numeric`]).

use crate::error::{PoincareError, Result};
use crate::numeric::{
    artanh, asinh_capped, dot, norm, norm_sq, BOUNDARY_EPS,
};
use serde::{Deserialize, Serialize};

/// Positive curvature magnitude `c`; the sectional curvature is `-c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(PoincareError::Domain(format!(
                "curvature must be finite and positive, got {c}"
            )));
        }
        Ok(Self(c))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn sqrt(self) -> f64 {
        self.0.sqrt()
    }

    /// Euclidean radius of the ball, `1 / sqrt(c)`.
    #[inline]
    pub fn radius(self) -> f64 {
        1.0 / self.sqrt()
    }

    /// Largest Euclidean norm a produced point may carry.
    #[inline]
    pub fn max_norm(self) -> f64 {
        (1.0 - BOUNDARY_EPS) / self.sqrt()
    }
}

/// A point of the Poincaré ball; the universal feature / gyrovector type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    coords: Vec<f64>,
    curvature: Curvature,
}

impl BallPoint {
    /// Validating constructor: the coordinates must already lie strictly
    /// inside the ball.
    pub fn new(coords: Vec<f64>, curvature: Curvature) -> Result<Self> {
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(PoincareError::NonFinite("ball point coordinates".into()));
        }
        if curvature.get() * norm_sq(&coords) >= 1.0 {
            return Err(PoincareError::Domain(format!(
                "point of norm {} is outside the ball of radius {}",
                norm(&coords),
                curvature.radius()
            )));
        }
        Ok(Self { coords, curvature })
    }

    /// Clamping constructor: projects onto the stability-clamped ball.
    pub fn project(coords: Vec<f64>, curvature: Curvature) -> Self {
        let mut coords = coords;
        let n = norm(&coords);
        let max = curvature.max_norm();
        if n > max {
            let s = max / n;
            for x in &mut coords {
                *x *= s;
            }
        }
        Self { coords, curvature }
    }

    pub fn origin(dim: usize, curvature: Curvature) -> Self {
        Self {
            coords: vec![0.0; dim],
            curvature,
        }
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    /// Gyrovector additive inverse (coordinate negation).
    pub fn neg(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|x| -x).collect(),
            curvature: self.curvature,
        }
    }

    /// Conformal and gamma factors at this point.
    pub fn conformal(&self) -> ConformalScale {
        let c = self.curvature.get();
        let denom = 1.0 - c * norm_sq(&self.coords);
        ConformalScale {
            lambda: 2.0 / denom,
            gamma: 1.0 / denom.sqrt(),
        }
    }

    /// Conformal factor `lambda_x = 2 / (1 - c||x||^2)`.
    #[inline]
    pub fn lambda(&self) -> f64 {
        self.conformal().lambda
    }
}

/// Pair `(lambda_x, gamma_x)` with the identity `lambda = 2 gamma^2`.
#[derive(Clone, Copy, Debug)]
pub struct ConformalScale {
    pub lambda: f64,
    pub gamma: f64,
}

/// A tangent vector, carried together with its base point.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    coords: Vec<f64>,
    base: BallPoint,
}

impl TangentVector {
    pub fn new(coords: Vec<f64>, base: BallPoint) -> Result<Self> {
        if coords.len() != base.dim() {
            return Err(PoincareError::DimensionMismatch {
                expected: base.dim(),
                got: coords.len(),
            });
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(PoincareError::NonFinite("tangent coordinates".into()));
        }
        Ok(Self { coords, base })
    }

    /// Tangent vector at the origin of the given curvature/dimension.
    pub fn at_origin(coords: Vec<f64>, curvature: Curvature) -> Result<Self> {
        let dim = coords.len();
        Self::new(coords, BallPoint::origin(dim, curvature))
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn base(&self) -> &BallPoint {
        &self.base
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    /// Riemannian norm `lambda_base * ||v||`.
    pub fn riemannian_norm(&self) -> f64 {
        self.base.lambda() * self.norm()
    }
}

fn check_pair(x: &BallPoint, y: &BallPoint) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(PoincareError::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    if x.curvature() != y.curvature() {
        return Err(PoincareError::CurvatureMismatch {
            left: x.curvature().get(),
            right: y.curvature().get(),
        });
    }
    Ok(())
}

/// Möbius addition `x (+) y`, the noncommutative and nonassociative
/// gyrogroup addition.
pub fn mobius_add(x: &BallPoint, y: &BallPoint) -> Result<BallPoint> {
    check_pair(x, y)?;
    let c = x.curvature().get();
    let (xs, ys) = (x.coords(), y.coords());
    let x2 = norm_sq(xs);
    let y2 = norm_sq(ys);
    let xy = dot(xs, ys);
    let denom = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
    let cx = (1.0 + 2.0 * c * xy + c * y2) / denom;
    let cy = (1.0 - c * x2) / denom;
    let coords = xs
        .iter()
        .zip(ys)
        .map(|(a, b)| cx * a + cy * b)
        .collect();
    Ok(BallPoint::project(coords, x.curvature()))
}

/// `x (-) y = x (+) (-y)`.
pub fn mobius_sub(x: &BallPoint, y: &BallPoint) -> Result<BallPoint> {
    mobius_add(x, &y.neg())
}

/// Möbius coaddition `x [+] y`; commutative, evaluated through the gamma
/// form so both argument orders run the same arithmetic.
pub fn mobius_coadd(x: &BallPoint, y: &BallPoint) -> Result<BallPoint> {
    check_pair(x, y)?;
    let gx2 = {
        let g = x.conformal().gamma;
        g * g
    };
    let gy2 = {
        let g = y.conformal().gamma;
        g * g
    };
    let denom = gx2 + gy2 - 1.0;
    let coords = x
        .coords()
        .iter()
        .zip(y.coords())
        .map(|(a, b)| (gx2 * a + gy2 * b) / denom)
        .collect();
    Ok(BallPoint::project(coords, x.curvature()))
}

/// Möbius scalar multiplication `r (*) x = exp_0(r log_0(x))`.
pub fn mobius_scalar_mul(r: f64, x: &BallPoint) -> BallPoint {
    let sc = x.curvature().sqrt();
    let n = x.norm();
    if n == 0.0 {
        return x.clone();
    }
    let t = (r * artanh(sc * n)).tanh() / sc;
    let coords = x.coords().iter().map(|v| t * v / n).collect();
    BallPoint::project(coords, x.curvature())
}

/// Gyration `gyr[x, y] z`, extended to an invertible linear map of `R^n`.
pub fn gyration(x: &BallPoint, y: &BallPoint, z: &[f64]) -> Result<Vec<f64>> {
    check_pair(x, y)?;
    if z.len() != x.dim() {
        return Err(PoincareError::DimensionMismatch {
            expected: x.dim(),
            got: z.len(),
        });
    }
    let c = x.curvature().get();
    let (xs, ys) = (x.coords(), y.coords());
    let x2 = norm_sq(xs);
    let y2 = norm_sq(ys);
    let xy = dot(xs, ys);
    let xz = dot(xs, z);
    let yz = dot(ys, z);
    let denom = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
    let cx = c * xz * y2 - yz * (1.0 + 2.0 * c * xy);
    let cy = c * yz * x2 + xz;
    Ok(z
        .iter()
        .zip(xs.iter().zip(ys))
        .map(|(zi, (xi, yi))| zi - 2.0 * c * (cx * xi + cy * yi) / denom)
        .collect())
}

/// Exponential map `exp_x(v)`; requires `v` to be rooted at `base`.
pub fn exp_map(base: &BallPoint, v: &TangentVector) -> Result<BallPoint> {
    if v.base() != base {
        return Err(PoincareError::Contract(
            "tangent vector is not rooted at the given base point".into(),
        ));
    }
    let sc = base.curvature().sqrt();
    let vn = v.norm();
    if vn == 0.0 {
        return Ok(base.clone());
    }
    let lambda = base.lambda();
    let t = (sc * lambda * vn / 2.0).tanh() / sc;
    let step = BallPoint::project(
        v.coords().iter().map(|u| t * u / vn).collect(),
        base.curvature(),
    );
    mobius_add(base, &step)
}

/// Exponential map at the origin.
pub fn exp_map_origin(curvature: Curvature, v: &[f64]) -> BallPoint {
    let sc = curvature.sqrt();
    let vn = norm(v);
    if vn == 0.0 {
        return BallPoint::origin(v.len(), curvature);
    }
    let t = (sc * vn).tanh() / sc;
    BallPoint::project(v.iter().map(|u| t * u / vn).collect(), curvature)
}

/// Logarithmic map `log_x(y)`; inverse of [`exp_map`].
pub fn log_map(base: &BallPoint, y: &BallPoint) -> Result<TangentVector> {
    check_pair(base, y)?;
    let d = mobius_add(&base.neg(), y)?;
    let dn = d.norm();
    if dn == 0.0 {
        return TangentVector::new(vec![0.0; base.dim()], base.clone());
    }
    let sc = base.curvature().sqrt();
    let scale = 2.0 / (sc * base.lambda()) * artanh(sc * dn) / dn;
    TangentVector::new(d.coords().iter().map(|u| scale * u).collect(), base.clone())
}

/// Logarithmic map at the origin, returned as bare coordinates.
pub fn log_map_origin(x: &BallPoint) -> Vec<f64> {
    let sc = x.curvature().sqrt();
    let n = x.norm();
    if n == 0.0 {
        return vec![0.0; x.dim()];
    }
    let scale = artanh(sc * n) / (sc * n);
    x.coords().iter().map(|u| scale * u).collect()
}

/// Geodesic distance `d_c(x, y) = (2/sqrt(c)) artanh(sqrt(c) ||-x (+) y||)`.
pub fn distance(x: &BallPoint, y: &BallPoint) -> Result<f64> {
    check_pair(x, y)?;
    let sc = x.curvature().sqrt();
    Ok(2.0 / sc * artanh(sc * addition_norm(&x.neg(), y)?))
}

/// Euclidean norm of the Möbius sum in closed form; symmetric in `x, y`.
pub fn addition_norm(x: &BallPoint, y: &BallPoint) -> Result<f64> {
    check_pair(x, y)?;
    let c = x.curvature().get();
    let x2 = norm_sq(x.coords());
    let y2 = norm_sq(y.coords());
    let xy = dot(x.coords(), y.coords());
    let num = x2 + 2.0 * xy + y2;
    let denom = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
    Ok((num / denom).max(0.0).sqrt())
}

/// Distance from `x` to the Poincaré hyperplane through `p` orthogonal to
/// the tangent orientation `a` at `p`.
pub fn dist_to_hyperplane(x: &BallPoint, p: &BallPoint, a: &TangentVector) -> Result<f64> {
    check_pair(x, p)?;
    if a.base() != p {
        return Err(PoincareError::Contract(
            "hyperplane orientation is not rooted at p".into(),
        ));
    }
    let an = a.norm();
    if an == 0.0 {
        return Err(PoincareError::Domain(
            "hyperplane orientation must be nonzero".into(),
        ));
    }
    let c = x.curvature().get();
    let sc = c.sqrt();
    let d = mobius_add(&p.neg(), x)?;
    let inner = dot(d.coords(), a.coords());
    let arg = 2.0 * sc * inner.abs() / ((1.0 - c * norm_sq(d.coords())) * an);
    Ok(asinh_capped(arg) / sc)
}

/// Parallel transport `P_{x -> y}(v) = (lambda_x / lambda_y) gyr[y, -x] v`.
pub fn parallel_transport(
    x: &BallPoint,
    y: &BallPoint,
    v: &TangentVector,
) -> Result<TangentVector> {
    check_pair(x, y)?;
    if v.base() != x {
        return Err(PoincareError::Contract(
            "tangent vector is not rooted at the transport source".into(),
        ));
    }
    let ratio = x.lambda() / y.lambda();
    let g = gyration(y, &x.neg(), v.coords())?;
    TangentVector::new(g.iter().map(|u| ratio * u).collect(), y.clone())
}
