//! Coordinate conversions among the Poincaré ball, hyperboloid and
//! Beltrami–Klein models, plus the three midpoint formulations that all
//! project to the same hyperbolic point.

use crate::ball::{mobius_add, mobius_scalar_mul, BallPoint, Curvature};
use crate::error::{PoincareError, Result};
use crate::numeric::{norm_sq, CompensatedSum, CompensatedVecSum};
use serde::{Deserialize, Serialize};

/// A point of the hyperboloid `c <h,h>_L = -1`, first coordinate time-like.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperboloidPoint {
    coords: Vec<f64>,
    curvature: Curvature,
}

impl HyperboloidPoint {
    pub fn new(coords: Vec<f64>, curvature: Curvature) -> Result<Self> {
        if coords.len() < 2 {
            return Err(PoincareError::Contract(
                "hyperboloid points need at least a time and one space coordinate".into(),
            ));
        }
        let p = Self { coords, curvature };
        let inner = p.lorentz_inner(&p);
        if p.coords[0] <= 0.0 || (curvature.get() * inner + 1.0).abs() > 1e-8 {
            return Err(PoincareError::Domain(format!(
                "point is not on the hyperboloid: c<h,h>_L = {}",
                curvature.get() * inner
            )));
        }
        Ok(p)
    }

    /// Apex `(1/sqrt(c), 0, ..., 0)`, the image of the ball origin.
    pub fn apex(space_dim: usize, curvature: Curvature) -> Self {
        let mut coords = vec![0.0; space_dim + 1];
        coords[0] = curvature.radius();
        Self { coords, curvature }
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    /// Time-like coordinate `z`.
    #[inline]
    pub fn time(&self) -> f64 {
        self.coords[0]
    }

    /// Space-like block `k`.
    #[inline]
    pub fn space(&self) -> &[f64] {
        &self.coords[1..]
    }

    /// Lorentzian inner product `<x,y>_L = -x0 y0 + sum_i xi yi`.
    pub fn lorentz_inner(&self, other: &Self) -> f64 {
        lorentz_inner(&self.coords, &other.coords)
    }
}

pub fn lorentz_inner(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = -a[0] * b[0];
    for (x, y) in a[1..].iter().zip(&b[1..]) {
        s += x * y;
    }
    s
}

/// A point of the Beltrami–Klein ball `c ||x||^2 < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct KleinPoint {
    coords: Vec<f64>,
    curvature: Curvature,
}

impl KleinPoint {
    pub fn new(coords: Vec<f64>, curvature: Curvature) -> Result<Self> {
        if curvature.get() * norm_sq(&coords) >= 1.0 {
            return Err(PoincareError::Domain(
                "point is outside the Klein ball".into(),
            ));
        }
        Ok(Self { coords, curvature })
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    /// Klein gamma factor `1 / sqrt(1 - c||n||^2)`.
    pub fn gamma(&self) -> f64 {
        1.0 / (1.0 - self.curvature.get() * norm_sq(&self.coords)).sqrt()
    }
}

/// Ball -> hyperboloid: `h = ((1/sqrt(c)) (1+c||b||^2)/(1-c||b||^2), 2b/(1-c||b||^2))`.
pub fn ball_to_hyperboloid(b: &BallPoint) -> HyperboloidPoint {
    let c = b.curvature().get();
    let b2 = norm_sq(b.coords());
    let denom = 1.0 - c * b2;
    let mut coords = Vec::with_capacity(b.dim() + 1);
    coords.push((1.0 + c * b2) / (denom * c.sqrt()));
    coords.extend(b.coords().iter().map(|x| 2.0 * x / denom));
    HyperboloidPoint {
        coords,
        curvature: b.curvature(),
    }
}

/// Hyperboloid -> ball: `b = k / (1 + sqrt(c) z)`.
pub fn hyperboloid_to_ball(h: &HyperboloidPoint) -> BallPoint {
    let sc = h.curvature().sqrt();
    let denom = 1.0 + sc * h.time();
    BallPoint::project(
        h.space().iter().map(|x| x / denom).collect(),
        h.curvature(),
    )
}

/// Ball -> Klein: `n = 2b / (1 + c||b||^2)`.
pub fn ball_to_klein(b: &BallPoint) -> KleinPoint {
    let c = b.curvature().get();
    let denom = 1.0 + c * norm_sq(b.coords());
    KleinPoint {
        coords: b.coords().iter().map(|x| 2.0 * x / denom).collect(),
        curvature: b.curvature(),
    }
}

/// Klein -> ball: `b = n / (1 + sqrt(1 - c||n||^2))`.
pub fn klein_to_ball(n: &KleinPoint) -> BallPoint {
    let c = n.curvature().get();
    let denom = 1.0 + (1.0 - c * norm_sq(n.coords())).max(0.0).sqrt();
    BallPoint::project(
        n.coords().iter().map(|x| x / denom).collect(),
        n.curvature(),
    )
}

/// Ball points paired with signed weights, the input of the gyromidpoint.
#[derive(Clone, Debug)]
pub struct WeightedPointSet {
    points: Vec<BallPoint>,
    weights: Vec<f64>,
}

impl WeightedPointSet {
    pub fn new(points: Vec<BallPoint>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(PoincareError::Contract(format!(
                "need equally many points and weights, got {} and {}",
                points.len(),
                weights.len()
            )));
        }
        let (c, dim) = (points[0].curvature(), points[0].dim());
        for p in &points[1..] {
            if p.dim() != dim {
                return Err(PoincareError::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            if p.curvature() != c {
                return Err(PoincareError::CurvatureMismatch {
                    left: c.get(),
                    right: p.curvature().get(),
                });
            }
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(PoincareError::Domain(
                "midpoint weights must not all be zero".into(),
            ));
        }
        Ok(Self { points, weights })
    }

    #[inline]
    pub fn points(&self) -> &[BallPoint] {
        &self.points
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn curvature(&self) -> Curvature {
        self.points[0].curvature()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }
}

/// Möbius gyromidpoint with signed weights:
/// `(1/2) (*) [ sum_i nu_i lambda_i b_i / sum_i |nu_i| (lambda_i - 1) ]`.
pub fn mobius_gyromidpoint(set: &WeightedPointSet) -> BallPoint {
    let dim = set.dim();
    let mut num = CompensatedVecSum::new(dim);
    let mut den = CompensatedSum::new();
    for (p, &w) in set.points().iter().zip(set.weights()) {
        let lambda = p.lambda();
        num.add_scaled(p.coords(), w * lambda);
        den.add(w.abs() * (lambda - 1.0));
    }
    let den = den.value();
    let under = BallPoint::project(
        num.value().iter().map(|x| x / den).collect(),
        set.curvature(),
    );
    mobius_scalar_mul(0.5, &under)
}

/// Einstein gyromidpoint in Klein coordinates; non-negative weights only.
pub fn einstein_gyromidpoint(points: &[KleinPoint], weights: &[f64]) -> Result<KleinPoint> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(PoincareError::Contract(
            "need equally many points and weights".into(),
        ));
    }
    if weights.iter().any(|w| *w < 0.0) {
        return Err(PoincareError::Domain(
            "Einstein gyromidpoint takes non-negative weights".into(),
        ));
    }
    if weights.iter().all(|w| *w == 0.0) {
        return Err(PoincareError::Domain(
            "midpoint weights must not all be zero".into(),
        ));
    }
    let c = points[0].curvature();
    let dim = points[0].coords().len();
    let mut num = CompensatedVecSum::new(dim);
    let mut den = CompensatedSum::new();
    for (p, &w) in points.iter().zip(weights) {
        let g = p.gamma();
        num.add_scaled(p.coords(), w * g);
        den.add(w * g);
    }
    let den = den.value();
    KleinPoint::new(num.value().iter().map(|x| x / den).collect(), c)
}

/// Lorentzian centroid: normalizes the weighted coordinate sum back onto
/// the hyperboloid; non-negative weights, time-like sum required.
pub fn lorentzian_centroid(
    points: &[HyperboloidPoint],
    weights: &[f64],
) -> Result<HyperboloidPoint> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(PoincareError::Contract(
            "need equally many points and weights".into(),
        ));
    }
    if weights.iter().any(|w| *w < 0.0) {
        return Err(PoincareError::Domain(
            "Lorentzian centroid takes non-negative weights".into(),
        ));
    }
    let c = points[0].curvature();
    let full = points[0].coords().len();
    let mut sum = CompensatedVecSum::new(full);
    for (p, &w) in points.iter().zip(weights) {
        sum.add_scaled(p.coords(), w);
    }
    let sum = sum.value();
    let inner = lorentz_inner(&sum, &sum);
    if inner >= 0.0 {
        return Err(PoincareError::Domain(
            "weighted sum is not time-like; centroid undefined".into(),
        ));
    }
    let scale = 1.0 / (c.sqrt() * inner.abs().sqrt());
    HyperboloidPoint::new(sum.iter().map(|x| x * scale).collect(), c)
}

/// Objective whose minimizer (for non-negative weights) is the Möbius
/// gyromidpoint: `sum_i nu_i lambda_{-m (+) b_i} || -m (+) b_i ||^2`.
pub fn gyrometric_objective(set: &WeightedPointSet, candidate: &BallPoint) -> Result<f64> {
    let mut total = CompensatedSum::new();
    for (p, &w) in set.points().iter().zip(set.weights()) {
        let d = mobius_add(&candidate.neg(), p)?;
        total.add(w * d.lambda() * norm_sq(d.coords()));
    }
    Ok(total.value())
}

/// One conformance record for midpoint implementations: curvature, the
/// weighted set and the expected Möbius gyromidpoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MidpointFixture {
    pub c: f64,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub expected_midpoint: Vec<f64>,
}

impl MidpointFixture {
    pub fn from_set(set: &WeightedPointSet) -> Self {
        let mid = mobius_gyromidpoint(set);
        Self {
            c: set.curvature().get(),
            points: set.points().iter().map(|p| p.coords().to_vec()).collect(),
            weights: set.weights().to_vec(),
            expected_midpoint: mid.coords().to_vec(),
        }
    }

    pub fn to_set(&self) -> Result<WeightedPointSet> {
        let c = Curvature::new(self.c)?;
        let points = self
            .points
            .iter()
            .map(|p| BallPoint::new(p.clone(), c))
            .collect::<Result<Vec<_>>>()?;
        WeightedPointSet::new(points, self.weights.clone())
    }

    /// Max coordinate error of the recomputed midpoint against the record.
    pub fn check(&self) -> Result<f64> {
        let mid = mobius_gyromidpoint(&self.to_set()?);
        Ok(mid
            .coords()
            .iter()
            .zip(&self.expected_midpoint)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Serialize fixtures as JSON lines.
pub fn write_fixtures<W: std::io::Write>(
    mut w: W,
    fixtures: &[MidpointFixture],
) -> std::io::Result<()> {
    for f in fixtures {
        serde_json::to_writer(&mut w, f)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Read JSON-lines fixtures.
pub fn read_fixtures<R: std::io::BufRead>(r: R) -> Result<Vec<MidpointFixture>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line.map_err(|e| PoincareError::Contract(format!("fixture read: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| PoincareError::Contract(format!("fixture parse: {e}")))?,
        );
    }
    Ok(out)
}
