//! Scalar helpers and the numerical-stability policy.
//!
//! All ball-producing operations project onto a closed ball of radius
//! `(1 - BOUNDARY_EPS) / sqrt(c)`; `artanh` arguments are kept strictly
//! inside (-1, 1) and `sinh`/`asinh` arguments are capped so that no
//! intermediate overflows in f64.

/// Relative gap kept between any produced point and the ball boundary.
pub const BOUNDARY_EPS: f64 = 1e-5;

/// Half-width by which `artanh` arguments are pulled inside (-1, 1).
pub const ATANH_EPS: f64 = 1e-15;

/// Cap on the magnitude of `sinh`/`cosh`/`asinh` arguments.
pub const HYP_ARG_MAX: f64 = 85.0;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// Unit vector convention: the unit vector of the zero vector is zero.
pub fn unit(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    if n == 0.0 {
        vec![0.0; a.len()]
    } else {
        a.iter().map(|x| x / n).collect()
    }
}

/// artanh with the argument clamped to [-1 + ATANH_EPS, 1 - ATANH_EPS].
#[inline]
pub fn artanh(x: f64) -> f64 {
    x.clamp(-1.0 + ATANH_EPS, 1.0 - ATANH_EPS).atanh()
}

/// sinh with the argument capped at +-HYP_ARG_MAX.
#[inline]
pub fn sinh_capped(x: f64) -> f64 {
    x.clamp(-HYP_ARG_MAX, HYP_ARG_MAX).sinh()
}

/// cosh with the argument capped at +-HYP_ARG_MAX.
#[inline]
pub fn cosh_capped(x: f64) -> f64 {
    x.clamp(-HYP_ARG_MAX, HYP_ARG_MAX).cosh()
}

/// Cap on `asinh` argument magnitude; large enough to never distort a
/// value that survives the boundary clamp, small enough that x*x stays
/// finite inside `asinh`.
pub const ASINH_ARG_MAX: f64 = 1e150;

#[inline]
pub fn asinh_capped(x: f64) -> f64 {
    x.clamp(-ASINH_ARG_MAX, ASINH_ARG_MAX).asinh()
}

#[inline]
pub fn sech(x: f64) -> f64 {
    1.0 / cosh_capped(x)
}

/// Neumaier compensated summation; keeps midpoint sums stable enough for
/// permutation-invariance checks at 1e-12.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated accumulator for a vector sum.
#[derive(Clone, Debug)]
pub struct CompensatedVecSum {
    terms: Vec<CompensatedSum>,
}

impl CompensatedVecSum {
    pub fn new(dim: usize) -> Self {
        Self {
            terms: vec![CompensatedSum::new(); dim],
        }
    }

    #[inline]
    pub fn add_scaled(&mut self, v: &[f64], scale: f64) {
        debug_assert_eq!(v.len(), self.terms.len());
        for (acc, x) in self.terms.iter_mut().zip(v) {
            acc.add(scale * x);
        }
    }

    pub fn value(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.value()).collect()
    }
}
