//! Hyperbolic operations composed from tape primitives, mirroring the
//! direct implementations closely enough for dual-path checks at 1e-12.

use crate::autodiff::{Tape, Var};
use crate::ball::Curvature;
use crate::error::{PoincareError, Result};
use crate::layers::beta::beta_coefficient;
use crate::layers::params::{Activation, Similarity};

/// Boundary projection: `x * clamp(max_norm / ||x||, 0, 1)`.
pub fn project(t: &mut Tape, c: Curvature, x: Var) -> Var {
    let n = t.norm(x);
    let max = t.scalar_const(c.max_norm());
    let raw = t.div(max, n);
    let s = t.clamp(raw, 0.0, 1.0);
    t.scale(s, x)
}

/// Conformal factor `lambda_x = 2 / (1 - c ||x||^2)`.
pub fn lambda(t: &mut Tape, c: Curvature, x: Var) -> Var {
    let x2 = t.dot(x, x);
    let cc = t.scalar_const(c.get());
    let cx2 = t.mul(cc, x2);
    let one = t.scalar_const(1.0);
    let denom = t.sub(one, cx2);
    let two = t.scalar_const(2.0);
    t.div(two, denom)
}

/// Möbius addition on coordinates.
pub fn mobius_add(t: &mut Tape, c: Curvature, x: Var, y: Var) -> Var {
    let cval = c.get();
    let x2 = t.dot(x, x);
    let y2 = t.dot(y, y);
    let xy = t.dot(x, y);
    let one = t.scalar_const(1.0);
    let two_c = t.scalar_const(2.0 * cval);
    let cc = t.scalar_const(cval);
    let c2 = t.scalar_const(cval * cval);

    let two_c_xy = t.mul(two_c, xy);
    let c_y2 = t.mul(cc, y2);
    let c_x2 = t.mul(cc, x2);
    let x2y2 = t.mul(x2, y2);
    let c2_x2y2 = t.mul(c2, x2y2);

    let a = t.add(one, two_c_xy);
    let num_x = t.add(a, c_y2);
    let num_y = t.sub(one, c_x2);
    let denom = t.add(a, c2_x2y2);

    let coef_x = t.div(num_x, denom);
    let coef_y = t.div(num_y, denom);
    let sx = t.scale(coef_x, x);
    let sy = t.scale(coef_y, y);
    let sum = t.add(sx, sy);
    project(t, c, sum)
}

pub fn mobius_neg(t: &mut Tape, x: Var) -> Var {
    t.neg(x)
}

/// Denominator guard for the `f(||x||) / ||x||` pattern: adding the
/// smallest normal f64 is exact for any normal magnitude but turns 0/0
/// into 0 at the origin, matching the direct paths' zero-vector branch.
fn guard_denominator(t: &mut Tape, arg: Var) -> Var {
    let tiny = t.scalar_const(f64::MIN_POSITIVE);
    t.add(arg, tiny)
}

/// exp map at the origin: `tanh(sqrt(c) ||v||) / (sqrt(c) ||v||) * v`.
pub fn exp0(t: &mut Tape, c: Curvature, v: Var) -> Var {
    let sc = t.scalar_const(c.sqrt());
    let n = t.norm(v);
    let arg = t.mul(sc, n);
    let th = t.tanh(arg);
    let denom = guard_denominator(t, arg);
    let factor = t.div(th, denom);
    let scaled = t.scale(factor, v);
    project(t, c, scaled)
}

/// log map at the origin: `artanh(sqrt(c) ||x||) / (sqrt(c) ||x||) * x`.
pub fn log0(t: &mut Tape, c: Curvature, x: Var) -> Var {
    let sc = t.scalar_const(c.sqrt());
    let n = t.norm(x);
    let arg = t.mul(sc, n);
    let ath = t.artanh_guarded(arg);
    let denom = guard_denominator(t, arg);
    let factor = t.div(ath, denom);
    t.scale(factor, x)
}

/// Geodesic distance `(2 / sqrt(c)) artanh(sqrt(c) || -x (+) y ||)`.
pub fn distance(t: &mut Tape, c: Curvature, x: Var, y: Var) -> Var {
    let nx = t.neg(x);
    let diff = mobius_add(t, c, nx, y);
    let n = t.norm(diff);
    let sc = t.scalar_const(c.sqrt());
    let arg = t.mul(sc, n);
    let ath = t.artanh_guarded(arg);
    let two_over = t.scalar_const(2.0 / c.sqrt());
    t.mul(two_over, ath)
}

/// One MLR score row; assumes a nonzero orientation.
pub fn mlr_score_row(t: &mut Tape, c: Curvature, x: Var, z: Var, r: Var) -> Var {
    let sc = c.sqrt();
    let zn = t.norm(z);
    let lam = lambda(t, c, x);
    let xz = t.dot(x, z);
    let inner_raw = t.div(xz, zn);
    let sc_const = t.scalar_const(sc);
    let inner_scaled = t.mul(sc_const, inner_raw);
    let inner = t.mul(lam, inner_scaled);

    let two_sc = t.scalar_const(2.0 * sc);
    let r2 = t.mul(two_sc, r);
    let ch = t.cosh_capped(r2);
    let sh = t.sinh_capped(r2);
    let one = t.scalar_const(1.0);
    let lam_m1 = t.sub(lam, one);
    let term1 = t.mul(inner, ch);
    let term2 = t.mul(lam_m1, sh);
    let arg = t.sub(term1, term2);
    let ash = t.asinh_capped(arg);
    let prefactor = t.scalar_const(2.0 / sc);
    let pz = t.mul(prefactor, zn);
    t.mul(pz, ash)
}

/// Full score vector as one concatenated Var.
pub fn mlr_score(t: &mut Tape, c: Curvature, x: Var, z: &[Var], r: &[Var]) -> Var {
    let rows: Vec<Var> = z
        .iter()
        .zip(r)
        .map(|(&zk, &rk)| mlr_score_row(t, c, x, zk, rk))
        .collect();
    t.concat(&rows)
}

/// FC layer: `w_k = sinh(sqrt(c) v_k)/sqrt(c)`, `y = w / (1 + sqrt(1 + c||w||^2))`.
pub fn poincare_fc(t: &mut Tape, c: Curvature, x: Var, z: &[Var], r: &[Var]) -> Var {
    let v = mlr_score(t, c, x, z, r);
    let sc = t.scalar_const(c.sqrt());
    let sv = t.scale(sc, v);
    let sh = t.sinh_capped(sv);
    let inv_sc = t.scalar_const(1.0 / c.sqrt());
    let w = t.scale(inv_sc, sh);
    let w2 = t.dot(w, w);
    let cc = t.scalar_const(c.get());
    let cw2 = t.mul(cc, w2);
    let one = t.scalar_const(1.0);
    let arg = t.add(one, cw2);
    let root = t.sqrt(arg);
    let denom = t.add(one, root);
    let inv = t.div(one, denom);
    let y = t.scale(inv, w);
    project(t, c, y)
}

/// beta-split through the origin tangent space.
pub fn beta_split(t: &mut Tape, c: Curvature, x: Var, sizes: &[usize]) -> Vec<Var> {
    let v = log0(t, c, x);
    let n: usize = sizes.iter().sum();
    let beta_n = beta_coefficient(n);
    let mut out = Vec::with_capacity(sizes.len());
    let mut offset = 0;
    for &ni in sizes {
        let piece = t.slice(v, offset, ni);
        let s = t.scalar_const(beta_coefficient(ni) / beta_n);
        let scaled = t.scale(s, piece);
        out.push(exp0(t, c, scaled));
        offset += ni;
    }
    out
}

/// beta-concatenation through the origin tangent space.
pub fn beta_concat(t: &mut Tape, c: Curvature, parts: &[Var]) -> Var {
    let n: usize = parts.iter().map(|&p| t.value(p).len()).sum();
    let beta_n = beta_coefficient(n);
    let scaled: Vec<Var> = parts
        .iter()
        .map(|&p| {
            let ni = t.value(p).len();
            let v = log0(t, c, p);
            let s = t.scalar_const(beta_n / beta_coefficient(ni));
            t.scale(s, v)
        })
        .collect();
    let v = t.concat(&scaled);
    exp0(t, c, v)
}

/// Signed-weight gyromidpoint.
pub fn gyromidpoint(t: &mut Tape, c: Curvature, points: &[Var], weights: &[Var]) -> Var {
    assert_eq!(points.len(), weights.len());
    let one = t.scalar_const(1.0);
    let mut num: Option<Var> = None;
    let mut den: Option<Var> = None;
    for (&p, &w) in points.iter().zip(weights) {
        let lam = lambda(t, c, p);
        let wl = t.mul(w, lam);
        let term = t.scale(wl, p);
        num = Some(match num {
            None => term,
            Some(acc) => t.add(acc, term),
        });
        let w2 = t.mul(w, w);
        let wabs = t.sqrt(w2);
        let lm1 = t.sub(lam, one);
        let dterm = t.mul(wabs, lm1);
        den = Some(match den {
            None => dterm,
            Some(acc) => t.add(acc, dterm),
        });
    }
    let num = num.expect("nonempty point set");
    let den = den.expect("nonempty point set");
    let inv = t.div(one, den);
    let under_raw = t.scale(inv, num);
    let under = project(t, c, under_raw);
    // closed half-scalar form: u / (1 + sqrt(1 - c ||u||^2))
    let u2 = t.dot(under, under);
    let cc = t.scalar_const(c.get());
    let cu2 = t.mul(cc, u2);
    let arg = t.sub(one, cu2);
    let root = t.sqrt(arg);
    let denom = t.add(one, root);
    let invd = t.div(one, denom);
    t.scale(invd, under)
}

pub fn sigmoid(t: &mut Tape, x: Var) -> Var {
    let nx = t.neg(x);
    let e = t.exp(nx);
    let one = t.scalar_const(1.0);
    let d = t.add(one, e);
    t.div(one, d)
}

/// Linear-layer parameters living on the tape.
pub struct TapedLinear {
    pub z: Vec<Var>,
    pub r: Vec<Var>,
}

impl TapedLinear {
    /// Load parameters as differentiable leaves.
    pub fn leaf(t: &mut Tape, params: &crate::layers::params::LinearParams) -> Self {
        Self {
            z: params.z().iter().map(|row| t.leaf(row.clone())).collect(),
            r: params.r().iter().map(|&x| t.leaf(vec![x])).collect(),
        }
    }
}

/// Attention configuration for the taped path.
pub struct TapedAttention<'a> {
    pub heads: usize,
    pub head_dim: usize,
    pub query: &'a TapedLinear,
    pub key: &'a TapedLinear,
    pub value: &'a TapedLinear,
    pub similarity: Similarity,
    pub activation: Activation,
}

/// Taped multi-head attention; mirrors `layers::poincare_attention`.
pub fn attention(
    t: &mut Tape,
    c: Curvature,
    source: &[Var],
    target: &[Var],
    cfg: &TapedAttention<'_>,
    mask: Option<&[Vec<bool>]>,
) -> Result<Vec<Var>> {
    let head_sizes = vec![cfg.head_dim; cfg.heads];
    let split_proj = |t: &mut Tape, pts: &[Var], proj: &TapedLinear| -> Vec<Vec<Var>> {
        pts.iter()
            .map(|&p| {
                let full = poincare_fc(t, c, p, &proj.z, &proj.r);
                beta_split(t, c, full, &head_sizes)
            })
            .collect()
    };
    let queries = split_proj(t, target, cfg.query);
    let keys = split_proj(t, source, cfg.key);
    let values = split_proj(t, source, cfg.value);

    let mut out = Vec::with_capacity(target.len());
    for (ti, qrow) in queries.iter().enumerate() {
        let mut heads = Vec::with_capacity(cfg.heads);
        for h in 0..cfg.heads {
            let mut weights = Vec::with_capacity(source.len());
            let mut any_nonzero = false;
            for (s, _) in source.iter().enumerate() {
                if mask.map(|m| !m[ti][s]).unwrap_or(false) {
                    weights.push(t.scalar_const(0.0));
                    continue;
                }
                let f = match cfg.similarity {
                    Similarity::NegDistance { tau, gamma } => {
                        let d = distance(t, c, qrow[h], keys[s][h]);
                        let mt = t.scalar_const(-tau);
                        let td = t.mul(mt, d);
                        let g = t.scalar_const(gamma);
                        t.sub(td, g)
                    }
                    Similarity::TangentInnerProduct => {
                        let lq = log0(t, c, qrow[h]);
                        let lk = log0(t, c, keys[s][h]);
                        let d = t.dot(lq, lk);
                        let s = t.scalar_const(1.0 / (cfg.head_dim as f64).sqrt());
                        t.mul(s, d)
                    }
                };
                let w = match cfg.activation {
                    Activation::Exp => t.exp(f),
                    Activation::Sigmoid => sigmoid(t, f),
                    Activation::Identity => f,
                };
                if t.value(w)[0] != 0.0 {
                    any_nonzero = true;
                }
                weights.push(w);
            }
            if !any_nonzero {
                return Err(PoincareError::Domain(format!(
                    "attention weights vanished for target row {ti}"
                )));
            }
            let head_values: Vec<Var> = values.iter().map(|v| v[h]).collect();
            heads.push(gyromidpoint(t, c, &head_values, &weights));
        }
        out.push(beta_concat(t, c, &heads));
    }
    Ok(out)
}

/// Stride-1 taped convolution over a 1-D pixel row (enough for the
/// gradient checks; higher-rank grids reduce to the same composition).
pub fn conv1d(
    t: &mut Tape,
    c: Curvature,
    pixels: &[Var],
    kernel: usize,
    dilation: usize,
    padding: usize,
    channels: usize,
    fc_params: &TapedLinear,
) -> Result<Vec<Var>> {
    let padded = pixels.len() + 2 * padding;
    let span = dilation * (kernel - 1) + 1;
    if span > padded {
        return Err(PoincareError::Contract(format!(
            "kernel span {span} exceeds padded input {padded}"
        )));
    }
    let origin = t.constant(vec![0.0; channels]);
    let mut out = Vec::with_capacity(padded - span + 1);
    for o in 0..padded - span + 1 {
        let mut field = Vec::with_capacity(kernel);
        for k in 0..kernel {
            let pos = o + dilation * k;
            let var = pos
                .checked_sub(padding)
                .filter(|&p| p < pixels.len())
                .map(|p| pixels[p])
                .unwrap_or(origin);
            field.push(var);
        }
        let cat = beta_concat(t, c, &field);
        out.push(poincare_fc(t, c, cat, &fc_params.z, &fc_params.r));
    }
    Ok(out)
}

/// Numerically stable softmax cross-entropy against one label; the max
/// shift enters as a constant, which leaves the gradient untouched.
pub fn softmax_cross_entropy(t: &mut Tape, scores: Var, label: usize) -> Var {
    let vals = t.value(scores).to_vec();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shift = t.constant(vec![max; vals.len()]);
    let shifted = t.sub(scores, shift);
    let exps = t.exp(shifted);
    let total = t.sum(exps);
    let lse_part = t.log(total);
    let label_score = t.slice(scores, label, 1);
    let maxc = t.scalar_const(max);
    let lse = t.add(lse_part, maxc);
    t.sub(lse, label_score)
}

/// Euclidean-limit reference ops on the tape (for the reference training
/// path of the attention demo).
pub mod euclid {
    use super::*;

    /// `fc_k = 2 (<z_k, x> - r_k ||z_k||)`.
    pub fn fc(t: &mut Tape, x: Var, params: &TapedLinear) -> Var {
        let two = t.scalar_const(2.0);
        let rows: Vec<Var> = params
            .z
            .iter()
            .zip(&params.r)
            .map(|(&z, &r)| {
                let zx = t.dot(z, x);
                let zn = t.norm(z);
                let rz = t.mul(r, zn);
                let diff = t.sub(zx, rz);
                t.mul(two, diff)
            })
            .collect();
        t.concat(&rows)
    }

    pub fn beta_split(t: &mut Tape, v: Var, sizes: &[usize]) -> Vec<Var> {
        let n: usize = sizes.iter().sum();
        let beta_n = beta_coefficient(n);
        let mut out = Vec::with_capacity(sizes.len());
        let mut offset = 0;
        for &ni in sizes {
            let piece = t.slice(v, offset, ni);
            let s = t.scalar_const(beta_coefficient(ni) / beta_n);
            out.push(t.scale(s, piece));
            offset += ni;
        }
        out
    }

    pub fn beta_concat(t: &mut Tape, parts: &[Var]) -> Var {
        let n: usize = parts.iter().map(|&p| t.value(p).len()).sum();
        let beta_n = beta_coefficient(n);
        let scaled: Vec<Var> = parts
            .iter()
            .map(|&p| {
                let ni = t.value(p).len();
                let s = t.scalar_const(beta_n / beta_coefficient(ni));
                t.scale(s, p)
            })
            .collect();
        t.concat(&scaled)
    }

    pub fn midpoint(t: &mut Tape, points: &[Var], weights: &[Var]) -> Var {
        let mut num: Option<Var> = None;
        let mut den: Option<Var> = None;
        for (&p, &w) in points.iter().zip(weights) {
            let term = t.scale(w, p);
            num = Some(match num {
                None => term,
                Some(acc) => t.add(acc, term),
            });
            let w2 = t.mul(w, w);
            let wabs = t.sqrt(w2);
            den = Some(match den {
                None => wabs,
                Some(acc) => t.add(acc, wabs),
            });
        }
        let one = t.scalar_const(1.0);
        let inv = t.div(one, den.expect("nonempty"));
        t.scale(inv, num.expect("nonempty"))
    }

    /// Doubled Euclidean distance (the c -> 0 limit of d_c).
    pub fn distance(t: &mut Tape, x: Var, y: Var) -> Var {
        let d = t.sub(x, y);
        let n = t.norm(d);
        let two = t.scalar_const(2.0);
        t.mul(two, n)
    }

    pub fn attention(
        t: &mut Tape,
        source: &[Var],
        target: &[Var],
        cfg: &TapedAttention<'_>,
        mask: Option<&[Vec<bool>]>,
    ) -> Result<Vec<Var>> {
        let head_sizes = vec![cfg.head_dim; cfg.heads];
        let split_proj = |t: &mut Tape, pts: &[Var], proj: &TapedLinear| -> Vec<Vec<Var>> {
            pts.iter()
                .map(|&p| {
                    let full = fc(t, p, proj);
                    beta_split(t, full, &head_sizes)
                })
                .collect()
        };
        let queries = split_proj(t, target, cfg.query);
        let keys = split_proj(t, source, cfg.key);
        let values = split_proj(t, source, cfg.value);
        let mut out = Vec::with_capacity(target.len());
        for (ti, qrow) in queries.iter().enumerate() {
            let mut heads = Vec::with_capacity(cfg.heads);
            for h in 0..cfg.heads {
                let mut weights = Vec::with_capacity(source.len());
                let mut any_nonzero = false;
                for (s, _) in source.iter().enumerate() {
                    if mask.map(|m| !m[ti][s]).unwrap_or(false) {
                        weights.push(t.scalar_const(0.0));
                        continue;
                    }
                    let f = match cfg.similarity {
                        Similarity::NegDistance { tau, gamma } => {
                            let d = distance(t, qrow[h], keys[s][h]);
                            let mt = t.scalar_const(-tau);
                            let td = t.mul(mt, d);
                            let g = t.scalar_const(gamma);
                            t.sub(td, g)
                        }
                        Similarity::TangentInnerProduct => {
                            let d = t.dot(qrow[h], keys[s][h]);
                            let s = t.scalar_const(1.0 / (cfg.head_dim as f64).sqrt());
                            t.mul(s, d)
                        }
                    };
                    let w = match cfg.activation {
                        Activation::Exp => t.exp(f),
                        Activation::Sigmoid => sigmoid(t, f),
                        Activation::Identity => f,
                    };
                    if t.value(w)[0] != 0.0 {
                        any_nonzero = true;
                    }
                    weights.push(w);
                }
                if !any_nonzero {
                    return Err(PoincareError::Domain(format!(
                        "attention weights vanished for target row {ti}"
                    )));
                }
                let head_values: Vec<Var> = values.iter().map(|v| v[h]).collect();
                heads.push(midpoint(t, &head_values, &weights));
            }
            out.push(beta_concat(t, &heads));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::{self, BallPoint};
    use crate::layers::{self, params::LinearParams};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_coords(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
        (0..dim).map(|_| rng.gen_range(-scale..scale)).collect()
    }

    #[test]
    fn taped_mobius_add_matches_direct() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(163);
        for _ in 0..50 {
            let xs = random_coords(&mut rng, 3, 0.4);
            let ys = random_coords(&mut rng, 3, 0.4);
            let mut t = Tape::new();
            let x = t.leaf(xs.clone());
            let y = t.leaf(ys.clone());
            let s = mobius_add(&mut t, c, x, y);
            let direct = ball::mobius_add(
                &BallPoint::new(xs, c).unwrap(),
                &BallPoint::new(ys, c).unwrap(),
            )
            .unwrap();
            for (a, b) in t.value(s).iter().zip(direct.coords()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn taped_distance_matches_direct() {
        let c = Curvature::new(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(167);
        for _ in 0..50 {
            let xs = random_coords(&mut rng, 4, 0.4);
            let ys = random_coords(&mut rng, 4, 0.4);
            let mut t = Tape::new();
            let x = t.leaf(xs.clone());
            let y = t.leaf(ys.clone());
            let d = distance(&mut t, c, x, y);
            let direct = ball::distance(
                &BallPoint::new(xs, c).unwrap(),
                &BallPoint::new(ys, c).unwrap(),
            )
            .unwrap();
            assert!((t.value(d)[0] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn taped_layers_match_direct() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(173);
        for _ in 0..25 {
            let xs = random_coords(&mut rng, 4, 0.35);
            let zrows: Vec<Vec<f64>> = (0..3).map(|_| random_coords(&mut rng, 4, 0.8)).collect();
            let rs: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.4..0.4)).collect();
            let params = LinearParams::new(zrows.clone(), rs.clone(), c).unwrap();
            let xp = BallPoint::new(xs.clone(), c).unwrap();

            let mut t = Tape::new();
            let x = t.leaf(xs.clone());
            let tl = TapedLinear::leaf(&mut t, &params);
            let v = mlr_score(&mut t, c, x, &tl.z, &tl.r);
            let direct_v = layers::mlr_score(&xp, &params).unwrap();
            for (a, b) in t.value(v).iter().zip(&direct_v) {
                assert!((a - b).abs() < 1e-12, "taped {a} direct {b}");
            }

            let y = poincare_fc(&mut t, c, x, &tl.z, &tl.r);
            let direct_y = layers::poincare_fc(&xp, &params).unwrap();
            for (a, b) in t.value(y).iter().zip(direct_y.coords()) {
                assert!((a - b).abs() < 1e-12);
            }

            // beta split / concat
            let parts = beta_split(&mut t, c, x, &[1, 3]);
            let direct_parts = layers::beta_split(&xp, &[1, 3]).unwrap();
            for (p, dp) in parts.iter().zip(&direct_parts) {
                for (a, b) in t.value(*p).iter().zip(dp.coords()) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
            let back = beta_concat(&mut t, c, &parts);
            for (a, b) in t.value(back).iter().zip(xp.coords()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn taped_midpoint_matches_direct() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(179);
        for _ in 0..25 {
            let n = rng.gen_range(2..6);
            let coords: Vec<Vec<f64>> = (0..n).map(|_| random_coords(&mut rng, 3, 0.4)).collect();
            let ws: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if ws.iter().all(|w| w.abs() < 1e-3) {
                continue;
            }
            let mut t = Tape::new();
            let pts: Vec<Var> = coords.iter().map(|cc| t.leaf(cc.clone())).collect();
            let wvars: Vec<Var> = ws.iter().map(|&w| t.leaf(vec![w])).collect();
            let mid = gyromidpoint(&mut t, c, &pts, &wvars);
            let set = crate::models::WeightedPointSet::new(
                coords
                    .iter()
                    .map(|cc| BallPoint::new(cc.clone(), c).unwrap())
                    .collect(),
                ws.clone(),
            )
            .unwrap();
            let direct = crate::models::mobius_gyromidpoint(&set);
            for (a, b) in t.value(mid).iter().zip(direct.coords()) {
                assert!((a - b).abs() < 1e-12, "taped {a} vs direct {b}");
            }
        }
    }

    #[test]
    fn taped_attention_matches_direct() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(181);
        let mk_linear = |rng: &mut ChaCha8Rng| {
            LinearParams::new(
                (0..4).map(|_| random_coords(rng, 3, 0.6)).collect(),
                (0..4).map(|_| rng.gen_range(-0.2..0.2)).collect(),
                c,
            )
            .unwrap()
        };
        let q = mk_linear(&mut rng);
        let k = mk_linear(&mut rng);
        let v = mk_linear(&mut rng);
        let params = layers::AttentionParams::new(
            2,
            2,
            q.clone(),
            k.clone(),
            v.clone(),
            Similarity::NegDistance { tau: 1.0, gamma: 0.1 },
            Activation::Exp,
        )
        .unwrap();
        let src_coords: Vec<Vec<f64>> = (0..4).map(|_| random_coords(&mut rng, 3, 0.3)).collect();
        let tgt_coords: Vec<Vec<f64>> = (0..2).map(|_| random_coords(&mut rng, 3, 0.3)).collect();
        let src_pts: Vec<BallPoint> = src_coords
            .iter()
            .map(|cc| BallPoint::new(cc.clone(), c).unwrap())
            .collect();
        let tgt_pts: Vec<BallPoint> = tgt_coords
            .iter()
            .map(|cc| BallPoint::new(cc.clone(), c).unwrap())
            .collect();
        let direct = layers::poincare_attention(&src_pts, &tgt_pts, &params, None).unwrap();

        let mut t = Tape::new();
        let src: Vec<Var> = src_coords.iter().map(|cc| t.leaf(cc.clone())).collect();
        let tgt: Vec<Var> = tgt_coords.iter().map(|cc| t.leaf(cc.clone())).collect();
        let tq = TapedLinear::leaf(&mut t, &q);
        let tk = TapedLinear::leaf(&mut t, &k);
        let tv = TapedLinear::leaf(&mut t, &v);
        let cfg = TapedAttention {
            heads: 2,
            head_dim: 2,
            query: &tq,
            key: &tk,
            value: &tv,
            similarity: params.similarity,
            activation: params.activation,
        };
        let taped = attention(&mut t, c, &src, &tgt, &cfg, None).unwrap();
        for (tv_, dv) in taped.iter().zip(&direct) {
            for (a, b) in t.value(*tv_).iter().zip(dv.coords()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn taped_conv_matches_direct() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(191);
        let pixels_coords: Vec<Vec<f64>> =
            (0..4).map(|_| random_coords(&mut rng, 2, 0.3)).collect();
        let fc = LinearParams::new(
            (0..2).map(|_| random_coords(&mut rng, 4, 0.6)).collect(),
            vec![0.1, -0.2],
            c,
        )
        .unwrap();
        let conv_params =
            layers::ConvParams::new(vec![2], vec![1], vec![1], 2, fc.clone()).unwrap();
        let map = layers::FeatureMap::new(
            pixels_coords
                .iter()
                .map(|cc| BallPoint::new(cc.clone(), c).unwrap())
                .collect(),
            vec![4],
        )
        .unwrap();
        let direct = layers::poincare_conv(&map, &conv_params).unwrap();

        let mut t = Tape::new();
        let pixels: Vec<Var> = pixels_coords.iter().map(|cc| t.leaf(cc.clone())).collect();
        let tfc = TapedLinear::leaf(&mut t, &fc);
        let taped = conv1d(&mut t, c, &pixels, 2, 1, 1, 2, &tfc).unwrap();
        assert_eq!(taped.len(), direct.points().len());
        for (tv, dv) in taped.iter().zip(direct.points()) {
            for (a, b) in t.value(*tv).iter().zip(dv.coords()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cross_entropy_matches_reference() {
        let mut t = Tape::new();
        let scores = t.leaf(vec![1.0, -0.5, 2.0]);
        let loss = softmax_cross_entropy(&mut t, scores, 2);
        let probs = layers::softmax(&[1.0, -0.5, 2.0]);
        let expected = -probs[2].ln();
        assert!((t.value(loss)[0] - expected).abs() < 1e-12);
        // gradient is softmax - onehot
        let grads = t.backward(loss).unwrap();
        for (k, g) in grads.wrt(scores).iter().enumerate() {
            let expected = probs[k] - if k == 2 { 1.0 } else { 0.0 };
            assert!((g - expected).abs() < 1e-12);
        }
    }
}
