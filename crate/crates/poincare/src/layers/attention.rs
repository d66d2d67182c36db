//! Multi-head attention where weights act through the signed-weight
//! gyromidpoint and heads are beta-split / beta-concatenated.

use crate::ball::{distance, log_map_origin, BallPoint};
use crate::error::{PoincareError, Result};
use crate::layers::beta::{beta_coefficient, beta_concat, beta_split};
use crate::layers::fc::poincare_fc;
use crate::layers::params::{Activation, AttentionParams, Similarity};
use crate::models::{mobius_gyromidpoint, WeightedPointSet};
use crate::numeric::dot;

fn similarity(q: &BallPoint, k: &BallPoint, sim: Similarity, head_dim: usize) -> Result<f64> {
    match sim {
        Similarity::NegDistance { tau, gamma } => Ok(-tau * distance(q, k)? - gamma),
        Similarity::TangentInnerProduct => Ok(dot(
            &log_map_origin(q),
            &log_map_origin(k),
        ) / (head_dim as f64).sqrt()),
    }
}

fn activate(x: f64, g: Activation) -> f64 {
    match g {
        Activation::Exp => x.exp(),
        Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        Activation::Identity => x,
    }
}

/// Per-target aggregation of value gyrovectors with weights
/// `pi = g(f^c(q, k))`; masked entries contribute weight exactly zero.
pub fn poincare_attention(
    source: &[BallPoint],
    target: &[BallPoint],
    params: &AttentionParams,
    mask: Option<&[Vec<bool>]>,
) -> Result<Vec<BallPoint>> {
    if source.is_empty() || target.is_empty() {
        return Err(PoincareError::Contract(
            "attention needs nonempty source and target".into(),
        ));
    }
    if let Some(m) = mask {
        if m.len() != target.len() || m.iter().any(|row| row.len() != source.len()) {
            return Err(PoincareError::Contract(format!(
                "mask must be {} x {}",
                target.len(),
                source.len()
            )));
        }
    }
    let head_sizes = vec![params.head_dim; params.heads];
    let split = |points: &[BallPoint], proj: &crate::layers::params::LinearParams| {
        points
            .iter()
            .map(|p| beta_split(&poincare_fc(p, proj)?, &head_sizes))
            .collect::<Result<Vec<_>>>()
    };
    let queries = split(target, &params.query)?; // [t][head]
    let keys = split(source, &params.key)?; // [s][head]
    let values = split(source, &params.value)?; // [s][head]

    let mut outputs = Vec::with_capacity(target.len());
    for (t, qrow) in queries.iter().enumerate() {
        let mut head_outputs = Vec::with_capacity(params.heads);
        for h in 0..params.heads {
            let mut weights = Vec::with_capacity(source.len());
            for (s, _) in source.iter().enumerate() {
                let masked = mask.map(|m| !m[t][s]).unwrap_or(false);
                if masked {
                    weights.push(0.0);
                } else {
                    let f = similarity(&qrow[h], &keys[s][h], params.similarity, params.head_dim)?;
                    weights.push(activate(f, params.activation));
                }
            }
            if weights.iter().all(|w| *w == 0.0) {
                return Err(PoincareError::Domain(format!(
                    "attention weights vanished for target row {t}"
                )));
            }
            if params.activation == Activation::Identity && weights.iter().all(|w| *w <= 0.0) {
                return Err(PoincareError::Domain(format!(
                    "identity activation produced no positive weight in target row {t}"
                )));
            }
            let head_values: Vec<BallPoint> = values.iter().map(|v| v[h].clone()).collect();
            head_outputs.push(mobius_gyromidpoint(&WeightedPointSet::new(
                head_values,
                weights,
            )?));
        }
        outputs.push(beta_concat(&head_outputs)?);
    }
    Ok(outputs)
}

/// The `c -> 0` limit of the attention stack on plain coordinates; used as
/// the reference for the Euclidean-limit checks. Each hyperbolic stage is
/// replaced by its exact limit: FC becomes `2(<z_k, x> - r_k ||z_k||)`,
/// tangent split/concat keep their beta scalings, the gyromidpoint becomes
/// `sum nu_i b_i / sum |nu_i|`, and distances double the Euclidean norm.
pub mod euclidean_reference {
    use super::*;

    pub fn fc(x: &[f64], params: &crate::layers::params::LinearParams) -> Vec<f64> {
        params
            .z()
            .iter()
            .zip(params.r())
            .map(|(z, &r)| 2.0 * (dot(z, x) - r * crate::numeric::norm(z)))
            .collect()
    }

    pub fn beta_split(v: &[f64], sizes: &[usize]) -> Vec<Vec<f64>> {
        let beta_n = beta_coefficient(v.len());
        let mut out = Vec::with_capacity(sizes.len());
        let mut offset = 0;
        for &ni in sizes {
            let scale = beta_coefficient(ni) / beta_n;
            out.push(v[offset..offset + ni].iter().map(|u| scale * u).collect());
            offset += ni;
        }
        out
    }

    pub fn beta_concat(parts: &[Vec<f64>]) -> Vec<f64> {
        let n: usize = parts.iter().map(|p| p.len()).sum();
        let beta_n = beta_coefficient(n);
        let mut out = Vec::with_capacity(n);
        for p in parts {
            let scale = beta_n / beta_coefficient(p.len());
            out.extend(p.iter().map(|u| scale * u));
        }
        out
    }

    pub fn midpoint(points: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
        let dim = points[0].len();
        let mut num = vec![0.0; dim];
        let mut den = 0.0;
        for (p, &w) in points.iter().zip(weights) {
            for (n, x) in num.iter_mut().zip(p) {
                *n += w * x;
            }
            den += w.abs();
        }
        num.iter().map(|x| x / den).collect()
    }

    pub fn attention(
        source: &[Vec<f64>],
        target: &[Vec<f64>],
        params: &AttentionParams,
        mask: Option<&[Vec<bool>]>,
    ) -> Result<Vec<Vec<f64>>> {
        let head_sizes = vec![params.head_dim; params.heads];
        let queries: Vec<Vec<Vec<f64>>> = target
            .iter()
            .map(|p| beta_split(&fc(p, &params.query), &head_sizes))
            .collect();
        let keys: Vec<Vec<Vec<f64>>> = source
            .iter()
            .map(|p| beta_split(&fc(p, &params.key), &head_sizes))
            .collect();
        let values: Vec<Vec<Vec<f64>>> = source
            .iter()
            .map(|p| beta_split(&fc(p, &params.value), &head_sizes))
            .collect();
        let mut outputs = Vec::with_capacity(target.len());
        for (t, qrow) in queries.iter().enumerate() {
            let mut heads = Vec::with_capacity(params.heads);
            for h in 0..params.heads {
                let mut weights = Vec::with_capacity(source.len());
                for (s, _) in source.iter().enumerate() {
                    if mask.map(|m| !m[t][s]).unwrap_or(false) {
                        weights.push(0.0);
                        continue;
                    }
                    let f = match params.similarity {
                        Similarity::NegDistance { tau, gamma } => {
                            let diff: f64 = qrow[h]
                                .iter()
                                .zip(&keys[s][h])
                                .map(|(a, b)| (a - b) * (a - b))
                                .sum();
                            -tau * 2.0 * diff.sqrt() - gamma
                        }
                        Similarity::TangentInnerProduct => {
                            dot(&qrow[h], &keys[s][h]) / (params.head_dim as f64).sqrt()
                        }
                    };
                    weights.push(activate(f, params.activation));
                }
                if weights.iter().all(|w| *w == 0.0) {
                    return Err(PoincareError::Domain(format!(
                        "attention weights vanished for target row {t}"
                    )));
                }
                let head_values: Vec<Vec<f64>> =
                    values.iter().map(|v| v[h].clone()).collect();
                heads.push(midpoint(&head_values, &weights));
            }
            outputs.push(beta_concat(&heads));
        }
        Ok(outputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::Curvature;
    use crate::layers::params::LinearParams;
    use crate::numeric::norm;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_linear(rng: &mut impl Rng, n: usize, m: usize, c: Curvature) -> LinearParams {
        let z = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-0.7..0.7)).collect())
            .collect();
        let r = (0..m).map(|_| rng.gen_range(-0.2..0.2)).collect();
        LinearParams::new(z, r, c).unwrap()
    }

    fn random_params(
        rng: &mut impl Rng,
        n: usize,
        heads: usize,
        head_dim: usize,
        c: Curvature,
        similarity: Similarity,
        activation: Activation,
    ) -> AttentionParams {
        AttentionParams::new(
            heads,
            head_dim,
            random_linear(rng, n, heads * head_dim, c),
            random_linear(rng, n, heads * head_dim, c),
            random_linear(rng, n, heads * head_dim, c),
            similarity,
            activation,
        )
        .unwrap()
    }

    fn random_points(rng: &mut impl Rng, count: usize, dim: usize, c: Curvature) -> Vec<BallPoint> {
        (0..count)
            .map(|_| {
                BallPoint::project((0..dim).map(|_| rng.gen_range(-0.3..0.3)).collect(), c)
            })
            .collect()
    }

    #[test]
    fn single_source_returns_its_value_projection() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(127);
        let params = random_params(
            &mut rng,
            3,
            2,
            2,
            c,
            Similarity::NegDistance { tau: 1.0, gamma: 0.0 },
            Activation::Exp,
        );
        let source = random_points(&mut rng, 1, 3, c);
        let target = random_points(&mut rng, 4, 3, c);
        let out = poincare_attention(&source, &target, &params, None).unwrap();
        // single-point midpoint per head reassembles the full value projection
        let expected = poincare_fc(&source[0], &params.value).unwrap();
        for o in &out {
            for (a, b) in o.coords().iter().zip(expected.coords()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn uniform_similarities_give_unweighted_midpoints() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(131);
        // tau -> 0 removes the query dependence; every weight is exp(-gamma)
        let params = random_params(
            &mut rng,
            3,
            2,
            2,
            c,
            Similarity::NegDistance { tau: 1e-300, gamma: 0.3 },
            Activation::Exp,
        );
        let source = random_points(&mut rng, 5, 3, c);
        let target = random_points(&mut rng, 2, 3, c);
        let out = poincare_attention(&source, &target, &params, None).unwrap();
        let head_sizes = vec![params.head_dim; params.heads];
        let values: Vec<Vec<BallPoint>> = source
            .iter()
            .map(|p| beta_split(&poincare_fc(p, &params.value).unwrap(), &head_sizes).unwrap())
            .collect();
        let mut heads = Vec::new();
        for h in 0..params.heads {
            let pts: Vec<BallPoint> = values.iter().map(|v| v[h].clone()).collect();
            let w = vec![1.0; pts.len()];
            heads.push(mobius_gyromidpoint(&WeightedPointSet::new(pts, w).unwrap()));
        }
        let expected = beta_concat(&heads).unwrap();
        for o in &out {
            for (a, b) in o.coords().iter().zip(expected.coords()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exp_weights_are_invariant_to_similarity_shifts() {
        // adding a constant to every similarity in a row rescales all
        // exponentials; the gyromidpoint cancels the scale
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(137);
        let base = random_params(
            &mut rng,
            3,
            2,
            2,
            c,
            Similarity::NegDistance { tau: 1.0, gamma: 0.0 },
            Activation::Exp,
        );
        let mut shifted = base.clone();
        shifted.similarity = Similarity::NegDistance { tau: 1.0, gamma: 2.5 };
        let source = random_points(&mut rng, 4, 3, c);
        let target = random_points(&mut rng, 3, 3, c);
        let a = poincare_attention(&source, &target, &base, None).unwrap();
        let b = poincare_attention(&source, &target, &shifted, None).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for (u, v) in x.coords().iter().zip(y.coords()) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn permutation_equivariance_and_invariance() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(139);
        let params = random_params(
            &mut rng,
            3,
            2,
            2,
            c,
            Similarity::TangentInnerProduct,
            Activation::Exp,
        );
        let source = random_points(&mut rng, 5, 3, c);
        let target = random_points(&mut rng, 4, 3, c);
        let mask: Vec<Vec<bool>> = (0..4)
            .map(|_| (0..5).map(|_| rng.gen_bool(0.8)).collect())
            .collect();
        // keep every row non-empty
        let mut mask = mask;
        for row in &mut mask {
            row[0] = true;
        }
        let base = poincare_attention(&source, &target, &params, Some(&mask)).unwrap();

        // target permutation permutes the outputs
        let tperm = [2usize, 0, 3, 1];
        let target_p: Vec<BallPoint> = tperm.iter().map(|&i| target[i].clone()).collect();
        let mask_p: Vec<Vec<bool>> = tperm.iter().map(|&i| mask[i].clone()).collect();
        let out_p = poincare_attention(&source, &target_p, &params, Some(&mask_p)).unwrap();
        for (j, &i) in tperm.iter().enumerate() {
            for (a, b) in out_p[j].coords().iter().zip(base[i].coords()) {
                assert!((a - b).abs() < 1e-10);
            }
        }

        // simultaneous (source, mask-column) permutation leaves outputs alone
        let sperm = [4usize, 2, 0, 1, 3];
        let source_p: Vec<BallPoint> = sperm.iter().map(|&i| source[i].clone()).collect();
        let mask_s: Vec<Vec<bool>> = mask
            .iter()
            .map(|row| sperm.iter().map(|&i| row[i]).collect())
            .collect();
        let out_s = poincare_attention(&source_p, &target, &params, Some(&mask_s)).unwrap();
        for (a, b) in out_s.iter().zip(&base) {
            for (u, v) in a.coords().iter().zip(b.coords()) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fully_masked_row_reports_its_index() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(149);
        let params = random_params(
            &mut rng,
            3,
            1,
            2,
            c,
            Similarity::NegDistance { tau: 1.0, gamma: 0.0 },
            Activation::Exp,
        );
        let source = random_points(&mut rng, 3, 3, c);
        let target = random_points(&mut rng, 2, 3, c);
        let mask = vec![vec![true, true, true], vec![false, false, false]];
        let err = poincare_attention(&source, &target, &params, Some(&mask)).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn identity_activation_with_no_positive_weight_errors() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(151);
        // neg-distance similarities are always <= -gamma < 0 here
        let params = random_params(
            &mut rng,
            3,
            1,
            2,
            c,
            Similarity::NegDistance { tau: 1.0, gamma: 1.0 },
            Activation::Identity,
        );
        let source = random_points(&mut rng, 3, 3, c);
        let target = random_points(&mut rng, 1, 3, c);
        let err = poincare_attention(&source, &target, &params, None).unwrap_err();
        assert!(err.to_string().contains("row 0"), "{err}");
    }

    #[test]
    fn euclidean_limit_matches_reference() {
        let c = Curvature::new(1e-10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(157);
        let params = random_params(
            &mut rng,
            3,
            2,
            2,
            c,
            Similarity::NegDistance { tau: 1.0, gamma: 0.0 },
            Activation::Exp,
        );
        let source = random_points(&mut rng, 5, 3, c);
        let target = random_points(&mut rng, 3, 3, c);
        let hyp = poincare_attention(&source, &target, &params, None).unwrap();
        let eref = euclidean_reference::attention(
            &source.iter().map(|p| p.coords().to_vec()).collect::<Vec<_>>(),
            &target.iter().map(|p| p.coords().to_vec()).collect::<Vec<_>>(),
            &params,
            None,
        )
        .unwrap();
        for (h, e) in hyp.iter().zip(&eref) {
            let diff: Vec<f64> = h.coords().iter().zip(e).map(|(a, b)| a - b).collect();
            let rel = norm(&diff) / norm(e).max(1e-12);
            assert!(rel < 1e-3, "relative deviation {rel}");
        }
    }
}
