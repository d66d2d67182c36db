//! Property tests for the gyrovector laws and inverse pairs.

use poincare::ball::{
    self, addition_norm, distance, exp_map, gyration, log_map, mobius_add, BallPoint,
    TangentVector,
};
use poincare::Curvature;
use proptest::prelude::*;

fn ball_point(c: f64, dim: usize) -> impl Strategy<Value = BallPoint> {
    let curvature = Curvature::new(c).unwrap();
    prop::collection::vec(-1.0f64..1.0, dim).prop_map(move |raw| {
        let norm: f64 = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let radius = 0.85 / curvature.sqrt();
        let scale = if norm > 0.0 {
            radius * (norm.min(1.0)) / norm
        } else {
            0.0
        };
        BallPoint::new(raw.iter().map(|x| x * scale).collect(), curvature).unwrap()
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

macro_rules! law_suite {
    ($name:ident, $c:expr, $dim:expr) => {
        mod $name {
            use super::*;

            proptest! {
                #![proptest_config(ProptestConfig::with_cases(64))]

                #[test]
                fn left_cancellation(
                    x in ball_point($c, $dim),
                    y in ball_point($c, $dim),
                ) {
                    let back = mobius_add(&x.neg(), &mobius_add(&x, &y).unwrap()).unwrap();
                    prop_assert!(max_abs_diff(back.coords(), y.coords()) < 1e-9);
                }

                #[test]
                fn left_gyroassociativity(
                    x in ball_point($c, $dim),
                    y in ball_point($c, $dim),
                    z in ball_point($c, $dim),
                ) {
                    let lhs = mobius_add(&x, &mobius_add(&y, &z).unwrap()).unwrap();
                    let gz = gyration(&x, &y, z.coords()).unwrap();
                    let gz = BallPoint::new(gz, x.curvature()).unwrap();
                    let rhs = mobius_add(&mobius_add(&x, &y).unwrap(), &gz).unwrap();
                    prop_assert!(max_abs_diff(lhs.coords(), rhs.coords()) < 1e-9);
                }

                #[test]
                fn gyrocommutativity(
                    x in ball_point($c, $dim),
                    y in ball_point($c, $dim),
                ) {
                    let lhs = mobius_add(&x, &y).unwrap();
                    let yx = mobius_add(&y, &x).unwrap();
                    let rhs = gyration(&x, &y, yx.coords()).unwrap();
                    prop_assert!(max_abs_diff(lhs.coords(), &rhs) < 1e-9);
                }

                #[test]
                fn gyration_is_orthogonal(
                    x in ball_point($c, $dim),
                    y in ball_point($c, $dim),
                    z in prop::collection::vec(-2.0f64..2.0, $dim),
                ) {
                    let g = gyration(&x, &y, &z).unwrap();
                    let zn: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let gn: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if zn > 1e-6 {
                        prop_assert!((gn / zn - 1.0).abs() < 1e-9);
                    }
                }

                #[test]
                fn exp_log_inverse_pair(
                    x in ball_point($c, $dim),
                    y in ball_point($c, $dim),
                ) {
                    let v = log_map(&x, &y).unwrap();
                    let back = exp_map(&x, &v).unwrap();
                    prop_assert!(max_abs_diff(back.coords(), y.coords()) < 1e-10);
                    let v2 = log_map(&x, &back).unwrap();
                    prop_assert!(max_abs_diff(v2.coords(), v.coords()) < 1e-10);
                }

                #[test]
                fn distance_symmetry_and_log_identity(
                    x in ball_point($c, $dim),
                    y in ball_point($c, $dim),
                ) {
                    let d = distance(&x, &y).unwrap();
                    prop_assert!((d - distance(&y, &x).unwrap()).abs() < 1e-9);
                    let v = log_map(&x, &y).unwrap();
                    prop_assert!((v.riemannian_norm() - d).abs() < 1e-9);
                }

                #[test]
                fn addition_norm_closed_form(
                    x in ball_point($c, $dim),
                    y in ball_point($c, $dim),
                ) {
                    let n1 = addition_norm(&x, &y).unwrap();
                    let n2 = mobius_add(&x, &y).unwrap().norm();
                    prop_assert!((n1 - n2).abs() < 1e-12);
                }

                #[test]
                fn transport_preserves_riemannian_norm(
                    x in ball_point($c, $dim),
                    y in ball_point($c, $dim),
                    v in prop::collection::vec(-1.0f64..1.0, $dim),
                ) {
                    let tv = TangentVector::new(v, x.clone()).unwrap();
                    let moved = ball::parallel_transport(&x, &y, &tv).unwrap();
                    prop_assert!(
                        (moved.riemannian_norm() - tv.riemannian_norm()).abs() < 1e-9
                    );
                }
            }
        }
    };
}

law_suite!(c_half_n2, 0.5, 2);
law_suite!(c_one_n1, 1.0, 1);
law_suite!(c_one_n8, 1.0, 8);
law_suite!(c_two_n64, 2.0, 64);

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// beta-split and beta-concatenation invert each other.
    #[test]
    fn beta_roundtrip(raw in prop::collection::vec(-0.5f64..0.5, 12)) {
        let c = Curvature::new(1.0).unwrap();
        let norm: f64 = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { 0.8 * norm.min(1.0) / norm } else { 0.0 };
        let x = BallPoint::new(raw.iter().map(|v| v * scale).collect(), c).unwrap();
        let parts = poincare::layers::beta_split(&x, &[5, 3, 4]).unwrap();
        let back = poincare::layers::beta_concat(&parts).unwrap();
        prop_assert!(max_abs_diff(back.coords(), x.coords()) < 1e-10);
    }

    /// Conversions respect the invariants of their target model.
    #[test]
    fn conversion_invariants(raw in prop::collection::vec(-1.0f64..1.0, 3)) {
        let c = Curvature::new(1.0).unwrap();
        let norm: f64 = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { 0.9 * norm.min(1.0) / norm } else { 0.0 };
        let b = BallPoint::new(raw.iter().map(|x| x * scale).collect(), c).unwrap();
        let h = poincare::models::ball_to_hyperboloid(&b);
        prop_assert!((h.lorentz_inner(&h) + 1.0).abs() < 1e-10);
        prop_assert!(h.time() > 0.0);
        let k = poincare::models::ball_to_klein(&b);
        prop_assert!(k.coords().iter().map(|x| x * x).sum::<f64>() < 1.0);
    }
}
