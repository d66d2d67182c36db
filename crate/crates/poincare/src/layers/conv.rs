//! Convolution over spatial grids of gyrovectors: receptive fields are
//! beta-concatenated and pushed through one FC layer per output pixel.

use crate::ball::{BallPoint, Curvature};
use crate::error::{PoincareError, Result};
use crate::layers::beta::beta_concat;
use crate::layers::fc::poincare_fc;
use crate::layers::params::ConvParams;

/// A D-dimensional spatial grid of ball points (one per pixel, channel
/// dimension inside each point), stored row-major.
#[derive(Clone, Debug)]
pub struct FeatureMap {
    points: Vec<BallPoint>,
    shape: Vec<usize>,
}

impl FeatureMap {
    pub fn new(points: Vec<BallPoint>, shape: Vec<usize>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.is_empty() || expected == 0 || points.len() != expected {
            return Err(PoincareError::Contract(format!(
                "shape {shape:?} needs {expected} points, got {}",
                points.len()
            )));
        }
        let dim = points[0].dim();
        let c = points[0].curvature();
        if points.iter().any(|p| p.dim() != dim || p.curvature() != c) {
            return Err(PoincareError::Contract(
                "all pixels must share channels and curvature".into(),
            ));
        }
        Ok(Self { points, shape })
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.points[0].dim()
    }

    pub fn curvature(&self) -> Curvature {
        self.points[0].curvature()
    }

    pub fn get(&self, index: &[usize]) -> &BallPoint {
        &self.points[self.flat_index(index)]
    }

    #[inline]
    pub fn points(&self) -> &[BallPoint] {
        &self.points
    }

    fn flat_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        let mut flat = 0;
        for (i, &s) in index.iter().zip(&self.shape) {
            debug_assert!(*i < s);
            flat = flat * s + i;
        }
        flat
    }
}

/// Iterate all multi-indices of a shape in row-major order.
fn multi_indices(shape: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = shape.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..total {
        out.push(idx.clone());
        for d in (0..shape.len()).rev() {
            idx[d] += 1;
            if idx[d] < shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

/// Stride-1 convolution; out-of-range taps read the ball origin (the
/// additive identity of Möbius addition).
pub fn poincare_conv(map: &FeatureMap, params: &ConvParams) -> Result<FeatureMap> {
    if map.channels() != params.in_channels {
        return Err(PoincareError::DimensionMismatch {
            expected: params.in_channels,
            got: map.channels(),
        });
    }
    if map.curvature() != params.fc.curvature() {
        return Err(PoincareError::CurvatureMismatch {
            left: params.fc.curvature().get(),
            right: map.curvature().get(),
        });
    }
    if map.shape().len() != params.kernel_sizes.len() {
        return Err(PoincareError::Contract(format!(
            "feature map has {} spatial dims, kernel has {}",
            map.shape().len(),
            params.kernel_sizes.len()
        )));
    }
    let d = map.shape().len();
    let mut out_shape = Vec::with_capacity(d);
    for i in 0..d {
        let padded = map.shape()[i] + 2 * params.padding[i];
        let span = params.dilation[i] * (params.kernel_sizes[i] - 1) + 1;
        if span > padded {
            return Err(PoincareError::Contract(format!(
                "kernel span {span} exceeds padded input {padded} in dim {i}"
            )));
        }
        out_shape.push(padded - span + 1);
    }

    let c = map.curvature();
    let origin = BallPoint::origin(params.in_channels, c);
    let kernel_positions = multi_indices(&params.kernel_sizes);
    let mut out_points = Vec::with_capacity(out_shape.iter().product());
    for out_idx in multi_indices(&out_shape) {
        // receptive field in row-major kernel order
        let mut field = Vec::with_capacity(kernel_positions.len());
        for kpos in &kernel_positions {
            let mut in_idx = Vec::with_capacity(d);
            let mut inside = true;
            for i in 0..d {
                let pos = out_idx[i] + params.dilation[i] * kpos[i];
                let Some(pos) = pos.checked_sub(params.padding[i]) else {
                    inside = false;
                    break;
                };
                if pos >= map.shape()[i] {
                    inside = false;
                    break;
                }
                in_idx.push(pos);
            }
            field.push(if inside {
                map.get(&in_idx).clone()
            } else {
                origin.clone()
            });
        }
        let concatenated = beta_concat(&field)?;
        out_points.push(poincare_fc(&concatenated, &params.fc)?);
    }
    FeatureMap::new(out_points, out_shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::params::LinearParams;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_map(
        rng: &mut impl Rng,
        shape: &[usize],
        channels: usize,
        c: Curvature,
    ) -> FeatureMap {
        let total: usize = shape.iter().product();
        let points = (0..total)
            .map(|_| {
                BallPoint::project(
                    (0..channels).map(|_| rng.gen_range(-0.3..0.3)).collect(),
                    c,
                )
            })
            .collect();
        FeatureMap::new(points, shape.to_vec()).unwrap()
    }

    fn random_linear(
        rng: &mut impl Rng,
        n: usize,
        m: usize,
        c: Curvature,
    ) -> LinearParams {
        let z = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect())
            .collect();
        let r = (0..m).map(|_| rng.gen_range(-0.3..0.3)).collect();
        LinearParams::new(z, r, c).unwrap()
    }

    #[test]
    fn unit_kernel_reduces_to_fc_per_pixel() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let map = random_map(&mut rng, &[2, 3], 3, c);
        let fc = random_linear(&mut rng, 3, 4, c);
        let params = ConvParams::new(vec![1, 1], vec![1, 1], vec![0, 0], 3, fc.clone()).unwrap();
        let out = poincare_conv(&map, &params).unwrap();
        assert_eq!(out.shape(), &[2, 3]);
        for (pixel, input) in out.points().iter().zip(map.points()) {
            let direct = poincare_fc(input, &fc).unwrap();
            for (a, b) in pixel.coords().iter().zip(direct.coords()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn all_origin_input_with_zero_bias_stays_at_origin() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let points = vec![BallPoint::origin(2, c); 5];
        let map = FeatureMap::new(points, vec![5]).unwrap();
        let z = (0..3)
            .map(|_| (0..6).map(|_| rng.gen_range(-0.8..0.8)).collect())
            .collect();
        let fc = LinearParams::new(z, vec![0.0; 3], c).unwrap();
        let params = ConvParams::new(vec![3], vec![1], vec![1], 2, fc).unwrap();
        let out = poincare_conv(&map, &params).unwrap();
        assert_eq!(out.shape(), &[5]);
        for p in out.points() {
            assert!(p.norm() < 1e-15);
        }
    }

    #[test]
    fn single_output_pixel_matches_hand_composition() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let map = random_map(&mut rng, &[3], 2, c);
        let fc = random_linear(&mut rng, 6, 2, c);
        let params = ConvParams::new(vec![3], vec![1], vec![0], 2, fc.clone()).unwrap();
        let out = poincare_conv(&map, &params).unwrap();
        assert_eq!(out.shape(), &[1]);
        let hand = poincare_fc(
            &beta_concat(&[
                map.get(&[0]).clone(),
                map.get(&[1]).clone(),
                map.get(&[2]).clone(),
            ])
            .unwrap(),
            &fc,
        )
        .unwrap();
        for (a, b) in out.get(&[0]).coords().iter().zip(hand.coords()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn oversized_kernel_is_rejected() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let map = random_map(&mut rng, &[2], 2, c);
        let fc = random_linear(&mut rng, 10, 2, c);
        let params = ConvParams::new(vec![5], vec![1], vec![0], 2, fc).unwrap();
        assert!(matches!(
            poincare_conv(&map, &params),
            Err(PoincareError::Contract(_))
        ));
    }

    #[test]
    fn dilation_skips_pixels() {
        let c = Curvature::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        let map = random_map(&mut rng, &[5], 2, c);
        let fc = random_linear(&mut rng, 4, 2, c);
        let params = ConvParams::new(vec![2], vec![2], vec![0], 2, fc.clone()).unwrap();
        let out = poincare_conv(&map, &params).unwrap();
        // span = 2*(2-1)+1 = 3, so 3 output pixels; taps at i and i+2
        assert_eq!(out.shape(), &[3]);
        let hand = poincare_fc(
            &beta_concat(&[map.get(&[1]).clone(), map.get(&[3]).clone()]).unwrap(),
            &fc,
        )
        .unwrap();
        for (a, b) in out.get(&[1]).coords().iter().zip(hand.coords()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
