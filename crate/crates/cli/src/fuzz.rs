//! Differential fuzzing of the three midpoint formulations and the
//! minimizer property of the gyromidpoint objective.

use crate::config::FuzzConfig;
use anyhow::Result;
use poincare::ball::BallPoint;
use poincare::models::{
    ball_to_hyperboloid, ball_to_klein, einstein_gyromidpoint, gyrometric_objective,
    hyperboloid_to_ball, klein_to_ball, lorentzian_centroid, mobius_gyromidpoint, KleinPoint,
    WeightedPointSet,
};
use poincare::numeric::{norm, unit};
use poincare::Curvature;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct FuzzReport {
    pub trials: usize,
    pub max_divergence: f64,
    pub max_objective_violation: f64,
    pub threshold: f64,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.max_divergence <= self.threshold
            && self.max_objective_violation <= self.threshold
    }
}

fn random_point(rng: &mut impl Rng, dim: usize, c: Curvature, max_frac: f64) -> BallPoint {
    let dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u = unit(&dir);
    let r = rng.gen_range(0.0..max_frac) / c.sqrt();
    BallPoint::new(u.iter().map(|x| x * r).collect(), c).expect("inside the ball")
}

/// Run the fuzzer; `inject_fault` perturbs the Einstein route by 1e-6 as
/// a self-test of the detector.
pub fn fuzz_midpoints(cfg: &FuzzConfig) -> Result<FuzzReport> {
    anyhow::ensure!(cfg.trials >= 1, "need at least one trial");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut max_divergence: f64 = 0.0;
    let mut max_violation: f64 = 0.0;

    for trial in 0..cfg.trials {
        let c = Curvature::new(cfg.curvatures[trial % cfg.curvatures.len()])?;
        let dim = rng.gen_range(1..=cfg.max_dim.max(1));
        let count = rng.gen_range(1..=cfg.max_points.max(1));
        let points: Vec<BallPoint> = (0..count)
            .map(|_| random_point(&mut rng, dim, c, 0.8))
            .collect();
        let weights: Vec<f64> = (0..count).map(|_| rng.gen_range(0.05..1.0)).collect();
        let set = WeightedPointSet::new(points.clone(), weights.clone())?;

        let mobius = mobius_gyromidpoint(&set);
        let klein_pts: Vec<KleinPoint> = points.iter().map(ball_to_klein).collect();
        let einstein = einstein_gyromidpoint(&klein_pts, &weights)?;
        let einstein = if cfg.inject_fault {
            // nudge one coordinate to verify the fuzzer actually detects
            // formula-level drift
            let mut coords = einstein.coords().to_vec();
            coords[0] += 1e-6;
            KleinPoint::new(coords, c)?
        } else {
            einstein
        };
        let via_klein = klein_to_ball(&einstein);
        let hyp_pts: Vec<_> = points.iter().map(ball_to_hyperboloid).collect();
        let via_lorentz = hyperboloid_to_ball(&lorentzian_centroid(&hyp_pts, &weights)?);

        for pair in [
            (mobius.coords(), via_klein.coords()),
            (mobius.coords(), via_lorentz.coords()),
            (via_klein.coords(), via_lorentz.coords()),
        ] {
            let d = pair
                .0
                .iter()
                .zip(pair.1)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            max_divergence = max_divergence.max(d);
        }

        if trial < cfg.objective_trials {
            let at_mid = gyrometric_objective(&set, &mobius)?;
            for _ in 0..100 {
                let delta: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let du = unit(&delta);
                let candidate = BallPoint::project(
                    mobius
                        .coords()
                        .iter()
                        .zip(&du)
                        .map(|(m, d)| m + 0.05 * d)
                        .collect(),
                    c,
                );
                let perturbed = gyrometric_objective(&set, &candidate)?;
                max_violation = max_violation.max(at_mid - perturbed);
            }
        }
    }

    Ok(FuzzReport {
        trials: cfg.trials,
        max_divergence,
        max_objective_violation: max_violation.max(0.0),
        threshold: 1e-9,
    })
}
