//! Contour grids comparing the ball FC layer against the older
//! tangent-space FC (`exp_0(A log_0 x) (+) b`), plus a checker that tests
//! whether a column's zero-level set lies on the predicted geodesic
//! hyperplane.

use crate::config::{config_hash, ContourConfig};
use anyhow::{ensure, Result};
use poincare::ball::{dist_to_hyperplane, exp_map_origin, log_map_origin, BallPoint};
use poincare::layers::{poincare_fc, transport_orientation, LinearParams};
use poincare::numeric::{artanh, dot, norm};
use poincare::Curvature;

/// One evaluated grid sample.
#[derive(Clone, Debug)]
pub struct GridSample {
    pub x: [f64; 2],
    pub value_prev_fc: f64,
    pub value_ours: f64,
}

#[derive(Clone, Debug)]
pub struct ContourGrid {
    pub samples: Vec<GridSample>,
    pub radial: usize,
    pub angular: usize,
    pub config_hash: String,
}

#[derive(Clone, Debug)]
pub struct ZeroSetCheck {
    /// Worst ratio of hyperplane distance to the local tolerance.
    pub worst_ratio: f64,
    pub crossings: usize,
    pub pass: bool,
}

/// Baseline bias chosen so that both zero sets cross the orientation axis
/// at the same anchor point `exp_0(r z_hat)`.
fn baseline_bias(cfg: &ContourConfig) -> f64 {
    let sc = cfg.c.sqrt();
    -(sc * cfg.r * norm(&cfg.z)).tanh() / sc
}

/// `exp_0(<z, log_0 x>) (+) b` in the 1-D output ball.
fn prev_fc_value(cfg: &ContourConfig, x: &BallPoint, bias: f64) -> f64 {
    let sc = cfg.c.sqrt();
    let s = dot(&cfg.z, &log_map_origin(x));
    let p = (sc * s).tanh() / sc;
    // 1-D Möbius addition
    (p + bias) / (1.0 + cfg.c * p * bias)
}

/// Evaluate both layers over a polar grid inside radius `(1 - 1e-3)/sqrt(c)`.
pub fn emit_contours(cfg: &ContourConfig) -> Result<ContourGrid> {
    ensure!(cfg.z.len() == 2, "contour grids need a 2-D input ball");
    ensure!(norm(&cfg.z) > 0.0, "orientation must be nonzero");
    ensure!(
        cfg.radial_samples >= 8 && cfg.angular_samples >= 8,
        "grid is too coarse"
    );
    let curvature = Curvature::new(cfg.c)?;
    let params = LinearParams::new(vec![cfg.z.clone()], vec![cfg.r], curvature)?;
    let bias = baseline_bias(cfg);
    let r_max = (1.0 - 1e-3) / cfg.c.sqrt();
    let mut samples = Vec::with_capacity(cfg.radial_samples * cfg.angular_samples);
    for i in 0..cfg.radial_samples {
        let radius = r_max * (i as f64 + 0.5) / cfg.radial_samples as f64;
        for j in 0..cfg.angular_samples {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / cfg.angular_samples as f64;
            let coords = [radius * theta.cos(), radius * theta.sin()];
            let point = BallPoint::new(coords.to_vec(), curvature)?;
            let ours = poincare_fc(&point, &params)?.coords()[0];
            let prev = prev_fc_value(cfg, &point, bias);
            samples.push(GridSample {
                x: coords,
                value_prev_fc: prev,
                value_ours: ours,
            });
        }
    }
    Ok(ContourGrid {
        samples,
        radial: cfg.radial_samples,
        angular: cfg.angular_samples,
        config_hash: config_hash(cfg, 0),
    })
}

/// Check one column's zero-level set against the Poincaré hyperplane
/// through `exp_0(r z_hat)` orthogonal to the transported orientation.
/// The tolerance at a crossing is twice the local cell size measured in
/// the ball metric.
pub fn check_zero_set(
    cfg: &ContourConfig,
    grid: &ContourGrid,
    column: impl Fn(&GridSample) -> f64,
) -> Result<ZeroSetCheck> {
    let curvature = Curvature::new(cfg.c)?;
    let (a, q) = transport_orientation(&cfg.z, cfg.r, curvature)?;
    let r_max = (1.0 - 1e-3) / cfg.c.sqrt();
    let dr = r_max / cfg.radial_samples as f64;
    let dtheta = 2.0 * std::f64::consts::PI / cfg.angular_samples as f64;

    let sample = |i: usize, j: usize| &grid.samples[i * grid.angular + j];
    let mut worst_ratio: f64 = 0.0;
    let mut crossings = 0usize;
    let mut consider = |s1: &GridSample, s2: &GridSample| -> Result<()> {
        let (v1, v2) = (column(s1), column(s2));
        if v1 == 0.0 || v1.signum() == v2.signum() {
            return Ok(());
        }
        // linear interpolation of the crossing between the two samples
        let t = v1 / (v1 - v2);
        let coords = [
            s1.x[0] + t * (s2.x[0] - s1.x[0]),
            s1.x[1] + t * (s2.x[1] - s1.x[1]),
        ];
        let point = BallPoint::project(coords.to_vec(), curvature);
        let lambda = point.lambda();
        let radius = norm(&coords);
        let cell = lambda * (dr.max(radius * dtheta));
        let dist = dist_to_hyperplane(&point, &q, &a)?;
        let ratio = dist / (2.0 * cell);
        worst_ratio = worst_ratio.max(ratio);
        crossings += 1;
        Ok(())
    };
    for i in 0..grid.radial {
        for j in 0..grid.angular {
            if i + 1 < grid.radial {
                consider(sample(i, j), sample(i + 1, j))?;
            }
            consider(sample(i, j), sample(i, (j + 1) % grid.angular))?;
        }
    }
    Ok(ZeroSetCheck {
        worst_ratio,
        crossings,
        pass: crossings > 0 && worst_ratio <= 1.0,
    })
}

/// The anchor point both zero sets share.
pub fn anchor_point(cfg: &ContourConfig) -> Result<BallPoint> {
    let curvature = Curvature::new(cfg.c)?;
    let zu: Vec<f64> = {
        let n = norm(&cfg.z);
        cfg.z.iter().map(|v| v / n * cfg.r).collect()
    };
    Ok(exp_map_origin(curvature, &zu))
}

/// Sanity value: the 1-D baseline zero crossing parameter
/// `tau = <z, log_0 x>` at the anchor equals `r ||z||`.
pub fn baseline_tau(cfg: &ContourConfig) -> f64 {
    let sc = cfg.c.sqrt();
    -artanh(sc * baseline_bias(cfg)) / sc
}

pub fn write_grid_csv<W: std::io::Write>(mut w: W, grid: &ContourGrid) -> std::io::Result<()> {
    writeln!(w, "# config_hash={}", grid.config_hash)?;
    writeln!(w, "x1,x2,value_prev_fc,value_ours")?;
    for s in &grid.samples {
        writeln!(
            w,
            "{},{},{},{}",
            s.x[0], s.x[1], s.value_prev_fc, s.value_ours
        )?;
    }
    Ok(())
}
