//! Toy aggregation task for the attention stack: sequences contain a
//! marked cluster and a distractor cluster; the model must output the
//! gyromidpoint of the marked subset.

use crate::config::{config_hash, AttentionDemoConfig};
use anyhow::{bail, Result};
use poincare::autodiff::{ops, Tape, Var};
use poincare::ball::{exp_map_origin, BallPoint};
use poincare::layers::params::{Activation, Similarity};
use poincare::models::{mobius_gyromidpoint, WeightedPointSet};
use poincare::optim::{init_params, AdamConfig, EuclideanAdam, InitSpec};
use poincare::Curvature;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct DemoSample {
    pub source: Vec<Vec<f64>>,
    pub label: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct LossCurve {
    pub seed: u64,
    /// Mean training loss per epoch; entry 0 is the pre-training loss.
    pub losses: Vec<f64>,
    pub config_hash: String,
}

/// Marked points cluster in a fixed angular sector, distractors in the
/// opposite sector; the label is the gyromidpoint of the marked subset.
pub fn generate_samples(cfg: &AttentionDemoConfig, seed: u64) -> Result<Vec<DemoSample>> {
    let c = Curvature::new(cfg.c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0xda7a));
    let radius = 0.45 / cfg.c.sqrt().max(1.0);
    let mut samples = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let mut source = Vec::with_capacity(cfg.source_len);
        let mut marked_points = Vec::with_capacity(cfg.marked);
        for s in 0..cfg.source_len {
            let marked = s < cfg.marked;
            let center = if marked { 0.0 } else { std::f64::consts::PI };
            let angle = center + rng.gen_range(-0.5..0.5);
            let r = radius * rng.gen_range(0.7..1.0);
            let mut coords = vec![0.0; cfg.dim];
            coords[0] = r * angle.cos();
            if cfg.dim > 1 {
                coords[1] = r * angle.sin();
            }
            if marked {
                marked_points.push(BallPoint::new(coords.clone(), c)?);
            }
            source.push(coords);
        }
        let label_set = WeightedPointSet::new(marked_points, vec![1.0; cfg.marked])
            .map_err(|e| anyhow::anyhow!(e))?;
        let label = mobius_gyromidpoint(&label_set).coords().to_vec();
        samples.push(DemoSample { source, label });
    }
    Ok(samples)
}

struct DemoModel {
    query: Vec<Vec<f64>>,
    query_r: Vec<f64>,
    key: Vec<Vec<f64>>,
    key_r: Vec<f64>,
    value: Vec<Vec<f64>>,
    value_r: Vec<f64>,
    readout: Vec<Vec<f64>>,
    readout_r: Vec<f64>,
}

impl DemoModel {
    fn init(cfg: &AttentionDemoConfig, c: Curvature, seed: u64) -> Result<Self> {
        let proj = cfg.heads * cfg.head_dim;
        let fc = |fan_seed: u64, n: usize, m: usize| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
            let p = init_params(&InitSpec::Fc { in_dim: n, out_dim: m }, c, fan_seed)?
                .into_linear();
            Ok((p.z().to_vec(), p.r().to_vec()))
        };
        let (query, query_r) = fc(seed.wrapping_add(1), cfg.dim, proj)?;
        let (key, key_r) = fc(seed.wrapping_add(2), cfg.dim, proj)?;
        let (value, value_r) = fc(seed.wrapping_add(3), cfg.dim, proj)?;
        let (readout, readout_r) = fc(seed.wrapping_add(4), proj, cfg.dim)?;
        Ok(Self {
            query,
            query_r,
            key,
            key_r,
            value,
            value_r,
            readout,
            readout_r,
        })
    }

    fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (z, r) in [
            (&self.query, &self.query_r),
            (&self.key, &self.key_r),
            (&self.value, &self.value_r),
            (&self.readout, &self.readout_r),
        ] {
            out.extend(z.iter().flatten());
            out.extend(r.iter());
        }
        out
    }

    fn unflatten(&mut self, flat: &[f64]) {
        let mut cursor = 0;
        for (z, r) in [
            (&mut self.query, &mut self.query_r),
            (&mut self.key, &mut self.key_r),
            (&mut self.value, &mut self.value_r),
            (&mut self.readout, &mut self.readout_r),
        ] {
            for row in z.iter_mut() {
                let len = row.len();
                row.copy_from_slice(&flat[cursor..cursor + len]);
                cursor += len;
            }
            let len = r.len();
            r.copy_from_slice(&flat[cursor..cursor + len]);
            cursor += len;
        }
        debug_assert_eq!(cursor, flat.len());
    }
}

struct TapedModel {
    query: ops::TapedLinear,
    key: ops::TapedLinear,
    value: ops::TapedLinear,
    readout: ops::TapedLinear,
}

fn leaf_linear(t: &mut Tape, z: &[Vec<f64>], r: &[f64]) -> ops::TapedLinear {
    ops::TapedLinear {
        z: z.iter().map(|row| t.leaf(row.clone())).collect(),
        r: r.iter().map(|&x| t.leaf(vec![x])).collect(),
    }
}

fn build_loss(
    t: &mut Tape,
    model: &DemoModel,
    cfg: &AttentionDemoConfig,
    c: Curvature,
    samples: &[DemoSample],
    probe: &[f64],
) -> Result<(Var, TapedModel)> {
    let taped = TapedModel {
        query: leaf_linear(t, &model.query, &model.query_r),
        key: leaf_linear(t, &model.key, &model.key_r),
        value: leaf_linear(t, &model.value, &model.value_r),
        readout: leaf_linear(t, &model.readout, &model.readout_r),
    };
    let att_cfg = ops::TapedAttention {
        heads: cfg.heads,
        head_dim: cfg.head_dim,
        query: &taped.query,
        key: &taped.key,
        value: &taped.value,
        similarity: Similarity::NegDistance {
            tau: cfg.tau,
            gamma: 0.0,
        },
        activation: Activation::Exp,
    };
    let mut terms = Vec::with_capacity(samples.len());
    for sample in samples {
        let source: Vec<Var> = sample
            .source
            .iter()
            .map(|coords| t.constant(coords.clone()))
            .collect();
        let target = vec![t.constant(probe.to_vec())];
        let gap = if cfg.euclidean_reference {
            let mixed = ops::euclid::attention(t, &source, &target, &att_cfg, None)
                .map_err(|e| anyhow::anyhow!(e))?[0];
            let pred = ops::euclid::fc(t, mixed, &taped.readout);
            let label = t.constant(sample.label.clone());
            ops::euclid::distance(t, pred, label)
        } else {
            let mixed = ops::attention(t, c, &source, &target, &att_cfg, None)
                .map_err(|e| anyhow::anyhow!(e))?[0];
            let pred = ops::poincare_fc(t, c, mixed, &taped.readout.z, &taped.readout.r);
            let label = t.constant(sample.label.clone());
            ops::distance(t, c, pred, label)
        };
        let sq = t.mul(gap, gap);
        terms.push(sq);
    }
    let all = t.concat(&terms);
    let summed = t.sum(all);
    let inv = t.scalar_const(1.0 / samples.len() as f64);
    Ok((t.mul(inv, summed), taped))
}

/// Train one seed; returns the per-epoch mean loss curve (entry 0 is the
/// pre-training loss).
pub fn run_attention_demo(cfg: &AttentionDemoConfig, seed: u64) -> Result<LossCurve> {
    anyhow::ensure!(cfg.marked >= 1 && cfg.marked < cfg.source_len);
    let c = Curvature::new(cfg.c)?;
    let samples = generate_samples(cfg, seed)?;
    let mut model = DemoModel::init(cfg, c, seed)?;
    let probe = {
        let mut v = vec![0.0; cfg.dim];
        v[0] = 0.3 / cfg.c.sqrt().max(1.0);
        exp_map_origin(c, &v).coords().to_vec()
    };
    let mut adam = EuclideanAdam::new(AdamConfig::with_lr(cfg.lr), model.flat().len());

    let eval_loss = |model: &DemoModel| -> Result<f64> {
        let mut t = Tape::new();
        let (loss, _) = build_loss(&mut t, model, cfg, c, &samples, &probe)?;
        Ok(t.value(loss)[0])
    };

    let mut losses = vec![eval_loss(&model)?];
    for epoch in 0..cfg.epochs {
        let mut t = Tape::new();
        let (loss, taped) = build_loss(&mut t, &model, cfg, c, &samples, &probe)?;
        let value = t.value(loss)[0];
        if !value.is_finite() {
            bail!("attention demo diverged at epoch {epoch}: loss {value}");
        }
        let grads = t.backward(loss).map_err(|e| anyhow::anyhow!(e))?;
        let mut flat_grads = Vec::with_capacity(model.flat().len());
        for linear in [&taped.query, &taped.key, &taped.value, &taped.readout] {
            for &z in &linear.z {
                flat_grads.extend_from_slice(grads.wrt(z));
            }
            for &r in &linear.r {
                flat_grads.extend_from_slice(grads.wrt(r));
            }
        }
        let mut flat = model.flat();
        adam.step(&mut flat, &flat_grads).map_err(|e| anyhow::anyhow!(e))?;
        model.unflatten(&flat);
        losses.push(eval_loss(&model)?);
    }
    Ok(LossCurve {
        seed,
        losses,
        config_hash: config_hash(cfg, seed),
    })
}

pub fn write_curve_csv<W: std::io::Write>(mut w: W, curve: &LossCurve) -> std::io::Result<()> {
    writeln!(w, "# config_hash={}", curve.config_hash)?;
    writeln!(w, "epoch,loss")?;
    for (epoch, loss) in curve.losses.iter().enumerate() {
        writeln!(w, "{epoch},{loss}")?;
    }
    Ok(())
}
