//! Sub-tree membership classification on frozen tree embeddings:
//! unidirectional ball MLR against a flat Euclidean MLR baseline.

use crate::config::{config_hash, SubtreeConfig};
use crate::tree::{embed_tree, EmbeddedTree};
use anyhow::{bail, Context, Result};
use poincare::autodiff::{ops, Tape, Var};
use poincare::ball::BallPoint;
use poincare::layers::{mlr_score, softmax, LinearParams};
use poincare::optim::{init_params, AdamConfig, EuclideanAdam, InitSpec};
use poincare::Curvature;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct SeedResult {
    pub seed: u64,
    pub hyperbolic_f1: f64,
    pub euclidean_f1: f64,
}

#[derive(Clone, Debug)]
pub struct SubtreeReport {
    pub results: Vec<SeedResult>,
    pub hyperbolic_mean: f64,
    pub euclidean_mean: f64,
    pub config_hash: String,
}

/// Binary F1 of the positive class.
pub fn binary_f1(predictions: &[bool], labels: &[bool]) -> f64 {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fn_ = 0.0;
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fn_ += 1.0,
            _ => {}
        }
    }
    if tp == 0.0 {
        return 0.0;
    }
    2.0 * tp / (2.0 * tp + fp + fn_)
}

struct Split {
    train: Vec<usize>,
    test: Vec<usize>,
}

fn split_nodes(tree: &EmbeddedTree, labels: &[bool], cfg: &SubtreeConfig, seed: u64) -> Result<Split> {
    let mut idx: Vec<usize> = (0..tree.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0511);
    idx.shuffle(&mut rng);
    let cut = ((tree.len() as f64) * cfg.train_fraction).round() as usize;
    let (train, test) = idx.split_at(cut.min(tree.len() - 1));
    let split = Split {
        train: train.to_vec(),
        test: test.to_vec(),
    };
    for (name, part) in [("training", &split.train), ("test", &split.test)] {
        let pos = part.iter().filter(|&&i| labels[i]).count();
        if pos == 0 || pos == part.len() {
            bail!(
                "degenerate {name} split for subtree rooted at node {}: one class only",
                cfg.subtree_root
            );
        }
    }
    Ok(split)
}

/// Flattened trainable state for a 2-class linear head.
struct Head {
    z: Vec<Vec<f64>>,
    r: Vec<f64>,
    adam: EuclideanAdam,
}

impl Head {
    fn new(init: LinearParams, lr: f64) -> Self {
        let z = init.z().to_vec();
        let r = init.r().to_vec();
        let len = z.len() * z[0].len() + r.len();
        Self {
            z,
            r,
            adam: EuclideanAdam::new(AdamConfig::with_lr(lr), len),
        }
    }

    fn flat(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.z.iter().flatten().cloned().collect();
        out.extend(&self.r);
        out
    }

    fn unflatten(&mut self, flat: &[f64]) {
        let n = self.z[0].len();
        for (k, row) in self.z.iter_mut().enumerate() {
            row.copy_from_slice(&flat[k * n..(k + 1) * n]);
        }
        let offset = self.z.len() * n;
        self.r.copy_from_slice(&flat[offset..]);
    }
}

enum Model {
    Hyperbolic(Curvature),
    Euclidean,
}

fn batch_loss_and_grads(
    model: &Model,
    head: &Head,
    points: &[BallPoint],
    labels: &[bool],
    batch: &[usize],
) -> Result<(f64, Vec<f64>)> {
    let mut t = Tape::new();
    let z_leaves: Vec<Var> = head.z.iter().map(|row| t.leaf(row.clone())).collect();
    let r_leaves: Vec<Var> = head.r.iter().map(|&x| t.leaf(vec![x])).collect();
    let mut terms = Vec::with_capacity(batch.len());
    for &i in batch {
        let x = t.constant(points[i].coords().to_vec());
        let scores = match model {
            Model::Hyperbolic(c) => ops::mlr_score(&mut t, *c, x, &z_leaves, &r_leaves),
            Model::Euclidean => {
                let rows: Vec<Var> = z_leaves
                    .iter()
                    .zip(&r_leaves)
                    .map(|(&zk, &rk)| {
                        let zx = t.dot(zk, x);
                        t.sub(zx, rk)
                    })
                    .collect();
                t.concat(&rows)
            }
        };
        let label = usize::from(labels[i]);
        terms.push(ops::softmax_cross_entropy(&mut t, scores, label));
    }
    let total = t.concat(&terms);
    let summed = t.sum(total);
    let inv = t.scalar_const(1.0 / batch.len() as f64);
    let loss = t.mul(inv, summed);
    let grads = t.backward(loss)?;
    let mut flat = Vec::with_capacity(head.flat().len());
    for &z in &z_leaves {
        flat.extend_from_slice(grads.wrt(z));
    }
    for &r in &r_leaves {
        flat.extend_from_slice(grads.wrt(r));
    }
    Ok((t.value(loss)[0], flat))
}

fn scores_for(model: &Model, head: &Head, point: &BallPoint) -> Result<Vec<f64>> {
    match model {
        Model::Hyperbolic(c) => {
            let params = LinearParams::new(head.z.clone(), head.r.clone(), *c)?;
            Ok(mlr_score(point, &params)?)
        }
        Model::Euclidean => Ok(head
            .z
            .iter()
            .zip(&head.r)
            .map(|(zk, rk)| poincare::numeric::dot(zk, point.coords()) - rk)
            .collect()),
    }
}

fn train_and_eval(
    model: Model,
    tree: &EmbeddedTree,
    labels: &[bool],
    split: &Split,
    cfg: &SubtreeConfig,
    seed: u64,
) -> Result<f64> {
    let c = Curvature::new(cfg.c)?;
    let init = init_params(
        &InitSpec::Mlr {
            in_dim: 2,
            classes: 2,
        },
        c,
        seed,
    )?
    .into_linear();
    let mut head = Head::new(init, cfg.lr);
    let mut order = split.train.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(17));
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grads) =
                batch_loss_and_grads(&model, &head, &tree.points, labels, batch)?;
            if !loss.is_finite() {
                bail!("training diverged: non-finite loss");
            }
            let mut flat = head.flat();
            head.adam.step(&mut flat, &grads)?;
            head.unflatten(&flat);
        }
    }
    let mut predictions = Vec::with_capacity(split.test.len());
    let mut truth = Vec::with_capacity(split.test.len());
    for &i in &split.test {
        let scores = scores_for(&model, &head, &tree.points[i])?;
        let probs = softmax(&scores);
        predictions.push(probs[1] > probs[0]);
        truth.push(labels[i]);
    }
    Ok(binary_f1(&predictions, &truth))
}

/// Run the benchmark over all configured seeds.
pub fn run_subtree_mlr(cfg: &SubtreeConfig) -> Result<SubtreeReport> {
    let c = Curvature::new(cfg.c)?;
    let tree = embed_tree(&cfg.tree, c)?;
    if cfg.subtree_root >= tree.len() {
        bail!(
            "subtree root {} outside the tree of {} nodes",
            cfg.subtree_root,
            tree.len()
        );
    }
    let mut labels = vec![false; tree.len()];
    for i in tree.subtree(cfg.subtree_root) {
        labels[i] = true;
    }
    let mut results = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let split = split_nodes(&tree, &labels, cfg, seed)?;
        let hyperbolic = train_and_eval(
            Model::Hyperbolic(c),
            &tree,
            &labels,
            &split,
            cfg,
            seed,
        )
        .context("hyperbolic model")?;
        let euclidean =
            train_and_eval(Model::Euclidean, &tree, &labels, &split, cfg, seed)
                .context("euclidean baseline")?;
        results.push(SeedResult {
            seed,
            hyperbolic_f1: hyperbolic,
            euclidean_f1: euclidean,
        });
    }
    let n = results.len() as f64;
    Ok(SubtreeReport {
        hyperbolic_mean: results.iter().map(|r| r.hyperbolic_f1).sum::<f64>() / n,
        euclidean_mean: results.iter().map(|r| r.euclidean_f1).sum::<f64>() / n,
        results,
        config_hash: config_hash(cfg, cfg.tree.seed),
    })
}

/// CSV rows `model,seed,f1` under a config-hash header.
pub fn write_report_csv<W: std::io::Write>(
    mut w: W,
    report: &SubtreeReport,
) -> std::io::Result<()> {
    writeln!(w, "# config_hash={}", report.config_hash)?;
    writeln!(w, "model,seed,f1")?;
    for r in &report.results {
        writeln!(w, "unidirectional,{},{}", r.seed, r.hyperbolic_f1)?;
        writeln!(w, "euclidean,{},{}", r.seed, r.euclidean_f1)?;
    }
    Ok(())
}
