use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use poincare::Curvature;
use poincare_cli::attention_demo::{run_attention_demo, write_curve_csv};
use poincare_cli::config::{self, config_hash};
use poincare_cli::contours::{check_zero_set, emit_contours, write_grid_csv};
use poincare_cli::fuzz::fuzz_midpoints;
use poincare_cli::subtree::{run_subtree_mlr, write_report_csv};
use poincare_cli::tree::{embed_tree, write_tree_csv};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "poincare",
    about = "Hyperbolic-layer experiments on the Poincare ball"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config's primary seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (CSV); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a synthetic tree into the 2-D ball and emit its coordinates.
    EmbedTree(Common),
    /// Sub-tree classification: ball MLR vs a Euclidean baseline.
    SubtreeMlr(Common),
    /// Contour grid of the FC layer against the tangent-space baseline.
    Contours(Common),
    /// Differential fuzzing of the three midpoint constructions.
    FuzzMidpoints(Common),
    /// Train attention on a marked-subset aggregation toy task.
    AttentionDemo(Common),
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::EmbedTree(common) => {
            let mut spec: config::TreeSpec = config::load_config(common.config.as_deref())?;
            if let Some(seed) = common.seed {
                spec.seed = seed;
            }
            let tree = embed_tree(&spec, Curvature::new(1.0)?)?;
            let hash = config_hash(&spec, spec.seed);
            write_tree_csv(writer(&common.out)?, &tree, &hash)?;
        }
        Command::SubtreeMlr(common) => {
            let mut cfg: config::SubtreeConfig = config::load_config(common.config.as_deref())?;
            if let Some(seed) = common.seed {
                cfg.tree.seed = seed;
            }
            let report = run_subtree_mlr(&cfg)?;
            write_report_csv(writer(&common.out)?, &report)?;
            eprintln!(
                "unidirectional mean F1 {:.4} | euclidean mean F1 {:.4}",
                report.hyperbolic_mean, report.euclidean_mean
            );
        }
        Command::Contours(common) => {
            let cfg: config::ContourConfig = config::load_config(common.config.as_deref())?;
            let grid = emit_contours(&cfg)?;
            let ours = check_zero_set(&cfg, &grid, |s| s.value_ours)?;
            let prev = check_zero_set(&cfg, &grid, |s| s.value_prev_fc)?;
            write_grid_csv(writer(&common.out)?, &grid)?;
            eprintln!(
                "ours zero set: {} crossings, worst ratio {:.3} -> {}",
                ours.crossings,
                ours.worst_ratio,
                if ours.pass { "on hyperplane" } else { "OFF hyperplane" }
            );
            eprintln!(
                "prev zero set: {} crossings, worst ratio {:.3} -> {}",
                prev.crossings,
                prev.worst_ratio,
                if prev.pass { "on hyperplane" } else { "OFF hyperplane" }
            );
            if !ours.pass {
                anyhow::bail!("proposed FC zero set left its hyperplane");
            }
        }
        Command::FuzzMidpoints(common) => {
            let mut cfg: config::FuzzConfig = config::load_config(common.config.as_deref())?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            let report = fuzz_midpoints(&cfg)?;
            let mut w = writer(&common.out)?;
            writeln!(w, "# config_hash={}", config_hash(&cfg, cfg.seed))?;
            writeln!(w, "trials,max_divergence,max_objective_violation")?;
            writeln!(
                w,
                "{},{},{}",
                report.trials, report.max_divergence, report.max_objective_violation
            )?;
            eprintln!(
                "max divergence {:.3e}, max objective violation {:.3e} over {} trials",
                report.max_divergence, report.max_objective_violation, report.trials
            );
            if !report.passed() {
                anyhow::bail!("midpoint divergence exceeded {:.1e}", report.threshold);
            }
        }
        Command::AttentionDemo(common) => {
            let mut cfg: config::AttentionDemoConfig =
                config::load_config(common.config.as_deref())?;
            if let Some(seed) = common.seed {
                cfg.seeds = vec![seed];
            }
            let mut w = writer(&common.out)?;
            for &seed in &cfg.seeds {
                let curve = run_attention_demo(&cfg, seed)?;
                writeln!(w, "# seed={seed}")?;
                write_curve_csv(&mut w, &curve)?;
                let initial = curve.losses[0];
                let last = *curve.losses.last().unwrap();
                eprintln!(
                    "seed {seed}: loss {initial:.4} -> {last:.4} ({} epochs)",
                    curve.losses.len() - 1
                );
            }
        }
    }
    Ok(())
}
