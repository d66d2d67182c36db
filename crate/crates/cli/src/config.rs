//! Experiment configuration records and the config hash stamped into
//! every metrics file.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Synthetic tree description.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TreeSpec {
    pub depth: usize,
    pub branching: usize,
    pub seed: u64,
    /// Geodesic length of every edge.
    pub edge_len: f64,
}

impl Default for TreeSpec {
    fn default() -> Self {
        Self {
            depth: 5,
            branching: 3,
            seed: 0,
            edge_len: 1.0,
        }
    }
}

impl TreeSpec {
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.depth >= 2, "tree depth must be at least 2");
        anyhow::ensure!(self.branching >= 2, "branching factor must be at least 2");
        anyhow::ensure!(self.edge_len > 0.0, "edge length must be positive");
        Ok(())
    }
}

/// Sub-tree classification benchmark configuration.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SubtreeConfig {
    pub tree: TreeSpec,
    pub c: f64,
    /// Node whose subtree forms the positive class.
    pub subtree_root: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seeds: Vec<u64>,
    pub train_fraction: f64,
}

impl Default for SubtreeConfig {
    fn default() -> Self {
        Self {
            tree: TreeSpec::default(),
            c: 1.0,
            subtree_root: 1,
            epochs: 30,
            batch_size: 16,
            lr: 1e-3,
            seeds: vec![0, 1, 2],
            train_fraction: 0.8,
        }
    }
}

/// FC contour grid configuration.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ContourConfig {
    pub c: f64,
    /// Orientation row of the single output dimension.
    pub z: Vec<f64>,
    pub r: f64,
    pub radial_samples: usize,
    pub angular_samples: usize,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            z: vec![0.8, 0.45],
            r: 0.45,
            radial_samples: 256,
            angular_samples: 256,
        }
    }
}

/// Midpoint fuzzing configuration.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FuzzConfig {
    pub trials: usize,
    pub max_dim: usize,
    pub max_points: usize,
    pub curvatures: Vec<f64>,
    pub seed: u64,
    /// Self-test mode: perturb one formula by 1e-6 and expect detection.
    pub inject_fault: bool,
    /// Run the minimizer-objective check on this many trials.
    pub objective_trials: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            max_dim: 16,
            max_points: 32,
            curvatures: vec![0.5, 1.0, 2.0],
            seed: 0,
            inject_fault: false,
            objective_trials: 100,
        }
    }
}

/// Attention toy-task configuration.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AttentionDemoConfig {
    pub c: f64,
    pub dim: usize,
    pub source_len: usize,
    pub marked: usize,
    pub heads: usize,
    pub head_dim: usize,
    pub samples: usize,
    pub epochs: usize,
    pub lr: f64,
    pub tau: f64,
    pub seeds: Vec<u64>,
    /// Train the c -> 0 limit reference path instead of the ball path.
    pub euclidean_reference: bool,
}

impl Default for AttentionDemoConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            dim: 2,
            source_len: 8,
            marked: 3,
            heads: 2,
            head_dim: 2,
            samples: 24,
            epochs: 60,
            lr: 5e-3,
            tau: 2.0,
            seeds: vec![0, 1, 2],
            euclidean_reference: false,
        }
    }
}

/// Short hex digest of a config value plus seed; stamped into CSV output.
pub fn config_hash<T: Serialize>(config: &T, seed: u64) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    hasher.update(seed.to_le_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Load a config from a JSON file, or defaults when no path is given.
pub fn load_config<T: for<'de> Deserialize<'de> + Default>(
    path: Option<&std::path::Path>,
) -> anyhow::Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", p.display()))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}
