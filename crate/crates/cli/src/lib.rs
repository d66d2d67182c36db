//! Desk-scale experiment harness: synthetic-tree embedding, sub-tree MLR
//! benchmark, FC contour grids, midpoint differential fuzzing and an
//! attention toy task. Every run is reproducible from `(config, seed)`
//! and metrics files carry the config hash.

pub mod attention_demo;
pub mod config;
pub mod contours;
pub mod fuzz;
pub mod subtree;
pub mod tree;
