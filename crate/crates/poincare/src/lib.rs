//! Hyperbolic neural-network building blocks on the Poincaré ball.
//!
//! The crate is organized around a curvature-parameterized Möbius
//! gyrovector algebra ([`ball`]), coordinate atlases and midpoints over
//! the hyperboloid and Klein models ([`models`]), neural layers whose
//! linear maps decompose into hyperplane distances ([`layers`]), a
//! reverse-mode tape ([`autodiff`]) and first-order optimizers
//! ([`optim`]).

pub mod autodiff;
pub mod ball;
pub mod error;
pub mod layers;
pub mod models;
pub mod numeric;
pub mod optim;

pub use ball::{BallPoint, Curvature, TangentVector};
pub use error::{PoincareError, Result};
