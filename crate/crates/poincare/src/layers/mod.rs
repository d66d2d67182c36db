//! Neural components on the ball: unidirectional MLR, FC, beta-split /
//! beta-concatenation, convolution and multi-head attention.

pub mod attention;
pub mod beta;
pub mod conv;
pub mod fc;
pub mod mlr;
pub mod params;

pub use attention::{euclidean_reference, poincare_attention};
pub use beta::{beta_coefficient, beta_concat, beta_split, BetaCoefficients};
pub use conv::{poincare_conv, FeatureMap};
pub use fc::{poincare_fc, signed_axis_distances};
pub use mlr::{mlr_predict, mlr_score, softmax, transport_orientation};
pub use params::{
    Activation, AttentionParams, Checkpoint, ConvParams, LinearParams, OptimizerState,
    Similarity,
};
