//! Layer parameter containers and the JSON checkpoint format.

use crate::ball::Curvature;
use crate::error::{PoincareError, Result};
use serde::{Deserialize, Serialize};

/// The `(Z, r)` pair shared by the MLR, FC and convolutional layers:
/// `m` tangent-at-origin orientation rows `z_k` plus `m` scalar biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    z: Vec<Vec<f64>>,
    r: Vec<f64>,
    curvature: Curvature,
}

impl LinearParams {
    pub fn new(z: Vec<Vec<f64>>, r: Vec<f64>, curvature: Curvature) -> Result<Self> {
        if z.is_empty() || z.len() != r.len() {
            return Err(PoincareError::Contract(format!(
                "need equally many orientation rows and biases (>= 1), got {} and {}",
                z.len(),
                r.len()
            )));
        }
        let n = z[0].len();
        if z.iter().any(|row| row.len() != n) {
            return Err(PoincareError::Contract(
                "orientation rows must share one dimension".into(),
            ));
        }
        if z.iter().flatten().any(|x| !x.is_finite()) || r.iter().any(|x| !x.is_finite()) {
            return Err(PoincareError::NonFinite("layer parameters".into()));
        }
        Ok(Self { z, r, curvature })
    }

    #[inline]
    pub fn z(&self) -> &[Vec<f64>] {
        &self.z
    }

    #[inline]
    pub fn r(&self) -> &[f64] {
        &self.r
    }

    #[inline]
    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    /// Input dimension `n`.
    #[inline]
    pub fn in_dim(&self) -> usize {
        self.z[0].len()
    }

    /// Output dimension `m` (number of rows).
    #[inline]
    pub fn out_dim(&self) -> usize {
        self.z.len()
    }

    pub fn set_z(&mut self, k: usize, row: Vec<f64>) -> Result<()> {
        if row.len() != self.in_dim() {
            return Err(PoincareError::DimensionMismatch {
                expected: self.in_dim(),
                got: row.len(),
            });
        }
        self.z[k] = row;
        Ok(())
    }

    pub fn set_r(&mut self, k: usize, value: f64) {
        self.r[k] = value;
    }
}

/// Parameters of the Poincaré convolution: spatial kernel, dilation and the
/// inner FC over the flattened receptive field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvParams {
    pub kernel_sizes: Vec<usize>,
    pub dilation: Vec<usize>,
    pub padding: Vec<usize>,
    pub in_channels: usize,
    pub out_channels: usize,
    pub fc: LinearParams,
}

impl ConvParams {
    pub fn new(
        kernel_sizes: Vec<usize>,
        dilation: Vec<usize>,
        padding: Vec<usize>,
        in_channels: usize,
        fc: LinearParams,
    ) -> Result<Self> {
        if kernel_sizes.is_empty() || kernel_sizes.iter().any(|&k| k == 0) {
            return Err(PoincareError::Contract(
                "kernel sizes must be positive".into(),
            ));
        }
        if dilation.len() != kernel_sizes.len() || dilation.iter().any(|&d| d == 0) {
            return Err(PoincareError::Contract(
                "need one positive dilation per spatial dimension".into(),
            ));
        }
        if padding.len() != kernel_sizes.len() {
            return Err(PoincareError::Contract(
                "need one padding per spatial dimension".into(),
            ));
        }
        let k_total: usize = kernel_sizes.iter().product();
        if fc.in_dim() != in_channels * k_total {
            return Err(PoincareError::Contract(format!(
                "inner FC expects dimension {} = in_channels * K, got {}",
                in_channels * k_total,
                fc.in_dim()
            )));
        }
        let out_channels = fc.out_dim();
        Ok(Self {
            kernel_sizes,
            dilation,
            padding,
            in_channels,
            out_channels,
            fc,
        })
    }

    pub fn kernel_len(&self) -> usize {
        self.kernel_sizes.iter().product()
    }
}

/// Similarity function between query and key gyrovectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Similarity {
    /// `-tau * d_c(q, k) - gamma` with inverse temperature `tau > 0`.
    NegDistance { tau: f64, gamma: f64 },
    /// `<log_0(q), log_0(k)> / sqrt(d)`.
    TangentInnerProduct,
}

/// Weight activation applied to similarities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Exp,
    Sigmoid,
    Identity,
}

/// Multi-head attention parameters: three FC projections plus the
/// similarity/activation choice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionParams {
    pub heads: usize,
    pub head_dim: usize,
    pub query: LinearParams,
    pub key: LinearParams,
    pub value: LinearParams,
    pub similarity: Similarity,
    pub activation: Activation,
}

impl AttentionParams {
    pub fn new(
        heads: usize,
        head_dim: usize,
        query: LinearParams,
        key: LinearParams,
        value: LinearParams,
        similarity: Similarity,
        activation: Activation,
    ) -> Result<Self> {
        let proj = heads * head_dim;
        if heads == 0 || head_dim == 0 {
            return Err(PoincareError::Contract(
                "heads and head_dim must be positive".into(),
            ));
        }
        for (name, p) in [("query", &query), ("key", &key), ("value", &value)] {
            if p.out_dim() != proj {
                return Err(PoincareError::Contract(format!(
                    "{name} projection must output heads * head_dim = {proj}, got {}",
                    p.out_dim()
                )));
            }
        }
        if let Similarity::NegDistance { tau, .. } = similarity {
            if !(tau > 0.0) {
                return Err(PoincareError::Domain(
                    "inverse temperature tau must be positive".into(),
                ));
            }
        }
        Ok(Self {
            heads,
            head_dim,
            query,
            key,
            value,
            similarity,
            activation,
        })
    }
}

/// A layer checkpoint: everything needed to rebuild a layer, plus an
/// optional optimizer-state block. Values survive the JSON round trip
/// bit-exactly (shortest-round-trip decimal encoding of every f64).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub layer_type: String,
    pub c: f64,
    /// Orientation rows, row-major.
    pub z: Vec<Vec<f64>>,
    pub r: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerState>,
}

/// Adaptive-moment optimizer state attached to a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl Checkpoint {
    pub fn from_linear(layer_type: &str, params: &LinearParams) -> Self {
        Self {
            layer_type: layer_type.to_string(),
            c: params.curvature().get(),
            z: params.z().to_vec(),
            r: params.r().to_vec(),
            in_dim: params.in_dim(),
            out_dim: params.out_dim(),
            optimizer: None,
        }
    }

    pub fn to_linear(&self) -> Result<LinearParams> {
        LinearParams::new(self.z.clone(), self.r.clone(), Curvature::new(self.c)?)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| PoincareError::Contract(format!("checkpoint encode: {e}")))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s)
            .map_err(|e| PoincareError::Contract(format!("checkpoint decode: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let c = Curvature::new(1.0).unwrap();
        // awkward values: subnormal-ish, repeating binary fractions, exact ints
        let z = vec![
            vec![0.1, 2.0 / 3.0, 1e-300],
            vec![-123456.789012345678, 0.30000000000000004, 5.0],
        ];
        let r = vec![f64::MIN_POSITIVE, -0.7777777777777777];
        let params = LinearParams::new(z, r, c).unwrap();
        let ck = Checkpoint::from_linear("fc", &params);
        let json = ck.to_json().unwrap();
        let back = Checkpoint::from_json(&json).unwrap();
        assert_eq!(ck, back);
        let rebuilt = back.to_linear().unwrap();
        for (a, b) in params.z().iter().flatten().zip(rebuilt.z().iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in params.r().iter().zip(rebuilt.r()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn checkpoint_carries_optimizer_state() {
        let c = Curvature::new(0.5).unwrap();
        let params = LinearParams::new(vec![vec![0.1, 0.2]], vec![0.0], c).unwrap();
        let mut ck = Checkpoint::from_linear("mlr", &params);
        ck.optimizer = Some(OptimizerState {
            step: 42,
            first_moment: vec![0.25; 3],
            second_moment: vec![0.125; 3],
        });
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
        assert_eq!(back.optimizer.as_ref().unwrap().step, 42);
        assert_eq!(ck, back);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let c = Curvature::new(1.0).unwrap();
        assert!(LinearParams::new(vec![], vec![], c).is_err());
        assert!(LinearParams::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0.0, 0.0], c).is_err());
        assert!(LinearParams::new(vec![vec![f64::NAN]], vec![0.0], c).is_err());
    }
}
