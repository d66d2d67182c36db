//! Reverse-mode differentiation over a small vector-primitive set.
//!
//! A [`Tape`] records operations in execution order; [`Tape::backward`]
//! sweeps it once in reverse, accumulating adjoints. Values are flat
//! `f64` vectors; scalars are length-1 vectors.

pub mod check;
pub mod ops;

use crate::error::{PoincareError, Result};

pub use check::grad_check;

/// The primitive operations a tape can record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Primitive {
    Add,
    Sub,
    Mul,
    Div,
    Dot,
    Norm,
    Tanh,
    Artanh,
    Sinh,
    Asinh,
    Cosh,
    Sech,
    Sqrt,
    Exp,
    Log,
    Clamp { lo: f64, hi: f64 },
    Concat,
    Slice { start: usize, len: usize },
    Scale,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Constant,
    Prim { prim: Primitive, inputs: Vec<usize> },
}

#[derive(Clone, Debug)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

/// Handle to a node on the tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

/// Differentiation tape; one per forward-backward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// A differentiable input.
    pub fn leaf(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    /// A non-differentiable input.
    pub fn constant(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Constant)
    }

    pub fn scalar_const(&mut self, value: f64) -> Var {
        self.constant(vec![value])
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Record one primitive; validates arity and dimensions.
    pub fn record(&mut self, prim: Primitive, inputs: &[Var]) -> Result<Var> {
        use Primitive::*;
        let arity_ok = match prim {
            Concat => !inputs.is_empty(),
            Add | Sub | Mul | Div | Dot | Scale => inputs.len() == 2,
            _ => inputs.len() == 1,
        };
        if !arity_ok {
            return Err(PoincareError::Contract(format!(
                "primitive {prim:?} got {} inputs",
                inputs.len()
            )));
        }
        let get = |v: &Var| &self.nodes[v.0].value;
        let value = match prim {
            Add | Sub | Mul | Div => {
                let (a, b) = (get(&inputs[0]), get(&inputs[1]));
                if a.len() != b.len() {
                    return Err(PoincareError::DimensionMismatch {
                        expected: a.len(),
                        got: b.len(),
                    });
                }
                a.iter()
                    .zip(b)
                    .map(|(x, y)| match prim {
                        Add => x + y,
                        Sub => x - y,
                        Mul => x * y,
                        _ => x / y,
                    })
                    .collect()
            }
            Dot => {
                let (a, b) = (get(&inputs[0]), get(&inputs[1]));
                if a.len() != b.len() {
                    return Err(PoincareError::DimensionMismatch {
                        expected: a.len(),
                        got: b.len(),
                    });
                }
                vec![crate::numeric::dot(a, b)]
            }
            Norm => vec![crate::numeric::norm(get(&inputs[0]))],
            Tanh => get(&inputs[0]).iter().map(|x| x.tanh()).collect(),
            Artanh => get(&inputs[0]).iter().map(|x| x.atanh()).collect(),
            Sinh => get(&inputs[0]).iter().map(|x| x.sinh()).collect(),
            Asinh => get(&inputs[0]).iter().map(|x| x.asinh()).collect(),
            Cosh => get(&inputs[0]).iter().map(|x| x.cosh()).collect(),
            Sech => get(&inputs[0]).iter().map(|x| 1.0 / x.cosh()).collect(),
            Sqrt => get(&inputs[0]).iter().map(|x| x.sqrt()).collect(),
            Exp => get(&inputs[0]).iter().map(|x| x.exp()).collect(),
            Log => get(&inputs[0]).iter().map(|x| x.ln()).collect(),
            Clamp { lo, hi } => get(&inputs[0]).iter().map(|x| x.clamp(lo, hi)).collect(),
            Concat => {
                let mut out = Vec::new();
                for v in inputs {
                    out.extend_from_slice(get(v));
                }
                out
            }
            Slice { start, len } => {
                let a = get(&inputs[0]);
                if start + len > a.len() {
                    return Err(PoincareError::Contract(format!(
                        "slice {start}..{} out of range for length {}",
                        start + len,
                        a.len()
                    )));
                }
                a[start..start + len].to_vec()
            }
            Scale => {
                let (s, v) = (get(&inputs[0]), get(&inputs[1]));
                if s.len() != 1 {
                    return Err(PoincareError::Contract(
                        "scale takes a scalar first input".into(),
                    ));
                }
                v.iter().map(|x| s[0] * x).collect()
            }
        };
        Ok(self.push(
            value,
            Op::Prim {
                prim,
                inputs: inputs.iter().map(|v| v.0).collect(),
            },
        ))
    }

    /// Reverse sweep from a scalar output; returns adjoints for every node.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        if self.nodes[output.0].value.len() != 1 {
            return Err(PoincareError::Contract(format!(
                "backward needs a scalar output, got length {}",
                self.nodes[output.0].value.len()
            )));
        }
        let mut adj: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.value.len()])
            .collect();
        adj[output.0][0] = 1.0;

        for i in (0..=output.0).rev() {
            let Op::Prim { prim, ref inputs } = self.nodes[i].op else {
                continue;
            };
            if adj[i].iter().all(|g| *g == 0.0) {
                continue;
            }
            let g = adj[i].clone();
            use Primitive::*;
            match prim {
                Add => {
                    accumulate(&mut adj[inputs[0]], &g, |gk, _| gk);
                    accumulate(&mut adj[inputs[1]], &g, |gk, _| gk);
                }
                Sub => {
                    accumulate(&mut adj[inputs[0]], &g, |gk, _| gk);
                    accumulate(&mut adj[inputs[1]], &g, |gk, _| -gk);
                }
                Mul => {
                    let b = self.nodes[inputs[1]].value.clone();
                    let a = self.nodes[inputs[0]].value.clone();
                    accumulate_with(&mut adj[inputs[0]], &g, &b, |gk, bk| gk * bk);
                    accumulate_with(&mut adj[inputs[1]], &g, &a, |gk, ak| gk * ak);
                }
                Div => {
                    let a = self.nodes[inputs[0]].value.clone();
                    let b = self.nodes[inputs[1]].value.clone();
                    accumulate_with(&mut adj[inputs[0]], &g, &b, |gk, bk| gk / bk);
                    for (k, gk) in g.iter().enumerate() {
                        if *gk != 0.0 {
                            adj[inputs[1]][k] -= gk * a[k] / (b[k] * b[k]);
                        }
                    }
                }
                Dot => {
                    let g0 = g[0];
                    if g0 != 0.0 {
                        let b = self.nodes[inputs[1]].value.clone();
                        let a = self.nodes[inputs[0]].value.clone();
                        for (ga, bk) in adj[inputs[0]].iter_mut().zip(&b) {
                            *ga += g0 * bk;
                        }
                        for (gb, ak) in adj[inputs[1]].iter_mut().zip(&a) {
                            *gb += g0 * ak;
                        }
                    }
                }
                Norm => {
                    let g0 = g[0];
                    let s = self.nodes[i].value[0];
                    // gradient at the zero vector is defined as zero
                    if g0 != 0.0 && s != 0.0 {
                        let a = self.nodes[inputs[0]].value.clone();
                        for (ga, ak) in adj[inputs[0]].iter_mut().zip(&a) {
                            *ga += g0 * ak / s;
                        }
                    }
                }
                Tanh => {
                    let y = self.nodes[i].value.clone();
                    accumulate_with(&mut adj[inputs[0]], &g, &y, |gk, yk| gk * (1.0 - yk * yk));
                }
                Artanh => {
                    let x = self.nodes[inputs[0]].value.clone();
                    accumulate_with(&mut adj[inputs[0]], &g, &x, |gk, xk| {
                        gk / (1.0 - xk * xk)
                    });
                }
                Sinh => {
                    let x = self.nodes[inputs[0]].value.clone();
                    accumulate_with(&mut adj[inputs[0]], &g, &x, |gk, xk| gk * xk.cosh());
                }
                Asinh => {
                    let x = self.nodes[inputs[0]].value.clone();
                    accumulate_with(&mut adj[inputs[0]], &g, &x, |gk, xk| {
                        gk / (1.0 + xk * xk).sqrt()
                    });
                }
                Cosh => {
                    let x = self.nodes[inputs[0]].value.clone();
                    accumulate_with(&mut adj[inputs[0]], &g, &x, |gk, xk| gk * xk.sinh());
                }
                Sech => {
                    let x = self.nodes[inputs[0]].value.clone();
                    accumulate_with(&mut adj[inputs[0]], &g, &x, |gk, xk| {
                        -gk * xk.tanh() / xk.cosh()
                    });
                }
                Sqrt => {
                    let y = self.nodes[i].value.clone();
                    accumulate_with(&mut adj[inputs[0]], &g, &y, |gk, yk| gk / (2.0 * yk));
                }
                Exp => {
                    let y = self.nodes[i].value.clone();
                    accumulate_with(&mut adj[inputs[0]], &g, &y, |gk, yk| gk * yk);
                }
                Log => {
                    let x = self.nodes[inputs[0]].value.clone();
                    accumulate_with(&mut adj[inputs[0]], &g, &x, |gk, xk| gk / xk);
                }
                Clamp { lo, hi } => {
                    // interior one-sided derivative at the exact boundary
                    let x = self.nodes[inputs[0]].value.clone();
                    accumulate_with(&mut adj[inputs[0]], &g, &x, |gk, xk| {
                        if xk >= lo && xk <= hi {
                            gk
                        } else {
                            0.0
                        }
                    });
                }
                Concat => {
                    let mut offset = 0;
                    for &inp in inputs {
                        let len = self.nodes[inp].value.len();
                        for k in 0..len {
                            let gk = g[offset + k];
                            if gk != 0.0 {
                                adj[inp][k] += gk;
                            }
                        }
                        offset += len;
                    }
                }
                Slice { start, .. } => {
                    for (k, gk) in g.iter().enumerate() {
                        if *gk != 0.0 {
                            adj[inputs[0]][start + k] += gk;
                        }
                    }
                }
                Scale => {
                    let s = self.nodes[inputs[0]].value[0];
                    let v = self.nodes[inputs[1]].value.clone();
                    let mut ds = 0.0;
                    for (k, gk) in g.iter().enumerate() {
                        if *gk != 0.0 {
                            ds += gk * v[k];
                            adj[inputs[1]][k] += s * gk;
                        }
                    }
                    adj[inputs[0]][0] += ds;
                }
            }
        }
        // constants are non-differentiable inputs; report zero for them
        for (i, node) in self.nodes.iter().enumerate() {
            if matches!(node.op, Op::Constant) {
                adj[i].iter_mut().for_each(|g| *g = 0.0);
            }
        }
        Ok(Gradients { adj })
    }

    // ---- typed convenience wrappers; dimension errors are caller bugs ----

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.record(Primitive::Add, &[a, b]).expect("add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.record(Primitive::Sub, &[a, b]).expect("sub")
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.record(Primitive::Mul, &[a, b]).expect("mul")
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        self.record(Primitive::Div, &[a, b]).expect("div")
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        self.record(Primitive::Dot, &[a, b]).expect("dot")
    }

    pub fn norm(&mut self, a: Var) -> Var {
        self.record(Primitive::Norm, &[a]).expect("norm")
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.record(Primitive::Tanh, &[a]).expect("tanh")
    }

    pub fn sinh(&mut self, a: Var) -> Var {
        self.record(Primitive::Sinh, &[a]).expect("sinh")
    }

    pub fn asinh(&mut self, a: Var) -> Var {
        self.record(Primitive::Asinh, &[a]).expect("asinh")
    }

    pub fn cosh(&mut self, a: Var) -> Var {
        self.record(Primitive::Cosh, &[a]).expect("cosh")
    }

    pub fn sech(&mut self, a: Var) -> Var {
        self.record(Primitive::Sech, &[a]).expect("sech")
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        self.record(Primitive::Sqrt, &[a]).expect("sqrt")
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.record(Primitive::Exp, &[a]).expect("exp")
    }

    pub fn log(&mut self, a: Var) -> Var {
        self.record(Primitive::Log, &[a]).expect("log")
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.record(Primitive::Clamp { lo, hi }, &[a]).expect("clamp")
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        self.record(Primitive::Concat, parts).expect("concat")
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Var {
        self.record(Primitive::Slice { start, len }, &[a]).expect("slice")
    }

    pub fn scale(&mut self, s: Var, v: Var) -> Var {
        self.record(Primitive::Scale, &[s, v]).expect("scale")
    }

    /// artanh with the same argument guard as the direct path.
    pub fn artanh_guarded(&mut self, a: Var) -> Var {
        let clamped = self.clamp(
            a,
            -1.0 + crate::numeric::ATANH_EPS,
            1.0 - crate::numeric::ATANH_EPS,
        );
        self.record(Primitive::Artanh, &[clamped]).expect("artanh")
    }

    /// sinh with the +-85 argument cap of the direct path.
    pub fn sinh_capped(&mut self, a: Var) -> Var {
        let clamped = self.clamp(a, -crate::numeric::HYP_ARG_MAX, crate::numeric::HYP_ARG_MAX);
        self.sinh(clamped)
    }

    pub fn cosh_capped(&mut self, a: Var) -> Var {
        let clamped = self.clamp(a, -crate::numeric::HYP_ARG_MAX, crate::numeric::HYP_ARG_MAX);
        self.cosh(clamped)
    }

    pub fn asinh_capped(&mut self, a: Var) -> Var {
        let clamped = self.clamp(
            a,
            -crate::numeric::ASINH_ARG_MAX,
            crate::numeric::ASINH_ARG_MAX,
        );
        self.asinh(clamped)
    }

    /// `-v` as a recorded operation.
    pub fn neg(&mut self, v: Var) -> Var {
        let minus_one = self.scalar_const(-1.0);
        self.scale(minus_one, v)
    }

    /// Sum of the entries of `v` (dot with ones).
    pub fn sum(&mut self, v: Var) -> Var {
        let ones = self.constant(vec![1.0; self.value(v).len()]);
        self.dot(v, ones)
    }
}

fn accumulate(dst: &mut [f64], g: &[f64], f: impl Fn(f64, usize) -> f64) {
    for (k, gk) in g.iter().enumerate() {
        if *gk != 0.0 {
            dst[k] += f(*gk, k);
        }
    }
}

fn accumulate_with(dst: &mut [f64], g: &[f64], aux: &[f64], f: impl Fn(f64, f64) -> f64) {
    for ((d, gk), ak) in dst.iter_mut().zip(g).zip(aux) {
        if *gk != 0.0 {
            *d += f(*gk, *ak);
        }
    }
}

/// Adjoints of every tape node after a backward sweep.
pub struct Gradients {
    adj: Vec<Vec<f64>>,
}

impl Gradients {
    /// Gradient of the swept output with respect to `v`.
    pub fn wrt(&self, v: Var) -> &[f64] {
        &self.adj[v.0]
    }
}
