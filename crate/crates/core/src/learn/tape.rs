//! Reverse-mode automatic differentiation over [`Tensor`] values.

use crate::error::{Error, Result};
use crate::geom::GS_EPS;

use super::tensor::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// Adds a `1×n` row to every row.
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    SliceCols(Var, usize),
    ConcatCols(Vec<Var>),
    /// Rows of 6 → rows of 9 (row-major rotation matrix).
    GramSchmidt(Var),
    /// Rows of 4 (raw quaternion) → rows of 9.
    QuatToMat(Var),
    /// `Σ (x − target)²` as a `1×1` value.
    SqErr(Var, Tensor),
    /// `Σ wᵢ xᵢ` over `1×1` inputs.
    WeightedSum(Vec<(Var, f64)>),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gram-Schmidt columns b1, b2, b3 and the two pre-normalization norms.
type GsRow = ([f64; 3], [f64; 3], [f64; 3], f64, f64);

fn gs_row(a: &[f64]) -> Result<GsRow> {
    let a1 = [a[0], a[1], a[2]];
    let a2 = [a[3], a[4], a[5]];
    let n1 = norm(&a1);
    if n1 <= GS_EPS {
        return Err(Error::DegenerateInput("first 6D column has vanishing norm"));
    }
    let b1 = a1.map(|x| x / n1);
    let d = dot(&b1, &a2);
    let u = [a2[0] - d * b1[0], a2[1] - d * b1[1], a2[2] - d * b1[2]];
    let n2 = norm(&u);
    if n2 <= GS_EPS {
        return Err(Error::DegenerateInput("6D columns are parallel"));
    }
    let b2 = u.map(|x| x / n2);
    Ok((b1, b2, cross(&b1, &b2), n1, n2))
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn quat_row(raw: &[f64]) -> Result<([f64; 4], f64)> {
    let n = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2] + raw[3] * raw[3]).sqrt();
    if n <= GS_EPS {
        return Err(Error::DegenerateInput("quaternion has vanishing norm"));
    }
    Ok(([raw[0] / n, raw[1] / n, raw[2] / n, raw[3] / n], n))
}

fn quat_mat(q: &[f64; 4]) -> [f64; 9] {
    let [w, x, y, z] = *q;
    [
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    ]
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (x, r) = (self.value(a), self.value(row));
        assert_eq!((r.rows, r.cols), (1, x.cols), "add_row shape");
        let mut v = x.clone();
        for i in 0..v.rows {
            for (d, b) in v.row_mut(i).iter_mut().zip(&r.data) {
                *d += b;
            }
        }
        self.push(v, Op::AddRow(a, row))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip(self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip(self.value(b), |x, y| x - y);
        self.push(v, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip(self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(sigmoid);
        self.push(v, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let x = self.value(a);
        assert!(start + len <= x.cols, "slice_cols range");
        let mut v = Tensor::zeros(x.rows, len);
        for i in 0..x.rows {
            v.row_mut(i).copy_from_slice(&x.row(i)[start..start + len]);
        }
        self.push(v, Op::SliceCols(a, start))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|&p| self.value(p).cols).sum();
        let mut v = Tensor::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let x = self.value(p);
            assert_eq!(x.rows, rows, "concat_cols rows");
            for i in 0..rows {
                v.row_mut(i)[off..off + x.cols].copy_from_slice(x.row(i));
            }
            off += x.cols;
        }
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn gram_schmidt(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        if x.cols != 6 {
            return Err(Error::dims(format!(
                "gram_schmidt expects 6 columns, got {}",
                x.cols
            )));
        }
        let mut v = Tensor::zeros(x.rows, 9);
        for i in 0..x.rows {
            let (b1, b2, b3, _, _) = gs_row(x.row(i))?;
            let out = v.row_mut(i);
            for r in 0..3 {
                out[r * 3] = b1[r];
                out[r * 3 + 1] = b2[r];
                out[r * 3 + 2] = b3[r];
            }
        }
        Ok(self.push(v, Op::GramSchmidt(a)))
    }

    pub fn quat_to_mat(&mut self, a: Var) -> Result<Var> {
        let x = self.value(a);
        if x.cols != 4 {
            return Err(Error::dims(format!(
                "quat_to_mat expects 4 columns, got {}",
                x.cols
            )));
        }
        let mut v = Tensor::zeros(x.rows, 9);
        for i in 0..x.rows {
            let (q, _) = quat_row(x.row(i))?;
            v.row_mut(i).copy_from_slice(&quat_mat(&q));
        }
        Ok(self.push(v, Op::QuatToMat(a)))
    }

    pub fn sq_err(&mut self, a: Var, target: Tensor) -> Var {
        let x = self.value(a);
        assert_eq!(x.shape(), target.shape(), "sq_err shape");
        let s = x
            .data
            .iter()
            .zip(&target.data)
            .map(|(p, t)| (p - t) * (p - t))
            .sum();
        self.push(Tensor::scalar(s), Op::SqErr(a, target))
    }

    pub fn weighted_sum(&mut self, terms: &[(Var, f64)]) -> Var {
        let s = terms.iter().map(|&(v, w)| w * self.value(v).data[0]).sum();
        self.push(Tensor::scalar(s), Op::WeightedSum(terms.to_vec()))
    }

    /// Gradients of the scalar `loss` with respect to every node; `None` for
    /// nodes the loss does not depend on.
    pub fn backward(&self, loss: Var) -> Gradients {
        let mut g: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        let shape = self.value(loss).shape();
        g[loss.0] = Some(Tensor::from_vec(
            shape.0,
            shape.1,
            vec![1.0; shape.0 * shape.1],
        ));
        for idx in (0..=loss.0).rev() {
            let Some(gy) = g[idx].take() else { continue };
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Leaf) {
                g[idx] = Some(gy);
                continue;
            }
            let mut acc = |v: Var, t: Tensor| match &mut g[v.0] {
                Some(e) => e.add_assign(&t),
                slot => *slot = Some(t),
            };
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::MatMul(a, b) => {
                    acc(*a, gy.matmul_t(self.value(*b)));
                    acc(*b, self.value(*a).t_matmul(&gy));
                }
                Op::AddRow(a, r) => {
                    let mut gr = Tensor::zeros(1, gy.cols);
                    for i in 0..gy.rows {
                        for (d, x) in gr.data.iter_mut().zip(gy.row(i)) {
                            *d += x;
                        }
                    }
                    acc(*r, gr);
                    acc(*a, gy);
                }
                Op::Add(a, b) => {
                    acc(*a, gy.clone());
                    acc(*b, gy);
                }
                Op::Sub(a, b) => {
                    acc(*a, gy.clone());
                    acc(*b, gy.map(|x| -x));
                }
                Op::Mul(a, b) => {
                    acc(*a, gy.zip(self.value(*b), |g, y| g * y));
                    acc(*b, gy.zip(self.value(*a), |g, x| g * x));
                }
                Op::Scale(a, s) => acc(*a, gy.map(|x| x * s)),
                Op::Relu(a) => acc(
                    *a,
                    gy.zip(self.value(*a), |g, x| if x > 0.0 { g } else { 0.0 }),
                ),
                Op::Sigmoid(a) => acc(*a, gy.zip(&node.value, |g, y| g * y * (1.0 - y))),
                Op::Tanh(a) => acc(*a, gy.zip(&node.value, |g, y| g * (1.0 - y * y))),
                Op::SliceCols(a, start) => {
                    let x = self.value(*a);
                    let mut ga = Tensor::zeros(x.rows, x.cols);
                    for i in 0..x.rows {
                        ga.row_mut(i)[*start..*start + gy.cols].copy_from_slice(gy.row(i));
                    }
                    acc(*a, ga);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let c = self.value(p).cols;
                        let mut gp = Tensor::zeros(gy.rows, c);
                        for i in 0..gy.rows {
                            gp.row_mut(i).copy_from_slice(&gy.row(i)[off..off + c]);
                        }
                        off += c;
                        acc(p, gp);
                    }
                }
                Op::GramSchmidt(a) => {
                    let x = self.value(*a);
                    let mut ga = Tensor::zeros(x.rows, 6);
                    for i in 0..x.rows {
                        let row = x.row(i);
                        let (b1, b2, _, n1, n2) =
                            gs_row(row).expect("forward pass already validated the input");
                        let a2 = [row[3], row[4], row[5]];
                        let gr = gy.row(i);
                        let mut gb1 = [gr[0], gr[3], gr[6]];
                        let mut gb2 = [gr[1], gr[4], gr[7]];
                        let gb3 = [gr[2], gr[5], gr[8]];
                        // b3 = b1 × b2
                        let c1 = cross(&b2, &gb3);
                        let c2 = cross(&gb3, &b1);
                        for k in 0..3 {
                            gb1[k] += c1[k];
                            gb2[k] += c2[k];
                        }
                        // b2 = u / |u|,  u = a2 − (b1·a2) b1
                        let p = dot(&b2, &gb2);
                        let gu = [0, 1, 2].map(|k| (gb2[k] - b2[k] * p) / n2);
                        let bu = dot(&b1, &gu);
                        let ga2 = [0, 1, 2].map(|k| gu[k] - b1[k] * bu);
                        let ba = dot(&b1, &a2);
                        for k in 0..3 {
                            gb1[k] -= ba * gu[k] + a2[k] * bu;
                        }
                        // b1 = a1 / |a1|
                        let p1 = dot(&b1, &gb1);
                        let ga1 = [0, 1, 2].map(|k| (gb1[k] - b1[k] * p1) / n1);
                        ga.row_mut(i)
                            .copy_from_slice(&[ga1[0], ga1[1], ga1[2], ga2[0], ga2[1], ga2[2]]);
                    }
                    acc(*a, ga);
                }
                Op::QuatToMat(a) => {
                    let x = self.value(*a);
                    let mut ga = Tensor::zeros(x.rows, 4);
                    for i in 0..x.rows {
                        let (q, n) =
                            quat_row(x.row(i)).expect("forward pass already validated the input");
                        let [w, qx, qy, qz] = q;
                        let m = gy.row(i);
                        let gq = [
                            2.0 * (-m[1] * qz + m[2] * qy + m[3] * qz - m[5] * qx - m[6] * qy
                                + m[7] * qx),
                            2.0 * (m[1] * qy + m[2] * qz + m[3] * qy - 2.0 * m[4] * qx - m[5] * w
                                + m[6] * qz
                                + m[7] * w
                                - 2.0 * m[8] * qx),
                            2.0 * (-2.0 * m[0] * qy + m[1] * qx + m[2] * w + m[3] * qx + m[5] * qz
                                - m[6] * w
                                + m[7] * qz
                                - 2.0 * m[8] * qy),
                            2.0 * (-2.0 * m[0] * qz - m[1] * w + m[2] * qx + m[3] * w
                                - 2.0 * m[4] * qz
                                + m[5] * qy
                                + m[6] * qx
                                + m[7] * qy),
                        ];
                        let p: f64 = (0..4).map(|k| q[k] * gq[k]).sum();
                        ga.row_mut(i)
                            .copy_from_slice(&[0, 1, 2, 3].map(|k| (gq[k] - q[k] * p) / n));
                    }
                    acc(*a, ga);
                }
                Op::SqErr(a, target) => {
                    let s = gy.data[0];
                    acc(*a, self.value(*a).zip(target, |p, t| 2.0 * s * (p - t)));
                }
                Op::WeightedSum(terms) => {
                    for &(v, w) in terms {
                        acc(v, Tensor::scalar(gy.data[0] * w));
                    }
                }
            }
        }
        Gradients { g }
    }
}

pub struct Gradients {
    g: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.g[v.0].as_ref()
    }

    /// Gradient of `v`, or zeros shaped like `like` when unreachable.
    pub fn get_or_zeros(&self, v: Var, like: &Tensor) -> Tensor {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(like.rows, like.cols))
    }
}
