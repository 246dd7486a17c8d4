//! Reverse-mode differentiation over dense matrices.
//!
//! A [`Tape`] records every operation of one forward pass together with its
//! output value. [`Tape::backward`] walks the records in reverse execution
//! order and accumulates gradients into the [`ParamStore`] the parameters came
//! from. A tape supports a single backward pass.

use std::sync::Arc;

use ndarray::{s, Array2, Axis, Zip};

use super::tensor::{ParamId, ParamStore};
use crate::error::{shape_err, Error, Result};
use crate::graph::CsrMatrix;

/// A sparse linear operator together with its adjoint, for use on a tape.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    forward: CsrMatrix,
    adjoint: CsrMatrix,
}

impl SparseOperator {
    pub fn new(forward: CsrMatrix) -> Self {
        let adjoint = forward.transpose();
        Self { forward, adjoint }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.forward
    }

    pub fn adjoint(&self) -> &CsrMatrix {
        &self.adjoint
    }
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    SpMM(Arc<SparseOperator>, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    ConcatCols(Vec<Var>),
    Relu(Var),
    LeakyRelu(Var, f64),
    Elu(Var),
    L2NormalizeRows(Var),
    LogSoftmaxRows(Var),
    SoftmaxPair(Var, Var),
    Column(Var, usize),
    RowScale { weights: Var, x: Var },
    Sum(Var),
    WeightedNll {
        log_probs: Var,
        targets: Vec<(usize, usize, f64)>,
        total_weight: f64,
    },
}

#[derive(Debug)]
struct Node {
    value: Array2<f64>,
    op: Op,
    needs_grad: bool,
}

/// Sequential log of one forward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
    messages: usize,
    zero_rows: usize,
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

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.dim()
    }

    /// Scalar value of a 1x1 result.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    /// Number of sparse messages (stored entries visited) by forward `spmm`
    /// calls so far.
    pub fn message_count(&self) -> usize {
        self.messages
    }

    /// Number of all-zero rows met by `l2_normalize_rows` so far.
    pub fn zero_norm_rows(&self) -> usize {
        self.zero_rows
    }

    fn push(&mut self, value: Array2<f64>, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        let t = store.get(id);
        self.push(t.value.clone(), Op::Param(id), t.requires_grad)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if ac != br {
            return Err(shape_err("matmul", format!("{ar}x{ac} times {br}x{bc}")));
        }
        let value = self.value(a).dot(self.value(b));
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::MatMul(a, b), ng))
    }

    pub fn spmm(&mut self, op: &Arc<SparseOperator>, x: Var) -> Result<Var> {
        let value = op.forward.spmm(self.value(x).view())?;
        self.messages += op.forward.nnz();
        let ng = self.needs(x);
        Ok(self.push(value, Op::SpMM(Arc::clone(op), x), ng))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(
                op,
                format!("{:?} vs {:?}", self.shape(a), self.shape(b)),
            ));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let value = self.value(a) + self.value(b);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Add(a, b), ng))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let value = self.value(a) - self.value(b);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Sub(a, b), ng))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let value = self.value(a) * self.value(b);
        let ng = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Mul(a, b), ng))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let value = self.value(a) * factor;
        let ng = self.needs(a);
        self.push(value, Op::Scale(a, factor), ng)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(shape_err("concat_cols", "no inputs"));
        };
        let rows = self.shape(first).0;
        if let Some(bad) = parts.iter().find(|&&p| self.shape(p).0 != rows) {
            return Err(shape_err(
                "concat_cols",
                format!("{} rows vs {} rows", rows, self.shape(*bad).0),
            ));
        }
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let value = ndarray::concatenate(Axis(1), &views).expect("row counts checked");
        let ng = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), ng))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|x| x.max(0.0));
        let ng = self.needs(a);
        self.push(value, Op::Relu(a), ng)
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let value = self.value(a).mapv(|x| if x > 0.0 { x } else { slope * x });
        let ng = self.needs(a);
        self.push(value, Op::LeakyRelu(a, slope), ng)
    }

    /// ELU with unit scale.
    pub fn elu(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(elu);
        let ng = self.needs(a);
        self.push(value, Op::Elu(a), ng)
    }

    /// Divides every row by its Euclidean norm. All-zero rows stay zero and
    /// pass no gradient.
    pub fn l2_normalize_rows(&mut self, a: Var) -> Var {
        let mut value = self.value(a).clone();
        let mut zero_rows = 0;
        for mut row in value.outer_iter_mut() {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row /= norm;
            } else {
                zero_rows += 1;
            }
        }
        if zero_rows > 0 {
            log::debug!("l2_normalize_rows: {zero_rows} zero row(s) left unnormalized");
            self.zero_rows += zero_rows;
        }
        let ng = self.needs(a);
        self.push(value, Op::L2NormalizeRows(a), ng)
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let mut value = self.value(a).clone();
        for mut row in value.outer_iter_mut() {
            let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
            row -= lse;
        }
        let ng = self.needs(a);
        self.push(value, Op::LogSoftmaxRows(a), ng)
    }

    /// Row-wise softmax over two `n x 1` score columns. Returns an `n x 2`
    /// matrix whose columns are the weights of the first and second input.
    pub fn softmax_pair(&mut self, first: Var, second: Var) -> Result<Var> {
        self.same_shape("softmax_pair", first, second)?;
        if self.shape(first).1 != 1 {
            return Err(shape_err("softmax_pair", "scores must be n x 1 columns"));
        }
        let n = self.shape(first).0;
        let (e1, e2) = (self.value(first), self.value(second));
        let mut value = Array2::zeros((n, 2));
        for i in 0..n {
            let (p, q) = stable_pair(e1[[i, 0]], e2[[i, 0]]);
            value[[i, 0]] = p;
            value[[i, 1]] = q;
        }
        let ng = self.needs(first) || self.needs(second);
        Ok(self.push(value, Op::SoftmaxPair(first, second), ng))
    }

    pub fn column(&mut self, a: Var, col: usize) -> Result<Var> {
        let (_, cols) = self.shape(a);
        if col >= cols {
            return Err(shape_err("column", format!("column {col} of {cols}")));
        }
        let value = self.value(a).slice(s![.., col..col + 1]).to_owned();
        let ng = self.needs(a);
        Ok(self.push(value, Op::Column(a, col), ng))
    }

    /// Scales row `i` of `x` by `weights[i, 0]`.
    pub fn row_scale(&mut self, weights: Var, x: Var) -> Result<Var> {
        let (wr, wc) = self.shape(weights);
        if wc != 1 || wr != self.shape(x).0 {
            return Err(shape_err(
                "row_scale",
                format!("weights {wr}x{wc} for {:?} input", self.shape(x)),
            ));
        }
        let value = self.value(x) * self.value(weights);
        let ng = self.needs(weights) || self.needs(x);
        Ok(self.push(value, Op::RowScale { weights, x }, ng))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Array2::from_elem((1, 1), self.value(a).sum());
        let ng = self.needs(a);
        self.push(value, Op::Sum(a), ng)
    }

    /// Weighted mean of `-log_probs[i, y_i]` over `(row, class, weight)`
    /// targets.
    pub fn weighted_nll(&mut self, log_probs: Var, targets: &[(usize, usize, f64)]) -> Result<Var> {
        let (rows, cols) = self.shape(log_probs);
        let total_weight: f64 = targets.iter().map(|t| t.2).sum();
        if targets.is_empty() || total_weight <= 0.0 {
            return Err(Error::Input("loss needs at least one positively weighted node".into()));
        }
        let lp = self.value(log_probs);
        let mut loss = 0.0;
        for &(r, c, w) in targets {
            if r >= rows || c >= cols {
                return Err(shape_err(
                    "weighted_nll",
                    format!("target ({r}, {c}) outside {rows}x{cols}"),
                ));
            }
            loss -= w * lp[[r, c]];
        }
        let value = Array2::from_elem((1, 1), loss / total_weight);
        let ng = self.needs(log_probs);
        Ok(self.push(
            value,
            Op::WeightedNll {
                log_probs,
                targets: targets.to_vec(),
                total_weight,
            },
            ng,
        ))
    }

    /// Back-propagates from the scalar `loss` and adds parameter gradients
    /// into `store`.
    pub fn backward(&mut self, loss: Var, store: &mut ParamStore) -> Result<()> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        if self.shape(loss) != (1, 1) {
            return Err(shape_err("backward", format!("loss has shape {:?}", self.shape(loss))));
        }
        self.consumed = true;

        let mut grads: Vec<Option<Array2<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Array2::ones((1, 1)));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let nodes = &self.nodes;
            let mut send = |v: Var, delta: Array2<f64>| {
                if nodes[v.0].needs_grad {
                    match &mut grads[v.0] {
                        Some(acc) => *acc += &delta,
                        slot @ None => *slot = Some(delta),
                    }
                }
            };
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => store.get_mut(*id).accumulate_grad(&g),
                Op::MatMul(a, b) => {
                    if nodes[a.0].needs_grad {
                        send(*a, g.dot(&nodes[b.0].value.t()));
                    }
                    if nodes[b.0].needs_grad {
                        send(*b, nodes[a.0].value.t().dot(&g));
                    }
                }
                Op::SpMM(op, x) => {
                    send(*x, op.adjoint.spmm(g.view())?);
                }
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g);
                }
                Op::Sub(a, b) => {
                    send(*a, g.clone());
                    send(*b, -g);
                }
                Op::Mul(a, b) => {
                    if nodes[a.0].needs_grad {
                        send(*a, &g * &nodes[b.0].value);
                    }
                    if nodes[b.0].needs_grad {
                        send(*b, &g * &nodes[a.0].value);
                    }
                }
                Op::Scale(a, f) => send(*a, g * *f),
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let w = nodes[p.0].value.ncols();
                        send(*p, g.slice(s![.., offset..offset + w]).to_owned());
                        offset += w;
                    }
                }
                Op::Relu(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(&nodes[a.0].value)
                        .for_each(|d, &x| {
                            if x <= 0.0 {
                                *d = 0.0
                            }
                        });
                    send(*a, d);
                }
                Op::LeakyRelu(a, slope) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(&nodes[a.0].value)
                        .for_each(|d, &x| {
                            if x <= 0.0 {
                                *d *= slope
                            }
                        });
                    send(*a, d);
                }
                Op::Elu(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(&nodes[a.0].value)
                        .for_each(|d, &x| {
                            if x <= 0.0 {
                                *d *= x.exp()
                            }
                        });
                    send(*a, d);
                }
                Op::L2NormalizeRows(a) => {
                    let x = &nodes[a.0].value;
                    let y = &node.value;
                    let mut d = g;
                    for ((mut d_row, x_row), y_row) in
                        d.outer_iter_mut().zip(x.outer_iter()).zip(y.outer_iter())
                    {
                        let norm = x_row.dot(&x_row).sqrt();
                        if norm > 0.0 {
                            let proj = y_row.dot(&d_row);
                            d_row.scaled_add(-proj, &y_row);
                            d_row /= norm;
                        } else {
                            d_row.fill(0.0);
                        }
                    }
                    send(*a, d);
                }
                Op::LogSoftmaxRows(a) => {
                    let y = &node.value;
                    let mut d = g;
                    for (mut d_row, y_row) in d.outer_iter_mut().zip(y.outer_iter()) {
                        let total = d_row.sum();
                        Zip::from(&mut d_row)
                            .and(&y_row)
                            .for_each(|d, &lp| *d -= lp.exp() * total);
                    }
                    send(*a, d);
                }
                Op::SoftmaxPair(first, second) => {
                    let w = &node.value;
                    let n = w.nrows();
                    let mut d = Array2::zeros((n, 1));
                    for i in 0..n {
                        d[[i, 0]] = w[[i, 0]] * w[[i, 1]] * (g[[i, 0]] - g[[i, 1]]);
                    }
                    send(*second, -&d);
                    send(*first, d);
                }
                Op::Column(a, col) => {
                    let mut d = Array2::zeros(nodes[a.0].value.dim());
                    d.slice_mut(s![.., *col..*col + 1]).assign(&g);
                    send(*a, d);
                }
                Op::RowScale { weights, x } => {
                    let wv = &nodes[weights.0].value;
                    let xv = &nodes[x.0].value;
                    if nodes[weights.0].needs_grad {
                        let gw = (&g * xv).sum_axis(Axis(1)).insert_axis(Axis(1));
                        send(*weights, gw);
                    }
                    if nodes[x.0].needs_grad {
                        send(*x, &g * wv);
                    }
                }
                Op::Sum(a) => {
                    send(*a, Array2::from_elem(nodes[a.0].value.dim(), g[[0, 0]]));
                }
                Op::WeightedNll {
                    log_probs,
                    targets,
                    total_weight,
                } => {
                    let mut d = Array2::zeros(nodes[log_probs.0].value.dim());
                    let scale = g[[0, 0]] / total_weight;
                    for &(r, c, w) in targets {
                        d[[r, c]] -= w * scale;
                    }
                    send(*log_probs, d);
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

/// Softmax of two scores with the max subtracted.
pub(crate) fn stable_pair(a: f64, b: f64) -> (f64, f64) {
    let m = a.max(b);
    let (ea, eb) = ((a - m).exp(), (b - m).exp());
    let total = ea + eb;
    (ea / total, eb / total)
}
