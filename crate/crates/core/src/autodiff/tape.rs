use super::{Tensor, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Deliberately broken backward rules, used to prove the gradient checker
/// catches them.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Sigmoid backward uses `s` instead of `s(1 - s)`.
    SigmoidGrad,
}

/// Flat row-major positions a masked loss reduces over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    idx: Vec<usize>,
}

impl Mask {
    /// Strict upper triangle of an `n x n` matrix, row-major.
    pub fn upper_triangle(n: usize) -> Self {
        let idx = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| i * n + j))
            .collect();
        Self {
            rows: n,
            cols: n,
            idx,
        }
    }

    pub fn from_indices(rows: usize, cols: usize, idx: Vec<usize>) -> Self {
        Self { rows, cols, idx }
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Constant,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddRowVec(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    Abs(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceRows(Var, usize),
    GatherRows(Var, Vec<usize>),
    MeanRows(Var),
    Sum(Var),
    Symmetrize {
        src: Var,
        n: usize,
    },
    BceMasked {
        logits: Var,
        targets: Vec<f64>,
        mask: Vec<usize>,
    },
    MaeMasked {
        pred: Var,
        target: Vec<f64>,
        mask: Vec<usize>,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Records one forward pass. Single-use: `backward` may run once.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
    fault: Option<Fault>,
}

/// Gradients of a scalar with respect to every node on the tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// `None` when no gradient reached `v` (constants, unused leaves).
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn ensure_finite(op: &'static str, t: Tensor) -> Result<Tensor, TensorError> {
    if t.is_finite() {
        Ok(t)
    } else {
        Err(TensorError::NonFinite { op })
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    #[doc(hidden)]
    pub fn inject_fault(&mut self, fault: Fault) {
        self.fault = Some(fault);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        let needs_grad = match &op {
            Op::Leaf => true,
            Op::Constant => false,
            other => parents(other).iter().any(|p| self.nodes[p.0].needs_grad),
        };
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// A trainable input whose gradient is reported by `backward`.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// A fixed input; never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                left: av.shape(),
                right: bv.shape(),
            });
        }
        let out = ensure_finite("matmul", av.matmul(bv))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(TensorError::ShapeMismatch {
                op,
                left: self.shape(a),
                right: self.shape(b),
            });
        }
        Ok(())
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let (av, bv) = (self.value(a), self.value(b));
        let data = av
            .data()
            .iter()
            .zip(bv.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::new(av.rows(), av.cols(), data).expect("same shape")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("add", a, b)?;
        let out = ensure_finite("add", self.zip_with(a, b, |x, y| x + y))?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        self.same_shape("sub", a, b)?;
        let out = ensure_finite("sub", self.zip_with(a, b, |x, y| x - y))?;
        Ok(self.push(out, Op::Sub(a, b)))
    }

    /// Adds a `1 x c` row vector to every row of an `r x c` matrix.
    pub fn add_rowvec(&mut self, x: Var, b: Var) -> Result<Var, TensorError> {
        let (xs, bs) = (self.shape(x), self.shape(b));
        if bs.0 != 1 || bs.1 != xs.1 {
            return Err(TensorError::ShapeMismatch {
                op: "add_rowvec",
                left: xs,
                right: bs,
            });
        }
        let mut out = self.value(x).clone();
        let bias = self.value(b).data().to_vec();
        for r in 0..xs.0 {
            for (c, bv) in bias.iter().enumerate() {
                let v = out.get(r, c) + bv;
                out.set(r, c, v);
            }
        }
        let out = ensure_finite("add_rowvec", out)?;
        Ok(self.push(out, Op::AddRowVec(x, b)))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var, TensorError> {
        let out = ensure_finite("scale", self.value(x).map(|v| v * c))?;
        Ok(self.push(out, Op::Scale(x, c)))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var, TensorError> {
        let out = self.value(x).map(|v| v.max(0.0));
        Ok(self.push(out, Op::Relu(x)))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var, TensorError> {
        let out = self.value(x).map(sigmoid);
        Ok(self.push(out, Op::Sigmoid(x)))
    }

    pub fn abs(&mut self, x: Var) -> Result<Var, TensorError> {
        let out = self.value(x).map(f64::abs);
        Ok(self.push(out, Op::Abs(x)))
    }

    /// Horizontal concatenation; all inputs share a row count.
    pub fn concat_cols(&mut self, xs: &[Var]) -> Result<Var, TensorError> {
        let first = *xs.first().ok_or(TensorError::NoInputs("concat_cols"))?;
        let rows = self.shape(first).0;
        for &x in xs {
            if self.shape(x).0 != rows {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_cols",
                    left: self.shape(first),
                    right: self.shape(x),
                });
            }
        }
        let cols: usize = xs.iter().map(|&x| self.shape(x).1).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &x in xs {
                data.extend_from_slice(self.value(x).row(r));
            }
        }
        let out = Tensor::new(rows, cols, data)?;
        Ok(self.push(out, Op::ConcatCols(xs.to_vec())))
    }

    /// Vertical concatenation; all inputs share a column count.
    pub fn concat_rows(&mut self, xs: &[Var]) -> Result<Var, TensorError> {
        let first = *xs.first().ok_or(TensorError::NoInputs("concat_rows"))?;
        let cols = self.shape(first).1;
        let mut data = Vec::new();
        let mut rows = 0;
        for &x in xs {
            if self.shape(x).1 != cols {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_rows",
                    left: self.shape(first),
                    right: self.shape(x),
                });
            }
            data.extend_from_slice(self.value(x).data());
            rows += self.shape(x).0;
        }
        let out = Tensor::new(rows, cols, data)?;
        Ok(self.push(out, Op::ConcatRows(xs.to_vec())))
    }

    /// Rows `start..start+count`.
    pub fn slice_rows(&mut self, x: Var, start: usize, count: usize) -> Result<Var, TensorError> {
        let (rows, cols) = self.shape(x);
        if start + count > rows {
            return Err(TensorError::IndexOutOfRange {
                op: "slice_rows",
                index: start + count,
                len: rows,
            });
        }
        let data = self.value(x).data()[start * cols..(start + count) * cols].to_vec();
        let out = Tensor::new(count, cols, data)?;
        Ok(self.push(out, Op::SliceRows(x, start)))
    }

    /// Output row `r` is input row `idx[r]`; indices may repeat.
    pub fn gather_rows(&mut self, x: Var, idx: &[usize]) -> Result<Var, TensorError> {
        let (rows, cols) = self.shape(x);
        let mut data = Vec::with_capacity(idx.len() * cols);
        for &i in idx {
            if i >= rows {
                return Err(TensorError::IndexOutOfRange {
                    op: "gather_rows",
                    index: i,
                    len: rows,
                });
            }
            data.extend_from_slice(self.value(x).row(i));
        }
        let out = Tensor::new(idx.len(), cols, data)?;
        Ok(self.push(out, Op::GatherRows(x, idx.to_vec())))
    }

    /// Column means as a `1 x cols` row vector.
    pub fn mean_rows(&mut self, x: Var) -> Result<Var, TensorError> {
        let (rows, cols) = self.shape(x);
        if rows == 0 {
            return Err(TensorError::NoInputs("mean_rows"));
        }
        let v = self.value(x);
        let data = (0..cols)
            .map(|c| (0..rows).map(|r| v.get(r, c)).sum::<f64>() / rows as f64)
            .collect();
        let out = Tensor::new(1, cols, data)?;
        Ok(self.push(out, Op::MeanRows(x)))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var, TensorError> {
        let s: f64 = self.value(x).data().iter().sum();
        let out = ensure_finite("sum", Tensor::scalar(s))?;
        Ok(self.push(out, Op::Sum(x)))
    }

    /// Expands an `n(n-1)/2 x 1` column of pair values (pairs `i<j` in
    /// lexicographic order) into a symmetric `n x n` matrix whose diagonal is
    /// the constant `diag`.
    pub fn symmetrize_pairs(&mut self, src: Var, n: usize, diag: f64) -> Result<Var, TensorError> {
        if self.shape(src) != (pair_count(n), 1) {
            return Err(TensorError::ShapeMismatch {
                op: "symmetrize_pairs",
                left: self.shape(src),
                right: (pair_count(n), 1),
            });
        }
        let vals = self.value(src).data();
        let mut out = Tensor::filled(n, n, 0.0);
        let mut p = 0;
        for i in 0..n {
            out.set(i, i, diag);
            for j in (i + 1)..n {
                out.set(i, j, vals[p]);
                out.set(j, i, vals[p]);
                p += 1;
            }
        }
        let out = ensure_finite("symmetrize_pairs", out)?;
        Ok(self.push(out, Op::Symmetrize { src, n }))
    }

    fn check_mask(&self, op: &'static str, x: Var, mask: &Mask) -> Result<(), TensorError> {
        if mask.is_empty() {
            return Err(TensorError::EmptyMask);
        }
        if (mask.rows, mask.cols) != self.shape(x) {
            return Err(TensorError::ShapeMismatch {
                op,
                left: self.shape(x),
                right: (mask.rows, mask.cols),
            });
        }
        let len = mask.rows * mask.cols;
        if let Some(&bad) = mask.idx.iter().find(|&&i| i >= len) {
            return Err(TensorError::IndexOutOfRange {
                op,
                index: bad,
                len,
            });
        }
        Ok(())
    }

    /// Mean binary cross-entropy with logits over the masked entries,
    /// evaluated as `max(l,0) - t*l + ln(1 + e^-|l|)`.
    pub fn bce_with_logits_masked(
        &mut self,
        logits: Var,
        targets: &[f64],
        mask: &Mask,
    ) -> Result<Var, TensorError> {
        self.check_mask("bce_with_logits_masked", logits, mask)?;
        if targets.len() != self.value(logits).len() {
            return Err(TensorError::BadBuffer {
                rows: self.shape(logits).0,
                cols: self.shape(logits).1,
                len: targets.len(),
            });
        }
        let l = self.value(logits).data();
        let total: f64 = mask
            .idx
            .iter()
            .map(|&i| {
                let (x, t) = (l[i], targets[i]);
                x.max(0.0) - t * x + (-x.abs()).exp().ln_1p()
            })
            .sum();
        let out = ensure_finite(
            "bce_with_logits_masked",
            Tensor::scalar(total / mask.len() as f64),
        )?;
        Ok(self.push(
            out,
            Op::BceMasked {
                logits,
                targets: targets.to_vec(),
                mask: mask.idx.clone(),
            },
        ))
    }

    /// Mean absolute error over the masked entries.
    pub fn mae_masked(
        &mut self,
        pred: Var,
        target: &Tensor,
        mask: &Mask,
    ) -> Result<Var, TensorError> {
        self.check_mask("mae_masked", pred, mask)?;
        if target.shape() != self.shape(pred) {
            return Err(TensorError::ShapeMismatch {
                op: "mae_masked",
                left: self.shape(pred),
                right: target.shape(),
            });
        }
        let p = self.value(pred).data();
        let t = target.data();
        let total: f64 = mask.idx.iter().map(|&i| (p[i] - t[i]).abs()).sum();
        let out = ensure_finite("mae_masked", Tensor::scalar(total / mask.len() as f64))?;
        Ok(self.push(
            out,
            Op::MaeMasked {
                pred,
                target: t.to_vec(),
                mask: mask.idx.clone(),
            },
        ))
    }

    /// Reverse-mode sweep from a scalar `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients, TensorError> {
        if self.consumed {
            return Err(TensorError::DoubleBackward);
        }
        let shape = self.shape(loss);
        if shape != (1, 1) {
            return Err(TensorError::NonScalarLoss(shape));
        }
        self.consumed = true;

        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let contributions = self.local_grads(idx, &g);
            for (parent, pg) in contributions {
                if !self.nodes[parent.0].needs_grad {
                    continue;
                }
                match &mut grads[parent.0] {
                    Some(acc) => acc.add_assign(&pg),
                    slot => *slot = Some(pg),
                }
            }
            // leaves keep their gradient for the caller
            if matches!(self.nodes[idx].op, Op::Leaf) {
                grads[idx] = Some(g);
            }
        }
        Ok(Gradients { grads })
    }

    fn local_grads(&self, idx: usize, g: &Tensor) -> Vec<(Var, Tensor)> {
        let node = &self.nodes[idx];
        let out = &node.value;
        match &node.op {
            Op::Leaf | Op::Constant => vec![],
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let mut v = Vec::with_capacity(2);
                if self.nodes[a.0].needs_grad {
                    v.push((*a, g.matmul_t(bv)));
                }
                if self.nodes[b.0].needs_grad {
                    v.push((*b, av.t_matmul(g)));
                }
                v
            }
            Op::Add(a, b) => vec![(*a, g.clone()), (*b, g.clone())],
            Op::Sub(a, b) => vec![(*a, g.clone()), (*b, g.map(|x| -x))],
            Op::AddRowVec(x, b) => {
                let mut gb = Tensor::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for c in 0..g.cols() {
                        let v = gb.get(0, c) + g.get(r, c);
                        gb.set(0, c, v);
                    }
                }
                vec![(*x, g.clone()), (*b, gb)]
            }
            Op::Scale(x, c) => vec![(*x, g.map(|v| v * c))],
            Op::Relu(x) => {
                let xv = self.value(*x);
                let data = g
                    .data()
                    .iter()
                    .zip(xv.data())
                    .map(|(&gi, &xi)| if xi > 0.0 { gi } else { 0.0 })
                    .collect();
                vec![(*x, Tensor::new(g.rows(), g.cols(), data).unwrap())]
            }
            Op::Sigmoid(x) => {
                let faulty = self.fault == Some(Fault::SigmoidGrad);
                let data = g
                    .data()
                    .iter()
                    .zip(out.data())
                    .map(|(&gi, &s)| if faulty { gi * s } else { gi * s * (1.0 - s) })
                    .collect();
                vec![(*x, Tensor::new(g.rows(), g.cols(), data).unwrap())]
            }
            Op::Abs(x) => {
                let xv = self.value(*x);
                let data = g
                    .data()
                    .iter()
                    .zip(xv.data())
                    .map(|(&gi, &xi)| gi * sign(xi))
                    .collect();
                vec![(*x, Tensor::new(g.rows(), g.cols(), data).unwrap())]
            }
            Op::ConcatCols(xs) => {
                let mut offset = 0;
                xs.iter()
                    .map(|&x| {
                        let (rows, cols) = self.shape(x);
                        let mut part = Tensor::zeros(rows, cols);
                        for r in 0..rows {
                            for c in 0..cols {
                                part.set(r, c, g.get(r, offset + c));
                            }
                        }
                        offset += cols;
                        (x, part)
                    })
                    .collect()
            }
            Op::ConcatRows(xs) => {
                let mut start = 0;
                xs.iter()
                    .map(|&x| {
                        let (rows, cols) = self.shape(x);
                        let data = g.data()[start * cols..(start + rows) * cols].to_vec();
                        start += rows;
                        (x, Tensor::new(rows, cols, data).unwrap())
                    })
                    .collect()
            }
            Op::SliceRows(x, start) => {
                let (rows, cols) = self.shape(*x);
                let mut full = Tensor::zeros(rows, cols);
                full.data_mut()[start * cols..start * cols + g.len()].copy_from_slice(g.data());
                vec![(*x, full)]
            }
            Op::GatherRows(x, idx) => {
                let (rows, cols) = self.shape(*x);
                let mut full = Tensor::zeros(rows, cols);
                for (r, &src) in idx.iter().enumerate() {
                    for c in 0..cols {
                        let v = full.get(src, c) + g.get(r, c);
                        full.set(src, c, v);
                    }
                }
                vec![(*x, full)]
            }
            Op::MeanRows(x) => {
                let (rows, cols) = self.shape(*x);
                let inv = 1.0 / rows as f64;
                let mut full = Tensor::zeros(rows, cols);
                for r in 0..rows {
                    for c in 0..cols {
                        full.set(r, c, g.get(0, c) * inv);
                    }
                }
                vec![(*x, full)]
            }
            Op::Sum(x) => {
                let (rows, cols) = self.shape(*x);
                vec![(*x, Tensor::filled(rows, cols, g.item()))]
            }
            Op::Symmetrize { src, n } => {
                let mut gs = Tensor::zeros(pair_count(*n), 1);
                let mut p = 0;
                for i in 0..*n {
                    for j in (i + 1)..*n {
                        gs.set(p, 0, g.get(i, j) + g.get(j, i));
                        p += 1;
                    }
                }
                vec![(*src, gs)]
            }
            Op::BceMasked {
                logits,
                targets,
                mask,
            } => {
                let l = self.value(*logits);
                let scale = g.item() / mask.len() as f64;
                let mut gl = Tensor::zeros(l.rows(), l.cols());
                let data = gl.data_mut();
                for &i in mask {
                    data[i] += scale * (sigmoid(l.data()[i]) - targets[i]);
                }
                vec![(*logits, gl)]
            }
            Op::MaeMasked { pred, target, mask } => {
                let p = self.value(*pred);
                let scale = g.item() / mask.len() as f64;
                let mut gp = Tensor::zeros(p.rows(), p.cols());
                let data = gp.data_mut();
                for &i in mask {
                    data[i] += scale * sign(p.data()[i] - target[i]);
                }
                vec![(*pred, gp)]
            }
        }
    }
}

fn parents(op: &Op) -> Vec<Var> {
    match op {
        Op::Leaf | Op::Constant => vec![],
        Op::MatMul(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::AddRowVec(a, b) => vec![*a, *b],
        Op::Scale(x, _)
        | Op::Relu(x)
        | Op::Sigmoid(x)
        | Op::Abs(x)
        | Op::SliceRows(x, _)
        | Op::GatherRows(x, _)
        | Op::MeanRows(x)
        | Op::Sum(x) => vec![*x],
        Op::ConcatCols(xs) | Op::ConcatRows(xs) => xs.clone(),
        Op::Symmetrize { src, .. } => vec![*src],
        Op::BceMasked { logits, .. } => vec![*logits],
        Op::MaeMasked { pred, .. } => vec![*pred],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: usize, cols: usize, data: &[f64]) -> Tensor {
        Tensor::new(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn forward_examples() {
        let mut tape = Tape::new();
        let x = tape.constant(t(2, 2, &[1., 2., 3., 4.]));
        let i = tape.constant(Tensor::identity(2));
        let y = tape.matmul(i, x).unwrap();
        assert_eq!(tape.value(y), tape.value(x));

        let a = tape.constant(t(1, 2, &[1., 2.]));
        let b = tape.constant(t(2, 1, &[3., 4.]));
        let c = tape.matmul(a, b).unwrap();
        assert_eq!(tape.value(c).item(), 11.0);

        let r = tape.constant(t(1, 3, &[-1., 0., 2.]));
        let r = tape.relu(r).unwrap();
        assert_eq!(tape.value(r).data(), &[0., 0., 2.]);

        let z = tape.constant(Tensor::scalar(0.0));
        let s = tape.sigmoid(z).unwrap();
        assert_eq!(tape.value(s).item(), 0.5);

        let m = tape.constant(t(2, 2, &[1., 3., 5., 7.]));
        let m = tape.mean_rows(m).unwrap();
        assert_eq!(tape.value(m).data(), &[3., 5.]);
    }

    #[test]
    fn shape_errors() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(2, 3));
        let b = tape.constant(Tensor::zeros(2, 3));
        assert!(matches!(
            tape.matmul(a, b),
            Err(TensorError::ShapeMismatch { op: "matmul", .. })
        ));
        let c = tape.constant(Tensor::zeros(3, 2));
        assert!(tape.add(a, c).is_err());
        let bias = tape.constant(Tensor::zeros(2, 3));
        assert!(tape.add_rowvec(a, bias).is_err());
        assert!(tape.concat_cols(&[a, c]).is_err());
        assert!(tape.concat_rows(&[a, c]).is_err());
        assert!(tape.concat_rows(&[]).is_err());
        assert!(tape.gather_rows(a, &[2]).is_err());
    }

    #[test]
    fn bce_examples() {
        let mut tape = Tape::new();
        let l = tape.leaf(t(2, 2, &[0., 0., 0., 0.]));
        let mask = Mask::upper_triangle(2);
        let loss = tape
            .bce_with_logits_masked(l, &[0., 1., 1., 0.], &mask)
            .unwrap();
        assert!((tape.value(loss).item() - std::f64::consts::LN_2).abs() < 1e-12);
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(l).unwrap().data(), &[0., -0.5, 0., 0.]);

        let mut tape = Tape::new();
        let l = tape.leaf(t(2, 2, &[0., 20., 20., 0.]));
        let loss = tape
            .bce_with_logits_masked(l, &[0., 1., 1., 0.], &mask)
            .unwrap();
        let expected = (-20f64).exp().ln_1p();
        assert!((tape.value(loss).item() - expected).abs() < 1e-20);
        assert!((expected - 2.06e-9).abs() < 1e-11);

        // large negative logit with positive target stays finite
        let mut tape = Tape::new();
        let l = tape.leaf(t(2, 2, &[0., -800., -800., 0.]));
        let loss = tape
            .bce_with_logits_masked(l, &[0., 1., 1., 0.], &mask)
            .unwrap();
        assert!((tape.value(loss).item() - 800.0).abs() < 1e-9);

        let mut tape = Tape::new();
        let l = tape.leaf(Tensor::zeros(1, 1));
        assert_eq!(
            tape.bce_with_logits_masked(l, &[0.], &Mask::upper_triangle(1)),
            Err(TensorError::EmptyMask)
        );
    }

    #[test]
    fn mae_examples() {
        let mask = Mask::upper_triangle(3);
        let target = t(3, 3, &[0., 0.5, 0.5, 0.5, 0., 0.1, 0.5, 0.1, 0.]);
        let mut tape = Tape::new();
        let p = tape.leaf(target.clone());
        let loss = tape.mae_masked(p, &target, &mask).unwrap();
        assert_eq!(tape.value(loss).item(), 0.0);
        let g = tape.backward(loss).unwrap();
        assert!(g.get(p).unwrap().data().iter().all(|&v| v == 0.0));

        let mask = Mask::upper_triangle(2);
        let target = Tensor::zeros(2, 2);
        let mut tape = Tape::new();
        let p = tape.leaf(t(2, 2, &[0., 0.2, -0.2, 0.]));
        let loss = tape
            .mae_masked(p, &target, &Mask::from_indices(2, 2, vec![1, 2]))
            .unwrap();
        assert!((tape.value(loss).item() - 0.2).abs() < 1e-15);
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(p).unwrap().data(), &[0., 0.5, -0.5, 0.]);
        let mut tape = Tape::new();
        let p = tape.leaf(Tensor::zeros(2, 2));
        assert!(tape.mae_masked(p, &Tensor::zeros(3, 3), &mask).is_err());
    }

    #[test]
    fn linear_backward() {
        // loss = sum(W x): dW_ij = x_j, dx_j = sum_i W_ij
        let mut tape = Tape::new();
        let w = tape.leaf(t(2, 3, &[1., 2., 3., 4., 5., 6.]));
        let x = tape.leaf(t(3, 1, &[0.5, -1., 2.]));
        let y = tape.matmul(w, x).unwrap();
        let loss = tape.sum(y).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(w).unwrap().data(), &[0.5, -1., 2., 0.5, -1., 2.]);
        assert_eq!(g.get(x).unwrap().data(), &[5., 7., 9.]);
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut tape = Tape::new();
        let c = tape.constant(Tensor::scalar(3.0));
        let w = tape.leaf(Tensor::scalar(2.0));
        let y = tape.matmul(c, w).unwrap();
        let g = tape.backward(y).unwrap();
        assert!(g.get(c).is_none());
        assert_eq!(g.get(w).unwrap().item(), 3.0);
    }

    #[test]
    fn fanout_accumulates() {
        // y = x*x + 3x through two consumers of x; dy/dx = 2x + 3
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(2.0));
        let sq = tape.matmul(x, x).unwrap();
        let lin = tape.scale(x, 3.0).unwrap();
        let y = tape.add(sq, lin).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get(x).unwrap().item(), 7.0);
    }

    #[test]
    fn backward_contract() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::zeros(2, 1));
        assert_eq!(
            tape.backward(x).unwrap_err(),
            TensorError::NonScalarLoss((2, 1))
        );
        let s = tape.sum(x).unwrap();
        tape.backward(s).unwrap();
        assert_eq!(tape.backward(s).unwrap_err(), TensorError::DoubleBackward);
    }

    #[test]
    fn symmetrize_layout() {
        let mut tape = Tape::new();
        let v = tape.leaf(t(3, 1, &[1., 2., 3.]));
        let m = tape.symmetrize_pairs(v, 3, -1e9).unwrap();
        assert_eq!(
            tape.value(m).data(),
            &[-1e9, 1., 2., 1., -1e9, 3., 2., 3., -1e9]
        );
        assert!(tape.symmetrize_pairs(v, 4, 0.0).is_err());
    }

    #[test]
    fn non_finite_forward_is_an_error() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::scalar(f64::MAX));
        assert_eq!(
            tape.scale(x, 10.0).unwrap_err(),
            TensorError::NonFinite { op: "scale" }
        );
    }
}
