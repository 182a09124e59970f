//! Reverse-mode differentiation over small dense matrices.
//!
//! Every operation appends a node holding its value; [`Tape::backward`] walks
//! the nodes in reverse and returns one gradient per node.

use super::tensor::Tensor;

pub type Var = usize;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    /// Broadcast a `1×c` row over every row.
    AddRow(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Relu(Var),
    SoftmaxRows(Var),
    /// Zero-mean, unit-variance rows; keeps each row's `1/sqrt(var + eps)`.
    NormalizeRows(Var, Vec<f64>),
    Transpose(Var),
    Cols(Var, usize),
    Row(Var, usize),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    MeanRows(Var),
    Conv2d {
        input: Var,
        kernel: Var,
        kh: usize,
        kw: usize,
    },
    /// Keeps the source column of each pooled maximum.
    MaxPoolCols(Var, Vec<usize>),
    Flatten(Var),
    Norm(Var),
    Sum(Vec<Var>),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut v = self.value(a).clone();
        v.add_assign(self.value(b));
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let mut v = self.value(a).clone();
        v.sub_scaled(self.value(b), 1.0);
        self.push(v, Op::Sub(a, b))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let r = self.value(row);
        assert_eq!((1, self.value(a).cols), r.shape(), "add_row shape mismatch");
        let mut v = self.value(a).clone();
        for i in 0..v.rows {
            for (x, y) in v.row_mut(i).iter_mut().zip(&r.data) {
                *x += y;
            }
        }
        self.push(v, Op::AddRow(a, row))
    }

    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        let r = self.value(row);
        assert_eq!((1, self.value(a).cols), r.shape(), "mul_row shape mismatch");
        let mut v = self.value(a).clone();
        for i in 0..v.rows {
            for (x, y) in v.row_mut(i).iter_mut().zip(&r.data) {
                *x *= y;
            }
        }
        self.push(v, Op::MulRow(a, row))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let mut v = self.value(a).clone();
        v.data.iter_mut().for_each(|x| *x *= s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        let mut v = self.value(a).clone();
        v.data.iter_mut().for_each(|x| *x += s);
        self.push(v, Op::AddScalar(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        v.data.iter_mut().for_each(|x| *x = x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        for i in 0..v.rows {
            let row = v.row_mut(i);
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for x in row.iter_mut() {
                *x = (*x - m).exp();
                z += *x;
            }
            row.iter_mut().for_each(|x| *x /= z);
        }
        self.push(v, Op::SoftmaxRows(a))
    }

    pub fn normalize_rows(&mut self, a: Var, eps: f64) -> Var {
        let mut v = self.value(a).clone();
        let n = v.cols as f64;
        let mut inv = Vec::with_capacity(v.rows);
        for i in 0..v.rows {
            let row = v.row_mut(i);
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            let s = 1.0 / (var + eps).sqrt();
            row.iter_mut().for_each(|x| *x = (*x - mean) * s);
            inv.push(s);
        }
        self.push(v, Op::NormalizeRows(a, inv))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a))
    }

    /// Columns `start..start + len`.
    pub fn cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let src = self.value(a);
        assert!(start + len <= src.cols, "column slice out of range");
        let mut v = Tensor::zeros(src.rows, len);
        for i in 0..src.rows {
            v.row_mut(i)
                .copy_from_slice(&src.row(i)[start..start + len]);
        }
        self.push(v, Op::Cols(a, start))
    }

    pub fn row(&mut self, a: Var, r: usize) -> Var {
        let v = Tensor::row_vector(self.value(a).row(r).to_vec());
        self.push(v, Op::Row(a, r))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|&p| self.value(p).cols).sum();
        let mut v = Tensor::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let t = self.value(p);
            assert_eq!(t.rows, rows, "concat_cols row mismatch");
            for i in 0..rows {
                v.row_mut(i)[off..off + t.cols].copy_from_slice(t.row(i));
            }
            off += t.cols;
        }
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let cols = self.value(parts[0]).cols;
        let mut data = Vec::new();
        for &p in parts {
            let t = self.value(p);
            assert_eq!(t.cols, cols, "concat_rows column mismatch");
            data.extend_from_slice(&t.data);
        }
        let rows = data.len() / cols.max(1);
        self.push(
            Tensor::from_vec(rows, cols, data),
            Op::ConcatRows(parts.to_vec()),
        )
    }

    pub fn mean_rows(&mut self, a: Var) -> Var {
        let src = self.value(a);
        let mut v = Tensor::zeros(1, src.cols);
        for i in 0..src.rows {
            for (o, x) in v.data.iter_mut().zip(src.row(i)) {
                *o += x;
            }
        }
        let n = src.rows as f64;
        v.data.iter_mut().for_each(|x| *x /= n);
        self.push(v, Op::MeanRows(a))
    }

    /// Valid 2-D convolution without bias. `kernel` holds one flattened
    /// `kh×kw` filter per row; the result has one row per (channel, output
    /// row) and one column per output column.
    pub fn conv2d(&mut self, input: Var, kernel: Var, kh: usize, kw: usize) -> Var {
        let x = self.value(input);
        let k = self.value(kernel);
        assert_eq!(k.cols, kh * kw, "kernel width mismatch");
        assert!(x.rows >= kh && x.cols >= kw, "kernel larger than input");
        let (oh, ow) = (x.rows - kh + 1, x.cols - kw + 1);
        let mut v = Tensor::zeros(k.rows * oh, ow);
        for c in 0..k.rows {
            for oi in 0..oh {
                for oj in 0..ow {
                    let mut s = 0.0;
                    for a in 0..kh {
                        for b in 0..kw {
                            s += k.at(c, a * kw + b) * x.at(oi + a, oj + b);
                        }
                    }
                    *v.at_mut(c * oh + oi, oj) = s;
                }
            }
        }
        self.push(
            v,
            Op::Conv2d {
                input,
                kernel,
                kh,
                kw,
            },
        )
    }

    /// Non-overlapping max pooling along each row; ties keep the first.
    pub fn max_pool_cols(&mut self, a: Var, window: usize) -> Var {
        let src = self.value(a);
        let out_cols = src.cols / window;
        assert!(out_cols > 0, "pooling window wider than input");
        let mut v = Tensor::zeros(src.rows, out_cols);
        let mut arg = Vec::with_capacity(src.rows * out_cols);
        for i in 0..src.rows {
            for j in 0..out_cols {
                let mut best = j * window;
                for c in j * window + 1..(j + 1) * window {
                    if src.at(i, c) > src.at(i, best) {
                        best = c;
                    }
                }
                *v.at_mut(i, j) = src.at(i, best);
                arg.push(best);
            }
        }
        self.push(v, Op::MaxPoolCols(a, arg))
    }

    pub fn flatten(&mut self, a: Var) -> Var {
        let v = Tensor::row_vector(self.value(a).data.clone());
        self.push(v, Op::Flatten(a))
    }

    /// Euclidean norm of all entries, as a `1×1` tensor.
    pub fn norm(&mut self, a: Var) -> Var {
        let n = self.value(a).data.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.push(Tensor::scalar(n), Op::Norm(a))
    }

    /// Elementwise sum of same-shaped tensors.
    pub fn sum(&mut self, parts: &[Var]) -> Var {
        let mut v = self.value(parts[0]).clone();
        for &p in &parts[1..] {
            v.add_assign(self.value(p));
        }
        self.push(v, Op::Sum(parts.to_vec()))
    }

    /// Gradients of the scalar `root` with respect to every node.
    pub fn backward(&self, root: Var) -> Vec<Option<Tensor>> {
        assert_eq!(self.value(root).len(), 1, "backward from a non-scalar");
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[root] = Some(Tensor::scalar(1.0));

        fn acc(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
            match &mut grads[v] {
                Some(t) => t.add_assign(&g),
                slot => *slot = Some(g),
            }
        }

        for idx in (0..=root).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            let y = &node.value;
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    acc(&mut grads, *a, g.matmul(&bv.transpose()));
                    acc(&mut grads, *b, av.transpose().matmul(&g));
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g.clone());
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    let mut n = g.clone();
                    n.data.iter_mut().for_each(|x| *x = -*x);
                    acc(&mut grads, *b, n);
                }
                Op::AddRow(a, r) => {
                    let mut gr = Tensor::zeros(1, g.cols);
                    for i in 0..g.rows {
                        for (o, x) in gr.data.iter_mut().zip(g.row(i)) {
                            *o += x;
                        }
                    }
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *r, gr);
                }
                Op::MulRow(a, r) => {
                    let (av, rv) = (self.value(*a), self.value(*r));
                    let mut ga = g.clone();
                    let mut gr = Tensor::zeros(1, g.cols);
                    for i in 0..g.rows {
                        for j in 0..g.cols {
                            *ga.at_mut(i, j) = g.at(i, j) * rv.data[j];
                            gr.data[j] += g.at(i, j) * av.at(i, j);
                        }
                    }
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *r, gr);
                }
                Op::Scale(a, s) => {
                    let mut ga = g.clone();
                    ga.data.iter_mut().for_each(|x| *x *= s);
                    acc(&mut grads, *a, ga);
                }
                Op::AddScalar(a) => acc(&mut grads, *a, g.clone()),
                Op::Relu(a) => {
                    let av = self.value(*a);
                    let mut ga = g.clone();
                    for (x, &inp) in ga.data.iter_mut().zip(&av.data) {
                        if inp <= 0.0 {
                            *x = 0.0;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::SoftmaxRows(a) => {
                    let mut ga = Tensor::zeros(g.rows, g.cols);
                    for i in 0..g.rows {
                        let dot: f64 = g.row(i).iter().zip(y.row(i)).map(|(p, q)| p * q).sum();
                        for j in 0..g.cols {
                            *ga.at_mut(i, j) = y.at(i, j) * (g.at(i, j) - dot);
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::NormalizeRows(a, inv) => {
                    let n = g.cols as f64;
                    let mut ga = Tensor::zeros(g.rows, g.cols);
                    for (i, &s) in inv.iter().enumerate().take(g.rows) {
                        let gs: f64 = g.row(i).iter().sum();
                        let gy: f64 = g.row(i).iter().zip(y.row(i)).map(|(p, q)| p * q).sum();
                        for j in 0..g.cols {
                            *ga.at_mut(i, j) = s / n * (n * g.at(i, j) - gs - y.at(i, j) * gy);
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Transpose(a) => acc(&mut grads, *a, g.transpose()),
                Op::Cols(a, start) => {
                    let av = self.value(*a);
                    let mut ga = Tensor::zeros(av.rows, av.cols);
                    for i in 0..g.rows {
                        ga.row_mut(i)[*start..*start + g.cols].copy_from_slice(g.row(i));
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Row(a, r) => {
                    let av = self.value(*a);
                    let mut ga = Tensor::zeros(av.rows, av.cols);
                    ga.row_mut(*r).copy_from_slice(&g.data);
                    acc(&mut grads, *a, ga);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let c = self.value(p).cols;
                        let mut gp = Tensor::zeros(g.rows, c);
                        for i in 0..g.rows {
                            gp.row_mut(i).copy_from_slice(&g.row(i)[off..off + c]);
                        }
                        off += c;
                        acc(&mut grads, p, gp);
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let (r, c) = self.value(p).shape();
                        let gp = Tensor::from_vec(r, c, g.data[off..off + r * c].to_vec());
                        off += r * c;
                        acc(&mut grads, p, gp);
                    }
                }
                Op::MeanRows(a) => {
                    let av = self.value(*a);
                    let n = av.rows as f64;
                    let mut ga = Tensor::zeros(av.rows, av.cols);
                    for i in 0..av.rows {
                        for (o, x) in ga.row_mut(i).iter_mut().zip(&g.data) {
                            *o = x / n;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Conv2d {
                    input,
                    kernel,
                    kh,
                    kw,
                } => {
                    let (x, k) = (self.value(*input), self.value(*kernel));
                    let (kh, kw) = (*kh, *kw);
                    let (oh, ow) = (x.rows - kh + 1, x.cols - kw + 1);
                    let mut gx = Tensor::zeros(x.rows, x.cols);
                    let mut gk = Tensor::zeros(k.rows, k.cols);
                    for c in 0..k.rows {
                        for oi in 0..oh {
                            for oj in 0..ow {
                                let go = g.at(c * oh + oi, oj);
                                if go == 0.0 {
                                    continue;
                                }
                                for a in 0..kh {
                                    for b in 0..kw {
                                        *gk.at_mut(c, a * kw + b) += go * x.at(oi + a, oj + b);
                                        *gx.at_mut(oi + a, oj + b) += go * k.at(c, a * kw + b);
                                    }
                                }
                            }
                        }
                    }
                    acc(&mut grads, *input, gx);
                    acc(&mut grads, *kernel, gk);
                }
                Op::MaxPoolCols(a, arg) => {
                    let av = self.value(*a);
                    let mut ga = Tensor::zeros(av.rows, av.cols);
                    for i in 0..g.rows {
                        for j in 0..g.cols {
                            *ga.at_mut(i, arg[i * g.cols + j]) += g.at(i, j);
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Flatten(a) => {
                    let (r, c) = self.value(*a).shape();
                    acc(&mut grads, *a, Tensor::from_vec(r, c, g.data.clone()));
                }
                Op::Norm(a) => {
                    let av = self.value(*a);
                    let n = y.data[0];
                    let mut ga = Tensor::zeros(av.rows, av.cols);
                    if n > 0.0 {
                        for (o, x) in ga.data.iter_mut().zip(&av.data) {
                            *o = g.data[0] * x / n;
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::Sum(parts) => {
                    for &p in parts {
                        acc(&mut grads, p, g.clone());
                    }
                }
            }
            grads[idx] = Some(g);
        }
        grads
    }
}
