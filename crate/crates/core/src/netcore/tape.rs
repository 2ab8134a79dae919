//! Reverse-mode differentiation over a recorded graph of dense operations.
//!
//! Every op computes its value eagerly when it is recorded. `backward` walks
//! the record in reverse and scatters parameter gradients into a flat vector
//! laid out like [`NetworkParams`](super::NetworkParams).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::netcore::activation::rowdy_eval_with_grad;
use crate::tensor::{gemm, DenseTensor};

/// Handle to a recorded node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Row-sparse linear operator in CSR form, applied independently to each
/// column of its input.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMap {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMap {
    pub fn empty(n_cols: usize) -> Self {
        Self {
            n_rows: 0,
            n_cols,
            row_ptr: vec![0],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends one output row `sum_j w_j * x[c_j]`.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) {
        for (c, w) in entries {
            debug_assert!(c < self.n_cols);
            self.col_idx.push(c);
            self.values.push(w);
        }
        self.row_ptr.push(self.col_idx.len());
        self.n_rows += 1;
    }

    /// Block-diagonal concatenation: `other` acts on the columns after `self`'s.
    pub fn append_block(&mut self, other: &SparseMap) {
        let col_off = self.n_cols;
        let nnz_off = self.col_idx.len();
        self.col_idx
            .extend(other.col_idx.iter().map(|c| c + col_off));
        self.values.extend_from_slice(&other.values);
        self.row_ptr
            .extend(other.row_ptr[1..].iter().map(|p| p + nnz_off));
        self.n_rows += other.n_rows;
        self.n_cols += other.n_cols;
    }

    /// Applies the map to a `n_cols x width` row-major matrix.
    pub fn apply(&self, x: &[f64], width: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows * width];
        for r in 0..self.n_rows {
            let dst = &mut out[r * width..(r + 1) * width];
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let w = self.values[p];
                let src = &x[self.col_idx[p] * width..(self.col_idx[p] + 1) * width];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        out
    }

    fn apply_transpose_acc(&self, g: &[f64], width: usize, acc: &mut [f64]) {
        for r in 0..self.n_rows {
            let src = &g[r * width..(r + 1) * width];
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let w = self.values[p];
                let c = self.col_idx[p];
                for (d, s) in acc[c * width..(c + 1) * width].iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
    }
}

/// Layout of a branch/trunk latent contraction, see [`Tape::latent_dot`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatentDotSpec {
    pub samples: usize,
    pub points: usize,
    pub latent: usize,
    pub n_vars: usize,
    /// Trunk has `points` rows used by every sample instead of `samples * points`.
    pub shared_trunk: bool,
    /// Trunk has `n_vars * latent` columns (one basis per variable) instead of `latent`.
    pub trunk_per_var: bool,
}

enum Op {
    Leaf,
    Param {
        offset: usize,
    },
    MatMul {
        a: Var,
        b: Var,
    },
    AddBias {
        x: Var,
        bias: Var,
    },
    Rowdy {
        x: Var,
        coeffs: Var,
        dydx: Vec<f64>,
        basis: Vec<Vec<f64>>,
    },
    Add {
        a: Var,
        b: Var,
    },
    Sub {
        a: Var,
        b: Var,
    },
    Mul {
        a: Var,
        b: Var,
    },
    Scale {
        x: Var,
        factor: f64,
    },
    MulGrouped {
        y: Var,
        s: Var,
        group: usize,
    },
    LatentDot {
        branch: Var,
        trunk: Var,
        spec: LatentDotSpec,
    },
    Linear {
        x: Var,
        map: Arc<SparseMap>,
    },
    SquaredError {
        x: Var,
        target: Arc<DenseTensor>,
        row_weights: Option<Arc<Vec<f64>>>,
        denom: f64,
    },
    Sum {
        x: Var,
    },
}

struct Node {
    value: DenseTensor,
    op: Op,
}

/// Recorded computation.
pub struct Tape {
    nodes: Vec<Node>,
    param_len: usize,
}

/// Result of a backward sweep.
pub struct Gradients {
    pub params: Vec<f64>,
    nodes: Vec<Option<DenseTensor>>,
}

impl Gradients {
    /// Gradient with respect to a leaf node.
    pub fn wrt(&self, v: Var) -> Option<&DenseTensor> {
        self.nodes[v.0].as_ref()
    }
}

fn same_shape(ctx: &'static str, a: &DenseTensor, b: &DenseTensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(
            ctx,
            format!("{:?}", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    Ok(())
}

impl Tape {
    /// `param_len` is the length of the flat parameter vector gradients are scattered into.
    pub fn new(param_len: usize) -> Self {
        Self {
            nodes: Vec::new(),
            param_len,
        }
    }

    pub fn param_len(&self) -> usize {
        self.param_len
    }

    pub fn value(&self, v: Var) -> &DenseTensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: DenseTensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Constant or differentiable input not backed by parameters.
    pub fn leaf(&mut self, value: DenseTensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Parameter slice `flat[offset..offset + len(shape)]`.
    pub fn param(&mut self, flat: &[f64], offset: usize, shape: &[usize]) -> Var {
        let len: usize = shape.iter().product();
        assert!(
            offset + len <= self.param_len,
            "parameter slice out of range"
        );
        let value = DenseTensor::new(shape.to_vec(), flat[offset..offset + len].to_vec())
            .expect("shape/length agree by construction");
        self.push(value, Op::Param { offset })
    }

    /// `a @ b` over the matrix views (`a: rows x k`, `b: k x n`).
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if bv.rank() != 2 {
            return Err(Error::dim("matmul rhs rank", 2, bv.rank()));
        }
        let (k, n) = (bv.shape()[0], bv.shape()[1]);
        if av.cols() != k {
            return Err(Error::dim("matmul inner extent", k, av.cols()));
        }
        let m = av.rows();
        let mut out = vec![0.0; m * n];
        gemm(m, k, n, av.data(), false, bv.data(), false, 0.0, &mut out);
        let mut shape = av.shape().to_vec();
        *shape.last_mut().expect("rank >= 1") = n;
        let value = DenseTensor::new(shape, out)?;
        Ok(self.push(value, Op::MatMul { a, b }))
    }

    /// Adds a bias row to every row of `x`.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(bias));
        let c = xv.cols();
        if bv.len() != c {
            return Err(Error::dim("add_bias width", c, bv.len()));
        }
        let mut value = xv.clone();
        for row in value.data_mut().chunks_exact_mut(c) {
            for (v, b) in row.iter_mut().zip(bv.data()) {
                *v += b;
            }
        }
        Ok(self.push(value, Op::AddBias { x, bias }))
    }

    /// `x @ w + b`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let h = self.matmul(x, w)?;
        self.add_bias(h, b)
    }

    pub fn rowdy(&mut self, x: Var, coeffs: Var, scale: f64) -> Var {
        let ev = rowdy_eval_with_grad(self.value(x).data(), self.value(coeffs).data(), scale);
        let value =
            DenseTensor::new(self.value(x).shape().to_vec(), ev.out).expect("shape preserved");
        self.push(
            value,
            Op::Rowdy {
                x,
                coeffs,
                dydx: ev.dydx,
                basis: ev.basis,
            },
        )
    }

    fn binary(
        &mut self,
        a: Var,
        b: Var,
        ctx: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<DenseTensor> {
        let (av, bv) = (self.value(a), self.value(b));
        same_shape(ctx, av, bv)?;
        let data = av
            .data()
            .iter()
            .zip(bv.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        DenseTensor::new(av.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.binary(a, b, "add", |x, y| x + y)?;
        Ok(self.push(v, Op::Add { a, b }))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.binary(a, b, "sub", |x, y| x - y)?;
        Ok(self.push(v, Op::Sub { a, b }))
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.binary(a, b, "mul", |x, y| x * y)?;
        Ok(self.push(v, Op::Mul { a, b }))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let v = self.value(x).map(|e| e * factor);
        self.push(v, Op::Scale { x, factor })
    }

    /// `y[r, j] * s[r / group, j]`: one row of `s` conditions `group`
    /// consecutive rows of `y`.
    pub fn mul_grouped(&mut self, y: Var, s: Var, group: usize) -> Result<Var> {
        let (yv, sv) = (self.value(y), self.value(s));
        let c = yv.cols();
        if sv.cols() != c {
            return Err(Error::dim("mul_grouped width", c, sv.cols()));
        }
        if sv.rows() * group != yv.rows() {
            return Err(Error::dim("mul_grouped rows", sv.rows() * group, yv.rows()));
        }
        let mut value = yv.clone();
        for (r, row) in value.data_mut().chunks_exact_mut(c).enumerate() {
            let srow = sv.row(r / group);
            for (v, s) in row.iter_mut().zip(srow) {
                *v *= s;
            }
        }
        Ok(self.push(value, Op::MulGrouped { y, s, group }))
    }

    /// Branch/trunk contraction over the latent axis:
    ///
    /// `out[(i, p), s] = sum_k branch[i, s * latent + k] * trunk[row(i, p), col(s, k)]`
    ///
    /// The branch row of a sample holds `n_vars` contiguous blocks of `latent`.
    pub fn latent_dot(&mut self, branch: Var, trunk: Var, spec: LatentDotSpec) -> Result<Var> {
        let (bv, tv) = (self.value(branch), self.value(trunk));
        let LatentDotSpec {
            samples,
            points,
            latent,
            n_vars,
            shared_trunk,
            trunk_per_var,
        } = spec;
        if bv.rows() != samples || bv.cols() != latent * n_vars {
            return Err(Error::dim(
                "latent_dot branch",
                format!("{samples}x{}", latent * n_vars),
                format!("{}x{}", bv.rows(), bv.cols()),
            ));
        }
        let t_rows = if shared_trunk {
            points
        } else {
            samples * points
        };
        let t_cols = if trunk_per_var {
            latent * n_vars
        } else {
            latent
        };
        if tv.rows() != t_rows || tv.cols() != t_cols {
            return Err(Error::dim(
                "latent_dot trunk",
                format!("{t_rows}x{t_cols}"),
                format!("{}x{}", tv.rows(), tv.cols()),
            ));
        }
        let mut out = vec![0.0; samples * points * n_vars];
        for i in 0..samples {
            let b_i = bv.row(i);
            let t_i = trunk_block(tv.data(), i, points, t_cols, shared_trunk);
            let o_i = &mut out[i * points * n_vars..(i + 1) * points * n_vars];
            if trunk_per_var {
                for p in 0..points {
                    let t_row = &t_i[p * t_cols..(p + 1) * t_cols];
                    for s in 0..n_vars {
                        let range = s * latent..(s + 1) * latent;
                        o_i[p * n_vars + s] = dot(&b_i[range.clone()], &t_row[range]);
                    }
                }
            } else {
                // o_i (points x n_vars) = t_i (points x latent) * b_i^T (latent x n_vars)
                gemm(points, latent, n_vars, t_i, false, b_i, true, 0.0, o_i);
            }
        }
        let value = DenseTensor::new(vec![samples * points, n_vars], out)?;
        Ok(self.push(
            value,
            Op::LatentDot {
                branch,
                trunk,
                spec,
            },
        ))
    }

    pub fn linear_map(&mut self, x: Var, map: Arc<SparseMap>) -> Result<Var> {
        let xv = self.value(x);
        if xv.rows() != map.n_cols {
            return Err(Error::dim("linear_map rows", map.n_cols, xv.rows()));
        }
        let w = xv.cols();
        let value = DenseTensor::new(vec![map.n_rows, w], map.apply(xv.data(), w))?;
        Ok(self.push(value, Op::Linear { x, map }))
    }

    /// `sum_r w_r sum_c (x[r, c] - target[r, c])^2 / denom`, a scalar.
    pub fn squared_error(
        &mut self,
        x: Var,
        target: Arc<DenseTensor>,
        row_weights: Option<Arc<Vec<f64>>>,
        denom: f64,
    ) -> Result<Var> {
        let xv = self.value(x);
        if xv.len() != target.len() || xv.cols() != target.cols() {
            return Err(Error::dim(
                "squared_error target",
                format!("{:?}", xv.shape()),
                format!("{:?}", target.shape()),
            ));
        }
        let c = xv.cols();
        if let Some(w) = &row_weights {
            if w.len() != xv.rows() {
                return Err(Error::dim("squared_error weights", xv.rows(), w.len()));
            }
        }
        let mut total = 0.0;
        for (r, (xr, tr)) in xv
            .data()
            .chunks_exact(c)
            .zip(target.data().chunks_exact(c))
            .enumerate()
        {
            let w = row_weights.as_ref().map_or(1.0, |w| w[r]);
            if w == 0.0 {
                continue;
            }
            let s: f64 = xr.iter().zip(tr).map(|(a, b)| (a - b) * (a - b)).sum();
            total += w * s;
        }
        let value = DenseTensor::scalar(total / denom);
        Ok(self.push(
            value,
            Op::SquaredError {
                x,
                target,
                row_weights,
                denom,
            },
        ))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(DenseTensor::scalar(s), Op::Sum { x })
    }

    /// Gradients of a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        self.backward_seeded(loss, DenseTensor::filled(lv.shape(), 1.0))
    }

    /// Vector-Jacobian product with an explicit output cotangent.
    pub fn backward_seeded(&self, out: Var, seed: DenseTensor) -> Result<Gradients> {
        same_shape("backward seed", self.value(out), &seed)?;
        let mut grads: Vec<Option<DenseTensor>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut params = vec![0.0; self.param_len];
        grads[out.0] = Some(seed);

        for idx in (0..=out.0).rev() {
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Leaf) {
                // leaves keep their gradient for `Gradients::wrt`
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::Param { offset } => {
                    for (p, v) in params[*offset..*offset + g.len()].iter_mut().zip(g.data()) {
                        *p += v;
                    }
                }
                Op::MatMul { a, b } => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (av.rows(), bv.shape()[0], bv.shape()[1]);
                    let mut da = vec![0.0; m * k];
                    gemm(m, n, k, g.data(), false, bv.data(), true, 0.0, &mut da);
                    let mut db = vec![0.0; k * n];
                    gemm(k, m, n, av.data(), true, g.data(), false, 0.0, &mut db);
                    accumulate(&mut grads, *a, av.shape(), da);
                    accumulate(&mut grads, *b, bv.shape(), db);
                }
                Op::AddBias { x, bias } => {
                    let c = g.cols();
                    let mut db = vec![0.0; c];
                    for row in g.data().chunks_exact(c) {
                        for (d, v) in db.iter_mut().zip(row) {
                            *d += v;
                        }
                    }
                    let bshape = self.value(*bias).shape().to_vec();
                    accumulate(&mut grads, *bias, &bshape, db);
                    let xshape = self.value(*x).shape().to_vec();
                    accumulate(&mut grads, *x, &xshape, g.into_data());
                }
                Op::Rowdy {
                    x,
                    coeffs,
                    dydx,
                    basis,
                } => {
                    let da: Vec<f64> = basis.iter().map(|b| dot(b, g.data())).collect();
                    let cshape = self.value(*coeffs).shape().to_vec();
                    accumulate(&mut grads, *coeffs, &cshape, da);
                    let dx = g.data().iter().zip(dydx).map(|(a, b)| a * b).collect();
                    accumulate(&mut grads, *x, g.shape(), dx);
                }
                Op::Add { a, b } => {
                    accumulate(&mut grads, *a, g.shape(), g.data().to_vec());
                    accumulate_tensor(&mut grads, *b, g);
                }
                Op::Sub { a, b } => {
                    accumulate(
                        &mut grads,
                        *b,
                        g.shape(),
                        g.data().iter().map(|v| -v).collect(),
                    );
                    accumulate_tensor(&mut grads, *a, g);
                }
                Op::Mul { a, b } => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let da = g.data().iter().zip(bv.data()).map(|(x, y)| x * y).collect();
                    let db = g.data().iter().zip(av.data()).map(|(x, y)| x * y).collect();
                    accumulate(&mut grads, *a, g.shape(), da);
                    accumulate(&mut grads, *b, g.shape(), db);
                }
                Op::Scale { x, factor } => {
                    accumulate(
                        &mut grads,
                        *x,
                        g.shape(),
                        g.data().iter().map(|v| v * factor).collect(),
                    );
                }
                Op::MulGrouped { y, s, group } => {
                    let (yv, sv) = (self.value(*y), self.value(*s));
                    let c = yv.cols();
                    let mut dy = vec![0.0; yv.len()];
                    let mut ds = vec![0.0; sv.len()];
                    for (r, (gr, yr)) in g
                        .data()
                        .chunks_exact(c)
                        .zip(yv.data().chunks_exact(c))
                        .enumerate()
                    {
                        let sr = r / group;
                        let srow = sv.row(sr);
                        let dsrow = &mut ds[sr * c..(sr + 1) * c];
                        for j in 0..c {
                            dy[r * c + j] = gr[j] * srow[j];
                            dsrow[j] += gr[j] * yr[j];
                        }
                    }
                    accumulate(&mut grads, *y, yv.shape(), dy);
                    accumulate(&mut grads, *s, sv.shape(), ds);
                }
                Op::LatentDot {
                    branch,
                    trunk,
                    spec,
                } => {
                    let (bv, tv) = (self.value(*branch), self.value(*trunk));
                    let (db, dt) = latent_dot_backward(g.data(), bv, tv, spec);
                    accumulate(&mut grads, *branch, bv.shape(), db);
                    accumulate(&mut grads, *trunk, tv.shape(), dt);
                }
                Op::Linear { x, map } => {
                    let xv = self.value(*x);
                    let mut dx = vec![0.0; xv.len()];
                    map.apply_transpose_acc(g.data(), xv.cols(), &mut dx);
                    accumulate(&mut grads, *x, xv.shape(), dx);
                }
                Op::SquaredError {
                    x,
                    target,
                    row_weights,
                    denom,
                } => {
                    let xv = self.value(*x);
                    let c = xv.cols();
                    let scale = 2.0 * g.data()[0] / denom;
                    let mut dx = vec![0.0; xv.len()];
                    for (r, ((d, xr), tr)) in dx
                        .chunks_exact_mut(c)
                        .zip(xv.data().chunks_exact(c))
                        .zip(target.data().chunks_exact(c))
                        .enumerate()
                    {
                        let w = row_weights.as_ref().map_or(1.0, |w| w[r]);
                        if w == 0.0 {
                            continue;
                        }
                        for j in 0..c {
                            d[j] = scale * w * (xr[j] - tr[j]);
                        }
                    }
                    accumulate(&mut grads, *x, xv.shape(), dx);
                }
                Op::Sum { x } => {
                    let xv = self.value(*x);
                    accumulate(&mut grads, *x, xv.shape(), vec![g.data()[0]; xv.len()]);
                }
            }
        }
        Ok(Gradients {
            params,
            nodes: grads,
        })
    }
}

fn trunk_block(t: &[f64], sample: usize, points: usize, cols: usize, shared: bool) -> &[f64] {
    if shared {
        t
    } else {
        &t[sample * points * cols..(sample + 1) * points * cols]
    }
}

fn latent_dot_backward(
    g: &[f64],
    bv: &DenseTensor,
    tv: &DenseTensor,
    spec: &LatentDotSpec,
) -> (Vec<f64>, Vec<f64>) {
    let LatentDotSpec {
        samples,
        points,
        latent,
        n_vars,
        shared_trunk,
        trunk_per_var,
    } = *spec;
    let t_cols = if trunk_per_var {
        latent * n_vars
    } else {
        latent
    };
    let mut db = vec![0.0; bv.len()];
    let mut dt = vec![0.0; tv.len()];
    for i in 0..samples {
        let b_i = bv.row(i);
        let g_i = &g[i * points * n_vars..(i + 1) * points * n_vars];
        let t_i = trunk_block(tv.data(), i, points, t_cols, shared_trunk);
        let db_i = &mut db[i * latent * n_vars..(i + 1) * latent * n_vars];
        let dt_range = if shared_trunk {
            0..points * t_cols
        } else {
            i * points * t_cols..(i + 1) * points * t_cols
        };
        let dt_i = &mut dt[dt_range];
        if trunk_per_var {
            for p in 0..points {
                for s in 0..n_vars {
                    let gv = g_i[p * n_vars + s];
                    for k in 0..latent {
                        let col = s * latent + k;
                        db_i[col] += gv * t_i[p * t_cols + col];
                        dt_i[p * t_cols + col] += gv * b_i[col];
                    }
                }
            }
        } else {
            // dt_i (points x latent) += g_i (points x n_vars) * b_i (n_vars x latent)
            gemm(points, n_vars, latent, g_i, false, b_i, false, 1.0, dt_i);
            // db_i (n_vars x latent) = g_i^T (n_vars x points) * t_i (points x latent)
            gemm(n_vars, points, latent, g_i, true, t_i, false, 0.0, db_i);
        }
    }
    (db, dt)
}

fn accumulate(grads: &mut [Option<DenseTensor>], v: Var, shape: &[usize], data: Vec<f64>) {
    match &mut grads[v.0] {
        Some(existing) => {
            for (e, d) in existing.data_mut().iter_mut().zip(&data) {
                *e += d;
            }
        }
        slot @ None => {
            *slot = Some(DenseTensor::new(shape.to_vec(), data).expect("gradient shape"));
        }
    }
}

fn accumulate_tensor(grads: &mut [Option<DenseTensor>], v: Var, t: DenseTensor) {
    match &mut grads[v.0] {
        Some(existing) => {
            for (e, d) in existing.data_mut().iter_mut().zip(t.data()) {
                *e += d;
            }
        }
        slot @ None => *slot = Some(t),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
