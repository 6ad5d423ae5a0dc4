use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::Tensor;

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    Affine { x: Var, w: Var, b: Var },
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    OneMinus(Var),
    Square(Var),
    Scale(Var, T),
    MulConst(Var, Vec<T>),
    Concat(Vec<Var>),
    Gather { table: Var, rows: Vec<usize> },
    Blend { on: Var, off: Var, mask: Vec<bool> },
    Sum(Var),
}

#[derive(Debug)]
struct Node<T> {
    shape: Vec<usize>,
    value: Vec<T>,
    op: Op<T>,
    tracked: bool,
}

/// Linear record of a forward computation.
///
/// Nodes are appended in execution order, so a reverse scan is a valid
/// topological order for the backward pass.
#[derive(Debug, Default)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

/// Gradients of a scalar with respect to every tracked node of a tape.
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
    visited: usize,
}

impl<T: Scalar> Gradients<T> {
    pub fn wrt(&self, var: Var) -> Option<&[T]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }

    /// Number of recorded operations whose backward rule ran.
    pub fn visited(&self) -> usize {
        self.visited
    }

    /// Folds the gradient of `var` into `tensor`, if the tape produced one.
    pub fn accumulate_into(&self, var: Var, tensor: &mut Tensor<T>) -> Result<()> {
        match self.wrt(var) {
            Some(g) => tensor.accumulate_grad(g),
            None if tensor.requires_grad() => {
                tensor.accumulate_grad(&vec![T::zero(); tensor.len()])
            }
            None => Ok(()),
        }
    }
}

fn grad_slot<'a, T: Scalar>(
    nodes: &[Node<T>],
    var: Var,
    grads: &'a mut [Option<Vec<T>>],
) -> Option<&'a mut Vec<T>> {
    if !nodes[var.0].tracked {
        return None;
    }
    let len = nodes[var.0].value.len();
    Some(grads[var.0].get_or_insert_with(|| vec![T::zero(); len]))
}

fn rows_cols(shape: &[usize]) -> (usize, usize) {
    let cols = *shape.last().unwrap_or(&1);
    let len: usize = shape.iter().product();
    (len / cols.max(1), cols)
}

#[inline]
fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &[T] {
        &self.nodes[var.0].value
    }

    pub fn shape(&self, var: Var) -> &[usize] {
        &self.nodes[var.0].shape
    }

    /// Copies a tensor onto the tape. Gradients flow to it iff it requires them.
    pub fn leaf(&mut self, tensor: &Tensor<T>) -> Var {
        self.push(
            tensor.shape().to_vec(),
            tensor.data().to_vec(),
            Op::Leaf,
            tensor.requires_grad(),
        )
    }

    pub fn constant(&mut self, shape: Vec<usize>, data: Vec<T>) -> Result<Var> {
        let t = Tensor::new(shape, data)?;
        Ok(self.leaf(&t))
    }

    pub fn zeros(&mut self, shape: Vec<usize>) -> Var {
        let len = shape.iter().product();
        self.push(shape, vec![T::zero(); len], Op::Leaf, false)
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<T>, op: Op<T>, tracked: bool) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        self.nodes.push(Node {
            shape,
            value,
            op,
            tracked,
        });
        Var(self.nodes.len() - 1)
    }

    fn tracked(&self, var: Var) -> bool {
        self.nodes[var.0].tracked
    }

    /// `x Wᵀ + b` for `x` of shape `[n]` or `[batch, n]`, `W` of shape `[m, n]`.
    pub fn matvec_affine(&mut self, w: Var, x: Var, b: Var) -> Result<Var> {
        let ws = self.shape(w);
        let xs = self.shape(x);
        let bs = self.shape(b);
        if ws.len() != 2 || xs.is_empty() || xs.len() > 2 || *xs.last().unwrap() != ws[1] {
            return Err(Error::shape("matvec_affine", ws, xs));
        }
        if bs.len() != 1 || bs[0] != ws[0] {
            return Err(Error::shape("matvec_affine", ws, bs));
        }
        let (m, n) = (ws[0], ws[1]);
        let (rows, _) = rows_cols(xs);
        let mut shape = xs.to_vec();
        *shape.last_mut().unwrap() = m;

        let wv = &self.nodes[w.0].value;
        let xv = &self.nodes[x.0].value;
        let bv = &self.nodes[b.0].value;
        let mut out = Vec::with_capacity(rows * m);
        for r in 0..rows {
            let xr = &xv[r * n..(r + 1) * n];
            for i in 0..m {
                let wi = &wv[i * n..(i + 1) * n];
                let mut acc = T::zero();
                for (a, c) in wi.iter().zip(xr) {
                    acc = acc + *a * *c;
                }
                out.push(acc + bv[i]);
            }
        }
        let tracked = self.tracked(w) || self.tracked(x) || self.tracked(b);
        Ok(self.push(shape, out, Op::Affine { x, w, b }, tracked))
    }

    fn unary(&mut self, x: Var, f: impl Fn(T) -> T, op: Op<T>) -> Var {
        let node = &self.nodes[x.0];
        let shape = node.shape.clone();
        let value = node.value.iter().map(|&v| f(v)).collect();
        let tracked = node.tracked;
        self.push(shape, value, op, tracked)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(x, |v| v.tanh(), Op::Tanh(x))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.unary(
            x,
            |v| if v > T::zero() { v } else { T::zero() },
            Op::Relu(x),
        )
    }

    /// `1 - x`
    pub fn one_minus(&mut self, x: Var) -> Var {
        self.unary(x, |v| T::one() - v, Op::OneMinus(x))
    }

    pub fn square(&mut self, x: Var) -> Var {
        self.unary(x, |v| v * v, Op::Square(x))
    }

    pub fn scale(&mut self, x: Var, factor: T) -> Var {
        self.unary(x, |v| v * factor, Op::Scale(x, factor))
    }

    fn binary(
        &mut self,
        a: Var,
        b: Var,
        name: &'static str,
        f: impl Fn(T, T) -> T,
        op: Op<T>,
    ) -> Result<Var> {
        let (na, nb) = (&self.nodes[a.0], &self.nodes[b.0]);
        if na.shape != nb.shape {
            return Err(Error::shape(name, &na.shape, &nb.shape));
        }
        let value = na
            .value
            .iter()
            .zip(&nb.value)
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = na.shape.clone();
        let tracked = na.tracked || nb.tracked;
        Ok(self.push(shape, value, op, tracked))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    /// Elementwise product with a constant of the same length (masks, weights).
    pub fn mul_const(&mut self, x: Var, factors: Vec<T>) -> Result<Var> {
        let node = &self.nodes[x.0];
        if node.value.len() != factors.len() {
            return Err(Error::shape("mul_const", &node.shape, &[factors.len()]));
        }
        let value = node
            .value
            .iter()
            .zip(&factors)
            .map(|(&v, &f)| v * f)
            .collect();
        let shape = node.shape.clone();
        let tracked = node.tracked;
        Ok(self.push(shape, value, Op::MulConst(x, factors), tracked))
    }

    /// Concatenates along the last axis; leading axes must agree.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Contract("concat of nothing".into()))?;
        let lead = self.shape(*first);
        let lead = lead[..lead.len() - 1].to_vec();
        let mut cols = Vec::with_capacity(parts.len());
        for &p in parts {
            let s = self.shape(p);
            if s[..s.len() - 1] != lead[..] {
                return Err(Error::shape("concat", self.shape(*first), s));
            }
            cols.push(*s.last().unwrap());
        }
        let rows: usize = lead.iter().product();
        let total: usize = cols.iter().sum();
        let mut value = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (&p, &c) in parts.iter().zip(&cols) {
                value.extend_from_slice(&self.nodes[p.0].value[r * c..(r + 1) * c]);
            }
        }
        let mut shape = lead;
        shape.push(total);
        let tracked = parts.iter().any(|&p| self.tracked(p));
        Ok(self.push(shape, value, Op::Concat(parts.to_vec()), tracked))
    }

    /// Selects rows of a `[levels, k]` table, producing `[rows.len(), k]`.
    pub fn gather(&mut self, table: Var, rows: &[usize]) -> Result<Var> {
        let shape = self.shape(table);
        if shape.len() != 2 {
            return Err(Error::shape("gather", shape, &[rows.len()]));
        }
        let (levels, k) = (shape[0], shape[1]);
        if rows.is_empty() {
            return Err(Error::Contract("gather of no rows".into()));
        }
        let tv = &self.nodes[table.0].value;
        let mut value = Vec::with_capacity(rows.len() * k);
        for &r in rows {
            if r >= levels {
                return Err(Error::UnknownLevel { level: r, levels });
            }
            value.extend_from_slice(&tv[r * k..(r + 1) * k]);
        }
        let tracked = self.tracked(table);
        Ok(self.push(
            vec![rows.len(), k],
            value,
            Op::Gather {
                table,
                rows: rows.to_vec(),
            },
            tracked,
        ))
    }

    /// Selects one row of a `[levels, k]` table as a `[k]` vector.
    pub fn row(&mut self, table: Var, level: usize) -> Result<Var> {
        let v = self.gather(table, &[level])?;
        let node = &mut self.nodes[v.0];
        node.shape = vec![node.shape[1]];
        Ok(v)
    }

    /// Row-wise select: row `r` comes from `on` where `mask[r]`, else from `off`.
    pub fn blend(&mut self, on: Var, off: Var, mask: &[bool]) -> Result<Var> {
        let (a, b) = (&self.nodes[on.0], &self.nodes[off.0]);
        if a.shape != b.shape {
            return Err(Error::shape("blend", &a.shape, &b.shape));
        }
        let (rows, cols) = rows_cols(&a.shape);
        if rows != mask.len() {
            return Err(Error::shape("blend", &a.shape, &[mask.len()]));
        }
        let mut value = Vec::with_capacity(rows * cols);
        for (r, &m) in mask.iter().enumerate() {
            let src = if m { &a.value } else { &b.value };
            value.extend_from_slice(&src[r * cols..(r + 1) * cols]);
        }
        let shape = a.shape.clone();
        let tracked = a.tracked || b.tracked;
        Ok(self.push(
            shape,
            value,
            Op::Blend {
                on,
                off,
                mask: mask.to_vec(),
            },
            tracked,
        ))
    }

    /// Sum of all elements, as a `[1]` tensor.
    pub fn sum(&mut self, x: Var) -> Var {
        let node = &self.nodes[x.0];
        let total = node.value.iter().copied().sum();
        let tracked = node.tracked;
        self.push(vec![1], vec![total], Op::Sum(x), tracked)
    }

    /// Reverse pass from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let root = &self.nodes[loss.0];
        if root.value.len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                root.shape
            )));
        }
        let mut grads: Vec<Option<Vec<T>>> = Vec::with_capacity(loss.0 + 1);
        grads.resize_with(loss.0 + 1, || None);
        let mut visited = 0;
        if !root.tracked {
            return Ok(Gradients { grads, visited });
        }
        grads[loss.0] = Some(vec![T::one()]);

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.tracked || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            visited += 1;
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads, visited })
    }

    fn propagate(&self, node: &Node<T>, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let nodes = &self.nodes;
        macro_rules! with_grad {
            ($v:expr, |$acc:ident| $body:block) => {
                if let Some($acc) = grad_slot(nodes, $v, grads) {
                    $body
                }
            };
        }

        match &node.op {
            Op::Leaf => {}
            Op::Affine { x, w, b } => {
                let ws = &nodes[w.0].shape;
                let (m, n) = (ws[0], ws[1]);
                let rows = g.len() / m;
                let xv = &nodes[x.0].value;
                let wv = &nodes[w.0].value;
                with_grad!(*x, |dx| {
                    for r in 0..rows {
                        let dxr = &mut dx[r * n..(r + 1) * n];
                        for i in 0..m {
                            let gi = g[r * m + i];
                            if gi == T::zero() {
                                continue;
                            }
                            for (d, wv) in dxr.iter_mut().zip(&wv[i * n..(i + 1) * n]) {
                                *d = *d + gi * *wv;
                            }
                        }
                    }
                });
                with_grad!(*w, |dw| {
                    for r in 0..rows {
                        let xr = &xv[r * n..(r + 1) * n];
                        for i in 0..m {
                            let gi = g[r * m + i];
                            if gi == T::zero() {
                                continue;
                            }
                            for (d, xv) in dw[i * n..(i + 1) * n].iter_mut().zip(xr) {
                                *d = *d + gi * *xv;
                            }
                        }
                    }
                });
                with_grad!(*b, |db| {
                    for r in 0..rows {
                        for i in 0..m {
                            db[i] = db[i] + g[r * m + i];
                        }
                    }
                });
            }
            Op::Sigmoid(x) => with_grad!(*x, |dx| {
                for ((d, &gi), &y) in dx.iter_mut().zip(g).zip(&node.value) {
                    *d = *d + gi * y * (T::one() - y);
                }
            }),
            Op::Tanh(x) => with_grad!(*x, |dx| {
                for ((d, &gi), &y) in dx.iter_mut().zip(g).zip(&node.value) {
                    *d = *d + gi * (T::one() - y * y);
                }
            }),
            Op::Relu(x) => {
                let xv = &nodes[x.0].value;
                with_grad!(*x, |dx| {
                    for ((d, &gi), &v) in dx.iter_mut().zip(g).zip(xv) {
                        if v > T::zero() {
                            *d = *d + gi;
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                with_grad!(*a, |da| {
                    for (d, &gi) in da.iter_mut().zip(g) {
                        *d = *d + gi;
                    }
                });
                with_grad!(*b, |db| {
                    for (d, &gi) in db.iter_mut().zip(g) {
                        *d = *d + gi;
                    }
                });
            }
            Op::Sub(a, b) => {
                with_grad!(*a, |da| {
                    for (d, &gi) in da.iter_mut().zip(g) {
                        *d = *d + gi;
                    }
                });
                with_grad!(*b, |db| {
                    for (d, &gi) in db.iter_mut().zip(g) {
                        *d = *d - gi;
                    }
                });
            }
            Op::Mul(a, b) => {
                let (av, bv) = (&nodes[a.0].value, &nodes[b.0].value);
                with_grad!(*a, |da| {
                    for ((d, &gi), &o) in da.iter_mut().zip(g).zip(bv) {
                        *d = *d + gi * o;
                    }
                });
                with_grad!(*b, |db| {
                    for ((d, &gi), &o) in db.iter_mut().zip(g).zip(av) {
                        *d = *d + gi * o;
                    }
                });
            }
            Op::OneMinus(x) => with_grad!(*x, |dx| {
                for (d, &gi) in dx.iter_mut().zip(g) {
                    *d = *d - gi;
                }
            }),
            Op::Square(x) => {
                let xv = &nodes[x.0].value;
                with_grad!(*x, |dx| {
                    let two = T::one() + T::one();
                    for ((d, &gi), &v) in dx.iter_mut().zip(g).zip(xv) {
                        *d = *d + two * v * gi;
                    }
                });
            }
            Op::Scale(x, c) => with_grad!(*x, |dx| {
                for (d, &gi) in dx.iter_mut().zip(g) {
                    *d = *d + gi * *c;
                }
            }),
            Op::MulConst(x, f) => with_grad!(*x, |dx| {
                for ((d, &gi), &fi) in dx.iter_mut().zip(g).zip(f) {
                    *d = *d + gi * fi;
                }
            }),
            Op::Concat(parts) => {
                let total = *node.shape.last().unwrap();
                let rows = g.len() / total;
                let mut offset = 0;
                for &p in parts {
                    let c = *nodes[p.0].shape.last().unwrap();
                    with_grad!(p, |dp| {
                        for r in 0..rows {
                            let src = &g[r * total + offset..r * total + offset + c];
                            for (d, &gi) in dp[r * c..(r + 1) * c].iter_mut().zip(src) {
                                *d = *d + gi;
                            }
                        }
                    });
                    offset += c;
                }
            }
            Op::Gather { table, rows } => {
                let k = nodes[table.0].shape[1];
                with_grad!(*table, |dt| {
                    for (r, &level) in rows.iter().enumerate() {
                        let src = &g[r * k..(r + 1) * k];
                        for (d, &gi) in dt[level * k..(level + 1) * k].iter_mut().zip(src) {
                            *d = *d + gi;
                        }
                    }
                });
            }
            Op::Blend { on, off, mask } => {
                let cols = *node.shape.last().unwrap();
                for (target, want) in [(*on, true), (*off, false)] {
                    with_grad!(target, |dt| {
                        for (r, &m) in mask.iter().enumerate() {
                            if m == want {
                                let span = r * cols..(r + 1) * cols;
                                for (d, &gi) in dt[span.clone()].iter_mut().zip(&g[span]) {
                                    *d = *d + gi;
                                }
                            }
                        }
                    });
                }
            }
            Op::Sum(x) => with_grad!(*x, |dx| {
                let gi = g[0];
                for d in dx.iter_mut() {
                    *d = *d + gi;
                }
            }),
        }
    }
}
