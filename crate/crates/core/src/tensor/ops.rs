use std::rc::Rc;

use super::kernels::{gemm_nn, gemm_nt, gemm_tn};
use super::{numel, strides, Tensor};
use crate::error::{Error, Result};

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::ShapeMismatch {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

/// Output shape of a size-1-axis broadcast, or `None` when the shapes do not
/// conform. Ranks must be equal.
fn broadcast_shape(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    if a.len() != b.len() {
        return None;
    }
    a.iter()
        .zip(b)
        .map(|(&x, &y)| match (x, y) {
            _ if x == y => Some(x),
            (1, _) => Some(y),
            (_, 1) => Some(x),
            _ => None,
        })
        .collect()
}

/// For every element of `out_shape`, the flat offset of the element of a
/// tensor of shape `in_shape` that broadcasts onto it.
fn broadcast_offsets(out_shape: &[usize], in_shape: &[usize]) -> Vec<usize> {
    let in_strides = strides(in_shape);
    let eff: Vec<usize> = in_shape
        .iter()
        .zip(&in_strides)
        .map(|(&d, &s)| if d == 1 { 0 } else { s })
        .collect();
    gather_offsets(out_shape, &eff)
}

/// Offsets `Σ idx[i]·src_strides[i]` for every multi-index of `shape`, in
/// row-major order.
fn gather_offsets(shape: &[usize], src_strides: &[usize]) -> Vec<usize> {
    let n = numel(shape);
    let rank = shape.len();
    let mut out = Vec::with_capacity(n);
    let mut idx = vec![0usize; rank];
    let mut off = 0usize;
    for _ in 0..n {
        out.push(off);
        for ax in (0..rank).rev() {
            idx[ax] += 1;
            off += src_strides[ax];
            if idx[ax] < shape[ax] {
                break;
            }
            off -= src_strides[ax] * shape[ax];
            idx[ax] = 0;
        }
    }
    out
}

fn scatter_add(g: &[f64], offsets: &[usize], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (&o, &gv) in offsets.iter().zip(g) {
        out[o] += gv;
    }
    out
}

#[derive(Clone, Copy)]
enum Binary {
    Add,
    Sub,
    Mul,
}

impl Tensor {
    fn binary(&self, other: &Tensor, kind: Binary) -> Result<Tensor> {
        let name = match kind {
            Binary::Add => "add",
            Binary::Sub => "sub",
            Binary::Mul => "mul",
        };
        let f = |x: f64, y: f64| match kind {
            Binary::Add => x + y,
            Binary::Sub => x - y,
            Binary::Mul => x * y,
        };
        let (ra, rb) = (self.requires_grad(), other.requires_grad());

        if self.shape() == other.shape() {
            let data: Vec<f64> = self
                .data()
                .iter()
                .zip(other.data())
                .map(|(&x, &y)| f(x, y))
                .collect();
            let (a, b) = (self.clone(), other.clone());
            return Ok(Tensor::from_op(
                name,
                data,
                self.shape().to_vec(),
                &[self, other],
                move |g, _| match kind {
                    Binary::Add => vec![ra.then(|| g.to_vec()), rb.then(|| g.to_vec())],
                    Binary::Sub => vec![
                        ra.then(|| g.to_vec()),
                        rb.then(|| g.iter().map(|v| -v).collect()),
                    ],
                    Binary::Mul => vec![
                        ra.then(|| g.iter().zip(b.data()).map(|(g, y)| g * y).collect()),
                        rb.then(|| g.iter().zip(a.data()).map(|(g, x)| g * x).collect()),
                    ],
                },
            ));
        }

        let out_shape =
            broadcast_shape(self.shape(), other.shape()).ok_or_else(|| mismatch(name, self, other))?;
        let oa = Rc::new(broadcast_offsets(&out_shape, self.shape()));
        let ob = Rc::new(broadcast_offsets(&out_shape, other.shape()));
        let (da, db) = (self.data(), other.data());
        let data: Vec<f64> = oa.iter().zip(ob.iter()).map(|(&i, &j)| f(da[i], db[j])).collect();
        let (a, b) = (self.clone(), other.clone());
        let (na, nb) = (self.numel(), other.numel());
        Ok(Tensor::from_op(
            name,
            data,
            out_shape,
            &[self, other],
            move |g, _| {
                let ga = ra.then(|| match kind {
                    Binary::Add | Binary::Sub => scatter_add(g, &oa, na),
                    Binary::Mul => {
                        let prod: Vec<f64> =
                            g.iter().zip(ob.iter()).map(|(g, &j)| g * b.data()[j]).collect();
                        scatter_add(&prod, &oa, na)
                    }
                });
                let gb = rb.then(|| match kind {
                    Binary::Add => scatter_add(g, &ob, nb),
                    Binary::Sub => {
                        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                        scatter_add(&neg, &ob, nb)
                    }
                    Binary::Mul => {
                        let prod: Vec<f64> =
                            g.iter().zip(oa.iter()).map(|(g, &i)| g * a.data()[i]).collect();
                        scatter_add(&prod, &ob, nb)
                    }
                });
                vec![ga, gb]
            },
        ))
    }

    /// Elementwise sum; equal-rank operands broadcast over size-1 axes.
    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, Binary::Add)
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, Binary::Sub)
    }

    /// Elementwise product; equal-rank operands broadcast over size-1 axes.
    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.binary(other, Binary::Mul)
    }

    pub fn scale(&self, c: f64) -> Tensor {
        let data = self.data().iter().map(|v| v * c).collect();
        Tensor::from_op("scale", data, self.shape().to_vec(), &[self], move |g, _| {
            vec![Some(g.iter().map(|v| v * c).collect())]
        })
    }

    /// Matrix product. Supported forms: `[m,k]·[k,n]`, batched
    /// `[b,m,k]·[b,k,n]`, and `[b,m,k]·[k,n]` with a shared right operand.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        let (sa, sb) = (self.shape(), other.shape());
        let (batch, m, k, n, shared_rhs) = match (sa.len(), sb.len()) {
            (2, 2) if sa[1] == sb[0] => (1, sa[0], sa[1], sb[1], true),
            (3, 3) if sa[0] == sb[0] && sa[2] == sb[1] => (sa[0], sa[1], sa[2], sb[2], false),
            (3, 2) if sa[2] == sb[0] => (1, sa[0] * sa[1], sa[2], sb[1], true),
            _ => return Err(mismatch("matmul", self, other)),
        };
        let mut out_shape = sa.to_vec();
        *out_shape.last_mut().unwrap() = n;
        let mut data = vec![0.0; batch * m * n];
        for bi in 0..batch {
            gemm_nn(
                &self.data()[bi * m * k..(bi + 1) * m * k],
                &other.data()[if shared_rhs { 0 } else { bi * k * n }..][..k * n],
                &mut data[bi * m * n..(bi + 1) * m * n],
                m,
                k,
                n,
            );
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(Tensor::from_op(
            "matmul",
            data,
            out_shape,
            &[self, other],
            move |g, _| {
                let ga = a.requires_grad().then(|| {
                    let mut ga = vec![0.0; batch * m * k];
                    for bi in 0..batch {
                        let boff = if shared_rhs { 0 } else { bi * k * n };
                        gemm_nt(
                            &g[bi * m * n..(bi + 1) * m * n],
                            &b.data()[boff..boff + k * n],
                            &mut ga[bi * m * k..(bi + 1) * m * k],
                            m,
                            n,
                            k,
                        );
                    }
                    ga
                });
                let gb = b.requires_grad().then(|| {
                    let mut gb = vec![0.0; if shared_rhs { k * n } else { batch * k * n }];
                    for bi in 0..batch {
                        let boff = if shared_rhs { 0 } else { bi * k * n };
                        gemm_tn(
                            &a.data()[bi * m * k..(bi + 1) * m * k],
                            &g[bi * m * n..(bi + 1) * m * n],
                            &mut gb[boff..boff + k * n],
                            k,
                            m,
                            n,
                        );
                    }
                    gb
                });
                vec![ga, gb]
            },
        ))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        if numel(shape) != self.numel() || shape.contains(&0) {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                lhs: self.shape().to_vec(),
                rhs: shape.to_vec(),
            });
        }
        Ok(Tensor::from_op(
            "reshape",
            self.data().to_vec(),
            shape.to_vec(),
            &[self],
            |g, _| vec![Some(g.to_vec())],
        ))
    }

    /// Reorders axes: output axis `i` is input axis `axes[i]`.
    pub fn permute(&self, axes: &[usize]) -> Result<Tensor> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        if axes.len() != rank {
            return Err(Error::InvalidAxis {
                axis: axes.len(),
                rank,
            });
        }
        for &ax in axes {
            if ax >= rank || seen[ax] {
                return Err(Error::InvalidAxis { axis: ax, rank });
            }
            seen[ax] = true;
        }
        let in_strides = strides(self.shape());
        let out_shape: Vec<usize> = axes.iter().map(|&a| self.shape()[a]).collect();
        let src: Vec<usize> = axes.iter().map(|&a| in_strides[a]).collect();
        let offsets = gather_offsets(&out_shape, &src);
        let data = offsets.iter().map(|&o| self.data()[o]).collect();
        let n = self.numel();
        Ok(Tensor::from_op("permute", data, out_shape, &[self], move |g, _| {
            let mut out = vec![0.0; n];
            for (&o, &gv) in offsets.iter().zip(g) {
                out[o] = gv;
            }
            vec![Some(out)]
        }))
    }

    /// Swaps the last two axes.
    pub fn transpose_last(&self) -> Result<Tensor> {
        let rank = self.rank();
        if rank < 2 {
            return Err(Error::InvalidAxis { axis: 1, rank });
        }
        let mut axes: Vec<usize> = (0..rank).collect();
        axes.swap(rank - 2, rank - 1);
        self.permute(&axes)
    }

    /// Slice `start..start+len` along `axis`.
    pub fn narrow(&self, axis: usize, start: usize, len: usize) -> Result<Tensor> {
        let rank = self.rank();
        if axis >= rank {
            return Err(Error::InvalidAxis { axis, rank });
        }
        let dim = self.shape()[axis];
        if len == 0 || start + len > dim {
            return Err(Error::Data(format!(
                "narrow {start}..{} out of bounds for axis {axis} of size {dim}",
                start + len
            )));
        }
        let outer: usize = self.shape()[..axis].iter().product();
        let inner: usize = self.shape()[axis + 1..].iter().product();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * dim + start) * inner;
            data.extend_from_slice(&self.data()[base..base + len * inner]);
        }
        let mut shape = self.shape().to_vec();
        shape[axis] = len;
        let n = self.numel();
        Ok(Tensor::from_op("narrow", data, shape, &[self], move |g, _| {
            let mut out = vec![0.0; n];
            for o in 0..outer {
                let base = (o * dim + start) * inner;
                out[base..base + len * inner]
                    .copy_from_slice(&g[o * len * inner..(o + 1) * len * inner]);
            }
            vec![Some(out)]
        }))
    }

    /// Joins tensors along `axis`; all other dims must agree.
    pub fn concat(parts: &[&Tensor], axis: usize) -> Result<Tensor> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Data("concat of zero tensors".into()))?;
        let rank = first.rank();
        if axis >= rank {
            return Err(Error::InvalidAxis { axis, rank });
        }
        for p in &parts[1..] {
            let ok = p.rank() == rank
                && (0..rank).all(|i| i == axis || p.shape()[i] == first.shape()[i]);
            if !ok {
                return Err(mismatch("concat", first, p));
            }
        }
        let outer: usize = first.shape()[..axis].iter().product();
        let inner: usize = first.shape()[axis + 1..].iter().product();
        let dims: Vec<usize> = parts.iter().map(|p| p.shape()[axis]).collect();
        let total: usize = dims.iter().sum();
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for (p, &d) in parts.iter().zip(&dims) {
                data.extend_from_slice(&p.data()[o * d * inner..(o + 1) * d * inner]);
            }
        }
        let mut shape = first.shape().to_vec();
        shape[axis] = total;
        let needs: Vec<bool> = parts.iter().map(|p| p.requires_grad()).collect();
        Ok(Tensor::from_op("concat", data, shape, parts, move |g, _| {
            let mut grads: Vec<Option<Vec<f64>>> = needs
                .iter()
                .zip(&dims)
                .map(|(&need, &d)| need.then(|| Vec::with_capacity(outer * d * inner)))
                .collect();
            let mut pos = 0;
            for _ in 0..outer {
                for (gp, &d) in grads.iter_mut().zip(&dims) {
                    if let Some(gp) = gp {
                        gp.extend_from_slice(&g[pos..pos + d * inner]);
                    }
                    pos += d * inner;
                }
            }
            grads
        }))
    }

    /// Repeats size-1 axes up to `shape`.
    pub fn broadcast_to(&self, shape: &[usize]) -> Result<Tensor> {
        match broadcast_shape(self.shape(), shape) {
            Some(s) if s == shape => {}
            _ => {
                return Err(Error::ShapeMismatch {
                    op: "broadcast_to",
                    lhs: self.shape().to_vec(),
                    rhs: shape.to_vec(),
                })
            }
        }
        let offsets = broadcast_offsets(shape, self.shape());
        let data = offsets.iter().map(|&o| self.data()[o]).collect();
        let n = self.numel();
        Ok(Tensor::from_op(
            "broadcast_to",
            data,
            shape.to_vec(),
            &[self],
            move |g, _| vec![Some(scatter_add(g, &offsets, n))],
        ))
    }

    /// Softmax along `axis`, computed with max subtraction.
    pub fn softmax(&self, axis: usize) -> Result<Tensor> {
        let rank = self.rank();
        if axis >= rank {
            return Err(Error::InvalidAxis { axis, rank });
        }
        let dim = self.shape()[axis];
        let outer: usize = self.shape()[..axis].iter().product();
        let inner: usize = self.shape()[axis + 1..].iter().product();
        let x = self.data();
        let mut y = vec![0.0; x.len()];
        for o in 0..outer {
            for i in 0..inner {
                let at = |j: usize| (o * dim + j) * inner + i;
                let max = (0..dim).map(|j| x[at(j)]).fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for j in 0..dim {
                    let e = (x[at(j)] - max).exp();
                    y[at(j)] = e;
                    sum += e;
                }
                for j in 0..dim {
                    y[at(j)] /= sum;
                }
            }
        }
        Ok(Tensor::from_op(
            "softmax",
            y,
            self.shape().to_vec(),
            &[self],
            move |g, y| {
                let mut gx = vec![0.0; y.len()];
                for o in 0..outer {
                    for i in 0..inner {
                        let at = |j: usize| (o * dim + j) * inner + i;
                        let s: f64 = (0..dim).map(|j| g[at(j)] * y[at(j)]).sum();
                        for j in 0..dim {
                            gx[at(j)] = y[at(j)] * (g[at(j)] - s);
                        }
                    }
                }
                vec![Some(gx)]
            },
        ))
    }

    /// Sum of all elements, shape `[1]`.
    pub fn sum(&self) -> Tensor {
        let s = self.data().iter().sum();
        let n = self.numel();
        Tensor::from_op("sum", vec![s], vec![1], &[self], move |g, _| {
            vec![Some(vec![g[0]; n])]
        })
    }

    pub fn mean(&self) -> Tensor {
        self.sum().scale(1.0 / self.numel() as f64)
    }

    /// Sum along `axis`, keeping it as a size-1 axis.
    pub fn sum_axis(&self, axis: usize) -> Result<Tensor> {
        let rank = self.rank();
        if axis >= rank {
            return Err(Error::InvalidAxis { axis, rank });
        }
        let dim = self.shape()[axis];
        let outer: usize = self.shape()[..axis].iter().product();
        let inner: usize = self.shape()[axis + 1..].iter().product();
        let mut data = vec![0.0; outer * inner];
        for o in 0..outer {
            for j in 0..dim {
                let src = &self.data()[(o * dim + j) * inner..][..inner];
                super::kernels::add_assign(&mut data[o * inner..(o + 1) * inner], src);
            }
        }
        let mut shape = self.shape().to_vec();
        shape[axis] = 1;
        Ok(Tensor::from_op("sum_axis", data, shape, &[self], move |g, _| {
            let mut out = Vec::with_capacity(outer * dim * inner);
            for o in 0..outer {
                for _ in 0..dim {
                    out.extend_from_slice(&g[o * inner..(o + 1) * inner]);
                }
            }
            vec![Some(out)]
        }))
    }

    /// Exponential linear unit with unit scale.
    pub fn elu(&self) -> Tensor {
        let data = self
            .data()
            .iter()
            .map(|&x| if x > 0.0 { x } else { x.exp_m1() })
            .collect();
        Tensor::from_op("elu", data, self.shape().to_vec(), &[self], |g, y| {
            let gx = g
                .iter()
                .zip(y)
                .map(|(&g, &y)| if y > 0.0 { g } else { g * (y + 1.0) })
                .collect();
            vec![Some(gx)]
        })
    }

    /// Multiplies by a fixed keep-mask already scaled by `1/(1-p)`.
    pub fn apply_mask(&self, mask: &[f64]) -> Result<Tensor> {
        if mask.len() != self.numel() {
            return Err(Error::ShapeMismatch {
                op: "dropout",
                lhs: self.shape().to_vec(),
                rhs: vec![mask.len()],
            });
        }
        let mask: Rc<[f64]> = mask.into();
        let data = self.data().iter().zip(mask.iter()).map(|(x, m)| x * m).collect();
        Ok(Tensor::from_op("dropout", data, self.shape().to_vec(), &[self], move |g, _| {
            vec![Some(g.iter().zip(mask.iter()).map(|(g, m)| g * m).collect())]
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn matmul_identity() {
        let x = Tensor::new(vec![3.0, 4.0, 5.0, 6.0], &[2, 2]);
        let y = Tensor::eye(2).matmul(&x).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn matmul_row_times_column() {
        let a = Tensor::new(vec![1.0, 2.0], &[1, 2]);
        let b = Tensor::new(vec![3.0, 4.0], &[2, 1]);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.shape(), &[1, 1]);
        assert_eq!(c.item(), 11.0);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2, 3]);
        let msg = a.matmul(&b).unwrap_err().to_string();
        assert!(msg.contains("[2, 3]"), "{msg}");
    }

    #[test]
    fn add_zeros_is_identity() {
        let x = Tensor::new(vec![1.5, -2.0, 0.25], &[3, 1]);
        let y = x.add(&Tensor::zeros_like(&x)).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn add_broadcasts_size_one_axes() {
        let x = Tensor::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[2, 3]);
        let b = Tensor::new(vec![10.0, 20.0, 30.0], &[1, 3]);
        assert_eq!(x.add(&b).unwrap().data(), &[11.0, 22.0, 33.0, 14.0, 25.0, 36.0]);
        let c = Tensor::new(vec![1.0, 2.0], &[2, 1]);
        assert_eq!(x.mul(&c).unwrap().data(), &[1.0, 2.0, 3.0, 8.0, 10.0, 12.0]);
        assert!(x.add(&Tensor::zeros(&[3])).is_err());
        assert!(x.add(&Tensor::zeros(&[2, 2])).is_err());
    }

    #[test]
    fn broadcast_add_gradient_reduces() {
        let x = Tensor::parameter(vec![0.0; 6], &[2, 3]);
        let b = Tensor::parameter(vec![0.0; 3], &[1, 3]);
        x.add(&b).unwrap().sum().backward().unwrap();
        assert_eq!(b.grad_vec().unwrap(), vec![2.0; 3]);
        assert_eq!(x.grad_vec().unwrap(), vec![1.0; 6]);
    }

    #[test]
    fn softmax_uniform_and_closed_form() {
        let y = Tensor::new(vec![0.0; 3], &[3]).softmax(0).unwrap();
        assert!(close(y.data(), &[1.0 / 3.0; 3], 1e-15));
        let y = Tensor::new(vec![0.0, 3f64.ln()], &[2]).softmax(0).unwrap();
        assert!(close(y.data(), &[0.25, 0.75], 1e-15));
        assert!(Tensor::zeros(&[2]).softmax(1).is_err());
    }

    #[test]
    fn softmax_shift_invariant_and_overflow_safe() {
        let x = Tensor::new(vec![0.1, -2.0, 3.0, 0.7], &[2, 2]);
        let shifted = Tensor::new(x.data().iter().map(|v| v + 1000.0).collect(), &[2, 2]);
        let a = x.softmax(1).unwrap();
        let b = shifted.softmax(1).unwrap();
        assert!(close(a.data(), b.data(), 1e-12));
        assert!(b.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn softmax_sum_has_zero_gradient() {
        let x = Tensor::parameter(vec![0.3, -1.2, 2.2, 0.0], &[4]);
        x.softmax(0).unwrap().sum().backward().unwrap();
        assert!(x.grad_vec().unwrap().iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn permute_roundtrip() {
        let x = Tensor::new((0..24).map(f64::from).collect(), &[2, 3, 4]);
        let p = x.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.shape(), &[4, 2, 3]);
        // element (k, i, j) of p is (i, j, k) of x
        assert_eq!(p.data()[3 * 6 + 1 * 3 + 2], x.data()[1 * 12 + 2 * 4 + 3]);
        let back = p.permute(&[1, 2, 0]).unwrap();
        assert_eq!(back.data(), x.data());
        assert!(x.permute(&[0, 0, 1]).is_err());
    }

    #[test]
    fn narrow_and_concat_invert() {
        let x = Tensor::new((0..12).map(f64::from).collect(), &[2, 3, 2]);
        let a = x.narrow(1, 0, 1).unwrap();
        let b = x.narrow(1, 1, 2).unwrap();
        let y = Tensor::concat(&[&a, &b], 1).unwrap();
        assert_eq!(y.data(), x.data());
        assert!(x.narrow(1, 2, 2).is_err());
    }

    #[test]
    fn broadcast_to_repeats() {
        let c = Tensor::new(vec![1.0, 2.0], &[1, 1, 2]);
        let e = c.broadcast_to(&[3, 1, 2]).unwrap();
        assert_eq!(e.data(), &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(c.broadcast_to(&[3, 2, 3]).is_err());
    }

    #[test]
    fn sum_axis_keeps_dim() {
        let x = Tensor::new((0..6).map(f64::from).collect(), &[2, 3]);
        let s = x.sum_axis(1).unwrap();
        assert_eq!(s.shape(), &[2, 1]);
        assert_eq!(s.data(), &[3.0, 12.0]);
    }

    #[test]
    fn elu_values() {
        let y = Tensor::new(vec![-1.0, 0.0, 2.0], &[3]).elu();
        assert!(close(y.data(), &[(-1f64).exp() - 1.0, 0.0, 2.0], 1e-15));
    }
}
