//! Minimal reverse-mode automatic differentiation over dense `f64` arrays.
//!
//! A [`Tensor`] is an immutable, reference-counted array. Operations on
//! tensors that require gradients record a backward closure together with
//! handles to their parents, forming an acyclic graph rooted at the result.
//! [`Tensor::backward`] walks that graph in reverse topological order and
//! accumulates `d loss / d leaf` into every leaf created with
//! `requires_grad = true`.
//!
//! Tensors are `!Send`: a graph lives on the thread that built it. Learned
//! weights cross thread boundaries as plain data (see `nn::ModelParams`).

mod conv;
pub mod gradcheck;
mod kernels;
mod norm;
mod ops;

use std::cell::{Ref, RefCell};
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use crate::error::{Error, Result};

pub use conv::{avg_pool_time, conv_time, spatial_depthwise};
pub use gradcheck::{finite_diff_check, GradCheckReport};
pub use norm::{batch_norm, layer_norm, BatchNormStats};

/// Gradient rule of a recorded operation.
///
/// Receives the upstream gradient and the operation's own forward output and
/// returns one optional gradient per parent, in parent order. `None` means
/// the parent does not need a gradient.
pub(crate) type BackwardFn = Box<dyn Fn(&[f64], &[f64]) -> Vec<Option<Vec<f64>>>>;

struct GradFn {
    op: &'static str,
    parents: Vec<Tensor>,
    backward: BackwardFn,
}

struct Node {
    shape: Vec<usize>,
    data: Vec<f64>,
    requires_grad: bool,
    grad: RefCell<Option<Vec<f64>>>,
    grad_fn: RefCell<Option<GradFn>>,
}

/// Dense row-major array with an optional gradient buffer.
#[derive(Clone)]
pub struct Tensor(Rc<Node>);

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.0.shape)
            .field("requires_grad", &self.0.requires_grad)
            .field("op", &self.op_name())
            .finish()
    }
}

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    /// Builds a constant tensor. Panics if `data.len()` disagrees with `shape`;
    /// use [`Tensor::try_new`] for untrusted input.
    pub fn new(data: Vec<f64>, shape: &[usize]) -> Self {
        Self::try_new(data, shape).expect("tensor data length must match shape")
    }

    pub fn try_new(data: Vec<f64>, shape: &[usize]) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Data(format!(
                "tensor shape must be a non-empty list of positive sizes, got {shape:?}"
            )));
        }
        if numel(shape) != data.len() {
            return Err(Error::ShapeMismatch {
                op: "new",
                lhs: shape.to_vec(),
                rhs: vec![data.len()],
            });
        }
        Ok(Self::leaf(data, shape.to_vec(), false))
    }

    /// A leaf that collects gradients during [`Tensor::backward`].
    pub fn parameter(data: Vec<f64>, shape: &[usize]) -> Self {
        let t = Self::new(data, shape);
        Self::leaf(t.data().to_vec(), shape.to_vec(), true)
    }

    pub fn scalar(value: f64) -> Self {
        Self::new(vec![value], &[1])
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::new(vec![0.0; numel(shape)], shape)
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::new(vec![1.0; numel(shape)], shape)
    }

    pub fn zeros_like(other: &Tensor) -> Self {
        Self::zeros(other.shape())
    }

    pub fn eye(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::new(data, &[n, n])
    }

    fn leaf(data: Vec<f64>, shape: Vec<usize>, requires_grad: bool) -> Self {
        Tensor(Rc::new(Node {
            shape,
            data,
            requires_grad,
            grad: RefCell::new(None),
            grad_fn: RefCell::new(None),
        }))
    }

    /// Creates the output of an operation. The backward rule is recorded only
    /// when some parent requires a gradient.
    pub(crate) fn from_op(
        op: &'static str,
        data: Vec<f64>,
        shape: Vec<usize>,
        parents: &[&Tensor],
        backward: impl Fn(&[f64], &[f64]) -> Vec<Option<Vec<f64>>> + 'static,
    ) -> Self {
        debug_assert_eq!(numel(&shape), data.len(), "{op}: output length");
        let requires_grad = parents.iter().any(|p| p.requires_grad());
        let grad_fn = requires_grad.then(|| GradFn {
            op,
            parents: parents.iter().map(|&p| p.clone()).collect(),
            backward: Box::new(backward),
        });
        Tensor(Rc::new(Node {
            shape,
            data,
            requires_grad,
            grad: RefCell::new(None),
            grad_fn: RefCell::new(grad_fn),
        }))
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn rank(&self) -> usize {
        self.0.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.0.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.0.data
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.data.clone()
    }

    /// Value of a one-element tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape());
        self.0.data[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.0.grad_fn.borrow().is_none()
    }

    /// Name of the operation that produced this tensor, if recorded.
    pub fn op_name(&self) -> Option<&'static str> {
        self.0.grad_fn.borrow().as_ref().map(|g| g.op)
    }

    pub fn grad(&self) -> Option<Ref<'_, Vec<f64>>> {
        let g = self.0.grad.borrow();
        if g.is_some() {
            Some(Ref::map(g, |g| g.as_ref().unwrap()))
        } else {
            None
        }
    }

    pub fn grad_vec(&self) -> Option<Vec<f64>> {
        self.0.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.0.grad.borrow_mut() = None;
    }

    /// Same values, no graph history, no gradient tracking.
    pub fn detach(&self) -> Tensor {
        Self::leaf(self.0.data.clone(), self.0.shape.clone(), false)
    }

    /// Drops the recorded backward graph below this tensor.
    pub fn clear_graph(&self) {
        let mut stack = vec![self.clone()];
        while let Some(t) = stack.pop() {
            if let Some(g) = t.0.grad_fn.borrow_mut().take() {
                stack.extend(g.parents);
            }
        }
    }

    fn key(&self) -> *const Node {
        Rc::as_ptr(&self.0)
    }

    /// Post-order DFS; parents precede children in the returned list.
    fn topo_order(&self) -> Vec<Tensor> {
        let mut order = Vec::new();
        let mut visited = HashSet::new();
        let mut stack: Vec<(Tensor, bool)> = vec![(self.clone(), false)];
        while let Some((t, expanded)) = stack.pop() {
            if expanded {
                order.push(t);
                continue;
            }
            if !visited.insert(t.key()) {
                continue;
            }
            stack.push((t.clone(), true));
            if let Some(g) = t.0.grad_fn.borrow().as_ref() {
                for p in g.parents.iter().rev() {
                    if p.requires_grad() && !visited.contains(&p.key()) {
                        stack.push((p.clone(), false));
                    }
                }
            }
        }
        order
    }

    /// Back-propagates from a scalar, accumulating into leaf gradients.
    ///
    /// Interior gradients are transient; only leaves keep theirs, and they
    /// accumulate across calls until [`Tensor::zero_grad`].
    pub fn backward(&self) -> Result<()> {
        if self.numel() != 1 {
            return Err(Error::NonScalarLoss(self.shape().to_vec()));
        }
        if !self.requires_grad() {
            return Ok(());
        }
        let order = self.topo_order();
        let mut pending: HashMap<*const Node, Vec<f64>> = HashMap::new();
        pending.insert(self.key(), vec![1.0]);

        for t in order.iter().rev() {
            let Some(g) = pending.remove(&t.key()) else {
                continue;
            };
            let grad_fn = t.0.grad_fn.borrow();
            match grad_fn.as_ref() {
                None => {
                    if t.requires_grad() {
                        let mut slot = t.0.grad.borrow_mut();
                        match slot.as_mut() {
                            Some(acc) => kernels::add_assign(acc, &g),
                            None => *slot = Some(g),
                        }
                    }
                }
                Some(f) => {
                    let parent_grads = (f.backward)(&g, t.data());
                    debug_assert_eq!(parent_grads.len(), f.parents.len(), "{}", f.op);
                    for (p, pg) in f.parents.iter().zip(parent_grads) {
                        let Some(pg) = pg else { continue };
                        if !p.requires_grad() {
                            continue;
                        }
                        debug_assert_eq!(pg.len(), p.numel(), "{} parent grad", f.op);
                        match pending.get_mut(&p.key()) {
                            Some(acc) => kernels::add_assign(acc, &pg),
                            None => {
                                pending.insert(p.key(), pg);
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Row-major strides for `shape`.
pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks_length() {
        assert!(Tensor::try_new(vec![1.0, 2.0], &[3]).is_err());
        assert!(Tensor::try_new(vec![], &[0]).is_err());
        assert_eq!(Tensor::new(vec![1.0; 6], &[2, 3]).numel(), 6);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let x = Tensor::parameter(vec![1.0, 2.0], &[2]);
        let y = x.mul(&x).unwrap();
        assert!(matches!(y.backward(), Err(Error::NonScalarLoss(_))));
    }

    #[test]
    fn square_sum_gradient() {
        let x = Tensor::parameter(vec![1.0, -2.0, 3.0], &[3]);
        let loss = x.mul(&x).unwrap().sum();
        loss.backward().unwrap();
        assert_eq!(x.grad_vec().unwrap(), vec![2.0, -4.0, 6.0]);
    }

    #[test]
    fn sum_gradient_is_ones() {
        let x = Tensor::parameter(vec![0.3, -7.0, 1e5, 2.0], &[2, 2]);
        x.sum().backward().unwrap();
        assert_eq!(x.grad_vec().unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn repeated_backward_doubles_leaf_grads() {
        let x = Tensor::parameter(vec![0.5, -1.5, 2.5, 0.1, 0.7, -0.2], &[2, 3]);
        let w = Tensor::parameter(vec![0.2, -0.4, 0.9, 1.1, -0.3, 0.6], &[3, 2]);
        let loss = x.matmul(&w).unwrap().softmax(1).unwrap();
        let loss = loss.mul(&loss).unwrap().sum();
        loss.backward().unwrap();
        let gx1 = x.grad_vec().unwrap();
        let gw1 = w.grad_vec().unwrap();
        loss.backward().unwrap();
        let gx2 = x.grad_vec().unwrap();
        let gw2 = w.grad_vec().unwrap();
        for (a, b) in gx1.iter().zip(&gx2) {
            assert_eq!(2.0 * a, *b);
        }
        for (a, b) in gw1.iter().zip(&gw2) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn shared_subexpression_accumulates() {
        // loss = sum(x*x + x) -> grad 2x + 1
        let x = Tensor::parameter(vec![1.0, 2.0], &[2]);
        let loss = x.mul(&x).unwrap().add(&x).unwrap().sum();
        loss.backward().unwrap();
        assert_eq!(x.grad_vec().unwrap(), vec![3.0, 5.0]);
    }

    #[test]
    fn constants_record_no_graph() {
        let a = Tensor::ones(&[2]);
        let b = a.add(&a).unwrap();
        assert!(!b.requires_grad());
        assert!(b.is_leaf());
    }

    #[test]
    fn clear_graph_detaches_history() {
        let x = Tensor::parameter(vec![1.0], &[1]);
        let y = x.mul(&x).unwrap();
        assert_eq!(y.op_name(), Some("mul"));
        y.clear_graph();
        assert!(y.is_leaf());
    }
}
