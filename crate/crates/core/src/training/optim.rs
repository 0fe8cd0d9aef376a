use crate::nn::ParamTensor;

/// Adaptive-moment optimizer with bias correction and optional L2 weight
/// decay added to the gradient.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    pub fn new(params: &[ParamTensor], lr: f64, beta1: f64, beta2: f64, eps: f64, weight_decay: f64) -> Self {
        let zeros = || params.iter().map(|p| vec![0.0; p.data.len()]).collect::<Vec<_>>();
        Self {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut [ParamTensor], grads: &[Vec<f64>]) {
        debug_assert_eq!(params.len(), grads.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            for i in 0..p.data.len() {
                let gi = g[i] + self.weight_decay * p.data[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                p.data[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: f64) -> Vec<ParamTensor> {
        vec![ParamTensor {
            name: "w".into(),
            shape: vec![1],
            data: vec![v],
        }]
    }

    #[test]
    fn first_step_moves_by_lr_against_the_gradient_sign() {
        let mut p = one(1.0);
        let mut opt = Adam::new(&p, 0.01, 0.9, 0.999, 1e-8, 0.0);
        opt.step(&mut p, &[vec![3.0]]);
        assert!((p[0].data[0] - (1.0 - 0.01 * 3.0 / (3.0 + 1e-8))).abs() < 1e-15);
    }

    #[test]
    fn zero_lr_leaves_parameters() {
        let mut p = one(0.5);
        let mut opt = Adam::new(&p, 0.0, 0.9, 0.999, 1e-8, 0.0);
        for _ in 0..5 {
            opt.step(&mut p, &[vec![1.7]]);
        }
        assert_eq!(p[0].data[0], 0.5);
    }

    #[test]
    fn update_is_first_order_in_lr() {
        for lr in [1e-3, 1e-5, 1e-7] {
            let mut p = one(2.0);
            Adam::new(&p, lr, 0.9, 0.999, 1e-8, 0.0).step(&mut p, &[vec![-0.4]]);
            let delta = p[0].data[0] - 2.0;
            assert!((delta / lr - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut p = one(5.0);
        let mut opt = Adam::new(&p, 0.1, 0.9, 0.999, 1e-8, 0.0);
        for _ in 0..2000 {
            let g = 2.0 * (p[0].data[0] - 1.5);
            opt.step(&mut p, &[vec![g]]);
        }
        assert!((p[0].data[0] - 1.5).abs() < 1e-3);
    }
}
