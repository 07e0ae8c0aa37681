use super::params::Params;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam moment estimates mirroring a parameter layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    step: u64,
    m: Params,
    v: Params,
}

impl Adam {
    pub fn new(params: &Params, lr: f64) -> Self {
        Adam {
            lr,
            step: 0,
            m: Params::zeros_like(params),
            v: Params::zeros_like(params),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params) {
        self.step_masked(params, grads, None);
    }

    /// One bias-corrected Adam update. Tensors with `trainable[i] == false`
    /// keep both their values and their moments.
    pub fn step_masked(&mut self, params: &mut Params, grads: &Params, trainable: Option<&[bool]>) {
        assert!(params.same_shapes(grads) && params.same_shapes(&self.m), "Adam shape mismatch");
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        let lr = self.lr;
        for i in 0..params.len() {
            if trainable.is_some_and(|mask| !mask[i]) {
                continue;
            }
            let g = &grads.0[i];
            let m = &mut self.m.0[i];
            let v = &mut self.v.0[i];
            m.zip_mut_with(g, |m, &g| *m = BETA1 * *m + (1.0 - BETA1) * g);
            v.zip_mut_with(g, |v, &g| *v = BETA2 * *v + (1.0 - BETA2) * g * g);
            let p = &mut params.0[i];
            ndarray::Zip::from(p).and(&*m).and(&*v).for_each(|p, &m, &v| {
                let m_hat = m / c1;
                let v_hat = v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + EPSILON);
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = Params(vec![array![[1.0, -2.0], [0.5, 3.0]]]);
        let before = p.clone();
        let mut opt = Adam::new(&p, 1e-3);
        opt.step(&mut p, &Params::zeros_like(&before));
        assert_eq!(p, before);
        assert_eq!(opt.steps(), 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = Params(vec![Array2::zeros((1, 4))]);
        let g = Params(vec![array![[0.3, -5.0, 1e-3, -0.02]]]);
        let mut opt = Adam::new(&p, 1e-3);
        opt.step(&mut p, &g);
        // m̂ = g, v̂ = g², so the update is lr · g / (|g| + ε).
        for (x, gv) in p.0[0].iter().zip(g.0[0].iter()) {
            let expected = -1e-3 * gv / (gv.abs() + EPSILON);
            assert!((x - expected).abs() < 1e-15);
            assert!((x.abs() - 1e-3).abs() < 1e-7);
        }
    }

    #[test]
    fn frozen_tensors_untouched() {
        let mut p = Params(vec![array![[1.0]], array![[2.0]]]);
        let g = Params(vec![array![[1.0]], array![[1.0]]]);
        let mut opt = Adam::new(&p, 0.1);
        opt.step_masked(&mut p, &g, Some(&[false, true]));
        assert_eq!(p.0[0], array![[1.0]]);
        assert!(p.0[1][[0, 0]] < 2.0);
    }
}
