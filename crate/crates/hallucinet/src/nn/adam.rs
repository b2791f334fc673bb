//! Adam optimizer with standard moment defaults (β₁=0.9, β₂=0.999, ε=1e-8).
//!
//! Parameters whose name is absent from the gradient map are skipped
//! entirely (no moment decay), matching the convention that heads unused by
//! a task stay at their initialization.

use super::{Grads, Params};
use ndarray::ArrayD;
use std::collections::BTreeMap;

pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: BTreeMap<String, ArrayD<f64>>,
    v: BTreeMap<String, ArrayD<f64>>,
}

impl Adam {
    pub fn new() -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    /// One update step at learning rate `lr`.
    pub fn step(&mut self, model: &mut dyn Params, grads: &Grads, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let (beta1, beta2, eps) = (self.beta1, self.beta2, self.eps);
        let (m_map, v_map) = (&mut self.m, &mut self.v);
        model.visit_mut(&mut |name, mut p| {
            let Some(g) = grads.get(name) else { return };
            let m = m_map
                .entry(name.to_string())
                .or_insert_with(|| ArrayD::zeros(g.raw_dim()));
            let v = v_map
                .entry(name.to_string())
                .or_insert_with(|| ArrayD::zeros(g.raw_dim()));
            ndarray::Zip::from(&mut p)
                .and(m)
                .and(v)
                .and(g)
                .for_each(|p, m, v, &g| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *p -= lr * m_hat / (v_hat.sqrt() + eps);
                });
        });
    }
}

impl Default for Adam {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{ArrayViewD, ArrayViewMutD};

    struct Scalar(ArrayD<f64>);
    impl Params for Scalar {
        fn visit(&self, f: &mut dyn FnMut(&str, ArrayViewD<'_, f64>)) {
            f("x", self.0.view());
        }
        fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ArrayViewMutD<'_, f64>)) {
            f("x", self.0.view_mut());
        }
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let mut model = Scalar(ArrayD::zeros(ndarray::IxDyn(&[1])));
        let mut adam = Adam::new();
        let mut grads = Grads::new();
        grads.insert("x".into(), ArrayD::from_elem(ndarray::IxDyn(&[1]), 2.0));
        adam.step(&mut model, &grads, 0.1);
        // bias-corrected first step is lr * g/(|g| + eps') ≈ lr
        assert!((model.0[[0]] + 0.1).abs() < 1e-6);
    }

    #[test]
    fn absent_gradient_leaves_parameter_untouched() {
        let mut model = Scalar(ArrayD::from_elem(ndarray::IxDyn(&[1]), 5.0));
        let mut adam = Adam::new();
        adam.step(&mut model, &Grads::new(), 0.1);
        assert_eq!(model.0[[0]], 5.0);
    }
}
