//! Affine map y = W·x + b.

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Linear {
    /// Weight matrix, shape [out, in].
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let w = super::init_uniform(&[out_dim, in_dim], in_dim, rng)
            .into_dimensionality()
            .unwrap();
        Linear {
            w,
            b: Array1::zeros(out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn forward(&self, x: &Array1<f64>) -> Array1<f64> {
        self.w.dot(x) + &self.b
    }

    /// Returns grad wrt the input; accumulates (gw, gb) into the caller's
    /// buffers.
    pub fn backward(
        &self,
        x: &Array1<f64>,
        gy: &Array1<f64>,
        gw: &mut Array2<f64>,
        gb: &mut Array1<f64>,
    ) -> Array1<f64> {
        // gw += gy ⊗ x
        for (i, gyi) in gy.iter().enumerate() {
            let mut row = gw.row_mut(i);
            row.scaled_add(*gyi, x);
        }
        *gb += gy;
        self.w.t().dot(gy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use ndarray::arr1;

    #[test]
    fn forward_matches_hand_computation() {
        let mut rng = rng_from_seed(0);
        let mut l = Linear::new(2, 2, &mut rng);
        l.w = ndarray::arr2(&[[1.0, 2.0], [3.0, 4.0]]);
        l.b = arr1(&[0.5, -0.5]);
        let y = l.forward(&arr1(&[1.0, -1.0]));
        assert_eq!(y, arr1(&[-0.5, -1.5]));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = rng_from_seed(1);
        let l = Linear::new(3, 2, &mut rng);
        let x = arr1(&[0.3, -0.7, 1.1]);
        let gy = arr1(&[0.9, -0.4]);
        let mut gw = Array2::zeros((2, 3));
        let mut gb = Array1::zeros(2);
        let gx = l.backward(&x, &gy, &mut gw, &mut gb);

        // loss = gy · forward(x); finite differences on x and w
        let eps = 1e-6;
        for i in 0..3 {
            let mut xp = x.clone();
            xp[i] += eps;
            let mut xm = x.clone();
            xm[i] -= eps;
            let num = (l.forward(&xp).dot(&gy) - l.forward(&xm).dot(&gy)) / (2.0 * eps);
            assert!((num - gx[i]).abs() < 1e-8);
        }
        for i in 0..2 {
            for j in 0..3 {
                let mut lp = l.clone();
                lp.w[[i, j]] += eps;
                let mut lm = l.clone();
                lm.w[[i, j]] -= eps;
                let num = (lp.forward(&x).dot(&gy) - lm.forward(&x).dot(&gy)) / (2.0 * eps);
                assert!((num - gw[[i, j]]).abs() < 1e-8);
            }
        }
    }
}
