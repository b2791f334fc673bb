//! Single-layer LSTM cell with one combined bias vector.
//!
//! Gate order in the stacked weight rows is (input, forget, cell, output).
//! Sequences start from the zero state; only the final hidden state feeds
//! downstream heads, so backward-through-time takes a single terminal
//! hidden-state gradient.

use ndarray::{s, Array1, Array2};
use rand_chacha::ChaCha8Rng;

use super::sigmoid;

#[derive(Debug, Clone)]
pub struct LstmCell {
    /// Input weights, shape [4H, D].
    pub w_ih: Array2<f64>,
    /// Recurrent weights, shape [4H, H].
    pub w_hh: Array2<f64>,
    /// Combined bias, shape [4H].
    pub b: Array1<f64>,
}

struct StepCache {
    x: Array1<f64>,
    h_prev: Array1<f64>,
    c_prev: Array1<f64>,
    i: Array1<f64>,
    f: Array1<f64>,
    g: Array1<f64>,
    o: Array1<f64>,
    tanh_c: Array1<f64>,
}

pub struct LstmSeqCache {
    steps: Vec<StepCache>,
    pub final_h: Array1<f64>,
}

impl LstmCell {
    pub fn new(input_dim: usize, hidden_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let w_ih = super::init_uniform(&[4 * hidden_dim, input_dim], input_dim, rng)
            .into_dimensionality()
            .unwrap();
        let w_hh = super::init_uniform(&[4 * hidden_dim, hidden_dim], hidden_dim, rng)
            .into_dimensionality()
            .unwrap();
        LstmCell {
            w_ih,
            w_hh,
            b: Array1::zeros(4 * hidden_dim),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.w_ih.ncols()
    }

    fn step(
        &self,
        x: &Array1<f64>,
        h_prev: &Array1<f64>,
        c_prev: &Array1<f64>,
    ) -> (Array1<f64>, Array1<f64>, StepCache) {
        let hd = self.hidden_dim();
        let z = self.w_ih.dot(x) + self.w_hh.dot(h_prev) + &self.b;
        let i = z.slice(s![0..hd]).mapv(sigmoid);
        let f = z.slice(s![hd..2 * hd]).mapv(sigmoid);
        let g = z.slice(s![2 * hd..3 * hd]).mapv(f64::tanh);
        let o = z.slice(s![3 * hd..4 * hd]).mapv(sigmoid);
        let c = &f * c_prev + &i * &g;
        let tanh_c = c.mapv(f64::tanh);
        let h = &o * &tanh_c;
        let cache = StepCache {
            x: x.clone(),
            h_prev: h_prev.clone(),
            c_prev: c_prev.clone(),
            i,
            f,
            g,
            o,
            tanh_c,
        };
        (h, c, cache)
    }

    /// Run the cell over a sequence from the zero state, keeping per-step
    /// caches for backward.
    pub fn forward_seq(&self, xs: &[Array1<f64>]) -> LstmSeqCache {
        let hd = self.hidden_dim();
        let mut h = Array1::zeros(hd);
        let mut c = Array1::zeros(hd);
        let mut steps = Vec::with_capacity(xs.len());
        for x in xs {
            let (nh, nc, cache) = self.step(x, &h, &c);
            h = nh;
            c = nc;
            steps.push(cache);
        }
        LstmSeqCache { steps, final_h: h }
    }

    /// Backward through time from a gradient on the final hidden state.
    /// Accumulates weight grads and returns per-step input gradients.
    pub fn backward_seq(
        &self,
        cache: &LstmSeqCache,
        g_final_h: &Array1<f64>,
        gw_ih: &mut Array2<f64>,
        gw_hh: &mut Array2<f64>,
        gb: &mut Array1<f64>,
    ) -> Vec<Array1<f64>> {
        let hd = self.hidden_dim();
        let mut gh = g_final_h.clone();
        let mut gc = Array1::<f64>::zeros(hd);
        let mut gxs = vec![Array1::zeros(self.input_dim()); cache.steps.len()];
        for (t, st) in cache.steps.iter().enumerate().rev() {
            let go = &gh * &st.tanh_c;
            let gc_total = &gc + &(&gh * &st.o * st.tanh_c.mapv(|v| 1.0 - v * v));
            let gf = &gc_total * &st.c_prev;
            let gi = &gc_total * &st.g;
            let gg = &gc_total * &st.i;
            gc = &gc_total * &st.f;

            let gz_i = &gi * &st.i * &st.i.mapv(|v| 1.0 - v);
            let gz_f = &gf * &st.f * &st.f.mapv(|v| 1.0 - v);
            let gz_g = &gg * &st.g.mapv(|v| 1.0 - v * v);
            let gz_o = &go * &st.o * &st.o.mapv(|v| 1.0 - v);
            let mut gz = Array1::zeros(4 * hd);
            gz.slice_mut(s![0..hd]).assign(&gz_i);
            gz.slice_mut(s![hd..2 * hd]).assign(&gz_f);
            gz.slice_mut(s![2 * hd..3 * hd]).assign(&gz_g);
            gz.slice_mut(s![3 * hd..4 * hd]).assign(&gz_o);

            for (r, gzr) in gz.iter().enumerate() {
                gw_ih.row_mut(r).scaled_add(*gzr, &st.x);
                gw_hh.row_mut(r).scaled_add(*gzr, &st.h_prev);
            }
            *gb += &gz;
            gxs[t] = self.w_ih.t().dot(&gz);
            gh = self.w_hh.t().dot(&gz);
        }
        gxs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use ndarray::arr1;

    /// Scalar (H=1, D=1) gate arithmetic done by hand, independent of the
    /// vectorized implementation.
    fn scalar_unroll(wx: [f64; 4], wh: [f64; 4], b: [f64; 4], xs: &[f64]) -> f64 {
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let (mut h, mut c) = (0.0f64, 0.0f64);
        for &x in xs {
            let i = sig(wx[0] * x + wh[0] * h + b[0]);
            let f = sig(wx[1] * x + wh[1] * h + b[1]);
            let g = (wx[2] * x + wh[2] * h + b[2]).tanh();
            let o = sig(wx[3] * x + wh[3] * h + b[3]);
            c = f * c + i * g;
            h = o * c.tanh();
        }
        h
    }

    #[test]
    fn three_step_unroll_matches_hand_gate_arithmetic() {
        let wx = [0.5, -0.3, 0.8, 0.2];
        let wh = [0.1, 0.4, -0.6, 0.7];
        let b = [0.05, -0.1, 0.2, 0.0];
        let mut cell = LstmCell::new(1, 1, &mut rng_from_seed(0));
        for (r, (&x, &h)) in wx.iter().zip(wh.iter()).enumerate() {
            cell.w_ih[[r, 0]] = x;
            cell.w_hh[[r, 0]] = h;
            cell.b[r] = b[r];
        }
        let xs = [0.9, -0.4, 0.3];
        let inputs: Vec<Array1<f64>> = xs.iter().map(|&v| arr1(&[v])).collect();
        let cache = cell.forward_seq(&inputs);
        let expected = scalar_unroll(wx, wh, b, &xs);
        assert!((cache.final_h[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_give_input_independent_state() {
        let mut cell = LstmCell::new(3, 2, &mut rng_from_seed(1));
        cell.w_ih.fill(0.0);
        cell.w_hh.fill(0.0);
        let a = cell.forward_seq(&[arr1(&[1.0, 2.0, 3.0]), arr1(&[-1.0, 0.0, 5.0])]);
        let b = cell.forward_seq(&[arr1(&[0.0, 0.0, 0.0]), arr1(&[9.0, 9.0, 9.0])]);
        for (x, y) in a.final_h.iter().zip(b.final_h.iter()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = rng_from_seed(2);
        let cell = LstmCell::new(2, 3, &mut rng);
        let xs = vec![arr1(&[0.3, -0.9]), arr1(&[1.2, 0.4]), arr1(&[-0.5, 0.8])];
        let coeff = arr1(&[0.7, -1.1, 0.5]);

        let cache = cell.forward_seq(&xs);
        let mut gw_ih = Array2::zeros(cell.w_ih.raw_dim());
        let mut gw_hh = Array2::zeros(cell.w_hh.raw_dim());
        let mut gb = Array1::zeros(12);
        let gxs = cell.backward_seq(&cache, &coeff, &mut gw_ih, &mut gw_hh, &mut gb);

        let loss = |c: &LstmCell, xs: &[Array1<f64>]| c.forward_seq(xs).final_h.dot(&coeff);
        let eps = 1e-6;
        for t in 0..3 {
            for d in 0..2 {
                let mut xp = xs.clone();
                xp[t][d] += eps;
                let mut xm = xs.clone();
                xm[t][d] -= eps;
                let num = (loss(&cell, &xp) - loss(&cell, &xm)) / (2.0 * eps);
                assert!((num - gxs[t][d]).abs() < 1e-7, "gx[{t}][{d}]");
            }
        }
        for idx in [[0, 0], [4, 1], [11, 0]] {
            let mut cp = cell.clone();
            cp.w_ih[idx] += eps;
            let mut cm = cell.clone();
            cm.w_ih[idx] -= eps;
            let num = (loss(&cp, &xs) - loss(&cm, &xs)) / (2.0 * eps);
            assert!((num - gw_ih[idx]).abs() < 1e-7, "gw_ih {idx:?}");
        }
        for idx in [[1, 2], [7, 0], [10, 1]] {
            let mut cp = cell.clone();
            cp.w_hh[idx] += eps;
            let mut cm = cell.clone();
            cm.w_hh[idx] -= eps;
            let num = (loss(&cp, &xs) - loss(&cm, &xs)) / (2.0 * eps);
            assert!((num - gw_hh[idx]).abs() < 1e-7, "gw_hh {idx:?}");
        }
    }
}
