//! 2D convolution (stride 1) via im2col + matrix multiply.

use ndarray::{Array1, Array2, Array3, Array4};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Conv2d {
    /// Kernel, shape [c_out, c_in, k, k].
    pub w: Array4<f64>,
    pub b: Array1<f64>,
    pub pad: usize,
}

/// Forward-pass cache consumed by the backward pass.
pub struct Conv2dCache {
    cols: Array2<f64>,
    in_dims: (usize, usize, usize),
}

impl Conv2d {
    pub fn new(c_in: usize, c_out: usize, k: usize, pad: usize, rng: &mut ChaCha8Rng) -> Self {
        let fan_in = c_in * k * k;
        let w = super::init_relu_uniform(&[c_out, c_in, k, k], fan_in, rng)
            .into_dimensionality()
            .unwrap();
        Conv2d {
            w,
            b: Array1::zeros(c_out),
            pad,
        }
    }

    pub fn kernel(&self) -> usize {
        self.w.shape()[2]
    }

    pub fn out_spatial(&self, h: usize, w: usize) -> (usize, usize) {
        let k = self.kernel();
        (h + 2 * self.pad - k + 1, w + 2 * self.pad - k + 1)
    }

    pub fn forward(&self, x: &Array3<f64>) -> (Array3<f64>, Conv2dCache) {
        let (ci, h, w) = x.dim();
        let co = self.w.shape()[0];
        let k = self.kernel();
        assert_eq!(ci, self.w.shape()[1], "conv2d input channel mismatch");
        let (ho, wo) = self.out_spatial(h, w);
        let cols = im2col(x, k, self.pad, ho, wo);
        let w_mat = self
            .w
            .view()
            .into_shape_with_order((co, ci * k * k))
            .unwrap();
        let mut y_mat = w_mat.dot(&cols);
        for (mut row, b) in y_mat.rows_mut().into_iter().zip(self.b.iter()) {
            row.mapv_inplace(|v| v + b);
        }
        let y = y_mat.into_shape_with_order((co, ho, wo)).unwrap();
        (
            y,
            Conv2dCache {
                cols,
                in_dims: (ci, h, w),
            },
        )
    }

    /// Returns grad wrt input; accumulates kernel/bias grads.
    pub fn backward(
        &self,
        cache: &Conv2dCache,
        gy: &Array3<f64>,
        gw: &mut Array4<f64>,
        gb: &mut Array1<f64>,
    ) -> Array3<f64> {
        let (ci, h, w) = cache.in_dims;
        let (co, ho, wo) = gy.dim();
        let k = self.kernel();
        let gy_mat = gy.view().into_shape_with_order((co, ho * wo)).unwrap();

        let gw_update = gy_mat.dot(&cache.cols.t());
        let mut gw_mat = gw.view_mut().into_shape_with_order((co, ci * k * k)).unwrap();
        gw_mat += &gw_update;
        for (i, row) in gy_mat.rows().into_iter().enumerate() {
            gb[i] += row.sum();
        }

        let w_mat = self
            .w
            .view()
            .into_shape_with_order((co, ci * k * k))
            .unwrap();
        let gcols = w_mat.t().dot(&gy_mat);
        col2im(&gcols, ci, h, w, k, self.pad, ho, wo)
    }
}

fn im2col(x: &Array3<f64>, k: usize, pad: usize, ho: usize, wo: usize) -> Array2<f64> {
    let (ci, h, w) = x.dim();
    let xs = x.as_slice().expect("conv input must be contiguous");
    let mut cols = Array2::<f64>::zeros((ci * k * k, ho * wo));
    let cs = cols.as_slice_mut().unwrap();
    let row_len = ho * wo;
    for c in 0..ci {
        for di in 0..k {
            for dj in 0..k {
                let r = (c * k + di) * k + dj;
                let base = r * row_len;
                // valid output columns for this kernel offset
                let ox0 = pad.saturating_sub(dj);
                let ox1 = (w + pad - dj).min(wo);
                if ox0 >= ox1 {
                    continue;
                }
                for oy in 0..ho {
                    let iy = oy + di;
                    if iy < pad || iy - pad >= h {
                        continue;
                    }
                    let iy = iy - pad;
                    let ix0 = ox0 + dj - pad;
                    let src = (c * h + iy) * w + ix0;
                    let dst = base + oy * wo + ox0;
                    let n = ox1 - ox0;
                    cs[dst..dst + n].copy_from_slice(&xs[src..src + n]);
                }
            }
        }
    }
    cols
}

fn col2im(
    gcols: &Array2<f64>,
    ci: usize,
    h: usize,
    w: usize,
    k: usize,
    pad: usize,
    ho: usize,
    wo: usize,
) -> Array3<f64> {
    let gs = gcols.as_slice().expect("gcols contiguous");
    let mut gx = Array3::<f64>::zeros((ci, h, w));
    let xs = gx.as_slice_mut().unwrap();
    let row_len = ho * wo;
    for c in 0..ci {
        for di in 0..k {
            for dj in 0..k {
                let r = (c * k + di) * k + dj;
                let base = r * row_len;
                let ox0 = pad.saturating_sub(dj);
                let ox1 = (w + pad - dj).min(wo);
                if ox0 >= ox1 {
                    continue;
                }
                for oy in 0..ho {
                    let iy = oy + di;
                    if iy < pad || iy - pad >= h {
                        continue;
                    }
                    let iy = iy - pad;
                    let ix0 = ox0 + dj - pad;
                    let dst = (c * h + iy) * w + ix0;
                    let src = base + oy * wo + ox0;
                    for t in 0..(ox1 - ox0) {
                        xs[dst + t] += gs[src + t];
                    }
                }
            }
        }
    }
    gx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use ndarray::{arr1, Array3};

    /// Direct (quadruple-loop) convolution used as an oracle.
    fn conv_naive(x: &Array3<f64>, w: &Array4<f64>, b: &Array1<f64>, pad: usize) -> Array3<f64> {
        let (ci, h, ww) = x.dim();
        let (co, _, k, _) = w.dim();
        let ho = h + 2 * pad - k + 1;
        let wo = ww + 2 * pad - k + 1;
        let mut y = Array3::zeros((co, ho, wo));
        for o in 0..co {
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut acc = b[o];
                    for c in 0..ci {
                        for di in 0..k {
                            for dj in 0..k {
                                let iy = oy + di;
                                let ix = ox + dj;
                                if iy >= pad && ix >= pad && iy - pad < h && ix - pad < ww {
                                    acc += x[[c, iy - pad, ix - pad]] * w[[o, c, di, dj]];
                                }
                            }
                        }
                    }
                    y[[o, oy, ox]] = acc;
                }
            }
        }
        y
    }

    #[test]
    fn forward_matches_naive_convolution() {
        let mut rng = rng_from_seed(3);
        for pad in [0usize, 1] {
            let conv = Conv2d::new(2, 3, 3, pad, &mut rng);
            let x = super::super::init_uniform(&[2, 5, 6], 1, &mut rng)
                .into_dimensionality()
                .unwrap();
            let (y, _) = conv.forward(&x);
            let y_ref = conv_naive(&x, &conv.w, &conv.b, pad);
            for (a, b) in y.iter().zip(y_ref.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = rng_from_seed(4);
        let mut conv = Conv2d::new(2, 2, 3, 1, &mut rng);
        conv.b = arr1(&[0.1, -0.2]);
        let x: Array3<f64> = super::super::init_uniform(&[2, 4, 4], 1, &mut rng)
            .into_dimensionality()
            .unwrap();
        let (y, cache) = conv.forward(&x);
        // loss = sum of elementwise y * coeff
        let coeff: Array3<f64> = super::super::init_uniform(&[2, 4, 4], 1, &mut rng)
            .into_dimensionality()
            .unwrap();
        let gy = coeff.clone();
        let mut gw = Array4::zeros(conv.w.raw_dim());
        let mut gb = Array1::zeros(2);
        let gx = conv.backward(&cache, &gy, &mut gw, &mut gb);
        let _ = y;

        let eps = 1e-6;
        let loss = |c: &Conv2d, x: &Array3<f64>| -> f64 {
            let (y, _) = c.forward(x);
            (&y * &coeff).sum()
        };
        // input grads
        for idx in [[0, 0, 0], [1, 2, 3], [0, 3, 1]] {
            let mut xp = x.clone();
            xp[idx] += eps;
            let mut xm = x.clone();
            xm[idx] -= eps;
            let num = (loss(&conv, &xp) - loss(&conv, &xm)) / (2.0 * eps);
            assert!((num - gx[idx]).abs() < 1e-7, "gx mismatch at {idx:?}");
        }
        // weight grads
        for idx in [[0, 0, 0, 0], [1, 1, 2, 2], [0, 1, 1, 0]] {
            let mut cp = conv.clone();
            cp.w[idx] += eps;
            let mut cm = conv.clone();
            cm.w[idx] -= eps;
            let num = (loss(&cp, &x) - loss(&cm, &x)) / (2.0 * eps);
            assert!((num - gw[idx]).abs() < 1e-7, "gw mismatch at {idx:?}");
        }
        // bias grads
        for i in 0..2 {
            let mut cp = conv.clone();
            cp.b[i] += eps;
            let mut cm = conv.clone();
            cm.b[i] -= eps;
            let num = (loss(&cp, &x) - loss(&cm, &x)) / (2.0 * eps);
            assert!((num - gb[i]).abs() < 1e-7, "gb mismatch at {i}");
        }
    }
}
