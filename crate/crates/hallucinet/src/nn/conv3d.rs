//! 3D (spatiotemporal) convolution, stride 1, cubic kernel, via im2col.

use ndarray::{Array1, Array2, Array4};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Conv3d {
    /// Kernel, shape [c_out, c_in * k^3] (row-major over (c_in, kt, kh, kw)).
    /// Stored flat to keep gemm reshapes trivial; logical shape is recorded
    /// by `c_in` and `k`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub c_in: usize,
    pub k: usize,
    pub pad: usize,
}

pub struct Conv3dCache {
    cols: Array2<f64>,
    in_dims: (usize, usize, usize, usize),
}

impl Conv3d {
    pub fn new(c_in: usize, c_out: usize, k: usize, pad: usize, rng: &mut ChaCha8Rng) -> Self {
        let fan_in = c_in * k * k * k;
        let w = super::init_relu_uniform(&[c_out, fan_in], fan_in, rng)
            .into_dimensionality()
            .unwrap();
        Conv3d {
            w,
            b: Array1::zeros(c_out),
            c_in,
            k,
            pad,
        }
    }

    pub fn c_out(&self) -> usize {
        self.w.nrows()
    }

    pub fn out_dims(&self, t: usize, h: usize, w: usize) -> (usize, usize, usize) {
        let k = self.k;
        let p = 2 * self.pad;
        (t + p - k + 1, h + p - k + 1, w + p - k + 1)
    }

    /// Input shape [c_in, t, h, w].
    pub fn forward(&self, x: &Array4<f64>) -> (Array4<f64>, Conv3dCache) {
        let (ci, t, h, w) = x.dim();
        assert_eq!(ci, self.c_in, "conv3d input channel mismatch");
        let (to, ho, wo) = self.out_dims(t, h, w);
        let cols = im2col3(x, self.k, self.pad, to, ho, wo);
        let mut y_mat = self.w.dot(&cols);
        for (mut row, b) in y_mat.rows_mut().into_iter().zip(self.b.iter()) {
            row.mapv_inplace(|v| v + b);
        }
        let y = y_mat
            .into_shape_with_order((self.c_out(), to, ho, wo))
            .unwrap();
        (
            y,
            Conv3dCache {
                cols,
                in_dims: (ci, t, h, w),
            },
        )
    }

    pub fn backward(
        &self,
        cache: &Conv3dCache,
        gy: &Array4<f64>,
        gw: &mut Array2<f64>,
        gb: &mut Array1<f64>,
    ) -> Array4<f64> {
        let (ci, t, h, w) = cache.in_dims;
        let (co, to, ho, wo) = gy.dim();
        let gy_mat = gy
            .view()
            .into_shape_with_order((co, to * ho * wo))
            .unwrap();
        *gw += &gy_mat.dot(&cache.cols.t());
        for (i, row) in gy_mat.rows().into_iter().enumerate() {
            gb[i] += row.sum();
        }
        let gcols = self.w.t().dot(&gy_mat);
        col2im3(&gcols, ci, t, h, w, self.k, self.pad, to, ho, wo)
    }
}

fn im2col3(x: &Array4<f64>, k: usize, pad: usize, to: usize, ho: usize, wo: usize) -> Array2<f64> {
    let (ci, t, h, w) = x.dim();
    let xs = x.as_slice().expect("conv3d input contiguous");
    let mut cols = Array2::<f64>::zeros((ci * k * k * k, to * ho * wo));
    let cs = cols.as_slice_mut().unwrap();
    let row_len = to * ho * wo;
    for c in 0..ci {
        for dt in 0..k {
            for di in 0..k {
                for dj in 0..k {
                    let r = ((c * k + dt) * k + di) * k + dj;
                    let base = r * row_len;
                    let ox0 = pad.saturating_sub(dj);
                    let ox1 = (w + pad - dj).min(wo);
                    if ox0 >= ox1 {
                        continue;
                    }
                    let n = ox1 - ox0;
                    let ix0 = ox0 + dj - pad;
                    for ot in 0..to {
                        let it = ot + dt;
                        if it < pad || it - pad >= t {
                            continue;
                        }
                        let it = it - pad;
                        for oy in 0..ho {
                            let iy = oy + di;
                            if iy < pad || iy - pad >= h {
                                continue;
                            }
                            let iy = iy - pad;
                            let src = ((c * t + it) * h + iy) * w + ix0;
                            let dst = base + (ot * ho + oy) * wo + ox0;
                            cs[dst..dst + n].copy_from_slice(&xs[src..src + n]);
                        }
                    }
                }
            }
        }
    }
    cols
}

#[allow(clippy::too_many_arguments)]
fn col2im3(
    gcols: &Array2<f64>,
    ci: usize,
    t: usize,
    h: usize,
    w: usize,
    k: usize,
    pad: usize,
    to: usize,
    ho: usize,
    wo: usize,
) -> Array4<f64> {
    let gs = gcols.as_slice().expect("gcols contiguous");
    let mut gx = Array4::<f64>::zeros((ci, t, h, w));
    let xs = gx.as_slice_mut().unwrap();
    let row_len = to * ho * wo;
    for c in 0..ci {
        for dt in 0..k {
            for di in 0..k {
                for dj in 0..k {
                    let r = ((c * k + dt) * k + di) * k + dj;
                    let base = r * row_len;
                    let ox0 = pad.saturating_sub(dj);
                    let ox1 = (w + pad - dj).min(wo);
                    if ox0 >= ox1 {
                        continue;
                    }
                    let n = ox1 - ox0;
                    let ix0 = ox0 + dj - pad;
                    for ot in 0..to {
                        let it = ot + dt;
                        if it < pad || it - pad >= t {
                            continue;
                        }
                        let it = it - pad;
                        for oy in 0..ho {
                            let iy = oy + di;
                            if iy < pad || iy - pad >= h {
                                continue;
                            }
                            let iy = iy - pad;
                            let dst = ((c * t + it) * h + iy) * w + ix0;
                            let src = base + (ot * ho + oy) * wo + ox0;
                            for q in 0..n {
                                xs[dst + q] += gs[src + q];
                            }
                        }
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
    use ndarray::Array4;

    fn conv_naive(x: &Array4<f64>, conv: &Conv3d) -> Array4<f64> {
        let (ci, t, h, w) = x.dim();
        let k = conv.k;
        let pad = conv.pad;
        let (to, ho, wo) = conv.out_dims(t, h, w);
        let mut y = Array4::zeros((conv.c_out(), to, ho, wo));
        for o in 0..conv.c_out() {
            for ot in 0..to {
                for oy in 0..ho {
                    for ox in 0..wo {
                        let mut acc = conv.b[o];
                        for c in 0..ci {
                            for dt in 0..k {
                                for di in 0..k {
                                    for dj in 0..k {
                                        let (it, iy, ix) = (ot + dt, oy + di, ox + dj);
                                        if it >= pad
                                            && iy >= pad
                                            && ix >= pad
                                            && it - pad < t
                                            && iy - pad < h
                                            && ix - pad < w
                                        {
                                            let col = ((c * k + dt) * k + di) * k + dj;
                                            acc += x[[c, it - pad, iy - pad, ix - pad]]
                                                * conv.w[[o, col]];
                                        }
                                    }
                                }
                            }
                        }
                        y[[o, ot, oy, ox]] = acc;
                    }
                }
            }
        }
        y
    }

    #[test]
    fn forward_matches_naive_convolution() {
        let mut rng = rng_from_seed(5);
        for pad in [0usize, 1] {
            let conv = Conv3d::new(2, 3, 3, pad, &mut rng);
            let x: Array4<f64> = super::super::init_uniform(&[2, 4, 5, 5], 1, &mut rng)
                .into_dimensionality()
                .unwrap();
            let (y, _) = conv.forward(&x);
            let y_ref = conv_naive(&x, &conv);
            for (a, b) in y.iter().zip(y_ref.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = rng_from_seed(6);
        let conv = Conv3d::new(1, 2, 3, 1, &mut rng);
        let x: Array4<f64> = super::super::init_uniform(&[1, 3, 4, 4], 1, &mut rng)
            .into_dimensionality()
            .unwrap();
        let coeff: Array4<f64> = super::super::init_uniform(&[2, 3, 4, 4], 1, &mut rng)
            .into_dimensionality()
            .unwrap();
        let (_, cache) = conv.forward(&x);
        let mut gw = Array2::zeros(conv.w.raw_dim());
        let mut gb = Array1::zeros(2);
        let gx = conv.backward(&cache, &coeff, &mut gw, &mut gb);

        let eps = 1e-6;
        let loss = |c: &Conv3d, x: &Array4<f64>| -> f64 {
            let (y, _) = c.forward(x);
            (&y * &coeff).sum()
        };
        for idx in [[0, 0, 0, 0], [0, 2, 3, 1], [0, 1, 2, 2]] {
            let mut xp = x.clone();
            xp[idx] += eps;
            let mut xm = x.clone();
            xm[idx] -= eps;
            let num = (loss(&conv, &xp) - loss(&conv, &xm)) / (2.0 * eps);
            assert!((num - gx[idx]).abs() < 1e-7);
        }
        for idx in [[0, 0], [1, 13], [1, 26]] {
            let mut cp = conv.clone();
            cp.w[idx] += eps;
            let mut cm = conv.clone();
            cm.w[idx] -= eps;
            let num = (loss(&cp, &x) - loss(&cm, &x)) / (2.0 * eps);
            assert!((num - gw[idx]).abs() < 1e-7);
        }
    }
}
