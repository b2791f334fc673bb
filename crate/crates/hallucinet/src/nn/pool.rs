//! Pooling (window == stride). Inter-block pooling is max (preserves sparse
//! activation magnitude without normalization layers); the models' final
//! global pooling is an average and lives with the model code.
//!
//! Trailing rows/columns that do not fill a window are dropped.

use ndarray::{Array3, Array4};

/// Max pool; returns the pooled map and per-output argmax linear indices
/// into the input (for backward). Ties resolve to the first element in
/// window scan order.
pub fn max_pool2d(x: &Array3<f64>, win: usize) -> (Array3<f64>, Vec<usize>) {
    let (c, h, w) = x.dim();
    let (ho, wo) = (h / win, w / win);
    let mut y = Array3::zeros((c, ho, wo));
    let mut arg = vec![0usize; c * ho * wo];
    for ci in 0..c {
        for oy in 0..ho {
            for ox in 0..wo {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0;
                for dy in 0..win {
                    for dx in 0..win {
                        let (iy, ix) = (oy * win + dy, ox * win + dx);
                        let v = x[[ci, iy, ix]];
                        if v > best {
                            best = v;
                            best_idx = (ci * h + iy) * w + ix;
                        }
                    }
                }
                y[[ci, oy, ox]] = best;
                arg[(ci * ho + oy) * wo + ox] = best_idx;
            }
        }
    }
    (y, arg)
}

pub fn max_pool2d_backward(
    gy: &Array3<f64>,
    in_dims: (usize, usize, usize),
    arg: &[usize],
) -> Array3<f64> {
    let mut gx = Array3::zeros(in_dims);
    let gxs = gx.as_slice_mut().unwrap();
    for (g, &idx) in gy.iter().zip(arg.iter()) {
        gxs[idx] += g;
    }
    gx
}

pub fn max_pool3d(x: &Array4<f64>, win: usize) -> (Array4<f64>, Vec<usize>) {
    let (c, t, h, w) = x.dim();
    let (to, ho, wo) = (t / win, h / win, w / win);
    let mut y = Array4::zeros((c, to, ho, wo));
    let mut arg = vec![0usize; c * to * ho * wo];
    for ci in 0..c {
        for ot in 0..to {
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0;
                    for dt in 0..win {
                        for dy in 0..win {
                            for dx in 0..win {
                                let (it, iy, ix) = (ot * win + dt, oy * win + dy, ox * win + dx);
                                let v = x[[ci, it, iy, ix]];
                                if v > best {
                                    best = v;
                                    best_idx = ((ci * t + it) * h + iy) * w + ix;
                                }
                            }
                        }
                    }
                    y[[ci, ot, oy, ox]] = best;
                    arg[((ci * to + ot) * ho + oy) * wo + ox] = best_idx;
                }
            }
        }
    }
    (y, arg)
}

pub fn max_pool3d_backward(
    gy: &Array4<f64>,
    in_dims: (usize, usize, usize, usize),
    arg: &[usize],
) -> Array4<f64> {
    let mut gx = Array4::zeros(in_dims);
    let gxs = gx.as_slice_mut().unwrap();
    for (g, &idx) in gy.iter().zip(arg.iter()) {
        gxs[idx] += g;
    }
    gx
}
