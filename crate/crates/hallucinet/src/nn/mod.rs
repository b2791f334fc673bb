//! Minimal dense/conv/recurrent layers with hand-written backward passes.
//!
//! Everything is `f64`, single-threaded, and deterministic: forward passes
//! cache what backward needs, gradients accumulate into a [`Grads`] map keyed
//! by hierarchical parameter names, and [`Adam`] applies updates in sorted
//! name order.

mod adam;
mod conv2d;
mod conv3d;
mod linear;
mod lstm;
mod pool;

pub use adam::Adam;
pub use conv2d::{Conv2d, Conv2dCache};
pub use conv3d::{Conv3d, Conv3dCache};
pub use linear::Linear;
pub use lstm::{LstmCell, LstmSeqCache};
pub use pool::{max_pool2d, max_pool2d_backward, max_pool3d, max_pool3d_backward};

use ndarray::{ArrayD, ArrayViewD, ArrayViewMutD};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Named gradient accumulator. BTreeMap keeps iteration order canonical.
pub type Grads = BTreeMap<String, ArrayD<f64>>;

/// Add `g` into `grads[name]`, allocating on first sight.
pub fn accumulate(grads: &mut Grads, name: &str, g: ArrayD<f64>) {
    match grads.get_mut(name) {
        Some(acc) => *acc += &g,
        None => {
            grads.insert(name.to_string(), g);
        }
    }
}

/// Scale every accumulated gradient (used for batch-mean reduction).
pub fn scale_grads(grads: &mut Grads, factor: f64) {
    for g in grads.values_mut() {
        g.mapv_inplace(|x| x * factor);
    }
}

/// Anything holding named trainable parameters.
pub trait Params {
    fn visit(&self, f: &mut dyn FnMut(&str, ArrayViewD<'_, f64>));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ArrayViewMutD<'_, f64>));

    /// Total number of scalar trainable parameters.
    fn num_params(&self) -> u64 {
        let mut n = 0u64;
        self.visit(&mut |_, v| n += v.len() as u64);
        n
    }

    /// SHA-256 over (name, shape, little-endian f64 data) in visit order.
    fn checksum(&self) -> String {
        let mut h = crate::hashing::Hasher::new();
        self.visit(&mut |name, v| {
            h.update(name.as_bytes());
            h.update(&[0u8]);
            for d in v.shape() {
                h.update(&(*d as u32).to_le_bytes());
            }
            h.update_f64s(v.iter());
        });
        h.finish_hex()
    }

    /// Snapshot of all parameters, keyed by name.
    fn to_map(&self) -> BTreeMap<String, ArrayD<f64>> {
        let mut out = BTreeMap::new();
        self.visit(&mut |name, v| {
            out.insert(name.to_string(), v.to_owned());
        });
        out
    }

    /// Load parameters from a name→tensor map. Every visited parameter must
    /// be present with a matching shape.
    fn load_map(&mut self, map: &BTreeMap<String, ArrayD<f64>>) -> crate::Result<()> {
        let mut err = None;
        self.visit_mut(&mut |name, mut v| {
            if err.is_some() {
                return;
            }
            match map.get(name) {
                Some(src) if src.shape() == v.shape() => v.assign(src),
                Some(src) => {
                    err = Some(crate::Error::Shape(format!(
                        "parameter {name}: expected {:?}, got {:?}",
                        v.shape(),
                        src.shape()
                    )))
                }
                None => err = Some(crate::Error::Format(format!("missing parameter {name}"))),
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Fan-in-scaled uniform weight init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// elements drawn in row-major order. Used for affine heads and recurrent
/// cells. Biases are initialized to zero.
pub fn init_uniform(shape: &[usize], fan_in: usize, rng: &mut ChaCha8Rng) -> ArrayD<f64> {
    init_scaled_uniform(shape, 1.0 / (fan_in as f64).sqrt(), rng)
}

/// ReLU-gain fan-in-scaled uniform init: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
/// Used for the conv stacks so activation magnitude survives depth without
/// normalization layers.
pub fn init_relu_uniform(shape: &[usize], fan_in: usize, rng: &mut ChaCha8Rng) -> ArrayD<f64> {
    init_scaled_uniform(shape, (6.0 / fan_in as f64).sqrt(), rng)
}

fn init_scaled_uniform(shape: &[usize], bound: f64, rng: &mut ChaCha8Rng) -> ArrayD<f64> {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
    ArrayD::from_shape_vec(ndarray::IxDyn(shape), data).expect("shape/product mismatch")
}

/// Elementwise ReLU.
pub fn relu_inplace(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// ReLU backward: zero the gradient where the forward output was zero.
pub fn relu_backward_inplace(grad: &mut [f64], out: &[f64]) {
    debug_assert_eq!(grad.len(), out.len());
    for (g, y) in grad.iter_mut().zip(out) {
        if *y <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Elementwise logistic function.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
