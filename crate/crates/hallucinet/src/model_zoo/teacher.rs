//! The 3D clip teacher: conv3d blocks (conv → ReLU → avg-pool), global
//! spatiotemporal average pooling, and a linear classifier. The post-pool
//! activation vector is the feature tap regressed by the student.

use crate::error::{Error, Result};
use crate::nn::{
    accumulate, max_pool3d, max_pool3d_backward, relu_backward_inplace, relu_inplace, Conv3d,
    Conv3dCache, Grads, Linear, Params,
};
use crate::rng::rng_from_seed;
use ndarray::{Array1, Array4, ArrayViewD, ArrayViewMutD};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeacherConfig {
    /// Clip length T the teacher expects.
    pub clip_len: usize,
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    /// Conv block widths; the last entry is the feature dim D_t.
    pub channels: Vec<usize>,
    pub kernel: usize,
    pub num_classes: usize,
    pub init_seed: u64,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        TeacherConfig {
            clip_len: 16,
            in_channels: 1,
            height: 32,
            width: 32,
            channels: vec![8, 16, 64],
            kernel: 3,
            num_classes: 8,
            init_seed: 0,
        }
    }
}

impl TeacherConfig {
    pub fn feature_dim(&self) -> usize {
        *self.channels.last().unwrap_or(&0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::Config("teacher needs at least one conv block".into()));
        }
        if self.kernel % 2 == 0 || self.kernel == 0 {
            return Err(Error::Config("teacher kernel must be odd".into()));
        }
        let (mut t, mut h, mut w) = (self.clip_len, self.height, self.width);
        for _ in &self.channels {
            t /= 2;
            h /= 2;
            w /= 2;
            if t == 0 || h == 0 || w == 0 {
                return Err(Error::Config(format!(
                    "teacher input {}x{}x{} too small for {} pooled blocks",
                    self.clip_len,
                    self.height,
                    self.width,
                    self.channels.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TeacherModel {
    pub config: TeacherConfig,
    blocks: Vec<Conv3d>,
    classifier: Linear,
    frozen: bool,
}

pub struct TeacherCache {
    convs: Vec<Conv3dCache>,
    relu_outs: Vec<Array4<f64>>,
    pool_args: Vec<Vec<usize>>,
    global_in_dims: (usize, usize, usize, usize),
    pub features: Array1<f64>,
    pub logits: Array1<f64>,
}

impl TeacherModel {
    pub fn new(config: TeacherConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rng_from_seed(config.init_seed);
        let pad = config.kernel / 2;
        let mut blocks = Vec::new();
        let mut c_in = config.in_channels;
        for &c_out in &config.channels {
            blocks.push(Conv3d::new(c_in, c_out, config.kernel, pad, &mut rng));
            c_in = c_out;
        }
        let classifier = Linear::new(config.feature_dim(), config.num_classes, &mut rng);
        Ok(TeacherModel {
            config,
            blocks,
            classifier,
            frozen: false,
        })
    }

    pub fn frozen(&self) -> bool {
        self.frozen
    }

    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    pub fn feature_dim(&self) -> usize {
        self.config.feature_dim()
    }

    fn check_input(&self, x: &Array4<f64>) -> Result<()> {
        let want = (
            self.config.in_channels,
            self.config.clip_len,
            self.config.height,
            self.config.width,
        );
        if x.dim() != want {
            return Err(Error::Shape(format!(
                "teacher expects clip input {:?}, got {:?}",
                want,
                x.dim()
            )));
        }
        Ok(())
    }

    /// Forward pass on a `[C, T, H, W]` input (see
    /// [`super::clip_to_input`]). Returns (features, logits).
    pub fn forward(&self, x: &Array4<f64>) -> Result<(Array1<f64>, Array1<f64>)> {
        let cache = self.forward_cached(x)?;
        Ok((cache.features, cache.logits))
    }

    /// Forward pass keeping intermediates for backward.
    pub fn forward_cached(&self, x: &Array4<f64>) -> Result<TeacherCache> {
        self.check_input(x)?;
        let mut convs = Vec::with_capacity(self.blocks.len());
        let mut relu_outs = Vec::with_capacity(self.blocks.len());
        let mut pool_args = Vec::with_capacity(self.blocks.len());
        let mut cur = x.clone();
        for block in &self.blocks {
            let (mut y, cache) = block.forward(&cur);
            relu_inplace(y.as_slice_mut().unwrap());
            let (pooled, arg) = max_pool3d(&y, 2);
            cur = pooled;
            convs.push(cache);
            relu_outs.push(y);
            pool_args.push(arg);
        }
        let global_in_dims = cur.dim();
        let n = (global_in_dims.1 * global_in_dims.2 * global_in_dims.3) as f64;
        let features = Array1::from_iter(
            cur.outer_iter().map(|ch| ch.sum() / n),
        );
        let logits = self.classifier.forward(&features);
        Ok(TeacherCache {
            convs,
            relu_outs,
            pool_args,
            global_in_dims,
            features,
            logits,
        })
    }

    /// Backward from gradients on logits and/or features; accumulates into
    /// `grads`.
    pub fn backward(
        &self,
        x_unused: Option<()>,
        cache: &TeacherCache,
        g_logits: Option<&Array1<f64>>,
        g_features: Option<&Array1<f64>>,
        grads: &mut Grads,
    ) {
        let _ = x_unused;
        let feat_dim = self.feature_dim();
        let mut g_feat = Array1::<f64>::zeros(feat_dim);
        if let Some(gl) = g_logits {
            let mut gw = ndarray::Array2::zeros(self.classifier.w.raw_dim());
            let mut gb = Array1::zeros(self.classifier.b.raw_dim());
            g_feat += &self.classifier.backward(&cache.features, gl, &mut gw, &mut gb);
            accumulate(grads, "classifier.w", gw.into_dyn());
            accumulate(grads, "classifier.b", gb.into_dyn());
        }
        if let Some(gf) = g_features {
            g_feat += gf;
        }

        // global average pool backward
        let (c, t, h, w) = cache.global_in_dims;
        let n = (t * h * w) as f64;
        let mut g = Array4::from_shape_fn((c, t, h, w), |(ci, _, _, _)| g_feat[ci] / n);

        for (i, block) in self.blocks.iter().enumerate().rev() {
            let relu_out = &cache.relu_outs[i];
            let mut g_relu = max_pool3d_backward(&g, relu_out.dim(), &cache.pool_args[i]);
            relu_backward_inplace(
                g_relu.as_slice_mut().unwrap(),
                relu_out.as_slice().unwrap(),
            );
            let mut gw = ndarray::Array2::zeros(block.w.raw_dim());
            let mut gb = Array1::zeros(block.b.raw_dim());
            g = block.backward(&cache.convs[i], &g_relu, &mut gw, &mut gb);
            accumulate(grads, &format!("block{i}.w"), gw.into_dyn());
            accumulate(grads, &format!("block{i}.b"), gb.into_dyn());
        }
    }
}

impl Params for TeacherModel {
    fn visit(&self, f: &mut dyn FnMut(&str, ArrayViewD<'_, f64>)) {
        for (i, b) in self.blocks.iter().enumerate() {
            f(&format!("block{i}.w"), b.w.view().into_dyn());
            f(&format!("block{i}.b"), b.b.view().into_dyn());
        }
        f("classifier.w", self.classifier.w.view().into_dyn());
        f("classifier.b", self.classifier.b.view().into_dyn());
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ArrayViewMutD<'_, f64>)) {
        for (i, b) in self.blocks.iter_mut().enumerate() {
            f(&format!("block{i}.w"), b.w.view_mut().into_dyn());
            f(&format!("block{i}.b"), b.b.view_mut().into_dyn());
        }
        f("classifier.w", self.classifier.w.view_mut().into_dyn());
        f("classifier.b", self.classifier.b.view_mut().into_dyn());
    }
}
