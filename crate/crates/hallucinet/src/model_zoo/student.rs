//! The 2D frame student: conv2d blocks, global average pooling, and four
//! head groups on the embedding — hallucination (affine to the teacher
//! feature dim), action classifier, five attribute classifiers, and a scalar
//! quality regressor.
//!
//! Modes:
//! - `direct`: the action classifier reads the hallucinated vector instead
//!   of the embedding (its input dim becomes D_t).
//! - `multiframe`: the student consumes an ordered frame pair; the two
//!   embeddings computed with shared backbone weights are concatenated in
//!   input order, and every head reads the 2·D_s concatenation.

use crate::error::{Error, Result};
use crate::nn::{
    accumulate, max_pool2d, max_pool2d_backward, relu_backward_inplace, relu_inplace, Conv2d,
    Conv2dCache, Grads, Linear, Params,
};
use crate::rng::rng_from_seed;
use ndarray::{s, Array1, Array3, ArrayViewD, ArrayViewMutD};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudentConfig {
    pub in_channels: usize,
    pub height: usize,
    pub width: usize,
    /// Conv block widths; the last entry is the embedding dim D_s.
    pub channels: Vec<usize>,
    pub kernel: usize,
    /// Teacher feature dim D_t the hallucination head maps to.
    pub teacher_dim: usize,
    pub num_classes: usize,
    pub attribute_arities: Vec<usize>,
    /// Classifier reads hallucinated features instead of the embedding.
    pub direct: bool,
    /// Two-frame variant (ordered concatenation of embeddings).
    pub multiframe: bool,
    /// Frame gap k between the pair members in multiframe mode.
    pub frame_gap: usize,
    pub init_seed: u64,
}

impl Default for StudentConfig {
    fn default() -> Self {
        StudentConfig {
            in_channels: 1,
            height: 32,
            width: 32,
            channels: vec![8, 16, 32, 64],
            kernel: 3,
            teacher_dim: 64,
            num_classes: 8,
            attribute_arities: crate::synthvid::ATTRIBUTE_ARITIES.to_vec(),
            direct: false,
            multiframe: false,
            frame_gap: 3,
            init_seed: 0,
        }
    }
}

impl StudentConfig {
    pub fn embed_dim(&self) -> usize {
        *self.channels.last().unwrap_or(&0)
    }

    /// Input width of the heads: D_s, or 2·D_s in multiframe mode.
    pub fn head_in(&self) -> usize {
        if self.multiframe {
            2 * self.embed_dim()
        } else {
            self.embed_dim()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::Config("student needs at least one conv block".into()));
        }
        if self.kernel % 2 == 0 || self.kernel == 0 {
            return Err(Error::Config("student kernel must be odd".into()));
        }
        if self.attribute_arities.len() != 5 || self.attribute_arities.iter().any(|&a| a < 2) {
            return Err(Error::Config("student needs 5 attribute heads with arity >= 2".into()));
        }
        let (mut h, mut w) = (self.height, self.width);
        for _ in &self.channels {
            h /= 2;
            w /= 2;
            if h == 0 || w == 0 {
                return Err(Error::Config(format!(
                    "student input {}x{} too small for {} pooled blocks",
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
pub struct StudentModel {
    pub config: StudentConfig,
    blocks: Vec<Conv2d>,
    hallucination: Linear,
    classifier: Linear,
    attr_heads: Vec<Linear>,
    quality_head: Linear,
}

/// Per-frame backbone cache.
struct FrameCache {
    convs: Vec<Conv2dCache>,
    relu_outs: Vec<Array3<f64>>,
    pool_args: Vec<Vec<usize>>,
    global_in_dims: (usize, usize, usize),
}

pub struct StudentCache {
    frames: Vec<FrameCache>,
    /// Full head input (concatenated in multiframe mode).
    pub embedding: Array1<f64>,
    pub hallucinated: Array1<f64>,
}

/// Outputs of one student forward pass.
#[derive(Debug, Clone)]
pub struct StudentOutput {
    pub embedding: Array1<f64>,
    pub hallucinated: Array1<f64>,
    pub class_logits: Array1<f64>,
    pub attribute_logits: Vec<Array1<f64>>,
    pub quality: f64,
}

/// Gradients flowing into the heads; `None` means zero. `embedding` injects
/// a gradient directly on the head-input embedding (used when a downstream
/// consumer such as the sequence aggregator reads the embedding).
#[derive(Default)]
pub struct StudentHeadGrads {
    pub class_logits: Option<Array1<f64>>,
    pub attribute_logits: Option<Vec<Array1<f64>>>,
    pub quality: Option<f64>,
    pub hallucinated: Option<Array1<f64>>,
    pub embedding: Option<Array1<f64>>,
}

impl StudentModel {
    pub fn new(config: StudentConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rng_from_seed(config.init_seed);
        let pad = config.kernel / 2;
        let mut blocks = Vec::new();
        let mut c_in = config.in_channels;
        for &c_out in &config.channels {
            blocks.push(Conv2d::new(c_in, c_out, config.kernel, pad, &mut rng));
            c_in = c_out;
        }
        let head_in = config.head_in();
        let hallucination = Linear::new(head_in, config.teacher_dim, &mut rng);
        let cls_in = if config.direct { config.teacher_dim } else { head_in };
        let classifier = Linear::new(cls_in, config.num_classes, &mut rng);
        let attr_heads = config
            .attribute_arities
            .iter()
            .map(|&a| Linear::new(head_in, a, &mut rng))
            .collect();
        let quality_head = Linear::new(head_in, 1, &mut rng);
        Ok(StudentModel {
            config,
            blocks,
            hallucination,
            classifier,
            attr_heads,
            quality_head,
        })
    }

    fn check_frame(&self, x: &Array3<f64>) -> Result<()> {
        let want = (self.config.in_channels, self.config.height, self.config.width);
        if x.dim() != want {
            return Err(Error::Shape(format!(
                "student expects frame input {:?}, got {:?}",
                want,
                x.dim()
            )));
        }
        Ok(())
    }

    fn backbone(&self, x: &Array3<f64>) -> (Array1<f64>, FrameCache) {
        let mut convs = Vec::with_capacity(self.blocks.len());
        let mut relu_outs = Vec::with_capacity(self.blocks.len());
        let mut pool_args = Vec::with_capacity(self.blocks.len());
        let mut cur = x.clone();
        for block in &self.blocks {
            let (mut y, cache) = block.forward(&cur);
            relu_inplace(y.as_slice_mut().unwrap());
            let (pooled, arg) = max_pool2d(&y, 2);
            cur = pooled;
            convs.push(cache);
            relu_outs.push(y);
            pool_args.push(arg);
        }
        let dims = cur.dim();
        let n = (dims.1 * dims.2) as f64;
        let embedding = Array1::from_iter(cur.outer_iter().map(|ch| ch.sum() / n));
        (
            embedding,
            FrameCache {
                convs,
                relu_outs,
                pool_args,
                global_in_dims: dims,
            },
        )
    }

    fn backbone_backward(&self, cache: &FrameCache, g_embed: &Array1<f64>, grads: &mut Grads) {
        let (c, h, w) = cache.global_in_dims;
        let n = (h * w) as f64;
        let mut g = Array3::from_shape_fn((c, h, w), |(ci, _, _)| g_embed[ci] / n);
        for (i, block) in self.blocks.iter().enumerate().rev() {
            let relu_out = &cache.relu_outs[i];
            let mut g_relu = max_pool2d_backward(&g, relu_out.dim(), &cache.pool_args[i]);
            relu_backward_inplace(g_relu.as_slice_mut().unwrap(), relu_out.as_slice().unwrap());
            let mut gw = ndarray::Array4::zeros(block.w.raw_dim());
            let mut gb = Array1::zeros(block.b.raw_dim());
            g = block.backward(&cache.convs[i], &g_relu, &mut gw, &mut gb);
            accumulate(grads, &format!("block{i}.w"), gw.into_dyn());
            accumulate(grads, &format!("block{i}.b"), gb.into_dyn());
        }
    }

    fn heads(&self, embedding: &Array1<f64>) -> (Array1<f64>, Array1<f64>, Vec<Array1<f64>>, f64) {
        let hallucinated = self.hallucination.forward(embedding);
        let class_logits = if self.config.direct {
            self.classifier.forward(&hallucinated)
        } else {
            self.classifier.forward(embedding)
        };
        let attribute_logits = self.attr_heads.iter().map(|h| h.forward(embedding)).collect();
        let quality = self.quality_head.forward(embedding)[0];
        (hallucinated, class_logits, attribute_logits, quality)
    }

    /// Single-frame forward. Errors in multiframe mode (use
    /// [`Self::forward_pair`]).
    pub fn forward(&self, x: &Array3<f64>) -> Result<(StudentOutput, StudentCache)> {
        if self.config.multiframe {
            return Err(Error::InvalidArgument(
                "multiframe student requires forward_pair".into(),
            ));
        }
        self.check_frame(x)?;
        let (embedding, cache) = self.backbone(x);
        let (hallucinated, class_logits, attribute_logits, quality) = self.heads(&embedding);
        Ok((
            StudentOutput {
                embedding: embedding.clone(),
                hallucinated: hallucinated.clone(),
                class_logits,
                attribute_logits,
                quality,
            },
            StudentCache {
                frames: vec![cache],
                embedding,
                hallucinated,
            },
        ))
    }

    /// Ordered two-frame forward: embeddings of (first, second) concatenated
    /// in input order.
    pub fn forward_pair(
        &self,
        first: &Array3<f64>,
        second: &Array3<f64>,
    ) -> Result<(StudentOutput, StudentCache)> {
        if !self.config.multiframe {
            return Err(Error::InvalidArgument(
                "forward_pair requires a multiframe student".into(),
            ));
        }
        self.check_frame(first)?;
        self.check_frame(second)?;
        let (e1, c1) = self.backbone(first);
        let (e2, c2) = self.backbone(second);
        let d = self.config.embed_dim();
        let mut embedding = Array1::zeros(2 * d);
        embedding.slice_mut(s![0..d]).assign(&e1);
        embedding.slice_mut(s![d..2 * d]).assign(&e2);
        let (hallucinated, class_logits, attribute_logits, quality) = self.heads(&embedding);
        Ok((
            StudentOutput {
                embedding: embedding.clone(),
                hallucinated: hallucinated.clone(),
                class_logits,
                attribute_logits,
                quality,
            },
            StudentCache {
                frames: vec![c1, c2],
                embedding,
                hallucinated,
            },
        ))
    }

    /// Backward pass; accumulates parameter gradients into `grads`.
    pub fn backward(&self, cache: &StudentCache, head_grads: &StudentHeadGrads, grads: &mut Grads) {
        let head_in = self.config.head_in();
        let mut g_embed = Array1::<f64>::zeros(head_in);
        if let Some(ge) = &head_grads.embedding {
            g_embed += ge;
        }
        let mut g_hallu = head_grads
            .hallucinated
            .clone()
            .unwrap_or_else(|| Array1::zeros(self.config.teacher_dim));

        if let Some(gl) = &head_grads.class_logits {
            let mut gw = ndarray::Array2::zeros(self.classifier.w.raw_dim());
            let mut gb = Array1::zeros(self.classifier.b.raw_dim());
            let input = if self.config.direct { &cache.hallucinated } else { &cache.embedding };
            let gx = self.classifier.backward(input, gl, &mut gw, &mut gb);
            if self.config.direct {
                g_hallu += &gx;
            } else {
                g_embed += &gx;
            }
            accumulate(grads, "classifier.w", gw.into_dyn());
            accumulate(grads, "classifier.b", gb.into_dyn());
        }
        if let Some(gattrs) = &head_grads.attribute_logits {
            for (g, (head, gi)) in self.attr_heads.iter().zip(gattrs.iter()).enumerate() {
                let mut gw = ndarray::Array2::zeros(head.w.raw_dim());
                let mut gb = Array1::zeros(head.b.raw_dim());
                g_embed += &head.backward(&cache.embedding, gi, &mut gw, &mut gb);
                accumulate(grads, &format!("attr{g}.w"), gw.into_dyn());
                accumulate(grads, &format!("attr{g}.b"), gb.into_dyn());
            }
        }
        if let Some(gq) = head_grads.quality {
            let mut gw = ndarray::Array2::zeros(self.quality_head.w.raw_dim());
            let mut gb = Array1::zeros(1);
            let gy = ndarray::arr1(&[gq]);
            g_embed += &self.quality_head.backward(&cache.embedding, &gy, &mut gw, &mut gb);
            accumulate(grads, "quality.w", gw.into_dyn());
            accumulate(grads, "quality.b", gb.into_dyn());
        }
        // hallucination head last: g_hallu is now complete
        if g_hallu.iter().any(|v| *v != 0.0) {
            let mut gw = ndarray::Array2::zeros(self.hallucination.w.raw_dim());
            let mut gb = Array1::zeros(self.hallucination.b.raw_dim());
            g_embed += &self
                .hallucination
                .backward(&cache.embedding, &g_hallu, &mut gw, &mut gb);
            accumulate(grads, "hallucination.w", gw.into_dyn());
            accumulate(grads, "hallucination.b", gb.into_dyn());
        }

        if self.config.multiframe {
            let d = self.config.embed_dim();
            self.backbone_backward(&cache.frames[0], &g_embed.slice(s![0..d]).to_owned(), grads);
            self.backbone_backward(&cache.frames[1], &g_embed.slice(s![d..2 * d]).to_owned(), grads);
        } else {
            self.backbone_backward(&cache.frames[0], &g_embed, grads);
        }
    }
}

impl Params for StudentModel {
    fn visit(&self, f: &mut dyn FnMut(&str, ArrayViewD<'_, f64>)) {
        for (i, b) in self.blocks.iter().enumerate() {
            f(&format!("block{i}.w"), b.w.view().into_dyn());
            f(&format!("block{i}.b"), b.b.view().into_dyn());
        }
        f("hallucination.w", self.hallucination.w.view().into_dyn());
        f("hallucination.b", self.hallucination.b.view().into_dyn());
        f("classifier.w", self.classifier.w.view().into_dyn());
        f("classifier.b", self.classifier.b.view().into_dyn());
        for (g, h) in self.attr_heads.iter().enumerate() {
            f(&format!("attr{g}.w"), h.w.view().into_dyn());
            f(&format!("attr{g}.b"), h.b.view().into_dyn());
        }
        f("quality.w", self.quality_head.w.view().into_dyn());
        f("quality.b", self.quality_head.b.view().into_dyn());
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, ArrayViewMutD<'_, f64>)) {
        for (i, b) in self.blocks.iter_mut().enumerate() {
            f(&format!("block{i}.w"), b.w.view_mut().into_dyn());
            f(&format!("block{i}.b"), b.b.view_mut().into_dyn());
        }
        f("hallucination.w", self.hallucination.w.view_mut().into_dyn());
        f("hallucination.b", self.hallucination.b.view_mut().into_dyn());
        f("classifier.w", self.classifier.w.view_mut().into_dyn());
        f("classifier.b", self.classifier.b.view_mut().into_dyn());
        for (g, h) in self.attr_heads.iter_mut().enumerate() {
            f(&format!("attr{g}.w"), h.w.view_mut().into_dyn());
            f(&format!("attr{g}.b"), h.b.view_mut().into_dyn());
        }
        f("quality.w", self.quality_head.w.view_mut().into_dyn());
        f("quality.b", self.quality_head.b.view_mut().into_dyn());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses;
    use ndarray::Array3;

    fn tiny_config() -> StudentConfig {
        StudentConfig {
            height: 8,
            width: 8,
            channels: vec![2, 4],
            num_classes: 3,
            teacher_dim: 6,
            init_seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn zero_frame_gives_zero_embedding_and_bias_hallucination() {
        let mut student = StudentModel::new(tiny_config()).unwrap();
        let mut map = student.to_map();
        map.get_mut("hallucination.b").unwrap().fill(0.25);
        student.load_map(&map).unwrap();
        let x = Array3::zeros((1, 8, 8));
        let (out, _) = student.forward(&x).unwrap();
        assert!(out.embedding.iter().all(|v| *v == 0.0));
        assert!(out.hallucinated.iter().all(|v| (*v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn attribute_heads_have_configured_arities() {
        let student = StudentModel::new(tiny_config()).unwrap();
        let x = Array3::from_elem((1, 8, 8), 0.4);
        let (out, _) = student.forward(&x).unwrap();
        let arities: Vec<usize> = out.attribute_logits.iter().map(|l| l.len()).collect();
        assert_eq!(arities, crate::synthvid::ATTRIBUTE_ARITIES.to_vec());
        assert_eq!(out.hallucinated.len(), 6);
    }

    #[test]
    fn multiframe_concatenation_is_order_sensitive() {
        let cfg = StudentConfig { multiframe: true, ..tiny_config() };
        let student = StudentModel::new(cfg).unwrap();
        let a = Array3::from_shape_fn((1, 8, 8), |(_, y, x)| (y + x) as f64 / 14.0);
        let b = Array3::from_shape_fn((1, 8, 8), |(_, y, x)| (y * x) as f64 / 49.0);
        let (ab, _) = student.forward_pair(&a, &b).unwrap();
        let (ba, _) = student.forward_pair(&b, &a).unwrap();
        assert_ne!(ab.embedding, ba.embedding);
        // concat structure: first half of ab equals second half of ba
        let d = 4;
        assert_eq!(ab.embedding.slice(s![0..d]), ba.embedding.slice(s![d..2 * d]));
    }

    #[test]
    fn identical_frames_duplicate_the_single_frame_embedding() {
        let cfg = StudentConfig { multiframe: true, ..tiny_config() };
        let student = StudentModel::new(cfg).unwrap();
        let a = Array3::from_shape_fn((1, 8, 8), |(_, y, x)| (y as f64 - x as f64) / 10.0);
        let (out, _) = student.forward_pair(&a, &a).unwrap();
        let d = 4;
        assert_eq!(out.embedding.slice(s![0..d]), out.embedding.slice(s![d..2 * d]));
    }

    #[test]
    fn backward_matches_finite_differences_through_full_objective() {
        for direct in [false, true] {
            let cfg = StudentConfig { direct, ..tiny_config() };
            let student = StudentModel::new(cfg).unwrap();
            let x = Array3::from_shape_fn((1, 8, 8), |(_, y, z)| {
                ((y * 8 + z) as f64 * 0.61).cos() * 0.5 + 0.5
            });
            let target = Array1::from_shape_fn(6, |i| (i as f64 * 0.3).sin());
            let label = 2usize;
            let lambda = 50.0;

            let objective = |s: &StudentModel| -> f64 {
                let (out, _) = s.forward(&x).unwrap();
                let l_mt = losses::classification_loss(&out.class_logits, label).unwrap();
                let l_h = losses::hallucination_loss(&out.hallucinated, &target).unwrap();
                losses::mtl_loss(l_mt, l_h, lambda).unwrap()
            };

            let (out, cache) = student.forward(&x).unwrap();
            let (_, g_cls) = losses::classification_loss_grad(&out.class_logits, label).unwrap();
            let (_, g_h) = losses::hallucination_loss_grad(&out.hallucinated, &target).unwrap();
            let mut grads = Grads::new();
            student.backward(
                &cache,
                &StudentHeadGrads {
                    class_logits: Some(g_cls),
                    hallucinated: Some(g_h.mapv(|v| v * lambda)),
                    ..Default::default()
                },
                &mut grads,
            );

            let eps = 1e-5;
            for name in ["block0.w", "block1.w", "hallucination.w", "classifier.w"] {
                let base = student.to_map();
                let probe = vec![0usize; base[name].ndim()];
                let mut mp = base.clone();
                mp.get_mut(name).unwrap()[probe.as_slice()] += eps;
                let mut plus = student.clone();
                plus.load_map(&mp).unwrap();
                let mut mm = base.clone();
                mm.get_mut(name).unwrap()[probe.as_slice()] -= eps;
                let mut minus = student.clone();
                minus.load_map(&mm).unwrap();
                let num = (objective(&plus) - objective(&minus)) / (2.0 * eps);
                let ana = grads[name][probe.as_slice()];
                assert!(
                    (num - ana).abs() < 1e-5 * (1.0 + num.abs()),
                    "direct={direct} {name}: numeric {num} vs analytic {ana}"
                );
            }
        }
    }
}
