//! Motion programs, per-clip parameter sampling, and label derivation.
//!
//! All randomness for a clip is drawn in a fixed order that does not depend
//! on the class, so two classes generated from the same seed share every
//! class-independent choice. This is what makes ambiguous pairs pixel-
//! identical in frame 0 when the causal cue is uninformative.

use super::{GeneratorConfig, MotionRanges, SpriteShape};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Canonical class list. Ambiguous pairs are adjacent; a config's K enables
/// the first K entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionClass {
    TranslateEast,
    TranslateWest,
    RotateCw,
    RotateCcw,
    Grow,
    Shrink,
    Static,
    TranslateNorth,
}

impl MotionClass {
    pub const COUNT: usize = 8;

    pub fn all() -> [MotionClass; 8] {
        use MotionClass::*;
        [
            TranslateEast,
            TranslateWest,
            RotateCw,
            RotateCcw,
            Grow,
            Shrink,
            Static,
            TranslateNorth,
        ]
    }

    pub fn from_id(id: usize) -> Option<MotionClass> {
        MotionClass::all().get(id).copied()
    }

    pub fn id(self) -> usize {
        MotionClass::all().iter().position(|c| *c == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            MotionClass::TranslateEast => "translate-east",
            MotionClass::TranslateWest => "translate-west",
            MotionClass::RotateCw => "rotate-cw",
            MotionClass::RotateCcw => "rotate-ccw",
            MotionClass::Grow => "grow",
            MotionClass::Shrink => "shrink",
            MotionClass::Static => "static",
            MotionClass::TranslateNorth => "translate-north",
        }
    }

    pub fn from_name(name: &str) -> Option<MotionClass> {
        MotionClass::all().into_iter().find(|c| c.name() == name)
    }

    /// The other member of this class's ambiguous pair, if any.
    pub fn ambiguous_partner(self) -> Option<MotionClass> {
        use MotionClass::*;
        match self {
            TranslateEast => Some(TranslateWest),
            TranslateWest => Some(TranslateEast),
            RotateCw => Some(RotateCcw),
            RotateCcw => Some(RotateCw),
            Grow => Some(Shrink),
            Shrink => Some(Grow),
            Static | TranslateNorth => None,
        }
    }

    /// +1 for the "positive" pair member (east / cw / grow), -1 for its
    /// partner, 0 for unpaired classes. Drives the cue-dot side.
    pub fn pair_polarity(self) -> i8 {
        use MotionClass::*;
        match self {
            TranslateEast | RotateCw | Grow => 1,
            TranslateWest | RotateCcw | Shrink => -1,
            Static | TranslateNorth => 0,
        }
    }

    /// Unit translation direction on the canvas (x right, y down).
    fn direction(self) -> (f64, f64) {
        use MotionClass::*;
        match self {
            TranslateEast => (1.0, 0.0),
            TranslateWest => (-1.0, 0.0),
            TranslateNorth => (0.0, -1.0),
            _ => (0.0, 0.0),
        }
    }

    fn is_translate(self) -> bool {
        !matches!(self.direction(), (0.0, 0.0))
    }

    fn is_rotate(self) -> bool {
        matches!(self, MotionClass::RotateCw | MotionClass::RotateCcw)
    }

    fn is_scale(self) -> bool {
        matches!(self, MotionClass::Grow | MotionClass::Shrink)
    }
}

/// Per-attribute arities: shape, start pose, rotation direction,
/// rotation-count bucket, translation-count bucket.
pub const ATTRIBUTE_ARITIES: [usize; 5] = [3, 2, 3, 3, 3];

/// Everything the renderer needs for one clip; labels derive from this.
#[derive(Debug, Clone)]
pub struct MotionParams {
    pub class: MotionClass,
    pub shape: SpriteShape,
    /// 0 = upright start, 1 = tilted start (the armstand analog).
    pub start_pose: u8,
    pub radius: f64,
    /// Sprite-center start position (canvas px).
    pub start: (f64, f64),
    /// Initial orientation, degrees (positive = clockwise on screen).
    pub theta0_deg: f64,
    /// Per-leg translation displacement (px); 0 for non-translate classes.
    pub displacement: f64,
    /// Translation legs: 1 = one-way, 2 = out-and-back; 0 = none.
    pub legs: u8,
    /// Signed total rotation over the clip, degrees (+ = cw on screen).
    pub rotation_deg: f64,
    /// Signed relative radius change over the clip.
    pub scale_rate: f64,
    /// Jitter amplitude (px) actually applied.
    pub jitter_amp: f64,
    /// Per-frame jitter offsets (px), already projected/scaled.
    pub jitter: Vec<(f64, f64)>,
    /// Cue-dot side: -1 west, +1 east of the sprite, 0 = no cue dot.
    pub cue_side: i8,
}

fn lerp(range: (f64, f64), u: f64) -> f64 {
    range.0 + (range.1 - range.0) * u
}

/// Extent factor accounting for square/triangle corners poking past the
/// nominal radius.
const CORNER_FACTOR: f64 = 1.45;

/// Cue-dot geometry relative to the start radius.
pub(super) fn cue_offset(radius0: f64) -> f64 {
    radius0 * 1.05 + 1.6
}
pub(super) const CUE_RADIUS: f64 = 1.1;

/// Minimal distance from the canvas border at which a sprite may start so
/// that its whole motion (and cue dot) stays on canvas. Identical for both
/// members of an ambiguous pair.
pub(super) fn start_margin(class: MotionClass, m: &MotionRanges) -> f64 {
    let r_hi = m.radius.1;
    let sprite_extent = r_hi * CORNER_FACTOR;
    let cue_extent = if class.ambiguous_partner().is_some() {
        cue_offset(r_hi) + CUE_RADIUS + 0.5
    } else {
        0.0
    };
    let scale_extent = if class.is_scale() {
        sprite_extent * (1.0 + m.scale_rate.1)
    } else {
        sprite_extent
    };
    let translate_extent = if class.is_translate() { m.displacement.1 } else { 0.0 };
    scale_extent.max(cue_extent) + translate_extent + m.jitter_max + 1.0
}

/// Draw all motion parameters for `class` from the two RNG streams.
///
/// The params stream is consumed in a fixed order and count for every class;
/// the cue stream is consumed last (informative coin, then side coin).
pub fn draw_motion_params(
    class: MotionClass,
    params_rng: &mut ChaCha8Rng,
    cue_rng: &mut ChaCha8Rng,
    config: &GeneratorConfig,
) -> MotionParams {
    let m = &config.motion;
    let shape = config.sprites[params_rng.gen_range(0..config.sprites.len())];
    let start_pose = params_rng.gen_range(0..2u8);
    let radius = lerp(m.radius, params_rng.gen::<f64>());
    let u_x = params_rng.gen::<f64>();
    let u_y = params_rng.gen::<f64>();
    let u_theta = params_rng.gen::<f64>();
    let u_disp = params_rng.gen::<f64>();
    let legs_drawn = params_rng.gen_range(1..=2u8);
    let rot_bucket = params_rng.gen_range(1..=2u8);
    let u_rot = params_rng.gen::<f64>();
    let u_scale = params_rng.gen::<f64>();
    let u_jit = params_rng.gen::<f64>();
    let raw_jitter: Vec<(f64, f64)> = (0..config.frames)
        .map(|_| (params_rng.gen::<f64>(), params_rng.gen::<f64>()))
        .collect();

    let margin = start_margin(class, m);
    let start = (
        lerp((margin, config.width as f64 - 1.0 - margin), u_x),
        lerp((margin, config.height as f64 - 1.0 - margin), u_y),
    );
    // Start pose: upright ~0 deg, tilted ~40 deg, each with a small wobble.
    let theta0_deg = if start_pose == 0 { 0.0 } else { 40.0 } + (u_theta * 10.0 - 5.0);

    let displacement = if class.is_translate() { lerp(m.displacement, u_disp) } else { 0.0 };
    let legs = if class.is_translate() { legs_drawn } else { 0 };
    let rotation_deg = if class.is_rotate() {
        let range = if rot_bucket == 1 { m.rotation_half_deg } else { m.rotation_full_deg };
        lerp(range, u_rot) * f64::from(class.pair_polarity())
    } else {
        0.0
    };
    let scale_rate = if class.is_scale() {
        lerp(m.scale_rate, u_scale) * f64::from(class.pair_polarity())
    } else {
        0.0
    };
    let jitter_amp = if class == MotionClass::Static { 0.0 } else { u_jit * m.jitter_max };

    // Translate classes jitter only perpendicular to the motion axis so the
    // along-track coordinate stays strictly monotone. The perpendicular is
    // axis-canonical (not direction-signed) so both members of an ambiguous
    // pair apply identical offsets.
    let dir = class.direction();
    let jitter: Vec<(f64, f64)> = raw_jitter
        .iter()
        .map(|&(u1, u2)| {
            let a = jitter_amp * (2.0 * u1 - 1.0);
            let b = jitter_amp * (2.0 * u2 - 1.0);
            if class.is_translate() {
                (dir.1.abs() * a, dir.0.abs() * a)
            } else {
                (a, b)
            }
        })
        .collect();

    let informative = cue_rng.gen::<f64>() < config.cue_strength;
    let coin: i8 = if cue_rng.gen_range(0..2u8) == 0 { -1 } else { 1 };
    let cue_side = if class.ambiguous_partner().is_some() {
        if informative {
            class.pair_polarity()
        } else {
            coin
        }
    } else {
        0
    };

    MotionParams {
        class,
        shape,
        start_pose,
        radius,
        start,
        theta0_deg,
        displacement,
        legs,
        rotation_deg,
        scale_rate,
        jitter_amp,
        jitter,
        cue_side,
    }
}

/// Rotation-count bucket thresholds (degrees of total rotation).
const ROTATION_BUCKET_SPLIT: f64 = 260.0;

/// Attribute labels as deterministic functions of the motion parameters:
/// (shape, start pose, rotation direction, rotation-count bucket,
/// translation-count bucket).
pub fn attributes_for(p: &MotionParams) -> [u8; 5] {
    let rot_dir = if p.rotation_deg == 0.0 {
        0
    } else if p.rotation_deg > 0.0 {
        1 // clockwise
    } else {
        2
    };
    let rot_bucket = if p.rotation_deg == 0.0 {
        0
    } else if p.rotation_deg.abs() <= ROTATION_BUCKET_SPLIT {
        1
    } else {
        2
    };
    [p.shape.label(), p.start_pose, rot_dir, rot_bucket, p.legs]
}

/// Quality = 0.5 · extent + 0.5 · smoothness, both normalized to [0, 1].
///
/// Extent is the class family's primary motion magnitude over its maximum
/// (path length for translation, total angle for rotation, |rate| for
/// scaling; 0 for static). Smoothness is 1 - jitter_amp / jitter_max.
pub fn quality_for(p: &MotionParams, m: &MotionRanges) -> f64 {
    let extent = if p.class.is_translate() {
        (p.displacement * f64::from(p.legs)) / (m.displacement.1 * 2.0)
    } else if p.class.is_rotate() {
        p.rotation_deg.abs() / m.rotation_full_deg.1
    } else if p.class.is_scale() {
        p.scale_rate.abs() / m.scale_rate.1
    } else {
        0.0
    };
    let smoothness = if m.jitter_max > 0.0 { 1.0 - p.jitter_amp / m.jitter_max } else { 1.0 };
    (0.5 * extent + 0.5 * smoothness).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_seed, rng_from_seed};

    fn params(class: MotionClass, seed: u64, cfg: &GeneratorConfig) -> MotionParams {
        let mut pr = rng_from_seed(derive_seed(seed, 0));
        let mut cr = rng_from_seed(derive_seed(seed, 1));
        draw_motion_params(class, &mut pr, &mut cr, cfg)
    }

    #[test]
    fn paired_classes_share_class_independent_draws() {
        let cfg = GeneratorConfig::default();
        for seed in 0..20 {
            let a = params(MotionClass::RotateCw, seed, &cfg);
            let b = params(MotionClass::RotateCcw, seed, &cfg);
            assert_eq!(a.shape, b.shape);
            assert_eq!(a.start, b.start);
            assert_eq!(a.theta0_deg, b.theta0_deg);
            assert_eq!(a.rotation_deg, -b.rotation_deg);
        }
    }

    #[test]
    fn cue_always_informative_at_full_strength() {
        let cfg = GeneratorConfig { cue_strength: 1.0, ..Default::default() };
        for seed in 0..32 {
            let p = params(MotionClass::Grow, seed, &cfg);
            assert_eq!(p.cue_side, 1);
            let q = params(MotionClass::Shrink, seed, &cfg);
            assert_eq!(q.cue_side, -1);
        }
    }

    #[test]
    fn cue_is_class_independent_at_zero_strength() {
        let cfg = GeneratorConfig { cue_strength: 0.0, ..Default::default() };
        for seed in 0..32 {
            let p = params(MotionClass::TranslateEast, seed, &cfg);
            let q = params(MotionClass::TranslateWest, seed, &cfg);
            assert_eq!(p.cue_side, q.cue_side);
        }
    }

    #[test]
    fn quality_is_monotone_in_extent() {
        let cfg = GeneratorConfig::default();
        let mut p = params(MotionClass::RotateCw, 3, &cfg);
        let q_lo = {
            p.rotation_deg = 150.0;
            quality_for(&p, &cfg.motion)
        };
        let q_hi = {
            p.rotation_deg = 400.0;
            quality_for(&p, &cfg.motion)
        };
        assert!(q_hi > q_lo);
    }

    #[test]
    fn static_class_has_no_motion() {
        let cfg = GeneratorConfig::default();
        let p = params(MotionClass::Static, 9, &cfg);
        assert_eq!(p.displacement, 0.0);
        assert_eq!(p.rotation_deg, 0.0);
        assert_eq!(p.scale_rate, 0.0);
        assert_eq!(p.jitter_amp, 0.0);
        assert_eq!(attributes_for(&p)[2..], [0, 0, 0]);
    }
}
