//! Anti-aliased sprite rendering via signed-distance coverage.
//!
//! Intensities: background 0.1, sprite fill 0.55, orientation tick 0.0,
//! cue dot 1.0. Coverage blends over a one-pixel band, so sub-pixel motion
//! moves the rendered mass continuously.

use super::motion::{cue_offset, MotionParams, CUE_RADIUS};
use super::SpriteShape;
use ndarray::Array2;

pub const BG: f64 = 0.1;
const FILL: f64 = 0.55;
const TICK: f64 = 0.0;
/// Tick orbit (fraction of current radius) and dot radius.
const TICK_ORBIT: f64 = 0.5;
const TICK_RADIUS: f64 = 1.2;

fn coverage(sdf: f64) -> f64 {
    (0.5 - sdf).clamp(0.0, 1.0)
}

fn sdf(shape: SpriteShape, x: f64, y: f64, r: f64) -> f64 {
    match shape {
        SpriteShape::Disk => (x * x + y * y).sqrt() - r,
        SpriteShape::Square => {
            let a = r * 0.9;
            let (qx, qy) = (x.abs() - a, y.abs() - a);
            let outside = (qx.max(0.0).powi(2) + qy.max(0.0).powi(2)).sqrt();
            outside + qx.max(qy).min(0.0)
        }
        SpriteShape::Triangle => {
            // Equilateral triangle (circumradius 1.2 r) pointing up; SDF as
            // the max of the three edge half-plane distances.
            let cr = r * 1.2;
            let mut d = f64::NEG_INFINITY;
            for i in 0..3 {
                // Vertex angles: -90, 30, 150 degrees (y points down).
                let a0 = (-90.0f64 + 120.0 * i as f64).to_radians();
                let a1 = (-90.0f64 + 120.0 * (i as f64 + 1.0)).to_radians();
                let (v0x, v0y) = (cr * a0.cos(), cr * a0.sin());
                let (v1x, v1y) = (cr * a1.cos(), cr * a1.sin());
                let (ex, ey) = (v1x - v0x, v1y - v0y);
                let len = (ex * ex + ey * ey).sqrt();
                // outward normal of edge v0->v1 for this winding
                let (nx, ny) = (ey / len, -ex / len);
                d = d.max((x - v0x) * nx + (y - v0y) * ny);
            }
            d
        }
    }
}

/// Sprite pose at frame `t` of `total` (positions in px, angle in degrees).
pub struct Pose {
    pub center: (f64, f64),
    pub angle_deg: f64,
    pub radius: f64,
}

pub fn pose_at(p: &MotionParams, t: usize, total: usize) -> Pose {
    let progress = if total <= 1 { 0.0 } else { t as f64 / (total - 1) as f64 };
    let leg = match p.legs {
        0 | 1 => progress,
        _ => {
            if progress <= 0.5 {
                2.0 * progress
            } else {
                2.0 * (1.0 - progress)
            }
        }
    };
    let dir = match p.class {
        super::MotionClass::TranslateEast => (1.0, 0.0),
        super::MotionClass::TranslateWest => (-1.0, 0.0),
        super::MotionClass::TranslateNorth => (0.0, -1.0),
        _ => (0.0, 0.0),
    };
    let (jx, jy) = p.jitter[t];
    Pose {
        center: (
            p.start.0 + dir.0 * p.displacement * leg + jx,
            p.start.1 + dir.1 * p.displacement * leg + jy,
        ),
        angle_deg: p.theta0_deg + p.rotation_deg * progress,
        radius: p.radius * (1.0 + p.scale_rate * progress),
    }
}

/// Render one grayscale frame as `[H, W]` f64 in [0, 1] (pre-noise).
pub fn render_frame(
    p: &MotionParams,
    t: usize,
    total: usize,
    height: usize,
    width: usize,
    cue_contrast: f64,
) -> Array2<f64> {
    let pose = pose_at(p, t, total);
    let (cx, cy) = pose.center;
    let theta = pose.angle_deg.to_radians();
    let (sin, cos) = theta.sin_cos();

    // Tick rides the sprite: sprite-frame (0, -orbit·radius) rotated by theta.
    let orbit = TICK_ORBIT * pose.radius;
    let (tick_x, tick_y) = (cx + sin * orbit, cy - cos * orbit);
    // Cue dot sits east/west of the sprite at a canvas-fixed offset.
    let cue = if p.cue_side != 0 {
        Some((cx + f64::from(p.cue_side) * cue_offset(p.radius), cy))
    } else {
        None
    };

    let mut frame = Array2::from_elem((height, width), BG);
    for py in 0..height {
        for px in 0..width {
            let (fx, fy) = (px as f64 + 0.5, py as f64 + 0.5);
            let (dx, dy) = (fx - cx, fy - cy);
            // into sprite frame (inverse rotation)
            let sx = cos * dx + sin * dy;
            let sy = -sin * dx + cos * dy;
            let mut v = BG;
            let c_sprite = coverage(sdf(p.shape, sx, sy, pose.radius));
            v += (FILL - v) * c_sprite;
            let dt = ((fx - tick_x).powi(2) + (fy - tick_y).powi(2)).sqrt() - TICK_RADIUS;
            let c_tick = coverage(dt);
            v += (TICK - v) * c_tick;
            if let Some((qx, qy)) = cue {
                let dq = ((fx - qx).powi(2) + (fy - qy).powi(2)).sqrt() - CUE_RADIUS;
                let c_cue = coverage(dq);
                v += (cue_contrast - v) * c_cue;
            }
            frame[[py, px]] = v;
        }
    }
    frame
}
