//! Hand-unrolled forward-pass oracles: tiny models with hand-set weights
//! compared against test-local reimplementations of each layer.

use hallucinet::evaluator::hallucination_error;
use hallucinet::model_zoo::{StudentConfig, StudentModel, TeacherConfig, TeacherModel};
use hallucinet::nn::Params;
use hallucinet::synthvid::{generate_split, GeneratorConfig, Split};
use ndarray::{Array1, Array2, Array3, Array4};

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// Same-padded 3D conv, one output voxel at a time.
fn conv3d_naive(x: &Array4<f64>, w: &[f64], co: usize, ci: usize, k: usize, b: &[f64]) -> Array4<f64> {
    let (_, t, h, ww) = x.dim();
    let pad = k / 2;
    let mut y = Array4::zeros((co, t, h, ww));
    for o in 0..co {
        for ot in 0..t {
            for oy in 0..h {
                for ox in 0..ww {
                    let mut acc = b[o];
                    for c in 0..ci {
                        for dt in 0..k {
                            for dy in 0..k {
                                for dx in 0..k {
                                    let (it, iy, ix) = (
                                        ot + dt,
                                        oy + dy,
                                        ox + dx,
                                    );
                                    if it >= pad && iy >= pad && ix >= pad {
                                        let (it, iy, ix) = (it - pad, iy - pad, ix - pad);
                                        if it < t && iy < h && ix < ww {
                                            let widx = ((o * ci + c) * k * k * k)
                                                + (dt * k + dy) * k
                                                + dx;
                                            acc += x[[c, it, iy, ix]] * w[widx];
                                        }
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

fn max_pool3_naive(x: &Array4<f64>) -> Array4<f64> {
    let (c, t, h, w) = x.dim();
    let mut y = Array4::from_elem((c, t / 2, h / 2, w / 2), f64::NEG_INFINITY);
    for ci in 0..c {
        for ot in 0..t / 2 {
            for oy in 0..h / 2 {
                for ox in 0..w / 2 {
                    for dt in 0..2 {
                        for dy in 0..2 {
                            for dx in 0..2 {
                                let v = x[[ci, ot * 2 + dt, oy * 2 + dy, ox * 2 + dx]];
                                if v > y[[ci, ot, oy, ox]] {
                                    y[[ci, ot, oy, ox]] = v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    y
}

#[test]
fn two_block_teacher_matches_hand_unrolled_forward() {
    let cfg = TeacherConfig {
        clip_len: 4,
        height: 4,
        width: 4,
        in_channels: 1,
        channels: vec![2, 3],
        num_classes: 2,
        init_seed: 5,
        ..Default::default()
    };
    let mut teacher = TeacherModel::new(cfg).unwrap();
    // hand-set every parameter to a small deterministic pattern
    let mut map = teacher.to_map();
    for (name, tensor) in map.iter_mut() {
        for (i, v) in tensor.iter_mut().enumerate() {
            *v = ((i as f64 * 0.37 + name.len() as f64).sin()) * 0.3;
        }
    }
    teacher.load_map(&map).unwrap();

    let x = Array4::from_shape_fn((1, 4, 4, 4), |(_, t, y, z)| {
        ((t * 16 + y * 4 + z) as f64 * 0.11).cos() * 0.5 + 0.5
    });
    let (features, logits) = teacher.forward(&x).unwrap();

    // independent unroll: conv -> relu -> pool, twice, then global mean and
    // the affine classifier
    let w0: Vec<f64> = map["block0.w"].iter().cloned().collect();
    let b0: Vec<f64> = map["block0.b"].iter().cloned().collect();
    let mut h = conv3d_naive(&x, &w0, 2, 1, 3, &b0);
    h.mapv_inplace(relu);
    let h = max_pool3_naive(&h);
    let w1: Vec<f64> = map["block1.w"].iter().cloned().collect();
    let b1: Vec<f64> = map["block1.b"].iter().cloned().collect();
    let mut h = conv3d_naive(&h, &w1, 3, 2, 3, &b1);
    h.mapv_inplace(relu);
    let h = max_pool3_naive(&h);
    let feat_ref: Vec<f64> = (0..3)
        .map(|c| h.index_axis(ndarray::Axis(0), c).mean().unwrap())
        .collect();
    for (a, b) in features.iter().zip(feat_ref.iter()) {
        assert!((a - b).abs() < 1e-12, "feature mismatch: {a} vs {b}");
    }
    let wc = &map["classifier.w"];
    let bc = &map["classifier.b"];
    for k in 0..2 {
        let mut acc = bc[[k]];
        for (j, f) in feat_ref.iter().enumerate() {
            acc += wc[[k, j]] * f;
        }
        assert!((logits[k] - acc).abs() < 1e-12);
    }
}

#[test]
fn small_student_embedding_matches_hand_unrolled_forward() {
    // one conv block 1->1 with a hand-set 3x3 kernel on a 4x4 frame
    let cfg = StudentConfig {
        height: 4,
        width: 4,
        channels: vec![1],
        teacher_dim: 2,
        num_classes: 2,
        init_seed: 0,
        ..Default::default()
    };
    let mut student = StudentModel::new(cfg).unwrap();
    let mut map = student.to_map();
    let kernel = [0.1, -0.2, 0.3, 0.0, 0.5, -0.1, 0.2, 0.2, -0.4];
    for (i, v) in map.get_mut("block0.w").unwrap().iter_mut().enumerate() {
        *v = kernel[i];
    }
    map.get_mut("block0.b").unwrap().fill(0.05);
    student.load_map(&map).unwrap();

    let frame = Array3::from_shape_fn((1, 4, 4), |(_, y, x)| (y * 4 + x) as f64 / 15.0);
    let (out, _) = student.forward(&frame).unwrap();

    // hand conv (same padding), relu, 2x2 max pool, global average
    let mut conv = Array2::<f64>::zeros((4, 4));
    for oy in 0..4usize {
        for ox in 0..4usize {
            let mut acc = 0.05;
            for dy in 0..3usize {
                for dx in 0..3usize {
                    let iy = oy + dy;
                    let ix = ox + dx;
                    if iy >= 1 && ix >= 1 && iy - 1 < 4 && ix - 1 < 4 {
                        acc += frame[[0, iy - 1, ix - 1]] * kernel[dy * 3 + dx];
                    }
                }
            }
            conv[[oy, ox]] = relu(acc);
        }
    }
    let mut pooled = [[0.0f64; 2]; 2];
    for oy in 0..2 {
        for ox in 0..2 {
            let mut best = f64::NEG_INFINITY;
            for dy in 0..2 {
                for dx in 0..2 {
                    best = best.max(conv[[oy * 2 + dy, ox * 2 + dx]]);
                }
            }
            pooled[oy][ox] = best;
        }
    }
    let embed_ref = (pooled[0][0] + pooled[0][1] + pooled[1][0] + pooled[1][1]) / 4.0;
    assert_eq!(out.embedding.len(), 1);
    assert!((out.embedding[0] - embed_ref).abs() < 1e-12);
}

#[test]
fn rigged_student_achieves_zero_hallucination_error() {
    // teacher with all-zero weights and a hand-set classifier-independent
    // feature bias: features are constant, so a student whose hallucination
    // head bias equals that constant (with zero weights) is exact.
    let tcfg = TeacherConfig {
        clip_len: 4,
        height: 20,
        width: 20,
        channels: vec![2, 3],
        num_classes: 4,
        init_seed: 0,
        ..Default::default()
    };
    let mut teacher = TeacherModel::new(tcfg).unwrap();
    let mut tmap = teacher.to_map();
    for (name, tensor) in tmap.iter_mut() {
        tensor.fill(0.0);
        if name == "block1.b" {
            tensor.fill(0.75); // dyadic constant: pooled means stay exact
        }
    }
    teacher.load_map(&tmap).unwrap();
    teacher.set_frozen(true);

    let scfg = StudentConfig {
        height: 20,
        width: 20,
        channels: vec![2, 4],
        teacher_dim: 3,
        num_classes: 4,
        init_seed: 1,
        ..Default::default()
    };
    let mut student = StudentModel::new(scfg).unwrap();
    let mut smap = student.to_map();
    smap.get_mut("hallucination.w").unwrap().fill(0.0);
    smap.get_mut("hallucination.b").unwrap().fill(0.75);
    student.load_map(&smap).unwrap();

    let gen = GeneratorConfig {
        name: "rig".into(),
        frames: 4,
        height: 20,
        width: 20,
        num_classes: 4,
        train_clips: 8,
        val_clips: 4,
        test_clips: 4,
        motion: hallucinet::synthvid::MotionRanges {
            radius: (2.0, 2.5),
            displacement: (1.0, 1.5),
            ..Default::default()
        },
        ..Default::default()
    };
    let clips = generate_split(&gen, Split::Test).unwrap();
    let err = hallucination_error(&student, &teacher, &clips).unwrap();
    assert_eq!(err, 0.0);
}

#[test]
fn hallucination_error_equals_independent_per_clip_mean() {
    use hallucinet::losses::hallucination_loss;
    use hallucinet::model_zoo::{clip_to_input, frame_to_input};
    use hallucinet::synthvid::center_frame;

    let gen = GeneratorConfig {
        name: "mean".into(),
        frames: 6,
        height: 20,
        width: 20,
        num_classes: 4,
        train_clips: 8,
        val_clips: 4,
        test_clips: 12,
        motion: hallucinet::synthvid::MotionRanges {
            radius: (2.0, 2.5),
            displacement: (1.0, 1.5),
            ..Default::default()
        },
        ..Default::default()
    };
    let clips = generate_split(&gen, Split::Test).unwrap();
    let mut teacher = TeacherModel::new(TeacherConfig {
        clip_len: 6,
        height: 20,
        width: 20,
        channels: vec![2, 5],
        num_classes: 4,
        init_seed: 2,
        ..Default::default()
    })
    .unwrap();
    teacher.set_frozen(true);
    let student = StudentModel::new(StudentConfig {
        height: 20,
        width: 20,
        channels: vec![2, 4],
        teacher_dim: 5,
        num_classes: 4,
        init_seed: 3,
        ..Default::default()
    })
    .unwrap();

    let fast = hallucination_error(&student, &teacher, &clips).unwrap();
    // standalone recomputation, clip by clip
    let mut acc = 0.0;
    for clip in &clips {
        let (phi_t, _) = teacher.forward(&clip_to_input(&clip.frames)).unwrap();
        let (out, _) = student.forward(&frame_to_input(&center_frame(clip))).unwrap();
        acc += hallucination_loss(&out.hallucinated, &phi_t).unwrap();
    }
    let slow = acc / clips.len() as f64;
    assert!((fast - slow).abs() < 1e-9);
}

#[test]
fn student_count_parameters_matches_hand_summation() {
    // default config: 4 conv blocks [8,16,32,64] on 1 channel, kernel 3,
    // D_s = D_t = 64, K = 8 classes, arities [3,2,3,3,3], quality head.
    let cfg = StudentConfig::default();
    let student = StudentModel::new(cfg).unwrap();
    let conv = |ci: u64, co: u64| co * ci * 9 + co;
    let affine = |i: u64, o: u64| i * o + o;
    let hand = conv(1, 8)
        + conv(8, 16)
        + conv(16, 32)
        + conv(32, 64)
        + affine(64, 64)            // hallucination head
        + affine(64, 8)             // classifier
        + affine(64, 3) + affine(64, 2) + affine(64, 3) + affine(64, 3) + affine(64, 3)
        + affine(64, 1); // quality
    assert_eq!(student.num_params(), hand);
}
