//! Property tests over the loss, metric, and generator invariants.

use hallucinet::evaluator::{spearman_correlation, top1_accuracy};
use hallucinet::losses::{hallucination_loss, mtl_loss};
use hallucinet::model_zoo::{StudentConfig, StudentModel, TeacherConfig, TeacherModel};
use hallucinet::synthvid::{generate_clip, GeneratorConfig};
use ndarray::Array1;
use proptest::prelude::*;

fn feature_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-20.0..20.0f64, len..=len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hallucination_loss_bounded_and_symmetric(
        pair in (1usize..16).prop_flat_map(|n| (feature_vec(n), feature_vec(n)))
    ) {
        let (a, b) = pair;
        let a = Array1::from_vec(a);
        let b = Array1::from_vec(b);
        let ab = hallucination_loss(&a, &b).unwrap();
        let ba = hallucination_loss(&b, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, ba);
        // zero exactly on equal inputs
        prop_assert_eq!(hallucination_loss(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn mtl_is_affine_in_lambda(l_mt in -5.0..5.0f64, l_h in 0.0..1.0f64, lam in 0.0..400.0f64) {
        let base = mtl_loss(l_mt, l_h, 0.0).unwrap();
        let at = mtl_loss(l_mt, l_h, lam).unwrap();
        prop_assert!((at - (base + lam * l_h)).abs() < 1e-9);
    }

    #[test]
    fn spearman_invariant_under_monotone_transforms(
        xs in proptest::collection::vec(-100.0..100.0f64, 3..20),
        ys in proptest::collection::vec(-100.0..100.0f64, 3..20),
    ) {
        let n = xs.len().min(ys.len());
        let xs = &xs[..n];
        let ys = &ys[..n];
        // skip degenerate constant inputs
        prop_assume!(xs.iter().any(|v| *v != xs[0]));
        prop_assume!(ys.iter().any(|v| *v != ys[0]));
        let base = spearman_correlation(xs, ys).unwrap();
        let tx: Vec<f64> = xs.iter().map(|v| (v * 0.01).exp() * 3.0 + 1.0).collect();
        let ty: Vec<f64> = ys.iter().map(|v| v * 5.0 - 2.0).collect();
        let t = spearman_correlation(&tx, &ty).unwrap();
        prop_assert!((base - t).abs() < 1e-9);
    }

    #[test]
    fn top1_is_permutation_invariant(
        pairs in proptest::collection::vec((0usize..5, 0usize..5), 1..30),
        seed in 0u64..1000,
    ) {
        let preds: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let labels: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let base = top1_accuracy(&preds, &labels).unwrap();
        use rand::seq::SliceRandom;
        let mut rng = hallucinet::rng::rng_from_seed(seed);
        let mut idx: Vec<usize> = (0..preds.len()).collect();
        idx.shuffle(&mut rng);
        let p2: Vec<usize> = idx.iter().map(|&i| preds[i]).collect();
        let l2: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        prop_assert_eq!(base, top1_accuracy(&p2, &l2).unwrap());
    }

    #[test]
    fn clips_are_deterministic_and_in_range(class_id in 0usize..8, seed in 0u64..10_000) {
        let cfg = GeneratorConfig {
            frames: 6,
            height: 28,
            width: 28,
            motion: hallucinet::synthvid::MotionRanges {
                radius: (2.5, 3.4),
                displacement: (1.5, 2.5),
                ..Default::default()
            },
            ..Default::default()
        };
        let a = generate_clip(class_id, seed, &cfg).unwrap();
        let b = generate_clip(class_id, seed, &cfg).unwrap();
        prop_assert_eq!(&a.frames, &b.frames);
        prop_assert!(a.frames.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!((0.0..=1.0).contains(&a.quality));
    }

    #[test]
    fn model_shape_contracts_hold_for_random_configs(
        c1 in 1usize..5,
        c2 in 1usize..5,
        dt in 1usize..12,
        k in 2usize..6,
        seed in 0u64..100,
    ) {
        let scfg = StudentConfig {
            height: 16,
            width: 16,
            channels: vec![c1, c2],
            teacher_dim: dt,
            num_classes: k,
            init_seed: seed,
            ..Default::default()
        };
        let student = StudentModel::new(scfg).unwrap();
        let x = ndarray::Array3::from_elem((1, 16, 16), 0.3);
        let (out, _) = student.forward(&x).unwrap();
        prop_assert_eq!(out.embedding.len(), c2);
        prop_assert_eq!(out.hallucinated.len(), dt);
        prop_assert_eq!(out.class_logits.len(), k);
        let arities: Vec<usize> = out.attribute_logits.iter().map(|l| l.len()).collect();
        prop_assert_eq!(arities, hallucinet::synthvid::ATTRIBUTE_ARITIES.to_vec());

        let tcfg = TeacherConfig {
            clip_len: 4,
            height: 16,
            width: 16,
            channels: vec![c1, dt],
            num_classes: k,
            init_seed: seed,
            ..Default::default()
        };
        let teacher = TeacherModel::new(tcfg).unwrap();
        let clip = ndarray::Array4::from_elem((1, 4, 16, 16), 0.5);
        let (features, logits) = teacher.forward(&clip).unwrap();
        prop_assert_eq!(features.len(), dt);
        prop_assert_eq!(logits.len(), k);
        // inference determinism
        let (f2, l2) = teacher.forward(&clip).unwrap();
        prop_assert_eq!(features, f2);
        prop_assert_eq!(logits, l2);
    }
}
