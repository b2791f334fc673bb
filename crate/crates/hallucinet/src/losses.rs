//! Hallucination loss, main-task losses, and their multitask combination.
//!
//! Reductions: the hallucination loss averages over feature dimensions (and
//! over batch where batched), so its scale — and therefore the meaning of
//! the λ weight — is independent of the feature width and batch size.
//! Classification and quality losses are means over the batch. Non-finite
//! inputs are errors, never silent NaN.

use crate::error::{Error, Result};
use crate::nn::sigmoid;
use ndarray::Array1;

/// Per-batch loss values tied together by construction:
/// `l_mtl == l_mt + lambda · l_hallu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBundle {
    pub l_mt: f64,
    pub l_hallu: f64,
    pub l_mtl: f64,
    pub lambda: f64,
}

impl LossBundle {
    pub fn new(l_mt: f64, l_hallu: f64, lambda: f64) -> Result<LossBundle> {
        let l_mtl = mtl_loss(l_mt, l_hallu, lambda)?;
        if l_hallu < 0.0 {
            return Err(Error::InvalidArgument("L_hallu must be >= 0".into()));
        }
        Ok(LossBundle {
            l_mt,
            l_hallu,
            l_mtl,
            lambda,
        })
    }
}

fn ensure_finite(name: &str, values: &Array1<f64>) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{name} contains non-finite values")));
    }
    Ok(())
}

fn ensure_same_len(a: &Array1<f64>, b: &Array1<f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "feature length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Shape("empty feature vectors".into()));
    }
    Ok(())
}

/// Mean over dimensions of (σ(φ_s,i) − σ(φ_t,i))²; always in [0, 1].
pub fn hallucination_loss(phi_s: &Array1<f64>, phi_t: &Array1<f64>) -> Result<f64> {
    ensure_same_len(phi_s, phi_t)?;
    ensure_finite("phi_s", phi_s)?;
    ensure_finite("phi_t", phi_t)?;
    let mut acc = 0.0;
    for (s, t) in phi_s.iter().zip(phi_t.iter()) {
        let d = sigmoid(*s) - sigmoid(*t);
        acc += d * d;
    }
    Ok(acc / phi_s.len() as f64)
}

/// Hallucination loss and its gradient with respect to `phi_s`.
pub fn hallucination_loss_grad(
    phi_s: &Array1<f64>,
    phi_t: &Array1<f64>,
) -> Result<(f64, Array1<f64>)> {
    ensure_same_len(phi_s, phi_t)?;
    ensure_finite("phi_s", phi_s)?;
    ensure_finite("phi_t", phi_t)?;
    let n = phi_s.len() as f64;
    let mut acc = 0.0;
    let mut grad = Array1::zeros(phi_s.len());
    for (i, (s, t)) in phi_s.iter().zip(phi_t.iter()).enumerate() {
        let ss = sigmoid(*s);
        let st = sigmoid(*t);
        let d = ss - st;
        acc += d * d;
        grad[i] = 2.0 * d * ss * (1.0 - ss) / n;
    }
    Ok((acc / n, grad))
}

/// L_MTL = L_mt + λ·L_hallu.
pub fn mtl_loss(l_mt: f64, l_hallu: f64, lambda: f64) -> Result<f64> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    if !l_mt.is_finite() || !l_hallu.is_finite() {
        return Err(Error::NonFinite("mtl_loss inputs must be finite".into()));
    }
    Ok(l_mt + lambda * l_hallu)
}

fn log_sum_exp(logits: &Array1<f64>) -> f64 {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + logits.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Softmax cross-entropy for one sample.
pub fn classification_loss(logits: &Array1<f64>, class_id: usize) -> Result<f64> {
    ensure_finite("logits", logits)?;
    if class_id >= logits.len() {
        return Err(Error::InvalidArgument(format!(
            "label {class_id} out of range for {} classes",
            logits.len()
        )));
    }
    Ok(log_sum_exp(logits) - logits[class_id])
}

/// Cross-entropy and its gradient (softmax − one-hot).
pub fn classification_loss_grad(
    logits: &Array1<f64>,
    class_id: usize,
) -> Result<(f64, Array1<f64>)> {
    let loss = classification_loss(logits, class_id)?;
    let lse = log_sum_exp(logits);
    let mut grad = logits.mapv(|v| (v - lse).exp());
    grad[class_id] -= 1.0;
    Ok((loss, grad))
}

/// Mean cross-entropy over a batch of (logits, label) pairs.
pub fn classification_loss_batch(samples: &[(Array1<f64>, usize)]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut acc = 0.0;
    for (logits, label) in samples {
        acc += classification_loss(logits, *label)?;
    }
    Ok(acc / samples.len() as f64)
}

/// Sum of per-group softmax cross-entropies over the 5 attribute heads.
pub fn attribute_loss(groups: &[Array1<f64>], labels: &[u8; 5]) -> Result<f64> {
    if groups.len() != 5 {
        return Err(Error::Shape(format!("expected 5 attribute groups, got {}", groups.len())));
    }
    let mut acc = 0.0;
    for (logits, label) in groups.iter().zip(labels.iter()) {
        acc += classification_loss(logits, *label as usize)?;
    }
    Ok(acc)
}

/// Attribute loss plus per-group gradients.
pub fn attribute_loss_grad(
    groups: &[Array1<f64>],
    labels: &[u8; 5],
) -> Result<(f64, Vec<Array1<f64>>)> {
    if groups.len() != 5 {
        return Err(Error::Shape(format!("expected 5 attribute groups, got {}", groups.len())));
    }
    let mut acc = 0.0;
    let mut grads = Vec::with_capacity(5);
    for (logits, label) in groups.iter().zip(labels.iter()) {
        let (l, g) = classification_loss_grad(logits, *label as usize)?;
        acc += l;
        grads.push(g);
    }
    Ok((acc, grads))
}

/// Squared error for one sample.
pub fn quality_loss(pred: f64, target: f64) -> Result<f64> {
    if !pred.is_finite() || !target.is_finite() {
        return Err(Error::NonFinite("quality_loss inputs must be finite".into()));
    }
    Ok((pred - target) * (pred - target))
}

/// Squared error and d/dpred.
pub fn quality_loss_grad(pred: f64, target: f64) -> Result<(f64, f64)> {
    let l = quality_loss(pred, target)?;
    Ok((l, 2.0 * (pred - target)))
}

/// Mean squared error over a batch of (pred, target) pairs.
pub fn quality_loss_batch(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut acc = 0.0;
    for (p, t) in samples {
        acc += quality_loss(*p, *t)?;
    }
    Ok(acc / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    #[test]
    fn hallucination_loss_examples() {
        let v = arr1(&[0.3, -1.2, 4.0]);
        assert_eq!(hallucination_loss(&v, &v).unwrap(), 0.0);
        // sigma(0) = 0.5, sigma(ln 3) = 0.75 -> (0.25)^2
        let l = hallucination_loss(&arr1(&[0.0]), &arr1(&[3.0f64.ln()])).unwrap();
        assert!((l - 0.0625).abs() < 1e-12);
        // saturation approaches the per-dimension supremum 1
        let l = hallucination_loss(&arr1(&[1e9]), &arr1(&[-1e9])).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hallucination_loss_rejects_bad_input() {
        assert!(hallucination_loss(&arr1(&[1.0]), &arr1(&[1.0, 2.0])).is_err());
        assert!(hallucination_loss(&arr1(&[f64::NAN]), &arr1(&[0.0])).is_err());
        assert!(hallucination_loss(&arr1(&[f64::INFINITY]), &arr1(&[0.0])).is_err());
    }

    #[test]
    fn hallucination_loss_is_symmetric_and_bounded() {
        let a = arr1(&[0.4, -2.0, 7.5, 0.0]);
        let b = arr1(&[-0.3, 2.2, -9.0, 1.0]);
        let ab = hallucination_loss(&a, &b).unwrap();
        let ba = hallucination_loss(&b, &a).unwrap();
        assert_eq!(ab, ba);
        assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn mtl_loss_examples() {
        assert_eq!(mtl_loss(1.0, 0.01, 50.0).unwrap(), 1.5);
        assert_eq!(mtl_loss(0.37, 123.0, 0.0).unwrap(), 0.37);
        assert_eq!(mtl_loss(0.0, 0.02, 50.0).unwrap(), 1.0);
        assert!(mtl_loss(1.0, 1.0, -0.5).is_err());
    }

    #[test]
    fn lambda_linearity() {
        let (l_mt, l_h) = (0.8, 0.03);
        let at = |lam: f64| mtl_loss(l_mt, l_h, lam).unwrap();
        let slope01 = at(1.0) - at(0.0);
        let slope12 = (at(50.0) - at(1.0)) / 49.0;
        assert!((slope01 - l_h).abs() < 1e-12);
        assert!((slope12 - l_h).abs() < 1e-12);
    }

    #[test]
    fn classification_loss_examples() {
        let k = 7;
        let uniform = Array1::zeros(k);
        let l = classification_loss(&uniform, 3).unwrap();
        assert!((l - (k as f64).ln()).abs() < 1e-12);

        let confident = arr1(&[0.0, 1e4]);
        assert!(classification_loss(&confident, 1).unwrap() < 1e-10);

        let l = classification_loss(&arr1(&[1.0, 2.0, 3.0]), 2).unwrap();
        let expected = (1f64.exp() + 2f64.exp() + 3f64.exp()).ln() - 3.0;
        assert!((l - expected).abs() < 1e-12);

        assert!(classification_loss(&uniform, 7).is_err());
    }

    #[test]
    fn attribute_loss_decomposes_per_group() {
        let groups: Vec<Array1<f64>> = vec![
            arr1(&[0.3, -0.4, 1.0]),
            arr1(&[2.0, -2.0]),
            arr1(&[0.0, 0.0, 0.0]),
            arr1(&[1.0, 2.0, 3.0]),
            arr1(&[-1.0, 0.5, 0.1]),
        ];
        let labels = [2u8, 0, 1, 2, 0];
        let total = attribute_loss(&groups, &labels).unwrap();
        let sum: f64 = groups
            .iter()
            .zip(labels.iter())
            .map(|(g, l)| classification_loss(g, *l as usize).unwrap())
            .sum();
        assert!((total - sum).abs() < 1e-12);

        // uniform groups sum the per-group ln K
        let uniform: Vec<Array1<f64>> = crate::synthvid::ATTRIBUTE_ARITIES
            .iter()
            .map(|&a| Array1::zeros(a))
            .collect();
        let total = attribute_loss(&uniform, &[0, 0, 0, 0, 0]).unwrap();
        let expected: f64 = crate::synthvid::ATTRIBUTE_ARITIES
            .iter()
            .map(|&a| (a as f64).ln())
            .sum();
        assert!((total - expected).abs() < 1e-12);
    }

    #[test]
    fn quality_loss_examples() {
        assert_eq!(quality_loss(0.7, 0.7).unwrap(), 0.0);
        assert_eq!(quality_loss(0.5, 0.0).unwrap(), 0.25);
        assert_eq!(quality_loss_batch(&[(0.0, 1.0), (1.0, 1.0)]).unwrap(), 0.5);
        assert!(quality_loss(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        use crate::rng::rng_from_seed;
        use rand::Rng;
        let mut rng = rng_from_seed(77);
        let eps = 1e-6;
        for _ in 0..20 {
            let n = rng.gen_range(1..6);
            let a = Array1::from_shape_fn(n, |_| rng.gen_range(-3.0..3.0));
            let b = Array1::from_shape_fn(n, |_| rng.gen_range(-3.0..3.0));
            let (_, g) = hallucination_loss_grad(&a, &b).unwrap();
            for i in 0..n {
                let mut ap = a.clone();
                ap[i] += eps;
                let mut am = a.clone();
                am[i] -= eps;
                let num = (hallucination_loss(&ap, &b).unwrap()
                    - hallucination_loss(&am, &b).unwrap())
                    / (2.0 * eps);
                assert!((num - g[i]).abs() <= 1e-5 * (1.0 + num.abs()));
            }

            let label = rng.gen_range(0..n);
            let (_, g) = classification_loss_grad(&a, label).unwrap();
            for i in 0..n {
                let mut ap = a.clone();
                ap[i] += eps;
                let mut am = a.clone();
                am[i] -= eps;
                let num = (classification_loss(&ap, label).unwrap()
                    - classification_loss(&am, label).unwrap())
                    / (2.0 * eps);
                assert!((num - g[i]).abs() <= 1e-5 * (1.0 + num.abs()));
            }
        }
    }

    #[test]
    fn loss_bundle_enforces_identity() {
        let b = LossBundle::new(0.9, 0.004, 50.0).unwrap();
        assert_eq!(b.l_mtl, 0.9 + 50.0 * 0.004);
        assert!(LossBundle::new(0.9, -0.1, 50.0).is_err());
    }
}
