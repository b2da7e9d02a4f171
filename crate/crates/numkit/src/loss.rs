//! Softmax and categorical cross-entropy. The fused softmax+CE path is
//! what training uses; its backward is the exact (probs - onehot)/N.

use crate::error::{NumError, NumResult};
use crate::real::Real;
use crate::tensor::Tensor;

const LOG_FLOOR: f64 = 1e-12;

/// Row-wise softmax over the last axis, computed with max subtraction.
pub fn softmax<R: Real>(logits: &Tensor<R>) -> NumResult<Tensor<R>> {
    let s = logits.shape();
    let c = *s
        .last()
        .ok_or_else(|| NumError::invalid("softmax", "rank-0 input"))?;
    if c < 2 {
        return Err(NumError::invalid("softmax", "class axis must have >= 2 entries"));
    }
    let rows = logits.numel() / c;
    let mut out = Tensor::zeros(s);
    let ld = logits.data();
    let od = out.data_mut();
    for r in 0..rows {
        let row = &ld[r * c..(r + 1) * c];
        let max = row.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.to_f64()));
        let mut sum = 0.0f64;
        for (j, v) in row.iter().enumerate() {
            let e = (v.to_f64() - max).exp();
            od[r * c + j] = R::from_f64(e);
            sum += e;
        }
        for j in 0..c {
            od[r * c + j] = R::from_f64(od[r * c + j].to_f64() / sum);
        }
    }
    Ok(out)
}

/// Mean over the batch of -sum(onehot * log(probs)), log clamped at 1e-12.
pub fn cross_entropy<R: Real>(probs: &Tensor<R>, onehot: &Tensor<R>) -> NumResult<f64> {
    if probs.shape() != onehot.shape() || probs.shape().len() != 2 {
        return Err(NumError::shape(
            "cross_entropy",
            format!("probs {:?} vs onehot {:?}", probs.shape(), onehot.shape()),
        ));
    }
    let (n, c) = (probs.shape()[0], probs.shape()[1]);
    let pd = probs.data();
    let yd = onehot.data();
    let mut total = 0.0f64;
    for r in 0..n {
        let row = &yd[r * c..(r + 1) * c];
        let ones = row.iter().filter(|v| v.to_f64() == 1.0).count();
        let zeros = row.iter().filter(|v| v.to_f64() == 0.0).count();
        if ones != 1 || ones + zeros != c {
            return Err(NumError::BadLabel { row: r });
        }
        for j in 0..c {
            if row[j].to_f64() == 1.0 {
                total -= pd[r * c + j].to_f64().max(LOG_FLOOR).ln();
            }
        }
    }
    Ok(total / n as f64)
}

/// Fused softmax + cross-entropy on logits with integer class labels.
/// Returns (mean loss, probs); `grad` is d(loss)/d(logits).
pub struct SoftmaxCrossEntropy<R: Real> {
    pub loss: f64,
    pub probs: Tensor<R>,
    pub grad: Tensor<R>,
}

pub fn softmax_cross_entropy<R: Real>(
    logits: &Tensor<R>,
    labels: &[usize],
) -> NumResult<SoftmaxCrossEntropy<R>> {
    let s = logits.shape();
    if s.len() != 2 {
        return Err(NumError::shape("softmax_cross_entropy", format!("expected [N,C], got {:?}", s)));
    }
    let (n, c) = (s[0], s[1]);
    if labels.len() != n {
        return Err(NumError::invalid(
            "softmax_cross_entropy",
            format!("{} labels for batch of {}", labels.len(), n),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(NumError::invalid(
            "softmax_cross_entropy",
            format!("label {bad} out of range for {c} classes"),
        ));
    }
    let probs = softmax(logits)?;
    let pd = probs.data();
    let mut loss = 0.0f64;
    let mut grad = probs.clone();
    let gd = grad.data_mut();
    let inv_n = 1.0 / n as f64;
    for (r, &y) in labels.iter().enumerate() {
        loss -= pd[r * c + y].to_f64().max(LOG_FLOOR).ln();
        gd[r * c + y] -= R::ONE;
    }
    for g in gd.iter_mut() {
        *g = R::from_f64(g.to_f64() * inv_n);
    }
    Ok(SoftmaxCrossEntropy {
        loss: loss * inv_n,
        probs,
        grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_symmetry() {
        let t = Tensor::new(vec![1, 3], vec![0.0f64, 0.0, 0.0]).unwrap();
        let p = softmax(&t).unwrap();
        for &v in p.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_large_logit_is_stable() {
        let t = Tensor::new(vec![1, 3], vec![1000.0f64, 0.0, 0.0]).unwrap();
        let p = softmax(&t).unwrap();
        assert!(p.all_finite());
        assert!((p.data()[0] - 1.0).abs() < 1e-12);
        assert!(p.data()[1] >= 0.0 && p.data()[1] < 1e-12);
    }

    #[test]
    fn softmax_one_two_three() {
        let t = Tensor::new(vec![1, 3], vec![1.0f64, 2.0, 3.0]).unwrap();
        let p = softmax(&t).unwrap();
        // direct 64-bit evaluation: exp(k)/sum(exp(1..3))
        let z: f64 = (1..=3).map(|k| (k as f64).exp()).sum();
        let expect = [1f64.exp() / z, 2f64.exp() / z, 3f64.exp() / z];
        assert!((expect[0] - 0.09003).abs() < 1e-5);
        assert!((expect[1] - 0.24473).abs() < 1e-5);
        assert!((expect[2] - 0.66524).abs() < 1e-5);
        for (a, b) in p.data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn cross_entropy_perfect_prediction_is_zero() {
        let p = Tensor::new(vec![1, 3], vec![1.0f64, 0.0, 0.0]).unwrap();
        let y = Tensor::new(vec![1, 3], vec![1.0f64, 0.0, 0.0]).unwrap();
        assert_eq!(cross_entropy(&p, &y).unwrap(), 0.0);
    }

    #[test]
    fn cross_entropy_uniform_is_log3() {
        let third = 1.0f64 / 3.0;
        let p = Tensor::new(vec![1, 3], vec![third; 3]).unwrap();
        let y = Tensor::new(vec![1, 3], vec![0.0f64, 1.0, 0.0]).unwrap();
        let l = cross_entropy(&p, &y).unwrap();
        assert!((l - 3.0f64.ln()).abs() < 1e-12);
        assert!((l - 1.0986).abs() < 1e-4);
    }

    #[test]
    fn cross_entropy_known_value() {
        let p = Tensor::new(vec![1, 3], vec![0.7f64, 0.2, 0.1]).unwrap();
        let y = Tensor::new(vec![1, 3], vec![1.0f64, 0.0, 0.0]).unwrap();
        let l = cross_entropy(&p, &y).unwrap();
        assert!((l - (-0.7f64.ln())).abs() < 1e-12);
        assert!((l - 0.35667).abs() < 1e-5);
    }

    #[test]
    fn cross_entropy_rejects_non_onehot() {
        let p = Tensor::new(vec![1, 3], vec![0.5f64, 0.3, 0.2]).unwrap();
        let y = Tensor::new(vec![1, 3], vec![0.5f64, 0.5, 0.0]).unwrap();
        assert!(matches!(cross_entropy(&p, &y), Err(NumError::BadLabel { row: 0 })));
    }
}
