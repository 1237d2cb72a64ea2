use crate::error::NnError;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Mean squared error against a binary target vector, with an optional
/// per-output weight to counter class imbalance:
/// `L = (1/N) * sum_i w_i * (o_i - g_i)^2`, `w_i = 1` when no weights given.
pub fn mse_forward<T: Scalar>(
    output: &Tensor<T>,
    target: &[u8],
    weights: Option<&Tensor<T>>,
) -> Result<Tensor<T>, NnError> {
    let n = output.len();
    if target.len() != n {
        return Err(NnError::Shape {
            op: "mse",
            detail: format!("output has {n} entries, target {}", target.len()),
        });
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(NnError::Shape {
                op: "mse",
                detail: format!("output has {n} entries, weights {}", w.len()),
            });
        }
    }
    let inv_n = T::one() / T::of(n as f64);
    let mut acc = T::zero();
    for idx in 0..n {
        let d = output.data()[idx] - T::of(target[idx] as f64);
        let w = weights.map_or(T::one(), |w| w.data()[idx]);
        acc += w * d * d;
    }
    Ok(Tensor::scalar(acc * inv_n))
}

/// `dL/do_i = (2/N) * w_i * (o_i - g_i)`, scaled by the incoming gradient.
pub fn mse_backward<T: Scalar>(
    output: &Tensor<T>,
    target: &[u8],
    weights: Option<&Tensor<T>>,
    grad_out: T,
) -> Tensor<T> {
    let n = output.len();
    let scale = grad_out * T::of(2.0) / T::of(n as f64);
    let mut g = Tensor::zeros(output.shape());
    for idx in 0..n {
        let d = output.data()[idx] - T::of(target[idx] as f64);
        let w = weights.map_or(T::one(), |w| w.data()[idx]);
        g.data_mut()[idx] = scale * w * d;
    }
    g
}

/// Per-output affine rescale `y_i = w_i * x_i + c_i`; the trainable part of
/// the coding head that sharpens each score before thresholding.
pub fn scale_shift_forward<T: Scalar>(
    input: &Tensor<T>,
    w: &Tensor<T>,
    c: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    if w.len() != input.len() || c.len() != input.len() {
        return Err(NnError::Shape {
            op: "scale_shift",
            detail: format!(
                "input {}, scale {}, shift {}",
                input.len(),
                w.len(),
                c.len()
            ),
        });
    }
    let mut out = input.clone();
    for (idx, v) in out.data_mut().iter_mut().enumerate() {
        *v = *v * w.data()[idx] + c.data()[idx];
    }
    Ok(out)
}

pub struct ScaleShiftGrads<T> {
    pub input: Tensor<T>,
    pub w: Tensor<T>,
    pub c: Tensor<T>,
}

pub fn scale_shift_backward<T: Scalar>(
    input: &Tensor<T>,
    w: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> ScaleShiftGrads<T> {
    let mut dx = grad_out.clone();
    let mut dw = grad_out.clone();
    for idx in 0..input.len() {
        dx.data_mut()[idx] *= w.data()[idx];
        dw.data_mut()[idx] *= input.data()[idx];
    }
    ScaleShiftGrads {
        input: dx,
        w: dw,
        c: grad_out.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_of_exact_prediction_is_zero() {
        let o = Tensor::<f64>::from_vec(&[3], vec![1.0, 0.0, 1.0]).unwrap();
        assert_eq!(mse_forward(&o, &[1, 0, 1], None).unwrap().item(), 0.0);
    }

    #[test]
    fn mse_of_one_wrong_bit_is_one_over_n() {
        let o = Tensor::<f64>::from_vec(&[2], vec![1.0, 0.0]).unwrap();
        let l = mse_forward(&o, &[0, 0], None).unwrap().item();
        assert_eq!(l, 0.5);
    }

    #[test]
    fn mse_gradient_is_two_over_n_times_residual() {
        let o = Tensor::<f64>::from_vec(&[4], vec![0.9, 0.2, 0.4, 0.0]).unwrap();
        let t = [1u8, 0, 1, 0];
        let g = mse_backward(&o, &t, None, 1.0);
        for idx in 0..4 {
            let expect = 2.0 / 4.0 * (o.data()[idx] - t[idx] as f64);
            assert!((g.data()[idx] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn weights_scale_both_loss_and_gradient() {
        let o = Tensor::<f64>::from_vec(&[2], vec![0.5, 0.5]).unwrap();
        let w = Tensor::from_vec(&[2], vec![4.0, 1.0]).unwrap();
        let l = mse_forward(&o, &[1, 0], Some(&w)).unwrap().item();
        // (4*0.25 + 1*0.25) / 2
        assert_eq!(l, 0.625);
        let g = mse_backward(&o, &[1, 0], Some(&w), 1.0);
        assert_eq!(g.data(), [-2.0, 0.5]);
    }

    #[test]
    fn mse_gradient_matches_finite_differences() {
        let o = Tensor::<f64>::from_vec(&[3], vec![0.3, 0.7, 0.1]).unwrap();
        let t = [0u8, 1, 1];
        let g = mse_backward(&o, &t, None, 1.0);
        let h = 1e-6;
        for idx in 0..3 {
            let mut p = o.clone();
            p.data_mut()[idx] += h;
            let mut m = o.clone();
            m.data_mut()[idx] -= h;
            let numeric = (mse_forward(&p, &t, None).unwrap().item()
                - mse_forward(&m, &t, None).unwrap().item())
                / (2.0 * h);
            assert!((g.data()[idx] - numeric).abs() < 1e-9);
        }
    }

    #[test]
    fn scale_shift_applies_per_element_affine() {
        let x = Tensor::<f64>::from_vec(&[2], vec![2.0, -1.0]).unwrap();
        let w = Tensor::from_vec(&[2], vec![3.0, 0.5]).unwrap();
        let c = Tensor::from_vec(&[2], vec![0.1, -0.2]).unwrap();
        let y = scale_shift_forward(&x, &w, &c).unwrap();
        assert_eq!(y.data(), [6.1, -0.7]);
        let dy = Tensor::from_vec(&[2], vec![1.0, 2.0]).unwrap();
        let g = scale_shift_backward(&x, &w, &dy);
        assert_eq!(g.input.data(), [3.0, 1.0]);
        assert_eq!(g.w.data(), [2.0, -2.0]);
        assert_eq!(g.c.data(), dy.data());
    }
}
