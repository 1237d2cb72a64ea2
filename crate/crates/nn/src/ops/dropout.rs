use crate::error::NnError;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::Rng;

/// Inverted dropout. Each element independently survives with probability
/// `1 - rate`; survivors are scaled by `1/(1 - rate)` so the expectation
/// matches the input. Only used while training; inference skips the op.
///
/// Returns the masked output plus the mask itself (zeros and the scale
/// factor), which backward multiplies the gradient by.
pub fn forward<T: Scalar, R: Rng>(
    input: &Tensor<T>,
    rate: f64,
    rng: &mut R,
) -> Result<(Tensor<T>, Tensor<T>), NnError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::Config {
            detail: format!("dropout rate must be in [0, 1), got {rate}"),
        });
    }
    if rate == 0.0 {
        let mask = Tensor::filled(input.shape(), T::one());
        return Ok((input.clone(), mask));
    }
    let keep = T::of(1.0 / (1.0 - rate));
    let mut out = input.clone();
    let mut mask = Tensor::zeros(input.shape());
    for idx in 0..out.len() {
        if rng.gen::<f64>() < rate {
            out.data_mut()[idx] = T::zero();
        } else {
            out.data_mut()[idx] *= keep;
            mask.data_mut()[idx] = keep;
        }
    }
    Ok((out, mask))
}

pub fn backward<T: Scalar>(mask: &Tensor<T>, grad_out: &Tensor<T>) -> Tensor<T> {
    let mut g = grad_out.clone();
    for (gv, &m) in g.data_mut().iter_mut().zip(mask.data()) {
        *gv *= m;
    }
    g
}
