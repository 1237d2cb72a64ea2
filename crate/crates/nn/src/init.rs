use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::distributions::{Distribution, Uniform};
use rand::Rng;

/// Uniform init in `±sqrt(6/(fan_in + fan_out))`. Draws happen in f64 so a
/// given seed produces the same sequence at both precisions, keeping the
/// pre-activations of every layer spread over both signs.
pub fn glorot_uniform<T: Scalar, R: Rng>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Tensor<T> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound);
    let data = (0..shape.iter().product::<usize>())
        .map(|_| T::of(dist.sample(rng)))
        .collect();
    Tensor::from_vec(shape, data).expect("length matches shape")
}

/// Fan counts for a conv kernel stack `K x K x Cin x F`.
pub fn conv_fans(k: usize, cin: usize, f: usize) -> (usize, usize) {
    (k * k * cin, k * k * f)
}
