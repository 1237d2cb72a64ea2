use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Pointwise nonlinearity. The leaky slope applies to negative inputs only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    LeakyRelu { negative_slope: f64 },
}

impl Activation {
    pub fn leaky(negative_slope: f64) -> Self {
        Activation::LeakyRelu { negative_slope }
    }

    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::LeakyRelu { negative_slope } => {
                if x >= T::zero() {
                    x
                } else {
                    T::of(negative_slope) * x
                }
            }
        }
    }

    /// Derivative at input `x` whose output was `y`; both are passed so each
    /// branch can use the cheaper form.
    #[inline]
    pub fn derivative<T: Scalar>(self, x: T, y: T) -> T {
        match self {
            Activation::Sigmoid => y * (T::one() - y),
            Activation::Tanh => T::one() - y * y,
            Activation::LeakyRelu { negative_slope } => {
                if x >= T::zero() {
                    T::one()
                } else {
                    T::of(negative_slope)
                }
            }
        }
    }
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

pub fn forward<T: Scalar>(input: &Tensor<T>, kind: Activation) -> Tensor<T> {
    input.map(|v| kind.apply(v))
}

/// `grad_out * f'(input)`, elementwise. `output` is the saved forward result.
pub fn backward<T: Scalar>(
    input: &Tensor<T>,
    output: &Tensor<T>,
    kind: Activation,
    grad_out: &Tensor<T>,
) -> Tensor<T> {
    let mut g = grad_out.clone();
    for ((gv, &x), &y) in g.data_mut().iter_mut().zip(input.data()).zip(output.data()) {
        *gv = *gv * kind.derivative(x, y);
    }
    g
}
