use crate::error::NnError;
use crate::scalar::{matmul, Scalar};
use crate::tensor::Tensor;

/// `y = W x + b` with `W: N x D` row-major, `x: D`, `b: N`.
pub fn forward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    let d = input.len();
    let (n, wd) = match weight.shape()[..] {
        [n, wd] => (n, wd),
        _ => {
            return Err(NnError::Shape {
                op: "dense",
                detail: format!("weight must be rank 2, got {:?}", weight.shape()),
            })
        }
    };
    if wd != d || bias.len() != n {
        return Err(NnError::Shape {
            op: "dense",
            detail: format!(
                "weight {n}x{wd}, input {d}, bias {}",
                bias.len()
            ),
        });
    }
    let mut out = bias.clone().into_flat();
    // y += W x: treat x as D x 1.
    T::gemm_strided(
        n,
        d,
        1,
        T::one(),
        weight.data(),
        d as isize,
        1,
        input.data(),
        1,
        1,
        T::one(),
        out.data_mut(),
    );
    Ok(out)
}

pub struct DenseGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> DenseGrads<T> {
    let d = input.len();
    let n = grad_out.len();
    debug_assert_eq!(weight.shape(), [n, d]);

    // dW = dy (N x 1) @ x^T (1 x D)
    let mut dw = Tensor::zeros(&[n, d]);
    matmul(n, 1, d, grad_out.data(), input.data(), dw.data_mut());

    // dx = W^T (D x N) @ dy (N x 1)
    let mut dx = Tensor::zeros(&[d]);
    T::gemm_strided(
        d,
        n,
        1,
        T::one(),
        weight.data(),
        1,
        d as isize,
        grad_out.data(),
        1,
        1,
        T::zero(),
        dx.data_mut(),
    );

    DenseGrads {
        input: dx,
        weight: dw,
        bias: grad_out.clone().into_flat(),
    }
}
