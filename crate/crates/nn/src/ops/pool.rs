use crate::error::NnError;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Non-overlapping max pooling over `ph x pw` windows, per channel. The pool
/// extents must divide the input extents; layers that cannot guarantee this
/// are caught earlier at network-build time with the layer's name.
///
/// Returns the pooled map plus, for every output cell, the flat input index
/// of the element that won. Ties go to the first maximal element in row-major
/// window order, and the same index receives the gradient in backward.
pub fn forward<T: Scalar>(
    input: &Tensor<T>,
    ph: usize,
    pw: usize,
) -> Result<(Tensor<T>, Vec<u32>), NnError> {
    let (h, w, c) = input.dims3().map_err(|_| NnError::Shape {
        op: "maxpool",
        detail: format!("input must be rank 3 HWC, got {:?}", input.shape()),
    })?;
    if ph == 0 || pw == 0 || h % ph != 0 || w % pw != 0 {
        return Err(NnError::Shape {
            op: "maxpool",
            detail: format!("pool {ph}x{pw} does not divide input {h}x{w}"),
        });
    }
    let (oh, ow) = (h / ph, w / pw);
    let mut out = Tensor::zeros(&[oh, ow, c]);
    let mut argmax = vec![0u32; oh * ow * c];
    let data = input.data();
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut best = T::neg_infinity();
                let mut best_idx = 0usize;
                for dy in 0..ph {
                    for dx in 0..pw {
                        let iy = oy * ph + dy;
                        let ix = ox * pw + dx;
                        let idx = (iy * w + ix) * c + ch;
                        // Strict comparison keeps the first maximum on ties.
                        if data[idx] > best {
                            best = data[idx];
                            best_idx = idx;
                        }
                    }
                }
                let o = (oy * ow + ox) * c + ch;
                out.data_mut()[o] = best;
                argmax[o] = best_idx as u32;
            }
        }
    }
    Ok((out, argmax))
}

/// Route each output gradient to the input element recorded in `argmax`.
pub fn backward<T: Scalar>(
    input_shape: &[usize],
    argmax: &[u32],
    grad_out: &Tensor<T>,
) -> Tensor<T> {
    debug_assert_eq!(argmax.len(), grad_out.len());
    let mut di = Tensor::zeros(input_shape);
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        di.data_mut()[idx as usize] += g;
    }
    di
}
