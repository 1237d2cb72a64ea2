use crate::error::NnError;
use crate::scalar::{matmul, matmul_nt, matmul_tn, Scalar};
use crate::tensor::Tensor;

/// Spatial padding policy for square odd-sized kernels with stride 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Zero-pad by `k/2` on every side; output keeps the input extent.
    Same,
    /// No padding; output shrinks by `k-1` per axis.
    Valid,
}

fn check_shapes<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    padding: Padding,
) -> Result<(usize, usize, usize, usize, usize, usize, usize), NnError> {
    let (h, w, cin) = input.dims3().map_err(|_| NnError::Shape {
        op: "conv2d",
        detail: format!("input must be rank 3 HWC, got {:?}", input.shape()),
    })?;
    let (k, k2, kcin, f) = match kernels.shape()[..] {
        [k, k2, kcin, f] => (k, k2, kcin, f),
        _ => {
            return Err(NnError::Shape {
                op: "conv2d",
                detail: format!("kernels must be K x K x Cin x F, got {:?}", kernels.shape()),
            })
        }
    };
    if k != k2 || k % 2 == 0 {
        return Err(NnError::Shape {
            op: "conv2d",
            detail: format!("kernels must be square with odd extent, got {k}x{k2}"),
        });
    }
    if kcin != cin {
        return Err(NnError::Shape {
            op: "conv2d",
            detail: format!("kernel input channels {kcin} vs feature map channels {cin}"),
        });
    }
    let (oh, ow) = match padding {
        Padding::Same => (h, w),
        Padding::Valid => {
            if k > h || k > w {
                return Err(NnError::Shape {
                    op: "conv2d",
                    detail: format!("valid padding needs input at least {k}x{k}, got {h}x{w}"),
                });
            }
            (h - k + 1, w - k + 1)
        }
    };
    Ok((h, w, cin, k, f, oh, ow))
}

/// Unfold the input into a `(oh*ow) x (k*k*cin)` row-major patch matrix.
/// Column order matches the flattening of the kernel's first three axes, so
/// the convolution becomes one row-major matrix product.
fn im2col<T: Scalar>(
    input: &Tensor<T>,
    k: usize,
    padding: Padding,
    oh: usize,
    ow: usize,
) -> Vec<T> {
    let (h, w, cin) = input.dims3().expect("checked rank");
    let pad = match padding {
        Padding::Same => (k / 2) as isize,
        Padding::Valid => 0,
    };
    let patch = k * k * cin;
    let mut cols = vec![T::zero(); oh * ow * patch];
    let data = input.data();
    for oy in 0..oh {
        for ox in 0..ow {
            let row = (oy * ow + ox) * patch;
            for ky in 0..k {
                let iy = oy as isize + ky as isize - pad;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..k {
                    let ix = ox as isize + kx as isize - pad;
                    if ix < 0 || ix >= w as isize {
                        continue;
                    }
                    let src = ((iy as usize * w) + ix as usize) * cin;
                    let dst = row + (ky * k + kx) * cin;
                    cols[dst..dst + cin].copy_from_slice(&data[src..src + cin]);
                }
            }
        }
    }
    cols
}

/// Scatter-add a patch-matrix gradient back onto the input grid.
fn col2im_add<T: Scalar>(
    dcols: &[T],
    h: usize,
    w: usize,
    cin: usize,
    k: usize,
    padding: Padding,
    oh: usize,
    ow: usize,
    dinput: &mut [T],
) {
    let pad = match padding {
        Padding::Same => (k / 2) as isize,
        Padding::Valid => 0,
    };
    let patch = k * k * cin;
    for oy in 0..oh {
        for ox in 0..ow {
            let row = (oy * ow + ox) * patch;
            for ky in 0..k {
                let iy = oy as isize + ky as isize - pad;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..k {
                    let ix = ox as isize + kx as isize - pad;
                    if ix < 0 || ix >= w as isize {
                        continue;
                    }
                    let dst = ((iy as usize * w) + ix as usize) * cin;
                    let src = row + (ky * k + kx) * cin;
                    for c in 0..cin {
                        dinput[dst + c] += dcols[src + c];
                    }
                }
            }
        }
    }
}

/// 2-D convolution, stride 1. Output is `oh x ow x f` HWC.
pub fn forward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &Tensor<T>,
    padding: Padding,
) -> Result<Tensor<T>, NnError> {
    let (_h, _w, cin, k, f, oh, ow) = check_shapes(input, kernels, padding)?;
    if bias.len() != f {
        return Err(NnError::Shape {
            op: "conv2d",
            detail: format!("bias length {} for {f} filters", bias.len()),
        });
    }
    let cols = im2col(input, k, padding, oh, ow);
    let patch = k * k * cin;
    let mut out = Tensor::zeros(&[oh, ow, f]);
    matmul(oh * ow, patch, f, &cols, kernels.data(), out.data_mut());
    let od = out.data_mut();
    for p in 0..oh * ow {
        for (j, &b) in bias.data().iter().enumerate() {
            od[p * f + j] += b;
        }
    }
    Ok(out)
}

pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Gradients of a conv layer. The patch matrix is rebuilt here instead of
/// being saved at forward time; it is the largest buffer the op touches.
pub fn backward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    padding: Padding,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>, NnError> {
    let (h, w, cin, k, f, oh, ow) = check_shapes(input, kernels, padding)?;
    if grad_out.shape() != [oh, ow, f] {
        return Err(NnError::Shape {
            op: "conv2d",
            detail: format!(
                "output gradient {:?} for output {:?}",
                grad_out.shape(),
                [oh, ow, f]
            ),
        });
    }
    let patch = k * k * cin;
    let cols = im2col(input, k, padding, oh, ow);

    // dW (patch x f) = cols^T (patch x P) @ dOut (P x f)
    let mut dk = Tensor::zeros(&[k, k, cin, f]);
    matmul_tn(patch, oh * ow, f, &cols, grad_out.data(), dk.data_mut());

    let mut db = Tensor::zeros(&[f]);
    for p in 0..oh * ow {
        for j in 0..f {
            db.data_mut()[j] += grad_out.data()[p * f + j];
        }
    }

    // dCols (P x patch) = dOut (P x f) @ W^T (f x patch)
    let mut dcols = vec![T::zero(); oh * ow * patch];
    matmul_nt(oh * ow, f, patch, grad_out.data(), kernels.data(), &mut dcols);

    let mut di = Tensor::zeros(&[h, w, cin]);
    col2im_add(&dcols, h, w, cin, k, padding, oh, ow, di.data_mut());

    Ok(ConvGrads {
        input: di,
        kernels: dk,
        bias: db,
    })
}
