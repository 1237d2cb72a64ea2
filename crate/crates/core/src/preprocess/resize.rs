use coact_nn::Tensor;

/// Bilinear resample of a single-channel map with corner alignment: the
/// first and last samples of each axis map onto each other, so resizing to
/// the same extent is the identity.
pub fn bilinear(input: &Tensor<f64>, oh: usize, ow: usize) -> Tensor<f64> {
    let (ih, iw) = match input.shape() {
        [h, w] => (*h, *w),
        [h, w, 1] => (*h, *w),
        other => panic!("bilinear expects a single-channel map, got {other:?}"),
    };
    let mut out = Tensor::zeros(&[oh, ow]);
    let sy = if oh > 1 {
        (ih - 1) as f64 / (oh - 1) as f64
    } else {
        0.0
    };
    let sx = if ow > 1 {
        (iw - 1) as f64 / (ow - 1) as f64
    } else {
        0.0
    };
    let at = |y: usize, x: usize| input.data()[y * iw + x];
    for oy in 0..oh {
        let fy = oy as f64 * sy;
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(ih - 1);
        let ty = fy - y0 as f64;
        for ox in 0..ow {
            let fx = ox as f64 * sx;
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(iw - 1);
            let tx = fx - x0 as f64;
            let top = at(y0, x0) * (1.0 - tx) + at(y0, x1) * tx;
            let bottom = at(y1, x0) * (1.0 - tx) + at(y1, x1) * tx;
            out.data_mut()[oy * ow + ox] = top * (1.0 - ty) + bottom * ty;
        }
    }
    out
}
