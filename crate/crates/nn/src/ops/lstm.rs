use crate::error::NnError;
use crate::ops::activation::sigmoid;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Gate order used everywhere a gate array appears.
pub const GATE_NAMES: [&str; 4] = ["forget", "input", "candidate", "output"];

/// Forward-pass intermediates a step must keep for its backward pass.
#[derive(Clone)]
pub struct LstmSaved<T> {
    pub f: Tensor<T>,
    pub i: Tensor<T>,
    pub c_bar: Tensor<T>,
    pub o: Tensor<T>,
    pub tanh_c: Tensor<T>,
}

pub struct LstmStepGrads<T> {
    pub x: Tensor<T>,
    pub h_prev: Tensor<T>,
    pub c_prev: Tensor<T>,
    pub ws: [Tensor<T>; 4],
    pub bs: [Tensor<T>; 4],
}

fn gate_preactivation<T: Scalar>(w: &Tensor<T>, b: &Tensor<T>, concat: &[T], hd: usize) -> Vec<T> {
    let width = concat.len();
    debug_assert_eq!(w.shape(), [hd, width]);
    let mut z: Vec<T> = b.data().to_vec();
    T::gemm_strided(
        hd,
        width,
        1,
        T::one(),
        w.data(),
        width as isize,
        1,
        concat,
        1,
        1,
        T::one(),
        &mut z,
    );
    z
}

/// One cell update. Every gate reads the concatenation `[x, h_prev]` through
/// its own `H x (D+H)` weight matrix:
///
/// ```text
/// f = sig(Wf [x,h] + bf)      i = sig(Wi [x,h] + bi)
/// c_bar = tanh(Wc [x,h] + bc) c = i*c_bar + f*c_prev
/// o = sig(Wo [x,h] + bo)      h = o * tanh(c)
/// ```
pub fn forward<T: Scalar>(
    x: &Tensor<T>,
    h_prev: &Tensor<T>,
    c_prev: &Tensor<T>,
    ws: [&Tensor<T>; 4],
    bs: [&Tensor<T>; 4],
) -> Result<(Tensor<T>, Tensor<T>, LstmSaved<T>), NnError> {
    let d = x.len();
    let hd = h_prev.len();
    if c_prev.len() != hd {
        return Err(NnError::Shape {
            op: "lstm_step",
            detail: format!("h_prev has {hd} units, c_prev {}", c_prev.len()),
        });
    }
    for (g, (w, b)) in ws.iter().zip(bs.iter()).enumerate() {
        if w.shape() != [hd, d + hd] || b.len() != hd {
            return Err(NnError::Shape {
                op: "lstm_step",
                detail: format!(
                    "{} gate: weight {:?}, bias {} for input {d} and {hd} units",
                    GATE_NAMES[g],
                    w.shape(),
                    b.len()
                ),
            });
        }
    }

    let mut concat = Vec::with_capacity(d + hd);
    concat.extend_from_slice(x.data());
    concat.extend_from_slice(h_prev.data());

    let zf = gate_preactivation(ws[0], bs[0], &concat, hd);
    let zi = gate_preactivation(ws[1], bs[1], &concat, hd);
    let zc = gate_preactivation(ws[2], bs[2], &concat, hd);
    let zo = gate_preactivation(ws[3], bs[3], &concat, hd);

    let f: Vec<T> = zf.iter().map(|&z| sigmoid(z)).collect();
    let i: Vec<T> = zi.iter().map(|&z| sigmoid(z)).collect();
    let c_bar: Vec<T> = zc.iter().map(|&z| z.tanh()).collect();
    let o: Vec<T> = zo.iter().map(|&z| sigmoid(z)).collect();

    let mut c = vec![T::zero(); hd];
    let mut tanh_c = vec![T::zero(); hd];
    let mut h = vec![T::zero(); hd];
    for j in 0..hd {
        c[j] = i[j] * c_bar[j] + f[j] * c_prev.data()[j];
        tanh_c[j] = c[j].tanh();
        h[j] = o[j] * tanh_c[j];
    }

    let saved = LstmSaved {
        f: Tensor::from_vec(&[hd], f)?,
        i: Tensor::from_vec(&[hd], i)?,
        c_bar: Tensor::from_vec(&[hd], c_bar)?,
        o: Tensor::from_vec(&[hd], o)?,
        tanh_c: Tensor::from_vec(&[hd], tanh_c)?,
    };
    Ok((
        Tensor::from_vec(&[hd], h)?,
        Tensor::from_vec(&[hd], c)?,
        saved,
    ))
}

/// Backward through one step given the gradients flowing into `h` and `c`.
pub fn backward<T: Scalar>(
    x: &Tensor<T>,
    h_prev: &Tensor<T>,
    c_prev: &Tensor<T>,
    ws: [&Tensor<T>; 4],
    saved: &LstmSaved<T>,
    dh: &Tensor<T>,
    dc: &Tensor<T>,
) -> LstmStepGrads<T> {
    let d = x.len();
    let hd = h_prev.len();
    let one = T::one();

    let f = saved.f.data();
    let i = saved.i.data();
    let c_bar = saved.c_bar.data();
    let o = saved.o.data();
    let tc = saved.tanh_c.data();

    // Per-unit gate pre-activation gradients.
    let mut dzf = vec![T::zero(); hd];
    let mut dzi = vec![T::zero(); hd];
    let mut dzc = vec![T::zero(); hd];
    let mut dzo = vec![T::zero(); hd];
    let mut dc_prev = vec![T::zero(); hd];
    for j in 0..hd {
        let dhj = dh.data()[j];
        let dc_total = dc.data()[j] + dhj * o[j] * (one - tc[j] * tc[j]);
        dzo[j] = dhj * tc[j] * o[j] * (one - o[j]);
        dzf[j] = dc_total * c_prev.data()[j] * f[j] * (one - f[j]);
        dzi[j] = dc_total * c_bar[j] * i[j] * (one - i[j]);
        dzc[j] = dc_total * i[j] * (one - c_bar[j] * c_bar[j]);
        dc_prev[j] = dc_total * f[j];
    }

    let mut concat = Vec::with_capacity(d + hd);
    concat.extend_from_slice(x.data());
    concat.extend_from_slice(h_prev.data());

    let mut dconcat = vec![T::zero(); d + hd];
    let mut dws: Vec<Tensor<T>> = Vec::with_capacity(4);
    let mut dbs: Vec<Tensor<T>> = Vec::with_capacity(4);
    for (g, dz) in [&dzf, &dzi, &dzc, &dzo].into_iter().enumerate() {
        // dW = dz (H x 1) @ concat^T (1 x (D+H))
        let mut dw = Tensor::zeros(&[hd, d + hd]);
        crate::scalar::matmul(hd, 1, d + hd, dz, &concat, dw.data_mut());
        dws.push(dw);
        dbs.push(Tensor::from_vec(&[hd], dz.clone()).expect("gate length"));
        // dconcat += W^T dz
        T::gemm_strided(
            d + hd,
            hd,
            1,
            T::one(),
            ws[g].data(),
            1,
            (d + hd) as isize,
            dz,
            1,
            1,
            T::one(),
            &mut dconcat,
        );
    }

    let dx = Tensor::from_vec(&[d], dconcat[..d].to_vec()).expect("split");
    let dh_prev = Tensor::from_vec(&[hd], dconcat[d..].to_vec()).expect("split");
    let dws: [Tensor<T>; 4] = dws.try_into().map_err(|_| ()).expect("four gates");
    let dbs: [Tensor<T>; 4] = dbs.try_into().map_err(|_| ()).expect("four gates");

    LstmStepGrads {
        x: dx,
        h_prev: dh_prev,
        c_prev: Tensor::from_vec(&[hd], dc_prev).expect("length"),
        ws: dws,
        bs: dbs,
    }
}
