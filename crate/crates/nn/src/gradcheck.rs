//! Central finite-difference verification of analytic gradients. Run at
//! `f64`; the truncation error of the central stencil is then far below the
//! pass tolerance.

use crate::error::NnError;
use crate::ops::{Activation, Padding};
use crate::params::ParamStore;
use crate::scalar::Scalar;
use crate::tape::{LstmParamIds, Tape, ValueId};
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Worst observed deviation for one parameter tensor.
#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub name: String,
    pub checked: usize,
    pub max_rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub rel_tol: f64,
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn max_rel_err(&self) -> f64 {
        self.entries
            .iter()
            .fold(0.0, |m, e| m.max(e.max_rel_err))
    }

    pub fn checked_elements(&self) -> usize {
        self.entries.iter().map(|e| e.checked).sum()
    }

    pub fn merge(&mut self, other: GradCheckReport) {
        self.entries.extend(other.entries);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{:<40} checked {:>4}  max rel err {:.3e}  {}\n",
                e.name,
                e.checked,
                e.max_rel_err,
                if e.pass { "ok" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "total: {} elements, max rel err {:.3e}, tolerance {:.1e}: {}\n",
            self.checked_elements(),
            self.max_rel_err(),
            self.rel_tol,
            if self.passed() { "PASS" } else { "FAIL" }
        ));
        out
    }
}

/// Compare analytic gradients against central differences for a sample of
/// elements per parameter. `eval` recomputes the loss from the (perturbed)
/// store; it must be a pure function of the store for the comparison to
/// mean anything, so any internal randomness has to be reseeded per call.
///
/// Below `abs_floor` both gradients count as zero and the element passes;
/// otherwise the relative error is measured against the larger magnitude.
pub fn check_store<T: Scalar>(
    prefix: &str,
    store: &mut ParamStore<T>,
    analytic: &[Option<Tensor<T>>],
    mut eval: impl FnMut(&ParamStore<T>) -> T,
    samples_per_param: usize,
    rng: &mut ChaCha8Rng,
    rel_tol: f64,
) -> Result<GradCheckReport, NnError> {
    if analytic.len() != store.len() {
        return Err(NnError::Shape {
            op: "gradcheck",
            detail: format!(
                "{} analytic gradients for {} parameters",
                analytic.len(),
                store.len()
            ),
        });
    }
    let abs_floor = 1e-8;
    let mut entries = Vec::new();
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    for id in ids {
        let len = store.value(id).len();
        let name = format!("{prefix}{}", store.get(id).name);
        let indices: Vec<usize> = if len <= samples_per_param {
            (0..len).collect()
        } else {
            (0..samples_per_param).map(|_| rng.gen_range(0..len)).collect()
        };
        let mut max_rel = 0.0f64;
        let mut pass = true;
        for &j in &indices {
            let x0 = store.value(id).data()[j];
            let h = T::of(1e-5 * x0.as_f64().abs().max(1.0));
            store.get_mut(id).value.data_mut()[j] = x0 + h;
            let lp = eval(store).as_f64();
            store.get_mut(id).value.data_mut()[j] = x0 - h;
            let lm = eval(store).as_f64();
            store.get_mut(id).value.data_mut()[j] = x0;
            let numeric = (lp - lm) / (2.0 * h.as_f64());
            let a = analytic[id.index()]
                .as_ref()
                .map_or(0.0, |g| g.data()[j].as_f64());
            let denom = a.abs().max(numeric.abs());
            if denom < abs_floor {
                continue;
            }
            let rel = (a - numeric).abs() / denom;
            max_rel = max_rel.max(rel);
            if rel > rel_tol {
                pass = false;
            }
        }
        entries.push(GradCheckEntry {
            name,
            checked: indices.len(),
            max_rel_err: max_rel,
            pass,
        });
    }
    Ok(GradCheckReport { rel_tol, entries })
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor<f64> {
    let data = (0..shape.iter().product::<usize>())
        .map(|_| rng.gen_range(-scale..scale))
        .collect();
    Tensor::from_vec(shape, data).expect("length matches shape")
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2u8)).collect()
}

type BuildFn = Box<dyn Fn(&ParamStore<f64>, &mut Tape<f64>) -> ValueId>;

fn check_case(
    name: &str,
    mut store: ParamStore<f64>,
    build: BuildFn,
    rng: &mut ChaCha8Rng,
    rel_tol: f64,
) -> GradCheckReport {
    let mut tape = Tape::new();
    let loss = build(&store, &mut tape);
    let analytic = tape.backward(&store, loss).expect("backward");
    let prefix = format!("{name}.");
    check_store(
        &prefix,
        &mut store,
        &analytic,
        |ps| {
            let mut t = Tape::new();
            let l = build(ps, &mut t);
            t.value(l).item()
        },
        64,
        rng,
        rel_tol,
    )
    .expect("aligned store")
}

/// Finite-difference sweep over every op the tape offers, each wired into a
/// small random network ending in the MSE loss. Returns one report entry per
/// parameter per case.
pub fn op_suite(seed: u64, rel_tol: f64) -> GradCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        rel_tol,
        entries: Vec::new(),
    };

    // Dense followed by each activation.
    for (label, act) in [
        ("dense_leaky", Activation::leaky(0.01)),
        ("dense_sigmoid", Activation::Sigmoid),
        ("dense_tanh", Activation::Tanh),
    ] {
        let mut ps = ParamStore::new();
        let w = ps.register("w", random_tensor(&mut rng, &[4, 6], 0.8)).unwrap();
        let b = ps.register("b", random_tensor(&mut rng, &[4], 0.5)).unwrap();
        let x = random_tensor(&mut rng, &[6], 1.0);
        let bits = random_bits(&mut rng, 4);
        let case = move |ps: &ParamStore<f64>, tape: &mut Tape<f64>| {
            let xi = tape.leaf(x.clone());
            let y = tape.dense(ps, xi, w, b).unwrap();
            let a = tape.activation(y, act);
            tape.mse(a, &bits, None).unwrap()
        };
        report.merge(check_case(label, ps, Box::new(case), &mut rng, rel_tol));
    }

    // Conv with both paddings, pooled and flattened.
    for (label, padding) in [("conv_same", Padding::Same), ("conv_valid", Padding::Valid)] {
        let mut ps = ParamStore::new();
        let w = ps
            .register("kernels", random_tensor(&mut rng, &[3, 3, 2, 3], 0.6))
            .unwrap();
        let bsp = ps.register("bias", random_tensor(&mut rng, &[3], 0.3)).unwrap();
        let x = random_tensor(&mut rng, &[5, 7, 2], 1.0);
        let (oh, ow) = match padding {
            Padding::Same => (5, 7),
            Padding::Valid => (3, 5),
        };
        let bits = random_bits(&mut rng, oh * ow * 3);
        let case = move |ps: &ParamStore<f64>, tape: &mut Tape<f64>| {
            let xi = tape.leaf(x.clone());
            let c = tape.conv2d(ps, xi, w, bsp, padding).unwrap();
            let a = tape.activation(c, Activation::leaky(0.01));
            let f = tape.flatten(a);
            tape.mse(f, &bits, None).unwrap()
        };
        report.merge(check_case(label, ps, Box::new(case), &mut rng, rel_tol));
    }

    // Conv into max pooling; gradient must pass the argmax routing.
    {
        let mut ps = ParamStore::new();
        let w = ps
            .register("kernels", random_tensor(&mut rng, &[3, 3, 1, 2], 0.7))
            .unwrap();
        let bsp = ps.register("bias", random_tensor(&mut rng, &[2], 0.3)).unwrap();
        let x = random_tensor(&mut rng, &[4, 6, 1], 1.0);
        let bits = random_bits(&mut rng, 2 * 2 * 2);
        let case = move |ps: &ParamStore<f64>, tape: &mut Tape<f64>| {
            let xi = tape.leaf(x.clone());
            let c = tape.conv2d(ps, xi, w, bsp, Padding::Same).unwrap();
            let a = tape.activation(c, Activation::leaky(0.01));
            let p = tape.maxpool(a, 2, 3).unwrap();
            let f = tape.flatten(p);
            tape.mse(f, &bits, None).unwrap()
        };
        report.merge(check_case("maxpool", ps, Box::new(case), &mut rng, rel_tol));
    }

    // Two chained LSTM steps; checks flow through h, c and the gate weights.
    {
        let d = 5;
        let hd = 4;
        let mut ps = ParamStore::new();
        let mut ws = Vec::new();
        let mut bs = Vec::new();
        for g in 0..4 {
            ws.push(
                ps.register(&format!("w{g}"), random_tensor(&mut rng, &[hd, d + hd], 0.6))
                    .unwrap(),
            );
            bs.push(
                ps.register(&format!("b{g}"), random_tensor(&mut rng, &[hd], 0.3))
                    .unwrap(),
            );
        }
        let params = LstmParamIds {
            ws: [ws[0], ws[1], ws[2], ws[3]],
            bs: [bs[0], bs[1], bs[2], bs[3]],
        };
        let x1 = random_tensor(&mut rng, &[d], 1.0);
        let x2 = random_tensor(&mut rng, &[d], 1.0);
        let c0v = random_tensor(&mut rng, &[hd], 0.5);
        let bits = random_bits(&mut rng, hd);
        let case = move |ps: &ParamStore<f64>, tape: &mut Tape<f64>| {
            let a = tape.leaf(x1.clone());
            let b = tape.leaf(x2.clone());
            let h0 = tape.leaf(Tensor::zeros(&[hd]));
            let c0 = tape.leaf(c0v.clone());
            let (h1, c1) = tape.lstm_step(ps, a, h0, c0, params).unwrap();
            let (h2, _c2) = tape.lstm_step(ps, b, h1, c1, params).unwrap();
            tape.mse(h2, &bits, None).unwrap()
        };
        report.merge(check_case("lstm_2step", ps, Box::new(case), &mut rng, rel_tol));
    }

    // Coding head: dense, leaky, per-element rescale, sigmoid.
    {
        let mut ps = ParamStore::new();
        let w = ps.register("w", random_tensor(&mut rng, &[5, 6], 0.7)).unwrap();
        let b = ps.register("b", random_tensor(&mut rng, &[5], 0.3)).unwrap();
        let sw = ps
            .register("scale", random_tensor(&mut rng, &[5], 1.0))
            .unwrap();
        let sc = ps
            .register("shift", random_tensor(&mut rng, &[5], 0.5))
            .unwrap();
        let x = random_tensor(&mut rng, &[6], 1.0);
        let bits = random_bits(&mut rng, 5);
        let case = move |ps: &ParamStore<f64>, tape: &mut Tape<f64>| {
            let xi = tape.leaf(x.clone());
            let y = tape.dense(ps, xi, w, b).unwrap();
            let a = tape.activation(y, Activation::leaky(0.01));
            let s = tape.scale_shift(ps, a, sw, sc).unwrap();
            let o = tape.activation(s, Activation::Sigmoid);
            tape.mse(o, &bits, None).unwrap()
        };
        report.merge(check_case("coding_head", ps, Box::new(case), &mut rng, rel_tol));
    }

    // Dropout with a reseeded mask so every evaluation sees the same draw.
    {
        let mut ps = ParamStore::new();
        let w = ps.register("w", random_tensor(&mut rng, &[6, 8], 0.7)).unwrap();
        let b = ps.register("b", random_tensor(&mut rng, &[6], 0.3)).unwrap();
        let x = random_tensor(&mut rng, &[8], 1.0);
        let bits = random_bits(&mut rng, 6);
        let case = move |ps: &ParamStore<f64>, tape: &mut Tape<f64>| {
            let mut drop_rng = ChaCha8Rng::seed_from_u64(1234);
            let xi = tape.leaf(x.clone());
            let y = tape.dense(ps, xi, w, b).unwrap();
            let d = tape.dropout(y, 0.4, &mut drop_rng).unwrap();
            tape.mse(d, &bits, None).unwrap()
        };
        report.merge(check_case("dropout", ps, Box::new(case), &mut rng, rel_tol));
    }

    // Mean of two per-step losses, the window-pooling pattern.
    {
        let mut ps = ParamStore::new();
        let w = ps.register("w", random_tensor(&mut rng, &[3, 4], 0.7)).unwrap();
        let b = ps.register("b", random_tensor(&mut rng, &[3], 0.3)).unwrap();
        let x1 = random_tensor(&mut rng, &[4], 1.0);
        let x2 = random_tensor(&mut rng, &[4], 1.0);
        let bits1 = random_bits(&mut rng, 3);
        let bits2 = random_bits(&mut rng, 3);
        let case = move |ps: &ParamStore<f64>, tape: &mut Tape<f64>| {
            let a = tape.leaf(x1.clone());
            let bviv = tape.leaf(x2.clone());
            let y1 = tape.dense(ps, a, w, b).unwrap();
            let y2 = tape.dense(ps, bviv, w, b).unwrap();
            let s1 = tape.activation(y1, Activation::Sigmoid);
            let s2 = tape.activation(y2, Activation::Sigmoid);
            let l1 = tape.mse(s1, &bits1, None).unwrap();
            let l2 = tape.mse(s2, &bits2, None).unwrap();
            tape.mean(&[l1, l2]).unwrap()
        };
        report.merge(check_case("window_mean", ps, Box::new(case), &mut rng, rel_tol));
    }

    report
}
