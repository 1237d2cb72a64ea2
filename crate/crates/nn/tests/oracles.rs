//! Independent reference implementations (straight scalar loops, textbook
//! update formulas) frozen against the engine's vectorized paths.

use coact_nn::ops::activation::sigmoid;
use coact_nn::ops::{lstm, Activation};
use coact_nn::{Adam, AdamConfig, ParamStore, Tape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Direct per-unit transcription of the cell equations, no matrix algebra.
#[allow(clippy::too_many_arguments)]
fn lstm_scalar_reference(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    ws: &[Vec<f64>; 4],
    bs: &[Vec<f64>; 4],
    hd: usize,
) -> (Vec<f64>, Vec<f64>) {
    let d = x.len();
    let width = d + hd;
    let mut concat = Vec::with_capacity(width);
    concat.extend_from_slice(x);
    concat.extend_from_slice(h_prev);
    let gate = |w: &Vec<f64>, b: &Vec<f64>, j: usize| -> f64 {
        let mut z = b[j];
        for (k, &cv) in concat.iter().enumerate() {
            z += w[j * width + k] * cv;
        }
        z
    };
    let mut h = vec![0.0; hd];
    let mut c = vec![0.0; hd];
    for j in 0..hd {
        let f = 1.0 / (1.0 + (-gate(&ws[0], &bs[0], j)).exp());
        let i = 1.0 / (1.0 + (-gate(&ws[1], &bs[1], j)).exp());
        let c_bar = gate(&ws[2], &bs[2], j).tanh();
        let o = 1.0 / (1.0 + (-gate(&ws[3], &bs[3], j)).exp());
        c[j] = i * c_bar + f * c_prev[j];
        h[j] = o * c[j].tanh();
    }
    (h, c)
}

#[test]
fn lstm_step_matches_scalar_equations_over_100_random_calls() {
    let mut rng = ChaCha8Rng::seed_from_u64(8850);
    let d = 5;
    let hd = 8;
    for call in 0..100 {
        let ws_raw: [Vec<f64>; 4] =
            std::array::from_fn(|_| random_vec(&mut rng, hd * (d + hd), 1.2));
        let bs_raw: [Vec<f64>; 4] = std::array::from_fn(|_| random_vec(&mut rng, hd, 0.8));
        let x = random_vec(&mut rng, d, 2.0);
        let h_prev = random_vec(&mut rng, hd, 1.0);
        let c_prev = random_vec(&mut rng, hd, 2.0);

        let ws_t: Vec<Tensor<f64>> = ws_raw
            .iter()
            .map(|w| Tensor::from_vec(&[hd, d + hd], w.clone()).unwrap())
            .collect();
        let bs_t: Vec<Tensor<f64>> = bs_raw
            .iter()
            .map(|b| Tensor::from_vec(&[hd], b.clone()).unwrap())
            .collect();
        let xt = Tensor::from_vec(&[d], x.clone()).unwrap();
        let ht = Tensor::from_vec(&[hd], h_prev.clone()).unwrap();
        let ct = Tensor::from_vec(&[hd], c_prev.clone()).unwrap();

        let (h_fast, c_fast, _) = lstm::forward(
            &xt,
            &ht,
            &ct,
            [&ws_t[0], &ws_t[1], &ws_t[2], &ws_t[3]],
            [&bs_t[0], &bs_t[1], &bs_t[2], &bs_t[3]],
        )
        .unwrap();
        let (h_ref, c_ref) = lstm_scalar_reference(&x, &h_prev, &c_prev, &ws_raw, &bs_raw, hd);
        for j in 0..hd {
            assert!(
                (h_fast.data()[j] - h_ref[j]).abs() < 1e-10,
                "call {call} h[{j}]: {} vs {}",
                h_fast.data()[j],
                h_ref[j]
            );
            assert!(
                (c_fast.data()[j] - c_ref[j]).abs() < 1e-10,
                "call {call} c[{j}]: {} vs {}",
                c_fast.data()[j],
                c_ref[j]
            );
        }
    }
}

/// Textbook Adam on one scalar: explicit m-hat/v-hat bias correction.
struct ScalarAdamReference {
    m: f64,
    v: f64,
    t: u32,
    lr: f64,
}

impl ScalarAdamReference {
    fn step(&mut self, x: f64, g: f64) -> f64 {
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        self.t += 1;
        self.m = b1 * self.m + (1.0 - b1) * g;
        self.v = b2 * self.v + (1.0 - b2) * g * g;
        let m_hat = self.m / (1.0 - b1.powi(self.t as i32));
        let v_hat = self.v / (1.0 - b2.powi(self.t as i32));
        x - self.lr * m_hat / (v_hat.sqrt() + eps)
    }
}

#[test]
fn adam_trajectory_matches_scalar_reference_on_quadratic() {
    let mut ps = ParamStore::<f64>::new();
    let id = ps.register("x", Tensor::scalar(1.0)).unwrap();
    let mut opt = Adam::new(AdamConfig {
        lr: 0.1,
        ..Default::default()
    });
    let mut reference = ScalarAdamReference {
        m: 0.0,
        v: 0.0,
        t: 0,
        lr: 0.1,
    };
    let mut x_ref = 1.0f64;
    for step in 0..10 {
        let x = ps.value(id).item();
        ps.get_mut(id).grad = Some(Tensor::scalar(2.0 * x));
        opt.step(&mut ps).unwrap();
        x_ref = reference.step(x_ref, 2.0 * x_ref);
        let x_new = ps.value(id).item();
        assert!(
            (x_new - x_ref).abs() < 1e-10,
            "step {step}: engine {x_new} vs reference {x_ref}"
        );
    }
}

#[test]
fn adam_update_direction_is_invariant_to_loss_rescale() {
    // Same network, losses L and 17.3 * L: first-update sign patterns match.
    let build = |scale: f64| -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(31337);
        let mut ps = ParamStore::<f64>::new();
        let w = ps
            .register(
                "w",
                Tensor::from_vec(&[3, 4], random_vec(&mut rng, 12, 0.8)).unwrap(),
            )
            .unwrap();
        let b = ps
            .register(
                "b",
                Tensor::from_vec(&[3], random_vec(&mut rng, 3, 0.4)).unwrap(),
            )
            .unwrap();
        let before = ps.snapshot();
        let x = Tensor::from_vec(&[4], random_vec(&mut rng, 4, 1.0)).unwrap();
        let mut tape = Tape::new();
        let xi = tape.leaf(x);
        let y = tape.dense(&ps, xi, w, b).unwrap();
        let s = tape.activation(y, Activation::Sigmoid);
        let l = tape.mse(s, &[1, 0, 1], None).unwrap();
        let mut grads = tape.backward(&ps, l).unwrap();
        for g in grads.iter_mut().flatten() {
            g.scale_assign(scale);
        }
        ps.set_grads(grads).unwrap();
        let mut opt = Adam::new(AdamConfig::default());
        opt.step(&mut ps).unwrap();
        let mut deltas = Vec::new();
        for ((_, p), (_, old)) in ps.iter().zip(before.iter()) {
            for (a, bb) in p.value.data().iter().zip(old.data()) {
                deltas.push(a - bb);
            }
        }
        deltas
    };
    let base = build(1.0);
    let scaled = build(17.3);
    assert_eq!(base.len(), scaled.len());
    for (idx, (a, b)) in base.iter().zip(&scaled).enumerate() {
        assert!(
            (a.signum() - b.signum()).abs() < f64::EPSILON || (a.abs() < 1e-12 && b.abs() < 1e-12),
            "delta {idx}: {a} vs {b}"
        );
    }
}

#[test]
fn forward_and_update_are_bit_identical_across_runs() {
    let run = || -> (Vec<f32>, Vec<f32>) {
        let mut rng = ChaCha8Rng::seed_from_u64(555);
        let mut ps = ParamStore::<f32>::new();
        let w = ps
            .register(
                "w",
                coact_nn::init::glorot_uniform(&[4, 6], 6, 4, &mut rng),
            )
            .unwrap();
        let b = ps.register("b", Tensor::zeros(&[4])).unwrap();
        let x: Vec<f32> = (0..6).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        let mut tape = Tape::new();
        let xi = tape.leaf(Tensor::from_vec(&[6], x).unwrap());
        let y = tape.dense(&ps, xi, w, b).unwrap();
        let s = tape.activation(y, Activation::Sigmoid);
        let forward = tape.value(s).data().to_vec();
        let l = tape.mse(s, &[1, 0, 0, 1], None).unwrap();
        let grads = tape.backward(&ps, l).unwrap();
        ps.set_grads(grads).unwrap();
        let mut opt = Adam::new(AdamConfig::default());
        opt.step(&mut ps).unwrap();
        (forward, ps.value(w).data().to_vec())
    };
    let (f1, w1) = run();
    let (f2, w2) = run();
    assert_eq!(f1, f2);
    assert_eq!(w1, w2);
}

#[test]
fn mse_gradient_matches_central_differences_at_20_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for _ in 0..20 {
        let n = rng.gen_range(2..24);
        let o = Tensor::from_vec(&[n], random_vec(&mut rng, n, 1.5)).unwrap();
        let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let g = coact_nn::ops::loss::mse_backward(&o, &bits, None, 1.0);
        let h = 1e-6;
        for j in 0..n {
            let mut p = o.clone();
            p.data_mut()[j] += h;
            let mut m = o.clone();
            m.data_mut()[j] -= h;
            let lp = coact_nn::ops::loss::mse_forward(&p, &bits, None).unwrap().item();
            let lm = coact_nn::ops::loss::mse_forward(&m, &bits, None).unwrap().item();
            let numeric = (lp - lm) / (2.0 * h);
            let a = g.data()[j];
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            assert!(
                ((a - numeric).abs() / denom) < 1e-6,
                "grad[{j}]: {a} vs {numeric}"
            );
        }
    }
}

#[test]
fn gate_saturation_stays_bounded_for_extreme_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = 4;
    let hd = 6;
    for _ in 0..20 {
        let ws: Vec<Tensor<f64>> = (0..4)
            .map(|_| Tensor::from_vec(&[hd, d + hd], random_vec(&mut rng, hd * (d + hd), 50.0)).unwrap())
            .collect();
        let bs: Vec<Tensor<f64>> = (0..4)
            .map(|_| Tensor::from_vec(&[hd], random_vec(&mut rng, hd, 20.0)).unwrap())
            .collect();
        let x = Tensor::from_vec(&[d], random_vec(&mut rng, d, 100.0)).unwrap();
        let h0 = Tensor::from_vec(&[hd], random_vec(&mut rng, hd, 1.0)).unwrap();
        let c0 = Tensor::from_vec(&[hd], random_vec(&mut rng, hd, 5.0)).unwrap();
        let (h, _, saved) = lstm::forward(
            &x,
            &h0,
            &c0,
            [&ws[0], &ws[1], &ws[2], &ws[3]],
            [&bs[0], &bs[1], &bs[2], &bs[3]],
        )
        .unwrap();
        assert!(h.data().iter().all(|v| v.abs() < 1.0 && v.is_finite()));
        for g in [&saved.f, &saved.i, &saved.o] {
            assert!(g.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
    // sigmoid saturates cleanly rather than overflowing
    assert_eq!(sigmoid(1e4f64), 1.0);
    assert_eq!(sigmoid(-1e4f64), 0.0);
}
