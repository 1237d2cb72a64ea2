//! Whole-network gradient verification: every parameter of a three-branch
//! model, through a two-second window with recurrence, against central
//! finite differences. Complements the per-op suite in the engine crate.

use crate::error::CoactError;
use crate::model::network::{run_window, Network, SecondInputs};
use crate::model::presets;
use crate::model::NetworkConfig;
use coact_nn::gradcheck::{check_store, GradCheckReport};
use coact_nn::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_window(
    config: &NetworkConfig,
    seconds: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<SecondInputs<f64>>, Vec<Vec<u8>>) {
    let inputs = (0..seconds)
        .map(|_| {
            let mut s = SecondInputs::default();
            for branch in &config.branches {
                let len: usize = branch.conv.input.iter().product();
                let data: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
                s.set(
                    branch.modality,
                    Tensor::from_vec(&branch.conv.input, data).unwrap(),
                );
            }
            s
        })
        .collect();
    let targets = (0..seconds)
        .map(|_| {
            (0..config.activity_count)
                .map(|_| rng.gen_range(0..2) as u8)
                .collect()
        })
        .collect();
    (inputs, targets)
}

/// Check every parameter of a small three-branch network over a two-second
/// window (so gradients flow through both LSTM levels across time) against
/// central differences at 64-bit.
pub fn full_model_check(seed: u64, rel_tol: f64) -> Result<GradCheckReport, CoactError> {
    let net: Network<f64> = Network::build(presets::tiny_multimodal(4), seed)?;
    let Network {
        config,
        params: mut store,
        ids,
        state,
        ..
    } = net;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (inputs, targets) = random_window(&config, 2, &mut rng);

    let run = run_window(
        &config,
        &ids,
        &store,
        &state,
        &inputs,
        Some(&targets),
        None,
        None,
    )?;
    let loss_id = run.loss.expect("targets provided");
    let mut tape = run.tape;
    let analytic = tape.backward(&store, loss_id)?;

    let eval = |ps: &coact_nn::ParamStore<f64>| {
        let run = run_window(
            &config,
            &ids,
            ps,
            &state,
            &inputs,
            Some(&targets),
            None,
            None,
        )
        .expect("forward on perturbed parameters");
        let loss_id = run.loss.expect("targets provided");
        run.tape.value(loss_id).item()
    };
    let report = check_store("model", &mut store, &analytic, eval, 2, &mut rng, rel_tol)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_model_gradients_match_finite_differences() {
        let report = full_model_check(0, 1e-4).unwrap();
        assert!(report.passed(), "\n{}", report.render());
        assert!(report.checked_elements() > 50);
        // Every parameter appears in the report.
        assert!(report.entries.iter().any(|e| e.name.contains("depth.conv1.w")));
        assert!(report.entries.iter().any(|e| e.name.contains("l2.w_forget")));
        assert!(report.entries.iter().any(|e| e.name.contains("coding.scale.w")));
    }
}
