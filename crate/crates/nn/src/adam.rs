use crate::error::NnError;
use crate::params::ParamStore;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Hyperparameters for adaptive moment estimation. The defaults are the
/// usual decay rates; the learning rate owns all step sizing (the loss
/// gradient carries no rate factor).
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Optimizer state: one first- and second-moment buffer per parameter plus
/// the shared step counter.
pub struct Adam<T> {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Scalar> Adam<T> {
    /// Moment buffers are allocated lazily on the first step so the
    /// optimizer can be built before the parameter count is final.
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Apply one update using the gradients currently stored on the
    /// parameters. A parameter with no gradient is treated as having a zero
    /// gradient: its moments decay and, from a fresh state, its value is
    /// unchanged. A non-finite gradient aborts, naming the parameter.
    pub fn step(&mut self, params: &mut ParamStore<T>) -> Result<(), NnError> {
        if self.m.is_empty() {
            for (_, p) in params.iter() {
                self.m.push(Tensor::zeros(p.value.shape()));
                self.v.push(Tensor::zeros(p.value.shape()));
            }
        }
        if self.m.len() != params.len() {
            return Err(NnError::State {
                detail: format!(
                    "optimizer tracks {} parameters, store has {}",
                    self.m.len(),
                    params.len()
                ),
            });
        }
        for (id, p) in params.iter() {
            if let Some(g) = &p.grad {
                if !g.all_finite() {
                    return Err(NnError::NonFinite {
                        what: format!("gradient of {}", p.name),
                    });
                }
                if g.shape() != p.value.shape() {
                    return Err(NnError::Shape {
                        op: "adam_update",
                        detail: format!(
                            "{}: gradient {:?} vs value {:?}",
                            p.name,
                            g.shape(),
                            p.value.shape()
                        ),
                    });
                }
                let _ = id;
            }
        }

        self.step += 1;
        let b1 = T::of(self.config.beta1);
        let b2 = T::of(self.config.beta2);
        let one = T::one();
        // Bias-corrected rate folds both corrections into one scalar.
        let bc1 = 1.0 - self.config.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.config.beta2.powi(self.step as i32);
        let lr_t = T::of(self.config.lr * bc2.sqrt() / bc1);
        let eps = T::of(self.config.epsilon);
        // With the rate folded into lr_t, epsilon must be scaled to keep
        // update = lr * m_hat / (sqrt(v_hat) + eps) exact.
        let eps_hat = eps * T::of(bc2.sqrt());

        for (id, p) in params.iter_mut() {
            let idx = id.index();
            let zero;
            let g = match &p.grad {
                Some(g) => g,
                None => {
                    zero = Tensor::zeros(p.value.shape());
                    &zero
                }
            };
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            for j in 0..p.value.len() {
                let gj = g.data()[j];
                let mj = b1 * m.data()[j] + (one - b1) * gj;
                let vj = b2 * v.data()[j] + (one - b2) * gj * gj;
                m.data_mut()[j] = mj;
                v.data_mut()[j] = vj;
                p.value.data_mut()[j] = p.value.data()[j] - lr_t * mj / (vj.sqrt() + eps_hat);
            }
        }
        Ok(())
    }
}
