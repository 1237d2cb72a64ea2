use crate::error::NnError;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Index of a parameter in its [`ParamStore`]. Ids are handed out in
/// registration order and never invalidated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A named trainable tensor plus its most recent gradient.
pub struct Param<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Option<Tensor<T>>,
}

/// Owns every trainable tensor of a model. Parameters live here rather than
/// on the tape so a window of steps can reuse them without copies and the
/// optimizer can walk them in a stable order.
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore { params: Vec::new() }
    }

    /// Register a tensor under a unique name. Duplicate names are a wiring
    /// bug, reported as a config error.
    pub fn register(&mut self, name: &str, value: Tensor<T>) -> Result<ParamId, NnError> {
        if self.params.iter().any(|p| p.name == name) {
            return Err(NnError::Config {
                detail: format!("duplicate parameter name {name:?}"),
            });
        }
        self.params.push(Param {
            name: name.to_string(),
            value,
            grad: None,
        });
        Ok(ParamId(self.params.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Param<T> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param<T> {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor<T> {
        &self.params[id.0].value
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param<T>)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (ParamId, &mut Param<T>)> {
        self.params
            .iter_mut()
            .enumerate()
            .map(|(i, p)| (ParamId(i), p))
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    /// Total element count across all parameters.
    pub fn element_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Install gradients produced by a backward pass. The vector is indexed
    /// by `ParamId`; `None` means the parameter did not appear on the tape
    /// and its gradient is zero.
    pub fn set_grads(&mut self, grads: Vec<Option<Tensor<T>>>) -> Result<(), NnError> {
        if grads.len() != self.params.len() {
            return Err(NnError::Shape {
                op: "set_grads",
                detail: format!(
                    "gradient list has {} entries for {} parameters",
                    grads.len(),
                    self.params.len()
                ),
            });
        }
        for (p, g) in self.params.iter_mut().zip(grads) {
            p.grad = g;
        }
        Ok(())
    }

    pub fn clear_grads(&mut self) {
        for p in self.params.iter_mut() {
            p.grad = None;
        }
    }

    /// Bit-exact snapshot of all values, used by tests and checkpointing.
    pub fn snapshot(&self) -> Vec<(String, Tensor<T>)> {
        self.params
            .iter()
            .map(|p| (p.name.clone(), p.value.clone()))
            .collect()
    }
}

impl<T: Scalar> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn register_rejects_duplicate_names() {
        let mut ps = ParamStore::<f32>::new();
        ps.register("w", Tensor::zeros(&[2])).unwrap();
        let r = ps.register("w", Tensor::zeros(&[2]));
        assert!(matches!(r, Err(NnError::Config { .. })));
    }

    #[test]
    fn ids_index_in_registration_order() {
        let mut ps = ParamStore::<f64>::new();
        let a = ps.register("a", Tensor::zeros(&[1])).unwrap();
        let b = ps.register("b", Tensor::zeros(&[3])).unwrap();
        assert_eq!(a.index(), 0);
        assert_eq!(b.index(), 1);
        assert_eq!(ps.id_of("b"), Some(b));
        assert_eq!(ps.element_count(), 4);
    }
}
