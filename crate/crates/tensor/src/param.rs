use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    /// Buffers (e.g. batch-norm running statistics) are checkpointed but
    /// never touched by the optimizer.
    pub trainable: bool,
}

/// Named parameters and buffers of one model.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.push(name.into(), value, true)
    }

    pub fn add_buffer(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.push(name.into(), value, false)
    }

    fn push(&mut self, name: String, value: Tensor, trainable: bool) -> ParamId {
        assert!(
            self.find(&name).is_none(),
            "duplicate parameter name {name:?}"
        );
        let grad = Tensor::zeros_like(&value);
        self.params.push(Param {
            name,
            value,
            grad,
            trainable,
        });
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].grad
    }

    pub(crate) fn grad_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].grad
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub(crate) fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.data_mut().fill(0.0);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.is_finite())
    }

    /// Overwrites values by name. Every stored parameter must be present
    /// with a matching shape; extra entries are rejected.
    pub fn load_named(&mut self, entries: Vec<(String, Tensor)>) -> Result<()> {
        if entries.len() != self.params.len() {
            return Err(TensorError::Checkpoint(format!(
                "checkpoint has {} entries, model has {}",
                entries.len(),
                self.params.len()
            )));
        }
        for (name, value) in entries {
            let id = self
                .find(&name)
                .ok_or_else(|| TensorError::Checkpoint(format!("unknown parameter {name:?}")))?;
            value.check_shape(self.value(id).shape())?;
            self.params[id.0].value = value;
        }
        Ok(())
    }
}
