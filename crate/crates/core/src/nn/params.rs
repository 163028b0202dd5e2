//! Named parameter tensors with paired gradient buffers.

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor2;

/// One trainable tensor and its gradient accumulator. Shapes always match.
#[derive(Debug, Clone)]
pub struct Param {
    pub value: Tensor2,
    pub grad: Tensor2,
}

/// Ordered map of named parameters. Iteration follows insertion order, which
/// fixes the draw order during initialization, the update order in the
/// optimizer, and the tensor order in persisted model files.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    entries: IndexMap<String, Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a parameter with a zeroed gradient. Names must be unique.
    pub fn insert(&mut self, name: impl Into<String>, value: Tensor2) -> Result<()> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::State(format!("duplicate parameter name {name:?}")));
        }
        let grad = Tensor2::zeros(value.rows(), value.cols());
        self.entries.insert(name, Param { value, grad });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.entries.get(name)
    }

    pub fn value(&self, name: &str) -> Result<&Tensor2> {
        self.entries
            .get(name)
            .map(|p| &p.value)
            .ok_or_else(|| Error::State(format!("unknown parameter {name:?}")))
    }

    pub fn value_mut(&mut self, name: &str) -> Result<&mut Tensor2> {
        self.entries
            .get_mut(name)
            .map(|p| &mut p.value)
            .ok_or_else(|| Error::State(format!("unknown parameter {name:?}")))
    }

    pub fn grad(&self, name: &str) -> Result<&Tensor2> {
        self.entries
            .get(name)
            .map(|p| &p.grad)
            .ok_or_else(|| Error::State(format!("unknown parameter {name:?}")))
    }

    pub fn grad_mut(&mut self, name: &str) -> Result<&mut Tensor2> {
        self.entries
            .get_mut(name)
            .map(|p| &mut p.grad)
            .ok_or_else(|| Error::State(format!("unknown parameter {name:?}")))
    }

    /// `grad[name] += delta`.
    pub fn accumulate_grad(&mut self, name: &str, delta: &Tensor2) -> Result<()> {
        self.grad_mut(name)?.add_assign(delta)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_str())
    }

    pub fn zero_grads(&mut self) {
        for param in self.entries.values_mut() {
            for g in param.grad.data_mut() {
                *g = 0.0;
            }
        }
    }

    pub fn scale_grads(&mut self, s: f64) {
        for param in self.entries.values_mut() {
            param.grad.scale(s);
        }
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.values().map(|p| p.value.len()).sum()
    }
}
