//! Named parameter tensors with paired gradient buffers and binary
//! checkpoints.
//!
//! Checkpoint format: one UTF-8 JSON header line mapping tensor name to
//! `[rows, cols]`, in registration order, followed by the raw little-endian
//! f64 values of each tensor in header order.

use std::fs;
use std::path::Path;

use super::{Matrix, NncoreError};

#[derive(Debug, Clone)]
struct ParamEntry {
    name: String,
    value: Matrix,
    grad: Matrix,
}

/// Collection of named parameter tensors, each with a gradient buffer, plus
/// an update-step counter shared by the optimizers.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    entries: Vec<ParamEntry>,
    step: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a tensor. Names must be unique; registration order fixes the
    /// checkpoint layout.
    pub fn register(&mut self, name: &str, value: Matrix) -> Result<(), NncoreError> {
        if self.index_of(name).is_some() {
            return Err(NncoreError::DuplicateTensor(name.to_string()));
        }
        let grad = Matrix::zeros(value.rows(), value.cols());
        self.entries.push(ParamEntry {
            name: name.to_string(),
            value,
            grad,
        });
        Ok(())
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn parameter_count(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    pub fn value(&self, name: &str) -> &Matrix {
        let i = self
            .index_of(name)
            .unwrap_or_else(|| panic!("unknown tensor '{name}'"));
        &self.entries[i].value
    }

    pub fn value_mut(&mut self, name: &str) -> &mut Matrix {
        let i = self
            .index_of(name)
            .unwrap_or_else(|| panic!("unknown tensor '{name}'"));
        &mut self.entries[i].value
    }

    pub fn grad(&self, name: &str) -> &Matrix {
        let i = self
            .index_of(name)
            .unwrap_or_else(|| panic!("unknown tensor '{name}'"));
        &self.entries[i].grad
    }

    pub fn grad_mut(&mut self, name: &str) -> &mut Matrix {
        let i = self
            .index_of(name)
            .unwrap_or_else(|| panic!("unknown tensor '{name}'"));
        &mut self.entries[i].grad
    }

    pub fn zero_grads(&mut self) {
        for e in &mut self.entries {
            e.grad.fill(0.0);
        }
    }

    /// Clones all gradient buffers in registration order.
    pub fn snapshot_grads(&self) -> Vec<Matrix> {
        self.entries.iter().map(|e| e.grad.clone()).collect()
    }

    /// Element-wise adds a gradient snapshot (same layout) into the buffers.
    pub fn accumulate_grads(&mut self, snapshot: &[Matrix]) {
        assert_eq!(snapshot.len(), self.entries.len(), "grad layout mismatch");
        for (e, s) in self.entries.iter_mut().zip(snapshot) {
            e.grad.add_assign(s);
        }
    }

    /// Clones all values in registration order (used by tests and Adam).
    pub fn snapshot_values(&self) -> Vec<Matrix> {
        self.entries.iter().map(|e| e.value.clone()).collect()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub(crate) fn bump_step(&mut self) {
        self.step += 1;
    }

    /// Iterates `(name, value, grad)` in registration order, applying `f` to
    /// each tensor. Used by the optimizers.
    pub(crate) fn for_each_entry(
        &mut self,
        mut f: impl FnMut(usize, &str, &mut Matrix, &mut Matrix) -> Result<(), NncoreError>,
    ) -> Result<(), NncoreError> {
        for (i, e) in self.entries.iter_mut().enumerate() {
            f(i, &e.name, &mut e.value, &mut e.grad)?;
        }
        Ok(())
    }

    /// Serializes all tensor values to the checkpoint byte format.
    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let mut header = serde_json::Map::new();
        for e in &self.entries {
            header.insert(
                e.name.clone(),
                serde_json::json!([e.value.rows(), e.value.cols()]),
            );
        }
        let mut bytes = serde_json::to_string(&serde_json::Value::Object(header))
            .expect("header serialization cannot fail")
            .into_bytes();
        bytes.push(b'\n');
        for e in &self.entries {
            for v in e.value.values() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        bytes
    }

    pub fn save(&self, path: &Path) -> Result<(), NncoreError> {
        fs::write(path, self.to_checkpoint_bytes())?;
        Ok(())
    }

    /// Loads values from a checkpoint into this store. The tensor names and
    /// shapes must match the store exactly.
    pub fn load_into(&mut self, path: &Path) -> Result<(), NncoreError> {
        let bytes = fs::read(path)?;
        self.load_from_bytes(&bytes)
    }

    pub fn load_from_bytes(&mut self, bytes: &[u8]) -> Result<(), NncoreError> {
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| NncoreError::CheckpointHeader("missing header line".into()))?;
        let header: serde_json::Value = serde_json::from_slice(&bytes[..newline])
            .map_err(|e| NncoreError::CheckpointHeader(e.to_string()))?;
        let header = header
            .as_object()
            .ok_or_else(|| NncoreError::CheckpointHeader("header is not an object".into()))?;

        if header.len() != self.entries.len() {
            return Err(NncoreError::CheckpointTensors(format!(
                "checkpoint has {} tensors, model has {}",
                header.len(),
                self.entries.len()
            )));
        }

        // Validate names/shapes in header order against registration order.
        let mut expected_payload = 0usize;
        for ((name, shape), e) in header.iter().zip(&self.entries) {
            if name != &e.name {
                return Err(NncoreError::CheckpointTensors(format!(
                    "tensor '{}' in checkpoint where model expects '{}'",
                    name, e.name
                )));
            }
            let dims: Vec<usize> = shape
                .as_array()
                .map(|a| a.iter().filter_map(|v| v.as_u64()).map(|v| v as usize).collect())
                .unwrap_or_default();
            if dims.len() != 2 {
                return Err(NncoreError::CheckpointHeader(format!(
                    "tensor '{name}' shape is not a [rows, cols] pair"
                )));
            }
            if (dims[0], dims[1]) != e.value.shape() {
                return Err(NncoreError::CheckpointShape {
                    tensor: name.clone(),
                    expected: e.value.shape(),
                    found: (dims[0], dims[1]),
                });
            }
            expected_payload += dims[0] * dims[1] * 8;
        }

        let payload = &bytes[newline + 1..];
        if payload.len() != expected_payload {
            return Err(NncoreError::CheckpointPayload {
                expected: expected_payload,
                found: payload.len(),
            });
        }

        let mut offset = 0usize;
        for e in &mut self.entries {
            for v in e.value.values_mut() {
                let mut raw = [0u8; 8];
                raw.copy_from_slice(&payload[offset..offset + 8]);
                *v = f64::from_le_bytes(raw);
                offset += 8;
            }
        }
        Ok(())
    }
}
