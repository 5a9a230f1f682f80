//! In-memory set of named tensors, the unit of (de)serialization.
//!
//! Every tensor a model owns — float weights, int8 weights, int32 biases,
//! batch-norm statistics — lives in a [`WeightStore`] under a canonical
//! dotted layer path (`c1.conv.weight`, `b2.u0.fat.bias`, ...). Insertion
//! order is preserved and is the payload order of the container format.

use indexmap::IndexMap;

use crate::error::{CoreError, Result};
use crate::quant::QuantParams;

/// Tensor payload in one of the three supported dtypes.
#[derive(Clone, Debug, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    I8(Vec<i8>),
    I32(Vec<i32>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::I8(v) => v.len(),
            TensorData::I32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Payload size in bytes.
    pub fn byte_len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len() * 4,
            TensorData::I8(v) => v.len(),
            TensorData::I32(v) => v.len() * 4,
        }
    }
}

/// A named tensor's shape, payload, and optional quantization parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredTensor {
    pub dims: Vec<usize>,
    pub data: TensorData,
    pub quant: Option<QuantParams>,
}

impl StoredTensor {
    pub fn f32(dims: Vec<usize>, data: Vec<f32>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self { dims, data: TensorData::F32(data), quant: None }
    }

    pub fn i8(dims: Vec<usize>, data: Vec<i8>, quant: QuantParams) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self { dims, data: TensorData::I8(data), quant: Some(quant) }
    }

    pub fn i32(dims: Vec<usize>, data: Vec<i32>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self { dims, data: TensorData::I32(data), quant: None }
    }

    /// Zero-size marker tensor carrying only quantization parameters, used
    /// to record the calibrated range of an activation edge.
    pub fn quant_marker(quant: QuantParams) -> Self {
        Self { dims: vec![0], data: TensorData::I8(Vec::new()), quant: Some(quant) }
    }
}

/// Named tensors in canonical order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightStore {
    tensors: IndexMap<String, StoredTensor>,
}

impl WeightStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: StoredTensor) -> Result<()> {
        let name = name.into();
        if self.tensors.contains_key(&name) {
            return Err(CoreError::Container(format!("duplicate tensor name `{name}`")));
        }
        self.tensors.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&StoredTensor> {
        self.tensors.get(name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &StoredTensor)> {
        self.tensors.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    /// Total number of scalar values across all tensors.
    pub fn num_scalars(&self) -> u64 {
        self.tensors.values().map(|t| t.data.len() as u64).sum()
    }

    /// Fetches an f32 tensor, checking its shape.
    pub fn f32_tensor(&self, name: &str, dims: &[usize]) -> Result<Vec<f32>> {
        let t = self
            .tensors
            .get(name)
            .ok_or_else(|| CoreError::MissingTensor(name.to_string()))?;
        if t.dims != dims {
            return Err(CoreError::ShapeMismatch(format!(
                "tensor `{name}`: expected dims {dims:?}, got {:?}",
                t.dims
            )));
        }
        match &t.data {
            TensorData::F32(v) => Ok(v.clone()),
            _ => Err(CoreError::Container(format!("tensor `{name}` is not f32"))),
        }
    }

    /// Fetches an i8 tensor with its quantization parameters.
    pub fn i8_tensor(&self, name: &str, dims: &[usize]) -> Result<(Vec<i8>, QuantParams)> {
        let t = self
            .tensors
            .get(name)
            .ok_or_else(|| CoreError::MissingTensor(name.to_string()))?;
        if t.dims != dims {
            return Err(CoreError::ShapeMismatch(format!(
                "tensor `{name}`: expected dims {dims:?}, got {:?}",
                t.dims
            )));
        }
        let quant = t
            .quant
            .ok_or_else(|| CoreError::Container(format!("tensor `{name}` lacks quant params")))?;
        match &t.data {
            TensorData::I8(v) => Ok((v.clone(), quant)),
            _ => Err(CoreError::Container(format!("tensor `{name}` is not i8"))),
        }
    }

    /// Fetches an i32 tensor.
    pub fn i32_tensor(&self, name: &str, dims: &[usize]) -> Result<Vec<i32>> {
        let t = self
            .tensors
            .get(name)
            .ok_or_else(|| CoreError::MissingTensor(name.to_string()))?;
        if t.dims != dims {
            return Err(CoreError::ShapeMismatch(format!(
                "tensor `{name}`: expected dims {dims:?}, got {:?}",
                t.dims
            )));
        }
        match &t.data {
            TensorData::I32(v) => Ok(v.clone()),
            _ => Err(CoreError::Container(format!("tensor `{name}` is not i32"))),
        }
    }

    /// Quantization parameters of a zero-size activation marker.
    pub fn quant_params(&self, name: &str) -> Result<QuantParams> {
        let t = self
            .tensors
            .get(name)
            .ok_or_else(|| CoreError::MissingTensor(name.to_string()))?;
        t.quant
            .ok_or_else(|| CoreError::Container(format!("tensor `{name}` lacks quant params")))
    }
}
