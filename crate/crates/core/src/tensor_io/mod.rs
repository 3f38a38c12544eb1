// SPDX-License-Identifier: Apache-2.0
//! Weight/activation files, magnitude pruning, int8 quantization and
//! two's-complement bit-plane decomposition.

mod file;
mod planes;
mod quant;

pub use file::{DType, TensorData, TensorFile, TENSOR_MAGIC, TENSOR_VERSION};
pub use planes::{reconstruct_value, BitPlaneSet};
pub use quant::{flatten_to_matrix, prune_magnitude, quantize_i8, QuantizedTensor};
