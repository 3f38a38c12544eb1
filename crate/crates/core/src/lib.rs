// SPDX-License-Identifier: Apache-2.0
//! Compiler and simulator for mapping sparse, 8-bit quantized weight
//! matrices onto RRAM crossbar Operation Units (OUs).
//!
//! The pipeline is:
//!
//! ```text
//! f32 weights ──prune──quantize──▶ QuantizedTensor ──bit planes──▶ BitPlaneSet
//!     ──similarity reordering + row compression──▶ CrossbarProgram
//!     ──simulate──▶ exact outputs + ExecutionTrace ──cost──▶ CostReport
//! ```
//!
//! Every stage is value-lossless: [`sim::simulate`] reproduces the dense
//! signed matrix product bit-exactly.

pub mod arith;
pub mod bits;
pub mod cost;
mod error;
pub mod matrix;
pub mod plan;
pub mod reorder;
pub mod sim;
pub mod stats;
pub mod synthetic;
pub mod tensor_io;

pub use error::{Error, Result};

/// Weight and activation bit width. Fixed at 8 throughout.
pub const BITS: usize = 8;
/// Index of the two's-complement sign plane.
pub const SIGN_PLANE: usize = BITS - 1;
