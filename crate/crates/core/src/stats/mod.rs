// SPDX-License-Identifier: Apache-2.0
//! Bit-level sparsity and similarity statistics, closed form and Monte-Carlo.

mod closed_form;
mod monte_carlo;

pub use closed_form::{
    binomial_tail_exact_identical, binomial_tail_log, expected_all_zero_rows, expected_identical_rows,
    identical_row_prob, measured_zero_bit_ratio, min_length_for_probability, prob_all_zero_rows,
    prob_at_least_k_identical, zero_bit_ratio, SimilarityModelParams, EXACT_LIMIT,
};
pub use monte_carlo::{
    monte_carlo_all_zero_rows, monte_carlo_identical_rows, monte_carlo_uniform_rows, MeanEstimate, ProbabilityEstimate,
    MC_CHUNKS,
};
