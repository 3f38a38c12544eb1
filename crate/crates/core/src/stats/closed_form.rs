// SPDX-License-Identifier: Apache-2.0
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::tensor_io::BitPlaneSet;
use crate::{Error, Result, BITS};

/// Largest vector length evaluated with exact rational arithmetic; longer
/// vectors use the log-domain path.
pub const EXACT_LIMIT: usize = 60;

/// Parameters of the identical-row model: `n` random bit columns of length
/// `m`, at least `k` rows identical, weight sparsity `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityModelParams {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub p: f64,
}

impl SimilarityModelParams {
    pub fn new(m: usize, n: usize, k: usize, p: f64) -> Result<Self> {
        let params = Self { m, n, k, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidArgument("m must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument("n must be at least 2".into()));
        }
        if self.k > self.m {
            return Err(Error::InvalidArgument(format!("k = {} exceeds m = {}", self.k, self.m)));
        }
        check_probability(self.p)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")))
    }
}

/// Expected fraction of zero bits when a fraction `p` of values is zero and
/// the remaining bits are fair coins: `0.5·p + 0.5`.
pub fn zero_bit_ratio(p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(0.5 * p + 0.5)
}

/// Fraction of zero cells over all planes.
pub fn measured_zero_bit_ratio(planes: &BitPlaneSet) -> Result<f64> {
    let cells = BITS * planes.rows() * planes.cols();
    if cells == 0 {
        return Err(Error::EmptyInput);
    }
    let ones: usize = planes.planes().iter().map(|p| p.count_ones()).sum();
    Ok(1.0 - ones as f64 / cells as f64)
}

/// Probability that `n` fair bits are all equal: `1 / 2^(n-1)`.
pub fn identical_row_prob(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    Ok(0.5f64.powi(n as i32 - 1))
}

/// `P(X ≥ k)` for `X ~ Binomial(m, 1/2^(n-1))`.
///
/// Exact rational arithmetic up to [`EXACT_LIMIT`], log-domain beyond.
pub fn prob_at_least_k_identical(params: &SimilarityModelParams) -> Result<f64> {
    params.validate()?;
    let SimilarityModelParams { m, n, k, .. } = *params;
    if k == 0 {
        return Ok(1.0);
    }
    if m <= EXACT_LIMIT {
        let exact = binomial_tail_exact_identical(m, n, k);
        return Ok(exact.to_f64().unwrap_or(0.0));
    }
    let s = identical_row_prob(n)?;
    Ok(binomial_tail_log(m, k, s))
}

/// Exact `P(X ≥ k)` for `X ~ Binomial(m, 1/2^(n-1))`:
/// `Σ_{i≥k} C(m,i)·(2^(n-1) − 1)^(m−i) / 2^((n−1)·m)`.
pub fn binomial_tail_exact_identical(m: usize, n: usize, k: usize) -> BigRational {
    let half_pow = BigUint::one() << (n - 1);
    let failures = &half_pow - BigUint::one();
    let mut numer = BigUint::zero();
    let mut coeff = BigUint::one();
    for i in 0..=m {
        if i >= k {
            numer += &coeff * num_traits::pow(failures.clone(), m - i);
        }
        coeff = coeff * BigUint::from(m - i) / BigUint::from(i + 1);
    }
    let denom = BigUint::one() << ((n - 1) * m);
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// `P(X ≥ k)` for `X ~ Binomial(m, s)`, summed in the log domain.
///
/// The upper tail is summed directly, so there is no `1 − Σ` cancellation.
pub fn binomial_tail_log(m: usize, k: usize, s: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > m || s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let ln_fact = ln_factorials(m);
    let ln_s = s.ln();
    let ln_q = (-s).ln_1p();
    let terms: Vec<f64> =
        (k..=m).map(|i| ln_fact[m] - ln_fact[i] - ln_fact[m - i] + i as f64 * ln_s + (m - i) as f64 * ln_q).collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    (max + sum.ln()).exp().min(1.0)
}

fn ln_factorials(m: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=m {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

/// `P(X ≥ k)` where `X` counts all-zero rows among `m` rows of `n` bits, each
/// bit zero with probability `p` (per-row success `p^n`).
pub fn prob_all_zero_rows(m: usize, n: usize, k: usize, p: f64) -> Result<f64> {
    SimilarityModelParams::new(m, n, k, p)?;
    Ok(binomial_tail_log(m, k, p.powi(n as i32)))
}

/// `E[X] = m·p^n` all-zero rows.
pub fn expected_all_zero_rows(m: usize, n: usize, p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(m as f64 * p.powi(n as i32))
}

/// `E[X] = m·(p^n + (1−p)^n)` rows that are all-zero or all-one.
pub fn expected_identical_rows(m: usize, n: usize, p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(m as f64 * (p.powi(n as i32) + (1.0 - p).powi(n as i32)))
}

/// Smallest `m ≤ max_m` with `P(X ≥ k) ≥ target` for group size `n`.
pub fn min_length_for_probability(n: usize, k: usize, target: f64, max_m: usize) -> Result<Option<usize>> {
    check_probability(target)?;
    for m in k.max(1)..=max_m {
        let p = prob_at_least_k_identical(&SimilarityModelParams::new(m, n, k, 0.0)?)?;
        if p >= target {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn params(m: usize, n: usize, k: usize) -> SimilarityModelParams {
        SimilarityModelParams::new(m, n, k, 0.0).unwrap()
    }

    #[test]
    fn zero_bit_ratio_values() {
        assert_eq!(zero_bit_ratio(0.0).unwrap(), 0.5);
        assert_eq!(zero_bit_ratio(1.0).unwrap(), 1.0);
        assert!((zero_bit_ratio(0.6).unwrap() - 0.8).abs() < 1e-15);
        assert!(zero_bit_ratio(1.2).is_err());
        assert!(zero_bit_ratio(-0.1).is_err());
    }

    #[test]
    fn measured_ratio_edges() {
        let zeros = BitPlaneSet::from_values(&Matrix::zeros(3, 4));
        assert_eq!(measured_zero_bit_ratio(&zeros).unwrap(), 1.0);
        let minus_one = BitPlaneSet::from_values(&Matrix::from_vec(1, 1, vec![-1i8]).unwrap());
        assert_eq!(measured_zero_bit_ratio(&minus_one).unwrap(), 0.0);
        let empty = BitPlaneSet::from_values(&Matrix::zeros(0, 0));
        assert!(measured_zero_bit_ratio(&empty).is_err());
    }

    #[test]
    fn identical_row_prob_values() {
        assert_eq!(identical_row_prob(2).unwrap(), 0.5);
        assert_eq!(identical_row_prob(3).unwrap(), 0.25);
        assert_eq!(identical_row_prob(9).unwrap(), 1.0 / 256.0);
        assert!(identical_row_prob(1).is_err());
    }

    #[test]
    fn tail_examples() {
        // Oracle: Σ_{i≥7} C(14,i) / 2^14 = 9908 / 16384.
        let c = |n: u64, k: u64| (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1));
        let numer: u64 = (7..=14).map(|i| c(14, i)).sum();
        assert_eq!(numer, 9908);
        let expected = numer as f64 / 16384.0;
        let got = prob_at_least_k_identical(&params(14, 2, 7)).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.6047).abs() < 5e-5);

        assert_eq!(prob_at_least_k_identical(&params(14, 2, 0)).unwrap(), 1.0);
        assert_eq!(prob_at_least_k_identical(&params(4, 2, 4)).unwrap(), 1.0 / 16.0);
    }

    #[test]
    fn exact_and_log_paths_agree() {
        for m in 1..=EXACT_LIMIT {
            for n in 2..=5 {
                for k in 1..=m {
                    let exact = binomial_tail_exact_identical(m, n, k).to_f64().unwrap();
                    let log = binomial_tail_log(m, k, identical_row_prob(n).unwrap());
                    if exact > 0.0 {
                        let rel = ((log - exact) / exact).abs();
                        assert!(rel < 1e-12, "m={m} n={n} k={k}: {exact} vs {log} (rel {rel:e})");
                    }
                }
            }
        }
    }

    #[test]
    fn large_m_is_finite() {
        let p = prob_at_least_k_identical(&params(1024, 2, 512)).unwrap();
        assert!(p > 0.5 && p < 0.52, "{p}");
        let p = prob_at_least_k_identical(&params(1024, 4, 512)).unwrap();
        assert!((0.0..1e-100).contains(&p));
    }

    #[test]
    fn all_zero_row_examples() {
        assert_eq!(prob_all_zero_rows(8, 2, 3, 1.0).unwrap(), 1.0);
        assert_eq!(prob_all_zero_rows(8, 2, 8, 1.0).unwrap(), 1.0);
        assert_eq!(prob_all_zero_rows(8, 2, 1, 0.0).unwrap(), 0.0);
        // Oracle: 1 − 0.36^8 − 8·0.64·0.36^7.
        let expected = 1.0 - 0.36f64.powi(8) - 8.0 * 0.64 * 0.36f64.powi(7);
        let got = prob_all_zero_rows(8, 2, 2, 0.8).unwrap();
        assert!((got - expected).abs() < 1e-13, "{got} vs {expected}");
        assert!((expected_all_zero_rows(10, 2, 0.5).unwrap() - 2.5).abs() < 1e-15);
        assert!((expected_identical_rows(10, 2, 0.5).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_params() {
        assert!(SimilarityModelParams::new(0, 2, 0, 0.5).is_err());
        assert!(SimilarityModelParams::new(4, 1, 0, 0.5).is_err());
        assert!(SimilarityModelParams::new(4, 2, 5, 0.5).is_err());
        assert!(SimilarityModelParams::new(4, 2, 1, 1.5).is_err());
    }

    #[test]
    fn required_length_grows_with_group_size() {
        let lengths: Vec<usize> =
            (2..=5).map(|n| min_length_for_probability(n, 7, 0.5, 400).unwrap().unwrap()).collect();
        assert!(lengths.windows(2).all(|w| w[0] <= w[1]), "{lengths:?}");
        assert_eq!(lengths[0], 13);
    }
}
