//! Closed-form read/space bounds, the defining forward map, and its
//! explicit inverse.
//!
//! All sum and output arithmetic uses arbitrary-precision integers; element
//! widths bound only the input domain, never intermediate values.

use crate::bits::ceil_log2;
use crate::model::{InputInstance, OutputVector};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    /// Reconstruction needs at least two output cells.
    #[error("reconstruction requires at least 2 output values, got {0}")]
    TooShort(usize),
    /// The output-sum is not divisible by n-1, so no valid input maps to
    /// this vector.
    #[error("output sum {sum} is not divisible by {divisor}: not a valid output vector")]
    NotDivisible { sum: BigInt, divisor: u64 },
    /// A recovered element falls outside the declared `[0, 2^d - 1]` domain.
    #[error("recovered element {value} at index {index} is outside [0, 2^{d} - 1]")]
    OutOfDomain { index: usize, value: BigInt, d: u32 },
}

/// The defining map: `out[i] = S - in[i]` where `S` is the total input sum.
///
/// This is the independent oracle every other module is checked against, so
/// it stays a direct transcription of the definition.
pub fn forward_map(instance: &InputInstance) -> OutputVector {
    let total: BigInt = instance.values().map(BigInt::from).sum();
    let values = instance
        .values()
        .map(|v| &total - BigInt::from(v))
        .collect();
    OutputVector { values }
}

/// Invert [`forward_map`]: recover the input elements from an output vector.
///
/// `sum(out) = (n-1) * S`, so `S = sum(out) / (n-1)` and each element is
/// `S - out[i]`. The division must be exact; arbitrary integer vectors need
/// not be valid outputs. When `d` is supplied the recovered elements are
/// also checked against `[0, 2^d - 1]`.
pub fn reconstruct(out: &[BigInt], d: Option<u32>) -> Result<Vec<BigInt>, FormulaError> {
    let n = out.len();
    if n < 2 {
        return Err(FormulaError::TooShort(n));
    }
    let sum_out: BigInt = out.iter().sum();
    let divisor = BigInt::from(n as u64 - 1);
    let (total, rem) = num_integer_div_rem(&sum_out, &divisor);
    if !rem.is_zero() {
        return Err(FormulaError::NotDivisible {
            sum: sum_out,
            divisor: n as u64 - 1,
        });
    }
    let elements: Vec<BigInt> = out.iter().map(|o| &total - o).collect();
    if let Some(d) = d {
        let max = (BigInt::from(1u8) << d) - 1;
        for (index, value) in elements.iter().enumerate() {
            if value.is_negative() || value > &max {
                return Err(FormulaError::OutOfDomain {
                    index,
                    value: value.clone(),
                    d,
                });
            }
        }
    }
    Ok(elements)
}

fn num_integer_div_rem(a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
    (a / b, a % b)
}

/// Both sides of the output-sum identity `sum(out) == (n-1) * S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputSumIdentity {
    pub sum_out: BigInt,
    pub total: BigInt,
    pub holds: bool,
}

pub fn output_sum_identity(instance: &InputInstance) -> OutputSumIdentity {
    let out = forward_map(instance);
    let sum_out: BigInt = out.values.iter().sum();
    let total: BigInt = instance.values().map(BigInt::from).sum();
    let holds = sum_out == BigInt::from(instance.n() as u64 - 1) * &total;
    OutputSumIdentity {
        sum_out,
        total,
        holds,
    }
}

/// Minimum element reads before the earliest final write: `n - 1`.
pub fn first_pass_bound(n: u64) -> u64 {
    n.saturating_sub(1)
}

/// Minimum element reads from the earliest final write on: `n - floor(t/d)`.
/// May be negative (vacuous) once the memory budget covers the whole input.
pub fn second_pass_bound_raw(n: u64, d: u32, t: u64) -> i128 {
    n as i128 - (t / d as u64) as i128
}

/// Bit form of the second-pass bound: `n*d - t`.
pub fn second_pass_bound_bits(n: u64, d: u32, t: u64) -> i128 {
    n as i128 * d as i128 - t as i128
}

/// Minimum total element reads: `2n - 1 - floor(t/d)`.
pub fn total_bound(n: u64, d: u32, t: u64) -> i128 {
    2 * n as i128 - 1 - (t / d as u64) as i128
}

/// Bits needed to hold the running total of `n` `d`-bit elements:
/// `d + ceil(log2 n)`, with `ceil(log2 1) = 0`.
pub fn standard_memory_bits(n: u64, d: u32) -> u64 {
    d as u64 + ceil_log2(n as u128) as u64
}

/// Reads by which the counter-optimized algorithm exceeds the total bound
/// when run at its natural memory size: `floor(ceil(log2 n) / d)`.
pub fn read_gap(n: u64, d: u32) -> u64 {
    ceil_log2(n as u128) as u64 / d as u64
}

/// Exact check of `ceil(n - t/d) == n - floor(t/d)`.
///
/// The left side is evaluated as `ceil((n*d - t) / d)` in integer
/// arithmetic, which equals the exact rational ceiling for `d > 0`.
pub fn floor_ceiling_identity(n: u64, t: u64, d: u32) -> bool {
    let numerator = n as i128 * d as i128 - t as i128;
    let lhs = div_ceil_i128(numerator, d as i128);
    let rhs = n as i128 - (t / d as u64) as i128;
    lhs == rhs
}

fn div_ceil_i128(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    if a >= 0 {
        (a + b - 1) / b
    } else {
        // truncating division already rounds negative quotients up
        a / b
    }
}

/// Every bound from one parameter point, ready for table output.
///
/// `second_pass_bound` is clamped at zero for presentation; the raw value is
/// kept alongside so a vacuous bound is visible rather than hidden.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct BoundsReport {
    pub n: u64,
    pub d: u32,
    pub t: u64,
    pub first_pass_bound: u64,
    pub second_pass_bound_raw: i64,
    pub second_pass_bound: u64,
    pub total_bound: i64,
    pub standard_memory_bits: u64,
    pub read_gap: u64,
    /// Reads of the plain two-pass algorithm (`2n`), on rows that compare
    /// against implemented algorithms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_reads: Option<u64>,
    /// Reads of the counter-optimized algorithm (`2n - 1`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimized_reads: Option<u64>,
    /// `2n - total_bound`: total-read slack of the plain algorithm.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_gap: Option<i64>,
    /// `(n-1) - second_pass_bound_raw`: slack of the optimized algorithm's
    /// write-phase reads against the second-pass bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimized_gap: Option<i64>,
}

impl BoundsReport {
    pub fn new(n: u64, d: u32, t: u64) -> Self {
        let raw = second_pass_bound_raw(n, d, t);
        BoundsReport {
            n,
            d,
            t,
            first_pass_bound: first_pass_bound(n),
            second_pass_bound_raw: raw as i64,
            second_pass_bound: raw.max(0) as u64,
            total_bound: total_bound(n, d, t) as i64,
            standard_memory_bits: standard_memory_bits(n, d),
            read_gap: read_gap(n, d),
            standard_reads: None,
            optimized_reads: None,
            standard_gap: None,
            optimized_gap: None,
        }
    }

    /// Row at the natural memory size `t = d + ceil(log2 n)`, annotated with
    /// the implemented algorithms' read counts and their slack against the
    /// bounds.
    pub fn auto_t(n: u64, d: u32) -> Self {
        let mut report = Self::new(n, d, standard_memory_bits(n, d));
        let standard_reads = 2 * n;
        let optimized_reads = 2 * n - 1;
        report.standard_reads = Some(standard_reads);
        report.optimized_reads = Some(optimized_reads);
        report.standard_gap = Some(standard_reads as i64 - report.total_bound);
        report.optimized_gap = Some((n as i64 - 1) - report.second_pass_bound_raw);
        report
    }

    pub const CSV_HEADER: &'static str =
        "n,d,t,first_pass_bound,second_pass_bound_raw,total_bound,standard_memory_bits,read_gap";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.d,
            self.t,
            self.first_pass_bound,
            self.second_pass_bound_raw,
            self.total_bound,
            self.standard_memory_bits,
            self.read_gap
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::instance;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn forward_map_definition() {
        let out = forward_map(&instance(2, &[1, 2, 3]));
        assert_eq!(out.values, vec![big(5), big(4), big(3)]);
        // n = 1 has nothing to sum over
        assert_eq!(forward_map(&instance(3, &[7])).values, vec![big(0)]);
        // n = 2 swaps
        assert_eq!(
            forward_map(&instance(3, &[4, 6])).values,
            vec![big(6), big(4)]
        );
    }

    #[test]
    fn reconstruct_inverts_forward_map() {
        let recovered = reconstruct(&[big(5), big(4), big(3)], Some(2)).unwrap();
        assert_eq!(recovered, vec![big(1), big(2), big(3)]);
        let zeros = vec![big(0); 5];
        assert_eq!(reconstruct(&zeros, Some(1)).unwrap(), vec![big(0); 5]);
    }

    #[test]
    fn reconstruct_accepts_any_consistent_vector() {
        // [1,1,2] sums to 4 = 2*2, so it is the image of [1,1,0].
        let recovered = reconstruct(&[big(1), big(1), big(2)], Some(1)).unwrap();
        assert_eq!(recovered, vec![big(1), big(1), big(0)]);
        let image = forward_map(&instance(1, &[1, 1, 0]));
        assert_eq!(image.values, vec![big(1), big(1), big(2)]);
    }

    #[test]
    fn reconstruct_rejects_odd_sums_at_n3() {
        let err = reconstruct(&[big(1), big(2), big(2)], None).unwrap_err();
        assert!(matches!(err, FormulaError::NotDivisible { divisor: 2, .. }));
        // No input of width 1 or 2 maps onto it.
        for d in 1..=2u32 {
            for values in crate::model::all_inputs(3, d) {
                let out = forward_map(&instance(d, &values));
                assert_ne!(out.values, vec![big(1), big(2), big(2)]);
            }
        }
    }

    #[test]
    fn reconstruct_flags_domain_violations() {
        // Valid over Z (sum 6 = 2*3, recovered [3, 2, -2]) but not over 2 bits.
        let out = [big(0), big(1), big(5)];
        assert_eq!(
            reconstruct(&out, None).unwrap(),
            vec![big(3), big(2), big(-2)]
        );
        assert!(matches!(
            reconstruct(&out, Some(2)),
            Err(FormulaError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn reconstruct_needs_two_cells() {
        assert!(matches!(
            reconstruct(&[big(0)], None),
            Err(FormulaError::TooShort(1))
        ));
    }

    #[test]
    fn output_sum_identity_cases() {
        let id = output_sum_identity(&instance(2, &[1, 2, 3]));
        assert_eq!(id.sum_out, big(12));
        assert_eq!(id.total, big(6));
        assert!(id.holds);
        assert!(output_sum_identity(&instance(2, &[0, 0, 0, 0])).holds);
        let one = output_sum_identity(&instance(4, &[9]));
        assert_eq!(one.sum_out, big(0));
        assert_eq!(one.total, big(9));
        assert!(one.holds);
    }

    #[test]
    fn pass_bounds() {
        assert_eq!(first_pass_bound(2), 1);
        assert_eq!(first_pass_bound(5), 4);
        assert_eq!(second_pass_bound_raw(1024, 32, 42), 1023);
        assert_eq!(second_pass_bound_raw(17, 8, 0), 17);
        assert_eq!(second_pass_bound_raw(2, 1, 2), 0);
        assert_eq!(second_pass_bound_bits(2, 1, 2), 0);
        assert_eq!(second_pass_bound_bits(1024, 32, 42), 1024 * 32 - 42);
    }

    #[test]
    fn total_bound_cases() {
        assert_eq!(total_bound(2, 1, 1), 2);
        assert_eq!(total_bound(3, 2, 4), 3);
        // at t = d + ceil(log2 n) the total bound collapses to
        // 2n - 2 - floor(ceil(log2 n) / d)
        for n in 1..=200u64 {
            for d in 1..=8u32 {
                let t = standard_memory_bits(n, d);
                assert_eq!(
                    total_bound(n, d, t),
                    2 * n as i128 - 2 - read_gap(n, d) as i128
                );
            }
        }
    }

    #[test]
    fn memory_and_gap() {
        assert_eq!(standard_memory_bits(1_000_000, 32), 52);
        assert_eq!(standard_memory_bits(1, 8), 8);
        assert_eq!(read_gap(1 << 31, 32), 0);
        assert_eq!(read_gap(1 << 40, 32), 1);
    }

    #[test]
    fn floor_ceiling_spot_checks() {
        assert!(floor_ceiling_identity(5, 3, 2));
        assert!(floor_ceiling_identity(5, 4, 2));
    }

    #[test]
    fn bound_consistency() {
        for n in 1..=40u64 {
            for d in 1..=6u32 {
                for t in 0..=80u64 {
                    assert_eq!(
                        total_bound(n, d, t),
                        first_pass_bound(n) as i128 + second_pass_bound_raw(n, d, t)
                    );
                }
            }
        }
    }

    #[test]
    fn bounds_report_csv_shape() {
        let report = BoundsReport::new(2, 1, 1);
        assert_eq!(report.csv_row(), "2,1,1,1,1,2,2,1");
        let auto = BoundsReport::auto_t(1 << 31, 32);
        assert_eq!(auto.t, 63);
        assert_eq!(auto.read_gap, 0);
        assert_eq!(auto.standard_gap, Some(2));
        assert_eq!(auto.optimized_gap, Some(0));
    }
}
