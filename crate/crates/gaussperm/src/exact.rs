//! Exact permanent computation by three independent routes.
//!
//! The naive permutation sum is the ground truth everything else is checked
//! against; Ryser's inclusion-exclusion with Gray-code subset iteration is
//! the workhorse (O(2^M * M)); full enumeration of the Glynn estimator over
//! all sign vectors is a third, structurally different route. All three
//! agree to within rounding, and are exact in integer arithmetic while
//! intermediate values stay below 2^53.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use serde::{Deserialize, Serialize};

/// Default dimension ceiling for the naive permutation sum (M! terms).
pub const NAIVE_DIM_CEILING: usize = 12;
/// Default dimension ceiling for Ryser (2^M subsets).
pub const RYSER_DIM_CEILING: usize = 30;
/// Default dimension ceiling for Glynn full enumeration (2^M sign vectors).
pub const GLYNN_DIM_CEILING: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactMethod {
    Naive,
    Ryser,
    GlynnEnum,
}

/// An exactly computed permanent, tagged with the method and the number of
/// scalar multiply/add operations it took (for complexity assertions).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PermanentValue {
    pub value: f64,
    pub method: ExactMethod,
    pub ops_performed: u64,
}

fn require_square(a: &DenseMatrix) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "permanent requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(a.rows())
}

fn require_ceiling(m: usize, ceiling: usize, what: &str) -> Result<()> {
    // 63 caps the u64 subset/sign enumeration regardless of configuration.
    let ceiling = ceiling.min(63);
    if m > ceiling {
        return Err(Error::SizeLimit(format!(
            "{} is limited to M <= {}, got M = {}",
            what, ceiling, m
        )));
    }
    Ok(())
}

/// Permanent by direct sum over all M! permutations.
pub fn permanent_naive(a: &DenseMatrix) -> Result<PermanentValue> {
    permanent_naive_with_ceiling(a, NAIVE_DIM_CEILING)
}

/// As [`permanent_naive`] with an explicit dimension ceiling.
pub fn permanent_naive_with_ceiling(a: &DenseMatrix, ceiling: usize) -> Result<PermanentValue> {
    let m = require_square(a)?;
    require_ceiling(m, ceiling, "naive permanent")?;

    // Depth-first over rows, keeping a running partial product and a bitmask
    // of used columns. The empty matrix contributes the empty permutation.
    let mut ops = 0u64;
    let mut total = 0.0;
    let mut stack: Vec<(usize, u64, f64)> = vec![(0, 0, 1.0)];
    while let Some((row, used, partial)) = stack.pop() {
        if row == m {
            total += partial;
            continue;
        }
        for col in 0..m {
            if used & (1u64 << col) == 0 {
                ops += 1;
                stack.push((row + 1, used | (1u64 << col), partial * a.get(row, col)));
            }
        }
    }
    Ok(PermanentValue {
        value: total,
        method: ExactMethod::Naive,
        ops_performed: ops,
    })
}

/// Permanent by Ryser's inclusion-exclusion formula with Gray-code subset
/// iteration, so each subset update costs O(M).
pub fn permanent_ryser(a: &DenseMatrix) -> Result<PermanentValue> {
    permanent_ryser_with_ceiling(a, RYSER_DIM_CEILING)
}

/// As [`permanent_ryser`] with an explicit dimension ceiling.
pub fn permanent_ryser_with_ceiling(a: &DenseMatrix, ceiling: usize) -> Result<PermanentValue> {
    let m = require_square(a)?;
    require_ceiling(m, ceiling, "Ryser permanent")?;
    if m == 0 {
        return Ok(PermanentValue {
            value: 1.0,
            method: ExactMethod::Ryser,
            ops_performed: 0,
        });
    }

    // perm(A) = (-1)^M sum_{S != empty} (-1)^{|S|} prod_i sum_{j in S} A[i][j]
    let mut ops = 0u64;
    let mut row_sums = vec![0.0f64; m];
    let mut acc = 0.0;
    let mut prev_gray: u64 = 0;
    for k in 1u64..(1u64 << m) {
        let gray = k ^ (k >> 1);
        let toggled = gray ^ prev_gray;
        let col = toggled.trailing_zeros() as usize;
        if gray & toggled != 0 {
            for i in 0..m {
                row_sums[i] += a.get(i, col);
            }
        } else {
            for i in 0..m {
                row_sums[i] -= a.get(i, col);
            }
        }
        ops += m as u64;
        prev_gray = gray;

        let mut prod = 1.0;
        for &s in &row_sums {
            prod *= s;
        }
        ops += m as u64;
        if gray.count_ones() % 2 == 0 {
            acc += prod;
        } else {
            acc -= prod;
        }
    }
    let value = if m % 2 == 0 { acc } else { -acc };
    Ok(PermanentValue {
        value,
        method: ExactMethod::Ryser,
        ops_performed: ops,
    })
}

/// Permanent as the exact average of the Glynn estimator over all 2^M sign
/// vectors x in {-1, 1}^M:
///
/// ```text
/// Gly_x(A) = (prod_i x_i) * prod_j (sum_i A[i][j] * x_i)
/// ```
///
/// The division by 2^M is an exact power-of-two division.
pub fn glynn_full_enumeration(a: &DenseMatrix) -> Result<PermanentValue> {
    glynn_full_enumeration_with_ceiling(a, GLYNN_DIM_CEILING)
}

/// As [`glynn_full_enumeration`] with an explicit dimension ceiling.
pub fn glynn_full_enumeration_with_ceiling(
    a: &DenseMatrix,
    ceiling: usize,
) -> Result<PermanentValue> {
    let m = require_square(a)?;
    require_ceiling(m, ceiling, "Glynn enumeration")?;

    // Gray-code walk over sign vectors: flipping one x_i updates every
    // column sum by -2 * x_i_old * A[i][j].
    let mut ops = 0u64;
    let mut signs = vec![1.0f64; m];
    let mut col_sums = vec![0.0f64; m];
    for j in 0..m {
        for i in 0..m {
            col_sums[j] += a.get(i, j);
        }
    }
    let mut prefactor = 1.0f64;
    let mut sum = 0.0;
    let total: u64 = 1u64 << m;
    let mut prev_gray: u64 = 0;
    for k in 0..total {
        if k > 0 {
            let gray = k ^ (k >> 1);
            let toggled = gray ^ prev_gray;
            let i = toggled.trailing_zeros() as usize;
            let delta = -2.0 * signs[i];
            for j in 0..m {
                col_sums[j] += delta * a.get(i, j);
            }
            ops += m as u64;
            signs[i] = -signs[i];
            prefactor = -prefactor;
            prev_gray = gray;
        }
        let mut prod = prefactor;
        for &s in &col_sums {
            prod *= s;
        }
        ops += m as u64;
        sum += prod;
    }
    Ok(PermanentValue {
        value: sum / total as f64,
        method: ExactMethod::GlynnEnum,
        ops_performed: ops,
    })
}
