//! Exact Gaussian product expectations by pairing enumeration.
//!
//! The expectation of a product of centered jointly Gaussian variables is a
//! sum over pair partitions of products of covariances; it vanishes for odd
//! products. The cross-group variant restricts the sum to pairings in which
//! no pair joins two legs of the same group, which is the combinatorial
//! identity behind reading a permanent off an embedded covariance: with two
//! groups whose within-group covariances vanish, the surviving pairings are
//! exactly the bijections between the groups and the sum is the permanent of
//! the cross-covariance block.
//!
//! Everything here is an oracle: small, exhaustive, and independent of the
//! sampling path it is used to check.

use crate::error::{Error, Result};
use crate::exact::permanent_naive;
use crate::matrix::DenseMatrix;
use serde::{Deserialize, Serialize};

/// Leg budget for pairing enumerations. 16 legs means at most 15!! pairings,
/// which keeps any oracle call under a second.
pub const MAX_LEGS: usize = 16;

/// A finite centered Gaussian field identified by its covariance matrix.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    n: usize,
    cov: DenseMatrix,
}

impl CovarianceModel {
    /// Wraps a symmetric covariance matrix (checked to 1e-12 relative).
    pub fn new(cov: DenseMatrix) -> Result<Self> {
        if !cov.is_square() {
            return Err(Error::InvalidInput(format!(
                "covariance must be square, got {}x{}",
                cov.rows(),
                cov.cols()
            )));
        }
        if cov.max_asymmetry() > 1e-12 * cov.max_abs().max(1.0) {
            return Err(Error::InvalidInput(
                "covariance must be symmetric within 1e-12 relative tolerance".into(),
            ));
        }
        Ok(Self { n: cov.rows(), cov })
    }

    /// Number of variables in the field.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cov(&self) -> &DenseMatrix {
        &self.cov
    }

    fn check_index(&self, idx: usize) -> Result<()> {
        if idx >= self.n {
            return Err(Error::InvalidInput(format!(
                "variable index {} out of range for a field of {} variables",
                idx, self.n
            )));
        }
        Ok(())
    }
}

/// Disjoint groups of variable indices; the legs of each group belong to one
/// vertex and may not pair with each other in the cross-group sum.
#[derive(Debug, Clone)]
pub struct VertexPartition {
    groups: Vec<Vec<usize>>,
}

impl VertexPartition {
    /// Validates that indices are distinct across (and within) groups.
    pub fn new(groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for g in &groups {
            for &idx in g {
                if !seen.insert(idx) {
                    return Err(Error::InvalidInput(format!(
                        "variable index {} appears in more than one position of the partition",
                        idx
                    )));
                }
            }
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn total_legs(&self) -> usize {
        self.groups.iter().map(|g| g.len()).sum()
    }
}

/// The value of a pairing enumeration plus the number of complete pairings
/// visited.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingSum {
    pub value: f64,
    pub pairings_counted: u64,
}

/// Shared recursive enumerator. `groups[i]` is the vertex of leg `i`; legs
/// of equal group never pair. The unrestricted sum is the special case of
/// one group per leg.
fn pairing_sum(cov: &DenseMatrix, vars: &[usize], groups: &[u16]) -> PairingSum {
    let p = vars.len();
    if p % 2 != 0 {
        return PairingSum {
            value: 0.0,
            pairings_counted: 0,
        };
    }
    let mut value = 0.0;
    let mut count = 0u64;
    // Pair the lowest unpaired leg with each admissible later leg.
    fn recurse(
        cov: &DenseMatrix,
        vars: &[usize],
        groups: &[u16],
        used: u32,
        partial: f64,
        value: &mut f64,
        count: &mut u64,
    ) {
        let p = vars.len();
        let mut first = p;
        for i in 0..p {
            if used & (1 << i) == 0 {
                first = i;
                break;
            }
        }
        if first == p {
            *value += partial;
            *count += 1;
            return;
        }
        for j in (first + 1)..p {
            if used & (1 << j) == 0 && groups[j] != groups[first] {
                recurse(
                    cov,
                    vars,
                    groups,
                    used | (1 << first) | (1 << j),
                    partial * cov.get(vars[first], vars[j]),
                    value,
                    count,
                );
            }
        }
    }
    recurse(cov, vars, groups, 0, 1.0, &mut value, &mut count);
    PairingSum {
        value,
        pairings_counted: count,
    }
}

/// Expectation of the product `X[indices[0]] * ... * X[indices[p-1]]`
/// (repetition allowed) as the sum over all pair partitions of products of
/// covariances. Odd `p` gives 0.
pub fn isserlis_expectation(model: &CovarianceModel, indices: &[usize]) -> Result<PairingSum> {
    if indices.len() > MAX_LEGS {
        return Err(Error::SizeLimit(format!(
            "pairing enumeration is limited to {} legs, got {}",
            MAX_LEGS,
            indices.len()
        )));
    }
    for &idx in indices {
        model.check_index(idx)?;
    }
    // Every leg is its own vertex: all pairs admissible.
    let groups: Vec<u16> = (0..indices.len() as u16).collect();
    Ok(pairing_sum(model.cov(), indices, &groups))
}

/// Cross-group pairing sum: the expectation of a product of per-group Wick
/// monomials, summed over pairings in which no pair joins two legs of the
/// same group. Returns 0 with `pairings_counted = 0` when no such pairing
/// exists.
pub fn feynman_cross_expectation(
    model: &CovarianceModel,
    partition: &VertexPartition,
) -> Result<PairingSum> {
    let legs = partition.total_legs();
    if legs > MAX_LEGS {
        return Err(Error::SizeLimit(format!(
            "pairing enumeration is limited to {} legs, got {}",
            MAX_LEGS, legs
        )));
    }
    let mut vars = Vec::with_capacity(legs);
    let mut groups = Vec::with_capacity(legs);
    for (gi, g) in partition.groups().iter().enumerate() {
        for &idx in g {
            model.check_index(idx)?;
            vars.push(idx);
            groups.push(gi as u16);
        }
    }
    Ok(pairing_sum(model.cov(), &vars, &groups))
}

/// Permanent of the cross-covariance submatrix `C[s_i, t_j]`, computed two
/// ways and asserted equal: as a naive permanent of the submatrix, and as
/// the two-vertex cross pairing sum. Returns the common value.
pub fn perm_via_subfields(model: &CovarianceModel, s: &[usize], t: &[usize]) -> Result<f64> {
    if s.len() != t.len() {
        return Err(Error::InvalidInput(format!(
            "index lists must have equal size, got {} and {}",
            s.len(),
            t.len()
        )));
    }
    let m = s.len();
    let mut sub = DenseMatrix::zeros(m, m);
    for (i, &si) in s.iter().enumerate() {
        model.check_index(si)?;
        for (j, &tj) in t.iter().enumerate() {
            model.check_index(tj)?;
            sub.set(i, j, model.cov().get(si, tj));
        }
    }
    let direct = permanent_naive(&sub)?.value;

    let partition = VertexPartition::new(vec![s.to_vec(), t.to_vec()])?;
    let paired = feynman_cross_expectation(model, &partition)?.value;

    let tol = 1e-9 * direct.abs().max(1.0);
    if (direct - paired).abs() > tol {
        return Err(Error::Consistency(format!(
            "submatrix permanent {} and cross pairing sum {} disagree beyond tolerance",
            direct, paired
        )));
    }
    Ok(direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::embedding_covariance;

    fn mat(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    fn double_factorial(n: u64) -> u64 {
        if n <= 1 {
            1
        } else {
            n * double_factorial(n - 2)
        }
    }

    #[test]
    fn odd_products_vanish() {
        let model = CovarianceModel::new(DenseMatrix::identity(4)).unwrap();
        let p = isserlis_expectation(&model, &[0, 1, 2]).unwrap();
        assert_eq!(p.value, 0.0);
        assert_eq!(p.pairings_counted, 0);
    }

    #[test]
    fn pair_expectation_reads_covariance() {
        let c = mat(&[&[2.0, 0.7], &[0.7, 1.0]]);
        let model = CovarianceModel::new(c).unwrap();
        let p = isserlis_expectation(&model, &[0, 1]).unwrap();
        assert_eq!(p.value, 0.7);
        assert_eq!(p.pairings_counted, 1);
    }

    #[test]
    fn four_legs_give_three_pairings() {
        // <X1 X2 X3 X4> = C12 C34 + C13 C24 + C14 C23
        let c = mat(&[
            &[1.0, 0.1, 0.2, 0.3],
            &[0.1, 1.0, 0.4, 0.5],
            &[0.2, 0.4, 1.0, 0.6],
            &[0.3, 0.5, 0.6, 1.0],
        ]);
        let model = CovarianceModel::new(c).unwrap();
        let p = isserlis_expectation(&model, &[0, 1, 2, 3]).unwrap();
        let expected = 0.1 * 0.6 + 0.2 * 0.5 + 0.3 * 0.4;
        assert!((p.value - expected).abs() < 1e-15);
        assert_eq!(p.pairings_counted, 3);
    }

    #[test]
    fn repeated_indices_fourth_moment() {
        // <X^4> = 3 sigma^4 for X ~ N(0, sigma^2).
        let model = CovarianceModel::new(mat(&[&[2.0]])).unwrap();
        let p = isserlis_expectation(&model, &[0, 0, 0, 0]).unwrap();
        assert_eq!(p.value, 12.0);
        assert_eq!(p.pairings_counted, 3);
    }

    #[test]
    fn unrestricted_pairing_count_is_double_factorial() {
        let model = CovarianceModel::new(DenseMatrix::identity(12)).unwrap();
        for k in 1..=6usize {
            let indices: Vec<usize> = (0..2 * k).collect();
            let p = isserlis_expectation(&model, &indices).unwrap();
            assert_eq!(p.pairings_counted, double_factorial(2 * k as u64 - 1));
        }
    }

    #[test]
    fn empty_product_is_one() {
        let model = CovarianceModel::new(DenseMatrix::identity(2)).unwrap();
        let p = isserlis_expectation(&model, &[]).unwrap();
        assert_eq!(p.value, 1.0);
        assert_eq!(p.pairings_counted, 1);
    }

    #[test]
    fn leg_budget_enforced() {
        let model = CovarianceModel::new(DenseMatrix::identity(20)).unwrap();
        let indices: Vec<usize> = (0..18).collect();
        assert!(matches!(
            isserlis_expectation(&model, &indices),
            Err(Error::SizeLimit(_))
        ));
    }

    #[test]
    fn single_group_has_no_cross_pairing() {
        let model = CovarianceModel::new(DenseMatrix::identity(2)).unwrap();
        let part = VertexPartition::new(vec![vec![0, 1]]).unwrap();
        let p = feynman_cross_expectation(&model, &part).unwrap();
        assert_eq!(p.value, 0.0);
        assert_eq!(p.pairings_counted, 0);
    }

    #[test]
    fn two_singleton_groups_read_covariance() {
        let c = mat(&[&[1.0, 0.9], &[0.9, 1.0]]);
        let model = CovarianceModel::new(c).unwrap();
        let part = VertexPartition::new(vec![vec![0], vec![1]]).unwrap();
        let p = feynman_cross_expectation(&model, &part).unwrap();
        assert_eq!(p.value, 0.9);
        assert_eq!(p.pairings_counted, 1);
    }

    #[test]
    fn cross_pairing_over_embedding_recovers_permanent() {
        let a = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let cov = embedding_covariance(&a, 30f64.sqrt()).unwrap();
        let model = CovarianceModel::new(cov).unwrap();
        let part = VertexPartition::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let p = feynman_cross_expectation(&model, &part).unwrap();
        assert!((p.value - 10.0).abs() < 1e-12);
        // Two groups of size M admit exactly M! cross pairings.
        assert_eq!(p.pairings_counted, 2);
    }

    #[test]
    fn cross_pairing_count_is_factorial() {
        let model = CovarianceModel::new(DenseMatrix::identity(8)).unwrap();
        for m in 1..=4usize {
            let part = VertexPartition::new(vec![
                (0..m).collect::<Vec<_>>(),
                (m..2 * m).collect::<Vec<_>>(),
            ])
            .unwrap();
            let p = feynman_cross_expectation(&model, &part).unwrap();
            let fact: u64 = (1..=m as u64).product();
            assert_eq!(p.pairings_counted, fact);
        }
    }

    #[test]
    fn partition_rejects_overlap() {
        assert!(VertexPartition::new(vec![vec![0, 1], vec![1, 2]]).is_err());
    }

    #[test]
    fn out_of_range_index_rejected() {
        let model = CovarianceModel::new(DenseMatrix::identity(2)).unwrap();
        assert!(isserlis_expectation(&model, &[0, 5]).is_err());
    }

    #[test]
    fn perm_via_subfields_on_embedding() {
        let a = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let cov = embedding_covariance(&a, 30f64.sqrt()).unwrap();
        let model = CovarianceModel::new(cov).unwrap();
        let v = perm_via_subfields(&model, &[0, 1], &[2, 3]).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
    }

    #[test]
    fn perm_via_subfields_singletons() {
        let c = mat(&[&[1.0, 0.37], &[0.37, 1.0]]);
        let model = CovarianceModel::new(c).unwrap();
        let v = perm_via_subfields(&model, &[0], &[1]).unwrap();
        assert_eq!(v, 0.37);
    }
}
