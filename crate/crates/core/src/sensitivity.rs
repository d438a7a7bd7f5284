//! Second-moment statistics, global sensitivity indices, effective
//! dimensions, and adaptive-sparse truncation selection.
//!
//! With dependent inputs the variance of the response splits into variance
//! contributions E[y_u^2] from every component plus covariance contributions
//! E[y_u y_v] from every pair of components whose subsets overlap without
//! nesting; nested pairs drop out by hierarchical orthogonality.  All
//! expectations here are taken under the joint marginal of the union subset,
//! in contrast to the product measures that drive the coefficient system.
//!
//! Each subset then carries a triplet of indices: the variance-driven share
//! S_{u,v} = E[y_u^2] / sigma^2, the covariance-driven share S_{u,c} (which
//! may take either sign), and their sum S_u.  The grand total over all
//! subsets is one.  Total effects per variable, the two effective
//! dimensions, and the adaptive-sparse selection filter are all derived from
//! the triplets.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{GaddError, Result};
use crate::expansion::{assemble_and_solve, AddExpansion, IntegrationScheme};
use crate::measure::{GaussianMeasure, VariableSubset};
use crate::model::Model;
use crate::moments::{inner_product, Polynomial};
use crate::polybasis::subsets_up_to;

/// Below this variance the response is considered degenerate.
const VARIANCE_FLOOR: f64 = 1e-12;

/// Relative tolerance for flagging tied rankings.
const TIE_RTOL: f64 = 1e-9;

/// Reports enumerate every non-empty subset when the dimension is at most
/// this; beyond it only subsets inside the truncation are listed.
const FULL_ENUMERATION_LIMIT: usize = 12;

/// Variance split into per-subset and per-pair contributions.
#[derive(Clone, Debug, Serialize)]
pub struct VarianceBreakdown {
    /// Total variance sigma^2 of the truncated surrogate.
    pub total: f64,
    /// Sum of E[y_u^2] over all components.
    pub variance_part: f64,
    /// Sum of E[y_u y_v] over ordered non-nested pairs.
    pub covariance_part: f64,
    /// E[y_u^2] per subset.
    pub per_subset: Vec<(VariableSubset, f64)>,
    /// E[y_u y_v] per unordered non-nested pair, listed once.
    pub per_pair: Vec<(VariableSubset, VariableSubset, f64)>,
}

/// The index triplet of one subset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndexTriplet {
    pub subset: VariableSubset,
    /// S_{u,v}: normalized variance contribution, non-negative.
    pub variance_driven: f64,
    /// S_{u,c}: normalized covariance contribution, sign-free.
    pub covariance_driven: f64,
    /// S_u = S_{u,v} + S_{u,c}.
    pub total: f64,
}

/// Total effect of one variable with its rank.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TotalEffect {
    pub variable: usize,
    pub value: f64,
    /// 1 is the most influential variable.
    pub rank: usize,
    /// Set when the value coincides with another variable's within 1e-9
    /// relative.
    pub tied: bool,
}

/// The full second-moment and sensitivity report for one expansion.
#[derive(Clone, Debug, Serialize)]
pub struct SensitivityReport {
    pub mean: f64,
    pub variance: f64,
    pub triplets: Vec<IndexTriplet>,
    pub total_effects: Vec<TotalEffect>,
    /// Smallest interaction order capturing fraction p of the variance.
    pub superposition_dimension: usize,
    /// Smallest variable-prefix length capturing fraction p of the variance.
    pub truncation_dimension: usize,
    /// Set when no order within the truncation satisfies the threshold.
    pub dimension_saturated: bool,
    /// The percentile threshold p the dimensions were computed at.
    pub threshold: f64,
}

impl SensitivityReport {
    pub fn triplet(&self, subset: &VariableSubset) -> Option<&IndexTriplet> {
        self.triplets.iter().find(|t| &t.subset == subset)
    }

    /// Column sum of the variance-driven indices.
    pub fn sum_variance_driven(&self) -> f64 {
        self.triplets.iter().map(|t| t.variance_driven).sum()
    }

    /// Column sum of the covariance-driven indices.
    pub fn sum_covariance_driven(&self) -> f64 {
        self.triplets.iter().map(|t| t.covariance_driven).sum()
    }
}

/// The mean of the response: the constant component.
pub fn mean(expansion: &AddExpansion) -> f64 {
    expansion.constant()
}

/// The variance of the truncated surrogate with its full ledger of
/// per-subset and per-pair contributions.
pub fn variance(expansion: &AddExpansion) -> Result<VarianceBreakdown> {
    let measure = expansion.measure().clone();
    let subsets: Vec<VariableSubset> = expansion.basis().subsets().to_vec();
    let components: Vec<Polynomial> = subsets
        .iter()
        .map(|u| expansion.component_function(u))
        .collect::<Result<_>>()?;

    let mut per_subset = Vec::with_capacity(subsets.len());
    let mut variance_part = 0.0;
    for (u, y_u) in subsets.iter().zip(components.iter()) {
        let m_u = measure.marginal(u)?;
        let e2 = if y_u.is_zero() {
            0.0
        } else {
            inner_product(y_u, y_u, &m_u)?
        };
        variance_part += e2;
        per_subset.push((u.clone(), e2));
    }

    let mut per_pair = Vec::new();
    let mut covariance_part = 0.0;
    for (a, u) in subsets.iter().enumerate() {
        for (b, v) in subsets.iter().enumerate().skip(a + 1) {
            if u.is_subset_of(v) || v.is_subset_of(u) {
                continue;
            }
            if components[a].is_zero() || components[b].is_zero() {
                per_pair.push((u.clone(), v.clone(), 0.0));
                continue;
            }
            let joint = measure.marginal(&u.union(v))?;
            let e = inner_product(&components[a], &components[b], &joint)?;
            covariance_part += 2.0 * e;
            per_pair.push((u.clone(), v.clone(), e));
        }
    }

    Ok(VarianceBreakdown {
        total: variance_part + covariance_part,
        variance_part,
        covariance_part,
        per_subset,
        per_pair,
    })
}

/// Computes the triplet of indices for every reported subset, the total
/// effects, and the effective dimensions at threshold `p`.
pub fn indices(expansion: &AddExpansion, p: f64) -> Result<SensitivityReport> {
    let breakdown = variance(expansion)?;
    let sigma2 = breakdown.total;
    if sigma2.is_nan() || sigma2 <= VARIANCE_FLOOR {
        return Err(GaddError::DegenerateResponse { variance: sigma2 });
    }

    let n = expansion.dimension();
    let (s_max, _) = expansion.basis().truncation();

    let mut var_by_subset: HashMap<Vec<usize>, f64> = HashMap::new();
    for (u, e2) in &breakdown.per_subset {
        var_by_subset.insert(u.indices().to_vec(), *e2);
    }
    let mut cov_by_subset: HashMap<Vec<usize>, f64> = HashMap::new();
    for (u, v, e) in &breakdown.per_pair {
        *cov_by_subset.entry(u.indices().to_vec()).or_insert(0.0) += e;
        *cov_by_subset.entry(v.indices().to_vec()).or_insert(0.0) += e;
    }

    let listed = if n <= FULL_ENUMERATION_LIMIT {
        subsets_up_to(n, n)
    } else {
        subsets_up_to(n, s_max)
    };
    let triplets: Vec<IndexTriplet> = listed
        .into_iter()
        .map(|u| {
            let key = u.indices().to_vec();
            let sv = var_by_subset.get(&key).copied().unwrap_or(0.0) / sigma2;
            let sc = cov_by_subset.get(&key).copied().unwrap_or(0.0) / sigma2;
            IndexTriplet {
                subset: u,
                variance_driven: sv,
                covariance_driven: sc,
                total: sv + sc,
            }
        })
        .collect();

    let total_effects = total_effects(&triplets, n);
    let (superposition_dimension, truncation_dimension, dimension_saturated) =
        effective_dimensions(&triplets, n, p)?;

    Ok(SensitivityReport {
        mean: expansion.constant(),
        variance: sigma2,
        triplets,
        total_effects,
        superposition_dimension,
        truncation_dimension,
        dimension_saturated,
        threshold: p,
    })
}

/// The unreduced correlative index: the covariance share of subset `u`
/// summed over every other subset, nested ones included.  Hierarchical
/// orthogonality makes the nested terms vanish, so this coincides with the
/// covariance-driven index.
pub fn unreduced_correlative_index(expansion: &AddExpansion, u: &VariableSubset) -> Result<f64> {
    let measure = expansion.measure().clone();
    let breakdown = variance(expansion)?;
    let sigma2 = breakdown.total;
    if sigma2.is_nan() || sigma2 <= VARIANCE_FLOOR {
        return Err(GaddError::DegenerateResponse { variance: sigma2 });
    }
    let y_u = expansion.component_function(u)?;
    if y_u.is_zero() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for v in expansion.basis().subsets() {
        if v == u {
            continue;
        }
        let y_v = expansion.component_function(v)?;
        if y_v.is_zero() {
            continue;
        }
        let joint = measure.marginal(&u.union(v))?;
        total += inner_product(&y_u, &y_v, &joint)?;
    }
    Ok(total / sigma2)
}

/// Sums S_u over all subsets containing each variable and ranks the results
/// in descending order, flagging ties.
pub fn total_effects(triplets: &[IndexTriplet], n: usize) -> Vec<TotalEffect> {
    let mut values = vec![0.0_f64; n];
    for t in triplets {
        for &i in t.subset.indices() {
            values[i - 1] += t.total;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .expect("finite indices")
            .then(a.cmp(&b))
    });
    let mut effects: Vec<TotalEffect> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| TotalEffect {
            variable: i + 1,
            value: v,
            rank: 0,
            tied: false,
        })
        .collect();
    for (rank, &var) in order.iter().enumerate() {
        effects[var].rank = rank + 1;
    }
    let tol = |a: f64, b: f64| (a - b).abs() <= TIE_RTOL * a.abs().max(b.abs()).max(1e-300);
    for i in 0..n {
        for j in (i + 1)..n {
            if tol(values[i], values[j]) {
                effects[i].tied = true;
                effects[j].tied = true;
            }
        }
    }
    effects
}

/// The superposition and truncation dimensions at percentile threshold `p`:
/// the smallest interaction order, respectively variable-prefix length,
/// whose accumulated total indices come within 1 - p of one in absolute
/// value.  Returns (S_s, S_t, saturated).
pub fn effective_dimensions(
    triplets: &[IndexTriplet],
    n: usize,
    p: f64,
) -> Result<(usize, usize, bool)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(GaddError::InvalidTruncation(format!(
            "threshold p must lie in [0, 1], got {}",
            p
        )));
    }
    let bound = 1.0 - p;
    let mut superposition = None;
    for s in 1..=n {
        let sum: f64 = triplets
            .iter()
            .filter(|t| t.subset.len() <= s)
            .map(|t| t.total)
            .sum();
        if (1.0 - sum).abs() <= bound {
            superposition = Some(s);
            break;
        }
    }
    let mut truncation = None;
    for s in 1..=n {
        let prefix = VariableSubset::full(s);
        let sum: f64 = triplets
            .iter()
            .filter(|t| t.subset.is_subset_of(&prefix))
            .map(|t| t.total)
            .sum();
        if (1.0 - sum).abs() <= bound {
            truncation = Some(s);
            break;
        }
    }
    let saturated = superposition.is_none() || truncation.is_none();
    Ok((
        superposition.unwrap_or(n),
        truncation.unwrap_or(n),
        saturated,
    ))
}

/// A retained subset with the largest polynomial order that passed both
/// inclusion criteria.
#[derive(Clone, Debug, Serialize)]
pub struct AdaptiveSelection {
    pub retained: Vec<(VariableSubset, u32)>,
    pub epsilon1: f64,
    pub epsilon2: f64,
}

/// Sweeps the polynomial order upward, recomputing the expansion and the
/// order-m estimate of every total index, and retains (u, m_u) pairs while
/// the index exceeds epsilon1 and its relative increment exceeds epsilon2.
///
/// The increment criterion is skipped when the previous estimate is below
/// 1e-12 in magnitude, where the ratio is undefined.
pub fn adaptive_select(
    model: &dyn Model,
    measure: &GaussianMeasure,
    epsilon1: f64,
    epsilon2: f64,
    m_max: u32,
    scheme: IntegrationScheme,
) -> Result<AdaptiveSelection> {
    if epsilon1 < 0.0 || epsilon2 < 0.0 {
        return Err(GaddError::InvalidTruncation(
            "adaptive tolerances must be non-negative".into(),
        ));
    }
    let n = measure.dimension();
    let mut previous: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut retained: HashMap<Vec<usize>, (VariableSubset, u32)> = HashMap::new();
    for m in 1..=m_max {
        let s = (m as usize).min(n).min(6);
        let expansion = assemble_and_solve(model, measure, s, m, scheme)?;
        let report = indices(&expansion, 0.99)?;
        let mut current: HashMap<Vec<usize>, f64> = HashMap::new();
        for t in &report.triplets {
            let key = t.subset.indices().to_vec();
            let prev = previous.get(&key).copied().unwrap_or(0.0);
            let passes_level = t.total > epsilon1;
            let passes_increment = if prev.abs() < 1e-12 {
                true
            } else {
                (t.total - prev) / prev > epsilon2
            };
            if passes_level && passes_increment {
                retained.insert(key.clone(), (t.subset.clone(), m));
            }
            current.insert(key, t.total);
        }
        previous = current;
    }
    let mut retained: Vec<(VariableSubset, u32)> = retained.into_values().collect();
    retained.sort_by(|a, b| (a.0.len(), a.0.indices()).cmp(&(b.0.len(), b.0.indices())));
    Ok(AdaptiveSelection {
        retained,
        epsilon1,
        epsilon2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PolynomialModel;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    const EXACT: IntegrationScheme = IntegrationScheme::Tensor { points: 8 };

    fn case_measure(r12: f64, r13: f64, r23: f64) -> GaussianMeasure {
        GaussianMeasure::validate(DMatrix::from_row_slice(
            3,
            3,
            &[1.0, r12, r13, r12, 1.0, r23, r13, r23, 1.0],
        ))
        .unwrap()
    }

    fn reference_model() -> PolynomialModel {
        PolynomialModel::quadratic_symmetric([2.0, 1.0, 2.0, 1.0, 2.0, 1.0])
    }

    fn reference_expansion(r12: f64, r13: f64, r23: f64) -> AddExpansion {
        assemble_and_solve(
            &reference_model(),
            &case_measure(r12, r13, r23),
            2,
            2,
            EXACT,
        )
        .unwrap()
    }

    fn subset(v: &[usize]) -> VariableSubset {
        VariableSubset::new(v.to_vec()).unwrap()
    }

    #[test]
    fn means_match_reference_cases() {
        assert_abs_diff_eq!(
            mean(&reference_expansion(0.2, 0.2, 0.2)),
            63.0 / 5.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            mean(&reference_expansion(-0.2, 0.4, -0.8)),
            57.0 / 5.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn variances_match_reference_cases() {
        let v1 = variance(&reference_expansion(0.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v1.total, 51.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v1.covariance_part, 0.0, epsilon = 1e-10);

        let v3 = variance(&reference_expansion(0.2, 0.4, 0.8)).unwrap();
        assert_abs_diff_eq!(v3.total, 2514.0 / 25.0, epsilon = 1e-9 * 2514.0 / 25.0);

        let v4 = variance(&reference_expansion(-0.2, 0.4, -0.8)).unwrap();
        assert_abs_diff_eq!(v4.total, 774.0 / 25.0, epsilon = 1e-9 * 774.0 / 25.0);
    }

    #[test]
    fn uncorrelated_triplets_match_reference_values() {
        let report = indices(&reference_expansion(0.0, 0.0, 0.0), 0.99).unwrap();
        let t = report.triplet(&subset(&[1])).unwrap();
        assert_abs_diff_eq!(t.variance_driven, 0.313725, epsilon = 1e-6);
        assert_abs_diff_eq!(t.covariance_driven, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(t.total, 0.313725, epsilon = 1e-6);
    }

    #[test]
    fn equally_correlated_pair_triplet_matches_reference() {
        let report = indices(&reference_expansion(0.2, 0.2, 0.2), 0.99).unwrap();
        let t = report.triplet(&subset(&[1, 2])).unwrap();
        assert_abs_diff_eq!(t.variance_driven, 0.012349, epsilon = 1e-6);
        assert_abs_diff_eq!(t.covariance_driven, 0.004116, epsilon = 1e-6);
        assert_abs_diff_eq!(t.total, 0.016465, epsilon = 1e-6);
    }

    #[test]
    fn mixed_case_column_sums_match_reference() {
        let report = indices(&reference_expansion(-0.2, 0.4, -0.8), 0.99).unwrap();
        assert_abs_diff_eq!(report.sum_variance_driven(), 1.63391, epsilon = 1e-5);
        assert_abs_diff_eq!(report.sum_covariance_driven(), -0.63391, epsilon = 1e-5);
        let total: f64 = report.triplets.iter().map(|t| t.total).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn unreduced_index_equals_reduced_index() {
        for (r12, r13, r23) in [
            (0.0, 0.0, 0.0),
            (0.2, 0.2, 0.2),
            (0.2, 0.4, 0.8),
            (-0.2, 0.4, -0.8),
        ] {
            let exp = reference_expansion(r12, r13, r23);
            let report = indices(&exp, 0.99).unwrap();
            for t in &report.triplets {
                if t.subset.len() > 2 {
                    continue;
                }
                let unreduced = unreduced_correlative_index(&exp, &t.subset).unwrap();
                assert_abs_diff_eq!(unreduced, t.covariance_driven, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn positively_correlated_third_variable_correlative_index() {
        let exp = reference_expansion(0.2, 0.4, 0.8);
        let s3c = unreduced_correlative_index(&exp, &subset(&[3])).unwrap();
        assert_abs_diff_eq!(s3c, 0.202314, epsilon = 1e-6);
    }

    #[test]
    fn total_effects_tie_and_rank() {
        let report = indices(&reference_expansion(0.0, 0.0, 0.0), 0.99).unwrap();
        for e in &report.total_effects {
            assert_abs_diff_eq!(e.value, 0.352941, epsilon = 1e-6);
            assert!(e.tied, "symmetric case must flag a three-way tie");
        }

        let report3 = indices(&reference_expansion(0.2, 0.4, 0.8), 0.99).unwrap();
        let ranks: Vec<usize> = report3.total_effects.iter().map(|e| e.rank).collect();
        assert_eq!(ranks, vec![3, 2, 1]);

        let report4 = indices(&reference_expansion(-0.2, 0.4, -0.8), 0.99).unwrap();
        assert_abs_diff_eq!(report4.total_effects[0].value, 0.641262, epsilon = 1e-6);
        assert_eq!(report4.total_effects[0].rank, 1);
        assert_eq!(report4.total_effects[1].rank, 3);
        assert_eq!(report4.total_effects[2].rank, 2);
    }

    #[test]
    fn effective_dimensions_examples() {
        let report = indices(&reference_expansion(0.0, 0.0, 0.0), 0.99).unwrap();
        // Univariate sum 0.941176 misses 0.99; adding the pairs reaches 1.
        assert_eq!(report.superposition_dimension, 2);

        let (ss, st, saturated) = effective_dimensions(&report.triplets, 3, 0.0).unwrap();
        assert_eq!((ss, st), (1, 1));
        assert!(!saturated);

        // Additive response: all pair indices vanish.
        let m = case_measure(0.2, 0.4, 0.8);
        let additive = PolynomialModel::additive_linear(&[1.0, 1.0, 1.0]);
        let exp = assemble_and_solve(&additive, &m, 2, 2, EXACT).unwrap();
        let report = indices(&exp, 0.99).unwrap();
        assert_eq!(report.superposition_dimension, 1);
        for t in &report.triplets {
            if t.subset.len() == 2 {
                assert_abs_diff_eq!(t.total, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn diagonal_covariance_zeroes_covariance_indices() {
        let m = GaussianMeasure::validate(DMatrix::identity(3, 3)).unwrap();
        let exp = assemble_and_solve(&reference_model(), &m, 2, 2, EXACT).unwrap();
        let report = indices(&exp, 0.99).unwrap();
        for t in &report.triplets {
            assert_abs_diff_eq!(t.covariance_driven, 0.0, epsilon = 1e-10);
            assert!(t.variance_driven >= 0.0);
        }
    }

    #[test]
    fn degenerate_response_is_rejected() {
        let m = case_measure(0.2, 0.2, 0.2);
        let zero =
            PolynomialModel::new(3, Polynomial::constant(VariableSubset::full(3), 4.0)).unwrap();
        let exp = assemble_and_solve(&zero, &m, 2, 2, EXACT).unwrap();
        assert!(matches!(
            indices(&exp, 0.99),
            Err(GaddError::DegenerateResponse { .. })
        ));
    }

    #[test]
    fn scaling_the_response_leaves_indices_unchanged() {
        let m = case_measure(-0.2, 0.4, -0.8);
        let base = reference_model();
        let scaled = PolynomialModel::new(3, base.polynomial().scale(7.5)).unwrap();
        let ra = indices(&assemble_and_solve(&base, &m, 2, 2, EXACT).unwrap(), 0.99).unwrap();
        let rb = indices(&assemble_and_solve(&scaled, &m, 2, 2, EXACT).unwrap(), 0.99).unwrap();
        for (a, b) in ra.triplets.iter().zip(rb.triplets.iter()) {
            assert_abs_diff_eq!(a.total, b.total, epsilon = 1e-10);
            assert_abs_diff_eq!(a.variance_driven, b.variance_driven, epsilon = 1e-10);
        }
        for (a, b) in ra.total_effects.iter().zip(rb.total_effects.iter()) {
            assert_eq!(a.rank, b.rank);
        }
    }

    #[test]
    fn saturated_reports_fall_back_to_full_dimension() {
        // A truncated report whose indices only reach 0.9 can never come
        // within 0.01 of one.
        let triplets = vec![
            IndexTriplet {
                subset: subset(&[1]),
                variance_driven: 0.6,
                covariance_driven: 0.0,
                total: 0.6,
            },
            IndexTriplet {
                subset: subset(&[2]),
                variance_driven: 0.3,
                covariance_driven: 0.0,
                total: 0.3,
            },
        ];
        let (ss, st, saturated) = effective_dimensions(&triplets, 2, 0.99).unwrap();
        assert_eq!((ss, st), (2, 2));
        assert!(saturated);
        assert!(effective_dimensions(&triplets, 2, 1.5).is_err());
    }

    #[test]
    fn adaptive_selection_examples() {
        let m = case_measure(0.0, 0.0, 0.0);
        let model = reference_model();

        // Zero tolerances retain every subset with a nonzero index.
        let sel = adaptive_select(&model, &m, 0.0, 0.0, 2, EXACT).unwrap();
        assert_eq!(sel.retained.len(), 6);
        for (u, m_u) in &sel.retained {
            match u.len() {
                1 => assert_eq!(*m_u, 1, "linear univariate parts settle at order 1"),
                2 => assert_eq!(*m_u, 2),
                _ => panic!("unexpected subset {}", u),
            }
        }

        // No index exceeds one.
        let none = adaptive_select(&model, &m, 1.0, 0.0, 2, EXACT).unwrap();
        assert!(none.retained.is_empty());

        // Pair indices are 0.019608: retained above 0.01, dropped at 0.02.
        let keep = adaptive_select(&model, &m, 0.01, 0.0, 2, EXACT).unwrap();
        assert!(keep.retained.iter().any(|(u, _)| u.len() == 2));
        let drop = adaptive_select(&model, &m, 0.02, 0.0, 2, EXACT).unwrap();
        assert!(drop.retained.iter().all(|(u, _)| u.len() == 1));
    }
}
