//! Central-path proximity measures and membership tests for the two
//! neighbourhoods the solver works in:
//!
//! * `N₂(θ)`: `‖XSe − μe‖₂ ≤ θμ` (short-step regime),
//! * `N_S(γ)`: `γμ ≤ x_j s_j ≤ μ/γ` for all `j` (long-step regime).
//!
//! Membership tests use the non-strict inequalities as written, so boundary
//! points are members. Both neighbourhoods additionally require primal-dual
//! feasibility; that part is measured by `problem::QpProblem::measure` and the
//! composite test is asserted by the outer algorithm.

use crate::problem::Iterate;

/// Absolute slack for the tolerance-relaxed membership checks used in
/// roundoff-boundary diagnostics. The plain checks add no slack at all.
pub const RELAXED_SLACK: f64 = 1e-12;

/// Proximity measures of an iterate, all derived from the same `μ = xᵀs/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityReport {
    /// `‖XSe − μe‖₂`
    pub norm2_dev: f64,
    /// `min_j x_j s_j / μ`
    pub min_ratio: f64,
    /// `max_j x_j s_j / μ`
    pub max_ratio: f64,
    pub mu: f64,
}

/// Computes all three proximity measures of a strictly interior iterate.
pub fn proximity(it: &Iterate) -> ProximityReport {
    let mu = it.mu();
    let products = it.products();
    let mut dev_sq = 0.0;
    let mut min_p = f64::INFINITY;
    let mut max_p = f64::NEG_INFINITY;
    for &p in products.iter() {
        let d = p - mu;
        dev_sq += d * d;
        min_p = min_p.min(p);
        max_p = max_p.max(p);
    }
    ProximityReport {
        norm2_dev: dev_sq.sqrt(),
        min_ratio: min_p / mu,
        max_ratio: max_p / mu,
        mu,
    }
}

/// `N₂(θ)` complementarity test: `‖XSe − μe‖₂ ≤ θμ`.
pub fn in_n2(it: &Iterate, theta: f64) -> bool {
    debug_assert!(theta > 0.0 && theta < 1.0);
    let report = proximity(it);
    let inside = report.norm2_dev <= theta * report.mu;
    if inside {
        // Members inherit the componentwise box (1−θ)μ ≤ x_j s_j ≤ (1+θ)μ
        // because the infinity norm is dominated by the Euclidean norm.
        debug_assert!(report.min_ratio >= 1.0 - theta - 1e-14);
        debug_assert!(report.max_ratio <= 1.0 + theta + 1e-14);
    }
    inside
}

/// `N_S(γ)` complementarity test: `γμ ≤ x_j s_j ≤ μ/γ` for every `j`.
pub fn in_ns(it: &Iterate, gamma: f64) -> bool {
    debug_assert!(gamma > 0.0 && gamma < 1.0);
    let report = proximity(it);
    report.min_ratio >= gamma && report.max_ratio <= 1.0 / gamma
}

/// [`in_n2`] with [`RELAXED_SLACK`] of absolute slack, for points constructed
/// to sit exactly on the boundary.
pub fn in_n2_relaxed(it: &Iterate, theta: f64) -> bool {
    let report = proximity(it);
    report.norm2_dev <= theta * report.mu + RELAXED_SLACK
}

/// [`in_ns`] with [`RELAXED_SLACK`] of absolute slack.
pub fn in_ns_relaxed(it: &Iterate, gamma: f64) -> bool {
    let report = proximity(it);
    report.min_ratio * report.mu >= gamma * report.mu - RELAXED_SLACK
        && report.max_ratio * report.mu <= report.mu / gamma + RELAXED_SLACK
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn iterate_with_products(products: &[f64]) -> Iterate {
        // x = 1 so the products are exactly s.
        let n = products.len();
        Iterate::new(
            DVector::from_element(n, 1.0),
            DVector::zeros(1),
            DVector::from_row_slice(products),
        )
        .unwrap()
    }

    #[test]
    fn central_point_has_zero_deviation() {
        let it = iterate_with_products(&[1.0, 1.0, 1.0]);
        let report = proximity(&it);
        assert_eq!(report.norm2_dev, 0.0);
        assert_eq!(report.min_ratio, 1.0);
        assert_eq!(report.max_ratio, 1.0);
        assert!(in_n2(&it, 0.5));
        assert!(in_n2(&it, 0.01));
        assert!(in_ns(&it, 0.5));
        assert!(in_ns(&it, 0.99));
    }

    #[test]
    fn hand_computed_deviation() {
        let it = iterate_with_products(&[1.05, 0.95]);
        let report = proximity(&it);
        assert_relative_eq!(report.mu, 1.0);
        assert_relative_eq!(report.norm2_dev, 0.07071067811865474, max_relative = 1e-12);
        assert!(in_n2(&it, 0.1));
        assert!(!in_n2(&it, 0.05));
    }

    #[test]
    fn hand_computed_ratios() {
        let it = iterate_with_products(&[0.4, 1.6]);
        let report = proximity(&it);
        assert_relative_eq!(report.min_ratio, 0.4, max_relative = 1e-12);
        assert_relative_eq!(report.max_ratio, 1.6, max_relative = 1e-12);
        assert!(!in_ns(&it, 0.5)); // 0.4 < 0.5
        assert!(in_ns(&it, 0.25)); // 0.25 <= 0.4 and 1.6 <= 4
    }

    #[test]
    fn boundary_points_are_members() {
        // Products (1.1, 0.9): deviation = √0.02, μ = 1. Pick θ exactly there.
        let it = iterate_with_products(&[1.1, 0.9]);
        let report = proximity(&it);
        assert!(in_n2(&it, report.norm2_dev / report.mu));
        // NS boundary: min ratio exactly γ.
        assert!(in_ns(&it, 0.9));
    }

    proptest! {
        /// Rescaling x by t and s by 1/t leaves every proximity measure
        /// unchanged up to roundoff (the products are invariant).
        #[test]
        fn prox_is_scale_invariant(
            products in proptest::collection::vec(0.1f64..10.0, 2..8),
            t in 0.01f64..100.0,
        ) {
            let n = products.len();
            let base = iterate_with_products(&products);
            let scaled = Iterate::new(
                DVector::from_element(n, t),
                DVector::zeros(1),
                DVector::from_fn(n, |i, _| products[i] / t),
            ).unwrap();
            let r0 = proximity(&base);
            let r1 = proximity(&scaled);
            prop_assert!((r0.mu - r1.mu).abs() <= 1e-12 * r0.mu);
            prop_assert!((r0.norm2_dev - r1.norm2_dev).abs() <= 1e-10 * r0.mu);
            prop_assert!((r0.min_ratio - r1.min_ratio).abs() <= 1e-10);
            prop_assert!((r0.max_ratio - r1.max_ratio).abs() <= 1e-10);
        }

        /// Membership agrees with the raw proximity comparison, and N₂ members
        /// satisfy the componentwise box.
        #[test]
        fn membership_agrees_with_report(
            products in proptest::collection::vec(0.05f64..5.0, 2..8),
            theta in 0.01f64..0.99,
        ) {
            let it = iterate_with_products(&products);
            let report = proximity(&it);
            let member = in_n2(&it, theta);
            prop_assert_eq!(member, report.norm2_dev <= theta * report.mu);
            if member {
                prop_assert!(report.min_ratio >= 1.0 - theta - 1e-12);
                prop_assert!(report.max_ratio <= 1.0 + theta + 1e-12);
            }
            // The average always lies between the extremes.
            prop_assert!(report.min_ratio <= 1.0 + 1e-12);
            prop_assert!(report.max_ratio >= 1.0 - 1e-12);
        }
    }
}
