//! Scalar formulas behind the audit harness: second-order error bounds,
//! the short-step contraction constant, and the long-step stepsize conditions.
//!
//! All of these are closed-form functions of the solver parameters; the outer
//! algorithms assert them against measured quantities every iteration when
//! auditing is on, and the certification routines in [`crate::analysis`] probe
//! them over ranges of `n`.

use thiserror::Error;

/// Absolute slack added to every audit comparison to absorb roundoff in the
/// measured side. The bounds themselves use exact configured constants.
pub const AUDIT_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error(
        "no admissible stepsize: bounds a1={a1:e}, a2={a2:e}, a3={a3:e} \
         (gamma={gamma}, sigma={sigma}, delta={delta})"
    )]
    ParamsInfeasible { a1: f64, a2: f64, a3: f64, gamma: f64, sigma: f64, delta: f64 },
}

/// `(1+δ)²/γ · (1/γ − σ)²`, the constant shared by all three long-step
/// stepsize conditions. At γ = σ = 0.5, δ = 0.05 it equals 4.96125.
pub fn shared_constant(gamma: f64, sigma: f64, delta: f64) -> f64 {
    (1.0 + delta).powi(2) / gamma * (1.0 / gamma - sigma).powi(2)
}

/// Short-step contraction constant `η = β(1 − 2δ − 0.38)`; 0.002 at the
/// certified defaults β = 0.1, δ = 0.3.
pub fn eta(beta: f64, delta: f64) -> f64 {
    beta * (1.0 - 2.0 * delta - 0.38)
}

/// The guaranteed long-step stepsize `α̂ = 1/(50n)`, admissible under all
/// three stepsize conditions at the certified defaults for any n ≥ 2.
pub fn alpha_hat(n: usize) -> f64 {
    1.0 / (50.0 * n as f64)
}

/// Second-order bound for the short-step regime:
/// `‖ΔXΔSe‖₂ ≤ (1+δ)²(θ²+β²)/(1−θ) · μ` whenever the iterate lies in `N₂(θ)`
/// and the residual satisfies the 2-norm contract.
pub fn second_order_bound_n2(theta: f64, beta: f64, delta: f64, mu: f64) -> f64 {
    (1.0 + delta).powi(2) * (theta * theta + beta * beta) / (1.0 - theta) * mu
}

/// Residual-average bound for the short-step regime:
/// `|eᵀr/n| ≤ √2 δ θ μ / √n` (valid for β ≤ θ; equality of the two printed
/// forms at β = θ).
pub fn residual_average_bound(theta: f64, delta: f64, n: usize, mu: f64) -> f64 {
    std::f64::consts::SQRT_2 * delta * theta * mu / (n as f64).sqrt()
}

/// Second-order 1-norm bound for the long-step regime:
/// `‖ΔXΔSe‖₁ ≤ n (1+δ)²/γ (1/γ − σ)² μ`.
pub fn second_order_bound_ns_l1(n: usize, gamma: f64, sigma: f64, delta: f64, mu: f64) -> f64 {
    n as f64 * shared_constant(gamma, sigma, delta) * mu
}

/// Componentwise upper bound in the long-step regime:
/// `Δx_j Δs_j ≤ (1+δ)²/γ (1/γ − σ)² μ` (one-sided).
pub fn second_order_bound_ns_comp(gamma: f64, sigma: f64, delta: f64, mu: f64) -> f64 {
    shared_constant(gamma, sigma, delta) * mu
}

/// The three long-step stepsize upper bounds. Each condition is linear in α:
///
/// * neighbourhood lower side: `α (γ+n) C ≤ σ(1−γ) − δ(1+γ)(1/γ−σ)`
/// * neighbourhood upper side: `δ(1+1/γ)(1/γ−σ) + α C ≤ (1/γ−1)σ`
/// * gap reduction:            `σ + δ(1/γ−σ) + α C ≤ 0.9`
///
/// with `C` from [`shared_constant`]. Any of the bounds may come out
/// nonpositive, signalling an infeasible parameter combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBounds {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `min(a1, a2, a3, 1)`
    pub alpha_max: f64,
}

/// Computes the bounds without judging feasibility; used by certification.
pub fn alpha_bounds_raw(n: usize, gamma: f64, sigma: f64, delta: f64) -> AlphaBounds {
    let c = shared_constant(gamma, sigma, delta);
    let spread = 1.0 / gamma - sigma;
    let a1 = (sigma * (1.0 - gamma) - delta * (1.0 + gamma) * spread) / ((gamma + n as f64) * c);
    let a2 = ((1.0 / gamma - 1.0) * sigma - delta * (1.0 + 1.0 / gamma) * spread) / c;
    let a3 = (0.9 - sigma - delta * spread) / c;
    AlphaBounds { a1, a2, a3, alpha_max: a1.min(a2).min(a3).min(1.0) }
}

/// [`alpha_bounds_raw`] that rejects parameter combinations admitting no
/// positive stepsize.
pub fn longstep_alpha_bounds(
    n: usize,
    gamma: f64,
    sigma: f64,
    delta: f64,
) -> Result<AlphaBounds, BoundsError> {
    debug_assert!(gamma > 0.0 && gamma < 1.0);
    debug_assert!(sigma > 0.0 && sigma < 1.0);
    debug_assert!((0.0..1.0).contains(&delta));
    let bounds = alpha_bounds_raw(n, gamma, sigma, delta);
    if bounds.alpha_max <= 0.0 {
        return Err(BoundsError::ParamsInfeasible {
            a1: bounds.a1,
            a2: bounds.a2,
            a3: bounds.a3,
            gamma,
            sigma,
            delta,
        });
    }
    Ok(bounds)
}

/// Left-hand side of the scalar inequality certifying the short-step
/// parameters: `√2 δ (1 + θ/√n) + 2(1+δ)²/9`.
pub fn shortstep_cert_lhs(theta: f64, delta: f64, n: u64) -> f64 {
    std::f64::consts::SQRT_2 * delta * (1.0 + theta / (n as f64).sqrt())
        + 2.0 * (1.0 + delta).powi(2) / 9.0
}

/// Right-hand side of the same inequality: `σ = 1 − β/√n`.
pub fn shortstep_cert_rhs(beta: f64, n: u64) -> f64 {
    1.0 - beta / (n as f64).sqrt()
}
