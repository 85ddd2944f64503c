//! The two outer path-following algorithms.
//!
//! * **Short-step**: σ = 1 − β/√n, full steps α = 1, iterates confined to
//!   `N₂(θ)` with the residual contract in the 2-norm. Certified defaults
//!   θ = β = 0.1, δ = 0.3 contract μ by (1 − η/√n) per iteration with
//!   η = β(1 − 2δ − 0.38) = 0.002.
//! * **Long-step**: fixed σ (default 0.5), iterates confined to `N_S(γ)` with
//!   the residual contract in the infinity norm. The theory stepsize
//!   α̂ = 1/(50n) satisfies all three stepsize conditions for n ≥ 2 and yields
//!   μ(α) ≤ (1 − 0.1α)μ; the practical mode backtracks from α = 1 and tests
//!   the same predicates directly on the trial point, never going below α̂.
//!
//! With `audit` enabled every iteration asserts, numerically and with exact
//! configured constants plus [`AUDIT_SLACK`](crate::bounds::AUDIT_SLACK) of
//! absolute slack: the second-order bounds, the residual-average bound,
//! neighbourhood retention (feasibility and the complementarity condition),
//! the contraction factor, the `ΔxᵀΔs = ΔxᵀQΔx` identity and the
//! predicted-vs-measured gap update. A failed assertion ends the run with
//! [`SolverStatus::AuditViolation`].

use thiserror::Error;

use crate::bounds::{self, alpha_hat, eta, longstep_alpha_bounds, AlphaBounds, AUDIT_SLACK};
use crate::neighborhood::{in_n2, in_ns, proximity};
use crate::newton::{
    assemble_target, compute_direction, second_order_diagnostics, InexactMode, InexactnessPolicy,
    NewtonDirection, NewtonError, NewtonTarget, NormTag,
};
use crate::problem::{Iterate, QpProblem};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    ShortStep,
    LongStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// Long-step takes exactly α̂ = 1/(50n).
    TheoryFixed,
    /// Long-step backtracks from α = 1 by halving, floored at α̂.
    Practical,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub variant: Variant,
    /// `N₂` radius.
    pub theta: f64,
    /// Short-step barrier reduction: σ = 1 − β/√n.
    pub beta: f64,
    /// `N_S` box constant.
    pub gamma: f64,
    /// Long-step barrier reduction parameter.
    pub sigma_long: f64,
    /// Admissible relative residual of the inner solve.
    pub delta: f64,
    /// Target average complementarity gap.
    pub epsilon: f64,
    /// Outer iteration cap; `None` derives a generous multiple of the
    /// theoretical bound.
    pub max_iters: Option<usize>,
    pub inexact: InexactnessPolicy,
    pub step_mode: StepMode,
    pub audit: bool,
}

impl SolverConfig {
    /// Certified short-step defaults: θ = β = 0.1, δ = 0.3.
    pub fn short_step() -> Self {
        SolverConfig {
            variant: Variant::ShortStep,
            theta: 0.1,
            beta: 0.1,
            gamma: 0.5,
            sigma_long: 0.5,
            delta: 0.3,
            epsilon: 1e-6,
            max_iters: None,
            inexact: InexactnessPolicy::exact(),
            step_mode: StepMode::TheoryFixed,
            audit: true,
        }
    }

    /// Certified long-step defaults: γ = σ = 0.5, δ = 0.05.
    pub fn long_step() -> Self {
        SolverConfig {
            variant: Variant::LongStep,
            theta: 0.1,
            beta: 0.1,
            gamma: 0.5,
            sigma_long: 0.5,
            delta: 0.05,
            epsilon: 1e-6,
            max_iters: None,
            inexact: InexactnessPolicy::exact(),
            step_mode: StepMode::TheoryFixed,
            audit: true,
        }
    }

    /// The norm pairing the active variant's residual contract.
    pub fn norm(&self) -> NormTag {
        match self.variant {
            Variant::ShortStep => NormTag::Two,
            Variant::LongStep => NormTag::Inf,
        }
    }

    pub fn sigma_for(&self, n: usize) -> f64 {
        match self.variant {
            Variant::ShortStep => 1.0 - self.beta / (n as f64).sqrt(),
            Variant::LongStep => self.sigma_long,
        }
    }

    fn check(&self, n: usize) -> Result<(), SolveError> {
        for (name, v) in [
            ("theta", self.theta),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("sigma_long", self.sigma_long),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(SolveError::InvalidConfig(format!("{name} = {v} not in (0,1)")));
            }
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(SolveError::InvalidConfig(format!("delta = {} not in [0,1)", self.delta)));
        }
        if !(self.epsilon > 0.0) {
            return Err(SolveError::InvalidConfig(format!(
                "epsilon = {} not positive",
                self.epsilon
            )));
        }
        if self.variant == Variant::ShortStep && self.audit {
            let e = eta(self.beta, self.delta);
            if !(e > 0.0) {
                return Err(SolveError::InvalidConfig(format!(
                    "contraction constant eta = beta(1 - 2 delta - 0.38) = {e} must be positive \
                     for an audited short-step run"
                )));
            }
        }
        if self.variant == Variant::LongStep {
            let b = longstep_alpha_bounds(n, self.gamma, self.sigma_long, self.delta)
                .map_err(|e| SolveError::InvalidConfig(e.to_string()))?;
            if alpha_hat(n) > b.alpha_max {
                return Err(SolveError::InvalidConfig(format!(
                    "alpha_hat = {:e} exceeds the admissible stepsize {:e}",
                    alpha_hat(n),
                    b.alpha_max
                )));
            }
        }
        Ok(())
    }

    /// Generous multiple (20×) of the theoretical iteration bound, so hitting
    /// the cap always indicates a bug rather than slow progress.
    pub fn default_iteration_cap(&self, n: usize, mu0: f64) -> usize {
        let work = (mu0 / self.epsilon).ln();
        if work <= 0.0 {
            return 0;
        }
        let per_iter = match self.variant {
            Variant::ShortStep => eta(self.beta, self.delta).max(1e-6) / (n as f64).sqrt(),
            Variant::LongStep => 0.1 * alpha_hat(n),
        };
        20 * (work / per_iter).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    IterationLimit,
    AuditViolation,
    NumericalBreakdown,
}

/// Per-iteration observables; one record per accepted outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    /// Average complementarity gap after the step.
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    /// `‖r‖_p/‖ξ‖_p` of the direction taken.
    pub r_ratio: f64,
    /// `‖XSe − μe‖₂` of the new iterate.
    pub prox2: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    /// `ΔxᵀΔs` of the direction taken.
    pub dxds: f64,
    /// Minimum over the active lemma bounds of (bound − measured).
    pub lemma_slack: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolverStatus,
    pub final_iterate: Iterate,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    /// Human-readable detail for non-converged statuses.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("starting point outside the {variant:?} neighbourhood: {why}")]
    StartOutsideNeighbourhood { variant: Variant, why: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Failure of a single outer iteration.
#[derive(Debug, Error)]
pub enum IterationError {
    /// A lemma or neighbourhood assertion failed; an implementation bug or
    /// out-of-contract inputs.
    #[error("audit violation: {0}")]
    Audit(String),
    #[error("numerical breakdown: {0}")]
    Breakdown(String),
    /// Practical long-step backtracking fell below the guaranteed α̂.
    #[error("practical stepsize fell below the guaranteed alpha_hat")]
    StepsizeUnderflow,
}

impl From<NewtonError> for IterationError {
    fn from(e: NewtonError) -> Self {
        IterationError::Breakdown(e.to_string())
    }
}

/// Everything an observer gets to see about one accepted iteration.
pub struct StepEvent<'a> {
    pub iter: usize,
    pub prev: &'a Iterate,
    pub next: &'a Iterate,
    pub dir: &'a NewtonDirection,
    pub target: &'a NewtonTarget,
    pub sigma: f64,
    pub alpha: f64,
    pub record: &'a TraceRecord,
}

/// Predicted average gap after a step of size α:
/// `μ(α) = (1 − α(1−σ))μ + α eᵀr/n + α² ΔxᵀΔs/n`.
pub fn mu_after_step(it: &Iterate, dir: &NewtonDirection, sigma: f64, alpha: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    let n = it.dim() as f64;
    let et_r: f64 = dir.r.iter().sum();
    (1.0 - alpha * (1.0 - sigma)) * it.mu()
        + alpha * et_r / n
        + alpha * alpha * dir.dx_dot_ds() / n
}

struct StepOutcome {
    next: Iterate,
    record: TraceRecord,
    dir: NewtonDirection,
    target: NewtonTarget,
    sigma: f64,
    alpha: f64,
}

/// One short-step iteration: σ = 1 − β/√n, full step. The input iterate must
/// lie in `N₂(θ)` (checked by [`run`] at the start and re-established
/// inductively by the per-iteration audit).
pub fn shortstep_iteration(
    problem: &QpProblem,
    it: &Iterate,
    cfg: &SolverConfig,
    iter: usize,
) -> Result<(Iterate, TraceRecord), IterationError> {
    let out = shortstep_inner(problem, it, cfg, iter)?;
    Ok((out.next, out.record))
}

/// One long-step iteration at the configured step mode. The input iterate
/// must lie in `N_S(γ)`.
pub fn longstep_iteration(
    problem: &QpProblem,
    it: &Iterate,
    cfg: &SolverConfig,
    iter: usize,
) -> Result<(Iterate, TraceRecord), IterationError> {
    let bounds = longstep_alpha_bounds(problem.num_vars(), cfg.gamma, cfg.sigma_long, cfg.delta)
        .map_err(|e| IterationError::Breakdown(e.to_string()))?;
    let out = longstep_inner(problem, it, cfg, iter, &bounds)?;
    Ok((out.next, out.record))
}

fn policy_for_iteration(cfg: &SolverConfig, iter: usize) -> InexactnessPolicy {
    if cfg.inexact.mode == InexactMode::Inject {
        // One derived stream per outer iteration keeps injected shapes fresh
        // while staying reproducible from the single configured seed.
        let derived = SplitMix64::derive(cfg.inexact.seed, iter as u64).next_u64();
        cfg.inexact.clone().with_seed(derived)
    } else {
        cfg.inexact.clone()
    }
}

fn shortstep_inner(
    problem: &QpProblem,
    it: &Iterate,
    cfg: &SolverConfig,
    iter: usize,
) -> Result<StepOutcome, IterationError> {
    let n = problem.num_vars();
    let sigma = cfg.sigma_for(n);
    let target = assemble_target(it, sigma, NormTag::Two);
    let policy = policy_for_iteration(cfg, iter);
    let dir = compute_direction(problem, it, &target, &policy)?;
    let alpha = 1.0;
    let next = it
        .step(&dir.dx, &dir.dy, &dir.ds, alpha)
        .map_err(|e| IterationError::Breakdown(format!("lost interiority: {e}")))?;

    let mu_prev = it.mu();
    let dxds = dir.dx_dot_ds();
    let dev2 = norm2_of_second_order(&dir);
    let prox_next = proximity(&next);
    let (feas, _) = problem.measure(&next);

    // Active lemma slacks (bound − measured); mixed units by design, the
    // minimum only signals how close the run came to any bound.
    let bound_dev2 = bounds::second_order_bound_n2(cfg.theta, cfg.beta, cfg.delta, mu_prev);
    let et_r_avg = dir.r.iter().sum::<f64>() / n as f64;
    let bound_etr = bounds::residual_average_bound(cfg.theta, cfg.delta, n, mu_prev);
    let contraction_bound = (1.0 - eta(cfg.beta, cfg.delta) / (n as f64).sqrt()) * mu_prev;
    let slacks = [
        bound_dev2 - dev2,
        bound_etr - et_r_avg.abs(),
        contraction_bound - next.mu(),
        cfg.theta * next.mu() - prox_next.norm2_dev,
        cfg.delta - dir.r_norm_ratio,
    ];
    let lemma_slack = min_slack(&slacks);

    if cfg.audit {
        audit_common(problem, it, &next, &dir, &target, sigma, alpha)?;
        audit_check(dir.r_norm_ratio <= cfg.delta + AUDIT_SLACK, || {
            format!("residual ratio {:e} exceeds delta {:e}", dir.r_norm_ratio, cfg.delta)
        })?;
        audit_check(dev2 <= bound_dev2 + AUDIT_SLACK, || {
            format!("second-order 2-norm bound violated: {dev2:e} > {bound_dev2:e}")
        })?;
        audit_check(et_r_avg.abs() <= bound_etr + AUDIT_SLACK, || {
            format!(
                "residual-average bound violated: |e^T r / n| = {:e} > {:e}",
                et_r_avg.abs(),
                bound_etr
            )
        })?;
        audit_check(next.mu() <= contraction_bound + AUDIT_SLACK, || {
            format!("contraction violated: mu {:e} > {:e}", next.mu(), contraction_bound)
        })?;
        audit_check(in_n2(&next, cfg.theta), || {
            format!(
                "new iterate left N2({}): dev {:e}, mu {:e}",
                cfg.theta,
                prox_next.norm2_dev,
                next.mu()
            )
        })?;
        audit_check(feas.both_ok(), || {
            format!("feasibility drift: primal {:e}, dual {:e}", feas.primal_res, feas.dual_res)
        })?;
    }

    let record = TraceRecord {
        iter,
        mu: next.mu(),
        sigma,
        alpha,
        r_ratio: dir.r_norm_ratio,
        prox2: prox_next.norm2_dev,
        min_ratio: prox_next.min_ratio,
        max_ratio: prox_next.max_ratio,
        primal_res: feas.primal_res,
        dual_res: feas.dual_res,
        dxds,
        lemma_slack,
    };
    Ok(StepOutcome { next, record, dir, target, sigma, alpha })
}

fn longstep_inner(
    problem: &QpProblem,
    it: &Iterate,
    cfg: &SolverConfig,
    iter: usize,
    bounds_n: &AlphaBounds,
) -> Result<StepOutcome, IterationError> {
    let n = problem.num_vars();
    let sigma = cfg.sigma_long;
    let target = assemble_target(it, sigma, NormTag::Inf);
    let policy = policy_for_iteration(cfg, iter);
    let dir = compute_direction(problem, it, &target, &policy)?;
    let mu_prev = it.mu();
    let a_hat = alpha_hat(n);

    let accepts = |alpha: f64, trial: &Iterate| {
        in_ns(trial, cfg.gamma) && trial.mu() <= (1.0 - 0.1 * alpha) * mu_prev + AUDIT_SLACK
    };

    let (alpha, next) = match cfg.step_mode {
        StepMode::TheoryFixed => {
            debug_assert!(a_hat <= bounds_n.alpha_max);
            let trial = it
                .step(&dir.dx, &dir.dy, &dir.ds, a_hat)
                .map_err(|e| IterationError::Breakdown(format!("lost interiority: {e}")))?;
            (a_hat, trial)
        }
        StepMode::Practical => {
            let mut alpha = 1.0;
            loop {
                if let Ok(trial) = it.step(&dir.dx, &dir.dy, &dir.ds, alpha) {
                    if accepts(alpha, &trial) {
                        break (alpha, trial);
                    }
                }
                let halved = alpha * 0.5;
                if halved < a_hat {
                    // The guaranteed stepsize is the last resort; failing
                    // there means the guarantee itself was violated.
                    match it.step(&dir.dx, &dir.dy, &dir.ds, a_hat) {
                        Ok(trial) if accepts(a_hat, &trial) => break (a_hat, trial),
                        _ => return Err(IterationError::StepsizeUnderflow),
                    }
                }
                alpha = halved;
            }
        }
    };

    let (l1, _, dxds) = second_order_diagnostics(&dir);
    let comp_max = dir
        .dx
        .iter()
        .zip(dir.ds.iter())
        .map(|(a, b)| a * b)
        .fold(f64::NEG_INFINITY, f64::max);
    let prox_next = proximity(&next);
    let (feas, _) = problem.measure(&next);

    let bound_l1 = bounds::second_order_bound_ns_l1(n, cfg.gamma, sigma, cfg.delta, mu_prev);
    let bound_comp = bounds::second_order_bound_ns_comp(cfg.gamma, sigma, cfg.delta, mu_prev);
    let contraction_bound = (1.0 - 0.1 * alpha) * mu_prev;
    let box_slack = (prox_next.min_ratio - cfg.gamma).min(1.0 / cfg.gamma - prox_next.max_ratio)
        * prox_next.mu;
    let slacks = [
        bound_l1 - l1,
        bound_comp - comp_max,
        contraction_bound - next.mu(),
        box_slack,
        cfg.delta - dir.r_norm_ratio,
    ];
    let lemma_slack = min_slack(&slacks);

    if cfg.audit {
        audit_common(problem, it, &next, &dir, &target, sigma, alpha)?;
        audit_check(dir.r_norm_ratio <= cfg.delta + AUDIT_SLACK, || {
            format!("residual ratio {:e} exceeds delta {:e}", dir.r_norm_ratio, cfg.delta)
        })?;
        audit_check(l1 <= bound_l1 + AUDIT_SLACK, || {
            format!("second-order 1-norm bound violated: {l1:e} > {bound_l1:e}")
        })?;
        audit_check(comp_max <= bound_comp + AUDIT_SLACK, || {
            format!("componentwise second-order bound violated: {comp_max:e} > {bound_comp:e}")
        })?;
        audit_check(next.mu() <= contraction_bound + AUDIT_SLACK, || {
            format!("gap reduction violated: mu {:e} > {:e}", next.mu(), contraction_bound)
        })?;
        audit_check(in_ns(&next, cfg.gamma), || {
            format!(
                "new iterate left NS({}): ratios [{:e}, {:e}]",
                cfg.gamma, prox_next.min_ratio, prox_next.max_ratio
            )
        })?;
        audit_check(feas.both_ok(), || {
            format!("feasibility drift: primal {:e}, dual {:e}", feas.primal_res, feas.dual_res)
        })?;
    }

    let record = TraceRecord {
        iter,
        mu: next.mu(),
        sigma,
        alpha,
        r_ratio: dir.r_norm_ratio,
        prox2: prox_next.norm2_dev,
        min_ratio: prox_next.min_ratio,
        max_ratio: prox_next.max_ratio,
        primal_res: feas.primal_res,
        dual_res: feas.dual_res,
        dxds,
        lemma_slack,
    };
    Ok(StepOutcome { next, record, dir, target, sigma, alpha })
}

/// Minimum of the slacks, with negatives inside the roundoff allowance
/// reported as zero (the matching audit comparisons absorb them the same way).
fn min_slack(slacks: &[f64]) -> f64 {
    let raw = slacks.iter().cloned().fold(f64::INFINITY, f64::min);
    if raw < 0.0 && raw >= -AUDIT_SLACK {
        0.0
    } else {
        raw
    }
}

/// `‖ΔXΔSe‖₂`.
fn norm2_of_second_order(dir: &NewtonDirection) -> f64 {
    dir.dx
        .iter()
        .zip(dir.ds.iter())
        .map(|(a, b)| (a * b) * (a * b))
        .sum::<f64>()
        .sqrt()
}

fn audit_check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), IterationError> {
    if ok {
        Ok(())
    } else {
        Err(IterationError::Audit(msg()))
    }
}

/// Mode-independent audit: exactness of all three Newton blocks with the
/// reported residual, the `ΔxᵀΔs = ΔxᵀQΔx` identity and the gap-update
/// formula.
fn audit_common(
    problem: &QpProblem,
    prev: &Iterate,
    next: &Iterate,
    dir: &NewtonDirection,
    target: &NewtonTarget,
    sigma: f64,
    alpha: f64,
) -> Result<(), IterationError> {
    let scale_dir = 1.0 + dir.dx.norm() * dir.ds.norm();
    let dxds = dir.dx_dot_ds();
    let dxqdx = dir.dx.dot(&problem.q().mul_vec(&dir.dx));
    audit_check(
        (dxds - dxqdx).abs() <= 1e-8 * dxds.abs().max(dxqdx.abs()) + 1e-12 * scale_dir,
        || format!("dx'ds = {dxds:e} disagrees with dx'Qdx = {dxqdx:e}"),
    )?;
    audit_check(dxds >= -1e-12 * scale_dir, || {
        format!("dx'ds = {dxds:e} is negative beyond roundoff")
    })?;

    // First two Newton blocks carry no error in any mode.
    let sqrt_n = (problem.num_vars() as f64).sqrt();
    let a_dx = problem.a().mul_vec(&dir.dx).norm();
    let scale1 = 1.0 + problem.a().max_abs() * dir.dx.norm() * sqrt_n;
    audit_check(a_dx <= 1e-10 * scale1, || {
        format!("primal block residual |A dx| = {a_dx:e} exceeds 1e-10 x {scale1:e}")
    })?;
    let block2 = (problem.q().mul_vec(&dir.dx) - problem.a().tr_mul_vec(&dir.dy) - &dir.ds).norm();
    let scale2 = 1.0
        + problem.q().max_abs() * dir.dx.norm() * sqrt_n
        + problem.a().max_abs() * dir.dy.norm() * sqrt_n
        + dir.ds.norm();
    audit_check(block2 <= 1e-10 * scale2, || {
        format!("dual block residual {block2:e} exceeds 1e-10 x {scale2:e}")
    })?;

    // Third block: S dx + X ds = ξ + r with the reported r.
    let third = prev.s().component_mul(&dir.dx) + prev.x().component_mul(&dir.ds)
        - &target.xi
        - &dir.r;
    let scale3 = 1.0 + target.xi.norm() + dir.r.norm() + prev.s().amax() * dir.dx.norm();
    audit_check(third.norm() <= 1e-10 * scale3, || {
        format!("complementarity block residual {:e} exceeds 1e-10 x {scale3:e}", third.norm())
    })?;

    // Predicted vs measured gap update.
    let predicted = mu_after_step(prev, dir, sigma, alpha);
    audit_check((predicted - next.mu()).abs() <= 1e-9 * next.mu(), || {
        format!("gap formula mismatch: predicted {predicted:e}, measured {:e}", next.mu())
    })?;

    // Duality gap equals the complementarity gap on feasible iterates.
    let (primal, dual) = problem.objective_pair(next);
    let gap = next.x().dot(next.s());
    audit_check(
        (primal - dual - gap).abs() <= 1e-8 * gap.abs() + 1e-12 * (1.0 + primal.abs() + dual.abs()),
        || format!("objective gap {:e} disagrees with x's = {gap:e}", primal - dual),
    )?;
    Ok(())
}

/// Composite neighbourhood membership: primal-dual feasibility within the
/// relative drift tolerance plus the variant's complementarity test.
pub fn check_membership(
    problem: &QpProblem,
    it: &Iterate,
    cfg: &SolverConfig,
) -> Result<(), String> {
    let (feas, _) = problem.measure(it);
    if !feas.both_ok() {
        return Err(format!(
            "infeasible: primal residual {:e}, dual residual {:e}",
            feas.primal_res, feas.dual_res
        ));
    }
    let inside = match cfg.variant {
        Variant::ShortStep => in_n2(it, cfg.theta),
        Variant::LongStep => in_ns(it, cfg.gamma),
    };
    if !inside {
        let p = proximity(it);
        return Err(format!(
            "proximity violated: dev2/mu = {:e}, ratios [{:e}, {:e}]",
            p.norm2_dev / p.mu,
            p.min_ratio,
            p.max_ratio
        ));
    }
    Ok(())
}

/// Runs the configured variant until `μ ≤ ε` or the iteration cap.
pub fn run(
    problem: &QpProblem,
    start: &Iterate,
    cfg: &SolverConfig,
) -> Result<SolveResult, SolveError> {
    run_with_observer(problem, start, cfg, &mut |_| {})
}

/// [`run`] with a per-iteration observer; used by the analysis harness and
/// the verification suites to inspect every direction and iterate.
pub fn run_with_observer(
    problem: &QpProblem,
    start: &Iterate,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&StepEvent<'_>),
) -> Result<SolveResult, SolveError> {
    let n = problem.num_vars();
    cfg.check(n)?;
    if start.dim() != n || start.y().len() != problem.num_constraints() {
        return Err(SolveError::InvalidConfig(format!(
            "start dimensions ({}, {}) do not match problem ({}, {})",
            start.dim(),
            start.y().len(),
            n,
            problem.num_constraints()
        )));
    }
    check_membership(problem, start, cfg)
        .map_err(|why| SolveError::StartOutsideNeighbourhood { variant: cfg.variant, why })?;

    let long_bounds = match cfg.variant {
        Variant::LongStep => Some(
            longstep_alpha_bounds(n, cfg.gamma, cfg.sigma_long, cfg.delta)
                .map_err(|e| SolveError::InvalidConfig(e.to_string()))?,
        ),
        Variant::ShortStep => None,
    };

    let cap = cfg.max_iters.unwrap_or_else(|| cfg.default_iteration_cap(n, start.mu()));
    let mut it = start.clone();
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut iter = 0usize;

    log::info!(
        "solve start: variant {:?}, n {}, m {}, mu0 {:e}, eps {:e}, cap {}",
        cfg.variant,
        n,
        problem.num_constraints(),
        it.mu(),
        cfg.epsilon,
        cap
    );

    while it.mu() > cfg.epsilon && iter < cap {
        let outcome = match cfg.variant {
            Variant::ShortStep => shortstep_inner(problem, &it, cfg, iter),
            Variant::LongStep => {
                longstep_inner(problem, &it, cfg, iter, long_bounds.as_ref().unwrap())
            }
        };
        match outcome {
            Ok(out) => {
                observer(&StepEvent {
                    iter,
                    prev: &it,
                    next: &out.next,
                    dir: &out.dir,
                    target: &out.target,
                    sigma: out.sigma,
                    alpha: out.alpha,
                    record: &out.record,
                });
                log::debug!(
                    "iter {iter}: mu {:e}, alpha {:e}, r_ratio {:e}, slack {:e}",
                    out.record.mu,
                    out.record.alpha,
                    out.record.r_ratio,
                    out.record.lemma_slack
                );
                trace.push(out.record);
                it = out.next;
                iter += 1;
            }
            Err(IterationError::Audit(why)) => {
                log::error!("audit violation at iteration {iter}: {why}");
                return Ok(SolveResult {
                    status: SolverStatus::AuditViolation,
                    final_iterate: it,
                    iterations: iter,
                    trace,
                    diagnostic: Some(format!("iteration {iter}: {why}")),
                });
            }
            Err(IterationError::StepsizeUnderflow) => {
                return Ok(SolveResult {
                    status: SolverStatus::AuditViolation,
                    final_iterate: it,
                    iterations: iter,
                    trace,
                    diagnostic: Some(format!(
                        "iteration {iter}: practical stepsize fell below the guaranteed alpha_hat"
                    )),
                });
            }
            Err(IterationError::Breakdown(why)) => {
                log::error!("numerical breakdown at iteration {iter}: {why}");
                return Ok(SolveResult {
                    status: SolverStatus::NumericalBreakdown,
                    final_iterate: it,
                    iterations: iter,
                    trace,
                    diagnostic: Some(format!("iteration {iter}: {why}")),
                });
            }
        }
    }

    let status = if it.mu() <= cfg.epsilon {
        SolverStatus::Converged
    } else {
        SolverStatus::IterationLimit
    };
    log::info!("solve end: status {:?} after {} iterations, mu {:e}", status, iter, it.mu());
    Ok(SolveResult { status, final_iterate: it, iterations: iter, trace, diagnostic: None })
}
