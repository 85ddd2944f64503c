//! End-to-end runs of both variants: convergence behaviour, trace invariants,
//! neighbourhood retention under worst-case injection, and the analysis
//! harness on top of real runs.

use ipmqp_core::analysis::{lemma_tightness_sweep, scaling_experiment};
use ipmqp_core::generator::{generate, perturb_within, GenSpec, PerturbTarget};
use ipmqp_core::ipm::{
    mu_after_step, run, run_with_observer, SolveError, SolverConfig, SolverStatus, StepMode,
    Variant,
};
use ipmqp_core::newton::{InexactnessPolicy, InjectShape};

fn spec(n: usize, m: usize, q_rank: usize, seed: u64) -> GenSpec {
    GenSpec { n, m, density: 1.0, q_rank, mu0: 1.0, seed }
}

#[test]
fn shortstep_first_iteration_brackets() {
    // From an exactly central start with exact solves, the new gap lands in
    // [σμ, (1 − η/√n)μ].
    let (problem, start) = generate(&spec(4, 2, 1, 1)).unwrap();
    let cfg = SolverConfig::short_step();
    let mut checked = 0;
    let sigma = 1.0 - 0.1 / 2.0;
    run_with_observer(&problem, &start, &cfg, &mut |ev| {
        if ev.iter == 0 {
            assert!(ev.next.mu() >= sigma * ev.prev.mu() - 1e-12);
            assert!(ev.next.mu() <= (1.0 - 0.002 / 2.0) * ev.prev.mu() + 1e-12);
            checked += 1;
        }
    })
    .unwrap();
    assert_eq!(checked, 1);
}

#[test]
fn shortstep_exact_lp_iteration_count_matches_theory() {
    // With Q = 0 and exact solves the contraction is exactly σ per iteration,
    // so the count is ⌈ln(μ⁰/ε)/(−ln σ)⌉ = 270 for n = 4, ε = 1e-6.
    let (problem, start) = generate(&spec(4, 2, 0, 2)).unwrap();
    let cfg = SolverConfig::short_step();
    let result = run(&problem, &start, &cfg).unwrap();
    assert_eq!(result.status, SolverStatus::Converged);
    assert!(
        (268..=272).contains(&result.iterations),
        "iterations = {}",
        result.iterations
    );
    assert!(result.final_iterate.mu() <= 1e-6);
}

#[test]
fn epsilon_already_met_converges_in_zero_iterations() {
    let (problem, start) = generate(&spec(4, 2, 1, 3)).unwrap();
    let mut cfg = SolverConfig::short_step();
    cfg.epsilon = 2.0; // above μ⁰ = 1
    let result = run(&problem, &start, &cfg).unwrap();
    assert_eq!(result.status, SolverStatus::Converged);
    assert_eq!(result.iterations, 0);
    assert!(result.trace.is_empty());
}

#[test]
fn shortstep_reduction_factor_stays_in_theory_band() {
    let (problem, start) = generate(&spec(16, 8, 4, 4)).unwrap();
    let cfg = SolverConfig::short_step();
    let sigma = 1.0 - 0.1 / 4.0;
    let upper = 1.0 - 0.002 / 4.0;
    run_with_observer(&problem, &start, &cfg, &mut |ev| {
        let factor = ev.next.mu() / ev.prev.mu();
        assert!(factor >= sigma - 1e-12, "factor {factor} below sigma {sigma}");
        assert!(factor <= upper + 1e-12, "factor {factor} above {upper}");
    })
    .unwrap();
}

#[test]
fn trace_is_monotone_and_slack_nonnegative() {
    let (problem, start) = generate(&spec(8, 4, 2, 5)).unwrap();
    let mut cfg = SolverConfig::short_step();
    cfg.epsilon = 1e-4;
    cfg.inexact = InexactnessPolicy::inject(0.3, InjectShape::RandomSphere, 1.0, 17);
    let result = run(&problem, &start, &cfg).unwrap();
    assert_eq!(result.status, SolverStatus::Converged);
    assert_eq!(result.trace.len(), result.iterations);
    let mut prev_mu = f64::INFINITY;
    for (k, rec) in result.trace.iter().enumerate() {
        assert_eq!(rec.iter, k);
        assert!(rec.mu < prev_mu, "mu not strictly decreasing at {k}");
        assert!(rec.lemma_slack >= 0.0, "negative slack at {k}: {}", rec.lemma_slack);
        assert!(rec.r_ratio <= 0.3 + 1e-12);
        prev_mu = rec.mu;
    }
}

#[test]
fn longstep_theory_fixed_converges_within_lemma_budget() {
    // n = 4, ε = 1e-2: the contraction bound gives at most
    // ⌈ln(100)/(0.1 · 1/200)⌉ = 9211 iterations.
    let (problem, start) = generate(&spec(4, 2, 1, 6)).unwrap();
    let mut cfg = SolverConfig::long_step();
    cfg.epsilon = 1e-2;
    let result = run(&problem, &start, &cfg).unwrap();
    assert_eq!(result.status, SolverStatus::Converged);
    assert!(result.iterations <= 9211, "iterations = {}", result.iterations);
    for rec in &result.trace {
        assert!((rec.alpha - 1.0 / 200.0).abs() <= 1e-15);
        assert!(rec.min_ratio >= 0.5 - 1e-12);
        assert!(rec.max_ratio <= 2.0 + 1e-12);
    }
}

#[test]
fn longstep_practical_beats_theory_fixed() {
    let (problem, start) = generate(&spec(8, 4, 2, 7)).unwrap();
    let mut theory = SolverConfig::long_step();
    theory.epsilon = 1e-6;
    let theory_result = run(&problem, &start, &theory).unwrap();
    assert_eq!(theory_result.status, SolverStatus::Converged);

    let mut practical = theory.clone();
    practical.step_mode = StepMode::Practical;
    let practical_result = run(&problem, &start, &practical).unwrap();
    assert_eq!(practical_result.status, SolverStatus::Converged);
    assert!(
        practical_result.iterations < theory_result.iterations,
        "practical {} vs theory {}",
        practical_result.iterations,
        theory_result.iterations
    );
    // Backtracking never goes below the guaranteed stepsize.
    let a_hat = 1.0 / (50.0 * 8.0);
    for rec in &practical_result.trace {
        assert!(rec.alpha >= a_hat - 1e-15);
    }
}

#[test]
fn start_outside_neighbourhood_is_rejected() {
    let (problem, start) = generate(&spec(8, 4, 0, 8)).unwrap();
    // Push products to the NS(0.5) box boundary: far outside N2(0.1).
    let (problem, off) =
        perturb_within(&problem, &start, PerturbTarget::Ns { gamma: 0.5 }, 1.0, 2).unwrap();
    let cfg = SolverConfig::short_step();
    match run(&problem, &off, &cfg) {
        Err(SolveError::StartOutsideNeighbourhood { variant, .. }) => {
            assert_eq!(variant, Variant::ShortStep);
        }
        other => panic!("expected StartOutsideNeighbourhood, got {other:?}"),
    }
    // The same point is a fine long-step start.
    let mut long = SolverConfig::long_step();
    long.epsilon = 0.5;
    let result = run(&problem, &off, &long).unwrap();
    assert_eq!(result.status, SolverStatus::Converged);
}

#[test]
fn iteration_limit_status_is_reported() {
    let (problem, start) = generate(&spec(8, 4, 0, 9)).unwrap();
    let mut cfg = SolverConfig::long_step();
    cfg.epsilon = 1e-6;
    cfg.max_iters = Some(5);
    let result = run(&problem, &start, &cfg).unwrap();
    assert_eq!(result.status, SolverStatus::IterationLimit);
    assert_eq!(result.iterations, 5);
}

#[test]
fn predicted_gap_matches_measured_every_iteration() {
    let (problem, start) = generate(&spec(8, 3, 2, 10)).unwrap();
    let mut cfg = SolverConfig::long_step();
    cfg.epsilon = 1e-3;
    cfg.inexact = InexactnessPolicy::inject(0.05, InjectShape::AdversarialSign, 1.0, 4);
    run_with_observer(&problem, &start, &cfg, &mut |ev| {
        let predicted = mu_after_step(ev.prev, ev.dir, ev.sigma, ev.alpha);
        assert!((predicted - ev.next.mu()).abs() <= 1e-9 * ev.next.mu());
    })
    .unwrap();
}

#[test]
fn parallel_runs_agree_bitwise() {
    let (problem, start) = generate(&spec(8, 4, 2, 11)).unwrap();
    let mut cfg = SolverConfig::short_step();
    cfg.epsilon = 1e-3;
    cfg.inexact = InexactnessPolicy::inject(0.3, InjectShape::RandomSphere, 1.0, 5);
    let baseline = run(&problem, &start, &cfg).unwrap();
    let handles: Vec<_> = (0..2)
        .map(|_| {
            let (p, s, c) = (problem.clone(), start.clone(), cfg.clone());
            std::thread::spawn(move || run(&p, &s, &c).unwrap())
        })
        .collect();
    for h in handles {
        let r = h.join().unwrap();
        assert_eq!(r.iterations, baseline.iterations);
        assert_eq!(r.final_iterate.x(), baseline.final_iterate.x());
        assert_eq!(r.trace, baseline.trace);
    }
}

#[test]
fn tightness_sweep_short_step() {
    let (problem, start) = generate(&spec(8, 4, 2, 12)).unwrap();

    let mut injected = SolverConfig::short_step();
    injected.epsilon = 1e-12; // run the full budget
    injected.inexact = InexactnessPolicy::inject(0.3, InjectShape::AlignedWithXi, 1.0, 3);
    let inj_report = lemma_tightness_sweep(&problem, &start, &injected, 200).unwrap();
    assert_eq!(inj_report.ratios.len(), 200);
    assert!(inj_report.max_ratio <= 1.0, "max ratio {}", inj_report.max_ratio);

    let mut exact = injected.clone();
    exact.inexact = InexactnessPolicy::exact();
    let exact_report = lemma_tightness_sweep(&problem, &start, &exact, 200).unwrap();
    assert!(exact_report.max_ratio <= 1.0);
    // Aligned injection inflates ‖ξ + r‖ by (1 + δ) while the bound uses the
    // configured δ either way, so exact runs sit strictly lower.
    assert!(exact_report.median_ratio < inj_report.median_ratio);

    // The adversarial shape also stays within the bound.
    let mut adv = injected.clone();
    adv.inexact = InexactnessPolicy::inject(0.3, InjectShape::AdversarialSign, 1.0, 3);
    let adv_report = lemma_tightness_sweep(&problem, &start, &adv, 200).unwrap();
    assert!(adv_report.max_ratio <= 1.0);
}

#[test]
fn tightness_sweep_lp_dxds_vanishes() {
    let (problem, start) = generate(&spec(8, 4, 0, 13)).unwrap();
    let mut cfg = SolverConfig::short_step();
    cfg.epsilon = 1e-6;
    let report = lemma_tightness_sweep(&problem, &start, &cfg, 100).unwrap();
    assert!(report.max_ratio <= 1.0);

    // ΔxᵀΔs = ΔxᵀQΔx = 0 for Q = 0 (the componentwise products cancel in the
    // sum); confirmed on every accepted iteration.
    let result = run(&problem, &start, &cfg).unwrap();
    for rec in &result.trace {
        assert!(rec.dxds.abs() <= 1e-12, "dxds = {:e} at {}", rec.dxds, rec.iter);
    }

    let mut no_audit = cfg.clone();
    no_audit.audit = false;
    assert!(lemma_tightness_sweep(&problem, &start, &no_audit, 10).is_err());
}

#[test]
fn tightness_sweep_long_step() {
    let (problem, start) = generate(&spec(8, 4, 2, 14)).unwrap();
    let mut cfg = SolverConfig::long_step();
    cfg.epsilon = 1e-12;
    cfg.inexact = InexactnessPolicy::inject(0.05, InjectShape::AlignedWithXi, 1.0, 6);
    let report = lemma_tightness_sweep(&problem, &start, &cfg, 150).unwrap();
    assert_eq!(report.ratios.len(), 150);
    assert!(report.max_ratio <= 1.0, "max ratio {}", report.max_ratio);
    assert!(report.median_ratio > 0.0);
}

#[test]
fn square_system_has_trivial_null_space() {
    // m = n: the only feasible x is fixed, so every primal step is zero and
    // all progress happens in (y, s).
    let (problem, start) = generate(&spec(4, 4, 1, 15)).unwrap();
    let mut cfg = SolverConfig::short_step();
    cfg.epsilon = 1e-4;
    let mut max_dx = 0.0f64;
    let result = run_with_observer(&problem, &start, &cfg, &mut |ev| {
        max_dx = max_dx.max(ev.dir.dx.amax());
    })
    .unwrap();
    assert_eq!(result.status, SolverStatus::Converged);
    assert!(max_dx <= 1e-10, "primal step should vanish, got {max_dx:e}");
    let drift = (result.final_iterate.x() - start.x()).amax();
    assert!(drift <= 1e-12, "x drifted by {drift:e} with a trivial null space");

    let mut long = SolverConfig::long_step();
    long.epsilon = 1e-2;
    long.inexact = InexactnessPolicy::iterative(0.05);
    let result = run(&problem, &start, &long).unwrap();
    assert_eq!(result.status, SolverStatus::Converged);
}

#[test]
fn scaling_smoke_test_small_sizes() {
    let report = scaling_experiment(Variant::ShortStep, &[4, 8, 16], 1e-2, 1, 21).unwrap();
    assert_eq!(report.iterations.len(), 3);
    assert!(
        (0.4..=0.6).contains(&report.fitted_exponent),
        "exponent {}",
        report.fitted_exponent
    );
    assert!(report.r_squared > 0.99);
}
