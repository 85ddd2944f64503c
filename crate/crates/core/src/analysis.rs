//! Quantitative verification at desk scale: parameter certifications,
//! lemma-bound tightness over real runs, and iteration-count scaling in `n`.

use thiserror::Error;

use crate::bounds::{self, shortstep_cert_lhs, shortstep_cert_rhs};
use crate::generator::{generate, GenError, GenSpec};
use crate::ipm::{run_with_observer, SolveError, SolverConfig, SolverStatus, Variant};
use crate::problem::{Iterate, QpProblem};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("scaling fit needs at least 3 sizes, got {0}")]
    TooFewSizes(usize),
    #[error("sizes must be strictly increasing and at least 2: {0:?}")]
    BadSizes(Vec<usize>),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("run ended with status {status:?}: {detail}")]
    RunFailed { status: SolverStatus, detail: String },
    #[error("tightness sweep requires cfg.audit = true")]
    AuditRequired,
}

/// One sampled scalar certification: `slack = rhs − lhs ≥ 0` means the
/// inequality holds at this `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertSample {
    pub n: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// Outcome of a parameter certification over a list of dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct CertReport {
    pub samples: Vec<CertSample>,
    pub worst_slack: f64,
    pub passed: bool,
}

impl CertReport {
    fn from_samples(samples: Vec<CertSample>) -> Self {
        let worst_slack = samples.iter().map(|s| s.slack).fold(f64::INFINITY, f64::min);
        CertReport { passed: worst_slack >= 0.0, samples, worst_slack }
    }
}

/// Evaluates the short-step parameter inequality
/// `√2 δ (1 + θ/√n) + 2(1+δ)²/9 ≤ 1 − β/√n` for each sampled `n`. The left
/// side decreases and the right side increases in `n`, so the smallest sample
/// is the binding one. A failed certification is a report, not an error.
pub fn certify_shortstep_params(
    theta: f64,
    beta: f64,
    delta: f64,
    n_samples: &[u64],
) -> CertReport {
    let samples = n_samples
        .iter()
        .map(|&n| {
            let lhs = shortstep_cert_lhs(theta, delta, n);
            let rhs = shortstep_cert_rhs(beta, n);
            CertSample { n, lhs, rhs, slack: rhs - lhs }
        })
        .collect();
    CertReport::from_samples(samples)
}

/// Checks `α̂ = 1/(50n)` against all three long-step stepsize bounds for each
/// listed `n`. `lhs` is `α̂`, `rhs` the tightest bound.
pub fn certify_alpha_hat(gamma: f64, sigma: f64, delta: f64, n_list: &[u64]) -> CertReport {
    let samples = n_list
        .iter()
        .map(|&n| {
            let b = bounds::alpha_bounds_raw(n as usize, gamma, sigma, delta);
            let tightest = b.a1.min(b.a2).min(b.a3);
            let hat = bounds::alpha_hat(n as usize);
            CertSample { n, lhs: hat, rhs: tightest, slack: tightest - hat }
        })
        .collect();
    CertReport::from_samples(samples)
}

/// Measured-over-bound ratios of the active second-order lemma, one per
/// iteration of an audited run.
#[derive(Debug, Clone)]
pub struct TightnessReport {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub median_ratio: f64,
}

/// Runs the solver for up to `iters` iterations recording the ratio of the
/// measured second-order term to its lemma bound each iteration. Ratios stay
/// at or below one when the implementation honors the bounds; the median
/// indicates how tight the bound runs in practice.
pub fn lemma_tightness_sweep(
    problem: &QpProblem,
    start: &Iterate,
    cfg: &SolverConfig,
    iters: usize,
) -> Result<TightnessReport, AnalysisError> {
    if !cfg.audit {
        return Err(AnalysisError::AuditRequired);
    }
    let mut cfg = cfg.clone();
    cfg.max_iters = Some(iters);

    let n = problem.num_vars();
    let mut ratios = Vec::with_capacity(iters);
    let result = run_with_observer(problem, start, &cfg, &mut |ev| {
        let mu_prev = ev.prev.mu();
        let ratio = match cfg.variant {
            Variant::ShortStep => {
                let measured = ev
                    .dir
                    .dx
                    .iter()
                    .zip(ev.dir.ds.iter())
                    .map(|(a, b)| (a * b) * (a * b))
                    .sum::<f64>()
                    .sqrt();
                measured / bounds::second_order_bound_n2(cfg.theta, cfg.beta, cfg.delta, mu_prev)
            }
            Variant::LongStep => {
                let measured: f64 =
                    ev.dir.dx.iter().zip(ev.dir.ds.iter()).map(|(a, b)| (a * b).abs()).sum();
                measured
                    / bounds::second_order_bound_ns_l1(n, cfg.gamma, cfg.sigma_long, cfg.delta, mu_prev)
            }
        };
        ratios.push(ratio);
    })?;
    match result.status {
        SolverStatus::Converged | SolverStatus::IterationLimit => {}
        status => {
            return Err(AnalysisError::RunFailed {
                status,
                detail: result.diagnostic.unwrap_or_default(),
            })
        }
    }

    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median_ratio = if sorted.is_empty() {
        0.0
    } else if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    Ok(TightnessReport { ratios, max_ratio, median_ratio })
}

/// Iteration counts against problem size with a log-log least-squares fit.
#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub sizes: Vec<usize>,
    /// Mean iterations to convergence per size (rounded when trials > 1).
    pub iterations: Vec<usize>,
    /// Slope of `log L` against `log n`.
    pub fitted_exponent: f64,
    pub r_squared: f64,
}

/// Measures iterations-to-convergence over `sizes` (each averaged over
/// `trials` fresh instances) and fits `log L = a + p log n`.
///
/// Instances are LP-shaped (`q_rank = 0`, `m = max(1, n/8)`, unit `μ⁰`): the
/// claim under test is the iteration-count exponent, which does not depend on
/// the quadratic term, and the diagonal scaling path keeps the largest sizes
/// affordable.
pub fn scaling_experiment(
    variant: Variant,
    sizes: &[usize],
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<ScalingReport, AnalysisError> {
    if sizes.len() < 3 {
        return Err(AnalysisError::TooFewSizes(sizes.len()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] < 2 {
        return Err(AnalysisError::BadSizes(sizes.to_vec()));
    }
    let trials = trials.max(1);

    let mut iterations = Vec::with_capacity(sizes.len());
    for (si, &n) in sizes.iter().enumerate() {
        let mut total = 0usize;
        for trial in 0..trials {
            let spec = GenSpec {
                n,
                m: (n / 8).max(1),
                density: 1.0,
                q_rank: 0,
                mu0: 1.0,
                seed: crate::rng::SplitMix64::derive(seed, (si * trials + trial) as u64)
                    .next_u64(),
            };
            let (problem, start) = generate(&spec)?;
            let mut cfg = match variant {
                Variant::ShortStep => SolverConfig::short_step(),
                Variant::LongStep => SolverConfig::long_step(),
            };
            cfg.epsilon = eps;
            let result = crate::ipm::run(&problem, &start, &cfg)?;
            if result.status != SolverStatus::Converged {
                return Err(AnalysisError::RunFailed {
                    status: result.status,
                    detail: result
                        .diagnostic
                        .unwrap_or_else(|| format!("n = {n}, trial {trial}")),
                });
            }
            total += result.iterations;
        }
        iterations.push(((total as f64) / trials as f64).round() as usize);
    }

    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = iterations.iter().map(|&l| (l.max(1) as f64).ln()).collect();
    let (slope, _, r_squared) = fit_line(&xs, &ys);
    Ok(ScalingReport { sizes: sizes.to_vec(), iterations, fitted_exponent: slope, r_squared })
}

/// Ordinary least squares for `y = a + p x`; returns `(p, a, r²)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y) * (y - mean_y)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let fit = intercept + slope * x;
            (y - fit) * (y - fit)
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2)
}
