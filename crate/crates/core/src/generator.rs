//! Synthetic feasible QP instances with exactly-central starting points.
//!
//! The construction works backwards from the starting point so the feasible
//! preconditions hold with nothing to search for: sample `A` (resampling on
//! rank failure), `Q = GᵀG`, a componentwise start `x⁰ ∈ [0.5, 2]` with
//! `s⁰ = μ⁰/x⁰` (so every complementarity product equals μ⁰ and the point sits
//! exactly on the central path), then derive `b = Ax⁰` and
//! `c = Aᵀy⁰ + s⁰ − Qx⁰`. [`perturb_within`] manufactures boundary cases by
//! rescaling the products toward a neighbourhood boundary and re-deriving `c`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::MatrixStore;
use crate::neighborhood::proximity;
use crate::problem::{Iterate, QpError, QpProblem};
use crate::rng::SplitMix64;

/// Attempts at sampling a full-row-rank `A` before giving up.
const RANK_RESAMPLE_ATTEMPTS: usize = 10;

/// Relative pullback from an exact neighbourhood boundary, so points built by
/// [`perturb_within`] stay members under the unslacked membership tests.
const BOUNDARY_BACKOFF: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    BadSpec(String),
    #[error("could not sample a full-row-rank A in {RANK_RESAMPLE_ATTEMPTS} attempts")]
    RankResampleExhausted,
    #[error("margin {0} outside [0, 1]")]
    MarginOutOfRange(f64),
    #[error("perturbation requires an exactly central iterate (norm2 deviation {0:e})")]
    NotCentral(f64),
    #[error(transparent)]
    Problem(#[from] QpError),
}

/// Shape of a synthetic instance.
#[derive(Debug, Clone, Copy)]
pub struct GenSpec {
    pub n: usize,
    pub m: usize,
    /// Probability that an entry of `A` (and of the factor `G`) is nonzero.
    pub density: f64,
    /// Rank of `Q = GᵀG`; zero produces an LP instance.
    pub q_rank: usize,
    /// Average complementarity gap of the start.
    pub mu0: f64,
    pub seed: u64,
}

impl GenSpec {
    fn check(&self) -> Result<(), GenError> {
        if self.n < 2 {
            return Err(GenError::BadSpec(format!("n = {} < 2", self.n)));
        }
        if self.m == 0 || self.m > self.n {
            return Err(GenError::BadSpec(format!("m = {} not in 1..={}", self.m, self.n)));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(GenError::BadSpec(format!("density = {} not in (0, 1]", self.density)));
        }
        if self.q_rank > self.n {
            return Err(GenError::BadSpec(format!("q_rank = {} > n = {}", self.q_rank, self.n)));
        }
        if !(self.mu0 > 0.0) {
            return Err(GenError::BadSpec(format!("mu0 = {} not positive", self.mu0)));
        }
        Ok(())
    }
}

fn sample_matrix(rng: &mut SplitMix64, rows: usize, cols: usize, density: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        if density >= 1.0 || rng.next_f64() < density {
            rng.normal()
        } else {
            0.0
        }
    })
}

/// Builds a validated instance together with its exactly-central interior
/// start. Reproducible: the same spec (seed included) yields the same bits.
pub fn generate(spec: &GenSpec) -> Result<(QpProblem, Iterate), GenError> {
    spec.check()?;
    let mut rng = SplitMix64::new(spec.seed);
    let n = spec.n;
    let m = spec.m;

    let a = {
        let mut found = None;
        for _ in 0..RANK_RESAMPLE_ATTEMPTS {
            let cand = MatrixStore::from_dense_auto(sample_matrix(&mut rng, m, n, spec.density));
            if crate::problem::matrix_rank(&cand) == m {
                found = Some(cand);
                break;
            }
        }
        found.ok_or(GenError::RankResampleExhausted)?
    };

    let q = if spec.q_rank == 0 {
        MatrixStore::from_dense_auto(DMatrix::zeros(n, n))
    } else {
        let g = sample_matrix(&mut rng, spec.q_rank, n, spec.density);
        MatrixStore::from_dense_auto(g.transpose() * g)
    };

    let x0 = DVector::from_fn(n, |_, _| rng.uniform(0.5, 2.0));
    let s0 = DVector::from_fn(n, |j, _| spec.mu0 / x0[j]);
    let y0 = DVector::from_fn(m, |_, _| rng.normal());

    let b = a.mul_vec(&x0);
    // Same expression and evaluation order as QpProblem::dual_point, so the
    // start measures as exactly dual feasible.
    let c = a.tr_mul_vec(&y0) + &s0 - q.mul_vec(&x0);

    let problem = QpProblem::new(a, q, b, c)?;
    problem.validate()?;
    let start = Iterate::new(x0, y0, s0)?;
    Ok((problem, start))
}

/// Which neighbourhood boundary [`perturb_within`] aims for.
#[derive(Debug, Clone, Copy)]
pub enum PerturbTarget {
    /// `‖XSe − μe‖₂ = margin · θ · μ`.
    N2 { theta: f64 },
    /// Product ratios at the margin-interpolated box
    /// `[1 − margin(1−γ), 1 + margin(1/γ−1)]`.
    Ns { gamma: f64 },
}

/// Moves an exactly-central iterate to the requested fraction of a
/// neighbourhood boundary by rescaling `s` componentwise, and returns the
/// instance re-derived so the perturbed point stays exactly feasible
/// (`x` and `y` are unchanged, `c` is rebuilt from the new `s`).
pub fn perturb_within(
    problem: &QpProblem,
    it: &Iterate,
    target: PerturbTarget,
    margin: f64,
    seed: u64,
) -> Result<(QpProblem, Iterate), GenError> {
    if !(0.0..=1.0).contains(&margin) {
        return Err(GenError::MarginOutOfRange(margin));
    }
    let prox = proximity(it);
    if prox.norm2_dev > 1e-10 * prox.mu {
        return Err(GenError::NotCentral(prox.norm2_dev));
    }
    if margin == 0.0 {
        return Ok((problem.clone(), it.clone()));
    }

    let n = it.dim();
    let factors = match target {
        PerturbTarget::N2 { theta } => {
            assert!(theta > 0.0 && theta < 1.0);
            // Zero-sum unit direction: products move but their mean stays put.
            let mut rng = SplitMix64::new(seed);
            let mut u = DVector::from_fn(n, |_, _| rng.normal());
            let mean = u.sum() / n as f64;
            u.add_scalar_mut(-mean);
            let norm = u.norm();
            if norm == 0.0 {
                return Err(GenError::BadSpec("degenerate perturbation direction".into()));
            }
            u /= norm;
            let amplitude = margin * theta * (1.0 - BOUNDARY_BACKOFF);
            DVector::from_fn(n, |j, _| 1.0 + amplitude * u[j])
        }
        PerturbTarget::Ns { gamma } => {
            assert!(gamma > 0.0 && gamma < 1.0);
            let down = margin * (1.0 - gamma) * (1.0 - BOUNDARY_BACKOFF);
            let up = margin * (1.0 / gamma - 1.0) * (1.0 - BOUNDARY_BACKOFF);
            let mut t = DVector::from_element(n, 1.0);
            t[0] = 1.0 - down;
            if n == 2 {
                // Mirror so the mean stays 1; the upper side lands strictly
                // inside the box.
                t[1] = 1.0 + down;
            } else {
                t[1] = 1.0 + up;
                let filler = 1.0 - (up - down) / (n - 2) as f64;
                if filler >= t[0] {
                    for j in 2..n {
                        t[j] = filler;
                    }
                } else {
                    // Extreme γ at small n: hit the lower boundary only and
                    // spread the mass evenly.
                    t[1] = 1.0 + down / (n - 1) as f64;
                    for j in 2..n {
                        t[j] = t[1];
                    }
                }
            }
            t
        }
    };

    let s_new = it.s().component_mul(&factors);
    let mut new_problem = problem.clone();
    let c = new_problem.a().tr_mul_vec(it.y()) + &s_new - new_problem.q().mul_vec(it.x());
    new_problem.set_c(c);
    let new_it = Iterate::new(it.x().clone(), it.y().clone(), s_new)?;
    Ok((new_problem, new_it))
}
