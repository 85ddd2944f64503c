//! Assembly and solution of the Newton step equations
//!
//! ```text
//!   [ A    0   0 ] [Δx]   [ 0     ]
//!   [-Q   Aᵀ   I ] [Δy] = [ 0     ]
//!   [ S    0   X ] [Δs]   [ ξ + r ]
//! ```
//!
//! with `ξ = σμe − XSe`. The first two blocks are always satisfied to roundoff;
//! the third may carry a residual `r` with `‖r‖_p ≤ δ‖ξ‖_p`, realized either by
//! explicit injection or by truncating an iterative inner solve.
//!
//! The canonical solve path eliminates `Δs` and works on the augmented system
//!
//! ```text
//!   [ -Q - Θ⁻¹   Aᵀ ] [Δx]   [ -X⁻¹(ξ+r) ]          Θ = X S⁻¹,
//!   [  A         0  ] [Δy] = [  0        ]
//! ```
//!
//! factorized blockwise: a Cholesky factorization of `H = Q + Θ⁻¹` (plain
//! reciprocals when `Q` has no off-diagonal entries) followed by a Cholesky
//! factorization of the Schur complement `A H⁻¹ Aᵀ`, with a couple of steps of
//! iterative refinement on the augmented residuals. The unreduced 3-block
//! system exists only as a test oracle.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::linalg::norm_p;
use crate::problem::{Iterate, QpProblem};
use crate::rng::SplitMix64;

/// Inner-solve iteration cap, as a multiple of `n + m`.
const INNER_ITER_FACTOR: usize = 10;

/// Refinement stops once the augmented residual blocks drop below this factor
/// times their natural scales.
const REFINE_RTOL: f64 = 1e-13;
const MAX_REFINE_STEPS: usize = 2;

#[derive(Debug, Error)]
pub enum NewtonError {
    #[error("singular Newton system: {0}")]
    SingularSystem(&'static str),
    #[error("inner solver hit the iteration cap ({cap}) at residual ratio {ratio:e}")]
    MaxInnerIterations { cap: usize, ratio: f64 },
}

/// Which norm pairs the residual contract `‖r‖_p ≤ δ‖ξ‖_p`: the Euclidean
/// norm in the short-step regime, the infinity norm in the long-step regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormTag {
    Two,
    Inf,
}

/// Right-hand side of the third Newton block: `ξ = σμe − XSe`.
#[derive(Debug, Clone)]
pub struct NewtonTarget {
    pub xi: DVector<f64>,
    pub sigma: f64,
    pub norm: NormTag,
}

impl NewtonTarget {
    pub fn xi_norm(&self) -> f64 {
        norm_p(&self.xi, self.norm)
    }
}

/// Builds the target `ξ_j = σμ − x_j s_j` from the current iterate.
pub fn assemble_target(it: &Iterate, sigma: f64, norm: NormTag) -> NewtonTarget {
    debug_assert!(sigma > 0.0 && sigma <= 1.0);
    let target = sigma * it.mu();
    let xi = DVector::from_fn(it.dim(), |j, _| target - it.x()[j] * it.s()[j]);
    NewtonTarget { xi, sigma, norm }
}

/// How the inexactness budget is spent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InexactMode {
    /// Direct factorization; the realized residual is roundoff only.
    Exact,
    /// Solve exactly against a perturbed right-hand side `ξ + r` with an
    /// explicitly chosen `r`.
    Inject,
    /// Truncated projected conjugate-gradient inner solve.
    Iterative,
}

/// Shape of an injected residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectShape {
    /// Random direction, rescaled to the requested norm.
    RandomSphere,
    /// `r_j ∝ −sign(ξ_j)`: pushes every component against the target, the
    /// worst case the second-order bounds are proved for.
    AdversarialSign,
    /// `r ∝ ξ`: overshoots the target.
    AlignedWithXi,
}

#[derive(Debug, Clone)]
pub struct InexactnessPolicy {
    pub mode: InexactMode,
    /// Admissible relative residual `δ ∈ [0, 1)`.
    pub delta: f64,
    pub inject_shape: InjectShape,
    /// `‖r‖ = inject_fraction · δ · ‖ξ‖` in injection mode.
    pub inject_fraction: f64,
    pub seed: u64,
}

impl InexactnessPolicy {
    pub fn exact() -> Self {
        InexactnessPolicy {
            mode: InexactMode::Exact,
            delta: 0.0,
            inject_shape: InjectShape::RandomSphere,
            inject_fraction: 0.0,
            seed: 0,
        }
    }

    pub fn inject(delta: f64, shape: InjectShape, fraction: f64, seed: u64) -> Self {
        assert!((0.0..1.0).contains(&delta));
        assert!((0.0..=1.0).contains(&fraction));
        InexactnessPolicy {
            mode: InexactMode::Inject,
            delta,
            inject_shape: shape,
            inject_fraction: fraction,
            seed,
        }
    }

    pub fn iterative(delta: f64) -> Self {
        assert!((0.0..1.0).contains(&delta));
        InexactnessPolicy {
            mode: InexactMode::Iterative,
            delta,
            inject_shape: InjectShape::RandomSphere,
            inject_fraction: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// One inner solve's output. The first two Newton blocks hold to roundoff in
/// every mode; the third satisfies `SΔx + XΔs = ξ + r` with the reported `r`.
#[derive(Debug, Clone)]
pub struct NewtonDirection {
    pub dx: DVector<f64>,
    pub dy: DVector<f64>,
    pub ds: DVector<f64>,
    /// Third-block residual: zero for exact solves, the injected vector in
    /// injection mode, the realized `−X r_x` for iterative solves.
    pub r: DVector<f64>,
    /// `‖r‖_p / ‖ξ‖_p` with the realized residual; zero when `ξ = 0`.
    pub r_norm_ratio: f64,
    /// Inner iterations spent (zero for the direct paths).
    pub inner_iterations: usize,
}

impl NewtonDirection {
    /// `ΔxᵀΔs`, which equals `ΔxᵀQΔx` for directions whose first two blocks
    /// are exact, hence is nonnegative for PSD `Q`.
    pub fn dx_dot_ds(&self) -> f64 {
        self.dx.dot(&self.ds)
    }
}

/// `(‖ΔXΔSe‖₁, ‖ΔXΔSe‖_∞, ΔxᵀΔs)` for lemma auditing.
pub fn second_order_diagnostics(dir: &NewtonDirection) -> (f64, f64, f64) {
    let mut l1 = 0.0;
    let mut linf = 0.0f64;
    let mut dot = 0.0;
    for (dx, ds) in dir.dx.iter().zip(dir.ds.iter()) {
        let p = dx * ds;
        l1 += p.abs();
        linf = linf.max(p.abs());
        dot += p;
    }
    (l1, linf, dot)
}

enum HFactor {
    /// `H` is diagonal (no off-diagonal entries in `Q`); stores `diag(H)`.
    Diagonal(DVector<f64>),
    Dense(Cholesky<f64, Dyn>),
}

/// Blockwise factorization of the augmented matrix for one iterate: Cholesky
/// of `H = Q + Θ⁻¹` plus Cholesky of the Schur complement `A H⁻¹ Aᵀ`.
/// Reusable for several right-hand sides at the same iterate.
pub struct AugmentedSolver<'a> {
    problem: &'a QpProblem,
    x: DVector<f64>,
    s: DVector<f64>,
    /// `Θ⁻¹ = S X⁻¹` componentwise.
    theta_inv: DVector<f64>,
    h: HFactor,
    schur: Cholesky<f64, Dyn>,
}

impl<'a> AugmentedSolver<'a> {
    pub fn new(problem: &'a QpProblem, it: &Iterate) -> Result<Self, NewtonError> {
        let n = problem.num_vars();
        let m = problem.num_constraints();
        let x = it.x().clone();
        let s = it.s().clone();
        let theta_inv = s.component_div(&x);
        if !theta_inv.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(NewtonError::SingularSystem("nonpositive or overflowed scaling"));
        }
        let q_diag = problem.q().diagonal();

        let h = if problem.q().is_diagonal() {
            HFactor::Diagonal(&theta_inv + &q_diag)
        } else {
            let mut hd = problem.q().to_dense();
            for i in 0..n {
                hd[(i, i)] += theta_inv[i];
            }
            match Cholesky::new(hd) {
                Some(chol) => HFactor::Dense(chol),
                None => return Err(NewtonError::SingularSystem("H factorization failed")),
            }
        };

        let mut sc = DMatrix::zeros(m, m);
        match &h {
            HFactor::Diagonal(hd) => {
                let weights = DVector::from_fn(n, |j, _| 1.0 / hd[j]);
                problem.a().add_weighted_gram(&weights, &mut sc);
            }
            HFactor::Dense(chol) => {
                let at = problem.a().to_dense().transpose();
                let v = chol.solve(&at);
                sc = problem.a().to_dense() * v;
                // Symmetrize: the product is symmetric up to roundoff.
                for k in 0..m {
                    for i in (k + 1)..m {
                        let avg = 0.5 * (sc[(i, k)] + sc[(k, i)]);
                        sc[(i, k)] = avg;
                        sc[(k, i)] = avg;
                    }
                }
            }
        }
        let schur = Cholesky::new(sc)
            .ok_or(NewtonError::SingularSystem("Schur complement factorization failed"))?;

        Ok(AugmentedSolver { problem, x, s, theta_inv, h, schur })
    }

    fn h_solve(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.h {
            HFactor::Diagonal(hd) => v.component_div(hd),
            HFactor::Dense(chol) => chol.solve(v),
        }
    }

    /// `H v` applied through the problem data (exploits sparse `Q`).
    fn h_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        self.problem.q().mul_vec(v) + self.theta_inv.component_mul(v)
    }

    /// Solves `H dx − Aᵀ dy = w`, `A dx = g` through the factorization.
    fn solve_kkt(&self, w: &DVector<f64>, g: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let hw = self.h_solve(w);
        let rhs = g - self.problem.a().mul_vec(&hw);
        let dy = self.schur.solve(&rhs);
        let dx = self.h_solve(&(self.problem.a().tr_mul_vec(&dy) + w));
        (dx, dy)
    }

    /// [`Self::solve_kkt`] with `g = 0` plus iterative refinement of the
    /// augmented residuals, so the equality blocks hold to near roundoff even
    /// late in a run when `Θ` is badly spread.
    fn solve_refined(&self, w: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let zero = DVector::zeros(self.problem.num_constraints());
        let (mut dx, mut dy) = self.solve_kkt(w, &zero);
        let w_scale = 1.0 + w.norm();
        for _ in 0..MAX_REFINE_STEPS {
            let res1 = w - (self.h_mul(&dx) - self.problem.a().tr_mul_vec(&dy));
            let res2 = -self.problem.a().mul_vec(&dx);
            if res1.norm() <= REFINE_RTOL * w_scale && res2.norm() <= REFINE_RTOL * w_scale {
                break;
            }
            let (ddx, ddy) = self.solve_kkt(&res1, &res2);
            dx += ddx;
            dy += ddy;
        }
        (dx, dy)
    }

    /// Direct solve against third-block right-hand side `t`; `Δs` is recovered
    /// from the third block so it equals `X⁻¹(t − SΔx)` exactly.
    fn direct_direction(&self, t: &DVector<f64>) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let w = t.component_div(&self.x);
        let (dx, dy) = self.solve_refined(&w);
        let ds = (t - self.s.component_mul(&dx)).component_div(&self.x);
        (dx, dy, ds)
    }
}

/// Exact Newton direction via the augmented factorization.
pub fn solve_exact(
    problem: &QpProblem,
    it: &Iterate,
    tgt: &NewtonTarget,
) -> Result<NewtonDirection, NewtonError> {
    let solver = AugmentedSolver::new(problem, it)?;
    let (dx, dy, ds) = solver.direct_direction(&tgt.xi);
    let xi_norm = tgt.xi_norm();
    let realized = &solver.s.component_mul(&dx) + solver.x.component_mul(&ds) - &tgt.xi;
    let ratio = if xi_norm > 0.0 { norm_p(&realized, tgt.norm) / xi_norm } else { 0.0 };
    Ok(NewtonDirection {
        dx,
        dy,
        ds,
        r: DVector::zeros(tgt.xi.len()),
        r_norm_ratio: ratio,
        inner_iterations: 0,
    })
}

/// Chooses `r` with `‖r‖_p = fraction · δ · ‖ξ‖_p` by the policy shape, then
/// solves the system exactly against `ξ + r`.
pub fn inject_residual(
    problem: &QpProblem,
    it: &Iterate,
    tgt: &NewtonTarget,
    policy: &InexactnessPolicy,
) -> Result<NewtonDirection, NewtonError> {
    assert_eq!(policy.mode, InexactMode::Inject, "policy mode must be Inject");
    let r = build_injection(&tgt.xi, tgt.norm, policy);
    let solver = AugmentedSolver::new(problem, it)?;
    let t = &tgt.xi + &r;
    let (dx, dy, ds) = solver.direct_direction(&t);
    let xi_norm = tgt.xi_norm();
    let ratio = if xi_norm > 0.0 { norm_p(&r, tgt.norm) / xi_norm } else { 0.0 };
    Ok(NewtonDirection { dx, dy, ds, r, r_norm_ratio: ratio, inner_iterations: 0 })
}

fn build_injection(xi: &DVector<f64>, norm: NormTag, policy: &InexactnessPolicy) -> DVector<f64> {
    let n = xi.len();
    let xi_norm = norm_p(xi, norm);
    let target = policy.inject_fraction * policy.delta * xi_norm;
    if target == 0.0 || xi_norm == 0.0 {
        return DVector::zeros(n);
    }
    let shape = match policy.inject_shape {
        InjectShape::RandomSphere => {
            let mut rng = SplitMix64::new(policy.seed);
            DVector::from_fn(n, |_, _| rng.normal())
        }
        InjectShape::AdversarialSign => DVector::from_fn(n, |j, _| -xi[j].signum() * ((xi[j] != 0.0) as u8 as f64)),
        InjectShape::AlignedWithXi => xi.clone(),
    };
    let shape_norm = norm_p(&shape, norm);
    if shape_norm == 0.0 {
        return DVector::zeros(n);
    }
    shape * (target / shape_norm)
}

/// Truncated inner solve on the augmented system: projected conjugate
/// gradients on `min ½ΔxᵀHΔx − Δxᵀ(X⁻¹ξ)` over `AΔx = 0`, preconditioned by
/// the constraint preconditioner `[[diag(H), Aᵀ],[A, 0]]`.
///
/// Every inner iterate keeps the second augmented block at roundoff level
/// (its primal block lies in null(A) by the projection), and the loop stops as
/// soon as `‖X r_x‖_p ≤ δ‖ξ‖_p`. The weighted projection solves
/// `A diag(H)⁻¹ Aᵀ`, factorized once per call.
pub fn solve_iterative(
    problem: &QpProblem,
    it: &Iterate,
    tgt: &NewtonTarget,
    policy: &InexactnessPolicy,
) -> Result<NewtonDirection, NewtonError> {
    assert_eq!(policy.mode, InexactMode::Iterative, "policy mode must be Iterative");
    let n = problem.num_vars();
    let m = problem.num_constraints();
    let cap = INNER_ITER_FACTOR * (n + m);

    let xi_norm = tgt.xi_norm();
    if xi_norm == 0.0 {
        return Ok(NewtonDirection {
            dx: DVector::zeros(n),
            dy: DVector::zeros(m),
            ds: DVector::zeros(n),
            r: DVector::zeros(n),
            r_norm_ratio: 0.0,
            inner_iterations: 0,
        });
    }

    let x = it.x();
    let s = it.s();
    let theta_inv = s.component_div(x);
    if !theta_inv.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(NewtonError::SingularSystem("nonpositive or overflowed scaling"));
    }
    let m_diag = &theta_inv + problem.q().diagonal();
    let h_mul = |v: &DVector<f64>| problem.q().mul_vec(v) + theta_inv.component_mul(v);

    // Weighted projection: G = A diag(H)⁻¹ Aᵀ, factorized once.
    let mut gram = DMatrix::zeros(m, m);
    let m_inv = DVector::from_fn(n, |j, _| 1.0 / m_diag[j]);
    problem.a().add_weighted_gram(&m_inv, &mut gram);
    let gram_chol = Cholesky::new(gram)
        .ok_or(NewtonError::SingularSystem("projection Gram factorization failed"))?;

    // Applies the constraint preconditioner: v = M⁻¹(g − Aᵀu), A v = 0. One
    // round of saddle-system refinement follows the direct application: once
    // the null-space component of g is small against ‖g‖, the subtraction
    // g − Aᵀu cancels catastrophically and would floor the attainable
    // residual near √ε.
    let precond = |g: &DVector<f64>| {
        let mut u = gram_chol.solve(&problem.a().mul_vec(&g.component_mul(&m_inv)));
        let mut v = (g - problem.a().tr_mul_vec(&u)).component_mul(&m_inv);
        let res1 = g - m_diag.component_mul(&v) - problem.a().tr_mul_vec(&u);
        let res2 = -problem.a().mul_vec(&v);
        let du = gram_chol.solve(&(problem.a().mul_vec(&res1.component_mul(&m_inv)) - res2));
        let dv = (res1 - problem.a().tr_mul_vec(&du)).component_mul(&m_inv);
        v += dv;
        u += du;
        (v, u)
    };

    let w = tgt.xi.component_div(x);
    let threshold = policy.delta * xi_norm;

    let mut z = DVector::zeros(n);
    let mut g = -&w;
    let (mut v, mut u) = precond(&g);
    let mut gv = g.dot(&v);
    let mut p_dir: DVector<f64> = DVector::zeros(n);
    let mut inner = 0usize;

    let residual_vec =
        |v: &DVector<f64>| -> DVector<f64> { x.component_mul(&m_diag.component_mul(v)) };

    loop {
        let r_vec = residual_vec(&v);
        let r_norm = norm_p(&r_vec, tgt.norm);
        if r_norm <= threshold {
            let dx = z;
            let dy = u;
            let ds = problem.q().mul_vec(&dx) - problem.a().tr_mul_vec(&dy);
            let ratio = r_norm / xi_norm;
            return Ok(NewtonDirection {
                dx,
                dy,
                ds,
                r: r_vec,
                r_norm_ratio: ratio,
                inner_iterations: inner,
            });
        }
        if inner >= cap {
            return Err(NewtonError::MaxInnerIterations { cap, ratio: r_norm / xi_norm });
        }

        if inner == 0 {
            p_dir = -&v;
        } else {
            // gv here is already the fresh gᵀv; the previous one is kept below.
        }
        let hp = h_mul(&p_dir);
        let denom = p_dir.dot(&hp);
        if !(denom > 0.0) || !denom.is_finite() {
            return Err(NewtonError::SingularSystem("inner solve lost positive definiteness"));
        }
        let alpha = gv / denom;
        z += &p_dir * alpha;
        g += hp * alpha;
        let (v_new, u_new) = precond(&g);
        let gv_new = g.dot(&v_new);
        let beta = gv_new / gv;
        p_dir = -&v_new + &p_dir * beta;
        v = v_new;
        u = u_new;
        gv = gv_new;
        inner += 1;
    }
}

/// Dispatches on the policy mode. The per-iteration entry point of the outer
/// algorithms.
pub fn compute_direction(
    problem: &QpProblem,
    it: &Iterate,
    tgt: &NewtonTarget,
    policy: &InexactnessPolicy,
) -> Result<NewtonDirection, NewtonError> {
    match policy.mode {
        InexactMode::Exact => solve_exact(problem, it, tgt),
        InexactMode::Inject => inject_residual(problem, it, tgt, policy),
        InexactMode::Iterative => solve_iterative(problem, it, tgt, policy),
    }
}
