//! Problem representation, validation, and feasibility/gap measurement for the
//! primal-dual QP pair
//!
//! ```text
//!   min  cᵀx + ½ xᵀQx          max  bᵀy − ½ xᵀQx
//!   s.t. Ax = b, x ≥ 0         s.t. Aᵀy + s − Qx = c, s ≥ 0
//! ```
//!
//! with `A ∈ R^{m×n}` of full row rank, `m ≤ n`, and `Q` symmetric positive
//! semidefinite. `Q = 0` is the linear-programming special case and flows
//! through the same code path.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::MatrixStore;

/// Relative tolerance for the feasibility residuals a feasible method must
/// maintain. Exact arithmetic would keep them at zero; floating point
/// accumulates roundoff over the iterations.
pub const FEASIBILITY_RTOL: f64 = 1e-8;

/// Relative tolerance for the symmetry check on `Q`.
pub const SYMMETRY_RTOL: f64 = 1e-12;

/// A pivot counts toward the rank when it is at least this fraction of the
/// largest pivot.
pub const RANK_PIVOT_RTOL: f64 = 1e-10;

/// The positive semidefiniteness probe factors `Q + shift·I` with
/// `shift = PSD_SHIFT_FACTOR · trace(Q)/n`.
pub const PSD_SHIFT_FACTOR: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("A is rank deficient: rank {rank} < m = {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("Q is not symmetric: |Q[{i},{j}] - Q[{j},{i}]| = {deviation:e}")]
    NotSymmetric { i: usize, j: usize, deviation: f64 },
    #[error("Q is not positive semidefinite (shifted factorization failed, shift {shift:e})")]
    NotPsd { shift: f64 },
    #[error("iterate is not strictly interior: {which}[{index}] = {value:e}")]
    NonInterior { which: &'static str, index: usize, value: f64 },
}

/// A convex QP instance. Construction checks dimensions only; the expensive
/// rank and semidefiniteness prerequisites live in [`QpProblem::validate`].
#[derive(Debug, Clone)]
pub struct QpProblem {
    a: MatrixStore,
    q: MatrixStore,
    b: DVector<f64>,
    c: DVector<f64>,
    n: usize,
    m: usize,
}

impl QpProblem {
    pub fn new(
        a: MatrixStore,
        q: MatrixStore,
        b: DVector<f64>,
        c: DVector<f64>,
    ) -> Result<Self, QpError> {
        let m = a.nrows();
        let n = a.ncols();
        if n < 2 {
            return Err(QpError::DimensionMismatch(format!("n = {n}, need n >= 2")));
        }
        if m > n {
            return Err(QpError::DimensionMismatch(format!("m = {m} exceeds n = {n}")));
        }
        if q.nrows() != n || q.ncols() != n {
            return Err(QpError::DimensionMismatch(format!(
                "Q is {}x{}, expected {n}x{n}",
                q.nrows(),
                q.ncols()
            )));
        }
        if b.len() != m {
            return Err(QpError::DimensionMismatch(format!(
                "b has length {}, expected {m}",
                b.len()
            )));
        }
        if c.len() != n {
            return Err(QpError::DimensionMismatch(format!(
                "c has length {}, expected {n}",
                c.len()
            )));
        }
        Ok(QpProblem { a, q, b, c, n, m })
    }

    /// Convenience constructor from dense data; storage is picked by size.
    pub fn from_dense(
        a: DMatrix<f64>,
        q: DMatrix<f64>,
        b: DVector<f64>,
        c: DVector<f64>,
    ) -> Result<Self, QpError> {
        Ok(Self::new(
            MatrixStore::from_dense_auto(a),
            MatrixStore::from_dense_auto(q),
            b,
            c,
        )?)
    }

    pub fn a(&self) -> &MatrixStore {
        &self.a
    }

    pub fn q(&self) -> &MatrixStore {
        &self.q
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_constraints(&self) -> usize {
        self.m
    }

    /// Replaces `c`; used when a perturbed start re-derives the dual data.
    pub(crate) fn set_c(&mut self, c: DVector<f64>) {
        assert_eq!(c.len(), self.n);
        self.c = c;
    }

    /// Checks the structural prerequisites: `rank(A) = m` via a rank-revealing
    /// factorization, `Q` symmetric to [`SYMMETRY_RTOL`] relative, and `Q`
    /// positive semidefinite via a shifted Cholesky probe. Each failure aborts
    /// before any solve.
    pub fn validate(&self) -> Result<ValidationReport, QpError> {
        let rank = matrix_rank(&self.a);
        if rank < self.m {
            return Err(QpError::RankDeficient { rank, expected: self.m });
        }

        let scale = self.q.max_abs().max(1.0);
        let (sym_dev, (i, j)) = self.q.symmetry_deviation();
        if sym_dev > SYMMETRY_RTOL * scale {
            return Err(QpError::NotSymmetric { i, j, deviation: sym_dev });
        }

        let psd_shift = self.check_psd()?;

        Ok(ValidationReport { rank, sym_dev, psd_shift })
    }

    fn check_psd(&self) -> Result<f64, QpError> {
        let n = self.n;
        let diag = self.q.diagonal();
        let trace: f64 = diag.iter().sum();
        if trace <= 0.0 {
            // A symmetric PSD matrix with a nonpositive trace must be zero.
            return if self.q.max_abs() == 0.0 && trace == 0.0 {
                Ok(0.0)
            } else {
                Err(QpError::NotPsd { shift: 0.0 })
            };
        }
        let shift = PSD_SHIFT_FACTOR * trace / n as f64;
        let mut qd = self.q.to_dense();
        for i in 0..n {
            qd[(i, i)] += shift;
        }
        match qd.cholesky() {
            Some(_) => Ok(shift),
            None => Err(QpError::NotPsd { shift }),
        }
    }

    /// Feasibility residuals and average complementarity gap of an iterate,
    /// from fresh matrix-vector products.
    pub fn measure(&self, it: &Iterate) -> (FeasibilityReport, f64) {
        assert_eq!(it.x().len(), self.n, "iterate does not match problem dimensions");
        assert_eq!(it.y().len(), self.m, "iterate does not match problem dimensions");
        let primal_res = (self.a.mul_vec(it.x()) - &self.b).norm();
        let dual_res = (self.dual_point(it.x(), it.y(), it.s()) - &self.c).norm();
        let report = FeasibilityReport {
            primal_res,
            dual_res,
            primal_ok: primal_res <= FEASIBILITY_RTOL * (1.0 + self.b.norm()),
            dual_ok: dual_res <= FEASIBILITY_RTOL * (1.0 + self.c.norm()),
        };
        (report, compute_mu(it.x(), it.s()))
    }

    /// `Aᵀy + s − Qx`, the dual left-hand side. The generator derives `c` from
    /// this exact expression so that freshly built starts measure as exactly
    /// feasible.
    pub fn dual_point(&self, x: &DVector<f64>, y: &DVector<f64>, s: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul_vec(y) + s - self.q.mul_vec(x)
    }

    /// Primal and dual objective values. For primal-dual feasible points their
    /// difference equals the complementarity gap `xᵀs`.
    pub fn objective_pair(&self, it: &Iterate) -> (f64, f64) {
        let xqx = it.x().dot(&self.q.mul_vec(it.x()));
        let primal = self.c.dot(it.x()) + 0.5 * xqx;
        let dual = self.b.dot(it.y()) - 0.5 * xqx;
        (primal, dual)
    }
}

/// `μ = xᵀs / n`, always computed with the same expression so identical inputs
/// round identically.
pub fn compute_mu(x: &DVector<f64>, s: &DVector<f64>) -> f64 {
    x.dot(s) / x.len() as f64
}

/// Numerical rank via completely pivoted LU: pivots below
/// [`RANK_PIVOT_RTOL`] times the largest pivot do not count.
pub fn matrix_rank(a: &MatrixStore) -> usize {
    let dense = a.to_dense();
    let min_dim = dense.nrows().min(dense.ncols());
    let lu = dense.full_piv_lu();
    let u = lu.u();
    let largest = u[(0, 0)].abs();
    if largest == 0.0 {
        return 0;
    }
    (0..min_dim)
        .take_while(|&i| u[(i, i)].abs() >= RANK_PIVOT_RTOL * largest)
        .count()
}

/// Outcome of [`QpProblem::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Numerical rank of `A` (equals `m` when validation succeeds).
    pub rank: usize,
    /// Largest symmetry deviation found in `Q`.
    pub sym_dev: f64,
    /// Diagonal shift used by the semidefiniteness probe.
    pub psd_shift: f64,
}

/// Primal/dual equality residuals of an iterate, with relative flags against
/// [`FEASIBILITY_RTOL`] scaled by `1 + ‖b‖₂` and `1 + ‖c‖₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub primal_res: f64,
    pub dual_res: f64,
    pub primal_ok: bool,
    pub dual_ok: bool,
}

impl FeasibilityReport {
    pub fn both_ok(&self) -> bool {
        self.primal_ok && self.dual_ok
    }
}

/// One point on or near the central path: strictly interior `(x, y, s)` with
/// the average complementarity gap cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    s: DVector<f64>,
    mu: f64,
}

impl Iterate {
    /// Fails unless `x > 0` and `s > 0` componentwise with finite entries.
    pub fn new(x: DVector<f64>, y: DVector<f64>, s: DVector<f64>) -> Result<Self, QpError> {
        for (which, v) in [("x", &x), ("s", &s)] {
            for (index, &value) in v.iter().enumerate() {
                if !(value > 0.0) || !value.is_finite() {
                    return Err(QpError::NonInterior { which, index, value });
                }
            }
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(QpError::NonInterior { which: "y", index: 0, value: f64::NAN });
        }
        let mu = compute_mu(&x, &s);
        Ok(Iterate { x, y, s, mu })
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn s(&self) -> &DVector<f64> {
        &self.s
    }

    /// Cached `xᵀs / n`.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Componentwise complementarity products `x_j s_j`.
    pub fn products(&self) -> DVector<f64> {
        self.x.component_mul(&self.s)
    }

    /// The point `(x, y, s) + α (Δx, Δy, Δs)`; fails if interiority is lost.
    pub fn step(
        &self,
        dx: &DVector<f64>,
        dy: &DVector<f64>,
        ds: &DVector<f64>,
        alpha: f64,
    ) -> Result<Self, QpError> {
        Iterate::new(
            &self.x + dx * alpha,
            &self.y + dy * alpha,
            &self.s + ds * alpha,
        )
    }
}
