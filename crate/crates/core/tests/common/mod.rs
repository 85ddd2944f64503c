//! Shared helpers for the integration suites: a brute-force dense solve of the
//! unreduced 3-block Newton system (kept independent of the production solve
//! path, which reduces to the augmented form), and a compact double-double
//! arithmetic used to re-evaluate scalar certifications at ~31 significant
//! digits.

#![allow(dead_code)]

use ipmqp_core::problem::{Iterate, QpProblem};
use nalgebra::{DMatrix, DVector};

/// Solves the full (2n+m)×(2n+m) block system
///
/// ```text
///   [ A    0   0 ] [dx]   [ 0  ]
///   [-Q   Aᵀ   I ] [dy] = [ 0  ]
///   [ S    0   X ] [ds]   [ t  ]
/// ```
///
/// with a completely pivoted dense LU. `t` is the third-block right-hand side
/// (ξ, or ξ + r when checking injected solves).
pub fn dense_three_block_solve(
    problem: &QpProblem,
    it: &Iterate,
    t: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
    let n = problem.num_vars();
    let m = problem.num_constraints();
    let dim = 2 * n + m;
    let a = problem.a().to_dense();
    let q = problem.q().to_dense();

    let mut k = DMatrix::<f64>::zeros(dim, dim);
    // Rows 0..m: [A 0 0]
    for i in 0..m {
        for j in 0..n {
            k[(i, j)] = a[(i, j)];
        }
    }
    // Rows m..m+n: [-Q Aᵀ I]
    for i in 0..n {
        for j in 0..n {
            k[(m + i, j)] = -q[(i, j)];
        }
        for j in 0..m {
            k[(m + i, n + j)] = a[(j, i)];
        }
        k[(m + i, n + m + i)] = 1.0;
    }
    // Rows m+n..: [S 0 X]
    for i in 0..n {
        k[(m + n + i, i)] = it.s()[i];
        k[(m + n + i, n + m + i)] = it.x()[i];
    }

    let mut rhs = DVector::<f64>::zeros(dim);
    for i in 0..n {
        rhs[m + n + i] = t[i];
    }

    let sol = k
        .full_piv_lu()
        .solve(&rhs)
        .expect("oracle three-block system is nonsingular");
    let dx = DVector::from_fn(n, |i, _| sol[i]);
    let dy = DVector::from_fn(m, |i, _| sol[n + i]);
    let ds = DVector::from_fn(n, |i, _| sol[n + m + i]);
    (dx, dy, ds)
}

/// `‖a − b‖ / (1 + ‖b‖)`.
pub fn rel_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

/// Double-double value `hi + lo` with `|lo| ≤ ulp(hi)/2`; roughly 31
/// significant decimal digits. Only the handful of operations the
/// certification formulas need.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(Dd { hi: -o.hi, lo: -o.lo })
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from_f64(q1)));
        let q2 = r.hi / o.hi;
        let r2 = r.sub(o.mul(Dd::from_f64(q2)));
        let q3 = r2.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2 + q3);
        Dd { hi, lo }
    }

    pub fn sqrt(self) -> Dd {
        // One Newton step on top of the f64 root doubles its precision.
        let y = Dd::from_f64(self.hi.sqrt());
        let refined = y.add(self.div(y)).mul(Dd::from_f64(0.5));
        refined
    }
}

#[cfg(test)]
mod dd_checks {
    use super::Dd;

    #[test]
    fn dd_arithmetic_beats_f64() {
        // (1 + 1e-20) - 1 is exactly representable in double-double.
        let tiny = Dd::from_f64(1e-20);
        let one = Dd::from_f64(1.0);
        let back = one.add(tiny).sub(one);
        assert!((back.to_f64() - 1e-20).abs() < 1e-35);
        // sqrt(2)² = 2 to ~1e-31.
        let two = Dd::from_f64(2.0);
        let r = two.sqrt().mul(two.sqrt()).sub(two);
        assert!(r.to_f64().abs() < 1e-30);
    }
}
