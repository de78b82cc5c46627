//! Quadratic program with one (possibly nonconvex) quadratic constraint:
//!
//! minimize `x^H A x - 2 Re{b^H x}` subject to `x^H P x + r <= 0`,
//! with `A ⪰ 0` and `P` Hermitian. Strong duality holds, so the optimum is
//! `x(μ) = (A + μP)^† b` for the multiplier `μ >= 0` found by bisection on
//! the constraint value, which is nonincreasing in `μ` wherever `A + μP ⪰ 0`.

use super::eig::{cholesky, hermitian_eigen};
use super::hermitian_part;
use crate::error::{IsacError, Result};
use crate::{CMat, CVec, C64};
use nalgebra::{Cholesky, Dyn};

#[derive(Debug, Clone, PartialEq)]
pub struct Qcqp1Problem {
    pub a_mat: CMat,
    pub b_vec: CVec,
    pub p_mat: CMat,
    pub r_const: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Qcqp1Solution {
    pub x: CVec,
    /// Multiplier of the quadratic constraint.
    pub mu: f64,
}

impl Qcqp1Problem {
    pub fn objective(&self, x: &CVec) -> f64 {
        x.dotc(&(&self.a_mat * x)).re - 2.0 * self.b_vec.dotc(x).re
    }

    pub fn constraint(&self, x: &CVec) -> f64 {
        x.dotc(&(&self.p_mat * x)).re + self.r_const
    }

    fn check_dims(&self) -> Result<usize> {
        let n = self.b_vec.len();
        if self.a_mat.shape() != (n, n) || self.p_mat.shape() != (n, n) {
            return Err(IsacError::Domain("QCQP dimensions differ".into()));
        }
        Ok(n)
    }
}

/// Solves the problem. `tol` bounds the relative width of the final multiplier
/// bracket; `mu_max_init` seeds the bracket when the constraint is unbounded
/// below only asymptotically.
pub fn solve_qcqp1(p: &Qcqp1Problem, tol: f64, mu_max_init: f64) -> Result<Qcqp1Solution> {
    p.check_dims()?;
    match Qcqp1Pencil::new(&p.a_mat, &p.p_mat, p.r_const) {
        Ok(pencil) => pencil.solve(&p.b_vec, tol, mu_max_init),
        Err(IsacError::IllConditioned(_)) => solve_singular(p, tol, mu_max_init),
        Err(e) => Err(e),
    }
}

/// Factorization of a problem with positive definite `A`, reusable across
/// right-hand sides `b`.
///
/// With `A = L L^H` and `L^{-1} P L^{-H} = V diag(λ) V^H`, the substitution
/// `x = L^{-H} V z` decouples the problem into scalar coordinates.
#[derive(Debug, Clone)]
pub struct Qcqp1Pencil {
    chol: Cholesky<C64, Dyn>,
    v: CMat,
    /// Eigenvalues divided by `scale`.
    lam: Vec<f64>,
    /// Constraint constant divided by `scale`.
    r: f64,
    scale: f64,
}

impl Qcqp1Pencil {
    pub fn new(a: &CMat, p: &CMat, r: f64) -> Result<Self> {
        let n = a.nrows();
        if a.shape() != (n, n) || p.shape() != (n, n) {
            return Err(IsacError::Domain("QCQP dimensions differ".into()));
        }
        let chol = cholesky(a)
            .ok_or_else(|| IsacError::IllConditioned("objective matrix not positive definite".into()))?;
        let l = chol.l();
        let x = l
            .solve_lower_triangular(&hermitian_part(p))
            .ok_or_else(|| IsacError::IllConditioned("singular Cholesky factor".into()))?;
        let c = l
            .solve_lower_triangular(&x.adjoint())
            .ok_or_else(|| IsacError::IllConditioned("singular Cholesky factor".into()))?;
        let (lam, v) = hermitian_eigen(&c);
        if lam.iter().any(|v| !v.is_finite()) {
            return Err(IsacError::IllConditioned("non-finite pencil spectrum".into()));
        }
        let mag = lam.iter().fold(r.abs(), |m, v| m.max(v.abs()));
        let scale = if mag > 0.0 { mag } else { 1.0 };
        Ok(Self {
            chol,
            v,
            lam: lam.iter().map(|v| v / scale).collect(),
            r: r / scale,
            scale,
        })
    }

    /// Scaled constraint value at scaled multiplier `mu` for coordinates `beta`.
    fn constraint_at(&self, beta: &[C64], mu: f64) -> f64 {
        self.lam
            .iter()
            .zip(beta)
            .map(|(l, b)| l * b.norm_sqr() / (1.0 + mu * l).powi(2))
            .sum::<f64>()
            + self.r
    }

    fn back_transform(&self, z: &CVec) -> CVec {
        let y = &self.v * z;
        self.chol
            .l()
            .adjoint()
            .solve_upper_triangular(&y)
            .expect("Cholesky factor has a nonzero diagonal")
    }

    pub fn solve(&self, b: &CVec, tol: f64, mu_max_init: f64) -> Result<Qcqp1Solution> {
        let n = self.lam.len();
        if b.len() != n {
            return Err(IsacError::Domain("QCQP dimensions differ".into()));
        }
        let lb = self
            .chol
            .l()
            .solve_lower_triangular(b)
            .expect("Cholesky factor has a nonzero diagonal");
        let beta: Vec<C64> = (self.v.adjoint() * lb).iter().copied().collect();
        let z_at = |mu: f64| CVec::from_fn(n, |i, _| beta[i] / (1.0 + mu * self.lam[i]));
        let finish = |mu: f64, z: CVec| Qcqp1Solution {
            x: self.back_transform(&z),
            mu: mu * self.scale,
        };

        if self.constraint_at(&beta, 0.0) <= 0.0 {
            return Ok(finish(0.0, z_at(0.0)));
        }
        let lam_min = self.lam[0];
        if lam_min >= 0.0 && self.r > 0.0 {
            return Err(IsacError::Infeasible(
                "positive semidefinite constraint with positive constant".into(),
            ));
        }
        let tol = tol.clamp(1e-16, 1e-3);

        // Bracket [lo, hi] with c(lo) > 0 >= c(hi) inside the dual-feasible range.
        let lo = 0.0;
        let hi = if lam_min < 0.0 {
            let mu_up = -1.0 / lam_min;
            let mut found = None;
            for j in 1..=60 {
                let cand = mu_up * (1.0 - 0.5f64.powi(j));
                if self.constraint_at(&beta, cand) <= 0.0 {
                    found = Some(cand);
                    break;
                }
            }
            match found {
                Some(h) => h,
                None => return self.hard_case(&beta, mu_up),
            }
        } else {
            let mut h = (mu_max_init / self.scale).max(1.0);
            while self.constraint_at(&beta, h) > 0.0 {
                h *= 4.0;
                if h > 1e300 {
                    return Err(IsacError::Infeasible(
                        "constraint cannot be met for any multiplier".into(),
                    ));
                }
            }
            h
        };
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..400 {
            if hi - lo <= tol * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.constraint_at(&beta, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(finish(hi, z_at(hi)))
    }

    /// The multiplier sits at the edge `1 + μλ_min = 0` of the dual-feasible
    /// range; the free null-space component is sized to make the constraint active.
    fn hard_case(&self, beta: &[C64], mu_up: f64) -> Result<Qcqp1Solution> {
        let n = self.lam.len();
        let singular: Vec<bool> = self
            .lam
            .iter()
            .map(|l| (1.0 + mu_up * l).abs() <= 1e-9)
            .collect();
        let mut z = CVec::zeros(n);
        let mut c_rest = self.r;
        for i in 0..n {
            if !singular[i] {
                z[i] = beta[i] / (1.0 + mu_up * self.lam[i]);
                c_rest += self.lam[i] * z[i].norm_sqr();
            }
        }
        if c_rest > 0.0 {
            let t = (c_rest / -self.lam[0]).sqrt();
            z[0] = C64::new(t, 0.0);
        }
        Ok(Qcqp1Solution {
            x: self.back_transform(&z),
            mu: mu_up * self.scale,
        })
    }
}

/// Fallback for singular `A`: pseudo-inverse solutions with a relative cutoff.
fn solve_singular(p: &Qcqp1Problem, tol: f64, mu_max_init: f64) -> Result<Qcqp1Solution> {
    let a = hermitian_part(&p.a_mat);
    let pm = hermitian_part(&p.p_mat);
    let (amin, _) = {
        let (vals, v) = hermitian_eigen(&a);
        (vals[0], v)
    };
    let anorm = a.norm();
    if amin < -1e-9 * anorm.max(f64::MIN_POSITIVE) {
        return Err(IsacError::Domain("objective matrix is not positive semidefinite".into()));
    }
    // Returns x(μ) and the constraint value, or None when A + μP is indefinite.
    let eval = |mu: f64| -> Option<(CVec, f64)> {
        let m = &a + &pm * C64::new(mu, 0.0);
        let (vals, vecs) = hermitian_eigen(&m);
        let mnorm = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let cutoff = 1e-12 * mnorm;
        if vals[0] < -cutoff {
            return None;
        }
        let coords = vecs.adjoint() * &p.b_vec;
        let z = CVec::from_fn(vals.len(), |i, _| {
            if vals[i] > cutoff {
                coords[i] / vals[i]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let x = &vecs * z;
        let c = p.constraint(&x);
        Some((x, c))
    };
    match eval(0.0) {
        Some((x, c)) if c <= 0.0 => return Ok(Qcqp1Solution { x, mu: 0.0 }),
        Some(_) => {}
        None => return Err(IsacError::Domain("objective matrix is not positive semidefinite".into())),
    }
    let mut lo = 0.0;
    let mut hi = mu_max_init.max(f64::MIN_POSITIVE);
    let mut cap = f64::INFINITY;
    let mut best = None;
    for _ in 0..400 {
        match eval(hi) {
            Some((x, c)) if c <= 0.0 => {
                best = Some((hi, x));
                break;
            }
            Some(_) => {
                lo = hi;
                hi = if cap.is_finite() { 0.5 * (hi + cap) } else { hi * 4.0 };
            }
            None => {
                cap = hi;
                hi = 0.5 * (lo + hi);
            }
        }
        if hi > 1e300 {
            break;
        }
    }
    let Some((mut hi, mut x_hi)) = best else {
        return Err(IsacError::IllConditioned(
            "no dual-feasible multiplier meets the constraint".into(),
        ));
    };
    let tol = tol.clamp(1e-16, 1e-3);
    for _ in 0..400 {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match eval(mid) {
            Some((x, c)) if c <= 0.0 => {
                hi = mid;
                x_hi = x;
            }
            Some(_) => lo = mid,
            None => {
                hi = mid;
            }
        }
    }
    Ok(Qcqp1Solution { x: x_hi, mu: hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn inactive_constraint() {
        let p = Qcqp1Problem {
            a_mat: CMat::identity(2, 2),
            b_vec: CVec::from_vec(vec![c(1.0), c(0.0)]),
            p_mat: -CMat::identity(2, 2),
            r_const: 0.0,
        };
        let s = solve_qcqp1(&p, 1e-12, 1.0).unwrap();
        assert_eq!(s.mu, 0.0);
        assert!((s.x[0] - c(1.0)).norm() < 1e-14 && s.x[1].norm() < 1e-14);
    }

    #[test]
    fn scalar_active_constraint() {
        let p = Qcqp1Problem {
            a_mat: CMat::from_element(1, 1, c(1.0)),
            b_vec: CVec::from_element(1, c(2.0)),
            p_mat: CMat::from_element(1, 1, c(1.0)),
            r_const: -1.0,
        };
        let s = solve_qcqp1(&p, 1e-14, 1.0).unwrap();
        assert!((s.x[0] - c(1.0)).norm() < 1e-10);
        assert!((s.mu - 1.0).abs() < 1e-9);
        // Grid over the feasible interval [-1, 1].
        let best = (0..=10_000)
            .map(|i| -1.0 + 2.0 * i as f64 / 10_000.0)
            .map(|x| x * x - 4.0 * x)
            .fold(f64::INFINITY, f64::min);
        assert!((p.objective(&s.x) - best).abs() < 1e-9);
    }

    #[test]
    fn psd_constraint_with_positive_constant_is_infeasible() {
        let p = Qcqp1Problem {
            a_mat: CMat::identity(2, 2),
            b_vec: CVec::from_vec(vec![c(1.0), c(1.0)]),
            p_mat: CMat::identity(2, 2),
            r_const: 1.0,
        };
        assert!(matches!(solve_qcqp1(&p, 1e-12, 1.0), Err(IsacError::Infeasible(_))));
    }

    #[test]
    fn hard_case_activates_null_direction() {
        // b has no component along the negative-curvature direction e2.
        let p = Qcqp1Problem {
            a_mat: CMat::identity(2, 2),
            b_vec: CVec::from_vec(vec![c(0.1), c(0.0)]),
            p_mat: CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(-1.0)])),
            r_const: 1.0,
        };
        let s = solve_qcqp1(&p, 1e-14, 1.0).unwrap();
        assert!(p.constraint(&s.x).abs() < 1e-9);
        assert!((s.mu - 1.0).abs() < 1e-9);
        // x1 = 0.1 / 2, |x2|^2 = 1 + x1^2
        assert!((s.x[0] - c(0.05)).norm() < 1e-9);
        assert!((s.x[1].norm_sqr() - 1.0025).abs() < 1e-9);
    }

    #[test]
    fn singular_objective_uses_pseudo_inverse() {
        let p = Qcqp1Problem {
            a_mat: CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(0.0)])),
            b_vec: CVec::from_vec(vec![c(2.0), c(0.0)]),
            p_mat: CMat::identity(2, 2),
            r_const: -1.0,
        };
        let s = solve_qcqp1(&p, 1e-14, 1.0).unwrap();
        assert!((s.x[0] - c(1.0)).norm() < 1e-8);
        assert!(s.x[1].norm() < 1e-12);
        assert!((s.mu - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pencil_reuse_matches_direct_solve() {
        let a = CMat::from_fn(3, 3, |i, j| if i == j { c(2.0 + i as f64) } else { C64::new(0.1, 0.2 * (i as f64 - j as f64)) });
        let a = hermitian_part(&a);
        let pm = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(-0.5), c(0.3)]));
        let pencil = Qcqp1Pencil::new(&a, &pm, 0.2).unwrap();
        for k in 0..3 {
            let b = CVec::from_fn(3, |i, _| C64::new((i + k) as f64, 1.0 - k as f64));
            let prob = Qcqp1Problem { a_mat: a.clone(), b_vec: b.clone(), p_mat: pm.clone(), r_const: 0.2 };
            let s1 = pencil.solve(&b, 1e-14, 1.0).unwrap();
            let s2 = solve_qcqp1(&prob, 1e-14, 1.0).unwrap();
            assert!((&s1.x - &s2.x).norm() < 1e-12);
            assert!(prob.constraint(&s1.x) <= 1e-12);
        }
    }
}
