//! Small dense solvers used by the alternating optimizer.

mod eig;
mod interval;
mod majorizer;
mod qcqp;

pub use eig::{generalized_max_eigvec, hermitian_eigen, rayleigh_quotient};
pub use interval::{min_quadratic_on_constrained_interval, Quadratic};
pub use majorizer::{cos_quadratic_majorizer, CosineSeries, CosineTerm, QuadraticMajorizer};
pub use qcqp::{solve_qcqp1, Qcqp1Pencil, Qcqp1Problem, Qcqp1Solution};

use crate::{CMat, C64};

/// `(M + M^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}
