//! Quadratic upper bounds for sinusoids `g(x) = ξ cos(ηx + ρ)`.

/// One term `xi · cos(eta · x + rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineTerm {
    pub xi: f64,
    pub eta: f64,
    pub rho: f64,
}

impl CosineTerm {
    pub fn value(&self, x: f64) -> f64 {
        self.xi * (self.eta * x + self.rho).cos()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        -self.xi * self.eta * (self.eta * x + self.rho).sin()
    }
}

/// `a2 · (x - x_c)² + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticMajorizer {
    pub a2: f64,
    pub x_c: f64,
    pub c0: f64,
}

impl QuadraticMajorizer {
    pub fn value(&self, x: f64) -> f64 {
        self.a2 * (x - self.x_c).powi(2) + self.c0
    }

    /// Coefficients `(a, b, c)` of the expanded polynomial `a x² + b x + c`.
    pub fn coefficients(&self) -> (f64, f64, f64) {
        (
            self.a2,
            -2.0 * self.a2 * self.x_c,
            self.a2 * self.x_c * self.x_c + self.c0,
        )
    }
}

/// Tangent quadratic upper bound of `ξ cos(ηx + ρ)` at `x0`.
///
/// The curvature `|ξ|η²/2` dominates half the largest second derivative, so
/// the bound holds globally. A constant sinusoid gets the flat bound.
pub fn cos_quadratic_majorizer(xi: f64, eta: f64, rho: f64, x0: f64) -> QuadraticMajorizer {
    let g = CosineTerm { xi, eta, rho };
    let a2 = 0.5 * xi.abs() * eta * eta;
    let g0 = g.value(x0);
    if a2 == 0.0 {
        return QuadraticMajorizer { a2: 0.0, x_c: x0, c0: g0 };
    }
    let d0 = g.derivative(x0);
    QuadraticMajorizer {
        a2,
        x_c: x0 - d0 / (2.0 * a2),
        c0: g0 - d0 * d0 / (4.0 * a2),
    }
}

/// A constant plus a sum of cosine terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CosineSeries {
    pub constant: f64,
    pub terms: Vec<CosineTerm>,
}

impl CosineSeries {
    pub fn value(&self, x: f64) -> f64 {
        self.constant + self.terms.iter().map(|t| t.value(x)).sum::<f64>()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.derivative(x)).sum()
    }

    /// Adds `scale · Re{coef · exp(-j·eta·x)}`; a zero rate folds into the constant.
    pub fn add_re_exp(&mut self, coef: crate::C64, eta: f64, scale: f64) {
        if eta == 0.0 {
            self.constant += scale * coef.re;
        } else if coef.norm() > 0.0 {
            self.terms.push(CosineTerm {
                xi: scale * coef.norm(),
                eta,
                rho: -coef.arg(),
            });
        }
    }

    /// Adds `scale · |Σ_i p_i exp(-j·eta_i·x)|²`.
    pub fn add_abs_sq(&mut self, parts: &[(crate::C64, f64)], scale: f64) {
        for (i, (pi, ei)) in parts.iter().enumerate() {
            self.constant += scale * pi.norm_sqr();
            for (pj, ej) in &parts[i + 1..] {
                // 2 Re{conj(p_i) p_j exp(-j (e_j - e_i) x)}
                self.add_re_exp(pi.conj() * pj, ej - ei, 2.0 * scale);
            }
        }
    }

    /// Sum of the tangent majorizers at `x0` as `(a, b, c)` of `a x² + b x + c`.
    pub fn majorize(&self, x0: f64) -> (f64, f64, f64) {
        let mut acc = (0.0, 0.0, self.constant);
        for t in &self.terms {
            let (a, b, c) = cos_quadratic_majorizer(t.xi, t.eta, t.rho, x0).coefficients();
            acc.0 += a;
            acc.1 += b;
            acc.2 += c;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn flat_when_amplitude_or_rate_vanishes() {
        let q = cos_quadratic_majorizer(0.0, 3.0, 0.2, 1.0);
        assert_eq!((q.a2, q.c0), (0.0, 0.0));
        let q = cos_quadratic_majorizer(2.0, 0.0, 0.0, 1.0);
        assert_eq!((q.a2, q.c0), (0.0, 2.0));
    }

    #[test]
    fn tangent_at_expansion_point() {
        let (xi, eta, rho, x0) = (-1.7, 2.3, 0.4, 0.9);
        let q = cos_quadratic_majorizer(xi, eta, rho, x0);
        let g = CosineTerm { xi, eta, rho };
        assert!((q.value(x0) - g.value(x0)).abs() < 1e-12);
        let dq = 2.0 * q.a2 * (x0 - q.x_c);
        assert!((dq - g.derivative(x0)).abs() < 1e-12);
    }

    #[test]
    fn abs_sq_expansion_matches_direct() {
        let parts = [
            (C64::new(0.3, -1.2), 0.0),
            (C64::new(-0.7, 0.4), 1.3),
            (C64::new(0.2, 0.9), -0.6),
        ];
        let mut s = CosineSeries::default();
        s.add_abs_sq(&parts, 1.5);
        for i in 0..20 {
            let x = -3.0 + 0.37 * i as f64;
            let direct: C64 = parts
                .iter()
                .map(|(p, e)| p * C64::from_polar(1.0, -e * x))
                .sum();
            assert!((s.value(x) - 1.5 * direct.norm_sqr()).abs() < 1e-12);
        }
    }
}
