//! Minimizing a convex scalar quadratic over a box intersected with a
//! quadratic inequality.

/// `a x² + b x + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quadratic {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    /// Closed intervals of the real line where the quadratic is `<= 0`.
    fn nonpositive_set(&self) -> Vec<(f64, f64)> {
        let (a, b, c) = (self.a, self.b, self.c);
        if a == 0.0 {
            if b == 0.0 {
                return if c <= 0.0 {
                    vec![(f64::NEG_INFINITY, f64::INFINITY)]
                } else {
                    vec![]
                };
            }
            let root = -c / b;
            return if b > 0.0 {
                vec![(f64::NEG_INFINITY, root)]
            } else {
                vec![(root, f64::INFINITY)]
            };
        }
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return if a > 0.0 {
                vec![]
            } else {
                vec![(f64::NEG_INFINITY, f64::INFINITY)]
            };
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let (mut r1, mut r2) = if q == 0.0 {
            (0.0, 0.0)
        } else {
            (q / a, c / q)
        };
        if r1 > r2 {
            std::mem::swap(&mut r1, &mut r2);
        }
        if a > 0.0 {
            vec![(r1, r2)]
        } else {
            vec![(f64::NEG_INFINITY, r1), (r2, f64::INFINITY)]
        }
    }
}

/// Minimizes `obj` (with `obj.a >= 0`) over `{x ∈ [lo, hi] : cons(x) <= 0}`.
///
/// Falls back to `x_cur` when the feasible set is numerically empty, and never
/// returns a point whose objective exceeds that of a feasible `x_cur`.
pub fn min_quadratic_on_constrained_interval(
    obj: Quadratic,
    cons: Quadratic,
    lo: f64,
    hi: f64,
    x_cur: f64,
) -> f64 {
    let mut best: Option<(f64, f64)> = None;
    let mut consider = |x: f64| {
        let v = obj.value(x);
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((x, v));
        }
    };
    if x_cur >= lo && x_cur <= hi && cons.value(x_cur) <= 0.0 {
        consider(x_cur);
    }
    for (p, q) in cons.nonpositive_set() {
        let (p, q) = (p.max(lo), q.min(hi));
        if p > q {
            continue;
        }
        let x = if obj.a > 0.0 {
            (-obj.b / (2.0 * obj.a)).clamp(p, q)
        } else if obj.b > 0.0 {
            p
        } else if obj.b < 0.0 {
            q
        } else {
            x_cur.clamp(p, q)
        };
        // Roots are accurate to rounding only; pull a boundary point that
        // misses the constraint back toward the middle of the segment.
        if let Some(x) = pull_inside(&cons, x, 0.5 * (p + q)) {
            consider(x);
        }
    }
    best.map_or(x_cur, |(x, _)| x)
}

/// Nearest point to `x` on the segment towards `mid` that satisfies the
/// constraint, by bisection; `None` if even `mid` fails.
fn pull_inside(cons: &Quadratic, x: f64, mid: f64) -> Option<f64> {
    if cons.value(x) <= 0.0 {
        return Some(x);
    }
    if !mid.is_finite() || cons.value(mid) > 0.0 {
        return None;
    }
    let (mut bad, mut good) = (x, mid);
    for _ in 0..200 {
        let m = 0.5 * (bad + good);
        if m == bad || m == good {
            break;
        }
        if cons.value(m) <= 0.0 {
            good = m;
        } else {
            bad = m;
        }
    }
    Some(good)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_interior_minimum() {
        let x = min_quadratic_on_constrained_interval(
            Quadratic::new(1.0, -0.6, 0.09),
            Quadratic::new(0.0, 0.0, -1.0),
            0.0,
            1.0,
            0.5,
        );
        assert!((x - 0.3).abs() < 1e-12);
    }

    #[test]
    fn clamps_to_box() {
        let x = min_quadratic_on_constrained_interval(
            Quadratic::new(1.0, -4.0, 4.0),
            Quadratic::new(0.0, 0.0, -1.0),
            0.0,
            1.0,
            0.5,
        );
        assert_eq!(x, 1.0);
    }

    #[test]
    fn linear_constraint_boundary() {
        let x = min_quadratic_on_constrained_interval(
            Quadratic::new(1.0, -1.0, 0.25),
            Quadratic::new(0.0, -1.0, 0.7),
            0.0,
            1.0,
            0.9,
        );
        assert!((x - 0.7).abs() < 1e-12);
    }

    #[test]
    fn concave_constraint_picks_better_branch() {
        // Feasible: x <= 0.2 or x >= 0.8; objective centred at 0.45 prefers 0.2.
        let cons = Quadratic::new(-1.0, 1.0, -0.16);
        let x = min_quadratic_on_constrained_interval(
            Quadratic::new(1.0, -0.9, 0.0),
            cons,
            0.0,
            1.0,
            0.9,
        );
        assert!((x - 0.2).abs() < 1e-12);
    }

    #[test]
    fn empty_feasible_set_returns_current() {
        let x = min_quadratic_on_constrained_interval(
            Quadratic::new(1.0, 0.0, 0.0),
            Quadratic::new(0.0, 0.0, 1.0),
            0.0,
            1.0,
            0.4,
        );
        assert_eq!(x, 0.4);
    }

    #[test]
    fn boundary_root_lost_to_rounding_is_recovered() {
        let obj = Quadratic::new(0.0, -0.6269260284020495, 0.0);
        let cons = Quadratic::new(-0.09507703173036304, 1.4101791387543683, 0.6158029122855121);
        let (lo, hi) = (-0.6576695427974483, -0.6576695427974483 + 3.085648448391979);
        let x = min_quadratic_on_constrained_interval(obj, cons, lo, hi, lo);
        assert!(cons.value(x) <= 0.0);
        assert!((x + 0.4246).abs() < 1e-3, "{x}");
    }
}
