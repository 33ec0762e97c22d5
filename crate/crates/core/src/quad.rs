//! Root bracketing and adaptive quadrature.

use crate::{Error, Result};

/// Bisection for the crossing of an increasing function: returns `x` with
/// `f(x) ≈ 0`, given `f(lo) ≤ 0 < f(hi)`. Stops when the bracket is
/// narrower than `tol`.
pub fn bisect_increasing<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    for _ in 0..max_iter {
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi - lo <= tol {
        Ok(0.5 * (lo + hi))
    } else {
        Err(Error::NoConvergence {
            what: "bisection",
            iterations: max_iter,
        })
    }
}

/// Grows `hi` geometrically away from `lo` until `f(hi) > 0`.
pub fn bracket_above<F: FnMut(f64) -> f64>(mut f: F, lo: f64, step: f64, max_doublings: usize) -> Result<f64> {
    let mut width = step;
    for _ in 0..max_doublings {
        let hi = lo + width;
        if f(hi) > 0.0 {
            return Ok(hi);
        }
        width *= 2.0;
    }
    Err(Error::NoConvergence {
        what: "bracket expansion",
        iterations: max_doublings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub evals: usize,
    /// False when some panel hit the depth limit before meeting its tolerance.
    pub converged: bool,
}

const MAX_DEPTH: u32 = 40;
const SEED_PANELS: usize = 8;
/// Per-call evaluation budget; exceeding it marks the result unconverged.
const MAX_EVALS: usize = 1 << 22;
const ROUNDOFF: f64 = 1e-14;

struct Simpson<F> {
    f: F,
    evals: usize,
    converged: bool,
}

impl<F: FnMut(f64) -> f64> Simpson<F> {
    fn eval(&mut self, x: f64) -> f64 {
        self.evals += 1;
        (self.f)(x)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm);
        let frm = self.eval(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if diff.abs() <= 15.0 * tol || diff.abs() <= ROUNDOFF * (left.abs() + right.abs()) {
            return left + right + diff / 15.0;
        }
        if depth >= MAX_DEPTH || self.evals >= MAX_EVALS {
            self.converged = false;
            return left + right + diff / 15.0;
        }
        self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
            + self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
    }
}

/// Adaptive Simpson over the panels delimited by `breaks` (sorted,
/// at least two points). Known kinks of the integrand belong in `breaks`.
/// The absolute tolerance is `rel_tol` times a coarse estimate of the
/// integral of `|f|`, floored at `abs_floor`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, breaks: &[f64], rel_tol: f64, abs_floor: f64) -> Quadrature {
    let mut s = Simpson {
        f,
        evals: 0,
        converged: true,
    };
    let mut seeds = alloc::vec::Vec::new();
    let mut scale = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let h = (b - a) / SEED_PANELS as f64;
        // Breakpoints may carry jumps: take one-sided limits at panel ends.
        let inset = (b - a) * 1e-14;
        let mut fa = s.eval(a + inset);
        for k in 0..SEED_PANELS {
            let x0 = a + h * k as f64;
            let x1 = if k + 1 == SEED_PANELS { b } else { x0 + h };
            let xm = 0.5 * (x0 + x1);
            let fm = s.eval(xm);
            let fb = s.eval(if k + 1 == SEED_PANELS { b - inset } else { x1 });
            let whole = (x1 - x0) / 6.0 * (fa + 4.0 * fm + fb);
            scale += (x1 - x0) / 6.0 * (fa.abs() + 4.0 * fm.abs() + fb.abs());
            seeds.push((x0, x1, fa, fm, fb, whole));
            fa = fb;
        }
    }
    let total_width: f64 = seeds.iter().map(|p| p.1 - p.0).sum();
    let tol = (rel_tol * scale).max(abs_floor);
    let mut value = 0.0;
    for (a, b, fa, fm, fb, whole) in seeds {
        let share = if total_width > 0.0 { (b - a) / total_width } else { 1.0 };
        value += s.refine(a, b, fa, fm, fb, whole, tol * share, 0);
    }
    Quadrature {
        value,
        evals: s.evals,
        converged: s.converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect_increasing(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert_relative_eq!(r, 2f64.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn bisection_reports_non_convergence() {
        assert!(bisect_increasing(|x| x - 0.5, 0.0, 1.0, 1e-300, 5).is_err());
    }

    #[test]
    fn bracket_grows() {
        let hi = bracket_above(|x| x - 100.0, 0.0, 1.0, 20).unwrap();
        assert!(hi > 100.0 && hi <= 128.0);
    }

    #[test]
    fn simpson_polynomials_and_exponentials() {
        let q = integrate(|x| x * x * x, &[0.0, 2.0], 1e-12, 0.0);
        assert_relative_eq!(q.value, 4.0, max_relative = 1e-12);
        let q = integrate(|x: f64| (-x).exp(), &[0.0, 50.0], 1e-10, 0.0);
        assert_relative_eq!(q.value, 1.0 - (-50f64).exp(), max_relative = 1e-9);
        assert!(q.converged);
    }

    #[test]
    fn jumps_at_breakpoints_are_exact() {
        let q = integrate(|x: f64| if x <= 1.0 { 1.0 } else { 3.0 }, &[0.0, 1.0, 2.0], 1e-12, 0.0);
        assert_relative_eq!(q.value, 4.0, max_relative = 1e-12);
        assert!(q.converged);
    }

    #[test]
    fn kinks_at_breakpoints_are_exact() {
        let q = integrate(|x: f64| x.abs(), &[-1.0, 0.0, 3.0], 1e-12, 0.0);
        assert_relative_eq!(q.value, 5.0, max_relative = 1e-12);
    }
}
