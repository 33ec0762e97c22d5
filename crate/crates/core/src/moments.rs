//! Growth functions, counting functions and moment-condition checks.
//!
//! A growth function `G(u, v)` defines the counting function
//! `M(x) = |{(u, v) ∈ [s, ∞)²: G(u, v) ≤ x}|` (default `s = 1`). Finiteness of
//! `E M(X²)` is equivalent to summability of `P(X² > G(m, n))` over the
//! lattice and to finiteness of the matching double integral; this module
//! computes all three numerically and classifies them by
//! [`crate::slope`].

use crate::dist::{DistributionSpec, LogPerturbedPareto};
use crate::math::{llog_plus_ln, log_plus_ln};
use crate::normalizers::SlowlyVarying;
use crate::quad::{bisect_increasing, bracket_above, integrate};
use crate::slope::{classify_partial_sums, SlopeReport, Verdict};
use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;
use core::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthFunction {
    /// `uv(llog u + llog v)/(log u · log v)`.
    G1,
    /// `uv(llog u + llog v)/(llog u · llog v)`.
    G2,
    /// `uv(llog u + llog v)/(log u · llog v)`.
    G3,
    /// `u^α v log(uv)/log v`.
    G4 { alpha: f64 },
    /// `uv(r(u) + r(v))/(L1(u) L2(v))`, `r = log⁺ L1 + llog⁺`.
    G5 { l1: SlowlyVarying, l2: SlowlyVarying },
}

impl GrowthFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            GrowthFunction::G4 { alpha } if !(*alpha > 0.0 && *alpha < 1.0) => {
                Err(Error::param("alpha", *alpha, "must lie in the open interval (0, 1)"))
            }
            GrowthFunction::G5 { l1, l2 } => {
                l1.validate()?;
                l2.validate()?;
                if l1.dominates(l2) {
                    Ok(())
                } else {
                    Err(Error::UnsupportedRegime("G5 needs L1 >= L2 eventually"))
                }
            }
            _ => Ok(()),
        }
    }

    /// `ln G(e^s, e^t)`.
    #[inline]
    pub fn ln_eval_ln(&self, s: f64, t: f64) -> f64 {
        match self {
            GrowthFunction::G1 => {
                s + t + libm::log(llog_plus_ln(s) + llog_plus_ln(t))
                    - libm::log(log_plus_ln(s))
                    - libm::log(log_plus_ln(t))
            }
            GrowthFunction::G2 => {
                let (a, b) = (llog_plus_ln(s), llog_plus_ln(t));
                s + t + libm::log(a + b) - libm::log(a) - libm::log(b)
            }
            GrowthFunction::G3 => {
                let b = llog_plus_ln(t);
                s + t + libm::log(llog_plus_ln(s) + b) - libm::log(log_plus_ln(s)) - libm::log(b)
            }
            GrowthFunction::G4 { alpha } => alpha * s + t + libm::log(log_plus_ln(s + t)) - libm::log(log_plus_ln(t)),
            GrowthFunction::G5 { l1, l2 } => {
                s + t + libm::log(l1.r_at_ln(s) + l1.r_at_ln(t)) - l1.ln_at_ln(s) - l2.ln_at_ln(t)
            }
        }
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        libm::exp(self.ln_eval_ln(libm::log(u), libm::log(v)))
    }
}

/// Clamp points of `log⁺` and `llog⁺`, in log coordinates.
const KINKS: [f64; 2] = [1.0, E];

/// Options for [`sublevel_measure_ln`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SublevelOptions {
    pub rel_tol: f64,
    /// Lower corner `s` of the domain `[s, ∞)²`.
    pub start: f64,
}

impl Default for SublevelOptions {
    fn default() -> Self {
        SublevelOptions {
            rel_tol: 1e-3,
            start: 1.0,
        }
    }
}

const ROOT_TOL: f64 = 1e-13;

/// `ln M(e^lx)`; `-inf` for an empty region.
///
/// The region is sliced in `s = ln u`: each slice ends at the `t = ln v`
/// solving `G = x` (bisection), and `M/x = ∫ (e^{V(s)} − start) e^{s − lx} ds`
/// is integrated adaptively with the clamp points as breakpoints.
pub fn sublevel_measure_ln(g: &GrowthFunction, lx: f64, opts: &SublevelOptions) -> Result<f64> {
    g.validate()?;
    if !(opts.start >= 1.0) {
        return Err(Error::param("start", opts.start, "domain must start at >= 1"));
    }
    if !(opts.rel_tol > 0.0) {
        return Err(Error::param("rel_tol", opts.rel_tol, "must be > 0"));
    }
    let s0 = libm::log(opts.start);
    if g.ln_eval_ln(s0, s0) >= lx {
        return Ok(f64::NEG_INFINITY);
    }
    let edge = |s: f64| g.ln_eval_ln(s, s0) - lx;
    let step = (lx - s0).abs().max(1.0);
    let hi = bracket_above(edge, s0, step, 64)?;
    let s_max = bisect_increasing(edge, s0, hi, ROOT_TOL * hi.abs().max(1.0), 400)?;

    // v-boundary of the slice at s; records a monotonicity fault instead of failing inside quadrature.
    let fault = Cell::new(None::<f64>);
    let slack = 1e-12 * lx.abs().max(1.0);
    let boundary = |s: f64| -> f64 {
        let f = |t: f64| g.ln_eval_ln(s, t) - lx;
        if f(s0) > slack {
            // The last bisection bracket may straddle s_max by a hair.
            if s < s_max - 1e-9 * s_max.abs().max(1.0) && fault.get().is_none() {
                fault.set(Some(s));
            }
            return s0;
        }
        let span = (lx - s - s0).abs().max(1.0);
        let hi = match bracket_above(f, s0, span, 64) {
            Ok(h) => h,
            Err(_) => {
                fault.set(Some(s));
                return s0;
            }
        };
        let t = bisect_increasing(f, s0, hi, ROOT_TOL * hi.abs().max(1.0), 400).unwrap_or(s0);
        if f(0.5 * (s0 + t)) > slack && fault.get().is_none() {
            fault.set(Some(s));
        }
        t
    };

    let mut breaks = vec![s0];
    for k in KINKS {
        if k > s0 && k < s_max {
            breaks.push(k);
        }
        // Slices whose boundary crosses a v-kink.
        if k > s0 && g.ln_eval_ln(s0, k) < lx {
            let f = |s: f64| g.ln_eval_ln(s, k) - lx;
            if let Ok(sk) = bisect_increasing(f, s0, s_max, ROOT_TOL * s_max.abs().max(1.0), 400) {
                if sk > s0 && sk < s_max {
                    breaks.push(sk);
                }
            }
        }
    }
    breaks.push(s_max);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();

    let start = opts.start;
    let h = |s: f64| {
        let v = boundary(s);
        libm::exp(v + s - lx) - start * libm::exp(s - lx)
    };
    // The slice ends carry bisection noise of order ROOT_TOL; h itself is O(1).
    let floor = 1e3 * ROOT_TOL * (s_max - s0) * lx.abs().max(1.0);
    let q = integrate_smoothstep(h, &breaks, opts.rel_tol * 0.1, floor);
    if let Some(s) = fault.get() {
        return Err(Error::NonMonotoneSlice { ln_u: s });
    }
    if !q.converged {
        return Err(Error::NoConvergence {
            what: "sublevel quadrature",
            iterations: q.evals,
        });
    }
    if q.value <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(lx + libm::log(q.value))
}

/// Integrates over each panel through `s = a + (b − a)(3τ² − 2τ³)`, which
/// flattens square-root endpoint behaviour. Slice boundaries have it wherever
/// `G` is stationary in `v`, e.g. at the clamp `v = e` of `v/log v`.
fn integrate_smoothstep<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    rel_tol: f64,
    abs_floor: f64,
) -> crate::quad::Quadrature {
    let n = breaks.len() - 1;
    let mapped = |tau: f64| {
        let i = (libm::floor(tau) as usize).min(n - 1);
        let u = tau - i as f64;
        let w = breaks[i + 1] - breaks[i];
        let s = breaks[i] + w * u * u * (3.0 - 2.0 * u);
        let ds = 6.0 * u * (1.0 - u) * w;
        if ds == 0.0 {
            0.0
        } else {
            f(s) * ds
        }
    };
    let taus: Vec<f64> = (0..=n).map(|k| k as f64).collect();
    integrate(mapped, &taus, rel_tol, abs_floor)
}

/// Lebesgue measure of `{(u, v) ∈ [1, ∞)²: G(u, v) ≤ x}`.
pub fn sublevel_measure(g: &GrowthFunction, x: f64, rel_tol: f64) -> Result<f64> {
    let opts = SublevelOptions {
        rel_tol,
        ..Default::default()
    };
    sublevel_measure_ln(g, libm::log(x), &opts).map(libm::exp)
}

/// Closed-form targets for the counting functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CountingCase {
    /// `x (log x)³ / llog x`.
    M1,
    /// `x log x llog x`.
    M2,
    /// `x (log x)²`.
    M3,
    /// `(x / log x)^{1/α}`.
    M4 { alpha: f64 },
    /// The general upper bound, see [`general_m_upper`].
    M5 { l1: SlowlyVarying, l2: SlowlyVarying },
}

impl CountingCase {
    /// The growth function whose counting function this case describes.
    pub fn growth(&self) -> GrowthFunction {
        match *self {
            CountingCase::M1 => GrowthFunction::G1,
            CountingCase::M2 => GrowthFunction::G2,
            CountingCase::M3 => GrowthFunction::G3,
            CountingCase::M4 { alpha } => GrowthFunction::G4 { alpha },
            CountingCase::M5 { l1, l2 } => GrowthFunction::G5 { l1, l2 },
        }
    }
}

fn check_appendix_domain(lx: f64) -> Result<()> {
    if lx < 2.0 - 1e-12 {
        Err(Error::BelowDomain {
            what: "x",
            value: libm::exp(lx),
            min: libm::exp(2.0),
        })
    } else {
        Ok(())
    }
}

/// `ln` of the closed form at `e^lx`, `lx ≥ 2`.
pub fn closed_form_m_ln(case: &CountingCase, lx: f64) -> Result<f64> {
    check_appendix_domain(lx)?;
    let l = libm::log(log_plus_ln(lx));
    let ll = libm::log(llog_plus_ln(lx));
    Ok(match case {
        CountingCase::M1 => lx + 3.0 * l - ll,
        CountingCase::M2 => lx + l + ll,
        CountingCase::M3 => lx + 2.0 * l,
        CountingCase::M4 { alpha } => {
            if !(*alpha > 0.0 && *alpha < 1.0) {
                return Err(Error::param("alpha", *alpha, "must lie in the open interval (0, 1)"));
            }
            (lx - l) / alpha
        }
        CountingCase::M5 { l1, l2 } => return general_m_upper_ln(l1, l2, lx),
    })
}

pub fn closed_form_m(case: &CountingCase, x: f64) -> Result<f64> {
    closed_form_m_ln(case, libm::log(x)).map(libm::exp)
}

/// `ln` of `x L2(x)/r(x) ∫_1^{x L1(x)/r(x)} L1(u)/u du` (constant 1).
pub fn general_m_upper_ln(l1: &SlowlyVarying, l2: &SlowlyVarying, lx: f64) -> Result<f64> {
    check_appendix_domain(lx)?;
    l1.validate()?;
    l2.validate()?;
    if !l1.dominates(l2) {
        return Err(Error::UnsupportedRegime("the bound needs L1 >= L2"));
    }
    let r = l1.r_at_ln(lx);
    let upper = lx + l1.ln_at_ln(lx) - libm::log(r);
    if upper <= 0.0 {
        return Err(Error::BelowDomain {
            what: "x L1(x)/r(x)",
            value: libm::exp(upper),
            min: 1.0,
        });
    }
    // ∫_1^U L1(u)/u du = ∫_0^{ln U} L1(e^t) dt.
    let mut breaks = vec![0.0];
    breaks.extend(KINKS.iter().copied().filter(|&k| k < upper));
    breaks.push(upper);
    let q = integrate(|t| libm::exp(l1.ln_at_ln(t)), &breaks, 1e-10, 0.0);
    if !q.converged || !q.value.is_finite() {
        return Err(Error::NoConvergence {
            what: "general bound integral",
            iterations: q.evals,
        });
    }
    Ok(lx + l2.ln_at_ln(lx) - libm::log(r) + libm::log(q.value))
}

pub fn general_m_upper(l1: &SlowlyVarying, l2: &SlowlyVarying, x: f64) -> Result<f64> {
    general_m_upper_ln(l1, l2, libm::log(x)).map(libm::exp)
}

/// One row of a numeric-versus-closed-form table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixRow {
    pub x: f64,
    pub numeric: f64,
    pub closed_form: f64,
    pub ratio: f64,
}

pub fn appendix_table(case: &CountingCase, xs: &[f64], opts: &SublevelOptions) -> Result<Vec<AppendixRow>> {
    let g = case.growth();
    xs.iter()
        .map(|&x| {
            let lx = libm::log(x);
            let num = sublevel_measure_ln(&g, lx, opts)?;
            let cf = closed_form_m_ln(case, lx)?;
            Ok(AppendixRow {
                x,
                numeric: libm::exp(num),
                closed_form: libm::exp(cf),
                ratio: libm::exp(num - cf),
            })
        })
        .collect()
}

/// `(max/min ratio, largest relative change between consecutive rows)`.
pub fn band_and_drift(rows: &[AppendixRow]) -> (f64, f64) {
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let drift = rows
        .windows(2)
        .map(|w| (w[1].ratio / w[0].ratio - 1.0).abs())
        .fold(0.0, f64::max);
    (hi / lo, drift)
}

/// Moment conditions `E X² (log⁺|X|)^p (llog⁺|X|)^q < ∞` of the window laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentCase {
    /// `(p, q) = (3, −1)`.
    CaseI,
    /// `(p, q) = (1, 1)`.
    CaseII,
    /// `(p, q) = (2, 0)`.
    CaseIII,
    /// `E (X²/log⁺|X|)^{1/α} < ∞`: exponent `2/α`, `(p, q) = (−1/α, 0)`.
    PowerLog { alpha: f64 },
}

impl MomentCase {
    /// `(tail exponent β, p, q)`.
    pub fn exponents(&self) -> (f64, f64, f64) {
        match self {
            MomentCase::CaseI => (2.0, 3.0, -1.0),
            MomentCase::CaseII => (2.0, 1.0, 1.0),
            MomentCase::CaseIII => (2.0, 2.0, 0.0),
            MomentCase::PowerLog { alpha } => (2.0 / alpha, -1.0 / alpha, 0.0),
        }
    }

    /// Growth function whose counting function carries this moment condition.
    pub fn growth(&self) -> GrowthFunction {
        match self {
            MomentCase::CaseI => GrowthFunction::G1,
            MomentCase::CaseII => GrowthFunction::G2,
            MomentCase::CaseIII => GrowthFunction::G3,
            MomentCase::PowerLog { alpha } => GrowthFunction::G4 { alpha: *alpha },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentClass {
    Finite,
    Infinite,
}

/// Integral test on `∫ x^{β−1} (log x)^{p−γ} (llog x)^{q−δ} dx/x`-type tails.
pub fn classify_moment(dist: &LogPerturbedPareto, case: &MomentCase) -> Result<MomentClass> {
    dist.validate()?;
    if let MomentCase::PowerLog { alpha } = case {
        if !(*alpha > 0.0 && *alpha < 1.0) {
            return Err(Error::param("alpha", *alpha, "must lie in the open interval (0, 1)"));
        }
    }
    let (beta, p, q) = case.exponents();
    if (dist.beta - beta).abs() > 1e-12 * beta {
        return Err(Error::param(
            "beta",
            dist.beta,
            "unsupported tail exponent for this moment case",
        ));
    }
    let a = dist.gamma - p;
    let b = dist.dlt - q;
    Ok(if a > 1.0 || (a == 1.0 && b > 1.0) {
        MomentClass::Finite
    } else {
        MomentClass::Infinite
    })
}

/// Settings for [`equivalence_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceOptions {
    /// Log-horizons `ℓ_k`: lattice and integral over `[start, e^ℓ]²`, and
    /// the expectation over `X² ≤ e^ℓ`.
    pub horizons: Vec<f64>,
    pub start: f64,
    /// Indices up to this bound are summed exactly, beyond by Euler–Maclaurin.
    pub exact_until: f64,
    /// Outer quadrature tolerance; inner quadratures run at a thousandth of it
    /// so that their noise stays below the outer error test.
    pub rel_tol: f64,
    pub measure_rel_tol: f64,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions {
            horizons: (0..6).map(|k| 20.0 * libm::pow(2.0, k as f64)).collect(),
            start: 1.0,
            exact_until: 32.0,
            rel_tol: 1e-5,
            measure_rel_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub lattice: SlopeReport,
    pub integral: SlopeReport,
    pub expectation: SlopeReport,
}

impl EquivalenceReport {
    pub fn agree(&self) -> bool {
        self.lattice.verdict == self.integral.verdict && self.integral.verdict == self.expectation.verdict
    }

    /// The shared verdict, or `Boundary` when the three disagree.
    pub fn verdict(&self) -> Verdict {
        if self.agree() {
            self.lattice.verdict
        } else {
            Verdict::Boundary
        }
    }
}

/// `ln P(X² > e^w)`.
fn ln_tail_sq(dist: &DistributionSpec, w: f64) -> Result<f64> {
    dist.ln_abs_tail_ln(0.5 * w)
}

const INNER_TOL: f64 = 1e-3;
const NEGLIGIBLE_LN: f64 = -1e6;

/// Lattice sums and integrals of `exp(lnf(ln m, ln n))`. Functions of one
/// index are passed as densities in log coordinates, `h̃(t) = e^t h(e^t)`,
/// so that nothing of size `e^{±(s+t)}` is ever formed.
struct Summer<F> {
    lnf: F,
    exact_until: f64,
    rel_tol: f64,
}

impl<F: Fn(f64, f64) -> f64> Summer<F> {
    /// Σ_{n = lo}^{hi} h(n) for integer-valued `lo ≤ hi`, given `h̃`: exact
    /// below `exact_until`, Euler–Maclaurin (first correction) beyond.
    fn sum_1d<H: Fn(f64) -> f64>(&self, ht: &H, lo: f64, hi: f64, rel_tol: f64) -> f64 {
        let mut total = 0.0;
        let mut n = lo;
        while n <= hi && n <= self.exact_until {
            total += ht(libm::log(n)) / n;
            n += 1.0;
        }
        if n <= hi {
            total += em_tail(ht, n, hi, rel_tol);
        }
        total
    }

    /// Σ over the integer rectangle `[m0, m1] × [n0, n1]`.
    fn sum_2d(&self, m0: f64, m1: f64, n0: f64, n1: f64) -> f64 {
        if m1 < m0 || n1 < n0 {
            return 0.0;
        }
        let inner = self.rel_tol * INNER_TOL;
        let row = |s: f64| self.sum_1d(&|t: f64| libm::exp((self.lnf)(s, t) + s + t), n0, n1, inner);
        self.sum_1d(&row, m0, m1, self.rel_tol)
    }

    /// ∫∫ over `[s0, s1] × [t0, t1]` (log coordinates) of `e^{lnf + s + t}`.
    fn integral_2d(&self, s0: f64, s1: f64, t0: f64, t1: f64) -> f64 {
        if s1 <= s0 || t1 <= t0 {
            return 0.0;
        }
        let (sb, tb) = (panels(s0, s1), panels(t0, t1));
        let inner = |s: f64| {
            integrate(
                |t| libm::exp((self.lnf)(s, t) + s + t),
                &tb,
                self.rel_tol * INNER_TOL,
                0.0,
            )
            .value
        };
        integrate(inner, &sb, self.rel_tol, 0.0).value
    }
}

fn panels(a: f64, b: f64) -> Vec<f64> {
    let mut v = vec![a];
    v.extend(KINKS.iter().copied().filter(|&k| k > a && k < b));
    v.push(b);
    v
}

/// Σ_{n=a}^{b} h(n) ≈ ∫_a^b h + (h(a) + h(b))/2 + (h'(b) − h'(a))/12.
fn em_tail<H: Fn(f64) -> f64>(ht: &H, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (la, lb) = (libm::log(a), libm::log(b));
    let q = integrate(ht, &panels(la, lb), rel_tol, 0.0);
    // h(v) = h̃(ln v)/v, so h'(v) = (h̃'(ln v) − h̃(ln v))/v².
    let dh = |lt: f64, v: f64| {
        let e = 1e-5;
        let d = (ht(lt + e) - ht(lt - e)) / (2.0 * e);
        (d - ht(lt)) / (v * v)
    };
    q.value + 0.5 * (ht(la) / a + ht(lb) / b) + (dh(lb, b) - dh(la, a)) / 12.0
}

/// Partial sums, double integrals and truncated expectations at each
/// horizon, each classified by tail slope.
pub fn equivalence_check(
    dist: &DistributionSpec,
    g: &GrowthFunction,
    opts: &EquivalenceOptions,
) -> Result<EquivalenceReport> {
    dist.validate()?;
    g.validate()?;
    if opts.horizons.len() < 4 || opts.horizons.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param(
            "horizons",
            opts.horizons.len() as f64,
            "need at least four increasing horizons",
        ));
    }
    if opts.horizons.last().copied().unwrap_or(0.0) > 700.0 {
        return Err(Error::param(
            "horizon",
            opts.horizons[opts.horizons.len() - 1],
            "must stay below 700",
        ));
    }
    // Surface an unavailable tail before any quadrature.
    ln_tail_sq(dist, 0.0)?;
    let lnf = |s: f64, t: f64| ln_tail_sq(dist, g.ln_eval_ln(s, t)).unwrap_or(f64::NEG_INFINITY);
    let summer = Summer {
        lnf,
        exact_until: opts.exact_until,
        rel_tol: opts.rel_tol,
    };
    let start = libm::ceil(opts.start);
    let s0 = libm::log(opts.start);
    let hs = &opts.horizons;

    let mut lattice = Vec::with_capacity(hs.len());
    let mut integral = Vec::with_capacity(hs.len());
    let n_first = libm::floor(libm::exp(hs[0]));
    lattice.push(summer.sum_2d(start, n_first, start, n_first));
    integral.push(summer.integral_2d(s0, hs[0], s0, hs[0]));
    for w in hs.windows(2) {
        let (a, b) = (libm::floor(libm::exp(w[0])), libm::floor(libm::exp(w[1])));
        // The L-shaped shell between the two squares.
        let ds = summer.sum_2d(start, b, a + 1.0, b) + summer.sum_2d(a + 1.0, b, start, a);
        lattice.push(lattice.last().unwrap() + ds);
        let di = summer.integral_2d(s0, w[1], w[0], w[1]) + summer.integral_2d(w[0], w[1], s0, w[0]);
        integral.push(integral.last().unwrap() + di);
    }

    // E[M(X²); X² ≤ e^ℓ] = ∫ M(e^w) P(X² ∈ dw).
    let mopts = SublevelOptions {
        rel_tol: opts.measure_rel_tol,
        start: opts.start,
    };
    let w0 = g.ln_eval_ln(s0, s0);
    let fault = Cell::new(None::<Error>);
    let density = |w: f64| -> f64 {
        let lt = ln_tail_sq(dist, w).unwrap_or(f64::NEG_INFINITY);
        if lt == f64::NEG_INFINITY {
            return 0.0;
        }
        let slope = 0.5 * dist.abs_tail_log_slope_ln(0.5 * w).unwrap_or(0.0);
        if !(slope < 0.0) {
            return 0.0;
        }
        let ln_weight = lt + libm::log(-slope);
        // Far below anything M(e^w) could lift back into range.
        if ln_weight < NEGLIGIBLE_LN {
            return 0.0;
        }
        match sublevel_measure_ln(g, w, &mopts) {
            Ok(lm) => libm::exp(lm + ln_weight),
            Err(e) => {
                fault.set(Some(e));
                0.0
            }
        }
    };
    let mut expectation = Vec::with_capacity(hs.len());
    let mut acc = 0.0;
    let mut lo = w0;
    for &h in hs {
        if h > lo {
            let mut breaks = vec![lo];
            // Tail clamps at |X| = e and e^e, i.e. w = 2 and 2e.
            breaks.extend([2.0, 2.0 * E].into_iter().filter(|&k| k > lo && k < h));
            breaks.push(h);
            acc += integrate(density, &breaks, opts.rel_tol, 0.0).value;
            lo = h;
        }
        expectation.push(acc + atom_contribution(dist, g, &mopts, w0, h)?);
    }
    if let Some(e) = fault.take() {
        return Err(e);
    }
    Ok(EquivalenceReport {
        lattice: classify_partial_sums(hs, &lattice),
        integral: classify_partial_sums(hs, &integral),
        expectation: classify_partial_sums(hs, &expectation),
    })
}

/// Point masses are not seen by the density integral.
fn atom_contribution(
    dist: &DistributionSpec,
    g: &GrowthFunction,
    opts: &SublevelOptions,
    w0: f64,
    h: f64,
) -> Result<f64> {
    match dist {
        DistributionSpec::Rademacher if 0.0 <= h && 0.0 > w0 => Ok(libm::exp(sublevel_measure_ln(g, 0.0, opts)?)),
        _ => Ok(0.0),
    }
}
