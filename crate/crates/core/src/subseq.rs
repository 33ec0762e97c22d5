//! Subsequence lattices: values, gap inequalities, disjointness thresholds
//! and block-variance bounds.
//!
//! Everything is evaluated through `ln m_i` so that indices up to 10⁶ and
//! beyond never overflow.

use crate::normalizers::{AxisRule, WindowLaw};
use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubseqFamily {
    /// `m_i = e^{sqrt(c i)}`.
    SqrtExp { c: f64 },
    /// `m_i = e^{c i / log(i + 1)}`.
    OverLog { c: f64 },
    /// `m_i = c i^{1/(1-α)}`.
    PowerGrid { c: f64, alpha: f64 },
}

/// Integerized mode floors `m_i` and `a_{m_i}` while they are exactly
/// representable; beyond 2^52 flooring is below rounding error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Real,
    Integer,
}

const LN_EXACT: f64 = 36.0;

impl SubseqFamily {
    pub fn validate(&self) -> Result<()> {
        let c = self.c();
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", c, "must be finite and > 0"));
        }
        if let SubseqFamily::PowerGrid { alpha, .. } = self {
            if !(*alpha > 0.0 && *alpha < 1.0) {
                return Err(Error::param("alpha", *alpha, "must lie in the open interval (0, 1)"));
            }
        }
        Ok(())
    }

    pub fn c(&self) -> f64 {
        match self {
            SubseqFamily::SqrtExp { c } | SubseqFamily::OverLog { c } | SubseqFamily::PowerGrid { c, .. } => *c,
        }
    }

    /// The family with `c` tied to `η` the way the gap inequalities need it.
    pub fn coupled(&self, eta: f64) -> Self {
        match self {
            SubseqFamily::SqrtExp { .. } => SubseqFamily::SqrtExp { c: eta * eta },
            SubseqFamily::OverLog { .. } => SubseqFamily::OverLog { c: eta * eta / 2.0 },
            SubseqFamily::PowerGrid { alpha, .. } => SubseqFamily::PowerGrid {
                c: libm::pow((1.0 - alpha) * (1.0 - alpha) * eta * eta, 1.0 / (1.0 - alpha)),
                alpha: *alpha,
            },
        }
    }

    /// First admissible index.
    pub fn domain_start(&self) -> u64 {
        let c = self.c();
        let bound = match self {
            SubseqFamily::SqrtExp { .. } => 1.0 / c,
            SubseqFamily::OverLog { .. } => libm::log(1.0 / c) / c,
            SubseqFamily::PowerGrid { alpha, .. } => libm::pow(c, alpha - 1.0),
        };
        libm::ceil(bound.max(1.0)) as u64
    }

    /// `ln m_i` without domain checks.
    #[inline]
    pub fn ln_value(&self, i: u64) -> f64 {
        let x = i as f64;
        match self {
            SubseqFamily::SqrtExp { c } => libm::sqrt(c * x),
            SubseqFamily::OverLog { c } => c * x / libm::log(x + 1.0),
            SubseqFamily::PowerGrid { c, alpha } => libm::log(*c) + libm::log(x) / (1.0 - alpha),
        }
    }

    fn check(&self, i: u64) -> Result<()> {
        self.validate()?;
        let start = self.domain_start();
        if i < start {
            return Err(Error::BelowDomain {
                what: "subsequence index",
                value: i as f64,
                min: start as f64,
            });
        }
        Ok(())
    }

    /// First index in the domain with `m_i ≥ 3`, where window rules apply.
    pub fn window_start(&self) -> u64 {
        let ln3 = libm::log(3.0);
        let mut i = self.domain_start();
        if self.ln_value(i) >= ln3 {
            return i;
        }
        let mut hi = i.max(1);
        while self.ln_value(hi) < ln3 {
            hi *= 2;
        }
        while i < hi {
            let mid = i + (hi - i) / 2;
            if self.ln_value(mid) >= ln3 {
                hi = mid;
            } else {
                i = mid + 1;
            }
        }
        i
    }
}

pub fn subseq_value(family: &SubseqFamily, i: u64) -> Result<f64> {
    family.check(i)?;
    Ok(libm::exp(family.ln_value(i)))
}

/// `(ln m, ln a_m)` at index `i`, floored in integer mode.
fn point(family: &SubseqFamily, rule: &AxisRule, i: u64, mode: Mode) -> (f64, f64) {
    let lm = family.ln_value(i);
    if mode == Mode::Integer && lm < LN_EXACT {
        let m = libm::floor(libm::exp(lm));
        let lmf = libm::log(m);
        let a = libm::floor(libm::exp(rule.ln_length_ln(lmf)));
        (lmf, libm::log(a))
    } else {
        (lm, rule.ln_length_ln(lm))
    }
}

/// `(m_{i+1} - m_i) / a_{m_i}` from log-scale points.
#[inline]
fn gap_over_length(p0: (f64, f64), p1: (f64, f64)) -> f64 {
    libm::expm1(p1.0 - p0.0) * libm::exp(p0.0 - p0.1)
}

/// Coefficients of the gap system for one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBounds {
    /// `(m_{i+1} - m_i) ≤ gap · a_{m_i}`.
    pub gap: f64,
    /// `a_{m_{i+1}} / a_{m_i} ≤ 1 + ratio`.
    pub ratio: f64,
}

/// Per-axis gap coefficients for a coupled family.
///
/// The power-grid system states the first gap only asymptotically
/// (`∼ c^{1-α}/(1-α) a`); it is checked against the `η² = c^{1-α}/(1-α)²`
/// bound that the variance estimates actually consume.
pub fn gap_bounds(family: &SubseqFamily, eta: f64) -> [GapBounds; 2] {
    let e2 = eta * eta;
    match family {
        SubseqFamily::SqrtExp { .. } => {
            [GapBounds {
                gap: e2,
                ratio: 2.0 * e2,
            }; 2]
        }
        SubseqFamily::OverLog { c } => {
            [GapBounds {
                gap: 2.0 * c,
                ratio: 2.0 * c,
            }; 2]
        }
        SubseqFamily::PowerGrid { c, alpha } => {
            let k = libm::pow(*c, 1.0 - alpha);
            let k2 = k * k;
            [
                GapBounds {
                    gap: e2,
                    ratio: alpha * k2 / (1.0 - alpha),
                },
                GapBounds {
                    gap: k / ((1.0 - alpha) * (1.0 - alpha)),
                    ratio: k2 / (1.0 - alpha),
                },
            ]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityScan {
    pub name: &'static str,
    pub bound: f64,
    /// First scanned index where the inequality holds.
    pub first_hold: Option<u64>,
    /// Violations at indices after `first_hold`.
    pub later_violations: u64,
    pub first_later_violation: Option<u64>,
    /// Largest `value / bound` seen after `first_hold`.
    pub worst_ratio_after_hold: f64,
}

impl InequalityScan {
    fn new(name: &'static str, bound: f64) -> Self {
        InequalityScan {
            name,
            bound,
            first_hold: None,
            later_violations: 0,
            first_later_violation: None,
            worst_ratio_after_hold: 0.0,
        }
    }

    fn record(&mut self, i: u64, value: f64) {
        let holds = value <= self.bound;
        match self.first_hold {
            None if holds => {
                self.first_hold = Some(i);
                self.worst_ratio_after_hold = value / self.bound;
            }
            None => {}
            Some(_) => {
                self.worst_ratio_after_hold = self.worst_ratio_after_hold.max(value / self.bound);
                if !holds {
                    self.later_violations += 1;
                    self.first_later_violation.get_or_insert(i);
                }
            }
        }
    }

    pub fn holds_eventually(&self) -> bool {
        self.first_hold.is_some() && self.later_violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub family: SubseqFamily,
    pub eta: f64,
    pub scanned_from: u64,
    pub scanned_to: u64,
    /// Gap and length ratio on axis 1, then on axis 2.
    pub inequalities: [InequalityScan; 4],
}

impl GapReport {
    pub fn holds(&self) -> bool {
        self.inequalities.iter().all(InequalityScan::holds_eventually)
    }

    /// Largest first-hold index over the four inequalities.
    pub fn threshold(&self) -> Option<u64> {
        self.inequalities
            .iter()
            .map(|s| s.first_hold)
            .try_fold(0, |acc, f| f.map(|v| acc.max(v)))
    }
}

fn check_coupling(family: &SubseqFamily, eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::param("eta", eta, "must be finite and > 0"));
    }
    // A smaller c only densifies the lattice and shrinks every gap.
    let expected = family.coupled(eta).c();
    if family.c() > expected * (1.0 + 1e-12) {
        return Err(Error::CouplingMismatch {
            expected,
            found: family.c(),
        });
    }
    Ok(())
}

fn check_range(family: &SubseqFamily, lo: u64, hi: u64) -> Result<u64> {
    family.validate()?;
    let start = family.domain_start();
    if lo < start {
        return Err(Error::BelowDomain {
            what: "range start",
            value: lo as f64,
            min: start as f64,
        });
    }
    if hi <= lo {
        return Err(Error::param("i_max", hi as f64, "must exceed the range start"));
    }
    Ok(lo.max(family.window_start()))
}

/// Scans the gap system for `i ∈ [lo, hi)`, axis 1 under `law.axis1` and
/// axis 2 under `law.axis2`, with `n_j` following the same family.
pub fn gap_report(family: &SubseqFamily, law: &WindowLaw, eta: f64, lo: u64, hi: u64, mode: Mode) -> Result<GapReport> {
    check_coupling(family, eta)?;
    law.axis1.validate()?;
    law.axis2.validate()?;
    let from = check_range(family, lo, hi)?;
    let [b1, b2] = gap_bounds(family, eta);
    let mut scans = [
        InequalityScan::new("gap axis 1", b1.gap),
        InequalityScan::new("ratio axis 1", 1.0 + b1.ratio),
        InequalityScan::new("gap axis 2", b2.gap),
        InequalityScan::new("ratio axis 2", 1.0 + b2.ratio),
    ];
    let rules = [law.axis1, law.axis2];
    let mut prev = [
        point(family, &rules[0], from, mode),
        point(family, &rules[1], from, mode),
    ];
    for i in from..hi {
        for (ax, rule) in rules.iter().enumerate() {
            let next = point(family, rule, i + 1, mode);
            scans[2 * ax].record(i, gap_over_length(prev[ax], next));
            scans[2 * ax + 1].record(i, libm::exp(next.1 - prev[ax].1));
            prev[ax] = next;
        }
    }
    Ok(GapReport {
        family: *family,
        eta,
        scanned_from: from,
        scanned_to: hi,
        inequalities: scans,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisjointReport {
    /// Smallest `i₀` with `m_i + a_{m_i} < m_{i+1}` on all of `[i₀, i_max)`.
    pub threshold: u64,
    pub scanned_from: u64,
    pub i_max: u64,
    pub violations_before: u64,
}

/// Smallest `i₀` such that consecutive windows are disjoint up to `i_max`.
pub fn disjointness_threshold(
    family: &SubseqFamily,
    rule: &AxisRule,
    i_max: u64,
    mode: Mode,
) -> Result<DisjointReport> {
    rule.validate()?;
    let from = check_range(family, family.domain_start(), i_max)?;
    let mut last_violation = None;
    let mut violations = 0;
    let mut p = point(family, rule, from, mode);
    for i in from..i_max {
        let q = point(family, rule, i + 1, mode);
        // m + a < m' ⇔ ln(1 + a/m) < ln m' − ln m.
        let disjoint = libm::log1p(libm::exp(p.1 - p.0)) < q.0 - p.0;
        if !disjoint {
            last_violation = Some(i);
            violations += 1;
        }
        p = q;
    }
    match last_violation {
        Some(v) if v + 1 >= i_max => Err(Error::NoThreshold {
            i_max,
            detail: format!("windows still overlap at i = {v} ({violations} overlaps from i = {from})"),
        }),
        Some(v) => Ok(DisjointReport {
            threshold: v + 1,
            scanned_from: from,
            i_max,
            violations_before: violations,
        }),
        None => Ok(DisjointReport {
            threshold: from,
            scanned_from: from,
            i_max,
            violations_before: 0,
        }),
    }
}

/// One gap rectangle: its variance and bound, both divided by `σ² a_{m_i,n_j}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceCheck {
    pub name: &'static str,
    pub extent1_over_a1: f64,
    pub extent2_over_a2: f64,
    pub variance_over_area: f64,
    pub bound_over_area: f64,
}

impl VarianceCheck {
    pub fn holds(&self) -> bool {
        self.variance_over_area <= self.bound_over_area
    }
}

/// Bound coefficients `[η⁴, ·, ·, ·]` of the four gap rectangles.
pub fn variance_coefficients(family: &SubseqFamily, eta: f64) -> [f64; 4] {
    let e2 = eta * eta;
    match family {
        SubseqFamily::SqrtExp { .. } => {
            let k = 1.0 + 3.0 * e2;
            [e2 * e2, k * e2, k * e2, k * k]
        }
        SubseqFamily::OverLog { .. } => {
            let k = 1.0 + 2.0 * e2;
            [e2 * e2, k * e2, k * e2, k * k]
        }
        SubseqFamily::PowerGrid { .. } => {
            let k = 1.0 + 2.0 * e2;
            [e2 * e2, (1.0 + e2) * e2, e2 * k, k * k]
        }
    }
}

/// Exact variances of the rectangles from `(m_i, n_j)` to `(m_{i+1}, n_{j+1})`,
/// optionally extended by `a_{m_{i+1}}` and/or `a_{n_{j+1}}`, against their bounds.
pub fn block_variance_bounds(
    law: &WindowLaw,
    family: &SubseqFamily,
    eta: f64,
    i: u64,
    j: u64,
) -> Result<[VarianceCheck; 4]> {
    check_coupling(family, eta)?;
    law.validate()?;
    let start = family.window_start();
    for (what, idx) in [("i", i), ("j", j)] {
        if idx < start {
            return Err(Error::BelowDomain {
                what,
                value: idx as f64,
                min: start as f64,
            });
        }
    }
    let p = |rule: &AxisRule, k: u64| point(family, rule, k, Mode::Real);
    let axis = |rule: &AxisRule, k: u64| {
        let (p0, p1) = (p(rule, k), p(rule, k + 1));
        let gap = gap_over_length(p0, p1);
        let ext = gap + libm::exp(p1.1 - p0.1);
        (gap, ext)
    };
    Ok(variance_checks(
        axis(&law.axis1, i),
        axis(&law.axis2, j),
        variance_coefficients(family, eta),
    ))
}

/// Builds the four checks from per-axis `(gap/a, extended/a)` pairs.
pub fn variance_checks(x: (f64, f64), y: (f64, f64), coef: [f64; 4]) -> [VarianceCheck; 4] {
    let mk = |name, e1: f64, e2: f64, bound| VarianceCheck {
        name,
        extent1_over_a1: e1,
        extent2_over_a2: e2,
        variance_over_area: e1 * e2,
        bound_over_area: bound,
    };
    [
        mk("gap x gap", x.0, y.0, coef[0]),
        mk("extended x gap", x.1, y.0, coef[1]),
        mk("gap x extended", x.0, y.1, coef[2]),
        mk("extended x extended", x.1, y.1, coef[3]),
    ]
}

/// Sampled `(i, ln m_i)` pairs, log-spaced, for reporting.
pub fn sample_indices(lo: u64, hi: u64, per_decade: usize) -> Vec<u64> {
    let mut out = Vec::new();
    if hi < lo {
        return out;
    }
    let (a, b) = (libm::log10(lo.max(1) as f64), libm::log10(hi as f64));
    let n = libm::ceil((b - a) * per_decade as f64).max(1.0) as usize;
    for k in 0..=n {
        let i = libm::round(libm::pow(10.0, a + (b - a) * k as f64 / n as f64)) as u64;
        let i = i.clamp(lo, hi);
        if out.last() != Some(&i) {
            out.push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn value_examples() {
        assert_relative_eq!(
            subseq_value(&SubseqFamily::SqrtExp { c: 1.0 }, 4).unwrap(),
            2f64.exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            subseq_value(&SubseqFamily::PowerGrid { c: 2.0, alpha: 0.5 }, 3).unwrap(),
            18.0,
            max_relative = 1e-14
        );
        assert!(subseq_value(&SubseqFamily::SqrtExp { c: 0.1 }, 9).is_err());
        assert_eq!(SubseqFamily::OverLog { c: 0.02 }.domain_start(), 196);
        assert_eq!(SubseqFamily::PowerGrid { c: 1e-4, alpha: 0.5 }.domain_start(), 100);
    }

    #[test]
    fn families_are_strictly_increasing() {
        for f in [
            SubseqFamily::SqrtExp { c: 0.04 },
            SubseqFamily::OverLog { c: 1.0 },
            SubseqFamily::PowerGrid { c: 2.0, alpha: 0.3 },
        ] {
            let mut prev = f64::NEG_INFINITY;
            for i in f.domain_start().max(3)..100_000 {
                let v = f.ln_value(i);
                assert!(v > prev, "{f:?} at {i}");
                prev = v;
            }
        }
    }

    #[test]
    fn coupling_is_enforced() {
        let law = WindowLaw::case_i(1.0);
        assert!(matches!(
            gap_report(&SubseqFamily::SqrtExp { c: 1.0 }, &law, 0.2, 30, 100, Mode::Real),
            Err(Error::CouplingMismatch { .. })
        ));
        let f = SubseqFamily::SqrtExp { c: 0.0 }.coupled(0.2);
        assert!(gap_report(&f, &law, 0.2, 10, 100, Mode::Real).is_err());
    }

    #[test]
    fn case_i_gap_system() {
        let f = SubseqFamily::SqrtExp { c: 0.0 }.coupled(0.2);
        let r = gap_report(&f, &WindowLaw::case_i(1.0), 0.2, f.domain_start(), 100_000, Mode::Real).unwrap();
        assert!(r.holds(), "{r:?}");
        let r = gap_report(&f, &WindowLaw::case_i(1.0), 10.0, f.domain_start(), 10_000, Mode::Real).unwrap();
        assert!(r.holds());
        assert_eq!(r.threshold(), Some(r.scanned_from));
    }

    #[test]
    fn power_grid_gap_system() {
        let f = SubseqFamily::PowerGrid { c: 0.0, alpha: 0.5 }.coupled(0.2);
        let law = WindowLaw::mixed(0.5, 1.0);
        let r = gap_report(&f, &law, 0.2, f.domain_start(), 100_000, Mode::Real).unwrap();
        assert!(r.holds(), "{r:?}");
        // The length ratios need i ≥ c^{2(α−1)} = 10⁴.
        assert!(r.threshold().unwrap() >= 5_000);
    }

    #[test]
    fn disjointness_examples() {
        let ok = disjointness_threshold(
            &SubseqFamily::SqrtExp { c: 3.0 },
            &AxisRule::LogFraction,
            100_000,
            Mode::Real,
        )
        .unwrap();
        assert!(ok.threshold < 100);
        let pg = disjointness_threshold(
            &SubseqFamily::PowerGrid { c: 2.0, alpha: 0.5 },
            &AxisRule::Power { alpha: 0.5 },
            100_000,
            Mode::Integer,
        )
        .unwrap();
        assert!(pg.threshold < 100_000);
        let bad = disjointness_threshold(
            &SubseqFamily::SqrtExp { c: 1.0 },
            &AxisRule::LogFraction,
            100_000,
            Mode::Real,
        );
        assert!(matches!(bad, Err(Error::NoThreshold { .. })));
    }

    #[test]
    fn variance_bounds_case_i() {
        let f = SubseqFamily::SqrtExp { c: 0.0 }.coupled(0.2);
        let checks = block_variance_bounds(&WindowLaw::case_i(1.0), &f, 0.2, 10_000, 10_000).unwrap();
        for c in checks {
            assert!(c.holds(), "{c:?}");
        }
    }

    #[test]
    fn degenerate_gap_is_trivial() {
        let checks = variance_checks(
            (0.0, 1.0),
            (0.1, 1.1),
            variance_coefficients(&SubseqFamily::SqrtExp { c: 0.04 }, 0.2),
        );
        assert_eq!(checks[0].variance_over_area, 0.0);
        assert!(checks[0].holds());
    }

    #[test]
    fn case_ii_variance_bounds_beyond_threshold() {
        let f = SubseqFamily::OverLog { c: 0.0 }.coupled(0.2);
        let law = WindowLaw::case_ii(1.0);
        let r = gap_report(&f, &law, 0.2, f.domain_start(), 20_000, Mode::Real).unwrap();
        assert!(r.holds());
        let t = r.threshold().unwrap();
        for i in sample_indices(t, 19_999, 5) {
            for c in block_variance_bounds(&law, &f, 0.2, i, i).unwrap() {
                assert!(c.holds(), "{i}: {c:?}");
            }
        }
    }

    #[test]
    fn index_sampling() {
        let s = sample_indices(10, 10_000, 3);
        assert_eq!(s.first(), Some(&10));
        assert_eq!(s.last(), Some(&10_000));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}
