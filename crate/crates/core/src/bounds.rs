//! Kolmogorov exponential bounds for `T′`, the combinatorial `T″` bound and
//! Borel–Cantelli summability along subsequence grids. Unspecified
//! constants are 1.

use crate::dist::DistributionSpec;
use crate::field::{window_spec, WindowSpec};
use crate::math::{llog_plus_ln, log_plus_ln, normal_sf};
use crate::normalizers::{rate_bundle_ln, Regime, WindowLaw};
use crate::slope::{classify_partial_sums, SlopeReport};
use crate::subseq::SubseqFamily;
use crate::{Error, Result};
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub eps: f64,
    pub delta: f64,
    /// Slack `γ` of the lower bound.
    pub gamma: f64,
    pub sigma: f64,
    /// Number `N` of nonzero intermediate summands.
    pub n_terms: u32,
    pub eta: f64,
}

impl BoundParams {
    /// Uses the smallest admissible `N` for `(η, δ)`.
    pub fn new(eps: f64, delta: f64, gamma: f64, sigma: f64, eta: f64) -> Result<Self> {
        let p = BoundParams {
            eps,
            delta,
            gamma,
            sigma,
            n_terms: min_terms(eta, delta)?,
            eta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_terms(mut self, n_terms: u32) -> Result<Self> {
        self.n_terms = n_terms;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps", self.eps),
            ("gamma", self.gamma),
            ("sigma", self.sigma),
            ("eta", self.eta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, v, "must be finite and > 0"));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param(
                "delta",
                self.delta,
                "must lie in the open interval (0, 1)",
            ));
        }
        if self.n_terms == 0 {
            return Err(Error::param("N", 0.0, "must be >= 1"));
        }
        if (self.n_terms as f64) * self.delta < self.eta * (1.0 - 1e-12) {
            return Err(Error::param("N", self.n_terms as f64, "needs N * delta >= eta"));
        }
        Ok(())
    }
}

/// Smallest `N` with `N δ ≥ η`.
pub fn min_terms(eta: f64, delta: f64) -> Result<u32> {
    if !(eta > 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::param(
            "eta/delta",
            eta / delta,
            "need eta > 0 and delta in (0, 1)",
        ));
    }
    let n = libm::ceil(eta / delta - 1e-12).max(1.0);
    if n > u32::MAX as f64 {
        return Err(Error::param("N", n, "too large"));
    }
    Ok(n as u32)
}

/// Exponent per unit `d` of the upper bound: `ε²(1−δ)³/σ²`.
pub fn upper_rate(eps: f64, delta: f64, sigma: f64) -> f64 {
    eps * eps * (1.0 - delta) * (1.0 - delta) * (1.0 - delta) / (sigma * sigma)
}

/// Exponent per unit `d` of the lower bound: `ε²(1+δ)²(1+γ)/(σ²(1−δ))`.
pub fn lower_rate(eps: f64, delta: f64, gamma: f64, sigma: f64) -> f64 {
    eps * eps * (1.0 + delta) * (1.0 + delta) * (1.0 + gamma) / (sigma * sigma * (1.0 - delta))
}

fn check_d(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::param("d", d, "must be finite and > 0"))
    }
}

pub fn kolmogorov_upper(p: &BoundParams, d: f64) -> Result<f64> {
    p.validate()?;
    check_d(d)?;
    Ok(libm::exp(-upper_rate(p.eps, p.delta, p.sigma) * d))
}

pub fn kolmogorov_lower(p: &BoundParams, d: f64) -> Result<f64> {
    p.validate()?;
    check_d(d)?;
    Ok(libm::exp(-lower_rate(p.eps, p.delta, p.gamma, p.sigma) * d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SandwichStatus {
    /// `d ≥ d₀` and the exact tail is below the upper bound.
    Holds,
    /// `d < d₀`: the bounds only hold for large windows.
    NotYetBinding,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichOptions {
    /// Truncation `δ` for `b`; the exponent keeps `p.delta`.
    pub truncation_delta: Option<f64>,
    /// The normal exact tail needs `b ≥ min_b_over_sigma · σ`.
    pub min_b_over_sigma: f64,
    /// Scan range and step for `d₀`.
    pub d_max: f64,
    pub d_step: f64,
    /// Range on which the lower bound is validated.
    pub lower_range: (f64, f64),
}

impl Default for SandwichOptions {
    fn default() -> Self {
        SandwichOptions {
            truncation_delta: None,
            min_b_over_sigma: 6.0,
            d_max: 50.0,
            d_step: 0.01,
            lower_range: (5.0, 50.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub spec: WindowSpec,
    pub cells: u64,
    pub d: f64,
    /// `ε sqrt(2f)`.
    pub level: f64,
    /// `Var X′ / σ²`.
    pub variance_ratio: f64,
    pub exact_tail: f64,
    pub upper: f64,
    pub lower: f64,
    pub d0: f64,
    pub status: SandwichStatus,
    /// Exact tail at least the lower bound on all of `lower_range`.
    pub lower_holds: bool,
}

/// `P(T′ > ε sqrt(2 f))` for a window whose `d` is replaced by `d`, keeping
/// the window's `area/cells` and `Var X′`.
fn exact_tail_at(p: &BoundParams, d: f64, area_over_cells: f64, variance_ratio: f64) -> f64 {
    normal_sf(p.eps * libm::sqrt(2.0 * d * area_over_cells / variance_ratio) / p.sigma)
}

/// Smallest grid `d` beyond which the exact tail stays below the upper bound.
pub fn sandwich_d0(p: &BoundParams, area_over_cells: f64, variance_ratio: f64, d_max: f64, d_step: f64) -> Result<f64> {
    p.validate()?;
    if !(d_step > 0.0 && d_max > d_step) {
        return Err(Error::param("d_step", d_step, "need 0 < d_step < d_max"));
    }
    let steps = libm::ceil(d_max / d_step) as usize;
    let mut d0 = None;
    for k in (1..=steps).rev() {
        let d = k as f64 * d_step;
        if exact_tail_at(p, d, area_over_cells, variance_ratio) > libm::exp(-upper_rate(p.eps, p.delta, p.sigma) * d) {
            break;
        }
        d0 = Some(d);
    }
    d0.ok_or(Error::NoThreshold {
        i_max: steps as u64,
        detail: alloc::format!("upper bound not binding below d = {d_max}"),
    })
}

/// Exact Gaussian tail of the `T′` event against both Kolmogorov bounds.
pub fn tprime_tail_sandwich(
    law: &WindowLaw,
    m: u64,
    n: u64,
    p: &BoundParams,
    dist: &DistributionSpec,
    opts: &SandwichOptions,
) -> Result<SandwichReport> {
    p.validate()?;
    let sigma = match dist {
        DistributionSpec::Gaussian { sigma } if *sigma > 0.0 => *sigma,
        _ => {
            return Err(Error::UnsupportedRegime(
                "the exact sandwich needs a non-degenerate Gaussian",
            ))
        }
    };
    if (sigma - p.sigma).abs() > 1e-12 * sigma || (law.sigma - sigma).abs() > 1e-12 * sigma {
        return Err(Error::param(
            "sigma",
            p.sigma,
            "must match the Gaussian and the window law",
        ));
    }
    let spec = window_spec(law, m, n, p.eps, opts.truncation_delta.unwrap_or(p.delta))?;
    let b_over_sigma = spec.b / sigma;
    if b_over_sigma < opts.min_b_over_sigma {
        return Err(Error::param(
            "b/sigma",
            b_over_sigma,
            "truncation too low for a normal exact tail",
        ));
    }
    let variance_ratio = 1.0 - dist.second_moment_above(spec.b)? / (sigma * sigma);
    let cells = spec.rect.cells();
    let area_over_cells = spec.bundle.area / cells as f64;
    let d = spec.bundle.rate;
    let exact_tail = exact_tail_at(p, d, area_over_cells, variance_ratio);
    let upper = kolmogorov_upper(p, d)?;
    let lower = kolmogorov_lower(p, d)?;
    let d0 = sandwich_d0(p, area_over_cells, variance_ratio, opts.d_max, opts.d_step)?;
    let status = if d < d0 {
        SandwichStatus::NotYetBinding
    } else if exact_tail <= upper {
        SandwichStatus::Holds
    } else {
        SandwichStatus::Violated
    };
    let (lo, hi) = opts.lower_range;
    let lower_holds = (0..=450).all(|k| {
        let dd = lo + (hi - lo) * k as f64 / 450.0;
        exact_tail_at(p, dd, area_over_cells, variance_ratio)
            >= libm::exp(-lower_rate(p.eps, p.delta, p.gamma, p.sigma) * dd)
    });
    Ok(SandwichReport {
        spec,
        cells,
        d,
        level: p.eps * libm::sqrt(2.0 * spec.bundle.f),
        variance_ratio,
        exact_tail,
        upper,
        lower,
        d0,
        status,
        lower_holds,
    })
}

/// Standard error of an empirical frequency of `p` over `n` trials.
pub fn binomial_se(p: f64, n: u64) -> f64 {
    libm::sqrt(p * (1.0 - p) / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TDoublePrimeBound {
    /// `(area · E H / H(b))^N`.
    pub general: f64,
    /// The simplified case forms, where one exists.
    pub simplified: Option<f64>,
}

/// `P(|T″| > η sqrt f)` bounds.
pub fn tdoubleprime_bound(
    law: &WindowLaw,
    m: u64,
    n: u64,
    n_terms: u32,
    moment_value: f64,
    h_at_b: f64,
) -> Result<TDoublePrimeBound> {
    if n_terms == 0 {
        return Err(Error::param("N", 0.0, "must be >= 1"));
    }
    if !(moment_value > 0.0 && h_at_b > 0.0) {
        return Err(Error::param("H", h_at_b, "moment value and H(b) must be > 0"));
    }
    let (lm, ln) = (libm::log(m as f64), libm::log(n as f64));
    let bundle = rate_bundle_ln(law, lm, ln)?;
    let nf = n_terms as f64;
    let general = libm::exp(nf * (bundle.ln_area + libm::log(moment_value) - libm::log(h_at_b)));
    let lmn = lm + ln;
    let simplified = match law.regime()? {
        Regime::LogLog => {
            let base = (llog_plus_ln(lm) + llog_plus_ln(ln)) * llog_plus_ln(lmn) / libm::pow(log_plus_ln(lmn), 3.0);
            Some(libm::pow(base, nf))
        }
        Regime::LogLogLog => Some(libm::pow((llog_plus_ln(lm) + llog_plus_ln(ln)) / log_plus_ln(lmn), nf)),
        _ => None,
    };
    Ok(TDoublePrimeBound { general, simplified })
}

/// `((log i + log j) log(i + j) / (i^{3/2} + j^{3/2}))^N`.
pub fn sqrt_exp_reduced_bound(i: u64, j: u64, n_terms: u32) -> f64 {
    let (x, y) = (i as f64, j as f64);
    let base = (libm::log(x) + libm::log(y)) * libm::log(x + y) / (libm::pow(x, 1.5) + libm::pow(y, 1.5));
    libm::pow(base, n_terms as f64)
}

/// Partial sums over the squares `[i0, K]²` of a subsequence grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SummabilityReport {
    pub families: (SubseqFamily, SubseqFamily),
    pub start: u64,
    pub slope: SlopeReport,
}

/// Default square sides `K = 16 · 2^k` up to 4096.
pub fn default_summability_horizons() -> Vec<u64> {
    (0..9).map(|k| 16u64 << k).collect()
}

/// Sums `eval(ln m_i, ln n_j)` over growing squares in fixed index order and
/// classifies the increments by slope against `K`.
pub fn summability_diagnostic<F: Fn(f64, f64) -> Result<f64>>(
    families: (SubseqFamily, SubseqFamily),
    eval: F,
    horizons: &[u64],
) -> Result<SummabilityReport> {
    families.0.validate()?;
    families.1.validate()?;
    if horizons.len() < 4 || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(
            "horizons",
            horizons.len() as f64,
            "need at least four increasing horizons",
        ));
    }
    let start = families.0.window_start().max(families.1.window_start());
    if horizons[0] < start {
        return Err(Error::BelowDomain {
            what: "horizon",
            value: horizons[0] as f64,
            min: start as f64,
        });
    }
    let lm: Vec<f64> = (start..=horizons[horizons.len() - 1])
        .map(|i| families.0.ln_value(i))
        .collect();
    let ln: Vec<f64> = (start..=horizons[horizons.len() - 1])
        .map(|j| families.1.ln_value(j))
        .collect();
    let at = |i: u64, j: u64| eval(lm[(i - start) as usize], ln[(j - start) as usize]);
    let mut sums = Vec::with_capacity(horizons.len());
    let mut total = 0.0;
    let mut done = start - 1;
    for &k in horizons {
        // Shell (done, k]: new rows over all columns, then old rows' new columns.
        for i in done + 1..=k {
            for j in start..=k {
                total += at(i, j)?;
            }
        }
        for i in start..=done {
            for j in done + 1..=k {
                total += at(i, j)?;
            }
        }
        done = k;
        sums.push(total);
    }
    let hs: Vec<f64> = horizons.iter().map(|&k| k as f64).collect();
    Ok(SummabilityReport {
        families,
        start,
        slope: classify_partial_sums(&hs, &sums),
    })
}

/// Upper exponential bound at the window anchored at `(e^lm, e^ln)`.
pub fn case_upper_evaluator<'a>(law: &'a WindowLaw, p: &'a BoundParams) -> impl Fn(f64, f64) -> Result<f64> + 'a {
    move |lm, ln| kolmogorov_upper(p, rate_bundle_ln(law, lm, ln)?.rate)
}

/// Lower exponential bound for the event `T′ > (1−η) σ sqrt(2f)`.
pub fn case_lower_evaluator<'a>(law: &'a WindowLaw, p: &'a BoundParams) -> impl Fn(f64, f64) -> Result<f64> + 'a {
    move |lm, ln| {
        let q = BoundParams {
            eps: (1.0 - p.eta) * p.sigma,
            ..*p
        };
        kolmogorov_lower(&q, rate_bundle_ln(law, lm, ln)?.rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slope::Verdict;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(eps: f64, delta: f64) -> BoundParams {
        BoundParams::new(eps, delta, 0.1, 1.0, 0.1).unwrap()
    }

    #[test]
    fn bound_examples() {
        assert_relative_eq!(
            kolmogorov_upper(&params(1.0, 0.1), 10.0).unwrap(),
            (-7.29f64).exp(),
            max_relative = 1e-12
        );
        assert!((kolmogorov_upper(&params(1.0, 0.1), 10.0).unwrap() / 6.8e-4 - 1.0).abs() < 0.01);
        assert_relative_eq!(
            (-upper_rate(1.0, 0.0, 1.0) * 4f64.ln()).exp(),
            0.25,
            max_relative = 1e-14
        );
        let p = BoundParams::new(1.0, 1e-9, 1e-9, 1.0, 1e-9).unwrap();
        for d in [0.5, 3.0, 20.0] {
            assert_relative_eq!(kolmogorov_upper(&p, d).unwrap(), (-d).exp(), max_relative = 1e-6);
            assert_relative_eq!(kolmogorov_lower(&p, d).unwrap(), (-d).exp(), max_relative = 1e-6);
        }
        assert!(kolmogorov_upper(&p, 0.0).is_err());
    }

    #[test]
    fn n_coupling() {
        assert_eq!(min_terms(0.1, 0.05).unwrap(), 2);
        assert_eq!(min_terms(0.3, 0.1).unwrap(), 3);
        assert_eq!(min_terms(0.25, 0.1).unwrap(), 3);
        assert_eq!(min_terms(0.01, 0.5).unwrap(), 1);
        let p = params(1.0, 0.1);
        assert_eq!(p.n_terms, 1);
        assert!(p.with_terms(4).is_ok());
        assert!(BoundParams::new(1.0, 0.05, 0.1, 1.0, 0.2)
            .unwrap()
            .with_terms(3)
            .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn lower_never_exceeds_upper(
            eps in 0.01f64..5.0, delta in 0.001f64..0.999, gamma in 0.001f64..5.0,
            sigma in 0.05f64..5.0, d in 0.001f64..200.0,
        ) {
            let p = BoundParams::new(eps, delta, gamma, sigma, delta).unwrap();
            prop_assert!(kolmogorov_lower(&p, d).unwrap() <= kolmogorov_upper(&p, d).unwrap());
        }
    }

    #[test]
    fn normal_tail_below_exp() {
        for k in 0..=200 {
            let d = 1.0 + k as f64 * 0.5;
            assert!(normal_sf((2.0 * d).sqrt()) <= (-d).exp());
        }
    }

    #[test]
    fn sandwich_at_200() {
        let law = WindowLaw::case_i(1.0);
        let p = params(1.0, 0.1);
        let opts = SandwichOptions {
            truncation_delta: Some(0.5),
            ..Default::default()
        };
        let r = tprime_tail_sandwich(&law, 200, 200, &p, &DistributionSpec::Gaussian { sigma: 1.0 }, &opts).unwrap();
        assert!(r.d0 <= 5.0);
        assert_eq!(r.status, SandwichStatus::Holds);
        assert!(r.lower_holds);
        assert!(r.spec.b >= 6.0);
        // Default truncation is far too low for a normal tail at this size.
        assert!(tprime_tail_sandwich(
            &law,
            200,
            200,
            &p,
            &DistributionSpec::Gaussian { sigma: 1.0 },
            &Default::default()
        )
        .is_err());
        assert!(tprime_tail_sandwich(&law, 200, 200, &p, &DistributionSpec::Rademacher, &opts).is_err());
    }

    #[test]
    fn lower_scan_matches_direct_check() {
        let p = BoundParams::new(1.0, 0.1, 0.1, 1.0, 0.1).unwrap();
        for k in 0..=90 {
            let d = 5.0 + 0.5 * k as f64;
            let lower = (-d * 1.21 * 1.1 / 0.9).exp();
            assert!(lower <= normal_sf((2.0 * d).sqrt()));
            assert_relative_eq!(kolmogorov_lower(&p, d).unwrap(), lower, max_relative = 1e-12);
        }
    }

    #[test]
    fn tdoubleprime_shapes() {
        let law = WindowLaw::case_i(1.0);
        let one = tdoubleprime_bound(&law, 1000, 2000, 1, 2.0, 8.0).unwrap();
        let area = crate::normalizers::rate_bundle(&law, 1000, 2000).unwrap().area;
        assert_relative_eq!(one.general, area * 0.25, max_relative = 1e-12);
        let mut prev = f64::INFINITY;
        for n in 1..6 {
            let s = tdoubleprime_bound(&law, 1000, 2000, n, 1.0, 1.0)
                .unwrap()
                .simplified
                .unwrap();
            assert!(s <= prev);
            prev = s;
        }
        assert!(tdoubleprime_bound(&WindowLaw::case_iii(1.0), 100, 100, 2, 1.0, 1.0)
            .unwrap()
            .simplified
            .is_none());
        assert!(tdoubleprime_bound(&law, 100, 100, 0, 1.0, 1.0).is_err());
    }

    #[test]
    fn sqrt_exp_reduction() {
        // m_i = e^{sqrt i}: the case (i) form is dominated by the reduced one.
        for &i in &[10u64, 31, 100, 316, 1000, 3162, 10_000] {
            for &j in &[10u64, 47, 500, 2000, 10_000] {
                let (lm, ln) = ((i as f64).sqrt(), (j as f64).sqrt());
                let llog = |x: f64| x.ln().max(1.0);
                let direct = (llog(lm) + llog(ln)) * llog(lm + ln) / (lm + ln).powi(3);
                assert!(direct <= sqrt_exp_reduced_bound(i, j, 1) * (1.0 + 1e-12), "{i} {j}");
            }
        }
    }

    #[test]
    fn power_families_classify() {
        let fam = (SubseqFamily::SqrtExp { c: 1.0 }, SubseqFamily::SqrtExp { c: 1.0 });
        let hs = default_summability_horizons();
        // (ij)^{-κ} with m_i = e^{sqrt i}: ln i = 2 ln ln m_i.
        let power = |kappa: f64| move |lm: f64, ln: f64| Ok((-kappa * 2.0 * (lm.ln() + ln.ln())).exp());
        let r2 = summability_diagnostic(fam, power(2.0), &hs).unwrap();
        assert_eq!(r2.slope.verdict, Verdict::Convergent);
        let r1 = summability_diagnostic(fam, power(1.0), &hs).unwrap();
        assert_eq!(r1.slope.verdict, Verdict::Divergent);
    }

    #[test]
    fn case_i_phase_transition() {
        let (sigma, delta) = (1.0, 0.05);
        let threshold = sigma * (1.0f64 - delta).powf(-1.5);
        let law = WindowLaw::case_i(sigma);
        let fam = (SubseqFamily::SqrtExp { c: 1.0 }, SubseqFamily::SqrtExp { c: 1.0 });
        let hs = default_summability_horizons();
        let verdict = |scale: f64| {
            let p = BoundParams::new(scale * threshold, delta, 0.05, sigma, 0.1).unwrap();
            summability_diagnostic(fam, case_upper_evaluator(&law, &p), &hs)
                .unwrap()
                .slope
                .verdict
        };
        assert_eq!(verdict(1.2), Verdict::Convergent);
        assert_eq!(verdict(0.8), Verdict::Divergent);
    }

    #[test]
    fn lower_bound_minorant_diverges() {
        let law = WindowLaw::case_i(1.0);
        let fam = (SubseqFamily::SqrtExp { c: 3.0 }, SubseqFamily::SqrtExp { c: 3.0 });
        let p = BoundParams::new(1.0, 0.05, 0.05, 1.0, 0.2).unwrap();
        let r = summability_diagnostic(fam, case_lower_evaluator(&law, &p), &default_summability_horizons()).unwrap();
        assert_eq!(r.slope.verdict, Verdict::Divergent);
    }
}
