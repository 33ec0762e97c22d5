//! Symmetric summand distributions with known tails.

use crate::math::{llog_plus_ln, ln_normal_sf, log_plus_ln, normal_hazard, normal_sf};
use crate::quad::{bisect_increasing, integrate};
use crate::rng::CounterRng;
use crate::{Error, Result};
use core::f64::consts::{LN_2, PI};
use rand_core::RngCore;
use rand_distr::{Distribution, StandardNormal, StudentT};

/// Symmetric law with `P(|X| > x) = min(1, x^-β (log⁺x)^-γ (llog⁺x)^-δ)`.
///
/// The formula equals 1 at `x₀ = 1` and is decreasing beyond it whenever
/// `β + min(γ, 0) + min(δ, 0) > 0`, which is required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPerturbedPareto {
    pub beta: f64,
    pub gamma: f64,
    pub dlt: f64,
}

const LPP_MAX_ITER: usize = 200;

impl LogPerturbedPareto {
    pub fn new(beta: f64, gamma: f64, dlt: f64) -> Result<Self> {
        let d = LogPerturbedPareto { beta, gamma, dlt };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.gamma.is_finite() && self.dlt.is_finite()) {
            return Err(Error::param("beta", self.beta, "tail exponents must be finite"));
        }
        let slope = self.beta + self.gamma.min(0.0) + self.dlt.min(0.0);
        if !(slope > 0.0) {
            return Err(Error::param(
                "beta + min(gamma,0) + min(dlt,0)",
                slope,
                "must be > 0 so that the tail decreases from x0 = 1",
            ));
        }
        Ok(())
    }

    pub const X0: f64 = 1.0;

    /// `ln P(|X| > e^t)`.
    #[inline]
    pub fn ln_tail_ln(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let mut s = -self.beta * t;
        if self.gamma != 0.0 {
            s -= self.gamma * libm::log(log_plus_ln(t));
        }
        if self.dlt != 0.0 {
            s -= self.dlt * libm::log(llog_plus_ln(t));
        }
        s
    }

    /// `d ln P(|X| > x) / d ln x` at `ln x = t`.
    pub fn tail_log_slope_ln(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let mut s = -self.beta;
        if t > 1.0 {
            s -= self.gamma / t;
            if t > core::f64::consts::E {
                s -= self.dlt / (t * libm::log(t));
            }
        }
        s
    }

    /// Magnitude `x` with `P(|X| > x) = u`, by bracketing and bisection in
    /// `ln x` to relative accuracy 1e-12.
    pub fn inverse_tail(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::param("u", u, "must lie in (0, 1]"));
        }
        if u == 1.0 {
            return Ok(Self::X0);
        }
        let target = libm::log(u);
        let g = |t: f64| target - self.ln_tail_ln(t);
        // The log-tail falls at least at rate `slope` per unit of t.
        let rate = self.beta + self.gamma.min(0.0) + self.dlt.min(0.0);
        let mut hi = (-target / rate).max(1.0);
        let mut expansions = 0;
        while g(hi) <= 0.0 {
            hi *= 2.0;
            expansions += 1;
            if expansions > 60 {
                return Err(Error::NoConvergence {
                    what: "inverse tail bracket",
                    iterations: expansions,
                });
            }
        }
        bisect_increasing(g, 0.0, hi, 1e-12, LPP_MAX_ITER).map(libm::exp)
    }

    /// `inverse_tail` with a sign: `u` sets the magnitude, `negative` the sign.
    pub fn inverse_tail_sample(&self, u: f64, negative: bool) -> Result<f64> {
        let x = self.inverse_tail(u)?;
        Ok(if negative { -x } else { x })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    /// `σ = 0` is the point mass at zero.
    Gaussian {
        sigma: f64,
    },
    Rademacher,
    /// Symmetric uniform with variance `σ²`.
    Uniform {
        sigma: f64,
    },
    StudentT {
        nu: f64,
    },
    LogPerturbedPareto(LogPerturbedPareto),
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::Gaussian { sigma } | DistributionSpec::Uniform { sigma } => {
                if *sigma >= 0.0 && sigma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("sigma", *sigma, "must be finite and >= 0"))
                }
            }
            DistributionSpec::Rademacher => Ok(()),
            DistributionSpec::StudentT { nu } => {
                if *nu > 0.0 && nu.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("nu", *nu, "must be finite and > 0"))
                }
            }
            DistributionSpec::LogPerturbedPareto(d) => d.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistributionSpec::Gaussian { .. } => "gaussian",
            DistributionSpec::Rademacher => "rademacher",
            DistributionSpec::Uniform { .. } => "uniform",
            DistributionSpec::StudentT { .. } => "student-t",
            DistributionSpec::LogPerturbedPareto(_) => "log-perturbed-pareto",
        }
    }

    /// Integer-valued members sum exactly in floating point.
    pub fn is_integer_valued(&self) -> bool {
        matches!(
            self,
            DistributionSpec::Rademacher | DistributionSpec::Gaussian { sigma: 0.0 }
        )
    }

    pub fn variance(&self) -> Option<f64> {
        match self {
            DistributionSpec::Gaussian { sigma } | DistributionSpec::Uniform { sigma } => Some(sigma * sigma),
            DistributionSpec::Rademacher => Some(1.0),
            DistributionSpec::StudentT { nu } => (*nu > 2.0).then(|| nu / (nu - 2.0)),
            DistributionSpec::LogPerturbedPareto(d) => {
                let finite = d.beta > 2.0 || (d.beta == 2.0 && (d.gamma > 1.0 || (d.gamma == 1.0 && d.dlt > 1.0)));
                if finite {
                    self.second_moment_above(0.0).ok()
                } else {
                    None
                }
            }
        }
    }

    /// `ln P(|X| > e^t)`; `-inf` where the tail vanishes.
    pub fn ln_abs_tail_ln(&self, t: f64) -> Result<f64> {
        Ok(match self {
            DistributionSpec::Gaussian { sigma } => {
                if *sigma == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    LN_2 + ln_normal_sf(libm::exp(t) / sigma)
                }
            }
            DistributionSpec::Rademacher => {
                if t < 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            DistributionSpec::Uniform { sigma } => {
                let r = libm::exp(t) / (sigma * libm::sqrt(3.0));
                if r < 1.0 {
                    libm::log1p(-r)
                } else {
                    f64::NEG_INFINITY
                }
            }
            DistributionSpec::StudentT { .. } => return Err(Error::TailUnavailable("student-t")),
            DistributionSpec::LogPerturbedPareto(d) => d.ln_tail_ln(t),
        })
    }

    /// `d ln P(|X| > x) / d ln x` at `ln x = t` (zero where the tail is flat).
    pub fn abs_tail_log_slope_ln(&self, t: f64) -> Result<f64> {
        Ok(match self {
            DistributionSpec::Gaussian { sigma } => {
                if *sigma == 0.0 {
                    0.0
                } else {
                    let z = libm::exp(t) / sigma;
                    -z * normal_hazard(z)
                }
            }
            DistributionSpec::Rademacher => 0.0,
            DistributionSpec::Uniform { sigma } => {
                let r = libm::exp(t) / (sigma * libm::sqrt(3.0));
                if r < 1.0 {
                    -r / (1.0 - r)
                } else {
                    0.0
                }
            }
            DistributionSpec::StudentT { .. } => return Err(Error::TailUnavailable("student-t")),
            DistributionSpec::LogPerturbedPareto(d) => d.tail_log_slope_ln(t),
        })
    }

    /// `E[X² 1{|X| > b}]`, or an error when it is infinite.
    pub fn second_moment_above(&self, b: f64) -> Result<f64> {
        let b = b.max(0.0);
        match self {
            DistributionSpec::Gaussian { sigma } => {
                if *sigma == 0.0 {
                    return Ok(0.0);
                }
                let z = b / sigma;
                Ok(2.0 * sigma * sigma * (z * crate::math::normal_pdf(z) + normal_sf(z)))
            }
            DistributionSpec::Rademacher => Ok(if b < 1.0 { 1.0 } else { 0.0 }),
            DistributionSpec::Uniform { sigma } => {
                let c = sigma * libm::sqrt(3.0);
                Ok(if b < c {
                    (c * c * c - b * b * b) / (3.0 * c)
                } else {
                    0.0
                })
            }
            DistributionSpec::StudentT { nu } => {
                if *nu <= 2.0 {
                    return Err(Error::param("nu", *nu, "second moment is infinite for nu <= 2"));
                }
                let nu = *nu;
                let ln_c = libm::lgamma(0.5 * (nu + 1.0)) - libm::lgamma(0.5 * nu) - 0.5 * libm::log(nu * PI);
                // 2 ∫_b^∞ x² p(x) dx in t = ln x.
                let h = |t: f64| {
                    let x = libm::exp(t);
                    2.0 * libm::exp(ln_c + 3.0 * t - 0.5 * (nu + 1.0) * libm::log1p(x * x / nu))
                };
                let lo = libm::log(b.max(1e-8));
                let hi = lo.max(0.0) + 80.0 / (nu - 2.0).min(1.0);
                let q = integrate(h, &[lo, lo.max(0.0), hi], 1e-10, 0.0);
                Ok(q.value)
            }
            DistributionSpec::LogPerturbedPareto(d) => {
                let finite = d.beta > 2.0 || (d.beta == 2.0 && (d.gamma > 1.0 || (d.gamma == 1.0 && d.dlt > 1.0)));
                if !finite {
                    return Err(Error::param("beta", d.beta, "second moment is infinite"));
                }
                // b² T(b) + ∫_b^∞ 2x T(x) dx, the integral in t = ln x.
                let tb = libm::log(b.max(1e-300)).max(0.0);
                let atb = if b < 1.0 {
                    1.0
                } else {
                    b * b * libm::exp(d.ln_tail_ln(tb))
                };
                let h = |t: f64| 2.0 * libm::exp(2.0 * t + d.ln_tail_ln(t));
                let mut breaks = alloc::vec![tb];
                for k in [1.0, core::f64::consts::E] {
                    if k > tb {
                        breaks.push(k);
                    }
                }
                let span = if d.beta > 2.0 { 60.0 / (d.beta - 2.0) } else { 1e6 };
                breaks.push(tb + span.max(10.0));
                let q = integrate(h, &breaks, 1e-10, 0.0);
                Ok(atb + q.value)
            }
        }
    }

    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        let student = match self {
            DistributionSpec::StudentT { nu } => {
                Some(StudentT::new(*nu).map_err(|_| Error::param("nu", *nu, "must be > 0"))?)
            }
            _ => None,
        };
        Ok(Sampler { spec: *self, student })
    }
}

/// Ready-to-draw form of a [`DistributionSpec`].
#[derive(Debug, Clone, Copy)]
pub struct Sampler {
    spec: DistributionSpec,
    student: Option<StudentT<f64>>,
}

impl Sampler {
    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    #[inline]
    pub fn sample(&self, rng: &mut CounterRng) -> f64 {
        match &self.spec {
            DistributionSpec::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            DistributionSpec::Rademacher => {
                if rng.next_u64() >> 63 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            DistributionSpec::Uniform { sigma } => sigma * libm::sqrt(3.0) * (2.0 * rng.open01() - 1.0),
            DistributionSpec::StudentT { .. } => self.student.as_ref().map_or(0.0, |t| t.sample(rng)),
            DistributionSpec::LogPerturbedPareto(d) => {
                let negative = rng.next_u64() >> 63 == 1;
                let u = rng.open01();
                // Valid specs always invert; fall back to x0 only on a numerical fault.
                d.inverse_tail_sample(u, negative)
                    .unwrap_or(if negative { -1.0 } else { 1.0 })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn moments(spec: DistributionSpec, n: u64, seed: u64) -> (f64, f64) {
        let s = spec.sampler().unwrap();
        let mut rng = CounterRng::from_key(seed);
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let x = s.sample(&mut rng);
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        (mean, sq / n as f64 - mean * mean)
    }

    #[test]
    fn gaussian_first_two_moments() {
        let (mean, var) = moments(DistributionSpec::Gaussian { sigma: 1.0 }, 1_000_000, 42);
        // SE(mean) = 1e-3, SE(var) ≈ sqrt(2/n) = 1.4e-3.
        assert!(mean.abs() < 4e-3, "{mean}");
        assert!((var - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn uniform_and_rademacher_variances() {
        let (_, v) = moments(DistributionSpec::Uniform { sigma: 2.0 }, 400_000, 1);
        assert!((v / 4.0 - 1.0).abs() < 0.01);
        let s = DistributionSpec::Rademacher.sampler().unwrap();
        let mut rng = CounterRng::from_key(3);
        assert!((0..1000).all(|_| s.sample(&mut rng).abs() == 1.0));
    }

    #[test]
    fn pareto_inverse_examples() {
        let pure = LogPerturbedPareto::new(2.0, 0.0, 0.0).unwrap();
        assert_eq!(pure.inverse_tail(1.0).unwrap(), 1.0);
        assert_relative_eq!(pure.inverse_tail(1e-6).unwrap(), 1e3, max_relative = 1e-11);
        let perturbed = LogPerturbedPareto::new(2.0, 4.0, 0.0).unwrap();
        let x = perturbed.inverse_tail(1e-6).unwrap();
        // Forward check of x²(ln x)⁴ = 10⁶.
        assert_relative_eq!(x * x * x.ln().powi(4), 1e6, max_relative = 1e-10);
        assert!(LogPerturbedPareto::new(2.0, -3.0, 0.0).is_err());
        assert!(pure.inverse_tail(0.0).is_err());
    }

    #[test]
    fn pareto_tail_is_nonincreasing() {
        let d = LogPerturbedPareto::new(4.0, -1.5, 0.5).unwrap();
        let mut prev = 0.0;
        for k in 0..2000 {
            let t = k as f64 * 0.05;
            let v = d.ln_tail_ln(t);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn pareto_sampler_matches_tail() {
        let d = LogPerturbedPareto::new(2.0, 1.0, 0.0).unwrap();
        let s = DistributionSpec::LogPerturbedPareto(d).sampler().unwrap();
        let mut rng = CounterRng::from_key(9);
        let n = 200_000;
        let x = 50.0;
        let hits = (0..n).filter(|_| s.sample(&mut rng).abs() > x).count() as f64 / n as f64;
        let p = libm::exp(d.ln_tail_ln(x.ln()));
        assert!(
            (hits - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(),
            "{hits} vs {p}"
        );
    }

    #[test]
    fn truncated_second_moments() {
        let g = DistributionSpec::Gaussian { sigma: 2.0 };
        assert_relative_eq!(g.second_moment_above(0.0).unwrap(), 4.0, max_relative = 1e-14);
        let u = DistributionSpec::Uniform { sigma: 1.0 };
        assert_relative_eq!(u.second_moment_above(0.0).unwrap(), 1.0, max_relative = 1e-14);
        let t = DistributionSpec::StudentT { nu: 5.0 };
        assert_relative_eq!(t.second_moment_above(0.0).unwrap(), 5.0 / 3.0, max_relative = 1e-6);
        // β = 3: E X² = 1 + ∫_1^∞ 2x·x^-3 dx = 3.
        let p = DistributionSpec::LogPerturbedPareto(LogPerturbedPareto::new(3.0, 0.0, 0.0).unwrap());
        assert_relative_eq!(p.second_moment_above(0.0).unwrap(), 3.0, max_relative = 1e-6);
        assert_relative_eq!(
            p.second_moment_above(10.0).unwrap(),
            100.0 * 1e-3 + 0.2,
            max_relative = 1e-6
        );
        let inf = DistributionSpec::LogPerturbedPareto(LogPerturbedPareto::new(2.0, 1.0, 0.0).unwrap());
        assert!(inf.second_moment_above(1.0).is_err());
    }

    #[test]
    fn gaussian_tail_and_slope() {
        let g = DistributionSpec::Gaussian { sigma: 1.0 };
        let t = 1.5f64.ln();
        assert_relative_eq!(
            g.ln_abs_tail_ln(t).unwrap().exp(),
            2.0 * normal_sf(1.5),
            max_relative = 1e-13
        );
        let h = 1e-6;
        let fd = (g.ln_abs_tail_ln(t + h).unwrap() - g.ln_abs_tail_ln(t - h).unwrap()) / (2.0 * h);
        assert_relative_eq!(g.abs_tail_log_slope_ln(t).unwrap(), fd, max_relative = 1e-6);
    }
}
