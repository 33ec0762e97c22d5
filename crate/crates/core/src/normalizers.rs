//! Window lengths, rates and normalizers for every supported regime.
//!
//! All logarithms follow the `log⁺` convention of [`crate::math`]. Inputs
//! below 3 are rejected instead of being clamped.

use crate::math::{llog_plus_ln, log_plus_ln};
use crate::{Error, Result};

/// Slowly varying deflator `L(x) = (log⁺ x)^p (llog⁺ x)^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowlyVarying {
    pub p: f64,
    pub q: f64,
}

impl SlowlyVarying {
    pub const LOG: Self = SlowlyVarying { p: 1.0, q: 0.0 };
    pub const LOGLOG: Self = SlowlyVarying { p: 0.0, q: 1.0 };

    pub fn new(p: f64, q: f64) -> Result<Self> {
        let sv = SlowlyVarying { p, q };
        sv.validate()?;
        Ok(sv)
    }

    /// Nondecreasing and unbounded needs both exponents nonnegative and one positive.
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 0.0 && self.p.is_finite()) {
            return Err(Error::param("p", self.p, "must be finite and >= 0"));
        }
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return Err(Error::param("q", self.q, "must be finite and >= 0"));
        }
        if self.p + self.q == 0.0 {
            return Err(Error::param("p + q", 0.0, "L must grow to infinity"));
        }
        Ok(())
    }

    /// `ln L(e^lx)`.
    #[inline]
    pub fn ln_at_ln(&self, lx: f64) -> f64 {
        let mut s = 0.0;
        if self.p != 0.0 {
            s += self.p * libm::log(log_plus_ln(lx));
        }
        if self.q != 0.0 {
            s += self.q * libm::log(llog_plus_ln(lx));
        }
        s
    }

    pub fn eval(&self, x: f64) -> f64 {
        libm::exp(self.ln_at_ln(libm::log(x)))
    }

    /// `r(x) = log⁺ L(x) + llog⁺ x`.
    #[inline]
    pub fn r_at_ln(&self, lx: f64) -> f64 {
        log_plus_ln(self.ln_at_ln(lx)) + llog_plus_ln(lx)
    }

    /// Eventual dominance `L ≥ other`, decided on the exponents.
    pub fn dominates(&self, other: &SlowlyVarying) -> bool {
        self.p > other.p || (self.p == other.p && self.q >= other.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisRule {
    /// `a_n = n^α`, `α ∈ (0, 1)`.
    Power { alpha: f64 },
    /// `a_n = n / log n`.
    LogFraction,
    /// `a_n = n / log log n`.
    LogLogFraction,
    /// `a_n = n / L(n)`.
    GeneralSV(SlowlyVarying),
}

impl AxisRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            AxisRule::Power { alpha } => {
                if *alpha > 0.0 && *alpha < 1.0 {
                    Ok(())
                } else {
                    Err(Error::param("alpha", *alpha, "must lie in the open interval (0, 1)"))
                }
            }
            AxisRule::GeneralSV(sv) => sv.validate(),
            _ => Ok(()),
        }
    }

    /// The deflator of a slowly varying rule; `None` for `Power`.
    pub fn deflator(&self) -> Option<SlowlyVarying> {
        match self {
            AxisRule::Power { .. } => None,
            AxisRule::LogFraction => Some(SlowlyVarying::LOG),
            AxisRule::LogLogFraction => Some(SlowlyVarying::LOGLOG),
            AxisRule::GeneralSV(sv) => Some(*sv),
        }
    }

    /// `ln(a_n / n)` at `ln n`; valid for any real `ln n`.
    #[inline]
    pub fn ln_relative_length_ln(&self, ln_n: f64) -> f64 {
        match self {
            AxisRule::Power { alpha } => (alpha - 1.0) * ln_n,
            AxisRule::LogFraction => -libm::log(log_plus_ln(ln_n)),
            AxisRule::LogLogFraction => -libm::log(llog_plus_ln(ln_n)),
            AxisRule::GeneralSV(sv) => -sv.ln_at_ln(ln_n),
        }
    }

    /// `ln a_n` at `ln n`.
    #[inline]
    pub fn ln_length_ln(&self, ln_n: f64) -> f64 {
        ln_n + self.ln_relative_length_ln(ln_n)
    }
}

fn check_index(what: &'static str, n: u64) -> Result<()> {
    if n < 3 {
        Err(Error::BelowDomain {
            what,
            value: n as f64,
            min: 3.0,
        })
    } else {
        Ok(())
    }
}

fn check_ln_index(what: &'static str, ln_n: f64) -> Result<()> {
    // 1e-12 slack so that ln(3) computed elsewhere is accepted.
    if !(ln_n >= libm::log(3.0) - 1e-12) {
        Err(Error::BelowDomain {
            what,
            value: libm::exp(ln_n),
            min: 3.0,
        })
    } else {
        Ok(())
    }
}

/// Real-valued window length `a_n`, never floored.
pub fn axis_length(rule: &AxisRule, n: u64) -> Result<f64> {
    rule.validate()?;
    check_index("n", n)?;
    Ok(libm::exp(rule.ln_length_ln(libm::log(n as f64))))
}

/// Two axis rules plus the summand standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowLaw {
    pub axis1: AxisRule,
    pub axis2: AxisRule,
    pub sigma: f64,
}

/// The closed-form regime a law falls into.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `n/log n` on both axes.
    LogLog,
    /// `n/log log n` on both axes.
    LogLogLog,
    /// `m/log m` against `n/log log n`.
    LogMixed,
    /// `m^α` against `n/log n`.
    PowerLog { alpha: f64, power_on_axis1: bool },
    /// Two slowly varying deflators with `L1 ≥ L2`.
    General { l1: SlowlyVarying, l2: SlowlyVarying },
    /// Power lengths on both axes: only the limit constant is available.
    PowerPower { alpha1: f64, alpha2: f64 },
}

impl WindowLaw {
    pub fn new(axis1: AxisRule, axis2: AxisRule, sigma: f64) -> Result<Self> {
        let law = WindowLaw { axis1, axis2, sigma };
        law.validate()?;
        Ok(law)
    }

    pub fn case_i(sigma: f64) -> Self {
        WindowLaw {
            axis1: AxisRule::LogFraction,
            axis2: AxisRule::LogFraction,
            sigma,
        }
    }

    pub fn case_ii(sigma: f64) -> Self {
        WindowLaw {
            axis1: AxisRule::LogLogFraction,
            axis2: AxisRule::LogLogFraction,
            sigma,
        }
    }

    pub fn case_iii(sigma: f64) -> Self {
        WindowLaw {
            axis1: AxisRule::LogFraction,
            axis2: AxisRule::LogLogFraction,
            sigma,
        }
    }

    pub fn mixed(alpha: f64, sigma: f64) -> Self {
        WindowLaw {
            axis1: AxisRule::Power { alpha },
            axis2: AxisRule::LogFraction,
            sigma,
        }
    }

    pub fn general(l1: SlowlyVarying, l2: SlowlyVarying, sigma: f64) -> Self {
        WindowLaw {
            axis1: AxisRule::GeneralSV(l1),
            axis2: AxisRule::GeneralSV(l2),
            sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", self.sigma, "must be finite and >= 0"));
        }
        self.axis1.validate()?;
        self.axis2.validate()?;
        self.regime().map(|_| ())
    }

    pub fn regime(&self) -> Result<Regime> {
        use AxisRule::*;
        Ok(match (self.axis1, self.axis2) {
            (LogFraction, LogFraction) => Regime::LogLog,
            (LogLogFraction, LogLogFraction) => Regime::LogLogLog,
            (LogFraction, LogLogFraction) | (LogLogFraction, LogFraction) => Regime::LogMixed,
            (Power { alpha }, LogFraction) => Regime::PowerLog {
                alpha,
                power_on_axis1: true,
            },
            (LogFraction, Power { alpha }) => Regime::PowerLog {
                alpha,
                power_on_axis1: false,
            },
            (Power { alpha: alpha1 }, Power { alpha: alpha2 }) => Regime::PowerPower { alpha1, alpha2 },
            (Power { .. }, _) | (_, Power { .. }) => {
                return Err(Error::UnsupportedRegime(
                    "a power axis is only supported against n/log n",
                ))
            }
            (a, b) => {
                let (l1, l2) = (a.deflator().unwrap(), b.deflator().unwrap());
                if !l1.dominates(&l2) {
                    return Err(Error::UnsupportedRegime(
                        "general law needs L1 >= L2 eventually; swap the axes",
                    ));
                }
                Regime::General { l1, l2 }
            }
        })
    }
}

/// Normalizers of a window anchored at `(m, n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizerBundle {
    pub m: u64,
    pub n: u64,
    pub a1: f64,
    pub a2: f64,
    pub area: f64,
    pub rate: f64,
    pub f: f64,
    pub r_m: f64,
    pub r_n: f64,
}

/// Log-scale normalizers for real anchors too large to materialize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogBundle {
    pub ln_a1: f64,
    pub ln_a2: f64,
    pub ln_area: f64,
    pub rate: f64,
    pub r_m: f64,
    pub r_n: f64,
}

impl LogBundle {
    /// `ln f = ln area + ln rate`.
    pub fn ln_f(&self) -> f64 {
        self.ln_area + libm::log(self.rate)
    }
}

/// Per-coordinate rates `(r_m, r_n)` with `rate = r_m + r_n`.
fn rates(regime: &Regime, lm: f64, ln: f64) -> (f64, f64) {
    match regime {
        Regime::LogLog | Regime::LogMixed => (2.0 * llog_plus_ln(lm), 2.0 * llog_plus_ln(ln)),
        Regime::LogLogLog => (llog_plus_ln(lm), llog_plus_ln(ln)),
        Regime::PowerLog { alpha, .. } => ((1.0 - alpha) * log_plus_ln(lm), (1.0 - alpha) * log_plus_ln(ln)),
        Regime::General { l1, .. } => (l1.r_at_ln(lm), l1.r_at_ln(ln)),
        Regime::PowerPower { .. } => unreachable!("rejected before rate evaluation"),
    }
}

/// Normalizers at real anchors given by their logarithms (`≥ ln 3`).
pub fn rate_bundle_ln(law: &WindowLaw, ln_m: f64, ln_n: f64) -> Result<LogBundle> {
    law.validate()?;
    check_ln_index("m", ln_m)?;
    check_ln_index("n", ln_n)?;
    let regime = law.regime()?;
    if let Regime::PowerPower { .. } = regime {
        return Err(Error::UnsupportedRegime(
            "two power axes: only the limit constant is available",
        ));
    }
    let ln_a1 = law.axis1.ln_length_ln(ln_m);
    let ln_a2 = law.axis2.ln_length_ln(ln_n);
    let (r_m, r_n) = rates(&regime, ln_m, ln_n);
    Ok(LogBundle {
        ln_a1,
        ln_a2,
        ln_area: ln_a1 + ln_a2,
        rate: r_m + r_n,
        r_m,
        r_n,
    })
}

pub fn rate_bundle(law: &WindowLaw, m: u64, n: u64) -> Result<NormalizerBundle> {
    check_index("m", m)?;
    check_index("n", n)?;
    let lb = rate_bundle_ln(law, libm::log(m as f64), libm::log(n as f64))?;
    let a1 = libm::exp(lb.ln_a1);
    let a2 = libm::exp(lb.ln_a2);
    let area = a1 * a2;
    Ok(NormalizerBundle {
        m,
        n,
        a1,
        a2,
        area,
        rate: lb.rate,
        f: area * lb.rate,
        r_m: lb.r_m,
        r_n: lb.r_n,
    })
}

/// One-dimensional `f_n = min(a_n d_n, n)` with `d_n = log L(n) + log log n`.
pub fn normalizer_f_1d(rule: &AxisRule, n: u64) -> Result<f64> {
    rule.validate()?;
    check_index("n", n)?;
    let sv = rule.deflator().ok_or(Error::UnsupportedRegime(
        "one-dimensional normalizers need a slowly varying rule",
    ))?;
    let ln_n = libm::log(n as f64);
    let a = libm::exp(rule.ln_length_ln(ln_n));
    let d = sv.r_at_ln(ln_n);
    Ok((a * d).min(n as f64))
}

/// `b = (σδ/ε) sqrt(area/rate)`.
pub fn truncation_level(law: &WindowLaw, m: u64, n: u64, eps: f64, delta: f64) -> Result<f64> {
    check_eps_delta(eps, delta)?;
    let b = rate_bundle(law, m, n)?;
    Ok(law.sigma * delta / eps * libm::sqrt(b.area / b.rate))
}

pub(crate) fn check_eps_delta(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", eps, "must be finite and > 0"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", delta, "must lie in the open interval (0, 1)"));
    }
    Ok(())
}

/// Almost-sure limsup constant of the normalized window sums.
pub fn lsl_constant(law: &WindowLaw) -> Result<f64> {
    law.validate()?;
    Ok(match law.regime()? {
        Regime::PowerPower { alpha1, .. } => law.sigma * libm::sqrt(1.0 - alpha1),
        _ => law.sigma,
    })
}
