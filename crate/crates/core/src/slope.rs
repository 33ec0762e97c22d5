//! Convergence verdicts from partial sums over log-spaced horizons.
//!
//! With horizons `ℓ_k` (a logarithmic scale) and partial sums `S_k`, the
//! increments `g_k = ΔS/Δℓ` behave like `ℓ^s`; the series converges when
//! `s < -1`. The slope `s` is a least-squares fit of `ln g` on `ln ℓ` over
//! the last few increments, and `|s + 1| < SLOPE_RESOLUTION` is reported as
//! a boundary case rather than guessed.

use alloc::vec::Vec;

pub const SLOPE_RESOLUTION: f64 = 0.02;
/// Increments used in the tail fit.
pub const TAIL_INCREMENTS: usize = 4;
/// Increments at or below this fraction of the partial sum count as zero.
pub const VANISHING: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Convergent,
    Divergent,
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeReport {
    pub horizons: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Fitted exponent of the increments; `-inf` when they vanish.
    pub slope: f64,
    pub verdict: Verdict,
}

/// Least-squares slope of `ys` on `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Needs at least four horizons, increasing and positive.
pub fn classify_partial_sums(horizons: &[f64], sums: &[f64]) -> SlopeReport {
    assert!(
        horizons.len() == sums.len() && horizons.len() >= 4,
        "need at least four horizons"
    );
    let k = horizons.len() - 1;
    let first = k.saturating_sub(TAIL_INCREMENTS);
    let scale = sums.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut vanished = false;
    for idx in first..k {
        let ds = sums[idx + 1] - sums[idx];
        if !(ds > VANISHING * scale) || ds == 0.0 {
            vanished = true;
            break;
        }
        let g = ds / (horizons[idx + 1] - horizons[idx]);
        xs.push(libm::log(libm::sqrt(horizons[idx] * horizons[idx + 1])));
        ys.push(libm::log(g));
    }
    let (slope, verdict) = if vanished {
        (f64::NEG_INFINITY, Verdict::Convergent)
    } else {
        let s = fit_slope(&xs, &ys);
        let v = if (s + 1.0).abs() < SLOPE_RESOLUTION {
            Verdict::Boundary
        } else if s < -1.0 {
            Verdict::Convergent
        } else {
            Verdict::Divergent
        };
        (s, v)
    };
    SlopeReport {
        horizons: horizons.to_vec(),
        partial_sums: sums.to_vec(),
        slope,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn horizons() -> Vec<f64> {
        (0..7).map(|k| 10.0 * 2f64.powi(k)).collect()
    }

    #[test]
    fn power_law_partial_sums() {
        let h = horizons();
        // S = -ℓ^{-1/2}: increments ~ ℓ^{-3/2}.
        let conv: Vec<f64> = h.iter().map(|l| -l.powf(-0.5)).collect();
        let r = classify_partial_sums(&h, &conv);
        assert_eq!(r.verdict, Verdict::Convergent);
        assert!((r.slope + 1.5).abs() < 0.01);
        let div: Vec<f64> = h.iter().map(|l| l.ln()).collect();
        assert_eq!(classify_partial_sums(&h, &div).verdict, Verdict::Boundary);
        let div: Vec<f64> = h.iter().map(|l| l * l).collect();
        assert_eq!(classify_partial_sums(&h, &div).verdict, Verdict::Divergent);
    }

    #[test]
    fn flat_sums_are_convergent() {
        let h = horizons();
        let r = classify_partial_sums(&h, &[1.0; 7]);
        assert_eq!(r.verdict, Verdict::Convergent);
        assert_eq!(r.slope, f64::NEG_INFINITY);
        assert_eq!(classify_partial_sums(&h, &[0.0; 7]).verdict, Verdict::Convergent);
    }
}
