use lsl_core::dist::{DistributionSpec, LogPerturbedPareto};
use lsl_core::moments::{classify_moment, equivalence_check, EquivalenceOptions, MomentCase, MomentClass};
use lsl_core::slope::Verdict;

/// Each moment condition straddled on both sides of the power of `log`,
/// plus one configuration decided at the `llog` level.
fn straddle() -> Vec<(MomentCase, f64, f64, f64)> {
    let pl = MomentCase::PowerLog { alpha: 0.5 };
    vec![
        (MomentCase::CaseI, 2.0, 3.5, 0.0),
        (MomentCase::CaseI, 2.0, 4.5, 0.0),
        (MomentCase::CaseI, 2.0, 4.0, 2.0),
        (MomentCase::CaseII, 2.0, 1.5, 0.0),
        (MomentCase::CaseII, 2.0, 2.5, 0.0),
        (MomentCase::CaseII, 2.0, 2.0, 0.0),
        (MomentCase::CaseIII, 2.0, 2.5, 0.0),
        (MomentCase::CaseIII, 2.0, 3.5, 0.0),
        (MomentCase::CaseIII, 2.0, 3.0, -1.0),
        (pl, 4.0, -1.5, 0.0),
        (pl, 4.0, -0.5, 0.0),
        (pl, 4.0, -1.0, 3.0),
    ]
}

#[test]
fn three_routes_match_the_integral_test() {
    let opts = EquivalenceOptions::default();
    for (case, beta, gamma, dlt) in straddle() {
        let lpp = LogPerturbedPareto::new(beta, gamma, dlt).unwrap();
        let class = classify_moment(&lpp, &case).unwrap();
        let r = equivalence_check(&DistributionSpec::LogPerturbedPareto(lpp), &case.growth(), &opts).unwrap();
        let want = match class {
            MomentClass::Finite => Verdict::Convergent,
            MomentClass::Infinite => Verdict::Divergent,
        };
        eprintln!(
            "{case:?} γ={gamma} δ={dlt}: {class:?} slopes {:.3} {:.3} {:.3}",
            r.lattice.slope, r.integral.slope, r.expectation.slope
        );
        assert!(r.agree(), "{case:?} {gamma} {dlt}: {r:?}");
        assert_eq!(r.verdict(), want, "{case:?} {gamma} {dlt}");
    }
}

/// `∫ h'(x) P(|X| > x) dx` for `h = x^β (log x)^p (llog x)^q`, written in
/// `τ = ln ln x`, where the integrand is `≈ β e^{τ(p−γ+1)} τ^{q−δ}`.
fn oracle_integrand(beta: f64, p: f64, q: f64, gamma: f64, dlt: f64, tau: f64) -> f64 {
    let lx = tau.exp();
    let correction = 1.0 + p / (beta * lx) + q / (beta * lx * tau);
    beta * correction * (tau * (p - gamma + 1.0)).exp() * tau.powf(q - dlt)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + h * k as f64) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Finite iff the increments over successive doublings of `τ` shrink.
fn oracle_class(beta: f64, p: f64, q: f64, gamma: f64, dlt: f64) -> MomentClass {
    let f = |t: f64| oracle_integrand(beta, p, q, gamma, dlt, t);
    let d1 = simpson(f, 20.0, 40.0, 20_000);
    let d2 = simpson(f, 40.0, 80.0, 20_000);
    if d2 / d1 < 0.9 {
        MomentClass::Finite
    } else {
        MomentClass::Infinite
    }
}

#[test]
fn classifier_matches_quadrature_oracle() {
    let mut configs = straddle();
    configs.push((MomentCase::CaseI, 2.0, 4.0, 0.0));
    configs.push((MomentCase::CaseI, 2.0, 4.0, 1.5));
    configs.push((MomentCase::CaseII, 2.0, 0.0, 0.0));
    for (case, beta, gamma, dlt) in configs {
        let lpp = LogPerturbedPareto::new(beta, gamma, dlt).unwrap();
        let (_, p, q) = case.exponents();
        assert_eq!(
            classify_moment(&lpp, &case).unwrap(),
            oracle_class(beta, p, q, gamma, dlt),
            "{case:?} γ={gamma} δ={dlt}"
        );
    }
    // The boundary example: γ = 4, δ = 0 under case (i) is infinite.
    let lpp = LogPerturbedPareto::new(2.0, 4.0, 0.0).unwrap();
    assert_eq!(
        classify_moment(&lpp, &MomentCase::CaseI).unwrap(),
        MomentClass::Infinite
    );
}
