//! Floating-point checks of the modular transformation laws of `eta` and `G`,
//! run independently of the exact series layer.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use num_rational::Rational64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ntheory::{divisors, gcd};
use crate::par::Execution;
use crate::partitions::{solve_s, z_prime_closed_comb, z_trivial_comb, GCombination};
use crate::qseries::PuiseuxSeries;

/// Smallest imaginary part accepted by the numeric routines.
pub const MIN_IMAG: f64 = 0.05;

/// `omega = chi(K3)`.
pub const OMEGA: i32 = 24;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A point of the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperHalfPoint(Complex64);

impl UpperHalfPoint {
    pub fn new(tau: Complex64) -> Result<Self> {
        if tau.im > 0.0 && tau.im.is_finite() && tau.re.is_finite() {
            Ok(Self(tau))
        } else {
            Err(Error::ImaginaryTooSmall(tau.im))
        }
    }

    pub fn tau(self) -> Complex64 {
        self.0
    }

    /// `-1/tau`.
    pub fn s(self) -> Self {
        Self(-1.0 / self.0)
    }

    /// `tau + 1`.
    pub fn t(self) -> Self {
        Self(self.0 + 1.0)
    }
}

impl fmt::Display for UpperHalfPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        format_complex(self.0, f)
    }
}

fn format_complex(z: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if z.im < 0.0 {
        write!(f, "{}-{}i", z.re, -z.im)
    } else {
        write!(f, "{}+{}i", z.re, z.im)
    }
}

/// Parses `a+bi`, `a-bi`, `bi` or `a`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("not a complex number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // The split point is the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

fn guard(tau: Complex64) -> Result<()> {
    if tau.im >= MIN_IMAG && tau.re.is_finite() && tau.im.is_finite() {
        Ok(())
    } else {
        Err(Error::ImaginaryTooSmall(tau.im))
    }
}

/// Enough product factors for `|q|^terms < 1e-18`.
pub fn default_terms(tau: Complex64) -> usize {
    let im = tau.im.max(MIN_IMAG);
    (18.0 * std::f64::consts::LN_10 / (2.0 * PI * im)).ceil() as usize + 8
}

/// `q^(1/24) prod_{k <= terms} (1 - q^k)`.
pub fn eta(tau: Complex64, terms: usize) -> Result<Complex64> {
    guard(tau)?;
    let q = (2.0 * PI * I * tau).exp();
    let mut prod = Complex64::new(1.0, 0.0);
    let mut qk = q;
    for _ in 0..terms {
        prod *= 1.0 - qk;
        qk *= q;
    }
    Ok((2.0 * PI * I * tau / 24.0).exp() * prod)
}

/// `q^(1/24) sum_k (-1)^k q^(k(3k-1)/2)` over pentagonal exponents `<= terms`.
pub fn eta_pentagonal(tau: Complex64, terms: usize) -> Result<Complex64> {
    guard(tau)?;
    let mut sum = Complex64::new(1.0, 0.0);
    for k in 1i64.. {
        let lo = k * (3 * k - 1) / 2;
        if lo as usize > terms {
            break;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for e in [lo, k * (3 * k + 1) / 2] {
            if e as usize <= terms {
                sum += sign * (2.0 * PI * I * tau * e as f64).exp();
            }
        }
    }
    Ok((2.0 * PI * I * tau / 24.0).exp() * sum)
}

/// `eta(tau)^-24`.
pub fn g_num(tau: Complex64, terms: usize) -> Result<Complex64> {
    Ok(eta(tau, terms)?.powi(-24))
}

/// [`g_num`] with [`default_terms`].
pub fn g_auto(tau: Complex64) -> Result<Complex64> {
    g_num(tau, default_terms(tau))
}

/// `sum c_x e^(2 pi i x tau)` over the known terms of `series`.
pub fn eval_series(series: &PuiseuxSeries, tau: Complex64) -> Complex64 {
    series
        .terms()
        .map(|(x, c)| c.to_complex() * (2.0 * PI * I * tau * rat_f64(*x)).exp())
        .sum()
}

fn rat_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// `i`, `1/3 + i` and `-1/5 + 2i`.
pub fn sample_points() -> [Complex64; 3] {
    [
        Complex64::new(0.0, 1.0),
        Complex64::new(1.0 / 3.0, 1.0),
        Complex64::new(-0.2, 2.0),
    ]
}

fn complex_pair<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

fn tau_string<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&UpperHalfPoint(*z).to_string())
}

/// One comparison of two numerically evaluated sides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub rule: String,
    #[serde(serialize_with = "tau_string")]
    pub tau: Complex64,
    #[serde(serialize_with = "complex_pair")]
    pub lhs: Complex64,
    #[serde(serialize_with = "complex_pair")]
    pub rhs: Complex64,
    pub rel_err: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign: Option<i8>,
}

impl CheckReport {
    fn new(rule: String, tau: Complex64, lhs: Complex64, rhs: Complex64, tol: f64) -> Self {
        let e = rel_err(lhs, rhs);
        Self {
            rule,
            tau,
            lhs,
            rhs,
            rel_err: e,
            pass: e < tol,
            sign: None,
        }
    }
}

/// `eta(tau + 1) = e^(pi i/12) eta(tau)` and `eta(-1/tau) = sqrt(-i tau) eta(tau)`.
pub fn check_eta_laws(points: &[Complex64], tol: f64) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for &tau in points {
        let e = eta(tau, default_terms(tau))?;
        let shifted = tau + 1.0;
        let lhs = eta(shifted, default_terms(shifted))?;
        out.push(CheckReport::new("eta T".into(), tau, lhs, (PI * I / 12.0).exp() * e, tol));
        let inv = -1.0 / tau;
        let lhs = eta(inv, default_terms(inv))?;
        out.push(CheckReport::new("eta S".into(), tau, lhs, (-I * tau).sqrt() * e, tol));
    }
    Ok(out)
}

/// The three S-transformation rules for `G(r tau)`, `G((r/e^2) tau)` and
/// `G(((r/e) tau + m)/e)`, each at every sample point.
pub fn check_s_rules(r: u64, e: u64, m: u64, tol: f64) -> Result<Vec<CheckReport>> {
    if r == 0 || e == 0 || r % e != 0 || m >= e {
        return Err(Error::OutOfRange(format!("need e | r and 0 <= m < e, got r={r} e={e} m={m}")));
    }
    let (rf, ef) = (r as f64, e as f64);
    let dbar = r / e;
    let d = gcd(m as i64, e as i64) as u64;
    let o = e / d;
    let s = if o == 1 { 0 } else { solve_s(m as i64, e, d)? };
    let mut out = Vec::new();
    for tau in sample_points() {
        let w = tau.powi(-12);
        let t = -1.0 / tau;

        let lhs = g_auto(rf * t)?;
        let rhs = w * rf.powi(12) * g_auto(tau / rf)?;
        out.push(CheckReport::new(format!("G(r tau) r={r}"), tau, lhs, rhs, tol));

        let a = rf / (ef * ef);
        let lhs = g_auto(a * t)?;
        let rhs = w * a.powi(12) * g_auto(tau / a)?;
        out.push(CheckReport::new(format!("G(r/e^2 tau) r={r} e={e}"), tau, lhs, rhs, tol));

        let lhs = g_auto((dbar as f64 * t + m as f64) / ef)?;
        let y = d as f64 * tau / (dbar * o) as f64 + s as f64 / o as f64;
        let rhs = w * (dbar as f64 / d as f64).powi(12) * g_auto(y)?;
        out.push(CheckReport::new(format!("G(((r/e) tau + m)/e) r={r} e={e} m={m}"), tau, lhs, rhs, tol));
    }
    Ok(out)
}

/// Every rule for every `e | r` and `0 <= m < e`.
pub fn check_s_rules_all(r: u64, tol: f64, exec: Execution) -> Result<Vec<CheckReport>> {
    let cases: Vec<(u64, u64)> = divisors(r).into_iter().flat_map(|e| (0..e).map(move |m| (e, m))).collect();
    let parts = exec.map(&cases, |&(e, m)| check_s_rules(r, e, m, tol));
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// `Z(SU(r); -1/tau)` against `r^-12 (tau/i)^12 Z'(tau)` with the sign chosen
/// to fit, followed by the same comparison with every `q^shift` dropped and
/// the weight written as `r^-11 tau^-12`.
pub fn check_sduality_prefactor(r: u64, tau: Complex64, tol: f64) -> Result<Vec<CheckReport>> {
    let su = z_trivial_comb(r)?;
    let dual = z_prime_closed_comb(r)?;
    let rf = r as f64;
    let t = -1.0 / tau;

    let lhs = su.eval_with(t, &g_auto)?;
    let pref = rf.powi(-OMEGA / 2) * (tau / I).powi(OMEGA / 2);
    let base = pref * dual.eval_with(tau, &g_auto)?;
    let sign: i8 = if (lhs / base).re >= 0.0 { 1 } else { -1 };
    let mut literal = CheckReport::new(format!("s-duality r={r}"), tau, lhs, f64::from(sign) * base, tol);
    literal.sign = Some(sign);

    let best = fit_unshifted(&su, &dual, r, tau, tol)?;
    Ok(vec![literal, best])
}

fn fit_unshifted(su: &GCombination, dual: &GCombination, r: u64, tau: Complex64, tol: f64) -> Result<CheckReport> {
    let lhs = su.eval_unshifted(-1.0 / tau, &g_auto)?;
    let rhs = (r as f64).powi(-11) * tau.powi(-OMEGA / 2) * dual.eval_unshifted(tau, &g_auto)?;
    let mut rep = CheckReport::new(format!("s-duality unshifted r^-11 tau^-12 r={r}"), tau, lhs, rhs, tol);
    rep.sign = Some(1);
    Ok(rep)
}

/// The same combination evaluated as a truncated exact series and as a sum of
/// numeric `G` values.
pub fn check_exact_vs_numeric(
    name: &str,
    comb: &GCombination,
    series: &PuiseuxSeries,
    tau: Complex64,
    tol: f64,
) -> Result<CheckReport> {
    let numeric = comb.eval_with(tau, &g_auto)?;
    Ok(CheckReport::new(name.to_string(), tau, eval_series(series, tau), numeric, tol))
}

/// A sample point with `Im tau = max(1, r/2)`, where the expansions in
/// `q^(1/r)` converge quickly.
pub fn comparison_point(r: u64) -> Complex64 {
    Complex64::new(0.1, (r as f64 / 2.0).max(1.0))
}

/// Series order that makes the truncation error negligible at [`comparison_point`].
pub fn comparison_prec(r: u64) -> Rational64 {
    Rational64::from(r as i64) + Rational64::new(45, r as i64) + Rational64::from(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eta_hilb::g_series;
    use crate::partitions::{z_opt_twisted_comb, z_prime_assembled_comb};
    use crate::lattice::{GaussSumProvider, ProviderMode};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn five_points() -> [Complex64; 5] {
        [c(0.0, 1.0), c(0.3, 0.8), c(-0.45, 1.2), c(0.1, 0.5), c(2.7, 0.9)]
    }

    #[test]
    fn eta_at_i_matches_the_gamma_value() {
        // Gamma(1/4) / (2 pi^(3/4))
        let expected = 3.625_609_908_221_908 / (2.0 * PI.powf(0.75));
        let e = eta(I, 200).unwrap();
        assert!((e.re - expected).abs() < 1e-13);
        assert!(e.im.abs() < 1e-15);
        assert!((e.re - 0.768_225_4).abs() < 1e-7);
    }

    #[test]
    fn product_and_pentagonal_agree() {
        for tau in five_points() {
            let a = eta(tau, 300).unwrap();
            let b = eta_pentagonal(tau, 300).unwrap();
            assert!(rel_err(a, b) < 1e-13, "{tau}");
        }
    }

    #[test]
    fn guard_rejects_points_near_the_real_axis() {
        assert!(matches!(eta(c(0.0, 0.01), 100), Err(Error::ImaginaryTooSmall(_))));
        assert!(g_num(c(0.0, -1.0), 100).is_err());
        assert!(eta(c(0.0, 0.05), 100).is_ok());
        assert!(UpperHalfPoint::new(c(1.0, 0.0)).is_err());
    }

    #[test]
    fn eta_functional_equations() {
        for rep in check_eta_laws(&five_points(), 1e-10).unwrap() {
            assert!(rep.pass, "{rep:?}");
        }
        let tau = c(0.0, 2.0);
        let lhs = eta(-1.0 / tau, 200).unwrap();
        let rhs = (-I * tau).sqrt() * eta(tau, 200).unwrap();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn g_at_i() {
        let g = g_num(I, 200).unwrap();
        assert!((g.re - 560.108_035_676_935_8).abs() < 1e-9, "{g}");
    }

    #[test]
    fn numeric_g_matches_the_series() {
        let series = g_series(Rational64::from(30));
        for tau in [c(0.0, 1.0), c(0.37, 1.0)] {
            assert!(rel_err(eval_series(&series, tau), g_num(tau, 200).unwrap()) < 1e-8);
        }
        // q-periodicity
        let tau = c(0.21, 0.7);
        assert!(rel_err(g_auto(tau + 1.0).unwrap(), g_auto(tau).unwrap()) < 1e-9);
    }

    #[test]
    fn rule_examples() {
        let reps = check_s_rules(2, 1, 0, 1e-6).unwrap();
        assert!(reps.iter().all(|r| r.pass));
        let reps = check_s_rules(4, 4, 2, 1e-6).unwrap();
        assert_eq!(reps.len(), 9);
        assert!(reps.iter().all(|r| r.pass), "{reps:?}");
        assert!(check_s_rules(4, 3, 0, 1e-6).is_err());
        assert!(check_s_rules(4, 2, 2, 1e-6).is_err());
    }

    #[test]
    fn rule_two_with_e_equal_r_inverts_rule_one() {
        // G(-1/(r tau)) = tau^-12 r^-12 G(r tau), and rule 1 at -1/tau sends it back.
        let r = 3.0;
        let tau = c(0.2, 1.1);
        let forward = g_auto(-1.0 / (r * tau)).unwrap();
        let rule2 = tau.powi(-12) * r.powi(-12) * g_auto(r * tau).unwrap();
        assert!(rel_err(forward, rule2) < 1e-9);
        assert!(check_s_rules(3, 3, 0, 1e-6).unwrap().iter().all(|r| r.pass));
    }

    #[test]
    fn all_rules_up_to_rank_six() {
        for r in 1..=6 {
            for rep in check_s_rules_all(r, 1e-6, Execution::default()).unwrap() {
                assert!(rep.pass, "{rep:?}");
            }
        }
    }

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("1/3").ok(), None);
        assert_eq!(parse_complex("0.5+2i").unwrap(), c(0.5, 2.0));
        assert_eq!(parse_complex("-0.2 - 1.5i").unwrap(), c(-0.2, -1.5));
        assert_eq!(parse_complex("i").unwrap(), c(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("3").unwrap(), c(3.0, 0.0));
        assert_eq!(parse_complex("1e-1+1e+0i").unwrap(), c(0.1, 1.0));
        assert!(parse_complex("").is_err());
        assert!(parse_complex("x+i").is_err());
        let p = UpperHalfPoint::new(c(0.25, 1.5)).unwrap();
        assert_eq!(parse_complex(&p.to_string()).unwrap(), p.tau());
    }

    #[test]
    fn unshifted_fit_holds_and_literal_prefactor_does_not() {
        for r in [1u64, 2, 3] {
            for tau in [c(0.0, 1.0), c(1.0 / 7.0, 1.0)] {
                let reps = check_sduality_prefactor(r, tau, 1e-6).unwrap();
                // tau = i is fixed by S, so rank one balances there trivially.
                assert_eq!(reps[0].pass, r == 1 && tau == I, "{:?}", reps[0]);
                assert!(reps[1].pass, "{:?}", reps[1]);
            }
        }
    }

    #[test]
    fn exact_and_numeric_layers_agree() {
        let provider = GaussSumProvider::new(ProviderMode::Lattice);
        for r in 1..=6u64 {
            let tau = comparison_point(r);
            let prec = comparison_prec(r);
            let mut combs = vec![
                ("trivial", z_trivial_comb(r).unwrap()),
                ("closed", z_prime_closed_comb(r).unwrap()),
                ("assembled", z_prime_assembled_comb(r, &provider).unwrap()),
            ];
            if r > 1 {
                combs.push(("twisted", z_opt_twisted_comb(r, r, 1).unwrap()));
            }
            for (name, comb) in combs {
                let series = comb.to_series(prec).unwrap();
                let rep = check_exact_vs_numeric(name, &comb, &series, tau, 1e-6).unwrap();
                assert!(rep.pass, "r={r} {rep:?}");
            }
        }
    }

    #[test]
    fn report_json_shape() {
        let rep = &check_s_rules(1, 1, 0, 1e-6).unwrap()[0];
        let v = serde_json::to_value(rep).unwrap();
        for key in ["rule", "tau", "lhs", "rhs", "rel_err", "pass"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["tau"], "0+1i");
        assert!(v.get("sign").is_none());
    }
}
