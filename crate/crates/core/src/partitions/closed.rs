//! Closed-form partition functions as [`GCombination`]s.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};

use crate::cyclotomic::CyclotomicNumber;
use crate::error::{Error, Result};
use crate::lattice::{exact_order_count, GaussSumProvider};
use crate::ntheory::{big_pow, divisors, gcd, mod_inverse};
use crate::par::Execution;
use crate::partitions::gcomb::{GCombination, GTerm};
use crate::qseries::{rat, PuiseuxSeries};

fn q(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn qi(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

fn check_rank(r: u64) -> Result<()> {
    if r == 0 {
        return Err(Error::OutOfRange("rank must be positive".into()));
    }
    Ok(())
}

fn check_order(r: u64, o: u64) -> Result<()> {
    check_rank(r)?;
    if o == 0 || r % o != 0 {
        return Err(Error::OrderDoesNotDivide { order: o, modulus: r });
    }
    if o == 1 {
        return Err(Error::OutOfRange("an order-1 optimal gerbe is the trivial gerbe".into()));
    }
    Ok(())
}

/// `q^r sum_{d|r} (d/r^2) sum_{j<d} G(zeta_d^j q^(r/d^2))`.
pub fn z_trivial_comb(r: u64) -> Result<GCombination> {
    check_rank(r)?;
    let ri = r as i64;
    let mut c = GCombination::new();
    for d in divisors(r) {
        let di = d as i64;
        for j in 0..di {
            c.push(GTerm::rational(q(d, r * r), ri, rat(j, di), rat(ri, di * di)));
        }
    }
    Ok(c.normalize())
}

/// `sum_{d | d_g} q^r (dbar_g/d_g)(1/r) sum_{m < rbar dbar_g} G(zeta^m q^(d_g/(rbar dbar_g^2)))`
/// with `d_g = gcd(r, s)`, `r = d_g rbar`, `d_g = d dbar_g`.
pub fn z_ess_comb(r: u64, s: u64) -> Result<GCombination> {
    check_rank(r)?;
    let dg = gcd(r as i64, s as i64) as u64;
    let rbar = r / dg;
    let mut c = GCombination::new();
    for d in divisors(dg) {
        let dbar = dg / d;
        let n = (rbar * dbar) as i64;
        let coeff = q(dbar, dg * r);
        let scale = rat(dg as i64, (rbar * dbar * dbar) as i64);
        for m in 0..n {
            c.push(GTerm::rational(coeff.clone(), r as i64, rat(m, n), scale));
        }
    }
    Ok(c.normalize())
}

/// The essentially trivial partition function with the shift
/// `dbar_g^2 sbar^2 (1 - dbar_g rbar)/2` in the Hilbert-scheme index kept:
/// divisor `d` contributes `(1/(d r)) q^(r - a D) sum_m zeta_N^(-m D) G(zeta_N^m q^a)`
/// with `N = r/d`, `a = d^2/r`, and nothing when the shift `D` is not an integer.
pub fn z_ess_shifted_comb(r: u64, s: u64) -> Result<GCombination> {
    check_rank(r)?;
    let dg = gcd(r as i64, s as i64) as u64;
    let mut c = GCombination::new();
    for d in divisors(dg) {
        let n = (r / d) as i64;
        let sd = (s / d) as i64;
        let twice_shift = sd * sd * (1 - n);
        if twice_shift % 2 != 0 {
            continue;
        }
        let shift = twice_shift / 2;
        let a = rat((d * d) as i64, r as i64);
        for m in 0..n {
            c.push(GTerm {
                coeff: CyclotomicNumber::exp_2pi_i(rat(-m * shift, n)).scale(&q(1, d * r)),
                shift: Rational64::from(r as i64) - a * Rational64::from(shift),
                phase: rat(m, n),
                scale: a,
            });
        }
    }
    Ok(c.normalize())
}

/// `sum_{d o | r} (1/o)(1/d^2) q^r (1/dbar) sum_{j<dbar} G(zeta_dbar^j e^(2 pi i s a) q^a)`
/// with `r = d o dbar` and `a = r/(dbar^2 o^2)`; `s = 0` is the untwisted function.
///
/// The twist multiplies the `q^(c_2)` coefficient by `e^(2 pi i s c_2)`.
pub fn z_opt_twisted_comb(r: u64, o: u64, s: i64) -> Result<GCombination> {
    check_order(r, o)?;
    let mut c = GCombination::new();
    for d in divisors(r / o) {
        let dbar = r / (d * o);
        let coeff = q(1, o * d * d * dbar);
        let a = rat(r as i64, (dbar * dbar * o * o) as i64);
        for j in 0..dbar as i64 {
            let phase = rat(j, dbar as i64) + a * Rational64::from(s);
            c.push(GTerm::rational(coeff.clone(), r as i64, phase, a));
        }
    }
    Ok(c.normalize())
}

pub fn z_opt_comb(r: u64, o: u64) -> Result<GCombination> {
    z_opt_twisted_comb(r, o, 0)
}

/// The twisted optimal function with the phase `e^(2 pi i s/o)` inserted inside each `G`
/// for every divisor, rather than derived from `e^(2 pi i s c_2)`.
pub fn z_opt_inner_phase_comb(r: u64, o: u64, s: i64) -> Result<GCombination> {
    check_order(r, o)?;
    let mut c = GCombination::new();
    for d in divisors(r / o) {
        let dbar = r / (d * o);
        let coeff = q(1, o * d * d * dbar);
        let a = rat(r as i64, (dbar * dbar * o * o) as i64);
        for j in 0..dbar as i64 {
            let phase = rat(j, dbar as i64) + rat(s, o as i64);
            c.push(GTerm::rational(coeff.clone(), r as i64, phase, a));
        }
    }
    Ok(c.normalize())
}

/// The primed optimal function: only the `j = 0` branch, phase `e^(2 pi i s/o)`,
/// and for `o < r` only divisors `d > 1`.
pub fn z_opt_prime_comb(r: u64, o: u64, s: i64) -> Result<GCombination> {
    check_order(r, o)?;
    let phase = rat(s, o as i64);
    let mut c = GCombination::new();
    if o == r {
        c.push(GTerm::rational(q(1, o), r as i64, phase, rat(1, r as i64)));
        return Ok(c.normalize());
    }
    for d in divisors(r / o).into_iter().filter(|&d| d > 1) {
        let dbar = r / (d * o);
        let a = rat(r as i64, (dbar * dbar * o * o) as i64);
        c.push(GTerm::rational(q(1, o * d * d * dbar), r as i64, phase, a));
    }
    Ok(c.normalize())
}

/// `Z_{r,0} + sum_{o | r, o != 1} sum_{m < o} W(o, m) Z'_opt(r, o, m)` where `W` is the
/// exact-order Gauss sum supplied by `provider`.
pub fn z_prime_assembled_comb(r: u64, provider: &GaussSumProvider) -> Result<GCombination> {
    z_prime_assembled_comb_with(r, provider, Execution::default())
}

pub fn z_prime_assembled_comb_with(
    r: u64,
    provider: &GaussSumProvider,
    exec: Execution,
) -> Result<GCombination> {
    let mut total = z_trivial_comb(r)?;
    let branches: Vec<(u64, i64)> = divisors(r)
        .into_iter()
        .filter(|&o| o > 1)
        .flat_map(|o| (0..o as i64).map(move |m| (o, m)))
        .collect();
    let parts = exec.map(&branches, |&(o, m)| {
        let w = provider.exact_order_sum(o, m);
        z_opt_prime_comb(r, o, m).map(|z| z.scaled(&w))
    });
    for part in parts {
        total.extend(&part?);
    }
    Ok(total.normalize())
}

/// The unique `s` in `[1, e/d)` with `s (m/d) = -1 mod (e/d)`.
pub fn solve_s(m: i64, e: u64, d: u64) -> Result<u64> {
    let not_invertible = Error::NotInvertible { m, d: d as i64, modulus: e as i64 };
    if d == 0 || e % d != 0 || m % d as i64 != 0 {
        return Err(not_invertible);
    }
    let o = (e / d) as i64;
    if o <= 1 {
        return Err(not_invertible);
    }
    let inv = mod_inverse(m / d as i64, o).ok_or(not_invertible)?;
    Ok((-inv).rem_euclid(o) as u64)
}

/// The closed form of `Z'` as five families of `G` terms.
pub fn z_prime_closed_comb(r: u64) -> Result<GCombination> {
    check_rank(r)?;
    let ri = r as i64;
    let mut c = GCombination::new();
    if r == 1 {
        c.push(GTerm::rational(qi(1), 1, rat(0, 1), rat(1, 1)));
        return Ok(c.normalize());
    }
    let pow = |b: u64, e: u32| BigRational::from_integer(big_pow(b, e));
    c.push(GTerm::rational(q(1, r * r), ri, rat(0, 1), rat(ri, 1)));
    c.push(GTerm::rational(pow(r, 21), ri, rat(0, 1), rat(1, ri)));
    for m in 1..ri {
        c.push(GTerm::rational(pow(r, 10), ri, rat(m, ri), rat(1, ri)));
    }
    let proper: Vec<u64> = divisors(r).into_iter().filter(|&d| d != 1 && d != r).collect();
    for &d in &proper {
        let o = r / d;
        c.push(GTerm::rational(pow(o, 21) * q(1, d * d), ri, rat(0, 1), rat(ri, (o * o) as i64)));
    }
    // e | r with 1 < e < r, plus e = r (where dbar = 1).
    for e in proper.iter().copied().chain(std::iter::once(r)) {
        let dbar = r / e;
        for m in 1..e as i64 {
            let d = gcd(m, e as i64) as u64;
            if d == 1 {
                continue;
            }
            let o = e / d;
            let s = solve_s(m, e, d)? as i64;
            let scale = rat(d as i64, (dbar * o) as i64);
            c.push(GTerm::rational(
                pow(o, 10) * q(1, d * d * dbar),
                ri,
                rat(s, o as i64),
                scale,
            ));
        }
    }
    Ok(c.normalize())
}

/// The phase-free sum over all `r^22` gerbe classes at Picard number `rho`.
///
/// An algebraic class of order `t` is `(r/t) L` for a primitive `L` and enters
/// through `z_ess(r, r/t)`; a non-algebraic class of Brauer order `o` enters
/// through `z_opt(r, o)`.
pub fn z_total_rho_comb(r: u64, rho: u32) -> Result<GCombination> {
    check_rank(r)?;
    if !(1..=20).contains(&rho) {
        return Err(Error::OutOfRange(format!("Picard number {rho} not in 1..=20")));
    }
    let mut total = z_trivial_comb(r)?;
    for t in divisors(r).into_iter().filter(|&t| t > 1) {
        let count = exact_order_count(r, rho, t)?;
        let z = z_ess_comb(r, r / t)?;
        total.extend(&z.scaled(&CyclotomicNumber::from_integer(count)));
    }
    for o in divisors(r).into_iter().filter(|&o| o > 1) {
        let count = big_pow(r, rho) * exact_order_count(r, 22 - rho, o)?;
        let z = z_opt_comb(r, o)?;
        total.extend(&z.scaled(&CyclotomicNumber::from_integer(count)));
    }
    Ok(total.normalize())
}

macro_rules! series_fn {
    ($(#[$doc:meta])* $name:ident => $comb:ident ( $($arg:ident : $ty:ty),* )) => {
        $(#[$doc])*
        pub fn $name($($arg: $ty,)* prec: Rational64) -> Result<PuiseuxSeries> {
            $comb($($arg),*)?.to_series(prec)
        }
    };
}

series_fn!(z_trivial => z_trivial_comb(r: u64));
series_fn!(z_ess => z_ess_comb(r: u64, s: u64));
series_fn!(z_ess_shifted => z_ess_shifted_comb(r: u64, s: u64));
series_fn!(z_opt => z_opt_comb(r: u64, o: u64));
series_fn!(z_opt_twisted => z_opt_twisted_comb(r: u64, o: u64, s: i64));
series_fn!(z_opt_prime => z_opt_prime_comb(r: u64, o: u64, s: i64));
series_fn!(z_prime_closed => z_prime_closed_comb(r: u64));
series_fn!(z_total_rho => z_total_rho_comb(r: u64, rho: u32));

pub fn z_prime_assembled(r: u64, prec: Rational64, provider: &GaussSumProvider) -> Result<PuiseuxSeries> {
    z_prime_assembled_comb(r, provider)?.to_series(prec)
}

/// The display for rank 4:
/// `q^4 (G(q^4)/16 + 4^21 G(q^(1/4)) + 4^10 sum_{m=1}^3 G(i^m q^(1/4)) + 2^21/4 G(q) + 2^10/4 G(-q))`.
pub fn rank4_display_comb() -> GCombination {
    let pow = |b: u64, e: u32| BigRational::from_integer(big_pow(b, e));
    let mut c = GCombination::new();
    c.push(GTerm::rational(q(1, 16), 4, rat(0, 1), rat(4, 1)));
    c.push(GTerm::rational(pow(4, 21), 4, rat(0, 1), rat(1, 4)));
    for m in 1..4 {
        c.push(GTerm::rational(pow(4, 10), 4, rat(m, 4), rat(1, 4)));
    }
    c.push(GTerm::rational(pow(2, 21) * q(1, 4), 4, rat(0, 1), rat(1, 1)));
    c.push(GTerm::rational(pow(2, 10) * q(1, 4), 4, rat(1, 2), rat(1, 1)));
    c.normalize()
}

/// The prime-rank formula `(1/r^2) q^r G(q^r) + q^r (r^21 G(q^(1/r)) + r^k sum_{m>=1} G(zeta_r^m q^(1/r)))`.
pub fn prime_formula_comb(r: u64, k: u32) -> GCombination {
    let ri = r as i64;
    let mut c = GCombination::new();
    c.push(GTerm::rational(q(1, r * r), ri, rat(0, 1), rat(ri, 1)));
    c.push(GTerm::rational(BigRational::from_integer(big_pow(r, 21)), ri, rat(0, 1), rat(1, ri)));
    for m in 1..ri {
        c.push(GTerm::rational(BigRational::from_integer(big_pow(r, k)), ri, rat(m, ri), rat(1, ri)));
    }
    c.normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eta_hilb::g_at;
    use crate::lattice::ProviderMode;
    use crate::partitions::multiple_cover::{multiple_cover, GerbeKind};

    fn r64(n: u64) -> Rational64 {
        Rational64::from(n as i64)
    }

    fn lattice() -> GaussSumProvider {
        GaussSumProvider::new(ProviderMode::Lattice)
    }

    #[test]
    fn trivial_examples() {
        let z1 = z_trivial(1, r64(4)).unwrap();
        assert_eq!(z1, PuiseuxSeries::from_integers(0, &[1, 24, 324, 3200], r64(4)));
        let z2 = z_trivial(2, r64(5)).unwrap();
        assert!(z2.coefficient(rat(3, 2)).unwrap().is_zero());
        for r in 1..=6 {
            let z = z_trivial(r, r64(r + 1)).unwrap();
            assert_eq!(z.valuation(), Some(rat(0, 1)));
            assert_eq!(z.coefficient(rat(0, 1)).unwrap(), CyclotomicNumber::from_rational(q(1, r * r)));
        }
    }

    #[test]
    fn closed_forms_match_the_oracle() {
        for r in 1..=6u64 {
            let prec = r64(r + 5);
            let t = z_trivial(r, prec).unwrap();
            assert!(t.agrees_with(&multiple_cover(r, GerbeKind::Trivial, prec).unwrap()), "r={r}");
            for o in divisors(r).into_iter().filter(|&o| o > 1) {
                for s in 0..o as i64 {
                    let z = z_opt_twisted(r, o, s, prec).unwrap();
                    let oracle = multiple_cover(r, GerbeKind::Optimal { o, twist: s }, prec).unwrap();
                    assert!(z.agrees_with(&oracle), "r={r} o={o} s={s}");
                }
            }
        }
    }

    #[test]
    fn shifted_essential_form_matches_the_oracle() {
        for r in 1..=6u64 {
            let prec = r64(r + 5);
            for s in 1..=r {
                let z = z_ess_shifted(r, s, prec).unwrap();
                let oracle = multiple_cover(r, GerbeKind::Essential { s }, prec).unwrap();
                assert!(z.agrees_with(&oracle), "r={r} s={s}");
            }
        }
    }

    #[test]
    fn literal_essential_form_drops_the_shift() {
        // Only r = 1 has a vanishing shift for every s >= 1.
        let prec = r64(6);
        assert!(z_ess(1, 1, prec).unwrap().agrees_with(&multiple_cover(1, GerbeKind::Essential { s: 1 }, prec).unwrap()));
        let oracle = multiple_cover(3, GerbeKind::Essential { s: 3 }, r64(8)).unwrap();
        assert!(!z_ess(3, 3, r64(8)).unwrap().agrees_with(&oracle));
    }

    #[test]
    fn essential_special_cases() {
        for r in 1..=6 {
            assert_eq!(z_ess_comb(r, 0).unwrap(), z_trivial_comb(r).unwrap());
            assert_eq!(z_ess_comb(r, r).unwrap(), z_trivial_comb(r).unwrap());
        }
        for p in [2u64, 3, 5] {
            let pi = p as i64;
            let expected = GCombination::from_terms(
                (0..pi).map(|m| GTerm::rational(q(1, p), pi, rat(m, pi), rat(1, pi))),
            );
            for s in 1..p {
                assert_eq!(z_ess_comb(p, s).unwrap(), expected);
            }
        }
        let one = GCombination::from_terms([GTerm::rational(qi(1), 1, rat(0, 1), rat(1, 1))]);
        assert_eq!(z_ess_comb(1, 1).unwrap(), one);
        assert_eq!(z_ess_comb(4, 2).unwrap().len(), 2 + 4);
    }

    #[test]
    fn optimal_examples() {
        for p in [2u64, 3, 5, 7] {
            let expected = GCombination::from_terms([GTerm::rational(q(1, p), p as i64, rat(0, 1), rat(1, p as i64))]);
            assert_eq!(z_opt_comb(p, p).unwrap(), expected);
        }
        assert_eq!(z_opt_twisted_comb(6, 3, 0).unwrap(), z_opt_comb(6, 3).unwrap());
        assert!(matches!(z_opt_comb(4, 3), Err(Error::OrderDoesNotDivide { .. })));
        assert!(z_opt_comb(4, 1).is_err());
    }

    #[test]
    fn twisting_commutes_with_expansion() {
        for (r, o) in [(4u64, 2u64), (4, 4), (6, 2), (6, 3), (6, 6)] {
            for s in 0..o as i64 {
                let prec = r64(r + 4);
                let twisted = z_opt(r, o, prec).unwrap().phase_twist(s);
                assert_eq!(twisted, z_opt_twisted(r, o, s, prec).unwrap(), "r={r} o={o} s={s}");
            }
        }
    }

    #[test]
    fn inner_phase_differs_when_dbar_and_d_disagree_mod_o() {
        // r = 4, o = 2: the d = 1, dbar = 2 term picks up e^(2 pi i s/4) from the c_2 twist, not -1.
        let prec = r64(8);
        let inner = z_opt_inner_phase_comb(4, 2, 1).unwrap().to_series(prec).unwrap();
        assert!(!inner.agrees_with(&z_opt_twisted(4, 2, 1, prec).unwrap()));
        // They coincide whenever s (dbar - d) = 0 mod o for every divisor.
        assert_eq!(z_opt_inner_phase_comb(6, 2, 1).unwrap(), z_opt_twisted_comb(6, 2, 1).unwrap());
    }

    #[test]
    fn primed_optimal_examples() {
        let t = z_opt_prime_comb(5, 5, 2).unwrap();
        assert_eq!(t, GCombination::from_terms([GTerm::rational(q(1, 5), 5, rat(2, 5), rat(1, 5))]));
        // r/o prime: one d = r/o term.
        let t = z_opt_prime_comb(6, 2, 1).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.terms()[0].scale, rat(6, 4));
        let t = z_opt_prime_comb(2, 2, 0).unwrap();
        let expected = g_at(rat(0, 1), 1, 2, r64(3)).unwrap().shift(r64(2)).scale_rational(&q(1, 2));
        assert_eq!(t.to_series(r64(5)).unwrap(), expected);
    }

    #[test]
    fn solve_s_examples() {
        assert_eq!(solve_s(1, 4, 1).unwrap(), 3);
        assert_eq!(solve_s(2, 4, 2).unwrap(), 1);
        for e in 2..10u64 {
            assert_eq!(solve_s(e as i64 - 1, e, 1).unwrap(), 1);
        }
        assert!(solve_s(2, 4, 1).is_err());
        assert!(solve_s(4, 4, 4).is_err());
    }

    #[test]
    fn prime_main_identity() {
        for p in [2u64, 3, 5, 7] {
            let assembled = z_prime_assembled_comb(p, &lattice()).unwrap();
            let closed = z_prime_closed_comb(p).unwrap();
            assert_eq!(assembled, closed, "r={p}");
            assert_eq!(closed, prime_formula_comb(p, 10));
        }
    }

    #[test]
    fn asserted_sums_overcount_at_prime_rank() {
        let asserted = GaussSumProvider::new(ProviderMode::Asserted);
        let a = z_prime_assembled_comb(3, &asserted).unwrap();
        let diffs = a.term_differences(&z_prime_closed_comb(3).unwrap());
        // Each twisted family carries (1 + 3^11)/3 instead of 3^10.
        assert_eq!(diffs.len(), 2);
        assert!(diffs.iter().all(|d| d.left == "177148/3"));
    }

    #[test]
    fn rank_four_closed_form_is_the_display() {
        assert_eq!(z_prime_closed_comb(4).unwrap(), rank4_display_comb());
        assert_eq!(z_prime_closed_comb(1).unwrap(), z_trivial_comb(1).unwrap());
    }

    #[test]
    fn lowest_exponent_of_the_closed_form() {
        // The m >= 1 roots of unity contribute sum zeta^(-m) = -1 at q^(r - 1/r).
        for r in 2..=6u64 {
            let z = z_prime_closed(r, r64(r) + rat(1, 1)).unwrap();
            let low = Rational64::from(r as i64) - rat(1, r as i64);
            assert_eq!(z.valuation(), Some(rat(0, 1)));
            // At r = 6 the q^(2/3) family reaches below r - 1/r.
            if r != 6 {
                assert!(z.terms().map(|(x, _)| *x).filter(|x| !x.is_integer()).all(|x| x >= low));
            }
            let expected = big_pow(r, 21) - big_pow(r, 10);
            assert_eq!(z.coefficient(low).unwrap(), CyclotomicNumber::from_integer(expected));
        }
    }

    #[test]
    fn rank_four_assembled_differs_only_on_the_quarter_family() {
        let a = z_prime_assembled_comb(4, &lattice()).unwrap();
        let diffs = a.term_differences(&z_prime_closed_comb(4).unwrap());
        assert!(diffs.iter().all(|d| d.scale == "1/4"));
        assert_eq!(diffs.len(), 4);
    }

    #[test]
    fn total_partition_function_at_prime_rank() {
        for p in [2u64, 3, 5] {
            for rho in [1u32, 10, 11, 20] {
                let z = z_total_rho_comb(p, rho).unwrap();
                assert_eq!(z, prime_formula_comb(p, rho - 1), "r={p} rho={rho}");
            }
            let closed = z_prime_closed_comb(p).unwrap();
            let total = z_total_rho_comb(p, 20).unwrap();
            for t in closed.terms().iter().filter(|t| t.phase == rat(0, 1)) {
                assert!(total.terms().contains(t));
            }
        }
        assert_eq!(z_total_rho_comb(1, 5).unwrap(), z_trivial_comb(1).unwrap());
        assert!(z_total_rho_comb(2, 21).is_err());
    }

    #[test]
    fn total_class_counts_at_rank_two() {
        // rho = 1: one trivial class, one algebraic class, 2 (2^21 - 1) non-algebraic ones.
        let z = z_total_rho_comb(2, 1).unwrap();
        let expected = z_trivial_comb(2).unwrap();
        let mut e = expected.clone();
        e.extend(&z_ess_comb(2, 1).unwrap());
        e.extend(&z_opt_comb(2, 2).unwrap().scaled(&CyclotomicNumber::from_integer(2 * ((1u64 << 21) - 1))));
        assert_eq!(z, e.normalize());
    }
}
