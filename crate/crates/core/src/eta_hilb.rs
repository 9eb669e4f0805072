//! Euler characteristics of Hilbert schemes of points on K3 and the series
//! `G(q) = eta(q)^-24 = q^-1 prod (1 - q^k)^-24`.

use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};

use crate::cyclotomic::CyclotomicNumber;
use crate::error::Result;
use crate::ntheory::sigma1;
use crate::qseries::PuiseuxSeries;

/// `values[n] = chi(Hilb^n(K3))` for `0 <= n <= max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbTable {
    pub values: Vec<BigInt>,
}

/// Coefficients of `prod_{k>=1} (1 - q^k)^-24` up to `q^max`.
pub fn hilb_by_product(max: usize) -> Vec<BigInt> {
    let mut a = vec![BigInt::zero(); max + 1];
    a[0] = BigInt::from(1);
    for k in 1..=max {
        for _ in 0..24 {
            for i in k..=max {
                let prev = a[i - k].clone();
                a[i] += prev;
            }
        }
    }
    a
}

/// Same table via `n c_n = 24 sum_{m<n} sigma_1(n-m) c_m`.
pub fn hilb_by_recursion(max: usize) -> Vec<BigInt> {
    let mut c = vec![BigInt::zero(); max + 1];
    c[0] = BigInt::from(1);
    for n in 1..=max {
        let s: BigInt = (0..n)
            .map(|m| &c[m] * BigInt::from(sigma1((n - m) as u64)))
            .sum();
        let (q, r) = (s * BigInt::from(24)).div_rem(&BigInt::from(n));
        debug_assert!(r.is_zero());
        c[n] = q;
    }
    c
}

fn memo() -> &'static RwLock<Vec<BigInt>> {
    static TABLE: OnceLock<RwLock<Vec<BigInt>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(Vec::new()))
}

/// `c_0..=c_max`, computed (and cross-checked) by both methods on first use.
pub fn hilb_euler_table(max: usize) -> HilbTable {
    {
        let t = memo().read().unwrap();
        if t.len() > max {
            return HilbTable {
                values: t[..=max].to_vec(),
            };
        }
    }
    let target = (max + 1).next_power_of_two().max(64) - 1;
    let product = hilb_by_product(target);
    let recursion = hilb_by_recursion(target);
    assert_eq!(product, recursion, "Hilbert scheme tables disagree");
    let mut t = memo().write().unwrap();
    if t.len() < product.len() {
        *t = product;
    }
    HilbTable {
        values: t[..=max].to_vec(),
    }
}

/// `chi(Hilb^n(K3))`, zero for negative `n`.
pub fn hilb_chi(n: i64) -> BigInt {
    if n < 0 {
        return BigInt::zero();
    }
    hilb_euler_table(n as usize).values[n as usize].clone()
}

/// Number of table entries needed for all `n - 1 < bound`.
fn entries_below(bound: Rational64) -> usize {
    // n - 1 < bound  <=>  n <= ceil(bound)
    (bound.ceil().to_integer().max(0)) as usize
}

/// `G(q) = sum_n c_n q^(n-1) + O(q^prec)`.
pub fn g_series(prec: Rational64) -> PuiseuxSeries {
    g_at(Rational64::zero(), 1, 1, prec).expect("identity substitution is valid")
}

/// `G(e^(2 pi i phase) q^(num/denom)) = sum_n c_n e^(2 pi i phase (n-1)) q^((n-1) num/denom)`,
/// known below `prec` in the new variable.
pub fn g_at(phase: Rational64, num: i64, denom: i64, prec: Rational64) -> Result<PuiseuxSeries> {
    if num < 1 || denom < 1 {
        return Err(crate::Error::InvalidSubstitution { num, denom });
    }
    let scale = Rational64::new(num, denom);
    let source_prec = prec / scale;
    let n_max = entries_below(source_prec);
    let table = hilb_euler_table(n_max.max(1));
    let den = (denom / denom.gcd(&num)) as u64;
    let terms = (0..=n_max).filter_map(|n| {
        let e = Rational64::from_integer(n as i64 - 1);
        if e >= source_prec {
            return None;
        }
        let mut c = CyclotomicNumber::from_integer(table.values[n].clone());
        let turns = phase * e;
        if !turns.is_integer() {
            c = &c * &CyclotomicNumber::exp_2pi_i(turns);
        }
        Some((e * scale, c))
    });
    PuiseuxSeries::from_terms(den, prec, terms)
}

/// `eta(q)^24 = q prod (1 - q^k)^24 + O(q^prec)`.
pub fn eta24_series(prec: Rational64) -> PuiseuxSeries {
    let max = entries_below(prec);
    let mut a = vec![BigInt::zero(); max + 1];
    a[0] = BigInt::from(1);
    for k in 1..=max {
        for _ in 0..24 {
            for i in (k..=max).rev() {
                let prev = a[i - k].clone();
                a[i] -= prev;
            }
        }
    }
    let terms = a.into_iter().enumerate().map(|(i, c)| {
        (
            Rational64::from_integer(i as i64 + 1),
            CyclotomicNumber::from_integer(c),
        )
    });
    PuiseuxSeries::from_terms(1, prec, terms).expect("integer exponents")
}

/// `c_n` as an `f64`, for numeric code.
pub fn hilb_chi_f64(n: usize) -> f64 {
    hilb_euler_table(n).values[n].to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::rat;

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    #[test]
    fn first_values() {
        let t = hilb_euler_table(4);
        let expected: Vec<BigInt> = [1, 24, 324, 3200, 25650].iter().map(|&v| v.into()).collect();
        assert_eq!(t.values, expected);
    }

    #[test]
    fn both_routes_agree_to_fifty() {
        assert_eq!(hilb_by_product(50), hilb_by_recursion(50));
        assert_eq!(hilb_chi(50).to_string(), "167884450803343339733543652");
        assert_eq!(hilb_chi(-1), BigInt::zero());
    }

    #[test]
    fn g_series_leading_terms() {
        let g = g_series(r(3));
        assert_eq!(g.coefficient(r(-1)).unwrap(), CyclotomicNumber::one());
        assert_eq!(g.coefficient(r(0)).unwrap(), CyclotomicNumber::from_integer(24));
        assert_eq!(g.coefficient(r(1)).unwrap(), CyclotomicNumber::from_integer(324));
        assert!(g.coefficient(r(3)).is_err());
    }

    #[test]
    fn g_times_eta24_is_one() {
        let prec = r(30);
        let prod = g_series(prec).mul(&eta24_series(prec + 2));
        assert!(prod.agrees_with(&PuiseuxSeries::one(prec)));
        assert_eq!(prod.prec(), prec + 1);
    }

    #[test]
    fn g_at_examples() {
        assert_eq!(g_at(r(0), 1, 1, r(5)).unwrap(), g_series(r(5)));
        let h = g_at(rat(1, 2), 1, 2, r(3)).unwrap();
        assert_eq!(h.coefficient(rat(-1, 2)).unwrap(), CyclotomicNumber::from_integer(-1));
        let d = g_at(r(0), 2, 1, r(5)).unwrap();
        assert_eq!(d.coefficient(r(2)).unwrap(), CyclotomicNumber::from_integer(324));
    }

    #[test]
    fn g_at_matches_substitute() {
        for (t, num, denom) in [(rat(1, 3), 1, 3), (rat(2, 5), 4, 25), (rat(-1, 4), 3, 2)] {
            let prec = r(4);
            let direct = g_at(t, num, denom, prec).unwrap();
            let source = g_series(prec * Rational64::new(denom, num) + 1);
            let via = source.substitute(t, num, denom).unwrap().truncate(prec);
            assert_eq!(direct, via);
        }
    }

    #[test]
    fn averaging_the_root_substitutions() {
        let k = 3;
        let prec = r(4);
        let mut acc = PuiseuxSeries::zero(3, prec);
        for m in 0..k {
            acc = &acc + &g_at(rat(m, k), 1, k, prec).unwrap();
        }
        let avg = acc.scale_rational(&num_rational::BigRational::new(1.into(), k.into()));
        for (x, _) in avg.terms() {
            assert!(x.is_integer(), "{x}");
        }
        // The surviving exponents are (n-1)/3 with 3 | n-1: the integers.
        assert_eq!(avg, g_series(r(12)).root_average(3).substitute(r(0), 1, 3).unwrap().truncate(prec));
    }
}
