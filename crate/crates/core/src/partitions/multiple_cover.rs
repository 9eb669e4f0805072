//! Twisted Vafa-Witten invariants by direct summation of the multiple cover
//! formula over `c_2`. This is the oracle the closed forms are checked against.

use num_rational::{BigRational, Rational64};
use num_traits::Zero;

use crate::cyclotomic::CyclotomicNumber;
use crate::error::{Error, Result};
use crate::eta_hilb::hilb_chi;
use crate::ntheory::{divisors, gcd};
use crate::par::Execution;
use crate::qseries::PuiseuxSeries;

/// The kind of `mu_r`-gerbe a partition function is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GerbeKind {
    Trivial,
    /// Essentially trivial, with `s = |g_ess|`.
    Essential { s: u64 },
    /// Brauer order `o | r`, with `c_2`-coefficients multiplied by `e^(2 pi i twist c_2)`.
    Optimal { o: u64, twist: i64 },
}

/// Mukai-vector data entering `1 - chi(c/d, c/d)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MukaiData {
    pub r: u64,
    pub s: u64,
    pub c2: Rational64,
    pub d: u64,
    pub o: u64,
}

fn integral(value: Rational64) -> Result<i64> {
    if value.is_integer() {
        Ok(value.to_integer())
    } else {
        Err(Error::NonIntegralExponent(value))
    }
}

/// `s^2/(2d^2) (1 - r/d) + (r/d)(c_2/d - r/d) + 1`.
pub fn mukai_exponent_ess(m: &MukaiData) -> Result<i64> {
    let r = Rational64::from(m.r as i64);
    let s = Rational64::from(m.s as i64);
    let d = Rational64::from(m.d as i64);
    let one = Rational64::from(1);
    integral(s * s / (d * d * 2) * (one - r / d) + r / d * (m.c2 / d - r / d) + one)
}

/// `(r/d)(c_2/d - r/d) + 1`.
pub fn mukai_exponent_opt(m: &MukaiData) -> Result<i64> {
    let r = Rational64::from(m.r as i64);
    let d = Rational64::from(m.d as i64);
    integral(r / d * (m.c2 / d - r / d) + Rational64::from(1))
}

fn inv_square(d: u64) -> BigRational {
    BigRational::new(1.into(), (d * d).into())
}

fn chi(n: i64) -> BigRational {
    BigRational::from_integer(hilb_chi(n))
}

/// The rational coefficient of `q^c2`, before any twist phase.
fn invariant(r: u64, kind: GerbeKind, c2: Rational64) -> Result<BigRational> {
    let mut total = BigRational::zero();
    match kind {
        GerbeKind::Trivial | GerbeKind::Essential { .. } => {
            let s = match kind {
                GerbeKind::Essential { s } => s,
                _ => 0,
            };
            let c2i = c2.to_integer();
            let g = gcd(gcd(r as i64, s as i64), c2i).unsigned_abs();
            for d in divisors(g) {
                let data = MukaiData { r, s, c2, d, o: 1 };
                match mukai_exponent_ess(&data) {
                    Ok(n) => total += inv_square(d) * chi(n),
                    // A half-integral exponent has no Hilbert scheme attached.
                    Err(Error::NonIntegralExponent(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        GerbeKind::Optimal { o, .. } => {
            // c_2 = k/o + r; divisor d contributes when d o | r and d | k.
            let k = (c2 - Rational64::from(r as i64)) * Rational64::from(o as i64);
            let k = integral(k)?;
            for d in divisors(r / o) {
                if k % d as i64 != 0 {
                    continue;
                }
                let data = MukaiData { r, s: 0, c2, d, o };
                total += inv_square(d) * chi(mukai_exponent_opt(&data)?);
            }
            total /= BigRational::from_integer(o.into());
        }
    }
    Ok(total)
}

/// `sum_{c_2} VW^tw_c q^(c_2)` over `0 <= c_2 < prec`, with `c_2` in `(1/o) Z`
/// for optimal gerbes and in `Z` otherwise.
pub fn multiple_cover(r: u64, kind: GerbeKind, prec: Rational64) -> Result<PuiseuxSeries> {
    multiple_cover_with(r, kind, prec, Execution::default())
}

pub fn multiple_cover_with(r: u64, kind: GerbeKind, prec: Rational64, exec: Execution) -> Result<PuiseuxSeries> {
    if r == 0 {
        return Err(Error::OutOfRange("rank must be positive".into()));
    }
    let step = match kind {
        GerbeKind::Optimal { o, .. } => {
            if o <= 1 || r % o != 0 {
                return Err(Error::OrderDoesNotDivide { order: o, modulus: r });
            }
            o
        }
        _ => 1,
    };
    let count = (prec * Rational64::from(step as i64)).ceil().to_integer().max(0) as u64;
    let values = exec.map_range(count, |j| {
        let c2 = Rational64::new(j as i64, step as i64);
        invariant(r, kind, c2).map(|v| (c2, v))
    });
    let mut terms = Vec::with_capacity(values.len());
    for v in values {
        let (c2, value) = v?;
        if value.is_zero() {
            continue;
        }
        let mut coeff = CyclotomicNumber::from_rational(value);
        if let GerbeKind::Optimal { twist, .. } = kind {
            let turns = c2 * Rational64::from(twist);
            if !turns.is_integer() {
                coeff = &coeff * &CyclotomicNumber::exp_2pi_i(turns);
            }
        }
        terms.push((c2, coeff));
    }
    PuiseuxSeries::from_terms(step, prec, terms)
}
