//! Joyce-Song pair invariants versus the generalized invariants:
//! `1 - sum P_c q^c = exp(-sum A_c q^c)` with `A = P^perp`.

use num_rational::{BigRational, Rational64};
use num_traits::Zero;

use crate::cyclotomic::CyclotomicNumber;
use crate::error::{Error, Result};
use crate::ntheory::big_factorial;
use crate::qseries::PuiseuxSeries;

/// `P = 1 - exp(-A)`.
pub fn pairs_from_perp(a: &PuiseuxSeries) -> Result<PuiseuxSeries> {
    let one = PuiseuxSeries::one(a.prec());
    Ok(&one - &(-a).exp()?)
}

/// `A = -log(1 + Ptilde)`, where `Ptilde = -P`.
pub fn perp_from_pairs_tilde(p_tilde: &PuiseuxSeries) -> Result<PuiseuxSeries> {
    let one = PuiseuxSeries::one(p_tilde.prec());
    Ok(-&(&one + p_tilde).log()?)
}

/// `-P_c = sum_l (-1)^l / l! sum_{c_1 + ... + c_l = c} prod A_(c_i)`, expanded over
/// ordered compositions of each exponent in steps of `1/den`.
pub fn pairs_from_perp_compositions(a: &PuiseuxSeries, max_units: usize) -> Result<PuiseuxSeries> {
    let den = a.den() as i64;
    let step = Rational64::new(1, den);
    if a.valuation().is_some_and(|v| v <= Rational64::zero()) {
        return Err(Error::ExpDomain("composition expansion needs positive exponents"));
    }
    let coeff = |k: usize| a.coefficient(step * Rational64::from(k as i64));
    let mut dense = vec![CyclotomicNumber::zero(); max_units + 1];
    for (k, slot) in dense.iter_mut().enumerate().skip(1) {
        *slot = coeff(k)?;
    }
    // by_parts[l][c] = sum over compositions of c into l positive parts of prod A.
    let mut by_parts = vec![vec![CyclotomicNumber::zero(); max_units + 1]];
    by_parts[0][0] = CyclotomicNumber::one();
    let mut total = vec![CyclotomicNumber::zero(); max_units + 1];
    for l in 1..=max_units {
        let prev = &by_parts[l - 1];
        let mut next = vec![CyclotomicNumber::zero(); max_units + 1];
        for c in l..=max_units {
            let mut acc = CyclotomicNumber::zero();
            for first in 1..=c - (l - 1) {
                if !dense[first].is_zero() && !prev[c - first].is_zero() {
                    acc += &(&dense[first] * &prev[c - first]);
                }
            }
            next[c] = acc;
        }
        let sign = if l % 2 == 0 { 1 } else { -1 };
        let w = BigRational::new(sign.into(), big_factorial(l as u64));
        for c in l..=max_units {
            total[c] += &next[c].scale(&w);
        }
        by_parts.push(next);
    }
    let prec = (step * Rational64::from(max_units as i64 + 1)).min(a.prec());
    let terms = total
        .into_iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| (step * Rational64::from(k as i64), -c));
    PuiseuxSeries::from_terms(a.den(), prec, terms)
}
