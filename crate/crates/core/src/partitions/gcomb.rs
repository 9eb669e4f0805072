//! Finite linear combinations `sum c_i q^(h_i) G(e^(2 pi i t_i) q^(a_i))`.
//!
//! Every closed-form partition function is built in this shape first, so it
//! can be expanded exactly as a series or evaluated numerically at a point of
//! the upper half plane.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};
use serde::Serialize;

use crate::cyclotomic::CyclotomicNumber;
use crate::error::Result;
use crate::eta_hilb::g_at;
use crate::qseries::{format_rational64, PuiseuxSeries};

/// `coeff * q^shift * G(e^(2 pi i phase) q^scale)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GTerm {
    pub coeff: CyclotomicNumber,
    pub shift: Rational64,
    /// Turns; only its class mod 1 matters because `G` has integer exponents.
    pub phase: Rational64,
    pub scale: Rational64,
}

impl GTerm {
    pub fn new(coeff: CyclotomicNumber, shift: i64, phase: Rational64, scale: Rational64) -> Self {
        Self {
            coeff,
            shift: Rational64::from_integer(shift),
            phase,
            scale,
        }
    }

    pub fn rational(coeff: BigRational, shift: i64, phase: Rational64, scale: Rational64) -> Self {
        Self::new(CyclotomicNumber::from_rational(coeff), shift, phase, scale)
    }

    fn key(&self) -> (Rational64, Rational64, Rational64) {
        (self.shift, self.scale, reduce_turns(self.phase))
    }

    /// Exact expansion below `prec`.
    pub fn to_series(&self, prec: Rational64) -> Result<PuiseuxSeries> {
        let inner = g_at(
            self.phase,
            *self.scale.numer(),
            *self.scale.denom(),
            prec - self.shift,
        )?;
        Ok(inner.shift(self.shift).scale(&self.coeff))
    }

    /// `G(e^(2 pi i phase) q^scale)` at `q = e^(2 pi i tau)`, i.e. `G_num(scale tau + phase)`,
    /// without the coefficient or the `q^shift` factor.
    pub fn eval_g(&self, tau: Complex64, g: &dyn Fn(Complex64) -> Result<Complex64>) -> Result<Complex64> {
        g(tau * rat_f64(self.scale) + rat_f64(self.phase))
    }
}

pub(crate) fn rat_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Representative of `t mod 1` in `[0, 1)`.
pub fn reduce_turns(t: Rational64) -> Rational64 {
    t - t.floor()
}

/// A normalized sum of `GTerm`s: like terms merged, zero terms dropped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GCombination {
    terms: Vec<GTerm>,
}

impl GCombination {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = GTerm>) -> Self {
        let mut out = Self::new();
        for t in terms {
            out.push(t);
        }
        out.normalize()
    }

    pub fn push(&mut self, term: GTerm) {
        self.terms.push(term);
    }

    pub fn extend(&mut self, other: &GCombination) {
        self.terms.extend(other.terms.iter().cloned());
    }

    pub fn scaled(&self, factor: &CyclotomicNumber) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| GTerm {
                    coeff: &t.coeff * factor,
                    ..t.clone()
                })
                .collect(),
        }
    }

    /// Merges like terms (same shift, scale and phase mod 1) and sorts them.
    pub fn normalize(&self) -> Self {
        let mut merged: BTreeMap<_, CyclotomicNumber> = BTreeMap::new();
        for t in &self.terms {
            let entry = merged.entry(t.key()).or_insert_with(CyclotomicNumber::zero);
            *entry += &t.coeff;
        }
        Self {
            terms: merged
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|((shift, scale, phase), coeff)| GTerm {
                    coeff,
                    shift,
                    phase,
                    scale,
                })
                .collect(),
        }
    }

    pub fn terms(&self) -> &[GTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exact series below `prec`.
    pub fn to_series(&self, prec: Rational64) -> Result<PuiseuxSeries> {
        let mut acc = PuiseuxSeries::zero(1, prec);
        for t in &self.terms {
            acc = &acc + &t.to_series(prec)?;
        }
        Ok(acc)
    }

    /// `sum c_i e^(2 pi i h_i tau) g(a_i tau + t_i)` for a numeric `g`.
    pub fn eval_with(&self, tau: Complex64, g: &dyn Fn(Complex64) -> Result<Complex64>) -> Result<Complex64> {
        self.eval_inner(tau, g, true)
    }

    /// As [`eval_with`](Self::eval_with) but dropping every `q^shift` factor.
    pub fn eval_unshifted(&self, tau: Complex64, g: &dyn Fn(Complex64) -> Result<Complex64>) -> Result<Complex64> {
        self.eval_inner(tau, g, false)
    }

    fn eval_inner(
        &self,
        tau: Complex64,
        g: &dyn Fn(Complex64) -> Result<Complex64>,
        with_shift: bool,
    ) -> Result<Complex64> {
        let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        let mut total = Complex64::zero();
        for t in &self.terms {
            let mut v = t.coeff.to_complex() * t.eval_g(tau, g)?;
            if with_shift {
                v *= (two_pi_i * tau * rat_f64(t.shift)).exp();
            }
            total += v;
        }
        Ok(total)
    }

    /// Terms present (with different coefficients) in exactly one of the two sums.
    pub fn term_differences(&self, other: &Self) -> Vec<TermDiff> {
        let a = self.normalize();
        let b = other.normalize();
        let mut keys: Vec<_> = a.terms.iter().chain(&b.terms).map(GTerm::key).collect();
        keys.sort();
        keys.dedup();
        let lookup = |c: &Self, k| {
            c.terms
                .iter()
                .find(|t| t.key() == k)
                .map(|t| t.coeff.clone())
                .unwrap_or_else(CyclotomicNumber::zero)
        };
        keys.into_iter()
            .filter_map(|k| {
                let (x, y) = (lookup(&a, k), lookup(&b, k));
                (x != y).then(|| TermDiff {
                    shift: format_rational64(&k.0),
                    scale: format_rational64(&k.1),
                    phase: format_rational64(&k.2),
                    left: x.to_string(),
                    right: y.to_string(),
                })
            })
            .collect()
    }
}

/// One mismatching `q^shift G(e^(2 pi i phase) q^scale)` family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TermDiff {
    pub shift: String,
    pub scale: String,
    pub phase: String,
    pub left: String,
    pub right: String,
}

impl fmt::Display for GTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) q^{} G(", self.coeff, self.shift)?;
        if !self.phase.is_zero() {
            write!(f, "e^(2 pi i {}) ", self.phase)?;
        }
        if self.scale.is_one() {
            write!(f, "q)")
        } else {
            write!(f, "q^({}))", self.scale)
        }
    }
}

impl fmt::Display for GCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}
