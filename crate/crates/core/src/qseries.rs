//! Truncated Puiseux series in `q^(1/D)` with cyclotomic coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cyclotomic::{parse_rational, CyclotomicNumber};
use crate::error::{Error, Result};
use crate::ntheory::lcm;
use crate::par::Execution;

/// Products with fewer left-hand terms than this stay on the calling thread.
const PAR_MUL_THRESHOLD: usize = 64;

/// A series `sum c_x q^x + O(q^prec)` with every `x` in `(1/den) Z`.
#[derive(Clone, PartialEq, Eq)]
pub struct PuiseuxSeries {
    den: u64,
    prec: Rational64,
    terms: BTreeMap<Rational64, CyclotomicNumber>,
}

fn denom_divides(x: &Rational64, den: u64) -> bool {
    den % (*x.denom() as u64) == 0
}

pub fn rat(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

impl PuiseuxSeries {
    /// The zero series known to precision `prec`.
    pub fn zero(den: u64, prec: Rational64) -> Self {
        assert!(den > 0, "series denominator must be positive");
        Self {
            den,
            prec,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(prec: Rational64) -> Self {
        Self::monomial(CyclotomicNumber::one(), Rational64::zero(), prec)
    }

    /// `c q^x + O(q^prec)`.
    pub fn monomial(coeff: CyclotomicNumber, exp: Rational64, prec: Rational64) -> Self {
        let mut s = Self::zero(*exp.denom() as u64, prec);
        s.insert(exp, coeff);
        s
    }

    /// Builds a series from `(exponent, coefficient)` pairs. Terms at or beyond
    /// `prec` and zero coefficients are dropped; repeated exponents are summed.
    pub fn from_terms<I>(den: u64, prec: Rational64, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Rational64, CyclotomicNumber)>,
    {
        if den == 0 {
            return Err(Error::OutOfRange("series denominator must be positive".into()));
        }
        let mut s = Self::zero(den, prec);
        for (x, c) in terms {
            if !denom_divides(&x, den) {
                return Err(Error::OutOfRange(format!(
                    "exponent {x} is not in (1/{den})Z"
                )));
            }
            s.accumulate(x, &c);
        }
        s.prune();
        Ok(s)
    }

    /// Integer-exponent series with rational coefficients `coeffs[i] q^(start + i)`.
    pub fn from_integers(start: i64, coeffs: &[i64], prec: Rational64) -> Self {
        let terms = coeffs.iter().enumerate().map(|(i, &c)| {
            (
                Rational64::from_integer(start + i as i64),
                CyclotomicNumber::from_integer(c),
            )
        });
        Self::from_terms(1, prec, terms).expect("integer exponents always fit den 1")
    }

    fn insert(&mut self, x: Rational64, c: CyclotomicNumber) {
        if x < self.prec && !c.is_zero() {
            self.terms.insert(x, c);
        }
    }

    fn accumulate(&mut self, x: Rational64, c: &CyclotomicNumber) {
        if x >= self.prec {
            return;
        }
        match self.terms.get_mut(&x) {
            Some(v) => *v += c,
            None => {
                self.terms.insert(x, c.clone());
            }
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| !c.is_zero());
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn prec(&self) -> Rational64 {
        self.prec
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Rational64, &CyclotomicNumber)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Lowest stored exponent, or `None` for a series that vanishes to its precision.
    pub fn valuation(&self) -> Option<Rational64> {
        self.terms.keys().next().copied()
    }

    /// Lowest exponent that may carry a nonzero coefficient (the precision if none is stored).
    fn order(&self) -> Rational64 {
        self.valuation().unwrap_or(self.prec)
    }

    /// Coefficient of `q^x`; an error rather than zero at or beyond the precision.
    pub fn coefficient(&self, x: Rational64) -> Result<CyclotomicNumber> {
        if x >= self.prec {
            return Err(Error::BeyondPrecision {
                exponent: x,
                prec: self.prec,
            });
        }
        Ok(self
            .terms
            .get(&x)
            .cloned()
            .unwrap_or_else(CyclotomicNumber::zero))
    }

    /// Drops everything at or beyond `prec` (a no-op if `prec` is not lower).
    pub fn truncate(&self, prec: Rational64) -> Self {
        let prec = prec.min(self.prec);
        Self {
            den: self.den,
            prec,
            terms: self
                .terms
                .range(..prec)
                .map(|(x, c)| (*x, c.clone()))
                .collect(),
        }
    }

    /// Reexpresses the series over a multiple of its denominator.
    pub fn with_den(&self, den: u64) -> Self {
        assert!(den % self.den == 0, "{den} is not a multiple of {}", self.den);
        Self {
            den,
            ..self.clone()
        }
    }

    pub fn scale(&self, factor: &CyclotomicNumber) -> Self {
        let mut out = Self::zero(self.den, self.prec);
        if factor.is_zero() {
            return out;
        }
        for (x, c) in &self.terms {
            out.terms.insert(*x, c * factor);
        }
        out
    }

    pub fn scale_rational(&self, factor: &BigRational) -> Self {
        let mut out = Self::zero(self.den, self.prec);
        if factor.is_zero() {
            return out;
        }
        for (x, c) in &self.terms {
            out.terms.insert(*x, c.scale(factor));
        }
        out
    }

    /// Multiplies by the exact monomial `q^e`; precision shifts along.
    pub fn shift(&self, e: Rational64) -> Self {
        let den = lcm(self.den, *e.denom() as u64);
        Self {
            den,
            prec: self.prec + e,
            terms: self.terms.iter().map(|(x, c)| (x + e, c.clone())).collect(),
        }
    }

    pub fn map_terms<F>(&self, f: F) -> Self
    where
        F: Fn(Rational64, &CyclotomicNumber) -> CyclotomicNumber,
    {
        let mut out = Self::zero(self.den, self.prec);
        for (x, c) in &self.terms {
            out.insert(*x, f(*x, c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_with(other, Execution::default())
    }

    /// Product with an explicit execution strategy; the result does not depend on it.
    pub fn mul_with(&self, other: &Self, exec: Execution) -> Self {
        let prec = (self.prec + other.order()).min(other.prec + self.order());
        let den = lcm(self.den, other.den);
        let (a, b) = if self.len() >= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        let b_terms: Vec<_> = b.terms.iter().collect();
        let partial = |chunk: &[(&Rational64, &CyclotomicNumber)]| {
            let mut acc = Self::zero(den, prec);
            for &(xa, ca) in chunk {
                for &(xb, cb) in &b_terms {
                    let e = xa + xb;
                    if e >= prec {
                        break;
                    }
                    acc.accumulate(e, &(ca * cb));
                }
            }
            acc
        };
        let a_terms: Vec<_> = a.terms.iter().collect();
        if exec == Execution::Sequential || a_terms.len() < PAR_MUL_THRESHOLD {
            let mut out = partial(&a_terms);
            out.prune();
            return out;
        }
        let chunk = a_terms.len().div_ceil(4 * rayon_threads()).max(8);
        let chunks: Vec<_> = a_terms.chunks(chunk).collect();
        let parts = exec.map(&chunks, |c| partial(c));
        let mut out = Self::zero(den, prec);
        for part in parts {
            for (x, c) in &part.terms {
                out.accumulate(*x, c);
            }
        }
        out.prune();
        out
    }

    pub fn pow(&self, mut exp: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(Rational64::from_integer(1 << 40));
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Splits `a = c q^v (1 + u)` and returns `(c, v, 1 + u)` as a dense
    /// vector in steps of `1/den`, of length `(prec - v) * den` rounded up.
    fn normalized_dense(&self) -> Result<(CyclotomicNumber, Rational64, Vec<CyclotomicNumber>)> {
        let v = self.valuation().ok_or(Error::ZeroLeadingTerm)?;
        let lead = self.terms[&v].clone();
        let lead_inv = lead.inverse()?;
        let step = Rational64::new(1, self.den as i64);
        let n = ((self.prec - v) / step).ceil().to_integer().max(0) as usize;
        let mut dense = vec![CyclotomicNumber::zero(); n];
        for (x, c) in &self.terms {
            let idx = ((x - v) / step).to_integer() as usize;
            dense[idx] = c * &lead_inv;
        }
        Ok((lead, v, dense))
    }

    fn from_dense(den: u64, start: Rational64, prec: Rational64, dense: Vec<CyclotomicNumber>) -> Self {
        let step = Rational64::new(1, den as i64);
        let mut out = Self::zero(den, prec);
        for (i, c) in dense.into_iter().enumerate() {
            out.insert(start + step * Rational64::from(i as i64), c);
        }
        out
    }

    /// Multiplicative inverse; the leading coefficient must be nonzero.
    pub fn invert(&self) -> Result<Self> {
        let (lead, v, b) = self.normalized_dense()?;
        let n = b.len();
        let nz: Vec<usize> = (1..n).filter(|&k| !b[k].is_zero()).collect();
        let mut w = vec![CyclotomicNumber::zero(); n];
        if n > 0 {
            w[0] = CyclotomicNumber::one();
        }
        for i in 1..n {
            let mut acc = CyclotomicNumber::zero();
            for &k in nz.iter().take_while(|&&k| k <= i) {
                acc += &(&b[k] * &w[i - k]);
            }
            w[i] = -acc;
        }
        let lead_inv = lead.inverse()?;
        let prec = self.prec - v - v;
        let out = Self::from_dense(self.den, -v, prec, w);
        Ok(out.scale(&lead_inv))
    }

    fn check_nonnegative(&self, what: &'static str, want_const: bool) -> Result<Vec<CyclotomicNumber>> {
        let bad = |_| match want_const {
            true => Error::LogDomain(what),
            false => Error::ExpDomain(what),
        };
        if self.valuation().is_some_and(|v| v < Rational64::zero()) {
            return Err(bad(()));
        }
        let c0 = self
            .coefficient(Rational64::zero())
            .map_err(|_| bad(()))?;
        let expected = if want_const {
            CyclotomicNumber::one()
        } else {
            CyclotomicNumber::zero()
        };
        if c0 != expected {
            return Err(bad(()));
        }
        let step = Rational64::new(1, self.den as i64);
        let n = (self.prec / step).ceil().to_integer().max(0) as usize;
        let mut dense = vec![CyclotomicNumber::zero(); n];
        for (x, c) in &self.terms {
            dense[(x / step).to_integer() as usize] = c.clone();
        }
        Ok(dense)
    }

    /// `log(a)` for `a = 1 + O(q^(1/D))`.
    pub fn log(&self) -> Result<Self> {
        let a = self.check_nonnegative("log needs constant term 1", true)?;
        let n = a.len();
        let nz: Vec<usize> = (1..n).filter(|&k| !a[k].is_zero()).collect();
        let mut f = vec![CyclotomicNumber::zero(); n];
        // a f' = a' in the variable q^(1/D): i f_i = i a_i - sum_{k<i} k f_k a_{i-k}.
        for i in 1..n {
            let mut acc = a[i].scale(&BigRational::from_integer((i as i64).into()));
            for &j in nz.iter().take_while(|&&j| j < i) {
                let k = i - j;
                acc = &acc - &(&a[j] * &f[k]).scale(&BigRational::from_integer((k as i64).into()));
            }
            f[i] = acc.scale(&BigRational::new(1.into(), (i as i64).into()));
        }
        Ok(Self::from_dense(self.den, Rational64::zero(), self.prec, f))
    }

    /// `exp(a)` for `a = O(q^(1/D))`.
    pub fn exp(&self) -> Result<Self> {
        let a = self.check_nonnegative("exp needs zero constant term", false)?;
        let n = a.len();
        let nz: Vec<usize> = (1..n).filter(|&k| !a[k].is_zero()).collect();
        let mut b = vec![CyclotomicNumber::zero(); n];
        if n > 0 {
            b[0] = CyclotomicNumber::one();
        }
        // b' = a' b: i b_i = sum_{k=1}^{i} k a_k b_{i-k}.
        for i in 1..n {
            let mut acc = CyclotomicNumber::zero();
            for &k in nz.iter().take_while(|&&k| k <= i) {
                acc += &(&a[k] * &b[i - k]).scale(&BigRational::from_integer((k as i64).into()));
            }
            b[i] = acc.scale(&BigRational::new(1.into(), (i as i64).into()));
        }
        Ok(Self::from_dense(self.den, Rational64::zero(), self.prec, b))
    }

    /// Applies `q -> e^(2 pi i phase) q^(num/denom)` termwise:
    /// `c q^x` becomes `c e^(2 pi i phase x) q^(x num/denom)`.
    ///
    /// The phase is a rational number of turns and is not reduced mod 1,
    /// since `e^(2 pi i phase x)` depends on it for fractional `x`.
    pub fn substitute(&self, phase: Rational64, num: i64, denom: i64) -> Result<Self> {
        if num < 1 || denom < 1 {
            return Err(Error::InvalidSubstitution { num, denom });
        }
        let scale = Rational64::new(num, denom);
        let big = self.den as i64 * denom;
        let den = (big / big.gcd(&num)) as u64;
        let mut out = Self::zero(den, self.prec * scale);
        for (x, c) in &self.terms {
            let turns = phase * x;
            let coeff = if turns.is_integer() {
                c.clone()
            } else {
                c * &CyclotomicNumber::exp_2pi_i(turns)
            };
            out.insert(x * scale, coeff);
        }
        Ok(out)
    }

    /// `c q^x -> c e^(2 pi i s x) q^x`.
    pub fn phase_twist(&self, s: i64) -> Self {
        self.substitute(Rational64::from_integer(s), 1, 1)
            .expect("identity rescaling is always valid")
    }

    /// Average over `q^(1/D) -> zeta_k^m q^(1/D)`, `m = 0..k`: keeps the terms
    /// whose exponent `x` has `x D` divisible by `k`.
    pub fn root_average(&self, k: u64) -> Self {
        assert!(k >= 1, "root_average needs k >= 1");
        let d = self.den as i64;
        let mut out = Self::zero(self.den, self.prec);
        for (x, c) in &self.terms {
            let units = (x * d).to_integer();
            if units.rem_euclid(k as i64) == 0 {
                out.terms.insert(*x, c.clone());
            }
        }
        out
    }

    /// Terms below the common precision where `self` and `other` differ.
    pub fn differences(&self, other: &Self) -> Vec<(Rational64, CyclotomicNumber, CyclotomicNumber)> {
        let prec = self.prec.min(other.prec);
        let mut keys: Vec<Rational64> = self
            .terms
            .range(..prec)
            .chain(other.terms.range(..prec))
            .map(|(x, _)| *x)
            .collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .filter_map(|x| {
                let a = self.coefficient(x).ok()?;
                let b = other.coefficient(x).ok()?;
                (a != b).then_some((x, a, b))
            })
            .collect()
    }

    /// Equality of all coefficients below the common precision.
    pub fn agrees_with(&self, other: &Self) -> bool {
        self.differences(other).is_empty()
    }
}

fn rayon_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

impl Add for &PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn add(self, rhs: &PuiseuxSeries) -> PuiseuxSeries {
        let mut out = PuiseuxSeries::zero(lcm(self.den, rhs.den), self.prec.min(rhs.prec));
        for (x, c) in self.terms.iter().chain(rhs.terms.iter()) {
            out.accumulate(*x, c);
        }
        out.prune();
        out
    }
}

impl Add for PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn add(self, rhs: Self) -> Self {
        &self + &rhs
    }
}

impl Neg for &PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn neg(self) -> PuiseuxSeries {
        PuiseuxSeries {
            den: self.den,
            prec: self.prec,
            terms: self.terms.iter().map(|(x, c)| (*x, -c)).collect(),
        }
    }
}

impl Sub for &PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn sub(self, rhs: &PuiseuxSeries) -> PuiseuxSeries {
        self + &(-rhs)
    }
}

impl Sub for PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn sub(self, rhs: Self) -> Self {
        &self - &rhs
    }
}

impl fmt::Debug for PuiseuxSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PuiseuxSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, c) in &self.terms {
            write!(f, "({c})*q^({x}) + ")?;
        }
        write!(f, "O(q^({}))", self.prec)
    }
}

pub fn format_rational64(r: &Rational64) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational64(s: &str) -> Result<Rational64> {
    use num_traits::ToPrimitive;
    let r = parse_rational(s)?;
    match (r.numer().to_i64(), r.denom().to_i64()) {
        (Some(n), Some(d)) => Ok(Rational64::new(n, d)),
        _ => Err(Error::Parse(format!("{s:?} does not fit in 64 bits"))),
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: String,
    coeff: CyclotomicNumber,
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    den: u64,
    prec: String,
    terms: Vec<TermJson>,
}

impl Serialize for PuiseuxSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesJson {
            den: self.den,
            prec: format_rational64(&self.prec),
            terms: self
                .terms
                .iter()
                .map(|(x, c)| TermJson {
                    exp: format_rational64(x),
                    coeff: c.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PuiseuxSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = SeriesJson::deserialize(deserializer)?;
        let prec = parse_rational64(&raw.prec).map_err(D::Error::custom)?;
        let terms = raw
            .terms
            .into_iter()
            .map(|t| Ok((parse_rational64(&t.exp)?, t.coeff)))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        if terms.iter().any(|(x, _)| *x >= prec) {
            return Err(D::Error::custom("term at or beyond precision"));
        }
        PuiseuxSeries::from_terms(raw.den, prec, terms).map_err(D::Error::custom)
    }
}

/// Sum of rational coefficients when every coefficient is rational.
pub fn rational_coefficients(s: &PuiseuxSeries) -> Option<Vec<(Rational64, BigRational)>> {
    s.terms()
        .map(|(x, c)| c.as_rational().map(|r| (*x, r)))
        .collect()
}

/// `true` if every coefficient is a nonnegative rational.
pub fn is_nonnegative_rational(s: &PuiseuxSeries) -> bool {
    s.terms()
        .all(|(_, c)| c.as_rational().is_some_and(|r| !r.is_negative()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    fn series(den: u64, prec: Rational64, terms: &[(i64, i64, i64)]) -> PuiseuxSeries {
        PuiseuxSeries::from_terms(
            den,
            prec,
            terms
                .iter()
                .map(|&(n, d, c)| (rat(n, d), CyclotomicNumber::from_integer(c))),
        )
        .unwrap()
    }

    #[test]
    fn products() {
        let a = PuiseuxSeries::from_integers(0, &[1, 1], r(10));
        let b = PuiseuxSeries::from_integers(0, &[1, -1], r(10));
        assert_eq!(a.mul(&b), PuiseuxSeries::from_integers(0, &[1, 0, -1], r(10)));

        let g = PuiseuxSeries::from_integers(-1, &[1, 24, 324], r(2));
        let shifted = g.mul(&PuiseuxSeries::from_integers(1, &[1], r(20)));
        assert_eq!(shifted, PuiseuxSeries::from_integers(0, &[1, 24, 324], r(3)));

        let geo = PuiseuxSeries::from_integers(0, &[1; 8], r(8));
        assert_eq!(geo.mul(&b), PuiseuxSeries::one(r(8)));
    }

    #[test]
    fn mul_precision_uses_valuations() {
        let a = PuiseuxSeries::from_integers(2, &[1], r(5));
        let b = PuiseuxSeries::from_integers(-1, &[1, 1], r(3));
        assert_eq!(a.mul(&b).prec(), r(4));
    }

    #[test]
    fn inversion() {
        let a = PuiseuxSeries::from_integers(0, &[1, -1], r(6));
        assert_eq!(a.invert().unwrap(), PuiseuxSeries::from_integers(0, &[1; 6], r(6)));
        let q = PuiseuxSeries::from_integers(1, &[1], r(6));
        assert_eq!(q.invert().unwrap(), PuiseuxSeries::from_integers(-1, &[1], r(4)));
        assert_eq!(
            PuiseuxSeries::zero(1, r(3)).invert(),
            Err(Error::ZeroLeadingTerm)
        );
    }

    #[test]
    fn inverse_of_partial_euler_product() {
        let prec = r(5);
        let mut prod = PuiseuxSeries::one(prec);
        for k in 1..=4 {
            let mut f = vec![0i64; k + 1];
            f[0] = 1;
            f[k] = -1;
            prod = prod.mul(&PuiseuxSeries::from_integers(0, &f, prec));
        }
        // Long division of 1 by the polynomial, done by hand on integers.
        let p: Vec<i64> = (0..5)
            .map(|i| prod.coefficient(r(i)).unwrap().as_rational().unwrap().to_integer().try_into().unwrap())
            .collect();
        let mut inv = vec![0i64; 5];
        inv[0] = 1;
        for n in 1..5 {
            inv[n] = -(1..=n).map(|k| p[k] * inv[n - k]).sum::<i64>();
        }
        assert_eq!(prod.invert().unwrap(), PuiseuxSeries::from_integers(0, &inv, prec));
        assert_eq!(inv, vec![1, 1, 2, 3, 5]);
    }

    #[test]
    fn substitution_examples() {
        let a = PuiseuxSeries::from_integers(0, &[1, 1], r(5));
        assert_eq!(
            a.substitute(r(0), 2, 1).unwrap(),
            PuiseuxSeries::from_integers(0, &[1, 0, 1], r(10))
        );
        let q = PuiseuxSeries::from_integers(1, &[1], r(5));
        assert_eq!(
            q.substitute(rat(1, 2), 1, 1).unwrap(),
            PuiseuxSeries::from_integers(1, &[-1], r(5))
        );
        let half = series(2, r(3), &[(1, 2, 1)]);
        assert_eq!(
            half.substitute(rat(1, 2), 1, 1).unwrap(),
            PuiseuxSeries::monomial(CyclotomicNumber::root_of_unity(4, 1), rat(1, 2), r(3))
        );
        assert!(matches!(
            a.substitute(r(0), 0, 1),
            Err(Error::InvalidSubstitution { .. })
        ));
    }

    #[test]
    fn substitution_rescales_precision_and_den() {
        let a = series(3, r(2), &[(1, 3, 1), (1, 1, 2)]);
        let b = a.substitute(r(0), 3, 2).unwrap();
        assert_eq!(b.prec(), r(3));
        assert_eq!(b.den(), 2);
        assert_eq!(b.coefficient(rat(1, 2)).unwrap(), CyclotomicNumber::one());
        assert_eq!(b.coefficient(rat(3, 2)).unwrap(), CyclotomicNumber::from_integer(2));
    }

    #[test]
    fn twist_examples() {
        let a = series(4, r(3), &[(1, 4, 1), (1, 1, 1)]);
        assert_eq!(a.phase_twist(0), a);
        let half = series(2, r(3), &[(1, 2, 1)]);
        assert_eq!(half.phase_twist(1), series(2, r(3), &[(1, 2, -1)]));
        let expected = PuiseuxSeries::from_terms(
            4,
            r(3),
            [
                (rat(1, 4), CyclotomicNumber::root_of_unity(4, 1)),
                (r(1), CyclotomicNumber::one()),
            ],
        )
        .unwrap();
        assert_eq!(a.phase_twist(1), expected);
    }

    #[test]
    fn averaging_examples() {
        let a = series(2, r(3), &[(0, 1, 1), (1, 2, 1), (1, 1, 1)]);
        assert_eq!(a.root_average(2), series(2, r(3), &[(0, 1, 1), (1, 1, 1)]));
        assert_eq!(a.root_average(1), a);
        let thirds: Vec<_> = (0..=6).map(|n| (n, 3, 1)).collect();
        let b = series(3, r(3), &thirds);
        assert_eq!(b.root_average(3), series(3, r(3), &[(0, 1, 1), (1, 1, 1), (2, 1, 1)]));
    }

    #[test]
    fn averaging_matches_the_phase_sum() {
        let thirds: Vec<_> = (0..=8).map(|n| (n, 3, n + 1)).collect();
        let b = series(3, r(3), &thirds);
        let k = 3;
        // q^(1/3) -> zeta_3^m q^(1/3) is the phase m/k applied to x D.
        let mut acc = PuiseuxSeries::zero(3, r(3));
        for m in 0..k {
            acc = &acc + &b.substitute(rat(m * 3, k), 1, 1).unwrap();
        }
        let avg = acc.scale_rational(&BigRational::new(1.into(), k.into()));
        assert_eq!(avg, b.root_average(k as u64));
    }

    #[test]
    fn log_exp_examples() {
        let geo = PuiseuxSeries::from_integers(0, &[1; 8], r(8));
        let lg = geo.log().unwrap();
        for n in 1..8 {
            assert_eq!(
                lg.coefficient(r(n)).unwrap(),
                CyclotomicNumber::from_rational(BigRational::new(1.into(), n.into()))
            );
        }
        assert_eq!(PuiseuxSeries::zero(1, r(5)).exp().unwrap(), PuiseuxSeries::one(r(5)));
        let p = PuiseuxSeries::from_integers(0, &[1, 3, 5], r(12));
        assert_eq!(p.log().unwrap().exp().unwrap(), p);
        assert_eq!(
            PuiseuxSeries::from_integers(0, &[2, 1], r(3)).log(),
            Err(Error::LogDomain("log needs constant term 1"))
        );
        assert!(PuiseuxSeries::from_integers(-1, &[1], r(3)).exp().is_err());
    }

    #[test]
    fn coefficient_examples() {
        let a = PuiseuxSeries::from_integers(0, &[1, 24], r(2));
        assert_eq!(a.coefficient(r(1)).unwrap(), CyclotomicNumber::from_integer(24));
        assert!(a.coefficient(rat(1, 2)).unwrap().is_zero());
        assert!(matches!(
            a.coefficient(r(5)),
            Err(Error::BeyondPrecision { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let a = PuiseuxSeries::from_terms(
            6,
            rat(7, 2),
            [
                (rat(-1, 2), CyclotomicNumber::root_of_unity(3, 1)),
                (rat(5, 3), CyclotomicNumber::from_integer(-7)),
            ],
        )
        .unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.starts_with(r#"{"den":6,"prec":"7/2","terms":[{"exp":"-1/2""#));
        let back: PuiseuxSeries = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn parallel_and_sequential_products_agree() {
        let a = PuiseuxSeries::from_integers(0, &(1..200).collect::<Vec<_>>(), r(199));
        let b = PuiseuxSeries::from_integers(-1, &(1..150).rev().collect::<Vec<_>>(), r(148));
        assert_eq!(a.mul_with(&b, Execution::Sequential), a.mul_with(&b, Execution::Parallel));
    }

    fn arb_series(den: u64, prec: i64) -> impl Strategy<Value = PuiseuxSeries> {
        let n = (prec * den as i64) as usize;
        prop::collection::vec(-5i64..=5, n).prop_map(move |cs| {
            let terms = cs.into_iter().enumerate().map(|(i, c)| {
                (rat(i as i64, den as i64), CyclotomicNumber::from_integer(c))
            });
            PuiseuxSeries::from_terms(den, Rational64::from_integer(prec), terms).unwrap()
        })
    }

    fn arb_unit(den: u64, prec: i64) -> impl Strategy<Value = PuiseuxSeries> {
        arb_series(den, prec).prop_map(move |s| {
            let c0 = s.coefficient(Rational64::zero()).unwrap();
            &s + &PuiseuxSeries::one(Rational64::from_integer(prec)).scale(&(&CyclotomicNumber::one() - &c0))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn ring_axioms(a in arb_series(2, 4), b in arb_series(1, 4), c in arb_series(3, 3)) {
            prop_assert!(a.mul(&b).mul(&c).agrees_with(&a.mul(&b.mul(&c))));
            prop_assert!(a.mul(&(&b + &c)).agrees_with(&(&a.mul(&b) + &a.mul(&c))));
            prop_assert!(a.mul(&b).agrees_with(&b.mul(&a)));
        }

        #[test]
        fn substitute_is_multiplicative(a in arb_series(2, 4), b in arb_series(2, 4),
                                         pn in -4i64..4, pd in 1i64..5, num in 1i64..4, denom in 1i64..4) {
            let t = rat(pn, pd);
            let lhs = a.mul(&b).substitute(t, num, denom).unwrap();
            let rhs = a.substitute(t, num, denom).unwrap().mul(&b.substitute(t, num, denom).unwrap());
            prop_assert!(lhs.agrees_with(&rhs));
        }

        #[test]
        fn twists_compose(a in arb_series(4, 3), s1 in -5i64..5, s2 in -5i64..5) {
            prop_assert_eq!(a.phase_twist(s1).phase_twist(s2), a.phase_twist(s1 + s2));
        }

        #[test]
        fn averages_vanish_off_lattice(a in arb_series(6, 3), k in 1u64..7) {
            let avg = a.root_average(k);
            for (x, _) in a.terms() {
                if (x * 6).to_integer() % k as i64 != 0 {
                    prop_assert!(avg.coefficient(*x).unwrap().is_zero());
                }
            }
        }

        #[test]
        fn log_and_exp_are_inverse(u in arb_unit(1, 11), v in arb_series(2, 6)) {
            prop_assert_eq!(u.log().unwrap().exp().unwrap(), u.clone());
            let v0 = v.coefficient(Rational64::zero()).unwrap();
            let v = &v - &PuiseuxSeries::one(Rational64::from_integer(6)).scale(&v0);
            prop_assert_eq!(v.exp().unwrap().log().unwrap(), v);
        }

        #[test]
        fn inverse_is_inverse(u in arb_unit(2, 5)) {
            let inv = u.invert().unwrap();
            prop_assert!(u.mul(&inv).agrees_with(&PuiseuxSeries::one(Rational64::from_integer(5))));
        }
    }
}
