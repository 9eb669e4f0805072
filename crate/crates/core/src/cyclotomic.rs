//! Exact arithmetic in cyclotomic fields `Q(zeta_N)`.
//!
//! An element at level `N` is stored as its coefficient vector in the power
//! basis `1, zeta, ..., zeta^(phi(N)-1)`, i.e. a polynomial reduced modulo the
//! N-th cyclotomic polynomial. Operands at different levels are embedded into
//! the lcm level before any operation; levels are never compressed.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ntheory::{divisors, euler_phi, lcm};

/// Integer coefficients (ascending) of the N-th cyclotomic polynomial.
pub fn cyclotomic_polynomial(n: u64) -> Arc<Vec<i64>> {
    static CACHE: OnceLock<RwLock<HashMap<u64, Arc<Vec<i64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.read().unwrap().get(&n) {
        return p.clone();
    }
    // x^n - 1 divided by every Phi_d with d | n, d < n.
    let mut poly = vec![0i64; n as usize + 1];
    poly[0] = -1;
    poly[n as usize] = 1;
    for d in divisors(n) {
        if d == n {
            continue;
        }
        poly = divide_monic(&poly, &cyclotomic_polynomial(d));
    }
    let poly = Arc::new(poly);
    cache.write().unwrap().insert(n, poly.clone());
    poly
}

fn divide_monic(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let qd = rem.len() - 1 - dd;
    let mut quot = vec![0i64; qd + 1];
    for i in (0..=qd).rev() {
        let c = rem[i + dd];
        quot[i] = c;
        if c != 0 {
            for (j, &dj) in den.iter().enumerate() {
                rem[i + j] -= c * dj;
            }
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0), "non-exact cyclotomic division");
    quot
}

/// Reduce an arbitrary polynomial in `zeta_level` to canonical form.
fn reduce(mut poly: Vec<BigRational>, level: u64) -> Vec<BigRational> {
    let n = level as usize;
    if poly.len() > n {
        let tail = poly.split_off(n);
        for (i, c) in tail.into_iter().enumerate() {
            poly[i % n] += c;
        }
    }
    let phi = cyclotomic_polynomial(level);
    let deg = phi.len() - 1;
    if poly.len() > deg {
        for i in (deg..poly.len()).rev() {
            if poly[i].is_zero() {
                continue;
            }
            let c = std::mem::replace(&mut poly[i], BigRational::zero());
            for (j, &pj) in phi.iter().enumerate().take(deg) {
                if pj != 0 {
                    poly[i - deg + j] -= &c * BigRational::from_integer(BigInt::from(pj));
                }
            }
        }
    }
    poly.resize(deg, BigRational::zero());
    poly
}

/// An exact element of `Q(zeta_N)`.
#[derive(Clone)]
pub struct CyclotomicNumber {
    level: u64,
    coeffs: Vec<BigRational>,
}

impl CyclotomicNumber {
    pub fn zero() -> Self {
        Self::from_rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Self::from_rational(BigRational::one())
    }

    pub fn from_rational(value: BigRational) -> Self {
        Self {
            level: 1,
            coeffs: vec![value],
        }
    }

    pub fn from_integer(value: impl Into<BigInt>) -> Self {
        Self::from_rational(BigRational::from_integer(value.into()))
    }

    /// Builds an element from canonical coefficients. `coeffs.len()` must be `phi(level)`.
    pub fn from_coeffs(level: u64, coeffs: Vec<BigRational>) -> Result<Self> {
        if level == 0 {
            return Err(Error::OutOfRange("cyclotomic level must be positive".into()));
        }
        let phi = euler_phi(level) as usize;
        if coeffs.len() != phi {
            return Err(Error::Parse(format!(
                "level {level} needs {phi} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { level, coeffs })
    }

    /// Reduces an arbitrary polynomial in `zeta_level` (ascending powers).
    pub fn from_polynomial(level: u64, poly: Vec<BigRational>) -> Self {
        assert!(level > 0, "cyclotomic level must be positive");
        Self {
            level,
            coeffs: reduce(poly, level),
        }
    }

    /// `zeta_n^k`; depends only on `k mod n`.
    pub fn root_of_unity(n: u64, k: i64) -> Self {
        assert!(n > 0, "root of unity order must be positive");
        let e = k.rem_euclid(n as i64) as usize;
        let mut poly = vec![BigRational::zero(); e + 1];
        poly[e] = BigRational::one();
        Self::from_polynomial(n, poly)
    }

    /// `exp(2 pi i * turns)` for a rational number of turns.
    pub fn exp_2pi_i(turns: num_rational::Rational64) -> Self {
        let denom = *turns.denom() as u64;
        Self::root_of_unity(denom, *turns.numer())
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// The value as a rational, if it lies in `Q`.
    pub fn as_rational(&self) -> Option<BigRational> {
        self.coeffs[1..]
            .iter()
            .all(Zero::is_zero)
            .then(|| self.coeffs[0].clone())
    }

    /// Embeds into `Q(zeta_target)` via `zeta_level -> zeta_target^(target/level)`.
    pub fn embed(&self, target: u64) -> Self {
        assert!(
            target % self.level == 0,
            "cannot embed level {} into level {target}",
            self.level
        );
        if target == self.level {
            return self.clone();
        }
        let step = (target / self.level) as usize;
        let mut poly = vec![BigRational::zero(); (self.coeffs.len() - 1) * step + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            poly[i * step] = c.clone();
        }
        Self::from_polynomial(target, poly)
    }

    fn unify(&self, other: &Self) -> (Self, Self) {
        let l = lcm(self.level, other.level);
        (self.embed(l), other.embed(l))
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        Self {
            level: self.level,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Multiplicative inverse by the extended Euclidean algorithm against `Phi_N`.
    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero { level: self.level });
        }
        let modulus: Vec<BigRational> = cyclotomic_polynomial(self.level)
            .iter()
            .map(|&c| BigRational::from_integer(c.into()))
            .collect();
        let inv = poly_inverse_mod(&trim(self.coeffs.clone()), &modulus);
        Ok(Self::from_polynomial(self.level, inv))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inverse()?)
    }

    pub fn pow(&self, mut exp: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            exp >>= 1;
        }
        acc
    }

    /// Numeric value in the complex plane.
    pub fn to_complex(&self) -> Complex64 {
        let n = self.level as f64;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                let angle = 2.0 * std::f64::consts::PI * i as f64 / n;
                Complex64::from_polar(1.0, angle) * rational_to_f64(c)
            })
            .sum()
    }
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

fn trim(mut p: Vec<BigRational>) -> Vec<BigRational> {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(BigRational::zero);
            let y = b.get(i).cloned().unwrap_or_else(BigRational::zero);
            x - y
        })
        .collect()
}

/// Polynomial division with remainder over `Q`; `den` must be nonzero.
fn poly_divrem(num: &[BigRational], den: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let den = trim(den.to_vec());
    let mut rem = trim(num.to_vec());
    let dd = den.len() - 1;
    if rem.len() < den.len() {
        return (vec![BigRational::zero()], rem);
    }
    let lead = den[dd].clone();
    let mut quot = vec![BigRational::zero(); rem.len() - dd];
    for i in (0..quot.len()).rev() {
        let c = &rem[i + dd] / &lead;
        if !c.is_zero() {
            for (j, dj) in den.iter().enumerate() {
                rem[i + j] -= &c * dj;
            }
        }
        quot[i] = c;
    }
    rem.truncate(dd.max(1));
    (quot, trim(rem))
}

/// Inverse of `a` modulo the irreducible `m` (both ascending, `a` nonzero mod `m`).
fn poly_inverse_mod(a: &[BigRational], m: &[BigRational]) -> Vec<BigRational> {
    let (mut r0, mut r1) = (m.to_vec(), poly_divrem(a, m).1);
    let (mut s0, mut s1) = (vec![BigRational::zero()], vec![BigRational::one()]);
    while !(r1.len() == 1 && r1[0].is_zero()) {
        let (q, r) = poly_divrem(&r0, &r1);
        let s = poly_sub(&s0, &poly_mul(&q, &s1));
        (r0, r1) = (r1, r);
        (s0, s1) = (s1, trim(s));
    }
    // r0 is a nonzero constant: gcd(a, m) = 1 because m is irreducible.
    let c = r0[0].clone();
    s0.into_iter().map(|x| x / &c).collect()
}

impl PartialEq for CyclotomicNumber {
    fn eq(&self, other: &Self) -> bool {
        if self.level == other.level {
            return self.coeffs == other.coeffs;
        }
        let (a, b) = self.unify(other);
        a.coeffs == b.coeffs
    }
}

impl Eq for CyclotomicNumber {}

impl<'a> Add<&'a CyclotomicNumber> for &'a CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn add(self, rhs: &CyclotomicNumber) -> CyclotomicNumber {
        if self.level == rhs.level {
            return CyclotomicNumber {
                level: self.level,
                coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
            };
        }
        let (a, b) = self.unify(rhs);
        &a + &b
    }
}

impl Add for CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn add(self, rhs: Self) -> Self {
        &self + &rhs
    }
}

impl AddAssign<&CyclotomicNumber> for CyclotomicNumber {
    fn add_assign(&mut self, rhs: &CyclotomicNumber) {
        if self.level == rhs.level {
            for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
                *a += b;
            }
        } else {
            *self = &*self + rhs;
        }
    }
}

impl Neg for &CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn neg(self) -> CyclotomicNumber {
        CyclotomicNumber {
            level: self.level,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Neg for CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn neg(self) -> Self {
        -&self
    }
}

impl<'a> Sub<&'a CyclotomicNumber> for &'a CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn sub(self, rhs: &CyclotomicNumber) -> CyclotomicNumber {
        self + &(-rhs)
    }
}

impl Sub for CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn sub(self, rhs: Self) -> Self {
        &self - &rhs
    }
}

impl<'a> Mul<&'a CyclotomicNumber> for &'a CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn mul(self, rhs: &CyclotomicNumber) -> CyclotomicNumber {
        if self.level != rhs.level {
            let (a, b) = self.unify(rhs);
            return &a * &b;
        }
        if self.level == 1 {
            return CyclotomicNumber::from_rational(&self.coeffs[0] * &rhs.coeffs[0]);
        }
        CyclotomicNumber::from_polynomial(self.level, poly_mul(&self.coeffs, &rhs.coeffs))
    }
}

impl Mul for CyclotomicNumber {
    type Output = CyclotomicNumber;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl fmt::Debug for CyclotomicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CyclotomicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.as_rational() {
            return write!(f, "{r}");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                _ => write!(f, "({c})*z{}^{i}", self.level)?,
            }
        }
        Ok(())
    }
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parse_int = |t: &str| {
        t.trim()
            .parse::<BigInt>()
            .map_err(|e| Error::Parse(format!("{t:?}: {e}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(parse_int(n)?, d))
        }
        None => Ok(BigRational::from_integer(parse_int(s)?)),
    }
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Serialize, Deserialize)]
struct CyclotomicJson {
    level: u64,
    coeffs: Vec<String>,
}

impl Serialize for CyclotomicNumber {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CyclotomicJson {
            level: self.level,
            coeffs: self.coeffs.iter().map(format_rational).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CyclotomicNumber {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = CyclotomicJson::deserialize(deserializer)?;
        let coeffs = raw
            .coeffs
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        CyclotomicNumber::from_coeffs(raw.level, coeffs).map_err(serde::de::Error::custom)
    }
}
