//! Small integer utilities shared by the lattice, Hilbert-scheme and
//! partition-function modules.

use num_bigint::BigInt;
use num_traits::{One, Zero};

pub fn gcd(a: i64, b: i64) -> i64 {
    num_integer::gcd(a, b)
}

pub fn lcm(a: u64, b: u64) -> u64 {
    num_integer::lcm(a, b)
}

/// Positive divisors of `n`, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    assert!(n > 0, "divisors of zero");
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// Distinct prime factors of `n`.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && prime_factors(n) == [n]
}

pub fn mobius(n: u64) -> i64 {
    assert!(n > 0);
    let mut m = n;
    let mut sign = 1;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if m > 1 {
        sign = -sign;
    }
    sign
}

pub fn euler_phi(n: u64) -> u64 {
    prime_factors(n)
        .into_iter()
        .fold(n, |acc, p| acc / p * (p - 1))
}

pub fn sigma1(n: u64) -> u64 {
    divisors(n).into_iter().sum()
}

/// Jacobi symbol (a | n) for odd positive `n`.
pub fn jacobi(a: i64, n: u64) -> i32 {
    assert!(n % 2 == 1, "Jacobi symbol needs odd modulus");
    let n_i = n as i64;
    let mut a = a.rem_euclid(n_i);
    let mut n = n_i;
    let mut result = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Inverse of `a` modulo `m` (m >= 1), if it exists. Returns a value in `[0, m)`.
pub fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(m))
}

pub fn big_pow(base: u64, exp: u32) -> BigInt {
    num_traits::pow(BigInt::from(base), exp as usize)
}

/// Number of elements of exact order `o` in `(Z_o)^k` via Moebius inversion.
pub(crate) fn exact_order_elements(o: u64, k: u32) -> BigInt {
    divisors(o)
        .into_iter()
        .fold(BigInt::zero(), |acc, d| {
            acc + BigInt::from(mobius(o / d)) * big_pow(d, k)
        })
}

pub(crate) fn big_factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}
