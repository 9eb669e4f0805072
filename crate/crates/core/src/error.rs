use num_rational::Rational64;
use thiserror::Error;

/// Errors raised by the exact and numeric layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by zero in Q(zeta_{level})")]
    DivisionByZero { level: u64 },

    #[error("series has a zero leading term and cannot be inverted")]
    ZeroLeadingTerm,

    #[error("coefficient at q^{exponent} requested beyond precision {prec}")]
    BeyondPrecision { exponent: Rational64, prec: Rational64 },

    #[error("log requires constant term 1 and no negative exponents: {0}")]
    LogDomain(&'static str),

    #[error("exp requires zero constant term and no negative exponents: {0}")]
    ExpDomain(&'static str),

    #[error("invalid substitution q -> zeta * q^({num}/{denom})")]
    InvalidSubstitution { num: i64, denom: i64 },

    #[error("order {order} does not divide {modulus}")]
    OrderDoesNotDivide { order: u64, modulus: u64 },

    #[error("Legendre sign epsilon(s) is only defined for odd r (got r = {0})")]
    EvenModulus(u64),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("exponent {0} is not an integer for the given divisor")]
    NonIntegralExponent(Rational64),

    #[error("{m}/{d} is not invertible modulo {modulus}")]
    NotInvertible { m: i64, d: i64, modulus: i64 },

    #[error("Im(tau) = {0} is below the convergence guard")]
    ImaginaryTooSmall(f64),

    #[error("internal cross-check failed: {0}")]
    CrossCheck(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
