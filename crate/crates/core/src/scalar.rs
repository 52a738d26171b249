//! Scalar abstraction and exact rational helpers.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in reduced form with positive denominator.
pub type Rational = BigRational;

/// Coefficient field for polynomials and matrices.
///
/// Blanket-implemented for every type with field-like arithmetic and an
/// ordering, which covers `f32`, `f64` and [`Rational`].
pub trait Scalar: Num + Signed + FromPrimitive + Clone + PartialOrd + Debug {
    fn from_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("scalar cannot represent integer")
    }
}

impl<T> Scalar for T where T: Num + Signed + FromPrimitive + Clone + PartialOrd + Debug {}

/// `n / d` as an exact rational.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `b! / (b - a)!`, the falling factorial `b (b-1) ... (b-a+1)`.
pub fn falling(b: u32, a: u32) -> BigInt {
    if a > b {
        return BigInt::zero();
    }
    (b - a + 1..=b).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn midpoint(a: &Rational, b: &Rational) -> Rational {
    (a + b) / int(2)
}

/// Parse `-3`, `3/4`, `1.25` or `-2e-3` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let err = || Error::Parse {
        pos: 0,
        msg: format!("invalid rational literal `{s}`"),
    };
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n.trim()).ok_or_else(err)?;
        let d = parse_decimal(d.trim()).ok_or_else(err)?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(n / d);
    }
    parse_decimal(s).ok_or_else(err)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str_radix(if all.is_empty() { "0" } else { &all }, 10).ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = Rational::from_integer(numer);
    if scale >= 0 {
        r *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

/// Canonical text for a rational: `3`, `-1/2`.
pub fn fmt_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: scale down by a common power of two.
        let bits = r.numer().bits().max(r.denom().bits()) as i64 - 900;
        let shift = bits.max(0) as usize;
        let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
        let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
        if d == 0.0 {
            if n.is_sign_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        } else {
            n / d
        }
    })
}

/// Upper bound `u ≥ √x` with a small dyadic denominator.
///
/// Newton's iteration started above the root stays above it; the final
/// value is rounded up to a multiple of `2^-bits` and re-checked.
pub fn sqrt_upper(x: &Rational, bits: u32) -> Rational {
    assert!(!x.is_negative(), "sqrt of negative rational");
    if x.is_zero() {
        return Rational::zero();
    }
    let mut u = if *x > Rational::one() { x.clone() } else { Rational::one() };
    let tol = Rational::new(BigInt::one(), BigInt::one() << (bits + 2));
    for _ in 0..64 {
        let next = (&u + x / &u) / int(2);
        let done = &u - &next <= tol;
        u = next;
        if done {
            break;
        }
    }
    let scale = Rational::from_integer(BigInt::one() << bits);
    let mut up = (&u * &scale).ceil() / &scale;
    while &up * &up < *x {
        up += Rational::one() / &scale;
    }
    up
}

/// Lower bound `l ≤ √x`, companion to [`sqrt_upper`].
pub fn sqrt_lower(x: &Rational, bits: u32) -> Rational {
    if x.is_zero() {
        return Rational::zero();
    }
    let u = sqrt_upper(x, bits);
    let l = x / &u;
    let scale = Rational::from_integer(BigInt::one() << bits);
    (&l * &scale).floor() / &scale
}

pub fn gcd_int(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_literals() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("-1.25").unwrap(), rat(-5, 4));
        assert_eq!(parse_rational("2e-3").unwrap(), rat(1, 500));
        assert_eq!(parse_rational("-6/4").unwrap(), rat(-3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn sqrt_bounds_bracket_root() {
        let half = rat(1, 2);
        let u = sqrt_upper(&half, 10);
        let l = sqrt_lower(&half, 10);
        assert!(&u * &u >= half);
        assert!(&l * &l <= half);
        assert!(u <= rat(3, 4));
        assert!(&u - &l < rat(1, 100));
        let four = sqrt_upper(&int(4), 10);
        assert!(four >= int(2) && four <= int(2) + rat(1, 1024));
    }

    #[test]
    fn combinatorics() {
        assert_eq!(factorial(5), BigInt::from(120));
        assert_eq!(binomial(6, 2), BigInt::from(15));
        assert_eq!(falling(5, 2), BigInt::from(20));
        assert_eq!(falling(2, 3), BigInt::zero());
    }
}
