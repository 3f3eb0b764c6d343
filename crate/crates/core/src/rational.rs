//! Arbitrary-precision rational helpers shared by every module.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Nearest `f64` (round-to-nearest-even; underflows to 0, overflows to inf).
pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `"num/den"` in lowest terms; integers print without a denominator.
pub fn to_string(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Natural log of a positive rational, usable far outside the `f64` range.
pub fn ln(q: &Rational) -> f64 {
    ln_bigint(q.numer()) - ln_bigint(q.denom())
}

fn ln_bigint(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (v >> shift as usize).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Shortest round-trip decimal for CSV, in exponent form when very small or large.
pub fn decimal(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Exact rational from an `f64` (every finite double is a dyadic rational).
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::Domain(format!("non-finite value {x}")))
}

/// Parses `"3/2"`, `"-7"`, `"1.25"` or `"1e-3"` into an exact rational.
///
/// Decimal and scientific forms are converted exactly from their digits,
/// never through a float.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((n, d)) = s.split_once('/') {
        let num = parse(n)?;
        let den = parse(d)?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(num / den);
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(Error::Parse(format!("no digits in {s:?}")));
    }
    if !whole.chars().chain(frac.chars()).all(|ch| ch.is_ascii_digit()) {
        return Err(Error::Parse(format!("not a rational: {s:?}")));
    }
    let all: String = format!("{whole}{frac}");
    let magnitude = BigInt::parse_bytes(if all.is_empty() { b"0" } else { all.as_bytes() }, 10)
        .ok_or_else(|| Error::Parse(format!("not a rational: {s:?}")))?;
    let numer = if negative { -magnitude } else { magnitude };
    let scale = exponent - frac.len() as i32;
    let ten = int(10);
    Ok(Rational::from_integer(numer) * ten.pow(scale))
}

/// `base^exp` for a possibly negative exponent.
pub fn pow(base: &Rational, exp: i64) -> Rational {
    let e = i32::try_from(exp).expect("exponent fits in i32");
    base.pow(e)
}
