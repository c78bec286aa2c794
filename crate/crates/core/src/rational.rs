//! Exact arithmetic helpers.
//!
//! Every closed-form quantity in the model is a rational multiple of `t`, so
//! the engine works over `Ratio<i128>`. Release builds keep overflow checks
//! on; an overflow aborts instead of producing a wrong answer.

use crate::error::{Error, Result};
use num_integer::Roots;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

/// `n / d` as a reduced rational. Panics if `d == 0`.
pub fn rat(n: i128, d: i128) -> Rational {
    Ratio::new(n, d)
}

pub fn int(n: i128) -> Rational {
    Ratio::from_integer(n)
}

pub fn half() -> Rational {
    Ratio::new_raw(1, 2)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn clamp(x: Rational, lo: Rational, hi: Rational) -> Rational {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

/// Parses `"p/q"`, integers, and plain or scientific decimals exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = |why: &str| Error::parse("number", format!("`{text}`: {why}"));
    if s.is_empty() {
        return Err(bad("empty"));
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| bad("bad numerator"))?;
        let d: i128 = d.trim().parse().map_err(|_| bad("bad denominator"))?;
        if d == 0 {
            return Err(bad("zero denominator"));
        }
        return Ok(Ratio::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..].parse().map_err(|_| bad("bad exponent"))?;
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
        return Err(bad("no digits"));
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad("not a number"));
    }
    let joined = format!("{whole}{frac}");
    let numer: i128 = joined.parse().map_err(|_| bad("too many digits"))?;
    let scale = exponent - frac.len() as i32;
    if scale.abs() > 30 {
        return Err(bad("exponent out of range"));
    }
    let pow = 10i128.pow(scale.unsigned_abs());
    let mut value = if scale >= 0 {
        Ratio::from_integer(numer.checked_mul(pow).ok_or_else(|| bad("too large"))?)
    } else {
        Ratio::new(numer, pow)
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Decimal rendering with `sig` significant digits, trailing zeros trimmed.
pub fn format_decimal(r: &Rational, sig: usize) -> String {
    let x = to_f64(r);
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i64;
    let decimals = (sig as i64 - 1 - exp).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

/// Integer square root of a nonnegative rational, if it is a perfect square.
pub fn exact_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    if r.is_zero() {
        return Some(Rational::zero());
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    (n * n == *r.numer() && d * d == *r.denom()).then(|| Ratio::new(n, d))
}

/// Rounds to the nearest multiple of `2^-bits` (ties away from zero).
pub(crate) fn round_dyadic(r: &Rational, bits: u32) -> Rational {
    let scale = int(1i128 << bits);
    (r * scale).round() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("-2").unwrap(), int(-2));
        assert_eq!(parse_rational("0.22").unwrap(), rat(11, 50));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("1e-3").unwrap(), rat(1, 1000));
        assert_eq!(parse_rational("2.5E2").unwrap(), int(250));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn decimal_formatting_is_stable() {
        assert_eq!(format_decimal(&rat(2, 3), 12), "0.666666666667");
        assert_eq!(format_decimal(&rat(25, 72), 12), "0.347222222222");
        assert_eq!(format_decimal(&int(3), 12), "3");
        assert_eq!(format_decimal(&rat(-1, 8), 12), "-0.125");
        assert_eq!(format_decimal(&Rational::zero(), 12), "0");
    }

    #[test]
    fn sqrt_of_perfect_squares_only() {
        assert_eq!(exact_sqrt(&rat(9, 4)), Some(rat(3, 2)));
        assert_eq!(exact_sqrt(&int(2)), None);
        assert_eq!(exact_sqrt(&int(-4)), None);
    }

    #[test]
    fn dyadic_rounding() {
        assert_eq!(round_dyadic(&rat(1, 3), 2), rat(1, 4));
        assert_eq!(round_dyadic(&rat(3, 8), 2), rat(1, 2));
        assert_eq!(round_dyadic(&rat(-3, 8), 2), rat(-1, 2));
    }
}
