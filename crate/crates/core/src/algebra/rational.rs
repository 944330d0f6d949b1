use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::AlgebraError;

/// Reduced rational `num/den` with positive denominator.
pub fn rat(num: i64, den: i64) -> Result<BigRational, AlgebraError> {
    if den == 0 {
        return Err(AlgebraError::ZeroDenominator);
    }
    Ok(BigRational::new(num.into(), den.into()))
}

/// Shorthand for tests and fixtures; panics on a zero denominator.
pub fn q(num: i64, den: i64) -> BigRational {
    rat(num, den).expect("nonzero denominator")
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Parses `-3/7`, `0`, `12` or a finite decimal such as `-0.125`.
///
/// A leading ASCII `-` or the Unicode minus sign is accepted. Decimals are
/// converted exactly.
pub fn parse_rational(text: &str) -> Result<BigRational, AlgebraError> {
    let err = |reason: &'static str| AlgebraError::MalformedRational {
        input: text.to_string(),
        reason,
    };
    let (negative, body) = if let Some(rest) = text.strip_prefix('-') {
        (true, rest)
    } else if let Some(rest) = text.strip_prefix('\u{2212}') {
        (true, rest)
    } else {
        (false, text)
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let value = if let Some((num, den)) = body.split_once('/') {
        if !digits(num) || !digits(den) {
            return Err(err("expected digits around '/'"));
        }
        let den: BigInt = den.parse().map_err(|_| err("bad denominator"))?;
        if den.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        BigRational::new(num.parse().map_err(|_| err("bad numerator"))?, den)
    } else if let Some((whole, frac)) = body.split_once('.') {
        if !digits(whole) || !digits(frac) {
            return Err(err("expected digits around '.'"));
        }
        let scaled: BigInt = format!("{whole}{frac}")
            .parse()
            .map_err(|_| err("bad decimal"))?;
        BigRational::new(scaled, num_traits::pow(BigInt::from(10), frac.len()))
    } else {
        if !digits(body) {
            return Err(err("expected an integer, fraction or decimal"));
        }
        BigRational::from_integer(body.parse().map_err(|_| err("bad integer"))?)
    };
    Ok(if negative { -value } else { value })
}

/// `p/q`, or just `p` for integers.
pub fn format_rational(r: &BigRational) -> String {
    r.to_string()
}

pub fn format_rational_latex(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        let sign = if r.is_negative() { "-" } else { "" };
        format!("{sign}\\frac{{{}}}{{{}}}", r.numer().abs(), r.denom())
    }
}

/// Nearest `f64`; infinities for values outside the `f64` range.
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}
