//! Exact rational numbers and their text forms.
//!
//! Every quantity in the solver is a [`Rational`]. Text input accepts
//! integers, `p/q` fractions and finite decimals (optionally with an
//! exponent); all are converted without rounding. Output is always the
//! canonical `p/q` form (or a bare integer when the denominator is one).

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use num_rational::BigRational as Rational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Parses `"7"`, `"-3/4"`, `"0.125"`, `"1.5e-2"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::parse("empty rational literal"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_integer(num.trim(), text)?;
        let d = parse_integer(den.trim(), text)?;
        if d.is_zero() {
            return Err(Error::parse(format!("zero denominator in `{text}`")));
        }
        return Ok(Rational::new(n, d));
    }
    parse_decimal(s, text)
}

fn parse_integer(s: &str, whole: &str) -> Result<BigInt> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::parse(format!("invalid rational literal `{whole}`")));
    }
    s.parse::<BigInt>()
        .map_err(|_| Error::parse(format!("invalid rational literal `{whole}`")))
}

fn parse_decimal(s: &str, whole: &str) -> Result<Rational> {
    let bad = || Error::parse(format!("invalid rational literal `{whole}`"));
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let exp: i32 = s[i + 1..].parse().map_err(|_| bad())?;
            (&s[..i], exp)
        }
        None => (s, 0),
    };
    let (negative, unsigned) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = unsigned.split_once('.').unwrap_or((unsigned, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = digits.parse().map_err(|_| bad())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Canonical text form: `p/q`, or `p` for integers.
pub fn format_rational(q: &Rational) -> String {
    q.to_string()
}

/// Lossy decimal approximation, for human-readable reports only.
pub fn approx(q: &Rational) -> f64 {
    let n = q.numer().to_f64().unwrap_or(f64::NAN);
    let d = q.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        n / d
    } else {
        // Scale down huge operands before dividing.
        let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(900);
        let n = (q.numer() >> shift).to_f64().unwrap_or(0.0);
        let d = (q.denom() >> shift).to_f64().unwrap_or(1.0);
        n / d
    }
}

/// Checks that `weights` is a probability vector: non-negative, summing to one.
pub fn check_probability_vector<'a>(
    weights: impl IntoIterator<Item = &'a Rational>,
    what: &str,
) -> Result<()> {
    let mut total = Rational::zero();
    for w in weights {
        if w.is_negative() {
            return Err(Error::InvalidWeights(format!("{what} has a negative weight {w}")));
        }
        total += w;
    }
    if !total.is_one() {
        return Err(Error::InvalidWeights(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}
