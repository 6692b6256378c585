use num_traits::{One, Signed, Zero};

use super::rational::{format_rational, parse_rational, Rational};
use crate::error::{Error, Result};

/// A utility entry `constant + Σ coeff_i · param_i`, affine in the
/// problem's parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineExpr {
    pub constant: Rational,
    /// One coefficient per declared parameter, in declaration order.
    pub coefficients: Vec<Rational>,
}

impl AffineExpr {
    pub fn constant(value: Rational, n_params: usize) -> Self {
        AffineExpr {
            constant: value,
            coefficients: vec![Rational::zero(); n_params],
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coefficients.iter().all(Zero::is_zero)
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        debug_assert_eq!(point.len(), self.coefficients.len());
        self.coefficients
            .iter()
            .zip(point)
            .fold(self.constant.clone(), |acc, (c, x)| acc + c * x)
    }

    /// Parses `"c0 + c1*name1 - name2 + ..."`; every name must be in `params`.
    pub fn parse(text: &str, params: &[String]) -> Result<Self> {
        let mut expr = AffineExpr::constant(Rational::zero(), params.len());
        let terms = split_terms(text)?;
        if terms.is_empty() {
            return Err(Error::parse(format!("empty expression `{text}`")));
        }
        for (negative, term) in terms {
            let (coef, name) = match term.split_once('*') {
                Some((c, n)) => (parse_rational(c)?, Some(n.trim())),
                None if is_identifier(term) => (Rational::one(), Some(term)),
                None => (parse_rational(term)?, None),
            };
            let coef = if negative { -coef } else { coef };
            match name {
                None => expr.constant += coef,
                Some(name) => {
                    if !is_identifier(name) {
                        return Err(Error::parse(format!("bad parameter name `{name}` in `{text}`")));
                    }
                    let idx = params.iter().position(|p| p == name).ok_or_else(|| {
                        Error::validation(format!("undeclared parameter `{name}` in `{text}`"))
                    })?;
                    expr.coefficients[idx] += coef;
                }
            }
        }
        Ok(expr)
    }

    /// Text form accepted by [`AffineExpr::parse`].
    pub fn to_text(&self, params: &[String]) -> String {
        let mut out = String::new();
        if !self.constant.is_zero() || self.is_constant() {
            out.push_str(&format_rational(&self.constant));
        }
        for (coef, name) in self.coefficients.iter().zip(params) {
            if coef.is_zero() {
                continue;
            }
            let magnitude = coef.abs();
            let body = if magnitude.is_one() {
                name.clone()
            } else {
                format!("{}*{name}", format_rational(&magnitude))
            };
            match (out.is_empty(), coef.is_negative()) {
                (true, false) => out.push_str(&body),
                (true, true) => out.push_str(&format!("-{body}")),
                (false, false) => out.push_str(&format!(" + {body}")),
                (false, true) => out.push_str(&format!(" - {body}")),
            }
        }
        out
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits at top-level `+`/`-`, keeping exponent signs (`1e-3`) inside terms.
fn split_terms(text: &str) -> Result<Vec<(bool, &str)>> {
    let bytes = text.as_bytes();
    let mut terms = Vec::new();
    let mut start = 0;
    let mut negative = false;
    for i in 0..bytes.len() {
        let b = bytes[i];
        if b != b'+' && b != b'-' {
            continue;
        }
        let in_exponent = i >= 2
            && matches!(bytes[i - 1], b'e' | b'E')
            && (bytes[i - 2].is_ascii_digit() || bytes[i - 2] == b'.');
        if in_exponent {
            continue;
        }
        let piece = text[start..i].trim();
        if piece.is_empty() {
            // unary sign
            if b == b'-' {
                negative = !negative;
            }
            start = i + 1;
            continue;
        }
        terms.push((negative, piece));
        negative = b == b'-';
        start = i + 1;
    }
    let tail = text[start..].trim();
    if tail.is_empty() {
        if !terms.is_empty() || negative {
            return Err(Error::parse(format!("dangling operator in `{text}`")));
        }
    } else {
        terms.push((negative, tail));
    }
    Ok(terms)
}
