//! Polynomial potential mini-language.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor ('*' factor)*
//! factor   := ('+' | '-') factor | atom ('^' exponent)?
//! atom     := number | 'i' | 'x' | '(' expr ')'
//! exponent := nonnegative integer literal (at most 64)
//! number   := digits ['.' digits] [('e'|'E') ['+'|'-'] digits]
//! ```
//!
//! Everything else is rejected with a byte-offset-annotated error; division
//! and negative exponents are flagged as non-polynomial rather than as plain
//! syntax errors.

use crate::error::Error;
use crate::linop::{C64, ZERO};
use crate::Result;
use std::fmt;

/// Largest accepted exponent; keeps degrees and memory sane.
const MAX_EXPONENT: f64 = 64.0;

/// A polynomial with complex coefficients, `coeffs[k]` multiplying `x^k`.
/// Canonical form: trailing zero coefficients trimmed, negative zeros
/// normalized, so equal polynomials compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyPotential {
    coeffs: Vec<C64>,
}

impl PolyPotential {
    pub fn new(coeffs: Vec<C64>) -> Self {
        let mut coeffs: Vec<C64> = coeffs
            .into_iter()
            .map(|c| C64::new(c.re + 0.0, c.im + 0.0))
            .collect();
        while coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        PolyPotential { coeffs }
    }

    /// Coefficients in ascending power order; empty for the zero polynomial.
    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Horner evaluation at a real point.
    pub fn eval(&self, x: f64) -> C64 {
        let mut acc = ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc * C64::new(x, 0.0) + c;
        }
        acc
    }
}

impl fmt::Display for PolyPotential {
    /// Canonical text that `parse_potential` maps back to the identical
    /// coefficient sequence. Floats use the shortest round-trip decimal form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            if wrote {
                f.write_str(" + ")?;
            }
            let coeff = if c.im == 0.0 {
                format!("{}", c.re)
            } else if c.re == 0.0 {
                format!("{}*i", c.im)
            } else if c.im < 0.0 {
                format!("({} - {}*i)", c.re, -c.im)
            } else {
                format!("({} + {}*i)", c.re, c.im)
            };
            match k {
                0 => write!(f, "{coeff}")?,
                1 => write!(f, "{coeff}*x")?,
                _ => write!(f, "{coeff}*x^{k}")?,
            }
            wrote = true;
        }
        if !wrote {
            f.write_str("0")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Token {
    Num(f64),
    ImagUnit,
    Var,
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Token, usize)>> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0usize;
    while pos < bytes.len() {
        let b = bytes[pos];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => pos += 1,
            b'+' => {
                tokens.push((Token::Plus, pos));
                pos += 1;
            }
            b'-' => {
                tokens.push((Token::Minus, pos));
                pos += 1;
            }
            b'*' => {
                tokens.push((Token::Star, pos));
                pos += 1;
            }
            b'^' => {
                tokens.push((Token::Caret, pos));
                pos += 1;
            }
            b'(' => {
                tokens.push((Token::LParen, pos));
                pos += 1;
            }
            b')' => {
                tokens.push((Token::RParen, pos));
                pos += 1;
            }
            b'/' => {
                return Err(Error::NonPolynomial {
                    position: pos,
                    what: "division".to_string(),
                })
            }
            b'i' => {
                tokens.push((Token::ImagUnit, pos));
                pos += 1;
            }
            b'x' => {
                tokens.push((Token::Var, pos));
                pos += 1;
            }
            b'0'..=b'9' => {
                let start = pos;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'.' {
                    pos += 1;
                    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                        pos += 1;
                    }
                }
                if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
                    let mut probe = pos + 1;
                    if probe < bytes.len() && (bytes[probe] == b'+' || bytes[probe] == b'-') {
                        probe += 1;
                    }
                    if probe < bytes.len() && bytes[probe].is_ascii_digit() {
                        pos = probe;
                        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                            pos += 1;
                        }
                    }
                }
                let text = &src[start..pos];
                let value: f64 = text.parse().map_err(|_| Error::Syntax {
                    position: start,
                    expected: "a real literal".to_string(),
                })?;
                if !value.is_finite() {
                    return Err(Error::Syntax {
                        position: start,
                        expected: "a literal representable in f64".to_string(),
                    });
                }
                tokens.push((Token::Num(value), start));
            }
            _ => {
                return Err(Error::Syntax {
                    position: pos,
                    expected: "a number, 'i', 'x', or an operator".to_string(),
                })
            }
        }
    }
    Ok(tokens)
}

/// Dense coefficient vectors, lowest power first.
type Poly = Vec<C64>;

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![ZERO; a.len().max(b.len())];
    for (i, &c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, &c) in b.iter().enumerate() {
        out[i] += c;
    }
    out
}

fn poly_neg(a: &Poly) -> Poly {
    a.iter().map(|c| -c).collect()
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, &ca) in a.iter().enumerate() {
        if ca == ZERO {
            continue;
        }
        for (j, &cb) in b.iter().enumerate() {
            out[i + j] += ca * cb;
        }
    }
    out
}

fn poly_pow(a: &Poly, k: u32) -> Poly {
    let mut out = vec![C64::new(1.0, 0.0)];
    for _ in 0..k {
        out = poly_mul(&out, a);
    }
    out
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    cursor: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.cursor).map(|&(t, _)| t)
    }

    fn position(&self) -> usize {
        self.tokens
            .get(self.cursor)
            .map_or(self.end, |&(_, p)| p)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.peek();
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn syntax(&self, expected: &str) -> Error {
        Error::Syntax {
            position: self.position(),
            expected: expected.to_string(),
        }
    }

    fn parse_expr(&mut self) -> Result<Poly> {
        let mut acc = self.parse_term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.advance();
                    let t = self.parse_term()?;
                    acc = poly_add(&acc, &t);
                }
                Some(Token::Minus) => {
                    self.advance();
                    let t = self.parse_term()?;
                    acc = poly_add(&acc, &poly_neg(&t));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Poly> {
        let mut acc = self.parse_factor()?;
        while self.peek() == Some(Token::Star) {
            self.advance();
            let f = self.parse_factor()?;
            acc = poly_mul(&acc, &f);
        }
        Ok(acc)
    }

    fn parse_factor(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(Token::Plus) => {
                self.advance();
                self.parse_factor()
            }
            Some(Token::Minus) => {
                self.advance();
                Ok(poly_neg(&self.parse_factor()?))
            }
            _ => {
                let base = self.parse_atom()?;
                if self.peek() != Some(Token::Caret) {
                    return Ok(base);
                }
                self.advance();
                match self.peek() {
                    Some(Token::Minus) => Err(Error::NonPolynomial {
                        position: self.position(),
                        what: "negative exponent".to_string(),
                    }),
                    Some(Token::Num(v)) if v.fract() == 0.0 && (0.0..=MAX_EXPONENT).contains(&v) => {
                        self.advance();
                        Ok(poly_pow(&base, v as u32))
                    }
                    _ => Err(self.syntax("a nonnegative integer exponent (at most 64)")),
                }
            }
        }
    }

    fn parse_atom(&mut self) -> Result<Poly> {
        let position = self.position();
        match self.advance() {
            Some(Token::Num(v)) => Ok(vec![C64::new(v, 0.0)]),
            Some(Token::ImagUnit) => Ok(vec![C64::new(0.0, 1.0)]),
            Some(Token::Var) => Ok(vec![ZERO, C64::new(1.0, 0.0)]),
            Some(Token::LParen) => {
                let inner = self.parse_expr()?;
                if self.advance() != Some(Token::RParen) {
                    return Err(Error::Syntax {
                        position: self.position().min(self.end),
                        expected: "')'".to_string(),
                    });
                }
                Ok(inner)
            }
            _ => Err(Error::Syntax {
                position,
                expected: "a value".to_string(),
            }),
        }
    }
}

/// Parses expression text into a canonical polynomial.
pub fn parse_potential(src: &str) -> Result<PolyPotential> {
    let tokens = lex(src)?;
    let mut parser = Parser {
        tokens,
        cursor: 0,
        end: src.len(),
    };
    let poly = parser.parse_expr()?;
    if parser.cursor != parser.tokens.len() {
        return Err(parser.syntax("an operator or end of input"));
    }
    for c in &poly {
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::Syntax {
                position: 0,
                expected: "coefficients representable in f64 (expression overflows)".to_string(),
            });
        }
    }
    Ok(PolyPotential::new(poly))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn catalog_examples() {
        let p = parse_potential("x^2 + i*x^3").unwrap();
        assert_eq!(p.coefficients(), &[ZERO, ZERO, c(1.0, 0.0), c(0.0, 1.0)]);

        let p = parse_potential("2.5").unwrap();
        assert_eq!(p.coefficients(), &[c(2.5, 0.0)]);

        let err = parse_potential("x*(").unwrap_err();
        assert_eq!(
            err,
            Error::Syntax { position: 3, expected: "a value".to_string() }
        );
    }

    #[test]
    fn division_and_negative_exponents_are_non_polynomial() {
        let err = parse_potential("x/2").unwrap_err();
        assert!(matches!(err, Error::NonPolynomial { position: 1, .. }));
        let err = parse_potential("x^-1").unwrap_err();
        assert!(matches!(err, Error::NonPolynomial { .. }));
        let err = parse_potential("x^2.5").unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }));
    }

    #[test]
    fn precedence_and_unary_minus() {
        let p = parse_potential("1 + 2*x^2").unwrap();
        assert_eq!(p.eval(2.0), c(9.0, 0.0));
        let p = parse_potential("-x^2").unwrap();
        assert_eq!(p.eval(3.0), c(-9.0, 0.0));
        let p = parse_potential("(1 + x)^2").unwrap();
        assert_eq!(p.coefficients(), &[c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        let p = parse_potential("2*-3").unwrap();
        assert_eq!(p.coefficients(), &[c(-6.0, 0.0)]);
        let p = parse_potential("i*i").unwrap();
        assert_eq!(p.coefficients(), &[c(-1.0, 0.0)]);
    }

    #[test]
    fn error_positions() {
        assert_eq!(
            parse_potential("").unwrap_err(),
            Error::Syntax { position: 0, expected: "a value".to_string() }
        );
        // Leftover token after a complete expression.
        let err = parse_potential("x x").unwrap_err();
        assert!(matches!(err, Error::Syntax { position: 2, .. }));
        // Unknown character.
        let err = parse_potential("x + y").unwrap_err();
        assert!(matches!(err, Error::Syntax { position: 4, .. }));
        // Unclosed parenthesis at end of input.
        let err = parse_potential("(x + 1").unwrap_err();
        assert!(matches!(err, Error::Syntax { position: 6, .. }));
    }

    #[test]
    fn evaluation_matches_branch_example() {
        let p = parse_potential("i*x^3").unwrap();
        assert_eq!(p.eval(2.0), c(0.0, 8.0));
    }

    #[test]
    fn display_round_trips_explicit_cases() {
        let cases = [
            PolyPotential::new(vec![c(2.5, 0.0)]),
            PolyPotential::new(vec![ZERO, c(-1.5, 0.0), c(2.3, -4.1)]),
            PolyPotential::new(vec![c(0.0, -1.0), ZERO, ZERO, c(0.1, 0.0)]),
            PolyPotential::new(vec![]),
            PolyPotential::new(vec![ZERO, ZERO, c(1.0, 0.0), c(0.0, 1.0)]),
        ];
        for p in cases {
            let text = p.to_string();
            let back = parse_potential(&text).unwrap();
            assert_eq!(back, p, "round trip through {text:?}");
        }
    }

    #[test]
    fn zero_polynomial_prints_as_zero() {
        assert_eq!(PolyPotential::new(vec![]).to_string(), "0");
        assert_eq!(PolyPotential::new(vec![ZERO, ZERO]).to_string(), "0");
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(
            parts in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 0..7),
            zero_mask in proptest::collection::vec(0u8..4, 0..7),
        ) {
            let coeffs: Vec<C64> = parts
                .iter()
                .zip(zero_mask.iter().chain(std::iter::repeat(&0)))
                .map(|(&(re, im), &m)| match m {
                    1 => c(re, 0.0),
                    2 => c(0.0, im),
                    3 => ZERO,
                    _ => c(re, im),
                })
                .collect();
            let p = PolyPotential::new(coeffs);
            let back = parse_potential(&p.to_string()).unwrap();
            prop_assert_eq!(back, p);
        }

        #[test]
        fn eval_is_finite_on_grid_scale_inputs(
            parts in proptest::collection::vec((-10f64..10.0, -10f64..10.0), 0..5),
            x in -20f64..20.0,
        ) {
            let p = PolyPotential::new(parts.iter().map(|&(re, im)| c(re, im)).collect());
            let v = p.eval(x);
            prop_assert!(v.re.is_finite() && v.im.is_finite());
        }
    }
}
