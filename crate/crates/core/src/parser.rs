//! Tokenizer and recursive-descent parser for operator expressions.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr     := ["+" | "-"] term (("+" | "-") term)*
//! term     := factor ("*" factor)*
//! factor   := coeff | operator | "(" expr ")"
//! operator := "a" | "ad" | "sig" "(" level "," level ")"
//! coeff    := number ["/" (ident | number)] | ident ["/" (ident | number)] | "i"
//! level    := ident
//! ```
//!
//! `i` is the imaginary unit; `a`, `ad`, `sig` and `i` are reserved. Numbers
//! are decimal literals with an optional exponent (`7e5`, `2.45e8`) and are
//! kept exact. Division is only allowed directly after a coefficient atom, so
//! `g1*g2/delta` reads as `g1 * (g2/delta)`.

use std::collections::BTreeSet;
use std::fmt;

use num::{BigInt, BigRational};

use crate::algebra::{Coefficient, GaussianRational, Level, OperatorExpr, Symbols};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Number,
    Ident,
    SigmaHead,
    Ladder,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// Byte offset of the first character.
    pub position: usize,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`", self.lexeme)
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        let start = pos;
        let kind = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                pos += 1;
                continue;
            }
            b'0'..=b'9' | b'.' => {
                pos = scan_number(bytes, pos).ok_or(Error::IllegalCharacter(start))?;
                TokenKind::Number
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                    pos += 1;
                }
                match &text[start..pos] {
                    "a" | "ad" => TokenKind::Ladder,
                    "sig" => TokenKind::SigmaHead,
                    _ => TokenKind::Ident,
                }
            }
            b'+' | b'-' | b'*' | b'/' | b'(' | b')' | b',' => {
                pos += 1;
                TokenKind::Punct
            }
            _ => return Err(Error::IllegalCharacter(start)),
        };
        tokens.push(Token { kind, lexeme: text[start..pos].to_string(), position: start });
    }
    Ok(tokens)
}

/// Returns the end offset of a number literal starting at `start`.
fn scan_number(bytes: &[u8], start: usize) -> Option<usize> {
    let digits = |mut p: usize| {
        let s = p;
        while p < bytes.len() && bytes[p].is_ascii_digit() {
            p += 1;
        }
        (p, p - s)
    };
    let (mut pos, int_digits) = digits(start);
    let mut frac_digits = 0;
    if pos < bytes.len() && bytes[pos] == b'.' {
        let (p, n) = digits(pos + 1);
        pos = p;
        frac_digits = n;
    }
    if int_digits + frac_digits == 0 {
        return None;
    }
    if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
        let mut p = pos + 1;
        if p < bytes.len() && (bytes[p] == b'+' || bytes[p] == b'-') {
            p += 1;
        }
        let (p, n) = digits(p);
        // `2e` followed by a non-digit is a number then an identifier.
        if n > 0 {
            pos = p;
        }
    }
    Some(pos)
}

/// Exact value of a decimal literal such as `2.45e8` or `1e-3`.
pub fn parse_decimal(lexeme: &str) -> Option<BigRational> {
    let (mantissa, exp) = match lexeme.find(['e', 'E']) {
        Some(i) => (&lexeme[..i], lexeme[i + 1..].parse::<i32>().ok()?),
        None => (lexeme, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits.is_empty() { "0".to_string() } else { digits };
    let n: BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let pow = num::pow(ten, scale.unsigned_abs() as usize);
    Some(if scale >= 0 { BigRational::from_integer(n * pow) } else { BigRational::new(n, pow) })
}

/// Parses an operator expression and returns its canonical form.
pub fn parse_operator_expr(text: &str, declared_levels: &[Level]) -> Result<OperatorExpr> {
    let tokens = tokenize(text)?;
    let levels: BTreeSet<&Level> = declared_levels.iter().collect();
    let mut parser = Parser { tokens: &tokens, pos: 0, end: text.len(), levels };
    let expr = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(Error::Parse { position: tok.position, expected: "`+`, `-`, `*` or end of input".into() });
    }
    Ok(expr)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
    levels: BTreeSet<&'a Level>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.position)
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Punct && t.lexeme == p)
    }

    fn expect_punct(&mut self, p: &str) -> Result<()> {
        if self.is_punct(p) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("`{p}`")))
        }
    }

    fn error(&self, expected: impl Into<String>) -> Error {
        Error::Parse { position: self.here(), expected: expected.into() }
    }

    fn expr(&mut self) -> Result<OperatorExpr> {
        let mut negate = false;
        if self.is_punct("+") || self.is_punct("-") {
            negate = self.is_punct("-");
            self.pos += 1;
        }
        let mut acc = self.term()?;
        if negate {
            acc = -acc;
        }
        loop {
            if self.is_punct("+") {
                self.pos += 1;
                acc = &acc + &self.term()?;
            } else if self.is_punct("-") {
                self.pos += 1;
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<OperatorExpr> {
        let mut acc = self.factor()?;
        while self.is_punct("*") {
            self.pos += 1;
            acc = acc.multiply(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<OperatorExpr> {
        let Some(tok) = self.peek() else {
            return Err(self.error("a coefficient, operator or `(`"));
        };
        match tok.kind {
            TokenKind::Ladder => {
                self.pos += 1;
                Ok(if tok.lexeme == "a" { OperatorExpr::a() } else { OperatorExpr::ad() })
            }
            TokenKind::SigmaHead => {
                self.pos += 1;
                self.expect_punct("(")?;
                let i = self.level()?;
                self.expect_punct(",")?;
                let j = self.level()?;
                self.expect_punct(")")?;
                Ok(OperatorExpr::sigma(i, j))
            }
            TokenKind::Number | TokenKind::Ident => {
                let c = self.coeff()?;
                Ok(OperatorExpr::scalar(c))
            }
            TokenKind::Punct if tok.lexeme == "(" => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_punct(")")?;
                Ok(inner)
            }
            TokenKind::Punct => Err(self.error("a coefficient, operator or `(`")),
        }
    }

    fn coeff_atom(&mut self) -> Result<Coefficient> {
        let tok = self.peek().ok_or_else(|| self.error("a number or parameter"))?;
        let c = match tok.kind {
            TokenKind::Number => {
                let value = parse_decimal(&tok.lexeme).ok_or_else(|| self.error("a number"))?;
                Coefficient::new(GaussianRational::real(value), Symbols::none())
            }
            TokenKind::Ident if tok.lexeme == "i" => Coefficient::i(),
            TokenKind::Ident => Coefficient::symbol(&tok.lexeme),
            _ => return Err(self.error("a number or parameter")),
        };
        self.pos += 1;
        Ok(c)
    }

    fn coeff(&mut self) -> Result<Coefficient> {
        let c = self.coeff_atom()?;
        if !self.is_punct("/") {
            return Ok(c);
        }
        self.pos += 1;
        let at = self.here();
        let divisor = self.coeff_atom()?;
        if divisor.is_zero() {
            return Err(Error::Parse { position: at, expected: "a nonzero divisor".into() });
        }
        if divisor.value.is_one() || divisor.symbols.is_empty() {
            let inv = divisor.inverse().expect("nonzero divisor");
            Ok(&c * &inv)
        } else {
            Err(Error::Parse { position: at, expected: "a parameter or number divisor".into() })
        }
    }

    fn level(&mut self) -> Result<Level> {
        match self.peek() {
            Some(t) if t.kind != TokenKind::Punct && t.kind != TokenKind::Number => {
                self.pos += 1;
                let level = Level::new(t.lexeme.clone());
                if self.levels.contains(&level) {
                    Ok(level)
                } else {
                    Err(Error::UnknownLevel(t.lexeme.clone()))
                }
            }
            _ => Err(self.error("a level label")),
        }
    }
}

/// Default level set `{g, r, e}`.
pub fn default_levels() -> Vec<Level> {
    ["g", "r", "e"].into_iter().map(Level::from).collect()
}

/// Parses a bare coefficient such as `g1*g2/delta` (no operators allowed).
pub fn parse_coefficient(text: &str) -> Result<Coefficient> {
    let expr = parse_operator_expr(text, &[])?;
    let mut terms = expr.terms();
    match (terms.next(), terms.next()) {
        (None, _) => Ok(Coefficient::zero()),
        (Some(m), None) if m.atom == crate::algebra::AtomOp::Identity && m.boson.degree() == 0 => Ok(m.coeff),
        _ => Err(Error::Parse { position: 0, expected: "a single scalar coefficient".into() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<(TokenKind, String)> {
        tokenize(text).unwrap().into_iter().map(|t| (t.kind, t.lexeme)).collect()
    }

    #[test]
    fn tokenizes_product_of_ladders() {
        assert_eq!(
            kinds("a*ad"),
            vec![(TokenKind::Ladder, "a".into()), (TokenKind::Punct, "*".into()), (TokenKind::Ladder, "ad".into())]
        );
    }

    #[test]
    fn tokenizes_channel_term() {
        let toks = tokenize("g1*sig(g,r)*ad").unwrap();
        let lexemes: Vec<_> = toks.iter().map(|t| t.lexeme.as_str()).collect();
        assert_eq!(lexemes, ["g1", "*", "sig", "(", "g", ",", "r", ")", "*", "ad"]);
        assert_eq!(toks.last().unwrap().kind, TokenKind::Ladder);
        assert_eq!(toks[2].kind, TokenKind::SigmaHead);
    }

    #[test]
    fn rejects_non_ascii_operator_head() {
        assert_eq!(tokenize("σ"), Err(Error::IllegalCharacter(0)));
        assert_eq!(tokenize("a + #"), Err(Error::IllegalCharacter(4)));
    }

    #[test]
    fn number_literals() {
        assert_eq!(kinds("2.45e8")[0].1, "2.45e8");
        assert_eq!(
            kinds("7e5*g"),
            vec![(TokenKind::Number, "7e5".into()), (TokenKind::Punct, "*".into()), (TokenKind::Ident, "g".into()),]
        );
        assert_eq!(parse_decimal("2.45e8").unwrap(), BigRational::from_integer(245_000_000.into()));
        assert_eq!(parse_decimal("1e-3").unwrap(), BigRational::new(1.into(), 1000.into()));
        assert_eq!(parse_decimal("0.5").unwrap(), BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn single_monomial() {
        let x = parse_operator_expr("sig(g,r)*ad", &default_levels()).unwrap();
        assert_eq!(x, OperatorExpr::sigma("g", "r") * OperatorExpr::ad());
    }

    #[test]
    fn coupling_terms() {
        let x = parse_operator_expr("g1*sig(g,r)*ad + g2*sig(e,r)*a", &default_levels()).unwrap();
        let expected = (OperatorExpr::sigma("g", "r") * OperatorExpr::ad()).scale(&Coefficient::symbol("g1"))
            + (OperatorExpr::sigma("e", "r") * OperatorExpr::a()).scale(&Coefficient::symbol("g2"));
        assert_eq!(x, expected);
        assert_eq!(x.len(), 2);
    }

    #[test]
    fn canonicalizes_on_parse() {
        let x = parse_operator_expr("a*ad", &[]).unwrap();
        assert_eq!(x, OperatorExpr::boson(1, 1) + OperatorExpr::one());
    }

    #[test]
    fn division_and_imaginary_unit() {
        let c = parse_coefficient("g1*g2/delta").unwrap();
        assert_eq!(c, Coefficient::ratio_of_symbols(&["g1", "g2"], &["delta"]));
        let c = parse_coefficient("3/4*i").unwrap();
        assert_eq!(c, &Coefficient::rational(3, 4) * &Coefficient::i());
        assert!(matches!(parse_coefficient("1/0"), Err(Error::Parse { position: 2, .. })));
    }

    #[test]
    fn error_positions() {
        let levels = default_levels();
        assert_eq!(parse_operator_expr("sig(g,x)", &levels), Err(Error::UnknownLevel("x".into())));
        match parse_operator_expr("g1 * ", &levels) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 5),
            other => panic!("{other:?}"),
        }
        match parse_operator_expr("a ad", &levels) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 2),
            other => panic!("{other:?}"),
        }
        match parse_operator_expr("sig(g r)", &levels) {
            Err(Error::Parse { position, expected }) => {
                assert_eq!(position, 6);
                assert_eq!(expected, "`,`");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn leading_sign_and_parentheses() {
        let x = parse_operator_expr("-(a + ad)*2", &[]).unwrap();
        let expected = (OperatorExpr::a() + OperatorExpr::ad()).scale(&Coefficient::integer(-2));
        assert_eq!(x, expected);
    }

    #[test]
    fn pretty_print_reparses() {
        let levels = default_levels();
        for text in [
            "g1*g1/delta*sig(g,g)*ad*a - g2*g2/delta*sig(r,r)*a*ad",
            "(1/2 + 3*i)*Omega/delta*sig(e,g)*a*a + 1/delta*1/delta",
            "-i*sig(g,e) + 0.25*ad",
            "0",
        ] {
            let x = parse_operator_expr(text, &levels).unwrap();
            let printed = x.to_string();
            let y = parse_operator_expr(&printed, &levels).unwrap();
            assert_eq!(x, y, "{text} -> {printed}");
        }
    }
}
