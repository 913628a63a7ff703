//! Exact scalar coefficients: a Gaussian rational times a product of real
//! parameter symbols raised to (possibly negative) integer powers.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Mul, Neg};

use num::{BigInt, BigRational, One, Signed, Zero};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::Params;

/// Exact complex rational `re + i·im`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        Self { re, im: BigRational::zero() }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::real(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn i() -> Self {
        Self { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }

    pub fn add_assign_ref(&mut self, other: &Self) {
        self.re += &other.re;
        self.im += &other.im;
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;

    fn mul(self, rhs: Self) -> GaussianRational {
        GaussianRational { re: &self.re * &rhs.re - &self.im * &rhs.im, im: &self.re * &rhs.im + &self.im * &rhs.re }
    }
}

impl Neg for GaussianRational {
    type Output = GaussianRational;

    fn neg(self) -> GaussianRational {
        GaussianRational { re: -self.re, im: -self.im }
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // Fallback for ratios whose parts overflow f64 individually.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Product of parameter symbols with integer exponents. Positive exponents sit
/// in the numerator, negative ones in the denominator; zero exponents are never
/// stored, so a symbol can't appear on both sides.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Symbols(BTreeMap<String, i32>);

impl Symbols {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn symbol(name: &str) -> Self {
        Self::power(name, 1)
    }

    pub fn power(name: &str, exponent: i32) -> Self {
        let mut map = BTreeMap::new();
        if exponent != 0 {
            map.insert(name.to_string(), exponent);
        }
        Self(map)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, name: &str) -> i32 {
        self.0.get(name).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i32)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Numerator symbols as a multiset (sorted, with repetition).
    pub fn numerator(&self) -> Vec<&str> {
        self.expand(|e| e > 0)
    }

    /// Denominator symbols as a multiset (sorted, with repetition).
    pub fn denominator(&self) -> Vec<&str> {
        self.expand(|e| e < 0)
    }

    fn expand(&self, side: impl Fn(i32) -> bool) -> Vec<&str> {
        self.0
            .iter()
            .filter(|(_, &e)| side(e))
            .flat_map(|(k, &e)| std::iter::repeat_n(k.as_str(), e.unsigned_abs() as usize))
            .collect()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().map(|(k, v)| (k.clone(), -v)).collect())
    }

    pub fn evaluate(&self, params: &Params) -> Result<f64> {
        self.0.iter().try_fold(1.0, |acc, (name, &e)| Ok(acc * params.get(name)?.powi(e)))
    }
}

impl Mul for &Symbols {
    type Output = Symbols;

    fn mul(self, rhs: Self) -> Symbols {
        let mut out = self.0.clone();
        for (k, v) in &rhs.0 {
            let e = out.entry(k.clone()).or_insert(0);
            *e += v;
            if *e == 0 {
                out.remove(k);
            }
        }
        Symbols(out)
    }
}

/// Scalar coefficient of a monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coefficient {
    pub value: GaussianRational,
    pub symbols: Symbols,
}

impl Coefficient {
    pub fn new(value: GaussianRational, symbols: Symbols) -> Self {
        let symbols = if value.is_zero() { Symbols::none() } else { symbols };
        Self { value, symbols }
    }

    pub fn one() -> Self {
        Self::new(GaussianRational::one(), Symbols::none())
    }

    pub fn zero() -> Self {
        Self::new(GaussianRational::zero(), Symbols::none())
    }

    pub fn integer(n: i64) -> Self {
        Self::new(GaussianRational::from_integer(n), Symbols::none())
    }

    pub fn rational(numer: i64, denom: i64) -> Self {
        let r = BigRational::new(BigInt::from(numer), BigInt::from(denom));
        Self::new(GaussianRational::real(r), Symbols::none())
    }

    pub fn i() -> Self {
        Self::new(GaussianRational::i(), Symbols::none())
    }

    pub fn symbol(name: &str) -> Self {
        Self::new(GaussianRational::one(), Symbols::symbol(name))
    }

    /// `num_1 · num_2 · … / (den_1 · den_2 · …)` with unit rational part.
    pub fn ratio_of_symbols(numerator: &[&str], denominator: &[&str]) -> Self {
        let num = numerator.iter().fold(Symbols::none(), |acc, s| &acc * &Symbols::symbol(s));
        let sym = denominator.iter().fold(num, |acc, s| &acc * &Symbols::power(s, -1));
        Self::new(GaussianRational::one(), sym)
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.value.is_real()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.value.conj(), self.symbols.clone())
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inverse(&self) -> Option<Self> {
        if self.value.is_zero() {
            return None;
        }
        let v = &self.value;
        let norm = &v.re * &v.re + &v.im * &v.im;
        let value = GaussianRational::new(&v.re / &norm, -(&v.im / &norm));
        Some(Self::new(value, self.symbols.inverse()))
    }

    pub fn numerator_symbols(&self) -> Vec<&str> {
        self.symbols.numerator()
    }

    pub fn denominator_symbols(&self) -> Vec<&str> {
        self.symbols.denominator()
    }

    pub fn evaluate(&self, params: &Params) -> Result<Complex64> {
        Ok(self.value.to_complex() * self.symbols.evaluate(params)?)
    }

    /// Real value of a real coefficient; errors on a complex one.
    pub fn evaluate_real(&self, params: &Params) -> Result<f64> {
        if !self.is_real() {
            return Err(Error::InvalidSpec(format!("coefficient `{self}` is not real")));
        }
        Ok(ratio_to_f64(&self.value.re) * self.symbols.evaluate(params)?)
    }
}

impl Mul for &Coefficient {
    type Output = Coefficient;

    fn mul(self, rhs: Self) -> Coefficient {
        Coefficient::new(&self.value * &rhs.value, &self.symbols * &rhs.symbols)
    }
}

impl Mul for Coefficient {
    type Output = Coefficient;

    fn mul(self, rhs: Self) -> Coefficient {
        &self * &rhs
    }
}

impl Neg for Coefficient {
    type Output = Coefficient;

    fn neg(self) -> Coefficient {
        Coefficient::new(-self.value, self.symbols)
    }
}

/// Writes the magnitude part of a coefficient as `*`-joined factors, without a
/// leading sign, e.g. `g1*g2/delta` or `3/2*i*g1`. Returns `true` if anything
/// was written. The caller decides the sign via [`Coefficient::sign_split`].
pub(crate) fn write_factors(
    f: &mut fmt::Formatter<'_>,
    value: &GaussianRational,
    symbols: &Symbols,
) -> Result<bool, fmt::Error> {
    let mut parts: Vec<String> = Vec::new();
    let re0 = value.re.is_zero();
    let im0 = value.im.is_zero();
    if re0 && !im0 {
        if !value.im.is_one() {
            parts.push(rational_string(&value.im));
        }
        parts.push("i".into());
    } else if !re0 && im0 {
        if !value.re.is_one() {
            parts.push(rational_string(&value.re));
        }
    } else {
        let sign = if value.im.is_negative() { "-" } else { "+" };
        parts.push(format!("({} {} {}*i)", rational_string(&value.re), sign, rational_string(&value.im.abs())));
    }
    let numer = symbols.numerator();
    let denom = symbols.denominator();
    let mut sym_parts: Vec<String> = numer.iter().map(|s| s.to_string()).collect();
    for (idx, d) in denom.iter().enumerate() {
        if idx == 0 && !sym_parts.is_empty() {
            let last = sym_parts.pop().unwrap_or_default();
            sym_parts.push(format!("{last}/{d}"));
        } else {
            sym_parts.push(format!("1/{d}"));
        }
    }
    parts.extend(sym_parts);
    if parts.is_empty() {
        return Ok(false);
    }
    write!(f, "{}", parts.join("*"))?;
    Ok(true)
}

fn rational_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl Coefficient {
    /// Splits into (is_negative, magnitude) where a purely real or purely
    /// imaginary coefficient with a negative part is flipped positive.
    pub(crate) fn sign_split(&self) -> (bool, GaussianRational) {
        let v = &self.value;
        let negative = if v.im.is_zero() {
            v.re.is_negative()
        } else if v.re.is_zero() {
            v.im.is_negative()
        } else {
            false
        };
        if negative {
            (true, -v.clone())
        } else {
            (false, v.clone())
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (neg, mag) = self.sign_split();
        if neg {
            write!(f, "-")?;
        }
        if !write_factors(f, &mag, &self.symbols)? {
            write!(f, "1")?;
        }
        Ok(())
    }
}
