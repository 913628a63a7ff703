//! Canonical sums of monomials `coefficient × atomic operator × a†^m a^n`.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::coefficient::{write_factors, Coefficient, GaussianRational, Symbols};
use crate::error::{Error, Result};

/// Atomic level label such as `g`, `r` or `e`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Level(String);

impl Level {
    pub fn new(label: impl Into<String>) -> Self {
        Self(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Level {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

/// Atomic part of a monomial: the identity or a transition `σ_ij = |i⟩⟨j|`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomOp {
    Identity,
    Transition(Level, Level),
}

impl AtomOp {
    pub fn sigma(i: impl Into<Level>, j: impl Into<Level>) -> Self {
        AtomOp::Transition(i.into(), j.into())
    }

    /// `σ_ij σ_kl = δ_jk σ_il`.
    pub fn mul(&self, other: &AtomOp) -> Option<AtomOp> {
        match (self, other) {
            (AtomOp::Identity, x) | (x, AtomOp::Identity) => Some(x.clone()),
            (AtomOp::Transition(i, j), AtomOp::Transition(k, l)) => {
                (j == k).then(|| AtomOp::Transition(i.clone(), l.clone()))
            }
        }
    }

    pub fn adjoint(&self) -> AtomOp {
        match self {
            AtomOp::Identity => AtomOp::Identity,
            AtomOp::Transition(i, j) => AtomOp::Transition(j.clone(), i.clone()),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        match self {
            AtomOp::Identity => true,
            AtomOp::Transition(i, j) => i == j,
        }
    }

    pub fn touches(&self, level: &Level) -> bool {
        matches!(self, AtomOp::Transition(i, j) if i == level || j == level)
    }
}

/// Normal-ordered boson string `a†^creators a^annihilators`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BosonString {
    pub creators: u32,
    pub annihilators: u32,
}

impl BosonString {
    pub const IDENTITY: BosonString = BosonString { creators: 0, annihilators: 0 };

    pub fn new(creators: u32, annihilators: u32) -> Self {
        Self { creators, annihilators }
    }

    pub fn degree(&self) -> u32 {
        self.creators + self.annihilators
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.annihilators, self.creators)
    }

    /// Normal-ordered product `(a†^m a^n)(a†^p a^q)` as a weighted sum, using
    /// `a^n a†^p = Σ_k C(n,k) C(p,k) k! a†^(p-k) a^(n-k)`.
    pub fn mul(&self, other: &BosonString) -> Vec<(u64, BosonString)> {
        let n = self.annihilators;
        let p = other.creators;
        (0..=n.min(p))
            .map(|k| {
                let weight = binomial(n, k) * binomial(p, k) * factorial(k);
                (weight, BosonString::new(self.creators + p - k, n - k + other.annihilators))
            })
            .collect()
    }
}

impl Ord for BosonString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.creators.cmp(&self.creators))
    }
}

impl PartialOrd for BosonString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn binomial(n: u32, k: u32) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * u64::from(n - i) / u64::from(i + 1))
}

fn factorial(k: u32) -> u64 {
    (1..=u64::from(k)).product()
}

/// Everything that identifies a monomial except its numeric value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct TermKey {
    atom: AtomOp,
    boson: BosonString,
    symbols: Symbols,
}

/// One term of an [`OperatorExpr`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: Coefficient,
    pub atom: AtomOp,
    pub boson: BosonString,
}

impl Monomial {
    pub fn new(coeff: Coefficient, atom: AtomOp, boson: BosonString) -> Self {
        Self { coeff, atom, boson }
    }
}

/// Canonical operator expression.
///
/// Terms are kept sorted by atomic part, then boson degree, then creator count
/// (more creators first), then symbol signature. Like terms are merged and
/// zero terms dropped, so structural equality is operator equality. The
/// identity atom is not expanded into `Σ σ_ii`, since an expression carries no
/// level set of its own.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OperatorExpr {
    terms: BTreeMap<TermKey, GaussianRational>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::scalar(Coefficient::one())
    }

    pub fn scalar(c: Coefficient) -> Self {
        Self::from_monomial(Monomial::new(c, AtomOp::Identity, BosonString::IDENTITY))
    }

    /// Annihilation operator `a`.
    pub fn a() -> Self {
        Self::boson(0, 1)
    }

    /// Creation operator `a†`.
    pub fn ad() -> Self {
        Self::boson(1, 0)
    }

    pub fn boson(creators: u32, annihilators: u32) -> Self {
        Self::from_monomial(Monomial::new(
            Coefficient::one(),
            AtomOp::Identity,
            BosonString::new(creators, annihilators),
        ))
    }

    pub fn sigma(i: impl Into<Level>, j: impl Into<Level>) -> Self {
        Self::from_monomial(Monomial::new(Coefficient::one(), AtomOp::sigma(i, j), BosonString::IDENTITY))
    }

    pub fn from_monomial(m: Monomial) -> Self {
        let mut out = Self::zero();
        out.accumulate(m.atom, m.boson, m.coeff);
        out
    }

    fn accumulate(&mut self, atom: AtomOp, boson: BosonString, coeff: Coefficient) {
        if coeff.is_zero() {
            return;
        }
        let key = TermKey { atom, boson, symbols: coeff.symbols };
        match self.terms.entry(key) {
            Entry::Vacant(v) => {
                v.insert(coeff.value);
            }
            Entry::Occupied(mut o) => {
                o.get_mut().add_assign_ref(&coeff.value);
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.iter().map(|(k, v)| Monomial {
            coeff: Coefficient::new(v.clone(), k.symbols.clone()),
            atom: k.atom.clone(),
            boson: k.boson,
        })
    }

    pub fn from_terms(terms: impl IntoIterator<Item = Monomial>) -> Self {
        let mut out = Self::zero();
        for m in terms {
            out.accumulate(m.atom, m.boson, m.coeff);
        }
        out
    }

    pub fn add(&self, other: &OperatorExpr) -> OperatorExpr {
        let mut out = self.clone();
        for m in other.terms() {
            out.accumulate(m.atom, m.boson, m.coeff);
        }
        out
    }

    pub fn scale(&self, c: &Coefficient) -> OperatorExpr {
        Self::from_terms(self.terms().map(|m| Monomial::new(&m.coeff * c, m.atom, m.boson)))
    }

    pub fn multiply(&self, other: &OperatorExpr) -> OperatorExpr {
        let mut out = Self::zero();
        for x in self.terms() {
            for y in other.terms() {
                let Some(atom) = x.atom.mul(&y.atom) else { continue };
                let coeff = &x.coeff * &y.coeff;
                for (weight, boson) in x.boson.mul(&y.boson) {
                    let w = Coefficient::integer(weight as i64);
                    out.accumulate(atom.clone(), boson, &coeff * &w);
                }
            }
        }
        out
    }

    /// Hermitian conjugate. Parameter symbols are real.
    pub fn adjoint(&self) -> OperatorExpr {
        Self::from_terms(self.terms().map(|m| Monomial::new(m.coeff.conj(), m.atom.adjoint(), m.boson.adjoint())))
    }

    /// `XY − YX`.
    pub fn commutator(&self, other: &OperatorExpr) -> OperatorExpr {
        &self.multiply(other) - &other.multiply(self)
    }

    /// Drops every `σ_rr` term. Any surviving `σ_ir` or `σ_ri` means the level
    /// still couples to the rest of the manifold, which is an error.
    pub fn project_out_level(&self, level: &Level) -> Result<OperatorExpr> {
        let kept = Self::from_terms(
            self.terms().filter(|m| !matches!(&m.atom, AtomOp::Transition(i, j) if i == level && j == level)),
        );
        if kept.terms().any(|m| m.atom.touches(level)) {
            return Err(Error::ResidualCoupling(level.to_string()));
        }
        Ok(kept)
    }

    /// Highest `m + n` over all terms.
    pub fn max_boson_degree(&self) -> u32 {
        self.terms.keys().map(|k| k.boson.degree()).max().unwrap_or(0)
    }

    pub fn max_creators(&self) -> u32 {
        self.terms.keys().map(|k| k.boson.creators).max().unwrap_or(0)
    }

    pub fn levels(&self) -> BTreeSet<Level> {
        let mut out = BTreeSet::new();
        for k in self.terms.keys() {
            if let AtomOp::Transition(i, j) = &k.atom {
                out.insert(i.clone());
                out.insert(j.clone());
            }
        }
        out
    }

    pub fn symbols(&self) -> BTreeSet<String> {
        self.terms.keys().flat_map(|k| k.symbols.iter().map(|(s, _)| s.to_string())).collect()
    }

    pub fn is_hermitian(&self) -> bool {
        *self == self.adjoint()
    }
}

impl Add for &OperatorExpr {
    type Output = OperatorExpr;
    fn add(self, rhs: Self) -> OperatorExpr {
        OperatorExpr::add(self, rhs)
    }
}

impl Add for OperatorExpr {
    type Output = OperatorExpr;
    fn add(self, rhs: Self) -> OperatorExpr {
        OperatorExpr::add(&self, &rhs)
    }
}

impl Sub for &OperatorExpr {
    type Output = OperatorExpr;
    fn sub(self, rhs: Self) -> OperatorExpr {
        OperatorExpr::add(self, &rhs.scale(&Coefficient::integer(-1)))
    }
}

impl Sub for OperatorExpr {
    type Output = OperatorExpr;
    fn sub(self, rhs: Self) -> OperatorExpr {
        &self - &rhs
    }
}

impl Mul for &OperatorExpr {
    type Output = OperatorExpr;
    fn mul(self, rhs: Self) -> OperatorExpr {
        self.multiply(rhs)
    }
}

impl Mul for OperatorExpr {
    type Output = OperatorExpr;
    fn mul(self, rhs: Self) -> OperatorExpr {
        self.multiply(&rhs)
    }
}

impl Neg for OperatorExpr {
    type Output = OperatorExpr;
    fn neg(self) -> OperatorExpr {
        self.scale(&Coefficient::integer(-1))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (neg, mag) = self.coeff.sign_split();
        if neg {
            f.write_str("-")?;
        }
        write_unsigned(f, &mag, self)
    }
}

fn write_unsigned(f: &mut fmt::Formatter<'_>, mag: &GaussianRational, m: &Monomial) -> fmt::Result {
    let mut wrote = write_factors(f, mag, &m.coeff.symbols)?;
    let sep = |f: &mut fmt::Formatter<'_>, wrote: &mut bool| -> fmt::Result {
        if *wrote {
            f.write_str("*")?;
        }
        *wrote = true;
        Ok(())
    };
    if let AtomOp::Transition(i, j) = &m.atom {
        sep(f, &mut wrote)?;
        write!(f, "sig({i},{j})")?;
    }
    for _ in 0..m.boson.creators {
        sep(f, &mut wrote)?;
        f.write_str("ad")?;
    }
    for _ in 0..m.boson.annihilators {
        sep(f, &mut wrote)?;
        f.write_str("a")?;
    }
    if !wrote {
        f.write_str("1")?;
    }
    Ok(())
}

/// Normalized text form; reparses to an equal expression.
impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (idx, m) in self.terms().enumerate() {
            let (neg, mag) = m.coeff.sign_split();
            match (idx, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            write_unsigned(f, &mag, &m)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(i: &str, j: &str) -> OperatorExpr {
        OperatorExpr::sigma(i, j)
    }

    #[test]
    fn transition_contraction() {
        assert_eq!(sig("g", "r") * sig("r", "g"), sig("g", "g"));
        assert!((sig("g", "r") * sig("g", "r")).is_zero());
    }

    #[test]
    fn canonical_commutation() {
        let aad = OperatorExpr::a() * OperatorExpr::ad();
        assert_eq!(aad, OperatorExpr::boson(1, 1) + OperatorExpr::one());
        assert_eq!(OperatorExpr::a().commutator(&OperatorExpr::ad()), OperatorExpr::one());
    }

    #[test]
    fn combined_contraction() {
        let x = sig("g", "r") * OperatorExpr::ad();
        let y = sig("r", "g") * OperatorExpr::a();
        assert_eq!(x * y, sig("g", "g") * OperatorExpr::boson(1, 1));
    }

    #[test]
    fn commutator_of_raising_pair() {
        let x = sig("g", "r") * OperatorExpr::ad();
        let y = sig("r", "g") * OperatorExpr::a();
        let expected = &(&(sig("g", "g") * OperatorExpr::boson(1, 1)) - &(sig("r", "r") * OperatorExpr::boson(1, 1)))
            - &sig("r", "r");
        assert_eq!(x.commutator(&y), expected);
    }

    #[test]
    fn adjoint_basics() {
        let x = sig("g", "r") * OperatorExpr::ad();
        assert_eq!(x.adjoint(), sig("r", "g") * OperatorExpr::a());
        let ig = sig("g", "g").scale(&Coefficient::i());
        assert_eq!(ig.adjoint(), sig("g", "g").scale(&-Coefficient::i()));
    }

    #[test]
    fn additive_inverse_vanishes() {
        let x = sig("g", "r") * OperatorExpr::ad() + OperatorExpr::boson(2, 1);
        assert!(OperatorExpr::add(&x, &x.scale(&Coefficient::integer(-1))).is_zero());
    }

    #[test]
    fn scale_records_symbol_signature() {
        let c = Coefficient::ratio_of_symbols(&["g1", "g2"], &["delta"]);
        let x = sig("g", "g").scale(&c);
        let terms: Vec<_> = x.terms().collect();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].coeff, c);
        assert_eq!(terms[0].coeff.numerator_symbols(), vec!["g1", "g2"]);
        assert_eq!(terms[0].coeff.denominator_symbols(), vec!["delta"]);
    }

    #[test]
    fn projection_drops_diagonal_terms() {
        let x = sig("g", "g") * OperatorExpr::boson(1, 1) - sig("r", "r") * (OperatorExpr::a() * OperatorExpr::ad());
        let r = Level::new("r");
        assert_eq!(x.project_out_level(&r).unwrap(), sig("g", "g") * OperatorExpr::boson(1, 1));
        assert_eq!(sig("g", "g").project_out_level(&r).unwrap(), sig("g", "g"));
        let leak = sig("g", "r") * OperatorExpr::ad();
        assert_eq!(leak.project_out_level(&r), Err(Error::ResidualCoupling("r".into())));
    }

    #[test]
    fn boson_product_weights() {
        // a² a†² = a†²a² + 4 a†a + 2
        let p = BosonString::new(0, 2).mul(&BosonString::new(2, 0));
        assert_eq!(p, vec![(1, BosonString::new(2, 2)), (4, BosonString::new(1, 1)), (2, BosonString::new(0, 0))]);
    }

    #[test]
    fn canonical_order_in_print() {
        let x = OperatorExpr::one() + OperatorExpr::ad() + OperatorExpr::a() + sig("e", "g");
        assert_eq!(x.to_string(), "1 + ad + a + sig(e,g)");
        let y = sig("g", "g").scale(&Coefficient::integer(-2)) + OperatorExpr::boson(2, 0);
        assert_eq!(y.to_string(), "ad*ad - 2*sig(g,g)");
    }
}
