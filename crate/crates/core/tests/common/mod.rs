#![allow(dead_code)]

use dforge::algebra::{AtomOp, BosonString, Coefficient, GaussianRational, Monomial, Symbols};
use dforge::fock::SpaceSpec;
use dforge::{parse_operator_expr, Channel, ChannelSpec, Level, OperatorExpr, Params};
use nalgebra::DMatrix;
use num::{BigInt, BigRational};
use num_complex::Complex64;
use rand::Rng;

pub const LEVELS: [&str; 3] = ["g", "r", "e"];

pub fn levels() -> Vec<Level> {
    LEVELS.iter().map(|&l| Level::new(l)).collect()
}

pub fn expr(text: &str) -> OperatorExpr {
    parse_operator_expr(text, &levels()).unwrap()
}

/// The three-channel system: Raman pair through `r` plus a classical drive.
pub fn three_channel_spec() -> ChannelSpec {
    ChannelSpec::new(
        vec![
            Channel::symbol("g1", expr("sig(g,r)*ad")),
            Channel::symbol("g2", expr("sig(e,r)*a")),
            Channel::symbol("Omega", expr("sig(g,r)")),
        ],
        "delta",
    )
    .unwrap()
}

pub fn three_channel_params(g1: f64, g2: f64, omega: f64, delta: f64) -> Params {
    Params::from_iter([("g1", g1), ("g2", g2), ("Omega", omega), ("delta", delta)])
}

pub fn space(n_max: usize) -> SpaceSpec {
    SpaceSpec::new(levels(), n_max).unwrap()
}

fn random_atom(rng: &mut impl Rng) -> AtomOp {
    if rng.gen_bool(0.2) {
        AtomOp::Identity
    } else {
        AtomOp::sigma(LEVELS[rng.gen_range(0..3)], LEVELS[rng.gen_range(0..3)])
    }
}

fn random_boson(rng: &mut impl Rng, max_degree: u32) -> BosonString {
    let degree = rng.gen_range(0..=max_degree);
    let creators = rng.gen_range(0..=degree);
    BosonString::new(creators, degree - creators)
}

/// Small Gaussian-rational number with both parts in `[-3, 3]/den`.
pub fn random_value(rng: &mut impl Rng) -> GaussianRational {
    let den: i64 = rng.gen_range(1..=3);
    let re = BigRational::new(rng.gen_range(-3i64..=3).into(), BigInt::from(den));
    let im = if rng.gen_bool(0.5) {
        BigRational::new(rng.gen_range(-3i64..=3).into(), BigInt::from(den))
    } else {
        BigRational::from_integer(0.into())
    };
    GaussianRational::new(re, im)
}

/// Random numeric expression (no symbols) with up to `max_terms` monomials.
pub fn random_expr(rng: &mut impl Rng, max_terms: usize, max_degree: u32) -> OperatorExpr {
    let n = rng.gen_range(1..=max_terms);
    OperatorExpr::from_terms((0..n).map(|_| {
        Monomial::new(
            Coefficient::new(random_value(rng), Symbols::none()),
            random_atom(rng),
            random_boson(rng, max_degree),
        )
    }))
}

/// Random expression whose coefficients may carry the symbols `x`, `y`.
pub fn random_symbolic_expr(rng: &mut impl Rng, max_terms: usize, max_degree: u32) -> OperatorExpr {
    let n = rng.gen_range(1..=max_terms);
    OperatorExpr::from_terms((0..n).map(|_| {
        let mut symbols = Symbols::none();
        for s in ["x", "y"] {
            let p = rng.gen_range(-1..=2);
            if p != 0 {
                symbols = &symbols * &Symbols::power(s, p);
            }
        }
        Monomial::new(Coefficient::new(random_value(rng), symbols), random_atom(rng), random_boson(rng, max_degree))
    }))
}

/// `|i⟩⟨j|` on the atomic factor, built by hand.
pub fn atom_matrix(i: usize, j: usize, n_levels: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n_levels, n_levels);
    m[(i, j)] = Complex64::new(1.0, 0.0);
    m
}

/// Truncated annihilation operator, `⟨n−1|a|n⟩ = √n`.
pub fn ladder_matrix(n_max: usize) -> DMatrix<Complex64> {
    let d = n_max + 1;
    let mut m = DMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    m
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Column indices `(level, n)` with `n ≤ n_cap`, in the level-major basis.
pub fn buffered_columns(space: &SpaceSpec, n_cap: usize) -> Vec<usize> {
    let fock = space.fock_dim();
    (0..space.dim()).filter(|idx| idx % fock <= n_cap).collect()
}
