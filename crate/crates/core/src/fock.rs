//! Dense matrices and states on the truncated space (atomic levels) ⊗ (Fock
//! levels `0..=n_max`).
//!
//! Basis ordering is level-major, Fock-minor: the basis vector `|level, n⟩`
//! sits at index `level_index · (n_max + 1) + n`, with `level_index` taken from
//! the declared level order. Ladder operators use a hard cutoff,
//! `a†|n_max⟩ = 0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::algebra::{AtomOp, BosonString, Level, OperatorExpr};
use crate::error::{Error, Result};
use crate::params::Params;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceSpec {
    levels: Vec<Level>,
    n_max: usize,
}

impl SpaceSpec {
    pub fn new(levels: Vec<Level>, n_max: usize) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidArgument("at least two atomic levels are required".into()));
        }
        if n_max < 1 {
            return Err(Error::NonPositiveTruncation(n_max as i64));
        }
        for (idx, l) in levels.iter().enumerate() {
            if levels[..idx].contains(l) {
                return Err(Error::InvalidArgument(format!("level `{l}` declared twice")));
            }
        }
        Ok(Self { levels, n_max })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        self.levels.len() * self.fock_dim()
    }

    pub fn level_index(&self, level: &Level) -> Result<usize> {
        self.levels.iter().position(|l| l == level).ok_or_else(|| Error::UnknownLevel(level.to_string()))
    }

    pub fn index(&self, level: &Level, n: usize) -> Result<usize> {
        if n > self.n_max {
            return Err(Error::FockOverflow { n, n_max: self.n_max });
        }
        Ok(self.level_index(level)? * self.fock_dim() + n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Self {
        assert!(matrix.is_square(), "dense operator must be square");
        Self { matrix }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.matrix.adjoint())
    }

    pub fn apply(&self, psi: &StateVector) -> DVector<Complex64> {
        &self.matrix * &psi.amplitudes
    }

    /// Largest entrywise modulus of `M − M†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.matrix;
        let n = m.nrows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest singular value, from the top eigenvalue of `M†M`. Falls back to
    /// the Frobenius norm (an upper bound) if the eigensolver fails.
    pub fn opnorm(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        let gram = self.matrix.adjoint() * &self.matrix;
        match crate::linalg::HermitianEigen::new(&gram) {
            Ok(eig) => eig.eigenvalues().into_iter().fold(0.0, f64::max).sqrt(),
            Err(_) => self.matrix.norm(),
        }
    }
}

pub fn hermiticity_defect(m: &DenseOperator) -> f64 {
    m.hermiticity_defect()
}

pub fn opnorm(m: &DenseOperator) -> f64 {
    m.opnorm()
}

/// `⟨k| a†^m a^n |j⟩` is nonzero only for `k = j − n + m`; returns that
/// target and the matrix element, or `None` when it falls outside the space.
fn boson_element(b: BosonString, j: usize, n_max: usize) -> Option<(usize, f64)> {
    let (m, n) = (b.creators as usize, b.annihilators as usize);
    if j < n {
        return None;
    }
    let mid = j - n;
    let k = mid + m;
    if k > n_max {
        return None;
    }
    // √(j!/(j−n)!) · √(k!/mid!)
    let down: f64 = ((mid + 1)..=j).map(|x| x as f64).product();
    let up: f64 = ((mid + 1)..=k).map(|x| x as f64).product();
    Some((k, (down * up).sqrt()))
}

/// Numeric matrix of a symbolic expression.
pub fn realize(x: &OperatorExpr, space: &SpaceSpec, params: &Params) -> Result<DenseOperator> {
    let dim = space.dim();
    let fock = space.fock_dim();
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for m in x.terms() {
        let c = m.coeff.evaluate(params)?;
        let pairs: Vec<(usize, usize)> = match &m.atom {
            AtomOp::Identity => (0..space.levels.len()).map(|l| (l, l)).collect(),
            AtomOp::Transition(i, j) => vec![(space.level_index(i)?, space.level_index(j)?)],
        };
        for (li, lj) in pairs {
            for col in 0..fock {
                if let Some((row, amp)) = boson_element(m.boson, col, space.n_max) {
                    out[(li * fock + row, lj * fock + col)] += c * amp;
                }
            }
        }
    }
    Ok(DenseOperator::new(out))
}

/// Pure state with unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: DVector<Complex64>,
}

impl StateVector {
    /// Normalizes `amplitudes`; errors on a zero vector.
    pub fn normalized(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Numerical("cannot normalize a zero or non-finite state".into()));
        }
        Ok(Self { amplitudes: amplitudes.unscale(norm) })
    }

    /// Wraps amplitudes that are already (numerically) unit norm.
    pub fn from_unit(amplitudes: DVector<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn basis(space: &SpaceSpec, level: &Level, n: usize) -> Result<Self> {
        let mut v = DVector::zeros(space.dim());
        v[space.index(level, n)?] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldState {
    Fock(usize),
    Coherent(f64),
}

/// Initial-state descriptor, written `level,n` or `level,coherent(alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDescriptor {
    pub level: Level,
    pub field: FieldState,
}

impl StateDescriptor {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad state descriptor `{text}`"));
        let (level, field) = text.split_once(',').ok_or_else(bad)?;
        let level = level.trim();
        let field = field.trim();
        if level.is_empty() {
            return Err(bad());
        }
        let field = if let Some(rest) = field.strip_prefix("coherent(") {
            let alpha = rest.strip_suffix(')').ok_or_else(bad)?.trim();
            FieldState::Coherent(alpha.parse().map_err(|_| bad())?)
        } else {
            FieldState::Fock(field.parse().map_err(|_| bad())?)
        };
        Ok(Self { level: Level::new(level), field })
    }
}

impl std::fmt::Display for StateDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.field {
            FieldState::Fock(n) => write!(f, "{},{}", self.level, n),
            FieldState::Coherent(alpha) => write!(f, "{},coherent({})", self.level, alpha),
        }
    }
}

/// Unnormalized truncated coherent amplitudes `e^{−α²/2} αⁿ/√n!`.
fn coherent_amplitudes(alpha: f64, n_max: usize) -> Vec<f64> {
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut c = (-alpha * alpha / 2.0).exp();
    amps.push(c);
    for n in 1..=n_max {
        c *= alpha / (n as f64).sqrt();
        amps.push(c);
    }
    amps
}

/// Probability mass of a coherent state lost to truncation at `n_max`.
pub fn coherent_tail_mass(alpha: f64, n_max: usize) -> f64 {
    let kept: f64 = coherent_amplitudes(alpha, n_max).iter().map(|c| c * c).sum();
    (1.0 - kept).max(0.0)
}

pub fn build_state(desc: &StateDescriptor, space: &SpaceSpec) -> Result<StateVector> {
    let l = space.level_index(&desc.level)?;
    match desc.field {
        FieldState::Fock(n) => StateVector::basis(space, &desc.level, n),
        FieldState::Coherent(alpha) => {
            let mut v = DVector::zeros(space.dim());
            let offset = l * space.fock_dim();
            for (n, c) in coherent_amplitudes(alpha, space.n_max).into_iter().enumerate() {
                v[offset + n] = Complex64::new(c, 0.0);
            }
            StateVector::normalized(v)
        }
    }
}
