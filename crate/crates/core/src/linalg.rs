use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sweep limit for the symmetric eigensolver; it converges in a few dozen.
const MAX_EIGEN_ITERATIONS: usize = 10_000;

/// Spectral decomposition of a Hermitian matrix `H = A + iB`.
///
/// The decomposition is taken of the real symmetric embedding
/// `S = [[A, −B], [B, A]]`, whose spectrum is that of `H` with every
/// eigenvalue doubled. nalgebra's complex Hermitian solver can return NaN on
/// sparse inputs with many exact zeros; the real solver does not. Functions of
/// `H` are recovered through `exp(−iHτ) ↔ cos(Sτ) − J sin(Sτ)`, where `J`
/// represents multiplication by `i`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    dim: usize,
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl HermitianEigen {
    pub fn new(h: &DMatrix<Complex64>) -> Result<Self> {
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("Hamiltonian has non-finite entries".into()));
        }
        let n = h.nrows();
        let embedded = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let z = h[(i % n, j % n)];
            match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let eig = SymmetricEigen::try_new(embedded, f64::EPSILON, MAX_EIGEN_ITERATIONS)
            .ok_or_else(|| Error::Numerical("eigensolver did not converge".into()))?;
        let out = Self { dim: n, values: eig.eigenvalues, vectors: eig.eigenvectors };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(Error::Numerical("eigendecomposition produced non-finite values".into()))
        }
    }

    /// Eigenvalues of `H` in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut doubled: Vec<f64> = self.values.iter().copied().collect();
        doubled.sort_by(f64::total_cmp);
        doubled.into_iter().step_by(2).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().chain(self.vectors.iter()).all(|x| x.is_finite())
    }

    /// `exp(−i H τ)`.
    pub fn unitary(&self, tau: f64) -> DMatrix<Complex64> {
        let n = self.dim;
        let cos = DVector::from_iterator(2 * n, self.values.iter().map(|w| (w * tau).cos()));
        let sin = DVector::from_iterator(2 * n, self.values.iter().map(|w| (w * tau).sin()));
        let q = &self.vectors;
        let c = q * DMatrix::from_diagonal(&cos) * q.transpose();
        let s = q * DMatrix::from_diagonal(&sin) * q.transpose();
        // cos(Sτ) − J sin(Sτ); the embedded result's first block column is
        // (Re U, Im U).
        DMatrix::from_fn(n, n, |i, j| Complex64::new(c[(i, j)] + s[(n + i, j)], c[(n + i, j)] - s[(i, j)]))
    }

    /// `exp(−i H τ) ψ` without forming the full matrix.
    pub fn evolve(&self, psi: &DVector<Complex64>, tau: f64) -> DVector<Complex64> {
        let n = self.dim;
        let x = DVector::from_fn(2 * n, |i, _| if i < n { psi[i].re } else { psi[i - n].im });
        let coords = self.vectors.tr_mul(&x);
        let cos = coords.zip_map(&self.values, |c, w| c * (w * tau).cos());
        let sin = coords.zip_map(&self.values, |c, w| c * (w * tau).sin());
        let c = &self.vectors * cos;
        let s = &self.vectors * sin;
        DVector::from_fn(n, |i, _| Complex64::new(c[i] + s[n + i], c[n + i] - s[i]))
    }
}

/// `exp(−i H τ)` for Hermitian `H`.
pub fn unitary_step(h: &DMatrix<Complex64>, tau: f64) -> Result<DMatrix<Complex64>> {
    Ok(HermitianEigen::new(h)?.unitary(tau))
}

/// Largest entrywise modulus of `U†U − 1`.
pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let n = u.nrows();
    let prod = u.ad_mul(u) - DMatrix::<Complex64>::identity(n, n);
    prod.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
