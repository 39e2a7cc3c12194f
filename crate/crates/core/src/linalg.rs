//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra` dense matrices with column-major storage, so
//! [`vec`] is a copy of the backing slice. Eigen and singular value routines
//! are delegated to `nalgebra`; everything here wraps them behind the
//! contracts the receivers rely on (rank checks, sorted spectra, Hermitian
//! symmetrisation of projectors).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default relative tolerance for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Tolerance used when checking that an input matrix is Hermitian.
const HERMITIAN_TOL: f64 = 1e-9;

/// Column-stacking vectorisation.
pub fn vec(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &CVector, rows: usize, cols: usize) -> Result<CMatrix> {
    if rows.checked_mul(cols) != Some(v.len()) {
        return Err(Error::invalid(format!(
            "cannot reshape a length-{} vector into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(CMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    for j in 0..ca {
        for i in 0..ra {
            let s = a[(i, j)];
            if s == C64::new(0.0, 0.0) {
                continue;
            }
            for q in 0..cb {
                for p in 0..rb {
                    out[(i * rb + p, j * cb + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Identity matrix of size `n`.
pub fn eye(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest-singular-value-relative numerical rank.
pub fn numerical_rank(m: &CMatrix, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let largest = sv.iter().cloned().fold(0.0_f64, f64::max);
    if largest == 0.0 || !largest.is_finite() {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * largest).count()
}

/// Orthogonal-complement projector together with the inverse Gram matrix it
/// was built from.
#[derive(Debug, Clone)]
pub struct Projector {
    /// `I - A (AᴴA)⁻¹ Aᴴ`.
    pub gamma: CMatrix,
    /// `(AᴴA)⁻¹`.
    pub gram_inverse: CMatrix,
}

/// Builds the projector onto the orthogonal complement of `range(a)`.
///
/// `name` identifies the matrix in the rank-deficiency error.
pub fn orth_complement(a: &CMatrix, name: &'static str, tol: f64) -> Result<Projector> {
    let cols = a.ncols();
    let rank = numerical_rank(a, tol);
    if rank < cols {
        return Err(Error::RankDeficient {
            matrix: name,
            rank,
            cols,
        });
    }
    let gram = a.adjoint() * a;
    let gram_inverse = match gram.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => gram.try_inverse().ok_or(Error::RankDeficient {
            matrix: name,
            rank,
            cols,
        })?,
    };
    let gram_inverse = hermitian_part(&gram_inverse);
    let n = a.nrows();
    let gamma = eye(n) - a * &gram_inverse * a.adjoint();
    Ok(Projector {
        gamma: hermitian_part(&gamma),
        gram_inverse,
    })
}

/// `Γ = I − A(AᴴA)⁻¹Aᴴ` with the default rank tolerance.
pub fn orth_complement_projector(a: &CMatrix) -> Result<CMatrix> {
    orth_complement(a, "matrix", RANK_TOL).map(|p| p.gamma)
}

/// `(M + Mᴴ)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
/// Column `k` of the returned matrix is the eigenvector for eigenvalue `k`.
pub fn hermitian_eig(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !h.is_square() {
        return Err(Error::invalid(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let scale = h.norm().max(1.0);
    let skew = (h - h.adjoint()).norm();
    if skew > HERMITIAN_TOL * scale {
        return Err(Error::invalid(format!(
            "matrix is not Hermitian (‖H − Hᴴ‖ = {skew:e})"
        )));
    }
    let eig = hermitian_part(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(h.nrows(), h.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Reusable QR factorisation for repeated least-squares solves against the
/// same tall matrix.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    q_adjoint: CMatrix,
    r: CMatrix,
}

impl LeastSquares {
    pub fn new(a: &CMatrix, name: &'static str) -> Result<Self> {
        let (rows, cols) = a.shape();
        if rows < cols {
            return Err(Error::RankDeficient {
                matrix: name,
                rank: rows,
                cols,
            });
        }
        let qr = a.clone().qr();
        let r = qr.r();
        let q = qr.q();
        let largest = (0..cols).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
        let rank = (0..cols)
            .filter(|&i| r[(i, i)].norm() > RANK_TOL * largest)
            .count();
        if largest == 0.0 || rank < cols {
            return Err(Error::RankDeficient {
                matrix: name,
                rank,
                cols,
            });
        }
        Ok(Self {
            q_adjoint: q.adjoint(),
            r,
        })
    }

    pub fn solve(&self, b: &CVector) -> Result<CVector> {
        if b.len() != self.q_adjoint.ncols() {
            return Err(Error::invalid(format!(
                "right-hand side has length {}, expected {}",
                b.len(),
                self.q_adjoint.ncols()
            )));
        }
        let rhs = &self.q_adjoint * b;
        self.r
            .solve_upper_triangular(&rhs)
            .ok_or_else(|| Error::invalid("singular triangular factor"))
    }
}

/// Minimiser of `‖b − A x‖²` for full-column-rank `A`, via QR.
pub fn ls_solve(a: &CMatrix, b: &CVector) -> Result<CVector> {
    LeastSquares::new(a, "matrix")?.solve(b)
}

/// Squared Euclidean norm.
pub fn norm_sq(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
