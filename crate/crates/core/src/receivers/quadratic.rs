//! Binary least-squares problems `min ‖b − H s‖²` over `s ∈ {±1}ᴺ`, kept in
//! Gram form `f(s) = sᵀAs − 2cᵀs + κ`.
//!
//! A QPSK block `x = a(s_re + j s_im)` of length `n` maps to the sign vector
//! `s = [s_re; s_im]` of length `2n`. Symbol index `k` of entry `i` is
//! `[s_re,i < 0] + 2[s_im,i < 0]`, matching [`crate::scene::Constellation`].

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

/// Objectives closer than this (relative to `max(1, κ)`) count as ties.
pub const TIE_TOL: f64 = 1e-12;

/// Residual refresh period of the Gray-code walk.
const REFRESH_PERIOD: u64 = 1 << 12;

#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    dim: usize,
    /// Row-major symmetric `N × N`.
    a: Vec<f64>,
    c: Vec<f64>,
    constant: f64,
}

impl QuadraticProblem {
    pub fn new(a: &DMatrix<f64>, c: &DVector<f64>, constant: f64) -> Result<Self> {
        let dim = c.len();
        if a.shape() != (dim, dim) {
            return Err(Error::invalid(format!(
                "quadratic form is {}x{}, linear term has length {dim}",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut flat = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                flat[i * dim + j] = 0.5 * (a[(i, j)] + a[(j, i)]);
            }
        }
        Ok(Self {
            dim,
            a: flat,
            c: c.iter().copied().collect(),
            constant,
        })
    }

    /// `‖b − H s‖²` with real `H`.
    pub fn from_real(h: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        if h.nrows() != b.len() {
            return Err(Error::invalid(format!(
                "H has {} rows but b has length {}",
                h.nrows(),
                b.len()
            )));
        }
        Self::new(&(h.transpose() * h), &(h.transpose() * b), b.norm_squared())
    }

    /// `‖ỹ − G x‖²` for `x = a(s_re + j s_im)`, given `GᴴG`, `Gᴴỹ` and `‖ỹ‖²`.
    pub fn from_complex_gram(
        gram: &CMatrix,
        g_adj_y: &CVector,
        y_norm_sq: f64,
        amplitude: f64,
    ) -> Result<Self> {
        let n = g_adj_y.len();
        if gram.shape() != (n, n) {
            return Err(Error::invalid(format!(
                "Gram matrix is {}x{}, expected {n}x{n}",
                gram.nrows(),
                gram.ncols()
            )));
        }
        let dim = 2 * n;
        let a2 = amplitude * amplitude;
        let mut a = vec![0.0; dim * dim];
        for i in 0..n {
            for j in 0..n {
                // symmetrise: gram is Hermitian only to rounding
                let z = (gram[(i, j)] + gram[(j, i)].conj()) * 0.5;
                let (p, q) = (a2 * z.re, a2 * z.im);
                a[i * dim + j] = p;
                a[(n + i) * dim + (n + j)] = p;
                a[i * dim + (n + j)] = -q;
                a[(n + i) * dim + j] = q;
            }
        }
        let mut c = vec![0.0; dim];
        for i in 0..n {
            c[i] = amplitude * g_adj_y[i].re;
            c[n + i] = amplitude * g_adj_y[i].im;
        }
        Ok(Self {
            dim,
            a,
            c,
            constant: y_norm_sq,
        })
    }

    /// `‖y − H x‖²` over QPSK `x` for a complex `H`.
    pub fn from_complex(h: &CMatrix, y: &CVector, amplitude: f64) -> Result<Self> {
        if h.nrows() != y.len() {
            return Err(Error::invalid(format!(
                "H has {} rows but y has length {}",
                h.nrows(),
                y.len()
            )));
        }
        let gram = h.adjoint() * h;
        let hy = h.adjoint() * y;
        Self::from_complex_gram(&gram, &hy, y.norm_squared(), amplitude)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub(crate) fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.dim + j]
    }

    pub(crate) fn a_row(&self, i: usize) -> &[f64] {
        &self.a[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn c(&self) -> &[f64] {
        &self.c
    }

    pub(crate) fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.a(i, i)).sum::<f64>() + self.constant
    }

    /// Absolute tie tolerance.
    pub fn tie_tolerance(&self) -> f64 {
        TIE_TOL * self.constant.max(1.0)
    }

    pub fn objective(&self, s: &[f64]) -> f64 {
        debug_assert_eq!(s.len(), self.dim);
        let mut quad = 0.0;
        for (i, &si) in s.iter().enumerate() {
            let row: f64 = self.a_row(i).iter().zip(s).map(|(a, sj)| a * sj).sum();
            quad += si * row;
        }
        let lin: f64 = self.c.iter().zip(s).map(|(c, si)| c * si).sum();
        quad - 2.0 * lin + self.constant
    }

    /// Exhaustive minimisation with the lexicographic tie rule.
    pub fn exhaustive(&self, budget_log2: u32) -> Result<(Vec<f64>, f64)> {
        if self.dim as u32 > budget_log2 || self.dim >= 64 {
            return Err(Error::Capacity {
                log2_candidates: self.dim as f64,
                log2_budget: budget_log2,
            });
        }
        let n = self.dim;
        let tol = self.tie_tolerance();
        let mut s = vec![1.0; n];
        let mut u = vec![0.0; n];
        self.refresh(&s, &mut u);
        let mut f = self.eval_with(&s, &u);
        let mut best = s.clone();
        let mut best_f = f;
        let total: u64 = 1 << n;
        for step in 1..total {
            let i = step.trailing_zeros() as usize;
            // flipping s_i: f' = f − 4 s_i u_i + 4 A_ii + 4 s_i c_i
            let si = s[i];
            f += -4.0 * si * u[i] + 4.0 * self.a(i, i) + 4.0 * si * self.c[i];
            let row = self.a_row(i);
            let k = 2.0 * si;
            for (uj, aj) in u.iter_mut().zip(row) {
                *uj -= k * aj;
            }
            s[i] = -si;
            if step % REFRESH_PERIOD == 0 {
                self.refresh(&s, &mut u);
                f = self.eval_with(&s, &u);
            }
            if f < best_f - tol || (f <= best_f + tol && lex_cmp(&s, &best) == Ordering::Less) {
                best.copy_from_slice(&s);
                best_f = f;
            }
        }
        let exact = self.objective(&best);
        Ok((best, exact))
    }

    fn refresh(&self, s: &[f64], u: &mut [f64]) {
        for (i, ui) in u.iter_mut().enumerate() {
            *ui = self.a_row(i).iter().zip(s).map(|(a, sj)| a * sj).sum();
        }
    }

    fn eval_with(&self, s: &[f64], u: &[f64]) -> f64 {
        let quad: f64 = s.iter().zip(u).map(|(a, b)| a * b).sum();
        let lin: f64 = self.c.iter().zip(s).map(|(c, si)| c * si).sum();
        quad - 2.0 * lin + self.constant
    }
}

/// Complex block problem `‖ỹ − Gx‖²` whose Gram matrix factors as
/// `GᴴG = P ⊗ W`, with `x = a(s_re + j s_im)` and entry `(l, k)` of the block
/// at position `l·N + k`.
///
/// Same objective as the dense lifting of [`QuadraticProblem::from_complex_gram`]
/// but evaluated in `O(N²L + NL²)`.
#[derive(Debug, Clone)]
pub struct KroneckerQuadratic {
    pub(crate) p: CMatrix,
    pub(crate) w: CMatrix,
    pub(crate) g_adj_y: CVector,
    pub(crate) amplitude: f64,
    pub(crate) constant: f64,
}

impl KroneckerQuadratic {
    pub fn new(
        p: &CMatrix,
        w: &CMatrix,
        g_adj_y: &CVector,
        y_norm_sq: f64,
        amplitude: f64,
    ) -> Result<Self> {
        if !p.is_square() || !w.is_square() {
            return Err(Error::invalid("Kronecker factors must be square"));
        }
        if p.nrows() * w.nrows() != g_adj_y.len() {
            return Err(Error::invalid(format!(
                "factors of size {} and {} do not match a block of length {}",
                p.nrows(),
                w.nrows(),
                g_adj_y.len()
            )));
        }
        Ok(Self {
            p: (p + p.adjoint()) * C64::new(0.5, 0.0),
            w: (w + w.adjoint()) * C64::new(0.5, 0.0),
            g_adj_y: g_adj_y.clone(),
            amplitude,
            constant: y_norm_sq,
        })
    }

    /// Length of the sign vector, `2LN`.
    pub fn dim(&self) -> usize {
        2 * self.g_adj_y.len()
    }

    pub fn snapshots(&self) -> usize {
        self.p.nrows()
    }

    pub fn streams(&self) -> usize {
        self.w.nrows()
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Linear term `c` of the real form.
    pub(crate) fn linear(&self) -> Vec<f64> {
        let n = self.g_adj_y.len();
        let mut c = vec![0.0; 2 * n];
        for (i, z) in self.g_adj_y.iter().enumerate() {
            c[i] = self.amplitude * z.re;
            c[n + i] = self.amplitude * z.im;
        }
        c
    }

    pub(crate) fn trace(&self) -> f64 {
        let a2 = self.amplitude * self.amplitude;
        let pd: f64 = self.p.diagonal().iter().map(|z| z.re).sum();
        let wd: f64 = self.w.diagonal().iter().map(|z| z.re).sum();
        2.0 * a2 * pd * wd + self.constant
    }

    pub fn objective(&self, s: &[f64]) -> f64 {
        let (l, nt) = (self.snapshots(), self.streams());
        let n = l * nt;
        debug_assert_eq!(s.len(), 2 * n);
        let x = CMatrix::from_fn(nt, l, |k, t| C64::new(s[t * nt + k], s[n + t * nt + k]));
        // (P ⊗ W) vec(X) = vec(W X Pᵀ)
        let mx = &self.w * &x * self.p.transpose();
        let quad: f64 = x
            .iter()
            .zip(mx.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        let lin: f64 = self
            .g_adj_y
            .iter()
            .enumerate()
            .map(|(i, z)| z.re * s[i] + z.im * s[n + i])
            .sum();
        let a = self.amplitude;
        a * a * quad - 2.0 * a * lin + self.constant
    }

    /// Dense form of the same objective.
    pub fn to_dense(&self) -> Result<QuadraticProblem> {
        let gram = crate::linalg::kron(&self.p, &self.w);
        QuadraticProblem::from_complex_gram(&gram, &self.g_adj_y, self.constant, self.amplitude)
    }
}

/// Symbol indices of a QPSK sign vector `[s_re; s_im]`.
pub fn symbol_indices(s: &[f64]) -> Vec<usize> {
    let n = s.len() / 2;
    (0..n)
        .map(|i| usize::from(s[i] < 0.0) + 2 * usize::from(s[n + i] < 0.0))
        .collect()
}

/// Sign vector of a QPSK block given by symbol indices.
pub fn signs_from_indices(indices: &[usize]) -> Vec<f64> {
    let n = indices.len();
    let mut s = vec![1.0; 2 * n];
    for (i, &k) in indices.iter().enumerate() {
        if k & 1 != 0 {
            s[i] = -1.0;
        }
        if k & 2 != 0 {
            s[n + i] = -1.0;
        }
    }
    s
}

/// Complex QPSK block of a sign vector.
pub fn signs_to_symbols(s: &[f64], amplitude: f64) -> CVector {
    let n = s.len() / 2;
    CVector::from_fn(n, |i, _| C64::new(amplitude * s[i], amplitude * s[n + i]))
}

/// Lexicographic order of the symbol-index vectors of two sign vectors.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    let n = a.len() / 2;
    for i in 0..n {
        let ka = usize::from(a[i] < 0.0) + 2 * usize::from(a[n + i] < 0.0);
        let kb = usize::from(b[i] < 0.0) + 2 * usize::from(b[n + i] < 0.0);
        match ka.cmp(&kb) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}
