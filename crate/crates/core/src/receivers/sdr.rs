//! Semidefinite relaxation detector for binary least squares.
//!
//! The problem `min f(s) = sᵀAs − 2cᵀs + κ` over `s ∈ {±1}ᴺ` is homogenised
//! with an extra sign `t`: `z = [s; t]`, `f = zᵀQz` with
//! `Q = [[A, −c], [−cᵀ, κ]]`. Dropping `rank(zzᵀ) = 1` gives the relaxation
//! `min ⟨Q, Z⟩` s.t. `diag(Z) = 1`, `Z ⪰ 0`, solved here in factored form
//! `Z = VVᵀ` with unit-norm rows by exact block-coordinate minimisation (each
//! row update is `v_i ← −gᵢ/‖gᵢ‖`, `gᵢ = Σ_{j≠i} Q_ij v_j`). Candidates are
//! drawn by Gaussian randomised rounding `z = sign(Vξ)` and the best one is
//! kept.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::quadratic::{KroneckerQuadratic, QuadraticProblem};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, C64};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SdrOptions {
    /// Randomised rounding draws.
    pub rounds: usize,
    /// Relative decrease of the relaxed objective per sweep below which the
    /// factorisation counts as converged.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Factorisation rank; `None` picks `⌈√(2(N+1))⌉` capped at [`AUTO_RANK_CAP`].
    pub rank: Option<usize>,
}

/// Upper bound on the automatically chosen factorisation rank.
pub const AUTO_RANK_CAP: usize = 12;

impl Default for SdrOptions {
    fn default() -> Self {
        Self {
            rounds: 100,
            tolerance: 1e-8,
            max_sweeps: 100_000,
            rank: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdrOutcome {
    /// Best rounded ±1 vector.
    pub signs: Vec<f64>,
    /// `f(signs)`.
    pub objective: f64,
    /// Value of the relaxation at the returned factorisation (a lower bound
    /// on the optimum once converged).
    pub relaxed_objective: f64,
    pub sweeps: usize,
}

/// Relax-and-round for `min ‖b − H s‖²`, `s ∈ {±1}ᴺ`.
pub fn sdr_relax_and_round<R: Rng + ?Sized>(
    h: &DMatrix<f64>,
    b: &DVector<f64>,
    rng: &mut R,
    opts: &SdrOptions,
) -> Result<SdrOutcome> {
    let problem = QuadraticProblem::from_real(h, b)?;
    solve(&problem, rng, opts)
}

/// Relax-and-round on a problem already in Gram form.
pub fn solve<R: Rng + ?Sized>(
    problem: &QuadraticProblem,
    rng: &mut R,
    opts: &SdrOptions,
) -> Result<SdrOutcome> {
    run(&mut Dense::new(problem), rng, opts)
}

/// Relax-and-round on a Kronecker-structured block problem.
///
/// Row updates use `P = I − U μ Uᴴ` so each costs `O((N + rank(I − P)) N)`
/// per factor column instead of `O(LN)`. Rows are visited in the same order
/// as [`solve`] on [`KroneckerQuadratic::to_dense`], so both produce the same
/// iterates up to rounding.
pub fn solve_kronecker<R: Rng + ?Sized>(
    problem: &KroneckerQuadratic,
    rng: &mut R,
    opts: &SdrOptions,
) -> Result<SdrOutcome> {
    run(&mut Structured::new(problem)?, rng, opts)
}

/// Homogenised problem as seen by the mixing method. Rows `0..dim` of `V`
/// are the variables, row `dim` is the homogenising sign.
trait Relaxation {
    fn dim(&self) -> usize;
    /// `tr(Q)`, constant on unit-norm rows.
    fn trace(&self) -> f64;
    /// `⟨Q, VVᵀ⟩` without the diagonal.
    fn coupling(&mut self, v: &[f64], rank: usize) -> f64;
    /// One pass of exact row updates in row order; returns the decrease.
    fn sweep(&mut self, v: &mut [f64], rank: usize) -> f64;
    fn objective(&self, s: &[f64]) -> f64;
}

/// Sets `v_i ← −g/‖g‖`, leaving the previous row in `old`. Returns the
/// objective decrease `2(⟨g, v_i⟩ + ‖g‖)`.
fn align(g: &[f64], vi: &mut [f64], old: &mut [f64]) -> f64 {
    old.copy_from_slice(vi);
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let before: f64 = g.iter().zip(vi.iter()).map(|(a, b)| a * b).sum();
    for (x, gk) in vi.iter_mut().zip(g) {
        *x = -gk / norm;
    }
    2.0 * (before + norm)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn run<P: Relaxation, R: Rng + ?Sized>(
    problem: &mut P,
    rng: &mut R,
    opts: &SdrOptions,
) -> Result<SdrOutcome> {
    if opts.rounds == 0 {
        return Err(Error::invalid("SDR needs at least one rounding draw"));
    }
    let n = problem.dim();
    let size = n + 1;
    let rank = opts
        .rank
        .unwrap_or_else(|| ((2.0 * size as f64).sqrt().ceil() as usize).min(AUTO_RANK_CAP))
        .clamp(1, size);

    let mut v = vec![0.0; size * rank];
    for row in v.chunks_mut(rank) {
        loop {
            for x in row.iter_mut() {
                *x = StandardNormal.sample(rng);
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                row.iter_mut().for_each(|x| *x /= norm);
                break;
            }
        }
    }

    let diag_sum = problem.trace();
    let mut value = problem.coupling(&v, rank) + diag_sum;
    let floor = 1e-12 * diag_sum.abs().max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    let mut last_change = f64::INFINITY;
    loop {
        if sweeps == opts.max_sweeps {
            return Err(Error::NotConverged {
                iterations: sweeps,
                last_change,
                tolerance: opts.tolerance,
            });
        }
        sweeps += 1;
        let decrease = problem.sweep(&mut v, rank);
        value -= decrease;
        last_change = decrease / value.abs().max(floor);
        if last_change <= opts.tolerance {
            break;
        }
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut xi = vec![0.0; rank];
    let mut z = vec![0.0; size];
    for _ in 0..opts.rounds {
        for x in xi.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = if dot(&v[i * rank..(i + 1) * rank], &xi) < 0.0 {
                -1.0
            } else {
                1.0
            };
        }
        let t = z[n];
        let s: Vec<f64> = z[..n].iter().map(|zi| zi * t).collect();
        let f = problem.objective(&s);
        if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
            best = Some((s, f));
        }
    }
    let (signs, objective) = best.expect("at least one rounding draw");
    Ok(SdrOutcome {
        signs,
        objective,
        relaxed_objective: value,
        sweeps,
    })
}

struct Dense<'a> {
    problem: &'a QuadraticProblem,
    /// Homogenised matrix, row-major, zero diagonal.
    q: Vec<f64>,
    size: usize,
}

impl<'a> Dense<'a> {
    fn new(problem: &'a QuadraticProblem) -> Self {
        let n = problem.dim();
        let size = n + 1;
        let mut q = vec![0.0; size * size];
        for i in 0..n {
            q[i * size..i * size + n].copy_from_slice(problem.a_row(i));
            q[i * size + i] = 0.0;
            q[i * size + n] = -problem.c()[i];
            q[n * size + i] = -problem.c()[i];
        }
        Self { problem, q, size }
    }
}

impl Relaxation for Dense<'_> {
    fn dim(&self) -> usize {
        self.size - 1
    }

    fn trace(&self) -> f64 {
        self.problem.trace()
    }

    fn coupling(&mut self, v: &[f64], rank: usize) -> f64 {
        let size = self.size;
        let mut total = 0.0;
        for i in 0..size {
            let vi = &v[i * rank..(i + 1) * rank];
            for j in 0..size {
                let qij = self.q[i * size + j];
                if qij != 0.0 {
                    total += qij * dot(vi, &v[j * rank..(j + 1) * rank]);
                }
            }
        }
        total
    }

    fn sweep(&mut self, v: &mut [f64], rank: usize) -> f64 {
        let size = self.size;
        let mut g = vec![0.0; rank];
        let mut old = vec![0.0; rank];
        let mut decrease = 0.0;
        for i in 0..size {
            g.iter_mut().for_each(|x| *x = 0.0);
            for (j, &qij) in self.q[i * size..(i + 1) * size].iter().enumerate() {
                if qij != 0.0 {
                    for (gk, vk) in g.iter_mut().zip(&v[j * rank..(j + 1) * rank]) {
                        *gk += qij * vk;
                    }
                }
            }
            decrease += align(&g, &mut v[i * rank..(i + 1) * rank], &mut old);
        }
        decrease
    }

    fn objective(&self, s: &[f64]) -> f64 {
        self.problem.objective(s)
    }
}

/// Mixing state for `A = a² lift(P ⊗ W)`.
///
/// With `w_j = v_j + i v_{n+j}` the complex factor row of block entry `j`,
/// the gradient of either real row of `j` is the real or imaginary part of
/// `(M w)_j − M_jj w_j`, `M = a²(P ⊗ W)`. For snapshot `l`,
/// `(M w)_{(l,k)} = a² Σ_k' W_kk' Z_k'` with `Z_k' = w_(l,k') − Σ_m U_lm μ_m S_mk'`
/// and `S_mk' = Σ_l' conj(U_l'm) w_(l',k')`.
struct Structured<'a> {
    problem: &'a KroneckerQuadratic,
    c: Vec<f64>,
    a2: f64,
    /// `U_lm μ_m`, row-major `L × R`.
    u_mu: Vec<C64>,
    /// `conj(U_lm)`, row-major `L × R`.
    u_conj: Vec<C64>,
    /// Diagonal of `I − UμUᴴ`.
    p_diag: Vec<f64>,
    r: usize,
    /// `S`, laid out `[m][k][rank]` as separate real and imaginary parts.
    s_re: Vec<f64>,
    s_im: Vec<f64>,
    z_re: Vec<f64>,
    z_im: Vec<f64>,
}

impl<'a> Structured<'a> {
    fn new(problem: &'a KroneckerQuadratic) -> Result<Self> {
        let l = problem.snapshots();
        let (mu, u) = hermitian_eig(&(crate::linalg::eye(l) - &problem.p))?;
        let scale = mu.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let keep: Vec<usize> = (0..l).filter(|&m| mu[m].abs() > 1e-13 * scale).collect();
        let r = keep.len();
        let mut u_mu = Vec::with_capacity(l * r);
        let mut u_conj = Vec::with_capacity(l * r);
        let mut p_diag = vec![1.0; l];
        for (t, pd) in p_diag.iter_mut().enumerate() {
            for &m in &keep {
                let z = u[(t, m)];
                u_mu.push(z * mu[m]);
                u_conj.push(z.conj());
                *pd -= mu[m] * z.norm_sqr();
            }
        }
        let a = problem.amplitude;
        Ok(Self {
            problem,
            c: problem.linear(),
            a2: a * a,
            u_mu,
            u_conj,
            p_diag,
            r,
            s_re: Vec::new(),
            s_im: Vec::new(),
            z_re: Vec::new(),
            z_im: Vec::new(),
        })
    }

    fn layout(&self) -> (usize, usize, usize) {
        let l = self.problem.snapshots();
        let nt = self.problem.streams();
        (l, nt, l * nt)
    }

    fn refresh_s(&mut self, v: &[f64], rank: usize) {
        let (l, nt, n) = self.layout();
        let r = self.r;
        self.s_re = vec![0.0; r * nt * rank];
        self.s_im = vec![0.0; r * nt * rank];
        for t in 0..l {
            for m in 0..r {
                let uc = self.u_conj[t * r + m];
                for k in 0..nt {
                    let j = t * nt + k;
                    let (wr, wi) = (
                        &v[j * rank..(j + 1) * rank],
                        &v[(n + j) * rank..(n + j + 1) * rank],
                    );
                    let off = (m * nt + k) * rank;
                    for q in 0..rank {
                        self.s_re[off + q] += uc.re * wr[q] - uc.im * wi[q];
                        self.s_im[off + q] += uc.re * wi[q] + uc.im * wr[q];
                    }
                }
            }
        }
    }

    fn load_z(&mut self, v: &[f64], rank: usize, t: usize) {
        let (_, nt, n) = self.layout();
        let r = self.r;
        self.z_re.clear();
        self.z_im.clear();
        for k in 0..nt {
            let j = t * nt + k;
            self.z_re.extend_from_slice(&v[j * rank..(j + 1) * rank]);
            self.z_im
                .extend_from_slice(&v[(n + j) * rank..(n + j + 1) * rank]);
        }
        for m in 0..r {
            let um = self.u_mu[t * r + m];
            for k in 0..nt {
                let off = (m * nt + k) * rank;
                for q in 0..rank {
                    let (sr, si) = (self.s_re[off + q], self.s_im[off + q]);
                    self.z_re[k * rank + q] -= um.re * sr - um.im * si;
                    self.z_im[k * rank + q] -= um.re * si + um.im * sr;
                }
            }
        }
    }

    /// `(M w)_j − M_jj w_j` for entry `(t, k)`.
    fn off_diagonal_product(
        &self,
        v: &[f64],
        rank: usize,
        t: usize,
        k: usize,
        h_re: &mut [f64],
        h_im: &mut [f64],
    ) {
        let (_, nt, n) = self.layout();
        let j = t * nt + k;
        h_re.iter_mut().for_each(|x| *x = 0.0);
        h_im.iter_mut().for_each(|x| *x = 0.0);
        for kk in 0..nt {
            let wkk = self.problem.w[(k, kk)] * self.a2;
            let (zr, zi) = (
                &self.z_re[kk * rank..(kk + 1) * rank],
                &self.z_im[kk * rank..(kk + 1) * rank],
            );
            for q in 0..rank {
                h_re[q] += wkk.re * zr[q] - wkk.im * zi[q];
                h_im[q] += wkk.re * zi[q] + wkk.im * zr[q];
            }
        }
        let mjj = self.a2 * self.p_diag[t] * self.problem.w[(k, k)].re;
        let (wr, wi) = (
            &v[j * rank..(j + 1) * rank],
            &v[(n + j) * rank..(n + j + 1) * rank],
        );
        for q in 0..rank {
            h_re[q] -= mjj * wr[q];
            h_im[q] -= mjj * wi[q];
        }
    }

    /// Propagates `w_(t,k) += δ` (with `δ = δ_re + i δ_im`) into `S` and `Z`.
    fn propagate(&mut self, rank: usize, t: usize, k: usize, d_re: &[f64], d_im: &[f64]) {
        let (_, nt, _) = self.layout();
        let r = self.r;
        for m in 0..r {
            let uc = self.u_conj[t * r + m];
            let off = (m * nt + k) * rank;
            for q in 0..rank {
                self.s_re[off + q] += uc.re * d_re[q] - uc.im * d_im[q];
                self.s_im[off + q] += uc.re * d_im[q] + uc.im * d_re[q];
            }
        }
        let pd = self.p_diag[t];
        for q in 0..rank {
            self.z_re[k * rank + q] += pd * d_re[q];
            self.z_im[k * rank + q] += pd * d_im[q];
        }
    }

    fn linear_row(&self, v: &[f64], rank: usize, i: usize, g: &mut [f64]) {
        let n2 = self.c.len();
        let vt = &v[n2 * rank..(n2 + 1) * rank];
        for (gq, tq) in g.iter_mut().zip(vt) {
            *gq -= self.c[i] * tq;
        }
    }
}

impl Relaxation for Structured<'_> {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn trace(&self) -> f64 {
        self.problem.trace()
    }

    fn coupling(&mut self, v: &[f64], rank: usize) -> f64 {
        let (l, nt, n) = self.layout();
        self.refresh_s(v, rank);
        let mut h_re = vec![0.0; rank];
        let mut h_im = vec![0.0; rank];
        let mut total = 0.0;
        for t in 0..l {
            self.load_z(v, rank, t);
            for k in 0..nt {
                let j = t * nt + k;
                self.off_diagonal_product(v, rank, t, k, &mut h_re, &mut h_im);
                total += dot(&v[j * rank..(j + 1) * rank], &h_re);
                total += dot(&v[(n + j) * rank..(n + j + 1) * rank], &h_im);
            }
        }
        let vt = &v[2 * n * rank..(2 * n + 1) * rank];
        for (i, ci) in self.c.iter().enumerate() {
            total -= 2.0 * ci * dot(&v[i * rank..(i + 1) * rank], vt);
        }
        total
    }

    fn sweep(&mut self, v: &mut [f64], rank: usize) -> f64 {
        let (l, nt, n) = self.layout();
        self.refresh_s(v, rank);
        let mut g = vec![0.0; rank];
        let mut h_im = vec![0.0; rank];
        let mut old = vec![0.0; rank];
        let mut delta = vec![0.0; rank];
        let zero = vec![0.0; rank];
        let mut decrease = 0.0;
        // real rows, then imaginary rows, then the homogenising row
        for part in 0..2 {
            for t in 0..l {
                self.load_z(v, rank, t);
                for k in 0..nt {
                    let j = t * nt + k;
                    let i = part * n + j;
                    if part == 0 {
                        self.off_diagonal_product(v, rank, t, k, &mut g, &mut h_im);
                    } else {
                        self.off_diagonal_product(v, rank, t, k, &mut h_im, &mut g);
                    }
                    self.linear_row(v, rank, i, &mut g);
                    decrease += align(&g, &mut v[i * rank..(i + 1) * rank], &mut old);
                    for (d, (new, prev)) in delta
                        .iter_mut()
                        .zip(v[i * rank..(i + 1) * rank].iter().zip(&old))
                    {
                        *d = new - prev;
                    }
                    if part == 0 {
                        self.propagate(rank, t, k, &delta, &zero);
                    } else {
                        self.propagate(rank, t, k, &zero, &delta);
                    }
                }
            }
        }
        g.iter_mut().for_each(|x| *x = 0.0);
        for (i, ci) in self.c.iter().enumerate() {
            for (gq, vq) in g.iter_mut().zip(&v[i * rank..(i + 1) * rank]) {
                *gq -= ci * vq;
            }
        }
        decrease += align(&g, &mut v[2 * n * rank..(2 * n + 1) * rank], &mut old);
        decrease
    }

    fn objective(&self, s: &[f64]) -> f64 {
        self.problem.objective(s)
    }
}
