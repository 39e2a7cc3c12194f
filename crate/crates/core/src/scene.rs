//! System parameters, random scene generation, and the stacked (vectorised)
//! observation model.
//!
//! A block of `L` snapshots received at the base station is
//! `Y = H_r X_r + H_c X_c + N`. Vectorising column by column gives
//! `y = A_r h_r + A_c x_c + n` with `A_r = X_rᵀ ⊗ I_{M_r}` and
//! `A_c = I_L ⊗ H_c`. [`RadarOperators`] holds everything that depends only
//! on the radar waveform (and is shared by all trials of a sweep point);
//! [`StackedModel`] adds the per-trial channel and observation.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, kron, CMatrix, CVector, Projector, C64, RANK_TOL};

/// Symbol alphabet. Only QPSK is supported; symbols are `a(±1 ± j)` with
/// `a` chosen so that each entry carries `P_c / N_t`.
///
/// Symbol index `k` carries the Gray label `(b0, b1) = (k & 1, k >> 1)`:
/// `b0` selects the sign of the real part, `b1` the sign of the imaginary
/// part (bit 0 ↦ +1, bit 1 ↦ −1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Constellation {
    #[default]
    Qpsk,
}

impl Constellation {
    pub fn size(self) -> usize {
        match self {
            Constellation::Qpsk => 4,
        }
    }

    pub fn bits_per_symbol(self) -> u32 {
        match self {
            Constellation::Qpsk => 2,
        }
    }

    /// Per-component amplitude `a` giving per-entry power `power`.
    pub fn amplitude(self, power: f64) -> f64 {
        match self {
            Constellation::Qpsk => (power / 2.0).sqrt(),
        }
    }

    pub fn point(self, index: usize, amplitude: f64) -> C64 {
        match self {
            Constellation::Qpsk => {
                let re = if index & 1 == 0 {
                    amplitude
                } else {
                    -amplitude
                };
                let im = if index & 2 == 0 {
                    amplitude
                } else {
                    -amplitude
                };
                C64::new(re, im)
            }
        }
    }

    /// Index of `z` if it is (to rounding) a constellation point.
    pub fn index_of(self, z: C64, amplitude: f64) -> Option<usize> {
        let tol = 1e-9 * amplitude.max(f64::MIN_POSITIVE);
        (0..self.size()).find(|&k| (self.point(k, amplitude) - z).norm() <= tol)
    }

    /// Gray label of a symbol index.
    pub fn label(self, index: usize) -> u32 {
        match self {
            Constellation::Qpsk => index as u32 & 0b11,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Constellation::Qpsk => "qpsk",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Ok(Constellation::Qpsk),
            other => Err(Error::config(format!(
                "unsupported constellation '{other}'"
            ))),
        }
    }
}

/// Prior the simulator draws target scenes from.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetPrior {
    pub paths: usize,
    /// AoA/AoD are drawn uniformly on `[-limit, limit]`.
    pub angle_limit_deg: f64,
    /// Variance of the circularly-symmetric Gaussian path gains.
    pub gain_variance: f64,
}

impl Default for TargetPrior {
    fn default() -> Self {
        Self {
            paths: 3,
            angle_limit_deg: 60.0,
            gain_variance: 1.0,
        }
    }
}

impl TargetPrior {
    /// `E‖H_r‖_F²`: each path's steering outer product has unit Frobenius norm.
    pub fn expected_response_energy(&self) -> f64 {
        self.paths as f64 * self.gain_variance
    }
}

/// Scalar parameters of the uplink DFRC system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// BS transmit antennas.
    pub m_t: usize,
    /// BS receive antennas.
    pub m_r: usize,
    /// UE transmit antennas.
    pub n_t: usize,
    /// Snapshots per block.
    pub snapshots: usize,
    /// Communication transmit power (W).
    pub p_c: f64,
    /// Radar transmit power (W).
    pub p_r: f64,
    /// Noise power per receive antenna (W).
    pub sigma2: f64,
    pub d_over_lambda: f64,
    pub constellation: Constellation,
    pub target: TargetPrior,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            m_t: 4,
            m_r: 8,
            n_t: 8,
            snapshots: 20,
            p_c: 1.0,
            p_r: 10f64.powf(-0.8),
            sigma2: 1e-2,
            d_over_lambda: 0.5,
            constellation: Constellation::Qpsk,
            target: TargetPrior::default(),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("M_t", self.m_t),
            ("M_r", self.m_r),
            ("N_t", self.n_t),
            ("L", self.snapshots),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{name} must be at least 1")));
        }
        if self.snapshots <= self.m_t {
            return Err(Error::invalid(format!(
                "L = {} must exceed M_t = {}",
                self.snapshots, self.m_t
            )));
        }
        let positive = [("P_c", self.p_c), ("P_r", self.p_r)];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(Error::invalid(format!(
                "sigma2 must be non-negative, got {}",
                self.sigma2
            )));
        }
        if !(self.d_over_lambda.is_finite() && self.d_over_lambda > 0.0) {
            return Err(Error::invalid("d_over_lambda must be positive"));
        }
        let t = &self.target;
        if t.paths == 0 {
            return Err(Error::invalid("target prior needs at least one path"));
        }
        if !(t.angle_limit_deg >= 0.0 && t.angle_limit_deg < 90.0) {
            return Err(Error::invalid(
                "target angle limit must lie in [0, 90) degrees",
            ));
        }
        if !(t.gain_variance.is_finite() && t.gain_variance >= 0.0) {
            return Err(Error::invalid("target gain variance must be non-negative"));
        }
        Ok(())
    }

    /// Per-component symbol amplitude.
    pub fn symbol_amplitude(&self) -> f64 {
        self.constellation.amplitude(self.p_c / self.n_t as f64)
    }

    /// `log2` of the number of candidate symbol blocks, `|𝒳|^{L N_t}`.
    pub fn log2_block_candidates(&self) -> f64 {
        (self.constellation.size() as f64).log2() * (self.snapshots * self.n_t) as f64
    }
}

/// One propagation path of the target echo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetPath {
    /// Angle of arrival (rad).
    pub aoa: f64,
    /// Angle of departure (rad).
    pub aod: f64,
    pub gain: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetScene {
    pub paths: Vec<TargetPath>,
}

impl TargetScene {
    pub fn new(paths: Vec<TargetPath>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::invalid("target scene needs at least one path"));
        }
        let half = PI / 2.0;
        for p in &paths {
            for angle in [p.aoa, p.aod] {
                if !(angle > -half && angle < half) {
                    return Err(Error::invalid(format!(
                        "path angle {angle} outside (-π/2, π/2)"
                    )));
                }
            }
            if !(p.gain.re.is_finite() && p.gain.im.is_finite()) {
                return Err(Error::invalid("non-finite path gain"));
            }
        }
        Ok(Self { paths })
    }
}

/// Channel matrices and radar waveform of one simulated trial.
#[derive(Debug, Clone)]
pub struct Scene {
    /// `M_r × N_t` uplink channel.
    pub h_c: CMatrix,
    /// `M_r × M_t` target response.
    pub h_r: CMatrix,
    /// `M_t × L` radar waveform.
    pub x_r: CMatrix,
    /// Sample covariance `X_r X_rᴴ / L`.
    pub r: CMatrix,
}

impl Scene {
    pub fn new(h_c: CMatrix, h_r: CMatrix, x_r: CMatrix) -> Result<Self> {
        if h_c.nrows() != h_r.nrows() {
            return Err(Error::invalid(format!(
                "H_c has {} rows but H_r has {}",
                h_c.nrows(),
                h_r.nrows()
            )));
        }
        if h_r.ncols() != x_r.nrows() {
            return Err(Error::invalid(format!(
                "H_r has {} columns but X_r has {} rows",
                h_r.ncols(),
                x_r.nrows()
            )));
        }
        for (name, m) in [("H_c", &h_c), ("H_r", &h_r), ("X_r", &x_r)] {
            if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::invalid(format!("{name} has non-finite entries")));
            }
        }
        let l = x_r.ncols().max(1) as f64;
        let r = (&x_r * x_r.adjoint()).unscale(l);
        Ok(Self { h_c, h_r, x_r, r })
    }

    pub fn snapshots(&self) -> usize {
        self.x_r.ncols()
    }
}

/// ULA response `(1/√M)·exp(−j2πk·(d/λ)·sin α)`, `k = 0..M`.
pub fn steering(m: usize, alpha: f64, d_over_lambda: f64) -> CVector {
    let norm = 1.0 / (m as f64).sqrt();
    let phase = -2.0 * PI * d_over_lambda * alpha.sin();
    CVector::from_fn(m, |k, _| C64::from_polar(norm, phase * k as f64))
}

/// `Σ_p b_p a(M_r, φ_p) a(M_t, θ_p)ᴴ`.
pub fn build_target_response(
    scene: &TargetScene,
    m_r: usize,
    m_t: usize,
    d_over_lambda: f64,
) -> CMatrix {
    let mut h = CMatrix::zeros(m_r, m_t);
    for p in &scene.paths {
        let rx = steering(m_r, p.aoa, d_over_lambda);
        let tx = steering(m_t, p.aod, d_over_lambda);
        h += (rx * tx.adjoint()) * p.gain;
    }
    h
}

/// `CN(0, variance)` sample: two independent real Gaussians of variance
/// `variance / 2`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

fn gaussian_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> CMatrix {
    // column-major fill order is part of the reproducibility contract
    let mut m = CMatrix::zeros(rows, cols);
    for z in m.iter_mut() {
        *z = complex_gaussian(rng, variance);
    }
    m
}

/// I.i.d. Rayleigh channel with unit-variance entries, so
/// `E‖H_c‖_F² = M_r N_t`.
pub fn gen_comm_channel<R: Rng + ?Sized>(rng: &mut R, m_r: usize, n_t: usize) -> CMatrix {
    gaussian_matrix(rng, m_r, n_t, 1.0)
}

pub fn gen_target_scene<R: Rng + ?Sized>(rng: &mut R, prior: &TargetPrior) -> TargetScene {
    let limit = prior.angle_limit_deg.to_radians();
    let paths = (0..prior.paths.max(1))
        .map(|_| {
            let aoa = limit * (2.0 * rng.random::<f64>() - 1.0);
            let aod = limit * (2.0 * rng.random::<f64>() - 1.0);
            let gain = complex_gaussian(rng, prior.gain_variance);
            TargetPath { aoa, aod, gain }
        })
        .collect();
    TargetScene { paths }
}

/// Orthogonal radar waveform with `X_r X_rᴴ = (P_r L / M_t)·I`.
///
/// Rows are an orthonormalised Gaussian draw. Structured choices such as DFT
/// rows have small-integer null-space combinations that make distinct QPSK
/// blocks indistinguishable after projection, so a generic basis is used.
pub fn gen_orthogonal_waveform<R: Rng + ?Sized>(
    rng: &mut R,
    m_t: usize,
    l: usize,
    p_r: f64,
) -> Result<CMatrix> {
    if m_t == 0 || l < m_t {
        return Err(Error::invalid(format!(
            "orthogonal waveform needs L >= M_t >= 1, got L = {l}, M_t = {m_t}"
        )));
    }
    if !(p_r.is_finite() && p_r >= 0.0) {
        return Err(Error::invalid(format!(
            "radar power must be non-negative, got {p_r}"
        )));
    }
    let draw = gaussian_matrix(rng, l, m_t, 1.0);
    let q = draw.qr().q();
    let scale = (p_r * l as f64 / m_t as f64).sqrt();
    Ok(q.transpose().scale(scale))
}

/// `N_t × L` block of symbols drawn uniformly from the scaled alphabet.
pub fn gen_symbols<R: Rng + ?Sized>(rng: &mut R, cfg: &SystemConfig, l: usize) -> CMatrix {
    let a = cfg.symbol_amplitude();
    let size = cfg.constellation.size();
    let mut x = CMatrix::zeros(cfg.n_t, l);
    for z in x.iter_mut() {
        *z = cfg.constellation.point(rng.random_range(0..size), a);
    }
    x
}

/// The three additive components of a received block.
#[derive(Debug, Clone)]
pub struct ReceivedBlock {
    pub radar: CMatrix,
    pub comm: CMatrix,
    pub noise: CMatrix,
}

impl ReceivedBlock {
    pub fn total(&self) -> CMatrix {
        &self.radar + &self.comm + &self.noise
    }
}

pub fn synthesize_parts<R: Rng + ?Sized>(
    scene: &Scene,
    x_c: &CMatrix,
    rng: &mut R,
    sigma2: f64,
) -> Result<ReceivedBlock> {
    if x_c.nrows() != scene.h_c.ncols() || x_c.ncols() != scene.x_r.ncols() {
        return Err(Error::invalid(format!(
            "X_c is {}x{}, expected {}x{}",
            x_c.nrows(),
            x_c.ncols(),
            scene.h_c.ncols(),
            scene.x_r.ncols()
        )));
    }
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(Error::invalid(format!(
            "noise power must be non-negative, got {sigma2}"
        )));
    }
    let radar = &scene.h_r * &scene.x_r;
    let comm = &scene.h_c * x_c;
    let noise = if sigma2 == 0.0 {
        CMatrix::zeros(radar.nrows(), radar.ncols())
    } else {
        gaussian_matrix(rng, radar.nrows(), radar.ncols(), sigma2)
    };
    Ok(ReceivedBlock { radar, comm, noise })
}

/// `Y = H_r X_r + H_c X_c + N`.
pub fn synthesize_block<R: Rng + ?Sized>(
    scene: &Scene,
    x_c: &CMatrix,
    rng: &mut R,
    sigma2: f64,
) -> Result<CMatrix> {
    synthesize_parts(scene, x_c, rng, sigma2).map(|b| b.total())
}

/// Operators determined by the radar waveform alone.
#[derive(Debug, Clone)]
pub struct RadarOperators {
    pub m_r: usize,
    /// `X_rᵀ ⊗ I_{M_r}`.
    pub a_r: CMatrix,
    /// `I − A_r Ξ A_rᴴ`.
    pub gamma: CMatrix,
    /// `(A_rᴴ A_r)⁻¹`.
    pub xi: CMatrix,
    /// `I_L − X_rᵀ(X_r* X_rᵀ)⁻¹X_r*`, so that `Γ = P_⊥ ⊗ I_{M_r}`.
    pub p_perp: CMatrix,
}

impl RadarOperators {
    pub fn new(x_r: &CMatrix, m_r: usize) -> Result<Self> {
        let xt = x_r.transpose();
        let rank = linalg::numerical_rank(&xt, RANK_TOL);
        if rank < xt.ncols() || xt.nrows() <= xt.ncols() {
            return Err(Error::RankDeficient {
                matrix: "X_rᵀ",
                rank,
                cols: xt.ncols(),
            });
        }
        let a_r = kron(&xt, &linalg::eye(m_r));
        let Projector {
            gamma,
            gram_inverse,
        } = linalg::orth_complement(&a_r, "A_r", RANK_TOL)?;
        let p_perp = linalg::orth_complement(&xt, "X_rᵀ", RANK_TOL)?.gamma;
        Ok(Self {
            m_r,
            a_r,
            gamma,
            xi: gram_inverse,
            p_perp,
        })
    }

    pub fn snapshots(&self) -> usize {
        self.p_perp.nrows()
    }

    pub fn m_t(&self) -> usize {
        self.a_r.ncols() / self.m_r
    }

    /// Replaces `Γ` and `Ξ` as if the Gram inverse had been dropped
    /// (`Γ = I − A_r A_rᴴ`, `Ξ = I`). Only used to check that the
    /// verification suite detects a broken projector.
    pub fn with_gram_inverse_dropped(mut self) -> Self {
        let n = self.a_r.nrows();
        self.gamma = linalg::eye(n) - &self.a_r * self.a_r.adjoint();
        self.xi = linalg::eye(self.a_r.ncols());
        self
    }
}

/// Stacked observation model of one received block.
#[derive(Debug, Clone)]
pub struct StackedModel {
    pub radar: Arc<RadarOperators>,
    pub h_c: CMatrix,
    /// `vec(Y)`.
    pub y: CVector,
    /// `I_L ⊗ H_c`.
    pub a_c: CMatrix,
    /// `Γ A_c`.
    pub g: CMatrix,
    /// `Γ y`.
    pub y_tilde: CVector,
}

impl StackedModel {
    pub fn new(radar: Arc<RadarOperators>, h_c: &CMatrix, y_block: &CMatrix) -> Result<Self> {
        let l = radar.snapshots();
        let m_r = radar.m_r;
        if h_c.nrows() != m_r {
            return Err(Error::invalid(format!(
                "H_c has {} rows, radar operators expect M_r = {m_r}",
                h_c.nrows()
            )));
        }
        if y_block.shape() != (m_r, l) {
            return Err(Error::invalid(format!(
                "received block is {}x{}, expected {m_r}x{l}",
                y_block.nrows(),
                y_block.ncols()
            )));
        }
        let n_t = h_c.ncols();
        let y = linalg::vec(y_block);
        let a_c = kron(&linalg::eye(l), h_c);
        // Γ A_c one block column at a time: A_c is block diagonal.
        let mut g = CMatrix::zeros(l * m_r, l * n_t);
        for blk in 0..l {
            let cols = radar.gamma.columns(blk * m_r, m_r);
            g.columns_mut(blk * n_t, n_t).copy_from(&(cols * h_c));
        }
        let y_tilde = &radar.gamma * &y;
        Ok(Self {
            radar,
            h_c: h_c.clone(),
            y,
            a_c,
            g,
            y_tilde,
        })
    }

    pub fn a_r(&self) -> &CMatrix {
        &self.radar.a_r
    }

    pub fn gamma(&self) -> &CMatrix {
        &self.radar.gamma
    }

    pub fn xi(&self) -> &CMatrix {
        &self.radar.xi
    }

    pub fn snapshots(&self) -> usize {
        self.radar.snapshots()
    }

    pub fn m_r(&self) -> usize {
        self.radar.m_r
    }

    pub fn m_t(&self) -> usize {
        self.radar.m_t()
    }

    pub fn n_t(&self) -> usize {
        self.h_c.ncols()
    }

    /// `GᴴG = P_⊥ ⊗ H_cᴴH_c`, assembled from the Kronecker structure.
    pub fn projected_gram(&self) -> CMatrix {
        kron(&self.radar.p_perp, &(self.h_c.adjoint() * &self.h_c))
    }
}

/// Builds the stacked model of `Y` for `scene`.
pub fn stack_model(scene: &Scene, y_block: &CMatrix) -> Result<StackedModel> {
    let radar = RadarOperators::new(&scene.x_r, scene.h_c.nrows()).map_err(|e| match e {
        Error::RankDeficient { .. } => e,
        other => Error::invalid(format!("model construction failed: {other}")),
    })?;
    StackedModel::new(Arc::new(radar), &scene.h_c, y_block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{numerical_rank, vec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &CVector, b: &[C64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn steering_examples() {
        let a = steering(4, 0.0, 0.5);
        assert!(close(&a, &[c(0.5, 0.0); 4], 1e-15));

        let s = 1.0 / 2f64.sqrt();
        let a = steering(2, PI / 2.0, 0.5);
        assert!(close(&a, &[c(s, 0.0), c(-s, 0.0)], 1e-15));

        let a = steering(4, PI / 6.0, 0.5);
        let want = [c(0.5, 0.0), c(0.0, -0.5), c(-0.5, 0.0), c(0.0, 0.5)];
        assert!(close(&a, &want, 1e-15));
        assert!((a.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn target_response_examples() {
        let one = TargetScene::new(vec![TargetPath {
            aoa: 0.0,
            aod: 0.0,
            gain: c(1.0, 0.0),
        }])
        .unwrap();
        let h = build_target_response(&one, 3, 2, 0.5);
        let v = 1.0 / 6f64.sqrt();
        assert!(h.iter().all(|z| (z - c(v, 0.0)).norm() < 1e-15));

        let silent = TargetScene::new(vec![
            TargetPath {
                aoa: 0.3,
                aod: -0.2,
                gain: c(0.0, 0.0),
            },
            TargetPath {
                aoa: -0.7,
                aod: 0.1,
                gain: c(0.0, 0.0),
            },
        ])
        .unwrap();
        assert_eq!(build_target_response(&silent, 4, 4, 0.5).norm(), 0.0);

        let two = TargetScene::new(vec![
            TargetPath {
                aoa: 0.4,
                aod: -0.5,
                gain: c(0.8, -0.3),
            },
            TargetPath {
                aoa: -0.6,
                aod: 0.9,
                gain: c(-0.2, 1.1),
            },
        ])
        .unwrap();
        assert_eq!(
            numerical_rank(&build_target_response(&two, 8, 4, 0.5), 1e-10),
            2
        );
    }

    #[test]
    fn target_scene_validation() {
        assert!(TargetScene::new(vec![]).is_err());
        let bad = TargetPath {
            aoa: PI / 2.0,
            aod: 0.0,
            gain: c(1.0, 0.0),
        };
        assert!(TargetScene::new(vec![bad]).is_err());
    }

    #[test]
    fn comm_channel_normalisation_and_seeding() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 10_000;
        let (m_r, n_t) = (4, 3);
        let mut energy = 0.0;
        let mut mean = C64::new(0.0, 0.0);
        for _ in 0..draws {
            let h = gen_comm_channel(&mut rng, m_r, n_t);
            energy += h.norm_squared();
            mean += h[(0, 0)];
        }
        let energy = energy / draws as f64;
        assert!((energy / (m_r * n_t) as f64 - 1.0).abs() < 0.05, "{energy}");
        // per-component standard error of the mean is sqrt(0.5 / draws)
        let se = (0.5 / draws as f64).sqrt();
        let mean = mean / draws as f64;
        assert!(
            mean.re.abs() < 3.0 * se && mean.im.abs() < 3.0 * se,
            "{mean}"
        );

        let a = gen_comm_channel(&mut ChaCha8Rng::seed_from_u64(9), 3, 3);
        let b = gen_comm_channel(&mut ChaCha8Rng::seed_from_u64(9), 3, 3);
        assert_eq!(a, b);
    }

    #[test]
    fn waveform_is_orthogonal_with_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = gen_orthogonal_waveform(&mut rng, 4, 20, 1.0).unwrap();
        let gram = &x * x.adjoint();
        assert!((gram - linalg::eye(4).scale(5.0)).norm() < 1e-12);

        let x = gen_orthogonal_waveform(&mut rng, 1, 7, 0.3).unwrap();
        assert_eq!(x.shape(), (1, 7));
        assert!((x.norm_squared() - 0.3 * 7.0).abs() < 1e-12);

        assert!(gen_orthogonal_waveform(&mut rng, 5, 4, 1.0).is_err());
    }

    #[test]
    fn qpsk_symbols_have_per_entry_power() {
        let cfg = SystemConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gen_symbols(&mut rng, &cfg, 20);
        assert_eq!(x.shape(), (8, 20));
        for z in x.iter() {
            assert!((z.re.abs() - 0.25).abs() < 1e-15 && (z.im.abs() - 0.25).abs() < 1e-15);
            assert!((z.norm_sqr() - 1.0 / 8.0).abs() < 1e-15);
        }
        let again = gen_symbols(&mut ChaCha8Rng::seed_from_u64(3), &cfg, 20);
        assert_eq!(x, again);
    }

    #[test]
    fn qpsk_symbol_frequencies_uniform() {
        let cfg = SystemConfig {
            n_t: 1,
            ..SystemConfig::default()
        };
        let a = cfg.symbol_amplitude();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = gen_symbols(&mut rng, &cfg, 100_000);
        let mut counts = [0usize; 4];
        for z in x.iter() {
            counts[cfg.constellation.index_of(*z, a).unwrap()] += 1;
        }
        let n = 100_000.0;
        let sd = (n * 0.25 * 0.75f64).sqrt();
        for k in counts {
            assert!((k as f64 - n / 4.0).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    fn small_scene(rng: &mut ChaCha8Rng, cfg: &SystemConfig) -> Scene {
        let h_c = gen_comm_channel(rng, cfg.m_r, cfg.n_t);
        let target = gen_target_scene(rng, &cfg.target);
        let h_r = build_target_response(&target, cfg.m_r, cfg.m_t, cfg.d_over_lambda);
        let x_r = gen_orthogonal_waveform(rng, cfg.m_t, cfg.snapshots, cfg.p_r).unwrap();
        Scene::new(h_c, h_r, x_r).unwrap()
    }

    #[test]
    fn synthesize_degenerate_inputs() {
        let cfg = SystemConfig {
            m_t: 2,
            m_r: 3,
            n_t: 2,
            snapshots: 6,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let scene = small_scene(&mut rng, &cfg);
        let zero = CMatrix::zeros(2, 6);
        let y = synthesize_block(&scene, &zero, &mut rng, 0.0).unwrap();
        assert_eq!(y, &scene.h_r * &scene.x_r);

        let silent =
            Scene::new(scene.h_c.clone(), scene.h_r.clone(), CMatrix::zeros(2, 6)).unwrap();
        let x = gen_symbols(&mut rng, &cfg, 6);
        let y = synthesize_block(&silent, &x, &mut rng, 0.0).unwrap();
        assert_eq!(y, &scene.h_c * &x);

        assert!(synthesize_block(&scene, &CMatrix::zeros(3, 6), &mut rng, 0.0).is_err());
    }

    #[test]
    fn noise_power_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let scene = Scene::new(
            CMatrix::zeros(10, 1),
            CMatrix::zeros(10, 1),
            CMatrix::zeros(1, 1000),
        )
        .unwrap();
        let block = synthesize_parts(&scene, &CMatrix::zeros(1, 1000), &mut rng, 0.04).unwrap();
        let power = block.noise.norm_squared() / 10_000.0;
        assert!((power / 0.04 - 1.0).abs() < 0.05, "{power}");
    }

    #[test]
    fn stacked_model_invariants() {
        let cfg = SystemConfig {
            m_t: 2,
            m_r: 3,
            n_t: 2,
            snapshots: 6,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let scene = small_scene(&mut rng, &cfg);
        let x = gen_symbols(&mut rng, &cfg, 6);
        let block = synthesize_parts(&scene, &x, &mut rng, 0.0).unwrap();
        let model = stack_model(&scene, &block.total()).unwrap();

        let x_vec = vec(&x);
        let h_vec = vec(&scene.h_r);
        assert!((vec(&block.comm) - &model.a_c * &x_vec).norm() < 1e-10);
        assert!((vec(&block.radar) - model.a_r() * &h_vec).norm() < 1e-10);
        assert!((&model.y - model.a_r() * &h_vec - &model.a_c * &x_vec).norm() < 1e-10);

        assert!((model.gamma() * model.a_r()).norm() < 1e-10);
        assert!((model.gamma() * model.gamma() - model.gamma()).norm() < 1e-9);
        assert_eq!(numerical_rank(&model.g, RANK_TOL), 8);
        assert!((&model.g - model.gamma() * &model.a_c).norm() < 1e-10);
        assert!((model.g.adjoint() * &model.g - model.projected_gram()).norm() < 1e-10);
        assert!((kron(&model.radar.p_perp, &linalg::eye(3)) - model.gamma()).norm() < 1e-10);

        let gram = model.a_r().adjoint() * model.a_r();
        assert!((model.xi() * gram - linalg::eye(6)).norm() < 1e-10);
        let (xi_eigs, _) = linalg::hermitian_eig(model.xi()).unwrap();
        assert!(xi_eigs.iter().all(|&v| v > 0.0));

        let (eigs, _) = linalg::hermitian_eig(&model.radar.p_perp).unwrap();
        let ones = eigs.iter().filter(|v| (*v - 1.0).abs() < 1e-9).count();
        let zeros = eigs.iter().filter(|v| v.abs() < 1e-9).count();
        assert_eq!((ones, zeros), (4, 2));
    }

    #[test]
    fn stack_model_rejects_rank_deficient_waveform() {
        let h_c = CMatrix::identity(2, 2);
        let h_r = CMatrix::zeros(2, 2);
        let mut x_r = CMatrix::zeros(2, 5);
        for l in 0..5 {
            x_r[(0, l)] = c(1.0, 0.0);
            x_r[(1, l)] = c(2.0, 0.0);
        }
        let scene = Scene::new(h_c, h_r, x_r).unwrap();
        let err = stack_model(&scene, &CMatrix::zeros(2, 5)).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }), "{err}");
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::default().validate().is_ok());
        let bad = SystemConfig {
            snapshots: 4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SystemConfig {
            p_c: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!((SystemConfig::default().log2_block_candidates() - 320.0).abs() < 1e-12);
    }
}
