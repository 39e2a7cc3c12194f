//! Receiver chains for the uplink DFRC block model.
//!
//! * [`run_sic_receiver`]: decode the uplink symbols snapshot by snapshot
//!   while treating the radar echo as noise, subtract, then estimate `h_r`.
//! * [`run_projection_receiver`]: project onto the orthogonal complement of
//!   `A_r` (removing the echo exactly), detect the whole block jointly, then
//!   estimate `h_r` from the decoded symbols.
//! * [`exhaustive_joint_ml`]: brute-force joint maximum likelihood over
//!   symbols and target response; a desk-scale oracle.

mod joint_ml;
pub mod quadratic;
pub mod sdr;

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{kron, CMatrix, CVector};
use crate::scene::{StackedModel, SystemConfig};

pub use joint_ml::exhaustive_joint_ml;
pub use quadratic::{KroneckerQuadratic, QuadraticProblem};
pub use sdr::{sdr_relax_and_round, solve_kronecker, SdrOptions, SdrOutcome};

/// Largest exhaustive search over a whole block, as `log2` of the candidate count.
pub const BLOCK_ENUMERATION_BUDGET_LOG2: u32 = 20;
/// Largest per-snapshot exhaustive search in the SIC first stage.
pub const SNAPSHOT_ENUMERATION_BUDGET_LOG2: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Sic,
    Projection,
    JointMl,
    Genie,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Sic,
        Method::Projection,
        Method::JointMl,
        Method::Genie,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sic => "sic",
            Method::Projection => "projection",
            Method::JointMl => "joint_ml",
            Method::Genie => "genie",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sic" => Ok(Method::Sic),
            "projection" | "proj" => Ok(Method::Projection),
            "joint_ml" | "jointml" | "ml" => Ok(Method::JointMl),
            "genie" => Ok(Method::Genie),
            other => Err(Error::config(format!("unknown scheme '{other}'"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetectorStrategy {
    Exhaustive,
    #[default]
    Sdr,
}

impl DetectorStrategy {
    pub fn name(self) -> &'static str {
        match self {
            DetectorStrategy::Exhaustive => "exhaustive",
            DetectorStrategy::Sdr => "sdr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exhaustive" => Ok(DetectorStrategy::Exhaustive),
            "sdr" => Ok(DetectorStrategy::Sdr),
            other => Err(Error::config(format!("unknown detector '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectorOptions {
    pub strategy: DetectorStrategy,
    pub sdr: SdrOptions,
}

impl DetectorOptions {
    pub fn exhaustive() -> Self {
        Self {
            strategy: DetectorStrategy::Exhaustive,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct DetectionResult {
    /// Decoded block `vec(X_c)`, alphabet-exact.
    pub x_hat: CVector,
    /// Symbol indices of `x_hat`.
    pub symbols: Vec<usize>,
    /// Estimated `vec(H_r)`.
    pub h_hat: CVector,
    /// Achieved value of the scheme's criterion.
    pub objective: f64,
    pub method: Method,
    /// False when the projected channel vanishes and the symbols carry no
    /// information.
    pub identifiable: bool,
    /// SDR sweeps spent, summed over all SDR calls.
    pub sdr_sweeps: usize,
}

/// `ĥ_r(x) = Ξ A_rᴴ (y − A_c x)`.
pub fn ls_target_estimate(model: &StackedModel, x_hat: &CVector) -> Result<CVector> {
    if x_hat.len() != model.a_c.ncols() {
        return Err(Error::invalid(format!(
            "symbol block has length {}, expected {}",
            x_hat.len(),
            model.a_c.ncols()
        )));
    }
    let residual = &model.y - &model.a_c * x_hat;
    Ok(model.xi() * (model.a_r().adjoint() * residual))
}

/// Projected detection problem `min ‖ỹ − G x‖²`.
#[derive(Debug, Clone)]
pub struct ProjectedProblem {
    pub y_tilde: CVector,
    pub g: CMatrix,
    /// `GᴴG`.
    pub gram: CMatrix,
    /// `(P, W)` with `GᴴG = P ⊗ W`, when known.
    pub factors: Option<(CMatrix, CMatrix)>,
}

impl ProjectedProblem {
    pub fn new(y_tilde: CVector, g: CMatrix) -> Result<Self> {
        if g.nrows() != y_tilde.len() {
            return Err(Error::invalid(format!(
                "G has {} rows but ỹ has length {}",
                g.nrows(),
                y_tilde.len()
            )));
        }
        let gram = g.adjoint() * &g;
        Ok(Self {
            y_tilde,
            g,
            gram,
            factors: None,
        })
    }

    pub fn objective(&self, x: &CVector) -> f64 {
        (&self.y_tilde - &self.g * x).norm_squared()
    }

    fn quadratic(&self, amplitude: f64) -> Result<QuadraticProblem> {
        let gy = self.g.adjoint() * &self.y_tilde;
        QuadraticProblem::from_complex_gram(&self.gram, &gy, self.y_tilde.norm_squared(), amplitude)
    }

    fn kronecker(&self, amplitude: f64) -> Result<Option<KroneckerQuadratic>> {
        let Some((p, w)) = &self.factors else {
            return Ok(None);
        };
        let gy = self.g.adjoint() * &self.y_tilde;
        KroneckerQuadratic::new(p, w, &gy, self.y_tilde.norm_squared(), amplitude).map(Some)
    }

    fn is_degenerate(&self) -> bool {
        self.g.norm() <= 1e-9
    }
}

/// `(ỹ, G) = (Γy, ΓA_c)`.
pub fn project(model: &StackedModel) -> (CVector, CMatrix) {
    (model.y_tilde.clone(), model.g.clone())
}

/// Projected problem of a model, with `GᴴG = P⊥ ⊗ H_cᴴH_c` kept in factors.
pub fn projected_problem(model: &StackedModel) -> ProjectedProblem {
    let w = model.h_c.adjoint() * &model.h_c;
    ProjectedProblem {
        y_tilde: model.y_tilde.clone(),
        g: model.g.clone(),
        gram: kron(&model.radar.p_perp, &w),
        factors: Some((model.radar.p_perp.clone(), w)),
    }
}

/// Detected block of a projected problem.
#[derive(Debug, Clone)]
pub struct ProjectedDetection {
    pub x_hat: CVector,
    pub symbols: Vec<usize>,
    pub objective: f64,
    pub identifiable: bool,
    pub sdr_sweeps: usize,
}

/// Solves `min ‖ỹ − Gx‖²` over QPSK blocks.
pub fn detect_projected<R: Rng + ?Sized>(
    problem: &ProjectedProblem,
    cfg: &SystemConfig,
    opts: &DetectorOptions,
    rng: &mut R,
) -> Result<ProjectedDetection> {
    let amplitude = cfg.symbol_amplitude();
    let n = problem.g.ncols();
    if problem.is_degenerate() {
        let symbols = vec![0; n];
        let x_hat = CVector::from_element(n, cfg.constellation.point(0, amplitude));
        return Ok(ProjectedDetection {
            objective: problem.objective(&x_hat),
            x_hat,
            symbols,
            identifiable: false,
            sdr_sweeps: 0,
        });
    }
    let (signs, sweeps) = match opts.strategy {
        DetectorStrategy::Exhaustive => {
            let quad = problem.quadratic(amplitude)?;
            (quad.exhaustive(BLOCK_ENUMERATION_BUDGET_LOG2)?.0, 0)
        }
        DetectorStrategy::Sdr => {
            let out = match problem.kronecker(amplitude)? {
                Some(kq) => sdr::solve_kronecker(&kq, rng, &opts.sdr)?,
                None => sdr::solve(&problem.quadratic(amplitude)?, rng, &opts.sdr)?,
            };
            (out.signs, out.sweeps)
        }
    };
    let x_hat = quadratic::signs_to_symbols(&signs, amplitude);
    Ok(ProjectedDetection {
        objective: problem.objective(&x_hat),
        symbols: quadratic::symbol_indices(&signs),
        x_hat,
        identifiable: true,
        sdr_sweeps: sweeps,
    })
}

/// Project, detect, then estimate the target response from the decoded block.
pub fn run_projection_receiver<R: Rng + ?Sized>(
    model: &StackedModel,
    cfg: &SystemConfig,
    opts: &DetectorOptions,
    rng: &mut R,
) -> Result<DetectionResult> {
    let problem = projected_problem(model);
    let det = detect_projected(&problem, cfg, opts, rng)?;
    let h_hat = ls_target_estimate(model, &det.x_hat)?;
    Ok(DetectionResult {
        x_hat: det.x_hat,
        symbols: det.symbols,
        h_hat,
        objective: det.objective,
        method: Method::Projection,
        identifiable: det.identifiable,
        sdr_sweeps: det.sdr_sweeps,
    })
}

/// First SIC stage: per-snapshot detection of `min ‖y_l − H_c x_l‖²` with the
/// radar echo treated as noise. Snapshots are decoded exhaustively when
/// `|𝒳|^{N_t}` fits the per-snapshot budget, by SDR otherwise.
pub fn detect_sic<R: Rng + ?Sized>(
    model: &StackedModel,
    cfg: &SystemConfig,
    opts: &DetectorOptions,
    rng: &mut R,
) -> Result<(CVector, Vec<usize>, usize)> {
    let l = model.snapshots();
    let m_r = model.m_r();
    let n_t = model.n_t();
    let amplitude = cfg.symbol_amplitude();
    let gram = model.h_c.adjoint() * &model.h_c;
    let exhaustive = (2 * n_t) as u32 <= SNAPSHOT_ENUMERATION_BUDGET_LOG2;
    let mut symbols = Vec::with_capacity(l * n_t);
    let mut sweeps = 0;
    for snap in 0..l {
        let y_l = model.y.rows(snap * m_r, m_r).into_owned();
        let hy = model.h_c.adjoint() * &y_l;
        let quad = QuadraticProblem::from_complex_gram(&gram, &hy, y_l.norm_squared(), amplitude)?;
        let signs = if exhaustive {
            quad.exhaustive(SNAPSHOT_ENUMERATION_BUDGET_LOG2)?.0
        } else {
            let out = sdr::solve(&quad, rng, &opts.sdr)?;
            sweeps += out.sweeps;
            out.signs
        };
        symbols.extend(quadratic::symbol_indices(&signs));
    }
    let x_hat = CVector::from_iterator(
        symbols.len(),
        symbols
            .iter()
            .map(|&k| cfg.constellation.point(k, amplitude)),
    );
    Ok((x_hat, symbols, sweeps))
}

/// Decode with the echo treated as noise, subtract, estimate.
pub fn run_sic_receiver<R: Rng + ?Sized>(
    model: &StackedModel,
    cfg: &SystemConfig,
    opts: &DetectorOptions,
    rng: &mut R,
) -> Result<DetectionResult> {
    let (x_hat, symbols, sweeps) = detect_sic(model, cfg, opts, rng)?;
    let h_hat = ls_target_estimate(model, &x_hat)?;
    let objective = (&model.y - &model.a_c * &x_hat).norm_squared();
    Ok(DetectionResult {
        x_hat,
        symbols,
        h_hat,
        objective,
        method: Method::Sic,
        identifiable: true,
        sdr_sweeps: sweeps,
    })
}

/// Genie-aided estimation: the transmitted block is known.
pub fn run_genie_receiver(
    model: &StackedModel,
    cfg: &SystemConfig,
    x_true: &CVector,
) -> Result<DetectionResult> {
    let amplitude = cfg.symbol_amplitude();
    let symbols = symbol_indices_of(x_true, cfg, amplitude)?;
    let h_hat = ls_target_estimate(model, x_true)?;
    let objective = (&model.y - &model.a_c * x_true - model.a_r() * &h_hat).norm_squared();
    Ok(DetectionResult {
        x_hat: x_true.clone(),
        symbols,
        h_hat,
        objective,
        method: Method::Genie,
        identifiable: true,
        sdr_sweeps: 0,
    })
}

/// Symbol indices of an alphabet-exact block.
pub fn symbol_indices_of(x: &CVector, cfg: &SystemConfig, amplitude: f64) -> Result<Vec<usize>> {
    x.iter()
        .map(|&z| {
            cfg.constellation
                .index_of(z, amplitude)
                .ok_or_else(|| Error::invalid(format!("{z} is not a constellation point")))
        })
        .collect()
}

/// `‖y − A_c x − A_r ĥ(x)‖²`.
pub fn joint_objective(model: &StackedModel, x: &CVector, h: &CVector) -> f64 {
    (&model.y - &model.a_c * x - model.a_r() * h).norm_squared()
}

/// `‖Γ(y − A_c x)‖²`.
pub fn projected_objective(model: &StackedModel, x: &CVector) -> f64 {
    (model.gamma() * (&model.y - &model.a_c * x)).norm_squared()
}

pub(crate) fn qpsk_block(symbols: &[usize], cfg: &SystemConfig) -> CVector {
    let a = cfg.symbol_amplitude();
    CVector::from_iterator(
        symbols.len(),
        symbols.iter().map(|&k| cfg.constellation.point(k, a)),
    )
}
