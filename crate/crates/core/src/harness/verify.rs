//! Invariant suite run by `dfrc verify`.
//!
//! Each check reduces a family of seeded instances to one residual (the
//! worst case over the family) and compares it with a tolerance.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis;
use crate::error::Result;
use crate::linalg::{self, CMatrix, CVector};
use crate::receivers::{self, quadratic::QuadraticProblem, sdr, DetectorOptions, SdrOptions};
use crate::scene::{self, RadarOperators, Scene, StackedModel, SystemConfig};

/// Deliberate defects used to confirm that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Build `Γ` and `Ξ` without the Gram inverse `(A_rᴴA_r)⁻¹`.
    DropGramInverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub tolerance: f64,
    pub residual: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<32} {:>12} {:>12}  status",
            "check", "residual", "tolerance"
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<32} {:>12.3e} {:>12.3e}  {}",
                c.name,
                c.residual,
                c.tolerance,
                if c.passed() { "ok" } else { "FAIL" }
            )?;
        }
        let failed = self.failures().count();
        write!(
            f,
            "{} checks, {failed} failed (seed {})",
            self.checks.len(),
            self.seed
        )
    }
}

pub fn verify(seed: u64) -> Result<VerifyReport> {
    run(seed, None)
}

pub fn verify_with_fault(seed: u64, fault: Fault) -> Result<VerifyReport> {
    run(seed, Some(fault))
}

struct Instance {
    cfg: SystemConfig,
    scene: Scene,
    model: StackedModel,
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| scene::complex_gaussian(rng, 1.0))
}

/// A scene with a generic (non-orthogonal) waveform, so that `A_rᴴA_r ≠ cI`.
fn instance(rng: &mut ChaCha8Rng, cfg: SystemConfig, fault: Option<Fault>) -> Result<Instance> {
    let h_c = scene::gen_comm_channel(rng, cfg.m_r, cfg.n_t);
    let target = scene::gen_target_scene(rng, &cfg.target);
    let h_r = scene::build_target_response(&target, cfg.m_r, cfg.m_t, cfg.d_over_lambda);
    let x_r = gaussian(rng, cfg.m_t, cfg.snapshots) * linalg::C64::from(cfg.p_r.sqrt());
    let sc = Scene::new(h_c, h_r, x_r)?;
    let x_c = scene::gen_symbols(rng, &cfg, cfg.snapshots);
    let y = scene::synthesize_block(&sc, &x_c, rng, cfg.sigma2)?;
    let mut ops = RadarOperators::new(&sc.x_r, cfg.m_r)?;
    if fault == Some(Fault::DropGramInverse) {
        ops = ops.with_gram_inverse_dropped();
    }
    let model = StackedModel::new(Arc::new(ops), &sc.h_c, &y)?;
    Ok(Instance {
        cfg,
        scene: sc,
        model,
    })
}

fn tiny_config(rng: &mut ChaCha8Rng) -> SystemConfig {
    SystemConfig {
        m_t: 1,
        m_r: rng.random_range(1..=3),
        n_t: rng.random_range(1..=2),
        snapshots: rng.random_range(2..=4),
        sigma2: if rng.random::<bool>() { 0.1 } else { 0.01 },
        p_r: 0.5,
        ..Default::default()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn run(seed: u64, fault: Option<Fault>) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let worst = |name: &'static str| (name, 0.0f64);
    let mut gamma_herm = worst("gamma_hermitian");
    let mut gamma_idem = worst("gamma_idempotent");
    let mut gamma_ann = worst("gamma_annihilates_radar");
    let mut xi_inv = worst("xi_inverts_radar_gram");
    let mut g_rank = worst("projected_channel_rank");
    let mut split = worst("minimal_estimation_error");
    let mut echo = worst("projection_removes_echo");

    let shapes = [(4, 8, 8, 20), (2, 3, 2, 5), (1, 2, 2, 4), (3, 4, 1, 6)];
    for &(m_t, m_r, n_t, l) in &shapes {
        for _ in 0..3 {
            let cfg = SystemConfig {
                m_t,
                m_r,
                n_t,
                snapshots: l,
                ..Default::default()
            };
            let inst = instance(&mut rng, cfg, fault)?;
            let m = &inst.model;
            let gamma = m.gamma();
            let scale = gamma.norm().max(1.0);
            gamma_herm.1 = gamma_herm.1.max((gamma - gamma.adjoint()).norm() / scale);
            gamma_idem.1 = gamma_idem.1.max((gamma * gamma - gamma).norm() / scale);
            gamma_ann.1 = gamma_ann.1.max((gamma * m.a_r()).norm() / m.a_r().norm());
            let gram = m.a_r().adjoint() * m.a_r();
            let eye = linalg::eye(gram.nrows());
            xi_inv.1 = xi_inv.1.max((m.xi() * &gram - &eye).norm() / eye.norm());
            let want = (l - m_t) * n_t;
            let got = linalg::numerical_rank(&m.g, linalg::RANK_TOL);
            g_rank.1 = g_rank.1.max(got.abs_diff(want) as f64);

            // ‖y − A_c x − A_r ĥ(x)‖² = ‖Γ(y − A_c x)‖² for arbitrary x
            for _ in 0..4 {
                let x =
                    CVector::from_fn(m.a_c.ncols(), |_, _| scene::complex_gaussian(&mut rng, 1.0));
                let r = &m.y - &m.a_c * &x;
                let h = m.xi() * (m.a_r().adjoint() * &r);
                let lhs = (&r - m.a_r() * h).norm_squared();
                let rhs = (gamma * &r).norm_squared();
                split.1 = split.1.max(rel(lhs, rhs));
            }

            let h = linalg::vec(&inst.scene.h_r);
            echo.1 = echo
                .1
                .max((gamma * (m.a_r() * &h)).norm() / (m.a_r() * &h).norm().max(1e-300));
        }
    }

    // joint ML versus projection + exhaustive detection + LS estimate
    let mut symbols = worst("joint_ml_symbol_mismatches");
    let mut target = worst("joint_ml_target_estimate");
    for _ in 0..12 {
        let cfg = tiny_config(&mut rng);
        let inst = instance(&mut rng, cfg, fault)?;
        let joint = receivers::exhaustive_joint_ml(&inst.model, &inst.cfg)?;
        let proj = receivers::run_projection_receiver(
            &inst.model,
            &inst.cfg,
            &DetectorOptions::exhaustive(),
            &mut rng,
        )?;
        if joint.symbols != proj.symbols {
            symbols.1 += 1.0;
        } else {
            let d = (&joint.h_hat - &proj.h_hat).norm() / joint.h_hat.norm().max(1.0);
            target.1 = target.1.max(d);
        }
    }

    // SDR against exhaustive search on small binary problems
    let mut sdr_miss = worst("sdr_disagreement_rate");
    let trials = 40;
    for _ in 0..trials {
        let n = 6;
        let hm = nalgebra::DMatrix::from_fn(8, n, |_, _| rng.random::<f64>() - 0.5);
        let s: Vec<f64> = (0..n)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let noise = nalgebra::DVector::from_fn(8, |_, _| 0.02 * (rng.random::<f64>() - 0.5));
        let b = &hm * nalgebra::DVector::from_vec(s) + noise;
        let problem = QuadraticProblem::from_real(&hm, &b)?;
        let (best, f_best) = problem.exhaustive(20)?;
        let out = sdr::solve(&problem, &mut rng, &SdrOptions::default())?;
        if out.signs != best && out.objective > f_best + 1e-9 {
            sdr_miss.1 += 1.0 / trials as f64;
        }
    }

    // closed forms at the default operating point
    let cfg = SystemConfig::default();
    let mut crb = worst("crb_orthogonal_closed_form");
    let mut rate_ratio = worst("projection_rate_ratio");
    let mut rate_g = worst("projection_rate_from_spectrum");
    let mut budget = worst("waterfill_budget");
    for _ in 0..4 {
        let x_r = scene::gen_orthogonal_waveform(&mut rng, cfg.m_t, cfg.snapshots, cfg.p_r)?;
        let r = &x_r * x_r.adjoint() / linalg::C64::from(cfg.snapshots as f64);
        let c = analysis::crb_target_response(&r, cfg.sigma2, cfg.m_r, cfg.snapshots)?;
        crb.1 = crb.1.max(rel(c, analysis::crb_orthogonal(&cfg)));

        let h_c = scene::gen_comm_channel(&mut rng, cfg.m_r, cfg.n_t);
        let rates = analysis::ergodic_rates(&h_c, &cfg, analysis::sinr_sic_expected(&cfg))?;
        let ratio = 1.0 - cfg.m_t as f64 / cfg.snapshots as f64;
        rate_ratio.1 = rate_ratio
            .1
            .max(rel(rates.rate_projection, ratio * rates.rate_comm_only));
        let ops = RadarOperators::new(&x_r, cfg.m_r)?;
        let g = linalg::kron(&ops.p_perp, &h_c);
        rate_g.1 = rate_g.1.max(rel(
            analysis::projection_rate_from_g(&g, &cfg)?,
            rates.rate_projection,
        ));
        budget.1 = budget.1.max((rates.powers.iter().sum::<f64>() - 1.0).abs());
    }

    let checks = vec![
        (gamma_herm, 1e-9),
        (gamma_idem, 1e-9),
        (gamma_ann, 1e-10),
        (xi_inv, 1e-9),
        (g_rank, 0.0),
        (split, 1e-9),
        (echo, 1e-9),
        (symbols, 0.0),
        (target, 1e-9),
        (sdr_miss, 0.05),
        (crb, 1e-9),
        (rate_ratio, 1e-12),
        (rate_g, 1e-6),
        (budget, 1e-9),
    ]
    .into_iter()
    .map(|((name, residual), tolerance)| Check {
        name,
        tolerance,
        residual,
    })
    .collect();
    Ok(VerifyReport { seed, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes() {
        let report = verify(1).unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn dropped_gram_inverse_is_caught() {
        let report = verify_with_fault(1, Fault::DropGramInverse).unwrap();
        let failed: Vec<_> = report.failures().map(|c| c.name).collect();
        for name in [
            "gamma_idempotent",
            "gamma_annihilates_radar",
            "xi_inverts_radar_gram",
        ] {
            assert!(failed.contains(&name), "{name} not flagged:\n{report}");
        }
    }
}
