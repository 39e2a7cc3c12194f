use super::{qpsk_block, DetectionResult, Method, BLOCK_ENUMERATION_BUDGET_LOG2};
use crate::error::{Error, Result};
use crate::linalg::LeastSquares;
use crate::scene::{StackedModel, SystemConfig};

/// Joint ML over `(x, h_r)` by enumerating every symbol block.
///
/// For each candidate the inner minimisation over `h_r` is solved with a QR
/// least-squares solve against `A_r`, independently of `Ξ` and `Γ`.
/// Candidates are visited in lexicographic order of their symbol indices and
/// only a strictly better objective (beyond the tie tolerance) replaces the
/// incumbent, so ties go to the lexicographically smallest block.
pub fn exhaustive_joint_ml(model: &StackedModel, cfg: &SystemConfig) -> Result<DetectionResult> {
    let n = model.a_c.ncols();
    let q = cfg.constellation.size();
    let log2_candidates = (q as f64).log2() * n as f64;
    if log2_candidates > BLOCK_ENUMERATION_BUDGET_LOG2 as f64 {
        return Err(Error::Capacity {
            log2_candidates,
            log2_budget: BLOCK_ENUMERATION_BUDGET_LOG2,
        });
    }
    let ls = LeastSquares::new(model.a_r(), "A_r")?;
    let tol = super::quadratic::TIE_TOL * model.y.norm_squared().max(1.0);

    let mut digits = vec![0usize; n];
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let x = qpsk_block(&digits, cfg);
        let residual = &model.y - &model.a_c * &x;
        let h = ls.solve(&residual)?;
        let objective = (&residual - model.a_r() * &h).norm_squared();
        if best.as_ref().is_none_or(|(_, f)| objective < f - tol) {
            best = Some((digits.clone(), objective));
        }
        // odometer, last digit fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                let (symbols, objective) = best.expect("at least one candidate");
                let x_hat = qpsk_block(&symbols, cfg);
                let h_hat = ls.solve(&(&model.y - &model.a_c * &x_hat))?;
                return Ok(DetectionResult {
                    x_hat,
                    symbols,
                    h_hat,
                    objective,
                    method: Method::JointMl,
                    identifiable: true,
                    sdr_sweeps: 0,
                });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < q {
                break;
            }
            digits[pos] = 0;
        }
    }
}
