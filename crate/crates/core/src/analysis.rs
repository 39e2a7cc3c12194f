//! Closed-form and Monte Carlo performance figures: projected SNR versus SIC
//! SINR, the target-response CRB, water-filled ergodic rates, and the
//! BER/BLER/NMSE error metrics.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::scene::{self, RadarOperators, Scene, SystemConfig};

/// `SNR_P = P_c / σ²`: projection scales signal and noise alike.
pub fn snr_projected_theory(cfg: &SystemConfig) -> Result<f64> {
    if !(cfg.sigma2 > 0.0) {
        return Err(Error::invalid("SNR is undefined for zero noise power"));
    }
    Ok(cfg.p_c / cfg.sigma2)
}

/// SIC SINR with expectations taken under the configured scene prior:
/// `E‖A_c x_c‖² = L M_r P_c`, `E‖A_r h_r‖² = L P_r E‖H_r‖_F² / M_t`,
/// `E‖n‖² = L M_r σ²`.
pub fn sinr_sic_expected(cfg: &SystemConfig) -> f64 {
    let m_r = cfg.m_r as f64;
    let comm = m_r * cfg.p_c;
    let radar = cfg.p_r * cfg.target.expected_response_energy() / cfg.m_t as f64;
    comm / (radar + m_r * cfg.sigma2)
}

/// Sample means of the signal, interference and noise energies of a block,
/// before and after projection.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PowerBudget {
    pub comm: f64,
    pub radar: f64,
    pub noise: f64,
    pub comm_projected: f64,
    pub noise_projected: f64,
    pub draws: usize,
}

impl PowerBudget {
    /// `E‖ΓA_c x_c‖² / E‖Γn‖²`.
    pub fn snr_projected(&self) -> f64 {
        self.comm_projected / self.noise_projected
    }

    /// `E‖A_c x_c‖² / (E‖A_r h_r‖² + E‖n‖²)`.
    pub fn sinr_sic(&self) -> f64 {
        self.comm / (self.radar + self.noise)
    }
}

/// Draws `trials` independent scenes (channel, target, waveform, symbols,
/// noise) and averages the block energies. Projection is skipped when
/// `with_projection` is false.
pub fn empirical_power_budget<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    trials: usize,
    rng: &mut R,
    with_projection: bool,
) -> Result<PowerBudget> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if !(cfg.sigma2 > 0.0) {
        return Err(Error::invalid("SNR is undefined for zero noise power"));
    }
    let mut acc = PowerBudget::default();
    for _ in 0..trials {
        let h_c = scene::gen_comm_channel(rng, cfg.m_r, cfg.n_t);
        let target = scene::gen_target_scene(rng, &cfg.target);
        let h_r = scene::build_target_response(&target, cfg.m_r, cfg.m_t, cfg.d_over_lambda);
        let x_r = scene::gen_orthogonal_waveform(rng, cfg.m_t, cfg.snapshots, cfg.p_r)?;
        let sc = Scene::new(h_c, h_r, x_r)?;
        let x_c = scene::gen_symbols(rng, cfg, cfg.snapshots);
        let block = scene::synthesize_parts(&sc, &x_c, rng, cfg.sigma2)?;
        acc.comm += block.comm.norm_squared();
        acc.radar += block.radar.norm_squared();
        acc.noise += block.noise.norm_squared();
        if with_projection {
            let ops = RadarOperators::new(&sc.x_r, cfg.m_r)?;
            acc.comm_projected += (&ops.gamma * linalg::vec(&block.comm)).norm_squared();
            acc.noise_projected += (&ops.gamma * linalg::vec(&block.noise)).norm_squared();
        }
    }
    let n = trials as f64;
    acc.comm /= n;
    acc.radar /= n;
    acc.noise /= n;
    acc.comm_projected /= n;
    acc.noise_projected /= n;
    acc.draws = trials;
    Ok(acc)
}

/// Monte Carlo `E‖ΓA_c x_c‖² / E‖Γn‖²`.
pub fn snr_projected_empirical<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    empirical_power_budget(cfg, trials, rng, true).map(|b| b.snr_projected())
}

/// Monte Carlo SIC SINR.
pub fn sinr_sic_empirical<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    empirical_power_budget(cfg, trials, rng, false).map(|b| b.sinr_sic())
}

/// CRB of the vectorised target response, `σ² M_r Tr(R⁻¹) / L`.
pub fn crb_target_response(r: &CMatrix, sigma2: f64, m_r: usize, l: usize) -> Result<f64> {
    if !r.is_square() || r.is_empty() {
        return Err(Error::invalid(
            "radar covariance must be a non-empty square matrix",
        ));
    }
    if l == 0 {
        return Err(Error::invalid("need at least one snapshot"));
    }
    let herm = linalg::hermitian_part(r);
    let chol = herm
        .cholesky()
        .ok_or_else(|| Error::invalid("radar covariance is not positive definite"))?;
    let inv = chol.inverse();
    let trace: f64 = (0..inv.nrows()).map(|i| inv[(i, i)].re).sum();
    Ok(sigma2 * m_r as f64 * trace / l as f64)
}

/// CRB achieved by the orthogonal waveform, `σ² M_r M_t² / (L P_r)`.
pub fn crb_orthogonal(cfg: &SystemConfig) -> f64 {
    let m_t = cfg.m_t as f64;
    cfg.sigma2 * cfg.m_r as f64 * m_t * m_t / (cfg.snapshots as f64 * cfg.p_r)
}

/// Water-filling allocation maximising `Σ log₂(1 + snr λ_j P_j)` subject to
/// `Σ P_j ≤ total`, `P_j ≥ 0`.
pub fn waterfill(eigenvalues: &[f64], snr: f64, total_power: f64) -> Result<Vec<f64>> {
    if eigenvalues.iter().any(|&l| !(l.is_finite() && l >= 0.0)) {
        return Err(Error::invalid(
            "eigenvalues must be finite and non-negative",
        ));
    }
    if !(total_power.is_finite() && total_power > 0.0) {
        return Err(Error::invalid("total power must be positive"));
    }
    if !(snr.is_finite() && snr > 0.0) {
        return Err(Error::invalid("SNR must be positive"));
    }
    let mut order: Vec<usize> = (0..eigenvalues.len())
        .filter(|&j| eigenvalues[j] > 0.0)
        .collect();
    if order.is_empty() {
        return Err(Error::invalid("all eigenvalues are zero"));
    }
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
    // floors 1/(snr λ_j), ascending along `order`
    let floors: Vec<f64> = order
        .iter()
        .map(|&j| 1.0 / (snr * eigenvalues[j]))
        .collect();
    let mut active = floors.len();
    let mut level = 0.0;
    let mut floor_sum: f64 = floors.iter().sum();
    while active > 0 {
        level = (total_power + floor_sum) / active as f64;
        if level > floors[active - 1] {
            break;
        }
        active -= 1;
        floor_sum -= floors[active];
    }
    let mut powers = vec![0.0; eigenvalues.len()];
    for (k, &j) in order.iter().take(active).enumerate() {
        powers[j] = level - floors[k];
    }
    Ok(powers)
}

fn rate(eigenvalues: &[f64], snr: f64, powers: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .zip(powers)
        .map(|(l, p)| (1.0 + snr * l * p).log2())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Eigenvalues of `H_cᴴH_c`, descending.
    pub eigenvalues: Vec<f64>,
    /// Water-filling powers at `SNR_Com` (shared by the projection scheme).
    pub powers: Vec<f64>,
    /// Water-filling powers at `SINR_SIC`.
    pub powers_sic: Vec<f64>,
    pub rate_comm_only: f64,
    pub rate_sic: f64,
    pub rate_projection: f64,
}

/// Per-realisation rates of the communication-only link, the SIC receiver
/// and the projection receiver. Powers are fractions of the per-snapshot
/// budget (`Σ P_j = 1`), so `SNR·P_j` is the per-mode SNR.
pub fn ergodic_rates(h_c: &CMatrix, cfg: &SystemConfig, sinr_sic: f64) -> Result<RateReport> {
    if cfg.snapshots <= cfg.m_t {
        return Err(Error::invalid("L must exceed M_t"));
    }
    let snr = snr_projected_theory(cfg)?;
    if !(sinr_sic > 0.0 && sinr_sic <= snr * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!(
            "SIC SINR {sinr_sic} must lie in (0, SNR = {snr}]"
        )));
    }
    let (eigs, _) = linalg::hermitian_eig(&(h_c.adjoint() * h_c))?;
    let eigenvalues: Vec<f64> = eigs.into_iter().map(|l| l.max(0.0)).collect();
    let powers = waterfill(&eigenvalues, snr, 1.0)?;
    let powers_sic = waterfill(&eigenvalues, sinr_sic, 1.0)?;
    let rate_comm_only = rate(&eigenvalues, snr, &powers);
    let rate_sic = rate(&eigenvalues, sinr_sic, &powers_sic).min(rate_comm_only);
    let rate_projection = (1.0 - cfg.m_t as f64 / cfg.snapshots as f64) * rate_comm_only;
    Ok(RateReport {
        eigenvalues,
        powers,
        powers_sic,
        rate_comm_only,
        rate_sic,
        rate_projection,
    })
}

/// Projection-scheme rate from the spectrum of `GᴴG` directly:
/// `(1/L) Σ_i log₂(1 + SNR μ_i P_i)`, water-filled over all `L N_t` modes
/// with the budget of the `rank(G)/N_t` snapshots that survive projection.
pub fn projection_rate_from_g(g: &CMatrix, cfg: &SystemConfig) -> Result<f64> {
    let snr = snr_projected_theory(cfg)?;
    let (mu, _) = linalg::hermitian_eig(&(g.adjoint() * g))?;
    let largest = mu.first().copied().unwrap_or(0.0);
    let mu: Vec<f64> = mu
        .into_iter()
        .map(|m| {
            if m > linalg::RANK_TOL * largest {
                m
            } else {
                0.0
            }
        })
        .collect();
    let rank = mu.iter().filter(|&&m| m > 0.0).count();
    let budget = rank as f64 / cfg.n_t as f64;
    let powers = waterfill(&mu, snr, budget)?;
    Ok(rate(&mu, snr, &powers) / cfg.snapshots as f64)
}

fn symbol_labels(x: &CVector, cfg: &SystemConfig) -> Result<Vec<u32>> {
    let a = cfg.symbol_amplitude();
    x.iter()
        .map(|&z| {
            cfg.constellation
                .index_of(z, a)
                .map(|k| cfg.constellation.label(k))
                .ok_or_else(|| Error::invalid(format!("{z} is not a constellation point")))
        })
        .collect()
}

/// Fraction of wrong bits under the Gray labelling.
pub fn ber(x_true: &CVector, x_hat: &CVector, cfg: &SystemConfig) -> Result<f64> {
    if x_true.len() != x_hat.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            x_true.len(),
            x_hat.len()
        )));
    }
    if x_true.is_empty() {
        return Err(Error::invalid("empty symbol block"));
    }
    let a = symbol_labels(x_true, cfg)?;
    let b = symbol_labels(x_hat, cfg)?;
    let wrong: u32 = a.iter().zip(&b).map(|(p, q)| (p ^ q).count_ones()).sum();
    let bits = x_true.len() as f64 * cfg.constellation.bits_per_symbol() as f64;
    Ok(wrong as f64 / bits)
}

/// Fraction of blocks of `block_symbols` symbols containing an error.
pub fn bler(x_true: &CVector, x_hat: &CVector, block_symbols: usize) -> Result<f64> {
    if x_true.len() != x_hat.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            x_true.len(),
            x_hat.len()
        )));
    }
    if block_symbols == 0 || x_true.is_empty() || !x_true.len().is_multiple_of(block_symbols) {
        return Err(Error::invalid(format!(
            "{} symbols do not split into blocks of {block_symbols}",
            x_true.len()
        )));
    }
    let blocks = x_true.len() / block_symbols;
    let failed = (0..blocks)
        .filter(|&b| {
            let range = b * block_symbols..(b + 1) * block_symbols;
            range.into_iter().any(|i| x_true[i] != x_hat[i])
        })
        .count();
    Ok(failed as f64 / blocks as f64)
}

/// `‖ĥ − h‖² / ‖h‖²`.
pub fn nmse(h_true: &CVector, h_hat: &CVector) -> Result<f64> {
    if h_true.len() != h_hat.len() {
        return Err(Error::invalid("length mismatch"));
    }
    let energy = h_true.norm_squared();
    if !(energy > 0.0) {
        return Err(Error::invalid("NMSE undefined for a zero reference"));
    }
    Ok((h_hat - h_true).norm_squared() / energy)
}

/// Mergeable running mean with standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    pub count: u64,
    sum: f64,
    sum_sq: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Self) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let m = self.sum / n;
        ((self.sum_sq - n * m * m) / (n - 1.0)).max(0.0)
    }

    pub fn std_err(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Mergeable ratio of means `E[a]/E[b]` with a delta-method standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RatioAccumulator {
    pub count: u64,
    sa: f64,
    sb: f64,
    saa: f64,
    sbb: f64,
    sab: f64,
}

impl RatioAccumulator {
    pub fn push(&mut self, a: f64, b: f64) {
        self.count += 1;
        self.sa += a;
        self.sb += b;
        self.saa += a * a;
        self.sbb += b * b;
        self.sab += a * b;
    }

    pub fn merge(&mut self, o: &Self) {
        self.count += o.count;
        self.sa += o.sa;
        self.sb += o.sb;
        self.saa += o.saa;
        self.sbb += o.sbb;
        self.sab += o.sab;
    }

    pub fn ratio(&self) -> f64 {
        self.sa / self.sb
    }

    pub fn std_err(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let (ma, mb) = (self.sa / n, self.sb / n);
        let var_a = (self.saa - n * ma * ma) / (n - 1.0);
        let var_b = (self.sbb - n * mb * mb) / (n - 1.0);
        let cov = (self.sab - n * ma * mb) / (n - 1.0);
        let r = ma / mb;
        let v = (var_a - 2.0 * r * cov + r * r * var_b) / (mb * mb * n);
        v.max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qpsk(cfg: &SystemConfig, idx: &[usize]) -> CVector {
        let a = cfg.symbol_amplitude();
        CVector::from_iterator(
            idx.len(),
            idx.iter().map(|&k| cfg.constellation.point(k, a)),
        )
    }

    #[test]
    fn snr_theory_examples() {
        let cfg = SystemConfig::default();
        assert!((snr_projected_theory(&cfg).unwrap() - 100.0).abs() < 1e-9);
        let unit = SystemConfig {
            sigma2: 1.0,
            ..cfg.clone()
        };
        assert_eq!(snr_projected_theory(&unit).unwrap(), 1.0);
        let silent = SystemConfig { sigma2: 0.0, ..cfg };
        assert!(snr_projected_theory(&silent).is_err());
    }

    #[test]
    fn crb_examples() {
        let cfg = SystemConfig::default();
        let r = linalg::eye(4).scale(cfg.p_r / 4.0);
        let crb = crb_target_response(&r, cfg.sigma2, 8, 20).unwrap();
        assert!((crb - crb_orthogonal(&cfg)).abs() < 1e-12);
        // 0.01·8·16 / (20·10^-0.8)
        assert!((crb - 0.403_812_700_467).abs() < 1e-9, "{crb}");
        let half = crb_target_response(&r, cfg.sigma2, 8, 40).unwrap();
        assert!((half - crb / 2.0).abs() < 1e-15);
        let singular = CMatrix::zeros(2, 2);
        assert!(crb_target_response(&singular, 1.0, 1, 1).is_err());
    }

    /// Water-level bisection, independent of the sorted closed form.
    fn waterfill_bisection(eigs: &[f64], snr: f64, total: f64) -> Vec<f64> {
        let alloc = |mu: f64| -> Vec<f64> {
            eigs.iter()
                .map(|&l| {
                    if l > 0.0 {
                        (mu - 1.0 / (snr * l)).max(0.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        let (mut lo, mut hi) = (
            0.0,
            total
                + eigs
                    .iter()
                    .filter(|&&l| l > 0.0)
                    .map(|l| 1.0 / (snr * l))
                    .sum::<f64>(),
        );
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if alloc(mid).iter().sum::<f64>() > total {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        alloc(0.5 * (lo + hi))
    }

    #[test]
    fn waterfill_examples() {
        assert_eq!(waterfill(&[1.0], 10.0, 2.5).unwrap(), vec![2.5]);
        let p = waterfill(&[2.0, 2.0], 3.0, 1.0).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert!(waterfill(&[0.0, 0.0], 1.0, 1.0).is_err());

        let eigs = [3.1, 0.02, 1.4, 0.6];
        for snr in [0.5, 5.0, 100.0] {
            let p = waterfill(&eigs, snr, 1.0).unwrap();
            let oracle = waterfill_bisection(&eigs, snr, 1.0);
            for (a, b) in p.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-9, "{p:?} vs {oracle:?}");
            }
        }
    }

    #[test]
    fn waterfill_kkt_and_zero_modes() {
        let eigs = [2.0, 0.0, 0.7, 0.1, 1e-3];
        let snr = 20.0;
        let p = waterfill(&eigs, snr, 1.0).unwrap();
        assert_eq!(p[1], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let marginal: Vec<f64> = eigs
            .iter()
            .zip(&p)
            .filter(|(_, &pj)| pj > 0.0)
            .map(|(&l, &pj)| snr * l / (1.0 + snr * l * pj))
            .collect();
        let nu = marginal[0];
        assert!(marginal.iter().all(|m| (m - nu).abs() < 1e-9));
        for (&l, &pj) in eigs.iter().zip(&p) {
            if pj == 0.0 && l > 0.0 {
                assert!(snr * l <= nu + 1e-9);
            }
        }
    }

    #[test]
    fn rates_scale_with_usable_snapshots() {
        let cfg = SystemConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h_c = scene::gen_comm_channel(&mut rng, cfg.m_r, cfg.n_t);
        let rep = ergodic_rates(&h_c, &cfg, sinr_sic_expected(&cfg)).unwrap();
        assert!((rep.rate_projection - 0.8 * rep.rate_comm_only).abs() < 1e-9);
        assert!(rep.rate_sic < rep.rate_comm_only);
        assert!(rep.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        assert!(rep.powers.iter().sum::<f64>() <= 1.0 + 1e-9);

        let same = ergodic_rates(&h_c, &cfg, 100.0).unwrap();
        assert!((same.rate_sic - same.rate_comm_only).abs() < 1e-12);

        let long = SystemConfig {
            snapshots: 1_000_000,
            ..cfg
        };
        let rep = ergodic_rates(&h_c, &long, 50.0).unwrap();
        assert!((rep.rate_projection / rep.rate_comm_only - 1.0).abs() < 1e-5);
    }

    #[test]
    fn sinr_below_projected_snr() {
        let cfg = SystemConfig::default();
        let expected = sinr_sic_expected(&cfg);
        assert!(expected < snr_projected_theory(&cfg).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let empirical = sinr_sic_empirical(&cfg, 400, &mut rng).unwrap();
        assert!(
            (empirical / expected - 1.0).abs() < 0.1,
            "{empirical} vs {expected}"
        );

        let loud = SystemConfig {
            p_r: 100.0,
            ..cfg.clone()
        };
        let empirical = sinr_sic_empirical(&loud, 200, &mut rng).unwrap();
        assert!(empirical < 5.0, "{empirical}");
    }

    #[test]
    fn ber_examples() {
        let cfg = SystemConfig::default();
        let x = qpsk(&cfg, &[0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3]);
        assert_eq!(ber(&x, &x, &cfg).unwrap(), 0.0);
        let flipped = x.map(|z| -z);
        assert_eq!(ber(&x, &flipped, &cfg).unwrap(), 1.0);
        let mut one = x.clone();
        one[5] = C64::new(-one[5].re, one[5].im);
        assert_eq!(ber(&x, &one, &cfg).unwrap(), 1.0 / 32.0);
        assert!(ber(&x, &x.rows(0, 4).into_owned(), &cfg).is_err());
    }

    #[test]
    fn bler_examples() {
        let cfg = SystemConfig::default();
        let x = qpsk(&cfg, &[0; 12]);
        assert_eq!(bler(&x, &x, 4).unwrap(), 0.0);
        let mut every = x.clone();
        for b in 0..3 {
            every[b * 4 + b] = -every[b * 4 + b];
        }
        assert_eq!(bler(&x, &every, 4).unwrap(), 1.0);
        assert!(bler(&x, &x, 5).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pattern = x.clone();
        for i in 0..12 {
            if rng.random::<f64>() < 0.2 {
                pattern[i] = -pattern[i];
            }
        }
        let recount = (0..4)
            .filter(|b| (0..3).any(|i| pattern[b * 3 + i] != x[b * 3 + i]))
            .count();
        assert_eq!(bler(&x, &pattern, 3).unwrap(), recount as f64 / 4.0);
    }

    #[test]
    fn nmse_examples() {
        let h = CVector::from_vec(vec![C64::new(1.0, -2.0), C64::new(0.5, 0.0)]);
        assert_eq!(nmse(&h, &h).unwrap(), 0.0);
        assert_eq!(nmse(&h, &CVector::zeros(2)).unwrap(), 1.0);
        assert!((nmse(&h, &h.scale(2.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!(nmse(&CVector::zeros(2), &h).is_err());
    }

    #[test]
    fn accumulators_merge_associatively() {
        let data: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut whole = MeanAccumulator::default();
        data.iter().for_each(|&x| whole.push(x));
        let mut left = MeanAccumulator::default();
        let mut right = MeanAccumulator::default();
        data[..20].iter().for_each(|&x| left.push(x));
        data[20..].iter().for_each(|&x| right.push(x));
        left.merge(&right);
        assert_eq!(left.count, whole.count);
        assert!((left.mean() - whole.mean()).abs() < 1e-15);
        assert!((left.std_err() - whole.std_err()).abs() < 1e-12);

        let mut r = RatioAccumulator::default();
        r.push(2.0, 1.0);
        r.push(4.0, 2.0);
        assert!((r.ratio() - 2.0).abs() < 1e-15);
        assert!(r.std_err() < 1e-12);
    }
}
