//! Seeded Monte Carlo sweeps over the receiver chains.
//!
//! Every trial draws a fresh channel, target, symbol block and noise from its
//! own generator, seeded from `(master_seed, sweep_index, trial_index)`; the
//! radar waveform is drawn once per sweep point. Trials run on the rayon pool
//! and are folded in trial order, so results do not depend on the number of
//! threads.

pub mod config;
pub mod emit;
pub mod verify;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{self, MeanAccumulator, RatioAccumulator};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::receivers::{self, DetectionResult, DetectorOptions, Method};
use crate::scene::{self, RadarOperators, Scene, StackedModel, SystemConfig};

pub use config::{
    parse_schemes, ExperimentConfig, NmseAggregation, OutputFormat, SweepSpec, SweepVar,
};
pub use emit::{emit_results, parse_results_csv, parse_results_json, read_results, MetricsRecord};
pub use verify::{verify, verify_with_fault, Check, Fault, VerifyReport};

/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "DFRC_THREADS";

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` at sweep point `sweep`.
pub fn trial_seed(master: u64, sweep: u64, trial: u64) -> u64 {
    splitmix(splitmix(splitmix(master) ^ sweep) ^ trial)
}

/// Seed of the radar waveform at sweep point `sweep`.
pub fn waveform_seed(master: u64, sweep: u64) -> u64 {
    trial_seed(master, sweep, u64::MAX)
}

/// Detector randomness is kept apart from the scene draws, one stream per
/// scheme, so adding a scheme does not change the others' results.
fn detector_rng(seed: u64, method: Method) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ (0xD7C0_0000 + method as u64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Mean,
    /// Ratio of sample means.
    Ratio,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    scheme: Method,
    metric: &'static str,
    kind: Kind,
}

fn cells(schemes: &[Method], nmse: NmseAggregation) -> Vec<Cell> {
    let nmse_kind = match nmse {
        NmseAggregation::MeanOfRatios => Kind::Mean,
        NmseAggregation::RatioOfMeans => Kind::Ratio,
    };
    let mut out = Vec::new();
    let mut add = |scheme, metric, kind| {
        out.push(Cell {
            scheme,
            metric,
            kind,
        })
    };
    for &s in schemes {
        match s {
            Method::Sic => {
                for m in ["ber", "bler"] {
                    add(s, m, Kind::Mean);
                }
                add(s, "nmse", nmse_kind);
                add(s, "rate", Kind::Mean);
                add(s, "sinr", Kind::Ratio);
            }
            Method::Projection => {
                for m in ["ber", "bler"] {
                    add(s, m, Kind::Mean);
                }
                add(s, "nmse", nmse_kind);
                add(s, "rate", Kind::Mean);
                add(s, "rate_comm_only", Kind::Mean);
                add(s, "snr", Kind::Ratio);
            }
            Method::JointMl => {
                for m in ["ber", "bler"] {
                    add(s, m, Kind::Mean);
                }
                add(s, "nmse", nmse_kind);
            }
            Method::Genie => {
                add(s, "nmse", nmse_kind);
                add(s, "crb", nmse_kind);
            }
        }
    }
    out
}

/// Quantities fixed for a sweep point.
struct Point {
    cfg: SystemConfig,
    x_r: CMatrix,
    radar: Arc<RadarOperators>,
    crb: f64,
    sinr_sic: f64,
}

impl Point {
    fn new(cfg: SystemConfig, master: u64, sweep: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(waveform_seed(master, sweep));
        let x_r = scene::gen_orthogonal_waveform(&mut rng, cfg.m_t, cfg.snapshots, cfg.p_r)?;
        let radar = Arc::new(RadarOperators::new(&x_r, cfg.m_r)?);
        let r = &x_r * x_r.adjoint() / linalg::C64::from(cfg.snapshots as f64);
        let crb = analysis::crb_target_response(&r, cfg.sigma2, cfg.m_r, cfg.snapshots)?;
        let sinr_sic = analysis::sinr_sic_expected(&cfg);
        Ok(Self {
            cfg,
            x_r,
            radar,
            crb,
            sinr_sic,
        })
    }
}

/// Per-trial samples aligned with [`cells`]: `(numerator, denominator)`,
/// `None` when undefined for this trial. Mean cells average the quotient.
type Samples = Vec<Option<(f64, f64)>>;

fn run_trial(
    point: &Point,
    cells: &[Cell],
    schemes: &[Method],
    opts: &DetectorOptions,
    seed: u64,
) -> Result<Samples> {
    let cfg = &point.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_c = scene::gen_comm_channel(&mut rng, cfg.m_r, cfg.n_t);
    let target = scene::gen_target_scene(&mut rng, &cfg.target);
    let h_r = scene::build_target_response(&target, cfg.m_r, cfg.m_t, cfg.d_over_lambda);
    let sc = Scene::new(h_c, h_r, point.x_r.clone())?;
    let x_c = scene::gen_symbols(&mut rng, cfg, cfg.snapshots);
    let parts = scene::synthesize_parts(&sc, &x_c, &mut rng, cfg.sigma2)?;
    let model = StackedModel::new(point.radar.clone(), &sc.h_c, &parts.total())?;

    let x_true = linalg::vec(&x_c);
    let h_true = linalg::vec(&sc.h_r);
    let h_energy = h_true.norm_squared();
    let rates = if schemes
        .iter()
        .any(|m| matches!(m, Method::Sic | Method::Projection))
    {
        Some(analysis::ergodic_rates(&sc.h_c, cfg, point.sinr_sic)?)
    } else {
        None
    };

    let mut results: Vec<(Method, DetectionResult)> = Vec::with_capacity(schemes.len());
    for &m in schemes {
        let mut drng = detector_rng(seed, m);
        let det = match m {
            Method::Sic => receivers::run_sic_receiver(&model, cfg, opts, &mut drng)?,
            Method::Projection => receivers::run_projection_receiver(&model, cfg, opts, &mut drng)?,
            Method::JointMl => receivers::exhaustive_joint_ml(&model, cfg)?,
            Method::Genie => receivers::run_genie_receiver(&model, cfg, &x_true)?,
        };
        results.push((m, det));
    }

    let mut out = Vec::with_capacity(cells.len());
    for cell in cells {
        let det = &results
            .iter()
            .find(|(m, _)| *m == cell.scheme)
            .expect("scheme was run")
            .1;
        let mean = |x: f64| Some((x, 1.0));
        let sample = match cell.metric {
            "ber" => mean(analysis::ber(&x_true, &det.x_hat, cfg)?),
            "bler" => mean(analysis::bler(&x_true, &det.x_hat, x_true.len())?),
            "nmse" if h_energy > 0.0 => Some(((&det.h_hat - &h_true).norm_squared(), h_energy)),
            "crb" if h_energy > 0.0 => Some((point.crb, h_energy)),
            "nmse" | "crb" => None,
            "rate" => {
                let r = rates.as_ref().expect("rates computed");
                mean(if cell.scheme == Method::Sic {
                    r.rate_sic
                } else {
                    r.rate_projection
                })
            }
            "rate_comm_only" => mean(rates.as_ref().expect("rates computed").rate_comm_only),
            "sinr" => Some((
                parts.comm.norm_squared(),
                parts.radar.norm_squared() + parts.noise.norm_squared(),
            )),
            "snr" => {
                let p = &point.radar.p_perp.transpose();
                Some((
                    (&parts.comm * p).norm_squared(),
                    (&parts.noise * p).norm_squared(),
                ))
            }
            other => unreachable!("unhandled metric {other}"),
        };
        out.push(sample);
    }
    Ok(out)
}

/// Runs every sweep point of `cfg` on the current rayon pool.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<MetricsRecord>> {
    cfg.validate()?;
    let cells = cells(&cfg.schemes, cfg.nmse_aggregation);
    let mut records = Vec::new();
    for (index, (value, system)) in cfg.points()?.into_iter().enumerate() {
        let point = Point::new(system, cfg.master_seed, index as u64)?;
        let samples: Vec<Samples> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(cfg.master_seed, index as u64, t);
                run_trial(&point, &cells, &cfg.schemes, &cfg.detector, seed)
            })
            .collect::<Result<_>>()?;
        for (c, cell) in cells.iter().enumerate() {
            let (mean, std_err, n) = match cell.kind {
                Kind::Mean => {
                    let mut acc = MeanAccumulator::default();
                    samples
                        .iter()
                        .filter_map(|s| s[c])
                        .for_each(|(a, b)| acc.push(a / b));
                    (acc.mean(), acc.std_err(), acc.count as usize)
                }
                Kind::Ratio => {
                    let mut acc = RatioAccumulator::default();
                    samples
                        .iter()
                        .filter_map(|s| s[c])
                        .for_each(|(a, b)| acc.push(a, b));
                    (acc.ratio(), acc.std_err(), acc.count as usize)
                }
            };
            if n == 0 {
                continue;
            }
            records.push(MetricsRecord {
                sweep_var: cfg.sweep.var.name().to_string(),
                sweep_value: value,
                scheme: cell.scheme.name().to_string(),
                metric: cell.metric.to_string(),
                mean,
                std_err: if std_err.is_finite() { std_err } else { 0.0 },
                trials: n,
                master_seed: cfg.master_seed,
            });
        }
    }
    Ok(records)
}

/// [`run_sweep`] on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(
    cfg: &ExperimentConfig,
    threads: usize,
) -> Result<Vec<MetricsRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| run_sweep(cfg))
}

/// Worker count requested through [`THREADS_ENV`], if any.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| {
                Error::config(format!(
                    "{THREADS_ENV} must be a positive integer, got '{v}'"
                ))
            }),
        Err(_) => Ok(None),
    }
}

/// Looks up one aggregated cell.
pub fn find_record<'a>(
    records: &'a [MetricsRecord],
    value: f64,
    scheme: Method,
    metric: &str,
) -> Option<&'a MetricsRecord> {
    records
        .iter()
        .find(|r| r.sweep_value == value && r.scheme == scheme.name() && r.metric == metric)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig::from_json_str(
            r#"{"system": {"M_t": 1, "M_r": 2, "N_t": 2, "L": 3}, "sweep": "L=2:4:1",
                "trials": 6, "seed": 9, "schemes": "sic,projection,joint_ml,genie", "detector": "exhaustive"}"#,
        )
        .unwrap()
    }

    #[test]
    fn seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for s in 0..20 {
            for t in 0..200 {
                assert!(seen.insert(trial_seed(1, s, t)));
            }
            assert!(seen.insert(waveform_seed(1, s)));
        }
    }

    #[test]
    fn sweep_produces_every_cell() {
        let cfg = tiny();
        let recs = run_sweep(&cfg).unwrap();
        let per_point = cells(&cfg.schemes, cfg.nmse_aggregation).len();
        assert_eq!(recs.len(), 3 * per_point);
        assert!(recs
            .iter()
            .all(|r| r.trials == 6 && r.master_seed == 9 && r.mean.is_finite()));
        let crb = find_record(&recs, 3.0, Method::Genie, "crb").unwrap();
        assert!(crb.mean > 0.0);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = tiny();
        assert_eq!(
            run_sweep_with_threads(&cfg, 1).unwrap(),
            run_sweep_with_threads(&cfg, 3).unwrap()
        );
    }
}
