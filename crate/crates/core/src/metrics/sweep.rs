use rayon::prelude::*;

use super::{match_localizations, Checkpoint, Convergence, MatchTolerance, MetricAccumulator, MetricReport, ResidualConfig, ResidualTracker, Axes};
use crate::codec::{decode, DecodeConfig};
use crate::error::Result;
use crate::oracle::MapSource;
use crate::parallel::in_pool;
use crate::rng::{frame_rng, Purpose};
use crate::sim::{sample_emitters, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub tolerance: MatchTolerance,
    pub residual: ResidualConfig,
    /// Frames always evaluated before the stopping rule may fire.
    pub min_frames: u64,
    pub max_frames: u64,
    /// Stop at convergence; when false every density runs `max_frames`.
    pub stop_on_convergence: bool,
    /// Frames generated per parallel batch. Does not affect results.
    pub batch_frames: u64,
    pub workers: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            tolerance: MatchTolerance::default(),
            residual: ResidualConfig::default(),
            min_frames: 100,
            max_frames: 20_000,
            stop_on_convergence: true,
            batch_frames: 64,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub report: MetricReport,
    pub convergence: Convergence,
    pub checkpoints: Vec<Checkpoint>,
}

/// Simulates, decodes and evaluates frames of `config` one by one until the
/// cumulative metrics stop moving (or `max_frames` is reached).
///
/// Frames are produced in parallel batches but accumulated strictly in frame
/// order, and accumulation stops at the converging frame, so the outcome is
/// independent of batch size and worker count.
pub fn run_until_converged(
    config: &SimConfig,
    decode_cfg: &DecodeConfig,
    source: &dyn MapSource,
    opts: &SweepOptions,
) -> Result<SweepPoint> {
    config.validate()?;
    decode_cfg.validate()?;
    opts.tolerance.validate()?;

    let mut acc = MetricAccumulator::default();
    let mut tracker = ResidualTracker::new(opts.residual.rel_tolerance, opts.residual.patience);
    let mut checkpoints = Vec::new();
    let step = opts.residual.checkpoint_seeds.max(1);
    let mut next_checkpoint = step;
    let mut frame = 0u64;

    'outer: while frame < opts.max_frames {
        let end = (frame + opts.batch_frames.max(1)).min(opts.max_frames);
        let batch: Vec<Result<(super::Matching, usize)>> = in_pool(opts.workers, || {
            (frame..end)
                .into_par_iter()
                .map(|f| {
                    let mut rng = frame_rng(config.rng_seed, f, Purpose::Emitters);
                    let gt = sample_emitters(config, f, &mut rng);
                    let pair = source.predict(config, decode_cfg, &gt)?;
                    let decoded = decode(&pair, decode_cfg, f)?;
                    let m = match_localizations(&gt, &decoded.seeds, &opts.tolerance);
                    Ok((m, decoded.seeds.len()))
                })
                .collect()
        })?;

        for item in batch {
            let (m, n_seeds) = item?;
            acc.add(&m, n_seeds);
            frame += 1;
            if acc.n_seeds >= next_checkpoint {
                let cp = Checkpoint {
                    n_seeds: acc.n_seeds,
                    ji: acc.ji().unwrap_or(f64::NAN),
                    rmse_lateral: acc.rmse(Axes::Lateral).unwrap_or(f64::NAN),
                    rmse_3d: acc.rmse(Axes::Volumetric).unwrap_or(f64::NAN),
                };
                checkpoints.push(cp);
                tracker.push(cp);
                next_checkpoint = (acc.n_seeds / step + 1) * step;
            }
            if opts.stop_on_convergence && frame >= opts.min_frames && tracker.finish().seeds_needed().is_some() {
                break 'outer;
            }
        }
    }

    Ok(SweepPoint {
        report: acc.report(config.density),
        convergence: tracker.finish(),
        checkpoints,
    })
}

/// One [`run_until_converged`] per density, all other settings from `template`.
pub fn density_sweep(
    densities: &[f64],
    template: &SimConfig,
    decode_cfg: &DecodeConfig,
    source: &dyn MapSource,
    opts: &SweepOptions,
) -> Result<Vec<SweepPoint>> {
    densities
        .iter()
        .map(|&density| {
            let config = SimConfig {
                density,
                ..template.clone()
            };
            run_until_converged(&config, decode_cfg, source, opts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ExactOracle;

    #[test]
    fn empty_density_list() {
        let out = density_sweep(&[], &SimConfig::default(), &DecodeConfig::default(), &ExactOracle, &SweepOptions::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn exact_oracle_with_separation_is_perfect() {
        let template = SimConfig {
            min_separation: 100.0,
            ..SimConfig::default()
        };
        let opts = SweepOptions {
            max_frames: 200,
            ..SweepOptions::default()
        };
        let out = density_sweep(&[2.376033], &template, &DecodeConfig::default(), &ExactOracle, &opts).unwrap();
        assert_eq!(out.len(), 1);
        let r = out[0].report;
        assert_eq!(r.density, 2.376033);
        assert!((r.ji - 1.0).abs() < 1e-3, "{r:?}");
        assert!(r.rmse_lateral < 2.0);
    }

    #[test]
    fn batch_size_does_not_change_results() {
        let cfg = SimConfig {
            density: 3.0,
            ..SimConfig::default()
        };
        let a = SweepOptions {
            max_frames: 150,
            batch_frames: 7,
            workers: 2,
            ..SweepOptions::default()
        };
        let b = SweepOptions {
            batch_frames: 64,
            workers: 1,
            ..a
        };
        let source = crate::oracle::NoisyOracle::default();
        let ra = run_until_converged(&cfg, &DecodeConfig::default(), &source, &a).unwrap();
        let rb = run_until_converged(&cfg, &DecodeConfig::default(), &source, &b).unwrap();
        assert_eq!(ra, rb);
    }
}
