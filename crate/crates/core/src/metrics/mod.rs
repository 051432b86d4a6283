//! Ground-truth matching and the evaluation quantities built on it.

mod bias;
mod matching;
mod residual;
mod sweep;

pub use bias::{pixel_bias_histogram, PixelBias};
pub use matching::{match_localizations, MatchMode, MatchPair, MatchTolerance, Matching};
pub use residual::{residual_convergence, Checkpoint, Convergence, ResidualConfig, ResidualTracker};
pub use sweep::{density_sweep, run_until_converged, SweepOptions, SweepPoint};

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::codec::{LocalizationSet, Seed};
use crate::error::{Error, Result};
use crate::parallel::in_pool;
use crate::sim::EmitterSet;

/// Lateral efficiency weight (1/nm).
pub const ALPHA_LATERAL: f64 = 1.0;
/// Volumetric efficiency weight (1/nm).
pub const ALPHA_3D: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axes {
    Lateral,
    Axial,
    Volumetric,
}

pub fn jaccard(n_tp: usize, n_fp: usize, n_fn: usize) -> Result<f64> {
    let denom = n_tp + n_fp + n_fn;
    if denom == 0 {
        return Err(Error::UndefinedMetric("jaccard index of an empty matching"));
    }
    Ok(n_tp as f64 / denom as f64)
}

pub fn jaccard_index(m: &Matching) -> Result<f64> {
    jaccard(m.n_tp, m.n_fp, m.n_fn)
}

pub fn rmse(m: &Matching, axes: Axes) -> Result<f64> {
    let mut acc = MetricAccumulator::default();
    acc.add(m, 0);
    acc.rmse(axes)
}

/// `100 - sqrt((100·(1 - ji))² + (alpha·rmse)²)`.
pub fn efficiency(ji: f64, rmse: f64, alpha: f64) -> f64 {
    100.0 - (100.0 * (1.0 - ji)).hypot(alpha * rmse)
}

/// Running counts and squared-error sums over any number of frames.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricAccumulator {
    pub n_frames: u64,
    pub n_seeds: u64,
    pub n_tp: usize,
    pub n_fp: usize,
    pub n_fn: usize,
    pub sum_lateral_sq: f64,
    pub sum_axial_sq: f64,
}

impl MetricAccumulator {
    pub fn add(&mut self, m: &Matching, n_seeds: usize) {
        self.n_frames += 1;
        self.n_seeds += n_seeds as u64;
        self.n_tp += m.n_tp;
        self.n_fp += m.n_fp;
        self.n_fn += m.n_fn;
        for p in &m.pairs {
            self.sum_lateral_sq += p.lateral_sq();
            self.sum_axial_sq += p.dz * p.dz;
        }
    }

    pub fn merge(&mut self, other: &MetricAccumulator) {
        self.n_frames += other.n_frames;
        self.n_seeds += other.n_seeds;
        self.n_tp += other.n_tp;
        self.n_fp += other.n_fp;
        self.n_fn += other.n_fn;
        self.sum_lateral_sq += other.sum_lateral_sq;
        self.sum_axial_sq += other.sum_axial_sq;
    }

    pub fn ji(&self) -> Result<f64> {
        jaccard(self.n_tp, self.n_fp, self.n_fn)
    }

    pub fn rmse(&self, axes: Axes) -> Result<f64> {
        if self.n_tp == 0 {
            return Err(Error::UndefinedMetric("rmse without true positives"));
        }
        let sum = match axes {
            Axes::Lateral => self.sum_lateral_sq,
            Axes::Axial => self.sum_axial_sq,
            Axes::Volumetric => self.sum_lateral_sq + self.sum_axial_sq,
        };
        Ok((sum / self.n_tp as f64).sqrt())
    }

    /// Undefined quantities come out as NaN.
    pub fn report(&self, density: f64) -> MetricReport {
        let ji = self.ji().unwrap_or(f64::NAN);
        let rmse_lateral = self.rmse(Axes::Lateral).unwrap_or(f64::NAN);
        let rmse_axial = self.rmse(Axes::Axial).unwrap_or(f64::NAN);
        let rmse_3d = self.rmse(Axes::Volumetric).unwrap_or(f64::NAN);
        MetricReport {
            ji,
            rmse_lateral,
            rmse_axial,
            rmse_3d,
            efficiency_lateral: efficiency(ji, rmse_lateral, ALPHA_LATERAL),
            efficiency_3d: efficiency(ji, rmse_3d, ALPHA_3D),
            n_frames: self.n_frames,
            n_seeds: self.n_seeds,
            n_tp: self.n_tp,
            n_fp: self.n_fp,
            n_fn: self.n_fn,
            density,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub ji: f64,
    pub rmse_lateral: f64,
    pub rmse_axial: f64,
    pub rmse_3d: f64,
    pub efficiency_lateral: f64,
    pub efficiency_3d: f64,
    pub n_frames: u64,
    pub n_seeds: u64,
    pub n_tp: usize,
    pub n_fp: usize,
    pub n_fn: usize,
    pub density: f64,
}

/// Per-frame matchings of a prediction set against ground truth, in frame order.
///
/// Frames present in either input take part; a frame missing from one side
/// counts as empty there.
pub fn match_frames(
    gt: &[EmitterSet],
    pred: &LocalizationSet,
    tol: &MatchTolerance,
    workers: usize,
) -> Result<Vec<(u64, Matching, Vec<Seed>)>> {
    tol.validate()?;
    let mut frames: BTreeMap<u64, (Option<&EmitterSet>, Vec<Seed>)> = BTreeMap::new();
    for set in gt {
        frames.entry(set.frame_id).or_default().0 = Some(set);
    }
    for s in &pred.seeds {
        frames.entry(s.frame_id).or_default().1.push(*s);
    }
    let empty = EmitterSet::default();
    let jobs: Vec<_> = frames.into_iter().collect();
    in_pool(workers, || {
        jobs.into_par_iter()
            .map(|(frame_id, (set, seeds))| {
                let m = match_localizations(set.unwrap_or(&empty), &seeds, tol);
                (frame_id, m, seeds)
            })
            .collect()
    })
}

/// Full evaluation of a prediction set. The reduction runs in frame order, so
/// the result does not depend on `workers`.
pub fn evaluate(
    gt: &[EmitterSet],
    pred: &LocalizationSet,
    tol: &MatchTolerance,
    density: f64,
    workers: usize,
) -> Result<MetricReport> {
    let mut acc = MetricAccumulator::default();
    for (_, m, seeds) in match_frames(gt, pred, tol, workers)? {
        acc.add(&m, seeds.len());
    }
    Ok(acc.report(density))
}
