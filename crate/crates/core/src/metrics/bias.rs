use ndarray::Array2;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::codec::LocalizationSet;
use crate::error::{Error, Result};

/// Distribution of sub-pixel positions, for spotting a pull toward pixel centres or edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelBias {
    /// `[row, col]` = `[y fraction bin, x fraction bin]`.
    pub histogram: Array2<u64>,
    pub chi_square: f64,
    pub dof: usize,
    /// Probability of a statistic at least this large under uniformity.
    pub p_value: f64,
    /// Fewer than `100·n_bins` seeds; the p-value is unreliable.
    pub too_few_seeds: bool,
}

/// 2D histogram of `(x mod pitch_x, y mod pitch_y) / pitch` and a chi-square
/// test of it against the uniform distribution.
pub fn pixel_bias_histogram(pred: &LocalizationSet, pixel_pitch: (f64, f64), n_bins: usize) -> Result<PixelBias> {
    if n_bins == 0 {
        return Err(Error::InvalidConfig("n_bins must be > 0".into()));
    }
    if pred.is_empty() {
        return Err(Error::UndefinedMetric("pixel bias of an empty localization set"));
    }
    let bin = |pos: f64, pitch: f64| {
        let frac = (pos / pitch).rem_euclid(1.0);
        ((frac * n_bins as f64) as usize).min(n_bins - 1)
    };
    let mut histogram = Array2::zeros((n_bins, n_bins));
    for s in &pred.seeds {
        histogram[[bin(s.y, pixel_pitch.1), bin(s.x, pixel_pitch.0)]] += 1u64;
    }
    let cells = (n_bins * n_bins) as f64;
    let expected = pred.len() as f64 / cells;
    let chi_square: f64 = histogram.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let dof = n_bins * n_bins - 1;
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive dof");
        dist.sf(chi_square)
    };
    Ok(PixelBias {
        histogram,
        chi_square,
        dof,
        p_value,
        too_few_seeds: pred.len() < 100 * n_bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Seed;
    use rand::Rng;

    fn seed(x: f64, y: f64) -> Seed {
        Seed {
            frame_id: 0,
            x,
            y,
            z: 0.0,
            peak_magnitude: 1.0,
            peak_sharpness: 1.0,
            phase_dispersion: 0.0,
        }
    }

    #[test]
    fn uniform_fractions_pass() {
        let mut rng = crate::rng::seeded_rng(4);
        let set: LocalizationSet = (0..10_000)
            .map(|_| seed(rng.random_range(0.0..4000.0), rng.random_range(0.0..4000.0)))
            .collect();
        let b = pixel_bias_histogram(&set, (100.0, 100.0), 16).unwrap();
        assert!(b.p_value > 0.01, "p = {}", b.p_value);
        assert!(!b.too_few_seeds);
        assert_eq!(b.histogram.sum(), 10_000);
    }

    #[test]
    fn pixel_centre_pileup_fails() {
        let set: LocalizationSet = (0..2000).map(|i| seed(50.0 + 100.0 * (i % 40) as f64, 250.0)).collect();
        let b = pixel_bias_histogram(&set, (100.0, 100.0), 16).unwrap();
        assert!(b.p_value < 1e-6);
    }

    #[test]
    fn few_seeds_flagged() {
        let set: LocalizationSet = (0..10).map(|i| seed(i as f64, 0.0)).collect();
        assert!(pixel_bias_histogram(&set, (100.0, 100.0), 16).unwrap().too_few_seeds);
    }
}
