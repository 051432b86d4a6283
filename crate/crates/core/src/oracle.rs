//! Map-pair producers that stand in for network inference.
//!
//! [`ExactOracle`] returns the encoded ground truth. [`NoisyOracle`] models
//! what a regression network trained with a squared-error loss should output
//! when its position estimate is uncertain: the target convolved with its
//! posterior. A lateral posterior of width `σ_e` turns the target Gaussian
//! into one of width `sqrt(σ_t² + σ_e²)` and peak `σ_t²/(σ_t² + σ_e²)`,
//! and a Gaussian phase posterior of width `σ_φ` scales the phasor by
//! `exp(-σ_φ²/2)`. The posterior is centred on a noisy estimate whose spread
//! follows the shot-noise limit of Gaussian PSF fitting.

use std::ops::Range;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::codec::{decode, encode_targets, splat_gaussian, ComplexMapPair, DecodeConfig, LocalizationSet, AMPLITUDE};
use crate::error::Result;
use crate::parallel::in_pool;
use crate::rng::{frame_rng, Purpose};
use crate::sim::{psf_sigmas, sample_emitters, EmitterSet, Modality, SimConfig};

/// Anything that turns a simulated frame into a complex map pair.
pub trait MapSource: Sync {
    fn predict(&self, config: &SimConfig, decode: &DecodeConfig, gt: &EmitterSet) -> Result<ComplexMapPair>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExactOracle;

impl MapSource for ExactOracle {
    fn predict(&self, config: &SimConfig, decode: &DecodeConfig, gt: &EmitterSet) -> Result<ComplexMapPair> {
        encode_targets(gt, &config.camera, config.z_range, decode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyOracle {
    /// Multiplier on the shot-noise lateral precision.
    pub lateral_scale: f64,
    /// Axial precision as a multiple of the lateral one.
    pub axial_ratio: f64,
    /// Standard deviation of white noise added to each channel.
    pub map_noise: f64,
}

impl Default for NoisyOracle {
    fn default() -> Self {
        Self {
            lateral_scale: 1.0,
            axial_ratio: 2.5,
            map_noise: 0.01,
        }
    }
}

/// Lateral precision (nm) of a Gaussian PSF fit with `photons` signal photons,
/// PSF width `s`, pixel size `a` and `background` photons per pixel.
pub fn shot_noise_precision(photons: f64, s: f64, a: f64, background: f64) -> f64 {
    let sa2 = s * s + a * a / 12.0;
    let var = sa2 / photons * (16.0 / 9.0 + 8.0 * std::f64::consts::PI * sa2 * background / (photons * a * a));
    var.sqrt()
}

impl NoisyOracle {
    /// Lateral and axial posterior widths (nm) for one emitter.
    pub fn precision(&self, config: &SimConfig, photons: f64, z: f64) -> (f64, f64) {
        let s = match config.psf.modality {
            Modality::Astigmatic => {
                let (sx, sy) = psf_sigmas(z, &config.psf).expect("astigmatic model");
                (sx * sy).sqrt()
            }
            Modality::DoubleHelix => config.psf.sigma0 * std::f64::consts::SQRT_2,
        };
        let a = (config.camera.pixel_pitch_x * config.camera.pixel_pitch_y).sqrt();
        let lateral = self.lateral_scale * shot_noise_precision(photons, s, a, config.camera.background_rate);
        (lateral, self.axial_ratio * lateral)
    }
}

impl MapSource for NoisyOracle {
    fn predict(&self, config: &SimConfig, decode: &DecodeConfig, gt: &EmitterSet) -> Result<ComplexMapPair> {
        let mut rng = frame_rng(config.rng_seed, gt.frame_id, Purpose::DecoderNoise);
        let standard = Normal::new(0.0, 1.0).expect("unit normal");
        let mut pair = ComplexMapPair::zeros(&config.camera, config.z_range);
        let phases = pair.phase_map();
        let (spx, spy) = pair.superres_pitch();
        let (z_lo, z_hi) = config.z_range;
        let (w, h) = (config.camera.extent_x(), config.camera.extent_y());
        let t2 = decode.target_sigma * decode.target_sigma;

        for e in &gt.emitters {
            let (lat, ax) = self.precision(config, e.photons, e.z);
            let x = (e.x + lat * standard.sample(&mut rng)).clamp(0.0, w.next_down());
            let y = (e.y + lat * standard.sample(&mut rng)).clamp(0.0, h.next_down());
            let z = (e.z + ax * standard.sample(&mut rng)).clamp(z_lo, z_hi);

            let (eu, ev) = (lat / spx, lat / spy);
            let (su2, sv2) = (t2 + eu * eu, t2 + ev * ev);
            let sigma_phase = ax / phases.nm_per_radian();
            let gain = AMPLITUDE * (t2 / su2.sqrt()) / sv2.sqrt() * (-0.5 * sigma_phase * sigma_phase).exp();
            let phase = phases.z_to_phase(z)?;
            let (u, v) = pair.to_superres(x, y);
            splat_gaussian(&mut pair, u, v, (su2.sqrt(), sv2.sqrt()), (gain * phase.cos(), gain * phase.sin()));
        }

        if self.map_noise > 0.0 {
            let noise = Normal::new(0.0, self.map_noise).expect("positive map noise");
            pair.re.mapv_inplace(|v| v + noise.sample(&mut rng));
            pair.im.mapv_inplace(|v| v + noise.sample(&mut rng));
        }
        Ok(pair)
    }
}

/// Ground truth and decoded seeds for a range of frames, in frame order.
pub fn decode_population(
    config: &SimConfig,
    decode_cfg: &DecodeConfig,
    source: &dyn MapSource,
    frames: Range<u64>,
    workers: usize,
) -> Result<(Vec<EmitterSet>, LocalizationSet)> {
    config.validate()?;
    decode_cfg.validate()?;
    let per_frame: Vec<Result<_>> = in_pool(workers, || {
        frames
            .into_par_iter()
            .map(|f| {
                let gt = sample_emitters(config, f, &mut frame_rng(config.rng_seed, f, Purpose::Emitters));
                let pair = source.predict(config, decode_cfg, &gt)?;
                Ok((decode(&pair, decode_cfg, f)?.seeds, gt))
            })
            .collect()
    })?;
    let mut gt = Vec::with_capacity(per_frame.len());
    let mut seeds = Vec::new();
    for item in per_frame {
        let (s, g) = item?;
        seeds.extend(s);
        gt.push(g);
    }
    Ok((gt, LocalizationSet::new(seeds)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::decode;
    use crate::sim::Emitter;

    fn single(z: f64, photons: f64) -> EmitterSet {
        EmitterSet::new(
            3,
            vec![Emitter {
                id: 0,
                x: 2012.5,
                y: 2012.5,
                z,
                photons,
            }],
        )
    }

    #[test]
    fn precision_matches_hand_evaluation() {
        // s = 130·sqrt(1 + (300/400)²) = 162.5 at focus; a = 100; b = 20; N = 5000.
        let s: f64 = 162.5;
        let sa2 = s * s + 10_000.0 / 12.0;
        let expected = (sa2 / 5000.0 * (16.0 / 9.0 + 8.0 * std::f64::consts::PI * sa2 * 20.0 / (5000.0 * 10_000.0))).sqrt();
        let (lat, ax) = NoisyOracle::default().precision(&SimConfig::default(), 5000.0, 0.0);
        assert!((lat - expected).abs() < 1e-9);
        assert!((ax - 2.5 * expected).abs() < 1e-9);
    }

    #[test]
    fn dim_emitters_give_lower_broader_peaks() {
        let cfg = SimConfig::default();
        let oracle = NoisyOracle {
            map_noise: 0.0,
            ..NoisyOracle::default()
        };
        let dc = DecodeConfig::default();
        let bright = decode(&oracle.predict(&cfg, &dc, &single(0.0, 20_000.0)).unwrap(), &dc, 3).unwrap();
        let dim = decode(&oracle.predict(&cfg, &dc, &single(0.0, 300.0)).unwrap(), &dc, 3).unwrap();
        let (b, d) = (bright.seeds[0], dim.seeds[0]);
        assert!(d.peak_magnitude < b.peak_magnitude);
        assert!(d.peak_sharpness < b.peak_sharpness);
    }

    #[test]
    fn prediction_is_deterministic_per_frame() {
        let cfg = SimConfig::default();
        let dc = DecodeConfig::default();
        let a = NoisyOracle::default().predict(&cfg, &dc, &single(100.0, 2000.0)).unwrap();
        let b = NoisyOracle::default().predict(&cfg, &dc, &single(100.0, 2000.0)).unwrap();
        assert_eq!(a, b);
    }
}
