use ndarray::Array2;

use super::{estimate_depth, find_peaks, subpixel_refine, ComplexMapPair, DecodeConfig, Seed};
use crate::error::{Error, Result};

/// Counters for the non-fatal conditions met while decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecodeStats {
    pub peaks: usize,
    /// Seeds dropped because their weighted phasor sum vanished.
    pub dropped_undefined_depth: usize,
    /// Peaks on the grid border along at least one axis.
    pub border_refinements: usize,
    pub degenerate_refinements: usize,
    pub clamped_phases: usize,
    pub truncated_windows: usize,
}

impl DecodeStats {
    pub fn merge(&mut self, other: &DecodeStats) {
        self.peaks += other.peaks;
        self.dropped_undefined_depth += other.dropped_undefined_depth;
        self.border_refinements += other.border_refinements;
        self.degenerate_refinements += other.degenerate_refinements;
        self.clamped_phases += other.clamped_phases;
        self.truncated_windows += other.truncated_windows;
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Decoded {
    pub seeds: Vec<Seed>,
    pub stats: DecodeStats,
}

fn sharpness(mag: &Array2<f64>, r: usize, c: usize) -> f64 {
    let (rows, cols) = mag.dim();
    let center = mag[[r, c]];
    // Missing neighbours at the border replicate the centre.
    let at = |rr: Option<usize>, cc: Option<usize>| match (rr, cc) {
        (Some(rr), Some(cc)) if rr < rows && cc < cols => mag[[rr, cc]],
        _ => center,
    };
    let sum = at(r.checked_sub(1), Some(c)) + at(Some(r + 1), Some(c)) + at(Some(r), c.checked_sub(1)) + at(Some(r), Some(c + 1));
    4.0 * center - sum
}

/// Peak finding, sub-pixel refinement and phase-averaged depth for one frame.
pub fn decode(pair: &ComplexMapPair, cfg: &DecodeConfig, frame_id: u64) -> Result<Decoded> {
    cfg.validate()?;
    let mag = pair.magnitude();
    let peaks = find_peaks(&mag, cfg);
    let mut stats = DecodeStats {
        peaks: peaks.len(),
        ..DecodeStats::default()
    };
    let mut seeds = Vec::with_capacity(peaks.len());
    for peak in peaks {
        let refined = subpixel_refine(&mag, peak);
        use super::AxisRefinement::*;
        if refined.along_u == Border || refined.along_v == Border {
            stats.border_refinements += 1;
        }
        if refined.along_u == Degenerate || refined.along_v == Degenerate {
            stats.degenerate_refinements += 1;
        }
        let depth = match estimate_depth(pair, peak, cfg) {
            Ok(d) => d,
            Err(Error::UndefinedDepth { .. }) => {
                stats.dropped_undefined_depth += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        stats.clamped_phases += depth.clamped as usize;
        stats.truncated_windows += depth.truncated as usize;
        let (x, y) = pair.to_nm(refined.u, refined.v);
        seeds.push(Seed {
            frame_id,
            x,
            y,
            z: depth.z,
            peak_magnitude: mag[peak],
            peak_sharpness: sharpness(&mag, peak.0, peak.1),
            phase_dispersion: depth.phase_dispersion,
        });
    }
    Ok(Decoded { seeds, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::encode_targets;
    use crate::sim::{CameraModel, Emitter, EmitterSet};

    fn emitters(points: &[(f64, f64, f64)]) -> EmitterSet {
        let emitters = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y, z))| Emitter { id: i as u64, x, y, z, photons: 1.0 })
            .collect();
        EmitterSet::new(0, emitters)
    }

    fn round_trip(points: &[(f64, f64, f64)]) -> Decoded {
        let cfg = DecodeConfig::default();
        let pair = encode_targets(&emitters(points), &CameraModel::default(), (-750.0, 750.0), &cfg).unwrap();
        decode(&pair, &cfg, 0).unwrap()
    }

    #[test]
    fn zero_maps_decode_to_nothing() {
        let pair = ComplexMapPair::zeros(&CameraModel::default(), (-750.0, 750.0));
        let d = decode(&pair, &DecodeConfig::default(), 0).unwrap();
        assert!(d.seeds.is_empty());
        assert_eq!(d.stats, DecodeStats::default());
    }

    #[test]
    fn single_emitter_round_trip() {
        for &(x, y, z) in &[(1234.56, 2345.67, 321.0), (1750.0, 2250.0, -700.0), (37.2, 3961.9, 750.0)] {
            let d = round_trip(&[(x, y, z)]);
            assert_eq!(d.seeds.len(), 1);
            let s = d.seeds[0];
            assert!((s.x - x).abs() < 0.5 && (s.y - y).abs() < 0.5, "{s:?}");
            assert!((s.z - z).abs() < 1.0, "{s:?}");
            assert!((s.peak_magnitude - 1.0).abs() < 0.25);
            assert!(s.peak_sharpness > 0.0);
        }
    }

    #[test]
    fn sharpness_of_unit_gaussian_on_grid() {
        let d = round_trip(&[(1012.5, 1012.5, 0.0)]);
        // 4·1 - 4·exp(-1/2)
        let expected = 4.0 - 4.0 * (-0.5f64).exp();
        assert!((d.seeds[0].peak_sharpness - expected).abs() < 1e-12);
    }

    #[test]
    fn translation_by_one_superres_pixel() {
        let a = round_trip(&[(1001.7, 1503.2, 120.0)]).seeds[0];
        let b = round_trip(&[(1026.7, 1503.2, 120.0)]).seeds[0];
        assert!((b.x - a.x - 25.0).abs() < 1e-6);
        assert!((b.y - a.y).abs() < 1e-6);
    }
}
