use super::{ComplexMapPair, DecodeConfig, AMPLITUDE};
use crate::error::Result;
use crate::sim::{CameraModel, EmitterSet};

/// Gaussian tails beyond this many sigmas are below 1e-13 of the peak and are skipped.
const TAIL_SIGMAS: f64 = 8.0;

fn axis_profile(center: f64, sigma: f64, n: usize) -> (usize, Vec<f64>) {
    let reach = (TAIL_SIGMAS * sigma).ceil();
    let lo = (center - reach).floor().max(0.0) as usize;
    let hi = ((center + reach).ceil().max(-1.0) + 1.0).min(n as f64) as usize;
    if lo >= hi {
        return (0, Vec::new());
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    let profile = (lo..hi).map(|i| (-(i as f64 - center).powi(2) * inv).exp()).collect();
    (lo, profile)
}

/// Adds `(amp_re + i·amp_im)·exp(-(du²/2σu² + dv²/2σv²))` around super-res position `(u, v)`.
pub fn splat_gaussian(pair: &mut ComplexMapPair, u: f64, v: f64, sigma: (f64, f64), amp: (f64, f64)) {
    let (rows, cols) = pair.dim();
    let (c0, gu) = axis_profile(u, sigma.0, cols);
    let (r0, gv) = axis_profile(v, sigma.1, rows);
    for (j, wv) in gv.iter().enumerate() {
        let (ar, ai) = (amp.0 * wv, amp.1 * wv);
        let mut re = pair.re.row_mut(r0 + j);
        for (i, wu) in gu.iter().enumerate() {
            re[c0 + i] += ar * wu;
        }
        let mut im = pair.im.row_mut(r0 + j);
        for (i, wu) in gu.iter().enumerate() {
            im[c0 + i] += ai * wu;
        }
    }
}

/// Complex-domain training target for a ground-truth frame.
///
/// Per-emitter complex Gaussians are summed, so overlapping emitters at
/// different depths interfere; isolated emitters keep an exactly Gaussian
/// magnitude of peak [`AMPLITUDE`].
pub fn encode_targets(
    set: &EmitterSet,
    camera: &CameraModel,
    z_range: (f64, f64),
    cfg: &DecodeConfig,
) -> Result<ComplexMapPair> {
    let mut pair = ComplexMapPair::zeros(camera, z_range);
    let phases = pair.phase_map();
    let sigma = (cfg.target_sigma, cfg.target_sigma);
    for e in &set.emitters {
        let phase = phases.z_to_phase(e.z)?;
        let (u, v) = pair.to_superres(e.x, e.y);
        let amp = (AMPLITUDE * phase.cos(), AMPLITUDE * phase.sin());
        splat_gaussian(&mut pair, u, v, sigma, amp);
    }
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Emitter;

    fn set(points: &[(f64, f64, f64)]) -> EmitterSet {
        let emitters = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y, z))| Emitter { id: i as u64, x, y, z, photons: 1000.0 })
            .collect();
        EmitterSet::new(0, emitters)
    }

    fn encode(points: &[(f64, f64, f64)]) -> ComplexMapPair {
        encode_targets(&set(points), &CameraModel::default(), (-750.0, 750.0), &DecodeConfig::default()).unwrap()
    }

    #[test]
    fn empty_set_gives_zero_maps() {
        let pair = encode(&[]);
        assert_eq!(pair.dim(), (160, 160));
        assert!(pair.re.iter().chain(pair.im.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn midpoint_depth_has_no_imaginary_part() {
        let pair = encode(&[(1013.0, 2021.0, 0.0)]);
        assert!(pair.im.iter().all(|&v| v == 0.0));
        let mag = pair.magnitude();
        let (u, v) = pair.to_superres(1013.0, 2021.0);
        let mut best = (0, 0);
        for ((r, c), &m) in mag.indexed_iter() {
            if m > mag[best] {
                best = (r, c);
            }
        }
        assert_eq!(best, (v.round() as usize, u.round() as usize));
    }

    #[test]
    fn on_grid_emitter_peaks_at_amplitude() {
        // centre of super-res pixel (40, 40)
        let pair = encode(&[(1012.5, 1012.5, 321.0)]);
        let peak = pair.magnitude()[[40, 40]];
        assert!((peak - AMPLITUDE).abs() < 1e-6);
    }

    #[test]
    fn two_emitters_sum_at_their_peaks() {
        // 10 su-px apart on a row, both on-grid, same depth.
        let pair = encode(&[(512.5, 1012.5, 100.0), (762.5, 1012.5, 100.0)]);
        let mag = pair.magnitude();
        // Direct evaluation: 1 + exp(-100/2).
        let expected = 1.0 + (-50.0f64).exp();
        assert!((mag[[40, 20]] - expected).abs() < 1e-12);
        assert!((mag[[40, 30]] - expected).abs() < 1e-12);
        assert!((mag[[40, 20]] - AMPLITUDE).abs() < 0.01);
    }

    #[test]
    fn depth_outside_range_is_an_error() {
        let r = encode_targets(
            &set(&[(100.0, 100.0, 900.0)]),
            &CameraModel::default(),
            (-750.0, 750.0),
            &DecodeConfig::default(),
        );
        assert!(r.is_err());
    }
}
