use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use statrs::function::erf::erf;

use super::psf::{astigmatic_sigmas, dh_lobes};
use super::{CameraModel, EmitterSet, Modality, PsfModel};

/// Expected photons per pixel, indexed `[row, col]` = `[y, x]`.
pub type PhotonImage = Array2<f64>;

/// A camera frame in ADU.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub adu: Array2<f32>,
    pub pixel_pitch_x: f64,
    pub pixel_pitch_y: f64,
}

/// PSF tails beyond this many sigmas are not integrated.
const TAIL_SIGMAS: f64 = 8.0;

/// Fraction of a 1D Gaussian falling in each pixel that it touches.
/// Returns the index of the first pixel and the per-pixel fractions.
fn axis_fractions(mu: f64, sigma: f64, pitch: f64, n: usize) -> (usize, Vec<f64>) {
    let lo = ((mu - TAIL_SIGMAS * sigma) / pitch).floor().max(0.0) as usize;
    let hi = (((mu + TAIL_SIGMAS * sigma) / pitch).ceil().max(0.0) as usize).min(n);
    if lo >= hi {
        return (0, Vec::new());
    }
    let scale = 1.0 / (std::f64::consts::SQRT_2 * sigma);
    let cdf = |edge: usize| 0.5 * erf((edge as f64 * pitch - mu) * scale);
    let mut prev = cdf(lo);
    let fractions = (lo..hi)
        .map(|i| {
            let next = cdf(i + 1);
            let f = next - prev;
            prev = next;
            f
        })
        .collect();
    (lo, fractions)
}

fn add_gaussian(img: &mut PhotonImage, camera: &CameraModel, photons: f64, center: (f64, f64), sigma: (f64, f64)) {
    let (x0, fx) = axis_fractions(center.0, sigma.0, camera.pixel_pitch_x, camera.width);
    let (y0, fy) = axis_fractions(center.1, sigma.1, camera.pixel_pitch_y, camera.height);
    for (j, wy) in fy.iter().enumerate() {
        let row = photons * wy;
        for (i, wx) in fx.iter().enumerate() {
            img[[y0 + j, x0 + i]] += row * wx;
        }
    }
}

/// Noiseless expected photon image: pixel-integrated PSFs plus uniform background.
pub fn render_clean_frame(set: &EmitterSet, camera: &CameraModel, psf: &PsfModel) -> PhotonImage {
    let mut img = Array2::from_elem((camera.height, camera.width), camera.background_rate);
    for e in &set.emitters {
        match psf.modality {
            Modality::Astigmatic => {
                let sigma = astigmatic_sigmas(e.z, psf);
                add_gaussian(&mut img, camera, e.photons, (e.x, e.y), sigma);
            }
            Modality::DoubleHelix => {
                let lobes = dh_lobes(e.z, psf);
                let s = (lobes.sigma, lobes.sigma);
                for (dx, dy) in [lobes.lobe1, lobes.lobe2] {
                    add_gaussian(&mut img, camera, e.photons / 2.0, (e.x + dx, e.y + dy), s);
                }
            }
        }
    }
    img
}

/// Poisson shot noise, then gain, Gaussian read noise, baseline, and a clamp at 0 ADU.
pub fn apply_camera_noise<R: Rng + ?Sized>(img: &PhotonImage, camera: &CameraModel, rng: &mut R) -> Frame {
    let read = (camera.read_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, camera.gain * camera.read_noise_sigma).expect("validated read noise"));
    let adu = img.mapv(|expected| {
        let electrons = if expected > 0.0 {
            Poisson::new(expected).map(|p| p.sample(rng)).unwrap_or(0.0)
        } else {
            0.0
        };
        let mut v = camera.gain * electrons;
        if let Some(read) = &read {
            v += read.sample(rng);
        }
        (v + camera.baseline).max(0.0) as f32
    });
    Frame {
        adu,
        pixel_pitch_x: camera.pixel_pitch_x,
        pixel_pitch_y: camera.pixel_pitch_y,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use crate::sim::Emitter;

    fn one(x: f64, y: f64, z: f64, photons: f64) -> EmitterSet {
        EmitterSet::new(0, vec![Emitter { id: 0, x, y, z, photons }])
    }

    #[test]
    fn empty_set_is_flat_background() {
        let cam = CameraModel::default();
        let img = render_clean_frame(&EmitterSet::default(), &cam, &PsfModel::default());
        assert!(img.iter().all(|&v| v == cam.background_rate));
    }

    #[test]
    fn interior_emitter_conserves_photons() {
        let cam = CameraModel {
            background_rate: 0.0,
            ..CameraModel::default()
        };
        for psf in [PsfModel::default(), PsfModel::double_helix()] {
            let img = render_clean_frame(&one(2013.0, 1987.5, 250.0, 4000.0), &cam, &psf);
            let rel = (img.sum() - 4000.0).abs() / 4000.0;
            assert!(rel < 1e-3, "{:?}: rel {rel}", psf.modality);
        }
    }

    #[test]
    fn edge_emitter_loses_truncated_flux() {
        let cam = CameraModel {
            background_rate: 0.0,
            ..CameraModel::default()
        };
        // On the left edge: roughly half the flux lands outside the frame.
        let img = render_clean_frame(&one(0.0, 2000.0, 0.0, 1000.0), &cam, &PsfModel::default());
        assert!((img.sum() - 500.0).abs() < 1.0);
    }

    #[test]
    fn brightest_pixel_is_the_emitter_pixel() {
        let cam = CameraModel {
            background_rate: 0.0,
            ..CameraModel::default()
        };
        // Center of pixel (col 17, row 22).
        let img = render_clean_frame(&one(1750.0, 2250.0, 0.0, 1000.0), &cam, &PsfModel::default());
        let (mut best, mut at) = (f64::MIN, (0, 0));
        for ((r, c), &v) in img.indexed_iter() {
            if v > best {
                best = v;
                at = (r, c);
            }
        }
        assert_eq!(at, (22, 17));
        // Independent check of the centre value: (erf(50/(sqrt2*s)))^2 * photons, s = 130*sqrt(1+(300/400)^2).
        let s = 130.0 * (1.0f64 + 0.5625).sqrt();
        let expected = 1000.0 * erf(50.0 / (std::f64::consts::SQRT_2 * s)).powi(2);
        assert!((best - expected).abs() < 1e-9);
    }

    #[test]
    fn noiseless_zero_image_stays_zero() {
        let cam = CameraModel {
            read_noise_sigma: 0.0,
            gain: 1.0,
            baseline: 0.0,
            ..CameraModel::default()
        };
        let img = Array2::zeros((cam.height, cam.width));
        let frame = apply_camera_noise(&img, &cam, &mut seeded_rng(0));
        assert!(frame.adu.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn poisson_stage_statistics() {
        let cam = CameraModel {
            width: 1000,
            height: 100,
            read_noise_sigma: 0.0,
            gain: 1.0,
            baseline: 0.0,
            ..CameraModel::default()
        };
        let img = Array2::from_elem((100, 1000), 1e4);
        let frame = apply_camera_noise(&img, &cam, &mut seeded_rng(9));
        let n = frame.adu.len() as f64;
        let mean = frame.adu.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = frame.adu.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 1e4).abs() / 1e4 < 0.01);
        assert!((var / mean - 1.0).abs() < 0.05, "var/mean {}", var / mean);
    }

    #[test]
    fn same_seed_same_frame() {
        let cam = CameraModel::default();
        let img = render_clean_frame(&one(1000.0, 1000.0, 0.0, 3000.0), &cam, &PsfModel::default());
        let a = apply_camera_noise(&img, &cam, &mut seeded_rng(42));
        let b = apply_camera_noise(&img, &cam, &mut seeded_rng(42));
        assert_eq!(a, b);
    }
}
