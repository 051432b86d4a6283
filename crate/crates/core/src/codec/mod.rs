//! Complex-domain target maps on a ×4 super-resolution grid.
//!
//! Each emitter contributes `A·exp(-r²/2σ_t²)·exp(iφ)` to a pair of real
//! channels: the magnitude is a sum of lateral Gaussians and the phase is an
//! affine function of depth. Decoding finds magnitude peaks, refines them to
//! sub-pixel precision, and reads depth from the magnitude-weighted local phase.
//!
//! Super-resolution pixel `j` along x covers `[j·s, (j+1)·s)` nm with
//! `s = pitch_x / 4`; a continuous super-res coordinate `u` maps to
//! `x = (u + 0.5)·s`.

mod decode;
mod depth;
mod encode;
mod peaks;
mod phase;
mod subpixel;

pub use decode::{decode, DecodeStats, Decoded};
pub use depth::{estimate_depth, DepthEstimate};
pub use encode::{encode_targets, splat_gaussian};
pub use peaks::find_peaks;
pub use phase::{PhaseMap, PHASE_LIMIT};
pub use subpixel::{log_quadratic_offset, subpixel_refine, AxisRefinement, Refined};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::sim::CameraModel;

pub const UPSAMPLE: usize = 4;

/// Nominal peak height of an isolated encoded emitter.
pub const AMPLITUDE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMapPair {
    pub re: Array2<f64>,
    pub im: Array2<f64>,
    /// Camera pixel pitch (nm); the super-res pitch is a quarter of it.
    pub pixel_pitch_x: f64,
    pub pixel_pitch_y: f64,
    pub z_range: (f64, f64),
}

impl ComplexMapPair {
    pub fn zeros(camera: &CameraModel, z_range: (f64, f64)) -> Self {
        let shape = (camera.height * UPSAMPLE, camera.width * UPSAMPLE);
        Self {
            re: Array2::zeros(shape),
            im: Array2::zeros(shape),
            pixel_pitch_x: camera.pixel_pitch_x,
            pixel_pitch_y: camera.pixel_pitch_y,
            z_range,
        }
    }

    pub fn from_channels(
        re: Array2<f64>,
        im: Array2<f64>,
        pixel_pitch: (f64, f64),
        z_range: (f64, f64),
    ) -> Result<Self> {
        if re.dim() != im.dim() {
            return Err(Error::ShapeMismatch(format!(
                "real channel is {:?}, imaginary channel is {:?}",
                re.dim(),
                im.dim()
            )));
        }
        Ok(Self {
            re,
            im,
            pixel_pitch_x: pixel_pitch.0,
            pixel_pitch_y: pixel_pitch.1,
            z_range,
        })
    }

    /// (rows, cols) of the super-res grid.
    pub fn dim(&self) -> (usize, usize) {
        self.re.dim()
    }

    pub fn superres_pitch(&self) -> (f64, f64) {
        (
            self.pixel_pitch_x / UPSAMPLE as f64,
            self.pixel_pitch_y / UPSAMPLE as f64,
        )
    }

    pub fn magnitude(&self) -> Array2<f64> {
        let mut mag = self.re.clone();
        mag.zip_mut_with(&self.im, |r, &i| *r = r.hypot(i));
        mag
    }

    pub fn phase_map(&self) -> PhaseMap {
        PhaseMap::new(self.z_range.0, self.z_range.1)
    }

    /// Continuous super-res coordinates of a position in nm.
    pub fn to_superres(&self, x: f64, y: f64) -> (f64, f64) {
        let (sx, sy) = self.superres_pitch();
        (x / sx - 0.5, y / sy - 0.5)
    }

    pub fn to_nm(&self, u: f64, v: f64) -> (f64, f64) {
        let (sx, sy) = self.superres_pitch();
        ((u + 0.5) * sx, (v + 0.5) * sy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    /// Minimum peak magnitude as a fraction of [`AMPLITUDE`].
    pub detection_threshold: f64,
    /// NMS exclusion radius in super-res pixels.
    pub nms_radius: f64,
    /// Side of the square phase-averaging window (odd).
    pub phase_window: usize,
    /// Target Gaussian width in super-res pixels.
    pub target_sigma: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            detection_threshold: 0.3,
            nms_radius: 2.0,
            phase_window: 3,
            target_sigma: 1.0,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.detection_threshold > 0.0 && self.detection_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "decode.threshold must lie in (0, 1), got {}",
                self.detection_threshold
            )));
        }
        if !(self.nms_radius >= 1.0 && self.nms_radius.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "decode.nms_radius must be >= 1, got {}",
                self.nms_radius
            )));
        }
        if self.phase_window < 3 || self.phase_window % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "decode.phase_window must be odd and >= 3, got {}",
                self.phase_window
            )));
        }
        if !(self.target_sigma > 0.0 && self.target_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "decode.target_sigma must be > 0, got {}",
                self.target_sigma
            )));
        }
        Ok(())
    }
}

/// One decoded localization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub frame_id: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub peak_magnitude: f64,
    /// Negated 4-neighbour Laplacian of the magnitude at the peak pixel; positive for a peak.
    pub peak_sharpness: f64,
    pub phase_dispersion: f64,
}

/// Decoded seeds, possibly spanning many frames.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalizationSet {
    pub seeds: Vec<Seed>,
}

impl LocalizationSet {
    pub fn new(seeds: Vec<Seed>) -> Self {
        Self { seeds }
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Seeds of one frame, in their original order.
    pub fn frame(&self, frame_id: u64) -> impl Iterator<Item = &Seed> {
        self.seeds.iter().filter(move |s| s.frame_id == frame_id)
    }
}

impl FromIterator<Seed> for LocalizationSet {
    fn from_iter<I: IntoIterator<Item = Seed>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}
