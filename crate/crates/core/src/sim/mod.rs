//! Ground-truth emitter sampling and camera frame simulation.

mod dataset;
mod frame;
mod psf;
mod sample;

pub use dataset::{simulate_dataset, simulate_frame, simulate_frames, DatasetIter};
pub use frame::{apply_camera_noise, render_clean_frame, Frame, PhotonImage};
pub use psf::{psf_dh_lobes, psf_sigmas, DhLobes};
pub use sample::sample_emitters;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emitter {
    pub id: u64,
    /// Lateral position in nm, measured from the frame's top-left corner.
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub photons: f64,
}

/// Ground-truth emitters of one frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmitterSet {
    pub frame_id: u64,
    pub emitters: Vec<Emitter>,
}

impl EmitterSet {
    pub fn new(frame_id: u64, emitters: Vec<Emitter>) -> Self {
        Self { frame_id, emitters }
    }

    pub fn len(&self) -> usize {
        self.emitters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emitters.is_empty()
    }

    pub fn total_photons(&self) -> f64 {
        self.emitters.iter().map(|e| e.photons).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub pixel_pitch_x: f64,
    pub pixel_pitch_y: f64,
    pub width: usize,
    pub height: usize,
    /// Expected background photons per pixel per frame.
    pub background_rate: f64,
    /// ADU per electron.
    pub gain: f64,
    pub baseline: f64,
    /// Read noise in electrons.
    pub read_noise_sigma: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            pixel_pitch_x: 100.0,
            pixel_pitch_y: 100.0,
            width: 40,
            height: 40,
            background_rate: 20.0,
            gain: 1.0,
            baseline: 100.0,
            read_noise_sigma: 2.0,
        }
    }
}

impl CameraModel {
    pub fn extent_x(&self) -> f64 {
        self.width as f64 * self.pixel_pitch_x
    }

    pub fn extent_y(&self) -> f64 {
        self.height as f64 * self.pixel_pitch_y
    }

    /// Field of view in µm².
    pub fn area_um2(&self) -> f64 {
        self.extent_x() * self.extent_y() * 1e-6
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..self.extent_x()).contains(&x) && (0.0..self.extent_y()).contains(&y)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pixel_pitch_x", self.pixel_pitch_x),
            ("pixel_pitch_y", self.pixel_pitch_y),
            ("gain", self.gain),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("camera.{name} must be > 0, got {v}")));
            }
        }
        // Zero background and zero read noise are legitimate noiseless settings.
        let non_negative = [
            ("background_rate", self.background_rate),
            ("baseline", self.baseline),
            ("read_noise_sigma", self.read_noise_sigma),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("camera.{name} must be >= 0, got {v}")));
            }
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig("camera width and height must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Astigmatic,
    DoubleHelix,
}

impl Modality {
    pub fn name(self) -> &'static str {
        match self {
            Modality::Astigmatic => "astigmatic",
            Modality::DoubleHelix => "double-helix",
        }
    }
}

impl std::str::FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "astigmatic" => Ok(Modality::Astigmatic),
            "double-helix" => Ok(Modality::DoubleHelix),
            other => Err(Error::InvalidConfig(format!("unknown psf modality `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsfModel {
    pub modality: Modality,
    /// In-focus Gaussian width (nm). Also the width of each double-helix lobe.
    pub sigma0: f64,
    /// Astigmatic focal offset (nm).
    pub gamma: f64,
    /// Astigmatic depth scale (nm).
    pub d: f64,
    pub dh_lobe_distance: f64,
    /// Lobe rotation in rad per nm of depth.
    pub dh_rotation_rate: f64,
}

impl Default for PsfModel {
    fn default() -> Self {
        Self {
            modality: Modality::Astigmatic,
            sigma0: 130.0,
            gamma: 300.0,
            d: 400.0,
            dh_lobe_distance: 600.0,
            dh_rotation_rate: std::f64::consts::PI / 1600.0,
        }
    }
}

impl PsfModel {
    pub fn double_helix() -> Self {
        Self {
            modality: Modality::DoubleHelix,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(Error::InvalidConfig(format!("psf.sigma0 must be > 0, got {}", self.sigma0)));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(Error::InvalidConfig(format!("psf.d must be > 0, got {}", self.d)));
        }
        match self.modality {
            Modality::Astigmatic => {
                if !self.gamma.is_finite() {
                    return Err(Error::InvalidConfig("psf.gamma must be finite".into()));
                }
            }
            Modality::DoubleHelix => {
                if !(self.dh_lobe_distance.is_finite() && self.dh_lobe_distance > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "psf.dh_lobe_distance must be > 0, got {}",
                        self.dh_lobe_distance
                    )));
                }
                if !self.dh_rotation_rate.is_finite() {
                    return Err(Error::InvalidConfig("psf.dh_rotation_rate must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Emitters per µm² per frame.
    pub density: f64,
    pub photon_mean: f64,
    pub photon_sigma: f64,
    pub z_range: (f64, f64),
    pub camera: CameraModel,
    pub psf: PsfModel,
    pub n_frames: u64,
    pub rng_seed: u64,
    /// Minimum pairwise lateral distance between emitters of a frame (nm).
    /// Zero disables the constraint.
    pub min_separation: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            density: 1.0,
            photon_mean: 5000.0,
            photon_sigma: 250.0,
            z_range: (-750.0, 750.0),
            camera: CameraModel::default(),
            psf: PsfModel::default(),
            n_frames: 100,
            rng_seed: 0,
            min_separation: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.density.is_finite() && self.density > 0.0) {
            return Err(Error::InvalidConfig(format!("density must be > 0, got {}", self.density)));
        }
        if !(self.photon_mean.is_finite() && self.photon_mean > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "photon_mean must be > 0, got {}",
                self.photon_mean
            )));
        }
        if !(self.photon_sigma.is_finite() && self.photon_sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "photon_sigma must be >= 0, got {}",
                self.photon_sigma
            )));
        }
        let (lo, hi) = self.z_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidConfig(format!("z_range must be ordered, got ({lo}, {hi})")));
        }
        if !(self.min_separation.is_finite() && self.min_separation >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "min_separation must be >= 0, got {}",
                self.min_separation
            )));
        }
        self.camera.validate()?;
        self.psf.validate()
    }

    /// Mean number of emitters per frame.
    pub fn expected_count(&self) -> f64 {
        self.density * self.camera.area_um2()
    }
}
