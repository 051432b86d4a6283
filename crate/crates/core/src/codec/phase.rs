use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Half-width of the phase band. The 10% guard keeps the depth extremes away from ±π.
pub const PHASE_LIMIT: f64 = 0.9 * PI;

/// Affine map between a depth range and the phase band `[-PHASE_LIMIT, PHASE_LIMIT]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMap {
    z_min: f64,
    z_max: f64,
}

impl PhaseMap {
    pub fn new(z_min: f64, z_max: f64) -> Self {
        debug_assert!(z_min < z_max);
        Self { z_min, z_max }
    }

    pub fn z_range(&self) -> (f64, f64) {
        (self.z_min, self.z_max)
    }

    fn span(&self) -> f64 {
        self.z_max - self.z_min
    }

    pub fn z_to_phase(&self, z: f64) -> Result<f64> {
        if !(z >= self.z_min && z <= self.z_max) {
            return Err(Error::DepthOutOfRange {
                z,
                min: self.z_min,
                max: self.z_max,
            });
        }
        Ok(PHASE_LIMIT * (2.0 * (z - self.z_min) / self.span() - 1.0))
    }

    /// Inverse map. Phases outside the band are clamped; the flag reports it.
    pub fn phase_to_z(&self, phase: f64) -> (f64, bool) {
        let clamped = phase.clamp(-PHASE_LIMIT, PHASE_LIMIT);
        let z = self.z_min + (clamped / PHASE_LIMIT + 1.0) * 0.5 * self.span();
        (z.clamp(self.z_min, self.z_max), clamped != phase)
    }

    /// Depth change per radian of phase.
    pub fn nm_per_radian(&self) -> f64 {
        self.span() / (2.0 * PHASE_LIMIT)
    }
}
