use super::{Modality, PsfModel};
use crate::error::{Error, Result};

fn expect(psf: &PsfModel, modality: Modality) -> Result<()> {
    if psf.modality == modality {
        Ok(())
    } else {
        Err(Error::ModalityMismatch {
            expected: modality.name(),
            actual: psf.modality.name(),
        })
    }
}

/// Astigmatic widths at depth `z`: the x focus sits at `+gamma`, the y focus at `-gamma`.
pub fn psf_sigmas(z: f64, psf: &PsfModel) -> Result<(f64, f64)> {
    expect(psf, Modality::Astigmatic)?;
    Ok(astigmatic_sigmas(z, psf))
}

pub(crate) fn astigmatic_sigmas(z: f64, psf: &PsfModel) -> (f64, f64) {
    let sx = psf.sigma0 * (1.0 + ((z - psf.gamma) / psf.d).powi(2)).sqrt();
    let sy = psf.sigma0 * (1.0 + ((z + psf.gamma) / psf.d).powi(2)).sqrt();
    (sx, sy)
}

/// Lobe offsets (nm, relative to the emitter) and the isotropic lobe width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhLobes {
    pub lobe1: (f64, f64),
    pub lobe2: (f64, f64),
    pub sigma: f64,
}

pub fn psf_dh_lobes(z: f64, psf: &PsfModel) -> Result<DhLobes> {
    expect(psf, Modality::DoubleHelix)?;
    Ok(dh_lobes(z, psf))
}

pub(crate) fn dh_lobes(z: f64, psf: &PsfModel) -> DhLobes {
    let theta = psf.dh_rotation_rate * z;
    let r = psf.dh_lobe_distance / 2.0;
    let (s, c) = theta.sin_cos();
    DhLobes {
        lobe1: (r * c, r * s),
        lobe2: (-r * c, -r * s),
        sigma: psf.sigma0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn in_focus_plane_is_round() {
        let (sx, sy) = psf_sigmas(0.0, &PsfModel::default()).unwrap();
        assert_eq!(sx, sy);
    }

    #[test]
    fn x_focus_at_gamma() {
        let psf = PsfModel::default();
        let (sx, _) = psf_sigmas(psf.gamma, &psf).unwrap();
        assert_eq!(sx, psf.sigma0);
    }

    #[test]
    fn default_width_at_400nm() {
        // 130 * sqrt(1 + (100/400)^2) = 134.00093283...
        let (sx, _) = psf_sigmas(400.0, &PsfModel::default()).unwrap();
        assert_abs_diff_eq!(sx, 134.000_932_832_574, epsilon = 1e-6);
        assert!((sx - 134.0).abs() < 0.05);
    }

    #[test]
    fn sigma_x_mirrors_sigma_y() {
        let psf = PsfModel::default();
        for z in [-700.0, -123.4, 0.0, 55.0, 640.0] {
            let (sx, _) = psf_sigmas(z, &psf).unwrap();
            let (_, sy) = psf_sigmas(-z, &psf).unwrap();
            assert_abs_diff_eq!(sx, sy, epsilon = 1e-12);
        }
    }

    #[test]
    fn wrong_modality_errors() {
        assert!(matches!(
            psf_sigmas(0.0, &PsfModel::double_helix()),
            Err(Error::ModalityMismatch { .. })
        ));
        assert!(matches!(
            psf_dh_lobes(0.0, &PsfModel::default()),
            Err(Error::ModalityMismatch { .. })
        ));
    }

    #[test]
    fn dh_lobes_on_x_axis_at_focus() {
        let psf = PsfModel::double_helix();
        let l = psf_dh_lobes(0.0, &psf).unwrap();
        assert_abs_diff_eq!(l.lobe1.0, psf.dh_lobe_distance / 2.0);
        assert_abs_diff_eq!(l.lobe1.1, 0.0);
        assert_abs_diff_eq!(l.lobe2.0, -psf.dh_lobe_distance / 2.0);
    }

    #[test]
    fn dh_quarter_turn_puts_lobes_on_y_axis() {
        let psf = PsfModel::double_helix();
        let z = (PI / 2.0) / psf.dh_rotation_rate;
        let l = psf_dh_lobes(z, &psf).unwrap();
        assert_abs_diff_eq!(l.lobe1.0, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(l.lobe1.1.abs(), psf.dh_lobe_distance / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn dh_separation_is_depth_invariant() {
        let psf = PsfModel::double_helix();
        for z in [-750.0, -300.0, 0.0, 111.0, 750.0] {
            let l = psf_dh_lobes(z, &psf).unwrap();
            let d = (l.lobe1.0 - l.lobe2.0).hypot(l.lobe1.1 - l.lobe2.1);
            assert_abs_diff_eq!(d, psf.dh_lobe_distance, epsilon = 1e-9);
        }
    }
}
