use super::{ComplexMapPair, DecodeConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthEstimate {
    pub z: f64,
    /// `1 - |Σ wⱼ·fⱼ| / Σ wⱼ·|fⱼ|` with `wⱼ = |fⱼ|`; 0 for a coherent patch.
    pub phase_dispersion: f64,
    /// Mean phase fell outside the phase band and was clamped.
    pub clamped: bool,
    /// Window was cut by the grid border.
    pub truncated: bool,
}

/// Depth of the seed at `peak = (row, col)` from the magnitude-weighted mean
/// phasor over a `phase_window`² patch.
pub fn estimate_depth(pair: &ComplexMapPair, peak: (usize, usize), cfg: &DecodeConfig) -> Result<DepthEstimate> {
    let (rows, cols) = pair.dim();
    let (r, c) = peak;
    let half = cfg.phase_window / 2;
    let r0 = r.saturating_sub(half);
    let r1 = (r + half).min(rows - 1);
    let c0 = c.saturating_sub(half);
    let c1 = (c + half).min(cols - 1);
    let truncated = r1 - r0 + 1 < cfg.phase_window || c1 - c0 + 1 < cfg.phase_window;

    let (mut s_re, mut s_im, mut mass) = (0.0, 0.0, 0.0);
    for rr in r0..=r1 {
        for cc in c0..=c1 {
            let (re, im) = (pair.re[[rr, cc]], pair.im[[rr, cc]]);
            let w = re.hypot(im);
            s_re += w * re;
            s_im += w * im;
            mass += w * w;
        }
    }
    let norm = s_re.hypot(s_im);
    if !(norm > 0.0) || !(mass > 0.0) {
        return Err(Error::UndefinedDepth { row: r, col: c });
    }
    let (z, clamped) = pair.phase_map().phase_to_z(s_im.atan2(s_re));
    Ok(DepthEstimate {
        z,
        phase_dispersion: (1.0 - norm / mass).clamp(0.0, 1.0),
        clamped,
        truncated,
    })
}
