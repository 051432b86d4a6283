use ndarray::Array2;

/// Samples at or below zero are floored here before taking logs.
const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisRefinement {
    Refined,
    /// Peak on the grid border along this axis; offset left at 0.
    Border,
    /// Non-finite offset from flat curvature; offset left at 0.
    Degenerate,
}

/// Offset of a Gaussian's apex from the middle of three equally spaced samples.
///
/// Fits a parabola to the log-samples, which is exact for Gaussian data. The
/// result is clamped to `[-0.5, 0.5]`; positive offsets point toward `next`.
pub fn log_quadratic_offset(prev: f64, center: f64, next: f64) -> (f64, AxisRefinement) {
    let lp = prev.max(LOG_FLOOR).ln();
    let lc = center.max(LOG_FLOOR).ln();
    let ln = next.max(LOG_FLOOR).ln();
    let delta = (lp - ln) / (2.0 * (lp - 2.0 * lc + ln));
    if delta.is_finite() {
        (delta.clamp(-0.5, 0.5), AxisRefinement::Refined)
    } else {
        (0.0, AxisRefinement::Degenerate)
    }
}

/// Continuous super-res position of a peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refined {
    /// Column coordinate.
    pub u: f64,
    /// Row coordinate.
    pub v: f64,
    pub along_u: AxisRefinement,
    pub along_v: AxisRefinement,
}

impl Refined {
    pub fn fully_refined(&self) -> bool {
        self.along_u == AxisRefinement::Refined && self.along_v == AxisRefinement::Refined
    }
}

/// Refines an integer peak `(row, col)` independently along each axis. An axis
/// on which the peak touches the border keeps its integer coordinate.
pub fn subpixel_refine(mag: &Array2<f64>, peak: (usize, usize)) -> Refined {
    let (rows, cols) = mag.dim();
    let (r, c) = peak;
    let center = mag[[r, c]];
    let (du, along_u) = if c == 0 || c + 1 >= cols {
        (0.0, AxisRefinement::Border)
    } else {
        log_quadratic_offset(mag[[r, c - 1]], center, mag[[r, c + 1]])
    };
    let (dv, along_v) = if r == 0 || r + 1 >= rows {
        (0.0, AxisRefinement::Border)
    } else {
        log_quadratic_offset(mag[[r - 1, c]], center, mag[[r + 1, c]])
    };
    Refined {
        u: c as f64 + du,
        v: r as f64 + dv,
        along_u,
        along_v,
    }
}
