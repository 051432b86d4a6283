use ndarray::Array2;

use super::{DecodeConfig, AMPLITUDE};

/// Local maxima of `mag` above the detection threshold, thinned by greedy NMS.
///
/// A pixel is a local maximum when it is strictly greater than every
/// 8-neighbour that precedes it in row-major order and not smaller than the
/// ones that follow, so a plateau of equal values yields exactly one peak (its
/// row-major-first pixel). Survivors are returned as `(row, col)` in
/// descending value, ties in row-major order.
pub fn find_peaks(mag: &Array2<f64>, cfg: &DecodeConfig) -> Vec<(usize, usize)> {
    let (rows, cols) = mag.dim();
    let threshold = cfg.detection_threshold * AMPLITUDE;
    let mut candidates = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = mag[[r, c]];
            if !(v >= threshold) || v <= 0.0 {
                continue;
            }
            if is_local_max(mag, r, c, v) {
                candidates.push((v, r, c));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let r2 = cfg.nms_radius * cfg.nms_radius;
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for (_, r, c) in candidates {
        let clear = kept.iter().all(|&(kr, kc)| {
            let dr = kr as f64 - r as f64;
            let dc = kc as f64 - c as f64;
            dr * dr + dc * dc > r2
        });
        if clear {
            kept.push((r, c));
        }
    }
    kept
}

fn is_local_max(mag: &Array2<f64>, r: usize, c: usize, v: f64) -> bool {
    let (rows, cols) = mag.dim();
    for rr in r.saturating_sub(1)..=(r + 1).min(rows - 1) {
        for cc in c.saturating_sub(1)..=(c + 1).min(cols - 1) {
            if (rr, cc) == (r, c) {
                continue;
            }
            let n = mag[[rr, cc]];
            let precedes = (rr, cc) < (r, c);
            if n > v || (precedes && n == v) {
                return false;
            }
        }
    }
    true
}
