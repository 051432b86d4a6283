//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use smlm_core::codec::Seed;
use smlm_core::metrics::MatchTolerance;
use smlm_core::sim::{Emitter, EmitterSet};

/// Exhaustive search over every partial injective assignment. Returns the
/// lexicographic optimum (most pairs, then least total cost).
pub fn brute_force_assignment(gt: &EmitterSet, pred: &[Seed], tol: &MatchTolerance) -> (usize, f64) {
    fn go(i: usize, gt: &[Emitter], pred: &[Seed], tol: &MatchTolerance, used: &mut Vec<bool>, count: usize, cost: f64, best: &mut (usize, f64)) {
        if i == gt.len() {
            if count > best.0 || (count == best.0 && cost < best.1) {
                *best = (count, cost);
            }
            return;
        }
        go(i + 1, gt, pred, tol, used, count, cost, best);
        for j in 0..pred.len() {
            if used[j] {
                continue;
            }
            let (e, p) = (&gt[i], &pred[j]);
            if let Some(c) = tol.cost(p.x - e.x, p.y - e.y, p.z - e.z) {
                used[j] = true;
                go(i + 1, gt, pred, tol, used, count + 1, cost + c, best);
                used[j] = false;
            }
        }
    }
    let mut best = (0, 0.0);
    go(0, &gt.emitters, pred, tol, &mut vec![false; pred.len()], 0, 0.0, &mut best);
    best
}

pub fn seed(frame_id: u64, x: f64, y: f64, z: f64) -> Seed {
    Seed {
        frame_id,
        x,
        y,
        z,
        peak_magnitude: 1.0,
        peak_sharpness: 1.0,
        phase_dispersion: 0.0,
    }
}

/// Average ranks (ties share the mean rank).
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0;
        for k in i..=j {
            out[idx[k]] = r;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
