use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::{Emitter, EmitterSet, SimConfig};

/// Placement attempts per emitter before it is given up under a separation constraint.
const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

/// Draws one frame's ground truth. `config` must already be validated.
///
/// Count ~ Poisson(density * area), positions uniform over the frame, z uniform
/// over `z_range`, photons ~ Normal(mean, sigma) truncated to `>= 1`. With
/// `min_separation > 0` positions are rejection-sampled; an emitter that cannot
/// be placed after `MAX_PLACEMENT_ATTEMPTS` tries is dropped.
pub fn sample_emitters<R: Rng + ?Sized>(config: &SimConfig, frame_id: u64, rng: &mut R) -> EmitterSet {
    let mean = config.expected_count();
    let count = Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0);

    let (w, h) = (config.camera.extent_x(), config.camera.extent_y());
    let (z_lo, z_hi) = config.z_range;
    let photons = PhotonDraw::new(config.photon_mean, config.photon_sigma);
    let mut occupancy = SeparationGrid::new(w, h, config.min_separation);

    let mut emitters = Vec::with_capacity(count);
    for _ in 0..count {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let x = rng.random_range(0.0..w);
            let y = rng.random_range(0.0..h);
            if occupancy.is_free(x, y) {
                placed = Some((x, y));
                break;
            }
        }
        let Some((x, y)) = placed else { continue };
        occupancy.insert(x, y);
        let z = rng.random_range(z_lo..=z_hi);
        let photons = photons.draw(rng);
        emitters.push(Emitter {
            id: emitters.len() as u64,
            x,
            y,
            z,
            photons,
        });
    }
    EmitterSet::new(frame_id, emitters)
}

struct PhotonDraw {
    mean: f64,
    normal: Option<Normal<f64>>,
}

impl PhotonDraw {
    fn new(mean: f64, sigma: f64) -> Self {
        let normal = (sigma > 0.0).then(|| Normal::new(mean, sigma).expect("validated photon sigma"));
        Self { mean, normal }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let Some(normal) = &self.normal else {
            return self.mean.max(1.0);
        };
        for _ in 0..1000 {
            let v = normal.sample(rng);
            if v >= 1.0 {
                return v;
            }
        }
        1.0
    }
}

/// Uniform bucket grid with cell size equal to the separation, so only the
/// 3x3 neighbouring cells need checking.
struct SeparationGrid {
    sep: f64,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<(f64, f64)>>,
}

impl SeparationGrid {
    fn new(w: f64, h: f64, sep: f64) -> Self {
        if sep <= 0.0 {
            return Self {
                sep,
                cols: 0,
                rows: 0,
                cells: Vec::new(),
            };
        }
        let cols = ((w / sep).ceil() as usize).max(1);
        let rows = ((h / sep).ceil() as usize).max(1);
        Self {
            sep,
            cols,
            rows,
            cells: vec![Vec::new(); cols * rows],
        }
    }

    fn cell(&self, x: f64, y: f64) -> (usize, usize) {
        let c = ((x / self.sep) as usize).min(self.cols - 1);
        let r = ((y / self.sep) as usize).min(self.rows - 1);
        (c, r)
    }

    fn is_free(&self, x: f64, y: f64) -> bool {
        if self.cells.is_empty() {
            return true;
        }
        let (c, r) = self.cell(x, y);
        let sep2 = self.sep * self.sep;
        for rr in r.saturating_sub(1)..=(r + 1).min(self.rows - 1) {
            for cc in c.saturating_sub(1)..=(c + 1).min(self.cols - 1) {
                for &(px, py) in &self.cells[rr * self.cols + cc] {
                    if (px - x).powi(2) + (py - y).powi(2) < sep2 {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn insert(&mut self, x: f64, y: f64) {
        if self.cells.is_empty() {
            return;
        }
        let (c, r) = self.cell(x, y);
        self.cells[r * self.cols + c].push((x, y));
    }
}
