use std::ops::Range;

use rayon::prelude::*;

use super::{apply_camera_noise, render_clean_frame, sample_emitters, EmitterSet, Frame, SimConfig};
use crate::error::Result;
use crate::parallel::in_pool;
use crate::rng::{frame_rng, Purpose};

/// Generates frame `frame_id` of the dataset described by `config` in isolation.
pub fn simulate_frame(config: &SimConfig, frame_id: u64) -> (Frame, EmitterSet) {
    let mut rng = frame_rng(config.rng_seed, frame_id, Purpose::Emitters);
    let set = sample_emitters(config, frame_id, &mut rng);
    let clean = render_clean_frame(&set, &config.camera, &config.psf);
    let mut rng = frame_rng(config.rng_seed, frame_id, Purpose::CameraNoise);
    let frame = apply_camera_noise(&clean, &config.camera, &mut rng);
    (frame, set)
}

/// Lazy, in-order stream over all `n_frames` frames.
pub struct DatasetIter {
    config: SimConfig,
    next: u64,
}

impl Iterator for DatasetIter {
    type Item = (Frame, EmitterSet);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.config.n_frames {
            return None;
        }
        let item = simulate_frame(&self.config, self.next);
        self.next += 1;
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.config.n_frames - self.next) as usize;
        (left, Some(left))
    }
}

pub fn simulate_dataset(config: &SimConfig) -> Result<DatasetIter> {
    config.validate()?;
    Ok(DatasetIter {
        config: config.clone(),
        next: 0,
    })
}

/// Generates a range of frames on `workers` threads (0 = all cores), returned in frame order.
pub fn simulate_frames(config: &SimConfig, frames: Range<u64>, workers: usize) -> Result<Vec<(Frame, EmitterSet)>> {
    config.validate()?;
    in_pool(workers, || frames.into_par_iter().map(|f| simulate_frame(config, f)).collect())
}
