//! Directory-level workflows: the steps the command-line tool chains together.
//!
//! A simulation directory holds `run.cfg`, `emitters.csv` and
//! `frames/frame_NNNNNN.lugr`; encoding adds `maps/map_NNNNNN.lugr`.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::codec::{decode, DecodeStats, LocalizationSet};
use crate::error::{Error, Result};
use crate::io::{load_emitters, save_emitters, save_seeds, GridFile, RunConfig};
use crate::oracle::{ExactOracle, MapSource, NoisyOracle};
use crate::parallel::in_pool;
use crate::sim::{simulate_frame, EmitterSet};

pub const CONFIG_FILE: &str = "run.cfg";
pub const EMITTERS_FILE: &str = "emitters.csv";
pub const FRAMES_DIR: &str = "frames";
pub const MAPS_DIR: &str = "maps";

/// Frames handled per parallel batch; bounds memory, does not affect output.
const BATCH: u64 = 256;

pub fn frame_path(dir: &Path, frame_id: u64) -> PathBuf {
    dir.join(FRAMES_DIR).join(format!("frame_{frame_id:06}.lugr"))
}

pub fn map_path(dir: &Path, frame_id: u64) -> PathBuf {
    dir.join(MAPS_DIR).join(format!("map_{frame_id:06}.lugr"))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn batches(n: u64) -> impl Iterator<Item = std::ops::Range<u64>> {
    (0..n.div_ceil(BATCH)).map(move |b| b * BATCH..((b + 1) * BATCH).min(n))
}

/// Simulates `cfg.sim.n_frames` frames into `out`. Returns the ground truth.
pub fn simulate_to_dir(cfg: &RunConfig, out: &Path, workers: usize) -> Result<Vec<EmitterSet>> {
    cfg.validate()?;
    create_dir(&out.join(FRAMES_DIR))?;
    let sim = &cfg.sim;
    let mut truth = Vec::with_capacity(sim.n_frames as usize);
    for range in batches(sim.n_frames) {
        let results: Vec<Result<EmitterSet>> = in_pool(workers, || {
            range
                .into_par_iter()
                .map(|f| {
                    let (frame, set) = simulate_frame(sim, f);
                    GridFile::from_frame(&frame, sim.z_range).save(&frame_path(out, f))?;
                    Ok(set)
                })
                .collect()
        })?;
        for r in results {
            truth.push(r?);
        }
    }
    save_emitters(&out.join(EMITTERS_FILE), &truth)?;
    cfg.save(&out.join(CONFIG_FILE))?;
    Ok(truth)
}

/// Which producer turns ground truth into map pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapMode {
    /// Noiseless training targets.
    Targets,
    /// The noisy decoder stand-in.
    Noisy,
}

impl MapMode {
    pub fn source(self) -> Box<dyn MapSource> {
        match self {
            MapMode::Targets => Box::new(ExactOracle),
            MapMode::Noisy => Box::new(NoisyOracle::default()),
        }
    }
}

/// Writes one map pair per frame `0..n_frames` into `dir/maps`, from the
/// ground truth in `dir/emitters.csv`.
pub fn encode_dir(cfg: &RunConfig, dir: &Path, mode: MapMode, workers: usize) -> Result<u64> {
    cfg.validate()?;
    let truth = load_emitters(&dir.join(EMITTERS_FILE))?;
    let n = cfg.sim.n_frames.max(truth.last().map_or(0, |s| s.frame_id + 1));
    let mut by_frame = vec![None; n as usize];
    for set in &truth {
        by_frame[set.frame_id as usize] = Some(set);
    }
    create_dir(&dir.join(MAPS_DIR))?;
    let source = mode.source();
    for range in batches(n) {
        let results: Vec<Result<()>> = in_pool(workers, || {
            range
                .into_par_iter()
                .map(|f| {
                    let empty = EmitterSet::new(f, Vec::new());
                    let gt = by_frame[f as usize].unwrap_or(&empty);
                    let pair = source.predict(&cfg.sim, &cfg.decode, gt)?;
                    GridFile::from_map_pair(&pair).save(&map_path(dir, f))
                })
                .collect()
        })?;
        results.into_iter().collect::<Result<()>>()?;
    }
    Ok(n)
}

/// Frame id encoded in a `map_NNNNNN.lugr` file name.
fn map_frame_id(path: &Path) -> Option<u64> {
    let name = path.file_name()?.to_str()?;
    name.strip_prefix("map_")?.strip_suffix(".lugr")?.parse().ok()
}

/// Map files of `dir/maps` in frame order.
pub fn list_maps(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let maps = dir.join(MAPS_DIR);
    let mut out = Vec::new();
    for entry in fs::read_dir(&maps).map_err(|e| Error::io(&maps, e))? {
        let path = entry.map_err(|e| Error::io(&maps, e))?.path();
        if let Some(f) = map_frame_id(&path) {
            out.push((f, path));
        }
    }
    out.sort();
    Ok(out)
}

/// Decodes every map in `dir/maps`; optionally writes the seeds to `out`.
pub fn decode_dir(cfg: &RunConfig, dir: &Path, out: Option<&Path>, workers: usize) -> Result<(LocalizationSet, DecodeStats)> {
    cfg.decode.validate()?;
    let maps = list_maps(dir)?;
    let results: Vec<Result<_>> = in_pool(workers, || {
        maps.par_iter()
            .map(|(f, path)| {
                let mut pair = GridFile::load(path)?.to_map_pair()?;
                // The grid stores one pitch; a non-square camera's y pitch comes from the config.
                if cfg.sim.camera.pixel_pitch_x == pair.pixel_pitch_x {
                    pair.pixel_pitch_y = cfg.sim.camera.pixel_pitch_y;
                }
                decode(&pair, &cfg.decode, *f)
            })
            .collect()
    })?;
    let mut seeds = Vec::new();
    let mut stats = DecodeStats::default();
    for r in results {
        let d = r?;
        seeds.extend(d.seeds);
        stats.merge(&d.stats);
    }
    let seeds = LocalizationSet::new(seeds);
    if let Some(out) = out {
        save_seeds(out, &seeds)?;
    }
    Ok((seeds, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::load_seeds;

    #[test]
    fn map_names() {
        assert_eq!(map_frame_id(Path::new("x/map_000042.lugr")), Some(42));
        assert_eq!(map_frame_id(Path::new("x/frame_000042.lugr")), None);
        assert_eq!(map_frame_id(Path::new("x/map_000042.lugr.tmp")), None);
    }

    #[test]
    fn batches_cover_range() {
        let v: Vec<_> = batches(600).collect();
        assert_eq!(v, vec![0..256, 256..512, 512..600]);
        assert_eq!(batches(0).count(), 0);
    }

    #[test]
    fn simulate_encode_decode_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::from_preset("AI-2").unwrap();
        cfg.sim.n_frames = 4;
        cfg.sim.min_separation = 100.0;
        cfg.sim.rng_seed = 3;
        let truth = simulate_to_dir(&cfg, dir.path(), 2).unwrap();
        assert!(frame_path(dir.path(), 3).exists());
        assert_eq!(RunConfig::load(&dir.path().join(CONFIG_FILE)).unwrap().to_text(), cfg.to_text());

        assert_eq!(encode_dir(&cfg, dir.path(), MapMode::Targets, 2).unwrap(), 4);
        let out = dir.path().join("pred.csv");
        let (seeds, stats) = decode_dir(&cfg, dir.path(), Some(&out), 2).unwrap();
        let n_true: usize = truth.iter().map(|s| s.len()).sum();
        assert_eq!(seeds.len(), n_true);
        assert_eq!(stats.dropped_undefined_depth, 0);
        assert_eq!(load_seeds(&out).unwrap().len(), n_true);
    }
}
