//! Flat `key = value` run configuration and the named presets.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::codec::DecodeConfig;
use crate::error::{Error, FormatError, Result};
use crate::filtering::ProxyConfig;
use crate::io::format_float;
use crate::metrics::{MatchTolerance, ResidualConfig};
use crate::render::{CrossSection, Region, RenderConfig, SliceAxis};
use crate::sim::{Modality, PsfModel, SimConfig};

/// Everything a run needs, with one key per field.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Name of the preset the run started from, if any.
    pub preset: Option<String>,
    pub sim: SimConfig,
    pub decode: DecodeConfig,
    pub tolerance: MatchTolerance,
    pub residual: ResidualConfig,
    pub proxy: ProxyConfig,
    pub render: RenderConfig,
    pub sweep_min_frames: u64,
    pub sweep_max_frames: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: None,
            sim: SimConfig::default(),
            decode: DecodeConfig::default(),
            tolerance: MatchTolerance::default(),
            residual: ResidualConfig::default(),
            proxy: ProxyConfig::default(),
            render: RenderConfig::default(),
            sweep_min_frames: 100,
            sweep_max_frames: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Snr {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub photon_mean: f64,
    pub photon_sigma: f64,
    /// Emitters per µm².
    pub density: f64,
    pub snr: Snr,
    pub modality: Modality,
}

const fn preset(name: &'static str, photons: (f64, f64), density: f64, snr: Snr, modality: Modality) -> Preset {
    Preset {
        name,
        photon_mean: photons.0,
        photon_sigma: photons.1,
        density,
        snr,
        modality,
    }
}

const LOW: (f64, f64) = (1000.0, 50.0);
const MEDIUM: (f64, f64) = (5000.0, 250.0);
const HIGH: (f64, f64) = (20_000.0, 1000.0);

pub const PRESETS: [Preset; 11] = [
    preset("AI-1", LOW, 0.77, Snr::Low, Modality::Astigmatic),
    preset("AI-2", MEDIUM, 0.77, Snr::Medium, Modality::Astigmatic),
    preset("AI-3", HIGH, 0.77, Snr::High, Modality::Astigmatic),
    preset("AI-4", LOW, 4.13, Snr::Low, Modality::Astigmatic),
    preset("AI-5", MEDIUM, 4.13, Snr::Medium, Modality::Astigmatic),
    preset("AI-6", HIGH, 4.13, Snr::High, Modality::Astigmatic),
    preset("AI-7", LOW, 15.5, Snr::Low, Modality::Astigmatic),
    preset("AI-8", MEDIUM, 15.5, Snr::Medium, Modality::Astigmatic),
    preset("AI-9", HIGH, 15.5, Snr::High, Modality::Astigmatic),
    preset("AI-AS", (1000.0, 300.0), 0.62, Snr::Low, Modality::Astigmatic),
    preset("AI-DH", (3600.0, 1000.0), 0.62, Snr::Low, Modality::DoubleHelix),
];

/// Emitter densities (µm⁻²) of the standard density sweep.
pub const SWEEP_DENSITIES: [f64; 10] = [
    0.035870, 0.103306, 0.206612, 0.464876, 1.033058, 2.376033, 5.630165, 9.297520, 15.49587, 30.99174,
];

pub fn find_preset(name: &str) -> Result<&'static Preset> {
    PRESETS
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::InvalidConfig(format!("unknown preset {name:?}")))
}

impl RunConfig {
    pub fn from_preset(name: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_preset(name)?;
        Ok(cfg)
    }

    /// Overwrites the fields a preset defines.
    pub fn apply_preset(&mut self, name: &str) -> Result<()> {
        let p = find_preset(name)?;
        self.preset = Some(p.name.to_string());
        self.sim.photon_mean = p.photon_mean;
        self.sim.photon_sigma = p.photon_sigma;
        self.sim.density = p.density;
        self.sim.psf = match p.modality {
            Modality::Astigmatic => PsfModel::default(),
            Modality::DoubleHelix => PsfModel::double_helix(),
        };
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.decode.validate()?;
        self.tolerance.validate()?;
        self.proxy.validate()?;
        self.render.validate()?;
        if self.residual.patience == 0 || self.residual.checkpoint_seeds == 0 || !(self.residual.rel_tolerance > 0.0) {
            return Err(Error::InvalidConfig("residual settings must be positive".into()));
        }
        if self.sweep_min_frames > self.sweep_max_frames {
            return Err(Error::InvalidConfig(format!(
                "sweep.min_frames {} exceeds sweep.max_frames {}",
                self.sweep_min_frames, self.sweep_max_frames
            )));
        }
        Ok(())
    }

    /// Every key with its canonical value text, sorted by key.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let f = |v: f64| format_float(v);
        let s = &self.sim;
        let c = &s.camera;
        let p = &s.psf;
        let r = &self.render;
        let mut out = vec![
            ("camera.background", f(c.background_rate)),
            ("camera.baseline", f(c.baseline)),
            ("camera.gain", f(c.gain)),
            ("camera.height", c.height.to_string()),
            ("camera.pixel_pitch_x", f(c.pixel_pitch_x)),
            ("camera.pixel_pitch_y", f(c.pixel_pitch_y)),
            ("camera.read_noise", f(c.read_noise_sigma)),
            ("camera.width", c.width.to_string()),
            ("decode.nms_radius", f(self.decode.nms_radius)),
            ("decode.phase_window", self.decode.phase_window.to_string()),
            ("decode.target_sigma", f(self.decode.target_sigma)),
            ("decode.threshold", f(self.decode.detection_threshold)),
            ("filter.c1", f(self.proxy.c1)),
            ("filter.c2", f(self.proxy.c2)),
            ("match.axial", f(self.tolerance.axial)),
            ("match.lateral", f(self.tolerance.lateral)),
            ("match.mode", self.tolerance.mode.name().to_string()),
            ("preset", self.preset.clone().unwrap_or_else(|| "none".into())),
            ("psf.d", f(p.d)),
            ("psf.dh_lobe_distance", f(p.dh_lobe_distance)),
            ("psf.dh_rotation_rate", f(p.dh_rotation_rate)),
            ("psf.gamma", f(p.gamma)),
            ("psf.modality", p.modality.name().to_string()),
            ("psf.sigma0", f(p.sigma0)),
            ("render.bin_size", f(r.bin_size)),
            ("render.color_mode", r.color_mode.name().to_string()),
            ("render.intensity", r.intensity.name().to_string()),
            (
                "render.region",
                r.region.map_or("none".into(), |g| {
                    format!("{},{},{},{}", f(g.x_min), f(g.y_min), f(g.x_max), f(g.y_max))
                }),
            ),
            (
                "render.slice",
                r.cross_section.map_or("none".into(), |cs| {
                    let axis = match cs.axis {
                        SliceAxis::X => "x",
                        SliceAxis::Y => "y",
                    };
                    format!("{axis},{},{}", f(cs.center), f(cs.thickness))
                }),
            ),
            ("render.z_clip_max", f(r.z_clip.1)),
            ("render.z_clip_min", f(r.z_clip.0)),
            ("residual.checkpoint_seeds", self.residual.checkpoint_seeds.to_string()),
            ("residual.patience", self.residual.patience.to_string()),
            ("residual.rel_tolerance", f(self.residual.rel_tolerance)),
            ("sim.density", f(s.density)),
            ("sim.min_separation", f(s.min_separation)),
            ("sim.n_frames", s.n_frames.to_string()),
            ("sim.photon_mean", f(s.photon_mean)),
            ("sim.photon_sigma", f(s.photon_sigma)),
            ("sim.seed", s.rng_seed.to_string()),
            ("sim.z_max", f(s.z_range.1)),
            ("sim.z_min", f(s.z_range.0)),
            ("sweep.max_frames", self.sweep_max_frames.to_string()),
            ("sweep.min_frames", self.sweep_min_frames.to_string()),
        ];
        out.sort_by_key(|e| e.0);
        out
    }

    pub fn keys() -> Vec<&'static str> {
        RunConfig::default().entries().into_iter().map(|e| e.0).collect()
    }

    /// Sets one key from its text form. `preset` re-applies the preset's fields.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(v: &str) -> std::result::Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.parse::<T>().map_err(|e| format!("{v:?}: {e}"))
        }
        fn named<T: FromStr<Err = Error>>(v: &str) -> std::result::Result<T, String> {
            v.parse::<T>().map_err(|e| e.to_string())
        }
        let v = value.trim();
        let s = &mut self.sim;
        match key {
            "camera.background" => s.camera.background_rate = num(v)?,
            "camera.baseline" => s.camera.baseline = num(v)?,
            "camera.gain" => s.camera.gain = num(v)?,
            "camera.height" => s.camera.height = num(v)?,
            "camera.pixel_pitch_x" => s.camera.pixel_pitch_x = num(v)?,
            "camera.pixel_pitch_y" => s.camera.pixel_pitch_y = num(v)?,
            "camera.read_noise" => s.camera.read_noise_sigma = num(v)?,
            "camera.width" => s.camera.width = num(v)?,
            "decode.nms_radius" => self.decode.nms_radius = num(v)?,
            "decode.phase_window" => self.decode.phase_window = num(v)?,
            "decode.target_sigma" => self.decode.target_sigma = num(v)?,
            "decode.threshold" => self.decode.detection_threshold = num(v)?,
            "filter.c1" => self.proxy.c1 = num(v)?,
            "filter.c2" => self.proxy.c2 = num(v)?,
            "match.axial" => self.tolerance.axial = num(v)?,
            "match.lateral" => self.tolerance.lateral = num(v)?,
            "match.mode" => self.tolerance.mode = named(v)?,
            "preset" => {
                if v == "none" {
                    self.preset = None;
                } else {
                    self.apply_preset(v).map_err(|e| e.to_string())?;
                }
            }
            "psf.d" => s.psf.d = num(v)?,
            "psf.dh_lobe_distance" => s.psf.dh_lobe_distance = num(v)?,
            "psf.dh_rotation_rate" => s.psf.dh_rotation_rate = num(v)?,
            "psf.gamma" => s.psf.gamma = num(v)?,
            "psf.modality" => s.psf.modality = named(v)?,
            "psf.sigma0" => s.psf.sigma0 = num(v)?,
            "render.bin_size" => self.render.bin_size = num(v)?,
            "render.color_mode" => self.render.color_mode = named(v)?,
            "render.intensity" => self.render.intensity = named(v)?,
            "render.region" => self.render.region = parse_region(v)?,
            "render.slice" => self.render.cross_section = parse_slice(v)?,
            "render.z_clip_max" => self.render.z_clip.1 = num(v)?,
            "render.z_clip_min" => self.render.z_clip.0 = num(v)?,
            "residual.checkpoint_seeds" => self.residual.checkpoint_seeds = num(v)?,
            "residual.patience" => self.residual.patience = num(v)?,
            "residual.rel_tolerance" => self.residual.rel_tolerance = num(v)?,
            "sim.density" => s.density = num(v)?,
            "sim.min_separation" => s.min_separation = num(v)?,
            "sim.n_frames" => s.n_frames = num(v)?,
            "sim.photon_mean" => s.photon_mean = num(v)?,
            "sim.photon_sigma" => s.photon_sigma = num(v)?,
            "sim.seed" => s.rng_seed = num(v)?,
            "sim.z_max" => s.z_range.1 = num(v)?,
            "sim.z_min" => s.z_range.0 = num(v)?,
            "sweep.max_frames" => self.sweep_max_frames = num(v)?,
            "sweep.min_frames" => self.sweep_min_frames = num(v)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Applies the lines of a config file on top of `self`. A `preset` line
    /// is applied first wherever it appears, so explicit keys always win.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = (i + 1) as u64;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| FormatError::Parse {
                line,
                reason: format!("expected `key = value`, found {content:?}"),
            })?;
            let key = key.trim();
            if pairs.iter().any(|(_, k, _): &(u64, &str, &str)| *k == key) {
                return Err(FormatError::Parse {
                    line,
                    reason: format!("duplicate key {key:?}"),
                }
                .into());
            }
            pairs.push((line, key, value.trim()));
        }
        pairs.sort_by_key(|(_, k, _)| *k != "preset");
        for (line, key, value) in pairs {
            self.set(key, value).map_err(|reason| FormatError::Parse { line, reason })?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Canonical text: every key, sorted, one per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    /// The configuration as it reads back from its own file: floats rounded
    /// to the written precision. Runs use this so that re-running from a
    /// saved file reproduces them exactly.
    pub fn canonical(&self) -> Self {
        Self::parse(&self.to_text()).expect("canonical text always parses")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn floats(v: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated values, found {}", parts.len()));
    }
    parts.iter().map(|p| p.parse::<f64>().map_err(|e| format!("{p:?}: {e}"))).collect()
}

fn parse_region(v: &str) -> std::result::Result<Option<Region>, String> {
    if v == "none" {
        return Ok(None);
    }
    let f = floats(v, 4)?;
    Ok(Some(Region {
        x_min: f[0],
        y_min: f[1],
        x_max: f[2],
        y_max: f[3],
    }))
}

fn parse_slice(v: &str) -> std::result::Result<Option<CrossSection>, String> {
    if v == "none" {
        return Ok(None);
    }
    let (axis, rest) = v.split_once(',').ok_or("expected `axis,center,thickness`")?;
    let axis = match axis.trim() {
        "x" => SliceAxis::X,
        "y" => SliceAxis::Y,
        other => return Err(format!("slice axis must be x or y, got {other:?}")),
    };
    let f = floats(rest, 2)?;
    Ok(Some(CrossSection {
        axis,
        center: f[0],
        thickness: f[1],
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ai5_preset() {
        let cfg = RunConfig::from_preset("AI-5").unwrap();
        assert_eq!((cfg.sim.photon_mean, cfg.sim.photon_sigma, cfg.sim.density), (5000.0, 250.0, 4.13));
        assert_eq!(find_preset("ai-5").unwrap().snr, Snr::Medium);
    }

    #[test]
    fn double_helix_preset_switches_psf() {
        let cfg = RunConfig::from_preset("AI-DH").unwrap();
        assert_eq!(cfg.sim.psf.modality, Modality::DoubleHelix);
        assert_eq!(cfg.sim.photon_mean, 3600.0);
    }

    #[test]
    fn every_preset_reserializes_identically() {
        for p in PRESETS {
            let cfg = RunConfig::from_preset(p.name).unwrap();
            cfg.validate().unwrap();
            let text = cfg.to_text();
            let back = RunConfig::parse(&text).unwrap();
            assert_eq!(back.to_text(), text, "{}", p.name);
            assert_eq!(back.canonical(), back);
        }
    }

    #[test]
    fn default_round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back.to_text(), cfg.to_text());
        assert_eq!(back.sim.camera, cfg.sim.camera);
        assert_eq!(back.decode, cfg.decode);
        assert_eq!(back.canonical(), back);
    }

    #[test]
    fn canonical_text_is_sorted_and_complete() {
        let text = RunConfig::default().to_text();
        let keys: Vec<&str> = text.lines().map(|l| l.split(" = ").next().unwrap()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(keys, RunConfig::keys());
    }

    #[test]
    fn explicit_keys_beat_the_preset() {
        let cfg = RunConfig::parse("sim.density = 2 # override\npreset = AI-5\n").unwrap();
        assert_eq!(cfg.sim.density, 2.0);
        assert_eq!(cfg.sim.photon_mean, 5000.0);
    }

    #[test]
    fn render_fields_round_trip() {
        let text = "render.region = 0,10,100,200.5\nrender.slice = y,50,20\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.render.region.unwrap().x_max, 100.0);
        assert_eq!(cfg.render.cross_section.unwrap().axis, SliceAxis::Y);
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap().render, cfg.render);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("# c\n\nsim.bogus = 1\n", 3),
            ("sim.density 4\n", 1),
            ("sim.density = many\n", 1),
            ("match.mode = 2d\n", 1),
            ("sim.seed = 1\nsim.seed = 2\n", 2),
            ("preset = AI-10\n", 1),
        ];
        for (text, expected_line) in cases {
            match RunConfig::parse(text) {
                Err(Error::Format(FormatError::Parse { line, .. })) => assert_eq!(line, expected_line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn sweep_densities_are_ascending() {
        assert!(SWEEP_DENSITIES.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(SWEEP_DENSITIES[3], 0.464876);
    }
}
