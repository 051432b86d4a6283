//! Histogram reconstructions of localization sets.

use std::path::Path;

use image::{ImageFormat, Rgb, RgbImage};
use ndarray::Array2;
use rayon::prelude::*;

use crate::codec::Seed;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorMode {
    Depth,
    FrameId,
    Density,
}

impl ColorMode {
    pub fn name(self) -> &'static str {
        match self {
            ColorMode::Depth => "depth",
            ColorMode::FrameId => "frame-id",
            ColorMode::Density => "density",
        }
    }
}

impl std::str::FromStr for ColorMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "depth" => Ok(ColorMode::Depth),
            "frame-id" => Ok(ColorMode::FrameId),
            "density" => Ok(ColorMode::Density),
            _ => Err(Error::InvalidConfig(format!("unknown color mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntensityScale {
    Linear,
    Sqrt,
}

impl IntensityScale {
    pub fn name(self) -> &'static str {
        match self {
            IntensityScale::Linear => "linear",
            IntensityScale::Sqrt => "sqrt",
        }
    }
}

impl std::str::FromStr for IntensityScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(IntensityScale::Linear),
            "sqrt" => Ok(IntensityScale::Sqrt),
            _ => Err(Error::InvalidConfig(format!("unknown intensity scale {s:?}"))),
        }
    }
}

/// Axis-aligned rectangle in nm, half-open on the high side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

/// Lateral axis normal to the slab.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceAxis {
    X,
    Y,
}

/// Slab `|coord - center| <= thickness/2` rendered as a side view: the
/// other lateral axis runs horizontally and z runs down the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSection {
    pub axis: SliceAxis,
    pub center: f64,
    pub thickness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    pub bin_size: f64,
    pub color_mode: ColorMode,
    /// Seeds outside are skipped; also the range of the depth colormap.
    pub z_clip: (f64, f64),
    pub intensity: IntensityScale,
    /// Defaults to the bounding box of the seeds.
    pub region: Option<Region>,
    pub cross_section: Option<CrossSection>,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            bin_size: 5.0,
            color_mode: ColorMode::Depth,
            z_clip: (-750.0, 750.0),
            intensity: IntensityScale::Sqrt,
            region: None,
            cross_section: None,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bin_size > 0.0 && self.bin_size.is_finite()) {
            return Err(Error::InvalidConfig(format!("bin_size must be > 0, got {}", self.bin_size)));
        }
        let (lo, hi) = self.z_clip;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidConfig(format!("z_clip must be ordered, got ({lo}, {hi})")));
        }
        if let Some(r) = self.region {
            if !(r.x_min < r.x_max && r.y_min < r.y_max) || ![r.x_min, r.x_max, r.y_min, r.y_max].iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidConfig(format!("region must be a non-empty rectangle, got {r:?}")));
            }
        }
        if let Some(c) = self.cross_section {
            if !(c.thickness > 0.0 && c.center.is_finite()) {
                return Err(Error::InvalidConfig(format!("cross-section thickness must be > 0, got {}", c.thickness)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderWarning {
    /// No seed fell inside the region and z clip.
    EmptyRegion,
    /// No seed fell inside the cross-section slab.
    EmptySlab,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendering {
    pub image: RgbImage,
    /// Seeds per bin, `[row, col]`.
    pub counts: Array2<u64>,
    /// Position of the top-left corner of bin `[0, 0]`, in the image plane (nm).
    pub origin: (f64, f64),
    pub bin_size: f64,
    pub warnings: Vec<RenderWarning>,
}

impl Rendering {
    pub fn total_mass(&self) -> u64 {
        self.counts.sum()
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        self.image.save_with_format(path, ImageFormat::Png).map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Image(other.to_string()),
        })
    }
}

/// Anchors of a perceptually uniform blue-green-yellow ramp. None is black,
/// so a populated bin always stays visible.
const RAMP: [[f64; 3]; 9] = [
    [68.0, 1.0, 84.0],
    [71.0, 44.0, 122.0],
    [59.0, 81.0, 139.0],
    [44.0, 113.0, 142.0],
    [33.0, 144.0, 141.0],
    [39.0, 173.0, 129.0],
    [92.0, 200.0, 99.0],
    [170.0, 220.0, 50.0],
    [253.0, 231.0, 37.0],
];

/// Ramp colour at `t` in [0, 1].
pub fn colormap(t: f64) -> [f64; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let pos = t * (RAMP.len() - 1) as f64;
    let i = (pos.floor() as usize).min(RAMP.len() - 2);
    let f = pos - i as f64;
    [0, 1, 2].map(|c| RAMP[i][c] + f * (RAMP[i + 1][c] - RAMP[i][c]))
}

/// Fixed-point scale for colour attributes. Integer sums make the histogram
/// independent of seed order and of how the reduction is split.
const ATTR_SCALE: f64 = 1024.0;

#[derive(Debug, Clone)]
struct Partial {
    counts: Array2<u64>,
    attr: Array2<i128>,
}

impl Partial {
    fn zeros(shape: (usize, usize)) -> Self {
        Self {
            counts: Array2::zeros(shape),
            attr: Array2::zeros(shape),
        }
    }

    fn merge(mut self, other: Partial) -> Partial {
        self.counts += &other.counts;
        self.attr += &other.attr;
        self
    }
}

/// Image-plane coordinates `(h, v)` and the colour attribute for one seed.
type Projected = (f64, f64, f64);

struct Grid {
    origin: (f64, f64),
    bin: f64,
    shape: (usize, usize),
}

/// Bins covering `[lo, hi]`. Explicit bounds are half-open `[lo, hi)`; a
/// bounding box grows by one bin so its far edge is included.
fn bin_count(lo: f64, hi: f64, bin: f64, explicit: bool) -> usize {
    let span = (hi - lo) / bin;
    if explicit {
        (span - 1e-9).ceil().max(1.0) as usize
    } else {
        span.floor() as usize + 1
    }
}

impl Grid {
    fn index(&self, h: f64, v: f64) -> Option<(usize, usize)> {
        let c = ((h - self.origin.0) / self.bin).floor();
        let r = ((v - self.origin.1) / self.bin).floor();
        (c >= 0.0 && r >= 0.0 && (c as usize) < self.shape.1 && (r as usize) < self.shape.0).then(|| (r as usize, c as usize))
    }
}

fn accumulate(points: &[Projected], grid: &Grid) -> Partial {
    points
        .par_chunks(16_384)
        .map(|chunk| {
            let mut p = Partial::zeros(grid.shape);
            for &(h, v, a) in chunk {
                if let Some(ix) = grid.index(h, v) {
                    p.counts[ix] += 1;
                    p.attr[ix] += (a * ATTR_SCALE).round() as i128;
                }
            }
            p
        })
        .reduce(|| Partial::zeros(grid.shape), Partial::merge)
}

fn colorize(hist: &Partial, mode: ColorMode, attr_range: (f64, f64), intensity: IntensityScale) -> RgbImage {
    let (rows, cols) = hist.counts.dim();
    let max_count = hist.counts.iter().copied().max().unwrap_or(0);
    let mut img = RgbImage::new(cols as u32, rows as u32);
    if max_count == 0 {
        return img;
    }
    let (lo, hi) = attr_range;
    for ((r, c), &n) in hist.counts.indexed_iter() {
        if n == 0 {
            continue;
        }
        let rel = n as f64 / max_count as f64;
        let t = match mode {
            ColorMode::Density => rel,
            ColorMode::Depth | ColorMode::FrameId => {
                let mean = hist.attr[[r, c]] as f64 / ATTR_SCALE / n as f64;
                if hi > lo {
                    (mean - lo) / (hi - lo)
                } else {
                    0.0
                }
            }
        };
        let gain = match intensity {
            IntensityScale::Linear => rel,
            IntensityScale::Sqrt => rel.sqrt(),
        };
        let mut px = colormap(t).map(|ch| (ch * gain).round().clamp(0.0, 255.0) as u8);
        if px == [0, 0, 0] {
            px[2] = 1;
        }
        img.put_pixel(c as u32, r as u32, Rgb(px));
    }
    img
}

fn check_finite(seeds: &[Seed]) -> Result<()> {
    match seeds.iter().position(|s| !(s.x.is_finite() && s.y.is_finite() && s.z.is_finite())) {
        Some(i) => Err(Error::OutOfRange(format!("seed {i} has a non-finite position"))),
        None => Ok(()),
    }
}

fn attribute(s: &Seed, mode: ColorMode) -> f64 {
    match mode {
        ColorMode::Depth => s.z,
        ColorMode::FrameId => s.frame_id as f64,
        ColorMode::Density => 0.0,
    }
}

fn render_points(points: Vec<Projected>, h_bounds: Option<(f64, f64)>, v_bounds: Option<(f64, f64)>, cfg: &RenderConfig, empty: RenderWarning) -> Rendering {
    let bbox = |sel: fn(&Projected) -> f64| {
        points.iter().map(sel).fold(None, |acc: Option<(f64, f64)>, x| Some(acc.map_or((x, x), |(a, b)| (a.min(x), b.max(x)))))
    };
    let (h, h_explicit) = match h_bounds {
        Some(b) => (Some(b), true),
        None => (bbox(|p| p.0), false),
    };
    let (v, v_explicit) = match v_bounds {
        Some(b) => (Some(b), true),
        None => (bbox(|p| p.1), false),
    };
    let (Some(h), Some(v)) = (h, v) else {
        return Rendering {
            image: RgbImage::new(1, 1),
            counts: Array2::zeros((1, 1)),
            origin: (0.0, 0.0),
            bin_size: cfg.bin_size,
            warnings: vec![empty],
        };
    };
    let grid = Grid {
        origin: (h.0, v.0),
        bin: cfg.bin_size,
        shape: (
            bin_count(v.0, v.1, cfg.bin_size, v_explicit),
            bin_count(h.0, h.1, cfg.bin_size, h_explicit),
        ),
    };
    let hist = accumulate(&points, &grid);
    let attr_range = match cfg.color_mode {
        ColorMode::Depth => cfg.z_clip,
        ColorMode::FrameId | ColorMode::Density => points
            .iter()
            .filter(|p| grid.index(p.0, p.1).is_some())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.2), b.max(p.2))),
    };
    let mut warnings = Vec::new();
    if hist.counts.sum() == 0 {
        warnings.push(empty);
    }
    Rendering {
        image: colorize(&hist, cfg.color_mode, attr_range, cfg.intensity),
        counts: hist.counts,
        origin: grid.origin,
        bin_size: cfg.bin_size,
        warnings,
    }
}

fn in_z_clip(s: &Seed, cfg: &RenderConfig) -> bool {
    s.z >= cfg.z_clip.0 && s.z <= cfg.z_clip.1
}

/// Top view: x horizontal, y down the image.
pub fn render_histogram(seeds: &[Seed], cfg: &RenderConfig) -> Result<Rendering> {
    cfg.validate()?;
    check_finite(seeds)?;
    let points: Vec<Projected> = seeds
        .iter()
        .filter(|s| in_z_clip(s, cfg))
        .map(|s| (s.x, s.y, attribute(s, cfg.color_mode)))
        .collect();
    let (h, v) = match cfg.region {
        Some(r) => (Some((r.x_min, r.x_max)), Some((r.y_min, r.y_max))),
        None => (None, None),
    };
    Ok(render_points(points, h, v, cfg, RenderWarning::EmptyRegion))
}

/// Side view of the slab in `cfg.cross_section`. The horizontal range comes
/// from the matching side of `cfg.region` if set, the vertical range is `z_clip`.
pub fn render_cross_section(seeds: &[Seed], cfg: &RenderConfig) -> Result<Rendering> {
    cfg.validate()?;
    check_finite(seeds)?;
    let cs = cfg
        .cross_section
        .ok_or_else(|| Error::InvalidConfig("cross-section rendering needs a cross_section".into()))?;
    let half = cs.thickness / 2.0;
    let points: Vec<Projected> = seeds
        .iter()
        .filter(|s| in_z_clip(s, cfg))
        .filter_map(|s| {
            let (normal, along) = match cs.axis {
                SliceAxis::X => (s.x, s.y),
                SliceAxis::Y => (s.y, s.x),
            };
            ((normal - cs.center).abs() <= half).then(|| (along, s.z, attribute(s, cfg.color_mode)))
        })
        .collect();
    let h = cfg.region.map(|r| match cs.axis {
        SliceAxis::X => (r.y_min, r.y_max),
        SliceAxis::Y => (r.x_min, r.x_max),
    });
    let (z0, z1) = cfg.z_clip;
    // z_clip is inclusive at the top; widen by a hair so z = z1 lands in the last row.
    let v = Some((z0, z1 + (z1 - z0) * 1e-12));
    Ok(render_points(points, h, v, cfg, RenderWarning::EmptySlab))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed(x: f64, y: f64, z: f64) -> Seed {
        Seed {
            frame_id: 0,
            x,
            y,
            z,
            peak_magnitude: 1.0,
            peak_sharpness: 1.0,
            phase_dispersion: 0.0,
        }
    }

    fn lit(img: &RgbImage) -> usize {
        img.pixels().filter(|p| p.0 != [0, 0, 0]).count()
    }

    #[test]
    fn single_seed_lights_one_pixel() {
        let r = render_histogram(&[seed(10.0, 20.0, 0.0)], &RenderConfig::default()).unwrap();
        assert_eq!(lit(&r.image), 1);
        assert_eq!(r.total_mass(), 1);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn endpoint_depths_average_to_midpoint_colour() {
        let cfg = RenderConfig::default();
        let r = render_histogram(&[seed(1.0, 1.0, -750.0), seed(2.0, 2.0, 750.0)], &cfg).unwrap();
        assert_eq!(r.counts.dim(), (1, 1));
        let expected = colormap(0.5).map(|c| c.round() as u8);
        assert_eq!(r.image.get_pixel(0, 0).0, expected);
    }

    #[test]
    fn colormap_is_never_black() {
        for k in 0..=100 {
            let c = colormap(k as f64 / 100.0);
            assert!(c.iter().any(|&v| v >= 1.0));
        }
    }

    #[test]
    fn dim_bins_stay_visible() {
        let mut seeds = vec![seed(0.0, 0.0, 0.0); 100_000];
        seeds.push(seed(100.0, 100.0, -750.0));
        let cfg = RenderConfig {
            intensity: IntensityScale::Linear,
            ..RenderConfig::default()
        };
        assert_eq!(lit(&render_histogram(&seeds, &cfg).unwrap().image), 2);
    }

    #[test]
    fn empty_input_warns() {
        let r = render_histogram(&[], &RenderConfig::default()).unwrap();
        assert_eq!(r.warnings, vec![RenderWarning::EmptyRegion]);
        assert_eq!(lit(&r.image), 0);
    }

    #[test]
    fn region_and_clip_filter_mass() {
        let cfg = RenderConfig {
            region: Some(Region {
                x_min: 0.0,
                y_min: 0.0,
                x_max: 100.0,
                y_max: 100.0,
            }),
            ..RenderConfig::default()
        };
        let seeds = [seed(50.0, 50.0, 0.0), seed(150.0, 50.0, 0.0), seed(50.0, 50.0, 900.0), seed(100.0, 0.0, 0.0)];
        let r = render_histogram(&seeds, &cfg).unwrap();
        assert_eq!(r.counts.dim(), (20, 20));
        assert_eq!(r.total_mass(), 1);
    }

    #[test]
    fn frame_id_colouring_spans_the_ramp() {
        let cfg = RenderConfig {
            color_mode: ColorMode::FrameId,
            intensity: IntensityScale::Linear,
            ..RenderConfig::default()
        };
        let mut a = seed(0.0, 0.0, 0.0);
        let mut b = seed(100.0, 0.0, 0.0);
        a.frame_id = 3;
        b.frame_id = 9;
        let r = render_histogram(&[a, b], &cfg).unwrap();
        let last = r.counts.dim().1 as u32 - 1;
        assert_eq!(r.image.get_pixel(0, 0).0, [68, 1, 84]);
        assert_eq!(r.image.get_pixel(last, 0).0, [253, 231, 37]);
    }

    #[test]
    fn cross_section_requires_slab() {
        assert!(render_cross_section(&[seed(0.0, 0.0, 0.0)], &RenderConfig::default()).is_err());
    }

    #[test]
    fn slab_outside_data_warns() {
        let cfg = RenderConfig {
            cross_section: Some(CrossSection {
                axis: SliceAxis::Y,
                center: 5000.0,
                thickness: 10.0,
            }),
            ..RenderConfig::default()
        };
        let r = render_cross_section(&[seed(0.0, 0.0, 0.0)], &cfg).unwrap();
        assert_eq!(r.warnings, vec![RenderWarning::EmptySlab]);
        assert_eq!(r.total_mass(), 0);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            RenderConfig {
                bin_size: 0.0,
                ..RenderConfig::default()
            },
            RenderConfig {
                z_clip: (10.0, -10.0),
                ..RenderConfig::default()
            },
            RenderConfig {
                cross_section: Some(CrossSection {
                    axis: SliceAxis::X,
                    center: 0.0,
                    thickness: 0.0,
                }),
                ..RenderConfig::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn non_finite_seed_rejected() {
        assert!(render_histogram(&[seed(f64::NAN, 0.0, 0.0)], &RenderConfig::default()).is_err());
    }
}
