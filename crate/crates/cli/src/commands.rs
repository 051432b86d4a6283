use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use smlm_core::filtering::{filter_by_rate, filter_by_threshold, filter_sweep, oracle_scores, proxy_uncertainty};
use smlm_core::io::{
    describe_convergence, load_emitters, load_seeds, save_seeds, write_checkpoints, write_filter_curve, write_report, write_sweep,
    RunConfig, SWEEP_DENSITIES,
};
use smlm_core::metrics::{density_sweep, evaluate, run_until_converged, SweepOptions};
use smlm_core::oracle::{ExactOracle, MapSource, NoisyOracle};
use smlm_core::pipeline::{decode_dir, encode_dir, simulate_to_dir, MapMode, CONFIG_FILE};
use smlm_core::render::{render_cross_section, render_histogram, RenderWarning};
use smlm_core::{Error, Result};

use crate::{Command, Common};

/// Preset, then config file (or `fallback_dir/run.cfg`), then flags.
fn resolve(common: &Common, fallback_dir: Option<&Path>) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &common.preset {
        cfg.apply_preset(p)?;
    }
    let file = common
        .config
        .clone()
        .or_else(|| fallback_dir.map(|d| d.join(CONFIG_FILE)).filter(|p| p.exists()));
    if let Some(path) = file {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        cfg.apply_text(&text)?;
    }
    if let Some(seed) = common.seed {
        cfg.sim.rng_seed = seed;
    }
    for kv in &common.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v).map_err(Error::InvalidConfig)?;
    }
    Ok(cfg)
}

/// Validated and rounded to its file precision, so a saved config reruns exactly.
fn finish(cfg: RunConfig) -> Result<RunConfig> {
    let cfg = cfg.canonical();
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w).map_err(|e| Error::io(path, e))
}

fn source(exact: bool) -> Box<dyn MapSource> {
    if exact {
        Box::new(ExactOracle)
    } else {
        Box::new(NoisyOracle::default())
    }
}

fn sweep_options(cfg: &RunConfig, workers: usize) -> SweepOptions {
    SweepOptions {
        tolerance: cfg.tolerance,
        residual: cfg.residual,
        min_frames: cfg.sweep_min_frames,
        max_frames: cfg.sweep_max_frames,
        workers,
        ..SweepOptions::default()
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            out,
            frames,
            density,
            common,
        } => {
            let mut cfg = resolve(&common, None)?;
            if let Some(n) = frames {
                cfg.sim.n_frames = n;
            }
            if let Some(d) = density {
                cfg.sim.density = d;
            }
            let cfg = finish(cfg)?;
            let truth = simulate_to_dir(&cfg, &out, common.workers)?;
            let n: usize = truth.iter().map(|s| s.len()).sum();
            eprintln!("simulated {} frames, {n} emitters -> {}", cfg.sim.n_frames, out.display());
        }
        Command::Encode { data, noisy, common } => {
            let cfg = finish(resolve(&common, Some(&data))?)?;
            let mode = if noisy { MapMode::Noisy } else { MapMode::Targets };
            let n = encode_dir(&cfg, &data, mode, common.workers)?;
            eprintln!("encoded {n} map pairs");
        }
        Command::Decode { data, out, common } => {
            let cfg = finish(resolve(&common, Some(&data))?)?;
            let (seeds, stats) = decode_dir(&cfg, &data, Some(&out), common.workers)?;
            eprintln!(
                "decoded {} seeds ({} peaks, {} without defined depth, {} clamped phases)",
                seeds.len(),
                stats.peaks,
                stats.dropped_undefined_depth,
                stats.clamped_phases
            );
        }
        Command::Evaluate { gt, pred, out, common } => {
            let cfg = finish(resolve(&common, None)?)?;
            let truth = load_emitters(&gt)?;
            let seeds = load_seeds(&pred)?;
            let report = evaluate(&truth, &seeds, &cfg.tolerance, cfg.sim.density, common.workers)?;
            write_report(std::io::stdout().lock(), &report).map_err(|e| Error::io("<stdout>", e))?;
            if let Some(out) = out {
                write_with(&out, |w| write_report(w, &report))?;
            }
        }
        Command::Sweep {
            densities,
            exact,
            out,
            common,
        } => {
            let cfg = finish(resolve(&common, None)?)?;
            let densities = if densities.is_empty() { SWEEP_DENSITIES.to_vec() } else { densities };
            let points = density_sweep(
                &densities,
                &cfg.sim,
                &cfg.decode,
                source(exact).as_ref(),
                &sweep_options(&cfg, common.workers),
            )?;
            write_with(&out, |w| write_sweep(w, &points))?;
        }
        Command::Filter {
            pred,
            gt,
            score,
            rates,
            rate,
            threshold,
            out,
            common,
        } => {
            let cfg = finish(resolve(&common, None)?)?;
            let seeds = load_seeds(&pred)?;
            let truth = gt.as_deref().map(load_emitters).transpose()?;
            let need_gt = || Error::InvalidConfig("this filter mode needs --gt".into());
            let scores: Vec<f64> = match score.as_str() {
                "proxy" => proxy_uncertainty(&seeds, cfg.sim.z_range.1 - cfg.sim.z_range.0, &cfg.proxy)
                    .iter()
                    .map(|s| s.scalar_score)
                    .collect(),
                "oracle" => oracle_scores(truth.as_ref().ok_or_else(need_gt)?, &seeds, &cfg.tolerance, common.workers)?,
                other => return Err(Error::InvalidConfig(format!("--score must be proxy or oracle, got {other:?}"))),
            };
            if !rates.is_empty() {
                let truth = truth.as_ref().ok_or_else(need_gt)?;
                let curve = filter_sweep(truth, &seeds, &scores, &rates, &cfg.tolerance, common.workers)?;
                write_with(&out, |w| write_filter_curve(w, &curve))?;
            } else {
                let kept = match (rate, threshold) {
                    (Some(r), _) => filter_by_rate(&seeds, &scores, r)?,
                    (None, Some(t)) => filter_by_threshold(&seeds, &scores, t)?,
                    (None, None) => return Err(Error::InvalidConfig("give one of --rates, --rate or --threshold".into())),
                };
                save_seeds(&out, &kept)?;
                eprintln!("kept {} of {} seeds", kept.len(), seeds.len());
            }
        }
        Command::Render { pred, out, slice, common } => {
            let mut cfg = resolve(&common, None)?;
            if let Some(s) = slice {
                cfg.set("render.slice", &s).map_err(Error::InvalidConfig)?;
            }
            let cfg = finish(cfg)?;
            let seeds = load_seeds(&pred)?;
            let rendering = if cfg.render.cross_section.is_some() {
                render_cross_section(&seeds.seeds, &cfg.render)?
            } else {
                render_histogram(&seeds.seeds, &cfg.render)?
            };
            for w in &rendering.warnings {
                match w {
                    RenderWarning::EmptyRegion => eprintln!("warning: no seeds inside the region"),
                    RenderWarning::EmptySlab => eprintln!("warning: no seeds inside the slab"),
                }
            }
            rendering.write_png(&out)?;
        }
        Command::Residuals { exact, out, common } => {
            let cfg = finish(resolve(&common, None)?)?;
            let point = run_until_converged(&cfg.sim, &cfg.decode, source(exact).as_ref(), &sweep_options(&cfg, common.workers))?;
            write_with(&out, |w| write_checkpoints(w, &point.checkpoints))?;
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{}", describe_convergence(&point.convergence)).map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(())
}
