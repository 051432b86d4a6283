//! On-disk formats: emitter/seed CSV, `LUGR` grids and run configuration.

mod config;
mod grid;
mod reports;
mod table;

pub use config::{find_preset, Preset, RunConfig, Snr, PRESETS, SWEEP_DENSITIES};
pub use grid::{GridFile, DTYPE_F32, HEADER_LEN, MAGIC, VERSION};
pub use reports::{
    describe_convergence, write_checkpoints, write_filter_curve, write_report, write_sweep, CHECKPOINT_HEADER, FILTER_HEADER, SWEEP_HEADER,
};
pub use table::{
    format_float, load_emitters, load_seeds, read_emitters, read_seeds, save_emitters, save_seeds, write_emitters, write_seeds,
    EMITTER_HEADER, SEED_HEADER,
};
