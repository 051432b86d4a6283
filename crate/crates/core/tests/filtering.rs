mod common;

use common::spearman;
use smlm_core::codec::DecodeConfig;
use smlm_core::filtering::{calibrate_proxy, oracle_scores, proxy_uncertainty, ProxyConfig};
use smlm_core::metrics::MatchTolerance;
use smlm_core::oracle::{decode_population, NoisyOracle};
use smlm_core::sim::SimConfig;

fn reference_config() -> SimConfig {
    SimConfig {
        density: 4.13,
        photon_mean: 5000.0,
        photon_sigma: 250.0,
        rng_seed: 11,
        ..SimConfig::default()
    }
}

#[test]
fn default_proxy_constants_match_reference_calibration() {
    let cfg = reference_config();
    let (gt, seeds) = decode_population(&cfg, &DecodeConfig::default(), &NoisyOracle::default(), 0..200, 0).unwrap();
    let span = cfg.z_range.1 - cfg.z_range.0;
    let fitted = calibrate_proxy(&gt, &seeds, span, &MatchTolerance::default(), ProxyConfig::default(), 0).unwrap();
    println!("calibrated {fitted:?} on {} seeds", seeds.len());
    let d = ProxyConfig::default();
    assert!((fitted.c1 / d.c1 - 1.0).abs() < 0.01, "{fitted:?}");
    assert!((fitted.c2 / d.c2 - 1.0).abs() < 0.01, "{fitted:?}");
}

#[test]
fn proxy_ranks_like_true_error() {
    // A different seed from the calibration run.
    let cfg = SimConfig {
        rng_seed: 12,
        photon_mean: 2000.0,
        photon_sigma: 1000.0,
        ..reference_config()
    };
    let tol = MatchTolerance::default();
    let (gt, seeds) = decode_population(&cfg, &DecodeConfig::default(), &NoisyOracle::default(), 0..160, 0).unwrap();
    assert!(seeds.len() >= 10_000, "{}", seeds.len());
    let truth = oracle_scores(&gt, &seeds, &tol, 0).unwrap();
    let proxy = proxy_uncertainty(&seeds, cfg.z_range.1 - cfg.z_range.0, &ProxyConfig::default());
    let (a, b): (Vec<f64>, Vec<f64>) = truth
        .iter()
        .zip(&proxy)
        .filter(|(t, _)| t.is_finite())
        .map(|(t, p)| (*t, p.scalar_score))
        .unzip();
    let rho = spearman(&a, &b);
    println!("spearman {rho:.3} over {} matched seeds", a.len());
    assert!(rho > 0.3, "{rho}");
}
