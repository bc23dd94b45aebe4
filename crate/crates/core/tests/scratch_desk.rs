//! temporary desk-preset calibration

use bidd_core::decision::{bidd_decide, BiddConfig};
use bidd_core::dgp::{generate, DgpSpec, Direction, MechanismKind};
use bidd_core::numerics::{NoiseFamily, Rng};
use std::time::Instant;

#[test]
#[ignore]
fn desk_preset_one_seed() {
    for (mech, noise, mediators) in [
        (MechanismKind::Quadratic, NoiseFamily::Gaussian, 0usize),
        (MechanismKind::Tanh, NoiseFamily::Uniform, 1),
    ] {
        for seed in 0..2u64 {
            let mut mech_rng = Rng::new(10_000 + seed);
            let spec = DgpSpec::random(&mut mech_rng, mech, noise, mediators, 1000, 20_000 + seed);
            let data = generate(&spec).unwrap();
            let cfg = BiddConfig::desk();
            let t0 = Instant::now();
            let out = bidd_decide(&data, &cfg, &Rng::new(30_000 + seed)).unwrap();
            let dt = t0.elapsed().as_secs_f64();
            println!(
                "{mech:?}/{noise:?} T={mediators} seed={seed}: verdict={:?} correct={} votes={}/{} mean_a={:.4e} mean_b={:.4e} tie={} in {dt:.1}s",
                out.verdict.verdict,
                out.verdict.verdict == Direction::AtoB,
                out.verdict.votes,
                out.verdict.timesteps,
                out.verdict.mean_mi_a,
                out.verdict.mean_mi_b,
                out.verdict.tie,
            );
        }
    }
}
