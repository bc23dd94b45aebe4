//! Behavioural oracles for the baseline deciders: the reducible case they
//! should get right, the non-identifiable case where they must hover around
//! chance, and the exchangeable case where any decided direction is luck.

use bidd_core::decision::{baseline_mse_min, baseline_resid_indep};
use bidd_core::dgp::{generate, DgpSpec, Direction, MechanismKind, MechanismSpec, PairDataset};
use bidd_core::numerics::{NoiseFamily, Rng};

#[test]
fn resid_lite_solves_quadratic_no_mediator() {
    let mut correct = 0;
    for seed in 0..20u64 {
        let spec = DgpSpec {
            mediators: 0,
            noise_family: NoiseFamily::Uniform,
            cause_variance: 1.0,
            mediator_noise_variance: 0.5,
            effect_noise_variance: 1.0,
            mechanisms: vec![MechanismSpec::Quadratic],
            n: 1000,
            seed: 300 + seed,
        };
        let data = generate(&spec).unwrap();
        if baseline_resid_indep(&data).unwrap().verdict == Direction::AtoB {
            correct += 1;
        }
    }
    assert!(correct >= 18, "resid-lite correct in only {correct}/20 reducible cells");
}

#[test]
fn resid_lite_is_chance_on_linear_gaussian() {
    // linear mechanism with Gaussian noise admits a backward model; accuracy
    // must stay near a coin flip
    let mut correct = 0;
    for seed in 0..20u64 {
        let mut mech_rng = Rng::new(700 + seed);
        let spec = DgpSpec::random(
            &mut mech_rng,
            MechanismKind::Linear,
            NoiseFamily::Gaussian,
            0,
            1000,
            800 + seed,
        );
        let data = generate(&spec).unwrap();
        if baseline_resid_indep(&data).unwrap().verdict == Direction::AtoB {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / 20.0;
    assert!(
        (0.3..=0.7).contains(&accuracy),
        "non-identifiable case should be near chance, got {accuracy}"
    );
}

#[test]
fn mse_lite_is_chance_on_exchangeable_joints() {
    // a = u + v, b = u + w with iid v, w: the joint is exchangeable, so
    // neither direction predicts better than the other
    let mut atob = 0;
    for seed in 0..50u64 {
        let mut rng = Rng::new(900 + seed);
        let mut a = Vec::with_capacity(200);
        let mut b = Vec::with_capacity(200);
        for _ in 0..200 {
            let u = rng.standard_normal();
            a.push(u + rng.standard_normal());
            b.push(u + rng.standard_normal());
        }
        let data = PairDataset::new(a, b, None).unwrap();
        if baseline_mse_min(&data).unwrap().verdict == Direction::AtoB {
            atob += 1;
        }
    }
    let rate = atob as f64 / 50.0;
    assert!((0.3..=0.7).contains(&rate), "exchangeable joint gave rate {rate}");
}
