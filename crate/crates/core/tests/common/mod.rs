//! Oracles shared by several test targets.
#![allow(dead_code)]

use extmem::bitmap::Bitmap;
use extmem::gridworld::{Action, Observation, Transition};
use extmem::tinynet::{td_loss_and_grad, NetParams, NetSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_obs(side: usize, rng: &mut impl Rng) -> Observation {
    let bits = (0..side * side).map(|_| rng.random_bool(0.3)).collect();
    Observation::from_bitmap(&Bitmap::from_bits(side, side, bits))
}

fn random_params(spec: NetSpec, rng: &mut impl Rng) -> NetParams {
    let mut p = NetParams::zeros(spec).unwrap();
    let flat: Vec<f64> = (0..p.len()).map(|_| rng.random_range(-0.5..0.5)).collect();
    p.set_flat(&flat).unwrap();
    p
}

/// Largest relative gap between the analytic TD-loss gradient and central
/// differences with step `h`, over every parameter of `cases` random
/// networks drawn from {2,3} layers x {4,8,16,32} units.
///
/// Gaps are taken relative to `max(|analytic|, |numeric|, 1e-6)` so that
/// parameters of dead units, whose true gradient is zero, are judged on
/// absolute error.
pub fn max_gradient_error(cases: usize, h: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let layers = [2, 3][rng.random_range(0..2)];
        let units = [4, 8, 16, 32][rng.random_range(0..4)];
        let side = [4, 8][rng.random_range(0..2)];
        let spec = NetSpec::new(side * side, layers, units, 4);
        let params = random_params(spec, &mut rng);
        let target = random_params(spec, &mut rng);
        let batch: Vec<Transition> = (0..rng.random_range(1..6))
            .map(|_| Transition {
                obs: random_obs(side, &mut rng),
                action: Action::from_index(rng.random_range(0..4)),
                reward: rng.random_range(0..2) as f64,
                next_obs: random_obs(side, &mut rng),
                done: rng.random_bool(0.3),
            })
            .collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let gamma = 0.9;
        let (_, grad) = td_loss_and_grad(&params, &target, &refs, gamma).unwrap();
        let analytic = grad.to_flat();
        let mut probe = params.clone();
        for (k, &g) in analytic.iter().enumerate() {
            let base = *probe.param_mut(k);
            *probe.param_mut(k) = base + h;
            let up = td_loss_and_grad(&probe, &target, &refs, gamma).unwrap().0;
            *probe.param_mut(k) = base - h;
            let down = td_loss_and_grad(&probe, &target, &refs, gamma).unwrap().0;
            *probe.param_mut(k) = base;
            let numeric = (up - down) / (2.0 * h);
            let err = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}
