//! Seeded random problems for the verify and crosscheck commands.

use advection_eigen::{Family, OscillationSchedule, Potential, Reaction};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn smooth_reaction(rng: &mut ChaCha8Rng) -> Reaction {
    if rng.gen_bool(0.5) {
        Reaction::plateau(rng.gen_range(0.5..5.0), rng.gen_range(0.5..30.0), rng.gen_range(0.02..0.3))
            .expect("sampled plateau is valid")
    } else {
        Reaction::polynomial(vec![rng.gen_range(1.0..5.0), rng.gen_range(-3.0..3.0), rng.gen_range(-5.0..5.0)])
            .expect("sampled polynomial is valid")
    }
}

pub fn ladder(rng: &mut ChaCha8Rng, depth_max: u32) -> Potential {
    let depth = rng.gen_range(1..=depth_max);
    let delta = rng.gen_range(0.05..0.25);
    let alpha = rng.gen_range(0.2..0.6);
    if rng.gen_bool(0.5) {
        let beta = rng.gen_range(alpha + 0.05..0.9);
        let sch = OscillationSchedule::new(Family::DD, delta, alpha, Some(beta), depth).expect("sampled DD schedule");
        Potential::build_sdd(&sch).expect("DD representative builds")
    } else {
        let sch = OscillationSchedule::new(Family::NN, delta, alpha, None, depth).expect("sampled NN schedule");
        Potential::build_snn(&sch).expect("NN representative builds")
    }
}

/// A bump or a smooth ladder of depth at most `depth_max`.
pub fn smooth_potential(rng: &mut ChaCha8Rng, depth_max: u32) -> Potential {
    if rng.gen_range(0..3) == 0 {
        Potential::bump(rng.gen_range(-0.3..0.3)).expect("sampled bump is valid")
    } else {
        ladder(rng, depth_max)
    }
}

/// Nearby pairs (bump amplitudes, a ladder and one of its folds) and unrelated ladders.
pub fn potential_pair(rng: &mut ChaCha8Rng) -> (Potential, Potential) {
    match rng.gen_range(0..3) {
        0 => {
            let a = rng.gen_range(-0.3..0.3);
            let eps = 10f64.powf(rng.gen_range(-5.0..-1.0));
            (Potential::bump(a).expect("bump"), Potential::bump(a + eps).expect("bump"))
        }
        1 => {
            let m = ladder(rng, 4);
            let levels = m.schedule().expect("ladder has a schedule").levels();
            let k = rng.gen_range(0..levels.len());
            let folded = m.fold_tail(levels[k].contact).expect("contact points fold");
            (m, folded)
        }
        _ => (ladder(rng, 3), ladder(rng, 3)),
    }
}
