#![allow(dead_code)]

use critwave::radiation::RadiationProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Profile spec: a sum of 1-4 quartic bumps inside [-4, 4].
pub fn random_bump_spec(rng: &mut ChaCha8Rng, positive: bool) -> String {
    let n = rng.gen_range(1..=4);
    let mut terms = Vec::new();
    for _ in 0..n {
        let w: f64 = rng.gen_range(0.3..1.2);
        let c: f64 = rng.gen_range(-4.0 + w..4.0 - w);
        let amp: f64 = if positive { rng.gen_range(0.1..1.0) } else { rng.gen_range(-1.0..1.0) };
        terms.push(format!("bump:{c}:{w}:{amp}"));
    }
    terms.join("+")
}

pub fn random_profile(rng: &mut ChaCha8Rng) -> RadiationProfile {
    RadiationProfile::from_spec(&random_bump_spec(rng, false)).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
