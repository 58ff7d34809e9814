//! Seeded synthetic tick streams for tests, examples and benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::ingest::Tick;

const NS: f64 = 1e9;

fn tick(t: f64, price: f64, size: f64) -> Tick {
    Tick { t: (t * NS).round() as i64, price, size }
}

/// Random session: exponential gaps with mean `gap` seconds, a random-walk
/// price on a 0.01 grid and sizes with occasional bursts.
pub fn random_session(seed: u64, count: usize, gap: f64) -> Vec<Tick> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut t = 0.0;
    let mut p: f64 = 100.0;
    (0..count)
        .map(|_| {
            t += -gap * (1.0 - rng.gen::<f64>()).ln();
            p = (p + 0.01 * rng.gen_range(-2i32..=2) as f64).max(1.0);
            let base = rng.gen_range(1..=10) as f64 * 100.0;
            let size = if rng.gen_bool(0.05) { base * rng.gen_range(5.0..20.0) } else { base };
            tick(t, (p * 100.0).round() / 100.0, size)
        })
        .collect()
}

/// Ticks at regular spacing `dt` where both price and size follow the given functions of time.
pub fn regular<P: Fn(f64) -> f64, S: Fn(f64) -> f64>(count: usize, dt: f64, price: P, size: S) -> Vec<Tick> {
    (1..=count)
        .map(|k| {
            let t = k as f64 * dt;
            tick(t, price(t), size(t))
        })
        .collect()
}

/// Constant price with a random volume path.
pub fn constant_price(seed: u64, count: usize, price: f64) -> Vec<Tick> {
    let mut ticks = random_session(seed, count, 1.0);
    ticks.iter_mut().for_each(|t| t.price = price);
    ticks
}

/// A flow burst at `spike_at` seconds with width `width`, on top of a
/// constant background; ticks every `dt` seconds until `end`.
pub fn burst(seed: u64, end: f64, dt: f64, spikes: &[(f64, f64, f64)]) -> Vec<Tick> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut p: f64 = 50.0;
    let count = (end / dt).round() as usize;
    (1..=count)
        .map(|k| {
            let t = k as f64 * dt;
            let mut rate = 100.0;
            for &(at, width, height) in spikes {
                let z = (t - at) / width;
                rate += height * (-0.5 * z * z).exp();
            }
            p += 0.01 * rng.gen_range(-1i32..=1) as f64;
            tick(t, p, rate * dt * rng.gen_range(0.8..1.2))
        })
        .collect()
}
