//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use execflow::engine::TickOutput;
use execflow::{AnalysisConfig, Basis, BasisKind, Engine, MeasureParams, Tick};
use nalgebra::DVector;

/// `Q_m` at a given age, evaluated from textbook formulas rather than the
/// library's recurrence table.
pub fn q_oracle(kind: BasisKind, age: f64, tau: f64, len: usize) -> Vec<f64> {
    let mut q = vec![0.0; len];
    match kind {
        BasisKind::LegendreShifted => {
            let z = 2.0 * (-age / tau).exp() - 1.0;
            let (mut p0, mut p1) = (1.0, z);
            for (m, slot) in q.iter_mut().enumerate() {
                if m == 0 {
                    *slot = 1.0;
                    continue;
                }
                if m == 1 {
                    *slot = z;
                    continue;
                }
                let k = (m - 1) as f64;
                let p2 = ((2.0 * k + 1.0) * z * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
                *slot = p2;
            }
        }
        BasisKind::Laguerre => {
            let y = age / tau;
            let (mut l0, mut l1) = (1.0, 1.0 - y);
            for (m, slot) in q.iter_mut().enumerate() {
                *slot = match m {
                    0 => 1.0,
                    1 => l1,
                    _ => {
                        let k = (m - 1) as f64;
                        let l2 = ((2.0 * k + 1.0 - y) * l1 - k * l0) / (k + 1.0);
                        l0 = l1;
                        l1 = l2;
                        l2
                    }
                };
            }
        }
        BasisKind::ChebyshevShifted => {
            let z = (2.0 * (-age / tau).exp() - 1.0).clamp(-1.0, 1.0);
            let th = z.acos();
            for (m, slot) in q.iter_mut().enumerate() {
                *slot = (m as f64 * th).cos();
            }
        }
        BasisKind::Monomial => {
            let x = -age / tau;
            for (m, slot) in q.iter_mut().enumerate() {
                *slot = x.powi(m as i32);
            }
        }
    }
    q
}

/// From-scratch moments of every tracked observable after `ticks`, in the
/// column order Time, Dp, P, I, PI, VDp, TI (volume), I, PI, VDp, TI (surrogate).
pub fn batch_moments(kind: BasisKind, tau: f64, len: usize, ticks: &[Tick]) -> Vec<DVector<f64>> {
    let mut cols = vec![DVector::zeros(len); 11];
    let t0 = ticks[0].t;
    let secs = |t: i64| (t - t0) as f64 * 1e-9;
    let now = secs(ticks.last().unwrap().t);
    let mut v = [0.0f64; 2];
    let mut vs: Vec<[f64; 2]> = Vec::with_capacity(ticks.len());
    for (l, tk) in ticks.iter().enumerate() {
        if l > 0 {
            v[0] += tk.size;
            v[1] += (tk.price - ticks[l - 1].price).abs();
        }
        vs.push(v);
    }
    for l in 1..ticks.len() {
        let tk = &ticks[l];
        let prev = &ticks[l - 1];
        let age = now - secs(tk.t);
        let w = (-age / tau).exp();
        let q = q_oracle(kind, age, tau, len);
        let delta = secs(tk.t) - secs(prev.t);
        let dp = tk.price - prev.price;
        let da = dp.abs();
        let weights = [
            delta,
            dp,
            tk.price * delta,
            tk.size,
            tk.price * tk.size,
            (vs[l][0] - v[0]) * dp,
            age * tk.size,
            da,
            tk.price * da,
            (vs[l][1] - v[1]) * dp,
            age * da,
        ];
        for (c, wt) in weights.iter().enumerate() {
            for m in 0..len {
                cols[c][m] += wt * w * q[m];
            }
        }
    }
    cols
}

pub fn basis(kind: BasisKind, n: usize, tau: f64) -> Arc<Basis> {
    Arc::new(Basis::new(kind, MeasureParams::new(tau, n)).unwrap())
}

pub fn run_frames(kind: BasisKind, n: usize, tau: f64, ticks: &[Tick], cfg: AnalysisConfig) -> Vec<TickOutput> {
    let mut e = Engine::new(basis(kind, n, tau), cfg).unwrap();
    e.run(ticks).unwrap()
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
