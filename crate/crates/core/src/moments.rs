//! Exponentially weighted sampled moments, updated tick by tick.
//!
//! Time-integral observables add `Q_m(x_0) * delta * f` per tick and increment
//! observables add `Q_m(x_0) * df`. Before a tick is added every vector is
//! advanced to the new `t_now` with the basis shift map.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::{Basis, ShiftCache};
use crate::error::{Error, Result};
use crate::ingest::Tick;

/// Which flow plays the role of `I = dV/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flow {
    /// Traded shares.
    Volume,
    /// Absolute price changes used as a volume substitute.
    Surrogate,
}

impl Flow {
    pub const BOTH: [Flow; 2] = [Flow::Volume, Flow::Surrogate];

    /// Output field prefix.
    pub fn prefix(self) -> &'static str {
        match self {
            Flow::Volume => "pFV",
            Flow::Surrogate => "pFA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// `<Q_m>` sampled with interval weights.
    Time,
    /// `<Q_m dp/dt>`.
    Dp,
    /// `<Q_m p>` sampled with interval weights.
    P,
    /// `<Q_m I>`.
    I(Flow),
    /// `<Q_m p I>`.
    PI(Flow),
    /// `<Q_m (V - V_last) dp/dt>`.
    VDp(Flow),
    /// `<Q_m (t_now - t) I>`.
    TI(Flow),
    /// Secondary `<Q_m df/dt>`.
    SecDf,
    /// Secondary `<Q_m p df/dt>`.
    SecPDf,
    /// Secondary `<Q_m d(pf)/dt>`.
    SecDPf,
}

const COLS: usize = 14;

impl Observable {
    fn column(self) -> usize {
        let f = |fl: Flow, a: usize, b: usize| if fl == Flow::Volume { a } else { b };
        match self {
            Observable::Time => 0,
            Observable::Dp => 1,
            Observable::P => 2,
            Observable::I(fl) => f(fl, 3, 7),
            Observable::PI(fl) => f(fl, 4, 8),
            Observable::VDp(fl) => f(fl, 5, 9),
            Observable::TI(fl) => f(fl, 6, 10),
            Observable::SecDf => 11,
            Observable::SecPDf => 12,
            Observable::SecDPf => 13,
        }
    }
}

/// All tracked moments of one instrument.
#[derive(Debug, Clone)]
pub struct MomentSet {
    basis: Arc<Basis>,
    data: DMatrix<f64>,
    cache: ShiftCache,
    t0_ns: Option<i64>,
    /// Seconds since the first tick.
    t_now: f64,
    p_last: f64,
    /// First price; `PI` columns are stored relative to it.
    p_ref: f64,
    totals: [f64; 2],
    ticks: u64,
    sec_last: Option<(f64, f64)>,
}

impl MomentSet {
    pub fn new(basis: Arc<Basis>) -> Self {
        let len = basis.moment_len();
        MomentSet {
            basis,
            data: DMatrix::zeros(len, COLS),
            cache: ShiftCache::new(16),
            t0_ns: None,
            t_now: 0.0,
            p_last: f64::NAN,
            p_ref: 0.0,
            totals: [0.0; 2],
            ticks: 0,
            sec_last: None,
        }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn t_now(&self) -> f64 {
        self.t_now
    }

    pub fn p_last(&self) -> f64 {
        self.p_last
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    /// Total traded volume, or total absolute price change for the surrogate.
    pub fn total(&self, flow: Flow) -> f64 {
        self.totals[(flow == Flow::Surrogate) as usize]
    }

    pub fn get(&self, obs: Observable) -> DVector<f64> {
        let mut c = self.data.column(obs.column()).into_owned();
        if let Observable::PI(flow) = obs {
            c.axpy(self.p_ref, &self.data.column(Observable::I(flow).column()), 1.0);
        }
        c
    }

    /// Price all `PI` moments are centered on.
    pub fn p_ref(&self) -> f64 {
        self.p_ref
    }

    /// `<Q_m (p - p_ref) I>`, free of the price-level cancellation in `PI`.
    pub fn pi_centered(&self, flow: Flow) -> DVector<f64> {
        self.data.column(Observable::PI(flow).column()).into_owned()
    }

    /// Seconds since the first tick for a tick time, without updating state.
    pub fn seconds_of(&self, t_ns: i64) -> f64 {
        self.t0_ns.map_or(0.0, |t0| (t_ns - t0) as f64 * 1e-9)
    }

    /// Advances every vector to `t_now + delta` with no new observation.
    pub fn advance(&mut self, delta: f64) -> Result<()> {
        if delta < 0.0 {
            return Err(Error::NegativeShift(delta));
        }
        if delta == 0.0 {
            return Ok(());
        }
        let s = self.cache.get(&self.basis, delta)?;
        self.data = s * &self.data;
        for flow in Flow::BOTH {
            let i = Observable::I(flow).column();
            let ti = Observable::TI(flow).column();
            let shifted = self.data.column(i) * delta;
            let mut c = self.data.column_mut(ti);
            c += shifted;
        }
        self.t_now += delta;
        Ok(())
    }

    /// Moves `t_now` to the time of `t_ns` (a shared clock for panels).
    pub fn advance_to(&mut self, t_ns: i64) -> Result<()> {
        if self.t0_ns.is_none() {
            return Ok(());
        }
        let delta = self.seconds_of(t_ns) - self.t_now;
        self.advance(delta.max(0.0))
    }

    /// Shift-then-add update for one tick.
    pub fn add_tick(&mut self, tick: &Tick) -> Result<()> {
        let Some(t0) = self.t0_ns else {
            self.t0_ns = Some(tick.t);
            self.p_last = tick.price;
            self.p_ref = tick.price;
            self.totals[0] += tick.size;
            self.ticks = 1;
            return Ok(());
        };
        let t = (tick.t - t0) as f64 * 1e-9;
        let delta = t - self.t_now;
        if delta < 0.0 {
            return Err(Error::NegativeShift(delta));
        }
        self.advance(delta)?;
        self.add_at_now(tick.price, tick.size, delta);
        self.ticks += 1;
        Ok(())
    }

    /// Adds one observation at the current `t_now`; `delta` is its interval weight.
    fn add_at_now(&mut self, price: f64, size: f64, delta: f64) {
        let dp = price - self.p_last;
        let da = dp.abs();
        // Re-anchor V - V_last to the new last value.
        for (flow, dv) in [(Flow::Volume, size), (Flow::Surrogate, da)] {
            if dv != 0.0 {
                let corr = self.data.column(Observable::Dp.column()) * dv;
                let mut c = self.data.column_mut(Observable::VDp(flow).column());
                c -= corr;
            }
        }
        let q0 = &self.basis.q_now;
        let adds = [
            (Observable::Time, delta),
            (Observable::P, price * delta),
            (Observable::Dp, dp),
            (Observable::I(Flow::Volume), size),
            (Observable::PI(Flow::Volume), (price - self.p_ref) * size),
            (Observable::I(Flow::Surrogate), da),
            (Observable::PI(Flow::Surrogate), (price - self.p_ref) * da),
        ];
        for (obs, w) in adds {
            if w != 0.0 {
                let mut c = self.data.column_mut(obs.column());
                c.axpy(w, q0, 1.0);
            }
        }
        self.p_last = price;
        self.totals[0] += size;
        self.totals[1] += da;
    }

    /// Secondary sampling with a computed per-tick value `f`, called after
    /// `add_tick` for the same tick. The first call only records `f`.
    pub fn add_secondary(&mut self, f: f64) {
        let p = self.p_last;
        if let Some((f_prev, p_prev)) = self.sec_last {
            let df = f - f_prev;
            let dpf = p * f - p_prev * f_prev;
            let q0 = self.basis.q_now.clone();
            for (obs, w) in [(Observable::SecDf, df), (Observable::SecPDf, p * df), (Observable::SecDPf, dpf)] {
                if w != 0.0 {
                    let mut c = self.data.column_mut(obs.column());
                    c.axpy(w, &q0, 1.0);
                }
            }
        }
        self.sec_last = Some((f, p));
    }

    /// Full-support `<Q_m (t_now - t)>`, i.e. `J^T <Q_m>`.
    pub fn age_moments(&self) -> DVector<f64> {
        self.basis.integrate_by_parts(&self.basis.time_moments)
    }

    /// `<Q_m (V - V_last)>` under the time measure, consistent with the
    /// sampled flow moments by integration by parts.
    pub fn v_moments(&self, flow: Flow) -> DVector<f64> {
        -self.basis.integrate_by_parts(&self.get(Observable::I(flow)))
    }

    /// `<Q_m p>` under the full-support time measure, reconstructed from the
    /// sampled price increments.
    pub fn p_moments(&self) -> DVector<f64> {
        &self.basis.time_moments * self.p_last - self.basis.integrate_by_parts(&self.get(Observable::Dp))
    }
}

/// Cumulative price change counted only on ticks where `f` increased.
#[derive(Debug, Clone, Default)]
pub struct ScalpPrice {
    raw: f64,
    start: Option<f64>,
    last: Option<(f64, f64)>,
}

impl ScalpPrice {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sum of the counted increments so far.
    pub fn raw(&self) -> f64 {
        self.raw
    }

    /// Feeds one tick and returns the running value anchored at the first price.
    pub fn update(&mut self, price: f64, f: f64) -> f64 {
        if let Some((p_prev, f_prev)) = self.last {
            if f - f_prev > 0.0 {
                self.raw += price - p_prev;
            }
        }
        self.last = Some((price, f));
        self.start.get_or_insert(price);
        self.start.unwrap() + self.raw
    }
}

/// Shifts a finished scalp-price series so its last value equals `p_last`.
pub fn normalize_to_last(series: &mut [f64], p_last: f64) {
    if let Some(&end) = series.last() {
        let shift = p_last - end;
        series.iter_mut().for_each(|v| *v += shift);
    }
}

/// Running scalp price of a `(tick, f)` sequence, normalized to the last price.
pub fn scalp_price<I: IntoIterator<Item = (Tick, f64)>>(stream: I) -> Vec<f64> {
    let mut sp = ScalpPrice::new();
    let mut last_p = f64::NAN;
    let mut out: Vec<f64> = stream
        .into_iter()
        .map(|(t, f)| {
            last_p = t.price;
            sp.update(t.price, f)
        })
        .collect();
    normalize_to_last(&mut out, last_p);
    out
}
