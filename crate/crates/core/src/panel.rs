//! Several instruments on one shared time basis, with cross-asset relations.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::basis::{Basis, ShiftCache};
use crate::engine::{Engine, TickOutput};
use crate::error::{Error, Result};
use crate::indicators::{AnalysisConfig, FlowData, IndicatorFrame};
use crate::ingest::Tick;
use crate::moments::Flow;
use crate::spectral::{max_flow_state, solve_flow_gev, MaxFlowState};

/// Volume-flow state of one asset at a snapshot.
#[derive(Debug, Clone)]
pub struct AssetState {
    pub frame: IndicatorFrame,
    pub top: Option<MaxFlowState>,
    pub p_last: f64,
}

pub struct AssetPanel {
    basis: Arc<Basis>,
    cfg: AnalysisConfig,
    assets: BTreeMap<String, Engine>,
    /// `<Q_m I~>` with `I~ = sum_a p^(a) I^(a)`.
    index: DVector<f64>,
    cache: ShiftCache,
    t0: Option<i64>,
    t_now: f64,
}

impl AssetPanel {
    pub fn new(basis: Arc<Basis>, cfg: AnalysisConfig) -> Self {
        let len = basis.moment_len();
        AssetPanel {
            basis,
            cfg,
            assets: BTreeMap::new(),
            index: DVector::zeros(len),
            cache: ShiftCache::new(16),
            t0: None,
            t_now: 0.0,
        }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.assets.keys().map(|s| s.as_str())
    }

    pub fn engine(&self, symbol: &str) -> Result<&Engine> {
        self.assets.get(symbol).ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    pub fn index_moments(&self) -> &DVector<f64> {
        &self.index
    }

    /// Advances every asset to the tick time, then feeds the tick to its asset.
    pub fn process(&mut self, symbol: &str, tick: &Tick) -> Result<TickOutput> {
        let t0 = *self.t0.get_or_insert(tick.t);
        let t = (tick.t - t0) as f64 * 1e-9;
        let delta = t - self.t_now;
        if delta < 0.0 {
            return Err(Error::NegativeShift(delta));
        }
        if delta > 0.0 {
            let s = self.cache.get(&self.basis, delta)?;
            self.index = s * &self.index;
            self.t_now = t;
        }
        self.assets
            .par_iter_mut()
            .filter(|(k, _)| k.as_str() != symbol)
            .try_for_each(|(_, e)| e.advance_to(tick.t))?;
        if !self.assets.contains_key(symbol) {
            let e = Engine::new(self.basis.clone(), self.cfg.clone())?;
            self.assets.insert(symbol.to_string(), e);
        }
        let engine = self.assets.get_mut(symbol).expect("inserted above");
        let first = engine.moments().ticks() == 0;
        let out = engine.process(tick)?;
        if !first {
            self.index.axpy(tick.price * tick.size, &self.basis.q_now, 1.0);
        }
        Ok(out)
    }

    /// States of all assets at the current shared time, computed in parallel.
    pub fn snapshot(&self) -> BTreeMap<String, AssetState> {
        self.assets
            .par_iter()
            .map(|(k, e)| {
                let m = e.moments();
                let data = FlowData::from_moments(m, Flow::Volume);
                let frame = e.analyzer().analyze_data(&self.basis, &data);
                let top = frame
                    .ready
                    .then(|| solve_flow_gev(&self.basis, &data.i).ok())
                    .flatten()
                    .map(|s| max_flow_state(&s, &self.basis.q_now_n()));
                (k.clone(), AssetState { frame, top, p_last: m.p_last() })
            })
            .collect()
    }

    /// Max-flow state of the capital-flow index `I~`.
    pub fn index_state(&self) -> Option<MaxFlowState> {
        if !(self.index[0] > 0.0) {
            return None;
        }
        let m = self.basis.matrix_from_moments(&self.index);
        let s = solve_flow_gev(&self.basis, &m).ok()?;
        Some(max_flow_state(&s, &self.basis.q_now_n()))
    }
}

/// `<psi^[IH](a)|psi^[IH](b)>^2` with the shared Gram matrix.
pub fn cross_projection(basis: &Basis, snap: &BTreeMap<String, AssetState>, a: &str, b: &str) -> Result<Option<f64>> {
    let get = |s: &str| snap.get(s).ok_or_else(|| Error::UnknownSymbol(s.to_string()));
    let (sa, sb) = (get(a)?, get(b)?);
    Ok(match (&sa.top, &sb.top) {
        (Some(x), Some(y)) => {
            let d = x.psi.dot(&(&basis.gram * &y.psi));
            Some((d * d).min(1.0))
        }
        _ => None,
    })
}

/// Which spike came first, in seconds: both `T^[IH](a) - T^[IH](b)` and
/// `Spur||rho_JIH(a)|| - Spur||rho_JIH(b)||`. Negative means `a` is more recent.
pub fn spike_order(snap: &BTreeMap<String, AssetState>, a: &str, b: &str) -> Result<(Option<f64>, Option<f64>)> {
    let get = |s: &str| snap.get(s).ok_or_else(|| Error::UnknownSymbol(s.to_string()));
    let (fa, fb) = (&get(a)?.frame, &get(b)?.frame);
    let diff = |x: Option<f64>, y: Option<f64>| x.zip(y).map(|(x, y)| x - y);
    Ok((diff(fa.tv_m, fb.tv_m), diff(fa.t_ih, fb.t_ih)))
}

/// `sum_a lambda^[IH](a) (P_last(a) - P^EQ(a))` over ready assets.
pub fn pnl_weighted(snap: &BTreeMap<String, AssetState>) -> f64 {
    snap.values()
        .filter_map(|s| s.frame.lambda_ih.zip(s.frame.peq_i).map(|(l, p)| l * (s.p_last - p)))
        .sum()
}
