//! Per-tick pipeline for one instrument: update moments, then compute the
//! frames of both flows.

use std::sync::Arc;

use crate::basis::Basis;
use crate::error::Result;
use crate::indicators::{AnalysisConfig, Analyzer, IndicatorFrame};
use crate::ingest::Tick;
use crate::moments::{Flow, MomentSet, ScalpPrice};

/// Frames of one tick, volume flow first.
#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub tick: Tick,
    /// Seconds since the first tick.
    pub t: f64,
    pub frames: [IndicatorFrame; 2],
    /// Running scalp price with `lambda^[IH]` of each flow as the trigger.
    pub scalp: [Option<f64>; 2],
}

impl TickOutput {
    pub fn frame(&self, flow: Flow) -> &IndicatorFrame {
        &self.frames[(flow == Flow::Surrogate) as usize]
    }
}

pub struct Engine {
    moments: MomentSet,
    analyzer: Analyzer,
    scalp: [ScalpPrice; 2],
}

impl Engine {
    pub fn new(basis: Arc<Basis>, cfg: AnalysisConfig) -> Result<Self> {
        let analyzer = Analyzer::new(&basis, cfg)?;
        Ok(Engine { moments: MomentSet::new(basis), analyzer, scalp: Default::default() })
    }

    pub fn moments(&self) -> &MomentSet {
        &self.moments
    }

    pub fn analyzer(&self) -> &Analyzer {
        &self.analyzer
    }

    /// Moves the clock without an observation (shared panel time).
    pub fn advance_to(&mut self, t_ns: i64) -> Result<()> {
        self.moments.advance_to(t_ns)
    }

    pub fn frames(&self) -> [IndicatorFrame; 2] {
        Flow::BOTH.map(|f| self.analyzer.analyze(&self.moments, f))
    }

    pub fn process(&mut self, tick: &Tick) -> Result<TickOutput> {
        self.moments.add_tick(tick)?;
        let frames = self.frames();
        let mut scalp = [None, None];
        for (k, fr) in frames.iter().enumerate() {
            if let Some(l) = fr.lambda_ih {
                scalp[k] = Some(self.scalp[k].update(tick.price, l));
            }
        }
        if let Some(l) = frames[0].lambda_ih {
            self.moments.add_secondary(l);
        }
        Ok(TickOutput { tick: *tick, t: self.moments.t_now(), frames, scalp })
    }

    /// Runs a whole stream and collects the outputs.
    pub fn run(&mut self, ticks: &[Tick]) -> Result<Vec<TickOutput>> {
        ticks.iter().map(|t| self.process(t)).collect()
    }
}
