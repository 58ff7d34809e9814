//! Spectral execution-flow indicators computed tick by tick from trades.

pub mod adjust;
pub mod basis;
pub mod density;
pub mod engine;
pub mod error;
pub mod idpdt;
pub mod indicators;
pub mod ingest;
pub mod moments;
pub mod operators;
pub mod panel;
pub mod report;
pub mod spectral;
pub mod synth;
#[cfg(test)]
mod testutil;

pub use basis::{Basis, BasisKind, MeasureParams, Poly};
pub use engine::{Engine, TickOutput};
pub use error::{Error, Result};
pub use idpdt::IdpdtVariant;
pub use indicators::{AnalysisConfig, Analyzer, IndicatorFrame};
pub use ingest::{ColSpec, Tick};
pub use moments::{Flow, MomentSet, Observable};
pub use panel::AssetPanel;
pub use report::{run, RunConfig, RunSummary};
