//! Run orchestration: read ticks, compute frames, write tab-separated rows.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use crate::basis::{Basis, BasisKind, MeasureParams};
use crate::engine::{Engine, TickOutput};
use crate::error::{Error, Result};
use crate::indicators::{AnalysisConfig, IndicatorFrame};
use crate::ingest::{open_input, ColSpec, IngestStats, TickReader};
use crate::moments::Flow;
use crate::panel::AssetPanel;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub cols: ColSpec,
    pub kind: BasisKind,
    pub n: usize,
    pub tau: f64,
    /// `None` writes to stdout.
    pub output: Option<PathBuf>,
    pub analysis: AnalysisConfig,
    pub plotdata: Option<PathBuf>,
    /// Rescale `lambda^[IH]` in the plot file onto the price range.
    pub plot_scale_lambda: bool,
    /// Restrict a merged multi-symbol file to these symbols.
    pub symbols: Option<Vec<String>>,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            cols: ColSpec::default(),
            kind: BasisKind::LegendreShifted,
            n: 12,
            tau: 256.0,
            output: None,
            analysis: AnalysisConfig::default(),
            plotdata: None,
            plot_scale_lambda: false,
            symbols: None,
        }
    }

    pub fn params(&self) -> MeasureParams {
        MeasureParams::new(self.tau, self.n)
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate(self.kind)?;
        let t = self.analysis.threshold;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Config(format!("threshold {t} outside [0, 1]")));
        }
        if !(self.analysis.lambda_floor >= 0.0) {
            return Err(Error::Config("lambda floor must be non-negative".into()));
        }
        if self.symbols.is_some() && self.cols.symbol.is_none() {
            return Err(Error::Config("--symbols needs a symbol column in --musein_cols".into()));
        }
        Ok(())
    }

    pub fn panel_mode(&self) -> bool {
        self.cols.symbol.is_some()
    }

    fn header(&self) -> String {
        let a = &self.analysis;
        format!(
            "# execflow n={} tau={} measure={} variant={} threshold={} lambda_floor={} rho={:?} compare={} experimental={}",
            self.n,
            self.tau,
            self.kind.name(),
            a.variant,
            a.threshold,
            a.lambda_floor,
            a.rho_method,
            a.compare,
            a.experimental
        )
    }

    /// Column names of the main output, without the leading `#`.
    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec!["time".to_string(), "price".into(), "size".into()];
        if self.panel_mode() {
            cols.push("symbol".into());
        }
        let names = IndicatorFrame::field_names(&self.analysis);
        for flow in Flow::BOTH {
            cols.extend(names.iter().map(|n| format!("{}.{}", flow.prefix(), n)));
        }
        for flow in Flow::BOTH {
            cols.push(format!("{}.scalpP", flow.prefix()));
        }
        if self.panel_mode() {
            cols.extend(["panel.index_lambda", "panel.index_wH_squared", "panel.pnl_weighted"].map(String::from));
        }
        cols
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunSummary {
    pub rows: u64,
    pub ingest: IngestStats,
    pub seconds: f64,
}

impl RunSummary {
    pub fn ticks_per_second(&self) -> f64 {
        if self.seconds > 0.0 {
            self.rows as f64 / self.seconds
        } else {
            f64::INFINITY
        }
    }
}

fn push_num(line: &mut String, v: Option<f64>) {
    line.push('\t');
    match v {
        Some(x) if x.is_finite() => line.push_str(&x.to_string()),
        _ => line.push_str("NA"),
    }
}

/// Appends every frame field of both flows to `line`.
fn push_frames(line: &mut String, out: &TickOutput) {
    for fr in &out.frames {
        for (_, v) in fr.fields() {
            push_num(line, v);
        }
    }
    for s in out.scalp {
        push_num(line, s);
    }
}

/// Plot columns: time, price, then `pv_M`, `PEQV_from_M`, `lambda_IH`,
/// `wH^2` for each flow.
#[derive(Default)]
struct PlotRows {
    rows: Vec<[Option<f64>; 10]>,
}

impl PlotRows {
    fn push(&mut self, out: &TickOutput) {
        let mut r = [None; 10];
        r[0] = Some(out.t);
        r[1] = Some(out.tick.price);
        for (k, fr) in out.frames.iter().enumerate() {
            let b = 2 + 4 * k;
            r[b] = fr.pv_m;
            r[b + 1] = fr.peqv_from_m;
            r[b + 2] = fr.lambda_ih;
            r[b + 3] = fr.wh_squared;
        }
        self.rows.push(r);
    }

    fn write(&mut self, path: &PathBuf, scale_lambda: bool) -> Result<()> {
        if scale_lambda {
            let prices = self.rows.iter().filter_map(|r| r[1]);
            let (lo, hi) = prices.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p), b.max(p)));
            for col in [4, 8] {
                let lmax = self.rows.iter().filter_map(|r| r[col]).fold(0.0, f64::max);
                if lmax > 0.0 && hi >= lo {
                    for r in &mut self.rows {
                        r[col] = r[col].map(|l| lo + (hi - lo) * l / lmax);
                    }
                }
            }
        }
        let mut w = BufWriter::new(File::create(path)?);
        let names = ["pv_M", "PEQV_from_M", "lambda_IH", "I.wH_squared"];
        let mut head = String::from("#t\tP");
        for flow in Flow::BOTH {
            for n in names {
                head.push_str(&format!("\t{}.{}", flow.prefix(), n));
            }
        }
        writeln!(w, "{head}")?;
        for r in &self.rows {
            let mut line = String::new();
            for v in r {
                push_num(&mut line, *v);
            }
            writeln!(w, "{}", &line[1..])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the whole pipeline described by `cfg`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let start = Instant::now();
    let sink: Box<dyn Write> = match &cfg.output {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    writeln!(w, "{}", cfg.header())?;
    writeln!(w, "#{}", cfg.columns().join("\t"))?;

    let basis = Arc::new(Basis::new(cfg.kind, cfg.params())?);
    let mut reader = TickReader::new(open_input(&cfg.input)?, cfg.cols);
    let mut plot = cfg.plotdata.as_ref().map(|_| PlotRows::default());
    let mut rows = 0u64;
    let mut line = String::with_capacity(4096);

    if cfg.panel_mode() {
        let mut panel = AssetPanel::new(basis, cfg.analysis.clone());
        let mut last: BTreeMap<String, (f64, IndicatorFrame)> = BTreeMap::new();
        for item in reader.by_ref() {
            let (sym, tick) = item?;
            if let Some(allow) = &cfg.symbols {
                if !allow.iter().any(|s| s == &sym) {
                    continue;
                }
            }
            let out = panel.process(&sym, &tick)?;
            last.insert(sym.clone(), (tick.price, out.frames[0].clone()));
            line.clear();
            line.push_str(&format!("{}\t{}\t{}\t{}", tick.t, tick.price, tick.size, sym));
            push_frames(&mut line, &out);
            let idx = panel.index_state();
            push_num(&mut line, idx.as_ref().map(|s| s.lambda));
            push_num(&mut line, idx.as_ref().map(|s| s.projection_now));
            let pnl: f64 = last
                .values()
                .filter_map(|(p, f)| f.lambda_ih.zip(f.peq_i).map(|(l, e)| l * (p - e)))
                .sum();
            push_num(&mut line, Some(pnl));
            writeln!(w, "{line}")?;
            if let Some(p) = plot.as_mut() {
                p.push(&out);
            }
            rows += 1;
        }
    } else {
        let mut engine = Engine::new(basis, cfg.analysis.clone())?;
        for item in reader.by_ref() {
            let (_, tick) = item?;
            let out = engine.process(&tick)?;
            line.clear();
            line.push_str(&format!("{}\t{}\t{}", tick.t, tick.price, tick.size));
            push_frames(&mut line, &out);
            writeln!(w, "{line}")?;
            if let Some(p) = plot.as_mut() {
                p.push(&out);
            }
            rows += 1;
        }
    }
    w.flush()?;
    if let (Some(p), Some(path)) = (plot.as_mut(), cfg.plotdata.as_ref()) {
        p.write(path, cfg.plot_scale_lambda)?;
    }
    Ok(RunSummary { rows, ingest: reader.stats(), seconds: start.elapsed().as_secs_f64() })
}
