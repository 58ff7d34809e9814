//! Three instruments on one clock: cross projections, spike order and the capital-flow index.

use execflow::panel::{cross_projection, pnl_weighted, spike_order};
use execflow::{synth, AnalysisConfig, AssetPanel, Basis, BasisKind, MeasureParams, Tick};

fn main() -> execflow::Result<()> {
    let basis = std::sync::Arc::new(Basis::new(BasisKind::Laguerre, MeasureParams::new(100.0, 8))?);
    let mut panel = AssetPanel::new(basis.clone(), AnalysisConfig::default());

    let mut merged: Vec<(&str, Tick)> = Vec::new();
    for (sym, seed, at) in [("AAA", 1, 150.0), ("BBB", 2, 300.0), ("CCC", 3, 420.0)] {
        let ticks = synth::burst(seed, 500.0, 1.0, &[(at, 4.0, 4000.0)]);
        merged.extend(ticks.into_iter().map(|t| (sym, t)));
    }
    merged.sort_by_key(|(s, t)| (t.t, *s));
    for (sym, t) in &merged {
        panel.process(sym, t)?;
    }

    let snap = panel.snapshot();
    let syms: Vec<&str> = panel.symbols().collect();
    println!("<psi_a|psi_b>^2");
    for a in &syms {
        let row: Vec<String> = syms
            .iter()
            .map(|b| cross_projection(&basis, &snap, a, b).ok().flatten().map_or("  NA ".into(), |v| format!("{v:.3}")))
            .collect();
        println!("  {a}  {}", row.join("  "));
    }
    for (a, b) in [("AAA", "BBB"), ("BBB", "CCC")] {
        let (dm, dih) = spike_order(&snap, a, b)?;
        println!("T(IH) {a} - {b}: {dm:.1?} s, Spur||rho|| difference {dih:.1?} s");
    }
    if let Some(idx) = panel.index_state() {
        println!("index lambda = {:.1}, wH^2 = {:.3}", idx.lambda, idx.projection_now);
    }
    println!("lambda-weighted PnL = {:.3}", pnl_weighted(&snap));
    Ok(())
}
