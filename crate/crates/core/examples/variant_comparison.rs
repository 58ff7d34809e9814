//! Side-by-side Delta_I of every dp/dt ordering on one session.

use std::sync::Arc;

use execflow::{synth, AnalysisConfig, Basis, BasisKind, Engine, IdpdtVariant, MeasureParams};

fn main() -> execflow::Result<()> {
    let basis = Arc::new(Basis::new(BasisKind::LegendreShifted, MeasureParams::new(120.0, 10))?);
    let cfg = AnalysisConfig { compare: true, variant: IdpdtVariant::SandwichDtPoverI, ..Default::default() };
    let mut engine = Engine::new(basis, cfg)?;
    let out = engine.run(&synth::random_session(5, 1500, 0.4))?;

    let last = &out.last().expect("non-empty session").frames[0];
    let lam = last.lambda_ih.unwrap_or(f64::NAN);
    println!("lambda^IH = {lam:.3}, P_last = {:.3}", out.last().unwrap().tick.price);
    println!("I0F (adjusted) = {:.3}, fell back: {}", last.i0f.unwrap_or(f64::NAN), last.i0f_fallback);
    for (v, d) in &last.variants {
        let tag = if v.diagnostic_only() { " (diagnostic)" } else { "" };
        match d {
            Some(d) => println!("  {:<20} Delta_I = {d:>12.5}  PEQ = {:.4}{tag}", v.name(), out.last().unwrap().tick.price - d / lam),
            None => println!("  {:<20} Delta_I = NA", v.name()),
        }
    }

    // how often the default and the sandwich ordering agree in sign
    let agree = out
        .iter()
        .filter_map(|o| {
            let v = &o.frames[0].variants;
            let get = |x: IdpdtVariant| v.iter().find(|(k, _)| *k == x).and_then(|(_, d)| *d);
            Some(get(IdpdtVariant::RightProduct)?.signum() == get(IdpdtVariant::SandwichDtPoverI)?.signum())
        })
        .collect::<Vec<_>>();
    let same = agree.iter().filter(|&&b| b).count();
    println!("sign agreement RightProduct vs Sandwich: {same}/{}", agree.len());
    Ok(())
}
