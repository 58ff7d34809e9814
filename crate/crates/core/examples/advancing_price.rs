//! Equilibrium prices around two volume bursts.

use std::sync::Arc;

use execflow::{synth, AnalysisConfig, Basis, BasisKind, Engine, MeasureParams};

fn fmt(v: Option<f64>) -> String {
    v.map_or("NA".into(), |x| format!("{x:.3}"))
}

fn main() -> execflow::Result<()> {
    let basis = Arc::new(Basis::new(BasisKind::LegendreShifted, MeasureParams::new(100.0, 10))?);
    let mut engine = Engine::new(basis, AnalysisConfig::default())?;
    let ticks = synth::burst(7, 700.0, 1.0, &[(150.0, 4.0, 3000.0), (450.0, 4.0, 6000.0)]);

    println!("{:>5} {:>8} {:>9} {:>8} {:>8} {:>8} {:>8} {:>8}", "t", "P", "lambda", "wH^2", "T^IH", "T^tau", "PEQ_I", "PEQV");
    for t in &ticks {
        let out = engine.process(t)?;
        let f = &out.frames[0];
        if (out.t as i64) % 25 == 0 {
            println!(
                "{:>5.0} {:>8.3} {:>9} {:>8} {:>8} {:>8} {:>8} {:>8}",
                out.t,
                t.price,
                fmt(f.lambda_ih),
                fmt(f.wh_squared),
                fmt(f.tv_m),
                fmt(f.tv_average),
                fmt(f.peq_i),
                fmt(f.peqv_from_m)
            );
        }
    }
    Ok(())
}
