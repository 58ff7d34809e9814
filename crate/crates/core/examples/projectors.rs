//! Sign projectors of dI/dt and the flow-adjusted split of a density.

use std::sync::Arc;

use execflow::adjust::{didt_projectors, flow_adjusted_pi, spur_projected};
use execflow::density::{since_state, spur, RhoMethod};
use execflow::indicators::FlowData;
use execflow::spectral::{max_flow_state, solve_flow_gev};
use execflow::{synth, AnalysisConfig, Analyzer, Basis, BasisKind, Flow, MeasureParams, MomentSet};
use nalgebra::DMatrix;

fn main() -> execflow::Result<()> {
    let basis = Arc::new(Basis::new(BasisKind::LegendreShifted, MeasureParams::new(80.0, 10))?);
    let mut m = MomentSet::new(basis.clone());
    for t in &synth::random_session(8, 800, 0.5) {
        m.add_tick(t)?;
    }
    let data = FlowData::from_moments(&m, Flow::Volume);
    let spec = solve_flow_gev(&basis, &data.i)?;
    let top = max_flow_state(&spec, &basis.q_now_n());
    let (rho, rho2) = since_state(&basis, &top.psi, RhoMethod::Lyapunov, None)?;

    let pp = didt_projectors(&basis, &data.i, top.lambda)?;
    let id = DMatrix::identity(basis.n(), basis.n());
    println!("dI/dt > 0 states: {} of {}", pp.positive_count(), basis.n());
    println!("|Pi+ + Pi- - 1| = {:.1e}", (&pp.plus + &pp.minus - id).amax());
    println!("|Pi+ Pi+ - Pi+| = {:.1e}", (&pp.plus * &pp.plus - &pp.plus).amax());
    let v_plus = spur_projected(&data.i, &pp.plus, &rho.rho);
    let v_minus = spur_projected(&data.i, &pp.minus, &rho.rho);
    println!("V_IH split: {v_plus:.3} + {v_minus:.3} = {:.3}", spur(&data.i, &rho.rho));

    let t_ih = spur(&basis.gram, &rho.rho);
    let v_ih = spur(&data.i, &rho.rho);
    match flow_adjusted_pi(&basis, &spec, &data, &rho.rho, v_ih, t_ih) {
        Some(fa) => {
            println!("\nr = V_IH/T_IH = {:.4}", fa.r);
            println!("P+ = {:?}, P- = {:?}", fa.p_plus, fa.p_minus);
            println!("PnL = {:.4}, constraint residual = {:.1e}", fa.pnl, fa.constraint);
        }
        None => println!("\nno flow-adjusted projector (degenerate r)"),
    }

    // the same quantities as the analyzer reports them
    let cfg = AnalysisConfig { experimental: true, ..Default::default() };
    let frame = Analyzer::new(&basis, cfg)?.analyze(&m, Flow::Volume);
    println!("\nSpur||1|rho_JJ|| = {:.3} s^2", spur(&basis.gram, &rho2.rho));
    for (name, v) in frame.experimental.map(|x| x.fields()).unwrap_or_default() {
        println!("  {name:<16} {}", v.map_or("NA".into(), |v| format!("{v:.4}")));
    }
    Ok(())
}
