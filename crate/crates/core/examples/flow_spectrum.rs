//! Eigenvalues of the execution-flow operator and its maximal state.

use std::sync::Arc;

use execflow::indicators::FlowData;
use execflow::spectral::{max_flow_state, solve_flow_gev};
use execflow::{synth, Basis, BasisKind, Flow, MeasureParams, MomentSet};

fn main() -> execflow::Result<()> {
    let basis = Arc::new(Basis::new(BasisKind::LegendreShifted, MeasureParams::new(100.0, 8))?);
    let mut m = MomentSet::new(basis.clone());
    for t in &synth::burst(3, 400.0, 1.0, &[(150.0, 5.0, 3000.0), (380.0, 3.0, 2000.0)]) {
        m.add_tick(t)?;
    }
    for flow in Flow::BOTH {
        let data = FlowData::from_moments(&m, flow);
        let spec = solve_flow_gev(&basis, &data.i)?;
        let top = max_flow_state(&spec, &basis.q_now_n());
        let lambdas: Vec<String> = spec.lambdas.iter().map(|l| format!("{l:.3}")).collect();
        println!("{flow:?}");
        println!("  lambda      = [{}]", lambdas.join(", "));
        println!("  lambda^IH   = {:.3}", top.lambda);
        println!("  <psi0|I|psi0> = {:.3}", top.i0);
        println!("  wH^2        = {:.4}", top.projection_now);
        println!("  dI^F        = {:.3}", top.d_i_future());
    }
    Ok(())
}
