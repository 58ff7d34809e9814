//! Densities built from the maximal-flow state and a few of their spurs.

use std::sync::Arc;

use execflow::density::{density_from_poly, since_state, RhoMethod};
use execflow::indicators::FlowData;
use execflow::spectral::{max_flow_state, solve_flow_gev};
use execflow::{synth, Basis, BasisKind, Flow, MeasureParams, MomentSet};
use nalgebra::DVector;

fn main() -> execflow::Result<()> {
    let basis = Arc::new(Basis::new(BasisKind::ChebyshevShifted, MeasureParams::new(80.0, 8))?);
    let mut m = MomentSet::new(basis.clone());
    for t in &synth::random_session(21, 600, 0.7) {
        m.add_tick(t)?;
    }
    let data = FlowData::from_moments(&m, Flow::Volume);
    let spec = solve_flow_gev(&basis, &data.i)?;
    let top = max_flow_state(&spec, &basis.q_now_n());

    for method in [RhoMethod::Lyapunov, RhoMethod::MinNorm] {
        let (rho, rho2) = since_state(&basis, &top.psi, method, None)?;
        println!("{method:?}");
        println!("  T_IH  = Spur||1|rho||  = {:.4} s", rho.spur(&basis.gram));
        println!("  V_IH  = Spur||I|rho||  = {:.4}", rho.spur(&data.i));
        println!("  P^IH  = Spur||pI|rho||/V_IH = {:.4}", rho.spur(&data.pi) / rho.spur(&data.i));
        println!("  Spur||1|rho_JJ|| = {:.4} s^2", rho2.spur(&basis.gram));
        println!("  negative eigenvalues: {}", rho.negative_eigenvalues());
    }

    // a density reproducing the polynomial 1 + x/2 against any observable
    let mut p = DVector::zeros(basis.moment_len());
    p[0] = 1.0;
    p[1] = 0.5;
    let rho = density_from_poly(&basis, &p)?;
    println!("\nSpur||I|rho_P|| = {:.6}, <P I> = {:.6}", rho.spur(&data.i), p.dot(&m.get(execflow::Observable::I(Flow::Volume))));
    Ok(())
}
