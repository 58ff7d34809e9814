//! Tick-by-tick moment updates on a synthetic session.

use std::sync::Arc;

use execflow::{synth, Basis, BasisKind, Flow, MeasureParams, MomentSet, Observable};

fn main() -> execflow::Result<()> {
    let basis = Arc::new(Basis::new(BasisKind::Laguerre, MeasureParams::new(30.0, 5))?);
    let mut m = MomentSet::new(basis);
    let ticks = synth::random_session(7, 400, 0.5);

    println!("{:>8} {:>9} {:>10} {:>10} {:>10}", "t", "price", "<I>", "<pI>/<I>", "<(t0-t)I>/<I>");
    for (k, t) in ticks.iter().enumerate() {
        m.add_tick(t)?;
        if k % 50 == 49 {
            let i = m.get(Observable::I(Flow::Volume));
            let pi = m.get(Observable::PI(Flow::Volume));
            let ti = m.get(Observable::TI(Flow::Volume));
            println!("{:>8.2} {:>9.2} {:>10.2} {:>10.4} {:>10.3}", m.t_now(), t.price, i[0], pi[0] / i[0], ti[0] / i[0]);
        }
    }
    println!("total volume {}", m.total(Flow::Volume));
    println!("total |dp|   {:.2}", m.total(Flow::Surrogate));
    Ok(())
}
