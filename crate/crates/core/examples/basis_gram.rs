//! Gram matrices, products and time shifts of the four polynomial bases.

use execflow::{Basis, BasisKind, MeasureParams};

fn main() -> execflow::Result<()> {
    let tau = 60.0;
    for kind in BasisKind::ALL {
        let b = Basis::new(kind, MeasureParams::new(tau, 6))?;
        let diag: Vec<String> = (0..6).map(|j| format!("{:.3}", b.gram[(j, j)])).collect();
        let off = (0..6).flat_map(|j| (0..6).filter(move |&k| k != j).map(move |k| (j, k)));
        let off = off.map(|(j, k)| b.gram[(j, k)].abs()).fold(0.0, f64::max);
        println!("{:<17} diag(G) = [{}]  max|offdiag| = {off:.2e}", kind.name(), diag.join(", "));
    }

    let b = Basis::new(BasisKind::LegendreShifted, MeasureParams::new(tau, 4))?;
    println!("\nQ_2 Q_3 in LegendreShifted:");
    for (m, c) in b.product(2, 3) {
        println!("  {c:+.6} Q_{m}");
    }

    // shifting by 10 s twice equals one 20 s shift
    let s10 = b.shift(10.0)?;
    let s20 = b.shift(20.0)?;
    println!("\n|S(10)S(10) - S(20)| = {:.2e}", (&s10 * &s10 - s20).amax());
    Ok(())
}
