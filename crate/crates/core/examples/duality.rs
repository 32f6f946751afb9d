//! Cups, caps and Jones projections for a few choices of `Q`.

use qlattice::duality::{verify_duality, DualityMaps, QData};

fn main() -> qlattice::Result<()> {
    for q in [1.0, 1.2, 1.7] {
        let dm = DualityMaps::new(QData::diagonal(&[q, 1.0 / q], 1e-12)?);
        let r = verify_duality(&dm, 1e-9);
        println!("q = {q}: d = {:.6}, λ = {:.6}, max residual {:.2e}, passed {}", dm.d, dm.lambda, r.max_residual, r.passed);
    }
    Ok(())
}
