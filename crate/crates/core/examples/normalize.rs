//! Scrambles a lattice representation by random leg unitaries and recovers
//! its normal form and `Q`.

use nalgebra::DMatrix;
use qlattice::backends::Backend;
use qlattice::duality::{DualityMaps, QData};
use qlattice::lattice::build_lattice;
use qlattice::reconstruct::{check_normalized, normalize, PopaRepresentation};
use qlattice::tensorops::c;

fn main() -> qlattice::Result<()> {
    let raw = DMatrix::from_fn(3, 3, |i, j| match (i, j) {
        (0, 0) => c(2.0),
        (1, 1) => c(1.0),
        (2, 2) => c(0.6),
        (0, 1) | (1, 0) => c(0.3),
        _ => c(0.0),
    });
    let dm = DualityMaps::new(QData::normalized(&raw, 1e-12)?);
    let original = dm.q.q.clone();
    let l = build_lattice(&Backend::span_q(dm), 4, 1e-9)?;
    let rep = PopaRepresentation::from_lattice(&l);
    let scrambled = rep.conjugate(&rep.random_leg_unitaries(1, 2024))?;
    let out = normalize(&scrambled, 1e-9)?;
    println!("‖Q_recovered − Q‖ = {:.2e}", (&out.q.q - &original).norm());
    println!("lemma residual {:.2e}, trace residual {:.2e}", out.lemma_residual, out.trace_residual);
    let check = check_normalized(&out.rep, &out.q, 1e-9)?;
    println!("{}", serde_json::to_string_pretty(&check)?);
    Ok(())
}
