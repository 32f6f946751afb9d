//! Builds the lattice of a backend, runs the axiom suite and prints the
//! Bratteli diagram of row 0 as DOT.
//!
//! `cargo run --example lattice -- data/s3.json 4`

use qlattice::backends::{samples, Backend};
use qlattice::lattice::{bratteli, build_lattice, shift_check, verify_axioms};

fn main() -> qlattice::Result<()> {
    let mut args = std::env::args().skip(1);
    let backend = match args.next() {
        Some(path) => Backend::load(path.as_ref(), 1e-9)?,
        None => samples::span_q(1.0),
    };
    let bound: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let l = build_lattice(&backend, bound, 1e-9)?;
    for i in 0..=1.min(bound) {
        let row: Vec<usize> = (i..=bound).map(|j| l.cell(i, j).map_or(0, |c| c.dim())).collect();
        println!("row {i}: {row:?}");
    }
    println!("index λ⁻¹ = {:.6}", l.index());
    let axioms = verify_axioms(&l, 1e-9)?;
    println!("axioms: max residual {:.2e}, passed {}", axioms.max_residual(), axioms.passed);
    let shift = shift_check(&l, 1e-6);
    println!("shift (i,j) → (i+2,j+2): max distance {:.2e}", shift.max_distance);
    let b = bratteli(&l, 1e-9)?;
    for cell in b.cells.iter().filter(|c| c.cell.0 == 0) {
        println!("A{:?}: summands {:?}", cell.cell, cell.summands);
    }
    print!("{}", b.to_dot());
    Ok(())
}
