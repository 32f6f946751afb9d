//! Principal graph norm estimates against `d²`, with the square-index check.

use qlattice::amenability::{lattice_report, DEFAULT_KMAX, DEFAULT_MARGIN};
use qlattice::backends::samples;

fn main() -> qlattice::Result<()> {
    let cases = [
        ("S₃", samples::s3_irrep()),
        ("F₂ dual", samples::f2_dual()),
        ("span q=1", samples::span_q(1.0)),
        ("span q=1.2", samples::span_q(1.2)),
    ];
    for (name, b) in cases {
        let r = lattice_report(&b, DEFAULT_KMAX, DEFAULT_MARGIN, 1e-9)?;
        println!(
            "{name}: estimate {:.4} vs d² = {:.4}, trace {:?}, index square {}, {:?}",
            r.extrapolated,
            r.d * r.d,
            r.trace_flag,
            r.index_is_square,
            r.verdict
        );
    }
    Ok(())
}
