//! Kesten-type amenability verdicts from the moments of `Re χ(v)`.

use qlattice::amenability::{kesten_report, DEFAULT_KMAX, DEFAULT_MARGIN};
use qlattice::backends::samples;

fn main() -> qlattice::Result<()> {
    for (name, b) in [("Z² dual", samples::z2_dual()), ("F₂ dual", samples::f2_dual()), ("S₃", samples::s3_irrep())] {
        let r = kesten_report(&b, DEFAULT_KMAX, DEFAULT_MARGIN)?;
        let lb: Vec<String> = r.lower_bounds.iter().map(|x| format!("{x:.4}")).collect();
        println!("{name}: ℓ_k = [{}]  extrapolated {:.4}  {:?}", lb.join(", "), r.extrapolated, r.verdict);
    }
    Ok(())
}
