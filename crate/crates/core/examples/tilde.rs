//! Three independent computations of the moments after a free Haar unitary
//! twist: free cumulants, word counting in the twisted group, and the span
//! closure.

use qlattice::backends::{samples, Source};
use qlattice::lattice::build_lattice;
use qlattice::moments::{moments_from_backend, tilde_moments, word_oracle_tilde};
use qlattice::reconstruct::{closure, seeds_from_lattice, universal_hom_dims, ClosureOptions};

fn main() -> qlattice::Result<()> {
    for (name, b) in [("Z²", samples::z2_dual()), ("F₂", samples::f2_dual())] {
        let source = moments_from_backend(&b, 6)?;
        let cumulant = tilde_moments(&source)?;
        let Source::DualGroup(d) = &b.source else { unreachable!() };
        let oracle = word_oracle_tilde(d, 6)?;
        let l = build_lattice(&b, 5, 1e-9)?;
        let cc = closure(&b.duality, &seeds_from_lattice(&l, 4), &ClosureOptions::new(6, 1e-9))?;
        let spans = universal_hom_dims(&cc, 6)?;
        println!(
            "{name}: cumulant vs oracle {:?}, cumulant vs closure {:?}",
            cumulant.first_difference(&oracle),
            cumulant.first_difference(&spans)
        );
        for w in ["ab", "abab", "aabb", "abba", "ababab"] {
            let w = w.parse()?;
            println!("  '{w}': source {}  tilde {}", source.get(&w)?, cumulant.get(&w)?);
        }
    }
    Ok(())
}
