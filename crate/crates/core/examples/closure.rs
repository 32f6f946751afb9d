//! Closes cups, caps and the seed algebras of a lattice into a category and
//! compares its endomorphism algebras and hom dimensions with the seeds.

use qlattice::backends::samples;
use qlattice::lattice::build_lattice;
use qlattice::reconstruct::{closure, seeds_from_lattice, universal_hom_dims, ClosureOptions};
use qlattice::Word;

fn main() -> qlattice::Result<()> {
    let b = samples::s3_irrep();
    let l = build_lattice(&b, 4, 1e-9)?;
    let seeds = seeds_from_lattice(&l, 3);
    let cc = closure(&b.duality, &seeds, &ClosureOptions::new(6, 1e-9))?;
    println!("converged after {} rounds", cc.rounds);
    for (x, a) in &seeds {
        println!("End('{x}'): closure {}  seed {}", cc.hom(x, x)?.dim(), a.dim());
    }
    let dims = universal_hom_dims(&cc, 4)?;
    for w in ["", "a", "aa", "ab", "abab", "aabb"] {
        let w: Word = w.parse()?;
        println!("dim Hom(1, '{w}') = {}", dims.get(&w)?);
    }
    Ok(())
}
