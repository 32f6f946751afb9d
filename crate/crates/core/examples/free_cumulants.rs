//! Non-crossing partitions and the moment–cumulant transform for a Haar
//! unitary.

use qlattice::moments::{haar_cumulant, haar_moment, moment_from_cumulants, nc_partitions};
use qlattice::{Letter, Word};

fn main() -> qlattice::Result<()> {
    for k in 1..=8 {
        println!("|NC({k})| = {}", nc_partitions(k)?.len());
    }
    let kappa = |w: &[Letter]| Ok(haar_cumulant(w));
    for w in ["ab", "abab", "aabb", "ababab", "aab"] {
        let w: Word = w.parse()?;
        let m = moment_from_cumulants(w.letters(), &kappa)?;
        println!("τ('{w}') from cumulants = {m}, closed form {}", haar_moment(w.letters()));
    }
    Ok(())
}
