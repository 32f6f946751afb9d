//! Builds the shipped backends, prints a few moments, and optionally writes
//! their JSON files: `cargo run --example backends -- data/`.

use std::path::PathBuf;

use qlattice::backends::samples::{f2_dual, s3_irrep, span_q, z2_dual};
use qlattice::backends::Backend;
use qlattice::Word;

fn main() -> qlattice::Result<()> {
    let backends: Vec<(&str, Backend)> = vec![
        ("s3", s3_irrep()),
        ("z2_dual", z2_dual()),
        ("f2_dual", f2_dual()),
        ("span_q_1", span_q(1.0)),
        ("span_q_1_2", span_q(1.2)),
    ];
    let out_dir = std::env::args().nth(1).map(PathBuf::from);
    for (name, b) in &backends {
        let row: Vec<u64> = ["", "ab", "abab", "ababab"]
            .iter()
            .map(|s| b.moment(&s.parse::<Word>().expect("word")))
            .collect::<qlattice::Result<_>>()?;
        println!("{name:<12} kind={:<12} n={} d={:.4} moments (ab)^k: {row:?}", b.kind(), b.n, b.duality.d);
        if let Some(dir) = &out_dir {
            let text = serde_json::to_string_pretty(&b.to_spec())?;
            std::fs::write(dir.join(format!("{name}.json")), text + "\n")?;
            // round trip through the file format
            let back = Backend::load(&dir.join(format!("{name}.json")), 1e-9)?;
            assert_eq!(back.kind(), b.kind());
        }
    }
    Ok(())
}
