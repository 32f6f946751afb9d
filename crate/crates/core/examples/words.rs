//! Word combinatorics: intervals, the hat involution and shortlex order.

use qlattice::{interval, Word};

fn main() -> qlattice::Result<()> {
    for (i, j) in [(0, 3), (1, 4), (2, 2)] {
        let w = interval(i, j)?;
        println!("[{i},{j}] = '{w}'  hat = '{}'  alternating = {}", w.hat(), w.is_alternating());
    }
    let all = Word::all_up_to(3);
    let shown: Vec<String> = all.iter().map(|w| format!("'{w}'")).collect();
    println!("{} words of length ≤ 3 in shortlex order: {}", all.len(), shown.join(" "));
    Ok(())
}
