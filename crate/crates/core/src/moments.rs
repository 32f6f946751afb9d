//! Character moment tables, non-crossing cumulants and the tilde transform.
//!
//! Moments are `m(w) = dim Hom(1, v^{⊗w})`. The tilde transform computes the
//! moments of `z·χ(v)` for a Haar unitary `z` free from `χ(v)`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::{Backend, DualGroupRep};
use crate::error::{Error, Result};
use crate::words::{Letter, Word};

/// Largest `k` for which `NC(k)` is enumerated.
pub const MAX_NC: usize = 14;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentTable {
    pub max_len: usize,
    pub entries: BTreeMap<Word, u64>,
}

impl MomentTable {
    pub fn get(&self, w: &Word) -> Result<u64> {
        self.entries.get(w).copied().ok_or_else(|| Error::MissingMoment(w.clone()))
    }

    /// First word (shortlex) whose entry differs from that of its hat.
    pub fn symmetry_violation(&self) -> Option<Word> {
        self.entries
            .iter()
            .find(|(w, v)| self.entries.get(&w.hat()).is_some_and(|h| h != *v))
            .map(|(w, _)| w.clone())
    }

    /// First word (shortlex) present in both tables with different entries.
    pub fn first_difference(&self, other: &MomentTable) -> Option<Word> {
        self.entries.iter().find(|(w, v)| other.entries.get(*w).is_some_and(|o| o != *v)).map(|(w, _)| w.clone())
    }

    pub fn restricted(&self, max_len: usize) -> MomentTable {
        MomentTable {
            max_len: max_len.min(self.max_len),
            entries: self.entries.iter().filter(|(w, _)| w.len() <= max_len).map(|(w, &v)| (w.clone(), v)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("string keys")
    }
}

pub fn moments_from_backend(b: &Backend, max_len: usize) -> Result<MomentTable> {
    let words = Word::all_up_to(max_len);
    let values = words.par_iter().map(|w| b.moment(w)).collect::<Result<Vec<_>>>()?;
    Ok(MomentTable { max_len, entries: words.into_iter().zip(values).collect() })
}

/// A non-crossing partition of `{0, …, k−1}`; blocks are sorted and listed
/// by their smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NCPartition {
    pub blocks: Vec<Vec<usize>>,
}

impl NCPartition {
    pub fn size(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_noncrossing(&self) -> bool {
        let mut owner = vec![usize::MAX; self.size()];
        for (k, b) in self.blocks.iter().enumerate() {
            for &x in b {
                owner[x] = k;
            }
        }
        let n = owner.len();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in c + 1..n {
                        if owner[a] == owner[c] && owner[b] == owner[d] && owner[a] != owner[b] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

fn nc_rec(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    // grow the block of items[0]; each skipped stretch is partitioned on its own
    fn grow(items: &[usize], block: Vec<usize>, last: usize, acc: Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        for rest in nc_rec(&items[last + 1..]) {
            let mut p = acc.clone();
            p.push(block.clone());
            p.extend(rest);
            out.push(p);
        }
        for next in last + 1..items.len() {
            for inner in nc_rec(&items[last + 1..next]) {
                let mut b = block.clone();
                b.push(items[next]);
                let mut a = acc.clone();
                a.extend(inner);
                grow(items, b, next, a, out);
            }
        }
    }
    grow(items, vec![items[0]], 0, Vec::new(), &mut out);
    out
}

/// All of `NC(k)`.
pub fn nc_partitions(k: usize) -> Result<Vec<NCPartition>> {
    if k > MAX_NC {
        return Err(Error::Domain(format!("NC({k}) is too large; at most {MAX_NC}")));
    }
    let items: Vec<usize> = (0..k).collect();
    Ok(nc_rec(&items)
        .into_iter()
        .map(|mut blocks| {
            blocks.sort_by_key(|b| b[0]);
            NCPartition { blocks }
        })
        .collect())
}

/// Sum over `V ∋ 0` of `κ(w_V) Π m(gaps)`, the first-block expansion of the
/// moment-cumulant formula. `skip_full` drops `V = {0..n}`.
fn first_block_sum(
    letters: &[Letter],
    skip_full: bool,
    kappa: &dyn Fn(&[Letter]) -> Result<i128>,
    moment: &dyn Fn(&[Letter]) -> Result<i128>,
) -> Result<i128> {
    let n = letters.len();
    if n == 0 {
        return Ok(1);
    }
    let mut total = 0i128;
    for mask in 0u32..(1u32 << (n - 1)) {
        if skip_full && mask == (1u32 << (n - 1)) - 1 {
            continue;
        }
        let mut block = vec![letters[0]];
        let mut pos = vec![0usize];
        for k in 1..n {
            if mask >> (k - 1) & 1 == 1 {
                block.push(letters[k]);
                pos.push(k);
            }
        }
        let kv = kappa(&block)?;
        if kv == 0 {
            continue;
        }
        let mut prod = kv;
        pos.push(n);
        for w in pos.windows(2) {
            if w[1] > w[0] + 1 {
                prod *= moment(&letters[w[0] + 1..w[1]])?;
                if prod == 0 {
                    break;
                }
            }
        }
        total += prod;
    }
    Ok(total)
}

/// Free cumulants of one non-commutative variable and its adjoint, with
/// `α ↦ x` and `β ↦ x*`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CumulantTable {
    pub max_len: usize,
    pub entries: HashMap<Word, i128>,
}

impl CumulantTable {
    pub fn get(&self, w: &[Letter]) -> Result<i128> {
        let w = Word::new(w.to_vec());
        self.entries.get(&w).copied().ok_or(Error::MissingMoment(w))
    }

    /// Moment reconstructed by summing cumulants over non-crossing partitions.
    pub fn moment(&self, w: &Word) -> Result<i128> {
        moment_from_cumulants(w.letters(), &|b| self.get(b))
    }
}

/// `m(w) = Σ_{π ∈ NC(|w|)} Π_{V ∈ π} κ(w_V)`.
pub fn moment_from_cumulants(w: &[Letter], kappa: &dyn Fn(&[Letter]) -> Result<i128>) -> Result<i128> {
    let mut memo: HashMap<Vec<Letter>, i128> = HashMap::new();
    fn go(
        w: &[Letter],
        kappa: &dyn Fn(&[Letter]) -> Result<i128>,
        memo: &mut HashMap<Vec<Letter>, i128>,
    ) -> Result<i128> {
        if let Some(&v) = memo.get(w) {
            return Ok(v);
        }
        let memo_cell = std::cell::RefCell::new(std::mem::take(memo));
        let v = first_block_sum(w, false, kappa, &|g| go(g, kappa, &mut memo_cell.borrow_mut()));
        *memo = memo_cell.into_inner();
        let v = v?;
        memo.insert(w.to_vec(), v);
        Ok(v)
    }
    go(w, kappa, &mut memo)
}

/// Möbius inversion over `NC`: `κ(w) = m(w) − Σ_{π ≠ 1} Π κ(w_V)`.
pub fn moment_to_cumulant(m: &dyn Fn(&[Letter]) -> Result<i128>, max_len: usize) -> Result<CumulantTable> {
    let mut entries: HashMap<Word, i128> = HashMap::new();
    for w in Word::all_up_to(max_len).into_iter().filter(|w| !w.is_empty()) {
        let rest = first_block_sum(
            w.letters(),
            true,
            &|b| entries.get(&Word::new(b.to_vec())).copied().ok_or_else(|| Error::MissingMoment(Word::new(b.to_vec()))),
            m,
        )?;
        let k = m(w.letters())? - rest;
        entries.insert(w, k);
    }
    Ok(CumulantTable { max_len, entries })
}

pub fn cumulants_of_table(t: &MomentTable) -> Result<CumulantTable> {
    moment_to_cumulant(&|w| Ok(t.get(&Word::new(w.to_vec()))? as i128), t.max_len)
}

/// `τ` of a word in a single Haar unitary (`α ↦ z`, `β ↦ z*`).
pub fn haar_moment(w: &[Letter]) -> i128 {
    i128::from(Word::new(w.to_vec()).balance() == 0)
}

fn catalan(m: usize) -> i128 {
    let mut c: i128 = 1;
    for k in 0..m {
        c = c * 2 * (2 * k as i128 + 1) / (k as i128 + 2);
    }
    c
}

/// Closed-form Haar-unitary `*`-cumulants: `(−1)^{m−1} Cat_{m−1}` on
/// alternating words of length `2m`, zero elsewhere.
pub fn haar_cumulant(w: &[Letter]) -> i128 {
    let n = w.len();
    if n == 0 || n % 2 == 1 || w.windows(2).any(|p| p[0] == p[1]) {
        return 0;
    }
    let m = n / 2;
    let sign = if m % 2 == 1 { 1 } else { -1 };
    sign * catalan(m - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mixed {
    Z(Letter),
    X(Letter),
}

/// Moment of `w` in `(z·x, x*·z*)` with `z` Haar and free from `x`.
pub fn tilde_moment(w: &Word, kx: &CumulantTable) -> Result<i128> {
    let mut mixed = Vec::with_capacity(2 * w.len());
    for &l in w.letters() {
        match l {
            Letter::Alpha => mixed.extend([Mixed::Z(Letter::Alpha), Mixed::X(Letter::Alpha)]),
            Letter::Beta => mixed.extend([Mixed::X(Letter::Beta), Mixed::Z(Letter::Beta)]),
        }
    }
    let n = mixed.len();
    let mut memo = vec![vec![None; n + 1]; n + 1];
    interval_moment(&mixed, 0, n, kx, &mut memo)
}

/// Mixed moment of `mixed[i..j]`: first-block expansion over non-crossing
/// partitions whose blocks stay inside one alphabet.
fn interval_moment(
    mixed: &[Mixed],
    i: usize,
    j: usize,
    kx: &CumulantTable,
    memo: &mut Vec<Vec<Option<i128>>>,
) -> Result<i128> {
    if i >= j {
        return Ok(1);
    }
    if let Some(v) = memo[i][j] {
        return Ok(v);
    }
    let same: Vec<usize> = (i + 1..j)
        .filter(|&k| matches!((mixed[i], mixed[k]), (Mixed::Z(_), Mixed::Z(_)) | (Mixed::X(_), Mixed::X(_))))
        .collect();
    let letter = |m: Mixed| match m {
        Mixed::Z(l) | Mixed::X(l) => l,
    };
    let mut total = 0i128;
    for mask in 0u32..(1u32 << same.len()) {
        let mut pos = vec![i];
        pos.extend(same.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &k)| k));
        let block: Vec<Letter> = pos.iter().map(|&p| letter(mixed[p])).collect();
        let kv = match mixed[i] {
            Mixed::Z(_) => haar_cumulant(&block),
            Mixed::X(_) => kx.get(&block)?,
        };
        if kv == 0 {
            continue;
        }
        let mut prod = kv;
        pos.push(j);
        for w in pos.windows(2) {
            if w[1] > w[0] + 1 {
                prod *= interval_moment(mixed, w[0] + 1, w[1], kx, memo)?;
                if prod == 0 {
                    break;
                }
            }
        }
        total += prod;
    }
    memo[i][j] = Some(total);
    Ok(total)
}

/// Moments of `z·χ(v)` for every word up to `m.max_len`.
pub fn tilde_moments(m: &MomentTable) -> Result<MomentTable> {
    let kx = cumulants_of_table(m)?;
    let words = Word::all_up_to(m.max_len);
    let values = words
        .par_iter()
        .map(|w| {
            let v = tilde_moment(w, &kx)?;
            u64::try_from(v).map_err(|_| Error::Rounding {
                value: v as f64,
                tol: 0.0,
                context: format!("tilde moment of '{w}' is not a non-negative integer"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentTable { max_len: m.max_len, entries: words.into_iter().zip(values).collect() })
}

/// Identity-word counts in the tilde group of a group dual.
pub fn word_oracle_tilde(b: &DualGroupRep, max_len: usize) -> Result<MomentTable> {
    let t = b.tilde_group()?;
    let words = Word::all_up_to(max_len);
    let values = words.par_iter().map(|w| t.rep.moment(w)).collect::<Result<Vec<_>>>()?;
    Ok(MomentTable { max_len, entries: words.into_iter().zip(values).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::samples::*;
    use crate::backends::Source;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn dual(b: &Backend) -> &DualGroupRep {
        match &b.source {
            Source::DualGroup(d) => d,
            _ => unreachable!(),
        }
    }

    /// Explicit sum over NC(k) of products of block cumulants.
    fn moment_by_enumeration(word: &[Letter], kappa: &dyn Fn(&[Letter]) -> i128) -> i128 {
        nc_partitions(word.len())
            .unwrap()
            .iter()
            .map(|p| p.blocks.iter().map(|b| kappa(&b.iter().map(|&k| word[k]).collect::<Vec<_>>())).product::<i128>())
            .sum()
    }

    #[test]
    fn nc_counts_are_catalan() {
        let expected = [1, 1, 2, 5, 14, 42, 132, 429, 1430];
        for (k, &c) in expected.iter().enumerate() {
            let parts = nc_partitions(k).unwrap();
            assert_eq!(parts.len(), c, "k = {k}");
            assert!(parts.iter().all(NCPartition::is_noncrossing));
            let distinct: std::collections::HashSet<_> = parts.iter().collect();
            assert_eq!(distinct.len(), c);
        }
        let crossing = NCPartition { blocks: vec![vec![0, 2], vec![1, 3]] };
        assert!(!crossing.is_noncrossing());
        assert!(!nc_partitions(4).unwrap().contains(&crossing));
        assert!(nc_partitions(15).is_err());
    }

    #[test]
    fn haar_cumulants_agree_with_inversion() {
        let derived = moment_to_cumulant(&|w| Ok(haar_moment(w)), 10).unwrap();
        for word in Word::all_up_to(10).into_iter().filter(|x| !x.is_empty()) {
            assert_eq!(derived.entries[&word], haar_cumulant(word.letters()), "{word}");
        }
        assert_eq!(derived.entries[&w("ab")], 1);
        assert_eq!(derived.entries[&w("abab")], -1);
    }

    #[test]
    fn haar_moments_from_cumulants() {
        for k in 0..=8 {
            let zk = Word::letter(Letter::Alpha).repeat(k);
            let m = moment_from_cumulants(zk.letters(), &|b| Ok(haar_cumulant(b))).unwrap();
            assert_eq!(m, i128::from(k == 0));
            let m = moment_from_cumulants(zk.hat().letters(), &|b| Ok(haar_cumulant(b))).unwrap();
            assert_eq!(m, i128::from(k == 0));
        }
    }

    #[test]
    fn point_mass_cumulants() {
        let k = moment_to_cumulant(&|_| Ok(1), 5).unwrap();
        assert_eq!(k.entries[&w("a")], 1);
        for word in Word::all_up_to(5).into_iter().filter(|x| x.len() >= 2) {
            assert_eq!(k.entries[&word], 0);
        }
    }

    #[test]
    fn dp_matches_partition_enumeration() {
        let table = moments_from_backend(&f2_dual(), 7).unwrap();
        let k = cumulants_of_table(&table).unwrap();
        for word in Word::all_up_to(7) {
            let by_enum = moment_by_enumeration(word.letters(), &|b| k.get(b).unwrap());
            assert_eq!(by_enum, table.get(&word).unwrap() as i128, "{word}");
            assert_eq!(k.moment(&word).unwrap(), by_enum);
        }
    }

    #[test]
    fn backend_tables() {
        let z2 = moments_from_backend(&z2_dual(), 6).unwrap();
        assert_eq!(z2.get(&w("ab")).unwrap(), 2);
        assert_eq!(z2.get(&Word::empty()).unwrap(), 1);
        let f2 = moments_from_backend(&f2_dual(), 6).unwrap();
        assert_eq!(f2.get(&w("abab")).unwrap(), 6);
        for t in [&z2, &f2] {
            assert!(t.symmetry_violation().is_none());
        }
    }

    #[test]
    fn tilde_examples() {
        for b in [z2_dual(), f2_dual(), s3_irrep()] {
            let src = moments_from_backend(&b, 6).unwrap();
            let t = tilde_moments(&src).unwrap();
            assert_eq!(t.get(&w("aa")).unwrap(), 0);
            for word in Word::all_up_to(6) {
                // alternating words of the form x̂·x
                if word.is_alternating() && word.len() % 2 == 0 {
                    assert_eq!(t.get(&word).unwrap(), src.get(&word).unwrap(), "{word}");
                }
                if word.balance() != 0 {
                    assert_eq!(t.get(&word).unwrap(), 0);
                }
            }
            assert!(t.symmetry_violation().is_none());
        }
    }

    #[test]
    fn tilde_matches_word_oracle() {
        for b in [z2_dual(), f2_dual()] {
            let src = moments_from_backend(&b, 6).unwrap();
            let t = tilde_moments(&src).unwrap();
            let oracle = word_oracle_tilde(dual(&b), 6).unwrap();
            assert_eq!(t.first_difference(&oracle), None);
            assert_eq!(t, oracle);
        }
        let oracle = word_oracle_tilde(dual(&z2_dual()), 2).unwrap();
        assert_eq!(oracle.get(&w("ab")).unwrap(), 2);
        let f2 = word_oracle_tilde(dual(&f2_dual()), 4).unwrap();
        assert_eq!(f2.get(&w("abab")).unwrap(), 6);
    }

    #[test]
    fn tilde_is_idempotent() {
        let src = moments_from_backend(&z2_dual(), 6).unwrap();
        let once = tilde_moments(&src).unwrap();
        let twice = tilde_moments(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn missing_moment_is_reported() {
        let mut t = moments_from_backend(&z2_dual(), 3).unwrap();
        t.entries.remove(&w("ab"));
        assert!(matches!(tilde_moments(&t), Err(Error::MissingMoment(_))));
    }

    #[test]
    fn json_shape() {
        let t = moments_from_backend(&z2_dual(), 2).unwrap();
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["max_len"], 2);
        assert_eq!(v["entries"]["ab"], 2);
        assert_eq!(v["entries"][""], 1);
        let back: MomentTable = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn cumulant_round_trip(vals in prop::collection::vec(0u64..50, 31)) {
            // arbitrary integer data on words of length <= 4
            let words = Word::all_up_to(4);
            let table: HashMap<Word, i128> = words.iter().cloned().zip(vals.iter().map(|&v| v as i128)).collect();
            let m = |l: &[Letter]| if l.is_empty() { Ok(1) } else { Ok(table[&Word::new(l.to_vec())]) };
            let k = moment_to_cumulant(&m, 4).unwrap();
            for word in words.iter().filter(|x| !x.is_empty()) {
                prop_assert_eq!(k.moment(word).unwrap(), table[word]);
            }
        }
    }
}
