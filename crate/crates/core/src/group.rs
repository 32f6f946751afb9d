//! Discrete groups with solvable word problem: free groups, free abelian
//! groups, finite groups given by a multiplication table, and free products
//! of these.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Group descriptor as it appears in backend files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupSpec {
    Free { rank: usize },
    FreeAbelian { rank: usize },
    Finite { mult_table: Vec<Vec<usize>> },
    FreeProduct { factors: Vec<GroupSpec> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    pub table: Vec<Vec<usize>>,
    pub identity: usize,
    pub inverse: Vec<usize>,
}

impl FiniteGroup {
    /// Validates closure, identity, inverses and associativity.
    pub fn new(table: Vec<Vec<usize>>) -> Result<FiniteGroup> {
        let order = table.len();
        if order == 0 || table.iter().any(|r| r.len() != order || r.iter().any(|&x| x >= order)) {
            return Err(Error::Invalid("multiplication table must be a square table of element indices".into()));
        }
        let identity = (0..order)
            .find(|&e| (0..order).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| Error::Invalid("multiplication table has no identity".into()))?;
        let mut inverse = vec![0; order];
        for g in 0..order {
            inverse[g] = (0..order)
                .find(|&h| table[g][h] == identity && table[h][g] == identity)
                .ok_or_else(|| Error::Invalid(format!("element {g} has no inverse")))?;
        }
        for a in 0..order {
            for b in 0..order {
                for c in 0..order {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::Invalid(format!("table is not associative at ({a},{b},{c})")));
                    }
                }
            }
        }
        Ok(FiniteGroup { table, identity, inverse })
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Group {
    Free { rank: usize },
    FreeAbelian { rank: usize },
    Finite(FiniteGroup),
    FreeProduct(Vec<Group>),
}

/// Group elements in normal form.
///
/// Free-group words are reduced sequences of signed 1-based generator
/// indices; free-product words alternate factors and carry no identities.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Elem {
    Free(Vec<i32>),
    Abelian(Vec<i64>),
    Finite(usize),
    Product(Vec<(usize, Elem)>),
}

impl Group {
    pub fn from_spec(spec: &GroupSpec) -> Result<Group> {
        Ok(match spec {
            GroupSpec::Free { rank } => Group::Free { rank: *rank },
            GroupSpec::FreeAbelian { rank } => Group::FreeAbelian { rank: *rank },
            GroupSpec::Finite { mult_table } => Group::Finite(FiniteGroup::new(mult_table.clone())?),
            GroupSpec::FreeProduct { factors } => {
                if factors.is_empty() {
                    return Err(Error::Invalid("free product needs at least one factor".into()));
                }
                Group::FreeProduct(factors.iter().map(Group::from_spec).collect::<Result<_>>()?)
            }
        })
    }

    pub fn to_spec(&self) -> GroupSpec {
        match self {
            Group::Free { rank } => GroupSpec::Free { rank: *rank },
            Group::FreeAbelian { rank } => GroupSpec::FreeAbelian { rank: *rank },
            Group::Finite(f) => GroupSpec::Finite { mult_table: f.table.clone() },
            Group::FreeProduct(fs) => GroupSpec::FreeProduct { factors: fs.iter().map(Group::to_spec).collect() },
        }
    }

    pub fn identity(&self) -> Elem {
        match self {
            Group::Free { .. } => Elem::Free(Vec::new()),
            Group::FreeAbelian { rank } => Elem::Abelian(vec![0; *rank]),
            Group::Finite(f) => Elem::Finite(f.identity),
            Group::FreeProduct(_) => Elem::Product(Vec::new()),
        }
    }

    pub fn is_identity(&self, g: &Elem) -> bool {
        *g == self.identity()
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        match (self, a, b) {
            (Group::Free { .. }, Elem::Free(x), Elem::Free(y)) => {
                let mut out = x.clone();
                for &s in y {
                    if out.last() == Some(&-s) {
                        out.pop();
                    } else {
                        out.push(s);
                    }
                }
                Elem::Free(out)
            }
            (Group::FreeAbelian { .. }, Elem::Abelian(x), Elem::Abelian(y)) => {
                Elem::Abelian(x.iter().zip(y).map(|(p, q)| p + q).collect())
            }
            (Group::Finite(f), Elem::Finite(x), Elem::Finite(y)) => Elem::Finite(f.table[*x][*y]),
            (Group::FreeProduct(fs), Elem::Product(x), Elem::Product(y)) => {
                let mut out = x.clone();
                for (k, e) in y {
                    match out.last_mut() {
                        Some((k2, e2)) if k2 == k => {
                            let merged = fs[*k].mul(e2, e);
                            if fs[*k].is_identity(&merged) {
                                out.pop();
                            } else {
                                *e2 = merged;
                            }
                        }
                        _ => out.push((*k, e.clone())),
                    }
                }
                Elem::Product(out)
            }
            _ => panic!("element does not belong to this group"),
        }
    }

    pub fn inv(&self, a: &Elem) -> Elem {
        match (self, a) {
            (Group::Free { .. }, Elem::Free(x)) => Elem::Free(x.iter().rev().map(|s| -s).collect()),
            (Group::FreeAbelian { .. }, Elem::Abelian(x)) => Elem::Abelian(x.iter().map(|s| -s).collect()),
            (Group::Finite(f), Elem::Finite(x)) => Elem::Finite(f.inverse[*x]),
            (Group::FreeProduct(fs), Elem::Product(x)) => {
                Elem::Product(x.iter().rev().map(|(k, e)| (*k, fs[*k].inv(e))).collect())
            }
            _ => panic!("element does not belong to this group"),
        }
    }

    /// Embeds an element of factor `k` of a free product.
    pub fn inject(&self, k: usize, e: Elem) -> Result<Elem> {
        match self {
            Group::FreeProduct(fs) if k < fs.len() => {
                Ok(Elem::Product(if fs[k].is_identity(&e) { Vec::new() } else { vec![(k, e)] }))
            }
            _ => Err(Error::Invalid(format!("no free-product factor {k}"))),
        }
    }

    /// Parses an element from its file form: signed 1-based generator indices
    /// for free groups, exponent vectors for free abelian groups, `[index]`
    /// for finite groups and a list of `[factor, element]` pairs for free
    /// products.
    pub fn parse_elem(&self, v: &Value) -> Result<Elem> {
        let bad = || Error::Invalid(format!("cannot read group element {v}"));
        match self {
            Group::Free { rank } => {
                let arr = v.as_array().ok_or_else(bad)?;
                let mut letters = Vec::new();
                for x in arr {
                    let s = x.as_i64().ok_or_else(bad)?;
                    if s == 0 || s.unsigned_abs() as usize > *rank {
                        return Err(Error::Invalid(format!("generator index {s} outside rank {rank}")));
                    }
                    letters.push(s as i32);
                }
                Ok(self.mul(&Elem::Free(Vec::new()), &Elem::Free(letters)))
            }
            Group::FreeAbelian { rank } => {
                let arr = v.as_array().ok_or_else(bad)?;
                if arr.len() != *rank {
                    return Err(Error::Invalid(format!("exponent vector {v} must have length {rank}")));
                }
                Ok(Elem::Abelian(arr.iter().map(|x| x.as_i64().ok_or_else(bad)).collect::<Result<_>>()?))
            }
            Group::Finite(f) => {
                let idx = match v {
                    Value::Array(a) if a.len() == 1 => a[0].as_u64(),
                    other => other.as_u64(),
                }
                .ok_or_else(bad)? as usize;
                if idx >= f.order() {
                    return Err(Error::Invalid(format!("element index {idx} outside group of order {}", f.order())));
                }
                Ok(Elem::Finite(idx))
            }
            Group::FreeProduct(fs) => {
                let arr = v.as_array().ok_or_else(bad)?;
                let mut acc = self.identity();
                for pair in arr {
                    let p = pair.as_array().filter(|p| p.len() == 2).ok_or_else(bad)?;
                    let k = p[0].as_u64().ok_or_else(bad)? as usize;
                    let factor = fs.get(k).ok_or_else(bad)?;
                    let e = factor.parse_elem(&p[1])?;
                    acc = self.mul(&acc, &self.inject(k, e)?);
                }
                Ok(acc)
            }
        }
    }

    pub fn elem_to_json(&self, e: &Elem) -> Value {
        match (self, e) {
            (Group::Free { .. }, Elem::Free(x)) => json!(x),
            (Group::FreeAbelian { .. }, Elem::Abelian(x)) => json!(x),
            (Group::Finite(_), Elem::Finite(x)) => json!([x]),
            (Group::FreeProduct(fs), Elem::Product(x)) => {
                Value::Array(x.iter().map(|(k, e)| json!([k, fs[*k].elem_to_json(e)])).collect())
            }
            _ => Value::Null,
        }
    }

    /// Decides `target ∈ ⟨gens⟩`.
    pub fn subgroup_contains(&self, gens: &[Elem], target: &Elem) -> Result<bool> {
        match (self, target) {
            (Group::FreeAbelian { .. }, Elem::Abelian(t)) => {
                let rows: Vec<Vec<i64>> = gens
                    .iter()
                    .map(|g| match g {
                        Elem::Abelian(x) => Ok(x.clone()),
                        _ => Err(Error::Invalid("foreign element".into())),
                    })
                    .collect::<Result<_>>()?;
                Ok(lattice_contains(&rows, t))
            }
            (Group::Free { .. }, Elem::Free(t)) => {
                let words: Vec<Vec<i32>> = gens
                    .iter()
                    .map(|g| match g {
                        Elem::Free(x) => Ok(x.clone()),
                        _ => Err(Error::Invalid("foreign element".into())),
                    })
                    .collect::<Result<_>>()?;
                Ok(StallingsGraph::new(&words).accepts(t))
            }
            (Group::Finite(_), _) => {
                let mut seen: BTreeSet<Elem> = BTreeSet::new();
                let mut queue = VecDeque::from([self.identity()]);
                seen.insert(self.identity());
                while let Some(x) = queue.pop_front() {
                    for g in gens {
                        let y = self.mul(&x, g);
                        if seen.insert(y.clone()) {
                            queue.push_back(y);
                        }
                    }
                }
                Ok(seen.contains(target))
            }
            (Group::FreeProduct(_), _) => {
                Err(Error::Unsupported("subgroup membership in free products is not implemented".into()))
            }
            _ => Err(Error::Invalid("element does not belong to this group".into())),
        }
    }
}

/// Integer lattice membership via row echelon form over `Z`.
fn lattice_contains(rows: &[Vec<i64>], target: &[i64]) -> bool {
    let cols = target.len();
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        // Euclid on column `col` among rows `row..`
        loop {
            let nonzero: Vec<usize> = (row..m.len()).filter(|&r| m[r][col] != 0).collect();
            if nonzero.len() <= 1 {
                if let Some(&r) = nonzero.first() {
                    m.swap(row, r);
                }
                break;
            }
            let &best = nonzero.iter().min_by_key(|&&r| m[r][col].abs()).expect("non-empty");
            m.swap(row, best);
            for r in row + 1..m.len() {
                let q = m[r][col] / m[row][col];
                if q != 0 {
                    for k in 0..cols {
                        m[r][k] -= q * m[row][k];
                    }
                }
            }
        }
        if row < m.len() && m[row][col] != 0 {
            pivots.push((row, col));
            row += 1;
        }
    }
    let mut t: Vec<i128> = target.iter().map(|&x| x as i128).collect();
    for (r, col) in pivots {
        let p = m[r][col];
        if t[col] % p != 0 {
            return false;
        }
        let q = t[col] / p;
        for k in 0..cols {
            t[k] -= q * m[r][k];
        }
    }
    t.iter().all(|&x| x == 0)
}

/// Folded core graph of a finitely generated subgroup of a free group.
#[derive(Debug)]
struct StallingsGraph {
    /// `(from, label, to)` with positive labels.
    edges: Vec<(usize, i32, usize)>,
}

impl StallingsGraph {
    fn new(words: &[Vec<i32>]) -> StallingsGraph {
        let mut edges = Vec::new();
        let mut next = 1;
        for w in words.iter().filter(|w| !w.is_empty()) {
            let mut cur = 0;
            for (k, &s) in w.iter().enumerate() {
                let to = if k + 1 == w.len() {
                    0
                } else {
                    next += 1;
                    next - 1
                };
                if s > 0 {
                    edges.push((cur, s, to));
                } else {
                    edges.push((to, -s, cur));
                }
                cur = to;
            }
        }
        let mut g = StallingsGraph { edges };
        g.fold();
        g
    }

    fn fold(&mut self) {
        loop {
            let mut merge = None;
            'search: for (i, a) in self.edges.iter().enumerate() {
                for b in &self.edges[i + 1..] {
                    if a.1 == b.1 && a.0 == b.0 && a.2 != b.2 {
                        merge = Some((a.2, b.2));
                        break 'search;
                    }
                    if a.1 == b.1 && a.2 == b.2 && a.0 != b.0 {
                        merge = Some((a.0, b.0));
                        break 'search;
                    }
                }
            }
            let Some((keep, gone)) = merge else { break };
            let (keep, gone) = (keep.min(gone), keep.max(gone));
            for e in &mut self.edges {
                if e.0 == gone {
                    e.0 = keep;
                }
                if e.2 == gone {
                    e.2 = keep;
                }
            }
            self.edges.sort_unstable();
            self.edges.dedup();
        }
    }

    fn accepts(&self, word: &[i32]) -> bool {
        let mut cur = 0;
        for &s in word {
            let step = if s > 0 {
                self.edges.iter().find(|e| e.0 == cur && e.1 == s).map(|e| e.2)
            } else {
                self.edges.iter().find(|e| e.2 == cur && e.1 == -s).map(|e| e.0)
            };
            match step {
                Some(v) => cur = v,
                None => return false,
            }
        }
        cur == 0
    }
}
