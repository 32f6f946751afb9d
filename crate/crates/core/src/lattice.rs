//! The lattice `A_{ij} = End(v^{⊗[i,j]})` with its traces, Jones
//! projections and conditional expectations.

use std::collections::BTreeMap;

use nalgebra::Cholesky;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::backends::Backend;
use crate::duality::DualityMaps;
use crate::error::{round_checked, Error, Result};
use crate::tensorops::{c, hermitian_eigen, numerical_rank, pad, CMat, CVec, OperatorSpan, TensorMap, C64};
use crate::words::{interval, Word};

pub const DEFAULT_SEED: u64 = 0x5eed;

/// Random elements drawn per checked configuration.
const SAMPLES: usize = 2;

/// Largest lattice bound accepted for an `n`-dimensional corepresentation.
pub fn default_max_bound(n: usize) -> usize {
    match n {
        0..=2 => 5,
        3 => 4,
        _ => 3,
    }
}

pub(crate) fn iv(i: usize, j: usize) -> Word {
    interval(i, j).expect("i <= j")
}

#[derive(Clone, Debug)]
pub struct PopaLattice {
    pub bound: usize,
    pub cells: BTreeMap<(usize, usize), OperatorSpan>,
    pub jones: BTreeMap<usize, TensorMap>,
    pub lambda: f64,
    pub duality: DualityMaps,
    pub backend: Backend,
    gram: BTreeMap<(usize, usize), Option<Cholesky<C64, nalgebra::Dyn>>>,
    gram_min: BTreeMap<(usize, usize), f64>,
}

pub fn build_lattice(b: &Backend, bound: usize, tol: f64) -> Result<PopaLattice> {
    let max = default_max_bound(b.n);
    if bound > max {
        return Err(Error::Domain(format!("bound {bound} exceeds the maximum {max} for n = {}", b.n)));
    }
    build_lattice_unchecked(b, bound, tol)
}

/// [`build_lattice`] without the size guard.
pub fn build_lattice_unchecked(b: &Backend, bound: usize, tol: f64) -> Result<PopaLattice> {
    let keys: Vec<(usize, usize)> = (0..=bound).flat_map(|i| (i..=bound).map(move |j| (i, j))).collect();
    let dm = &b.duality;
    let built = keys
        .par_iter()
        .map(|&(i, j)| {
            let w = iv(i, j);
            let span = b.hom_basis(&w, &w, tol)?;
            let dens = dm.trace_density(&w);
            let scale = c(1.0 / dm.word_dim(&w));
            let g = CMat::from_fn(span.dim(), span.dim(), |a, k| {
                (span.basis[a].matrix.adjoint() * &span.basis[k].matrix * &dens).trace() * scale
            });
            let (vals, _) = hermitian_eigen(&g);
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(((i, j), span, Cholesky::new(g), min))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cells = BTreeMap::new();
    let mut gram = BTreeMap::new();
    let mut gram_min = BTreeMap::new();
    for (key, span, chol, min) in built {
        cells.insert(key, span);
        gram.insert(key, chol);
        gram_min.insert(key, if min.is_finite() { min } else { 0.0 });
    }
    let jones = (2..=bound).map(|k| (k, dm.jones(k))).collect();
    Ok(PopaLattice { bound, cells, jones, lambda: dm.lambda, duality: dm.clone(), backend: b.clone(), gram, gram_min })
}

impl PopaLattice {
    pub fn cell(&self, i: usize, j: usize) -> Result<&OperatorSpan> {
        self.cells.get(&(i, j)).ok_or_else(|| Error::Domain(format!("cell ({i},{j}) is outside the lattice")))
    }

    pub fn dims(&self) -> BTreeMap<(usize, usize), usize> {
        self.cells.iter().map(|(&k, s)| (k, s.dim())).collect()
    }

    pub fn index(&self) -> f64 {
        1.0 / self.lambda
    }

    /// `id ⊗ x ⊗ id` from `[i,j]` into `[k,l]`.
    pub fn embed(&self, x: &TensorMap, (i, j): (usize, usize), (k, l): (usize, usize)) -> TensorMap {
        pad(x, &iv(k, i), &iv(j, l))
    }

    /// `e_k` inside `End([i,j])`.
    pub fn jones_in(&self, k: usize, i: usize, j: usize) -> Result<TensorMap> {
        let e = self.jones.get(&k).ok_or_else(|| Error::Domain(format!("no Jones projection e_{k}")))?;
        if i + 2 > k || k > j {
            return Err(Error::Domain(format!("e_{k} does not lie over [{i},{j}]")));
        }
        Ok(pad(e, &iv(i, k - 2), &iv(k, j)))
    }

    pub fn trace(&self, x: &TensorMap) -> Result<C64> {
        self.duality.canonical_trace(x, &x.domain.word.clone())
    }

    /// Orthogonal projection onto `A_{ij}` for the inner product `τ(y*x)`.
    pub fn tau_project(&self, i: usize, j: usize, y: &TensorMap) -> Result<TensorMap> {
        let span = self.cell(i, j)?;
        let chol = self.gram[&(i, j)]
            .as_ref()
            .ok_or_else(|| Error::InconsistentRepresentation(format!("trace is not faithful on cell ({i},{j})")))?;
        let w = &span.domain.word;
        let dens = self.duality.trace_density(w);
        let scale = c(1.0 / self.duality.word_dim(w));
        let yd = &y.matrix * &dens;
        let rhs = CVec::from_iterator(span.dim(), span.basis.iter().map(|b| (b.matrix.adjoint() * &yd).trace() * scale));
        let coefs = chol.solve(&rhs);
        Ok(span.combination(coefs.as_slice()))
    }

    /// Raw contraction `E_{[k,i],[i,j],[j,l]}` of `x ∈ End([k,l])`.
    pub fn contract(&self, x: &TensorMap, (k, l): (usize, usize), (i, j): (usize, usize)) -> Result<TensorMap> {
        if !(k <= i && i <= j && j <= l) {
            return Err(Error::Domain(format!("[{i},{j}] is not inside [{k},{l}]")));
        }
        self.duality.conditional_expectation(&iv(k, i), &iv(i, j), &iv(j, l), x)
    }

    /// `E_{A_{ij}}` applied to `x ∈ End([k,l])`, returned on `[i,j]`.
    pub fn expectation(&self, x: &TensorMap, outer: (usize, usize), (i, j): (usize, usize)) -> Result<TensorMap> {
        let y = self.contract(x, outer, (i, j))?;
        self.tau_project(i, j, &y)
    }

    pub fn is_scalar_cell(&self, i: usize, j: usize) -> bool {
        self.cells.get(&(i, j)).map(|s| s.dim() == 1).unwrap_or(false)
    }

    pub fn min_trace_gram_eigenvalue(&self) -> f64 {
        self.gram_min.values().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn index(l: &PopaLattice) -> f64 {
    l.index()
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AxiomReport {
    pub seed: u64,
    pub tol: f64,
    pub commuting_square: f64,
    pub expectation_membership: f64,
    pub trace_preservation: f64,
    pub jones_condition: f64,
    pub markov: f64,
    pub commutation: f64,
    pub jones_relations: f64,
    pub jones_membership: f64,
    pub inclusion: f64,
    pub scalar_diagonal: bool,
    pub min_trace_gram_eigenvalue: f64,
    pub passed: bool,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.commuting_square,
            self.expectation_membership,
            self.trace_preservation,
            self.jones_condition,
            self.markov,
            self.commutation,
            self.jones_relations,
            self.jones_membership,
            self.inclusion,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn normalized(x: TensorMap) -> TensorMap {
    let n = x.norm();
    if n > 0.0 {
        x.scale(c(1.0 / n))
    } else {
        x
    }
}

fn mul(a: &TensorMap, b: &TensorMap) -> TensorMap {
    TensorMap { matrix: &a.matrix * &b.matrix, ..a.clone() }
}

fn diff(a: &TensorMap, b: &TensorMap) -> f64 {
    (&a.matrix - &b.matrix).norm()
}

pub fn verify_axioms(l: &PopaLattice, tol: f64) -> Result<AxiomReport> {
    verify_axioms_seeded(l, tol, DEFAULT_SEED)
}

/// Checks the commuting-square, Jones, Markov and commutation axioms on
/// seeded random elements, all inside `End([0, bound])`.
pub fn verify_axioms_seeded(l: &PopaLattice, tol: f64, seed: u64) -> Result<AxiomReport> {
    let b = l.bound;
    if b < 3 {
        return Err(Error::Domain(format!("axiom checks need bound >= 3, got {b}")));
    }
    let full = (0, b);
    let lift = |x: &TensorMap, i: usize, j: usize| l.embed(x, (i, j), full);
    let e_global = |k: usize| l.jones_in(k, 0, b);
    let exp_global = |x: &TensorMap, i: usize, j: usize| -> Result<TensorMap> {
        Ok(lift(&l.expectation(x, full, (i, j))?, i, j))
    };
    let sample = |rng: &mut ChaCha8Rng, i: usize, j: usize| -> Result<TensorMap> {
        Ok(lift(&normalized(l.cell(i, j)?.random_element(rng)), i, j))
    };
    let keys: Vec<(usize, usize)> = l.cells.keys().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = AxiomReport { seed, tol, ..Default::default() };

    rep.scalar_diagonal = (0..=b).all(|i| l.is_scalar_cell(i, i));
    rep.min_trace_gram_eigenvalue = l.min_trace_gram_eigenvalue();

    // commuting squares, trace preservation, membership of raw contractions
    for _ in 0..SAMPLES {
        let x = sample(&mut rng, 0, b)?;
        let tx = l.trace(&x)?;
        let mut proj = BTreeMap::new();
        for &(i, j) in &keys {
            let raw = l.contract(&x, full, (i, j))?;
            rep.expectation_membership = rep.expectation_membership.max(l.cell(i, j)?.relative_residual(&raw));
            let e = l.tau_project(i, j, &raw)?;
            rep.trace_preservation = rep.trace_preservation.max((l.trace(&e)? - tx).norm());
            proj.insert((i, j), lift(&e, i, j));
        }
        for &(i, j) in &keys {
            for &(k, m) in &keys {
                let (r, s) = (i.max(k), j.min(m));
                if r > s {
                    continue;
                }
                let lhs = exp_global(&proj[&(k, m)], i, j)?;
                rep.commuting_square = rep.commuting_square.max(diff(&lhs, &proj[&(r, s)]));
            }
        }
    }

    // Jones conditions
    for &(i, j) in &keys {
        for _ in 0..SAMPLES {
            if i + 1 <= j && j + 1 <= b {
                let x = sample(&mut rng, i, j)?;
                let e = e_global(j + 1)?;
                let lhs = mul(&mul(&e, &x), &e);
                let rhs = mul(&exp_global(&x, i, j - 1)?, &e);
                rep.jones_condition = rep.jones_condition.max(diff(&lhs, &rhs));
            }
            if i >= 1 && i + 1 <= j {
                let x = sample(&mut rng, i, j)?;
                let e = e_global(i + 1)?;
                let lhs = mul(&mul(&e, &x), &e);
                let rhs = mul(&exp_global(&x, i + 1, j)?, &e);
                rep.jones_condition = rep.jones_condition.max(diff(&lhs, &rhs));
            }
        }
    }

    // Markov conditions
    let inv = 1.0 / l.lambda;
    for &(i, j) in &keys {
        for _ in 0..SAMPLES {
            if j + 2 <= b {
                let x = sample(&mut rng, i, j + 2)?;
                let e = e_global(j + 2)?;
                let xe = mul(&x, &e);
                let lhs = mul(&exp_global(&xe, i, j + 1)?, &e).scale(c(inv));
                rep.markov = rep.markov.max(diff(&lhs, &xe));
            }
            if j >= i + 2 {
                let x = sample(&mut rng, i, j)?;
                let e = e_global(i + 2)?;
                let xe = mul(&x, &e);
                let lhs = mul(&exp_global(&xe, i + 1, j)?, &e).scale(c(inv));
                rep.markov = rep.markov.max(diff(&lhs, &xe));
            }
        }
    }

    // commutation relations
    for &(i, j) in &keys {
        for &(k, m) in &keys {
            if j <= k {
                let x = sample(&mut rng, i, j)?;
                let y = sample(&mut rng, k, m)?;
                rep.commutation = rep.commutation.max(diff(&mul(&x, &y), &mul(&y, &x)));
            }
        }
    }

    // the λ-sequence
    for i in 2..=b {
        let ei = e_global(i)?;
        rep.jones_relations = rep.jones_relations.max(diff(&mul(&ei, &ei), &ei)).max(diff(&ei.adjoint(), &ei));
        for j in 2..=b {
            let ej = e_global(j)?;
            let r = if i.abs_diff(j) == 1 {
                diff(&mul(&mul(&ei, &ej), &ei), &ei.scale(c(l.lambda)))
            } else if i.abs_diff(j) >= 2 {
                diff(&mul(&ei, &ej), &mul(&ej, &ei))
            } else {
                0.0
            };
            rep.jones_relations = rep.jones_relations.max(r);
        }
    }

    // e_j ∈ A_{i-2,k} and inclusions
    for &(i, k) in &keys {
        for j in (i + 2).max(2)..=k {
            let e = l.jones_in(j, i, k)?;
            rep.jones_membership = rep.jones_membership.max(l.cell(i, k)?.relative_residual(&e));
        }
    }
    for &(i, j) in &keys {
        for &(k, m) in &keys {
            if (k, m) != (i, j) && k <= i && j <= m {
                let outer = l.cell(k, m)?;
                for x in &l.cell(i, j)?.basis {
                    rep.inclusion = rep.inclusion.max(outer.relative_residual(&l.embed(x, (i, j), (k, m))));
                }
            }
        }
    }

    rep.passed = rep.scalar_diagonal && rep.max_residual() < tol && rep.min_trace_gram_eigenvalue > tol;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftReport {
    pub pairs: Vec<ShiftPair>,
    pub max_distance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftPair {
    pub cell: (usize, usize),
    pub shifted: (usize, usize),
    pub dims: (usize, usize),
    pub distance: f64,
}

/// Compares `A_{ij}` with `A_{i+2,j+2}` as subspaces of the same space.
pub fn shift_check(l: &PopaLattice, tol: f64) -> ShiftReport {
    let mut pairs = Vec::new();
    for (&(i, j), span) in &l.cells {
        if let Some(other) = l.cells.get(&(i + 2, j + 2)) {
            pairs.push(ShiftPair { cell: (i, j), shifted: (i + 2, j + 2), dims: (span.dim(), other.dim()), distance: span.distance(other) });
        }
    }
    let max_distance = pairs.iter().map(|p| p.distance).fold(0.0, f64::max);
    ShiftReport { passed: max_distance <= tol, pairs, max_distance }
}

#[derive(Clone, Debug, Serialize)]
pub struct CellDecomposition {
    pub cell: (usize, usize),
    pub dim: usize,
    pub summands: Vec<usize>,
    /// `τ` of a minimal projection in each summand.
    pub weights: Vec<f64>,
    #[serde(skip)]
    pub central_projections: Vec<CMat>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Inclusion {
    pub from: (usize, usize),
    pub to: (usize, usize),
    /// `multiplicities[a][b]`: copies of summand `a` of the smaller cell in summand `b`.
    pub multiplicities: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BratteliData {
    pub cells: Vec<CellDecomposition>,
    pub inclusions: Vec<Inclusion>,
}

/// Orthonormal basis of the center of the algebra spanned by `span`.
fn center_basis(span: &OperatorSpan) -> Vec<CMat> {
    let m = span.dim();
    let mut gram = CMat::zeros(m, m);
    for bk in &span.basis {
        let comms: Vec<CMat> = span.basis.iter().map(|ba| &ba.matrix * &bk.matrix - &bk.matrix * &ba.matrix).collect();
        for a in 0..m {
            for a2 in a..m {
                let v = comms[a].dotc(&comms[a2]);
                gram[(a, a2)] += v;
                if a2 != a {
                    gram[(a2, a)] += v.conj();
                }
            }
        }
    }
    let (vals, vecs) = hermitian_eigen(&gram);
    let top = vals.iter().copied().fold(1.0, f64::max);
    vals.iter()
        .enumerate()
        .filter(|(_, &v)| v.abs().sqrt() <= 1e-7 * top.sqrt())
        .map(|(k, _)| {
            let coef = vecs.column(k);
            let mut z = CMat::zeros(span.codomain.dim(), span.domain.dim());
            for (b, &w) in span.basis.iter().zip(coef.iter()) {
                z += &b.matrix * w;
            }
            z
        })
        .collect()
}

fn decompose_cell(l: &PopaLattice, i: usize, j: usize, tol: f64, rng: &mut ChaCha8Rng) -> Result<CellDecomposition> {
    let span = l.cell(i, j)?;
    let center = center_basis(span);
    let k = center.len();
    let dimh = span.domain.dim();
    let projections: Vec<CMat> = if k <= 1 {
        vec![CMat::identity(dimh, dimh)]
    } else {
        let mut z = CMat::zeros(dimh, dimh);
        for cz in &center {
            z += cz * crate::tensorops::random_c64(rng);
        }
        let z = (&z + z.adjoint()) * c(0.5);
        let (vals, _) = hermitian_eigen(&z);
        let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let sorted: Vec<f64> = order.iter().map(|&o| vals[o] / scale).collect();
        let mut gaps: Vec<(f64, usize)> = sorted.windows(2).enumerate().map(|(p, w)| (w[1] - w[0], p + 1)).collect();
        gaps.sort_by(|a, b| b.0.total_cmp(&a.0));
        let chosen = &gaps[..k - 1];
        let smallest_cut = chosen.iter().map(|g| g.0).fold(f64::INFINITY, f64::min);
        let largest_inner = gaps[k - 1..].first().map(|g| g.0).unwrap_or(0.0);
        if smallest_cut < 10.0 * tol || largest_inner > 0.1 * smallest_cut {
            return Err(Error::ClusteringAmbiguity { cell: format!("({i},{j})"), gap: smallest_cut });
        }
        let mut cuts: Vec<usize> = chosen.iter().map(|g| g.1).collect();
        cuts.sort_unstable();
        let mut bounds = vec![0];
        bounds.extend(cuts);
        bounds.push(sorted.len());
        let centers: Vec<f64> = bounds.windows(2).map(|r| sorted[r[0]..r[1]].iter().sum::<f64>() / (r[1] - r[0]) as f64).collect();
        let zn = z * c(1.0 / scale);
        let id = CMat::identity(dimh, dimh);
        // Lagrange interpolation keeps each projection a polynomial in z
        (0..centers.len())
            .map(|m| {
                let mut p = id.clone();
                for (o, &co) in centers.iter().enumerate() {
                    if o != m {
                        p = p * (&zn - &id * c(co)) * c(1.0 / (centers[m] - co));
                    }
                }
                (&p + p.adjoint()) * c(0.5)
            })
            .collect()
    };
    let mut parts = Vec::new();
    for p in projections {
        let cols: Vec<CVec> = span.basis.iter().map(|b| CVec::from_column_slice((&p * &b.matrix).as_slice())).collect();
        let r = numerical_rank(&CMat::from_columns(&cols), 1e-9);
        let d = (r as f64).sqrt().round() as usize;
        if d * d != r {
            return Err(Error::InconsistentRepresentation(format!("summand of cell ({i},{j}) has dimension {r}, not a square")));
        }
        let pt = TensorMap { domain: span.domain.clone(), codomain: span.codomain.clone(), matrix: p.clone() };
        let weight = l.trace(&pt)?.re / d as f64;
        parts.push((d, weight, p));
    }
    parts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(CellDecomposition {
        cell: (i, j),
        dim: span.dim(),
        summands: parts.iter().map(|p| p.0).collect(),
        weights: parts.iter().map(|p| p.1).collect(),
        central_projections: parts.into_iter().map(|p| p.2).collect(),
    })
}

fn inclusion(l: &PopaLattice, small: &CellDecomposition, big: &CellDecomposition) -> Result<Inclusion> {
    let (si, sj) = small.cell;
    let (bi, bj) = big.cell;
    let (left, right) = (iv(bi, si), iv(sj, bj));
    let mut mult = vec![vec![0; big.summands.len()]; small.summands.len()];
    for (a, pa) in small.central_projections.iter().enumerate() {
        let n = l.duality.n();
        let padded = {
            let t = TensorMap { domain: l.cells[&small.cell].domain.clone(), codomain: l.cells[&small.cell].codomain.clone(), matrix: pa.clone() };
            pad(&t, &left, &right).matrix
        };
        let _ = n;
        for (bidx, pb) in big.central_projections.iter().enumerate() {
            let rank_b = pb.trace().re;
            let overlap = (pb * &padded).trace().re;
            let value = overlap * big.summands[bidx] as f64 / (small.summands[a] as f64 * rank_b);
            let m = round_checked(value, 1e-6, || format!("multiplicity {:?} -> {:?}", small.cell, big.cell))?;
            mult[a][bidx] = m as usize;
        }
    }
    Ok(Inclusion { from: small.cell, to: big.cell, multiplicities: mult })
}

/// Central decomposition of every cell and the multiplicity matrices of the
/// inclusions `A_{i,j} ⊂ A_{i,j+1}` and `A_{i,j} ⊂ A_{i-1,j}`.
pub fn bratteli(l: &PopaLattice, tol: f64) -> Result<BratteliData> {
    bratteli_seeded(l, tol, DEFAULT_SEED)
}

pub fn bratteli_seeded(l: &PopaLattice, tol: f64, seed: u64) -> Result<BratteliData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = Vec::new();
    for &(i, j) in l.cells.keys() {
        cells.push(decompose_cell(l, i, j, tol, &mut rng)?);
    }
    let by_key: BTreeMap<(usize, usize), &CellDecomposition> = cells.iter().map(|c| (c.cell, c)).collect();
    let mut inclusions = Vec::new();
    for (&(i, j), small) in &by_key {
        if let Some(big) = by_key.get(&(i, j + 1)) {
            inclusions.push(inclusion(l, small, big)?);
        }
        if i > 0 {
            if let Some(big) = by_key.get(&(i - 1, j)) {
                inclusions.push(inclusion(l, small, big)?);
            }
        }
    }
    Ok(BratteliData { cells, inclusions })
}

impl BratteliData {
    /// DOT rendering: one rank per column index `j`, solid edges for
    /// `A_{i,j} ⊂ A_{i,j+1}`, dashed edges for `A_{i,j} ⊂ A_{i-1,j}`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph bratteli {\n  rankdir=TB;\n  node [shape=circle];\n");
        let mut by_j: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for cell in &self.cells {
            let (i, j) = cell.cell;
            for (s, d) in cell.summands.iter().enumerate() {
                let id = format!("\"{i},{j}:{s}\"");
                out.push_str(&format!("  {id} [label=\"{d}\"];\n"));
                by_j.entry(j).or_default().push(id);
            }
        }
        for ids in by_j.values() {
            out.push_str(&format!("  {{ rank=same; {} }}\n", ids.join("; ")));
        }
        for inc in &self.inclusions {
            let style = if inc.from.0 == inc.to.0 { "solid" } else { "dashed" };
            for (a, row) in inc.multiplicities.iter().enumerate() {
                for (b, &m) in row.iter().enumerate() {
                    if m > 0 {
                        out.push_str(&format!(
                            "  \"{},{}:{a}\" -> \"{},{}:{b}\" [label=\"{m}\", style={style}];\n",
                            inc.from.0, inc.from.1, inc.to.0, inc.to.1
                        ));
                    }
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeReport {
    pub backend: &'static str,
    pub n: usize,
    pub bound: usize,
    pub dims: BTreeMap<String, usize>,
    pub lambda: f64,
    pub index: f64,
    pub axioms: AxiomReport,
    pub shift: ShiftReport,
    pub bratteli: Option<BratteliData>,
    pub bratteli_error: Option<String>,
    pub passed: bool,
}

/// Builds the lattice and runs every check.
pub fn lattice_report(b: &Backend, bound: usize, tol: f64, seed: u64) -> Result<LatticeReport> {
    let l = build_lattice(b, bound, tol)?;
    let axioms = verify_axioms_seeded(&l, tol, seed)?;
    let shift = shift_check(&l, tol.sqrt().max(tol));
    let (bratteli, bratteli_error) = match bratteli_seeded(&l, tol, seed) {
        Ok(bd) => (Some(bd), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let passed = axioms.passed && shift.passed && bratteli.is_some();
    Ok(LatticeReport {
        backend: b.kind(),
        n: b.n,
        bound,
        dims: l.dims().into_iter().map(|((i, j), d)| (format!("{i},{j}"), d)).collect(),
        lambda: l.lambda,
        index: l.index(),
        axioms,
        shift,
        bratteli,
        bratteli_error,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::samples::*;
    use crate::backends::Source;

    fn row0(l: &PopaLattice) -> Vec<usize> {
        (0..=l.bound).map(|j| l.cells[&(0, j)].dim()).collect()
    }

    #[test]
    fn catalan_row_for_q_one() {
        let l = build_lattice(&span_q(1.0), 4, 1e-9).unwrap();
        assert_eq!(row0(&l), vec![1, 1, 2, 5, 14]);
        assert!((l.index() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn index_for_q() {
        let l = build_lattice(&span_q(1.2), 3, 1e-9).unwrap();
        let d = 1.2f64.powi(2) + 1.2f64.powi(-2);
        assert!((l.index() - d * d).abs() < 1e-9);
    }

    #[test]
    fn s3_dims_match_characters() {
        let b = s3_irrep();
        let l = build_lattice(&b, 4, 1e-9).unwrap();
        for (&(i, j), span) in &l.cells {
            let w = iv(i, j);
            assert_eq!(span.dim() as u64, b.moment(&w.hat().concat(&w)).unwrap(), "({i},{j})");
        }
        assert_eq!(l.cells[&(0, 1)].dim(), 1);
        // π ⊗ π̄ = 1 ⊕ sign ⊕ π for the two-dimensional irrep
        assert_eq!(l.cells[&(0, 2)].dim(), 3);
    }

    #[test]
    fn diagonal_cells_are_scalars() {
        for b in [span_q(1.2), s3_irrep(), z2_dual()] {
            let l = build_lattice(&b, 3, 1e-9).unwrap();
            assert!((0..=3).all(|i| l.is_scalar_cell(i, i)));
        }
    }

    #[test]
    fn axioms_hold_for_samples() {
        for b in [span_q(1.0), span_q(1.2), s3_irrep()] {
            let l = build_lattice(&b, 4, 1e-9).unwrap();
            let rep = verify_axioms(&l, 1e-8).unwrap();
            assert!(rep.passed, "{}: {rep:?}", b.kind());
        }
    }

    #[test]
    fn broken_jones_projection_is_detected() {
        let mut l = build_lattice(&span_q(1.0), 3, 1e-9).unwrap();
        let e = l.jones[&2].clone();
        l.jones.insert(2, e.scale(c(0.9)));
        let rep = verify_axioms(&l, 1e-8).unwrap();
        assert!(!rep.passed);
        assert!(rep.jones_relations > 1e-3);
    }

    #[test]
    fn shifted_cells_coincide() {
        for b in [s3_irrep(), span_q(1.2)] {
            let l = build_lattice(&b, 5, 1e-9).unwrap();
            let rep = shift_check(&l, 1e-8);
            assert!(rep.passed, "{rep:?}");
            assert!(rep.pairs.iter().any(|p| p.cell == (0, 2)));
            assert!(rep.pairs.iter().any(|p| p.cell == (1, 3)));
            assert!(rep.pairs.iter().any(|p| p.cell == (1, 1)));
        }
    }

    #[test]
    fn temperley_lieb_summands() {
        let l = build_lattice(&span_q(1.0), 4, 1e-9).unwrap();
        let bd = bratteli(&l, 1e-9).unwrap();
        let get = |key| bd.cells.iter().find(|c| c.cell == key).unwrap();
        assert_eq!(get((0, 2)).summands, vec![1, 1]);
        let mut s = get((0, 4)).summands.clone();
        s.sort_unstable();
        assert_eq!(s, vec![1, 2, 3]);
        assert_eq!(get((1, 1)).summands, vec![1]);
    }

    #[test]
    fn bratteli_bookkeeping() {
        for b in [span_q(1.2), s3_irrep(), z2_dual()] {
            let l = build_lattice(&b, 4, 1e-9).unwrap();
            let bd = bratteli(&l, 1e-9).unwrap();
            for cell in &bd.cells {
                let total: usize = cell.summands.iter().map(|d| d * d).sum();
                assert_eq!(total, cell.dim);
                let mass: f64 = cell.summands.iter().zip(&cell.weights).map(|(&d, &w)| d as f64 * w).sum();
                assert!((mass - 1.0).abs() < 1e-9);
                assert!(cell.weights.iter().all(|&w| w > 0.0));
            }
            let dims: BTreeMap<_, _> = bd.cells.iter().map(|c| (c.cell, c.summands.clone())).collect();
            for inc in &bd.inclusions {
                let (small, big) = (&dims[&inc.from], &dims[&inc.to]);
                for (bi, &db) in big.iter().enumerate() {
                    let s: usize = small.iter().enumerate().map(|(a, &da)| inc.multiplicities[a][bi] * da).sum();
                    assert_eq!(s, db, "{:?} -> {:?}", inc.from, inc.to);
                }
            }
            let dot = bd.to_dot();
            assert!(dot.starts_with("digraph"));
        }
    }

    #[test]
    fn finite_group_trace_is_normalized_matrix_trace() {
        let b = s3_irrep();
        let l = build_lattice(&b, 3, 1e-9).unwrap();
        let Source::FiniteGroup(_) = &b.source else { unreachable!() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = l.cells[&(0, 3)].random_element(&mut rng);
        let t = l.trace(&x).unwrap();
        assert!((t - x.matrix.trace() / c(8.0)).norm() < 1e-12);
    }

    #[test]
    fn bound_guard() {
        assert!(build_lattice(&span_q(1.0), 6, 1e-9).is_err());
    }
}
