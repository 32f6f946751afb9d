//! Representations of the lattice on `H^{⊗[i,j]}`, their normalisation,
//! and the monoidal category generated by cups, caps and seed algebras.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::duality::{DualityMaps, QData};
use crate::error::{Error, Result};
use crate::lattice::{iv, PopaLattice};
use crate::moments::MomentTable;
use crate::tensorops::{
    apply_local, c, hermitian_eigen, kron_all, polar_left, random_unitary, unxi, CMat, CVec, LegSpace, OperatorSpan,
    TensorMap, VectorSpan,
};
use crate::words::{Letter, Word};

/// Smallest eigenvalue gap of `Q` accepted by [`normalize`].
pub const MIN_Q_GAP: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct PopaRepresentation {
    pub n: usize,
    pub bound: usize,
    pub cells: BTreeMap<(usize, usize), OperatorSpan>,
    pub jones_images: BTreeMap<usize, TensorMap>,
    pub lambda: f64,
}

impl PopaRepresentation {
    pub fn from_lattice(l: &PopaLattice) -> PopaRepresentation {
        PopaRepresentation {
            n: l.duality.n(),
            bound: l.bound,
            cells: l.cells.clone(),
            jones_images: l.jones.clone(),
            lambda: l.lambda,
        }
    }

    /// `ad(U_{i+1} ⊗ … ⊗ U_j)` on every cell; `unitaries[m]` acts on leg `m`.
    pub fn conjugate(&self, unitaries: &[CMat]) -> Result<PopaRepresentation> {
        if unitaries.len() < self.bound {
            return Err(Error::DimensionMismatch(format!("{} unitaries for {} legs", unitaries.len(), self.bound)));
        }
        let ad = |x: &TensorMap, i: usize, j: usize| {
            let u = kron_all(&unitaries[i..j]);
            TensorMap { matrix: &u * &x.matrix * u.adjoint(), ..x.clone() }
        };
        let cells = self
            .cells
            .iter()
            .map(|(&(i, j), s)| {
                let basis = s.basis.iter().map(|b| ad(b, i, j)).collect();
                ((i, j), OperatorSpan { domain: s.domain.clone(), codomain: s.codomain.clone(), basis })
            })
            .collect();
        let jones_images = self.jones_images.iter().map(|(&k, e)| (k, ad(e, k - 2, k))).collect();
        Ok(PopaRepresentation { cells, jones_images, ..self.clone() })
    }

    /// Random unitaries on legs `first..bound`, identity before.
    pub fn random_leg_unitaries(&self, first: usize, seed: u64) -> Vec<CMat> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.bound)
            .map(|m| if m < first { CMat::identity(self.n, self.n) } else { random_unitary(&mut rng, self.n) })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Normalization {
    pub rep: PopaRepresentation,
    pub q: QData,
    /// `unitaries[m]` acts on leg `m`; leg 0 is never moved.
    pub unitaries: Vec<CMat>,
    /// `‖(F*F)(E*E) − λ·id‖` from the first two Jones images.
    pub lemma_residual: f64,
    /// `|Tr(Q²) − λ^{−1/2}|`.
    pub trace_residual: f64,
}

/// Multiplies by a phase making the trace real and non-negative.
fn fix_phase(u: CMat) -> CMat {
    let t = u.trace();
    if t.norm() > 1e-8 {
        u * (t.conj() / c(t.norm()))
    } else {
        u
    }
}

/// Unit vector spanning a rank-one projection.
fn rank_one_vector(e: &TensorMap, tol: f64, k: usize) -> Result<CVec> {
    let sv = e.matrix.singular_values();
    let mut s: Vec<f64> = sv.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    if s.is_empty() || s[0] <= 0.0 || (s.len() > 1 && s[1] > tol * s[0]) {
        return Err(Error::NotNormalizable(format!("image of e_{k} is not rank one")));
    }
    let (vals, vecs) = hermitian_eigen(&e.matrix);
    let top = (0..vals.len()).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("non-empty");
    Ok(vecs.column(top).into_owned())
}

fn invertible(m: &CMat, tol: f64, what: &str) -> Result<CMat> {
    let sv = m.singular_values();
    if sv.min() <= tol * sv.max() {
        return Err(Error::InconsistentRepresentation(format!("{what} is singular")));
    }
    m.clone().try_inverse().ok_or_else(|| Error::InconsistentRepresentation(format!("{what} is singular")))
}

/// Conjugates legs `1, 2, …` so that every Jones image becomes the
/// projection onto `ξ(Q)` (even) or `ξ(Q⁻ᵀ)` (odd).
pub fn normalize(rep: &PopaRepresentation, tol: f64) -> Result<Normalization> {
    let n = rep.n;
    let e2 = rep.jones_images.get(&2).ok_or_else(|| Error::Domain("representation has no e_2".into()))?;
    let v = rank_one_vector(e2, tol, 2)?;
    let e_mat = unxi(&v, n);
    invertible(&e_mat, tol, "E")?;
    let (p, u) = polar_left(&e_mat);
    let q = QData::normalized(&p, tol)?;
    if q.eigenvalues().windows(2).any(|w| w[1] - w[0] > tol && w[1] - w[0] < MIN_Q_GAP) {
        return Err(Error::NotNormalizable("Q has a near-degenerate spectrum".into()));
    }
    let q_inv_t = q.inverse().transpose();
    let mut unitaries = vec![CMat::identity(n, n); rep.bound.max(2)];
    unitaries[1] = fix_phase(u.map(|z| z.conj()));

    let mut lemma_residual = 0.0;
    let mut trace_residual = 0.0;
    for s in 3..=rep.bound {
        let es = rep.jones_images.get(&s).ok_or_else(|| Error::Domain(format!("representation has no e_{s}")))?;
        let w = kron_all([&unitaries[s - 2], &CMat::identity(n, n)]);
        let cur = TensorMap { matrix: &w * &es.matrix * w.adjoint(), ..es.clone() };
        let nu = rank_one_vector(&cur, tol, s)?;
        let big_n = unxi(&nu, n);
        if s == 3 {
            let q2 = (&q.q * &q.q).trace().re;
            let e_unit = &q.q * c(1.0 / q2.sqrt());
            let f = big_n.transpose();
            let prod = (f.adjoint() * &f) * (e_unit.adjoint() * &e_unit);
            lemma_residual = (prod - CMat::identity(n, n) * c(rep.lambda)).norm();
            trace_residual = (q2 - rep.lambda.powf(-0.5)).abs();
        }
        let target = if s % 2 == 0 { &q.q } else { &q_inv_t };
        let m = invertible(&big_n, tol, "F")? * target;
        let (_, wu) = polar_left(&m);
        unitaries[s - 1] = fix_phase(wu.transpose());
    }
    unitaries.truncate(rep.bound);
    let out = rep.conjugate(&unitaries)?;
    Ok(Normalization { rep: out, q, unitaries, lemma_residual, trace_residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizedCheck {
    pub jones_residual: f64,
    pub trace_balance: f64,
    pub trace_lambda: f64,
    pub padding_residual: f64,
    pub passed: bool,
}

/// Checks the normal form against the Jones projections built from `q`.
pub fn check_normalized(rep: &PopaRepresentation, q: &QData, tol: f64) -> Result<NormalizedCheck> {
    let dm = DualityMaps::new(QData::unnormalized(&q.q, tol)?);
    let mut jones_residual: f64 = 0.0;
    for (&k, e) in &rep.jones_images {
        jones_residual = jones_residual.max((&e.matrix - &dm.jones(k).matrix).norm());
    }
    let q2 = (&q.q * &q.q).trace().re;
    let qi = q.inverse();
    let qm2 = (&qi * &qi).trace().re;
    let mut padding_residual: f64 = 0.0;
    for (&(i, j), span) in &rep.cells {
        for (&(k, l), outer) in &rep.cells {
            if k <= i && j <= l && (i - k) + (l - j) == 1 {
                for b in &span.basis {
                    let padded = crate::tensorops::pad(b, &iv(k, i), &iv(j, l));
                    padding_residual = padding_residual.max(outer.relative_residual(&padded));
                }
            }
        }
    }
    let trace_balance = (q2 - qm2).abs();
    let trace_lambda = (q2 - rep.lambda.powf(-0.5)).abs();
    let passed = jones_residual <= 10.0 * tol && trace_balance <= tol * q2 && trace_lambda <= tol * q2 && padding_residual <= tol;
    Ok(NormalizedCheck { jones_residual, trace_balance, trace_lambda, padding_residual, passed })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Rounds with a barrier; all updates of a round see the previous state.
    Synchronous,
    /// Words processed in reverse shortlex order, updates applied at once.
    SequentialReverse,
}

#[derive(Clone, Debug)]
pub struct ClosureOptions {
    /// Longest word whose space `Hom(1, H^{⊗w})` is tracked.
    pub window: usize,
    pub max_rounds: usize,
    pub schedule: Schedule,
    pub seed: u64,
    pub tol: f64,
}

impl ClosureOptions {
    pub fn new(window: usize, tol: f64) -> ClosureOptions {
        ClosureOptions { window, max_rounds: 64, schedule: Schedule::Synchronous, seed: 7, tol }
    }
}

/// Seed algebras `A_x` for alternating `x` with `1 ≤ |x| ≤ max_len`.
pub fn seeds_from_lattice(l: &PopaLattice, max_len: usize) -> BTreeMap<Word, OperatorSpan> {
    let mut seeds = BTreeMap::new();
    for start in 0..2 {
        for len in 1..=max_len {
            if let Some(span) = l.cells.get(&(start, start + len)) {
                seeds.insert(iv(start, start + len), span.clone());
            }
        }
    }
    seeds
}

/// The category generated by the duality maps and the seed algebras, seen
/// through the spaces `V(w) = Hom(1, H^{⊗w})`.
#[derive(Clone, Debug)]
pub struct ClosureCategory {
    pub duality: DualityMaps,
    pub seeds: BTreeMap<Word, OperatorSpan>,
    pub window: usize,
    pub rounds: usize,
    spaces: BTreeMap<Word, VectorSpan>,
    tol: f64,
}

/// One generator applied at one position.
enum Move {
    Cup { pos: usize, letter: Letter },
    Cap { pos: usize },
    Seed { pos: usize, op: CMat },
}

impl ClosureCategory {
    pub fn dim(&self, w: &Word) -> Result<usize> {
        self.spaces
            .get(w)
            .map(VectorSpan::len)
            .ok_or_else(|| Error::Domain(format!("word '{w}' is outside the closure window {}", self.window)))
    }

    pub fn vectors(&self, w: &Word) -> Result<&[CVec]> {
        self.spaces
            .get(w)
            .map(VectorSpan::vectors)
            .ok_or_else(|| Error::Domain(format!("word '{w}' is outside the closure window {}", self.window)))
    }

    /// `Hom(x, y)` via Frobenius reciprocity from `V(x̂ y)`.
    pub fn hom(&self, x: &Word, y: &Word) -> Result<OperatorSpan> {
        let w = x.hat().concat(y);
        let maps = self.vectors(&w)?.iter().map(|v| self.duality.vector_to_hom(x, y, v)).collect::<Result<Vec<_>>>()?;
        let n = self.duality.n();
        crate::tensorops::orthonormalize(&LegSpace::new(n, x.clone()), &LegSpace::new(n, y.clone()), &maps, self.tol)
    }

    pub fn dims(&self) -> BTreeMap<Word, usize> {
        self.spaces.iter().map(|(w, s)| (w.clone(), s.len())).collect()
    }
}

fn moves_from(w: &Word, window: usize, seed_ops: &BTreeMap<Word, Vec<CMat>>, seed_len: usize) -> Vec<(Word, Move)> {
    let mut out = Vec::new();
    let letters = w.letters();
    if w.len() + 2 <= window {
        for pos in 0..=w.len() {
            for letter in [Letter::Alpha, Letter::Beta] {
                let pair = Word::new(vec![letter, letter.hat()]);
                out.push((w.insert(pos, &pair), Move::Cup { pos, letter }));
            }
        }
    }
    for pos in 0..w.len().saturating_sub(1) {
        if letters[pos] != letters[pos + 1] {
            out.push((w.remove_pair(pos), Move::Cap { pos }));
        }
    }
    // maximal windows only: smaller seed algebras sit inside them
    for (start, end) in w.alternating_runs() {
        let len = (end - start).min(seed_len);
        for pos in start..=end - len {
            let y = w.subword(pos, pos + len);
            if let Some(ops) = seed_ops.get(&y) {
                for op in ops {
                    out.push((w.clone(), Move::Seed { pos, op: op.clone() }));
                }
            }
        }
    }
    out
}

fn apply_move(dm: &DualityMaps, w: &Word, v: &CVec, mv: &Move) -> CVec {
    let n = dm.n();
    let pw = |k: usize| n.pow(k as u32);
    match mv {
        Move::Cup { pos, letter } => {
            let m = dm.cup_matrix(*letter);
            let col = CMat::from_fn(n * n, 1, |r, _| m[(r / n, r % n)]);
            apply_local(v, pw(*pos), pw(w.len() - pos), &col)
        }
        Move::Cap { pos } => {
            let second = w.letters()[pos + 1];
            let cap = dm.cap(&Word::letter(second)).matrix;
            apply_local(v, pw(*pos), pw(w.len() - pos - 2), &cap)
        }
        Move::Seed { pos, op } => {
            let len = (op.nrows() as f64).log(n as f64).round() as usize;
            apply_local(v, pw(*pos), pw(w.len() - pos - len), op)
        }
    }
}

/// Adds candidates to `span`; returns the newly added frame vectors.
fn absorb(span: &mut VectorSpan, cands: &[CVec], tol: f64) -> Vec<CVec> {
    let before = span.len();
    if cands.is_empty() {
        return Vec::new();
    }
    let keep: Vec<&CVec> = if span.is_empty() {
        cands.iter().collect()
    } else {
        let b = span.as_matrix();
        let cm = CMat::from_columns(cands);
        let r = &cm - &b * (b.adjoint() * &cm);
        cands.iter().enumerate().filter(|(k, v)| r.column(*k).norm() > 0.5 * tol * v.norm().max(1.0)).map(|(_, v)| v).collect()
    };
    for v in keep {
        span.try_add(v, tol);
    }
    span.vectors()[before..].to_vec()
}

/// Closes `V(e) = C` under cup insertion, cap contraction and the seed
/// algebras acting on alternating factors, for words up to `opts.window`.
pub fn closure(dm: &DualityMaps, seeds: &BTreeMap<Word, OperatorSpan>, opts: &ClosureOptions) -> Result<ClosureCategory> {
    let n = dm.n();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // one random element and its adjoint generate a seed algebra
    let seed_ops: BTreeMap<Word, Vec<CMat>> = seeds
        .iter()
        .map(|(w, span)| {
            let a = span.random_element(&mut rng).matrix;
            let ops = if span.dim() <= 1 { Vec::new() } else { vec![a.adjoint(), a] };
            (w.clone(), ops)
        })
        .collect();
    let seed_len = seeds.keys().map(Word::len).max().unwrap_or(0);
    let mut spaces: BTreeMap<Word, VectorSpan> =
        Word::all_up_to(opts.window).into_iter().map(|w| { let d = n.pow(w.len() as u32); (w, VectorSpan::new(d)) }).collect();
    let one = CVec::from_element(1, c(1.0));
    spaces.get_mut(&Word::empty()).expect("empty word").try_add(&one, opts.tol);
    let mut frontier: BTreeMap<Word, Vec<CVec>> = BTreeMap::from([(Word::empty(), vec![one])]);
    let mut rounds = 0;
    while !frontier.is_empty() {
        if rounds >= opts.max_rounds {
            return Err(Error::ClosureDidNotConverge { rounds });
        }
        rounds += 1;
        match opts.schedule {
            Schedule::Synchronous => {
                let produced: Vec<Vec<(Word, CVec)>> = frontier
                    .par_iter()
                    .map(|(w, vs)| {
                        moves_from(w, opts.window, &seed_ops, seed_len)
                            .iter()
                            .flat_map(|(target, mv)| vs.iter().map(move |v| (target.clone(), apply_move(dm, w, v, mv))))
                            .collect()
                    })
                    .collect();
                let mut grouped: BTreeMap<Word, Vec<CVec>> = BTreeMap::new();
                for (target, v) in produced.into_iter().flatten() {
                    grouped.entry(target).or_default().push(v);
                }
                let mut work: Vec<(Word, VectorSpan, Vec<CVec>)> = grouped
                    .into_iter()
                    .map(|(t, cands)| {
                        let span = spaces.remove(&t).expect("target inside window");
                        (t, span, cands)
                    })
                    .collect();
                let added: Vec<Vec<CVec>> =
                    work.par_iter_mut().map(|(_, span, cands)| absorb(span, cands, opts.tol)).collect();
                frontier = BTreeMap::new();
                for ((t, span, _), new) in work.into_iter().zip(added) {
                    spaces.insert(t.clone(), span);
                    if !new.is_empty() {
                        frontier.insert(t, new);
                    }
                }
            }
            Schedule::SequentialReverse => {
                let mut next: BTreeMap<Word, Vec<CVec>> = BTreeMap::new();
                for (w, vs) in frontier.iter().rev() {
                    for (target, mv) in moves_from(w, opts.window, &seed_ops, seed_len) {
                        let cands: Vec<CVec> = vs.iter().map(|v| apply_move(dm, w, v, &mv)).collect();
                        let span = spaces.get_mut(&target).expect("target inside window");
                        let new = absorb(span, &cands, opts.tol);
                        if !new.is_empty() {
                            next.entry(target).or_default().extend(new);
                        }
                    }
                }
                frontier = next;
            }
        }
    }
    Ok(ClosureCategory { duality: dm.clone(), seeds: seeds.clone(), window: opts.window, rounds, spaces, tol: opts.tol })
}

/// `w ↦ dim Hom(1, H^{⊗w})` in the closure, for `|w| ≤ max_len`.
pub fn universal_hom_dims(cc: &ClosureCategory, max_len: usize) -> Result<MomentTable> {
    if max_len > cc.window {
        return Err(Error::Domain(format!("max_len {max_len} exceeds the closure window {}", cc.window)));
    }
    let entries = Word::all_up_to(max_len).into_iter().map(|w| {
        let d = cc.dim(&w).expect("inside window") as u64;
        (w, d)
    });
    Ok(MomentTable { max_len, entries: entries.collect() })
}
