//! Sources of intertwiner spaces `Hom(v^{⊗x}, v^{⊗y})` for a fixed
//! corepresentation `v`.

use std::collections::HashMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::duality::{DualityMaps, QData, QSpec};
use crate::error::{round_checked, Error, Result};
use crate::group::{Elem, FiniteGroup, Group, GroupSpec};
use crate::tensorops::{
    c, cmat_serde, column_basis, kron_all, random_matrix, CMat, CVec, LegSpace, OperatorSpan, TensorMap, VectorSpan,
    C64,
};
use crate::words::{Letter, Word};

/// Longest word for which span-generated moments are computed.
pub const MAX_SPAN_Q_WORD: usize = 12;

/// Backend file contents.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BackendSpec {
    FiniteGroup { mult_table: Vec<Vec<usize>>, rep: Vec<Vec<Vec<[f64; 2]>>> },
    DualGroup { group: GroupSpec, generators: Vec<Value> },
    SpanQ(QSpec),
}

#[derive(Clone, Debug)]
pub struct FiniteGroupRep {
    pub group: FiniteGroup,
    pub rep: Vec<CMat>,
    pub n: usize,
    characters: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct DualGroupRep {
    pub group: Group,
    pub generators: Vec<Elem>,
}

#[derive(Clone, Debug)]
pub struct SpanQRep {
    pub duality: DualityMaps,
}

#[derive(Clone, Debug)]
pub enum Source {
    FiniteGroup(FiniteGroupRep),
    DualGroup(DualGroupRep),
    SpanQ(SpanQRep),
}

#[derive(Clone, Debug)]
pub struct Backend {
    pub source: Source,
    pub n: usize,
    pub duality: DualityMaps,
}

/// FNV-1a, used to derive per-space seeds that do not depend on the platform.
pub(crate) fn stable_hash(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        for b in p.bytes().chain(std::iter::once(0xff)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

impl FiniteGroupRep {
    pub fn new(group: FiniteGroup, rep: Vec<CMat>, tol: f64) -> Result<FiniteGroupRep> {
        if rep.len() != group.order() {
            return Err(Error::Invalid(format!("{} matrices for a group of order {}", rep.len(), group.order())));
        }
        let n = rep[group.identity].nrows();
        for (g, m) in rep.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Invalid(format!("matrix of element {g} is not {n}x{n}")));
            }
            if (m * m.adjoint() - CMat::identity(n, n)).norm() > tol.max(1e-9) {
                return Err(Error::InconsistentRepresentation(format!("matrix of element {g} is not unitary")));
            }
        }
        for a in 0..group.order() {
            for b in 0..group.order() {
                let ab = group.table[a][b];
                if (&rep[a] * &rep[b] - &rep[ab]).norm() > tol.max(1e-9) {
                    return Err(Error::InconsistentRepresentation(format!("pi({a})pi({b}) != pi({ab})")));
                }
            }
        }
        let characters = rep.iter().map(|m| m.trace()).collect();
        Ok(FiniteGroupRep { group, rep, n, characters })
    }

    pub fn characters(&self) -> &[C64] {
        &self.characters
    }

    /// `ρ_w(g)`: `π(g)` on α-legs, `conj π(g)` on β-legs.
    pub fn rho(&self, w: &Word, g: usize) -> CMat {
        let conj = self.rep[g].map(|z| z.conj());
        kron_all(w.letters().iter().map(|l| match l {
            Letter::Alpha => &self.rep[g],
            Letter::Beta => &conj,
        }))
    }

    /// Range of the averaging projector `T ↦ |G|⁻¹ Σ ρ_y(g) T ρ_x(g)⁻¹`,
    /// sampled on seeded random probes until the rank stops growing.
    pub fn hom_basis(&self, x: &Word, y: &Word, tol: f64) -> Result<OperatorSpan> {
        let (dx, dy) = (self.n.pow(x.len() as u32), self.n.pow(y.len() as u32));
        let rx: Vec<CMat> = (0..self.group.order()).map(|g| self.rho(x, g).adjoint()).collect();
        let ry: Vec<CMat> = (0..self.group.order()).map(|g| self.rho(y, g)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(stable_hash(&["finite", &x.to_string(), &y.to_string()]));
        let mut span = VectorSpan::new(dx * dy);
        let scale = c(1.0 / self.group.order() as f64);
        let mut misses = 0;
        while misses < 2 && span.len() < dx * dy {
            let t = random_matrix(&mut rng, dy, dx);
            let mut avg = CMat::zeros(dy, dx);
            for (a, b) in ry.iter().zip(&rx) {
                avg += a * &t * b;
            }
            avg *= scale;
            if span.try_add(&CVec::from_column_slice(avg.as_slice()), tol) {
                misses = 0;
            } else {
                misses += 1;
            }
        }
        Ok(OperatorSpan::from_frame(LegSpace::new(self.n, x.clone()), LegSpace::new(self.n, y.clone()), span.vectors()))
    }

    /// Gaussian-integer characters, when every character value is one.
    fn integral_characters(&self) -> Option<Vec<(i128, i128)>> {
        self.characters
            .iter()
            .map(|z| {
                let (re, im) = (z.re.round(), z.im.round());
                ((z.re - re).abs() < 1e-9 && (z.im - im).abs() < 1e-9).then_some((re as i128, im as i128))
            })
            .collect()
    }

    /// `|G|⁻¹ Σ_g Π_k χ_k(g)` with `χ_α = χ`, `χ_β = conj χ`.
    pub fn moment(&self, w: &Word) -> Result<u64> {
        let order = self.group.order() as i128;
        if let Some(chars) = self.integral_characters() {
            let (mut sr, mut si) = (0i128, 0i128);
            for &(re, im) in &chars {
                let (mut pr, mut pi) = (1i128, 0i128);
                for l in w.letters() {
                    let (cr, ci) = if *l == Letter::Alpha { (re, im) } else { (re, -im) };
                    (pr, pi) = (pr * cr - pi * ci, pr * ci + pi * cr);
                }
                sr += pr;
                si += pi;
            }
            if si != 0 || sr % order != 0 || sr < 0 {
                return Err(Error::InconsistentRepresentation(format!("character sum {sr}+{si}i for '{w}' is not a multiple of |G|")));
            }
            return Ok((sr / order) as u64);
        }
        let mut sum = C64::new(0.0, 0.0);
        for z in &self.characters {
            let mut p = c(1.0);
            for l in w.letters() {
                p *= if *l == Letter::Alpha { *z } else { z.conj() };
            }
            sum += p;
        }
        sum /= c(order as f64);
        if sum.im.abs() > 1e-6 {
            return Err(Error::InconsistentRepresentation(format!("moment of '{w}' has imaginary part {}", sum.im)));
        }
        let v = round_checked(sum.re, 1e-6, || format!("character moment of '{w}'"))?;
        u64::try_from(v).map_err(|_| Error::InconsistentRepresentation(format!("negative moment for '{w}'")))
    }

    /// `Σ_g (Re χ(g))^k`; exact when the characters are Gaussian integers.
    pub fn real_character_power_sum(&self, k: usize) -> Option<i128> {
        let chars = self.integral_characters()?;
        Some(chars.iter().map(|&(re, _)| re.pow(k as u32)).sum())
    }

    pub fn real_character_power_sum_f64(&self, k: usize) -> f64 {
        self.characters.iter().map(|z| z.re.powi(k as i32)).sum()
    }
}

impl DualGroupRep {
    pub fn new(group: Group, generators: Vec<Elem>) -> Result<DualGroupRep> {
        if generators.is_empty() {
            return Err(Error::Invalid("a dual-group backend needs at least one generator".into()));
        }
        Ok(DualGroupRep { group, generators })
    }

    pub fn n(&self) -> usize {
        self.generators.len()
    }

    fn step(&self, l: Letter, i: usize) -> Elem {
        match l {
            Letter::Alpha => self.generators[i].clone(),
            Letter::Beta => self.group.inv(&self.generators[i]),
        }
    }

    /// `word_w(I)` for every multi-index `I`, in basis order.
    pub fn leg_elements(&self, w: &Word) -> Vec<Elem> {
        let mut cur = vec![self.group.identity()];
        for &l in w.letters() {
            let steps: Vec<Elem> = (0..self.n()).map(|i| self.step(l, i)).collect();
            cur = cur.iter().flat_map(|g| steps.iter().map(move |s| (g, s))).map(|(g, s)| self.group.mul(g, s)).collect();
        }
        cur
    }

    /// Matrix units `E_{J,I}` with `word_y(J) = word_x(I)`.
    pub fn hom_basis(&self, x: &Word, y: &Word) -> OperatorSpan {
        let n = self.n();
        let ex = self.leg_elements(x);
        let ey = self.leg_elements(y);
        let mut by_elem: HashMap<&Elem, Vec<usize>> = HashMap::new();
        for (j, g) in ey.iter().enumerate() {
            by_elem.entry(g).or_default().push(j);
        }
        let (dom, cod) = (LegSpace::new(n, x.clone()), LegSpace::new(n, y.clone()));
        let mut basis = Vec::new();
        for (i, g) in ex.iter().enumerate() {
            if let Some(js) = by_elem.get(g) {
                for &j in js {
                    let mut m = CMat::zeros(ey.len(), ex.len());
                    m[(j, i)] = c(1.0);
                    basis.push(TensorMap { domain: dom.clone(), codomain: cod.clone(), matrix: m });
                }
            }
        }
        basis.sort_by_key(|t| {
            let k = t.matrix.iter().position(|z| z.re != 0.0).expect("unit");
            (k % ey.len(), k / ey.len())
        });
        OperatorSpan { domain: dom, codomain: cod, basis }
    }

    /// Number of multi-indices of `w` reaching each group element.
    pub fn reach_counts(&self, w: &[Letter]) -> HashMap<Elem, u128> {
        let mut cur: HashMap<Elem, u128> = HashMap::from([(self.group.identity(), 1)]);
        for &l in w {
            let steps: Vec<Elem> = (0..self.n()).map(|i| self.step(l, i)).collect();
            let mut next: HashMap<Elem, u128> = HashMap::with_capacity(cur.len() * steps.len());
            for (g, k) in &cur {
                for s in &steps {
                    *next.entry(self.group.mul(g, s)).or_default() += k;
                }
            }
            cur = next;
        }
        cur
    }

    /// Meet-in-the-middle count of multi-indices whose word is the identity.
    pub fn moment(&self, w: &Word) -> Result<u64> {
        let letters = w.letters();
        let mid = letters.len() / 2;
        let left = self.reach_counts(&letters[..mid]);
        let right = self.reach_counts(&letters[mid..]);
        let total: u128 = left
            .iter()
            .filter_map(|(g, k)| right.get(&self.group.inv(g)).map(|r| k * r))
            .sum();
        u64::try_from(total).map_err(|_| Error::Domain(format!("moment of '{w}' overflows u64")))
    }

    /// Walks of length `k` with steps `g_i^{±1}` returning to the identity.
    pub fn closed_walks(&self, k: usize) -> u128 {
        let steps: Vec<Elem> =
            (0..self.n()).flat_map(|i| [self.step(Letter::Alpha, i), self.step(Letter::Beta, i)]).collect();
        let walk = |len: usize| {
            let mut cur: HashMap<Elem, u128> = HashMap::from([(self.group.identity(), 1)]);
            for _ in 0..len {
                let mut next: HashMap<Elem, u128> = HashMap::with_capacity(cur.len() * 2);
                for (g, m) in &cur {
                    for s in &steps {
                        *next.entry(self.group.mul(g, s)).or_default() += m;
                    }
                }
                cur = next;
            }
            cur
        };
        let half = walk(k / 2);
        let rest = if k % 2 == 0 { half.clone() } else { walk(k - k / 2) };
        half.iter().filter_map(|(g, m)| rest.get(&self.group.inv(g)).map(|r| m * r)).sum()
    }

    /// The subgroup `⟨g₁⁻¹g_j⟩` generators.
    pub fn difference_generators(&self) -> Vec<Elem> {
        let g1inv = self.group.inv(&self.generators[0]);
        self.generators[1..].iter().map(|g| self.group.mul(&g1inv, g)).collect()
    }

    /// `Z * Γ` with generators `z·g_i`.
    pub fn free_product_with_z(&self) -> DualGroupRep {
        let big = Group::FreeProduct(vec![Group::FreeAbelian { rank: 1 }, self.group.clone()]);
        let z = big.inject(0, Elem::Abelian(vec![1])).expect("factor 0");
        let gens = self
            .generators
            .iter()
            .map(|g| big.mul(&z, &big.inject(1, g.clone()).expect("factor 1")))
            .collect();
        DualGroupRep { group: big, generators: gens }
    }

    /// The tilde group: `Z * Γ` with generators `z·g_i` when `g₁ ∈ H`, and
    /// otherwise `Z * H ⊂ Z * Γ` with generators `z, z·g₁⁻¹g₂, …, z·g₁⁻¹g_n`.
    pub fn tilde_group(&self) -> Result<TildeGroup> {
        let h = self.difference_generators();
        if self.group.subgroup_contains(&h, &self.generators[0])? {
            return Ok(TildeGroup { case: TildeCase::WholeGroup, rep: self.free_product_with_z() });
        }
        let big = Group::FreeProduct(vec![Group::FreeAbelian { rank: 1 }, self.group.clone()]);
        let z = big.inject(0, Elem::Abelian(vec![1])).expect("factor 0");
        let mut gens = vec![z.clone()];
        for d in h {
            gens.push(big.mul(&z, &big.inject(1, d)?));
        }
        Ok(TildeGroup { case: TildeCase::ProperSubgroup, rep: DualGroupRep { group: big, generators: gens } })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TildeCase {
    WholeGroup,
    ProperSubgroup,
}

#[derive(Clone, Debug)]
pub struct TildeGroup {
    pub case: TildeCase,
    pub rep: DualGroupRep,
}

pub fn tilde_group(b: &DualGroupRep) -> Result<TildeGroup> {
    b.tilde_group()
}

impl SpanQRep {
    /// Non-crossing pairing vectors spanning `Hom(1, v^{⊗w})`; each pair
    /// joins an `α` and a `β` through the matching cup.
    pub fn pairing_vectors(&self, w: &Word) -> Vec<CVec> {
        let n = self.duality.n();
        let letters = w.letters();
        if letters.is_empty() {
            return vec![CVec::from_element(1, c(1.0))];
        }
        if w.balance() != 0 {
            return Vec::new();
        }
        let first = letters[0];
        let m = self.duality.cup_matrix(first);
        let mut out = Vec::new();
        for j in (1..letters.len()).step_by(2) {
            if letters[j] != first.hat() {
                continue;
            }
            let inner = self.pairing_vectors(&w.subword(1, j));
            if inner.is_empty() {
                continue;
            }
            let rest = self.pairing_vectors(&w.subword(j + 1, letters.len()));
            for iv in &inner {
                for rv in &rest {
                    let (di, dr) = (iv.len(), rv.len());
                    let mut v = CVec::zeros(n * di * n * dr);
                    for a in 0..n {
                        for b in 0..n {
                            let mab = m[(a, b)];
                            if mab.norm_sqr() == 0.0 {
                                continue;
                            }
                            for (ii, iz) in iv.iter().enumerate() {
                                let base = ((a * di + ii) * n + b) * dr;
                                let f = mab * iz;
                                for (ri, rz) in rv.iter().enumerate() {
                                    v[base + ri] = f * rz;
                                }
                            }
                        }
                    }
                    out.push(v);
                }
            }
        }
        out
    }

    /// Orthonormal basis of `Hom(1, v^{⊗w})`.
    pub fn invariant_vectors(&self, w: &Word, tol: f64) -> Result<Vec<CVec>> {
        if w.len() > MAX_SPAN_Q_WORD {
            return Err(Error::Unsupported(format!(
                "span-generated spaces are limited to words of length {MAX_SPAN_Q_WORD}, got '{w}'"
            )));
        }
        let vecs = self.pairing_vectors(w);
        if vecs.is_empty() {
            return Ok(Vec::new());
        }
        let basis = column_basis(&CMat::from_columns(&vecs), tol);
        Ok(basis.column_iter().map(|c| c.into_owned()).collect())
    }

    pub fn hom_basis(&self, x: &Word, y: &Word, tol: f64) -> Result<OperatorSpan> {
        let n = self.duality.n();
        let vecs = self.invariant_vectors(&x.hat().concat(y), tol)?;
        let maps = vecs.iter().map(|v| self.duality.vector_to_hom(x, y, v)).collect::<Result<Vec<_>>>()?;
        crate::tensorops::orthonormalize(&LegSpace::new(n, x.clone()), &LegSpace::new(n, y.clone()), &maps, tol)
    }

    pub fn moment(&self, w: &Word) -> Result<u64> {
        Ok(self.invariant_vectors(w, 1e-9)?.len() as u64)
    }
}

impl Backend {
    pub fn from_spec(spec: &BackendSpec, tol: f64) -> Result<Backend> {
        match spec {
            BackendSpec::FiniteGroup { mult_table, rep } => {
                let group = FiniteGroup::new(mult_table.clone())?;
                let mats = rep.iter().map(|m| cmat_serde::from_rows(m).map_err(Error::Invalid)).collect::<Result<Vec<_>>>()?;
                Ok(Backend::finite_group(FiniteGroupRep::new(group, mats, tol)?))
            }
            BackendSpec::DualGroup { group, generators } => {
                let group = Group::from_spec(group)?;
                let gens = generators.iter().map(|g| group.parse_elem(g)).collect::<Result<Vec<_>>>()?;
                Ok(Backend::dual_group(DualGroupRep::new(group, gens)?))
            }
            BackendSpec::SpanQ(q) => Ok(Backend::span_q(DualityMaps::new(QData::from_spec(q, tol)?))),
        }
    }

    pub fn to_spec(&self) -> BackendSpec {
        match &self.source {
            Source::FiniteGroup(f) => BackendSpec::FiniteGroup {
                mult_table: f.group.table.clone(),
                rep: f.rep.iter().map(cmat_serde::to_rows).collect(),
            },
            Source::DualGroup(d) => BackendSpec::DualGroup {
                group: d.group.to_spec(),
                generators: d.generators.iter().map(|g| d.group.elem_to_json(g)).collect(),
            },
            Source::SpanQ(s) => BackendSpec::SpanQ(s.duality.q.to_spec()),
        }
    }

    pub fn from_json(text: &str, tol: f64) -> Result<Backend> {
        let spec: BackendSpec = serde_json::from_str(text)?;
        Backend::from_spec(&spec, tol)
    }

    pub fn load(path: &Path, tol: f64) -> Result<Backend> {
        Backend::from_json(&std::fs::read_to_string(path)?, tol)
    }

    pub fn finite_group(f: FiniteGroupRep) -> Backend {
        let n = f.n;
        Backend { source: Source::FiniteGroup(f), n, duality: DualityMaps::identity(n) }
    }

    pub fn dual_group(d: DualGroupRep) -> Backend {
        let n = d.n();
        Backend { source: Source::DualGroup(d), n, duality: DualityMaps::identity(n) }
    }

    pub fn span_q(duality: DualityMaps) -> Backend {
        let n = duality.n();
        Backend { source: Source::SpanQ(SpanQRep { duality: duality.clone() }), n, duality }
    }

    pub fn kind(&self) -> &'static str {
        match self.source {
            Source::FiniteGroup(_) => "finite_group",
            Source::DualGroup(_) => "dual_group",
            Source::SpanQ(_) => "span_q",
        }
    }

    pub fn is_group(&self) -> bool {
        !matches!(self.source, Source::SpanQ(_))
    }

    pub fn hom_basis(&self, x: &Word, y: &Word, tol: f64) -> Result<OperatorSpan> {
        match &self.source {
            Source::FiniteGroup(f) => f.hom_basis(x, y, tol),
            Source::DualGroup(d) => Ok(d.hom_basis(x, y)),
            Source::SpanQ(s) => s.hom_basis(x, y, tol),
        }
    }

    /// `dim Hom(1, v^{⊗w})`.
    pub fn moment(&self, w: &Word) -> Result<u64> {
        match &self.source {
            Source::FiniteGroup(f) => f.moment(w),
            Source::DualGroup(d) => d.moment(w),
            Source::SpanQ(s) => s.moment(w),
        }
    }

    /// Longest word for which [`Backend::moment`] is available.
    pub fn max_moment_len(&self) -> Option<usize> {
        match self.source {
            Source::SpanQ(_) => Some(MAX_SPAN_Q_WORD),
            _ => None,
        }
    }
}

pub fn hom_basis(b: &Backend, x: &Word, y: &Word, tol: f64) -> Result<OperatorSpan> {
    b.hom_basis(x, y, tol)
}

pub fn moment(b: &Backend, w: &Word) -> Result<u64> {
    b.moment(w)
}

pub mod samples {
    //! Small backends used throughout tests, examples and the data files.
    use super::*;
    use crate::tensorops::C64;

    /// Multiplication table of `S₃` on permutations of `{0,1,2}` in
    /// lexicographic order, `(p·q)(i) = p(q(i))`.
    pub fn s3_table() -> Vec<Vec<usize>> {
        let perms: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let idx = |p: [usize; 3]| perms.iter().position(|&q| q == p).expect("permutation");
        perms.iter().map(|p| perms.iter().map(|q| idx([p[q[0]], p[q[1]], p[q[2]]])).collect()).collect()
    }

    /// The two-dimensional irreducible representation of `S₃`, realised on
    /// the sum-zero plane of the permutation representation.
    pub fn s3_irrep() -> Backend {
        let perms: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let s2 = 2f64.sqrt();
        let s6 = 6f64.sqrt();
        // orthonormal basis of {x : Σx = 0}
        let basis = [[1.0 / s2, -1.0 / s2, 0.0], [1.0 / s6, 1.0 / s6, -2.0 / s6]];
        let rep = perms
            .iter()
            .map(|p| {
                CMat::from_fn(2, 2, |i, j| {
                    // P e_k = e_{p(k)}
                    let mut image = [0.0; 3];
                    for k in 0..3 {
                        image[p[k]] += basis[j][k];
                    }
                    C64::new((0..3).map(|k| basis[i][k] * image[k]).sum::<f64>(), 0.0)
                })
            })
            .collect();
        let group = FiniteGroup::new(s3_table()).expect("valid table");
        Backend::finite_group(FiniteGroupRep::new(group, rep, 1e-9).expect("valid representation"))
    }

    pub fn z2_dual() -> Backend {
        let g = Group::FreeAbelian { rank: 2 };
        Backend::dual_group(DualGroupRep::new(g, vec![Elem::Abelian(vec![1, 0]), Elem::Abelian(vec![0, 1])]).expect("generators"))
    }

    pub fn f2_dual() -> Backend {
        let g = Group::Free { rank: 2 };
        Backend::dual_group(DualGroupRep::new(g, vec![Elem::Free(vec![1]), Elem::Free(vec![2])]).expect("generators"))
    }

    /// Span-generated backend for `Q = diag(q, 1/q)`.
    pub fn span_q(q: f64) -> Backend {
        Backend::span_q(DualityMaps::new(QData::diagonal(&[q, 1.0 / q], 1e-12).expect("positive")))
    }
}
