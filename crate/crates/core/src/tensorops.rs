//! Leg-typed dense linear algebra on `H^{⊗x}`.
//!
//! Basis vectors of `H^{⊗x}` are multi-indices ordered lexicographically with
//! the leftmost leg most significant, which is the ordering produced by the
//! Kronecker product. `H̄` is modelled as `C^n` with the conjugate basis, so
//! transposition `L(H) → L(H̄)` is plain matrix transposition.

use nalgebra::{Complex, DMatrix, DVector, SVD};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::words::Word;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const DEFAULT_TOL: f64 = 1e-9;

pub fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LegSpace {
    pub n: usize,
    pub word: Word,
}

impl LegSpace {
    pub fn new(n: usize, word: Word) -> LegSpace {
        LegSpace { n, word }
    }

    pub fn dim(&self) -> usize {
        self.n.pow(self.word.len() as u32)
    }

    pub fn concat(&self, other: &LegSpace) -> LegSpace {
        LegSpace::new(self.n, self.word.concat(&other.word))
    }
}

/// A linear map `H^{⊗domain} → H^{⊗codomain}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorMap {
    pub domain: LegSpace,
    pub codomain: LegSpace,
    pub matrix: CMat,
}

impl TensorMap {
    pub fn new(domain: LegSpace, codomain: LegSpace, matrix: CMat) -> Result<TensorMap> {
        if domain.n != codomain.n {
            return Err(Error::DimensionMismatch(format!(
                "domain has n = {}, codomain has n = {}",
                domain.n, codomain.n
            )));
        }
        if matrix.nrows() != codomain.dim() || matrix.ncols() != domain.dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, legs '{}' -> '{}' need {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                domain.word,
                codomain.word,
                codomain.dim(),
                domain.dim()
            )));
        }
        Ok(TensorMap { domain, codomain, matrix })
    }

    pub fn endo(n: usize, word: &Word, matrix: CMat) -> Result<TensorMap> {
        let s = LegSpace::new(n, word.clone());
        TensorMap::new(s.clone(), s, matrix)
    }

    pub fn identity(n: usize, word: &Word) -> TensorMap {
        let s = LegSpace::new(n, word.clone());
        let d = s.dim();
        TensorMap { domain: s.clone(), codomain: s, matrix: CMat::identity(d, d) }
    }

    /// The map `C → H^{⊗word}` sending `1` to `v`.
    pub fn from_vector(n: usize, word: &Word, v: &CVec) -> Result<TensorMap> {
        let cod = LegSpace::new(n, word.clone());
        TensorMap::new(LegSpace::new(n, Word::empty()), cod, CMat::from_column_slice(v.len(), 1, v.as_slice()))
    }

    pub fn n(&self) -> usize {
        self.domain.n
    }

    pub fn is_endo(&self) -> bool {
        self.domain == self.codomain
    }

    pub fn adjoint(&self) -> TensorMap {
        TensorMap { domain: self.codomain.clone(), codomain: self.domain.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, s: C64) -> TensorMap {
        TensorMap { matrix: &self.matrix * s, ..self.clone() }
    }

    pub fn add(&self, other: &TensorMap) -> Result<TensorMap> {
        self.same_legs(other)?;
        Ok(TensorMap { matrix: &self.matrix + &other.matrix, ..self.clone() })
    }

    pub fn sub(&self, other: &TensorMap) -> Result<TensorMap> {
        self.same_legs(other)?;
        Ok(TensorMap { matrix: &self.matrix - &other.matrix, ..self.clone() })
    }

    fn same_legs(&self, other: &TensorMap) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::SignatureMismatch {
                expected: self.domain.word.clone(),
                found: other.domain.word.clone(),
            });
        }
        if self.codomain != other.codomain {
            return Err(Error::SignatureMismatch {
                expected: self.codomain.word.clone(),
                found: other.codomain.word.clone(),
            });
        }
        Ok(())
    }

    /// Hilbert–Schmidt norm.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// Column-major vectorisation used for Hilbert–Schmidt geometry.
    pub fn vectorize(&self) -> CVec {
        CVec::from_column_slice(self.matrix.as_slice())
    }

    fn unvectorize(&self, v: &CVec) -> TensorMap {
        TensorMap {
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            matrix: CMat::from_column_slice(self.matrix.nrows(), self.matrix.ncols(), v.as_slice()),
        }
    }
}

/// `⟨a, b⟩ = Tr(a* b)`.
pub fn hs_inner(a: &TensorMap, b: &TensorMap) -> C64 {
    a.matrix.iter().zip(b.matrix.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `ξ(A) = Σ A_ij h_i ⊗ h̄_j`, as a map `e → αβ`.
pub fn xi(a: &CMat) -> Result<TensorMap> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!("xi needs a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    let n = a.nrows();
    let v = CVec::from_iterator(n * n, (0..n).flat_map(|i| (0..n).map(move |j| a[(i, j)])));
    TensorMap::from_vector(n, &"ab".parse()?, &v)
}

/// Inverse of [`xi`] on vectors of `H ⊗ H̄` (or `H̄ ⊗ H`).
pub fn unxi(v: &CVec, n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| v[i * n + j])
}

pub fn tensor(a: &TensorMap, b: &TensorMap) -> Result<TensorMap> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(format!("tensor of n = {} with n = {}", a.n(), b.n())));
    }
    Ok(TensorMap {
        domain: a.domain.concat(&b.domain),
        codomain: a.codomain.concat(&b.codomain),
        matrix: a.matrix.kronecker(&b.matrix),
    })
}

/// `a ∘ b`.
pub fn compose(a: &TensorMap, b: &TensorMap) -> Result<TensorMap> {
    if a.domain != b.codomain {
        return Err(Error::SignatureMismatch { expected: a.domain.word.clone(), found: b.codomain.word.clone() });
    }
    Ok(TensorMap { domain: b.domain.clone(), codomain: a.codomain.clone(), matrix: &a.matrix * &b.matrix })
}

pub fn adjoint(a: &TensorMap) -> TensorMap {
    a.adjoint()
}

/// `id_left ⊗ x ⊗ id_right`.
pub fn pad(x: &TensorMap, left: &Word, right: &Word) -> TensorMap {
    let n = x.n();
    let l = LegSpace::new(n, left.clone());
    let r = LegSpace::new(n, right.clone());
    let mut m = x.matrix.clone();
    if !left.is_empty() {
        m = CMat::identity(l.dim(), l.dim()).kronecker(&m);
    }
    if !right.is_empty() {
        m = m.kronecker(&CMat::identity(r.dim(), r.dim()));
    }
    TensorMap {
        domain: l.concat(&x.domain).concat(&r),
        codomain: l.concat(&x.codomain).concat(&r),
        matrix: m,
    }
}

/// Applies the `out × in` matrix `op` to the legs of `v` that sit between
/// `pre` leading and `post` trailing basis indices.
pub fn apply_local(v: &CVec, pre: usize, post: usize, op: &CMat) -> CVec {
    let (out, inn) = op.shape();
    debug_assert_eq!(v.len(), pre * inn * post);
    let mut res = CVec::zeros(pre * out * post);
    for a in 0..pre {
        for c in 0..post {
            for b_out in 0..out {
                let mut acc = C64::new(0.0, 0.0);
                for b_in in 0..inn {
                    let o = op[(b_out, b_in)];
                    if o.re != 0.0 || o.im != 0.0 {
                        acc += o * v[(a * inn + b_in) * post + c];
                    }
                }
                res[(a * out + b_out) * post + c] = acc;
            }
        }
    }
    res
}

/// Weighted partial trace: for `x` on legs `left·mid·right`, returns
/// `Tr_{left,right}[x (L ⊗ 1 ⊗ R)]` as an operator on `mid`.
pub fn weighted_partial_trace(x: &CMat, dl: usize, dm: usize, dr: usize, l: &CMat, r: &CMat) -> CMat {
    let idx = |a: usize, b: usize, c: usize| (a * dm + b) * dr + c;
    let mut out = CMat::zeros(dm, dm);
    for a1 in 0..dl {
        for a2 in 0..dl {
            let lw = l[(a2, a1)];
            if lw.norm_sqr() == 0.0 {
                continue;
            }
            for c1 in 0..dr {
                for c2 in 0..dr {
                    let w = lw * r[(c2, c1)];
                    if w.norm_sqr() == 0.0 {
                        continue;
                    }
                    for b1 in 0..dm {
                        for b2 in 0..dm {
                            out[(b1, b2)] += x[(idx(a1, b1, c1), idx(a2, b2, c2))] * w;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of square matrices (identity `1×1` when empty).
pub fn kron_all<'a>(mats: impl IntoIterator<Item = &'a CMat>) -> CMat {
    mats.into_iter().fold(CMat::identity(1, 1), |acc, m| acc.kronecker(m))
}

/// Numerical rank with relative singular-value cutoff `σ > tol·σ_max`.
pub fn numerical_rank(m: &CMat, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Orthonormal basis for the column span of `m` (relative cutoff `tol`).
pub fn column_basis(m: &CMat, tol: f64) -> CMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&k| smax > 0.0 && svd.singular_values[k] > tol * smax).collect();
    CMat::from_columns(&keep.iter().map(|&k| u.column(k).into_owned()).collect::<Vec<_>>())
}

/// Incrementally grown orthonormal frame in `C^dim`.
#[derive(Clone, Debug)]
pub struct VectorSpan {
    dim: usize,
    frame: Vec<CVec>,
}

impl VectorSpan {
    pub fn new(dim: usize) -> VectorSpan {
        VectorSpan { dim, frame: Vec::new() }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame.is_empty()
    }

    pub fn vectors(&self) -> &[CVec] {
        &self.frame
    }

    /// Component of `v` orthogonal to the frame (two Gram–Schmidt passes).
    pub fn residual(&self, v: &CVec) -> CVec {
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &self.frame {
                let coef = q.dotc(&r);
                r.axpy(-coef, q, C64::new(1.0, 0.0));
            }
        }
        r
    }

    /// Adds `v` when its residual exceeds `tol·max(‖v‖, 1)`; returns whether it grew.
    pub fn try_add(&mut self, v: &CVec, tol: f64) -> bool {
        if self.frame.len() >= self.dim {
            return false;
        }
        let r = self.residual(v);
        let rn = r.norm();
        if rn > tol * v.norm().max(1.0) {
            self.frame.push(r / c(rn));
            true
        } else {
            false
        }
    }

    pub fn contains(&self, v: &CVec, tol: f64) -> bool {
        self.residual(v).norm() <= tol * v.norm().max(1.0)
    }

    pub fn as_matrix(&self) -> CMat {
        if self.frame.is_empty() {
            CMat::zeros(self.dim, 0)
        } else {
            CMat::from_columns(&self.frame)
        }
    }
}

/// A subspace of `L(H^{⊗x}, H^{⊗y})` with a Hilbert–Schmidt orthonormal basis.
#[derive(Clone, Debug)]
pub struct OperatorSpan {
    pub domain: LegSpace,
    pub codomain: LegSpace,
    pub basis: Vec<TensorMap>,
}

impl OperatorSpan {
    pub fn empty(domain: LegSpace, codomain: LegSpace) -> OperatorSpan {
        OperatorSpan { domain, codomain, basis: Vec::new() }
    }

    /// Builds a span from orthonormal column vectors (vectorised operators).
    pub fn from_frame(domain: LegSpace, codomain: LegSpace, frame: &[CVec]) -> OperatorSpan {
        let (r, cl) = (codomain.dim(), domain.dim());
        let basis = frame
            .iter()
            .map(|v| TensorMap {
                domain: domain.clone(),
                codomain: codomain.clone(),
                matrix: CMat::from_column_slice(r, cl, v.as_slice()),
            })
            .collect();
        OperatorSpan { domain, codomain, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn frame(&self) -> Vec<CVec> {
        self.basis.iter().map(TensorMap::vectorize).collect()
    }

    /// Orthogonal (Hilbert–Schmidt) projection onto the span.
    pub fn project(&self, x: &TensorMap) -> TensorMap {
        let mut acc = TensorMap { matrix: CMat::zeros(x.matrix.nrows(), x.matrix.ncols()), ..x.clone() };
        for b in &self.basis {
            acc.matrix += &b.matrix * hs_inner(b, x);
        }
        acc
    }

    /// `‖x − P x‖`.
    pub fn residual(&self, x: &TensorMap) -> f64 {
        (&x.matrix - &self.project(x).matrix).norm()
    }

    /// Relative residual `‖x − P x‖ / max(‖x‖, 1)`.
    pub fn relative_residual(&self, x: &TensorMap) -> f64 {
        self.residual(x) / x.norm().max(1.0)
    }

    /// Largest residual of one span's basis against the other, symmetrised.
    pub fn distance(&self, other: &OperatorSpan) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        let a = self.basis.iter().map(|b| other.residual(b)).fold(0.0, f64::max);
        let b = other.basis.iter().map(|b| self.residual(b)).fold(0.0, f64::max);
        a.max(b)
    }

    pub fn combination(&self, coefs: &[C64]) -> TensorMap {
        let mut m = CMat::zeros(self.codomain.dim(), self.domain.dim());
        for (b, &k) in self.basis.iter().zip(coefs) {
            m += &b.matrix * k;
        }
        TensorMap { domain: self.domain.clone(), codomain: self.codomain.clone(), matrix: m }
    }

    pub fn random_element<R: Rng>(&self, rng: &mut R) -> TensorMap {
        let coefs: Vec<C64> = (0..self.dim()).map(|_| random_c64(rng)).collect();
        self.combination(&coefs)
    }

    /// Applies `f` to every basis element and re-orthonormalises.
    pub fn map(&self, domain: LegSpace, codomain: LegSpace, tol: f64, f: impl Fn(&TensorMap) -> TensorMap) -> Result<OperatorSpan> {
        let images: Vec<TensorMap> = self.basis.iter().map(f).collect();
        orthonormalize(&domain, &codomain, &images, tol)
    }
}

/// Orthonormal basis for the span of `maps`; the rank uses a relative
/// singular-value cutoff.
pub fn orthonormalize(domain: &LegSpace, codomain: &LegSpace, maps: &[TensorMap], tol: f64) -> Result<OperatorSpan> {
    for m in maps {
        if &m.domain != domain {
            return Err(Error::SignatureMismatch { expected: domain.word.clone(), found: m.domain.word.clone() });
        }
        if &m.codomain != codomain {
            return Err(Error::SignatureMismatch { expected: codomain.word.clone(), found: m.codomain.word.clone() });
        }
    }
    if maps.is_empty() {
        return Ok(OperatorSpan::empty(domain.clone(), codomain.clone()));
    }
    let cols: Vec<CVec> = maps.iter().map(TensorMap::vectorize).collect();
    let basis = column_basis(&CMat::from_columns(&cols), tol);
    let frame: Vec<CVec> = basis.column_iter().map(|c| c.into_owned()).collect();
    Ok(OperatorSpan::from_frame(domain.clone(), codomain.clone(), &frame))
}

/// Basis of the unital *-algebra generated by `generators`.
pub fn algebra_closure(space: &LegSpace, generators: &[TensorMap], tol: f64) -> Result<OperatorSpan> {
    for g in generators {
        if &g.domain != space || &g.codomain != space {
            return Err(Error::SignatureMismatch { expected: space.word.clone(), found: g.domain.word.clone() });
        }
    }
    let d = space.dim();
    let id = TensorMap::identity(space.n, &space.word);
    let mut span = VectorSpan::new(d * d);
    let mut elems: Vec<TensorMap> = Vec::new();
    let mut queue: Vec<TensorMap> = Vec::new();
    let push = |x: TensorMap, span: &mut VectorSpan, elems: &mut Vec<TensorMap>, queue: &mut Vec<TensorMap>| {
        let v = x.vectorize();
        if span.try_add(&v, tol) {
            let q = x.unvectorize(span.vectors().last().expect("just added"));
            elems.push(q.clone());
            queue.push(q);
        }
    };
    push(id, &mut span, &mut elems, &mut queue);
    for g in generators {
        push(g.clone(), &mut span, &mut elems, &mut queue);
        push(g.adjoint(), &mut span, &mut elems, &mut queue);
    }
    let mut head = 0;
    while head < queue.len() {
        let x = queue[head].clone();
        head += 1;
        let current = elems.clone();
        for y in &current {
            let xy = TensorMap { matrix: &x.matrix * &y.matrix, ..x.clone() };
            let yx = TensorMap { matrix: &y.matrix * &x.matrix, ..x.clone() };
            push(xy, &mut span, &mut elems, &mut queue);
            push(yx, &mut span, &mut elems, &mut queue);
        }
        push(x.adjoint(), &mut span, &mut elems, &mut queue);
    }
    Ok(OperatorSpan::from_frame(space.clone(), space.clone(), span.vectors()))
}

pub fn random_c64<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| random_c64(rng))
}

/// Random unitary from the QR factor of a random matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMat {
    random_matrix(rng, n, n).qr().q()
}

/// Random positive-definite matrix `A A* + shift·I`.
pub fn random_positive<R: Rng>(rng: &mut R, n: usize, shift: f64) -> CMat {
    let a = random_matrix(rng, n, n);
    &a * a.adjoint() + CMat::identity(n, n) * c(shift)
}

/// Hermitian eigen-decomposition: returns eigenvalues and eigenvector columns.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * c(0.5);
    let eig = h.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `f(M)` for Hermitian `M` via the spectral theorem.
pub fn hermitian_fn(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&x| c(f(x)))));
    &vecs * d * vecs.adjoint()
}

/// Polar decomposition `A = P U` with `P = sqrt(A A*)` and `U` unitary.
pub fn polar_left(a: &CMat) -> (CMat, CMat) {
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let s = CMat::from_diagonal(&svd.singular_values.map(c));
    (&u * s * u.adjoint(), u * vt)
}

/// Maximum absolute entry.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub mod cmat_serde {
    //! Complex matrices as row-major nested `[re, im]` pairs.
    use super::*;

    pub fn to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> std::result::Result<CMat, String> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != nc) {
            return Err("ragged matrix rows".into());
        }
        Ok(CMat::from_fn(nr, nc, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
    }

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn xi_identity_and_diagonal() {
        let v = xi(&CMat::identity(2, 2)).unwrap();
        assert_eq!(v.codomain.word, w("ab"));
        let col: Vec<C64> = v.matrix.iter().copied().collect();
        assert_eq!(col, vec![c(1.0), c(0.0), c(0.0), c(1.0)]);
        let d = CMat::from_diagonal(&CVec::from_vec(vec![c(1.5), c(0.25)]));
        let v = xi(&d).unwrap();
        assert_eq!(v.matrix[(0, 0)], c(1.5));
        assert_eq!(v.matrix[(3, 0)], c(0.25));
        assert!(xi(&CMat::zeros(2, 3)).is_err());
    }

    #[test]
    fn xi_preserves_norm() {
        let a = random_matrix(&mut rng(), 3, 3);
        assert!((xi(&a).unwrap().norm() - a.norm()).abs() < 1e-12);
    }

    #[test]
    fn xi_intertwines_tensor_action() {
        // (A ⊗ B) ξ(X) = ξ(A X Bᵀ)
        let mut r = rng();
        let (a, b, x) = (random_matrix(&mut r, 2, 2), random_matrix(&mut r, 2, 2), random_matrix(&mut r, 2, 2));
        let lhs = a.kronecker(&b) * xi(&x).unwrap().matrix;
        let rhs = xi(&(&a * &x * b.transpose())).unwrap().matrix;
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn tensor_of_identities() {
        let t = tensor(&TensorMap::identity(2, &w("a")), &TensorMap::identity(2, &w("b"))).unwrap();
        assert_eq!(t, TensorMap::identity(2, &w("ab")));
    }

    #[test]
    fn tensor_acts_legwise() {
        let mut r = rng();
        let a = TensorMap::endo(2, &w("a"), random_matrix(&mut r, 2, 2)).unwrap();
        let b = TensorMap::endo(2, &w("b"), random_matrix(&mut r, 2, 2)).unwrap();
        let (x, y) = (CVec::from_fn(2, |_, _| random_c64(&mut r)), CVec::from_fn(2, |_, _| random_c64(&mut r)));
        let xy = CVec::from_fn(4, |k, _| x[k / 2] * y[k % 2]);
        let lhs = &tensor(&a, &b).unwrap().matrix * xy;
        let ax = &a.matrix * &x;
        let by = &b.matrix * &y;
        let rhs = CVec::from_fn(4, |k, _| ax[k / 2] * by[k % 2]);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn tensor_is_associative() {
        let mut r = rng();
        // integer entries keep every product exactly representable
        let mk = |r: &mut ChaCha8Rng, s: &str| {
            let m = CMat::from_fn(2, 2, |_, _| C64::new(r.gen_range(-9..10) as f64, r.gen_range(-9..10) as f64));
            TensorMap::endo(2, &w(s), m).unwrap()
        };
        let (a, b, cc) = (mk(&mut r, "a"), mk(&mut r, "b"), mk(&mut r, "a"));
        let l = tensor(&tensor(&a, &b).unwrap(), &cc).unwrap();
        let rr = tensor(&a, &tensor(&b, &cc).unwrap()).unwrap();
        assert_eq!(l, rr);
    }

    #[test]
    fn compose_checks_signatures() {
        let mut r = rng();
        let a = TensorMap::endo(2, &w("ab"), random_matrix(&mut r, 4, 4)).unwrap();
        let b = TensorMap::endo(2, &w("ba"), random_matrix(&mut r, 4, 4)).unwrap();
        assert!(matches!(compose(&a, &b), Err(Error::SignatureMismatch { .. })));
        assert_eq!(compose(&a, &TensorMap::identity(2, &w("ab"))).unwrap(), a);
    }

    #[test]
    fn compose_adjoint_reverses() {
        let mut r = rng();
        let a = TensorMap::new(LegSpace::new(2, w("a")), LegSpace::new(2, w("ab")), random_matrix(&mut r, 4, 2)).unwrap();
        let b = TensorMap::new(LegSpace::new(2, w("b")), LegSpace::new(2, w("a")), random_matrix(&mut r, 2, 2)).unwrap();
        let lhs = compose(&a, &b).unwrap().adjoint();
        let rhs = compose(&b.adjoint(), &a.adjoint()).unwrap();
        assert!((lhs.matrix - rhs.matrix).norm() < 1e-12);
        assert_eq!(lhs.domain, rhs.domain);
    }

    #[test]
    fn shape_is_checked() {
        assert!(TensorMap::endo(2, &w("ab"), CMat::zeros(3, 3)).is_err());
    }

    fn unit(n: usize, i: usize, j: usize) -> TensorMap {
        let mut m = CMat::zeros(n, n);
        m[(i, j)] = c(1.0);
        TensorMap::endo(n, &w("a"), m).unwrap()
    }

    #[test]
    fn orthonormalize_examples() {
        let s = LegSpace::new(2, w("a"));
        let id = TensorMap::identity(2, &w("a"));
        assert_eq!(orthonormalize(&s, &s, &[id.clone(), id.scale(c(2.0))], DEFAULT_TOL).unwrap().dim(), 1);
        let e11 = unit(2, 0, 0);
        let e22 = unit(2, 1, 1);
        let sum = e11.add(&e22).unwrap();
        assert_eq!(orthonormalize(&s, &s, &[e11, e22, sum], DEFAULT_TOL).unwrap().dim(), 2);
        assert_eq!(orthonormalize(&s, &s, &[], DEFAULT_TOL).unwrap().dim(), 0);
    }

    #[test]
    fn orthonormalize_matches_rank_oracle() {
        let mut r = rng();
        // five maps inside a three-dimensional subspace of End(C^2 ⊗ C^2)
        let s = LegSpace::new(2, w("ab"));
        let gens: Vec<CMat> = (0..3).map(|_| random_matrix(&mut r, 4, 4)).collect();
        let maps: Vec<TensorMap> = (0..5)
            .map(|_| {
                let m = gens.iter().fold(CMat::zeros(4, 4), |acc, g| acc + g * random_c64(&mut r));
                TensorMap::endo(2, &w("ab"), m).unwrap()
            })
            .collect();
        let span = orthonormalize(&s, &s, &maps, DEFAULT_TOL).unwrap();
        let stacked = CMat::from_columns(&maps.iter().map(TensorMap::vectorize).collect::<Vec<_>>());
        assert_eq!(span.dim(), numerical_rank(&stacked, DEFAULT_TOL));
        assert_eq!(span.dim(), 3);
        let again = orthonormalize(&s, &s, &span.basis, DEFAULT_TOL).unwrap();
        assert_eq!(again.dim(), span.dim());
        for (i, a) in span.basis.iter().enumerate() {
            for (j, b) in span.basis.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((hs_inner(a, b) - c(expect)).norm() < 1e-10);
            }
        }
    }

    fn assert_closed(span: &OperatorSpan, tol: f64) {
        for a in &span.basis {
            assert!(span.residual(&a.adjoint()) <= 10.0 * tol);
            for b in &span.basis {
                assert!(span.residual(&compose(a, b).unwrap()) <= 10.0 * tol);
            }
        }
    }

    #[test]
    fn algebra_closure_examples() {
        let s = LegSpace::new(2, w("a"));
        let one = algebra_closure(&s, &[TensorMap::identity(2, &w("a"))], DEFAULT_TOL).unwrap();
        assert_eq!(one.dim(), 1);
        let full = algebra_closure(&s, &[unit(2, 0, 1)], DEFAULT_TOL).unwrap();
        assert_eq!(full.dim(), 4);
        assert_closed(&full, DEFAULT_TOL);

        let v = xi(&CMat::identity(2, 2)).unwrap();
        let e = compose(&v, &v.adjoint()).unwrap().scale(c(0.5));
        let ab = LegSpace::new(2, w("ab"));
        let alg = algebra_closure(&ab, &[e], DEFAULT_TOL).unwrap();
        assert_eq!(alg.dim(), 2);
        assert_closed(&alg, DEFAULT_TOL);
    }

    #[test]
    fn algebra_closure_of_random_pair_is_full() {
        let mut r = rng();
        let s = LegSpace::new(3, w("a"));
        let g: Vec<TensorMap> = (0..2).map(|_| TensorMap::endo(3, &w("a"), random_matrix(&mut r, 3, 3)).unwrap()).collect();
        let alg = algebra_closure(&s, &g, DEFAULT_TOL).unwrap();
        assert_eq!(alg.dim(), 9);
        assert_closed(&alg, DEFAULT_TOL);
    }

    #[test]
    fn pad_matches_tensor_with_identities() {
        let mut r = rng();
        let x = TensorMap::endo(2, &w("b"), random_matrix(&mut r, 2, 2)).unwrap();
        let p = pad(&x, &w("a"), &w("a"));
        let t = tensor(&tensor(&TensorMap::identity(2, &w("a")), &x).unwrap(), &TensorMap::identity(2, &w("a"))).unwrap();
        assert_eq!(p, t);
    }

    #[test]
    fn apply_local_matches_padded_matrix() {
        let mut r = rng();
        let op = random_matrix(&mut r, 4, 4);
        let v = CVec::from_fn(16, |_, _| random_c64(&mut r));
        let full = CMat::identity(2, 2).kronecker(&op).kronecker(&CMat::identity(2, 2));
        assert!((apply_local(&v, 2, 2, &op) - full * &v).norm() < 1e-12);
        // a cup inserted in the middle of a two-leg vector
        let cup = xi(&CMat::identity(2, 2)).unwrap().matrix;
        let u = CVec::from_fn(4, |_, _| random_c64(&mut r));
        let lifted = apply_local(&u, 2, 2, &cup);
        let oracle = CMat::identity(2, 2).kronecker(&cup).kronecker(&CMat::identity(2, 2)) * &u;
        assert!((lifted - oracle).norm() < 1e-12);
    }

    #[test]
    fn polar_and_functions() {
        let mut r = rng();
        let a = random_matrix(&mut r, 3, 3);
        let (p, u) = polar_left(&a);
        assert!((&p * &u - &a).norm() < 1e-10);
        assert!((&u * u.adjoint() - CMat::identity(3, 3)).norm() < 1e-10);
        let pos = random_positive(&mut r, 3, 0.5);
        let sq = hermitian_fn(&pos, f64::sqrt);
        assert!((&sq * &sq - pos).norm() < 1e-10);
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = random_matrix(&mut rng(), 2, 3);
        let rows = cmat_serde::to_rows(&m);
        assert_eq!(cmat_serde::from_rows(&rows).unwrap(), m);
        assert!(cmat_serde::from_rows(&[vec![[0.0, 0.0]], vec![]]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn shapes_follow_words(la in 0usize..3, lb in 0usize..3, seed in 0u64..1000) {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let wa = Word::all_of_len(la)[0].clone();
            let wb = Word::all_of_len(lb).last().unwrap().clone();
            let a = TensorMap::endo(2, &wa, random_matrix(&mut r, 1 << la, 1 << la)).unwrap();
            let b = TensorMap::endo(2, &wb, random_matrix(&mut r, 1 << lb, 1 << lb)).unwrap();
            let t = tensor(&a, &b).unwrap();
            prop_assert_eq!(t.matrix.nrows(), t.codomain.dim());
            prop_assert_eq!(t.matrix.ncols(), t.domain.dim());
            let comp = compose(&t, &t.adjoint()).unwrap();
            prop_assert_eq!(comp.matrix.shape(), (t.codomain.dim(), t.codomain.dim()));
        }
    }
}
