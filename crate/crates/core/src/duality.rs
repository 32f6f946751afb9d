//! The positive operator `Q`, quantum dimension, cups/caps, Jones
//! projections, canonical traces and conditional expectations.
//!
//! Conventions: `i_α(1) = ξ(Q) ∈ H ⊗ H̄`, `i_β(1) = ξ((Q⁻¹)ᵗ) ∈ H̄ ⊗ H`,
//! `p_α = i_β*`, `p_β = i_α*`. For a word `w` the cup `i_w : e → w ŵ` is the
//! nested product of letter cups, and `p_w = i_ŵ* : ŵ w → e`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensorops::{
    c, cmat_serde, compose, hermitian_eigen, hermitian_fn, kron_all, pad, tensor, weighted_partial_trace, xi, CMat,
    CVec, LegSpace, TensorMap, C64,
};
use crate::words::{Letter, Word};

/// Largest accepted ratio between the extreme eigenvalues of `Q`.
pub const MAX_EIGEN_SPREAD: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct QData {
    pub n: usize,
    pub q: CMat,
}

/// File form: `{"n": 2, "q": [[[re, im], ...], ...]}` or `{"q_diag": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QSpec {
    Diagonal { q_diag: Vec<f64> },
    Full { n: usize, #[serde(with = "cmat_serde")] q: CMat },
}

impl QSpec {
    pub fn raw_matrix(&self) -> Result<CMat> {
        match self {
            QSpec::Diagonal { q_diag } => {
                Ok(CMat::from_diagonal(&CVec::from_iterator(q_diag.len(), q_diag.iter().map(|&x| c(x)))))
            }
            QSpec::Full { n, q } => {
                if q.nrows() != *n || q.ncols() != *n {
                    return Err(Error::DimensionMismatch(format!("q is {}x{}, expected n = {n}", q.nrows(), q.ncols())));
                }
                Ok(q.clone())
            }
        }
    }
}

impl QData {
    /// Validates positivity and rescales so that `Tr(Q²) = Tr(Q⁻²)`.
    pub fn normalized(q_raw: &CMat, tol: f64) -> Result<QData> {
        let p = check_positive(q_raw, tol)?;
        let p2 = (&p * &p).trace().re;
        let pinv = hermitian_fn(&p, |x| 1.0 / x);
        let pm2 = (&pinv * &pinv).trace().re;
        let s = (pm2 / p2).powf(0.25);
        Ok(QData { n: p.nrows(), q: p * c(s) })
    }

    /// Wraps `q` without rescaling.
    pub fn unnormalized(q: &CMat, tol: f64) -> Result<QData> {
        let p = check_positive(q, tol)?;
        Ok(QData { n: p.nrows(), q: p })
    }

    pub fn identity(n: usize) -> QData {
        QData { n, q: CMat::identity(n, n) }
    }

    pub fn diagonal(entries: &[f64], tol: f64) -> Result<QData> {
        QData::normalized(&QSpec::Diagonal { q_diag: entries.to_vec() }.raw_matrix()?, tol)
    }

    pub fn from_spec(spec: &QSpec, tol: f64) -> Result<QData> {
        QData::normalized(&spec.raw_matrix()?, tol)
    }

    pub fn to_spec(&self) -> QSpec {
        QSpec::Full { n: self.n, q: self.q.clone() }
    }

    pub fn inverse(&self) -> CMat {
        hermitian_fn(&self.q, |x| 1.0 / x)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        (&self.q - CMat::identity(self.n, self.n)).norm() < tol
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v = hermitian_eigen(&self.q).0;
        v.sort_by(f64::total_cmp);
        v
    }
}

fn check_positive(q: &CMat, tol: f64) -> Result<CMat> {
    if !q.is_square() || q.nrows() == 0 {
        return Err(Error::Domain(format!("Q must be a non-empty square matrix, got {}x{}", q.nrows(), q.ncols())));
    }
    let scale = q.norm().max(1.0);
    if (q - q.adjoint()).norm() > tol.max(1e-12) * scale * 10.0 {
        return Err(Error::Domain("Q is not Hermitian".into()));
    }
    let h = (q + q.adjoint()) * c(0.5);
    let (vals, _) = hermitian_eigen(&h);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min <= 0.0 {
        return Err(Error::Domain(format!("Q is not positive definite (smallest eigenvalue {min:e})")));
    }
    if max / min > MAX_EIGEN_SPREAD {
        return Err(Error::Domain(format!("eigenvalue spread {:.3e} of Q exceeds {MAX_EIGEN_SPREAD:e}", max / min)));
    }
    Ok(h)
}

/// `Q = normalize((√(F*F))ᵗ)`.
pub fn q_from_f(f: &CMat, tol: f64) -> Result<QData> {
    if !f.is_square() {
        return Err(Error::Domain("F must be square".into()));
    }
    let sv = f.singular_values();
    if sv.min() <= tol * sv.max().max(1.0) {
        return Err(Error::Domain("F is singular".into()));
    }
    let ff = f.adjoint() * f;
    QData::normalized(&hermitian_fn(&ff, f64::sqrt).transpose(), tol)
}

#[derive(Clone, Debug)]
pub struct DualityMaps {
    pub q: QData,
    pub i_alpha: TensorMap,
    pub i_beta: TensorMap,
    pub p_alpha: TensorMap,
    pub p_beta: TensorMap,
    pub d: f64,
    pub lambda: f64,
    q_inv_t: CMat,
    q2: CMat,
    q_inv2_t: CMat,
    q_inv2: CMat,
    q2_t: CMat,
}

/// Normalises `q_raw` and builds the four duality maps.
pub fn make_duality(q_raw: &CMat, tol: f64) -> Result<DualityMaps> {
    Ok(DualityMaps::new(QData::normalized(q_raw, tol)?))
}

impl DualityMaps {
    /// Builds the maps from `q` as given; `d` is taken to be `Tr(Q²)`.
    pub fn new(q: QData) -> DualityMaps {
        let q_inv = q.inverse();
        let q_inv_t = q_inv.transpose();
        let i_alpha = xi(&q.q).expect("square");
        let mut i_beta = xi(&q_inv_t).expect("square");
        i_beta.codomain.word = "ba".parse().expect("static word");
        let p_alpha = i_beta.adjoint();
        let p_beta = i_alpha.adjoint();
        let q2 = &q.q * &q.q;
        let d = q2.trace().re;
        let q_inv2 = &q_inv * &q_inv;
        DualityMaps {
            i_alpha,
            i_beta,
            p_alpha,
            p_beta,
            d,
            lambda: 1.0 / (d * d),
            q_inv_t,
            q2_t: q2.transpose(),
            q_inv2_t: q_inv2.transpose(),
            q_inv2,
            q2,
            q,
        }
    }

    pub fn identity(n: usize) -> DualityMaps {
        DualityMaps::new(QData::identity(n))
    }

    pub fn n(&self) -> usize {
        self.q.n
    }

    /// Matrix `M_γ` with `i_γ(1) = ξ(M_γ)`.
    pub fn cup_matrix(&self, l: Letter) -> &CMat {
        match l {
            Letter::Alpha => &self.q.q,
            Letter::Beta => &self.q_inv_t,
        }
    }

    /// `i_w(1) ∈ H^{⊗ w ŵ}`, entry `Π_k M_{w_k}[ω_k, ω̂_{|w|−1−k}]`.
    pub fn cup_vector(&self, w: &Word) -> CVec {
        let n = self.n();
        let len = w.len();
        let half = n.pow(len as u32);
        let mut v = CVec::zeros(half * half);
        for left in 0..half {
            let digits = digits_of(left, n, len);
            for right in 0..half {
                let rd = digits_of(right, n, len);
                let mut val = c(1.0);
                for (k, l) in w.letters().iter().enumerate() {
                    val *= self.cup_matrix(*l)[(digits[k], rd[len - 1 - k])];
                    if val.norm_sqr() == 0.0 {
                        break;
                    }
                }
                v[left * half + right] = val;
            }
        }
        v
    }

    /// `i_w : e → w ŵ`.
    pub fn cup(&self, w: &Word) -> TensorMap {
        TensorMap::from_vector(self.n(), &w.concat(&w.hat()), &self.cup_vector(w)).expect("consistent shape")
    }

    /// `i_w` assembled by nesting, `i_{rs} = (id_r ⊗ i_s ⊗ id_r̂) i_r`.
    pub fn cup_nested(&self, w: &Word) -> TensorMap {
        let n = self.n();
        let mut acc = TensorMap::from_vector(n, &Word::empty(), &CVec::from_element(1, c(1.0))).expect("scalar");
        let mut prefix = Word::empty();
        for &l in w.letters() {
            let inner = self.letter_cup(l);
            let layer = pad(&inner, &prefix, &prefix.hat());
            acc = compose(&layer, &acc).expect("nesting is well typed");
            prefix = prefix.concat(&Word::letter(l));
        }
        acc
    }

    fn letter_cup(&self, l: Letter) -> TensorMap {
        match l {
            Letter::Alpha => self.i_alpha.clone(),
            Letter::Beta => self.i_beta.clone(),
        }
    }

    /// `p_w = i_ŵ* : ŵ w → e`.
    pub fn cap(&self, w: &Word) -> TensorMap {
        self.cup(&w.hat()).adjoint()
    }

    fn cup_matrix_form(&self, w: &Word) -> CMat {
        let m = self.n().pow(w.len() as u32);
        let v = self.cup_vector(w);
        CMat::from_fn(m, m, |a, b| v[a * m + b])
    }

    /// Frobenius transfer `T ↦ (id_x̂ ⊗ T) i_x̂ ∈ H^{⊗ x̂ y}`.
    pub fn hom_to_vector(&self, t: &TensorMap) -> CVec {
        let x = &t.domain.word;
        let ix_hat = self.cup_matrix_form(&x.hat());
        let psi = ix_hat * t.matrix.transpose();
        CVec::from_iterator(psi.len(), (0..psi.nrows()).flat_map(|a| (0..psi.ncols()).map(move |c| (a, c))).map(|(a, c)| psi[(a, c)]))
    }

    /// Inverse of [`DualityMaps::hom_to_vector`]: `T = Ψᵀ I_xᴴ`.
    pub fn vector_to_hom(&self, x: &Word, y: &Word, psi: &CVec) -> Result<TensorMap> {
        let n = self.n();
        let (nx, ny) = (n.pow(x.len() as u32), n.pow(y.len() as u32));
        if psi.len() != nx * ny {
            return Err(Error::DimensionMismatch(format!("vector of length {} for hom('{x}', '{y}')", psi.len())));
        }
        let big_psi = CMat::from_fn(nx, ny, |a, c| psi[a * ny + c]);
        let ix = self.cup_matrix_form(x);
        TensorMap::new(LegSpace::new(n, x.clone()), LegSpace::new(n, y.clone()), big_psi.transpose() * ix.adjoint())
    }

    /// `d(w) = d^{|w|}`.
    pub fn word_dim(&self, w: &Word) -> f64 {
        self.d.powi(w.len() as i32)
    }

    /// Rank-one Jones projection on `H ⊗ H̄` (even) or `H̄ ⊗ H` (odd).
    pub fn jones_projection(&self, even: bool) -> TensorMap {
        let (i, p) = if even { (&self.i_alpha, &self.p_beta) } else { (&self.i_beta, &self.p_alpha) };
        compose(i, p).expect("well typed").scale(c(1.0 / self.d))
    }

    /// Jones projection `e_k` acting on legs `k−2, k−1`.
    pub fn jones(&self, k: usize) -> TensorMap {
        self.jones_projection(k % 2 == 0)
    }

    fn right_weight(&self, l: Letter) -> &CMat {
        match l {
            Letter::Alpha => &self.q2,
            Letter::Beta => &self.q_inv2_t,
        }
    }

    fn left_weight(&self, l: Letter) -> &CMat {
        match l {
            Letter::Alpha => &self.q_inv2,
            Letter::Beta => &self.q2_t,
        }
    }

    /// `D_w` with `τ_w(x) = d^{−|w|} Tr(x D_w)`.
    pub fn trace_density(&self, w: &Word) -> CMat {
        kron_all(w.letters().iter().map(|&l| self.right_weight(l)))
    }

    /// `E_{r,a,w}(x) = d(r)⁻¹d(w)⁻¹ (p_r ⊗ id_a ⊗ p_ŵ)(id_r̂ ⊗ x ⊗ id_ŵ)(i_r̂ ⊗ id_a ⊗ i_w)`.
    pub fn conditional_expectation(&self, r: &Word, a: &Word, w: &Word, x: &TensorMap) -> Result<TensorMap> {
        let full = r.concat(a).concat(w);
        if x.domain.word != full || x.codomain.word != full {
            return Err(Error::SignatureMismatch { expected: full, found: x.domain.word.clone() });
        }
        let n = self.n();
        let dl = n.pow(r.len() as u32);
        let dm = n.pow(a.len() as u32);
        let dr = n.pow(w.len() as u32);
        let l = kron_all(r.letters().iter().map(|&l| self.left_weight(l)));
        let rw = self.trace_density(w);
        let m = weighted_partial_trace(&x.matrix, dl, dm, dr, &l, &rw) * c(1.0 / (self.word_dim(r) * self.word_dim(w)));
        TensorMap::endo(n, a, m)
    }

    /// Canonical trace `τ_w`.
    pub fn canonical_trace(&self, x: &TensorMap, w: &Word) -> Result<C64> {
        if x.domain.word != *w || x.codomain.word != *w {
            return Err(Error::SignatureMismatch { expected: w.clone(), found: x.domain.word.clone() });
        }
        let dens = self.trace_density(w);
        Ok((&x.matrix * dens).trace() / c(self.word_dim(w)))
    }

    pub fn verify(&self, tol: f64) -> DualityReport {
        verify_duality(self, tol)
    }
}

fn digits_of(mut idx: usize, n: usize, len: usize) -> Vec<usize> {
    let mut d = vec![0; len];
    for k in (0..len).rev() {
        d[k] = idx % n;
        idx /= n;
    }
    d
}

pub fn quantum_dimension(dm: &DualityMaps) -> f64 {
    dm.d
}

pub fn jones_projection(dm: &DualityMaps, even: bool) -> TensorMap {
    dm.jones_projection(even)
}

pub fn conditional_expectation(dm: &DualityMaps, r: &Word, a: &Word, w: &Word, x: &TensorMap) -> Result<TensorMap> {
    dm.conditional_expectation(r, a, w, x)
}

pub fn canonical_trace(dm: &DualityMaps, x: &TensorMap, w: &Word) -> Result<C64> {
    dm.canonical_trace(x, w)
}

/// Residual of `(F*F)(E*E) = λ·id` for unit vectors `ξ(E) ∈ im e`, `ξ(Fᵗ) ∈ im f`.
pub fn ef_relation_residual(e_vec: &CVec, f_vec: &CVec, n: usize, lambda: f64) -> f64 {
    let e = crate::tensorops::unxi(&(e_vec / c(e_vec.norm())), n);
    let ft = crate::tensorops::unxi(&(f_vec / c(f_vec.norm())), n);
    let f = ft.transpose();
    let lhs = (f.adjoint() * &f) * (e.adjoint() * &e);
    (lhs - CMat::identity(n, n) * c(lambda)).norm()
}

#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    pub snake: f64,
    pub dimension: f64,
    pub nesting: f64,
    pub jones_relation: f64,
    pub ef_relation: f64,
    pub max_residual: f64,
    pub passed: bool,
}

/// Snake equations, `p_β i_α = p_α i_β = d`, nesting of word cups up to
/// length 3, the Jones relation on three legs and `(F*F)(E*E) = λ id`.
pub fn verify_duality(dm: &DualityMaps, tol: f64) -> DualityReport {
    let n = dm.n();
    let a = Word::letter(Letter::Alpha);
    let b = Word::letter(Letter::Beta);
    let ida = TensorMap::identity(n, &a);
    let idb = TensorMap::identity(n, &b);
    let snake_pair = |g: &TensorMap, i_g: &TensorMap, p_g: &TensorMap, i_hat: &TensorMap, p_hat: &TensorMap| {
        let first = compose(&tensor(g, p_g).unwrap(), &tensor(i_g, g).unwrap()).unwrap();
        let second = compose(&tensor(p_hat, g).unwrap(), &tensor(g, i_hat).unwrap()).unwrap();
        (first.matrix - &g.matrix).norm().max((second.matrix - &g.matrix).norm())
    };
    let snake = snake_pair(&ida, &dm.i_alpha, &dm.p_alpha, &dm.i_beta, &dm.p_beta)
        .max(snake_pair(&idb, &dm.i_beta, &dm.p_beta, &dm.i_alpha, &dm.p_alpha));

    let pi_a = compose(&dm.p_beta, &dm.i_alpha).unwrap().matrix[(0, 0)];
    let pi_b = compose(&dm.p_alpha, &dm.i_beta).unwrap().matrix[(0, 0)];
    let dimension = (pi_a - c(dm.d)).norm().max((pi_b - c(dm.d)).norm());

    let mut nesting: f64 = 0.0;
    for w in Word::all_up_to(3) {
        let direct = dm.cup(&w);
        let nested = dm.cup_nested(&w);
        nesting = nesting.max((direct.matrix - nested.matrix).norm());
    }

    let e = dm.jones_projection(true);
    let f = dm.jones_projection(false);
    let fe = pad(&f, &a, &Word::empty());
    let ee = pad(&e, &Word::empty(), &a);
    let lhs = &fe.matrix * &ee.matrix * &fe.matrix;
    let j1 = (lhs - &fe.matrix * c(dm.lambda)).norm();
    let lhs2 = &ee.matrix * &fe.matrix * &ee.matrix;
    let j2 = (lhs2 - &ee.matrix * c(dm.lambda)).norm();
    let jones_relation = j1.max(j2);

    let ev = CVec::from_column_slice(dm.i_alpha.matrix.as_slice());
    let fv = CVec::from_column_slice(dm.i_beta.matrix.as_slice());
    let ef_relation = ef_relation_residual(&ev, &fv, n, dm.lambda);

    let max_residual = [snake, dimension, nesting, jones_relation, ef_relation].into_iter().fold(0.0, f64::max);
    DualityReport { snake, dimension, nesting, jones_relation, ef_relation, max_residual, passed: max_residual < tol }
}
