//! Spectral-radius estimates from moment sequences and the two amenability
//! verdicts built on them.

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::backends::{Backend, Source};
use crate::error::Result;
use crate::words::{Letter, Word};

pub const DEFAULT_KMAX: usize = 12;
pub const DEFAULT_MARGIN: f64 = 0.02;
/// Number of trailing points used by the extrapolation fit.
const FIT_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Amenable,
    NonAmenable,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralEstimate {
    /// `ℓ_k = m_{2k}^{1/2k}` for `k = 1..`.
    pub lower_bounds: Vec<f64>,
    /// `r_k = (m_{2k+2}/m_{2k})^{1/2}` for `k = 0..`.
    pub ratios: Vec<f64>,
    pub extrapolated: f64,
    pub k_max: usize,
    pub verdict: Verdict,
    pub margin: f64,
}

fn to_f64(r: &BigRational) -> f64 {
    let (n, d) = (r.numer(), r.denom());
    // scale down huge operands before the division
    let shift = n.bits().max(d.bits()).saturating_sub(900);
    let (n, d) = (n >> shift, d >> shift);
    n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
}

fn pow2(k: usize) -> BigRational {
    BigRational::from_integer(BigInt::one() << k)
}

/// `m_k = 2^{-k} Σ_{|w| = k} moment(w)`, the moments of `Re χ(v)`.
pub fn rechi_moments(b: &Backend, k_max: usize) -> Result<Vec<BigRational>> {
    (0..=k_max)
        .map(|k| {
            let total: BigInt = match &b.source {
                Source::DualGroup(d) => BigInt::from(d.closed_walks(k)),
                Source::FiniteGroup(f) if f.real_character_power_sum(k).is_some() => {
                    let s = BigInt::from(f.real_character_power_sum(k).expect("checked"));
                    return Ok(BigRational::new(s, BigInt::from(f.group.order())));
                }
                _ => {
                    let words = Word::all_of_len(k);
                    let ms = words.par_iter().map(|w| b.moment(w)).collect::<Result<Vec<u64>>>()?;
                    ms.into_iter().map(BigInt::from).sum()
                }
            };
            Ok(BigRational::from_integer(total) / pow2(k))
        })
        .collect()
}

/// Least-squares fit of `log m_{2k} = a + 2k·log ρ − γ·log k`; returns `ρ`.
fn fit_radius(points: &[(f64, f64)]) -> f64 {
    if points.len() == 2 {
        let ((k0, l0), (k1, l1)) = (points[0], points[1]);
        return ((l1 - l0) / (2.0 * (k1 - k0))).exp();
    }
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for &(k, l) in points {
        let row = nalgebra::Vector3::new(1.0, 2.0 * k, -k.ln());
        ata += row * row.transpose();
        atb += row * l;
    }
    match ata.lu().solve(&atb) {
        Some(x) => x[1].exp(),
        None => f64::NAN,
    }
}

/// Spectral radius of the measure with the given moments; odd entries are
/// ignored.
pub fn spectral_radius_estimate(m: &[BigRational], k_max: usize, n: f64, margin: f64) -> SpectralEstimate {
    let even: Vec<&BigRational> = m.iter().take(k_max + 1).step_by(2).collect();
    let lower_bounds: Vec<f64> =
        even.iter().enumerate().skip(1).map(|(k, v)| to_f64(v).powf(1.0 / (2.0 * k as f64))).collect();
    let ratios: Vec<f64> = even.windows(2).map(|p| {
        if p[0].is_zero() { 0.0 } else { to_f64(&(p[1] / p[0])).sqrt() }
    }).collect();
    let last_lb = lower_bounds.last().copied().unwrap_or(0.0);
    if even.len() < 3 {
        return SpectralEstimate { lower_bounds, ratios, extrapolated: last_lb, k_max, verdict: Verdict::Inconclusive, margin };
    }
    let extrapolated = if even.iter().skip(1).any(|v| v.is_zero()) {
        0.0
    } else {
        let pts: Vec<(f64, f64)> = even
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, v)| (k as f64, to_f64(v).ln()))
            .collect();
        fit_radius(&pts[pts.len().saturating_sub(FIT_POINTS)..])
    };
    let converged = lower_bounds.len() >= 2 && (last_lb - lower_bounds[lower_bounds.len() - 2]).abs() < margin * n;
    let verdict = if extrapolated >= n * (1.0 - margin) {
        Verdict::Amenable
    } else if extrapolated <= n * (1.0 - 3.0 * margin) && converged {
        Verdict::NonAmenable
    } else {
        Verdict::Inconclusive
    };
    SpectralEstimate { lower_bounds, ratios, extrapolated, k_max, verdict, margin }
}

/// `ℓ_k ≤ ℓ_{k+1}` for all `k`, compared exactly as `m_{2k}^{k+1} ≤ m_{2k+2}^k`.
pub fn lower_bounds_monotone(m: &[BigRational]) -> bool {
    let even: Vec<&BigRational> = m.iter().step_by(2).collect();
    (1..even.len().saturating_sub(1)).all(|k| num::pow(even[k].clone(), k + 1) <= num::pow(even[k + 1].clone(), k))
}

/// `m_{2k} ≤ n^{2k}` for all `k`, i.e. `ℓ_k ≤ n`.
pub fn lower_bounds_bounded(m: &[BigRational], n: usize) -> bool {
    let nn = BigRational::from_integer(BigInt::from(n));
    m.iter().enumerate().step_by(2).all(|(k, v)| *v <= num::pow(nn.clone(), k))
}

pub fn kesten_test(b: &Backend, k_max: usize, margin: f64) -> Result<SpectralEstimate> {
    let m = rechi_moments(b, k_max)?;
    Ok(spectral_radius_estimate(&m, k_max, b.n as f64, margin))
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticeAmenability {
    /// Estimates of `‖χ(v⊗v̂)‖`, i.e. squares of the underlying radii.
    pub estimate: SpectralEstimate,
    pub trace_flag: bool,
    pub d: f64,
    pub index: f64,
    pub index_is_square: bool,
}

/// Principal graph norm from `moment((αβ)^k)^{1/k}`, compared with `d²`.
pub fn lattice_amenability_test(b: &Backend, k_max: usize, margin: f64, tol: f64) -> Result<LatticeAmenability> {
    let cap = b.max_moment_len().map_or(k_max, |l| k_max.min(l / 2));
    let d = b.duality.d;
    let index = 1.0 / b.duality.lambda;
    let mut m = Vec::with_capacity(2 * cap + 1);
    for k in 0..=cap {
        let w = Word::new([Letter::Alpha, Letter::Beta].repeat(k));
        m.push(BigRational::from_integer(BigInt::from(b.moment(&w)?)));
        m.push(BigRational::zero());
    }
    m.pop();
    let raw = spectral_radius_estimate(&m, 2 * cap, d, margin);
    let sq = |v: Vec<f64>| v.into_iter().map(|x| x * x).collect::<Vec<_>>();
    let extrapolated = raw.extrapolated * raw.extrapolated;
    let trace_flag = b.duality.q.is_identity(tol);
    let target = d * d;
    let verdict = if !trace_flag {
        Verdict::NonAmenable
    } else if raw.lower_bounds.len() < 2 {
        Verdict::Inconclusive
    } else if extrapolated >= target * (1.0 - margin) {
        Verdict::Amenable
    } else if extrapolated <= target * (1.0 - 3.0 * margin) {
        Verdict::NonAmenable
    } else {
        Verdict::Inconclusive
    };
    let estimate = SpectralEstimate {
        lower_bounds: sq(raw.lower_bounds),
        ratios: sq(raw.ratios),
        extrapolated,
        k_max: cap,
        verdict,
        margin,
    };
    let root = index.sqrt().round();
    let index_is_square = (root * root - index).abs() <= 1e-6;
    Ok(LatticeAmenability { estimate, trace_flag, d, index, index_is_square })
}

#[derive(Clone, Debug, Serialize)]
pub struct AmenabilityReport {
    pub test: String,
    pub backend: String,
    pub lower_bounds: Vec<f64>,
    pub ratios: Vec<f64>,
    pub extrapolated: f64,
    pub verdict: Verdict,
    pub k_max: usize,
    pub margin: f64,
    pub n: usize,
    pub d: f64,
    pub index: f64,
    pub index_is_square: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_flag: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotone: Option<bool>,
}

impl AmenabilityReport {
    fn new(test: &str, b: &Backend, e: SpectralEstimate) -> AmenabilityReport {
        let index = 1.0 / b.duality.lambda;
        let root = index.sqrt().round();
        AmenabilityReport {
            test: test.into(),
            backend: b.kind().into(),
            lower_bounds: e.lower_bounds,
            ratios: e.ratios,
            extrapolated: e.extrapolated,
            verdict: e.verdict,
            k_max: e.k_max,
            margin: e.margin,
            n: b.n,
            d: b.duality.d,
            index,
            index_is_square: (root * root - index).abs() <= 1e-6,
            trace_flag: None,
            monotone: None,
        }
    }
}

pub fn kesten_report(b: &Backend, k_max: usize, margin: f64) -> Result<AmenabilityReport> {
    let m = rechi_moments(b, k_max)?;
    let e = spectral_radius_estimate(&m, k_max, b.n as f64, margin);
    let mut r = AmenabilityReport::new("kesten", b, e);
    r.monotone = Some(lower_bounds_monotone(&m) && lower_bounds_bounded(&m, b.n));
    Ok(r)
}

pub fn lattice_report(b: &Backend, k_max: usize, margin: f64, tol: f64) -> Result<AmenabilityReport> {
    let t = lattice_amenability_test(b, k_max, margin, tol)?;
    let mut r = AmenabilityReport::new("lattice", b, t.estimate);
    r.trace_flag = Some(t.trace_flag);
    Ok(r)
}
