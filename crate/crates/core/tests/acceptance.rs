//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use num::{BigInt, BigRational};
use qlattice::amenability::{
    kesten_test, lattice_amenability_test, lower_bounds_bounded, lower_bounds_monotone, rechi_moments, Verdict,
};
use qlattice::backends::samples::{f2_dual, s3_irrep, span_q, z2_dual};
use qlattice::backends::{Backend, FiniteGroupRep, Source};
use qlattice::duality::{verify_duality, DualityMaps, QData};
use qlattice::group::FiniteGroup;
use qlattice::lattice::{build_lattice, verify_axioms};
use qlattice::moments::{
    haar_cumulant, haar_moment, moment_from_cumulants, moment_to_cumulant, moments_from_backend, tilde_moments,
    word_oracle_tilde,
};
use qlattice::reconstruct::{
    check_normalized, closure, normalize, seeds_from_lattice, universal_hom_dims, ClosureOptions, PopaRepresentation,
};
use qlattice::tensorops::{c, random_positive, CMat};
use qlattice::{interval, Letter, Word};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn backends() -> Vec<(&'static str, Backend)> {
    vec![
        ("span_q q=1", span_q(1.0)),
        ("span_q q=1.2", span_q(1.2)),
        ("S3 irrep", s3_irrep()),
        ("Z2 dual", z2_dual()),
        ("F2 dual", f2_dual()),
    ]
}

/// `Z/4` acting on `C` through `i`; characters are Gaussian integers.
fn z4_character() -> Backend {
    let table: Vec<Vec<usize>> = (0..4).map(|a| (0..4).map(|b| (a + b) % 4).collect()).collect();
    let powers = [c(1.0), qlattice::tensorops::C64::new(0.0, 1.0), c(-1.0), qlattice::tensorops::C64::new(0.0, -1.0)];
    let rep = powers.iter().map(|&z| CMat::from_element(1, 1, z)).collect();
    Backend::finite_group(FiniteGroupRep::new(FiniteGroup::new(table).unwrap(), rep, 1e-12).unwrap())
}

fn popa_axioms() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (name, b) in backends() {
        let l = build_lattice(&b, 4, 1e-9).map_err(|e| format!("{name}: {e}"))?;
        let r = verify_axioms(&l, 1e-9).map_err(|e| format!("{name}: {e}"))?;
        let res = [r.commuting_square, r.jones_condition, r.jones_relations, r.markov, r.commutation, r.max_residual()];
        let m = res.iter().copied().fold(0.0, f64::max);
        ensure(m < 1e-8, format!("{name}: residual {m:.3e}"))?;
        worst = worst.max(m);
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(60), format!("took {t:?}"))?;
    Ok(format!("5 backends, max residual {worst:.2e}, {:.1}s", t.as_secs_f64()))
}

fn duality_suite() -> Check {
    let mut qs: Vec<(String, CMat)> = vec![("I2".into(), CMat::identity(2, 2))];
    for q in [1.0, 1.2, 1.7] {
        qs.push((format!("diag({q})"), CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(q), c(1.0 / q)]))));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    qs.push(("random 3x3".into(), random_positive(&mut rng, 3, 0.3)));
    let mut worst: f64 = 0.0;
    for (name, q) in qs {
        let dm = DualityMaps::new(QData::normalized(&q, 1e-12).map_err(|e| e.to_string())?);
        let r = verify_duality(&dm, 1e-9);
        ensure(r.passed && r.jones_relation < 1e-9 && r.ef_relation < 1e-9, format!("{name}: {r:?}"))?;
        worst = worst.max(r.max_residual);
    }
    Ok(format!("5 choices of Q, max residual {worst:.2e}"))
}

fn catalan(k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * 2 * (2 * i + 1) / (i + 2))
}

fn dimension_pinning() -> Check {
    let b = span_q(1.0);
    let l = build_lattice(&b, 4, 1e-9).map_err(|e| e.to_string())?;
    let row: Vec<usize> = (0..=4).map(|j| l.cells[&(0, j)].dim()).collect();
    ensure(row == vec![1, 1, 2, 5, 14], format!("row 0 = {row:?}"))?;
    // cups and caps alone generate the Temperley–Lieb category
    let cc = closure(&b.duality, &Default::default(), &ClosureOptions::new(8, 1e-9)).map_err(|e| e.to_string())?;
    for j in 0..=4usize {
        let x = interval(0, j).unwrap();
        let oracle = cc.hom(&x, &x).map_err(|e| e.to_string())?.dim();
        ensure(oracle == row[j] && oracle as u64 == catalan(j as u64), format!("j = {j}: closure {oracle}, lattice {}", row[j]))?;
    }
    // S₃ irrep: χ = 2, 0 (transpositions), −1 (3-cycles)
    let s3 = s3_irrep();
    for w in Word::all_up_to(6) {
        let k = w.len() as u32;
        let exact = (2i64.pow(k) + 3 * 0i64.pow(k) + 2 * (-1i64).pow(k)) / 6;
        let got = s3.moment(&w).map_err(|e| e.to_string())? as i64;
        ensure(got == exact, format!("S3 moment '{w}': {got} vs {exact}"))?;
    }
    Ok("Catalan row 1,1,2,5,14 and 127 S3 moments".into())
}

fn normalization_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for trial in 0..20u64 {
        let q = if trial % 2 == 0 {
            random_positive(&mut rng, 3, 0.4)
        } else {
            let s = 1.0 + 0.05 * trial as f64;
            CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(s), c(1.0 / s)]))
        };
        let dm = DualityMaps::new(QData::normalized(&q, 1e-12).map_err(|e| e.to_string())?);
        let original = dm.q.q.clone();
        let l = build_lattice(&Backend::span_q(dm), 4, 1e-9).map_err(|e| e.to_string())?;
        let rep = PopaRepresentation::from_lattice(&l);
        let moved = rep.conjugate(&rep.random_leg_unitaries(1, 1000 + trial)).map_err(|e| e.to_string())?;
        let out = normalize(&moved, 1e-9).map_err(|e| format!("trial {trial}: {e}"))?;
        let dist = (&out.q.q - &original).norm();
        ensure(dist < 1e-8, format!("trial {trial}: ‖ΔQ‖ = {dist:.3e}"))?;
        let chk = check_normalized(&out.rep, &out.q, 1e-9).map_err(|e| e.to_string())?;
        ensure(chk.passed, format!("trial {trial}: {chk:?}"))?;
        worst = worst.max(dist);
    }
    Ok(format!("20 trials, max ‖ΔQ‖ {worst:.2e}"))
}

fn closure_fixed_point() -> Check {
    let mut checked = 0;
    for (name, b) in [("span_q q=1.2", span_q(1.2)), ("S3 irrep", s3_irrep())] {
        let l = build_lattice(&b, 5, 1e-9).map_err(|e| e.to_string())?;
        let seeds = seeds_from_lattice(&l, 4);
        let cc = closure(&b.duality, &seeds, &ClosureOptions::new(8, 1e-9)).map_err(|e| e.to_string())?;
        for x in Word::all_up_to(4).into_iter().filter(|x| x.is_alternating() && !x.is_empty()) {
            let got = cc.hom(&x, &x).map_err(|e| e.to_string())?.dim();
            let want = seeds[&x].dim();
            ensure(got == want, format!("{name} End('{x}'): closure {got}, seed {want}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} endomorphism algebras"))
}

fn triple_oracle() -> Check {
    let start = Instant::now();
    for (name, b) in [("Z2 dual", z2_dual()), ("F2 dual", f2_dual())] {
        let source = moments_from_backend(&b, 6).map_err(|e| e.to_string())?;
        let cumulant = tilde_moments(&source).map_err(|e| e.to_string())?;
        let Source::DualGroup(d) = &b.source else { return Err("not a dual group".into()) };
        let oracle = word_oracle_tilde(d, 6).map_err(|e| e.to_string())?;
        let l = build_lattice(&b, 5, 1e-9).map_err(|e| e.to_string())?;
        let cc = closure(&b.duality, &seeds_from_lattice(&l, 4), &ClosureOptions::new(6, 1e-9)).map_err(|e| e.to_string())?;
        let spans = universal_hom_dims(&cc, 6).map_err(|e| e.to_string())?;
        ensure(cumulant.first_difference(&oracle).is_none(), format!("{name}: cumulant/oracle at {:?}", cumulant.first_difference(&oracle)))?;
        ensure(cumulant.first_difference(&spans).is_none(), format!("{name}: cumulant/closure at {:?}", cumulant.first_difference(&spans)))?;
        for w in Word::all_up_to(6).into_iter().filter(|w| w.is_alternating()) {
            ensure(cumulant.get(&w).unwrap() == source.get(&w).unwrap(), format!("{name}: alternating '{w}'"))?;
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(120), format!("took {t:?}"))?;
    Ok(format!("Z2 and F2 duals, 127 words each, {:.1}s", t.as_secs_f64()))
}

fn haar_self_check() -> Check {
    let kappa = |w: &[Letter]| Ok(haar_cumulant(w));
    let from_moments = moment_to_cumulant(&|w: &[Letter]| Ok(haar_moment(w)), 8).map_err(|e| e.to_string())?;
    for k in -8i32..=8 {
        let l = if k >= 0 { Letter::Alpha } else { Letter::Beta };
        let w = vec![l; k.unsigned_abs() as usize];
        let want = if k == 0 { 1.0 } else { 0.0 };
        let a = moment_from_cumulants(&w, &kappa).map_err(|e| e.to_string())? as f64;
        let b = from_moments.moment(&Word::new(w.clone())).map_err(|e| e.to_string())? as f64;
        ensure((a - want).abs() <= 1e-12 && (b - want).abs() <= 1e-12, format!("z^{k}: {a}, {b}"))?;
    }
    Ok("τ(z^k) = δ_k0 for |k| ≤ 8".into())
}

/// `2·lim (p_{2k+2}/p_{2k})^{1/2}` from return probabilities of the simple
/// random walk, as an independent target for the extrapolation.
fn walk_ratio_limit(free: bool) -> f64 {
    let k = 400usize;
    let ratio = if free {
        // distance from the identity in the Cayley tree of F₂
        let mut p = vec![0.0f64; 2 * k + 4];
        p[0] = 1.0;
        let mut at = Vec::new();
        for step in 1..=2 * k + 2 {
            let mut q = vec![0.0f64; p.len()];
            q[1] += p[0];
            for dd in 1..p.len() - 1 {
                q[dd - 1] += 0.25 * p[dd];
                q[dd + 1] += 0.75 * p[dd];
            }
            if step == 2 * k || step == 2 * k + 2 {
                at.push(q[0]);
            }
            p = q;
        }
        at[1] / at[0]
    } else {
        // p_{2k} = C(2k,k)² / 16^k
        let kk = k as f64;
        ((2.0 * kk + 1.0) * (2.0 * kk + 2.0) / ((kk + 1.0) * (kk + 1.0))).powi(2) / 16.0
    };
    2.0 * ratio.sqrt()
}

fn kesten_verdicts() -> Check {
    let z_target = walk_ratio_limit(false);
    let f_target = walk_ratio_limit(true);
    ensure((f_target - 3f64.sqrt()).abs() < 0.01, format!("F2 oracle limit {f_target}"))?;
    let z = kesten_test(&z2_dual(), 12, 0.02).map_err(|e| e.to_string())?;
    ensure(z.verdict == Verdict::Amenable, format!("Z2 verdict {:?}", z.verdict))?;
    ensure((z.extrapolated - z_target).abs() <= 0.05 * z_target, format!("Z2 estimate {}", z.extrapolated))?;
    let f = kesten_test(&f2_dual(), 12, 0.02).map_err(|e| e.to_string())?;
    ensure(f.verdict == Verdict::NonAmenable, format!("F2 verdict {:?}", f.verdict))?;
    ensure((f.extrapolated - f_target).abs() <= 0.05 * f_target, format!("F2 estimate {}", f.extrapolated))?;
    for (name, b) in [("S3", s3_irrep()), ("Z4", z4_character())] {
        let e = kesten_test(&b, 12, 0.02).map_err(|e| e.to_string())?;
        ensure(e.verdict == Verdict::Amenable, format!("{name} verdict {:?}", e.verdict))?;
    }
    Ok(format!(
        "Z2 {:.4} (target {z_target:.4}), F2 {:.4} (target {f_target:.4}), finite groups amenable",
        z.extrapolated, f.extrapolated
    ))
}

fn lattice_amenability() -> Check {
    let s = lattice_amenability_test(&s3_irrep(), 12, 0.02, 1e-9).map_err(|e| e.to_string())?;
    ensure(s.estimate.verdict == Verdict::Amenable, format!("S3 verdict {:?}", s.estimate.verdict))?;
    ensure((s.index - 4.0).abs() < 1e-9 && s.index_is_square, format!("S3 index {}", s.index))?;
    let f = lattice_amenability_test(&f2_dual(), 12, 0.02, 1e-9).map_err(|e| e.to_string())?;
    ensure(f.estimate.verdict == Verdict::Amenable, format!("F2 verdict {:?}", f.estimate.verdict))?;
    ensure((f.estimate.extrapolated - 4.0).abs() <= 0.2, format!("F2 estimate {}", f.estimate.extrapolated))?;
    let t = lattice_amenability_test(&span_q(1.2), 12, 0.02, 1e-9).map_err(|e| e.to_string())?;
    ensure(t.estimate.verdict == Verdict::NonAmenable, format!("span_q verdict {:?}", t.estimate.verdict))?;
    let gap = 1.0 - t.estimate.extrapolated / (t.d * t.d);
    ensure(gap > 0.1 && !t.index_is_square, format!("span_q gap {gap:.3}"))?;
    Ok(format!(
        "S3 {:.4}, F2 {:.4}, span_q 1.2 {:.4} vs d² {:.4}",
        s.estimate.extrapolated,
        f.estimate.extrapolated,
        t.estimate.extrapolated,
        t.d * t.d
    ))
}

fn monotonicity() -> Check {
    let mut sequences = 0;
    for (name, b) in backends().into_iter().chain([("Z4", z4_character())]) {
        let kmax = if matches!(b.source, Source::SpanQ(_)) { 10 } else { 12 };
        let m: Vec<BigRational> = rechi_moments(&b, kmax).map_err(|e| e.to_string())?;
        ensure(lower_bounds_monotone(&m), format!("{name}: ℓ_k not monotone"))?;
        ensure(lower_bounds_bounded(&m, b.n), format!("{name}: ℓ_k exceeds n"))?;
        // (αβ)^k moments: ‖χ(v⊗v̂)‖ ≤ n²
        let kk = if matches!(b.source, Source::SpanQ(_)) { 5 } else { 10 };
        let a: Vec<BigRational> = (0..=kk)
            .flat_map(|k| {
                let w = Word::new([Letter::Alpha, Letter::Beta].repeat(k));
                [BigRational::from_integer(BigInt::from(b.moment(&w).unwrap())), BigRational::from_integer(0.into())]
            })
            .collect();
        ensure(lower_bounds_monotone(&a), format!("{name}: lattice bounds not monotone"))?;
        ensure(lower_bounds_bounded(&a, b.n), format!("{name}: lattice bounds exceed n²"))?;
        sequences += 2;
    }
    Ok(format!("{sequences} sequences, exact rational comparisons"))
}

fn cli_output(args: &[&str], threads: &str) -> std::result::Result<(i32, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qlattice"))
        .args(args)
        .args(["--threads", threads])
        .env_remove("QLATTICE_THREADS")
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn determinism() -> Check {
    let z2 = data("z2_dual.json");
    let s3 = data("s3.json");
    let sq = data("span_q_1_2.json");
    let (z2, s3, sq) = (z2.to_str().unwrap(), s3.to_str().unwrap(), sq.to_str().unwrap());
    let commands: Vec<Vec<&str>> = vec![
        vec!["lattice", "--spec", s3, "--bound", "4"],
        vec!["lattice", "--spec", sq, "--bound", "4", "--format", "dot"],
        vec!["moments", "--spec", z2, "--max-len", "6"],
        vec!["tilde", "--spec", z2, "--max-len", "6", "--method", "all"],
        vec!["tilde", "--spec", s3, "--max-len", "4", "--method", "closure"],
        vec!["amenability", "--spec", z2, "--test", "kesten"],
        vec!["amenability", "--spec", s3, "--test", "lattice"],
    ];
    for cmd in &commands {
        let a = cli_output(cmd, "1")?;
        let b = cli_output(cmd, "1")?;
        let c4 = cli_output(cmd, "4")?;
        ensure(a.0 == 0, format!("{cmd:?} exited {}", a.0))?;
        ensure(!a.1.is_empty() && a == b && a == c4, format!("{cmd:?} output differs"))?;
    }
    Ok(format!("{} commands × 3 runs byte-identical", commands.len()))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Check)> = vec![
        ("Popa-axiom suite", popa_axioms),
        ("Duality suite", duality_suite),
        ("Dimension pinning", dimension_pinning),
        ("Normalization round-trip", normalization_round_trip),
        ("Closure fixed point", closure_fixed_point),
        ("Triple oracle", triple_oracle),
        ("Haar-unitary self-check", haar_self_check),
        ("Kesten verdicts", kesten_verdicts),
        ("Lattice amenability", lattice_amenability),
        ("Monotonicity guards", monotonicity),
        ("Determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(msg) => println!("[PASS] #{:<2} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] #{:<2} {name}: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
