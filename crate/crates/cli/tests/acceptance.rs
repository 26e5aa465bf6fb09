//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criterion 10 needs real pretrained sources and only runs when
//! `GEOMETA_FULL_X`, `GEOMETA_FULL_Z` and `GEOMETA_FULL_BENCH` are set
//! (optionally `GEOMETA_FULL_MAX_WORDS`); otherwise it reports SKIP.

mod common;

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{geometa, random_orthogonal, synthetic_pair, write_datasets, write_pair};
use geometa::embio::AlignedPair;
use geometa::eval::{spearman, CosineIndex};
use geometa::manifold::{inner, orth_drift, project_tangent_orth, sqrt_spd, sym};
use geometa::meta::{build_meta, make_latent_map};
use geometa::objective::{loss, riemannian_grad};
use geometa::optimizer::{solve, SolverConfig};
use geometa::{
    EmbeddingTable, GramCache, MetaMode, OrthogonalPoint, ProductPoint, RegWeight, SpdPoint, TangentVector,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> SpdPoint {
    let a = gaussian(rng, d, d);
    SpdPoint::new(sym(&(&a * a.transpose() / d as f64 + DMatrix::identity(d, d) * 0.5))).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> ProductPoint {
    let u = OrthogonalPoint::new(random_orthogonal(rng, d)).unwrap();
    let v = OrthogonalPoint::new(random_orthogonal(rng, d)).unwrap();
    ProductPoint::new(u, v, random_spd(rng, d)).unwrap()
}

fn words(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn unit_columns(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        c /= n;
    }
    m
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn identity_specialization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (d, n) = (7, 40);
    let x = EmbeddingTable::new(words("w", n), gaussian(&mut rng, d, n)).unwrap();
    let z = EmbeddingTable::new(words("w", n), gaussian(&mut rng, d, n)).unwrap();
    let pair = AlignedPair::new(x, z).unwrap();
    let map = make_latent_map(&ProductPoint::identity(d)).unwrap();
    let mut worst = 0.0f64;
    for (geo, plain) in [(MetaMode::GeoAvg, MetaMode::Avg), (MetaMode::GeoConc, MetaMode::Conc)] {
        let a = build_meta(&pair, Some(&map), geo).unwrap();
        let b = build_meta(&pair, None, plain).unwrap();
        worst = worst.max((a.vectors() - b.vectors()).abs().max());
    }
    check(worst <= 1e-12, format!("max entrywise difference {worst:.2e}"))
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (d, n, h) = (5, 20, 1e-5);
    let mut worst = 0.0f64;
    for inst in 0..10 {
        let c = if inst % 2 == 0 { 0.0 } else { 1.0 };
        let reg = RegWeight::new(c).unwrap();
        let x = gaussian(&mut rng, d, n);
        let z = gaussian(&mut rng, d, n);
        let cache = GramCache::from_matrices(&x, &z);
        let p = random_point(&mut rng, d);
        let grad = riemannian_grad(&p, &cache, reg);
        for _ in 0..10 {
            let dir = TangentVector {
                xi_u: project_tangent_orth(&p.u, &gaussian(&mut rng, d, d)),
                xi_v: project_tangent_orth(&p.v, &gaussian(&mut rng, d, d)),
                xi_b: sym(&gaussian(&mut rng, d, d)),
            };
            let analytic = inner(&p, &grad, &dir);
            let plus = loss(&p.retract(&dir, h).unwrap(), &cache, reg);
            let minus = loss(&p.retract(&dir, -h).unwrap(), &cache, reg);
            let numeric = (plus - minus) / (2.0 * h);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12);
            worst = worst.max(rel);
        }
    }
    check(worst <= 1e-5, format!("worst relative error {worst:.2e} over 100 directions"))
}

fn gram_trick() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = rng.random_range(1..=6);
        let n = rng.random_range(1..=50);
        let c = rng.random_range(0.0..2.0);
        let x = gaussian(&mut rng, d, n);
        let z = gaussian(&mut rng, d, n);
        let p = random_point(&mut rng, d);
        let w = p.u.matrix().transpose() * p.b.matrix() * p.v.matrix();
        let residual = x.transpose() * w * &z - DMatrix::identity(n, n);
        let direct = residual.norm_squared() + c * p.b.matrix().norm_squared();
        let fast = loss(&p, &GramCache::from_matrices(&x, &z), RegWeight::new(c).unwrap());
        worst = worst.max((fast - direct).abs() / direct.abs().max(1e-300));
    }
    check(worst <= 1e-10, format!("worst relative difference {worst:.2e}"))
}

fn feasibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (d, n) = (20, 500);
    let x = unit_columns(gaussian(&mut rng, d, n));
    let z = unit_columns(gaussian(&mut rng, d, n));
    let cache = GramCache::from_matrices(&x, &z);
    let cfg = SolverConfig {
        max_iters: 200,
        grad_tol: 0.0,
        ..SolverConfig::default()
    };
    let (p, trace) = match solve(&cache, &cfg, None) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("solver error: {e}")),
    };
    let du = orth_drift(p.u.matrix());
    let dv = orth_drift(p.v.matrix());
    let min_eig = p.b.min_eigenvalue();
    let monotone = trace.records.windows(2).all(|w| w[1].loss <= w[0].loss);
    check(
        du <= 1e-8 && dv <= 1e-8 && min_eig > 0.0 && monotone,
        format!(
            "{} iterations ({}), drift U {du:.1e} V {dv:.1e}, min eig(B) {min_eig:.3e}, non-increasing {monotone}",
            trace.iterations(),
            trace.termination
        ),
    )
}

/// Fraction of words whose nearest latent neighbour (cosine, brute force)
/// across sources is the word itself.
fn latent_retrieval(p: &ProductPoint, x: &DMatrix<f64>, z: &DMatrix<f64>) -> f64 {
    let map = make_latent_map(p).unwrap();
    let lx = unit_columns(&map.s * &map.u_map * x);
    let lz = unit_columns(&map.s * &map.v_map * z);
    let sims = lx.transpose() * lz;
    let n = x.ncols();
    let hits = (0..n).filter(|&i| sims.row(i).transpose().argmax().0 == i).count();
    hits as f64 / n as f64
}

fn synthetic_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (d, n) = (10, 100);
    let x = unit_columns(gaussian(&mut rng, d, n));
    let q = random_orthogonal(&mut rng, d);
    let z = &q * &x + gaussian(&mut rng, d, n) * 0.01;
    let cache = GramCache::from_matrices(&x, &z);
    let cfg = SolverConfig::default();
    let (p, trace) = match solve(&cache, &cfg, None) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("solver error: {e}")),
    };
    let acc = latent_retrieval(&p, &x, &z);
    let init_loss = loss(&ProductPoint::identity(d), &cache, cfg.reg_c);
    check(
        acc >= 0.95 && trace.final_loss() < init_loss,
        format!(
            "retrieval accuracy {acc:.3}, loss {init_loss:.4} -> {:.4}",
            trace.final_loss()
        ),
    )
}

fn matrix_sqrt() -> Outcome {
    let b = SpdPoint::new(DMatrix::from_diagonal(&nalgebra::dvector![4.0, 9.0])).unwrap();
    let s = sqrt_spd(&b).unwrap();
    let diag_err = (s.matrix() - DMatrix::from_diagonal(&nalgebra::dvector![2.0, 3.0])).abs().max();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let d = rng.random_range(1..=12);
        let b = random_spd(&mut rng, d);
        let s = sqrt_spd(&b).unwrap();
        let rel = (s.matrix() * s.matrix() - b.matrix()).norm() / b.matrix().norm();
        worst = worst.max(rel);
    }
    check(
        diag_err <= 1e-12 && worst <= 1e-8,
        format!("diag error {diag_err:.1e}, worst reconstruction {worst:.1e}"),
    )
}

fn spearman_oracle() -> Outcome {
    let cases: [(&[f64], &[f64], f64); 3] = [
        (&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0], 1.0),
        (&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0], -1.0),
        (&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0], 0.8660254),
    ];
    let mut worst = 0.0f64;
    for (xs, ys, expected) in cases {
        worst = worst.max((spearman(xs, ys).unwrap() - expected).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut invariant = 0.0f64;
    for _ in 0..20 {
        let len = rng.random_range(3..60);
        let xs: Vec<f64> = (0..len).map(|_| rng.random_range(-5.0..5.0)).collect();
        let ys: Vec<f64> = (0..len).map(|_| rng.random_range(-5.0..5.0)).collect();
        let tx: Vec<f64> = xs.iter().map(|v| v.exp()).collect();
        let ty: Vec<f64> = ys.iter().map(|v| 2.0 * v * v * v - 7.0).collect();
        let r = spearman(&xs, &ys).unwrap();
        invariant = invariant.max((r - spearman(&tx, &ty).unwrap()).abs());
    }
    check(
        worst <= 1e-7 && invariant <= 1e-12,
        format!("worst example error {worst:.1e}, monotone invariance gap {invariant:.1e}"),
    )
}

/// Independent 3CosAdd: explicit cosine against every candidate.
fn exhaustive_answer(t: &EmbeddingTable, a: usize, b: usize, c: usize) -> usize {
    let v = t.vectors();
    let target = v.column(b) - v.column(a) + v.column(c);
    let mut best = usize::MAX;
    let mut top = f64::NEG_INFINITY;
    for w in 0..t.len() {
        if w == a || w == b || w == c {
            continue;
        }
        let col = v.column(w);
        let cos = col.dot(&target) / (col.norm() * target.norm());
        if cos > top {
            top = cos;
            best = w;
        }
    }
    best
}

fn analogy_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let table = EmbeddingTable::new(words("w", 200), gaussian(&mut rng, 16, 200)).unwrap();
    let index = CosineIndex::new(&table);
    let mut agree = 0;
    for _ in 0..100 {
        let (a, b, c) = (
            rng.random_range(0..200),
            rng.random_range(0..200),
            rng.random_range(0..200),
        );
        let w = table.words();
        if index.answer_index(&w[a], &w[b], &w[c]).ok() == Some(exhaustive_answer(&table, a, b, c)) {
            agree += 1;
        }
    }

    // Exact parallelograms: d = b − a + c for 30 disjoint quadruples.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dim = 32;
    let mut cols = Vec::new();
    for _ in 0..30 {
        let a = gaussian(&mut rng, dim, 1);
        let b = gaussian(&mut rng, dim, 1);
        let c = gaussian(&mut rng, dim, 1);
        let d = &b - &a + &c;
        cols.extend([a, b, c, d]);
    }
    let vectors = DMatrix::from_columns(&cols.iter().map(|m| m.column(0).into_owned()).collect::<Vec<_>>());
    let para = EmbeddingTable::new(words("p", cols.len()), vectors).unwrap();
    let para_index = CosineIndex::new(&para);
    let w = para.words();
    let solved = (0..30)
        .filter(|q| para_index.answer(&w[4 * q], &w[4 * q + 1], &w[4 * q + 2]).ok() == Some(w[4 * q + 3].as_str()))
        .count();
    check(
        agree == 100 && solved == 30,
        format!("{agree}/100 queries match exhaustive scan, parallelogram accuracy {solved}/30"),
    )
}

fn run_pipeline(x: &Path, z: &Path, bench: &Path, out: &Path) -> Result<(), String> {
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let res = geometa(&[
        "pipeline",
        &s(x),
        &s(z),
        "--datasets",
        &s(bench),
        "--out-dir",
        &s(out),
        "--seed",
        "42",
    ]);
    if res.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&res.stderr).into_owned())
    }
}

fn end_to_end_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let pair = synthetic_pair(10, 12, 1000, 50);
    let (x, z) = write_pair(dir.path(), &pair);
    let bench = dir.path().join("bench");
    write_datasets(&bench, 11, 1000);
    let outs = [dir.path().join("run1"), dir.path().join("run2")];
    for out in &outs {
        if let Err(e) = run_pipeline(&x, &z, &bench, out) {
            return Outcome::Fail(format!("pipeline failed: {e}"));
        }
    }
    let mut differing = Vec::new();
    for name in ["params.txt", "meta.txt", "report.tsv"] {
        let a = fs::read(outs[0].join(name));
        let b = fs::read(outs[1].join(name));
        match (a, b) {
            (Ok(a), Ok(b)) if a == b => {}
            _ => differing.push(name),
        }
    }
    check(
        differing.is_empty(),
        if differing.is_empty() {
            "params, meta and report byte-identical across two runs".to_string()
        } else {
            format!("differing or missing: {}", differing.join(", "))
        },
    )
}

/// Mean score of the word-analogy rows of a report.
fn mean_analogy(report: &Path) -> Result<f64, String> {
    let text = fs::read_to_string(report).map_err(|e| e.to_string())?;
    let scores: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split('\t').collect::<Vec<_>>())
        .filter(|f| f.len() >= 4 && f[1] == "analogy")
        .filter_map(|f| f[3].parse().ok())
        .collect();
    if scores.is_empty() {
        return Err("no word-analogy rows in report".into());
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

fn full_scale_trend() -> Outcome {
    let vars = ["GEOMETA_FULL_X", "GEOMETA_FULL_Z", "GEOMETA_FULL_BENCH"].map(std::env::var);
    let [Ok(x), Ok(z), Ok(bench)] = vars else {
        return Outcome::Skip("set GEOMETA_FULL_X, GEOMETA_FULL_Z and GEOMETA_FULL_BENCH to run".into());
    };
    let max_words = std::env::var("GEOMETA_FULL_MAX_WORDS").ok();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = |name: &str| d.join(name).to_str().unwrap().to_string();
    let with_limit = |mut args: Vec<String>| {
        if let Some(m) = &max_words {
            args.extend(["--max-words".to_string(), m.clone()]);
        }
        args
    };
    let call = |args: Vec<String>| -> Result<(), String> {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let res = geometa(&refs);
        if res.status.success() {
            Ok(())
        } else {
            Err(String::from_utf8_lossy(&res.stderr).into_owned())
        }
    };
    let steps = || -> Result<(f64, f64), String> {
        call(with_limit(
            ["pipeline", &x, &z, "--datasets", &bench, "--out-dir", &p("geo"), "--mode", "geo-conc"]
                .map(String::from)
                .to_vec(),
        ))?;
        call(with_limit(
            ["transform", &x, &z, "--mode", "conc", "--out", &p("conc.txt")].map(String::from).to_vec(),
        ))?;
        call(
            ["eval", &p("conc.txt"), "--datasets", &bench, "--out", &p("conc.tsv")]
                .map(String::from)
                .to_vec(),
        )?;
        Ok((mean_analogy(&d.join("geo").join("report.tsv"))?, mean_analogy(&d.join("conc.tsv"))?))
    };
    match steps() {
        Ok((geo, conc)) => check(geo > conc, format!("mean word analogy: geo-conc {geo:.4} vs conc {conc:.4}")),
        Err(e) => Outcome::Fail(e),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("identity specialization", Duration::from_secs(1), identity_specialization),
        ("gradient correctness", Duration::from_secs(10), gradient_correctness),
        ("gram-trick exactness", Duration::from_secs(5), gram_trick),
        ("feasibility under optimization", Duration::from_secs(30), feasibility),
        ("synthetic recovery", Duration::from_secs(60), synthetic_recovery),
        ("matrix square root", Duration::from_secs(5), matrix_sqrt),
        ("spearman oracle", Duration::from_secs(5), spearman_oracle),
        ("analogy oracle", Duration::from_secs(10), analogy_oracle),
        ("end-to-end determinism", Duration::from_secs(120), end_to_end_determinism),
        ("full-scale trend", Duration::MAX, full_scale_trend),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let timing = if limit == Duration::MAX {
            format!("{:.2}s", elapsed.as_secs_f64())
        } else {
            format!("{:.2}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs())
        };
        let (tag, detail) = match outcome {
            Outcome::Pass(d) if elapsed < limit => ("PASS", d),
            Outcome::Pass(d) => ("FAIL", format!("{d}; exceeded time limit")),
            Outcome::Fail(d) => ("FAIL", d),
            Outcome::Skip(d) => ("SKIP", d),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("[{tag}] criterion {}: {name} — {detail} ({timing})", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
