#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn geometa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geometa"))
        .args(args)
        .output()
        .expect("failed to launch geometa")
}

pub fn write_table(path: &Path, words: &[String], vectors: &DMatrix<f64>) {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", words.len(), vectors.nrows());
    for (i, w) in words.iter().enumerate() {
        out.push_str(w);
        for v in vectors.column(i).iter() {
            let _ = write!(out, " {v:.6}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).unwrap();
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal)).qr().q()
}

/// Source x over `w0..w{n}` plus `extra` x-only words; source z is a
/// rotated, slightly noisy copy over `w0..w{n}` plus `extra` z-only words.
pub struct SyntheticPair {
    pub x_words: Vec<String>,
    pub x: DMatrix<f64>,
    pub z_words: Vec<String>,
    pub z: DMatrix<f64>,
}

pub fn synthetic_pair(seed: u64, d: usize, n: usize, extra: usize) -> SyntheticPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n + extra;
    let x = DMatrix::from_fn(d, total, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = random_orthogonal(&mut rng, d);
    let noise = DMatrix::from_fn(d, total, |_, _| 0.05 * rng.sample::<f64, _>(StandardNormal));
    let z = &q * &x + noise;
    let x_words = (0..total)
        .map(|i| if i < n { format!("w{i}") } else { format!("xonly{i}") })
        .collect();
    let z_words = (0..total)
        .map(|i| if i < n { format!("w{i}") } else { format!("zonly{i}") })
        .collect();
    SyntheticPair {
        x_words,
        x,
        z_words,
        z,
    }
}

pub fn write_pair(dir: &Path, pair: &SyntheticPair) -> (std::path::PathBuf, std::path::PathBuf) {
    let px = dir.join("x.txt");
    let pz = dir.join("z.txt");
    write_table(&px, &pair.x_words, &pair.x);
    write_table(&pz, &pair.z_words, &pair.z);
    (px, pz)
}

/// Small benchmark directory over the synthetic vocabulary.
pub fn write_datasets(dir: &Path, seed: u64, n: usize) {
    std::fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sim = String::new();
    for _ in 0..40 {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let _ = writeln!(sim, "w{a}\tw{b}\t{:.2}", rng.random_range(0.0..10.0));
    }
    sim.push_str("w0\tnot_a_word\t5.0\n");
    std::fs::write(dir.join("toy.sim.tsv"), sim).unwrap();

    let mut ana = String::new();
    for _ in 0..20 {
        let q: Vec<usize> = (0..4).map(|_| rng.random_range(0..n)).collect();
        let _ = writeln!(ana, "w{}\tw{}\tw{}\tw{}", q[0], q[1], q[2], q[3]);
    }
    std::fs::write(dir.join("toy.ana.tsv"), ana).unwrap();

    let mut scored = String::new();
    for _ in 0..20 {
        let q: Vec<usize> = (0..4).map(|_| rng.random_range(0..n)).collect();
        let _ = writeln!(scored, "w{}\tw{}\tw{}\tw{}\t{:.3}", q[0], q[1], q[2], q[3], rng.random_range(0.0..1.0));
    }
    std::fs::write(dir.join("toy.anascored.tsv"), scored).unwrap();
}
