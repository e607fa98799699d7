#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hicmapper")
}

pub fn hicmapper(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

pub fn circle60() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/circle60.csv")
}

/// Fragment pairs for `n_samples` cells on a 10 Mb chromosome. The
/// contact-decay exponent of each cell moves around a cycle, so the samples
/// trace a loop in SCC space.
pub fn write_pairs(dir: &Path, n_samples: usize, contacts: usize, seed: u64) {
    fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let length = 10_000_000u64;
    for file in 0..2 {
        let mut text = String::from("# sample_id\tpos_a\tpos_b\n");
        for s in (file..n_samples).step_by(2) {
            let phase = std::f64::consts::TAU * s as f64 / n_samples as f64;
            let exponent = 1.2 + 0.5 * phase.sin();
            let far = 0.3 + 0.2 * phase.cos();
            for _ in 0..contacts {
                let a = rng.random_range(0..length);
                let sep = if rng.random_bool(far) {
                    rng.random_range(0..length)
                } else {
                    let u: f64 = rng.random_range(0.0..1.0);
                    (200_000.0 * (1.0 - u).powf(-1.0 / exponent)) as u64
                };
                let b = (a + sep).min(length - 1);
                let _ = writeln!(text, "cell{s:02}\t{a}\t{b}");
            }
        }
        fs::write(dir.join(format!("pairs_{file}.tsv")), text).unwrap();
    }
}

/// All regular files under `dir`, as (relative path, bytes), sorted.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
