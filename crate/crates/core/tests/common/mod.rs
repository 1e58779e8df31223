#![allow(dead_code)]

pub mod oracle;

use eoslab::{gen_separable, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn signed_rows(ds: &Dataset) -> Vec<Vec<f64>> {
    ds.signed_rows().map(<[f64]>::to_vec).collect()
}

/// Separable data in the unit ball labelled by a random direction, with
/// `n <= max_n` and `d <= max_d`; points closer than 0.05 to the labelling
/// hyperplane are redrawn.
pub fn random_separable(seed: u64, max_n: usize, max_d: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let d = rng.random_range(1..=max_d);
        let n = rng.random_range(2..=max_n);
        let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dn = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if dn < 0.1 {
            continue;
        }
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        while rows.len() < n {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            if x.iter().map(|v| v * v).sum::<f64>() > 1.0 {
                continue;
            }
            let s = x.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() / dn;
            if s.abs() < 0.05 {
                continue;
            }
            labels.push(if s > 0.0 { 1 } else { -1 });
            rows.push(x);
        }
        if labels.iter().all(|&y| y == labels[0]) && rng.random_bool(0.5) {
            continue;
        }
        return Dataset::new(format!("random-{seed}"), rows, labels).unwrap();
    }
}

/// Generator instances with `d` in {2, 3}, `n <= 10` and margin in [0.1, 0.3].
pub fn random_generated(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    let d = rng.random_range(2..=3);
    let n = rng.random_range(d + 1..=10);
    let margin = rng.random_range(0.1..0.3);
    gen_separable(n, d, margin, seed).unwrap()
}
