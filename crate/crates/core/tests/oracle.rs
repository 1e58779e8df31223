mod common;

use common::oracle::{brute_offset_b, brute_svm, complement_basis, fd_grad, naive_loss, OracleError};
use common::{random_generated, random_separable, signed_rows};
use eoslab::geometry::DEFAULT_TOL;
use eoslab::{
    loss_and_grad, make_two_point, margin_offset, solve_hard_margin, solve_hard_margin_lenient, LossKind, Potential,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn brute_svm_two_point() {
    let ds = make_two_point(0.2).unwrap();
    let s = brute_svm(&signed_rows(&ds)).unwrap();
    assert!((s.gamma - 0.2).abs() < 1e-12);
    assert!((s.w[0] - 5.0).abs() < 1e-12 && s.w[1].abs() < 1e-12);
    assert_eq!(s.support, vec![0, 1]);
}

#[test]
fn brute_svm_caps_and_rejects() {
    let big = vec![vec![1.0; 5]; 3];
    assert_eq!(brute_svm(&big).unwrap_err(), OracleError::Cap);
    let xor = vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0], vec![-1.0, 1.0]];
    assert_eq!(brute_svm(&xor).unwrap_err(), OracleError::NotSeparable);
}

#[test]
fn solver_matches_brute_svm() {
    for seed in 0..50 {
        let ds = random_separable(seed, 10, 3);
        // Random supports rarely span the complement, so the offset may be degenerate.
        let (geo, _) = solve_hard_margin_lenient(&ds, DEFAULT_TOL).unwrap();
        let brute = brute_svm(&signed_rows(&ds)).unwrap();
        assert!((geo.gamma - brute.gamma).abs() < 1e-6, "seed {seed}: {} vs {}", geo.gamma, brute.gamma);
        for (a, b) in geo.w_hat.iter().zip(&brute.w) {
            assert!(rel_close(*a, *b, 1e-6), "seed {seed}: w_hat {:?} vs {:?}", geo.w_hat, brute.w);
        }
    }
}

#[test]
fn offset_matches_brute_offset() {
    for seed in 0..25 {
        let ds = random_generated(seed);
        let geo = solve_hard_margin(&ds, DEFAULT_TOL).unwrap();
        let b = margin_offset(&geo, &ds).unwrap();
        let brute = brute_svm(&signed_rows(&ds)).unwrap();
        let basis = complement_basis(&brute.w);
        let features: Vec<Vec<f64>> =
            brute.support.iter().map(|&i| basis.iter().map(|f| dot(f, ds.signed_row(i))).collect()).collect();
        let ob = brute_offset_b(&features).unwrap();
        assert!((b - ob).abs() < 1e-4, "seed {seed}: b {b} vs oracle {ob}");
    }
}

#[test]
fn offset_oracle_known_shapes() {
    let pair = vec![vec![1.0], vec![-1.0]];
    assert_eq!(brute_offset_b(&pair).unwrap(), 1.0);
    let square = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
    assert!((brute_offset_b(&square).unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
}

#[test]
fn loss_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..200 {
        let ds = random_separable(1000 + k, 10, 3);
        let z = signed_rows(&ds);
        let w: Vec<f64> = (0..ds.d()).map(|_| rng.random_range(-2.0..2.0)).collect();
        for (kind, exp) in [(LossKind::Logistic, false), (LossKind::Exponential, true)] {
            let (loss, grad) = loss_and_grad(&ds, kind, &w).unwrap();
            assert!(rel_close(loss, naive_loss(&z, &w, exp), 1e-12));
            let fd = fd_grad(|v| naive_loss(&z, v, exp), &w, 1e-6);
            for (g, f) in grad.iter().zip(&fd) {
                assert!(rel_close(*g, *f, 1e-5), "{kind} at {w:?}: {grad:?} vs {fd:?}");
            }
        }
    }
}

#[test]
fn potential_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 0..200 {
        let ds = random_generated(2000 + k);
        let geo = solve_hard_margin(&ds, DEFAULT_TOL).unwrap();
        let pot = Potential::new(&geo, &ds);
        let feats: Vec<Vec<f64>> =
            geo.support.iter().map(|&i| geo.basis.iter().map(|f| dot(f, ds.signed_row(i))).collect()).collect();
        let g_def = |v: &[f64]| feats.iter().map(|a| (-dot(a, v)).exp()).sum::<f64>();
        let v: Vec<f64> = (0..pot.dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
        assert!(rel_close(pot.g(&v), g_def(&v), 1e-12));
        let fd = fd_grad(g_def, &v, 1e-6);
        for (g, f) in pot.grad(&v).iter().zip(&fd) {
            assert!(rel_close(*g, *f, 1e-5));
        }
    }
}
