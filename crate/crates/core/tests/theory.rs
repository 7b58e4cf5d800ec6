mod common;

use common::{brute_coherence, gauss_jordan_inverse, instance_on, normals, orthogonal_design, rng};
use lsrefit_core::linalg::gram;
use lsrefit_core::theory::{coherent_sign_vector_bound, InverseBoundReport};
use lsrefit_core::{
    check_inverse_bounds, generate_design, mutual_coherence, refit, solve_lasso, verify_gap_equality,
    verify_prediction_bound, NormOrder, SolverConfig,
};
use lsrefit_core::datagen::repetition_rng;
use nalgebra::DVector;
use rand::seq::index::sample;
use rand::Rng;

const ORDERS: [NormOrder; 5] =
    [NormOrder::ONE, NormOrder::TWO, NormOrder::Infinity, NormOrder::Finite(0.5), NormOrder::Finite(3.0)];

fn closed_form_norm(q: NormOrder, len: usize) -> f64 {
    match q {
        NormOrder::Infinity => 1.0,
        NormOrder::Finite(q) => (len as f64).powf(1.0 / q),
    }
}

#[test]
fn orthogonal_gap_has_closed_form() {
    for seed in 0..30 {
        let mut r = rng(100 + seed);
        let x = orthogonal_design(6, 40, &mut r);
        let n = x.nrows() as f64;
        let beta_star = DVector::from_fn(40, |j, _| if j < 6 { 0.5 + j as f64 } else { 0.0 });
        let inst = instance_on(x, beta_star, 0.5, normals(&mut r, 64));
        let lambda = 40.0;
        let fit = solve_lasso(&inst.x, &inst.y, &SolverConfig::new(lambda)).unwrap();
        assert!(!fit.support.is_empty());
        let rf = refit(&inst.x, &inst.y, &fit).unwrap();
        for q in ORDERS {
            let d = verify_gap_equality(&inst, &fit, &rf, q).unwrap();
            let expected = lambda / (2.0 * n) * closed_form_norm(q, fit.support.len());
            assert!((d.gap_norm - expected).abs() <= 1e-6 * expected, "{q:?}: {} vs {expected}", d.gap_norm);
            assert!((d.predicted_norm - expected).abs() <= 1e-6 * expected);
            assert!(!d.stabilized);
        }
    }
}

#[test]
fn singleton_gap_is_half_lambda_over_n() {
    let mut r = rng(9);
    let x = orthogonal_design(5, 10, &mut r);
    let beta_star = DVector::from_fn(10, |j, _| if j == 3 { 2.0 } else { 0.0 });
    let inst = instance_on(x, beta_star, 0.1, normals(&mut r, 32));
    let lambda = 20.0;
    let fit = solve_lasso(&inst.x, &inst.y, &SolverConfig::new(lambda)).unwrap();
    assert_eq!(fit.support, vec![3]);
    let rf = refit(&inst.x, &inst.y, &fit).unwrap();
    let d = verify_gap_equality(&inst, &fit, &rf, NormOrder::Infinity).unwrap();
    let expected = lambda / 64.0;
    assert!((d.gap_norm - expected).abs() <= 1e-9);
    assert!((d.predicted_norm - expected).abs() <= 1e-9);
}

#[test]
fn orthogonal_prediction_bound_has_closed_form() {
    for seed in 0..30 {
        let mut r = rng(200 + seed);
        let x = orthogonal_design(6, 50, &mut r);
        let n = x.nrows() as f64;
        let beta_star = DVector::from_fn(50, |j, _| if j < 5 { 1.0 } else { 0.0 });
        let sigma = 0.7;
        let inst = instance_on(x, beta_star, sigma, normals(&mut r, 64));
        let lambda = 30.0;
        let fit = solve_lasso(&inst.x, &inst.y, &SolverConfig::new(lambda)).unwrap();
        let rf = refit(&inst.x, &inst.y, &fit).unwrap();
        let pb = verify_prediction_bound(&inst, &fit, &rf).unwrap();
        let eps = inst.noise.as_ref().unwrap();
        let noise_corr = fit.support.iter().map(|&j| inst.x.column(j).dot(eps).abs()).fold(0.0, f64::max);
        let expected = lambda * sigma / n * fit.support.len() as f64 * noise_corr;
        assert!((pb.bound - expected).abs() <= 1e-6 * (1.0 + expected));
        assert!(pb.holds);
    }
}

#[test]
fn coherence_matches_brute_force() {
    let x = generate_design(200, 20, 0.5, &mut repetition_rng(4, 0)).unwrap();
    let a = [0, 1, 2, 3, 4];
    let c = mutual_coherence(&x, &a).unwrap();
    let (all, within) = brute_coherence(&x, &a);
    assert!((c.against_all - all).abs() <= 1e-9 * all);
    assert!((c.within - within).abs() <= 1e-9 * within);

    let identical = generate_design(30, 4, 1.0, &mut repetition_rng(4, 1)).unwrap();
    let c = mutual_coherence(&identical, &[0, 2]).unwrap();
    assert!((c.within - 30.0).abs() < 1e-9);

    let ortho = orthogonal_design(4, 8, &mut rng(4));
    let c = mutual_coherence(&ortho, &[0, 1, 2, 3]).unwrap();
    assert_eq!((c.against_all, c.within), (0.0, 0.0));
}

#[test]
fn inverse_bounds_agree_with_direct_inversion() {
    let mut accepted = 0;
    let mut rejected = 0;
    for seed in 0..100u64 {
        let mut r = rng(300 + seed);
        let n = r.random_range(50..400);
        let p = 30;
        let kappa = r.random_range(0.0..0.35);
        let x = generate_design(n, p, kappa, &mut repetition_rng(seed, 7)).unwrap();
        let size = r.random_range(1..=10);
        let mut a = sample(&mut r, p, size).into_vec();
        a.sort_unstable();
        let (_, within) = brute_coherence(&x, &a);
        let threshold = n as f64 / (2.0 * size as f64);
        match check_inverse_bounds(&x, &a).unwrap() {
            InverseBoundReport::NotApplicable { .. } => {
                assert!(within > threshold);
                rejected += 1;
            }
            InverseBoundReport::Checked(report) => {
                assert!(within <= threshold);
                accepted += 1;
                let inv = gauss_jordan_inverse(&gram(&x, &a));
                let nf = n as f64;
                let lower = 1.0 / nf - 1.0 / (nf * size as f64);
                let upper = 1.0 / nf + 1.0 / (nf * size as f64);
                for (l, col) in report.columns.iter().enumerate() {
                    let off: f64 = (0..size).filter(|&k| k != l).map(|k| inv[(k, l)].abs()).sum();
                    assert!((col.diagonal - inv[(l, l)]).abs() <= 1e-10 / nf);
                    assert!((col.off_diagonal_sum - off).abs() <= 1e-10 / nf);
                    assert!(off <= lower + 1e-15 && lower <= inv[(l, l)] && inv[(l, l)] <= upper);
                    assert!(col.holds);
                }
            }
        }
    }
    assert!(accepted > 10 && rejected > 0, "accepted {accepted}, rejected {rejected}");
}

#[test]
fn inverse_bounds_on_orthogonal_and_singleton_sets() {
    let x = orthogonal_design(4, 10, &mut rng(1));
    let InverseBoundReport::Checked(b) = check_inverse_bounds(&x, &[1, 3, 5, 7]).unwrap() else {
        panic!("orthogonal set must be eligible");
    };
    assert!(b.strict && b.all_hold());
    for c in &b.columns {
        assert!((c.diagonal - 1.0 / 16.0).abs() < 1e-15);
        assert!(c.off_diagonal_sum.abs() < 1e-15);
    }

    let x = generate_design(40, 6, 0.8, &mut repetition_rng(2, 0)).unwrap();
    let InverseBoundReport::Checked(b) = check_inverse_bounds(&x, &[2]).unwrap() else {
        panic!("singletons are always eligible");
    };
    assert_eq!(b.lower, 0.0);
    assert!((b.columns[0].diagonal - 1.0 / 40.0).abs() < 1e-14);
    assert!(b.all_hold());
}

#[test]
fn weakly_correlated_sign_vectors_are_small() {
    let n = 4000;
    let x = generate_design(n, 40, 0.0, &mut repetition_rng(8, 0)).unwrap();
    let mut r = rng(8);
    let mut checked = 0;
    for _ in 0..50 {
        let size = r.random_range(1..=10);
        let a = sample(&mut r, 40, size).into_vec();
        let signs: Vec<f64> = (0..size).map(|_| if r.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        for q in ORDERS {
            if let Some((value, bound)) = coherent_sign_vector_bound(&x, &a, &signs, q).unwrap() {
                assert!(value <= bound, "{q:?}: {value} > {bound}");
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}
