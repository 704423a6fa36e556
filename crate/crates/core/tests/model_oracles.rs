mod common;

use std::f64::consts::{FRAC_PI_6, PI};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use tmts::model::{build_hamiltonian, op_element, op_matrix_1d, quadratic_expand, Operator1d};
use tmts::{BasisSpec, ModelParams, Surface};

#[test]
fn quadrature_nodes_integrate_gaussian_moments() {
    let (t, w) = gauss_hermite(20);
    let m0: f64 = w.iter().sum();
    let m2: f64 = t.iter().zip(&w).map(|(x, w)| w * x * x).sum();
    assert!((m0 - PI.sqrt()).abs() < 1e-13);
    assert!((m2 - 0.5 * PI.sqrt()).abs() < 1e-13);
}

#[test]
fn one_dimensional_elements_match_quadrature() {
    for omega in [0.7, 1.0, 1.3, 2.0] {
        for n in 0..=8 {
            for m in 0..=8 {
                let x = ho_matrix_element(n, m, omega, |x| x);
                let x2 = ho_matrix_element(n, m, omega, |x| x * x);
                let p2 = ho_p2_element(n, m, omega);
                assert!(
                    (op_element(Operator1d::Position, omega, n, m) - x).abs() < 1e-12,
                    "x {n} {m}"
                );
                assert!(
                    (op_element(Operator1d::PositionSquared, omega, n, m) - x2).abs() < 1e-12,
                    "x2 {n} {m}"
                );
                assert!(
                    (op_element(Operator1d::MomentumSquared, omega, n, m) - p2).abs() < 1e-11,
                    "p2 {n} {m}"
                );
            }
        }
    }
}

#[test]
fn documented_one_dimensional_values() {
    let x = op_matrix_1d(Operator1d::Position, 1.0, 3).unwrap();
    assert!((x.get(0, 1) - 0.5f64.sqrt()).abs() < 1e-15);
    let x2 = op_matrix_1d(Operator1d::PositionSquared, 2.0, 3).unwrap();
    assert!((x2.get(0, 0) - 0.25).abs() < 1e-15);
    let p2 = op_matrix_1d(Operator1d::MomentumSquared, 1.0, 3).unwrap();
    assert!((p2.get(0, 2) + 2f64.sqrt() / 2.0).abs() < 1e-15);
}

#[test]
fn expansion_reproduces_direct_potential_at_random_points() {
    let p = ModelParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for surface in Surface::BOTH {
        let q = quadratic_expand(&p, surface);
        for _ in 0..100 {
            let (x, y) = (rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
            let on_a = surface == Surface::A;
            let eps = p.offset(surface);
            let direct = reference_potential(on_a, p.omega_x, p.omega_y, p.theta, p.a, eps, x, y);
            assert!((q.eval(x, y) - direct).abs() < 1e-12, "{surface} ({x}, {y})");
        }
    }
}

#[test]
fn hamiltonian_matches_two_dimensional_quadrature() {
    let p = ModelParams::default();
    assert_eq!(p.theta, FRAC_PI_6);
    let b = BasisSpec::matched(&p, 5, 5);
    let h = build_hamiltonian(&p, &b).unwrap();
    let oracle = quadrature_hamiltonian(&p, &b);
    let mut worst = 0.0f64;
    for (i, row) in oracle.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            worst = worst.max((h.get(i, j) - v).abs());
        }
    }
    assert!(worst < 1e-8, "max deviation {worst:e}");
}

#[test]
fn hamiltonian_matches_quadrature_in_a_mismatched_basis() {
    let p = ModelParams {
        theta: 1.1,
        a: 0.8,
        eps_a: -0.2,
        eps_b: 0.4,
        coupling: 0.6,
        ..Default::default()
    };
    let b = BasisSpec {
        omega_x: 0.8,
        omega_y: 1.6,
        n_x: 4,
        n_y: 3,
    };
    let h = build_hamiltonian(&p, &b).unwrap();
    let oracle = quadrature_hamiltonian(&p, &b);
    for (i, row) in oracle.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!((h.get(i, j) - v).abs() < 1e-8, "({i}, {j}) {} vs {v}", h.get(i, j));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expansion_is_exact_for_all_parameters(
        wx in 0.2f64..3.0,
        wy in 0.2f64..3.0,
        theta in 0.0f64..std::f64::consts::FRAC_PI_2,
        a in 0.0f64..3.0,
        eps in -2.0f64..2.0,
        seed in 0u64..10_000,
    ) {
        let p = ModelParams { omega_x: wx, omega_y: wy, theta, a, eps_a: eps, eps_b: -eps, coupling: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for surface in Surface::BOTH {
            let q = quadratic_expand(&p, surface);
            let on_a = surface == Surface::A;
            for _ in 0..1000 {
                let (x, y) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
                let direct = reference_potential(on_a, wx, wy, theta, a, p.offset(surface), x, y);
                prop_assert!((q.eval(x, y) - direct).abs() < 1e-10 * (1.0 + direct.abs()));
            }
        }
    }

    #[test]
    fn assembly_is_bitwise_symmetric(
        theta in 0.0f64..std::f64::consts::FRAC_PI_2,
        a in 0.0f64..2.5,
        j in -3.0f64..3.0,
    ) {
        let p = ModelParams { theta, a, coupling: j, ..Default::default() };
        let b = BasisSpec::matched(&p, 4, 6);
        let h = build_hamiltonian(&p, &b).unwrap();
        prop_assert!(h.is_exactly_symmetric());
        let again = build_hamiltonian(&p, &b).unwrap();
        prop_assert_eq!(h.as_slice(), again.as_slice());
    }
}
