mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use tmts::entanglement::{
    entanglement_spectrum, entropy_from_decomposition, reduced_density, surface_decomposition, von_neumann_entropy,
};
use tmts::model::build_hamiltonian;
use tmts::solver::{eigensolve_sym, to_rotated_basis};
use tmts::{BasisSpec, ModelParams};

fn random_state(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| gaussian(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

#[test]
fn reduced_density_matches_brute_force_partial_trace() {
    let m = 16; // N_x = N_y = 3
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let psi = random_state(&mut rng, 2 * m);
        let (ca, cb) = psi.split_at(m);
        let (c1, c2) = to_rotated_basis(ca, cb).unwrap();
        let rho = reduced_density(&c1, &c2).unwrap();
        let r = brute_force_reduced(&psi);
        assert!((rho.rho11 - r[0][0]).abs() < 1e-12);
        assert!((rho.rho22 - r[1][1]).abs() < 1e-12);
        assert!((rho.rho12 - r[0][1]).abs() < 1e-12);
        assert!((rho.rho12 - r[1][0]).abs() < 1e-12);
        let d = surface_decomposition(ca, cb).unwrap();
        assert!((rho.rho11 - (0.5 + d.s_ab)).abs() < 1e-12);
        assert!((rho.rho12.abs() - d.dp_ab.abs()).abs() < 1e-12);
    }
}

#[test]
fn eigenstate_identity_holds_on_a_small_solve() {
    let p = ModelParams::default();
    let b = BasisSpec::matched(&p, 10, 10);
    let eig = eigensolve_sym(&build_hamiltonian(&p, &b).unwrap(), &b).unwrap();
    let spec = entanglement_spectrum(&eig, 0..eig.dim()).unwrap();
    assert_eq!(spec.records.len(), eig.dim());
    assert!(spec.max_identity_deviation < 1e-10);
    for r in &spec.records {
        assert!(r.s_vn >= -1e-15 && r.s_vn <= std::f64::consts::LN_2 + 1e-12);
    }
}

proptest! {
    #[test]
    fn entropy_is_basis_independent(seed in 0u64..5000, len in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state(&mut rng, 2 * len);
        let (ca, cb) = psi.split_at(len);
        // the {A, B} reduced density has the same spectrum as the rotated one
        let in_ab = von_neumann_entropy(&reduced_density(ca, cb).unwrap());
        let (c1, c2) = to_rotated_basis(ca, cb).unwrap();
        let rotated = von_neumann_entropy(&reduced_density(&c1, &c2).unwrap());
        prop_assert!((in_ab - rotated).abs() < 1e-12);
        let d = surface_decomposition(ca, cb).unwrap();
        let via = entropy_from_decomposition(d.s_ab, d.dp_ab).unwrap();
        prop_assert!((via - rotated).abs() < 1e-10);
    }
}
