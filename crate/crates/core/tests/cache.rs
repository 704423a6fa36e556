use std::fs;

use tmts::cache::{CacheOutcome, CachedSolution, EigenCache};
use tmts::config::RunConfig;
use tmts::solver::solve_certified;
use tmts::Error;

fn small_config(j: f64) -> RunConfig {
    let mut c = RunConfig {
        n_x: 10,
        n_y: 9,
        ladder_step: 3,
        ..Default::default()
    };
    c.params.coupling = j;
    c
}

fn compute(c: &RunConfig) -> tmts::Result<CachedSolution> {
    let (eig, report) = solve_certified(&c.params, &c.basis(), &c.lower_basis(), c.drift_tol, 1024)?;
    Ok(CachedSolution {
        eig,
        convergence: Some(report),
    })
}

#[test]
fn round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cache = EigenCache::new(dir.path());
    let c = small_config(1.5);
    let key = c.physics_hash();
    let sol = compute(&c).unwrap();
    cache.store(&key, &sol).unwrap();
    let back = cache.load(&key).unwrap().expect("hit");
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(back.eig.energies()), bits(sol.eig.energies()));
    assert_eq!(bits(back.eig.vectors()), bits(sol.eig.vectors()));
    assert_eq!(back.eig.converged_upto(), sol.eig.converged_upto());
    assert_eq!(back.convergence, sol.convergence);
}

#[test]
fn changed_coupling_misses() {
    let dir = tempfile::tempdir().unwrap();
    let cache = EigenCache::new(dir.path());
    let a = small_config(1.5);
    let b = small_config(0.3);
    assert_ne!(a.physics_hash(), b.physics_hash());
    let (_, first) = cache.load_or_compute(&a.physics_hash(), || compute(&a)).unwrap();
    assert_eq!(first, CacheOutcome::Miss);
    let (_, again) = cache.load_or_compute(&a.physics_hash(), || compute(&a)).unwrap();
    assert_eq!(again, CacheOutcome::Hit);
    assert!(cache.load(&b.physics_hash()).unwrap().is_none());
}

#[test]
fn damaged_files_are_detected_and_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    let cache = EigenCache::new(dir.path());
    let c = small_config(1.5);
    let key = c.physics_hash();
    let (sol, _) = cache.load_or_compute(&key, || compute(&c)).unwrap();
    let path = cache.path_for(&key);
    let bytes = fs::read(&path).unwrap();

    fs::write(&path, &bytes[..bytes.len() - 100]).unwrap();
    assert!(matches!(cache.load(&key), Err(Error::CorruptCache { .. })));
    let (rebuilt, outcome) = cache.load_or_compute(&key, || compute(&c)).unwrap();
    assert_eq!(outcome, CacheOutcome::Recomputed);
    assert_eq!(rebuilt.eig.energies(), sol.eig.energies());

    let mut flipped = bytes.clone();
    let mid = flipped.len() / 2;
    flipped[mid] ^= 0x40;
    fs::write(&path, &flipped).unwrap();
    assert!(matches!(cache.load(&key), Err(Error::CorruptCache { .. })));

    fs::write(&path, b"{\"format\":\"tmts-eigen\"}\n").unwrap();
    assert!(matches!(cache.load(&key), Err(Error::CorruptCache { .. })));
}
