//! Electronic reduced density matrix and entanglement entropy per eigenstate.
//!
//! For an eigenstate Σ_i |φ_i⟩|i⟩⟩ the electronic reduced density matrix in
//! the rotated basis |1⟩⟩ = (|A⟩+|B⟩)/√2, |2⟩⟩ = (−|A⟩+|B⟩)/√2 is
//!
//! ```text
//! ρ11 = ½ + S_AB,   ρ22 = ½ − S_AB,   |ρ12| = |ΔP_AB|
//! S_AB = ⟨φ_A|φ_B⟩,  ΔP_AB = (⟨φ_A|φ_A⟩ − ⟨φ_B|φ_B⟩)/2
//! ```
//!
//! so its eigenvalues are ½ ± √(S_AB² + ΔP_AB²). Computed directly,
//! ρ12 = Σ_j C_1j C_2j = −ΔP_AB; only |ρ12| enters the eigenvalues, and
//! `dp_ab` is stored with the population-difference sign above.

use std::ops::Range;

use crate::output::{num, CsvTable, Metadata};
use crate::solver::{to_rotated_basis, EigenResult};
use crate::{Error, Result};

/// Normalization tolerance on input states.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Maximum allowed disagreement between the two entropy routes.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// Real symmetric 2×2 electronic density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix2 {
    pub rho11: f64,
    pub rho22: f64,
    pub rho12: f64,
}

impl DensityMatrix2 {
    pub fn trace(&self) -> f64 {
        self.rho11 + self.rho22
    }

    pub fn det(&self) -> f64 {
        self.rho11 * self.rho22 - self.rho12 * self.rho12
    }

    /// Closed-form eigenvalues, largest first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * self.trace();
        let half_diff = 0.5 * (self.rho11 - self.rho22);
        let r = half_diff.hypot(self.rho12);
        (mean + r, mean - r)
    }

    pub fn is_valid(&self) -> bool {
        (self.trace() - 1.0).abs() <= 1e-12 && self.det() >= -1e-12
    }
}

/// Entanglement data for one eigenstate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntanglementRecord {
    pub k: usize,
    pub energy: f64,
    /// von Neumann entropy in nats.
    pub s_vn: f64,
    pub s_ab: f64,
    pub dp_ab: f64,
}

/// Overlap and half population difference of the surface components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceDecomposition {
    pub s_ab: f64,
    pub dp_ab: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_norm(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let norm_sq = dot(a, a) + dot(b, b);
    if !((norm_sq - 1.0).abs() <= NORM_TOLERANCE) {
        return Err(Error::NotNormalized { norm_sq });
    }
    Ok(())
}

/// ρ = Tr_vib |Φ⟩⟨Φ| from the rotated-basis components.
pub fn reduced_density(coeffs_1: &[f64], coeffs_2: &[f64]) -> Result<DensityMatrix2> {
    check_norm(coeffs_1, coeffs_2)?;
    Ok(DensityMatrix2 {
        rho11: dot(coeffs_1, coeffs_1),
        rho22: dot(coeffs_2, coeffs_2),
        rho12: dot(coeffs_1, coeffs_2),
    })
}

/// −λ ln λ with 0 ln 0 = 0.
fn entropy_term(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        0.0
    } else {
        -lambda * lambda.ln()
    }
}

/// −Tr ρ ln ρ in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix2) -> f64 {
    let (l1, l2) = rho.eigenvalues();
    entropy_term(l1) + entropy_term(l2)
}

pub fn surface_decomposition(coeffs_a: &[f64], coeffs_b: &[f64]) -> Result<SurfaceDecomposition> {
    check_norm(coeffs_a, coeffs_b)?;
    Ok(SurfaceDecomposition {
        s_ab: dot(coeffs_a, coeffs_b),
        dp_ab: 0.5 * (dot(coeffs_a, coeffs_a) - dot(coeffs_b, coeffs_b)),
    })
}

/// Entropy of the eigenvalues ½ ± √(S_AB² + ΔP_AB²).
pub fn entropy_from_decomposition(s_ab: f64, dp_ab: f64) -> Result<f64> {
    let radius_sq = s_ab * s_ab + dp_ab * dp_ab;
    if !(radius_sq <= 0.25 + NORM_TOLERANCE) {
        return Err(Error::RadicandOutOfRange { radius_sq });
    }
    let r = radius_sq.sqrt().min(0.5);
    Ok(entropy_term(0.5 + r) + entropy_term(0.5 - r))
}

/// Records over `range` plus the worst disagreement between the two entropy
/// routes.
#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementSpectrum {
    pub records: Vec<EntanglementRecord>,
    pub max_identity_deviation: f64,
}

impl EntanglementSpectrum {
    pub fn to_csv(&self, meta: &Metadata) -> String {
        let mut m = meta.clone();
        m.push("identity_max_deviation", num(self.max_identity_deviation));
        let mut t = CsvTable::new(&m, &["k", "energy", "S_vN", "S_AB", "dP_AB"]);
        for r in &self.records {
            t.row([r.k.to_string(), num(r.energy), num(r.s_vn), num(r.s_ab), num(r.dp_ab)]);
        }
        t.into_string()
    }

    pub fn mean_entropy(&self) -> f64 {
        self.records.iter().map(|r| r.s_vn).sum::<f64>() / self.records.len().max(1) as f64
    }

    /// Fraction of states with S_vN above `fraction · ln 2`.
    pub fn fraction_above(&self, fraction: f64) -> f64 {
        let cut = fraction * std::f64::consts::LN_2;
        let n = self.records.iter().filter(|r| r.s_vn > cut).count();
        n as f64 / self.records.len().max(1) as f64
    }
}

/// Entanglement record of eigenstate `k`, with the direct-minus-decomposition
/// entropy deviation.
pub fn entanglement_record(eig: &EigenResult, k: usize) -> Result<(EntanglementRecord, f64)> {
    let (ca, cb) = (eig.coeffs_a(k), eig.coeffs_b(k));
    let (c1, c2) = to_rotated_basis(ca, cb)?;
    let s_direct = von_neumann_entropy(&reduced_density(&c1, &c2)?);
    let dec = surface_decomposition(ca, cb)?;
    let s_dec = entropy_from_decomposition(dec.s_ab, dec.dp_ab)?;
    let record = EntanglementRecord {
        k,
        energy: eig.energies()[k],
        s_vn: s_direct,
        s_ab: dec.s_ab,
        dp_ab: dec.dp_ab,
    };
    Ok((record, (s_direct - s_dec).abs()))
}

/// Records for every eigenstate in `range`, which must lie inside the
/// analysable (converged) window.
pub fn entanglement_spectrum(eig: &EigenResult, range: Range<usize>) -> Result<EntanglementSpectrum> {
    let limit = eig.analysable_end();
    if range.start > range.end || range.end > limit {
        return Err(Error::OutOfRange {
            start: range.start,
            end: range.end,
            limit,
        });
    }
    let mut records = Vec::with_capacity(range.len());
    let mut worst = 0.0f64;
    for k in range {
        let (rec, dev) = entanglement_record(eig, k)?;
        if !(dev < IDENTITY_TOLERANCE) {
            return Err(Error::IdentityViolation { k, deviation: dev });
        }
        worst = worst.max(dev);
        records.push(rec);
    }
    Ok(EntanglementSpectrum {
        records,
        max_identity_deviation: worst,
    })
}

/// Pearson correlation coefficient; `None` when either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x[..n].iter().zip(&y[..n]) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    use proptest::prelude::*;

    #[test]
    fn pure_surface_a_state() {
        let (c1, c2) = to_rotated_basis(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        let rho = reduced_density(&c1, &c2).unwrap();
        assert!((rho.rho11 - 0.5).abs() < 1e-15);
        assert!((rho.rho22 - 0.5).abs() < 1e-15);
        assert!((rho.rho12 + 0.5).abs() < 1e-15);
        let (l1, l2) = rho.eigenvalues();
        assert!((l1 - 1.0).abs() < 1e-15 && l2.abs() < 1e-15);
        let d = surface_decomposition(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!((d.s_ab, d.dp_ab), (0.0, 0.5));
    }

    #[test]
    fn product_state_in_rotated_basis() {
        let rho = reduced_density(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(
            rho,
            DensityMatrix2 {
                rho11: 1.0,
                rho22: 0.0,
                rho12: 0.0
            }
        );
        assert_eq!(von_neumann_entropy(&rho), 0.0);
    }

    #[test]
    fn entropy_examples() {
        let mixed = DensityMatrix2 {
            rho11: 0.5,
            rho22: 0.5,
            rho12: 0.0,
        };
        assert!((von_neumann_entropy(&mixed) - LN_2).abs() < 1e-15);
        let q = DensityMatrix2 {
            rho11: 0.75,
            rho22: 0.25,
            rho12: 0.0,
        };
        assert!((von_neumann_entropy(&q) - 0.562335).abs() < 1e-6);
        assert!((entropy_from_decomposition(0.0, 0.0).unwrap() - LN_2).abs() < 1e-15);
        assert!(entropy_from_decomposition(0.3, 0.4).unwrap().abs() < 1e-12);
        assert!((entropy_from_decomposition(0.25, 0.0).unwrap() - 0.562335).abs() < 1e-6);
    }

    #[test]
    fn symmetric_halves() {
        let h = [FRAC_1_SQRT_2, 0.0];
        let d = surface_decomposition(&h, &h).unwrap();
        assert!((d.s_ab - 0.5).abs() < 1e-15 && d.dp_ab == 0.0);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            reduced_density(&[0.5], &[0.5]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            surface_decomposition(&[2.0], &[0.0]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            reduced_density(&[1.0], &[]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            entropy_from_decomposition(0.4, 0.4),
            Err(Error::RadicandOutOfRange { .. })
        ));
        // boundary within tolerance is accepted
        assert!(entropy_from_decomposition(0.5 + 1e-12, 0.0).is_ok());
    }

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), None);
    }

    fn normalized_pair(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(-1.0f64..1.0, len),
            prop::collection::vec(-1.0f64..1.0, len),
        )
            .prop_filter("nonzero", |(a, b)| a.iter().chain(b).any(|v| v.abs() > 1e-3))
            .prop_map(|(a, b)| {
                let n = (dot(&a, &a) + dot(&b, &b)).sqrt();
                (a.iter().map(|v| v / n).collect(), b.iter().map(|v| v / n).collect())
            })
    }

    proptest! {
        #[test]
        fn identity_and_bounds_hold((ca, cb) in normalized_pair(12)) {
            let (c1, c2) = to_rotated_basis(&ca, &cb).unwrap();
            let rho = reduced_density(&c1, &c2).unwrap();
            prop_assert!(rho.is_valid());
            let d = surface_decomposition(&ca, &cb).unwrap();
            prop_assert!((rho.rho11 - (0.5 + d.s_ab)).abs() < 1e-12);
            prop_assert!((rho.rho12 + d.dp_ab).abs() < 1e-12);
            prop_assert!(d.s_ab * d.s_ab + d.dp_ab * d.dp_ab <= 0.25 + 1e-12);

            let s = von_neumann_entropy(&rho);
            prop_assert!((0.0..=LN_2 + 1e-12).contains(&s));
            let s2 = entropy_from_decomposition(d.s_ab, d.dp_ab).unwrap();
            prop_assert!((s - s2).abs() < 1e-10);

            let (l1, l2) = rho.eigenvalues();
            prop_assert!((l1 + l2 - 1.0).abs() < 1e-12);
            prop_assert!(l2 >= -1e-12 && l1 <= 1.0 + 1e-12);

            // same spectrum in the diabatic electronic basis
            let diabatic = DensityMatrix2 { rho11: dot(&ca, &ca), rho22: dot(&cb, &cb), rho12: dot(&ca, &cb) };
            let (m1, m2) = diabatic.eigenvalues();
            prop_assert!((m1 - l1).abs() < 1e-12 && (m2 - l2).abs() < 1e-12);
        }
    }
}
