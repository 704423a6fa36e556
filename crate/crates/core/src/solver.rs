//! Dense symmetric eigendecomposition, electronic-basis transforms and
//! truncation control.
//!
//! The full spectrum is needed by the statistics, so every solve is a dense
//! tridiagonalize-and-diagonalize pass (backed by `faer`). Eigenvectors are
//! stored column-major in the diabatic layout `[C_A (M entries); C_B (M
//! entries)]`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

use faer::{MatRef, Side};

use crate::model::{build_hamiltonian_with_budget, BasisSpec, ModelParams, SymMatrix};
use crate::output::{num, CsvTable, Metadata};
use crate::{Error, Result};

/// Residual bound per eigenpair, relative to the spectral norm of H.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Default per-level drift below which a level counts as converged.
pub const DEFAULT_DRIFT_TOLERANCE: f64 = 1e-6;

/// Eigenpairs of the two-surface Hamiltonian.
///
/// Each eigenvector is sign-normalized so that its first coefficient of
/// largest magnitude is positive. Exactly degenerate levels (e.g. `J = 0`
/// with equal offsets) leave the split between surfaces of the degenerate
/// subspace to the solver; a nonzero offset difference avoids this.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    basis: BasisSpec,
    energies: Vec<f64>,
    vectors: Vec<f64>,
    converged_upto: Option<usize>,
    certified: bool,
}

impl EigenResult {
    /// Assembles a result from raw arrays; `vectors` holds `dim` columns of
    /// length `dim`.
    pub fn from_parts(basis: BasisSpec, energies: Vec<f64>, vectors: Vec<f64>) -> Result<Self> {
        let dim = basis.dim();
        if energies.len() != dim {
            return Err(Error::LengthMismatch {
                left: energies.len(),
                right: dim,
            });
        }
        if vectors.len() != dim * dim {
            return Err(Error::LengthMismatch {
                left: vectors.len(),
                right: dim * dim,
            });
        }
        Ok(Self {
            basis,
            energies,
            vectors,
            converged_upto: None,
            certified: false,
        })
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn vib_size(&self) -> usize {
        self.basis.vib_size()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Raw column-major eigenvector storage.
    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    /// Full eigenvector `k` in the diabatic layout.
    pub fn state(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.vectors[k * d..(k + 1) * d]
    }

    /// ⟨j|φ_A^(k)⟩ for all j.
    pub fn coeffs_a(&self, k: usize) -> &[f64] {
        &self.state(k)[..self.vib_size()]
    }

    /// ⟨j|φ_B^(k)⟩ for all j.
    pub fn coeffs_b(&self, k: usize) -> &[f64] {
        &self.state(k)[self.vib_size()..]
    }

    /// Highest eigenindex certified by a convergence scan, if one ran.
    pub fn converged_upto(&self) -> Option<usize> {
        self.converged_upto
    }

    /// Records the outcome of a convergence check; `None` means no level
    /// passed.
    pub fn set_converged_upto(&mut self, k: Option<usize>) {
        self.converged_upto = k;
        self.certified = true;
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    /// Exclusive upper bound of the analysable index range: everything for
    /// an uncertified result, otherwise the certified prefix.
    pub fn analysable_end(&self) -> usize {
        if !self.certified {
            return self.dim();
        }
        self.converged_upto.map_or(0, |c| (c + 1).min(self.dim()))
    }

    /// max |⟨v_k|v_l⟩ − δ_kl| over the given indices.
    pub fn orthonormality_error(&self, indices: &[usize]) -> f64 {
        let mut worst = 0.0f64;
        for (a, &k) in indices.iter().enumerate() {
            for &l in &indices[a..] {
                let dot: f64 = self.state(k).iter().zip(self.state(l)).map(|(x, y)| x * y).sum();
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

fn as_faer(h: &SymMatrix) -> MatRef<'_, f64> {
    MatRef::from_column_major_slice(h.as_slice(), h.dim(), h.dim())
}

/// All eigenpairs of `h`, which must be the matrix of `basis`.
pub fn eigensolve_sym(h: &SymMatrix, basis: &BasisSpec) -> Result<EigenResult> {
    let dim = h.dim();
    if dim != basis.dim() {
        return Err(Error::LengthMismatch {
            left: dim,
            right: basis.dim(),
        });
    }
    if h.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("H", "matrix has non-finite entries"));
    }

    let evd = as_faer(h)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence { index: None })?;
    let s = evd.S().column_vector();
    let u = evd.U();

    let mut energies: Vec<f64> = (0..dim).map(|k| s[k]).collect();
    let mut vectors = vec![0.0; dim * dim];
    for (k, col) in vectors.chunks_exact_mut(dim).enumerate() {
        for (i, c) in col.iter_mut().enumerate() {
            *c = u[(i, k)];
        }
        fix_sign(col);
    }
    drop(evd);

    // faer sorts ascending; keep the contract independent of that.
    if energies.windows(2).any(|w| w[1] < w[0]) {
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let mut sorted = vec![0.0; dim * dim];
        for (dst, &src) in order.iter().enumerate() {
            sorted[dst * dim..(dst + 1) * dim].copy_from_slice(&vectors[src * dim..(src + 1) * dim]);
        }
        energies = order.iter().map(|&i| energies[i]).collect();
        vectors = sorted;
    }

    let result = EigenResult::from_parts(*basis, energies, vectors)?;
    check_residuals(h, &result)?;
    Ok(result)
}

/// Eigenvalues only, ascending.
pub fn eigenvalues_sym(h: &SymMatrix) -> Result<Vec<f64>> {
    let mut e = as_faer(h)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence { index: None })?;
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Makes the first entry of largest magnitude positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// ‖H v_k − E_k v_k‖ ≤ tol · ‖H‖₂ for every pair, using the sparsity of H.
fn check_residuals(h: &SymMatrix, eig: &EigenResult) -> Result<()> {
    let (starts, cols, vals) = h.to_csr();
    let e = eig.energies();
    let norm = e
        .first()
        .map_or(0.0, |v| v.abs())
        .max(e.last().map_or(0.0, |v| v.abs()));
    let bound = RESIDUAL_TOLERANCE * norm.max(f64::MIN_POSITIVE);
    let dim = eig.dim();
    for (k, &ek) in e.iter().enumerate() {
        let v = eig.state(k);
        let mut r2 = 0.0;
        for i in 0..dim {
            let hv: f64 = (starts[i]..starts[i + 1]).map(|p| vals[p] * v[cols[p]]).sum();
            let r = hv - ek * v[i];
            r2 += r * r;
        }
        let residual = r2.sqrt();
        if !(residual <= bound) {
            return Err(Error::Residual {
                index: k,
                residual,
                bound,
            });
        }
    }
    Ok(())
}

/// Diabatic → rotated electronic basis:
/// C_1 = (C_A + C_B)/√2, C_2 = (−C_A + C_B)/√2.
pub fn to_rotated_basis(coeffs_a: &[f64], coeffs_b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if coeffs_a.len() != coeffs_b.len() {
        return Err(Error::LengthMismatch {
            left: coeffs_a.len(),
            right: coeffs_b.len(),
        });
    }
    let c1 = coeffs_a
        .iter()
        .zip(coeffs_b)
        .map(|(a, b)| (a + b) * FRAC_1_SQRT_2)
        .collect();
    let c2 = coeffs_a
        .iter()
        .zip(coeffs_b)
        .map(|(a, b)| (b - a) * FRAC_1_SQRT_2)
        .collect();
    Ok((c1, c2))
}

/// Inverse of [`to_rotated_basis`]:
/// C_A = (C_1 − C_2)/√2, C_B = (C_1 + C_2)/√2.
pub fn from_rotated_basis(coeffs_1: &[f64], coeffs_2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if coeffs_1.len() != coeffs_2.len() {
        return Err(Error::LengthMismatch {
            left: coeffs_1.len(),
            right: coeffs_2.len(),
        });
    }
    let ca = coeffs_1
        .iter()
        .zip(coeffs_2)
        .map(|(p, q)| (p - q) * FRAC_1_SQRT_2)
        .collect();
    let cb = coeffs_1
        .iter()
        .zip(coeffs_2)
        .map(|(p, q)| (p + q) * FRAC_1_SQRT_2)
        .collect();
    Ok((ca, cb))
}

/// Per-level energy drift across a ladder of bases.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub bases: Vec<BasisSpec>,
    /// Spectrum of each basis in the ladder.
    pub spectra: Vec<Vec<f64>>,
    /// `drifts[s][k] = |E_k(basis_{s+1}) − E_k(basis_s)|` over the levels
    /// present in both bases.
    pub drifts: Vec<Vec<f64>>,
    pub tolerance: f64,
    pub converged_upto: Option<usize>,
}

impl ConvergenceReport {
    /// Spectrum of the largest basis.
    pub fn energies(&self) -> &[f64] {
        self.spectra.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Drift between the two largest bases.
    pub fn final_drift(&self) -> &[f64] {
        self.drifts.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn to_csv(&self, meta: &Metadata) -> String {
        let mut m = meta.clone();
        if let [.., lo, hi] = self.bases.as_slice() {
            m.push("ladder", format!("({},{}) -> ({},{})", lo.n_x, lo.n_y, hi.n_x, hi.n_y));
        }
        m.push("drift_tolerance", num(self.tolerance));
        m.push(
            "converged_upto",
            self.converged_upto.map_or("none".to_string(), |k| k.to_string()),
        );
        let mut t = CsvTable::new(&m, &["k", "energy", "drift", "converged"]);
        let upto = self.converged_upto.map_or(0, |c| c + 1);
        for (k, d) in self.final_drift().iter().enumerate() {
            let ok = if k < upto { "1" } else { "0" };
            t.row([k.to_string(), num(self.energies()[k]), num(*d), ok.to_string()]);
        }
        t.into_string()
    }
}

/// Largest k such that every drift[k'] with k' ≤ k is below `tol`.
pub fn certified_upto(drift: &[f64], tol: f64) -> Option<usize> {
    drift.iter().position(|d| !(*d < tol)).map_or(
        if drift.is_empty() { None } else { Some(drift.len() - 1) },
        |first_bad| first_bad.checked_sub(1),
    )
}

/// Drift table from spectra computed on an increasing ladder of bases.
pub fn drift_report(bases: &[BasisSpec], spectra: Vec<Vec<f64>>, tol: f64) -> Result<ConvergenceReport> {
    if spectra.len() < 2 || bases.len() != spectra.len() {
        return Err(Error::InsufficientData(
            "convergence scan needs a ladder of at least two bases".into(),
        ));
    }
    let drifts: Vec<Vec<f64>> = spectra
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (b - a).abs()).collect())
        .collect();
    let converged_upto = certified_upto(drifts.last().unwrap(), tol);
    Ok(ConvergenceReport {
        bases: bases.to_vec(),
        spectra,
        drifts,
        tolerance: tol,
        converged_upto,
    })
}

fn check_ladder(ladder: &[BasisSpec]) -> Result<()> {
    if ladder.len() < 2 {
        return Err(Error::InsufficientData(
            "convergence scan needs a ladder of at least two bases".into(),
        ));
    }
    for w in ladder.windows(2) {
        let grows = w[1].n_x >= w[0].n_x && w[1].n_y >= w[0].n_y && w[1].vib_size() > w[0].vib_size();
        if !grows {
            return Err(Error::invalid(
                "basis_ladder",
                "must be strictly increasing in (N_x, N_y)",
            ));
        }
    }
    Ok(())
}

/// Eigenvalue-only solves over `ladder` and the resulting drift table.
pub fn convergence_scan(
    params: &ModelParams,
    ladder: &[BasisSpec],
    tol: f64,
    budget_mb: u64,
) -> Result<ConvergenceReport> {
    check_ladder(ladder)?;
    let spectra = ladder
        .iter()
        .map(|b| eigenvalues_sym(&build_hamiltonian_with_budget(params, b, budget_mb)?))
        .collect::<Result<Vec<_>>>()?;
    drift_report(ladder, spectra, tol)
}

/// Full solve at `basis`, certified against an eigenvalue-only solve at
/// `lower`. The result's `converged_upto` is set from the drift.
pub fn solve_certified(
    params: &ModelParams,
    basis: &BasisSpec,
    lower: &BasisSpec,
    tol: f64,
    budget_mb: u64,
) -> Result<(EigenResult, ConvergenceReport)> {
    check_ladder(&[*lower, *basis])?;
    let coarse = eigenvalues_sym(&build_hamiltonian_with_budget(params, lower, budget_mb)?)?;
    let h = build_hamiltonian_with_budget(params, basis, budget_mb)?;
    let mut eig = eigensolve_sym(&h, basis)?;
    drop(h);
    let report = drift_report(&[*lower, *basis], vec![coarse, eig.energies().to_vec()], tol)?;
    eig.set_converged_upto(report.converged_upto);
    Ok((eig, report))
}

/// `k,energy` table of all levels.
pub fn energies_csv(eig: &EigenResult, meta: &Metadata) -> String {
    let mut t = CsvTable::new(meta, &["k", "energy"]);
    for (k, e) in eig.energies().iter().enumerate() {
        t.row([k.to_string(), num(*e)]);
    }
    t.into_string()
}

/// `k,surface,j,coeff` table for eigenstates in `range`.
pub fn write_coefficients_csv<W: Write>(
    mut w: W,
    eig: &EigenResult,
    range: std::ops::Range<usize>,
    meta: &Metadata,
) -> Result<()> {
    w.write_all(meta.render("# ").as_bytes())?;
    writeln!(w, "k,surface,j,coeff")?;
    for k in range {
        for (label, c) in [("A", eig.coeffs_a(k)), ("B", eig.coeffs_b(k))] {
            for (j, v) in c.iter().enumerate() {
                writeln!(w, "{k},{label},{j},{}", num(*v))?;
            }
        }
    }
    Ok(())
}
