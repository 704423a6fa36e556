//! Model parameters, harmonic-oscillator basis and Hamiltonian assembly.
//!
//! Units are ħ = m = 1. Each diabatic surface is a rotated, displaced 2D
//! harmonic well
//!
//! ```text
//! V_i(x, y) = ½(ω_x² ξ_i² + ω_y² η_i²) + ε_i
//! ξ_A = x cos θ − (y − a) sin θ      η_A =  x sin θ + (y − a) cos θ
//! ξ_B = x cos θ + (y + a) sin θ      η_B = −x sin θ + (y + a) cos θ
//! ```
//!
//! and the two surfaces are coupled by the constant `J`. The Hamiltonian is
//! represented in the product basis |n_x⟩|n_y⟩ of oscillators with
//! frequencies (Ω_x, Ω_y) centred at the origin, the midpoint of the two
//! minima.

use std::fmt;

use crate::{Error, Result};

/// Default memory budget for a dense solve, in MiB.
pub const DEFAULT_MEMORY_BUDGET_MB: u64 = 4096;

/// Diabatic electronic state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Surface {
    A,
    B,
}

impl Surface {
    pub const BOTH: [Surface; 2] = [Surface::A, Surface::B];

    pub fn label(self) -> &'static str {
        match self {
            Surface::A => "A",
            Surface::B => "B",
        }
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Surface {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Surface::A),
            "B" | "b" => Ok(Surface::B),
            other => Err(Error::invalid("surface", format!("expected A or B, got `{other}`"))),
        }
    }
}

/// Physical parameters of the two-surface model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub omega_x: f64,
    pub omega_y: f64,
    /// Duschinsky angle in radians.
    pub theta: f64,
    /// Half the distance between the two minima, located at (0, ±a).
    pub a: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    /// Nonadiabatic coupling `J`.
    pub coupling: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega_x: 1.0,
            omega_y: 1.3,
            theta: std::f64::consts::FRAC_PI_6,
            a: 1.5,
            eps_a: 0.0,
            eps_b: 0.173,
            coupling: 1.5,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_x", self.omega_x),
            ("omega_y", self.omega_y),
            ("theta", self.theta),
            ("a", self.a),
            ("eps_a", self.eps_a),
            ("eps_b", self.eps_b),
            ("J", self.coupling),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("{v} is not finite")));
            }
        }
        if self.omega_x <= 0.0 {
            return Err(Error::invalid("omega_x", "must be positive"));
        }
        if self.omega_y <= 0.0 {
            return Err(Error::invalid("omega_y", "must be positive"));
        }
        if self.a < 0.0 {
            return Err(Error::invalid("a", "must be non-negative"));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.theta) {
            return Err(Error::invalid("theta", "must lie in [0, π/2]"));
        }
        Ok(())
    }

    /// Energy offset of `surface`.
    pub fn offset(&self, surface: Surface) -> f64 {
        match surface {
            Surface::A => self.eps_a,
            Surface::B => self.eps_b,
        }
    }

    /// Position of the minimum of `surface`.
    pub fn minimum(&self, surface: Surface) -> (f64, f64) {
        match surface {
            Surface::A => (0.0, self.a),
            Surface::B => (0.0, -self.a),
        }
    }

    /// Rotated normal coordinates (ξ, η) of `surface` at (x, y).
    pub fn normal_coordinates(&self, surface: Surface, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = self.theta.sin_cos();
        match surface {
            Surface::A => (x * c - (y - self.a) * s, x * s + (y - self.a) * c),
            Surface::B => (x * c + (y + self.a) * s, -x * s + (y + self.a) * c),
        }
    }

    /// Diabatic potential evaluated directly from the rotated coordinates.
    pub fn potential(&self, surface: Surface, x: f64, y: f64) -> f64 {
        let (xi, eta) = self.normal_coordinates(surface, x, y);
        0.5 * (self.omega_x.powi(2) * xi * xi + self.omega_y.powi(2) * eta * eta) + self.offset(surface)
    }
}

/// Truncated product basis of 1D oscillators, n_x ≤ `n_x`, n_y ≤ `n_y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisSpec {
    pub omega_x: f64,
    pub omega_y: f64,
    pub n_x: usize,
    pub n_y: usize,
}

impl BasisSpec {
    /// Basis matched to the model frequencies.
    pub fn matched(params: &ModelParams, n_x: usize, n_y: usize) -> Self {
        Self {
            omega_x: params.omega_x,
            omega_y: params.omega_y,
            n_x,
            n_y,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_x.is_finite() && self.omega_x > 0.0) {
            return Err(Error::invalid("basis_omega_x", "must be positive and finite"));
        }
        if !(self.omega_y.is_finite() && self.omega_y > 0.0) {
            return Err(Error::invalid("basis_omega_y", "must be positive and finite"));
        }
        Ok(())
    }

    /// Number of vibrational basis functions, M = (N_x+1)(N_y+1).
    pub fn vib_size(&self) -> usize {
        (self.n_x + 1) * (self.n_y + 1)
    }

    /// Dimension of the full two-surface matrix, 2M.
    pub fn dim(&self) -> usize {
        2 * self.vib_size()
    }

    /// Flat vibrational index j = n_x·(N_y+1) + n_y.
    #[inline]
    pub fn index(&self, n_x: usize, n_y: usize) -> usize {
        debug_assert!(n_x <= self.n_x && n_y <= self.n_y);
        n_x * (self.n_y + 1) + n_y
    }

    /// Inverse of [`BasisSpec::index`].
    #[inline]
    pub fn quanta(&self, j: usize) -> (usize, usize) {
        (j / (self.n_y + 1), j % (self.n_y + 1))
    }

    /// Approximate peak memory of a dense eigensolve (matrix, eigenvectors
    /// and solver workspace).
    pub fn dense_solve_bytes(&self) -> u64 {
        let d = self.dim() as u64;
        3 * d * d * std::mem::size_of::<f64>() as u64
    }
}

/// V(x,y) = c_xx x² + c_yy y² + c_xy xy + c_x x + c_y y + c_0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticPotential {
    pub c_xx: f64,
    pub c_yy: f64,
    pub c_xy: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub c_0: f64,
}

impl QuadraticPotential {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.c_xx * x * x + self.c_yy * y * y + self.c_xy * x * y + self.c_x * x + self.c_y * y + self.c_0
    }

    pub fn is_bound(&self) -> bool {
        let (hxx, hyy, hxy) = (2.0 * self.c_xx, 2.0 * self.c_yy, self.c_xy);
        hxx > 0.0 && hxx * hyy - hxy * hxy > 0.0
    }

    /// Stationary point of the quadratic form (the minimum when bound).
    pub fn stationary_point(&self) -> (f64, f64) {
        // ∇V = H r + (c_x, c_y) = 0
        let (hxx, hyy, hxy) = (2.0 * self.c_xx, 2.0 * self.c_yy, self.c_xy);
        let det = hxx * hyy - hxy * hxy;
        let x = (-self.c_x * hyy + self.c_y * hxy) / det;
        let y = (-self.c_y * hxx + self.c_x * hxy) / det;
        (x, y)
    }
}

/// Closed-form polynomial expansion of the diabatic potential of `surface`.
pub fn quadratic_expand(params: &ModelParams, surface: Surface) -> QuadraticPotential {
    let (s, c) = params.theta.sin_cos();
    let wx2 = params.omega_x * params.omega_x;
    let wy2 = params.omega_y * params.omega_y;

    // In u = y − y0 the form is k_xx x² + k_uu u² + σ k_xu x u + ε.
    let k_xx = 0.5 * (wx2 * c * c + wy2 * s * s);
    let k_uu = 0.5 * (wx2 * s * s + wy2 * c * c);
    let k_xu = c * s * (wy2 - wx2);
    let (sigma, y0) = match surface {
        Surface::A => (1.0, params.a),
        Surface::B => (-1.0, -params.a),
    };
    let eps = params.offset(surface);

    QuadraticPotential {
        c_xx: k_xx,
        c_yy: k_uu,
        c_xy: sigma * k_xu,
        c_x: -sigma * k_xu * y0,
        c_y: -2.0 * k_uu * y0,
        c_0: k_uu * y0 * y0 + eps,
    }
}

/// Dense real symmetric matrix, column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.dim + i]
    }

    /// Writes `value` at (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[j * self.dim + i] = value;
        self.data[i * self.dim + j] = value;
    }

    /// Column-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        (0..self.dim).all(|j| (0..j).all(|i| self.get(i, j).to_bits() == self.get(j, i).to_bits()))
    }

    /// Nonzero entries as compressed rows `(row_start, cols, values)`.
    pub(crate) fn to_csr(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let mut starts = Vec::with_capacity(self.dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        starts.push(0);
        for i in 0..self.dim {
            // symmetric: row i equals column i
            let col = &self.data[i * self.dim..(i + 1) * self.dim];
            for (j, &v) in col.iter().enumerate() {
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            starts.push(cols.len());
        }
        (starts, cols, vals)
    }
}

/// One-dimensional operators represented in the oscillator eigenbasis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operator1d {
    Position,
    PositionSquared,
    MomentumSquared,
}

/// ⟨n|op|m⟩ for an oscillator of frequency `omega`.
#[inline]
pub fn op_element(kind: Operator1d, omega: f64, n: usize, m: usize) -> f64 {
    let lo = n.min(m) as f64;
    let d = n.abs_diff(m);
    match (kind, d) {
        (Operator1d::Position, 1) => ((lo + 1.0) / (2.0 * omega)).sqrt(),
        (Operator1d::PositionSquared, 0) => (2.0 * lo + 1.0) / (2.0 * omega),
        (Operator1d::PositionSquared, 2) => ((lo + 1.0) * (lo + 2.0)).sqrt() / (2.0 * omega),
        (Operator1d::MomentumSquared, 0) => omega * (2.0 * lo + 1.0) / 2.0,
        (Operator1d::MomentumSquared, 2) => -omega * ((lo + 1.0) * (lo + 2.0)).sqrt() / 2.0,
        _ => 0.0,
    }
}

/// Matrix of a 1D operator in the first `n_max + 1` oscillator states.
pub fn op_matrix_1d(kind: Operator1d, omega: f64, n_max: usize) -> Result<SymMatrix> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::invalid("omega", "must be positive and finite"));
    }
    let dim = n_max + 1;
    let mut m = SymMatrix::zeros(dim);
    for j in 0..dim {
        for i in j.saturating_sub(2)..=j {
            m.set(i, j, op_element(kind, omega, i, j));
        }
    }
    Ok(m)
}

/// Pentadiagonal single-mode Hamiltonian ½p² + c₂q² + c₁q.
struct ModeHamiltonian {
    omega: f64,
    c2: f64,
    c1: f64,
}

impl ModeHamiltonian {
    #[inline]
    fn element(&self, n: usize, m: usize) -> f64 {
        match n.abs_diff(m) {
            0 => {
                0.5 * op_element(Operator1d::MomentumSquared, self.omega, n, m)
                    + self.c2 * op_element(Operator1d::PositionSquared, self.omega, n, m)
            }
            1 => self.c1 * op_element(Operator1d::Position, self.omega, n, m),
            2 => {
                0.5 * op_element(Operator1d::MomentumSquared, self.omega, n, m)
                    + self.c2 * op_element(Operator1d::PositionSquared, self.omega, n, m)
            }
            _ => 0.0,
        }
    }
}

/// Element ⟨j|T + V|j'⟩ of a single diabatic block, with `j`, `j'` given as
/// quanta.
fn block_element(
    basis: &BasisSpec,
    v: &QuadraticPotential,
    hx: &ModeHamiltonian,
    hy: &ModeHamiltonian,
    (nx, ny): (usize, usize),
    (mx, my): (usize, usize),
) -> f64 {
    let mut e = 0.0;
    if ny == my {
        e += hx.element(nx, mx);
    }
    if nx == mx {
        e += hy.element(ny, my);
    }
    if nx.abs_diff(mx) == 1 && ny.abs_diff(my) == 1 {
        e += v.c_xy
            * op_element(Operator1d::Position, basis.omega_x, nx, mx)
            * op_element(Operator1d::Position, basis.omega_y, ny, my);
    }
    if nx == mx && ny == my {
        e += v.c_0;
    }
    e
}

/// Full 2M × 2M Hamiltonian `[[H_AA, J·I], [J·I, H_BB]]` under the default
/// memory budget.
pub fn build_hamiltonian(params: &ModelParams, basis: &BasisSpec) -> Result<SymMatrix> {
    build_hamiltonian_with_budget(params, basis, DEFAULT_MEMORY_BUDGET_MB)
}

pub fn build_hamiltonian_with_budget(params: &ModelParams, basis: &BasisSpec, budget_mb: u64) -> Result<SymMatrix> {
    params.validate()?;
    basis.validate()?;
    let needed = basis.dense_solve_bytes();
    if needed > budget_mb.saturating_mul(1 << 20) {
        return Err(Error::MemoryBudget {
            dim: basis.dim(),
            needed_mb: needed >> 20,
            budget_mb,
        });
    }

    let m = basis.vib_size();
    let mut h = SymMatrix::zeros(2 * m);
    for (block, surface) in Surface::BOTH.into_iter().enumerate() {
        let v = quadratic_expand(params, surface);
        if !v.is_bound() {
            return Err(Error::invalid("params", format!("surface {surface} is not bound")));
        }
        let hx = ModeHamiltonian {
            omega: basis.omega_x,
            c2: v.c_xx,
            c1: v.c_x,
        };
        let hy = ModeHamiltonian {
            omega: basis.omega_y,
            c2: v.c_yy,
            c1: v.c_y,
        };
        let off = block * m;
        for col in 0..m {
            let (mx, my) = basis.quanta(col);
            // upper triangle only; `set` mirrors it
            for nx in mx.saturating_sub(2)..=mx.min(basis.n_x) {
                for ny in my.saturating_sub(2)..=(my + 2).min(basis.n_y) {
                    let row = basis.index(nx, ny);
                    if row > col {
                        continue;
                    }
                    let e = block_element(basis, &v, &hx, &hy, (nx, ny), (mx, my));
                    if e != 0.0 {
                        h.set(off + row, off + col, e);
                    }
                }
            }
        }
    }
    if params.coupling != 0.0 {
        for j in 0..m {
            h.set(j, m + j, params.coupling);
        }
    }
    Ok(h)
}
