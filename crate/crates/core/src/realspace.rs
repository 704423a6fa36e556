//! Real-space probability densities P_i(x, y) = |⟨x,y|φ_i^(k)⟩|² of the
//! eigenstate components on the diabatic surfaces.

use std::fmt::Write as _;

use crate::model::Surface;
use crate::output::{num, CsvTable, Metadata};
use crate::solver::EigenResult;
use crate::{Error, Result};

/// Largest quantum number the Hermite-function recurrence accepts.
pub const MAX_QUANTUM: usize = 10_000;

/// Captured-probability fraction below which a grid counts as truncated.
pub const CAPTURE_THRESHOLD: f64 = 0.99;

const RESCALE: f64 = 1e150;

/// ψ_0..=ψ_n at a single point, written into `out` (length n + 1).
///
/// Uses ψ_{n+1} = √(2/(n+1)) ξ ψ_n − √(n/(n+1)) ψ_{n−1}, ξ = √Ω x, with the
/// Gaussian prefactor carried as a logarithm so that far tails neither
/// underflow nor overflow.
fn hermite_functions(omega: f64, x: f64, out: &mut [f64]) {
    let n_max = out.len() - 1;
    let xi = omega.sqrt() * x;
    let mut log_scale = 0.25 * (omega / std::f64::consts::PI).ln() - 0.5 * xi * xi;
    let mut prev = 0.0;
    let mut cur = 1.0;
    out[0] = log_scale.exp();
    for n in 0..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * xi * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out[n + 1] = if cur == 0.0 {
            0.0
        } else {
            cur.signum() * (cur.abs().ln() + log_scale).exp()
        };
    }
}

/// Normalized 1D oscillator eigenfunction ψ_n(x) of frequency `omega`.
pub fn ho_wavefunction(n: usize, omega: f64, x: f64) -> Result<f64> {
    if n > MAX_QUANTUM {
        return Err(Error::invalid("n", format!("quantum number above {MAX_QUANTUM}")));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::invalid("omega", "must be positive and finite"));
    }
    let mut buf = vec![0.0; n + 1];
    hermite_functions(omega, x, &mut buf);
    Ok(buf[n])
}

/// Table `t[n * points.len() + p] = ψ_n(points[p])` for n ≤ `n_max`.
pub fn ho_table(n_max: usize, omega: f64, points: &[f64]) -> Result<Vec<f64>> {
    if n_max > MAX_QUANTUM {
        return Err(Error::invalid("n", format!("quantum number above {MAX_QUANTUM}")));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::invalid("omega", "must be positive and finite"));
    }
    let np = points.len();
    let mut table = vec![0.0; (n_max + 1) * np];
    let mut buf = vec![0.0; n_max + 1];
    for (p, &x) in points.iter().enumerate() {
        hermite_functions(omega, x, &mut buf);
        for (n, v) in buf.iter().enumerate() {
            table[n * np + p] = *v;
        }
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x_points: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub n_y_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(8.0, 161)
    }
}

impl GridSpec {
    /// [−half, half]² with `points` points per axis.
    pub fn square(half: f64, points: usize) -> Self {
        Self {
            x_min: -half,
            x_max: half,
            n_x_points: points,
            y_min: -half,
            y_max: half,
            n_y_points: points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x_points < 2 || self.n_y_points < 2 {
            return Err(Error::invalid("grid_points", "need at least 2 points per axis"));
        }
        if !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(Error::invalid("grid", "max must exceed min"));
        }
        Ok(())
    }

    pub fn xs(&self) -> Vec<f64> {
        axis(self.x_min, self.x_max, self.n_x_points)
    }

    pub fn ys(&self) -> Vec<f64> {
        axis(self.y_min, self.y_max, self.n_y_points)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_x_points - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.n_y_points - 1) as f64
    }

    /// Same resolution over a range scaled by `factor` about the centre.
    pub fn widened(&self, factor: f64) -> Self {
        let grow = |lo: f64, hi: f64, n: usize| {
            let c = 0.5 * (lo + hi);
            let h = 0.5 * (hi - lo) * factor;
            let n = ((n - 1) as f64 * factor).round() as usize + 1;
            (c - h, c + h, n)
        };
        let (x_min, x_max, n_x_points) = grow(self.x_min, self.x_max, self.n_x_points);
        let (y_min, y_max, n_y_points) = grow(self.y_min, self.y_max, self.n_y_points);
        Self {
            x_min,
            x_max,
            n_x_points,
            y_min,
            y_max,
            n_y_points,
        }
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

/// P_i(x, y) sampled on a grid; `values[iy * n_x_points + ix]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub surface: Surface,
    pub k: usize,
    /// ‖φ_i^(k)‖², the weight of the state on this surface.
    pub norm_sq: f64,
}

impl DensityField {
    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.n_x_points + ix]
    }

    /// Riemann sum ∑ P dx dy.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx() * self.grid.dy()
    }

    /// Share of ‖φ_i‖² captured by the grid (1 for a vanishing component).
    pub fn captured_fraction(&self) -> f64 {
        if self.norm_sq <= 1e-300 {
            1.0
        } else {
            self.integral() / self.norm_sq
        }
    }

    pub fn is_truncated(&self) -> bool {
        self.captured_fraction() < CAPTURE_THRESHOLD
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Long-format `x,y,value` CSV.
    pub fn to_csv(&self, meta: &Metadata) -> String {
        let (xs, ys) = (self.grid.xs(), self.grid.ys());
        let mut t = CsvTable::new(meta, &["x", "y", "value"]);
        for (iy, y) in ys.iter().enumerate() {
            for (ix, x) in xs.iter().enumerate() {
                t.row([num(*x), num(*y), num(self.at(ix, iy))]);
            }
        }
        t.into_string()
    }

    /// Whitespace-separated matrix, one row per y (ascending), one column
    /// per x, preceded by the metadata block.
    pub fn to_matrix_text(&self, meta: &Metadata) -> String {
        let mut s = meta.render("# ");
        let g = &self.grid;
        let _ = writeln!(
            s,
            "# rows: y from {} to {} ({} points)",
            num(g.y_min),
            num(g.y_max),
            g.n_y_points
        );
        let _ = writeln!(
            s,
            "# cols: x from {} to {} ({} points)",
            num(g.x_min),
            num(g.x_max),
            g.n_x_points
        );
        for row in self.values.chunks(g.n_x_points) {
            let line: Vec<String> = row.iter().map(|v| num(*v)).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Density of the vibrational component of eigenstate `k` on `surface`.
pub fn density_grid(eig: &EigenResult, k: usize, surface: Surface, grid: &GridSpec) -> Result<DensityField> {
    if k >= eig.dim() {
        return Err(Error::OutOfRange {
            start: k,
            end: k + 1,
            limit: eig.dim(),
        });
    }
    let coeffs = match surface {
        Surface::A => eig.coeffs_a(k),
        Surface::B => eig.coeffs_b(k),
    };
    let field = density_from_coeffs(coeffs, eig.basis(), grid)?;
    let norm_sq = coeffs.iter().map(|c| c * c).sum();
    let out = DensityField {
        grid: *grid,
        values: field,
        surface,
        k,
        norm_sq,
    };
    if out.is_truncated() {
        log::warn!(
            "grid captures {:.4} of the surface-{surface} weight of state {k}; widen the grid",
            out.captured_fraction()
        );
    }
    Ok(out)
}

/// (Σ_j c_j ψ_{n_x}(x) ψ_{n_y}(y))² on `grid`, rows ordered by y.
pub fn density_from_coeffs(coeffs: &[f64], basis: &crate::BasisSpec, grid: &GridSpec) -> Result<Vec<f64>> {
    grid.validate()?;
    if coeffs.len() != basis.vib_size() {
        return Err(Error::LengthMismatch {
            left: coeffs.len(),
            right: basis.vib_size(),
        });
    }
    let (xs, ys) = (grid.xs(), grid.ys());
    let (px, py) = (xs.len(), ys.len());
    let tx = ho_table(basis.n_x, basis.omega_x, &xs)?;
    let ty = ho_table(basis.n_y, basis.omega_y, &ys)?;

    // w[nx][q] = Σ_ny c[nx, ny] ψ_ny(y_q)
    let ny1 = basis.n_y + 1;
    let mut w = vec![0.0; (basis.n_x + 1) * py];
    for nx in 0..=basis.n_x {
        let row = &mut w[nx * py..(nx + 1) * py];
        for ny in 0..ny1 {
            let c = coeffs[nx * ny1 + ny];
            if c == 0.0 {
                continue;
            }
            for (r, t) in row.iter_mut().zip(&ty[ny * py..(ny + 1) * py]) {
                *r += c * t;
            }
        }
    }
    let mut values = vec![0.0; px * py];
    for q in 0..py {
        let out = &mut values[q * px..(q + 1) * px];
        for nx in 0..=basis.n_x {
            let wq = w[nx * py + q];
            if wq == 0.0 {
                continue;
            }
            for (o, t) in out.iter_mut().zip(&tx[nx * px..(nx + 1) * px]) {
                *o += wq * t;
            }
        }
        for o in out.iter_mut() {
            *o *= *o;
        }
    }
    Ok(values)
}
