//! Independent reference implementations used by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;
use statrs::function::gamma::ln_gamma;

/// Gauss–Hermite nodes and weights for ∫ f(t) e^{−t²} dt (Newton on the
/// orthonormal Hermite recurrence).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Physicists' Hermite polynomial H_n(t).
pub fn hermite_poly(n: usize, t: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * t);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * t * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// (Ω/π)^{1/4} / √(2ⁿ n!), via log-gamma.
pub fn ho_norm(n: usize, omega: f64) -> f64 {
    (omega / std::f64::consts::PI).powf(0.25) * (-0.5 * (n as f64 * 2f64.ln() + ln_gamma(n as f64 + 1.0))).exp()
}

/// ψ_n(x) from the closed form with an explicit polynomial.
pub fn ho_closed_form(n: usize, omega: f64, x: f64) -> f64 {
    let t = omega.sqrt() * x;
    ho_norm(n, omega) * hermite_poly(n, t) * (-0.5 * t * t).exp()
}

/// ∫ ψ_n(x) f(x) ψ_m(x) dx for polynomial f by Gauss–Hermite quadrature.
pub fn ho_matrix_element(n: usize, m: usize, omega: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (t, w) = gauss_hermite(40);
    let s = omega.sqrt();
    let mut acc = 0.0;
    for (ti, wi) in t.iter().zip(&w) {
        acc += wi * hermite_poly(n, *ti) * hermite_poly(m, *ti) * f(ti / s);
    }
    acc * ho_norm(n, omega) * ho_norm(m, omega) / s
}

/// ⟨n|p²|m⟩ through the oscillator equation −ψ_m'' = (2E_m − Ω²x²) ψ_m.
pub fn ho_p2_element(n: usize, m: usize, omega: f64) -> f64 {
    let e_m = omega * (m as f64 + 0.5);
    ho_matrix_element(n, m, omega, |x| 2.0 * e_m - omega * omega * x * x)
}

/// Diabatic potential written out from the rotated normal coordinates.
#[allow(clippy::too_many_arguments)]
pub fn reference_potential(on_a: bool, wx: f64, wy: f64, theta: f64, a: f64, eps: f64, x: f64, y: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let (xi, eta) = if on_a {
        (x * c - (y - a) * s, x * s + (y - a) * c)
    } else {
        (x * c + (y + a) * s, -x * s + (y + a) * c)
    };
    0.5 * wx * wx * xi * xi + 0.5 * wy * wy * eta * eta + eps
}

/// Dense Hamiltonian built entirely by 2D quadrature in the product basis.
pub fn quadrature_hamiltonian(p: &tmts::ModelParams, b: &tmts::BasisSpec) -> Vec<Vec<f64>> {
    let (t, w) = gauss_hermite(30);
    let (sx, sy) = (b.omega_x.sqrt(), b.omega_y.sqrt());
    let m = (b.n_x + 1) * (b.n_y + 1);
    let idx = |nx: usize, ny: usize| nx * (b.n_y + 1) + ny;
    // normalized polynomial factors at the nodes
    let phx: Vec<Vec<f64>> = (0..=b.n_x)
        .map(|n| {
            t.iter()
                .map(|ti| ho_norm(n, b.omega_x) * hermite_poly(n, *ti))
                .collect()
        })
        .collect();
    let phy: Vec<Vec<f64>> = (0..=b.n_y)
        .map(|n| {
            t.iter()
                .map(|ti| ho_norm(n, b.omega_y) * hermite_poly(n, *ti))
                .collect()
        })
        .collect();
    let mut h = vec![vec![0.0; 2 * m]; 2 * m];
    for (block, on_a) in [(0usize, true), (1, false)] {
        let eps = if on_a { p.eps_a } else { p.eps_b };
        let pot: Vec<Vec<f64>> = t
            .iter()
            .map(|tx| {
                t.iter()
                    .map(|ty| reference_potential(on_a, p.omega_x, p.omega_y, p.theta, p.a, eps, tx / sx, ty / sy))
                    .collect()
            })
            .collect();
        for nx in 0..=b.n_x {
            for ny in 0..=b.n_y {
                for mx in 0..=b.n_x {
                    for my in 0..=b.n_y {
                        let mut v = 0.0;
                        for i in 0..t.len() {
                            let fx = w[i] * phx[nx][i] * phx[mx][i];
                            if fx == 0.0 {
                                continue;
                            }
                            for j in 0..t.len() {
                                v += fx * w[j] * phy[ny][j] * phy[my][j] * pot[i][j];
                            }
                        }
                        v /= sx * sy;
                        if ny == my {
                            v += 0.5 * ho_p2_element(nx, mx, b.omega_x);
                        }
                        if nx == mx {
                            v += 0.5 * ho_p2_element(ny, my, b.omega_y);
                        }
                        h[block * m + idx(nx, ny)][block * m + idx(mx, my)] = v;
                    }
                }
            }
        }
    }
    for j in 0..m {
        h[j][m + j] = p.coupling;
        h[m + j][j] = p.coupling;
    }
    h
}

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations,
/// ascending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut e: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    e.sort_by(|x, y| x.partial_cmp(y).unwrap());
    e
}

/// Electronic reduced density in the {(A+B)/√2, (B−A)/√2} basis from the
/// full pure-state density matrix of `psi` = [C_A; C_B].
pub fn brute_force_reduced(psi: &[f64]) -> [[f64; 2]; 2] {
    let m = psi.len() / 2;
    let full: Vec<Vec<f64>> = psi.iter().map(|a| psi.iter().map(|b| a * b).collect()).collect();
    let mut el = [[0.0; 2]; 2];
    for (a, row) in el.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = (0..m).map(|j| full[a * m + j][b * m + j]).sum();
        }
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let u = [[r, r], [-r, r]];
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    out[i][j] += u[i][a] * el[a][b] * u[j][b];
                }
            }
        }
    }
    out
}

pub fn wigner_spacing(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    (-4.0 / std::f64::consts::PI * (1.0 - u).ln()).sqrt()
}

pub fn exponential_spacing(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln()
}

/// Standard normal deviate by Box–Muller.
pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn cumulative(spacings: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut x = 0.0;
    spacings
        .into_iter()
        .map(|s| {
            x += s;
            x
        })
        .collect()
}
