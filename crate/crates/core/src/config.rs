//! Run configuration read from `key = value` text files.
//!
//! One key per line, `#` starts a comment, unknown keys are rejected. Angles
//! accept plain radians or multiples of π such as `pi/6` or `2*pi/3`. Lists
//! are comma separated.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::model::{BasisSpec, ModelParams, Surface, DEFAULT_MEMORY_BUDGET_MB};
use crate::output::Metadata;
use crate::realspace::GridSpec;
use crate::solver::DEFAULT_DRIFT_TOLERANCE;
use crate::spectra::{DEFAULT_DELTA3_WINDOWS, DEFAULT_UNFOLD_DEGREE};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    /// Basis frequencies; `None` means matched to the model.
    pub basis_omega_x: Option<f64>,
    pub basis_omega_y: Option<f64>,
    pub n_x: usize,
    pub n_y: usize,
    /// The certifying solve uses (N_x − step, N_y − step).
    pub ladder_step: usize,
    pub drift_tol: f64,
    pub memory_budget_mb: u64,

    pub window_start: usize,
    /// Last state of the analysis window (inclusive); defaults to converged_upto.
    pub window_end: Option<usize>,
    pub sweep_j: Vec<f64>,
    pub sweep_theta: Vec<f64>,

    pub unfold_degree: usize,
    pub nnsd_bins: usize,
    pub amplitude_bins: usize,
    pub delta3_windows: usize,
    pub delta3_lengths: Vec<f64>,

    pub grid_half_width: f64,
    pub grid_points: usize,
    pub density_k: Option<usize>,
    pub density_surface: Option<Surface>,

    pub out_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub use_cache: bool,
    pub export_coeffs: bool,
    pub plots: bool,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};
        Self {
            params: ModelParams::default(),
            basis_omega_x: None,
            basis_omega_y: None,
            n_x: 60,
            n_y: 60,
            ladder_step: 10,
            drift_tol: DEFAULT_DRIFT_TOLERANCE,
            memory_budget_mb: DEFAULT_MEMORY_BUDGET_MB,
            window_start: 200,
            window_end: None,
            sweep_j: vec![0.3, 1.5, 7.5],
            sweep_theta: vec![0.0, FRAC_PI_6, FRAC_PI_3],
            unfold_degree: DEFAULT_UNFOLD_DEGREE,
            nnsd_bins: 40,
            amplitude_bins: 60,
            delta3_windows: DEFAULT_DELTA3_WINDOWS,
            delta3_lengths: vec![1.0, 2.0, 3.0, 4.0, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0, 25.0],
            grid_half_width: 8.0,
            grid_points: 161,
            density_k: None,
            density_surface: None,
            out_dir: PathBuf::from("out"),
            cache_dir: None,
            use_cache: true,
            export_coeffs: false,
            plots: true,
            seed: 20_010_221,
            jobs: 1,
        }
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    // [<num>*]pi[/<num>]
    let lower = s.to_ascii_lowercase().replace(' ', "");
    let (num_part, den) = match lower.split_once('/') {
        Some((n, d)) => (
            n.to_string(),
            d.parse::<f64>().map_err(|_| format!("bad number `{s}`"))?,
        ),
        None => (lower.clone(), 1.0),
    };
    let factor = match num_part.as_str() {
        "pi" | "π" => 1.0,
        other => match other.strip_suffix("*pi").or_else(|| other.strip_suffix("pi")) {
            Some(f) if !f.is_empty() => f.parse::<f64>().map_err(|_| format!("bad number `{s}`"))?,
            _ => return Err(format!("bad number `{s}`")),
        },
    };
    Ok(factor * std::f64::consts::PI / den)
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_f64).collect()
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.trim().parse().map_err(|_| format!("bad integer `{}`", s.trim()))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(format!("bad boolean `{other}`")),
    }
}

fn optional<T>(s: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Option<T>, String> {
    match s.trim() {
        "" | "auto" | "none" => Ok(None),
        v => f(v).map(Some),
    }
}

fn list_text(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

fn opt_text<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or("auto".to_string(), T::to_string)
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                reason: format!("expected key = value, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|reason| Error::Config { line: i + 1, reason })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let p = &mut self.params;
        match key {
            "omega_x" => p.omega_x = parse_f64(value)?,
            "omega_y" => p.omega_y = parse_f64(value)?,
            "theta" => p.theta = parse_f64(value)?,
            "a" => p.a = parse_f64(value)?,
            "eps_a" => p.eps_a = parse_f64(value)?,
            "eps_b" => p.eps_b = parse_f64(value)?,
            "J" | "j" | "coupling" => p.coupling = parse_f64(value)?,
            "basis_omega_x" => self.basis_omega_x = optional(value, parse_f64)?,
            "basis_omega_y" => self.basis_omega_y = optional(value, parse_f64)?,
            "n_x" => self.n_x = parse_usize(value)?,
            "n_y" => self.n_y = parse_usize(value)?,
            "ladder_step" => self.ladder_step = parse_usize(value)?,
            "drift_tol" => self.drift_tol = parse_f64(value)?,
            "memory_budget_mb" => self.memory_budget_mb = parse_usize(value)? as u64,
            "window_start" => self.window_start = parse_usize(value)?,
            "window_end" => self.window_end = optional(value, parse_usize)?,
            "sweep_j" => self.sweep_j = parse_list(value)?,
            "sweep_theta" => self.sweep_theta = parse_list(value)?,
            "unfold_degree" => self.unfold_degree = parse_usize(value)?,
            "nnsd_bins" => self.nnsd_bins = parse_usize(value)?,
            "amplitude_bins" => self.amplitude_bins = parse_usize(value)?,
            "delta3_windows" => self.delta3_windows = parse_usize(value)?,
            "delta3_lengths" => self.delta3_lengths = parse_list(value)?,
            "grid_half_width" => self.grid_half_width = parse_f64(value)?,
            "grid_points" => self.grid_points = parse_usize(value)?,
            "density_k" => self.density_k = optional(value, parse_usize)?,
            "density_surface" => {
                self.density_surface = match value.trim() {
                    "" | "both" | "auto" => None,
                    v => Some(v.parse::<Surface>().map_err(|e| e.to_string())?),
                }
            }
            "out_dir" => self.out_dir = PathBuf::from(value),
            "cache_dir" => self.cache_dir = optional(value, |v| Ok(PathBuf::from(v)))?,
            "cache" => self.use_cache = parse_bool(value)?,
            "export_coeffs" => self.export_coeffs = parse_bool(value)?,
            "plots" => self.plots = parse_bool(value)?,
            "seed" => self.seed = value.trim().parse().map_err(|_| format!("bad seed `{value}`"))?,
            "jobs" => self.jobs = parse_usize(value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.basis().validate()?;
        if self.ladder_step == 0 {
            return Err(Error::invalid("ladder_step", "must be positive"));
        }
        if !(self.drift_tol > 0.0) {
            return Err(Error::invalid("drift_tol", "must be positive"));
        }
        if !(3..=12).contains(&self.unfold_degree) {
            return Err(Error::invalid("unfold_degree", "must lie in [3, 12]"));
        }
        if self.jobs == 0 {
            return Err(Error::invalid("jobs", "must be positive"));
        }
        if self.delta3_lengths.iter().any(|l| !(*l >= 1.0)) {
            return Err(Error::invalid("delta3_lengths", "every L must be at least 1"));
        }
        Ok(())
    }

    pub fn basis(&self) -> BasisSpec {
        BasisSpec {
            omega_x: self.basis_omega_x.unwrap_or(self.params.omega_x),
            omega_y: self.basis_omega_y.unwrap_or(self.params.omega_y),
            n_x: self.n_x,
            n_y: self.n_y,
        }
    }

    /// Basis of the certifying eigenvalue-only solve.
    pub fn lower_basis(&self) -> BasisSpec {
        BasisSpec {
            n_x: self.n_x.saturating_sub(self.ladder_step),
            n_y: self.n_y.saturating_sub(self.ladder_step),
            ..self.basis()
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::square(self.grid_half_width, self.grid_points)
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.out_dir.join("cache"))
    }

    /// Copy with the coupling and angle replaced (one sweep point).
    pub fn at_point(&self, coupling: f64, theta: f64) -> Self {
        let mut c = self.clone();
        c.params.coupling = coupling;
        c.params.theta = theta;
        c
    }

    /// Every key with its current value, in file syntax.
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        vec![
            ("omega_x", p.omega_x.to_string()),
            ("omega_y", p.omega_y.to_string()),
            ("theta", p.theta.to_string()),
            ("a", p.a.to_string()),
            ("eps_a", p.eps_a.to_string()),
            ("eps_b", p.eps_b.to_string()),
            ("J", p.coupling.to_string()),
            ("basis_omega_x", opt_text(&self.basis_omega_x)),
            ("basis_omega_y", opt_text(&self.basis_omega_y)),
            ("n_x", self.n_x.to_string()),
            ("n_y", self.n_y.to_string()),
            ("ladder_step", self.ladder_step.to_string()),
            ("drift_tol", self.drift_tol.to_string()),
            ("memory_budget_mb", self.memory_budget_mb.to_string()),
            ("window_start", self.window_start.to_string()),
            ("window_end", opt_text(&self.window_end)),
            ("sweep_j", list_text(&self.sweep_j)),
            ("sweep_theta", list_text(&self.sweep_theta)),
            ("unfold_degree", self.unfold_degree.to_string()),
            ("nnsd_bins", self.nnsd_bins.to_string()),
            ("amplitude_bins", self.amplitude_bins.to_string()),
            ("delta3_windows", self.delta3_windows.to_string()),
            ("delta3_lengths", list_text(&self.delta3_lengths)),
            ("grid_half_width", self.grid_half_width.to_string()),
            ("grid_points", self.grid_points.to_string()),
            ("density_k", opt_text(&self.density_k)),
            (
                "density_surface",
                self.density_surface.map_or("both".into(), |s| s.to_string()),
            ),
            ("cache", self.use_cache.to_string()),
            ("export_coeffs", self.export_coeffs.to_string()),
            ("plots", self.plots.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    /// Config file text that reproduces this configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.key_values() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Metadata block echoing the full configuration.
    pub fn metadata(&self, command: &str) -> Metadata {
        let mut m = Metadata::new();
        m.push("tmts", crate::VERSION).push("command", command);
        for (k, v) in self.key_values() {
            m.push(format!("config.{k}"), v);
        }
        m
    }

    /// Content hash over every field that changes the eigensolution.
    pub fn physics_hash(&self) -> String {
        let p = &self.params;
        let b = self.basis();
        let mut h = Sha256::new();
        for v in [
            p.omega_x,
            p.omega_y,
            p.theta,
            p.a,
            p.eps_a,
            p.eps_b,
            p.coupling,
            b.omega_x,
            b.omega_y,
            self.drift_tol,
        ] {
            h.update(v.to_bits().to_le_bytes());
        }
        for n in [b.n_x, b.n_y, self.ladder_step] {
            h.update((n as u64).to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_6;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.basis().dim(), 7442);
        assert_eq!(c.lower_basis().n_x, 50);
        assert_eq!(c.params.eps_b - c.params.eps_a, 0.173);
    }

    #[test]
    fn parses_keys_comments_and_angles() {
        let c = RunConfig::parse(
            "# comment\n\
             theta = pi/6   # trailing\n\
             J = 0.3\n\
             n_x = 3\nn_y=4\n\
             sweep_theta = 0, pi/6, 2*pi/6\n\
             density_surface = B\n\
             window_end = auto\n",
        )
        .unwrap();
        assert!((c.params.theta - FRAC_PI_6).abs() < 1e-15);
        assert_eq!(c.params.coupling, 0.3);
        assert_eq!((c.n_x, c.n_y), (3, 4));
        assert_eq!(c.sweep_theta.len(), 3);
        assert!((c.sweep_theta[2] - 2.0 * FRAC_PI_6).abs() < 1e-15);
        assert_eq!(c.density_surface, Some(Surface::B));
        assert_eq!(c.window_end, None);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(matches!(
            RunConfig::parse("bogus = 1"),
            Err(Error::Config { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse("\nn_x 5"),
            Err(Error::Config { line: 2, .. })
        ));
        assert!(matches!(RunConfig::parse("theta = pie"), Err(Error::Config { .. })));
        assert!(RunConfig::parse("omega_x = -1").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.params.coupling = 7.5;
        c.window_end = Some(900);
        c.density_k = Some(805);
        let back = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back.params, c.params);
        assert_eq!(back.window_end, Some(900));
        assert_eq!(back.physics_hash(), c.physics_hash());
    }

    #[test]
    fn hash_covers_physics_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.params.coupling = 1.5000001;
        assert_ne!(a.physics_hash(), b.physics_hash());
        let mut c = a.clone();
        c.n_y = 59;
        assert_ne!(a.physics_hash(), c.physics_hash());
        let mut d = a.clone();
        d.seed = 1;
        d.plots = false;
        assert_eq!(a.physics_hash(), d.physics_hash());
    }
}
