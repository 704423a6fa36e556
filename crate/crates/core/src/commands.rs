//! End-to-end commands behind the `tmts` binary.
//!
//! Every command checks that the output directory is writable before doing
//! any work, solves (or loads from the cache) the configured Hamiltonian and
//! writes CSV tables with a metadata comment block, plus SVG plots when
//! enabled. Output bytes depend only on the configuration.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::cache::{CacheOutcome, CachedSolution, EigenCache};
use crate::config::RunConfig;
use crate::entanglement::{entanglement_record, entanglement_spectrum, EntanglementSpectrum};
use crate::model::Surface;
use crate::output::{num, write_atomic, Metadata};
use crate::realspace::{density_grid, DensityField};
use crate::solver::{energies_csv, solve_certified, write_coefficients_csv};
use crate::spectra::{
    amplitude_stats, delta3_curve, goe_delta3, nnsd, poisson_delta3, poisson_pdf, unfold, wigner_pdf, AmplitudeStats,
    Delta3Curve, NnsdResult,
};
use crate::svg::{heatmap, Chart, Marker, Series, Style};
use crate::{EigenResult, Error, Result};

/// Minimum number of levels for the spectral statistics.
pub const MIN_STATS_LEVELS: usize = 300;

/// How many times the density grid is widened before giving up.
const MAX_WIDENINGS: usize = 4;

/// Files written and one-line summaries for the terminal.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl Report {
    fn merge(&mut self, other: Report) {
        self.files.extend(other.files);
        self.summary.extend(other.summary);
    }
}

/// Creates `dir` and proves it writable with a probe file.
pub fn prepare_out_dir(dir: &Path) -> Result<()> {
    let fail = |source| Error::OutputDir {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(format!(".tmts-probe-{}", std::process::id()));
    fs::write(&probe, b"").map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)?;
    Ok(())
}

/// Solves the configured point, going through the on-disk cache if enabled.
pub fn solve(cfg: &RunConfig) -> Result<(CachedSolution, Option<CacheOutcome>)> {
    cfg.validate()?;
    let compute = || {
        log::info!(
            "solving dim {} (certifying against dim {})",
            cfg.basis().dim(),
            cfg.lower_basis().dim()
        );
        let (eig, report) = solve_certified(
            &cfg.params,
            &cfg.basis(),
            &cfg.lower_basis(),
            cfg.drift_tol,
            cfg.memory_budget_mb,
        )?;
        Ok(CachedSolution {
            eig,
            convergence: Some(report),
        })
    };
    if !cfg.use_cache {
        return Ok((compute()?, None));
    }
    let cache = EigenCache::new(cfg.cache_dir());
    let (sol, outcome) = cache.load_or_compute(&cfg.physics_hash(), compute)?;
    log::info!(
        "cache {outcome:?} for {}",
        cache.path_for(&cfg.physics_hash()).display()
    );
    Ok((sol, Some(outcome)))
}

fn solution_metadata(cfg: &RunConfig, command: &str, eig: &EigenResult) -> Metadata {
    let mut m = cfg.metadata(command);
    let b = eig.basis();
    m.push("basis.dim", eig.dim())
        .push("basis.omega_x", num(b.omega_x))
        .push("basis.omega_y", num(b.omega_y))
        .push("basis.n_x", b.n_x)
        .push("basis.n_y", b.n_y)
        .push("lower_basis.n_x", cfg.lower_basis().n_x)
        .push("lower_basis.n_y", cfg.lower_basis().n_y)
        .push(
            "converged_upto",
            eig.converged_upto().map_or("none".to_string(), |k| k.to_string()),
        )
        .push("indexing", "k counts eigenstates from 0 in ascending energy");
    m
}

fn write(report: &mut Report, path: PathBuf, text: &str) -> Result<()> {
    write_atomic(&path, text.as_bytes())?;
    report.files.push(path);
    Ok(())
}

/// Analysis window `[window_start, min(window_end, converged_upto)]`.
pub fn analysis_window(cfg: &RunConfig, eig: &EigenResult) -> Range<usize> {
    let end = cfg
        .window_end
        .map_or(usize::MAX, |e| e.saturating_add(1))
        .min(eig.analysable_end());
    cfg.window_start.min(end)..end
}

/// `energies.csv`, `convergence.csv` and optionally `coefficients.csv`.
pub fn write_spectrum(cfg: &RunConfig, sol: &CachedSolution, dir: &Path) -> Result<Report> {
    let mut report = Report::default();
    let eig = &sol.eig;
    let meta = solution_metadata(cfg, "spectrum", eig);
    write(&mut report, dir.join("energies.csv"), &energies_csv(eig, &meta))?;
    if let Some(conv) = &sol.convergence {
        write(&mut report, dir.join("convergence.csv"), &conv.to_csv(&meta))?;
    }
    if cfg.export_coeffs {
        let path = dir.join("coefficients.csv");
        let mut buf = Vec::new();
        write_coefficients_csv(&mut buf, eig, 0..eig.analysable_end(), &meta)?;
        write_atomic(&path, &buf)?;
        report.files.push(path);
    }
    report.summary.push(format!(
        "{} levels, converged up to k = {}",
        eig.dim(),
        eig.converged_upto().map_or("none".to_string(), |k| k.to_string())
    ));
    Ok(report)
}

fn entanglement_chart(spec: &EntanglementSpectrum, title: &str) -> String {
    let pick = |f: fn(&crate::entanglement::EntanglementRecord) -> f64| {
        spec.records.iter().map(|r| (r.k as f64, f(r))).collect::<Vec<_>>()
    };
    Chart::new(title, "k", "value")
        .with_series(Series::new(
            "S_vN",
            pick(|r| r.s_vn),
            Style::Markers(Marker::Plus),
            "#d62728",
        ))
        .with_series(Series::new(
            "|ΔP_AB|",
            pick(|r| r.dp_ab.abs()),
            Style::Markers(Marker::Star),
            "#1f77b4",
        ))
        .with_series(Series::new(
            "|S_AB|",
            pick(|r| r.s_ab.abs()),
            Style::Markers(Marker::Cross),
            "#2ca02c",
        ))
        .render()
}

/// `entanglement.csv` over every converged state, plus its scatter plot.
pub fn write_entanglement(cfg: &RunConfig, sol: &CachedSolution, dir: &Path) -> Result<Report> {
    let mut report = Report::default();
    let eig = &sol.eig;
    let spec = entanglement_spectrum(eig, 0..eig.analysable_end())?;
    let window = analysis_window(cfg, eig);
    let mut meta = solution_metadata(cfg, "entanglement", eig);
    meta.push("identity_max_deviation", num(spec.max_identity_deviation))
        .push("mean_S_vN", num(spec.mean_entropy()))
        .push("fraction_S_vN_above_0.9ln2", num(spec.fraction_above(0.9)));
    if !window.is_empty() {
        let sub = EntanglementSpectrum {
            records: spec.records[window.clone()].to_vec(),
            max_identity_deviation: spec.max_identity_deviation,
        };
        meta.push("window", format!("{}..={}", window.start, window.end - 1))
            .push("window.mean_S_vN", num(sub.mean_entropy()))
            .push("window.fraction_S_vN_above_0.9ln2", num(sub.fraction_above(0.9)));
    }
    write(&mut report, dir.join("entanglement.csv"), &spec.to_csv(&meta))?;
    if cfg.plots {
        let title = format!("J = {}, θ = {:.4}", cfg.params.coupling, cfg.params.theta);
        write(
            &mut report,
            dir.join("entanglement.svg"),
            &entanglement_chart(&spec, &title),
        )?;
    }
    report.summary.push(format!(
        "{} states, mean S_vN {:.6}, identity deviation {:.2e}",
        spec.records.len(),
        spec.mean_entropy(),
        spec.max_identity_deviation
    ));
    Ok(report)
}

/// Reads a plain level list: one number per line, or the `energy` column of
/// a CSV with header. `#` lines are skipped.
pub fn read_levels(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .peekable();
    let mut column = None;
    if let Some((_, first)) = lines.peek() {
        if first.split(',').any(|f| f.trim().parse::<f64>().is_err()) {
            let fields: Vec<&str> = first.split(',').map(str::trim).collect();
            let idx = fields.iter().position(|f| *f == "energy").unwrap_or(fields.len() - 1);
            column = Some(idx);
            lines.next();
        }
    }
    lines
        .map(|(n, l)| {
            let field = match column {
                Some(c) => l.split(',').nth(c).unwrap_or(""),
                None => l.split(',').next_back().unwrap_or(""),
            };
            field.trim().parse::<f64>().map_err(|_| Error::Config {
                line: n,
                reason: format!("not a number: `{field}`"),
            })
        })
        .collect()
}

/// Level statistics of an arbitrary ascending spectrum.
pub struct LevelStats {
    pub nnsd: NnsdResult,
    pub delta3: Delta3Curve,
    pub levels: usize,
}

pub fn level_stats(cfg: &RunConfig, levels: &[f64]) -> Result<LevelStats> {
    if levels.len() < MIN_STATS_LEVELS {
        return Err(Error::InsufficientData(format!(
            "statistics need at least {MIN_STATS_LEVELS} levels, window has {}",
            levels.len()
        )));
    }
    let unfolded = unfold(levels, cfg.unfold_degree)?;
    let nnsd = nnsd(&unfolded, cfg.nnsd_bins)?;
    let span = unfolded.span();
    let lengths: Vec<f64> = cfg.delta3_lengths.iter().copied().filter(|l| *l < span).collect();
    let delta3 = delta3_curve(&unfolded, &lengths, cfg.delta3_windows, cfg.seed)?;
    Ok(LevelStats {
        nnsd,
        delta3,
        levels: levels.len(),
    })
}

fn stats_charts(stats: &LevelStats, amps: Option<&AmplitudeStats>) -> Vec<(&'static str, String)> {
    let h = &stats.nnsd.histogram;
    let width = h.edges[1] - h.edges[0];
    let hist: Vec<(f64, f64)> = h.centers().zip(h.densities.iter().copied()).collect();
    let s_max = *h.edges.last().unwrap();
    let curve = |f: fn(f64) -> f64, lo: f64, hi: f64| -> Vec<(f64, f64)> {
        (0..=200)
            .map(|i| lo + (hi - lo) * i as f64 / 200.0)
            .map(|s| (s, f(s)))
            .collect()
    };
    let nnsd_svg = Chart::new(
        format!(
            "NNSD: KS(Wigner) = {:.4}, KS(Poisson) = {:.4}",
            stats.nnsd.ks_wigner, stats.nnsd.ks_poisson
        ),
        "s",
        "P(s)",
    )
    .with_series(Series::new("histogram", hist, Style::Bars(width), "#7f7f7f"))
    .with_series(Series::new(
        "Wigner",
        curve(wigner_pdf, 0.0, s_max),
        Style::Line,
        "#d62728",
    ))
    .with_series(Series::new(
        "Poisson",
        curve(poisson_pdf, 0.0, s_max),
        Style::Line,
        "#1f77b4",
    ))
    .render();

    let l_max = stats.delta3.points.last().map_or(1.0, |p| p.0);
    let d3_svg = Chart::new("Δ3 spectral rigidity", "L", "Δ3(L)")
        .with_series(Series::new(
            "spectrum",
            stats.delta3.points.clone(),
            Style::Markers(Marker::Dot),
            "#000000",
        ))
        .with_series(Series::new(
            "Poisson",
            curve(poisson_delta3, 0.0, l_max),
            Style::Line,
            "#1f77b4",
        ))
        .with_series(Series::new(
            "GOE",
            curve(goe_delta3, 1.0, l_max),
            Style::Line,
            "#d62728",
        ))
        .render();
    let mut out = vec![("nnsd.svg", nnsd_svg), ("delta3.svg", d3_svg)];

    if let Some(a) = amps {
        let h = &a.histogram;
        let width = h.edges[1] - h.edges[0];
        let hist: Vec<(f64, f64)> = h.centers().zip(h.densities.iter().copied()).collect();
        let (lo, hi) = (h.edges[0], *h.edges.last().unwrap());
        let gauss = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let g: Vec<(f64, f64)> = (0..=200)
            .map(|i| lo + (hi - lo) * i as f64 / 200.0)
            .map(|x| (x, gauss(x)))
            .collect();
        let svg = Chart::new(
            format!("Amplitudes: KS(normal) = {:.4}", a.ks_normal),
            "c·√M",
            "density",
        )
        .with_series(Series::new("histogram", hist, Style::Bars(width), "#7f7f7f"))
        .with_series(Series::new("Gaussian", g, Style::Line, "#d62728"))
        .render();
        out.push(("amplitudes.svg", svg));
    }
    out
}

/// `nnsd.csv`, `delta3.csv` and `amplitudes.csv` over the analysis window.
pub fn write_stats(cfg: &RunConfig, sol: &CachedSolution, dir: &Path) -> Result<Report> {
    let eig = &sol.eig;
    let window = analysis_window(cfg, eig);
    let levels = &eig.energies()[window.clone()];
    let stats = level_stats(cfg, levels)?;
    let amps = amplitude_stats(eig, window.clone(), cfg.amplitude_bins)?;
    let mut meta = solution_metadata(cfg, "stats", eig);
    meta.push("window", format!("{}..={}", window.start, window.end - 1));
    emit_stats(cfg, meta, &stats, Some(&amps), dir)
}

/// Statistics of a level list read from `path` (no eigenvectors).
pub fn write_stats_from_levels(cfg: &RunConfig, path: &Path, dir: &Path) -> Result<Report> {
    let levels = read_levels(path)?;
    let stats = level_stats(cfg, &levels)?;
    let mut meta = cfg.metadata("stats");
    meta.push("levels_file", path.display()).push("levels", levels.len());
    emit_stats(cfg, meta, &stats, None, dir)
}

fn emit_stats(
    cfg: &RunConfig,
    mut meta: Metadata,
    stats: &LevelStats,
    amps: Option<&AmplitudeStats>,
    dir: &Path,
) -> Result<Report> {
    let mut report = Report::default();
    meta.push("seed", cfg.seed)
        .push("levels", stats.levels)
        .push("ks_wigner", num(stats.nnsd.ks_wigner))
        .push("ks_poisson", num(stats.nnsd.ks_poisson));
    if let Some(a) = amps {
        meta.push("ks_normal", num(a.ks_normal));
    }
    write(&mut report, dir.join("nnsd.csv"), &stats.nnsd.to_csv(&meta))?;
    write(&mut report, dir.join("delta3.csv"), &stats.delta3.to_csv(&meta))?;
    if let Some(a) = amps {
        write(&mut report, dir.join("amplitudes.csv"), &a.to_csv(&meta))?;
    }
    if cfg.plots {
        for (name, svg) in stats_charts(stats, amps) {
            write(&mut report, dir.join(name), &svg)?;
        }
    }
    let verdict = if stats.nnsd.ks_wigner < stats.nnsd.ks_poisson {
        "closer to Wigner"
    } else {
        "closer to Poisson"
    };
    report.summary.push(format!(
        "{} levels: KS(Wigner) {:.4}, KS(Poisson) {:.4} ({verdict})",
        stats.levels, stats.nnsd.ks_wigner, stats.nnsd.ks_poisson
    ));
    Ok(report)
}

/// Density of state `k` on `surface`, widening the grid until it captures
/// the surface weight or the widening budget runs out.
pub fn density_auto_grid(cfg: &RunConfig, eig: &EigenResult, k: usize, surface: Surface) -> Result<DensityField> {
    let mut grid = cfg.grid();
    let mut field = density_grid(eig, k, surface, &grid)?;
    for _ in 0..MAX_WIDENINGS {
        if !field.is_truncated() {
            break;
        }
        grid = grid.widened(1.5);
        log::info!("widening density grid to x ∈ [{}, {}]", grid.x_min, grid.x_max);
        field = density_grid(eig, k, surface, &grid)?;
    }
    if field.is_truncated() {
        log::warn!(
            "density of state {k} on {surface}: grid still captures only {:.4} of the weight",
            field.captured_fraction()
        );
    }
    Ok(field)
}

/// `density_<k>_<surface>.{csv,txt,svg}` for one state.
pub fn write_density(
    cfg: &RunConfig,
    sol: &CachedSolution,
    k: usize,
    surface: Option<Surface>,
    dir: &Path,
) -> Result<Report> {
    let eig = &sol.eig;
    let limit = eig.analysable_end();
    if k >= limit {
        return Err(Error::OutOfRange {
            start: k,
            end: k + 1,
            limit,
        });
    }
    let (record, _) = entanglement_record(eig, k)?;
    let surfaces: Vec<Surface> = surface.map_or(Surface::BOTH.to_vec(), |s| vec![s]);
    let mut report = Report::default();
    for s in surfaces {
        let field = density_auto_grid(cfg, eig, k, s)?;
        let mut meta = solution_metadata(cfg, "density", eig);
        meta.push("k", k)
            .push("k_one_based", k + 1)
            .push("surface", s)
            .push("energy", num(record.energy))
            .push("S_vN", num(record.s_vn))
            .push("surface_weight", num(field.norm_sq))
            .push("grid_integral", num(field.integral()))
            .push(
                "grid.x",
                format!(
                    "{}..{} ({} points)",
                    num(field.grid.x_min),
                    num(field.grid.x_max),
                    field.grid.n_x_points
                ),
            )
            .push(
                "grid.y",
                format!(
                    "{}..{} ({} points)",
                    num(field.grid.y_min),
                    num(field.grid.y_max),
                    field.grid.n_y_points
                ),
            );
        let stem = format!("density_{k}_{s}");
        write(&mut report, dir.join(format!("{stem}.csv")), &field.to_csv(&meta))?;
        write(
            &mut report,
            dir.join(format!("{stem}.txt")),
            &field.to_matrix_text(&meta),
        )?;
        if cfg.plots {
            let legend = vec![
                format!("k = {k} (0-based), {} (1-based), surface {s}", k + 1),
                format!("E = {:.8}, S_vN = {:.6}", record.energy, record.s_vn),
                format!("surface weight {:.6}", field.norm_sq),
            ];
            let g = &field.grid;
            let svg = heatmap(
                &format!("|ψ_{s}(x, y)|², state {k}"),
                &legend,
                &field.values,
                g.n_x_points,
                g.n_y_points,
                (g.x_min, g.x_max),
                (g.y_min, g.y_max),
            );
            write(&mut report, dir.join(format!("{stem}.svg")), &svg)?;
        }
        report.summary.push(format!(
            "state {k} surface {s}: weight {:.6}, S_vN {:.6}",
            field.norm_sq, record.s_vn
        ));
    }
    Ok(report)
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Report> {
    prepare_out_dir(&cfg.out_dir)?;
    let (sol, _) = solve(cfg)?;
    write_spectrum(cfg, &sol, &cfg.out_dir)
}

pub fn cmd_entanglement(cfg: &RunConfig) -> Result<Report> {
    prepare_out_dir(&cfg.out_dir)?;
    let (sol, _) = solve(cfg)?;
    write_entanglement(cfg, &sol, &cfg.out_dir)
}

/// With `levels`, analyses that level list instead of solving.
pub fn cmd_stats(cfg: &RunConfig, levels: Option<&Path>) -> Result<Report> {
    prepare_out_dir(&cfg.out_dir)?;
    match levels {
        Some(p) => write_stats_from_levels(cfg, p, &cfg.out_dir),
        None => {
            let (sol, _) = solve(cfg)?;
            write_stats(cfg, &sol, &cfg.out_dir)
        }
    }
}

pub fn cmd_density(cfg: &RunConfig, k: Option<usize>, surface: Option<Surface>) -> Result<Report> {
    let k = k
        .or(cfg.density_k)
        .ok_or_else(|| Error::invalid("density_k", "a state index is required"))?;
    prepare_out_dir(&cfg.out_dir)?;
    let (sol, _) = solve(cfg)?;
    write_density(cfg, &sol, k, surface.or(cfg.density_surface), &cfg.out_dir)
}

/// Subdirectory name of one sweep point.
pub fn point_dir_name(coupling: f64, theta: f64) -> String {
    format!("J{coupling}_theta{theta:.6}")
}

fn run_point(cfg: &RunConfig, dir: &Path) -> Result<Report> {
    let (sol, _) = solve(cfg)?;
    let mut report = write_spectrum(cfg, &sol, dir)?;
    report.merge(write_entanglement(cfg, &sol, dir)?);
    match write_stats(cfg, &sol, dir) {
        Ok(r) => report.merge(r),
        Err(Error::InsufficientData(msg)) => {
            log::warn!("{}: statistics skipped: {msg}", dir.display());
            report.summary.push(format!("statistics skipped: {msg}"));
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

/// Runs every (J, θ) point into its own subdirectory with up to
/// `cfg.jobs` points in flight. Points share only the eigen cache.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Report> {
    if cfg.sweep_j.is_empty() || cfg.sweep_theta.is_empty() {
        return Err(Error::invalid("sweep_j/sweep_theta", "sweep lists must be non-empty"));
    }
    prepare_out_dir(&cfg.out_dir)?;
    let mut points = Vec::new();
    for &j in &cfg.sweep_j {
        for &t in &cfg.sweep_theta {
            let name = point_dir_name(j, t);
            if points.iter().any(|(n, _): &(String, RunConfig)| *n == name) {
                return Err(Error::invalid(
                    "sweep_j/sweep_theta",
                    format!("duplicate sweep point {name}"),
                ));
            }
            let mut c = cfg.at_point(j, t);
            c.out_dir = cfg.out_dir.join(&name);
            c.cache_dir = Some(cfg.cache_dir());
            points.push((name, c));
        }
    }
    for (_, c) in &points {
        c.validate()?;
        prepare_out_dir(&c.out_dir)?;
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Report>>>> = Mutex::new((0..points.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..cfg.jobs.min(points.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((name, c)) = points.get(i) else { break };
                log::info!("sweep point {name}");
                let r = run_point(c, &c.out_dir);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });

    let mut report = Report::default();
    for ((name, _), r) in points.iter().zip(results.into_inner().unwrap()) {
        let r = r.expect("every sweep point ran")?;
        report.files.extend(r.files);
        report
            .summary
            .extend(r.summary.into_iter().map(|s| format!("{name}: {s}")));
    }
    Ok(report)
}
