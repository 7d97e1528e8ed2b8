//! Subcommand bodies. Each writes its files into an existing directory and
//! reports what it wrote.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use roomgap_core::bands::CellProblem;
use roomgap_core::{
    brillouin_grid, compute_bands, convergence_study, default_mode_range, limit_fiber_bands,
    limit_spectrum, mesh_quality, solve_beta_star, BandsError, ConvergenceReport, LimitError,
    LimitParams, SweepSettings,
};
use serde_json::{json, Value};

use crate::config::{ConfigError, Format, GeometryKind, RunConfig};
use crate::output::{csv, json_num, num, opt_num, write, BandDiagram};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Io(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::Io(m) => write!(f, "IO_ERROR: {m}"),
            CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<BandsError> for CliError {
    fn from(e: BandsError) -> Self {
        match e {
            BandsError::Geometry(_) | BandsError::InvalidInput(_) => {
                CliError::Config(ConfigError::Validation(vec![e.to_string()]))
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<LimitError> for CliError {
    fn from(e: LimitError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Result of a subcommand: the files written and whether the run counts as
/// a success (the gap check for `converge`).
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub success: bool,
    pub summary: Vec<String>,
}

impl Outcome {
    fn emit(&mut self, dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
        let path = dir.join(name);
        write(dir, name, contents).map_err(io_err(&path))?;
        self.files.push(path);
        Ok(())
    }
}

/// The output directory must already exist.
pub fn check_out_dir(dir: &Path) -> Result<(), CliError> {
    match fs::metadata(dir) {
        Ok(m) if m.is_dir() => Ok(()),
        Ok(_) => Err(CliError::Io(format!(
            "{} is not a directory",
            dir.display()
        ))),
        Err(e) => Err(CliError::Io(format!("{}: {e}", dir.display()))),
    }
}

fn eps_tag(eps: f64) -> String {
    format!("eps{}", (1.0 / eps).round() as u64)
}

fn limit_params(cfg: &RunConfig) -> LimitParams {
    LimitParams::new(cfg.preset.alpha, cfg.preset.r, cfg.preset.width)
}

/// Limit spectrum and limit fiber bands of the preset.
pub fn cmd_limit(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    check_out_dir(dir)?;
    let p = limit_params(cfg);
    let spectrum = limit_spectrum(&p)?;
    let star = solve_beta_star(&p)?;
    let lambda_max = cfg.sweep.lambda_max;
    let k_per_mode = cfg.sweep.k.max(2);
    let fibers: Vec<_> = brillouin_grid(cfg.sweep.n_phi)
        .into_iter()
        .map(|phi| {
            let mut b = limit_fiber_bands(
                &p,
                phi,
                default_mode_range(phi, lambda_max, p.alpha),
                k_per_mode,
            );
            b.upper.retain(|&l| l <= lambda_max);
            b
        })
        .collect();

    let mut out = Outcome {
        success: true,
        ..Outcome::default()
    };
    if cfg.wants(Format::Json) {
        let doc = json!({
            "alpha": p.alpha,
            "r": p.r,
            "L": p.width,
            "beta": star.map(|s| s.beta),
            "mu_star": star.map(|s| s.mu),
            "has_gap": spectrum.has_gap,
            "gap_threshold": p.gap_threshold(),
            "lambda_max": lambda_max,
            "intervals": spectrum.intervals.iter().map(|&(a, b)| json!([a, json_num(b)])).collect::<Vec<_>>(),
            "fiber_bands": fibers.iter().map(|b| json!({
                "phi": b.phi,
                "lower": b.lower,
                "upper": b.upper,
                "modes": [b.modes_used.0, b.modes_used.1],
            })).collect::<Vec<_>>(),
        });
        out.emit(dir, "limit_spectrum.json", &to_pretty(&doc))?;
    }
    if cfg.wants(Format::Csv) {
        let mut rows = Vec::new();
        for b in &fibers {
            for (family, values) in [("lower", &b.lower), ("upper", &b.upper)] {
                for (i, &l) in values.iter().enumerate() {
                    rows.push(vec![
                        num(b.phi),
                        family.to_string(),
                        (i + 1).to_string(),
                        num(l),
                    ]);
                }
            }
        }
        out.emit(
            dir,
            "limit_bands.csv",
            &csv(&["phi", "family", "k", "lambda"], &rows),
        )?;
    }
    out.summary.push(match star {
        Some(s) => format!("alpha = {}, beta = {}, gap (alpha, beta)", p.alpha, s.beta),
        None => format!(
            "alpha = {} >= (pi/2L)^2 = {}: no gap",
            p.alpha,
            p.gap_threshold()
        ),
    });
    Ok(out)
}

fn with_mesh(s: SweepSettings, target_h: f64) -> SweepSettings {
    SweepSettings { target_h, ..s }
}

/// Band structures, gaps and band diagrams for every ε.
pub fn cmd_bands(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    check_out_dir(dir)?;
    let geometry = cfg.study_geometry();
    let opts = cfg.study_options();
    let limit = geometry.limit()?;
    let mut out = Outcome {
        success: true,
        ..Outcome::default()
    };
    let (mut band_rows, mut gap_rows) = (Vec::new(), Vec::new());
    for &eps in &cfg.eps_list {
        let params = geometry.params(eps)?;
        let b = compute_bands(&params, &with_mesh(opts.sweep, opts.mesh_size(eps)))?;
        for (phi, values) in b.phi_grid.iter().zip(&b.samples) {
            for (i, &l) in values.iter().enumerate() {
                band_rows.push(vec![num(eps), num(*phi), (i + 1).to_string(), num(l)]);
            }
        }
        for g in &b.gaps {
            gap_rows.push(vec![
                num(eps),
                num(g.lo),
                num(g.hi),
                g.truncated.to_string(),
            ]);
        }
        let interior = b.interior_gaps().count();
        out.summary.push(format!(
            "eps = 1/{}: {} bands, {interior} interior gaps",
            (1.0 / eps).round(),
            b.bands.len()
        ));
        if cfg.wants(Format::Svg) {
            let mut references = Vec::new();
            if cfg.geometry == GeometryKind::Protruded {
                references.push(("α", limit.alpha));
                if let Some(beta) = limit.beta {
                    references.push(("β", beta));
                }
            }
            let svg = BandDiagram {
                title: format!("bands at eps = 1/{}", (1.0 / eps).round()),
                phis: &b.phi_grid,
                samples: &b.samples,
                lambda_max: cfg.sweep.lambda_max,
                references,
            }
            .render();
            out.emit(dir, &format!("bands_{}.svg", eps_tag(eps)), &svg)?;
        }
    }
    if cfg.wants(Format::Csv) {
        out.emit(
            dir,
            "bands.csv",
            &csv(&["eps", "phi", "k", "lambda"], &band_rows),
        )?;
        out.emit(
            dir,
            "gaps.csv",
            &csv(&["eps", "gap_lo", "gap_hi", "truncated"], &gap_rows),
        )?;
    }
    Ok(out)
}

pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let rows: Vec<Vec<String>> = report
        .entries
        .iter()
        .map(|e| {
            vec![
                num(e.eps),
                num(e.hausdorff),
                opt_num(e.gap.map(|g| g.lo)),
                opt_num(e.gap.map(|g| g.hi)),
                e.gap_check.passed.to_string(),
                opt_num(e.pi_residual_median),
            ]
        })
        .collect();
    csv(
        &[
            "eps",
            "hausdorff",
            "gap_lo",
            "gap_hi",
            "corollary_pass",
            "pi_residual_median",
        ],
        &rows,
    )
}

pub fn convergence_summary(report: &ConvergenceReport) -> Value {
    let entries: Vec<Value> = report
        .entries
        .iter()
        .map(|e| {
            json!({
                "eps": e.eps,
                "target_h": e.target_h,
                "n_vertices": e.n_vertices,
                "hausdorff": e.hausdorff,
                "gap": e.gap.map(|g| json!([g.lo, g.hi])),
                "bands": e.bands.bands.iter().map(|b| json!([b.lo, b.hi])).collect::<Vec<_>>(),
                "pi_residual_median": e.pi_residual_median,
                "pi_residual_max": e.pi_residual_max,
                "pi_samples": e.pi_samples,
                "corollary_pass": e.gap_check.passed,
            })
        })
        .collect();
    let c = &report.gap_check;
    json!({
        "geometry": report.geometry,
        "alpha": report.limit.beta.map(|_| report.limit.alpha),
        "beta": report.limit.beta,
        "has_gap": report.limit.has_gap,
        "lambda_max": report.lambda_max,
        "entries": entries,
        "hausdorff_decreasing": report.hausdorff_decreasing(),
        "gap_check": {
            "eps": c.eps,
            "delta": c.delta,
            "gap_clear": c.gap_clear,
            "hits_alpha": c.hits_alpha,
            "hits_beta": c.hits_beta,
            "passed": c.passed,
        },
    })
}

/// Convergence study; succeeds iff the gap check passes at the smallest ε.
pub fn cmd_converge(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    check_out_dir(dir)?;
    let report = convergence_study(&cfg.study_geometry(), &cfg.eps_list, &cfg.study_options())?;
    let mut out = Outcome {
        success: report.gap_check.passed,
        ..Outcome::default()
    };
    if cfg.wants(Format::Csv) {
        out.emit(dir, "convergence.csv", &convergence_csv(&report))?;
    }
    if cfg.wants(Format::Json) {
        out.emit(
            dir,
            "convergence_summary.json",
            &to_pretty(&convergence_summary(&report)),
        )?;
    }
    for e in &report.entries {
        out.summary.push(format!(
            "eps = 1/{}: hausdorff {:.6}, gap {}, pi median {}",
            (1.0 / e.eps).round(),
            e.hausdorff,
            e.gap
                .map_or("none".into(), |g| format!("({:.6}, {:.6})", g.lo, g.hi)),
            e.pi_residual_median
                .map_or("n/a".into(), |v| format!("{v:.6}")),
        ));
    }
    out.summary.push(format!(
        "gap check at eps = 1/{}: {}",
        (1.0 / report.gap_check.eps).round(),
        if report.gap_check.passed {
            "passed"
        } else {
            "failed"
        }
    ));
    Ok(out)
}

/// Meshes of every ε-cell in the text format, plus quality figures.
pub fn cmd_mesh_dump(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    check_out_dir(dir)?;
    let geometry = cfg.study_geometry();
    let opts = cfg.study_options();
    let mut out = Outcome {
        success: true,
        ..Outcome::default()
    };
    let mut rows = Vec::new();
    for &eps in &cfg.eps_list {
        let params = geometry.params(eps)?;
        let problem = CellProblem::new(&params, opts.mesh_size(eps), cfg.mesh.grading)?;
        let m = &problem.mesh;
        let mut text = Vec::new();
        m.write_text(&mut text)
            .map_err(|e| CliError::Io(e.to_string()))?;
        let text = String::from_utf8(text).map_err(|e| CliError::Io(e.to_string()))?;
        out.emit(dir, &format!("mesh_{}.txt", eps_tag(eps)), &text)?;
        let q = mesh_quality(m);
        rows.push(vec![
            num(eps),
            m.n_vertices().to_string(),
            m.n_triangles().to_string(),
            num(q.min_angle),
            num(q.max_aspect),
        ]);
        out.summary.push(format!(
            "eps = 1/{}: {} vertices, {} triangles, min angle {:.2} deg",
            (1.0 / eps).round(),
            m.n_vertices(),
            m.n_triangles(),
            q.min_angle
        ));
    }
    out.emit(
        dir,
        "mesh_quality.csv",
        &csv(
            &[
                "eps",
                "n_vertices",
                "n_triangles",
                "min_angle_deg",
                "max_aspect",
            ],
            &rows,
        ),
    )?;
    Ok(out)
}

fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialise");
    s.push('\n');
    s
}
