//! Run configuration: a TOML document with one top-level key and five
//! tables. See `README.md` for the grammar.
//!
//! ```toml
//! eps_list = ["1/4", "1/8", 0.0625]
//!
//! [preset]
//! alpha = 1.0
//! r = 1.0
//! L = 1.0
//!
//! [sweep]
//! n_phi = 33
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use roomgap_core::{asymptotic_preset, ScalingPreset, StudyGeometry, StudyOptions, SweepSettings};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    Validation(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse {
                line,
                column,
                message,
            } => {
                write!(f, "PARSE_ERROR at line {line}, column {column}: {message}")
            }
            ConfigError::Validation(fields) => write!(f, "VALIDATION_ERROR: {}", fields.join("; ")),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Protruded,
    Unperturbed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum EpsValue {
    Number(f64),
    Fraction(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPreset {
    alpha: f64,
    r: f64,
    #[serde(rename = "L")]
    width: f64,
    mouth_fraction: Option<f64>,
    room_width: Option<f64>,
    room_height: Option<f64>,
    geometry: Option<GeometryKind>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    target_h: Option<f64>,
    grading: Option<f64>,
    cells_per_period: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    n_phi: Option<usize>,
    k: Option<usize>,
    lambda_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    eig_tol: Option<f64>,
    root_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    formats: Option<Vec<Format>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    eps_list: Vec<EpsValue>,
    preset: RawPreset,
    #[serde(default)]
    mesh: RawMesh,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshConfig {
    pub target_h: f64,
    pub grading: f64,
    pub cells_per_period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub n_phi: usize,
    pub k: usize,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub eig_tol: f64,
    /// Upper bound on root error; bisections run to adjacent floats, which
    /// always meets it.
    pub root_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: ScalingPreset,
    pub geometry: GeometryKind,
    /// Strictly decreasing.
    pub eps_list: Vec<f64>,
    pub mesh: MeshConfig,
    pub sweep: SweepConfig,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
}

pub const DEFAULT_N_PHI: usize = 33;
pub const DEFAULT_K: usize = 8;
pub const DEFAULT_TARGET_H: f64 = 1.0 / 32.0;
pub const DEFAULT_GRADING: f64 = 1.3;
pub const DEFAULT_CELLS_PER_PERIOD: f64 = 4.0;
pub const DEFAULT_EIG_TOL: f64 = 1e-8;
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;

impl RunConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    pub fn study_geometry(&self) -> StudyGeometry {
        match self.geometry {
            GeometryKind::Protruded => StudyGeometry::Protruded(self.preset),
            GeometryKind::Unperturbed => StudyGeometry::Unperturbed {
                width: self.preset.width,
            },
        }
    }

    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            target_h: self.mesh.target_h,
            grading: self.mesh.grading,
            n_phi: self.sweep.n_phi,
            k: self.sweep.k,
            lambda_max: self.sweep.lambda_max,
            eig_tol: self.tolerances.eig_tol,
        }
    }

    pub fn study_options(&self) -> StudyOptions {
        StudyOptions {
            sweep: self.sweep_settings(),
            cells_per_period: self.mesh.cells_per_period,
        }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn parse_eps(v: &EpsValue) -> Result<f64, String> {
    match v {
        EpsValue::Number(x) => Ok(*x),
        EpsValue::Fraction(s) => {
            let parse = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("eps_list: cannot read {s:?}"))
            };
            match s.split_once('/') {
                Some((a, b)) => Ok(parse(a)? / parse(b)?),
                None => parse(s),
            }
        }
    }
}

/// `1/n` for a positive integer `n`, up to rounding of decimal input.
fn reciprocal_integer(eps: f64) -> bool {
    if !(eps > 0.0 && eps <= 1.0) {
        return false;
    }
    let n = (1.0 / eps).round();
    ((1.0 / n) - eps).abs() <= 1e-12 * eps
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let mut bad = Vec::new();
    let mut positive = |name: &str, v: f64| {
        if !(v.is_finite() && v > 0.0) {
            bad.push(format!("{name} = {v} must be positive"));
        }
    };

    let p = &raw.preset;
    positive("preset.alpha", p.alpha);
    positive("preset.r", p.r);
    positive("preset.L", p.width);
    let preset = ScalingPreset {
        alpha: p.alpha,
        r: p.r,
        width: p.width,
        mouth_fraction: p.mouth_fraction.unwrap_or(0.5),
        room_width: p.room_width.unwrap_or(1.0),
        room_height: p.room_height.unwrap_or(1.0),
    };
    positive("preset.mouth_fraction", preset.mouth_fraction);
    positive("preset.room_width", preset.room_width);
    positive("preset.room_height", preset.room_height);
    let geometry = p.geometry.unwrap_or(GeometryKind::Protruded);

    let mesh = MeshConfig {
        target_h: raw.mesh.target_h.unwrap_or(DEFAULT_TARGET_H),
        grading: raw.mesh.grading.unwrap_or(DEFAULT_GRADING),
        cells_per_period: raw
            .mesh
            .cells_per_period
            .unwrap_or(DEFAULT_CELLS_PER_PERIOD),
    };
    positive("mesh.target_h", mesh.target_h);
    positive("mesh.cells_per_period", mesh.cells_per_period);
    let sweep = SweepConfig {
        n_phi: raw.sweep.n_phi.unwrap_or(DEFAULT_N_PHI),
        k: raw.sweep.k.unwrap_or(DEFAULT_K),
        lambda_max: raw
            .sweep
            .lambda_max
            .unwrap_or(2.0 * (PI / (2.0 * p.width)).powi(2)),
    };
    positive("sweep.lambda_max", sweep.lambda_max);
    let tolerances = Tolerances {
        eig_tol: raw.tolerances.eig_tol.unwrap_or(DEFAULT_EIG_TOL),
        root_tol: raw.tolerances.root_tol.unwrap_or(DEFAULT_ROOT_TOL),
    };
    positive("tolerances.eig_tol", tolerances.eig_tol);
    positive("tolerances.root_tol", tolerances.root_tol);

    if !(mesh.grading.is_finite() && mesh.grading >= 1.0) {
        bad.push(format!(
            "mesh.grading = {} must be at least 1",
            mesh.grading
        ));
    }
    if sweep.n_phi < 2 {
        bad.push(format!("sweep.n_phi = {} must be at least 2", sweep.n_phi));
    }
    if sweep.k == 0 {
        bad.push("sweep.k must be positive".into());
    }

    let mut eps_list = Vec::with_capacity(raw.eps_list.len());
    if raw.eps_list.is_empty() {
        bad.push("eps_list must not be empty".into());
    }
    for v in &raw.eps_list {
        match parse_eps(v) {
            Ok(eps) if reciprocal_integer(eps) => {
                let exact = 1.0 / (1.0 / eps).round();
                if geometry == GeometryKind::Protruded && bad.is_empty() {
                    if let Err(e) = asymptotic_preset(&preset, exact) {
                        bad.push(format!("eps_list entry {exact}: {e}"));
                    }
                }
                eps_list.push(exact);
            }
            Ok(eps) => bad.push(format!("eps_list entry {eps} is not of the form 1/n")),
            Err(m) => bad.push(m),
        }
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        bad.push("eps_list must be strictly decreasing".into());
    }

    let formats = raw
        .output
        .formats
        .unwrap_or_else(|| vec![Format::Csv, Format::Json, Format::Svg]);
    if !bad.is_empty() {
        return Err(ConfigError::Validation(bad));
    }
    Ok(RunConfig {
        preset,
        geometry,
        eps_list,
        mesh,
        sweep,
        tolerances,
        output: OutputConfig {
            directory: raw.output.directory.unwrap_or_else(|| PathBuf::from(".")),
            formats,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "eps_list = [\"1/8\"]\n[preset]\nalpha = 1.0\nr = 1.0\nL = 1.0\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.eps_list, vec![0.125]);
        assert_eq!(c.sweep.n_phi, 33);
        assert!((c.sweep.lambda_max - 2.0 * (PI / 2.0).powi(2)).abs() < 1e-15);
        assert_eq!(c.geometry, GeometryKind::Protruded);
        assert_eq!(c.output.formats.len(), 3);
        assert_eq!(c.tolerances.eig_tol, DEFAULT_EIG_TOL);
    }

    #[test]
    fn mixed_eps_notation() {
        let c =
            parse_config(&MINIMAL.replace("[\"1/8\"]", "[\"1/4\", 0.125, \"0.0625\"]")).unwrap();
        assert_eq!(c.eps_list, vec![0.25, 0.125, 0.0625]);
    }

    #[test]
    fn non_reciprocal_eps_is_invalid() {
        match parse_config(&MINIMAL.replace("[\"1/8\"]", "[0.3]")) {
            Err(ConfigError::Validation(f)) => assert!(f[0].contains("0.3"), "{f:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_key_reports_position() {
        let text = format!("{MINIMAL}r = 2.0\n");
        match parse_config(&text) {
            Err(ConfigError::Parse { line, column, .. }) => {
                assert_eq!(line, 6);
                assert_eq!(column, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = format!("{MINIMAL}[sweep]\nnphi = 3\n");
        assert!(matches!(
            parse_config(&text),
            Err(ConfigError::Parse { line: 7, .. })
        ));
    }

    #[test]
    fn inadmissible_eps_for_preset() {
        // α r ε ≤ R = 1/2 fails at ε = 1/4 when α r = 4
        let text = MINIMAL
            .replace("[\"1/8\"]", "[\"1/4\"]")
            .replace("alpha = 1.0", "alpha = 4.0");
        match parse_config(&text) {
            Err(ConfigError::Validation(f)) => assert!(f[0].contains("0.25")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn increasing_eps_is_invalid() {
        let text = MINIMAL.replace("[\"1/8\"]", "[\"1/8\", \"1/4\"]");
        assert!(matches!(
            parse_config(&text),
            Err(ConfigError::Validation(_))
        ));
    }
}
