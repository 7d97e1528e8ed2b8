//! Convergence study toward the limit spectrum, the room-average
//! diagnostic and the unit-cell folding check.

use num_complex::Complex64;
use serde::Serialize;

use super::{
    check_window, hausdorff_intervals, structure_from_samples, validate_settings, BandStructure,
    BandsError, CellProblem, Gap, SweepSettings,
};
use crate::floquet::brillouin_grid;
use crate::geometry::{
    asymptotic_preset, validate_params, CellGeometry, Region, ScalingPreset, ValidatedParams,
    WaveguideParams,
};
use crate::limitspec::{limit_spectrum, LimitParams, LimitSpectrum};
use crate::mesh::PeriodCellMesh;

/// Room mean `u₂`, mouth trace mean `ū₁` and the limit-relation residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomAverage {
    pub room_mean: Complex64,
    pub mouth_mean: Complex64,
    /// `|α(u₂ − ū₁) − λu₂|`.
    pub residual: f64,
}

/// `values` are nodal values on every mesh vertex. Returns `None` on a cell
/// without a room.
pub fn room_average(
    mesh: &PeriodCellMesh,
    cell: &CellGeometry,
    values: &[Complex64],
    lambda: f64,
    alpha: f64,
) -> Option<RoomAverage> {
    let passage = cell.passage?;
    cell.room?;
    let (mut room_int, mut room_area) = (Complex64::default(), 0.0);
    let (mut mouth_int, mut mouth_len) = (Complex64::default(), 0.0);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        match mesh.tags[t] {
            Region::Room => {
                let a = mesh.triangle_area(t);
                room_int += (values[tri[0]] + values[tri[1]] + values[tri[2]]) * (a / 3.0);
                room_area += a;
            }
            Region::Passage => {
                for e in 0..3 {
                    let (i, j) = (tri[e], tri[(e + 1) % 3]);
                    let (pi, pj) = (mesh.vertices[i], mesh.vertices[j]);
                    if pi[1] == passage.y0 && pj[1] == passage.y0 {
                        let len = (pj[0] - pi[0]).abs();
                        mouth_int += (values[i] + values[j]) * (0.5 * len);
                        mouth_len += len;
                    }
                }
            }
            Region::Strip => {}
        }
    }
    let u2 = room_int / room_area;
    let u1 = mouth_int / mouth_len;
    Some(RoomAverage {
        room_mean: u2,
        mouth_mean: u1,
        residual: ((u2 - u1) * alpha - u2 * lambda).norm(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StudyGeometry {
    Protruded(ScalingPreset),
    /// Control run: the bare strip at every ε.
    Unperturbed {
        width: f64,
    },
}

impl StudyGeometry {
    pub fn params(&self, eps: f64) -> Result<ValidatedParams, BandsError> {
        Ok(match self {
            StudyGeometry::Protruded(s) => asymptotic_preset(s, eps)?,
            StudyGeometry::Unperturbed { width } => {
                validate_params(WaveguideParams::unperturbed(eps, *width))?
            }
        })
    }

    pub fn limit(&self) -> Result<LimitSpectrum, BandsError> {
        Ok(match self {
            StudyGeometry::Protruded(s) => {
                limit_spectrum(&LimitParams::new(s.alpha, s.r, s.width))?
            }
            StudyGeometry::Unperturbed { .. } => LimitSpectrum {
                alpha: 0.0,
                beta: None,
                has_gap: false,
                intervals: vec![(0.0, f64::INFINITY)],
            },
        })
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            StudyGeometry::Protruded(s) => Some(s.alpha),
            StudyGeometry::Unperturbed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyOptions {
    pub sweep: SweepSettings,
    /// Elements across one period at least; the mesh size at ε is
    /// `min(target_h, ε / cells_per_period)`.
    pub cells_per_period: f64,
}

impl StudyOptions {
    pub fn mesh_size(&self, eps: f64) -> f64 {
        self.sweep.target_h.min(eps / self.cells_per_period)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceEntry {
    pub eps: f64,
    pub target_h: f64,
    pub n_vertices: usize,
    pub bands: BandStructure,
    /// Interior gap overlapping `(α, β)` the most, if any.
    pub gap: Option<Gap>,
    pub hausdorff: f64,
    pub pi_residual_median: Option<f64>,
    pub pi_residual_max: Option<f64>,
    pub pi_samples: usize,
    pub gap_check: GapCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapCheck {
    pub eps: f64,
    pub delta: Option<f64>,
    /// No band meets `(α + δ, β − δ)`.
    pub gap_clear: bool,
    pub hits_alpha: bool,
    pub hits_beta: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub geometry: StudyGeometry,
    pub limit: LimitSpectrum,
    pub lambda_max: f64,
    pub entries: Vec<ConvergenceEntry>,
    /// Check at the smallest ε.
    pub gap_check: GapCheck,
}

impl ConvergenceReport {
    pub fn hausdorff_decreasing(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[1].hausdorff < w[0].hausdorff)
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn main_gap(bands: &BandStructure, limit: &LimitSpectrum) -> Option<Gap> {
    let (a, b) = match limit.beta {
        Some(beta) => (limit.alpha, beta),
        None => {
            return bands
                .interior_gaps()
                .copied()
                .max_by(|x, y| (x.hi - x.lo).total_cmp(&(y.hi - y.lo)))
        }
    };
    bands
        .interior_gaps()
        .map(|g| (g, g.hi.min(b) - g.lo.max(a)))
        .filter(|&(_, overlap)| overlap > 0.0)
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(g, _)| *g)
}

fn gap_check(eps: f64, bands: &BandStructure, limit: &LimitSpectrum) -> GapCheck {
    match limit.beta {
        Some(beta) => {
            let alpha = limit.alpha;
            let delta = 0.1 * (beta - alpha);
            let gap_clear = !bands.intersects(alpha + delta, beta - delta);
            let hits_alpha = bands.intersects(alpha - delta, alpha + delta);
            let hits_beta = bands.intersects(beta - delta, beta + delta);
            GapCheck {
                eps,
                delta: Some(delta),
                gap_clear,
                hits_alpha,
                hits_beta,
                passed: gap_clear && hits_alpha && hits_beta,
            }
        }
        None => {
            let gap_clear = bands.interior_gaps().next().is_none();
            GapCheck {
                eps,
                delta: None,
                gap_clear,
                hits_alpha: true,
                hits_beta: true,
                passed: gap_clear,
            }
        }
    }
}

fn study_one(
    geometry: &StudyGeometry,
    eps: f64,
    opts: &StudyOptions,
    limit: &LimitSpectrum,
) -> Result<ConvergenceEntry, BandsError> {
    let s = &opts.sweep;
    let params = geometry.params(eps)?;
    let h = opts.mesh_size(eps);
    let problem = CellProblem::new(&params, h, s.grading)?;
    let phis = brillouin_grid(s.n_phi);
    let solved = problem.sweep(&phis, s.k, s.eig_tol)?;

    let mut pi = Vec::new();
    if let Some(alpha) = geometry.alpha() {
        // unit mass per unit length instead of per cell
        let scale = eps.sqrt();
        for (pencil, res) in &solved {
            for (&lambda, x) in res.eigenvalues.iter().zip(&res.eigenvectors) {
                if lambda < alpha {
                    let full = pencil.expand(x);
                    if let Some(avg) =
                        room_average(&problem.mesh, &problem.cell, &full, lambda, alpha)
                    {
                        pi.push(avg.residual * scale);
                    }
                }
            }
        }
    }
    let samples: Vec<Vec<f64>> = solved.into_iter().map(|(_, r)| r.eigenvalues).collect();
    check_window(&phis, &samples, s.k, s.lambda_max)?;
    let bands = structure_from_samples(eps, phis, samples, s.lambda_max);
    let hausdorff = hausdorff_intervals(
        &bands.union_in_window(),
        &limit.within(s.lambda_max),
        s.lambda_max / 2000.0,
    );
    Ok(ConvergenceEntry {
        eps,
        gap_check: gap_check(eps, &bands, limit),
        target_h: h,
        n_vertices: problem.mesh.n_vertices(),
        gap: main_gap(&bands, limit),
        bands,
        hausdorff,
        pi_residual_max: pi.iter().copied().reduce(f64::max),
        pi_samples: pi.len(),
        pi_residual_median: median(pi),
    })
}

/// Band structures for a strictly decreasing list of ε, compared with the
/// limit spectrum; the gap check runs at the smallest ε.
pub fn convergence_study(
    geometry: &StudyGeometry,
    eps_list: &[f64],
    opts: &StudyOptions,
) -> Result<ConvergenceReport, BandsError> {
    validate_settings(&opts.sweep)?;
    if eps_list.is_empty() || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(BandsError::InvalidInput(
            "eps_list must be nonempty and strictly decreasing".into(),
        ));
    }
    let limit = geometry.limit()?;
    let entries = eps_list
        .iter()
        .map(|&eps| study_one(geometry, eps, opts, &limit))
        .collect::<Result<Vec<_>, _>>()?;
    let gap_check = entries.last().unwrap().gap_check;
    Ok(ConvergenceReport {
        geometry: *geometry,
        limit,
        lambda_max: opts.sweep.lambda_max,
        entries,
        gap_check,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldReport {
    /// Hausdorff distance between the two sampled sets in the window.
    pub distance: f64,
    pub unit_cell_values: Vec<f64>,
    pub eps_cell_values: Vec<f64>,
}

/// Spectrum in the window computed on the unit cell (two glued ε-cells at
/// ε = 1/2) and on the ε-cell with the matching phases `(φ + 2πl) / 2`.
pub fn fold_validation(
    params: &ValidatedParams,
    s: &SweepSettings,
) -> Result<FoldReport, BandsError> {
    validate_settings(s)?;
    if params.eps() != 0.5 {
        return Err(BandsError::InvalidInput(
            "fold validation needs eps = 1/2".into(),
        ));
    }
    let cell = CellProblem::new(params, s.target_h, s.grading)?;
    let unit = CellProblem::from_mesh(cell.cell.clone(), cell.mesh.tile(2));

    let unit_solved = unit.sweep(&brillouin_grid(s.n_phi), 2 * s.k, s.eig_tol)?;
    let cell_solved = cell.sweep(&brillouin_grid(2 * s.n_phi), s.k, s.eig_tol)?;
    let collect =
        |solved: Vec<(crate::floquet::FiberPencil, crate::eig::EigenResult)>| -> Vec<f64> {
            let mut v: Vec<f64> = solved
                .into_iter()
                .flat_map(|(_, r)| r.eigenvalues)
                .collect();
            v.sort_by(f64::total_cmp);
            v
        };
    let (u, c) = (collect(unit_solved), collect(cell_solved));
    // points in the window against the full sets, so values straddling
    // λ_max do not produce spurious distance
    let one_sided = |p: &[f64], q: &[f64]| {
        p.iter()
            .filter(|&&x| x <= s.lambda_max)
            .map(|x| {
                q.iter()
                    .map(|y| (x - y).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    let distance = one_sided(&u, &c).max(one_sided(&c, &u));
    let within = |v: Vec<f64>| v.into_iter().filter(|&x| x <= s.lambda_max).collect();
    Ok(FoldReport {
        distance,
        unit_cell_values: within(u),
        eps_cell_values: within(c),
    })
}
