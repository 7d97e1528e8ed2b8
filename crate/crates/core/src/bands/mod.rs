//! Brillouin-zone sweeps, band intervals, gaps and the ε → 0 convergence
//! study against the limit spectrum.

mod study;

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::eig::{solve_lowest, EigError, EigenResult};
use crate::fem::{assemble, AssembledPair};
use crate::floquet::{apply_quasiperiodic, brillouin_grid, FiberPencil, FloquetError};
use crate::geometry::{build_cell, CellGeometry, GeometryError, ValidatedParams};
use crate::limitspec::LimitError;
use crate::mesh::{triangulate, MeshError, PeriodCellMesh};

pub use study::{
    convergence_study, fold_validation, room_average, ConvergenceEntry, ConvergenceReport,
    FoldReport, GapCheck, RoomAverage, StudyGeometry, StudyOptions,
};

#[derive(Debug, Clone, PartialEq)]
pub enum BandsError {
    Geometry(GeometryError),
    Mesh(MeshError),
    Floquet(FloquetError),
    Eig {
        phi: f64,
        source: EigError,
    },
    Limit(LimitError),
    WindowNotCovered {
        phi: f64,
        k: usize,
        lambda_k: f64,
        lambda_max: f64,
    },
    InvalidInput(String),
}

impl fmt::Display for BandsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandsError::Geometry(e) => e.fmt(f),
            BandsError::Mesh(e) => e.fmt(f),
            BandsError::Floquet(e) => e.fmt(f),
            BandsError::Eig { phi, source } => write!(f, "{source} (phi = {phi})"),
            BandsError::Limit(e) => e.fmt(f),
            BandsError::WindowNotCovered {
                phi,
                k,
                lambda_k,
                lambda_max,
            } => write!(
                f,
                "WINDOW_NOT_COVERED: eigenvalue {k} at phi = {phi} is {lambda_k} <= lambda_max = {lambda_max}; increase k"
            ),
            BandsError::InvalidInput(m) => write!(f, "INVALID_INPUT: {m}"),
        }
    }
}

impl std::error::Error for BandsError {}

impl From<GeometryError> for BandsError {
    fn from(e: GeometryError) -> Self {
        BandsError::Geometry(e)
    }
}

impl From<MeshError> for BandsError {
    fn from(e: MeshError) -> Self {
        BandsError::Mesh(e)
    }
}

impl From<FloquetError> for BandsError {
    fn from(e: FloquetError) -> Self {
        BandsError::Floquet(e)
    }
}

impl From<LimitError> for BandsError {
    fn from(e: LimitError) -> Self {
        BandsError::Limit(e)
    }
}

/// Mesh and solver settings of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSettings {
    pub target_h: f64,
    pub grading: f64,
    pub n_phi: usize,
    /// Eigenpairs per fiber.
    pub k: usize,
    pub lambda_max: f64,
    pub eig_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandInterval {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Maximal open interval of the window missed by every band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
    /// Touches a window edge, so it may continue outside the window.
    pub truncated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandStructure {
    pub eps: f64,
    pub phi_grid: Vec<f64>,
    /// `samples[j][i]` is the `i`-th eigenvalue at `phi_grid[j]`.
    pub samples: Vec<Vec<f64>>,
    pub bands: Vec<BandInterval>,
    pub window: (f64, f64),
    pub gaps: Vec<Gap>,
}

impl BandStructure {
    /// Band intervals clipped to the window and merged.
    pub fn union_in_window(&self) -> Vec<(f64, f64)> {
        merge(
            self.bands
                .iter()
                .filter(|b| b.lo <= self.window.1 && b.hi >= self.window.0)
                .map(|b| (b.lo.max(self.window.0), b.hi.min(self.window.1)))
                .collect(),
        )
    }

    /// Gaps not touching the window edges.
    pub fn interior_gaps(&self) -> impl Iterator<Item = &Gap> {
        self.gaps.iter().filter(|g| !g.truncated)
    }

    pub fn intersects(&self, lo: f64, hi: f64) -> bool {
        self.bands.iter().any(|b| b.lo < hi && b.hi > lo)
    }
}

/// Sorted, merged closed intervals.
pub(crate) fn merge(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for (a, b) in iv {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Gaps narrower than this fraction of the window are solver noise (the
/// ground state is zero only up to rounding).
pub const GAP_FLOOR: f64 = 1e-9;

/// Complement of the band union in `window` as maximal open intervals.
pub fn detect_gaps(bands: &[BandInterval], window: (f64, f64)) -> Vec<Gap> {
    let (w0, w1) = window;
    let floor = GAP_FLOOR * (w1 - w0);
    let covered = merge(
        bands
            .iter()
            .filter(|b| b.hi >= w0 && b.lo <= w1)
            .map(|b| (b.lo.max(w0), b.hi.min(w1)))
            .collect(),
    );
    let mut gaps = Vec::new();
    let mut cursor = w0;
    for (a, b) in covered {
        if a > cursor + floor {
            gaps.push(Gap {
                lo: cursor,
                hi: a,
                truncated: cursor == w0,
            });
        }
        cursor = cursor.max(b);
    }
    if cursor < w1 - floor {
        gaps.push(Gap {
            lo: cursor,
            hi: w1,
            truncated: true,
        });
    }
    gaps
}

/// Bands as min/max of the `k`-th eigenvalue over the phase samples.
pub fn band_intervals(samples: &[Vec<f64>]) -> Vec<BandInterval> {
    let k = samples.iter().map(Vec::len).min().unwrap_or(0);
    (0..k)
        .map(|i| {
            let (lo, hi) = samples
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                    (lo.min(s[i]), hi.max(s[i]))
                });
            BandInterval {
                index: i + 1,
                lo,
                hi,
            }
        })
        .collect()
}

/// Everything needed to solve fibers of one ε-cell.
pub struct CellProblem {
    pub cell: CellGeometry,
    pub mesh: PeriodCellMesh,
    pub pair: AssembledPair,
}

impl CellProblem {
    pub fn new(
        params: &ValidatedParams,
        target_h: f64,
        grading: f64,
    ) -> Result<CellProblem, BandsError> {
        let cell = build_cell(params);
        let mesh = triangulate(&cell, target_h, grading)?;
        Ok(CellProblem::from_mesh(cell, mesh))
    }

    pub fn from_mesh(cell: CellGeometry, mesh: PeriodCellMesh) -> CellProblem {
        let pair = assemble(&mesh, cell.rho_room());
        CellProblem { cell, mesh, pair }
    }

    pub fn fiber(&self, phi: f64) -> Result<FiberPencil, BandsError> {
        Ok(apply_quasiperiodic(
            &self.pair,
            &self.mesh.left_boundary,
            &self.mesh.right_boundary,
            phi,
        )?)
    }

    /// Lowest `k` pairs at every phase, in grid order.
    pub fn sweep(
        &self,
        phis: &[f64],
        k: usize,
        tol: f64,
    ) -> Result<Vec<(FiberPencil, EigenResult)>, BandsError> {
        phis.par_iter()
            .map(|&phi| {
                let pencil = self.fiber(phi)?;
                let res = solve_lowest(&pencil, k, tol)
                    .map_err(|source| BandsError::Eig { phi, source })?;
                Ok((pencil, res))
            })
            .collect()
    }
}

fn check_window(
    phis: &[f64],
    samples: &[Vec<f64>],
    k: usize,
    lambda_max: f64,
) -> Result<(), BandsError> {
    for (&phi, s) in phis.iter().zip(samples) {
        let top = *s.last().unwrap_or(&f64::NEG_INFINITY);
        if top <= lambda_max {
            return Err(BandsError::WindowNotCovered {
                phi,
                k,
                lambda_k: top,
                lambda_max,
            });
        }
    }
    Ok(())
}

pub(crate) fn structure_from_samples(
    eps: f64,
    phi_grid: Vec<f64>,
    samples: Vec<Vec<f64>>,
    lambda_max: f64,
) -> BandStructure {
    let bands = band_intervals(&samples);
    let window = (0.0, lambda_max);
    let gaps = detect_gaps(&bands, window);
    BandStructure {
        eps,
        phi_grid,
        samples,
        bands,
        window,
        gaps,
    }
}

pub(crate) fn validate_settings(s: &SweepSettings) -> Result<(), BandsError> {
    if s.n_phi < 2 {
        return Err(BandsError::InvalidInput("n_phi must be at least 2".into()));
    }
    if s.k == 0 {
        return Err(BandsError::InvalidInput("k must be positive".into()));
    }
    if !(s.lambda_max > 0.0 && s.lambda_max.is_finite()) {
        return Err(BandsError::InvalidInput(
            "lambda_max must be positive".into(),
        ));
    }
    if !(s.eig_tol > 0.0) {
        return Err(BandsError::InvalidInput("eig_tol must be positive".into()));
    }
    Ok(())
}

/// Band structure of the ε-cell on an `n_phi`-point phase grid.
pub fn compute_bands(
    params: &ValidatedParams,
    s: &SweepSettings,
) -> Result<BandStructure, BandsError> {
    validate_settings(s)?;
    let problem = CellProblem::new(params, s.target_h, s.grading)?;
    let phis = brillouin_grid(s.n_phi);
    let solved = problem.sweep(&phis, s.k, s.eig_tol)?;
    let samples: Vec<Vec<f64>> = solved.into_iter().map(|(_, r)| r.eigenvalues).collect();
    check_window(&phis, &samples, s.k, s.lambda_max)?;
    Ok(structure_from_samples(
        params.eps(),
        phis,
        samples,
        s.lambda_max,
    ))
}

/// Hausdorff distance between two unions of closed intervals, both
/// discretised with spacing `step` (interval endpoints always included).
pub fn hausdorff_intervals(a: &[(f64, f64)], b: &[(f64, f64)], step: f64) -> f64 {
    let sample = |iv: &[(f64, f64)]| -> Vec<f64> {
        let mut pts = Vec::new();
        for &(lo, hi) in iv {
            let n = ((hi - lo) / step).ceil().max(0.0) as usize;
            pts.push(lo);
            for i in 1..n {
                pts.push(lo + (hi - lo) * i as f64 / n as f64);
            }
            pts.push(hi);
        }
        pts
    };
    let dist = |x: f64, iv: &[(f64, f64)]| {
        iv.iter()
            .map(|&(lo, hi)| {
                if x < lo {
                    lo - x
                } else if x > hi {
                    x - hi
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    };
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let ab = sample(a)
        .into_iter()
        .map(|x| dist(x, b))
        .fold(0.0, f64::max);
    let ba = sample(b)
        .into_iter()
        .map(|x| dist(x, a))
        .fold(0.0, f64::max);
    ab.max(ba)
}

/// Hausdorff distance between two finite point sets.
pub fn hausdorff_points(a: &[f64], b: &[f64]) -> f64 {
    let one_sided = |p: &[f64], q: &[f64]| {
        p.iter()
            .map(|x| {
                q.iter()
                    .map(|y| (x - y).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    one_sided(a, b).max(one_sided(b, a))
}
