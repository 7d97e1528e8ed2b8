//! Lowest eigenpairs of the Hermitian pencil `K x = λ M x`.
//!
//! The iterative path runs a block Lanczos recurrence on the shift-inverted
//! operator `(K + M)⁻¹ M`, which is self-adjoint in the `M` inner product and
//! maps the low end of the spectrum to its largest eigenvalues `1 / (1 + λ)`.
//! Every new block is reorthogonalised against the whole basis (twice), so
//! degenerate clusters at `φ = 0` and `φ = π` converge together.

mod ldl;

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::floquet::FiberPencil;
use crate::sparse::{dot, norm, CsrMatrix};

pub use ldl::{reverse_cuthill_mckee, EnvelopeLdl};

/// Pencils up to this size are solved densely by `solve_lowest`.
pub const DENSE_THRESHOLD: usize = 64;
pub const DEFAULT_DENSE_CAP: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Dense,
    Iterative,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::Dense => "DENSE",
            SolveMethod::Iterative => "ITERATIVE",
        })
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    /// `M`-orthonormal, in the reduced fiber unknowns.
    pub eigenvectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    pub method: SolveMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EigError {
    NoConvergence {
        iterations: usize,
        subspace: usize,
        converged: usize,
        worst_residual: f64,
    },
    DimensionExceeded {
        k: usize,
        dim: usize,
    },
    CapExceeded {
        dim: usize,
        cap: usize,
    },
    NotPositiveDefinite,
}

impl fmt::Display for EigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EigError::NoConvergence {
                iterations,
                subspace,
                converged,
                worst_residual,
            } => write!(
                f,
                "NO_CONVERGENCE: {converged} pairs converged after {iterations} block steps \
                 (subspace {subspace}, worst residual {worst_residual:.3e})"
            ),
            EigError::DimensionExceeded { k, dim } => {
                write!(
                    f,
                    "DIMENSION_EXCEEDED: requested {k} eigenpairs of a {dim}-dimensional pencil"
                )
            }
            EigError::CapExceeded { dim, cap } => {
                write!(
                    f,
                    "CAP_EXCEEDED: dimension {dim} exceeds the dense cap {cap}"
                )
            }
            EigError::NotPositiveDefinite => {
                write!(f, "NOT_POSITIVE_DEFINITE: mass or shifted stiffness")
            }
        }
    }
}

impl std::error::Error for EigError {}

/// Tuning of the iterative solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub block_size: usize,
    /// Largest Krylov basis before giving up.
    pub max_subspace: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            block_size: 4,
            max_subspace: 600,
            seed: 0x5eed_1a2c,
        }
    }
}

/// `‖K x − λ M x‖ / ‖M x‖`.
pub fn pair_residual(
    k: &CsrMatrix<Complex64>,
    m: &CsrMatrix<Complex64>,
    lambda: f64,
    x: &[Complex64],
) -> f64 {
    let kx = k.mul_vec(x);
    let mx = m.mul_vec(x);
    let r: f64 = kx
        .iter()
        .zip(&mx)
        .map(|(a, b)| (a - b * lambda).norm_sqr())
        .sum::<f64>()
        .sqrt();
    r / norm(&mx)
}

/// Largest residual of the stored pairs, recomputed from the pencil.
pub fn residual_check(pencil: &FiberPencil, result: &EigenResult) -> f64 {
    result
        .eigenvalues
        .iter()
        .zip(&result.eigenvectors)
        .map(|(&l, x)| pair_residual(&pencil.stiffness, &pencil.mass, l, x))
        .fold(0.0, f64::max)
}

fn dense_reduce(
    pencil: &FiberPencil,
    cap: usize,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>), EigError> {
    let n = pencil.dim();
    if n > cap {
        return Err(EigError::CapExceeded { dim: n, cap });
    }
    let k = pencil.stiffness.to_dense();
    let m = pencil.mass.to_dense();
    let l = m.cholesky().ok_or(EigError::NotPositiveDefinite)?.unpack();
    // C = L⁻¹ K L⁻ᴴ
    let lk = l
        .solve_lower_triangular(&k)
        .ok_or(EigError::NotPositiveDefinite)?;
    let mut c = l
        .solve_lower_triangular(&lk.adjoint())
        .ok_or(EigError::NotPositiveDefinite)?;
    let ch = c.adjoint();
    c = (c + ch) * Complex64::new(0.5, 0.0);
    Ok((c, l))
}

fn sorted_eigen(c: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>, Vec<usize>) {
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    (values, eig.eigenvectors, order)
}

/// Full ascending spectrum by dense Hermitian reduction.
pub fn dense_oracle(pencil: &FiberPencil, cap: usize) -> Result<Vec<f64>, EigError> {
    let (c, _) = dense_reduce(pencil, cap)?;
    let mut values: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn normalise_phase(x: &mut [Complex64]) {
    // rotate so the largest entry is real positive: a deterministic gauge
    let (mut best, mut at) = (0.0, 0);
    for (i, v) in x.iter().enumerate() {
        if v.norm_sqr() > best * (1.0 + 1e-12) {
            best = v.norm_sqr();
            at = i;
        }
    }
    if best > 0.0 {
        let g = x[at].conj() / x[at].norm();
        for v in x.iter_mut() {
            *v *= g;
        }
    }
}

/// Lowest `k` pairs by dense reduction, with eigenvectors.
pub fn dense_lowest(pencil: &FiberPencil, k: usize) -> Result<EigenResult, EigError> {
    let n = pencil.dim();
    if k > n {
        return Err(EigError::DimensionExceeded { k, dim: n });
    }
    let (c, l) = dense_reduce(pencil, usize::MAX)?;
    let (values, vectors, order) = sorted_eigen(c);
    let lh = l.adjoint();
    let mut result = EigenResult {
        eigenvalues: Vec::with_capacity(k),
        eigenvectors: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
        method: SolveMethod::Dense,
    };
    for (idx, &lambda) in order.iter().zip(&values).take(k) {
        let y = vectors.column(*idx).into_owned();
        let x = lh
            .solve_upper_triangular(&y)
            .ok_or(EigError::NotPositiveDefinite)?;
        let mut x: Vec<Complex64> = x.iter().copied().collect();
        normalise_phase(&mut x);
        result
            .residuals
            .push(pair_residual(&pencil.stiffness, &pencil.mass, lambda, &x));
        result.eigenvalues.push(lambda);
        result.eigenvectors.push(x);
    }
    Ok(result)
}

pub fn solve_lowest(pencil: &FiberPencil, k: usize, tol: f64) -> Result<EigenResult, EigError> {
    solve_lowest_with(pencil, k, tol, &SolverConfig::default())
}

struct Basis {
    q: Vec<Vec<Complex64>>,
    mq: Vec<Vec<Complex64>>,
}

impl Basis {
    /// `M`-orthogonalise `w` against the basis (two passes) and append it.
    /// Returns false if `w` is numerically inside the span.
    fn push(&mut self, m: &CsrMatrix<Complex64>, mut w: Vec<Complex64>) -> bool {
        let mw0 = m.mul_vec(&w);
        let n0 = dot(&w, &mw0).re.max(0.0).sqrt();
        if n0 == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for (q, mq) in self.q.iter().zip(&self.mq) {
                let c = dot(mq, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let mw = m.mul_vec(&w);
        let nw = dot(&w, &mw).re.max(0.0).sqrt();
        if nw <= 1e-10 * n0 {
            return false;
        }
        let s = 1.0 / nw;
        self.q.push(w.iter().map(|v| v * s).collect());
        self.mq.push(mw.iter().map(|v| v * s).collect());
        true
    }
}

/// Rayleigh-Ritz of the pencil on `span(x)`; returns ascending values and
/// `M`-orthonormal vectors.
fn small_rayleigh_ritz(
    pencil: &FiberPencil,
    x: &[Vec<Complex64>],
) -> Result<(Vec<f64>, Vec<Vec<Complex64>>), EigError> {
    let k = x.len();
    let kx: Vec<Vec<Complex64>> = x.iter().map(|v| pencil.stiffness.mul_vec(v)).collect();
    let mx: Vec<Vec<Complex64>> = x.iter().map(|v| pencil.mass.mul_vec(v)).collect();
    let g = DMatrix::from_fn(k, k, |i, j| dot(&x[i], &mx[j]));
    let hk = DMatrix::from_fn(k, k, |i, j| dot(&x[i], &kx[j]));
    let g = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let hk = (&hk + hk.adjoint()) * Complex64::new(0.5, 0.0);
    let l = g.cholesky().ok_or(EigError::NotPositiveDefinite)?.unpack();
    let lh = l
        .solve_lower_triangular(&hk)
        .ok_or(EigError::NotPositiveDefinite)?;
    let c = l
        .solve_lower_triangular(&lh.adjoint())
        .ok_or(EigError::NotPositiveDefinite)?;
    let c = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
    let (values, vecs, order) = sorted_eigen(c);
    let lt = l.adjoint();
    let mut out = Vec::with_capacity(k);
    for &o in &order {
        let w = lt
            .solve_upper_triangular(&vecs.column(o).into_owned())
            .ok_or(EigError::NotPositiveDefinite)?;
        let mut v = vec![Complex64::default(); x[0].len()];
        for (c, xc) in w.iter().zip(x) {
            for (vi, xi) in v.iter_mut().zip(xc) {
                *vi += c * xi;
            }
        }
        normalise_phase(&mut v);
        out.push(v);
    }
    Ok((values, out))
}

pub fn solve_lowest_with(
    pencil: &FiberPencil,
    k: usize,
    tol: f64,
    cfg: &SolverConfig,
) -> Result<EigenResult, EigError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let n = pencil.dim();
    if k > n {
        return Err(EigError::DimensionExceeded { k, dim: n });
    }
    if k == 0 {
        return Ok(EigenResult {
            eigenvalues: vec![],
            eigenvectors: vec![],
            residuals: vec![],
            method: SolveMethod::Iterative,
        });
    }
    if n <= DENSE_THRESHOLD.max(2 * k + 2 * cfg.block_size) {
        return dense_lowest(pencil, k);
    }
    let shifted = pencil.stiffness.add_scaled(&pencil.mass, 1.0);
    let factor = EnvelopeLdl::factor(&shifted).ok_or(EigError::NotPositiveDefinite)?;
    let m = &pencil.mass;
    let p = cfg.block_size.max(1);
    let max_dim = cfg.max_subspace.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ n as u64);
    let random = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect()
    };

    let mut basis = Basis {
        q: vec![],
        mq: vec![],
    };
    while basis.q.len() < p {
        let w = random(&mut rng);
        basis.push(m, w);
    }
    // images z_j = Op q_j for the expanded columns, and H = Qᴴ M Op Q
    let mut z: Vec<Vec<Complex64>> = Vec::new();
    let mut h: Vec<Vec<Complex64>> = Vec::new();
    let mut iterations = 0;
    let mut worst = f64::INFINITY;
    let mut converged = 0;

    loop {
        iterations += 1;
        let lo = z.len();
        let hi = basis.q.len();
        for j in lo..hi {
            let zj = factor.solve(&basis.mq[j]);
            z.push(zj);
        }
        // extend H: rows/cols for new columns
        for row in h.iter_mut() {
            row.resize(hi, Complex64::default());
        }
        h.resize(hi, vec![Complex64::default(); hi]);
        for i in 0..hi {
            for j in lo..hi {
                let v = dot(&basis.mq[i], &z[j]);
                h[i][j] = v;
                h[j][i] = v.conj();
            }
        }
        if hi >= k + p {
            let mut hm = DMatrix::from_fn(hi, hi, |i, j| h[i][j]);
            let ht = hm.adjoint();
            hm = (hm + ht) * Complex64::new(0.5, 0.0);
            let (theta, vecs, order) = sorted_eigen(hm);
            // largest θ ↔ smallest λ
            let picks: Vec<(f64, usize)> = theta
                .iter()
                .zip(&order)
                .rev()
                .take(k)
                .map(|(&t, &o)| (t, o))
                .collect();
            // Ritz vectors from the images Z = Op Q: one extra shift-invert
            // step damps the high-frequency content that dominates residuals
            let images: Vec<Vec<Complex64>> = picks
                .iter()
                .map(|&(_, o)| {
                    let y = vecs.column(o);
                    let mut x = vec![Complex64::default(); n];
                    for (c, zc) in y.iter().zip(&z) {
                        for (xi, zi) in x.iter_mut().zip(zc) {
                            *xi += c * zi;
                        }
                    }
                    x
                })
                .collect();
            let (values, vectors) = small_rayleigh_ritz(pencil, &images)?;
            let residuals: Vec<f64> = values
                .iter()
                .zip(&vectors)
                .map(|(&l, x)| pair_residual(&pencil.stiffness, m, l, x))
                .collect();
            converged = residuals.iter().take_while(|&&r| r <= tol).count();
            worst = residuals.iter().copied().fold(0.0, f64::max);
            if converged == k {
                return Ok(EigenResult {
                    eigenvalues: values,
                    eigenvectors: vectors,
                    residuals,
                    method: SolveMethod::Iterative,
                });
            }
        }
        if hi >= max_dim {
            return Err(EigError::NoConvergence {
                iterations,
                subspace: hi,
                converged,
                worst_residual: worst,
            });
        }
        // next block: images of the newest block, topped up with random
        // directions if the Krylov space became invariant
        let mut added = 0;
        for j in lo..hi {
            if basis.q.len() >= max_dim {
                break;
            }
            if basis.push(m, z[j].clone()) {
                added += 1;
            }
        }
        let mut tries = 0;
        while added == 0 && tries < 8 && basis.q.len() < max_dim {
            let w = random(&mut rng);
            if basis.push(m, w) {
                added += 1;
            }
            tries += 1;
        }
        if added == 0 {
            return Err(EigError::NoConvergence {
                iterations,
                subspace: basis.q.len(),
                converged,
                worst_residual: worst,
            });
        }
    }
}
