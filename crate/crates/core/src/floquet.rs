//! Quasi-periodic reduction `u(x₁ = width) = e^{iφ} u(x₁ = 0)` of an assembled
//! pencil. Right-edge unknowns are eliminated by the congruence `Tᴴ A T`,
//! where `T` injects reduced unknowns into the full vertex space.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::fem::AssembledPair;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub enum FloquetError {
    PairingMismatch(String),
}

impl fmt::Display for FloquetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FloquetError::PairingMismatch(m) => write!(f, "PAIRING_MISMATCH: {m}"),
        }
    }
}

impl std::error::Error for FloquetError {}

#[derive(Debug, Clone)]
pub struct FiberPencil {
    pub stiffness: CsrMatrix<Complex64>,
    pub mass: CsrMatrix<Complex64>,
    pub phi: f64,
    /// Reduced index -> full mesh vertex.
    pub back_map: Vec<usize>,
    /// Full vertex -> (reduced index, coefficient) with `u_full = c · u_reduced`.
    pub injection: Vec<(usize, Complex64)>,
}

impl FiberPencil {
    pub fn dim(&self) -> usize {
        self.back_map.len()
    }

    /// Lift a reduced vector to all mesh vertices.
    pub fn expand(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.injection.iter().map(|&(r, c)| c * x[r]).collect()
    }
}

/// `2πj/n` for `j = 0..n`; the endpoint 2π is excluded.
pub fn brillouin_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2, "a phase grid needs at least two samples");
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

fn fold(a: &CsrMatrix<f64>, injection: &[(usize, Complex64)], dim: usize) -> CsrMatrix<Complex64> {
    let mut triplets = Vec::with_capacity(a.nnz());
    for i in 0..a.nrows() {
        let (ri, ci) = injection[i];
        for (j, v) in a.row(i) {
            let (rj, cj) = injection[j];
            triplets.push((ri, rj, ci.conj() * cj * v));
        }
    }
    let mut out = CsrMatrix::from_triplets(dim, dim, triplets);
    out.hermitize_from_upper();
    out
}

pub fn apply_quasiperiodic(
    pair: &AssembledPair,
    left: &[usize],
    right: &[usize],
    phi: f64,
) -> Result<FiberPencil, FloquetError> {
    let n = pair.dim();
    if left.len() != right.len() {
        return Err(FloquetError::PairingMismatch(format!(
            "{} left vs {} right vertices",
            left.len(),
            right.len()
        )));
    }
    let mut partner = vec![None; n];
    for (&l, &r) in left.iter().zip(right) {
        if l >= n || r >= n || l == r {
            return Err(FloquetError::PairingMismatch(format!(
                "invalid pair ({l}, {r})"
            )));
        }
        if partner[r].replace(l).is_some() {
            return Err(FloquetError::PairingMismatch(format!(
                "vertex {r} paired twice"
            )));
        }
    }
    if left.iter().any(|&l| partner[l].is_some()) {
        return Err(FloquetError::PairingMismatch(
            "a vertex is both left and right".into(),
        ));
    }
    let mut reduced = vec![usize::MAX; n];
    let mut back_map = Vec::with_capacity(n - right.len());
    for v in 0..n {
        if partner[v].is_none() {
            reduced[v] = back_map.len();
            back_map.push(v);
        }
    }
    let phase = Complex64::from_polar(1.0, phi);
    let one = Complex64::new(1.0, 0.0);
    let injection: Vec<(usize, Complex64)> = (0..n)
        .map(|v| match partner[v] {
            Some(l) => (reduced[l], phase),
            None => (reduced[v], one),
        })
        .collect();
    let dim = back_map.len();
    Ok(FiberPencil {
        stiffness: fold(&pair.stiffness, &injection, dim),
        mass: fold(&pair.mass, &injection, dim),
        phi,
        back_map,
        injection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::dense_oracle;
    use crate::fem::assemble;
    use crate::geometry::{asymptotic_preset, build_cell, ScalingPreset};
    use crate::mesh::triangulate;

    fn pair() -> (crate::mesh::PeriodCellMesh, AssembledPair) {
        let s = ScalingPreset::unit_square(1.0, 1.0, 1.0);
        let cell = build_cell(&asymptotic_preset(&s, 0.25).unwrap());
        let m = triangulate(&cell, 1.0 / 8.0, 1.5).unwrap();
        let p = assemble(&m, cell.rho_room());
        (m, p)
    }

    #[test]
    fn grid_samples() {
        assert_eq!(brillouin_grid(2), vec![0.0, PI]);
        let g = brillouin_grid(4);
        assert_eq!(g, vec![0.0, 0.5 * PI, PI, 1.5 * PI]);
        // φ ↦ 2π − φ maps the grid onto itself for even n
        for &phi in &brillouin_grid(8) {
            let mirrored = (2.0 * PI - phi) % (2.0 * PI);
            assert!(brillouin_grid(8)
                .iter()
                .any(|&p| (p - mirrored).abs() < 1e-12));
        }
    }

    #[test]
    fn periodic_fiber_is_real_and_kills_constants() {
        let (m, p) = pair();
        let f = apply_quasiperiodic(&p, &m.left_boundary, &m.right_boundary, 0.0).unwrap();
        assert_eq!(f.dim(), m.n_vertices() - m.right_boundary.len());
        assert!(f.stiffness.values().iter().all(|v| v.im == 0.0));
        assert!(f.mass.values().iter().all(|v| v.im == 0.0));
        let y = f
            .stiffness
            .mul_vec(&vec![Complex64::new(1.0, 0.0); f.dim()]);
        assert!(y.iter().all(|v| v.norm() < 1e-12 * f.stiffness.max_abs()));
    }

    #[test]
    fn antiperiodic_fiber_is_real_hermitian() {
        let (m, p) = pair();
        let f = apply_quasiperiodic(&p, &m.left_boundary, &m.right_boundary, PI).unwrap();
        // e^{iπ} = −1 up to the rounding of sin(π)
        assert!(f
            .stiffness
            .values()
            .iter()
            .all(|v| v.im.abs() < 1e-15 * f.stiffness.max_abs()));
        assert_eq!(f.stiffness.hermitian_defect(), 0.0);
        assert_eq!(f.mass.hermitian_defect(), 0.0);
    }

    #[test]
    fn fiber_pencils_are_hermitian_psd() {
        let (m, p) = pair();
        for phi in [0.3, 1.7, 4.0] {
            let f = apply_quasiperiodic(&p, &m.left_boundary, &m.right_boundary, phi).unwrap();
            assert_eq!(f.stiffness.hermitian_defect(), 0.0);
            let ev = dense_oracle(&f, 3000).unwrap();
            assert!(ev[0] > -1e-9);
        }
    }

    #[test]
    fn conjugate_phases_share_spectra() {
        let (m, p) = pair();
        let a = apply_quasiperiodic(&p, &m.left_boundary, &m.right_boundary, 1.1).unwrap();
        let b =
            apply_quasiperiodic(&p, &m.left_boundary, &m.right_boundary, 2.0 * PI - 1.1).unwrap();
        let (ea, eb) = (
            dense_oracle(&a, 3000).unwrap(),
            dense_oracle(&b, 3000).unwrap(),
        );
        for (x, y) in ea.iter().zip(&eb).take(10) {
            assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn rejects_bad_pairing() {
        let (m, p) = pair();
        let short = &m.right_boundary[1..];
        assert!(matches!(
            apply_quasiperiodic(&p, &m.left_boundary, short, 0.0),
            Err(FloquetError::PairingMismatch(_))
        ));
        let mut twice = m.right_boundary.clone();
        twice[1] = twice[0];
        assert!(apply_quasiperiodic(&p, &m.left_boundary, &twice, 0.0).is_err());
    }
}
