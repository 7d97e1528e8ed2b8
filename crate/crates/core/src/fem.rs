//! P1 assembly of the Neumann stiffness form `∫ ∇u·∇v` and the weighted mass
//! form `∫ u v / ρ` on a period-cell mesh. The pencil `(K, M)` discretises
//! `−ρ Δ` with natural boundary conditions, so no boundary terms appear.

use std::fmt;

use crate::geometry::Region;
use crate::mesh::PeriodCellMesh;
use crate::sparse::{CsrMatrix, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum FemError {
    ZeroVector,
}

impl fmt::Display for FemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FemError::ZeroVector => write!(f, "ZERO_VECTOR: Rayleigh quotient of a zero vector"),
        }
    }
}

impl std::error::Error for FemError {}

/// Element stiffness of a P1 triangle.
pub fn element_stiffness(p: [[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let area = 0.5
        * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    let mut b = [0.0; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        b[i] = p[j][1] - p[k][1];
        c[i] = p[k][0] - p[j][0];
    }
    let mut ke = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    ke
}

/// Consistent element mass of a P1 triangle with unit weight.
pub fn element_mass(p: [[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let area = 0.5
        * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    let mut me = [[area / 12.0; 3]; 3];
    for (i, row) in me.iter_mut().enumerate() {
        row[i] = area / 6.0;
    }
    me
}

/// `K`, plus the mass split as `M(ϱ) = M_outside + M_room / ϱ`.
#[derive(Debug, Clone)]
pub struct AssembledPair {
    pub stiffness: CsrMatrix<f64>,
    pub mass: CsrMatrix<f64>,
    /// Unit-weight mass over STRIP and PASSAGE elements.
    pub mass_outside: CsrMatrix<f64>,
    /// Unit-weight mass over ROOM elements.
    pub mass_room: CsrMatrix<f64>,
    pub rho_room: f64,
}

impl AssembledPair {
    pub fn dim(&self) -> usize {
        self.stiffness.nrows()
    }

    /// Weight `ρ` of a region: `ϱ` in the room, 1 elsewhere.
    pub fn rho(&self, region: Region) -> f64 {
        match region {
            Region::Room => self.rho_room,
            _ => 1.0,
        }
    }
}

type Triplets = Vec<(usize, usize, f64)>;

fn element_triplets(m: &PeriodCellMesh) -> (Triplets, Triplets, Triplets) {
    let cap = 9 * m.n_triangles();
    let (mut k, mut out, mut room) = (
        Vec::with_capacity(cap),
        Vec::with_capacity(cap),
        Vec::with_capacity(cap),
    );
    for (t, tri) in m.triangles.iter().enumerate() {
        let p = m.corners(t);
        let ke = element_stiffness(p);
        let me = element_mass(p);
        let in_room = m.tags[t] == Region::Room;
        for a in 0..3 {
            for b in 0..3 {
                let (i, j) = (tri[a], tri[b]);
                k.push((i, j, ke[a][b]));
                // explicit zeros keep all three patterns identical
                out.push((i, j, if in_room { 0.0 } else { me[a][b] }));
                room.push((i, j, if in_room { me[a][b] } else { 0.0 }));
            }
        }
    }
    (k, out, room)
}

pub fn assemble_stiffness(m: &PeriodCellMesh) -> CsrMatrix<f64> {
    let n = m.n_vertices();
    CsrMatrix::from_triplets(n, n, element_triplets(m).0)
}

/// Mass matrix weighted by `1/ρ`: entry `(i, j) = Σ_T ρ_T⁻¹ ∫_T φ_i φ_j`.
pub fn assemble_mass(m: &PeriodCellMesh, rho_room: f64) -> CsrMatrix<f64> {
    assemble(m, rho_room).mass
}

pub fn assemble(m: &PeriodCellMesh, rho_room: f64) -> AssembledPair {
    assert!(rho_room > 0.0, "rho_room must be positive");
    let n = m.n_vertices();
    let (k, out, room) = element_triplets(m);
    let stiffness = CsrMatrix::from_triplets(n, n, k);
    let mass_outside = CsrMatrix::from_triplets(n, n, out);
    let mass_room = CsrMatrix::from_triplets(n, n, room);
    let mass = mass_outside.add_scaled(&mass_room, 1.0 / rho_room);
    AssembledPair {
        stiffness,
        mass,
        mass_outside,
        mass_room,
        rho_room,
    }
}

/// `xᴴKx / xᴴMx`.
pub fn rayleigh_quotient<T: Scalar>(
    k: &CsrMatrix<T>,
    m: &CsrMatrix<T>,
    x: &[T],
) -> Result<f64, FemError> {
    if x.iter().all(|v| v.norm_sqr() == 0.0) {
        return Err(FemError::ZeroVector);
    }
    // both forms are real for Hermitian matrices; drop the rounding residue
    Ok(k.quadratic_form(x).re() / m.quadratic_form(x).re())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{asymptotic_preset, build_cell, ScalingPreset};
    use crate::mesh::triangulate;

    const UNIT: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    fn preset_mesh() -> (crate::geometry::CellGeometry, PeriodCellMesh) {
        let s = ScalingPreset::unit_square(1.0, 1.0, 1.0);
        let cell = build_cell(&asymptotic_preset(&s, 0.25).unwrap());
        let m = triangulate(&cell, 1.0 / 16.0, 1.3).unwrap();
        (cell, m)
    }

    #[test]
    fn unit_right_triangle_stiffness() {
        let ke = element_stiffness(UNIT);
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((ke[i][j] - expected[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn element_mass_closed_form() {
        let p = [[0.0, 0.0], [2.0, 0.0], [0.5, 3.0]];
        let area = 3.0;
        let me = element_mass(p);
        for i in 0..3 {
            for j in 0..3 {
                let expected = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                assert!((me[i][j] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_element_square_matches_hand_assembly() {
        // the unit square split along (0,0)-(1,1): vertices 0=(0,0) 1=(1,0) 2=(1,1) 3=(0,1)
        let m = PeriodCellMesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            tags: vec![Region::Strip; 2],
            left_boundary: vec![0, 3],
            right_boundary: vec![1, 2],
            period: 1.0,
            target_h: 1.0,
        };
        let k = assemble_stiffness(&m);
        let mut dense = [[0.0; 4]; 4];
        for tri in &m.triangles {
            let p = [m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]];
            let ke = element_stiffness(p);
            for a in 0..3 {
                for b in 0..3 {
                    dense[tri[a]][tri[b]] += ke[a][b];
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(k.get(i, j), dense[i][j]);
            }
        }
        assert_eq!(k.get(0, 0), 1.0);
        assert_eq!(k.get(0, 2), 0.0);
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let (_, m) = preset_mesh();
        let k = assemble_stiffness(&m);
        let y = k.mul_vec(&vec![1.0; m.n_vertices()]);
        let scale = k.max_abs();
        assert!(y.iter().all(|v| v.abs() < 1e-12 * scale));
        assert_eq!(k.hermitian_defect(), 0.0);
    }

    #[test]
    fn mass_sums_to_weighted_area() {
        let (cell, m) = preset_mesh();
        let pair = assemble(&m, cell.rho_room());
        let total: f64 = pair.mass.values().iter().sum();
        assert!((total / cell.weighted_area() - 1.0).abs() < 1e-12);
        assert!(pair.stiffness.same_pattern(&pair.mass));
    }

    #[test]
    fn mass_is_linear_in_inverse_weight() {
        let (_, m) = preset_mesh();
        let one = assemble(&m, 1.0);
        let two = assemble(&m, 2.0);
        let room_one: f64 =
            one.mass.values().iter().sum::<f64>() - one.mass_outside.values().iter().sum::<f64>();
        let room_two: f64 =
            two.mass.values().iter().sum::<f64>() - two.mass_outside.values().iter().sum::<f64>();
        assert!((room_two / room_one - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_quotient_of_constants_is_zero() {
        let (cell, m) = preset_mesh();
        let pair = assemble(&m, cell.rho_room());
        let rq =
            rayleigh_quotient(&pair.stiffness, &pair.mass, &vec![1.0; m.n_vertices()]).unwrap();
        assert!(rq.abs() < 1e-12);
        assert_eq!(
            rayleigh_quotient(&pair.stiffness, &pair.mass, &vec![0.0; m.n_vertices()]),
            Err(FemError::ZeroVector)
        );
    }
}
