//! Structured, conforming P1 triangulation of the period cell.
//!
//! Each tagged rectangle is covered by a tensor grid; interfaces share their
//! node rows exactly. Spacing is graded geometrically toward the passage (the
//! mouth corners carry the singular behaviour), and the left/right strip
//! edges carry identical node traces so that quasi-periodic constraints can
//! be imposed node-by-node.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, BufRead, Write};

use crate::geometry::{CellGeometry, Region};

/// Passage elements are kept at most this elongated.
pub const PASSAGE_MAX_ASPECT: f64 = 3.0;

const PAIRING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshError {
    ResolutionTooCoarse { target_h: f64, limit: f64 },
    InvalidGrading(f64),
    PairingMismatch(String),
    NonConforming(String),
    Parse { line: usize, message: String },
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::ResolutionTooCoarse { target_h, limit } => write!(
                f,
                "RESOLUTION_TOO_COARSE: target_h = {target_h} must not exceed {limit}"
            ),
            MeshError::InvalidGrading(g) => write!(f, "grading factor {g} must be >= 1"),
            MeshError::PairingMismatch(m) => write!(f, "PAIRING_MISMATCH: {m}"),
            MeshError::NonConforming(m) => write!(f, "non-conforming mesh: {m}"),
            MeshError::Parse { line, message } => {
                write!(f, "mesh parse error at line {line}: {message}")
            }
        }
    }
}

impl std::error::Error for MeshError {}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodCellMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub tags: Vec<Region>,
    /// Strip vertices on `x₁ = 0`, ascending in `x₂`.
    pub left_boundary: Vec<usize>,
    /// Strip vertices on `x₁ = period`, paired index-by-index with `left_boundary`.
    pub right_boundary: Vec<usize>,
    /// Cell width (ε for the ε-cell).
    pub period: f64,
    /// Target edge length used for the coarsest elements.
    pub target_h: f64,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl PeriodCellMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        signed_area(a, b, c)
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.n_triangles())
            .filter(|&t| self.tags[t] == region)
            .map(|t| self.triangle_area(t))
            .sum()
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Check the structural invariants: positive orientation, every edge in at
    /// most two triangles, no hanging nodes, and a valid left/right pairing.
    pub fn validate(&self) -> Result<(), MeshError> {
        for t in 0..self.n_triangles() {
            if self.triangle_area(t) <= 0.0 {
                return Err(MeshError::NonConforming(format!(
                    "triangle {t} has area <= 0"
                )));
            }
        }
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut boundary = Vec::new();
        for (&(a, b), &count) in &edges {
            match count {
                1 => boundary.push((a, b)),
                2 => {}
                n => {
                    return Err(MeshError::NonConforming(format!(
                        "edge ({a}, {b}) shared by {n} triangles"
                    )))
                }
            }
        }
        // A hanging node sits strictly inside an edge that only one element sees.
        for &(a, b) in &boundary {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let len2 = (pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2);
            for (v, &p) in self.vertices.iter().enumerate() {
                if v == a || v == b {
                    continue;
                }
                let cross = (pb[0] - pa[0]) * (p[1] - pa[1]) - (pb[1] - pa[1]) * (p[0] - pa[0]);
                if cross.abs() > 1e-12 * len2 {
                    continue;
                }
                let s =
                    ((p[0] - pa[0]) * (pb[0] - pa[0]) + (p[1] - pa[1]) * (pb[1] - pa[1])) / len2;
                if s > 1e-12 && s < 1.0 - 1e-12 {
                    return Err(MeshError::NonConforming(format!(
                        "hanging node {v} on edge ({a}, {b})"
                    )));
                }
            }
        }
        check_pairing(
            &self.vertices,
            &self.left_boundary,
            &self.right_boundary,
            self.period,
        )
    }

    /// Rebuild the left/right pairing from the strip elements.
    fn rebuild_pairing(&mut self) -> Result<(), MeshError> {
        let (left, right) =
            strip_side_vertices(&self.vertices, &self.triangles, &self.tags, self.period);
        check_pairing(&self.vertices, &left, &right, self.period)?;
        self.left_boundary = left;
        self.right_boundary = right;
        Ok(())
    }

    /// Place `copies` translated copies side by side, gluing the right edge of
    /// each copy to the left edge of the next. The result is a cell of width
    /// `copies * period` with the same local resolution.
    pub fn tile(&self, copies: usize) -> PeriodCellMesh {
        assert!(copies >= 1);
        let n = self.n_vertices();
        let mut vertices = Vec::with_capacity(n * copies);
        let mut triangles = Vec::with_capacity(self.n_triangles() * copies);
        let mut tags = Vec::with_capacity(self.n_triangles() * copies);
        // global index of local vertex v in copy c
        let mut maps: Vec<Vec<usize>> = Vec::with_capacity(copies);
        for c in 0..copies {
            let shift = c as f64 * self.period;
            let mut map = vec![usize::MAX; n];
            for (v, p) in self.vertices.iter().enumerate() {
                if c > 0 && self.left_boundary.contains(&v) {
                    continue;
                }
                map[v] = vertices.len();
                vertices.push([p[0] + shift, p[1]]);
            }
            if c > 0 {
                // left edge of copy c is the right edge of copy c - 1
                for (&l, &r) in self.left_boundary.iter().zip(&self.right_boundary) {
                    map[l] = maps[c - 1][r];
                }
            }
            for (tri, &tag) in self.triangles.iter().zip(&self.tags) {
                triangles.push([map[tri[0]], map[tri[1]], map[tri[2]]]);
                tags.push(tag);
            }
            maps.push(map);
        }
        let left_boundary = self.left_boundary.iter().map(|&v| maps[0][v]).collect();
        let right_boundary: Vec<usize> = self
            .right_boundary
            .iter()
            .map(|&v| maps[copies - 1][v])
            .collect();
        let period = self.period * copies as f64;
        for &v in &right_boundary {
            vertices[v][0] = period;
        }
        PeriodCellMesh {
            vertices,
            triangles,
            tags,
            left_boundary,
            right_boundary,
            period,
            target_h: self.target_h,
        }
    }

    /// Plain-text dump: a `vertices` block, a `triangles` block with region
    /// tags, then the `left` and `right` boundary index lists.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# roomgap period-cell mesh")?;
        writeln!(w, "period {:.17e}", self.period)?;
        writeln!(w, "vertices {}", self.n_vertices())?;
        for p in &self.vertices {
            writeln!(w, "{:.17e} {:.17e}", p[0], p[1])?;
        }
        writeln!(w, "triangles {}", self.n_triangles())?;
        for (t, tag) in self.triangles.iter().zip(&self.tags) {
            writeln!(w, "{} {} {} {}", t[0], t[1], t[2], tag.tag())?;
        }
        for (name, list) in [
            ("left", &self.left_boundary),
            ("right", &self.right_boundary),
        ] {
            writeln!(w, "{name} {}", list.len())?;
            let line: Vec<String> = list.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<PeriodCellMesh, MeshError> {
        let mut lines = Vec::new();
        for (i, l) in r.lines().enumerate() {
            let l = l.map_err(|e| MeshError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                lines.push((i + 1, t.to_string()));
            }
        }
        let mut reader = TextReader {
            lines: lines.into_iter(),
            last: 0,
        };
        let period: f64 = reader.header("period")?;
        let n: usize = reader.header("vertices")?;
        let mut vertices = Vec::with_capacity(n);
        for _ in 0..n {
            let f = reader.fields(2)?;
            vertices.push([reader.num(&f[0])?, reader.num(&f[1])?]);
        }
        let n: usize = reader.header("triangles")?;
        let mut triangles = Vec::with_capacity(n);
        let mut tags = Vec::with_capacity(n);
        for _ in 0..n {
            let f = reader.fields(4)?;
            let tri = [reader.num(&f[0])?, reader.num(&f[1])?, reader.num(&f[2])?];
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(reader.error("vertex index out of range"));
            }
            triangles.push(tri);
            tags.push(Region::from_tag(&f[3]).ok_or_else(|| reader.error("unknown region tag"))?);
        }
        let mut sides = Vec::new();
        for key in ["left", "right"] {
            let n: usize = reader.header(key)?;
            let f = if n == 0 {
                Vec::new()
            } else {
                reader.fields(n)?
            };
            let list = f
                .iter()
                .map(|t| reader.num(t))
                .collect::<Result<Vec<usize>, _>>()?;
            sides.push(list);
        }
        let right_boundary = sides.pop().unwrap();
        let left_boundary = sides.pop().unwrap();
        let target_h = 0.0;
        let mesh = PeriodCellMesh {
            vertices,
            triangles,
            tags,
            left_boundary,
            right_boundary,
            period,
            target_h,
        };
        check_pairing(
            &mesh.vertices,
            &mesh.left_boundary,
            &mesh.right_boundary,
            period,
        )?;
        Ok(mesh)
    }
}

struct TextReader<I: Iterator<Item = (usize, String)>> {
    lines: I,
    last: usize,
}

impl<I: Iterator<Item = (usize, String)>> TextReader<I> {
    fn error(&self, message: &str) -> MeshError {
        MeshError::Parse {
            line: self.last,
            message: message.to_string(),
        }
    }

    fn next_line(&mut self) -> Result<String, MeshError> {
        let (no, l) = self
            .lines
            .next()
            .ok_or_else(|| self.error("unexpected end of input"))?;
        self.last = no;
        Ok(l)
    }

    fn num<T: std::str::FromStr>(&self, token: &str) -> Result<T, MeshError> {
        token
            .parse()
            .map_err(|_| self.error(&format!("cannot parse `{token}`")))
    }

    fn header<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, MeshError> {
        let l = self.next_line()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.error(&format!("expected `{key}`")));
        }
        let value = parts.next().ok_or_else(|| self.error("missing count"))?;
        self.num(value)
    }

    fn fields(&mut self, n: usize) -> Result<Vec<String>, MeshError> {
        let l = self.next_line()?;
        let f: Vec<String> = l.split_whitespace().map(str::to_string).collect();
        if f.len() != n {
            return Err(self.error(&format!("expected {n} fields, found {}", f.len())));
        }
        Ok(f)
    }
}

fn strip_side_vertices(
    vertices: &[[f64; 2]],
    triangles: &[[usize; 3]],
    tags: &[Region],
    period: f64,
) -> (Vec<usize>, Vec<usize>) {
    let mut left = BTreeMap::new();
    let mut right = BTreeMap::new();
    for (tri, &tag) in triangles.iter().zip(tags) {
        if tag != Region::Strip {
            continue;
        }
        for &v in tri {
            let p = vertices[v];
            if p[0] == 0.0 {
                left.insert(p[1].to_bits() as i64 ^ i64::MIN, (p[1], v));
            } else if p[0] == period {
                right.insert(p[1].to_bits() as i64 ^ i64::MIN, (p[1], v));
            }
        }
    }
    let sort = |m: BTreeMap<i64, (f64, usize)>| {
        let mut v: Vec<(f64, usize)> = m.into_values().collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.into_iter().map(|(_, i)| i).collect::<Vec<_>>()
    };
    (sort(left), sort(right))
}

fn check_pairing(
    vertices: &[[f64; 2]],
    left: &[usize],
    right: &[usize],
    period: f64,
) -> Result<(), MeshError> {
    if left.len() != right.len() {
        return Err(MeshError::PairingMismatch(format!(
            "{} left vs {} right boundary vertices",
            left.len(),
            right.len()
        )));
    }
    for (&l, &r) in left.iter().zip(right) {
        let (pl, pr) = (vertices[l], vertices[r]);
        if pl[0] != 0.0 || pr[0] != period || (pl[1] - pr[1]).abs() >= PAIRING_TOL {
            return Err(MeshError::PairingMismatch(format!(
                "vertex {l} at {pl:?} does not match {r} at {pr:?}"
            )));
        }
    }
    Ok(())
}

/// Nodes on `[a, b]` whose spacing follows the size field
/// `min(cap, size_a + (g−1)(x−a), size_b + (g−1)(b−x))`, i.e. geometric
/// growth by `g` away from each end until the cap is reached.
pub(crate) fn graded_nodes(
    a: f64,
    b: f64,
    size_a: f64,
    size_b: f64,
    cap: f64,
    growth: f64,
) -> Vec<f64> {
    if b <= a {
        return vec![a];
    }
    let slope = growth - 1.0;
    let size = |x: f64| {
        cap.min(size_a + slope * (x - a))
            .min(size_b + slope * (b - x))
    };
    const SAMPLES: usize = 20_000;
    let dx = (b - a) / SAMPLES as f64;
    // cumulative ∫ dx / size by the midpoint rule
    let mut cumulative = Vec::with_capacity(SAMPLES + 1);
    cumulative.push(0.0);
    let mut acc = 0.0;
    for i in 0..SAMPLES {
        acc += dx / size(a + (i as f64 + 0.5) * dx);
        cumulative.push(acc);
    }
    let n = ((acc - 1e-9).ceil() as usize).max(1);
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(a);
    let mut seg = 0;
    for j in 1..n {
        let target = acc * j as f64 / n as f64;
        while cumulative[seg + 1] < target {
            seg += 1;
        }
        let t = (target - cumulative[seg]) / (cumulative[seg + 1] - cumulative[seg]);
        nodes.push(a + (seg as f64 + t) * dx);
    }
    nodes.push(b);
    nodes
}

fn uniform_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            if i == n {
                b
            } else {
                a + (b - a) * i as f64 / n as f64
            }
        })
        .collect()
}

fn concat(parts: &[Vec<f64>]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for part in parts {
        for &x in part {
            if out.last().map_or(true, |&l| x > l) {
                out.push(x);
            }
        }
    }
    out
}

struct Builder {
    vertices: Vec<[f64; 2]>,
    index: HashMap<(u64, u64), usize>,
    triangles: Vec<[usize; 3]>,
    tags: Vec<Region>,
}

impl Builder {
    fn vertex(&mut self, x: f64, y: f64) -> usize {
        let key = (x.to_bits(), y.to_bits());
        if let Some(&v) = self.index.get(&key) {
            return v;
        }
        let v = self.vertices.len();
        self.vertices.push([x, y]);
        self.index.insert(key, v);
        v
    }

    fn block(&mut self, xs: &[f64], ys: &[f64], tag: Region) {
        let ids: Vec<Vec<usize>> = ys
            .iter()
            .map(|&y| xs.iter().map(|&x| self.vertex(x, y)).collect())
            .collect();
        for j in 0..ys.len() - 1 {
            for i in 0..xs.len() - 1 {
                let (v00, v10) = (ids[j][i], ids[j][i + 1]);
                let (v01, v11) = (ids[j + 1][i], ids[j + 1][i + 1]);
                self.triangles.push([v00, v10, v11]);
                self.triangles.push([v00, v11, v01]);
                self.tags.push(tag);
                self.tags.push(tag);
            }
        }
    }
}

/// Triangulate the cell. `target_h` is the coarse edge length, `grading` the
/// geometric growth factor of element size away from the passage.
pub fn triangulate(
    cell: &CellGeometry,
    target_h: f64,
    grading: f64,
) -> Result<PeriodCellMesh, MeshError> {
    let limit = 0.5 * cell.period().min(cell.strip.height());
    if !(target_h.is_finite() && target_h > 0.0) || target_h > limit {
        return Err(MeshError::ResolutionTooCoarse { target_h, limit });
    }
    if !(grading.is_finite() && grading >= 1.0) {
        return Err(MeshError::InvalidGrading(grading));
    }
    let mut b = Builder {
        vertices: Vec::new(),
        index: HashMap::new(),
        triangles: Vec::new(),
        tags: Vec::new(),
    };
    let strip = cell.strip;
    match (cell.passage, cell.room) {
        (Some(passage), Some(room)) => {
            let columns = ((passage.width() / target_h).ceil() as usize).max(2);
            let fine = passage.width() / columns as f64;
            let mouth = uniform_nodes(passage.x0, passage.x1, columns);

            let xs = concat(&[
                graded_nodes(strip.x0, passage.x0, target_h, fine, target_h, grading),
                mouth.clone(),
                graded_nodes(passage.x1, strip.x1, fine, target_h, target_h, grading),
            ]);
            let ys = graded_nodes(strip.y0, strip.y1, target_h, fine, target_h, grading);
            b.block(&xs, &ys, Region::Strip);

            let passage_cap = target_h.min(PASSAGE_MAX_ASPECT * fine);
            let ys = graded_nodes(passage.y0, passage.y1, fine, fine, passage_cap, grading);
            b.block(&mouth, &ys, Region::Passage);

            let xs = concat(&[
                graded_nodes(room.x0, passage.x0, target_h, fine, target_h, grading),
                mouth,
                graded_nodes(passage.x1, room.x1, fine, target_h, target_h, grading),
            ]);
            let ys = graded_nodes(room.y0, room.y1, fine, target_h, target_h, grading);
            b.block(&xs, &ys, Region::Room);
        }
        _ => {
            let nx = (strip.width() / target_h).ceil() as usize;
            let ny = (strip.height() / target_h).ceil() as usize;
            b.block(
                &uniform_nodes(strip.x0, strip.x1, nx),
                &uniform_nodes(strip.y0, strip.y1, ny),
                Region::Strip,
            );
        }
    }
    let mut mesh = PeriodCellMesh {
        vertices: b.vertices,
        triangles: b.triangles,
        tags: b.tags,
        left_boundary: Vec::new(),
        right_boundary: Vec::new(),
        period: cell.period(),
        target_h,
    };
    mesh.rebuild_pairing()?;
    Ok(mesh)
}

/// Uniform red refinement: every triangle splits into four similar children.
pub fn refine(m: &PeriodCellMesh) -> PeriodCellMesh {
    let mut vertices = m.vertices.clone();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
        *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
            let (pa, pb) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * m.n_triangles());
    let mut tags = Vec::with_capacity(4 * m.n_triangles());
    for (&[a, b, c], &tag) in m.triangles.iter().zip(&m.tags) {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        tags.extend_from_slice(&[tag; 4]);
    }
    let mut out = PeriodCellMesh {
        vertices,
        triangles,
        tags,
        left_boundary: Vec::new(),
        right_boundary: Vec::new(),
        period: m.period,
        target_h: 0.5 * m.target_h,
    };
    out.rebuild_pairing()
        .expect("refinement preserves the boundary pairing");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshQuality {
    /// Smallest interior angle, degrees.
    pub min_angle: f64,
    /// Largest circumradius / (2 · inradius); 1 for an equilateral triangle.
    pub max_aspect: f64,
    pub strip_elements: usize,
    pub passage_elements: usize,
    pub room_elements: usize,
}

fn angles_and_aspect(p: [[f64; 2]; 3]) -> (f64, f64) {
    let len = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let (a, b, c) = (len(p[1], p[2]), len(p[2], p[0]), len(p[0], p[1]));
    let area = signed_area(p[0], p[1], p[2]).abs();
    let angle = |opp: f64, s1: f64, s2: f64| {
        ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2))
            .clamp(-1.0, 1.0)
            .acos()
    };
    let min_angle = angle(a, b, c).min(angle(b, c, a)).min(angle(c, a, b));
    let s = 0.5 * (a + b + c);
    let inradius = area / s;
    let circumradius = a * b * c / (4.0 * area);
    (min_angle.to_degrees(), circumradius / (2.0 * inradius))
}

pub fn mesh_quality(m: &PeriodCellMesh) -> MeshQuality {
    let mut q = MeshQuality {
        min_angle: f64::INFINITY,
        max_aspect: 0.0,
        strip_elements: 0,
        passage_elements: 0,
        room_elements: 0,
    };
    for t in 0..m.n_triangles() {
        let (angle, aspect) = angles_and_aspect(m.corners(t));
        q.min_angle = q.min_angle.min(angle);
        q.max_aspect = q.max_aspect.max(aspect);
        match m.tags[t] {
            Region::Strip => q.strip_elements += 1,
            Region::Passage => q.passage_elements += 1,
            Region::Room => q.room_elements += 1,
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        asymptotic_preset, build_cell, validate_params, ScalingPreset, WaveguideParams,
    };

    fn preset_cell(eps: f64) -> CellGeometry {
        let s = ScalingPreset::unit_square(1.0, 1.0, 1.0);
        build_cell(&asymptotic_preset(&s, eps).unwrap())
    }

    #[test]
    fn unperturbed_cell_is_a_structured_grid() {
        let eps = 0.25;
        let cell = build_cell(&validate_params(WaveguideParams::unperturbed(eps, 1.0)).unwrap());
        let m = triangulate(&cell, eps / 4.0, 1.2).unwrap();
        let (n1, n2) = (4, 16);
        assert_eq!(m.n_vertices(), (n1 + 1) * (n2 + 1));
        assert_eq!(m.n_triangles(), 2 * n1 * n2);
        assert_eq!(m.left_boundary.len(), n2 + 1);
        m.validate().unwrap();
        let q = mesh_quality(&m);
        assert!((q.min_angle - 45.0).abs() < 1e-9);
    }

    #[test]
    fn right_isoceles_triangle_quality() {
        let (angle, aspect) = angles_and_aspect([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!((angle - 45.0).abs() < 1e-12);
        // R = √2/2, r = (2 − √2)/2
        let expected = (0.5f64.sqrt()) / (2.0 - 2f64.sqrt());
        assert!((aspect - expected).abs() < 1e-12);
    }

    #[test]
    fn congruent_elements_share_aspect() {
        let cell = build_cell(&validate_params(WaveguideParams::unperturbed(0.5, 1.0)).unwrap());
        let m = triangulate(&cell, 0.125, 1.0).unwrap();
        let aspects: Vec<f64> = (0..m.n_triangles())
            .map(|t| angles_and_aspect(m.corners(t)).1)
            .collect();
        let first = aspects[0];
        assert!(aspects.iter().all(|a| (a - first).abs() < 1e-12));
        assert!((mesh_quality(&m).max_aspect - first).abs() < 1e-12);
    }

    #[test]
    fn preset_mesh_conforms_and_conserves_area() {
        for eps in [0.25, 0.125, 0.0625] {
            let cell = preset_cell(eps);
            let m = triangulate(&cell, 1.0 / 32.0, 1.2).unwrap();
            m.validate().unwrap();
            assert!((m.area() / cell.area() - 1.0).abs() < 1e-12);
            for region in [Region::Strip, Region::Passage, Region::Room] {
                let exact = cell.rect(region).unwrap().area();
                assert!(
                    (m.region_area(region) / exact - 1.0).abs() < 1e-12,
                    "{region:?}"
                );
            }
            let q = mesh_quality(&m);
            assert!(q.strip_elements > 0 && q.passage_elements > 0 && q.room_elements > 0);
        }
    }

    #[test]
    fn preset_mesh_quality_at_eighth() {
        let m = triangulate(&preset_cell(0.125), 1.0 / 32.0, 1.2).unwrap();
        let q = mesh_quality(&m);
        // Graded tensor blocks: the worst element pairs a mouth column (d/2)
        // with a coarse strip row (target_h), aspect 4 : 1.
        assert!(q.min_angle >= 10.0, "min angle {}", q.min_angle);
    }

    #[test]
    fn passage_resolved_with_two_columns() {
        let cell = preset_cell(0.0625);
        let m = triangulate(&cell, 1.0 / 32.0, 1.2).unwrap();
        let passage = cell.passage.unwrap();
        let mouth: Vec<_> = m
            .vertices
            .iter()
            .filter(|p| p[1] == 0.0 && p[0] >= passage.x0 && p[0] <= passage.x1)
            .collect();
        assert!(mouth.len() >= 3);
    }

    #[test]
    fn rejects_coarse_resolution() {
        let cell = preset_cell(0.0625);
        assert!(matches!(
            triangulate(&cell, 0.05, 1.2),
            Err(MeshError::ResolutionTooCoarse { .. })
        ));
        assert!(matches!(
            triangulate(&cell, 0.01, 0.5),
            Err(MeshError::InvalidGrading(_))
        ));
    }

    #[test]
    fn room_sides_are_not_paired() {
        // the unit-square room spans the whole period; only strip nodes pair up
        let m = triangulate(&preset_cell(0.25), 1.0 / 32.0, 1.2).unwrap();
        for &v in m.left_boundary.iter().chain(&m.right_boundary) {
            assert!(m.vertices[v][1] <= 0.0);
        }
    }

    #[test]
    fn refinement_quadruples_and_inherits_tags() {
        let m = triangulate(&preset_cell(0.25), 1.0 / 16.0, 1.3).unwrap();
        let r = refine(&m);
        assert_eq!(r.n_triangles(), 4 * m.n_triangles());
        for (t, &tag) in m.tags.iter().enumerate() {
            assert!(r.tags[4 * t..4 * t + 4].iter().all(|&c| c == tag));
        }
        r.validate().unwrap();
        assert_eq!(r.left_boundary.len(), 2 * m.left_boundary.len() - 1);
        assert!((r.area() / m.area() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = triangulate(&preset_cell(0.125), 1.0 / 32.0, 1.2).unwrap();
        let b = triangulate(&preset_cell(0.125), 1.0 / 32.0, 1.2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tiling_glues_copies() {
        let m = triangulate(&preset_cell(0.5), 1.0 / 16.0, 1.2).unwrap();
        let t = m.tile(2);
        t.validate().unwrap();
        assert_eq!(t.period, 1.0);
        assert_eq!(t.n_vertices(), 2 * m.n_vertices() - m.left_boundary.len());
        assert!((t.area() - 2.0 * m.area()).abs() < 1e-12);
    }

    #[test]
    fn text_dump_round_trips() {
        let m = triangulate(&preset_cell(0.25), 1.0 / 16.0, 1.2).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let back = PeriodCellMesh::read_text(&buf[..]).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.tags, m.tags);
        assert_eq!(back.left_boundary, m.left_boundary);
        assert!(PeriodCellMesh::read_text(&b"period 1\nvertices x\n"[..]).is_err());
    }

    #[test]
    fn graded_nodes_hit_endpoints_and_grow() {
        let xs = graded_nodes(0.0, 1.0, 0.01, 0.1, 0.1, 1.2);
        assert_eq!(xs[0], 0.0);
        assert_eq!(*xs.last().unwrap(), 1.0);
        let steps: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps[0] < 0.015);
        for w in steps.windows(2) {
            assert!(w[1] / w[0] < 1.35);
        }
    }
}
