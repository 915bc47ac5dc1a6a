//! P1 finite elements on simplex meshes of the unit interval / unit square,
//! with zero Dirichlet trace.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::nfunction::Point;

/// Quadrature rule on the reference simplex, in barycentric coordinates.
/// Weights sum to one; they are scaled by the cell measure on use.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadRule {
    name: String,
    dim: usize,
    degree: usize,
    points: Vec<([f64; 3], f64)>,
}

impl QuadRule {
    /// `n`-point Gauss-Legendre rule on a segment (exact to degree `2n-1`).
    pub fn gauss_1d(n: usize) -> Result<Self> {
        let (xs, ws): (&[f64], &[f64]) = match n {
            1 => (&[0.0], &[2.0]),
            2 => (&[-0.577_350_269_189_625_8, 0.577_350_269_189_625_8], &[1.0, 1.0]),
            3 => (
                &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
                &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
            ),
            4 => (
                &[
                    -0.861_136_311_594_052_6,
                    -0.339_981_043_584_856_3,
                    0.339_981_043_584_856_3,
                    0.861_136_311_594_052_6,
                ],
                &[
                    0.347_854_845_137_453_8,
                    0.652_145_154_862_546_2,
                    0.652_145_154_862_546_2,
                    0.347_854_845_137_453_8,
                ],
            ),
            5 => (
                &[
                    -0.906_179_845_938_664,
                    -0.538_469_310_105_683,
                    0.0,
                    0.538_469_310_105_683,
                    0.906_179_845_938_664,
                ],
                &[
                    0.236_926_885_056_189_1,
                    0.478_628_670_499_366_5,
                    0.568_888_888_888_888_9,
                    0.478_628_670_499_366_5,
                    0.236_926_885_056_189_1,
                ],
            ),
            _ => {
                return Err(Error::Argument(format!(
                    "Gauss rule with {n} points not available (1..=5)"
                )))
            }
        };
        let points = xs
            .iter()
            .zip(ws)
            .map(|(x, w)| {
                let xi = 0.5 * (1.0 + x);
                ([1.0 - xi, xi, 0.0], 0.5 * w)
            })
            .collect();
        Ok(Self {
            name: format!("gauss{n}"),
            dim: 1,
            degree: 2 * n - 1,
            points,
        })
    }

    /// One-point centroid rule on triangles (degree 1).
    pub fn triangle_centroid() -> Self {
        let c = 1.0 / 3.0;
        Self {
            name: "tri_centroid".into(),
            dim: 2,
            degree: 1,
            points: vec![([c, c, c], 1.0)],
        }
    }

    /// Three interior points `(1/6, 1/6, 2/3)` and permutations (degree 2).
    pub fn triangle_3pt() -> Self {
        let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
        let w = 1.0 / 3.0;
        Self {
            name: "tri_3pt".into(),
            dim: 2,
            degree: 2,
            points: vec![([b, a, a], w), ([a, b, a], w), ([a, a, b], w)],
        }
    }

    /// Six-point symmetric rule (degree 4).
    pub fn triangle_6pt() -> Self {
        let (a, wa) = (0.445_948_490_915_965, 0.223_381_589_678_011);
        let (b, wb) = (0.091_576_213_509_771, 0.109_951_743_655_322);
        let (ca, cb) = (1.0 - 2.0 * a, 1.0 - 2.0 * b);
        Self {
            name: "tri_6pt".into(),
            dim: 2,
            degree: 4,
            points: vec![
                ([ca, a, a], wa),
                ([a, ca, a], wa),
                ([a, a, ca], wa),
                ([cb, b, b], wb),
                ([b, cb, b], wb),
                ([b, b, cb], wb),
            ],
        }
    }

    pub fn default_for(dim: usize) -> Self {
        if dim == 1 {
            Self::gauss_1d(2).expect("two-point rule exists")
        } else {
            Self::triangle_3pt()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Highest polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[([f64; 3], f64)] {
        &self.points
    }
}

/// A conforming simplex mesh (segments in 1D, triangles in 2D) with a
/// per-cell quadrature rule.
///
/// Quadrature point `k` of cell `c` has global index `c * rule.len() + k`.
#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<Point>,
    /// In 1D only the first two entries are used.
    cells: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    measures: Vec<f64>,
    shape_grads: Vec<[[f64; 2]; 3]>,
    rule: QuadRule,
    qp_coords: Vec<Point>,
    qp_weights: Vec<f64>,
}

impl Mesh {
    /// Uniform partition of `(0, 1)` into `n_cells` segments.
    pub fn interval(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::Argument(format!("interval mesh needs n >= 2, got {n_cells}")));
        }
        let h = 1.0 / n_cells as f64;
        let vertices = (0..=n_cells).map(|i| [i as f64 * h, 0.0]).collect();
        let cells = (0..n_cells).map(|i| [i, i + 1, i]).collect();
        Self::from_cells(1, vertices, cells)
    }

    /// Uniform `nx x ny` grid of `(0,1)^2`, each square split into two
    /// triangles with diagonals alternating in a checkerboard pattern.
    pub fn unit_square(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Argument(format!("square mesh needs nx, ny >= 2, got {nx}x{ny}")));
        }
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([i as f64 / nx as f64, j as f64 / ny as f64]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut cells = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                if (i + j) % 2 == 0 {
                    cells.push([a, b, c]);
                    cells.push([a, c, d]);
                } else {
                    cells.push([a, b, d]);
                    cells.push([b, c, d]);
                }
            }
        }
        Self::from_cells(2, vertices, cells)
    }

    /// Builds a mesh from raw vertices and cells; the boundary is inferred as
    /// the vertices of facets that belong to exactly one cell.
    pub fn from_cells(dim: usize, vertices: Vec<Point>, cells: Vec<[usize; 3]>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Argument(format!("dimension must be 1 or 2, got {dim}")));
        }
        if cells.is_empty() {
            return Err(Error::Argument("mesh has no cells".into()));
        }
        let nv = vertices.len();
        let mut cells = cells;
        let mut measures = Vec::with_capacity(cells.len());
        let mut shape_grads = Vec::with_capacity(cells.len());
        for (ci, cell) in cells.iter_mut().enumerate() {
            if cell[..dim + 1].iter().any(|&v| v >= nv) {
                return Err(Error::Argument(format!("cell {ci} references a missing vertex")));
            }
            if dim == 1 {
                cell[2] = cell[0];
                let (a, b) = (vertices[cell[0]][0], vertices[cell[1]][0]);
                let len = b - a;
                if len.abs() <= 1e-14 {
                    return Err(Error::Argument(format!("cell {ci} is degenerate")));
                }
                measures.push(len.abs());
                shape_grads.push([[-1.0 / len, 0.0], [1.0 / len, 0.0], [0.0, 0.0]]);
            } else {
                let [a, b, c] = [vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]];
                let mut area2 = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                if area2.abs() <= 1e-14 {
                    return Err(Error::Argument(format!("cell {ci} is degenerate")));
                }
                if area2 < 0.0 {
                    cell.swap(1, 2);
                    area2 = -area2;
                }
                let [a, b, c] = [vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]];
                measures.push(0.5 * area2);
                shape_grads.push([
                    [(b[1] - c[1]) / area2, (c[0] - b[0]) / area2],
                    [(c[1] - a[1]) / area2, (a[0] - c[0]) / area2],
                    [(a[1] - b[1]) / area2, (b[0] - a[0]) / area2],
                ]);
            }
        }
        let boundary = infer_boundary(dim, nv, &cells);
        let mut mesh = Self {
            dim,
            vertices,
            cells,
            boundary,
            measures,
            shape_grads,
            rule: QuadRule::default_for(dim),
            qp_coords: Vec::new(),
            qp_weights: Vec::new(),
        };
        mesh.build_quadrature();
        Ok(mesh)
    }

    /// Parses the plain-text mesh format: a header line
    /// `dim n_vertices n_cells`, then one coordinate line per vertex and one
    /// line of `dim + 1` zero-based vertex indices per cell.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let parse_err = |line: usize, message: String| Error::MeshParse { line, message };
        let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "missing header".into()))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(hl, format!("bad header: {e}")))?;
        let [dim, nv, nc] = head[..] else {
            return Err(parse_err(hl, "header must be `dim n_vertices n_cells`".into()));
        };
        if dim != 1 && dim != 2 {
            return Err(parse_err(hl, format!("dimension must be 1 or 2, got {dim}")));
        }
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or_else(|| parse_err(0, "unexpected end of file in vertex block".into()))?;
            let xs: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(ln, format!("bad coordinate: {e}")))?;
            if xs.len() != dim {
                return Err(parse_err(ln, format!("expected {dim} coordinates, got {}", xs.len())));
            }
            vertices.push([xs[0], if dim == 2 { xs[1] } else { 0.0 }]);
        }
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (ln, l) = lines.next().ok_or_else(|| parse_err(0, "unexpected end of file in cell block".into()))?;
            let ids: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(ln, format!("bad vertex index: {e}")))?;
            if ids.len() != dim + 1 {
                return Err(parse_err(ln, format!("expected {} indices, got {}", dim + 1, ids.len())));
            }
            if let Some(bad) = ids.iter().find(|&&i| i >= nv) {
                return Err(parse_err(ln, format!("vertex index {bad} out of range")));
            }
            cells.push([ids[0], ids[1], if dim == 2 { ids[2] } else { ids[0] }]);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(parse_err(ln, "trailing content after cell block".into()));
        }
        Self::from_cells(dim, vertices, cells)
    }

    /// Serializes to the text format read by [`Mesh::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.dim, self.vertices.len(), self.cells.len());
        for v in &self.vertices {
            if self.dim == 1 {
                out.push_str(&format!("{:.17e}\n", v[0]));
            } else {
                out.push_str(&format!("{:.17e} {:.17e}\n", v[0], v[1]));
            }
        }
        for c in &self.cells {
            if self.dim == 1 {
                out.push_str(&format!("{} {}\n", c[0], c[1]));
            } else {
                out.push_str(&format!("{} {} {}\n", c[0], c[1], c[2]));
            }
        }
        out
    }

    /// Same mesh with a different quadrature rule.
    pub fn with_rule(&self, rule: QuadRule) -> Result<Self> {
        if rule.dim != self.dim {
            return Err(Error::Argument(format!(
                "rule {} is for dimension {}, mesh has dimension {}",
                rule.name, rule.dim, self.dim
            )));
        }
        let mut m = self.clone();
        m.rule = rule;
        m.build_quadrature();
        Ok(m)
    }

    fn build_quadrature(&mut self) {
        let nq = self.rule.len();
        self.qp_coords = Vec::with_capacity(self.cells.len() * nq);
        self.qp_weights = Vec::with_capacity(self.cells.len() * nq);
        for (cell, &meas) in self.cells.iter().zip(&self.measures) {
            for (bary, w) in &self.rule.points {
                let mut x = [0.0; 2];
                for k in 0..=self.dim {
                    let v = self.vertices[cell[k]];
                    x[0] += bary[k] * v[0];
                    x[1] += bary[k] * v[1];
                }
                self.qp_coords.push(x);
                self.qp_weights.push(w * meas);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Vertex indices of cell `c` (`dim + 1` entries).
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c][..self.dim + 1]
    }

    pub fn cell_measure(&self, c: usize) -> f64 {
        self.measures[c]
    }

    /// Constant gradients of the local P1 basis functions on cell `c`.
    pub fn shape_gradients(&self, c: usize) -> &[[f64; 2]] {
        &self.shape_grads[c][..self.dim + 1]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary.iter().filter(|b| **b).count()
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| !self.boundary[v]).collect()
    }

    /// Total measure of the mesh.
    pub fn measure(&self) -> f64 {
        self.measures.iter().sum()
    }

    pub fn rule(&self) -> &QuadRule {
        &self.rule
    }

    pub fn qp_per_cell(&self) -> usize {
        self.rule.len()
    }

    pub fn n_qp(&self) -> usize {
        self.qp_weights.len()
    }

    pub fn qp_coords(&self) -> &[Point] {
        &self.qp_coords
    }

    /// Quadrature weights including the cell measure.
    pub fn qp_weights(&self) -> &[f64] {
        &self.qp_weights
    }

    /// Quadrature-weighted sum of a field given at the quadrature points.
    pub fn integrate(&self, field: &QuadField) -> Result<f64> {
        self.check_field(field.0.len())?;
        Ok(field.0.iter().zip(&self.qp_weights).map(|(v, w)| v * w).sum())
    }

    pub(crate) fn check_field(&self, len: usize) -> Result<()> {
        if len != self.n_qp() {
            return Err(Error::Structure(format!(
                "field has {len} values but the mesh has {} quadrature points",
                self.n_qp()
            )));
        }
        Ok(())
    }

    /// Row sums of the mass matrix, `integral of h_i`.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.vertices.len()];
        let share = 1.0 / (self.dim + 1) as f64;
        for (c, cell) in self.cells.iter().enumerate() {
            for &v in &cell[..self.dim + 1] {
                m[v] += share * self.measures[c];
            }
        }
        m
    }
}

fn infer_boundary(dim: usize, nv: usize, cells: &[[usize; 3]]) -> Vec<bool> {
    let mut boundary = vec![false; nv];
    if dim == 1 {
        let mut count = vec![0usize; nv];
        for c in cells {
            count[c[0]] += 1;
            count[c[1]] += 1;
        }
        for v in 0..nv {
            boundary[v] = count[v] == 1;
        }
    } else {
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for c in cells {
            for (a, b) in [(c[0], c[1]), (c[1], c[2]), (c[2], c[0])] {
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for ((a, b), n) in edges {
            if n == 1 {
                boundary[a] = true;
                boundary[b] = true;
            }
        }
    }
    boundary
}

/// Scalar values at the quadrature points of a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadField(pub Vec<f64>);

/// Vector values at the quadrature points of a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField(pub Vec<[f64; 2]>);

impl GradientField {
    /// Euclidean magnitudes.
    pub fn norms(&self) -> QuadField {
        QuadField(self.0.iter().map(|g| g[0].hypot(g[1])).collect())
    }

    pub fn scaled(&self, t: f64) -> GradientField {
        GradientField(self.0.iter().map(|g| [t * g[0], t * g[1]]).collect())
    }
}

/// Piecewise-linear function on a mesh, vanishing at boundary vertices.
#[derive(Clone, Debug)]
pub struct FeFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl FeFunction {
    pub fn zero(mesh: &Arc<Mesh>) -> Self {
        Self {
            mesh: Arc::clone(mesh),
            values: vec![0.0; mesh.n_vertices()],
        }
    }

    /// Takes nodal values; boundary entries are overwritten with zero.
    pub fn from_values(mesh: &Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::Structure(format!(
                "{} nodal values for a mesh with {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        let mut u = Self {
            mesh: Arc::clone(mesh),
            values,
        };
        u.project_boundary();
        Ok(u)
    }

    /// Nodal interpolant of `f`, with zero boundary values.
    pub fn interpolate<F: Fn(&Point) -> f64>(mesh: &Arc<Mesh>, f: F) -> Self {
        let values = mesh.vertices().iter().map(&f).collect();
        let mut u = Self {
            mesh: Arc::clone(mesh),
            values,
        };
        u.project_boundary();
        u
    }

    /// Sets boundary values to zero.
    pub fn project_boundary(&mut self) {
        for (v, val) in self.values.iter_mut().enumerate() {
            if self.mesh.boundary[v] {
                *val = 0.0;
            }
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    fn same_mesh(&self, other: &FeFunction) -> Result<()> {
        if Arc::ptr_eq(&self.mesh, &other.mesh) {
            Ok(())
        } else {
            Err(Error::Structure("functions live on different meshes".into()))
        }
    }

    pub fn scaled(&self, t: f64) -> FeFunction {
        FeFunction {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|v| t * v).collect(),
        }
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &FeFunction) -> Result<FeFunction> {
        self.same_mesh(other)?;
        Ok(FeFunction {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().zip(&other.values).map(|(u, v)| u + a * v).collect(),
        })
    }

    pub fn add(&self, other: &FeFunction) -> Result<FeFunction> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &FeFunction) -> Result<FeFunction> {
        self.axpy(-1.0, other)
    }

    pub fn abs(&self) -> FeFunction {
        FeFunction {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }

    /// Euclidean inner product of nodal vectors.
    pub fn dot(&self, other: &FeFunction) -> Result<f64> {
        self.same_mesh(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }

    pub fn nodal_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Smallest value over interior vertices.
    pub fn min_interior(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(v, _)| !self.mesh.boundary[*v])
            .map(|(_, x)| *x)
            .fold(f64::INFINITY, f64::min)
    }

    /// Values at the quadrature points.
    pub fn at_quadrature(&self) -> QuadField {
        let m = &*self.mesh;
        let mut out = Vec::with_capacity(m.n_qp());
        for cell in &m.cells {
            for (bary, _) in &m.rule.points {
                let mut s = 0.0;
                for k in 0..=m.dim {
                    s += bary[k] * self.values[cell[k]];
                }
                out.push(s);
            }
        }
        QuadField(out)
    }

    /// Constant gradient on each cell.
    pub fn cell_gradients(&self) -> Vec<[f64; 2]> {
        let m = &*self.mesh;
        m.cells
            .iter()
            .zip(&m.shape_grads)
            .map(|(cell, grads)| {
                let mut g = [0.0; 2];
                for k in 0..=m.dim {
                    let u = self.values[cell[k]];
                    g[0] += u * grads[k][0];
                    g[1] += u * grads[k][1];
                }
                g
            })
            .collect()
    }

    /// Cell gradients replicated to each quadrature point of the cell.
    pub fn gradient_at_quadrature(&self) -> GradientField {
        let nq = self.mesh.qp_per_cell();
        let mut out = Vec::with_capacity(self.mesh.n_qp());
        for g in self.cell_gradients() {
            out.extend(std::iter::repeat_n(g, nq));
        }
        GradientField(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_counts() {
        let m = Mesh::interval(4).unwrap();
        assert_eq!(m.n_vertices(), 5);
        assert_eq!(m.n_boundary(), 2);
        assert!((m.measure() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn square_counts() {
        let m = Mesh::unit_square(2, 2).unwrap();
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.n_boundary(), 8);
        assert_eq!(m.n_cells(), 8);
        assert!((m.measure() - 1.0).abs() < 1e-14);
        let m = Mesh::unit_square(16, 16).unwrap();
        assert!((m.measure() - 1.0).abs() < 1e-14);
        assert_eq!(m.n_boundary(), 64);
    }

    #[test]
    fn too_small_meshes_are_rejected() {
        assert!(Mesh::interval(1).is_err());
        assert!(Mesh::unit_square(1, 4).is_err());
    }

    #[test]
    fn gradient_of_linear_interpolant() {
        let m = Arc::new(Mesh::interval(8).unwrap());
        // boundary projection kills u(1)=1, so only interior cells see slope 1
        let u = FeFunction::interpolate(&m, |x| x[0]);
        let g = u.cell_gradients();
        for gc in &g[..m.n_cells() - 1] {
            assert!((gc[0] - 1.0).abs() < 1e-12);
        }
        let z = FeFunction::zero(&m);
        assert!(z.gradient_at_quadrature().0.iter().all(|g| *g == [0.0, 0.0]));
    }

    #[test]
    fn gradient_matches_derivative_at_midpoints() {
        let n = 64;
        let m = Arc::new(Mesh::interval(n).unwrap());
        let u = FeFunction::interpolate(&m, |x| x[0] * (1.0 - x[0]));
        let h = 1.0 / n as f64;
        for (c, g) in u.cell_gradients().iter().enumerate() {
            let mid = (c as f64 + 0.5) * h;
            assert!((g[0] - (1.0 - 2.0 * mid)).abs() <= 1e-12, "cell {c}");
        }
    }

    #[test]
    fn integrate_polynomials() {
        let m = Mesh::interval(5).unwrap();
        let x: Vec<f64> = m.qp_coords().iter().map(|p| p[0]).collect();
        let one = QuadField(vec![1.0; m.n_qp()]);
        assert!((m.integrate(&one).unwrap() - 1.0).abs() < 1e-14);
        assert!((m.integrate(&QuadField(x.clone())).unwrap() - 0.5).abs() < 1e-14);
        let x2 = QuadField(x.iter().map(|v| v * v).collect());
        assert!((m.integrate(&x2).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert!(m.integrate(&QuadField(vec![1.0])).is_err());

        let sq = Mesh::unit_square(3, 5).unwrap();
        let xy = QuadField(sq.qp_coords().iter().map(|p| p[0] * p[1]).collect());
        assert!((sq.integrate(&xy).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn affine_interpolation_integrates_exactly() {
        for mesh in [Mesh::unit_square(4, 3).unwrap(), Mesh::interval(7).unwrap()] {
            let mesh = Arc::new(mesh);
            // interior nodes of an affine function; compare through the raw interpolant
            let f = |x: &Point| 0.3 + 2.0 * x[0] - 1.5 * x[1];
            let vals: Vec<f64> = mesh.vertices().iter().map(f).collect();
            let raw = FeFunction { mesh: Arc::clone(&mesh), values: vals };
            let at_q = raw.at_quadrature();
            let exact = if mesh.dim() == 1 { 0.3 + 1.0 } else { 0.3 + 1.0 - 0.75 };
            assert!((mesh.integrate(&at_q).unwrap() - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn boundary_projection_is_idempotent() {
        let m = Arc::new(Mesh::unit_square(4, 4).unwrap());
        let mut u = FeFunction::interpolate(&m, |x| 1.0 + x[0]);
        let once = u.values().to_vec();
        u.project_boundary();
        assert_eq!(once, u.values());
        for v in 0..m.n_vertices() {
            if m.is_boundary(v) {
                assert_eq!(u.values()[v], 0.0);
            }
        }
    }

    #[test]
    fn text_round_trip_and_errors() {
        let m = Mesh::unit_square(3, 2).unwrap();
        let back = Mesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.n_cells(), m.n_cells());
        assert_eq!(back.n_boundary(), m.n_boundary());
        assert!((back.measure() - 1.0).abs() < 1e-14);

        let err = Mesh::from_text("2 3 1\n0 0\n1 0\n0 1\n0 1 7\n").unwrap_err();
        assert!(matches!(err, Error::MeshParse { line: 5, .. }), "{err}");
        let err = Mesh::from_text("2 3 1\n0 0\n1 0\n0 1\n0 1 2\n").unwrap();
        assert_eq!(err.n_boundary(), 3);
        assert!(Mesh::from_text("2 3 1\n0 0\n1 0\n2 0\n0 1 2\n").is_err());
    }

    #[test]
    fn rules_integrate_to_their_degree() {
        let sq = Mesh::unit_square(2, 2).unwrap();
        for rule in [QuadRule::triangle_centroid(), QuadRule::triangle_3pt(), QuadRule::triangle_6pt()] {
            let d = rule.degree();
            let m = sq.with_rule(rule).unwrap();
            let f = QuadField(m.qp_coords().iter().map(|p| p[0].powi(d as i32)).collect());
            let exact = 1.0 / (d as f64 + 1.0);
            assert!((m.integrate(&f).unwrap() - exact).abs() < 1e-12, "degree {d}");
        }
        assert!(sq.with_rule(QuadRule::gauss_1d(3).unwrap()).is_err());
    }
}
