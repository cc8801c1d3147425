//! Structured conforming triangulations of the unit square.
//!
//! Nodes are numbered lexicographically by `(y, x)`: node `(i, j)` with
//! `x = i/n`, `y = j/n` has index `j * (n + 1) + i`. Every grid cell is cut
//! along its lower-left to upper-right diagonal, giving two counter-clockwise
//! triangles per cell.

use crate::error::{invalid, Error, Result};

/// Triangulation of `(0,1)^2` obtained from an `n x n` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    n_per_side: usize,
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    h: f64,
}

impl Mesh {
    /// Uniform mesh with `n` subdivisions per axis: `(n+1)^2` nodes and
    /// `2 n^2` elements.
    pub fn structured(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("mesh subdivision count must be at least 1"));
        }
        let np = n + 1;
        let mut nodes = Vec::with_capacity(np * np);
        let mut boundary = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                nodes.push([i as f64 / n as f64, j as f64 / n as f64]);
                boundary.push(i == 0 || j == 0 || i == n || j == n);
            }
        }
        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let a = j * np + i;
                let b = a + 1;
                let c = a + np + 1;
                let d = a + np;
                elements.push([a, b, c]);
                elements.push([a, c, d]);
            }
        }
        Ok(Self {
            n_per_side: n,
            nodes,
            elements,
            boundary,
            h: std::f64::consts::SQRT_2 / n as f64,
        })
    }

    pub fn n_per_side(&self) -> usize {
        self.n_per_side
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Largest element diameter, `sqrt(2)/n`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Grid spacing `1/n`. This is the mesh size used for the coupling
    /// `rho = h^2`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n_per_side as f64
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    /// Vertex coordinates of element `e`.
    pub fn vertices(&self, e: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.elements[e];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn signed_area(&self, e: usize) -> f64 {
        signed_area(&self.vertices(e))
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let v = self.vertices(e);
        [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0]
    }

    /// Length of the longest edge of element `e`.
    pub fn diameter(&self, e: usize) -> f64 {
        let v = self.vertices(e);
        (0..3).map(|k| dist(v[k], v[(k + 1) % 3])).fold(0.0, f64::max)
    }

    /// Radius of the inscribed circle of element `e`.
    pub fn inradius(&self, e: usize) -> f64 {
        let v = self.vertices(e);
        let perimeter: f64 = (0..3).map(|k| dist(v[k], v[(k + 1) % 3])).sum();
        2.0 * signed_area(&v).abs() / perimeter
    }

    /// Element containing the point `(x, y)`, using the grid structure.
    /// Points on shared edges resolve to the element with the smaller index
    /// inside the owning cell.
    pub fn locate(&self, x: f64, y: f64) -> Option<usize> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return None;
        }
        let n = self.n_per_side;
        let i = ((x * n as f64).floor() as usize).min(n - 1);
        let j = ((y * n as f64).floor() as usize).min(n - 1);
        let xi = x * n as f64 - i as f64;
        let eta = y * n as f64 - j as f64;
        let cell = j * n + i;
        Some(if eta <= xi { 2 * cell } else { 2 * cell + 1 })
    }

    /// Barycentric coordinates of `p` with respect to element `e`.
    pub fn barycentric(&self, e: usize, p: [f64; 2]) -> [f64; 3] {
        barycentric(&self.vertices(e), p)
    }
}

/// Ascending indices of all nodes not on the boundary. Its length is the
/// dimension of the discrete space with homogeneous Dirichlet conditions.
pub fn interior_indices(mesh: &Mesh) -> Vec<usize> {
    (0..mesh.num_nodes()).filter(|&i| !mesh.is_boundary(i)).collect()
}

/// `(coarse, fine)` with the fine mesh four times finer per axis, so that
/// `h = H/4` and every coarse element is a union of 16 fine elements.
pub fn coarse_fine_pair(n_coarse: usize) -> Result<(Mesh, Mesh)> {
    let coarse = Mesh::structured(n_coarse)?;
    let fine = Mesh::structured(4 * n_coarse)?;
    Ok((coarse, fine))
}

/// Check that every element has positive area, and return an error naming
/// the first that does not.
pub fn check_orientation(mesh: &Mesh) -> Result<()> {
    for e in 0..mesh.num_elements() {
        let area = mesh.signed_area(e);
        if !(area > 0.0) {
            return Err(Error::DegenerateElement { element: e, area });
        }
    }
    Ok(())
}

pub(crate) fn signed_area(v: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
}

pub(crate) fn barycentric(v: &[[f64; 2]; 3], p: [f64; 2]) -> [f64; 3] {
    let area = signed_area(v);
    let l1 = signed_area(&[v[0], p, v[2]]) / area;
    let l2 = signed_area(&[v[0], v[1], p]) / area;
    [1.0 - l1 - l2, l1, l2]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
