//! Finite element matrices and load vectors for piecewise linear elements.
//!
//! Stiffness and mass matrices use closed-form element matrices; quadrature
//! is only used for load vectors. Everything is assembled on the full node
//! set and restricted to interior nodes afterwards.

use crate::error::{invalid, Error, Result};
use crate::field::ScalarField;
use crate::mesh::Mesh;
use crate::quadrature::{for_each_point, QuadratureRule};
use crate::sparse::CsrMatrix;

/// Gradients of the three barycentric coordinates of a triangle, and its
/// area. Fails on non-positive area.
pub fn p1_gradients(verts: &[[f64; 2]; 3], element: usize) -> Result<([[f64; 2]; 3], f64)> {
    let area = crate::mesh::signed_area(verts);
    if !(area > 0.0) {
        return Err(Error::DegenerateElement { element, area });
    }
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        g[i] = [
            (verts[j][1] - verts[k][1]) / (2.0 * area),
            (verts[k][0] - verts[j][0]) / (2.0 * area),
        ];
    }
    Ok((g, area))
}

fn assemble_elementwise<F>(mesh: &Mesh, mut element_matrix: F) -> Result<CsrMatrix>
where
    F: FnMut(usize, &[[f64; 2]; 3]) -> Result<[[f64; 3]; 3]>,
{
    let mut t = Vec::with_capacity(9 * mesh.num_elements());
    for (e, nodes) in mesh.elements().iter().enumerate() {
        let ke = element_matrix(e, &mesh.vertices(e))?;
        for a in 0..3 {
            for b in 0..3 {
                t.push((nodes[a], nodes[b], ke[a][b]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_nodes(), mesh.num_nodes(), t)
}

/// `K[j,k] = int grad phi_k . grad phi_j` on all nodes.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<CsrMatrix> {
    assemble_elementwise(mesh, |e, v| {
        let (g, area) = p1_gradients(v, e)?;
        let mut ke = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                ke[a][b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
        Ok(ke)
    })
}

/// `M[j,k] = int phi_k phi_j` on all nodes, from the exact element mass
/// matrix `|T|/12 [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn assemble_mass(mesh: &Mesh) -> Result<CsrMatrix> {
    assemble_elementwise(mesh, |e, v| {
        let area = crate::mesh::signed_area(v);
        if !(area > 0.0) {
            return Err(Error::DegenerateElement { element: e, area });
        }
        Ok(element_mass(area))
    })
}

pub fn element_mass(area: f64) -> [[f64; 3]; 3] {
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// Per-node quadrature approximation of `int f phi_j`.
pub fn assemble_load(mesh: &Mesh, f: &dyn ScalarField, rule: &QuadratureRule, subdivisions: usize) -> Vec<f64> {
    let mut load = vec![0.0; mesh.num_nodes()];
    for (e, nodes) in mesh.elements().iter().enumerate() {
        let mut local = [0.0; 3];
        for_each_point(&mesh.vertices(e), rule, subdivisions, |bary, p, w| {
            let fv = f.eval(p[0], p[1]) * w;
            for a in 0..3 {
                local[a] += fv * bary[a];
            }
        });
        for a in 0..3 {
            load[nodes[a]] += local[a];
        }
    }
    load
}

/// `B[j, l] = int_{tau_l} phi_j` for fine nodes `j` and coarse elements `l`.
///
/// Requires the fine mesh to refine the coarse one; each fine element is
/// assigned to the coarse element containing it and contributes `|T|/3` to
/// each of its vertices.
pub fn assemble_mixed_mass(fine: &Mesh, coarse: &Mesh) -> Result<CsrMatrix> {
    let (nf, nc) = (fine.n_per_side(), coarse.n_per_side());
    if nf % nc != 0 {
        return Err(invalid(format!("fine mesh ({nf}) does not refine coarse mesh ({nc})")));
    }
    let mut t = Vec::with_capacity(3 * fine.num_elements());
    for (e, nodes) in fine.elements().iter().enumerate() {
        let c = fine.centroid(e);
        let owner = coarse
            .locate(c[0], c[1])
            .ok_or_else(|| invalid(format!("fine element {e} outside coarse mesh")))?;
        for p in fine.vertices(e) {
            if coarse.barycentric(owner, p).iter().any(|&l| l < -1e-12) {
                return Err(invalid(format!("fine element {e} straddles coarse element {owner}")));
            }
        }
        let third = fine.signed_area(e) / 3.0;
        for &j in nodes {
            t.push((j, owner, third));
        }
    }
    CsrMatrix::from_triplets(fine.num_nodes(), coarse.num_elements(), t)
}

/// Drop boundary rows and columns; ordering follows `interior`.
pub fn restrict_matrix(a: &CsrMatrix, interior: &[usize]) -> CsrMatrix {
    a.principal_submatrix(interior)
}

/// Drop boundary rows only (rectangular matrices keep all columns).
pub fn restrict_rows(a: &CsrMatrix, interior: &[usize]) -> CsrMatrix {
    let cols: Vec<usize> = (0..a.ncols()).collect();
    a.submatrix(interior, &cols)
}

pub fn restrict_vector(v: &[f64], interior: &[usize]) -> Vec<f64> {
    interior.iter().map(|&i| v[i]).collect()
}

/// Embed interior values into a full nodal vector with zero boundary values.
pub fn extend_by_zero(values: &[f64], interior: &[usize], num_nodes: usize) -> Vec<f64> {
    let mut full = vec![0.0; num_nodes];
    for (&i, &v) in interior.iter().zip(values) {
        full[i] = v;
    }
    full
}

/// Nodal interpolant of `f`.
pub fn interpolate(mesh: &Mesh, f: &dyn ScalarField) -> Vec<f64> {
    mesh.nodes().iter().map(|p| f.eval(p[0], p[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::interior_indices;
    use crate::sparse::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn stiffness_kernel_and_symmetry() {
        for n in [1, 2, 5] {
            let m = Mesh::structured(n).unwrap();
            let k = assemble_stiffness(&m).unwrap();
            assert!(k.is_symmetric());
            let r = k.mul_vec(&vec![1.0; m.num_nodes()]);
            assert!(r.iter().all(|v| v.abs() < 1e-13));
        }
    }

    #[test]
    fn stiffness_center_entries_n2() {
        let m = Mesh::structured(2).unwrap();
        let k = assemble_stiffness(&m).unwrap();
        // node 4 = (0.5, 0.5), node 3 = (0, 0.5)
        assert!((k.get(4, 4) - 4.0).abs() < 1e-14);
        assert!((k.get(4, 3) + 1.0).abs() < 1e-14);
        let kr = restrict_matrix(&k, &interior_indices(&m));
        assert_eq!(kr.nrows(), 1);
        assert!((kr.get(0, 0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn mass_entries() {
        let m = Mesh::structured(2).unwrap();
        let mm = assemble_mass(&m).unwrap();
        assert!(mm.is_symmetric());
        let total: f64 = mm.triplets().map(|(_, _, v)| v).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let row_sum: f64 = mm.row(4).map(|(_, v)| v).sum();
        assert!((row_sum - 0.25).abs() < 1e-14);
        let mr = restrict_matrix(&mm, &interior_indices(&m));
        assert!((mr.get(0, 0) - 0.125).abs() < 1e-14);

        let reference = element_mass(0.5);
        assert!((reference[0][0] - 2.0 / 24.0).abs() < 1e-15);
        assert!((reference[0][1] - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_element_is_reported() {
        let v = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(matches!(
            p1_gradients(&v, 7),
            Err(Error::DegenerateElement { element: 7, .. })
        ));
    }

    #[test]
    fn definiteness_on_random_vectors() {
        let m = Mesh::structured(6).unwrap();
        let k = assemble_stiffness(&m).unwrap();
        let mm = assemble_mass(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x: Vec<f64> = (0..m.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(k.quadratic_form(&x) >= -1e-13);
            assert!(mm.quadratic_form(&x) > 0.0);
        }
    }

    #[test]
    fn galerkin_energy_matches_elementwise_gradients() {
        let m = Mesh::structured(7).unwrap();
        let k = assemble_stiffness(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v: Vec<f64> = (0..m.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // gradient of the linear interpolant from two edge difference quotients
        let mut energy = 0.0;
        for (e, nodes) in m.elements().iter().enumerate() {
            let p = m.vertices(e);
            let (a11, a12, a21, a22) = (
                p[1][0] - p[0][0],
                p[1][1] - p[0][1],
                p[2][0] - p[0][0],
                p[2][1] - p[0][1],
            );
            let (b1, b2) = (v[nodes[1]] - v[nodes[0]], v[nodes[2]] - v[nodes[0]]);
            let det = a11 * a22 - a12 * a21;
            let gx = (b1 * a22 - a12 * b2) / det;
            let gy = (a11 * b2 - b1 * a21) / det;
            energy += 0.5 * det.abs() * (gx * gx + gy * gy);
        }
        assert!((k.quadratic_form(&v) - energy).abs() < 1e-12 * energy.max(1.0));
    }

    #[test]
    fn load_of_constants() {
        let m = Mesh::structured(4).unwrap();
        let mm = assemble_mass(&m).unwrap();
        let one = |_: f64, _: f64| 1.0;
        let load = assemble_load(&m, &one, &QuadratureRule::degree5(), 1);
        let rows = mm.mul_vec(&vec![1.0; m.num_nodes()]);
        for (a, b) in load.iter().zip(&rows) {
            assert!((a - b).abs() < 1e-15);
        }
        let zero = |_: f64, _: f64| 0.0;
        assert!(assemble_load(&m, &zero, &QuadratureRule::degree5(), 2)
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn load_of_smooth_target_against_high_order_reference() {
        let m = Mesh::structured(2).unwrap();
        let f = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
        let coarse = assemble_load(&m, &f, &QuadratureRule::degree5(), 1);
        let load = assemble_load(&m, &f, &QuadratureRule::degree5(), 4);
        // reference: hat function of the centre node, integrated with a
        // degree-10 collapsed Gauss rule over its six supporting triangles
        let hi = QuadratureRule::collapsed_gauss(10);
        let mut reference = 0.0;
        for (e, nodes) in m.elements().iter().enumerate() {
            let Some(local) = nodes.iter().position(|&j| j == 4) else {
                continue;
            };
            let v = m.vertices(e);
            let area = m.signed_area(e);
            for (q, w) in hi.points.iter().zip(&hi.weights) {
                let x = q[0] * v[0][0] + q[1] * v[1][0] + q[2] * v[2][0];
                let y = q[0] * v[0][1] + q[1] * v[1][1] + q[2] * v[2][1];
                reference += area * w * f(x, y) * q[local];
            }
        }
        assert!((coarse[4] - reference).abs() < 1e-3 * reference);
        assert!((load[4] - reference).abs() < 1e-6 * reference);
        assert!(reference > 0.0);
    }

    #[test]
    fn mixed_mass_properties() {
        let (coarse, fine) = crate::mesh::coarse_fine_pair(1).unwrap();
        let b = assemble_mixed_mass(&fine, &coarse).unwrap();
        assert_eq!((b.nrows(), b.ncols()), (25, 2));
        assert!(b.triplets().all(|(_, _, v)| v >= 0.0));
        let sums = b.mul_vec_transpose(&vec![1.0; fine.num_nodes()]);
        for (l, s) in sums.iter().enumerate() {
            assert!((s - coarse.signed_area(l)).abs() < 1e-12);
        }
        // (0.75, 0.25) sits strictly inside the lower-right coarse triangle
        let j = 1 * 5 + 3;
        assert!((b.get(j, 0) - 1.0 / 16.0).abs() < 1e-14);
        assert_eq!(b.get(j, 1), 0.0);
    }

    #[test]
    fn mixed_mass_rejects_non_nested() {
        let fine = Mesh::structured(5).unwrap();
        let coarse = Mesh::structured(2).unwrap();
        assert!(matches!(
            assemble_mixed_mass(&fine, &coarse),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn restriction_helpers() {
        let m = Mesh::structured(3).unwrap();
        let interior = interior_indices(&m);
        let v = vec![0.0; m.num_nodes()];
        assert!(restrict_vector(&v, &interior).iter().all(|&x| x == 0.0));
        let vals = [1.0, 2.0, 3.0, 4.0];
        let full = extend_by_zero(&vals, &interior, m.num_nodes());
        assert_eq!(restrict_vector(&full, &interior), vals);
        assert_eq!(dot(&full, &full), 30.0);
    }
}
