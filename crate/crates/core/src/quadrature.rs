//! Quadrature rules on triangles in barycentric form.

/// A rule with barycentric points and weights normalized to sum to one, so
/// that `|T| * sum_q w_q f(x_q)` approximates `int_T f`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    /// One-point centroid rule, exact for linear polynomials.
    pub fn centroid() -> Self {
        Self {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
            degree: 1,
        }
    }

    /// Seven-point rule of degree 5 (Radon).
    pub fn degree5() -> Self {
        let s15 = 15f64.sqrt();
        let a1 = (6.0 - s15) / 21.0;
        let b1 = (9.0 + 2.0 * s15) / 21.0;
        let w1 = (155.0 - s15) / 1200.0;
        let a2 = (6.0 + s15) / 21.0;
        let b2 = (9.0 - 2.0 * s15) / 21.0;
        let w2 = (155.0 + s15) / 1200.0;
        Self {
            points: vec![
                [1.0 / 3.0; 3],
                [b1, a1, a1],
                [a1, b1, a1],
                [a1, a1, b1],
                [b2, a2, a2],
                [a2, b2, a2],
                [a2, a2, b2],
            ],
            weights: vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2],
            degree: 5,
        }
    }

    /// Collapsed (Duffy) tensor Gauss-Legendre rule exact to `degree`.
    ///
    /// Uses `ceil((degree + 2) / 2)` points per direction. Intended for
    /// reference computations where the point count does not matter.
    pub fn collapsed_gauss(degree: usize) -> Self {
        let m = (degree + 3) / 2;
        let (x, w) = gauss_legendre(m);
        let mut points = Vec::with_capacity(m * m);
        let mut weights = Vec::with_capacity(m * m);
        for (xa, wa) in x.iter().zip(&w) {
            // s in (0,1) along the collapsed direction, Jacobian (1 - s).
            let s = 0.5 * (xa + 1.0);
            for (xb, wb) in x.iter().zip(&w) {
                let t = 0.5 * (xb + 1.0);
                let l1 = s;
                let l2 = (1.0 - s) * t;
                points.push([1.0 - l1 - l2, l1, l2]);
                // reference area 1/2; factor 1/4 from the two interval maps
                weights.push(wa * wb * 0.25 * (1.0 - s) * 2.0);
            }
        }
        Self {
            points,
            weights,
            degree,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Visit every quadrature point of element `verts`, after splitting it into
/// `subdivisions^2` congruent subtriangles.
///
/// The callback receives the barycentric coordinates with respect to the
/// parent element, the physical point, and the weight already multiplied by
/// the subtriangle area.
pub fn for_each_point<F>(verts: &[[f64; 2]; 3], rule: &QuadratureRule, subdivisions: usize, mut f: F)
where
    F: FnMut([f64; 3], [f64; 2], f64),
{
    let s = subdivisions.max(1);
    let area = crate::mesh::signed_area(verts).abs() / (s * s) as f64;
    let lattice = |i: usize, j: usize| -> [f64; 3] {
        let l1 = i as f64 / s as f64;
        let l2 = j as f64 / s as f64;
        [1.0 - l1 - l2, l1, l2]
    };
    let mut visit = |sub: [[f64; 3]; 3]| {
        for (q, w) in rule.points.iter().zip(&rule.weights) {
            let mut bary = [0.0; 3];
            for (k, qk) in q.iter().enumerate() {
                for c in 0..3 {
                    bary[c] += qk * sub[k][c];
                }
            }
            let x = bary[0] * verts[0][0] + bary[1] * verts[1][0] + bary[2] * verts[2][0];
            let y = bary[0] * verts[0][1] + bary[1] * verts[1][1] + bary[2] * verts[2][1];
            f(bary, [x, y], w * area);
        }
    };
    for j in 0..s {
        for i in 0..s - j {
            visit([lattice(i, j), lattice(i + 1, j), lattice(i, j + 1)]);
            if i + j + 2 <= s {
                visit([lattice(i + 1, j), lattice(i + 1, j + 1), lattice(i, j + 1)]);
            }
        }
    }
}

/// `int_T f` over a single triangle.
pub fn integrate<F>(verts: &[[f64; 2]; 3], rule: &QuadratureRule, subdivisions: usize, f: F) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let mut acc = 0.0;
    for_each_point(verts, rule, subdivisions, |_, p, w| acc += w * f(p[0], p[1]));
    acc
}
