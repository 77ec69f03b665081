//! Regular simplex geometry of the latent space.
//!
//! The latent space for `n` classes is `R^(n-1)`. Its `n` unit vertices
//! `p_1..p_n` sum to zero, and the cone segment of class `k` is the set of
//! nonnegative combinations of the mirrored vertices `-p_i`, `i != k`. A point
//! belongs to segment `k` exactly when `p_k` is one of its nearest vertices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for the cone-membership oracle.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// The `n` vertices of a regular simplex centered at the origin of `R^(n-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexGeometry {
    vertices: Vec<Vec<f64>>,
}

impl SimplexGeometry {
    /// Builds the simplex for `n >= 2` classes.
    ///
    /// Vertex `i` is the `i`-th centered unit vector `e_i - 1/n` of `R^n`,
    /// rescaled to unit length and expressed in the Helmert orthonormal basis
    /// of the zero-sum hyperplane. Since the Helmert rows are orthogonal to the
    /// all-ones vector, this is column `i` of the basis times `sqrt(n/(n-1))`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!(
                "a simplex needs at least 2 classes, got {n}"
            )));
        }
        let scale = (n as f64 / (n - 1) as f64).sqrt();
        let mut vertices = vec![vec![0.0; n - 1]; n];
        // Helmert row r (1-based) is (1, .., 1, -r, 0, ..) / sqrt(r (r+1)),
        // with r leading ones.
        for r in 1..n {
            let norm = ((r * (r + 1)) as f64).sqrt();
            for (i, v) in vertices.iter_mut().enumerate() {
                let entry = match i.cmp(&r) {
                    std::cmp::Ordering::Less => 1.0,
                    std::cmp::Ordering::Equal => -(r as f64),
                    std::cmp::Ordering::Greater => 0.0,
                };
                v[r - 1] = entry / norm * scale;
            }
        }
        Ok(Self { vertices })
    }

    /// Rebuilds a geometry from stored vertices, checking the simplex invariants.
    pub fn from_vertices(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let n = vertices.len();
        if n < 2 || vertices.iter().any(|v| v.len() != n - 1) {
            return Err(Error::Domain(
                "vertex list must hold n vectors of length n-1".into(),
            ));
        }
        let g = Self { vertices };
        g.check_invariants(1e-9)?;
        Ok(g)
    }

    /// Number of classes.
    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    /// Latent dimension `n - 1`.
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertex(&self, k: usize) -> &[f64] {
        &self.vertices[k]
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Verifies zero sum, unit norms and the common inner product `-1/(n-1)`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let n = self.n();
        let d = self.dim();
        for c in 0..d {
            let s: f64 = self.vertices.iter().map(|v| v[c]).sum();
            if s.abs() > tol {
                return Err(Error::Domain(format!("vertex sum component {c} is {s}")));
            }
        }
        let g = -1.0 / (n as f64 - 1.0);
        for i in 0..n {
            for j in i..n {
                let ip = dot(&self.vertices[i], &self.vertices[j]);
                let want = if i == j { 1.0 } else { g };
                if (ip - want).abs() > tol {
                    return Err(Error::Domain(format!(
                        "<p_{i}, p_{j}> = {ip}, expected {want}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Inner products `<z, p_j>` for every vertex. They sum to zero.
    pub fn scores(&self, z: &[f64]) -> Vec<f64> {
        self.vertices.iter().map(|p| dot(z, p)).collect()
    }

    /// Label of the first segment containing `z`.
    ///
    /// Since all vertices have unit norm, `|z - p_l|^2 = |z|^2 + 1 - 2<z, p_l>`,
    /// so the nearest vertex is the one with the largest score. Comparing
    /// scores keeps exact ties exact (the origin scores 0 against every
    /// vertex). Ties go to the smallest index.
    pub fn nearest_vertex(&self, z: &[f64]) -> usize {
        debug_assert_eq!(z.len(), self.dim());
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (k, p) in self.vertices.iter().enumerate() {
            let s = dot(z, p);
            if s > best_score {
                best = k;
                best_score = s;
            }
        }
        best
    }

    /// Coefficients `c` with `z = sum_{i != k} c_i (-p_i)`, ordered by `i`
    /// with `k` skipped.
    pub fn cone_coefficients(&self, z: &[f64], k: usize) -> Result<Vec<f64>> {
        let n = self.n();
        if k >= n {
            return Err(Error::Domain(format!("segment {k} out of range for n = {n}")));
        }
        let d = self.dim();
        let cols: Vec<usize> = (0..n).filter(|&i| i != k).collect();
        let a = DMatrix::from_fn(d, d, |r, c| -self.vertices[cols[c]][r]);
        let b = DVector::from_column_slice(z);
        a.lu()
            .solve(&b)
            .map(|c| c.iter().copied().collect())
            .ok_or_else(|| Error::Singular(format!("cone basis of segment {k}")))
    }

    /// Literal cone-segment membership test: solves for the coefficients over
    /// the mirrored vertices and accepts when all are `>= -tol`.
    pub fn in_cone(&self, z: &[f64], k: usize, tol: f64) -> Result<bool> {
        let c = self.cone_coefficients(z, k)?;
        Ok(c.iter().all(|&ci| ci >= -tol))
    }

    /// Maps `z` into the open simplex: softmax of the vertex scores used as
    /// barycentric weights.
    pub fn compress(&self, z: &[f64]) -> Vec<f64> {
        let weights = softmax(&self.scores(z));
        self.combine(&weights)
    }

    /// Inverse of [`compress`](Self::compress). Fails on points on or outside
    /// the simplex boundary.
    pub fn decompress(&self, w: &[f64]) -> Result<Vec<f64>> {
        let b = self.barycentric(w);
        if let Some((j, &bj)) = b.iter().enumerate().find(|(_, &bj)| bj <= 0.0) {
            return Err(Error::Domain(format!(
                "point is not interior to the simplex (barycentric weight {j} = {bj})"
            )));
        }
        let n = self.n() as f64;
        let logs: Vec<f64> = b.iter().map(|v| v.ln()).collect();
        let mean = logs.iter().sum::<f64>() / n;
        let centered: Vec<f64> = logs.iter().map(|l| (l - mean) * (n - 1.0) / n).collect();
        Ok(self.combine(&centered))
    }

    /// Barycentric coordinates `b_k = ((n-1) <w, p_k> + 1) / n`.
    pub fn barycentric(&self, w: &[f64]) -> Vec<f64> {
        let n = self.n() as f64;
        self.vertices
            .iter()
            .map(|p| ((n - 1.0) * dot(w, p) + 1.0) / n)
            .collect()
    }

    /// `sum_j weights_j * p_j`.
    pub fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (p, &wj) in self.vertices.iter().zip(weights) {
            for (o, &pc) in out.iter_mut().zip(p) {
                *o += wj * pc;
            }
        }
        out
    }

    /// Returns a geometry whose vertex `perm[i]` is this geometry's vertex `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut vertices = self.vertices.clone();
        for (i, &to) in perm.iter().enumerate() {
            vertices[to] = self.vertices[i].clone();
        }
        Self { vertices }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softmax(s: &[f64]) -> Vec<f64> {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = s.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_fewer_than_two_classes() {
        assert!(matches!(SimplexGeometry::new(1), Err(Error::Domain(_))));
        assert!(SimplexGeometry::new(0).is_err());
    }

    #[test]
    fn binary_vertices_are_plus_minus_one() {
        let g = SimplexGeometry::new(2).unwrap();
        assert_eq!(g.vertices(), &[vec![1.0], vec![-1.0]]);
    }

    #[test]
    fn ternary_inner_products() {
        let g = SimplexGeometry::new(3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { -0.5 };
                assert_abs_diff_eq!(dot(g.vertex(i), g.vertex(j)), want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn invariants_hold_up_to_twelve() {
        for n in 2..=12 {
            let g = SimplexGeometry::new(n).unwrap();
            g.check_invariants(1e-12).unwrap();
        }
    }

    #[test]
    fn any_n_minus_one_vertices_are_independent() {
        for n in 2..=8 {
            let g = SimplexGeometry::new(n).unwrap();
            for skip in 0..n {
                let rows: Vec<&Vec<f64>> =
                    g.vertices().iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| v).collect();
                let gram = DMatrix::from_fn(n - 1, n - 1, |r, c| dot(rows[r], rows[c]));
                assert!(gram.determinant() > 1e-9, "n={n} skip={skip}");
            }
        }
    }

    #[test]
    fn vertex_is_nearest_to_itself() {
        let g = SimplexGeometry::new(4).unwrap();
        assert_eq!(g.nearest_vertex(g.vertex(2)), 2);
    }

    #[test]
    fn origin_goes_to_first_class() {
        for n in 2..=7 {
            let g = SimplexGeometry::new(n).unwrap();
            assert_eq!(g.nearest_vertex(&vec![0.0; n - 1]), 0);
        }
    }

    #[test]
    fn vertex_lies_on_its_central_ray() {
        for n in 2..=7 {
            let g = SimplexGeometry::new(n).unwrap();
            for k in 0..n {
                let c = g.cone_coefficients(g.vertex(k), k).unwrap();
                for ci in c {
                    // the vertices sum to zero, so p_k = sum over i != k of -p_i
                    assert_abs_diff_eq!(ci, 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn mirrored_vertex_is_outside_its_segment() {
        for n in 3..=7 {
            let g = SimplexGeometry::new(n).unwrap();
            for k in 0..n {
                let minus: Vec<f64> = g.vertex(k).iter().map(|v| -v).collect();
                let c = g.cone_coefficients(&minus, k).unwrap();
                assert!(c.iter().any(|&ci| ci < 0.0));
                assert!(!g.in_cone(&minus, k, MEMBERSHIP_TOL).unwrap());
            }
        }
    }

    #[test]
    fn origin_is_in_every_segment() {
        let g = SimplexGeometry::new(5).unwrap();
        for k in 0..5 {
            let c = g.cone_coefficients(&[0.0; 4], k).unwrap();
            assert!(c.iter().all(|&ci| ci.abs() < 1e-15));
            assert!(g.in_cone(&[0.0; 4], k, MEMBERSHIP_TOL).unwrap());
        }
    }

    #[test]
    fn segment_index_out_of_range() {
        let g = SimplexGeometry::new(3).unwrap();
        assert!(g.in_cone(&[0.0, 0.0], 3, MEMBERSHIP_TOL).is_err());
    }

    #[test]
    fn compress_origin_is_barycenter() {
        let g = SimplexGeometry::new(4).unwrap();
        let w = g.compress(&[0.0; 3]);
        assert!(w.iter().all(|v| v.abs() < 1e-15));
        for b in g.barycentric(&w) {
            assert_abs_diff_eq!(b, 0.25, epsilon = 1e-15);
        }
        assert_eq!(g.decompress(&w).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn decompress_of_compressed_vertex() {
        let g = SimplexGeometry::new(4).unwrap();
        let z = g.decompress(&g.compress(g.vertex(1))).unwrap();
        for (a, b) in z.iter().zip(g.vertex(1)) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn decompress_reproduces_given_weights() {
        let g = SimplexGeometry::new(3).unwrap();
        let b = [0.2, 0.3, 0.5];
        let w = g.combine(&b);
        let z = g.decompress(&w).unwrap();
        let back = g.barycentric(&g.compress(&z));
        for (x, y) in back.iter().zip(b) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn decompress_rejects_boundary() {
        let g = SimplexGeometry::new(3).unwrap();
        assert!(g.decompress(g.vertex(0)).is_err());
        let outside: Vec<f64> = g.vertex(0).iter().map(|v| 2.0 * v).collect();
        assert!(g.decompress(&outside).is_err());
    }

    #[test]
    fn barycentric_of_vertex_and_center() {
        let g = SimplexGeometry::new(5).unwrap();
        let b = g.barycentric(g.vertex(0));
        assert_abs_diff_eq!(b[0], 1.0, epsilon = 1e-12);
        for v in &b[1..] {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }
        for v in g.barycentric(&[0.0; 4]) {
            assert_abs_diff_eq!(v, 0.2, epsilon = 1e-15);
        }
    }

    #[test]
    fn permuted_geometry_moves_vertices() {
        let g = SimplexGeometry::new(3).unwrap();
        let h = g.permuted(&[2, 0, 1]);
        assert_eq!(h.vertex(2), g.vertex(0));
        assert_eq!(h.vertex(0), g.vertex(1));
        assert_eq!(h.vertex(1), g.vertex(2));
    }
}
