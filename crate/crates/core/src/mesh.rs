//! Structured simplicial meshes of the unit interval and unit square.
//!
//! Vertices are numbered lexicographically (x fastest). In 2D every grid
//! cell is split along its lower-left to upper-right diagonal, which gives
//! right triangles whose stiffness stencil never has positive off-diagonals.

use crate::error::{Error, Result};

/// A conforming simplicial triangulation of `(0,1)^d`, `d ∈ {1, 2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dimension: usize,
    vertices: Vec<[f64; 2]>,
    connectivity: Vec<usize>,
    interior_nodes: Vec<usize>,
    boundary_nodes: Vec<usize>,
    meshwidth: f64,
}

/// Per-element geometry: measure, barycenter and the gradients of the
/// barycentric coordinate functions (one per element vertex).
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    pub measure: f64,
    pub barycenter: [f64; 2],
    pub gradients: Vec<[f64; 2]>,
}

impl Mesh {
    /// Uniform mesh with `cells_per_side` cells along each axis.
    pub fn structured(dimension: usize, cells_per_side: usize) -> Result<Self> {
        match dimension {
            1 => {
                let n = cells_per_side;
                let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
                Self::from_interval_nodes(&xs)
            }
            2 => {
                let n = cells_per_side;
                if n < 2 {
                    return Err(Error::InvalidMesh(format!(
                        "{n} cells per side leaves no interior node"
                    )));
                }
                let idx = |i: usize, j: usize| j * (n + 1) + i;
                let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
                for j in 0..=n {
                    for i in 0..=n {
                        vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
                    }
                }
                let mut connectivity = Vec::with_capacity(6 * n * n);
                for j in 0..n {
                    for i in 0..n {
                        let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
                        connectivity.extend_from_slice(&[a, b, d]);
                        connectivity.extend_from_slice(&[a, d, c]);
                    }
                }
                Self::from_parts(2, vertices, connectivity)
            }
            d => Err(Error::InvalidMesh(format!("unsupported dimension {d}"))),
        }
    }

    /// 1D mesh with the given node coordinates, which must increase strictly
    /// from 0 to 1.
    pub fn from_interval_nodes(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 || xs[0] != 0.0 || xs[xs.len() - 1] != 1.0 {
            return Err(Error::InvalidMesh(
                "interval nodes must start at 0 and end at 1".into(),
            ));
        }
        let vertices = xs.iter().map(|&x| [x, 0.0]).collect();
        let connectivity = (0..xs.len() - 1).flat_map(|i| [i, i + 1]).collect();
        Self::from_parts(1, vertices, connectivity)
    }

    fn from_parts(dimension: usize, vertices: Vec<[f64; 2]>, connectivity: Vec<usize>) -> Result<Self> {
        let on_boundary = |v: &[f64; 2]| v[..dimension].iter().any(|&c| c == 0.0 || c == 1.0);
        let (boundary_nodes, interior_nodes): (Vec<usize>, Vec<usize>) =
            (0..vertices.len()).partition(|&i| on_boundary(&vertices[i]));
        if interior_nodes.is_empty() {
            return Err(Error::InvalidMesh("mesh has no interior nodes".into()));
        }
        let mut mesh = Mesh {
            dimension,
            vertices,
            connectivity,
            interior_nodes,
            boundary_nodes,
            meshwidth: 0.0,
        };
        let mut h: f64 = 0.0;
        for e in 0..mesh.num_elements() {
            let geom = mesh.element_geometry(e)?;
            let nodes = mesh.element(e);
            for (a, &p) in nodes.iter().enumerate() {
                for &q in &nodes[a + 1..] {
                    let (u, v) = (mesh.vertices[p], mesh.vertices[q]);
                    h = h.max(((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)).sqrt());
                }
            }
            debug_assert!(geom.measure > 0.0);
        }
        mesh.meshwidth = h;
        Ok(mesh)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.connectivity.len() / (self.dimension + 1)
    }

    /// Coordinates of vertex `i`, as a slice of length `dimension`.
    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i][..self.dimension]
    }

    /// Vertex indices of element `e`.
    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.dimension + 1;
        &self.connectivity[e * k..(e + 1) * k]
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Maximum element diameter.
    pub fn meshwidth(&self) -> f64 {
        self.meshwidth
    }

    /// Maps global vertex index to interior index, `None` for boundary vertices.
    pub fn interior_index(&self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.vertices.len()];
        for (k, &v) in self.interior_nodes.iter().enumerate() {
            map[v] = Some(k);
        }
        map
    }

    /// Index of the vertex at `x` (to 1e-12), if any.
    pub fn find_vertex(&self, x: &[f64]) -> Option<usize> {
        (0..self.vertices.len()).find(|&i| {
            self.vertex(i)
                .iter()
                .zip(x)
                .all(|(a, b)| (a - b).abs() <= 1e-12)
        })
    }

    pub fn element_geometry(&self, e: usize) -> Result<ElementGeometry> {
        let nodes = self.element(e);
        let p: Vec<[f64; 2]> = nodes.iter().map(|&i| self.vertices[i]).collect();
        match self.dimension {
            1 => {
                let len = p[1][0] - p[0][0];
                if !(len > 0.0) {
                    return Err(Error::DegenerateElement { element: e, measure: len });
                }
                Ok(ElementGeometry {
                    measure: len,
                    barycenter: [0.5 * (p[0][0] + p[1][0]), 0.0],
                    gradients: vec![[-1.0 / len, 0.0], [1.0 / len, 0.0]],
                })
            }
            _ => {
                let (d1, d2) = (
                    [p[1][0] - p[0][0], p[1][1] - p[0][1]],
                    [p[2][0] - p[0][0], p[2][1] - p[0][1]],
                );
                let det = d1[0] * d2[1] - d2[0] * d1[1];
                let area = 0.5 * det.abs();
                if !(area > 0.0) {
                    return Err(Error::DegenerateElement { element: e, measure: area });
                }
                let g1 = [d2[1] / det, -d2[0] / det];
                let g2 = [-d1[1] / det, d1[0] / det];
                let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
                Ok(ElementGeometry {
                    measure: area,
                    barycenter: [
                        (p[0][0] + p[1][0] + p[2][0]) / 3.0,
                        (p[0][1] + p[1][1] + p[2][1]) / 3.0,
                    ],
                    gradients: vec![g0, g1, g2],
                })
            }
        }
    }
}

/// `build_mesh` under its operational name.
pub fn build_mesh(dimension: usize, cells_per_side: usize) -> Result<Mesh> {
    Mesh::structured(dimension, cells_per_side)
}

/// Largest normalized inner product between distinct barycentric gradients
/// of one element.
pub fn element_sigma(geom: &ElementGeometry) -> f64 {
    let g = &geom.gradients;
    let mut sigma = f64::NEG_INFINITY;
    for k in 0..g.len() {
        for m in 0..g.len() {
            if k == m {
                continue;
            }
            let dot = g[k][0] * g[m][0] + g[k][1] * g[m][1];
            let nk = g[k][0].hypot(g[k][1]);
            let nm = g[m][0].hypot(g[m][1]);
            sigma = sigma.max(dot / (nk * nm));
        }
    }
    sigma
}

/// Per-element σ values, in element order.
pub fn element_sigmas(mesh: &Mesh) -> Result<Vec<f64>> {
    (0..mesh.num_elements())
        .map(|e| mesh.element_geometry(e).map(|g| element_sigma(&g)))
        .collect()
}

/// σ(h): the maximum of [`element_sigma`] over the mesh. Non-obtuse
/// meshes have σ(h) ≤ 0.
pub fn mesh_sigma(mesh: &Mesh) -> Result<f64> {
    Ok(element_sigmas(mesh)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_counts() {
        let m = build_mesh(1, 4).unwrap();
        assert_eq!(m.num_vertices(), 5);
        assert_eq!(m.num_elements(), 4);
        assert_eq!(m.interior_nodes().len(), 3);
        assert_eq!(m.meshwidth(), 0.25);
    }

    #[test]
    fn square_counts() {
        let m = build_mesh(2, 2).unwrap();
        assert_eq!(m.num_vertices(), 9);
        assert_eq!(m.num_elements(), 8);
        assert_eq!(m.interior_nodes(), &[4]);
        assert!((m.meshwidth() - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(matches!(build_mesh(1, 1), Err(Error::InvalidMesh(_))));
        assert!(matches!(build_mesh(2, 1), Err(Error::InvalidMesh(_))));
        assert!(matches!(build_mesh(3, 4), Err(Error::InvalidMesh(_))));
        assert!(Mesh::from_interval_nodes(&[0.0, 0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn sigma_values() {
        for n in [2, 3, 8, 17] {
            assert_eq!(mesh_sigma(&build_mesh(1, n).unwrap()).unwrap(), -1.0);
            assert_eq!(mesh_sigma(&build_mesh(2, n).unwrap()).unwrap(), 0.0);
        }
        let m = Mesh::from_interval_nodes(&[0.0, 0.1, 0.15, 0.6, 1.0]).unwrap();
        assert_eq!(mesh_sigma(&m).unwrap(), -1.0);
        assert!((m.meshwidth() - 0.45).abs() < 1e-15);
    }

    #[test]
    fn boundary_partition_and_measure() {
        for (d, n) in [(1, 7), (2, 5), (2, 6)] {
            let m = build_mesh(d, n).unwrap();
            let mut all: Vec<usize> = m.interior_nodes().iter().chain(m.boundary_nodes()).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..m.num_vertices()).collect::<Vec<_>>());
            for &b in m.boundary_nodes() {
                assert!(m.vertex(b).iter().any(|&c| c == 0.0 || c == 1.0));
            }
            let total: f64 = (0..m.num_elements())
                .map(|e| m.element_geometry(e).unwrap().measure)
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn barycentric_partition_of_unity() {
        let m = build_mesh(2, 4).unwrap();
        for e in 0..m.num_elements() {
            let g = m.element_geometry(e).unwrap();
            let sum = g.gradients.iter().fold([0.0, 0.0], |s, v| [s[0] + v[0], s[1] + v[1]]);
            assert!(sum[0].abs() < 1e-12 && sum[1].abs() < 1e-12);
            // λ_k(p_m) = δ_km, so the affine λ_k evaluated at p_m via gradients sums to 1
            let nodes = m.element(e);
            let p0 = m.vertex(nodes[0]);
            for &vm in nodes {
                let pm = m.vertex(vm);
                let mut total = 0.0;
                for (k, &vk) in nodes.iter().enumerate() {
                    let at_p0 = if vk == nodes[0] { 1.0 } else { 0.0 };
                    let gk = g.gradients[k];
                    total += at_p0 + gk[0] * (pm[0] - p0[0]) + gk[1] * (pm[1] - p0[1]);
                }
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conforming_square() {
        use std::collections::HashMap;
        let m = build_mesh(2, 5).unwrap();
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for e in 0..m.num_elements() {
            let t = m.element(e);
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for ((a, b), count) in edges {
            let boundary_edge = m.boundary_nodes().contains(&a)
                && m.boundary_nodes().contains(&b)
                && m.vertex(a).iter().zip(m.vertex(b)).any(|(x, y)| x == y && (*x == 0.0 || *x == 1.0));
            assert_eq!(count, if boundary_edge { 1 } else { 2 });
        }
    }
}
