//! Piecewise-linear finite elements for `−∇·(a(·,z)∇u) = ℓ(·,w)` with
//! homogeneous Dirichlet data.
//!
//! Stiffness uses one-point (barycenter) quadrature of the coefficient, so
//! each element matrix is `a(x_e, z)` times a purely geometric matrix and the
//! sign pattern of the latter carries over for every `z`. Loads use a
//! degree-2 exact rule (2-point Gauss in 1D, 3 interior points in 2D).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FieldSpec, ScalarField};
use crate::mesh::Mesh;

/// Relative tolerance used by [`verify_nonnegative_type`].
pub const SIGN_TOLERANCE: f64 = 1e-12;
/// Relative residual bound enforced by every solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Row-compressed sparsity of the interior-rows × all-nodes block.
#[derive(Debug, Clone, PartialEq)]
struct Pattern {
    n: usize,
    row_ptr: Vec<usize>,
    /// Global node index of each stored entry.
    cols: Vec<usize>,
    /// Interior index of each stored entry's column, if interior.
    col_interior: Vec<Option<usize>>,
    diag: Vec<usize>,
}

/// Stiffness matrix restricted to interior rows. Columns against boundary
/// nodes are kept so the full row sums can be checked.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
    full_row_sums: Vec<f64>,
}

impl SparseSystem {
    /// Square system with no boundary columns, from dense rows.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("dense matrix must be square and nonempty".into()));
        }
        let mut row_ptr = vec![0];
        let (mut cols, mut col_interior, mut values, mut diag) = (vec![], vec![], vec![], vec![]);
        for (k, row) in rows.iter().enumerate() {
            for (m, &v) in row.iter().enumerate() {
                if v != 0.0 || m == k {
                    if m == k {
                        diag.push(cols.len());
                    }
                    cols.push(m);
                    col_interior.push(Some(m));
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        let full_row_sums = rows.iter().map(|r| r.iter().sum()).collect();
        Ok(SparseSystem {
            pattern: Arc::new(Pattern {
                n,
                row_ptr,
                cols,
                col_interior,
                diag,
            }),
            values,
            full_row_sums,
        })
    }

    /// Number of interior unknowns.
    pub fn dimension(&self) -> usize {
        self.pattern.n
    }

    /// Sum over all node columns (boundary included) of each interior row.
    pub fn full_row_sums(&self) -> &[f64] {
        &self.full_row_sums
    }

    pub fn diagonal(&self, k: usize) -> f64 {
        self.values[self.pattern.diag[k]]
    }

    /// Entries of interior row `k` as `(global column, interior column, value)`.
    pub fn row(&self, k: usize) -> impl Iterator<Item = (usize, Option<usize>, f64)> + '_ {
        let p = &self.pattern;
        (p.row_ptr[k]..p.row_ptr[k + 1]).map(move |i| (p.cols[i], p.col_interior[i], self.values[i]))
    }

    /// Interior-block entry `A[k][m]`.
    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.row(k)
            .find(|&(_, c, _)| c == Some(m))
            .map_or(0.0, |(_, _, v)| v)
    }

    /// `A x` over the interior block.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dimension())
            .map(|k| {
                self.row(k)
                    .filter_map(|(_, c, v)| c.map(|m| v * x[m]))
                    .sum()
            })
            .collect()
    }

    /// Cholesky factor of the interior block.
    pub fn factor(&self) -> Result<BandCholesky> {
        BandCholesky::factor(self)
    }
}

/// Dense-band Cholesky factor `A = L Lᵀ`. With lexicographic node numbering
/// the band holds all fill, so this is exact sparse factorization.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    // row k stores L[k][k-bw..=k]
    band: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(system: &SparseSystem) -> Result<Self> {
        let n = system.dimension();
        let mut bw = 0;
        for k in 0..n {
            for (_, c, _) in system.row(k) {
                if let Some(m) = c {
                    bw = bw.max(k.abs_diff(m));
                }
            }
        }
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for k in 0..n {
            for (_, c, v) in system.row(k) {
                if let Some(m) = c {
                    if m <= k {
                        band[k * w + bw + m - k] = v;
                    }
                }
            }
        }
        for k in 0..n {
            let start = k.saturating_sub(bw);
            for m in start..=k {
                let lo = start.max(m.saturating_sub(bw));
                let mut s = band[k * w + bw + m - k];
                for p in lo..m {
                    s -= band[k * w + bw + p - k] * band[m * w + bw + p - m];
                }
                if m == k {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { pivot: k, value: s });
                    }
                    band[k * w + bw] = s.sqrt();
                } else {
                    band[k * w + bw + m - k] = s / band[m * w + bw];
                }
            }
        }
        Ok(BandCholesky { n, bw, band })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let l = |k: usize, m: usize| self.band[k * w + bw + m - k];
        let mut y = rhs.to_vec();
        for k in 0..n {
            let mut s = y[k];
            for p in k.saturating_sub(bw)..k {
                s -= l(k, p) * y[p];
            }
            y[k] = s / l(k, k);
        }
        for k in (0..n).rev() {
            let mut s = y[k];
            for p in k + 1..(k + bw + 1).min(n) {
                s -= l(p, k) * y[p];
            }
            y[k] = s / l(k, k);
        }
        y
    }
}

fn solve_checked(system: &SparseSystem, factor: &BandCholesky, rhs: &[f64]) -> Result<Vec<f64>> {
    let u = factor.solve(rhs);
    let r = system.matvec(&u);
    let residual = r.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let bound = RESIDUAL_TOLERANCE * rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
    if !(residual <= bound) {
        return Err(Error::Residual { residual, bound });
    }
    Ok(u)
}

/// Solves `A U = L`, rejecting non-SPD input and residuals above
/// [`RESIDUAL_TOLERANCE`]`·‖L‖₂`.
pub fn solve_system(system: &SparseSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != system.dimension() {
        return Err(Error::DimensionMismatch {
            what: "right-hand side",
            expected: system.dimension(),
            got: rhs.len(),
        });
    }
    solve_checked(system, &system.factor()?, rhs)
}

/// Outcome of the nonnegative-type sign checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonnegativeTypeReport {
    pub diag_ok: bool,
    pub offdiag_ok: bool,
    pub rowsum_ok: bool,
    /// Largest amount by which any condition is violated (0 when none is).
    pub worst_violation: f64,
}

impl NonnegativeTypeReport {
    pub fn passed(&self) -> bool {
        self.diag_ok && self.offdiag_ok && self.rowsum_ok
    }
}

/// Checks `A_kk > 0`, `A_km ≤ 0` (boundary columns included) and
/// `Σ_m A_km ≥ 0` over all node columns. The ≤/≥ comparisons allow
/// [`SIGN_TOLERANCE`] relative to the row's diagonal.
pub fn verify_nonnegative_type(system: &SparseSystem) -> NonnegativeTypeReport {
    let mut report = NonnegativeTypeReport {
        diag_ok: true,
        offdiag_ok: true,
        rowsum_ok: true,
        worst_violation: 0.0,
    };
    for k in 0..system.dimension() {
        let d = system.diagonal(k);
        if !(d > 0.0) {
            report.diag_ok = false;
            report.worst_violation = report.worst_violation.max(-d);
        }
        let tol = SIGN_TOLERANCE * d.abs();
        for (_, c, v) in system.row(k) {
            if c != Some(k) {
                if v > tol {
                    report.offdiag_ok = false;
                }
                report.worst_violation = report.worst_violation.max(v);
            }
        }
        let sum = system.full_row_sums[k];
        if sum < -tol {
            report.rowsum_ok = false;
        }
        report.worst_violation = report.worst_violation.max(-sum);
    }
    report
}

/// Linear functional applied to the FE solution.
#[derive(Debug, Clone, PartialEq)]
pub enum Qoi {
    /// `∫_D v`.
    MeanValue,
    /// `v(x*)` at an interior mesh vertex.
    PointValue(Vec<f64>),
    /// `∫_D g v` for `g ≥ 0`, not identically zero.
    WeightedMean(ScalarField),
}

impl Qoi {
    /// Representation of the functional on interior nodal values: `G(u_h) = q·U`.
    pub fn weights(&self, mesh: &Mesh) -> Result<Vec<f64>> {
        let interior = mesh.interior_index();
        match self {
            Qoi::MeanValue => {
                let mut q = vec![0.0; mesh.interior_nodes().len()];
                let share = 1.0 / (mesh.dimension() + 1) as f64;
                for e in 0..mesh.num_elements() {
                    let measure = mesh.element_geometry(e)?.measure;
                    for &v in mesh.element(e) {
                        if let Some(k) = interior[v] {
                            q[k] += share * measure;
                        }
                    }
                }
                Ok(q)
            }
            Qoi::PointValue(x) => {
                if x.len() != mesh.dimension() {
                    return Err(Error::DimensionMismatch {
                        what: "QoI point",
                        expected: mesh.dimension(),
                        got: x.len(),
                    });
                }
                let v = mesh
                    .find_vertex(x)
                    .ok_or_else(|| Error::InvalidQoi(format!("{x:?} is not a mesh vertex")))?;
                let k = interior[v]
                    .ok_or_else(|| Error::InvalidQoi(format!("{x:?} lies on the boundary")))?;
                let mut q = vec![0.0; mesh.interior_nodes().len()];
                q[k] = 1.0;
                Ok(q)
            }
            Qoi::WeightedMean(g) => {
                let (_, hi) = g.bounds(mesh.dimension());
                if crate::field::sampled_min(g, mesh.dimension()) < 0.0 || !(hi > 0.0) {
                    return Err(Error::InvalidQoi(format!("weight `{g}` must be nonnegative and nonzero")));
                }
                assemble_load(mesh, g)
            }
        }
    }
}

/// `G(u_h)` from interior nodal coefficients (boundary values are zero).
pub fn apply_qoi(qoi: &Qoi, mesh: &Mesh, coeffs: &[f64]) -> Result<f64> {
    let q = qoi.weights(mesh)?;
    if coeffs.len() != q.len() {
        return Err(Error::DimensionMismatch {
            what: "nodal coefficients",
            expected: q.len(),
            got: coeffs.len(),
        });
    }
    Ok(dot(&q, coeffs))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quadrature points (physical coordinates) and weights on element `e`, with
/// the barycentric coordinates of each point.
fn load_quadrature(mesh: &Mesh, e: usize) -> Result<Vec<([f64; 2], f64, [f64; 3])>> {
    let geom = mesh.element_geometry(e)?;
    let nodes = mesh.element(e);
    let p = |i: usize| {
        let v = mesh.vertex(nodes[i]);
        [v[0], v.get(1).copied().unwrap_or(0.0)]
    };
    let rule: Vec<([f64; 3], f64)> = match mesh.dimension() {
        1 => {
            let g = 0.5 / 3f64.sqrt();
            vec![([0.5 + g, 0.5 - g, 0.0], 0.5), ([0.5 - g, 0.5 + g, 0.0], 0.5)]
        }
        _ => {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            vec![([a, b, b], 1.0 / 3.0), ([b, a, b], 1.0 / 3.0), ([b, b, a], 1.0 / 3.0)]
        }
    };
    Ok(rule
        .into_iter()
        .map(|(lambda, w)| {
            let mut x = [0.0; 2];
            for (i, &l) in lambda.iter().enumerate().take(nodes.len()) {
                let pi = p(i);
                x[0] += l * pi[0];
                x[1] += l * pi[1];
            }
            (x, w * geom.measure, lambda)
        })
        .collect())
}

/// `L_k = ∫_D field · φ_k` over interior hat functions.
pub fn assemble_load(mesh: &Mesh, field: &ScalarField) -> Result<Vec<f64>> {
    let interior = mesh.interior_index();
    let mut load = vec![0.0; mesh.interior_nodes().len()];
    let d = mesh.dimension();
    for e in 0..mesh.num_elements() {
        for (x, w, lambda) in load_quadrature(mesh, e)? {
            let f = field.eval(&x[..d]);
            for (i, &v) in mesh.element(e).iter().enumerate() {
                if let Some(k) = interior[v] {
                    load[k] += w * f * lambda[i];
                }
            }
        }
    }
    Ok(load)
}

/// FE values of the QoI decomposition at one `z`:
/// `φ_h(w, z) = phibar + Σ_{i=0}^s w_i phi[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QoiComponents {
    pub phibar: f64,
    pub phi: Vec<f64>,
    pub z: Vec<f64>,
}

impl QoiComponents {
    /// Rejects non-finite values and `phi[0] ≤ 0`.
    pub fn new(phibar: f64, phi: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        if phi.is_empty() || !phibar.is_finite() || phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite or empty QoI components ({phibar}, {phi:?})"
            )));
        }
        if !(phi[0] > 0.0) {
            return Err(Error::Monotonicity { phi0: phi[0], z });
        }
        Ok(QoiComponents { phibar, phi, z })
    }

    pub fn s(&self) -> usize {
        self.phi.len() - 1
    }

    /// `φ_h(w, z)` for the full `w = (w_0, …, w_s)`.
    pub fn value(&self, w: &[f64]) -> f64 {
        self.phibar + dot(w, &self.phi)
    }
}

/// Everything about the discretization that does not depend on `z`:
/// sparsity, geometric element matrices, coefficient modes at barycenters,
/// the `s + 2` load vectors and the QoI weights.
#[derive(Debug, Clone)]
pub struct FeModel {
    mesh: Mesh,
    spec: FieldSpec,
    pattern: Arc<Pattern>,
    /// Per element, (d+1)² geometric stiffness entries `|e| ∇λ_a·∇λ_b`.
    element_matrices: Vec<f64>,
    /// Per element, (d+1)² slots into the pattern (`usize::MAX` for boundary rows).
    scatter: Vec<usize>,
    log_a0: Vec<f64>,
    /// Element-major `a_j(x_e)`, `s` per element.
    modes: Vec<f64>,
    /// Loads for ℓ̄, ℓ_0, …, ℓ_s.
    loads: Vec<Vec<f64>>,
    qoi_weights: Vec<f64>,
}

const NO_SLOT: usize = usize::MAX;

impl FeModel {
    pub fn new(mesh: &Mesh, spec: &FieldSpec, qoi: &Qoi) -> Result<Self> {
        let d = mesh.dimension();
        let k = d + 1;
        let interior = mesh.interior_index();
        let n = mesh.interior_nodes().len();

        let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in 0..mesh.num_elements() {
            let nodes = mesh.element(e);
            for &a in nodes {
                if let Some(r) = interior[a] {
                    neighbours[r].extend_from_slice(nodes);
                }
            }
        }
        let mut row_ptr = vec![0];
        let (mut cols, mut col_interior, mut diag) = (vec![], vec![], vec![]);
        for (r, nb) in neighbours.iter_mut().enumerate() {
            nb.sort_unstable();
            nb.dedup();
            for &c in nb.iter() {
                if interior[c] == Some(r) {
                    diag.push(cols.len());
                }
                cols.push(c);
                col_interior.push(interior[c]);
            }
            row_ptr.push(cols.len());
        }
        let pattern = Pattern {
            n,
            row_ptr,
            cols,
            col_interior,
            diag,
        };

        let s = spec.s();
        let mut element_matrices = Vec::with_capacity(mesh.num_elements() * k * k);
        let mut scatter = Vec::with_capacity(mesh.num_elements() * k * k);
        let mut log_a0 = Vec::with_capacity(mesh.num_elements());
        let mut modes = Vec::with_capacity(mesh.num_elements() * s);
        for e in 0..mesh.num_elements() {
            let geom = mesh.element_geometry(e)?;
            let nodes = mesh.element(e);
            for a in 0..k {
                for b in 0..k {
                    let (ga, gb) = (geom.gradients[a], geom.gradients[b]);
                    element_matrices.push(geom.measure * (ga[0] * gb[0] + ga[1] * gb[1]));
                    let slot = interior[nodes[a]].map_or(NO_SLOT, |r| {
                        let row = &pattern.cols[pattern.row_ptr[r]..pattern.row_ptr[r + 1]];
                        pattern.row_ptr[r] + row.binary_search(&nodes[b]).expect("pattern covers element")
                    });
                    scatter.push(slot);
                }
            }
            let xb = &geom.barycenter[..d];
            log_a0.push(spec.a0().eval(xb));
            modes.extend(spec.a_modes().iter().map(|m| m.eval(xb)));
        }

        let loads = std::iter::once(spec.ell_bar())
            .chain(spec.ell_modes())
            .map(|f| assemble_load(mesh, f))
            .collect::<Result<Vec<_>>>()?;
        let qoi_weights = qoi.weights(mesh)?;

        Ok(FeModel {
            mesh: mesh.clone(),
            spec: spec.clone(),
            pattern: Arc::new(pattern),
            element_matrices,
            scatter,
            log_a0,
            modes,
            loads,
            qoi_weights,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    /// Load vectors for ℓ̄, ℓ_0, …, ℓ_s.
    pub fn loads(&self) -> &[Vec<f64>] {
        &self.loads
    }

    pub fn qoi_weights(&self) -> &[f64] {
        &self.qoi_weights
    }

    /// Coefficient at each element barycenter.
    pub fn element_coefficients(&self, z: &[f64]) -> Result<Vec<f64>> {
        let s = self.spec.s();
        if z.len() != s {
            return Err(Error::DimensionMismatch {
                what: "z",
                expected: s,
                got: z.len(),
            });
        }
        Ok(self
            .log_a0
            .iter()
            .zip(self.modes.chunks_exact(s.max(1)))
            .map(|(a0, m)| (a0 + dot(z, m)).exp())
            .collect())
    }

    /// `A(z)` with boundary columns and full row sums.
    pub fn stiffness(&self, z: &[f64]) -> Result<SparseSystem> {
        let coeff = self.element_coefficients(z)?;
        Ok(self.stiffness_from_element_coefficients(&coeff))
    }

    fn stiffness_from_element_coefficients(&self, coeff: &[f64]) -> SparseSystem {
        let k2 = (self.mesh.dimension() + 1).pow(2);
        let mut values = vec![0.0; self.pattern.cols.len()];
        for (e, &a) in coeff.iter().enumerate() {
            let range = e * k2..(e + 1) * k2;
            for (&slot, &g) in self.scatter[range.clone()].iter().zip(&self.element_matrices[range]) {
                if slot != NO_SLOT {
                    values[slot] += a * g;
                }
            }
        }
        let full_row_sums = (0..self.pattern.n)
            .map(|r| values[self.pattern.row_ptr[r]..self.pattern.row_ptr[r + 1]].iter().sum())
            .collect();
        SparseSystem {
            pattern: Arc::clone(&self.pattern),
            values,
            full_row_sums,
        }
    }

    /// One assembly and factorization at `z`, then `s + 2` solves mapped
    /// through the QoI.
    pub fn components(&self, z: &[f64]) -> Result<QoiComponents> {
        let system = self.stiffness(z)?;
        let factor = system.factor()?;
        let mut values = Vec::with_capacity(self.loads.len());
        for load in &self.loads {
            let u = solve_checked(&system, &factor, load)?;
            values.push(dot(&self.qoi_weights, &u));
        }
        let phibar = values.remove(0);
        QoiComponents::new(phibar, values, z.to_vec())
    }
}

/// `A(z)` for the given mesh and field.
pub fn assemble_stiffness(mesh: &Mesh, spec: &FieldSpec, z: &[f64]) -> Result<SparseSystem> {
    FeModel::new(mesh, spec, &Qoi::MeanValue)?.stiffness(z)
}

/// QoI decomposition at `z`. Prefer [`FeModel::components`] when evaluating
/// many `z` on one mesh.
pub fn qoi_components(mesh: &Mesh, spec: &FieldSpec, qoi: &Qoi, z: &[f64]) -> Result<QoiComponents> {
    FeModel::new(mesh, spec, qoi)?.components(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use rand::{Rng, SeedableRng};

    fn unit_coefficient(s: usize) -> FieldSpec {
        FieldSpec::constant_fixture(s)
    }

    #[test]
    fn stiffness_hand_values() {
        let spec = unit_coefficient(1);
        let a = assemble_stiffness(&build_mesh(1, 2).unwrap(), &spec, &[0.3]).unwrap();
        assert_eq!(a.dimension(), 1);
        assert!((a.get(0, 0) - 4.0).abs() < 1e-12);

        let a = assemble_stiffness(&build_mesh(1, 4).unwrap(), &spec, &[0.0]).unwrap();
        for k in 0..3 {
            assert!((a.get(k, k) - 8.0).abs() < 1e-12);
            if k + 1 < 3 {
                assert!((a.get(k, k + 1) + 4.0).abs() < 1e-12);
                assert!((a.get(k + 1, k) + 4.0).abs() < 1e-12);
            }
        }
        assert_eq!(a.get(0, 2), 0.0);

        let a = assemble_stiffness(&build_mesh(2, 2).unwrap(), &spec, &[0.0]).unwrap();
        assert_eq!(a.dimension(), 1);
        assert!((a.get(0, 0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn load_hand_values() {
        let one = ScalarField::Constant(1.0);
        let l = assemble_load(&build_mesh(1, 4).unwrap(), &one).unwrap();
        assert!(l.iter().all(|v| (v - 0.25).abs() < 1e-15));
        let l = assemble_load(&build_mesh(2, 2).unwrap(), &one).unwrap();
        assert!((l[0] - 0.25).abs() < 1e-15);
        let l = assemble_load(&build_mesh(2, 5).unwrap(), &ScalarField::zero()).unwrap();
        assert!(l.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn load_integrates_quadratics_exactly() {
        // ∫ x² φ_k over a uniform 1D mesh, by exact integration of the piecewise cubic
        let n = 5;
        let h = 1.0 / n as f64;
        let l = assemble_load(&build_mesh(1, n).unwrap(), &ScalarField::Polynomial(vec![0.0, 0.0, 1.0])).unwrap();
        for (k, v) in l.iter().enumerate() {
            let xk = (k + 1) as f64 * h;
            let exact = h * xk * xk + h.powi(3) / 6.0;
            assert!((v - exact).abs() < 1e-15, "{k}: {v} vs {exact}");
        }
    }

    #[test]
    fn sign_conditions() {
        let spec = unit_coefficient(2);
        for n in [2, 5, 16] {
            let a = assemble_stiffness(&build_mesh(1, n).unwrap(), &spec, &[0.0, 0.0]).unwrap();
            let r = verify_nonnegative_type(&a);
            assert!(r.passed(), "{r:?}");
            let h = 1.0 / n as f64;
            let sums = a.full_row_sums();
            for s in sums {
                assert!(s.abs() < 1e-9 / h);
            }
        }
        let a = assemble_stiffness(&build_mesh(2, 6).unwrap(), &spec, &[0.0, 0.0]).unwrap();
        let r = verify_nonnegative_type(&a);
        assert!(r.passed(), "{r:?}");
        // the diagonal-edge neighbours of a right-triangle mesh couple with weight 0
        let zeros = (0..a.dimension())
            .flat_map(|k| a.row(k).filter(move |&(_, c, _)| c != Some(k)).map(|(_, _, v)| v))
            .filter(|v| v.abs() < 1e-12)
            .count();
        assert!(zeros > 0);

        let bad = SparseSystem::from_dense(&[vec![2.0, 0.5], vec![0.5, 2.0]]).unwrap();
        let r = verify_nonnegative_type(&bad);
        assert!(!r.offdiag_ok && r.diag_ok && r.rowsum_ok);
        assert_eq!(r.worst_violation, 0.5);
    }

    #[test]
    fn solve_examples() {
        let a = SparseSystem::from_dense(&[vec![4.0]]).unwrap();
        assert_eq!(solve_system(&a, &[0.5]).unwrap(), vec![0.125]);
        let id = SparseSystem::from_dense(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(solve_system(&id, &[1.0, -2.0, 3.5]).unwrap(), vec![1.0, -2.0, 3.5]);
        let zero = SparseSystem::from_dense(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(solve_system(&zero, &[1.0, 1.0]), Err(Error::NotPositiveDefinite { .. })));
        let indefinite = SparseSystem::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(solve_system(&indefinite, &[1.0, 1.0]), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn poisson_is_nodally_exact_in_1d() {
        // −u'' = 1 has u = x(1−x)/2, reproduced exactly at the nodes
        let mesh = build_mesh(1, 8).unwrap();
        let spec = unit_coefficient(1);
        let a = assemble_stiffness(&mesh, &spec, &[0.0]).unwrap();
        let l = assemble_load(&mesh, &ScalarField::Constant(1.0)).unwrap();
        let u = solve_system(&a, &l).unwrap();
        for (k, &node) in mesh.interior_nodes().iter().enumerate() {
            let x = mesh.vertex(node)[0];
            assert!((u[k] - 0.5 * x * (1.0 - x)).abs() < 1e-14);
        }
    }

    #[test]
    fn qoi_examples() {
        let mesh = build_mesh(1, 2).unwrap();
        assert!((apply_qoi(&Qoi::MeanValue, &mesh, &[0.125]).unwrap() - 0.0625).abs() < 1e-15);
        assert_eq!(apply_qoi(&Qoi::PointValue(vec![0.5]), &mesh, &[0.125]).unwrap(), 0.125);
        assert_eq!(apply_qoi(&Qoi::MeanValue, &mesh, &[0.0]).unwrap(), 0.0);
        assert!(matches!(apply_qoi(&Qoi::PointValue(vec![0.3]), &mesh, &[0.125]), Err(Error::InvalidQoi(_))));
        assert!(matches!(apply_qoi(&Qoi::PointValue(vec![1.0]), &mesh, &[0.125]), Err(Error::InvalidQoi(_))));
        assert!(Qoi::WeightedMean(ScalarField::sine(1.0, 2, 0.0)).weights(&mesh).is_err());
        let w = apply_qoi(&Qoi::WeightedMean(ScalarField::Constant(1.0)), &mesh, &[0.125]).unwrap();
        assert!((w - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn components_examples() {
        let mesh = build_mesh(1, 2).unwrap();
        let spec = unit_coefficient(2);
        let c = qoi_components(&mesh, &spec, &Qoi::MeanValue, &[0.0, 0.0]).unwrap();
        assert!((c.phi[0] - 0.0625).abs() < 1e-15);

        let mesh = build_mesh(1, 16).unwrap();
        let model = FeModel::new(&mesh, &spec, &Qoi::MeanValue).unwrap();
        let base = model.components(&[0.0, 0.0]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let z = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let c = model.components(&z).unwrap();
            assert_eq!(c.phibar, base.phibar);
            assert_eq!(c.phi, base.phi);
        }
        assert!(QoiComponents::new(0.0, vec![0.0, 1.0], vec![]).is_err());
        assert!(matches!(QoiComponents::new(0.0, vec![-1.0], vec![0.5]), Err(Error::Monotonicity { .. })));
    }

    #[test]
    fn galerkin_identities() {
        let spec = FieldSpec::lognormal_fixture(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for (d, n) in [(1, 32), (2, 8)] {
            let mesh = build_mesh(d, n).unwrap();
            let model = FeModel::new(&mesh, &spec, &Qoi::MeanValue).unwrap();
            for _ in 0..10 {
                let z: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
                let a = model.stiffness(&z).unwrap();
                for k in 0..a.dimension() {
                    for (_, c, v) in a.row(k) {
                        if let Some(m) = c {
                            assert_eq!(v, a.get(m, k));
                        }
                    }
                }
                for load in model.loads() {
                    let u = solve_system(&a, load).unwrap();
                    let energy = dot(&u, &a.matvec(&u));
                    let work = dot(&u, load);
                    assert!(energy.is_finite());
                    assert!((energy - work).abs() <= 1e-10 * work.abs().max(f64::MIN_POSITIVE), "{energy} vs {work}");
                }
            }
        }
    }

    #[test]
    fn stiffness_scales_with_constant_coefficient() {
        let c = 2.7f64;
        let spec_c = FieldSpec::new(
            ScalarField::Constant(c.ln()),
            vec![ScalarField::zero()],
            ScalarField::zero(),
            vec![ScalarField::Constant(1.0), ScalarField::zero()],
        )
        .unwrap();
        let spec_1 = unit_coefficient(1);
        for (d, n) in [(1, 9), (2, 5)] {
            let mesh = build_mesh(d, n).unwrap();
            let a1 = assemble_stiffness(&mesh, &spec_1, &[0.0]).unwrap();
            let ac = assemble_stiffness(&mesh, &spec_c, &[0.0]).unwrap();
            for k in 0..a1.dimension() {
                for ((_, _, x), (_, _, y)) in a1.row(k).zip(ac.row(k)) {
                    assert!((y - c * x).abs() <= 1e-12 * (c * x).abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn band_cholesky_matches_dense_solve() {
        let mesh = build_mesh(2, 7).unwrap();
        let spec = FieldSpec::lognormal_fixture(2);
        let a = assemble_stiffness(&mesh, &spec, &[1.0, -2.0]).unwrap();
        let n = a.dimension();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let u = solve_system(&a, &b).unwrap();
        // Gaussian elimination on the dense copy
        let mut m: Vec<Vec<f64>> = (0..n).map(|k| (0..n).map(|j| a.get(k, j)).collect()).collect();
        let mut x = b.clone();
        for p in 0..n {
            for r in p + 1..n {
                let f = m[r][p] / m[p][p];
                for c in p..n {
                    m[r][c] -= f * m[p][c];
                }
                x[r] -= f * x[p];
            }
        }
        for p in (0..n).rev() {
            let s: f64 = (p + 1..n).map(|c| m[p][c] * x[c]).sum();
            x[p] = (x[p] - s) / m[p][p];
        }
        for (a, b) in u.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
        }
    }
}
