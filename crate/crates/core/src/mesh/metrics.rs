//! Per-node Jacobians and inverse-Jacobian entries.
//!
//! The contravariant metrics are computed in conservative curl form,
//! J ∂ξ_r/∂x_c = -[∇_ξ × (X_l ∇_ξ X_m)]_r with (c, m, l) cyclic, so the
//! discrete metric identity Σ_r ∂_r(J ∂ξ_r/∂x_c) = 0 holds to roundoff
//! on curved elements too.

use super::{ColumnMesh, MeshError};
use crate::reference::{Matrix, ReferenceElement};

#[derive(Debug, Clone)]
pub struct MetricTerms {
    pub n1d: usize,
    /// Node coordinates, `[e * n³ + node]`.
    pub coords: Vec<[f64; 3]>,
    /// Volume Jacobian determinant per element node.
    pub jacobian: Vec<f64>,
    /// ∂ξ_r/∂x_c stored at `[r * 3 + c]` per element node.
    pub dxi_dx: Vec<[f64; 9]>,
}

impl MetricTerms {
    pub fn nodes_per_element(&self) -> usize {
        self.n1d.pow(3)
    }

    pub fn element_range(&self, e: usize) -> std::ops::Range<usize> {
        let npe = self.nodes_per_element();
        e * npe..(e + 1) * npe
    }
}

/// Apply a 1D operator (derivative or filter matrix) along reference
/// direction `dir` of a tensor-product nodal array.
pub fn apply_along(d: &Matrix, f: &[f64], dir: usize, out: &mut [f64]) {
    let n = d.size();
    let stride = [1, n, n * n][dir];
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let idx = i + n * (j + n * k);
                let pos = [i, j, k][dir];
                let base = idx - pos * stride;
                let row = d.row(pos);
                let mut s = 0.0;
                for (m, dm) in row.iter().enumerate() {
                    s += dm * f[base + m * stride];
                }
                out[idx] = s;
            }
        }
    }
}

pub fn compute_metrics(mesh: &ColumnMesh, re: &ReferenceElement) -> Result<MetricTerms, MeshError> {
    let n = re.n1d();
    let npe = n * n * n;
    let coords = mesh.node_coords(&re.points);
    let ne = mesh.n_elements();
    let mut jacobian = vec![0.0; ne * npe];
    let mut dxi_dx = vec![[0.0; 9]; ne * npe];

    let mut x = vec![vec![0.0; npe]; 3];
    // dx[c][r] = ∂X_c/∂ξ_r
    let mut dx = vec![vec![vec![0.0; npe]; 3]; 3];
    let mut v = vec![vec![0.0; npe]; 3];
    let mut dv = vec![0.0; npe];
    let mut ja = vec![[0.0; 9]; npe];

    for e in 0..ne {
        let base = e * npe;
        for node in 0..npe {
            for c in 0..3 {
                x[c][node] = coords[base + node][c];
            }
        }
        for c in 0..3 {
            for r in 0..3 {
                apply_along(&re.diff, &x[c], r, &mut dx[c][r]);
            }
        }
        for c in 0..3 {
            let m = (c + 1) % 3;
            let l = (c + 2) % 3;
            for s in 0..3 {
                for node in 0..npe {
                    v[s][node] = x[l][node] * dx[m][s][node];
                }
            }
            for a in ja.iter_mut() {
                for r in 0..3 {
                    a[r * 3 + c] = 0.0;
                }
            }
            // curl_r = ∂_{r+1} V_{r+2} - ∂_{r+2} V_{r+1}
            for r in 0..3 {
                let p = (r + 1) % 3;
                let q = (r + 2) % 3;
                apply_along(&re.diff, &v[q], p, &mut dv);
                for node in 0..npe {
                    ja[node][r * 3 + c] -= dv[node];
                }
                apply_along(&re.diff, &v[p], q, &mut dv);
                for node in 0..npe {
                    ja[node][r * 3 + c] += dv[node];
                }
            }
        }
        for node in 0..npe {
            let a = |c: usize, r: usize| dx[c][r][node];
            let det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
            if !(det > 0.0) {
                return Err(MeshError::InvertedElement { element: e, node, jacobian: det });
            }
            jacobian[base + node] = det;
            let mut out = [0.0; 9];
            for (o, j) in out.iter_mut().zip(ja[node]) {
                *o = j / det;
            }
            dxi_dx[base + node] = out;
        }
    }
    Ok(MetricTerms { n1d: n, coords, jacobian, dxi_dx })
}
