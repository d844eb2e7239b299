//! One-dimensional Gauss-Lobatto-Legendre operators.
//!
//! Everything three-dimensional in the solver is a tensor product of the
//! operators built here: Lobatto nodes and weights, the nodal
//! differentiation matrix, the Legendre Vandermonde pair and the
//! Boyd-Vandeven modal filter.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReferenceError {
    #[error("polynomial order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("node index {index} out of range for {count} nodes")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("filter parameter out of range: {0}")]
    FilterParameter(String),
    #[error("singular matrix in Gaussian elimination")]
    Singular,
}

/// Dense row-major square matrix. Sizes here never exceed 17x17.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Matrix, ReferenceError> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Matrix::identity(n).data;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
                .unwrap();
            if a[pivot * n + col].abs() < 1e-300 {
                return Err(ReferenceError::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                    inv.swap(col * n + j, pivot * n + j);
                }
            }
            let d = a[col * n + col];
            for j in 0..n {
                a[col * n + j] /= d;
                inv[col * n + j] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[r * n + j] -= f * a[col * n + j];
                    inv[r * n + j] -= f * inv[col * n + j];
                }
            }
        }
        Ok(Matrix { n, data: inv })
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Legendre polynomial P_n(x) and its derivative, by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let dp = if (x * x - 1.0).abs() < 1e-14 {
        // P_n'(±1) = (±1)^(n-1) n(n+1)/2
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p - p_prev) / (x * x - 1.0)
    };
    (p, dp)
}

/// Lobatto nodes (ascending, endpoints ±1) and quadrature weights for order `p`.
///
/// Interior nodes are roots of (1-x²)P'_p(x), found by Newton iteration from
/// Chebyshev-Gauss-Lobatto guesses and then symmetrized.
pub fn lobatto_points(p: usize) -> Result<(Vec<f64>, Vec<f64>), ReferenceError> {
    if p < 1 {
        return Err(ReferenceError::InvalidOrder(p));
    }
    let n = p + 1;
    let pf = p as f64;
    let mut x: Vec<f64> = (0..n)
        .map(|i| -(std::f64::consts::PI * i as f64 / pf).cos())
        .collect();
    x[0] = -1.0;
    x[p] = 1.0;
    for xi in x.iter_mut().take(p).skip(1) {
        for _ in 0..100 {
            // Newton on (1-x²)P'_p written as p (P_{p-1} - x P_p)
            let (pp, _) = legendre(p, *xi);
            let (pm, _) = legendre(p - 1, *xi);
            let dx = (*xi * pp - pm) / (n as f64 * pp);
            *xi -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
    }
    for i in 0..n / 2 {
        let s = (x[p - i] - x[i]) / 2.0;
        x[i] = -s;
        x[p - i] = s;
    }
    if n % 2 == 1 {
        x[p / 2] = 0.0;
    }
    let w = x
        .iter()
        .map(|&xi| {
            let (pp, _) = legendre(p, xi);
            2.0 / (pf * (pf + 1.0) * pp * pp)
        })
        .collect();
    Ok((x, w))
}

/// Value of the i-th Lagrange basis polynomial through `points` at `xi`.
/// Zero outside [-1, 1].
pub fn lagrange_eval(points: &[f64], i: usize, xi: f64) -> Result<f64, ReferenceError> {
    if i >= points.len() {
        return Err(ReferenceError::IndexOutOfRange { index: i, count: points.len() });
    }
    if !(-1.0..=1.0).contains(&xi) {
        return Ok(0.0);
    }
    Ok(points
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != i)
        .map(|(_, &xm)| (xi - xm) / (points[i] - xm))
        .product())
}

/// D[i][m] = ψ'_m(ξ_i), built from barycentric weights. The diagonal is set
/// to minus the off-diagonal row sum so constants differentiate to zero.
pub fn diff_matrix(points: &[f64]) -> Matrix {
    let n = points.len();
    let bary: Vec<f64> = (0..n)
        .map(|j| {
            1.0 / (0..n)
                .filter(|&k| k != j)
                .map(|k| points[j] - points[k])
                .product::<f64>()
        })
        .collect();
    let mut d = Matrix::zeros(n);
    for i in 0..n {
        let mut sum = 0.0;
        for m in 0..n {
            if m != i {
                let v = bary[m] / bary[i] / (points[i] - points[m]);
                d[(i, m)] = v;
                sum += v;
            }
        }
        d[(i, i)] = -sum;
    }
    d
}

/// Legendre Vandermonde V[i][k] = P_k(ξ_i) and its inverse (nodal → modal).
pub fn legendre_vandermonde(points: &[f64]) -> Result<(Matrix, Matrix), ReferenceError> {
    let n = points.len();
    let mut v = Matrix::zeros(n);
    for (i, &x) in points.iter().enumerate() {
        for k in 0..n {
            v[(i, k)] = legendre(k, x).0;
        }
    }
    let inv = v.inverse()?;
    Ok((v, inv))
}

/// Boyd-Vandeven filter parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    /// Damping strength μ in [0, 1].
    pub strength: f64,
    /// Filter order s ≥ 1 (sharpness of the erfc-log transition).
    pub order: f64,
    /// First damped mode k_c; modes below are untouched.
    pub cutoff: usize,
}

impl FilterParams {
    /// Linear elements have nothing above the cutoff and are left unfiltered.
    pub fn default_for(p: usize) -> Self {
        Self {
            strength: if p < 2 { 0.0 } else { 0.05 },
            order: 12.0,
            cutoff: (2 * (p + 1)).div_ceil(3).min(p),
        }
    }
}

/// Damping weight of the Boyd-Vandeven erfc-log transfer function at the
/// normalized position θ ∈ [0, 1] above the cutoff: 0 at θ=0, 1 at θ=1.
pub fn boyd_vandeven_weight(theta: f64, order: f64) -> f64 {
    let theta = theta.clamp(0.0, 1.0);
    let d = theta - 0.5;
    if d.abs() < 1e-14 {
        return 0.5;
    }
    let q = 4.0 * d * d;
    if q >= 1.0 {
        return if d > 0.0 { 1.0 } else { 0.0 };
    }
    let chi = (-(1.0 - q).ln() / q).sqrt();
    0.5 * libm::erfc(-2.0 * order.sqrt() * chi * d)
}

/// Modal transfer coefficients σ_k, k = 0..=p.
pub fn filter_coefficients(p: usize, params: &FilterParams) -> Vec<f64> {
    (0..=p)
        .map(|k| {
            if k == 0 || k < params.cutoff {
                1.0
            } else {
                let theta = if p > params.cutoff {
                    (k - params.cutoff) as f64 / (p - params.cutoff) as f64
                } else {
                    1.0
                };
                1.0 - params.strength * boyd_vandeven_weight(theta, params.order)
            }
        })
        .collect()
}

/// Nodal filter F = V diag(σ) V⁻¹. Returns the exact identity when no mode is damped.
pub fn filter_matrix(points: &[f64], params: &FilterParams) -> Result<Matrix, ReferenceError> {
    let p = points.len() - 1;
    if !(0.0..=1.0).contains(&params.strength) {
        return Err(ReferenceError::FilterParameter(format!(
            "strength {} not in [0, 1]",
            params.strength
        )));
    }
    if params.order < 1.0 {
        return Err(ReferenceError::FilterParameter(format!("order {} < 1", params.order)));
    }
    if params.cutoff > p {
        return Err(ReferenceError::FilterParameter(format!(
            "cutoff {} exceeds polynomial order {p}",
            params.cutoff
        )));
    }
    let sigma = filter_coefficients(p, params);
    if sigma.iter().all(|&s| s == 1.0) {
        return Ok(Matrix::identity(p + 1));
    }
    let (v, vinv) = legendre_vandermonde(points)?;
    let mut vs = v.clone();
    for i in 0..=p {
        for k in 0..=p {
            vs[(i, k)] *= sigma[k];
        }
    }
    Ok(vs.mul(&vinv))
}

/// All 1D operators for one polynomial order, computed once at startup.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub order: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub diff: Matrix,
    pub filter: Matrix,
    pub filter_params: FilterParams,
}

impl ReferenceElement {
    pub fn new(order: usize) -> Result<Self, ReferenceError> {
        Self::with_filter(order, FilterParams::default_for(order))
    }

    pub fn with_filter(order: usize, filter_params: FilterParams) -> Result<Self, ReferenceError> {
        let (points, weights) = lobatto_points(order)?;
        let diff = diff_matrix(&points);
        let filter = filter_matrix(&points, &filter_params)?;
        Ok(Self { order, points, weights, diff, filter, filter_params })
    }

    /// Nodes per direction.
    pub fn n1d(&self) -> usize {
        self.order + 1
    }

    /// Nodes per hexahedral element.
    pub fn nodes_per_element(&self) -> usize {
        self.n1d().pow(3)
    }

    pub fn filter_is_identity(&self) -> bool {
        self.filter == Matrix::identity(self.n1d())
    }

    /// Smallest gap between adjacent Lobatto nodes on [-1, 1].
    pub fn min_gap(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}
