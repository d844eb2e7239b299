//! Explicit Runge-Kutta stepping and Courant-limited timestep selection.

use std::time::Instant;

use thiserror::Error;

use crate::dynamics::GasConstants;
use crate::mesh::{CgNumbering, MetricTerms};
use crate::storage::StateCg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeError {
    #[error("Runge-Kutta order conditions violated: {0:?}")]
    OrderConditions(OrderReport),
    #[error("malformed Butcher tableau: {0}")]
    Tableau(String),
    #[error("Courant numbers must be positive (horizontal {0}, vertical {1})")]
    ZeroCourant(f64, f64),
    #[error("non-finite wave speed at element {element}")]
    NonFinite { element: usize },
}

/// A semi-discrete system dq/dt = f(q) plus the per-stage and per-step
/// hooks of the time loop.
pub trait SemiDiscrete {
    type Error;

    fn rhs(&mut self, state: &[f64], out: &mut [f64]) -> Result<(), Self::Error>;

    fn apply_boundary(&self, _state: &mut [f64]) {}

    fn apply_filter(&mut self, _state: &mut [f64]) -> Result<(), Self::Error> {
        Ok(())
    }

    /// Wall time spent in stage updates, for phase accounting.
    fn record_update(&mut self, _seconds: f64) {}
}

/// Residuals of the third-order conditions plus explicitness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderReport {
    /// Σb − 1
    pub consistency: f64,
    /// b·c − 1/2
    pub second: f64,
    /// b·c² − 1/3
    pub third_bushy: f64,
    /// b·(A c) − 1/6
    pub third_tall: f64,
    /// Largest |a_ij| on or above the diagonal (must be zero).
    pub explicitness: f64,
}

impl OrderReport {
    pub fn max_residual(&self) -> f64 {
        [self.consistency, self.second, self.third_bushy, self.third_tall, self.explicitness]
            .iter()
            .fold(0.0, |m, r| m.max(r.abs()))
    }
}

pub const ORDER_TOLERANCE: f64 = 1e-13;

/// Explicit Runge-Kutta method in Butcher form, c = row sums of A.
#[derive(Debug, Clone, PartialEq)]
pub struct RkScheme {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl RkScheme {
    /// Build without checking the order conditions.
    pub fn from_tableau(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self, TimeError> {
        let s = b.len();
        if s == 0 || a.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(TimeError::Tableau(format!("A must be {s}×{s} to match b")));
        }
        let c = a.iter().map(|row| row.iter().sum()).collect();
        Ok(Self { a, b, c })
    }

    /// Build and require third order.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self, TimeError> {
        let scheme = Self::from_tableau(a, b)?;
        let report = verify_order_conditions(&scheme);
        if report.max_residual() > ORDER_TOLERANCE {
            return Err(TimeError::OrderConditions(report));
        }
        Ok(scheme)
    }

    /// Five-stage, third-order strong-stability-preserving method of Ruuth
    /// and Spiteri. A holds the published 14-digit decimals; b is the
    /// published vector corrected by a minimum-norm shift so the order
    /// conditions hold to machine precision for this A.
    pub fn ssp53() -> Self {
        let a21 = 0.377_268_915_117_10;
        let a4 = 0.163_522_940_897_71;
        let a = vec![
            vec![0.0; 5],
            vec![a21, 0.0, 0.0, 0.0, 0.0],
            vec![a21, a21, 0.0, 0.0, 0.0],
            vec![a4, a4, a4, 0.0, 0.0],
            vec![0.149_040_593_948_56, 0.148_312_733_847_24, 0.148_312_733_847_24, 0.342_176_968_500_08, 0.0],
        ];
        let b = vec![
            0.197_075_963_773_906_787_85,
            0.117_803_164_816_206_295_45,
            0.117_097_251_542_302_925_49,
            0.270_158_749_563_028_951_88,
            0.297_864_870_304_555_039_34,
        ];
        Self::new(a, b).expect("built-in scheme satisfies its order conditions")
    }

    pub fn forward_euler() -> Self {
        Self::from_tableau(vec![vec![0.0]], vec![1.0]).unwrap()
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }
}

pub fn verify_order_conditions(s: &RkScheme) -> OrderReport {
    let n = s.stages();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let c2: Vec<f64> = s.c.iter().map(|c| c * c).collect();
    let ac: Vec<f64> = s.a.iter().map(|row| dot(row, &s.c)).collect();
    let explicitness = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .map(|(i, j)| s.a[i][j].abs())
        .fold(0.0, f64::max);
    OrderReport {
        consistency: s.b.iter().sum::<f64>() - 1.0,
        second: dot(&s.b, &s.c) - 0.5,
        third_bushy: dot(&s.b, &c2) - 1.0 / 3.0,
        third_tall: dot(&s.b, &ac) - 1.0 / 6.0,
        explicitness,
    }
}

/// Stage buffers reused across steps.
#[derive(Debug, Clone)]
pub struct RkWorkspace {
    k: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl RkWorkspace {
    pub fn new(stages: usize, len: usize) -> Self {
        Self { k: vec![vec![0.0; len]; stages], y: vec![0.0; len] }
    }
}

/// One step: every stage forms its input, applies the wall conditions and
/// evaluates the right-hand side (element kernels, halo exchange, DSS);
/// after the stages the update is formed, then filtered and walls
/// re-applied. The vertical implicit-correction hook of split-explicit
/// schemes is not used: all stepping is fully explicit.
pub fn rk_step<S: SemiDiscrete>(
    scheme: &RkScheme,
    sys: &mut S,
    state: &mut [f64],
    dt: f64,
    ws: &mut RkWorkspace,
) -> Result<(), S::Error> {
    let stages = scheme.stages();
    for i in 0..stages {
        let t0 = Instant::now();
        ws.y.copy_from_slice(state);
        for j in 0..i {
            let a = scheme.a[i][j];
            if a != 0.0 {
                let f = dt * a;
                for (y, k) in ws.y.iter_mut().zip(&ws.k[j]) {
                    *y += f * k;
                }
            }
        }
        sys.apply_boundary(&mut ws.y);
        sys.record_update(t0.elapsed().as_secs_f64());
        sys.rhs(&ws.y, &mut ws.k[i])?;
    }
    let t0 = Instant::now();
    for (j, k) in ws.k.iter().enumerate() {
        let f = dt * scheme.b[j];
        for (s, kv) in state.iter_mut().zip(k) {
            *s += f * kv;
        }
    }
    sys.apply_boundary(state);
    sys.record_update(t0.elapsed().as_secs_f64());
    sys.apply_filter(state)?;
    sys.apply_boundary(state);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimestepControl {
    pub courant_h: f64,
    pub courant_v: f64,
}

impl Default for TimestepControl {
    fn default() -> Self {
        Self { courant_h: 0.7, courant_v: 0.7 }
    }
}

/// dt = min over nodes and directions of C_d Δ_d / (|u·t̂_d| + c), where Δ_d is
/// the distance to the adjacent node along reference direction d and c the
/// sound speed √(γP/ρ).
pub fn compute_dt(
    state: &StateCg,
    numbering: &CgNumbering,
    metrics: &MetricTerms,
    constants: &GasConstants,
    control: &TimestepControl,
) -> Result<f64, TimeError> {
    if !(control.courant_h > 0.0 && control.courant_v > 0.0) {
        return Err(TimeError::ZeroCourant(control.courant_h, control.courant_v));
    }
    let n = numbering.n1d;
    let npe = n * n * n;
    let ne = numbering.global_ids.len() / npe;
    let mut dt = f64::INFINITY;
    for e in 0..ne {
        let ids = numbering.element_ids(e);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let node = i + n * (j + n * k);
                    let q = state.node(ids[node]);
                    let c = constants
                        .sound_speed(q[0], q[4])
                        .map_err(|_| TimeError::NonFinite { element: e })?;
                    let x = metrics.coords[e * npe + node];
                    for (d, pos) in [i, j, k].into_iter().enumerate() {
                        let step = [1, n, n * n][d];
                        let nb = if pos + 1 < n { node + step } else { node - step };
                        let y = metrics.coords[e * npe + nb];
                        let t = [y[0] - x[0], y[1] - x[1], y[2] - x[2]];
                        let gap = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
                        let un = (q[1] * t[0] + q[2] * t[1] + q[3] * t[2]).abs() / (gap * q[0]);
                        let speed = un + c;
                        if !speed.is_finite() {
                            return Err(TimeError::NonFinite { element: e });
                        }
                        let courant = if d < 2 { control.courant_h } else { control.courant_v };
                        dt = dt.min(courant * gap / speed);
                    }
                }
            }
        }
    }
    Ok(dt)
}
