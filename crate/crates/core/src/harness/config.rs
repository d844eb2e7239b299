//! Flat key-value run configuration, read from TOML-style text.
//!
//! Every key is optional; unknown keys are rejected so typos surface as
//! configuration errors instead of silently running the default.

use serde::Deserialize;

use super::HarnessError;
use crate::mesh::Mapping;
use crate::perf::{MachineModel, SimConfig};
use crate::reference::FilterParams;
use crate::storage::Scheme;
use crate::time::TimestepControl;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BubbleConfig {
    pub extent_x: f64,
    pub extent_y: f64,
    pub extent_z: f64,
    /// Background potential temperature, K.
    pub theta0: f64,
    /// Perturbation amplitude, K.
    pub theta_c: f64,
    /// Perturbation radius, m.
    pub radius: f64,
    pub center_x: f64,
    pub center_y: f64,
    pub center_z: f64,
    /// Columns per horizontal direction (powers of two) and layers per column.
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub order: usize,
    /// Relative amplitude of the sinusoidal warp of interior nodes; 0 keeps
    /// the elements affine.
    pub warp: f64,
    pub courant_h: f64,
    pub courant_v: f64,
    /// Number of steps; if absent, `end_time` decides.
    pub steps: Option<usize>,
    pub end_time: Option<f64>,
    /// Filter overrides; absent keys use the defaults for the order
    /// (strength 0.05, sharpness 12, first damped mode ⌈2(p+1)/3⌉).
    pub filter_strength: Option<f64>,
    pub filter_order: Option<f64>,
    pub filter_cutoff: Option<usize>,
    pub scheme: String,
    pub parts: usize,
    /// Keep a snapshot every this many steps (0: only the final state).
    pub snapshot_every: usize,
}

impl Default for BubbleConfig {
    fn default() -> Self {
        Self {
            extent_x: 1000.0,
            extent_y: 1000.0,
            extent_z: 1000.0,
            theta0: 300.0,
            theta_c: 0.5,
            radius: 250.0,
            center_x: 500.0,
            center_y: 500.0,
            center_z: 350.0,
            nx: 8,
            ny: 8,
            nz: 10,
            order: 3,
            warp: 0.0,
            courant_h: 0.7,
            courant_v: 0.7,
            steps: None,
            end_time: None,
            filter_strength: None,
            filter_order: None,
            filter_cutoff: None,
            scheme: "cg".into(),
            parts: 1,
            snapshot_every: 0,
        }
    }
}

pub const DEFAULT_STEPS: usize = 100;

impl BubbleConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn extent(&self) -> [f64; 3] {
        [self.extent_x, self.extent_y, self.extent_z]
    }

    pub fn center(&self) -> [f64; 3] {
        [self.center_x, self.center_y, self.center_z]
    }

    pub fn mapping(&self) -> Mapping {
        if self.warp == 0.0 {
            Mapping::Identity
        } else {
            Mapping::Warp { amplitude: self.warp }
        }
    }

    pub fn scheme(&self) -> Result<Scheme, HarnessError> {
        self.scheme.parse().map_err(|_| HarnessError::Config(format!("unknown scheme '{}'", self.scheme)))
    }

    pub fn filter(&self) -> FilterParams {
        let mut f = FilterParams::default_for(self.order);
        if let Some(s) = self.filter_strength {
            f.strength = s;
        }
        if let Some(o) = self.filter_order {
            f.order = o;
        }
        if let Some(c) = self.filter_cutoff {
            f.cutoff = c;
        }
        f
    }

    pub fn control(&self) -> TimestepControl {
        TimestepControl { courant_h: self.courant_h, courant_v: self.courant_v }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.extent().iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return bad("extents must be positive".into());
        }
        if !(self.theta0 > 0.0) {
            return bad(format!("theta0 must be positive, got {}", self.theta0));
        }
        if !(self.radius > 0.0) || !self.theta_c.is_finite() {
            return bad("radius must be positive and theta_c finite".into());
        }
        for (d, (&c, &l)) in self.center().iter().zip(&self.extent()).enumerate() {
            if c - self.radius < 0.0 || c + self.radius > l {
                return bad(format!("perturbation leaves the domain along axis {d}"));
            }
        }
        if self.nz == 0 || self.order == 0 || self.parts == 0 {
            return bad("nz, order and parts must be at least 1".into());
        }
        if !(self.courant_h > 0.0 && self.courant_v > 0.0) {
            return bad("Courant numbers must be positive".into());
        }
        if let Some(t) = self.end_time {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("end_time must be non-negative, got {t}"));
            }
        }
        self.scheme()?;
        Ok(())
    }

    /// Step count for a given dt: explicit `steps`, else enough steps to
    /// reach `end_time`, else the default.
    pub fn step_count(&self, dt: f64) -> usize {
        match (self.steps, self.end_time) {
            (Some(s), _) => s,
            (None, Some(t)) => (t / dt - 1e-9).ceil().max(0.0) as usize,
            (None, None) => DEFAULT_STEPS,
        }
    }
}

/// Performance-model scenario plus machine parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerfScenario {
    pub order: usize,
    pub ex: f64,
    pub ey: f64,
    pub ez: f64,
    pub machine_nodes: f64,
    pub steps: f64,
    pub stages: usize,
    pub vars: usize,
    /// One scheme, or every scheme when absent.
    pub scheme: Option<String>,
    pub metric_recompute: bool,
    /// Fit the calibration multipliers to the bubble reference totals.
    pub calibrate: bool,
    pub bandwidth: f64,
    pub peak_flops: f64,
    pub cache_line: f64,
    pub l2_bytes: f64,
}

impl Default for PerfScenario {
    fn default() -> Self {
        let b = crate::perf::presets::bubble(Scheme::Cg);
        let m = MachineModel::default();
        Self {
            order: b.order,
            ex: b.elements[0],
            ey: b.elements[1],
            ez: b.elements[2],
            machine_nodes: b.machine_nodes,
            steps: b.steps,
            stages: b.stages,
            vars: b.vars,
            scheme: None,
            metric_recompute: false,
            calibrate: true,
            bandwidth: m.bandwidth,
            peak_flops: m.peak_flops,
            cache_line: m.cache_line,
            l2_bytes: m.l2_bytes,
        }
    }
}

impl PerfScenario {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn machine(&self) -> Result<MachineModel, HarnessError> {
        let m = MachineModel {
            bandwidth: self.bandwidth,
            peak_flops: self.peak_flops,
            cache_line: self.cache_line,
            l2_bytes: self.l2_bytes,
            word_bytes: 8.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>, HarnessError> {
        match &self.scheme {
            None => Ok(Scheme::ALL.to_vec()),
            Some(s) => Ok(vec![s.parse().map_err(|_| HarnessError::Config(format!("unknown scheme '{s}'")))?]),
        }
    }

    pub fn sim_config(&self, scheme: Scheme) -> Result<SimConfig, HarnessError> {
        let c = SimConfig {
            order: self.order,
            elements: [self.ex, self.ey, self.ez],
            machine_nodes: self.machine_nodes,
            steps: self.steps,
            stages: self.stages,
            scheme,
            vars: self.vars,
            metric_recompute: self.metric_recompute,
        };
        c.validate()?;
        Ok(c)
    }
}
