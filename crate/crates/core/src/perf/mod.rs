//! Analytical flop/byte model of the time loop with roofline runtime
//! prediction.

pub mod ledger;
pub mod presets;
pub mod sweep;
pub mod table;

use std::ops::{Add, AddAssign};

use thiserror::Error;

pub use ledger::{cache_line_penalty, count_costs, random_access_penalty, working_set_bytes, Calibration, CostLedger, Kernel, SimConfig};
pub use sweep::{order_sweep, SweepPoint};
pub use presets::Preset;
pub use table::{emit_table, parse_table_csv, TableColumn};

pub const GB: f64 = 1e9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerfError {
    #[error("machine parameter {0} must be positive")]
    Machine(&'static str),
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("calibration system is singular")]
    Singular,
    #[error("malformed table CSV: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineModel {
    /// Sustained memory bandwidth per node, bytes/s.
    pub bandwidth: f64,
    /// Peak floating point rate per node, flops/s.
    pub peak_flops: f64,
    pub cache_line: f64,
    pub l2_bytes: f64,
    pub word_bytes: f64,
}

impl Default for MachineModel {
    fn default() -> Self {
        Self {
            bandwidth: 28.5e9,
            peak_flops: 204.8e9,
            cache_line: 128.0,
            l2_bytes: 32.0 * 1024.0 * 1024.0,
            word_bytes: 8.0,
        }
    }
}

impl MachineModel {
    pub fn validate(&self) -> Result<(), PerfError> {
        for (name, v) in [
            ("bandwidth", self.bandwidth),
            ("peak_flops", self.peak_flops),
            ("cache_line", self.cache_line),
            ("l2_bytes", self.l2_bytes),
            ("word_bytes", self.word_bytes),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(PerfError::Machine(name));
            }
        }
        Ok(())
    }

    /// Arithmetic intensity where the memory and compute roofs meet.
    pub fn ridge_point(&self) -> f64 {
        self.peak_flops / self.bandwidth
    }
}

/// Flops and memory traffic, totals per node. `gather_*` describe the part
/// of `read` that element kernels pull element-wise out of CG-stored arrays;
/// the random-access penalty re-prices exactly that part.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KernelCost {
    pub flops: f64,
    pub read: f64,
    pub write: f64,
    /// Bytes of `read` that come from CG arrays read element-wise, counted once per unique point.
    pub gather_bytes: f64,
    /// The same reads counted once per element node.
    pub gather_elem_bytes: f64,
    /// Number of contiguous runs those element-wise reads consist of.
    pub gather_runs: f64,
}

impl KernelCost {
    pub fn new(flops: f64, read: f64, write: f64) -> Self {
        Self { flops, read, write, ..Default::default() }
    }

    pub fn bytes(&self) -> f64 {
        self.read + self.write
    }

    pub fn arithmetic_intensity(&self) -> f64 {
        self.flops / self.bytes()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            flops: self.flops * s,
            read: self.read * s,
            write: self.write * s,
            gather_bytes: self.gather_bytes * s,
            gather_elem_bytes: self.gather_elem_bytes * s,
            gather_runs: self.gather_runs * s,
        }
    }
}

impl Add for KernelCost {
    type Output = KernelCost;
    fn add(self, o: KernelCost) -> KernelCost {
        KernelCost {
            flops: self.flops + o.flops,
            read: self.read + o.read,
            write: self.write + o.write,
            gather_bytes: self.gather_bytes + o.gather_bytes,
            gather_elem_bytes: self.gather_elem_bytes + o.gather_elem_bytes,
            gather_runs: self.gather_runs + o.gather_runs,
        }
    }
}

impl AddAssign for KernelCost {
    fn add_assign(&mut self, o: KernelCost) {
        *self = *self + o;
    }
}

/// t = max(flops / peak, bytes / bandwidth).
pub fn roofline_time(cost: &KernelCost, machine: &MachineModel) -> f64 {
    (cost.flops / machine.peak_flops).max(cost.bytes() / machine.bandwidth)
}

pub fn is_memory_bound(cost: &KernelCost, machine: &MachineModel) -> bool {
    cost.bytes() / machine.bandwidth >= cost.flops / machine.peak_flops
}

pub fn percent_peak(flops: f64, seconds: f64, machine: &MachineModel) -> f64 {
    100.0 * flops / seconds / machine.peak_flops
}

/// Attained rate relative to the roofline bound min(peak, AI · bandwidth).
pub fn percent_max(attained_flops_per_s: f64, intensity: f64, machine: &MachineModel) -> f64 {
    100.0 * attained_flops_per_s / machine.peak_flops.min(intensity * machine.bandwidth)
}
