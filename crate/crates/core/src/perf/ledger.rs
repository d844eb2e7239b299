//! Closed-form flop and byte counts of the time loop per storage scheme.
//!
//! Per step: `stages` × (create_rhs, DSS, update) and one filter pass with
//! its own DSS. Counts are per machine node over the whole simulation.
//! Per-node unit costs, with v prognostic variables of 8 bytes:
//!
//! * create_rhs: 26v pointwise flops + 3v flux arrays × 3 directions of
//!   2(p+1) flops (one row of the 1D derivative contraction) per node;
//!   reads state, reference atmosphere (16 B) and metric terms (80 B:
//!   nine inverse-Jacobian entries and w·J); CG-stored output is
//!   accumulated (read-modify-write), DG output is written per element node.
//! * DSS: one add per contribution plus one multiply by 1/M per point;
//!   reads contributions and the mass, writes the assembled value.
//! * update: 5v flops, three arrays read, one written per stored point.
//! * filter: 3 tensor directions × 2(p+1) flops + 1 per node and variable;
//!   reads state and w·J, writes like create_rhs, then a DSS.

use super::{roofline_time, KernelCost, MachineModel, PerfError};
use crate::storage::{Layout, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    CreateRhs,
    Dss,
    Filter,
    Update,
}

impl Kernel {
    pub const ALL: [Kernel; 4] = [Kernel::CreateRhs, Kernel::Dss, Kernel::Filter, Kernel::Update];

    /// Element kernels run per element; the others per stored point.
    pub fn is_element_kernel(self) -> bool {
        matches!(self, Kernel::CreateRhs | Kernel::Filter)
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::CreateRhs => "create_rhs",
            Kernel::Dss => "dss",
            Kernel::Filter => "filter",
            Kernel::Update => "update",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub order: usize,
    /// Element counts per direction. Fractional counts are allowed so the
    /// order sweep can hold the point count fixed exactly.
    pub elements: [f64; 3],
    /// Machine nodes the work is spread over.
    pub machine_nodes: f64,
    pub steps: f64,
    pub stages: usize,
    pub scheme: Scheme,
    pub vars: usize,
    /// Recompute metric terms from 3 stored coordinates each stage instead
    /// of reading 10 stored values.
    pub metric_recompute: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), PerfError> {
        if self.order < 1 {
            return Err(PerfError::Config("order must be ≥ 1".into()));
        }
        if self.elements.iter().any(|&e| !(e > 0.0)) || !(self.machine_nodes > 0.0) {
            return Err(PerfError::Config("element and node counts must be positive".into()));
        }
        if !(self.steps >= 0.0) || self.stages == 0 || self.vars == 0 {
            return Err(PerfError::Config("steps, stages and vars must be positive".into()));
        }
        Ok(())
    }

    pub fn nodes_per_element(&self) -> f64 {
        ((self.order + 1) as f64).powi(3)
    }

    pub fn n_elements(&self) -> f64 {
        self.elements.iter().product()
    }

    pub fn unique_points(&self) -> f64 {
        let p = self.order as f64;
        self.elements.iter().map(|&e| p * e + 1.0).product()
    }

    pub fn element_points(&self) -> f64 {
        self.n_elements() * self.nodes_per_element()
    }
}

/// Cost of every kernel for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostLedger {
    pub create_rhs: KernelCost,
    pub dss: KernelCost,
    pub filter: KernelCost,
    pub update: KernelCost,
}

impl CostLedger {
    pub fn get(&self, k: Kernel) -> &KernelCost {
        match k {
            Kernel::CreateRhs => &self.create_rhs,
            Kernel::Dss => &self.dss,
            Kernel::Filter => &self.filter,
            Kernel::Update => &self.update,
        }
    }

    fn get_mut(&mut self, k: Kernel) -> &mut KernelCost {
        match k {
            Kernel::CreateRhs => &mut self.create_rhs,
            Kernel::Dss => &mut self.dss,
            Kernel::Filter => &mut self.filter,
            Kernel::Update => &mut self.update,
        }
    }

    pub fn total(&self) -> KernelCost {
        self.create_rhs + self.dss + self.filter + self.update
    }

    pub fn map(&self, f: impl Fn(Kernel, &KernelCost) -> KernelCost) -> CostLedger {
        let mut out = *self;
        for k in Kernel::ALL {
            *out.get_mut(k) = f(k, self.get(k));
        }
        out
    }

    pub fn runtime(&self, machine: &MachineModel) -> f64 {
        roofline_time(&self.total(), machine)
    }
}

struct Counter {
    p: f64,
    e: f64,
    n: f64,
    u: f64,
}

impl Counter {
    /// Element-wise read of `b` bytes per point from a CG array.
    fn gather(&self, b: f64) -> KernelCost {
        KernelCost {
            read: self.u * b,
            gather_bytes: self.u * b,
            gather_elem_bytes: self.e * self.n * b,
            gather_runs: self.e * (self.p + 1.0).powi(2),
            ..Default::default()
        }
    }

    fn dg_read(&self, b: f64) -> KernelCost {
        KernelCost { read: self.e * self.n * b, ..Default::default() }
    }

    fn read(&self, layout: Layout, b: f64) -> KernelCost {
        match layout {
            Layout::Cg => self.gather(b),
            Layout::Dg => self.dg_read(b),
        }
    }

    /// Element kernel output: accumulate into CG or write per element node.
    fn output(&self, layout: Layout, b: f64) -> KernelCost {
        match layout {
            Layout::Cg => {
                let mut c = self.gather(b);
                c.write = self.u * b;
                c
            }
            Layout::Dg => KernelCost { write: self.e * self.n * b, ..Default::default() },
        }
    }

    fn dss(&self, layout: Layout, vars: f64) -> KernelCost {
        let (pts, sums) = match layout {
            Layout::Cg => (self.u, self.u),
            Layout::Dg => (self.e * self.n, self.e * self.n - self.u + self.e * self.n),
        };
        KernelCost::new(sums * vars, pts * (8.0 * vars + 8.0), pts * 8.0 * vars)
    }
}

/// Raw analytic counts (no calibration, no random-access penalty).
pub fn count_costs(cfg: &SimConfig) -> Result<CostLedger, PerfError> {
    cfg.validate()?;
    let p = cfg.order as f64;
    let v = cfg.vars as f64;
    let c = Counter { p, e: cfg.n_elements(), n: cfg.nodes_per_element(), u: cfg.unique_points() };
    let en = c.e * c.n;
    let state = cfg.scheme.state_layout();
    let reference = cfg.scheme.reference_layout();
    let qb = 8.0 * v;

    let mut rhs = KernelCost::new(en * (26.0 * v + 18.0 * v * (p + 1.0)), 0.0, 0.0);
    rhs += c.read(state, qb);
    rhs += c.read(reference, 16.0);
    if cfg.metric_recompute {
        rhs += c.dg_read(24.0);
        rhs.flops += en * (9.0 * 2.0 * (p + 1.0) + 45.0);
    } else {
        rhs += c.dg_read(80.0);
    }
    rhs += c.output(state, qb);

    let dss_stage = c.dss(state, v);
    let pts = match state {
        Layout::Cg => c.u,
        Layout::Dg => en,
    };
    let update = KernelCost::new(pts * 5.0 * v, pts * 3.0 * qb, pts * qb);

    let mut filter = KernelCost::new(en * v * (6.0 * (p + 1.0) + 1.0), 0.0, 0.0);
    filter += c.read(state, qb);
    filter += c.dg_read(8.0);
    filter += c.output(state, qb);

    let stages = cfg.stages as f64;
    let scale = cfg.steps / cfg.machine_nodes;
    Ok(CostLedger {
        create_rhs: rhs.scaled(stages * scale),
        dss: dss_stage.scaled((stages + 1.0) * scale),
        filter: filter.scaled(scale),
        update: update.scaled(stages * scale),
    })
}

/// Bytes of state, metric terms and reference data one machine node touches per step.
pub fn working_set_bytes(cfg: &SimConfig) -> f64 {
    let en = cfg.element_points();
    let stored = |layout: Layout| match layout {
        Layout::Cg => cfg.unique_points(),
        Layout::Dg => en,
    };
    let metric = if cfg.metric_recompute { 24.0 } else { 80.0 };
    (stored(cfg.scheme.state_layout()) * 8.0 * cfg.vars as f64
        + en * metric
        + stored(cfg.scheme.reference_layout()) * 16.0)
        / cfg.machine_nodes
}

/// Charge full cache lines for element-wise reads of CG arrays when the
/// working set does not fit in L2. Each contiguous run of L bytes costs
/// L + line − word bytes on average over its alignment; flops and writes
/// are unchanged.
pub fn random_access_penalty(ledger: &CostLedger, cfg: &SimConfig, machine: &MachineModel) -> CostLedger {
    if working_set_bytes(cfg) <= machine.l2_bytes {
        return *ledger;
    }
    cache_line_penalty(ledger, machine)
}

/// The penalty without the L2 guard.
pub fn cache_line_penalty(ledger: &CostLedger, machine: &MachineModel) -> CostLedger {
    ledger.map(|_, c| penalize(c, machine))
}

pub(crate) fn penalize(c: &KernelCost, machine: &MachineModel) -> KernelCost {
    let extra = c.gather_elem_bytes + c.gather_runs * (machine.cache_line - machine.word_bytes) - c.gather_bytes;
    KernelCost { read: c.read + extra.max(0.0), ..*c }
}

/// Per-kernel multipliers on the raw counts. Element kernels share one set
/// and pointwise kernels another; `fit` solves for them from two reference
/// columns (CG and DG storage) of measured totals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub element: [f64; 3],
    pub pointwise: [f64; 3],
}

impl Default for Calibration {
    fn default() -> Self {
        Self { element: [1.0; 3], pointwise: [1.0; 3] }
    }
}

impl Calibration {
    pub fn apply(&self, ledger: &CostLedger) -> CostLedger {
        ledger.map(|k, c| {
            let [f, r, w] = if k.is_element_kernel() { self.element } else { self.pointwise };
            KernelCost {
                flops: c.flops * f,
                read: c.read * r,
                write: c.write * w,
                gather_bytes: c.gather_bytes * r,
                gather_elem_bytes: c.gather_elem_bytes * r,
                gather_runs: c.gather_runs * r,
            }
        })
    }

    /// Fit flop and read multipliers per kernel class exactly to the two
    /// targets. Write counts of the two classes are nearly proportional
    /// between CG and DG, so writes get one shared least-squares factor.
    pub fn fit(raw: [&CostLedger; 2], target: [KernelCost; 2]) -> Result<Self, PerfError> {
        let split = |l: &CostLedger, field: fn(&KernelCost) -> f64| {
            let e = field(&l.create_rhs) + field(&l.filter);
            let p = field(&l.dss) + field(&l.update);
            (e, p)
        };
        let solve = |field: fn(&KernelCost) -> f64| -> Result<[f64; 2], PerfError> {
            let (a, b) = split(raw[0], field);
            let (c, d) = split(raw[1], field);
            let det = a * d - b * c;
            if det.abs() < 1e-9 * (a * d).abs().max((b * c).abs()) {
                return Err(PerfError::Singular);
            }
            let (t0, t1) = (field(&target[0]), field(&target[1]));
            Ok([(t0 * d - b * t1) / det, (a * t1 - c * t0) / det])
        };
        let flops = solve(|c| c.flops)?;
        let read = solve(|c| c.read)?;
        let w0 = raw[0].total().write;
        let w1 = raw[1].total().write;
        let write = (w0 * target[0].write + w1 * target[1].write) / (w0 * w0 + w1 * w1);
        Ok(Self { element: [flops[0], read[0], write], pointwise: [flops[1], read[1], write] })
    }
}
