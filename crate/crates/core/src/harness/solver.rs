//! Partitioned time loop: one worker thread per partition, halo exchange
//! through channels, diagnostics reduced after the workers join.

use std::time::Instant;

use super::bubble::{global_coords, init_bubble, theta_prime};
use super::{BubbleConfig, HarnessError};
use crate::dynamics::{DynamicsError, Discretization, GasConstants, PhaseTimes, ReferenceValues};
use crate::mesh::{
    build_box_mesh, build_cg_numbering, compute_metrics, partition_columns, CgNumbering, ColumnMesh, MetricTerms,
};
use crate::perf::{count_costs, SimConfig};
use crate::reference::ReferenceElement;
use crate::storage::{ChannelTransport, LocalDomain, Scheme, Snapshot, StateCg, Layout, NVARS};
use crate::time::{compute_dt, rk_step, RkScheme, RkWorkspace};

/// Everything that does not depend on the partition count.
pub struct Problem {
    pub config: BubbleConfig,
    pub scheme: Scheme,
    pub constants: GasConstants,
    pub re: ReferenceElement,
    pub mesh: ColumnMesh,
    pub metrics: MetricTerms,
    pub numbering: CgNumbering,
    pub coords: Vec<[f64; 3]>,
    pub reference: Vec<ReferenceValues>,
    pub initial: StateCg,
    pub dt: f64,
    pub rk: RkScheme,
}

impl Problem {
    pub fn build(config: &BubbleConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let constants = GasConstants::default();
        let re = ReferenceElement::with_filter(config.order, config.filter())?;
        let mesh = build_box_mesh(config.nx, config.ny, config.nz, config.extent(), config.mapping())?;
        let metrics = compute_metrics(&mesh, &re)?;
        let numbering = build_cg_numbering(&mesh, &metrics, &re)?;
        let coords = global_coords(&numbering, &metrics);
        let (initial, reference) = init_bubble(config, &coords, &constants)?;
        let dt = compute_dt(&initial, &numbering, &metrics, &constants, &config.control())?;
        Ok(Self {
            config: config.clone(),
            scheme: config.scheme()?,
            constants,
            re,
            mesh,
            metrics,
            numbering,
            coords,
            reference,
            initial,
            dt,
            rk: RkScheme::ssp53(),
        })
    }

    pub fn steps(&self) -> usize {
        self.config.step_count(self.dt)
    }

    /// Model flop count of `steps` steps of this problem on one node.
    pub fn model_flops(&self, steps: usize) -> f64 {
        let cfg = SimConfig {
            order: self.re.order,
            elements: [self.config.nx as f64, self.config.ny as f64, self.config.nz as f64],
            machine_nodes: 1.0,
            steps: steps as f64,
            stages: self.rk.stages(),
            scheme: self.scheme,
            vars: NVARS,
            metric_recompute: false,
        };
        count_costs(&cfg).map(|l| l.total().flops).unwrap_or(0.0)
    }
}

/// Global reductions after one step, over uniquely owned nodes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    /// Σ M ρ.
    pub mass: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub max_speed: f64,
    /// Σ M θ' and Σ M θ' z, the latter over the former giving the
    /// θ'-weighted centroid height.
    pub theta_integral: f64,
    pub theta_moment_z: f64,
}

impl StepDiagnostics {
    fn empty(step: usize, time: f64) -> Self {
        Self {
            step,
            time,
            theta_min: f64::INFINITY,
            theta_max: f64::NEG_INFINITY,
            ..Default::default()
        }
    }

    fn merge(&mut self, o: &StepDiagnostics) {
        self.mass += o.mass;
        self.theta_min = self.theta_min.min(o.theta_min);
        self.theta_max = self.theta_max.max(o.theta_max);
        self.max_speed = self.max_speed.max(o.max_speed);
        self.theta_integral += o.theta_integral;
        self.theta_moment_z += o.theta_moment_z;
    }

    pub fn centroid_z(&self) -> f64 {
        self.theta_moment_z / self.theta_integral
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Failure {
    /// Step during which the state became invalid (1-based).
    pub step: usize,
    pub element: usize,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub parts: usize,
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    pub elements_per_part: Vec<usize>,
    /// Phase times of the slowest worker, warm-up step excluded.
    pub phases: PhaseTimes,
    /// Wall time of the timed steps on the slowest worker.
    pub total: f64,
    pub timed_steps: usize,
    /// Entry 0 is the initial state, entry k the state after step k.
    pub diagnostics: Vec<StepDiagnostics>,
    pub final_state: StateCg,
    pub snapshots: Vec<Snapshot>,
    pub failure: Option<Failure>,
    /// More workers than available hardware threads.
    pub oversubscribed: bool,
    /// Model flop count of the timed steps, for a flop-rate estimate.
    pub model_flops: f64,
}

impl RunReport {
    pub fn completed_steps(&self) -> usize {
        self.diagnostics.len().saturating_sub(1)
    }

    pub fn mass_drift(&self) -> f64 {
        match (self.diagnostics.first(), self.diagnostics.last()) {
            (Some(a), Some(b)) => (b.mass - a.mass).abs() / a.mass,
            _ => 0.0,
        }
    }

    /// Model flops divided by measured wall time; not a counter measurement.
    pub fn estimated_gflops(&self) -> f64 {
        if self.total > 0.0 {
            self.model_flops / self.total / 1e9
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Keep a global snapshot every this many steps (0: none besides the final state).
    pub snapshot_every: usize,
}

struct WorkerOutput {
    diagnostics: Vec<StepDiagnostics>,
    times: PhaseTimes,
    total: f64,
    nodes: Vec<f64>,
    snapshots: Vec<(usize, f64, Vec<f64>)>,
    error: Option<(usize, DynamicsError)>,
}

fn local_diagnostics(
    d: &Discretization<ChannelTransport>,
    nodes: &[f64],
    coords: &[[f64; 3]],
    step: usize,
    time: f64,
) -> StepDiagnostics {
    let mut s = StepDiagnostics::empty(step, time);
    let dom = &d.domain;
    for (l, rv) in d.reference_nodes().iter().enumerate() {
        if !dom.owned[l] {
            continue;
        }
        let q = &nodes[l * NVARS..(l + 1) * NVARS];
        let m = dom.mass[l];
        let tp = theta_prime(q, rv);
        s.mass += m * q[0];
        s.theta_min = s.theta_min.min(tp);
        s.theta_max = s.theta_max.max(tp);
        let speed = (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt() / q[0];
        s.max_speed = s.max_speed.max(speed);
        s.theta_integral += m * tp;
        s.theta_moment_z += m * tp * coords[dom.global_ids[l]][2];
    }
    s
}

fn worker(
    problem: &Problem,
    domain: LocalDomain,
    transport: ChannelTransport,
    steps: usize,
    opts: RunOptions,
) -> WorkerOutput {
    let mut d = Discretization::new(
        problem.re.clone(),
        problem.constants,
        problem.scheme,
        domain,
        &problem.metrics,
        &problem.reference,
        transport,
    );
    let init = d.domain.restrict(&problem.initial);
    let mut state = d.state_from_nodes(&init);
    let mut ws = RkWorkspace::new(problem.rk.stages(), state.len());
    let mut out = WorkerOutput {
        diagnostics: vec![local_diagnostics(&d, &init, &problem.coords, 0, 0.0)],
        times: PhaseTimes::default(),
        total: 0.0,
        nodes: Vec::new(),
        snapshots: Vec::new(),
        error: None,
    };
    if opts.snapshot_every > 0 {
        out.snapshots.push((0, 0.0, init));
    }
    let mut clock = Instant::now();
    for step in 1..=steps {
        if step == 2 {
            // the first step warms caches and page tables and is not timed
            d.times = PhaseTimes::default();
            clock = Instant::now();
        }
        if let Err(e) = rk_step(&problem.rk, &mut d, &mut state, problem.dt, &mut ws) {
            out.error = Some((step, e));
            break;
        }
        let time = step as f64 * problem.dt;
        let nodes = d.node_values(&state);
        out.diagnostics.push(local_diagnostics(&d, &nodes, &problem.coords, step, time));
        if opts.snapshot_every > 0 && step % opts.snapshot_every == 0 {
            out.snapshots.push((step, time, nodes));
        }
    }
    if steps >= 2 {
        out.total = clock.elapsed().as_secs_f64();
        out.times = d.times;
    }
    out.nodes = d.node_values(&state);
    out
}

fn assemble(domains: &[LocalDomain], locals: &[&[f64]], n_global: usize) -> StateCg {
    let mut g = StateCg::zeros(n_global);
    for (dom, local) in domains.iter().zip(locals) {
        for (l, &id) in dom.global_ids.iter().enumerate() {
            if dom.owned[l] {
                g.data[id * NVARS..(id + 1) * NVARS].copy_from_slice(&local[l * NVARS..(l + 1) * NVARS]);
            }
        }
    }
    g
}

/// Run `steps` steps on `parts` workers. A diverged state still yields a
/// report, truncated at the last good step, with `failure` set.
pub fn run(problem: &Problem, parts: usize, steps: usize, opts: RunOptions) -> Result<RunReport, HarnessError> {
    let partitions = partition_columns(&problem.mesh, parts)?;
    let domains = LocalDomain::build_all(&problem.numbering, &partitions);
    let transports = ChannelTransport::connect(&domains);
    let outputs: Vec<WorkerOutput> = std::thread::scope(|s| {
        let handles: Vec<_> = domains
            .iter()
            .cloned()
            .zip(transports)
            .map(|(dom, tr)| s.spawn(move || worker(problem, dom, tr, steps, opts)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });

    // a diverged element is the root cause; disconnects are its echo
    let mut failure = None;
    let mut other = None;
    for o in &outputs {
        match &o.error {
            Some((step, DynamicsError::DivergedState { element })) => {
                if failure.is_none_or(|f: Failure| *step < f.step) {
                    failure = Some(Failure { step: *step, element: *element });
                }
            }
            Some((_, e)) if other.is_none() => other = Some(e.to_string()),
            _ => {}
        }
    }
    if failure.is_none() {
        if let Some(msg) = other {
            return Err(HarnessError::Worker(msg));
        }
    }

    let n_diag = outputs.iter().map(|o| o.diagnostics.len()).min().unwrap_or(0);
    let diagnostics = (0..n_diag)
        .map(|k| {
            let mut acc = StepDiagnostics::empty(outputs[0].diagnostics[k].step, outputs[0].diagnostics[k].time);
            for o in &outputs {
                acc.merge(&o.diagnostics[k]);
            }
            acc
        })
        .collect();

    let nodes: Vec<&[f64]> = outputs.iter().map(|o| o.nodes.as_slice()).collect();
    let final_state = assemble(&domains, &nodes, problem.numbering.n_global);
    let n_snap = outputs.iter().map(|o| o.snapshots.len()).min().unwrap_or(0);
    let snapshots = (0..n_snap)
        .map(|k| {
            let (step, time, _) = outputs[0].snapshots[k];
            let locals: Vec<&[f64]> = outputs.iter().map(|o| o.snapshots[k].2.as_slice()).collect();
            snapshot_of(problem, &assemble(&domains, &locals, problem.numbering.n_global), step, time)
        })
        .collect();

    // phase breakdown of the slowest worker, so the phases add up to at most its total
    let slowest = outputs.iter().max_by(|a, b| a.total.total_cmp(&b.total));
    let (phases, total) = slowest.map_or((PhaseTimes::default(), 0.0), |o| (o.times, o.total));
    let timed_steps = if failure.is_none() { steps.saturating_sub(1) } else { 0 };
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    Ok(RunReport {
        parts,
        scheme: problem.scheme,
        dt: problem.dt,
        steps,
        elements_per_part: partitions.iter().map(|p| p.element_count()).collect(),
        phases,
        total,
        timed_steps,
        diagnostics,
        final_state,
        snapshots,
        failure,
        oversubscribed: parts > cores,
        model_flops: problem.model_flops(timed_steps),
    })
}

pub fn snapshot_of(problem: &Problem, state: &StateCg, step: usize, time: f64) -> Snapshot {
    Snapshot {
        layout: Layout::Cg,
        order: problem.re.order as u32,
        n_elements: problem.mesh.n_elements() as u64,
        n_nodes: state.n_nodes() as u64,
        n_vars: NVARS as u32,
        time,
        step: step as u64,
        data: state.data.clone(),
    }
}
