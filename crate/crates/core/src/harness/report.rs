//! Text and CSV renderings of meshes, runs, scaling tables and order sweeps.

use std::fmt::Write as _;
use std::path::Path;

use super::bubble::theta_prime;
use super::scaling::ScalingRow;
use super::solver::{Problem, RunReport};
use super::HarnessError;
use crate::mesh::{partition_quality, CgNumbering, ColumnMesh, Partition};
use crate::perf::SweepPoint;
use crate::storage::{Snapshot, StateCg};

pub fn mesh_summary(
    mesh: &ColumnMesh,
    numbering: &CgNumbering,
    partitions: &[Partition],
    build_seconds: f64,
) -> String {
    let q = partition_quality(mesh, partitions);
    let mut s = String::new();
    let _ = writeln!(s, "columns         {}", mesh.n_columns());
    let _ = writeln!(s, "elements        {}", mesh.n_elements());
    let _ = writeln!(s, "unique nodes    {}", numbering.n_global);
    let _ = writeln!(s, "build time      {build_seconds:.6} s");
    let _ = writeln!(s, "\npartition  columns  elements  surface/volume");
    for (p, sv) in partitions.iter().zip(&q.per_partition) {
        let _ = writeln!(s, "{:>9}  {:>7}  {:>8}  {:>14.4}", p.id, p.columns.len(), p.element_count(), sv);
    }
    let _ = writeln!(s, "\nsurface/volume max {:.4} mean {:.4}", q.max, q.mean);
    s
}

pub fn partition_csv(mesh: &ColumnMesh, partitions: &[Partition]) -> String {
    let q = partition_quality(mesh, partitions);
    let mut s = String::from("partition,first_column,columns,elements,surface_to_volume\n");
    for (p, sv) in partitions.iter().zip(&q.per_partition) {
        let _ = writeln!(s, "{},{},{},{},{sv}", p.id, p.columns.start, p.columns.len(), p.element_count());
    }
    s
}

pub fn diagnostics_csv(r: &RunReport) -> String {
    let mut s = String::from("step,time,mass,theta_min,theta_max,max_speed,centroid_z\n");
    for d in &r.diagnostics {
        let _ = writeln!(
            s,
            "{},{},{:e},{:e},{:e},{:e},{}",
            d.step,
            d.time,
            d.mass,
            d.theta_min,
            d.theta_max,
            d.max_speed,
            d.centroid_z()
        );
    }
    s
}

pub fn run_summary(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scheme {}  workers {}  dt {:.6} s", r.scheme.label(), r.parts, r.dt);
    if r.oversubscribed {
        let _ = writeln!(s, "note: more workers than hardware threads");
    }
    let _ = writeln!(s, "steps completed {} of {}", r.completed_steps(), r.steps);
    if let (Some(a), Some(b)) = (r.diagnostics.first(), r.diagnostics.last()) {
        let _ = writeln!(s, "mass drift      {:.3e}", r.mass_drift());
        let _ = writeln!(s, "theta' range    [{:.5}, {:.5}] K", b.theta_min, b.theta_max);
        let _ = writeln!(s, "max |u|         {:.5} m/s", b.max_speed);
        let _ = writeln!(s, "centroid z      {:.3} -> {:.3} m", a.centroid_z(), b.centroid_z());
    }
    let p = &r.phases;
    let _ = writeln!(s, "timed steps     {}  wall {:.4} s", r.timed_steps, r.total);
    let _ = writeln!(
        s,
        "phases          create_rhs {:.4}  dss {:.4}  filter {:.4}  update {:.4}",
        p.create_rhs, p.dss, p.filter, p.update
    );
    let _ = writeln!(s, "model GFlop/s   {:.3} (model flops / wall time)", r.estimated_gflops());
    if let Some(f) = r.failure {
        let _ = writeln!(s, "DIVERGED in step {} (element {})", f.step, f.element);
    }
    s
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut s = String::from(
        "workers,total,create_rhs,dss,filter,update,efficiency,eff_create_rhs,eff_dss,eff_filter,eff_update,elements_min,elements_max,oversubscribed\n",
    );
    for r in rows {
        let (p, e) = (&r.phases, &r.phase_efficiency);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.parts,
            r.total,
            p.create_rhs,
            p.dss,
            p.filter,
            p.update,
            r.efficiency,
            e.create_rhs,
            e.dss,
            e.filter,
            e.update,
            r.elements_min,
            r.elements_max,
            r.oversubscribed
        );
    }
    s
}

pub fn scaling_text(rows: &[ScalingRow]) -> String {
    let mut s = format!(
        "{:>7} {:>10} {:>8} {:>10} {:>8} {:>8} {:>8}  elements\n",
        "workers", "total s", "eff", "create_rhs", "dss", "filter", "update"
    );
    for r in rows {
        let e = &r.phase_efficiency;
        let _ = writeln!(
            s,
            "{:>7} {:>10.4} {:>7.1}% {:>9.1}% {:>7.1}% {:>7.1}% {:>7.1}%  {}-{}{}",
            r.parts,
            r.total,
            100.0 * r.efficiency,
            100.0 * e.create_rhs,
            100.0 * e.dss,
            100.0 * e.filter,
            100.0 * e.update,
            r.elements_min,
            r.elements_max,
            if r.oversubscribed { " (oversubscribed)" } else { "" }
        );
    }
    s
}

pub fn sweep_csv(scheme: &str, points: &[SweepPoint]) -> String {
    let mut s = String::from("scheme,order,ex,ey,ez,steps,time_per_step,time_to_solution\n");
    for p in points {
        let _ = writeln!(
            s,
            "{scheme},{},{},{},{},{},{},{}",
            p.order, p.elements[0], p.elements[1], p.elements[2], p.steps, p.time_per_step, p.time_to_solution
        );
    }
    s
}

/// Node coordinates with θ' of a global state.
pub fn nodal_csv(problem: &Problem, state: &StateCg) -> String {
    let mut s = String::from("x,y,z,theta_prime\n");
    for (g, x) in problem.coords.iter().enumerate() {
        let tp = theta_prime(state.node(g), &problem.reference[g]);
        let _ = writeln!(s, "{},{},{},{tp:e}", x[0], x[1], x[2]);
    }
    s
}

pub fn write_snapshot(path: &Path, snap: &Snapshot) -> Result<(), HarnessError> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    snap.write_to(f)?;
    Ok(())
}
