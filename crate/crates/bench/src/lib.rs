//! Shared fixtures for the kernel benchmarks.

use colsem::dynamics::{Discretization, GasConstants};
use colsem::harness::{BubbleConfig, Problem};
use colsem::mesh::partition_columns;
use colsem::storage::{LocalDomain, NoHalo, Scheme};

/// Bubble problem with `nx × nx` columns of `nz` layers at order `p`.
pub fn problem(nx: usize, nz: usize, p: usize, scheme: Scheme) -> Problem {
    let cfg = BubbleConfig {
        nx,
        ny: nx,
        nz,
        order: p,
        scheme: scheme.label().to_ascii_lowercase().replace("cg/dg", "hybrid"),
        ..Default::default()
    };
    Problem::build(&cfg).expect("benchmark config is valid")
}

/// Single-partition operator and its initial state in the scheme's layout.
pub fn operator(p: &Problem) -> (Discretization<NoHalo>, Vec<f64>) {
    let parts = partition_columns(&p.mesh, 1).expect("one partition");
    let dom = LocalDomain::build_all(&p.numbering, &parts).remove(0);
    let d = Discretization::new(p.re.clone(), GasConstants::default(), p.scheme, dom, &p.metrics, &p.reference, NoHalo);
    let init = d.domain.restrict(&p.initial);
    let state = d.state_from_nodes(&init);
    (d, state)
}
