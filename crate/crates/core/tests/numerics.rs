//! Cross-module properties of the discretization and the drivers.

use colsem::harness::{run, BubbleConfig, Problem, RunOptions};
use colsem::mesh::numbering::tensor_weights;
use colsem::mesh::{
    build_box_mesh, build_cg_numbering, compute_metrics, morton_decode, morton_encode, partition_columns, Mapping,
};
use colsem::perf::{count_costs, random_access_penalty, Kernel, MachineModel, SimConfig};
use colsem::reference::{FilterParams, ReferenceElement};
use colsem::storage::{dss, scatter, Layout, Scheme, Snapshot, StateCg, NVARS};
use proptest::prelude::*;

fn small(scheme: &str) -> BubbleConfig {
    BubbleConfig {
        nx: 4,
        ny: 2,
        nz: 3,
        order: 3,
        theta_c: 2.0,
        scheme: scheme.into(),
        ..Default::default()
    }
}

#[test]
fn storage_schemes_evolve_identically() {
    let base = run(&Problem::build(&small("cg")).unwrap(), 1, 5, RunOptions::default()).unwrap();
    for scheme in ["hybrid", "dg"] {
        let r = run(&Problem::build(&small(scheme)).unwrap(), 2, 5, RunOptions::default()).unwrap();
        let worst = base
            .final_state
            .data
            .iter()
            .zip(&r.final_state.data)
            .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "{scheme}: {worst:e}");
    }
}

#[test]
fn runs_are_reproducible() {
    let p = Problem::build(&small("cg")).unwrap();
    let a = run(&p, 3, 4, RunOptions::default()).unwrap();
    let b = run(&p, 3, 4, RunOptions::default()).unwrap();
    assert_eq!(a.diagnostics, b.diagnostics);
    assert_eq!(a.final_state, b.final_state);
}

#[test]
fn mass_conservation() {
    // affine elements: the strong-form divergence sums to the wall flux,
    // which vanishes, so mass is conserved to roundoff
    let r = run(&Problem::build(&small("cg")).unwrap(), 2, 10, RunOptions::default()).unwrap();
    assert!(r.mass_drift() < 1e-13, "{:e}", r.mass_drift());
    // curved elements: the chain-rule divergence is not telescoping, so
    // only a small drift is expected
    let cfg = BubbleConfig { warp: 0.02, ..small("cg") };
    let r = run(&Problem::build(&cfg).unwrap(), 2, 10, RunOptions::default()).unwrap();
    assert!(r.failure.is_none());
    assert!(r.mass_drift() < 1e-6, "{:e}", r.mass_drift());
}

#[test]
fn end_time_sets_step_count() {
    let cfg = BubbleConfig { end_time: Some(2.0), ..small("cg") };
    let p = Problem::build(&cfg).unwrap();
    let n = p.steps();
    assert!(n as f64 * p.dt >= 2.0 && (n - 1) as f64 * p.dt < 2.0);
}

#[test]
fn dt_follows_resolution() {
    let coarse = Problem::build(&BubbleConfig { nz: 4, ..small("cg") }).unwrap();
    let fine = Problem::build(&BubbleConfig { nz: 8, ..small("cg") }).unwrap();
    // vertical spacing is the smallest, so halving it halves dt
    assert!((coarse.dt / fine.dt - 2.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn morton_round_trip(level in 1u32..16, seed in any::<u64>()) {
        let side = 1u64 << level;
        let (i, j) = (seed % side, (seed >> 32) % side);
        let m = morton_encode(i, j, level).unwrap();
        prop_assert!(m < side * side);
        prop_assert_eq!(morton_decode(m, level).unwrap(), (i, j));
    }

    #[test]
    fn partitions_are_balanced(lx in 0u32..4, ly in 0u32..4, nz in 1usize..6, parts in 1usize..20) {
        let (nx, ny) = (1usize << lx, 1usize << ly);
        let mesh = build_box_mesh(nx, ny, nz, [1.0; 3], Mapping::Identity).unwrap();
        match partition_columns(&mesh, parts) {
            Err(_) => prop_assert!(parts > nx * ny),
            Ok(ps) => {
                prop_assert_eq!(ps.len(), parts);
                let counts: Vec<usize> = ps.iter().map(|p| p.element_count()).collect();
                prop_assert_eq!(counts.iter().sum::<usize>(), mesh.n_elements());
                prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= nz);
                prop_assert!(counts.iter().all(|&c| c > 0 && c % nz == 0));
            }
        }
    }

    #[test]
    fn dss_reproduces_continuous_fields(order in 1usize..5, warp in 0.0f64..0.05, seed in any::<u64>()) {
        let re = ReferenceElement::new(order).unwrap();
        let mesh = build_box_mesh(2, 2, 2, [1.0; 3], Mapping::Warp { amplitude: warp }).unwrap();
        let m = compute_metrics(&mesh, &re).unwrap();
        let num = build_cg_numbering(&mesh, &m, &re).unwrap();
        let mut f = StateCg::zeros(num.n_global);
        for (i, v) in f.data.iter_mut().enumerate() {
            *v = ((i as u64).wrapping_mul(seed | 1) % 1000) as f64 / 7.0;
        }
        let mut d = scatter(&f, &num);
        let w = tensor_weights(&re);
        let npe = re.nodes_per_element();
        for e in 0..mesh.n_elements() {
            for v in 0..NVARS {
                for node in 0..npe {
                    d.data[(e * NVARS + v) * npe + node] *= w[node] * m.jacobian[e * npe + node];
                }
            }
        }
        let back = dss(&d, &num).unwrap();
        for (a, b) in back.data.iter().zip(&f.data) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn filter_keeps_constants(order in 2usize..10, strength in 0.0f64..1.0, sharp in 1.0f64..20.0) {
        let mut params = FilterParams::default_for(order);
        params.strength = strength;
        params.order = sharp;
        let re = ReferenceElement::with_filter(order, params).unwrap();
        for v in re.filter.mul_vec(&vec![3.5; order + 1]) {
            prop_assert!((v - 3.5).abs() < 1e-12);
        }
    }

    #[test]
    fn ledger_linear_and_penalty_monotone(
        order in 1usize..8,
        ex in 1.0f64..300.0,
        ez in 1.0f64..300.0,
        steps in 1.0f64..1000.0,
        nodes in 1.0f64..100.0,
        s in 0usize..3,
    ) {
        let cfg = SimConfig {
            order,
            elements: [ex, ex, ez],
            machine_nodes: nodes,
            steps,
            stages: 5,
            scheme: Scheme::ALL[s],
            vars: 5,
            metric_recompute: false,
        };
        let a = count_costs(&cfg).unwrap();
        let b = count_costs(&SimConfig { steps: 3.0 * steps, ..cfg }).unwrap();
        let m = MachineModel::default();
        let pen = random_access_penalty(&a, &cfg, &m);
        for k in Kernel::ALL {
            let (x, y, z) = (a.get(k), b.get(k), pen.get(k));
            prop_assert!((y.flops - 3.0 * x.flops).abs() <= 1e-12 * y.flops);
            prop_assert!((y.read - 3.0 * x.read).abs() <= 1e-12 * y.read);
            prop_assert!(x.flops >= 0.0 && x.read >= 0.0 && x.write >= 0.0);
            prop_assert_eq!(z.flops, x.flops);
            prop_assert_eq!(z.write, x.write);
            prop_assert!(z.read >= x.read);
        }
    }

    #[test]
    fn snapshot_round_trip(nodes in 0usize..40, seed in any::<u64>(), time in any::<f64>(), step in any::<u64>()) {
        let data: Vec<f64> = (0..nodes * NVARS)
            .map(|i| f64::from_bits(seed.rotate_left(i as u32) ^ i as u64))
            .collect();
        let snap = Snapshot {
            layout: Layout::Cg,
            order: 3,
            n_elements: 1,
            n_nodes: nodes as u64,
            n_vars: 5,
            time,
            step,
            data,
        };
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        let back = Snapshot::read_from(buf.as_slice()).unwrap();
        // compare bit patterns so NaN payloads count too
        prop_assert_eq!(back.time.to_bits(), snap.time.to_bits());
        prop_assert!(back.data.iter().zip(&snap.data).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert_eq!(back.data.len(), snap.data.len());
        let bad = Snapshot { n_nodes: nodes as u64 + 1, ..snap };
        prop_assert!(bad.write_to(Vec::new()).is_err());
    }
}
