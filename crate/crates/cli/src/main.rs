use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use colsem::harness::report::{
    diagnostics_csv, mesh_summary, nodal_csv, partition_csv, run_summary, scaling_csv, scaling_text, sweep_csv,
    write_snapshot,
};
use colsem::harness::solver::snapshot_of;
use colsem::harness::{run, scale_experiment, BubbleConfig, HarnessError, PerfScenario, Problem, RunOptions};
use colsem::mesh::{build_box_mesh, build_cg_numbering, compute_metrics, partition_columns};
use colsem::perf::presets::bubble_calibration;
use colsem::perf::{
    cache_line_penalty, count_costs, emit_table, order_sweep, random_access_penalty, Calibration, Preset, TableColumn,
};
use colsem::reference::ReferenceElement;

#[derive(Parser)]
#[command(name = "colsem", version, about = "Column-structured spectral-element core and storage performance model")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat key-value config file (TOML syntax).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for CSV files and snapshots.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build and partition a mesh and report its structure.
    Mesh {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        #[arg(long)]
        layers: Option<usize>,
        #[arg(long)]
        parts: Option<usize>,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Run the rising bubble.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        parts: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        /// cg, hybrid or dg.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Strong scaling sweep over worker counts.
    Scale {
        #[command(flatten)]
        common: Common,
        /// Comma-separated worker counts.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        threads: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        steps: usize,
    },
    /// Performance-model tables.
    Perfmodel {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        machine: MachineArgs,
        /// Derive the table rows from the reference inputs: table1, table2 or table3.
        #[arg(long)]
        preset: Option<String>,
        /// Charge the random-access penalty only above L2 (auto), always or never.
        #[arg(long, value_enum, default_value_t = Penalty::Auto)]
        penalty: Penalty,
    },
    /// Time per step and time to solution versus polynomial order.
    SweepOrder {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        machine: MachineArgs,
        #[arg(long, default_value_t = 1)]
        min_order: usize,
        #[arg(long, default_value_t = 7)]
        max_order: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Penalty {
    Auto,
    On,
    Off,
}

#[derive(Args, Clone, Default)]
struct MachineArgs {
    /// Memory bandwidth per node, bytes/s.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Peak flop rate per node, flops/s.
    #[arg(long)]
    peak: Option<f64>,
    #[arg(long)]
    cache_line: Option<f64>,
    /// L2 capacity, bytes.
    #[arg(long)]
    l2: Option<f64>,
}

fn read_text(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn bubble_config(common: &Common) -> Result<BubbleConfig, HarnessError> {
    match &common.config {
        Some(p) => BubbleConfig::from_toml(&read_text(p)?),
        None => Ok(BubbleConfig::default()),
    }
}

fn scenario(common: &Common, m: &MachineArgs) -> Result<PerfScenario, HarnessError> {
    let mut s = match &common.config {
        Some(p) => PerfScenario::from_toml(&read_text(p)?)?,
        None => PerfScenario::default(),
    };
    s.bandwidth = m.bandwidth.unwrap_or(s.bandwidth);
    s.peak_flops = m.peak.unwrap_or(s.peak_flops);
    s.cache_line = m.cache_line.unwrap_or(s.cache_line);
    s.l2_bytes = m.l2.unwrap_or(s.l2_bytes);
    Ok(s)
}

fn out_dir(common: &Common) -> Result<Option<&Path>, HarnessError> {
    if let Some(d) = &common.out {
        std::fs::create_dir_all(d)?;
    }
    Ok(common.out.as_deref())
}

fn write(dir: Option<&Path>, name: &str, text: &str) -> Result<(), HarnessError> {
    if let Some(d) = dir {
        std::fs::write(d.join(name), text)?;
    }
    Ok(())
}

fn cmd_mesh(
    common: &Common,
    nx: Option<usize>,
    ny: Option<usize>,
    layers: Option<usize>,
    parts: Option<usize>,
    order: Option<usize>,
) -> Result<(), HarnessError> {
    let mut cfg = bubble_config(common)?;
    cfg.nx = nx.unwrap_or(cfg.nx);
    cfg.ny = ny.unwrap_or(cfg.ny);
    cfg.nz = layers.unwrap_or(cfg.nz);
    cfg.parts = parts.unwrap_or(cfg.parts);
    cfg.order = order.unwrap_or(cfg.order);
    cfg.validate()?;
    let t = Instant::now();
    let re = ReferenceElement::with_filter(cfg.order, cfg.filter())?;
    let mesh = build_box_mesh(cfg.nx, cfg.ny, cfg.nz, cfg.extent(), cfg.mapping())?;
    let metrics = compute_metrics(&mesh, &re)?;
    let numbering = build_cg_numbering(&mesh, &metrics, &re)?;
    let partitions = partition_columns(&mesh, cfg.parts)?;
    let secs = t.elapsed().as_secs_f64();
    print!("{}", mesh_summary(&mesh, &numbering, &partitions, secs));
    write(out_dir(common)?, "partitions.csv", &partition_csv(&mesh, &partitions))
}

/// Returns whether the run diverged.
fn cmd_run(
    common: &Common,
    parts: Option<usize>,
    steps: Option<usize>,
    scheme: Option<String>,
    snapshot_every: Option<usize>,
) -> Result<bool, HarnessError> {
    let mut cfg = bubble_config(common)?;
    cfg.parts = parts.unwrap_or(cfg.parts);
    cfg.steps = steps.or(cfg.steps);
    cfg.scheme = scheme.unwrap_or(cfg.scheme);
    cfg.snapshot_every = snapshot_every.unwrap_or(cfg.snapshot_every);
    let problem = Problem::build(&cfg)?;
    let dir = out_dir(common)?;
    let report = run(&problem, cfg.parts, problem.steps(), RunOptions { snapshot_every: cfg.snapshot_every })?;
    let summary = run_summary(&report);
    print!("{summary}");
    write(dir, "summary.txt", &summary)?;
    write(dir, "diagnostics.csv", &diagnostics_csv(&report))?;
    if let Some(d) = dir {
        for s in &report.snapshots {
            write_snapshot(&d.join(format!("snapshot_{:06}.bin", s.step)), s)?;
        }
        let last = report.completed_steps();
        let snap = snapshot_of(&problem, &report.final_state, last, last as f64 * problem.dt);
        write_snapshot(&d.join("final.bin"), &snap)?;
        write(dir, "final_nodes.csv", &nodal_csv(&problem, &report.final_state))?;
    }
    Ok(report.failure.is_some())
}

fn cmd_scale(common: &Common, threads: &[usize], steps: usize) -> Result<(), HarnessError> {
    let cfg = bubble_config(common)?;
    let problem = Problem::build(&cfg)?;
    let rows = scale_experiment(&problem, threads, steps)?;
    print!("{}", scaling_text(&rows));
    write(out_dir(common)?, "scaling.csv", &scaling_csv(&rows))
}

fn cmd_perfmodel(common: &Common, m: &MachineArgs, preset: Option<String>, penalty: Penalty) -> Result<(), HarnessError> {
    let sc = scenario(common, m)?;
    let machine = sc.machine()?;
    let dir = out_dir(common)?;
    if let Some(p) = preset {
        let preset: Preset = p.parse()?;
        let (text, csv) = emit_table(&preset.columns(), &machine);
        print!("{text}");
        return write(dir, "perf_table.csv", &csv);
    }
    let cal = if sc.calibrate { bubble_calibration() } else { Calibration::default() };
    let mut raw_cols = Vec::new();
    let mut cal_cols = Vec::new();
    for scheme in sc.schemes()? {
        let cfg = sc.sim_config(scheme)?;
        let price = |l| match penalty {
            Penalty::Auto => random_access_penalty(&l, &cfg, &machine),
            Penalty::On => cache_line_penalty(&l, &machine),
            Penalty::Off => l,
        };
        let raw = count_costs(&cfg)?;
        raw_cols.push(TableColumn::from_ledger(scheme.label(), &price(raw)));
        cal_cols.push(TableColumn::from_ledger(scheme.label(), &price(cal.apply(&raw))));
    }
    let (raw_text, raw_csv) = emit_table(&raw_cols, &machine);
    let (text, csv) = emit_table(&cal_cols, &machine);
    println!("model (calibrated):\n{text}\nraw analytic counts:\n{raw_text}");
    write(dir, "perf_table.csv", &csv)?;
    write(dir, "perf_table_raw.csv", &raw_csv)
}

fn cmd_sweep(common: &Common, m: &MachineArgs, lo: usize, hi: usize) -> Result<(), HarnessError> {
    let sc = scenario(common, m)?;
    let machine = sc.machine()?;
    if lo > hi {
        return Err(HarnessError::Config(format!("min_order {lo} exceeds max_order {hi}")));
    }
    let cal = if sc.calibrate { bubble_calibration() } else { Calibration::default() };
    let mut csv = String::new();
    println!("{:>6} {:>5} {:>10} {:>14} {:>18}", "scheme", "p", "steps", "time/step s", "time to solution s");
    for scheme in sc.schemes()? {
        let pts = order_sweep(&sc.sim_config(scheme)?, lo..=hi, &machine, &cal)?;
        for p in &pts {
            println!(
                "{:>6} {:>5} {:>10.1} {:>14.5} {:>18.3}",
                scheme.label(),
                p.order,
                p.steps,
                p.time_per_step,
                p.time_to_solution
            );
        }
        let part = sweep_csv(scheme.label(), &pts);
        if csv.is_empty() {
            csv = part;
        } else {
            csv.extend(part.lines().skip(1).map(|l| format!("{l}\n")));
        }
    }
    write(out_dir(common)?, "sweep.csv", &csv)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Mesh { common, nx, ny, layers, parts, order } => cmd_mesh(&common, nx, ny, layers, parts, order),
        Command::Run { common, parts, steps, scheme, snapshot_every } => {
            match cmd_run(&common, parts, steps, scheme, snapshot_every) {
                Ok(true) => return ExitCode::from(3),
                Ok(false) => Ok(()),
                Err(e) => Err(e),
            }
        }
        Command::Scale { common, threads, steps } => cmd_scale(&common, &threads, steps),
        Command::Perfmodel { common, machine, preset, penalty } => cmd_perfmodel(&common, &machine, preset, penalty),
        Command::SweepOrder { common, machine, min_order, max_order } => {
            cmd_sweep(&common, &machine, min_order, max_order)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
