//! Strong scaling at fixed problem size.

use super::solver::{run, Problem, RunOptions, RunReport};
use super::HarnessError;
use crate::dynamics::PhaseTimes;

/// Strong scaling efficiency t₀T₀/(tT) of a run on `t` workers taking
/// `time` against a baseline of `t0` workers taking `time0`.
pub fn efficiency(time0: f64, t0: usize, time: f64, t: usize) -> f64 {
    time0 * t0 as f64 / (time * t as f64)
}

#[derive(Debug, Clone)]
pub struct ScalingRow {
    pub parts: usize,
    pub total: f64,
    pub phases: PhaseTimes,
    pub efficiency: f64,
    /// Efficiency of each phase on its own.
    pub phase_efficiency: PhaseTimes,
    pub elements_min: usize,
    pub elements_max: usize,
    pub oversubscribed: bool,
}

/// Table rows from finished runs; the baseline is the run with the fewest workers.
pub fn scaling_rows(reports: &[RunReport]) -> Vec<ScalingRow> {
    let Some(base) = reports.iter().min_by_key(|r| r.parts) else {
        return Vec::new();
    };
    let eff = |a: f64, b: f64, t: usize| efficiency(a, base.parts, b, t);
    reports
        .iter()
        .map(|r| ScalingRow {
            parts: r.parts,
            total: r.total,
            phases: r.phases,
            efficiency: eff(base.total, r.total, r.parts),
            phase_efficiency: PhaseTimes {
                create_rhs: eff(base.phases.create_rhs, r.phases.create_rhs, r.parts),
                dss: eff(base.phases.dss, r.phases.dss, r.parts),
                filter: eff(base.phases.filter, r.phases.filter, r.parts),
                update: eff(base.phases.update, r.phases.update, r.parts),
            },
            elements_min: r.elements_per_part.iter().copied().min().unwrap_or(0),
            elements_max: r.elements_per_part.iter().copied().max().unwrap_or(0),
            oversubscribed: r.oversubscribed,
        })
        .collect()
}

/// Run the same problem for every worker count. At least two steps are
/// needed since the first one is not timed.
pub fn scale_experiment(problem: &Problem, parts: &[usize], steps: usize) -> Result<Vec<ScalingRow>, HarnessError> {
    if steps < 2 {
        return Err(HarnessError::Config("scaling runs need at least 2 steps".into()));
    }
    if parts.is_empty() {
        return Err(HarnessError::Config("no worker counts given".into()));
    }
    let reports = parts
        .iter()
        .map(|&t| {
            let r = run(problem, t, steps, RunOptions::default())?;
            match r.failure {
                Some(f) => Err(HarnessError::Worker(format!("run on {t} workers diverged at step {}", f.step))),
                None => Ok(r),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(scaling_rows(&reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::BubbleConfig;

    #[test]
    fn efficiency_arithmetic() {
        assert_eq!(efficiency(10.0, 1, 10.0, 1), 1.0);
        assert_eq!(efficiency(8.0, 1, 1.0, 8), 1.0);
        assert_eq!(efficiency(8.0, 1, 2.0, 8), 0.5);
        assert_eq!(efficiency(6.0, 2, 4.0, 4), 0.75);
    }

    #[test]
    fn experiment_rows() {
        let cfg = BubbleConfig { nx: 2, ny: 2, nz: 4, order: 2, ..Default::default() };
        let p = Problem::build(&cfg).unwrap();
        let rows = scale_experiment(&p, &[1, 2, 4], 3).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].efficiency, 1.0);
        assert_eq!(rows[0].phase_efficiency.create_rhs, 1.0);
        for r in &rows {
            assert!(r.efficiency > 0.0 && r.total > 0.0);
            assert!(r.phases.total() <= r.total * 1.0001);
            assert_eq!(r.elements_min, r.elements_max);
        }
        assert!(scale_experiment(&p, &[1], 1).is_err());
    }
}
