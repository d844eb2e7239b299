//! Cost versus polynomial order at fixed point count and Courant number.

use super::{count_costs, random_access_penalty, Calibration, MachineModel, PerfError, SimConfig};
use crate::reference::ReferenceElement;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub order: usize,
    pub elements: [f64; 3],
    pub steps: f64,
    pub time_per_step: f64,
    pub time_to_solution: f64,
}

/// Smallest Lobatto node gap relative to uniform spacing of p intervals.
/// The explicit step size scales with it at fixed Courant number.
pub fn gap_ratio(order: usize) -> Result<f64, PerfError> {
    let re = ReferenceElement::new(order).map_err(|e| PerfError::Config(e.to_string()))?;
    Ok(re.min_gap() * order as f64 / 2.0)
}

/// Sweep `orders`, keeping `p_base·e + 1` points per direction of `base`.
/// Step counts grow as the minimum node gap shrinks relative to `base`.
pub fn order_sweep(
    base: &SimConfig,
    orders: std::ops::RangeInclusive<usize>,
    machine: &MachineModel,
    calibration: &Calibration,
) -> Result<Vec<SweepPoint>, PerfError> {
    machine.validate()?;
    if *orders.start() < 1 || *orders.end() > 10 {
        return Err(PerfError::Config("orders must lie in 1..=10".into()));
    }
    let pb = base.order as f64;
    let base_gap = gap_ratio(base.order)?;
    orders
        .map(|p| {
            let elements = base.elements.map(|e| pb * e / p as f64);
            let steps = base.steps * base_gap / gap_ratio(p)?;
            let cfg = SimConfig { order: p, elements, steps: 1.0, ..*base };
            let raw = calibration.apply(&count_costs(&cfg)?);
            let time_per_step = random_access_penalty(&raw, &cfg, machine).runtime(machine);
            Ok(SweepPoint { order: p, elements, steps, time_per_step, time_to_solution: time_per_step * steps })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perf::presets::{bubble, bubble_calibration, TABLE2};
    use crate::storage::Scheme;

    #[test]
    fn gap_ratios() {
        assert_eq!(gap_ratio(1).unwrap(), 1.0);
        assert!((gap_ratio(3).unwrap() - 1.5 * (1.0 - 0.2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn base_order_reproduces_base_config() {
        let m = MachineModel::default();
        let cal = bubble_calibration();
        for (i, s) in Scheme::ALL.into_iter().enumerate() {
            let pts = order_sweep(&bubble(s), 3..=3, &m, &cal).unwrap();
            assert_eq!(pts[0].steps, 690.0);
            let reference = (TABLE2[i].1 + TABLE2[i].2) / 28.5;
            assert!((pts[0].time_to_solution / reference - 1.0).abs() < 0.1, "{s:?}");
        }
    }

    #[test]
    fn point_count_held_fixed() {
        let base = bubble(Scheme::Cg);
        let pts = order_sweep(&base, 1..=7, &MachineModel::default(), &Calibration::default()).unwrap();
        for pt in pts {
            let cfg = SimConfig { order: pt.order, elements: pt.elements, ..base };
            assert!((cfg.unique_points() / base.unique_points() - 1.0).abs() < 1e-12);
        }
        assert!(order_sweep(&base, 0..=3, &MachineModel::default(), &Calibration::default()).is_err());
    }
}
