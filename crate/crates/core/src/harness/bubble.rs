//! Rising thermal bubble in a neutrally stratified atmosphere.

use super::{BubbleConfig, HarnessError};
use crate::dynamics::{GasConstants, ReferenceValues};
use crate::mesh::{CgNumbering, MetricTerms};
use crate::storage::{StateCg, NVARS};

/// Hydrostatic background of constant θ₀ at height z. The Exner function
/// Π = 1 − g z/(c_p θ₀) gives p̄ = p₀ Π^(c_p/R) and ρ̄ = p̄/(R θ₀ Π).
pub fn hydrostatic(theta0: f64, z: f64, c: &GasConstants) -> Result<ReferenceValues, HarnessError> {
    let exner = 1.0 - c.g * z / (c.cp * theta0);
    if !(exner > 0.0) {
        return Err(HarnessError::Config(format!("atmosphere top exceeded at z = {z}")));
    }
    let p = c.p0 * exner.powf(c.cp / c.r);
    let rho = p / (c.r * theta0 * exner);
    let theta = rho * theta0;
    // pressure from the equation of state, so P' vanishes exactly at rest
    let pressure = c.pressure(rho, theta)?;
    Ok(ReferenceValues { rho, theta, pressure })
}

/// θ' = (θ_c/2)(1 + cos(π r/r_c)) inside the sphere, 0 outside.
pub fn perturbation(cfg: &BubbleConfig, x: [f64; 3]) -> f64 {
    let c = cfg.center();
    let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2)).sqrt();
    if r <= cfg.radius {
        0.5 * cfg.theta_c * (1.0 + (std::f64::consts::PI * r / cfg.radius).cos())
    } else {
        0.0
    }
}

/// Coordinates of every global node.
pub fn global_coords(numbering: &CgNumbering, metrics: &MetricTerms) -> Vec<[f64; 3]> {
    let mut out = vec![[0.0; 3]; numbering.n_global];
    for (slot, &g) in numbering.global_ids.iter().enumerate() {
        out[g] = metrics.coords[slot];
    }
    out
}

/// Initial state and reference atmosphere per global node. The perturbation
/// is added at constant pressure: Θ = ρθ keeps its background value and
/// ρ = Θ̄/(θ₀ + θ'). Velocity is zero.
pub fn init_bubble(
    cfg: &BubbleConfig,
    coords: &[[f64; 3]],
    constants: &GasConstants,
) -> Result<(StateCg, Vec<ReferenceValues>), HarnessError> {
    cfg.validate()?;
    constants.validate()?;
    let mut state = StateCg::zeros(coords.len());
    let mut reference = Vec::with_capacity(coords.len());
    for (g, x) in coords.iter().enumerate() {
        let rv = hydrostatic(cfg.theta0, x[2], constants)?;
        let theta = cfg.theta0 + perturbation(cfg, *x);
        let q = &mut state.data[g * NVARS..(g + 1) * NVARS];
        q[0] = rv.theta / theta;
        q[4] = rv.theta;
        reference.push(rv);
    }
    Ok((state, reference))
}

/// θ' = Θ/ρ − Θ̄/ρ̄ at one node.
pub fn theta_prime(q: &[f64], rv: &ReferenceValues) -> f64 {
    q[4] / q[0] - rv.theta / rv.rho
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_values() {
        let c = GasConstants::default();
        let rv = hydrostatic(300.0, 0.0, &c).unwrap();
        assert!((rv.pressure - c.p0).abs() < 1e-9 * c.p0);
        assert!((rv.rho - c.p0 / (c.r * 300.0)).abs() < 1e-13);
    }

    #[test]
    fn hydrostatic_balance() {
        // dp̄/dz = −ρ̄ g, checked by central differences
        let c = GasConstants::default();
        for z in [10.0, 500.0, 990.0] {
            let h = 1e-2;
            let up = hydrostatic(300.0, z + h, &c).unwrap().pressure;
            let dn = hydrostatic(300.0, z - h, &c).unwrap().pressure;
            let rv = hydrostatic(300.0, z, &c).unwrap();
            let dpdz = (up - dn) / (2.0 * h);
            assert!((dpdz + rv.rho * c.g).abs() < 1e-5 * rv.rho * c.g);
        }
        assert!(hydrostatic(300.0, 1e5, &c).is_err());
    }

    #[test]
    fn perturbation_shape() {
        let cfg = BubbleConfig::default();
        let c = cfg.center();
        assert_eq!(perturbation(&cfg, c), cfg.theta_c);
        let edge = [c[0] + cfg.radius, c[1], c[2]];
        assert!(perturbation(&cfg, edge).abs() < 1e-16);
        // slope vanishes at the rim from both sides
        let h = 1e-4;
        let inside = perturbation(&cfg, [c[0] + cfg.radius - h, c[1], c[2]]);
        assert!(inside / h < 1e-6);
        assert_eq!(perturbation(&cfg, [c[0] + cfg.radius + h, c[1], c[2]]), 0.0);
    }

    #[test]
    fn init_at_constant_pressure() {
        let cfg = BubbleConfig::default();
        let c = GasConstants::default();
        let coords = [cfg.center(), [100.0, 100.0, 100.0]];
        let (s, r) = init_bubble(&cfg, &coords, &c).unwrap();
        let q = s.node(0);
        assert!((theta_prime(q, &r[0]) - cfg.theta_c).abs() < 1e-12);
        assert!((c.pressure(q[0], q[4]).unwrap() - r[0].pressure).abs() < 1e-9);
        assert!(q[0] < r[0].rho);
        assert!((s.node(1)[0] / r[1].rho - 1.0).abs() < 1e-15);
        assert_eq!(&q[1..4], &[0.0; 3]);
    }
}
