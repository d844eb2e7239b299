//! Compressible Euler right-hand side in strong form.
//!
//! Prognostic variables per node: ρ, ρu, ρv, ρw, Θ = ρθ. Pressure is split
//! into a frozen hydrostatic part p̄ and a perturbation P' so a fluid at rest
//! in the reference state has an exactly zero right-hand side.

use std::time::Instant;

use thiserror::Error;

use crate::mesh::metrics::apply_along;
use crate::mesh::numbering::{tensor_weights, WALL_X, WALL_Y, WALL_Z};
use crate::mesh::{ColumnMesh, MetricTerms};
use crate::reference::{Matrix, ReferenceElement};
use crate::storage::{HaloTransport, Layout, LocalDomain, Scheme, StorageError, NVARS};
use crate::time::SemiDiscrete;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid thermodynamic state: {0}")]
    InvalidState(String),
    #[error("state diverged in element {element}")]
    DivergedState { element: usize },
    #[error("inconsistent gas constants: {0}")]
    Constants(String),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasConstants {
    pub r: f64,
    pub cp: f64,
    pub cv: f64,
    pub p0: f64,
    pub g: f64,
}

impl Default for GasConstants {
    fn default() -> Self {
        Self { r: 287.0, cp: 1004.5, cv: 717.5, p0: 1e5, g: 9.81 }
    }
}

impl GasConstants {
    pub fn gamma(&self) -> f64 {
        self.cp / self.cv
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.r > 0.0 && self.cv > 0.0 && self.p0 > 0.0 && self.g >= 0.0) {
            return Err(DynamicsError::Constants("R, c_v, p_0 must be positive and g ≥ 0".into()));
        }
        if (self.cp - self.cv - self.r).abs() > 1e-9 * self.cp {
            return Err(DynamicsError::Constants(format!(
                "c_p = {} differs from c_v + R = {}",
                self.cp,
                self.cv + self.r
            )));
        }
        Ok(())
    }

    #[inline]
    fn pressure_raw(&self, theta: f64) -> f64 {
        self.p0 * (self.r * theta / self.p0).powf(self.gamma())
    }

    /// Equation of state P = p_0 (R Θ / p_0)^γ.
    pub fn pressure(&self, rho: f64, theta: f64) -> Result<f64, DynamicsError> {
        if !(rho > 0.0 && theta > 0.0) {
            return Err(DynamicsError::InvalidState(format!("ρ = {rho}, Θ = {theta}")));
        }
        Ok(self.pressure_raw(theta))
    }

    pub fn sound_speed(&self, rho: f64, theta: f64) -> Result<f64, DynamicsError> {
        Ok((self.gamma() * self.pressure(rho, theta)? / rho).sqrt())
    }
}

/// Flux tensor rows [ρu; ρu⊗u + P'I; Θu] for one node, `[var][direction]`.
pub fn flux(c: &GasConstants, q: &[f64; NVARS], p_ref: f64) -> Result<[[f64; 3]; NVARS], DynamicsError> {
    let p = c.pressure(q[0], q[4])? - p_ref;
    Ok(flux_with_pressure(q, p))
}

#[inline]
fn flux_with_pressure(q: &[f64; NVARS], p_prime: f64) -> [[f64; 3]; NVARS] {
    let inv = 1.0 / q[0];
    let u = [q[1] * inv, q[2] * inv, q[3] * inv];
    let mut f = [[0.0; 3]; NVARS];
    for d in 0..3 {
        f[0][d] = q[1 + d];
        for m in 0..3 {
            f[1 + m][d] = q[1 + m] * u[d];
        }
        f[1 + d][d] += p_prime;
        f[4][d] = q[4] * u[d];
    }
    f
}

/// Physical derivative ∂f/∂x_axis of one element's nodal array by the chain
/// rule through the three reference directions. `dxi_dx` holds the element's
/// per-node metric entries.
pub fn local_derivative(
    d: &Matrix,
    values: &[f64],
    dxi_dx: &[[f64; 9]],
    axis: usize,
    scratch: &mut [f64],
    out: &mut [f64],
) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for r in 0..3 {
        apply_along(d, values, r, scratch);
        for ((o, s), m) in out.iter_mut().zip(scratch.iter()).zip(dxi_dx) {
            *o += m[r * 3 + axis] * s;
        }
    }
}

/// Time-invariant hydrostatic background per node: ρ̄, Θ̄ and p̄ = P(Θ̄).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceValues {
    pub rho: f64,
    pub theta: f64,
    pub pressure: f64,
}

/// Accumulated wall time per phase, seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    pub create_rhs: f64,
    pub dss: f64,
    pub filter: f64,
    pub update: f64,
}

impl PhaseTimes {
    pub fn total(&self) -> f64 {
        self.create_rhs + self.dss + self.filter + self.update
    }

    pub fn max(&self, o: &PhaseTimes) -> PhaseTimes {
        PhaseTimes {
            create_rhs: self.create_rhs.max(o.create_rhs),
            dss: self.dss.max(o.dss),
            filter: self.filter.max(o.filter),
            update: self.update.max(o.update),
        }
    }
}

/// Elements grouped so that no two elements in one batch share a grid
/// point: eight colors by the parity of the element's lattice position.
/// Batches can be processed concurrently with a barrier between them.
pub fn neighbor_exclusion_batches(mesh: &ColumnMesh, elements: std::ops::Range<usize>) -> Vec<Vec<usize>> {
    let mut batches = vec![Vec::new(); 8];
    for e in elements {
        let [x, y, z] = mesh.element_lattice(e);
        batches[(x % 2) + 2 * (y % 2) + 4 * (z % 2)].push(e);
    }
    batches.retain(|b| !b.is_empty());
    batches
}

/// Semi-discrete operator for one partition: element kernels, DSS with halo
/// exchange, filter and wall conditions.
pub struct Discretization<T: HaloTransport> {
    pub re: ReferenceElement,
    pub constants: GasConstants,
    pub scheme: Scheme,
    pub domain: LocalDomain,
    transport: T,
    wj: Vec<f64>,
    dxi_dx: Vec<[f64; 9]>,
    ref_node: Vec<ReferenceValues>,
    ref_elem: Option<Vec<ReferenceValues>>,
    filter_on: bool,
    pub times: PhaseTimes,
    // workspaces, sized once
    q: Vec<f64>,
    fl: Vec<f64>,
    div: Vec<f64>,
    scratch: Vec<f64>,
    dv: Vec<f64>,
    contrib: Vec<f64>,
    cg_tmp: Vec<f64>,
}

impl<T: HaloTransport> Discretization<T> {
    /// `reference` is indexed by global node id.
    pub fn new(
        re: ReferenceElement,
        constants: GasConstants,
        scheme: Scheme,
        domain: LocalDomain,
        metrics: &MetricTerms,
        reference: &[ReferenceValues],
        transport: T,
    ) -> Self {
        let npe = re.nodes_per_element();
        let w = tensor_weights(&re);
        let range = domain.elements.start * npe..domain.elements.end * npe;
        let wj = metrics.jacobian[range.clone()]
            .iter()
            .enumerate()
            .map(|(i, j)| w[i % npe] * j)
            .collect();
        let dxi_dx = metrics.dxi_dx[range].to_vec();
        let ref_node: Vec<ReferenceValues> = domain.global_ids.iter().map(|&g| reference[g]).collect();
        let ref_elem = (scheme.reference_layout() == Layout::Dg)
            .then(|| domain.element_nodes.iter().map(|&l| ref_node[l]).collect());
        let filter_on = !re.filter_is_identity();
        let ne = domain.n_elements();
        let nn = domain.n_nodes();
        Self {
            re,
            constants,
            scheme,
            transport,
            wj,
            dxi_dx,
            ref_node,
            ref_elem,
            filter_on,
            times: PhaseTimes::default(),
            q: vec![0.0; NVARS * npe],
            fl: vec![0.0; NVARS * 3 * npe],
            div: vec![0.0; NVARS * npe],
            scratch: vec![0.0; npe],
            dv: vec![0.0; npe],
            contrib: vec![0.0; ne * NVARS * npe],
            cg_tmp: vec![0.0; nn * NVARS],
            domain,
        }
    }

    pub fn state_len(&self) -> usize {
        match self.scheme.state_layout() {
            Layout::Cg => self.domain.n_nodes() * NVARS,
            Layout::Dg => self.domain.n_elements() * NVARS * self.re.nodes_per_element(),
        }
    }

    /// Local state in this scheme's layout from local CG node values.
    pub fn state_from_nodes(&self, cg: &[f64]) -> Vec<f64> {
        match self.scheme.state_layout() {
            Layout::Cg => cg.to_vec(),
            Layout::Dg => {
                let mut dg = vec![0.0; self.state_len()];
                self.domain.scatter_local(cg, &mut dg);
                dg
            }
        }
    }

    /// Local CG node values of a state in this scheme's layout.
    pub fn node_values(&self, state: &[f64]) -> Vec<f64> {
        match self.scheme.state_layout() {
            Layout::Cg => state.to_vec(),
            Layout::Dg => {
                let npe = self.re.nodes_per_element();
                let mut out = vec![0.0; self.domain.n_nodes() * NVARS];
                // later copies are bitwise equal; any one will do
                for (slot, &l) in self.domain.element_nodes.iter().enumerate() {
                    let (e, node) = (slot / npe, slot % npe);
                    for v in 0..NVARS {
                        out[l * NVARS + v] = state[(e * NVARS + v) * npe + node];
                    }
                }
                out
            }
        }
    }

    pub fn reference_nodes(&self) -> &[ReferenceValues] {
        &self.ref_node
    }

    fn gather(&mut self, state: &[f64], le: usize) {
        let npe = self.re.nodes_per_element();
        match self.scheme.state_layout() {
            Layout::Cg => {
                let nodes = &self.domain.element_nodes[le * npe..(le + 1) * npe];
                for (node, &l) in nodes.iter().enumerate() {
                    for v in 0..NVARS {
                        self.q[v * npe + node] = state[l * NVARS + v];
                    }
                }
            }
            Layout::Dg => {
                let s = le * NVARS * npe;
                self.q.copy_from_slice(&state[s..s + NVARS * npe]);
            }
        }
    }

    #[inline]
    fn reference_at(&self, le: usize, node: usize) -> ReferenceValues {
        let npe = self.re.nodes_per_element();
        match &self.ref_elem {
            Some(r) => r[le * npe + node],
            None => self.ref_node[self.domain.element_nodes[le * npe + node]],
        }
    }

    /// Element contributions −J w (∇·F − S) for every local element.
    fn element_contributions(&mut self, state: &[f64]) -> Result<(), DynamicsError> {
        let npe = self.re.nodes_per_element();
        let g = self.constants.g;
        for le in 0..self.domain.n_elements() {
            self.gather(state, le);
            for node in 0..npe {
                let q = [
                    self.q[node],
                    self.q[npe + node],
                    self.q[2 * npe + node],
                    self.q[3 * npe + node],
                    self.q[4 * npe + node],
                ];
                if !(q[0] > 0.0 && q[4] > 0.0 && q.iter().all(|x| x.is_finite())) {
                    return Err(DynamicsError::DivergedState { element: self.domain.elements.start + le });
                }
                let rv = self.reference_at(le, node);
                let f = flux_with_pressure(&q, self.constants.pressure_raw(q[4]) - rv.pressure);
                for v in 0..NVARS {
                    for d in 0..3 {
                        self.fl[(v * 3 + d) * npe + node] = f[v][d];
                    }
                }
            }
            let metrics = &self.dxi_dx[le * npe..(le + 1) * npe];
            for v in 0..NVARS {
                let div = &mut self.div[v * npe..(v + 1) * npe];
                div.iter_mut().for_each(|x| *x = 0.0);
                for d in 0..3 {
                    let f = &self.fl[(v * 3 + d) * npe..(v * 3 + d + 1) * npe];
                    for r in 0..3 {
                        apply_along(&self.re.diff, f, r, &mut self.dv);
                        for ((o, s), m) in div.iter_mut().zip(&self.dv).zip(metrics) {
                            *o += m[r * 3 + d] * s;
                        }
                    }
                }
            }
            let base = le * NVARS * npe;
            for node in 0..npe {
                let wj = self.wj[le * npe + node];
                let rho_prime = self.q[node] - self.reference_at(le, node).rho;
                for v in 0..NVARS {
                    let source = if v == 3 { -rho_prime * g } else { 0.0 };
                    self.contrib[base + v * npe + node] = -wj * (self.div[v * npe + node] - source);
                }
            }
        }
        Ok(())
    }

    /// Assemble `self.contrib` into `out` (scheme layout).
    fn assemble(&mut self, out: &mut [f64]) -> Result<(), DynamicsError> {
        match self.scheme.state_layout() {
            Layout::Cg => self.domain.dss(&self.contrib, &mut self.transport, out)?,
            Layout::Dg => {
                self.domain.dss(&self.contrib, &mut self.transport, &mut self.cg_tmp)?;
                self.domain.scatter_local(&self.cg_tmp, out);
            }
        }
        Ok(())
    }

    fn zero_normal_momentum(q: &mut [f64], wall: u8) {
        if wall & WALL_X != 0 {
            q[1] = 0.0;
        }
        if wall & WALL_Y != 0 {
            q[2] = 0.0;
        }
        if wall & WALL_Z != 0 {
            q[3] = 0.0;
        }
    }
}

impl<T: HaloTransport> SemiDiscrete for Discretization<T> {
    type Error = DynamicsError;

    fn rhs(&mut self, state: &[f64], out: &mut [f64]) -> Result<(), DynamicsError> {
        let t0 = Instant::now();
        self.element_contributions(state)?;
        let t1 = Instant::now();
        self.assemble(out)?;
        self.times.create_rhs += (t1 - t0).as_secs_f64();
        self.times.dss += t1.elapsed().as_secs_f64();
        Ok(())
    }

    fn apply_boundary(&self, state: &mut [f64]) {
        match self.scheme.state_layout() {
            Layout::Cg => {
                for (l, &w) in self.domain.wall.iter().enumerate() {
                    if w != 0 {
                        Self::zero_normal_momentum(&mut state[l * NVARS..(l + 1) * NVARS], w);
                    }
                }
            }
            Layout::Dg => {
                let npe = self.re.nodes_per_element();
                for (slot, &l) in self.domain.element_nodes.iter().enumerate() {
                    let w = self.domain.wall[l];
                    if w == 0 {
                        continue;
                    }
                    let (e, node) = (slot / npe, slot % npe);
                    let base = e * NVARS * npe + node;
                    for (d, bit) in [WALL_X, WALL_Y, WALL_Z].into_iter().enumerate() {
                        if w & bit != 0 {
                            state[base + (1 + d) * npe] = 0.0;
                        }
                    }
                }
            }
        }
    }

    /// Tensor-product filter on the perturbation from the reference state,
    /// followed by a J w weighted DSS to restore continuity.
    fn apply_filter(&mut self, state: &mut [f64]) -> Result<(), DynamicsError> {
        if !self.filter_on {
            return Ok(());
        }
        let t0 = Instant::now();
        let npe = self.re.nodes_per_element();
        for le in 0..self.domain.n_elements() {
            self.gather(state, le);
            for node in 0..npe {
                let rv = self.reference_at(le, node);
                self.q[node] -= rv.rho;
                self.q[4 * npe + node] -= rv.theta;
            }
            let base = le * NVARS * npe;
            for v in 0..NVARS {
                let f = &mut self.q[v * npe..(v + 1) * npe];
                for dir in 0..3 {
                    apply_along(&self.re.filter, f, dir, &mut self.scratch);
                    f.copy_from_slice(&self.scratch);
                }
                for node in 0..npe {
                    self.contrib[base + v * npe + node] = self.wj[le * npe + node] * f[node];
                }
            }
        }
        let t1 = Instant::now();
        self.domain.dss(&self.contrib, &mut self.transport, &mut self.cg_tmp)?;
        let t2 = Instant::now();
        for (l, rv) in self.ref_node.iter().enumerate() {
            self.cg_tmp[l * NVARS] += rv.rho;
            self.cg_tmp[l * NVARS + 4] += rv.theta;
        }
        match self.scheme.state_layout() {
            Layout::Cg => state.copy_from_slice(&self.cg_tmp),
            Layout::Dg => self.domain.scatter_local(&self.cg_tmp, state),
        }
        self.times.filter += (t1 - t0).as_secs_f64() + t2.elapsed().as_secs_f64();
        self.times.dss += (t2 - t1).as_secs_f64();
        Ok(())
    }

    fn record_update(&mut self, seconds: f64) {
        self.times.update += seconds;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, build_cg_numbering, compute_metrics, partition_columns, Mapping};
    use crate::storage::NoHalo;

    #[test]
    fn pressure_examples() {
        let c = GasConstants::default();
        assert!((c.gamma() - 1.4).abs() < 1e-15);
        assert!((c.pressure(1.0, c.p0 / c.r).unwrap() - c.p0).abs() < 1e-9);
        let p = c.pressure(1.0, 300.0).unwrap();
        let via_log = c.p0 * (c.gamma() * (287.0 * 300.0 / 1e5f64).ln()).exp();
        assert!((p / via_log - 1.0).abs() < 1e-14);
        assert!((p - 1e5 * 0.861f64.powf(1.4)).abs() < 1e-6);
        let t = c.p0 / c.r;
        let h = 1e-3;
        let fd = (c.pressure(1.0, t + h).unwrap() - c.pressure(1.0, t - h).unwrap()) / (2.0 * h);
        assert!((fd / (c.gamma() * c.r) - 1.0).abs() < 1e-6);
        assert!(c.pressure(-1.0, 300.0).is_err());
        assert!(c.pressure(1.0, 0.0).is_err());
    }

    #[test]
    fn constants_validation() {
        assert!(GasConstants::default().validate().is_ok());
        let bad = GasConstants { cp: 1000.0, ..Default::default() };
        assert!(matches!(bad.validate(), Err(DynamicsError::Constants(_))));
    }

    #[test]
    fn flux_examples() {
        let c = GasConstants::default();
        let rest = [1.2, 0.0, 0.0, 0.0, 360.0];
        let p = c.pressure(1.2, 360.0).unwrap();
        assert!(flux(&c, &rest, p).unwrap().iter().flatten().all(|&x| x == 0.0));
        let q = [1.0, 1.0, 0.0, 0.0, 300.0];
        let f = flux(&c, &q, c.pressure(1.0, 300.0).unwrap()).unwrap();
        assert_eq!(f[0], [1.0, 0.0, 0.0]);
        assert_eq!(f[1][0], 1.0);
        assert_eq!(f[4], [300.0, 0.0, 0.0]);
        let a = flux(&c, &[1.0, 0.3, 0.5, -0.7, 300.0], 0.0).unwrap();
        let b = flux(&c, &[1.0, 0.3, -0.7, 0.5, 300.0], 0.0).unwrap();
        assert_eq!(a[0][1], b[0][2]);
        assert_eq!(a[4][2], b[4][1]);
        assert_eq!(a[1][1], b[1][2]);
    }

    #[test]
    fn local_derivative_polynomials() {
        let re = ReferenceElement::new(3).unwrap();
        let mesh = build_box_mesh(1, 1, 1, [3.0, 2.0, 5.0], Mapping::Identity).unwrap();
        let m = compute_metrics(&mesh, &re).unwrap();
        let npe = 64;
        let mut scratch = vec![0.0; npe];
        let mut out = vec![0.0; npe];
        let f: Vec<f64> = m.coords.iter().map(|x| x[0] * x[0] * x[1]).collect();
        local_derivative(&re.diff, &f, &m.dxi_dx, 0, &mut scratch, &mut out);
        for (o, x) in out.iter().zip(&m.coords) {
            assert!((o - 2.0 * x[0] * x[1]).abs() < 1e-12);
        }
        let lin: Vec<f64> = m.coords.iter().map(|x| x[0]).collect();
        local_derivative(&re.diff, &lin, &m.dxi_dx, 0, &mut scratch, &mut out);
        assert!(out.iter().all(|o| (o - 1.0).abs() < 1e-12));
        local_derivative(&re.diff, &vec![4.0; npe], &m.dxi_dx, 2, &mut scratch, &mut out);
        assert!(out.iter().all(|o| o.abs() < 1e-12));
    }

    #[test]
    fn neighbor_exclusion_batches_share_no_nodes() {
        let re = ReferenceElement::new(2).unwrap();
        let mesh = build_box_mesh(4, 4, 3, [1.0; 3], Mapping::Identity).unwrap();
        let m = compute_metrics(&mesh, &re).unwrap();
        let num = build_cg_numbering(&mesh, &m, &re).unwrap();
        let batches = neighbor_exclusion_batches(&mesh, 0..mesh.n_elements());
        assert_eq!(batches.len(), 8);
        assert_eq!(batches.iter().map(Vec::len).sum::<usize>(), 48);
        for b in &batches {
            let mut seen = std::collections::HashSet::new();
            for &e in b {
                for &g in num.element_ids(e) {
                    assert!(seen.insert(g), "batch shares node {g}");
                }
            }
        }
    }

    fn uniform_disc(scheme: Scheme, g: f64) -> (Discretization<NoHalo>, Vec<f64>) {
        let re = ReferenceElement::new(3).unwrap();
        let mesh = build_box_mesh(2, 2, 2, [100.0; 3], Mapping::Identity).unwrap();
        let m = compute_metrics(&mesh, &re).unwrap();
        let num = build_cg_numbering(&mesh, &m, &re).unwrap();
        let parts = partition_columns(&mesh, 1).unwrap();
        let dom = LocalDomain::build_all(&num, &parts).remove(0);
        let c = GasConstants { g, ..Default::default() };
        let rv = ReferenceValues { rho: 1.1, theta: 330.0, pressure: c.pressure(1.1, 330.0).unwrap() };
        let reference = vec![rv; num.n_global];
        let d = Discretization::new(re, c, scheme, dom, &m, &reference, NoHalo);
        let mut cg = vec![0.0; num.n_global * NVARS];
        for node in cg.chunks_mut(NVARS) {
            node.copy_from_slice(&[1.1, 2.2, -1.1, 0.55, 330.0]);
        }
        let state = d.state_from_nodes(&cg);
        (d, state)
    }

    #[test]
    fn free_stream_preserved() {
        for scheme in Scheme::ALL {
            let (mut d, state) = uniform_disc(scheme, 0.0);
            let mut out = vec![0.0; state.len()];
            d.rhs(&state, &mut out).unwrap();
            assert!(out.iter().all(|x| x.abs() < 1e-12 * 330.0), "{scheme:?}");
        }
    }

    #[test]
    fn diverged_state_names_element() {
        let (mut d, mut state) = uniform_disc(Scheme::Dg, 9.81);
        let npe = 64;
        state[(5 * NVARS) * npe + 3] = f64::NAN;
        let mut out = vec![0.0; state.len()];
        assert!(matches!(d.rhs(&state, &mut out), Err(DynamicsError::DivergedState { element: 5 })));
    }

    #[test]
    fn boundary_projection() {
        let (d, state) = uniform_disc(Scheme::Cg, 9.81);
        let mut s = state.clone();
        d.apply_boundary(&mut s);
        for (l, &w) in d.domain.wall.iter().enumerate() {
            let node = &s[l * NVARS..(l + 1) * NVARS];
            let orig = &state[l * NVARS..(l + 1) * NVARS];
            assert_eq!(node[1] == 0.0, w & WALL_X != 0);
            assert_eq!(node[2] == 0.0, w & WALL_Y != 0);
            assert_eq!(node[3] == 0.0, w & WALL_Z != 0);
            assert_eq!(node[0], orig[0]);
            assert_eq!(node[4], orig[4]);
        }
    }

    #[test]
    fn filter_keeps_constant_state() {
        for scheme in Scheme::ALL {
            let (mut d, state) = uniform_disc(scheme, 9.81);
            let mut s = state.clone();
            d.apply_filter(&mut s).unwrap();
            for (a, b) in s.iter().zip(&state) {
                assert!((a - b).abs() < 1e-13 * b.abs().max(1.0));
            }
        }
    }
}
