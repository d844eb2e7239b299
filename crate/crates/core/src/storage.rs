//! CG and DG field layouts, direct stiffness summation and halo exchange.
//!
//! DG layout: `[element][var][node]`, node index x-fastest.
//! CG layout: `[global node][var]`.
//!
//! Summation at a shared node always runs over contributing elements in
//! ascending global element id. Partition element ranges are contiguous and
//! ordered, so a partition sees, per node, contributions from lower
//! partitions first, then its own, then higher ones. Halo messages carry the
//! individual per-element contributions (not partial sums), which keeps the
//! assembled values bit-identical for every partition count.

use std::io::{Read, Write};
use std::ops::Range;
use std::sync::mpsc::{channel, Receiver, Sender};

use thiserror::Error;

use crate::mesh::{CgNumbering, HaloMap, Partition};

pub const NVARS: usize = 5;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("halo message from partition {peer}: expected {expected} values, got {got}")]
    Protocol { peer: usize, expected: usize, got: usize },
    #[error("halo link to partition {peer} closed")]
    Disconnected { peer: usize },
    #[error("zero mass at global node {0}")]
    ZeroMass(usize),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    Cg,
    Dg,
}

/// Which layout holds the prognostic state and which holds the frozen
/// reference atmosphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Cg,
    Hybrid,
    Dg,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Cg, Scheme::Hybrid, Scheme::Dg];

    pub fn state_layout(self) -> Layout {
        match self {
            Scheme::Dg => Layout::Dg,
            _ => Layout::Cg,
        }
    }

    pub fn reference_layout(self) -> Layout {
        match self {
            Scheme::Cg => Layout::Cg,
            _ => Layout::Dg,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Cg => "CG",
            Scheme::Hybrid => "CG/DG",
            Scheme::Dg => "DG",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cg" => Ok(Scheme::Cg),
            "hybrid" | "cg/dg" | "cgdg" => Ok(Scheme::Hybrid),
            "dg" => Ok(Scheme::Dg),
            _ => Err(format!("unknown storage scheme '{s}' (cg, hybrid, dg)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateCg {
    pub data: Vec<f64>,
}

impl StateCg {
    pub fn zeros(n_nodes: usize) -> Self {
        Self { data: vec![0.0; n_nodes * NVARS] }
    }

    pub fn n_nodes(&self) -> usize {
        self.data.len() / NVARS
    }

    pub fn node(&self, g: usize) -> &[f64] {
        &self.data[g * NVARS..(g + 1) * NVARS]
    }

    pub fn bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDg {
    pub npe: usize,
    pub data: Vec<f64>,
}

impl StateDg {
    pub fn zeros(n_elements: usize, npe: usize) -> Self {
        Self { npe, data: vec![0.0; n_elements * NVARS * npe] }
    }

    pub fn n_elements(&self) -> usize {
        self.data.len() / (NVARS * self.npe)
    }

    pub fn get(&self, e: usize, v: usize, node: usize) -> f64 {
        self.data[(e * NVARS + v) * self.npe + node]
    }

    pub fn element(&self, e: usize) -> &[f64] {
        let s = NVARS * self.npe;
        &self.data[e * s..(e + 1) * s]
    }

    pub fn bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<f64>()
    }
}

/// Copy every global value into each element node that references it.
pub fn scatter(cg: &StateCg, numbering: &CgNumbering) -> StateDg {
    let npe = numbering.nodes_per_element();
    let ne = numbering.global_ids.len() / npe;
    let mut dg = StateDg::zeros(ne, npe);
    for e in 0..ne {
        for (node, &g) in numbering.element_ids(e).iter().enumerate() {
            for v in 0..NVARS {
                dg.data[(e * NVARS + v) * npe + node] = cg.data[g * NVARS + v];
            }
        }
    }
    dg
}

/// Sum per-element contributions in ascending element order and divide by
/// the assembled mass.
pub fn dss(contrib: &StateDg, numbering: &CgNumbering) -> Result<StateCg, StorageError> {
    let npe = contrib.npe;
    let mut out = StateCg::zeros(numbering.n_global);
    for e in 0..contrib.n_elements() {
        for (node, &g) in numbering.element_ids(e).iter().enumerate() {
            for v in 0..NVARS {
                out.data[g * NVARS + v] += contrib.data[(e * NVARS + v) * npe + node];
            }
        }
    }
    for (g, &m) in numbering.mass.iter().enumerate() {
        if m == 0.0 {
            return Err(StorageError::ZeroMass(g));
        }
        for v in 0..NVARS {
            out.data[g * NVARS + v] /= m;
        }
    }
    Ok(out)
}

/// Moves packed halo buffers between partitions. `outgoing[k]` goes to the
/// k-th neighbor link, the result holds what each neighbor sent back.
pub trait HaloTransport {
    fn exchange(&mut self, outgoing: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, StorageError>;
}

/// Transport for a single partition: there is nobody to talk to.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoHalo;

impl HaloTransport for NoHalo {
    fn exchange(&mut self, outgoing: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, StorageError> {
        debug_assert!(outgoing.is_empty());
        Ok(Vec::new())
    }
}

/// One channel pair per neighbor link. Sends never block; each exchange
/// posts every outgoing buffer first and then waits for the matching
/// incoming ones, so a full exchange is a barrier between neighbors.
pub struct ChannelTransport {
    peers: Vec<usize>,
    senders: Vec<Sender<Vec<f64>>>,
    receivers: Vec<Receiver<Vec<f64>>>,
}

impl ChannelTransport {
    /// Wire up every partition with its neighbors; result is indexed by partition.
    pub fn connect(domains: &[LocalDomain]) -> Vec<ChannelTransport> {
        let n = domains.len();
        let mut tx: Vec<Vec<Option<Sender<Vec<f64>>>>> = (0..n).map(|_| (0..n).map(|_| None).collect()).collect();
        let mut rx: Vec<Vec<Option<Receiver<Vec<f64>>>>> = (0..n).map(|_| (0..n).map(|_| None).collect()).collect();
        for d in domains {
            for link in &d.links {
                let (s, r) = channel();
                tx[d.part][link.peer] = Some(s);
                rx[link.peer][d.part] = Some(r);
            }
        }
        domains
            .iter()
            .map(|d| {
                let peers: Vec<usize> = d.links.iter().map(|l| l.peer).collect();
                let senders = peers.iter().map(|&q| tx[d.part][q].take().expect("asymmetric halo")).collect();
                let receivers = peers.iter().map(|&q| rx[d.part][q].take().expect("asymmetric halo")).collect();
                ChannelTransport { peers, senders, receivers }
            })
            .collect()
    }
}

impl HaloTransport for ChannelTransport {
    fn exchange(&mut self, outgoing: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, StorageError> {
        for ((buf, tx), &peer) in outgoing.into_iter().zip(&self.senders).zip(&self.peers) {
            tx.send(buf).map_err(|_| StorageError::Disconnected { peer })?;
        }
        self.receivers
            .iter()
            .zip(&self.peers)
            .map(|(rx, &peer)| rx.recv().map_err(|_| StorageError::Disconnected { peer }))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Link {
    pub peer: usize,
    /// Element-node slots (local element · npe + node) packed into each message.
    pub send: Vec<usize>,
    /// Number of contributions expected from the peer.
    pub recv_len: usize,
}

/// Where one summand of a node's DSS comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Local,
    Remote(usize),
}

/// Everything one partition needs to run on its own slice of the mesh.
#[derive(Debug, Clone)]
pub struct LocalDomain {
    pub part: usize,
    pub elements: Range<usize>,
    pub npe: usize,
    /// Global id of each local node, ascending.
    pub global_ids: Vec<usize>,
    /// Local node of every local element node.
    pub element_nodes: Vec<usize>,
    pub mass: Vec<f64>,
    pub wall: Vec<u8>,
    /// True where this partition is the lowest one touching the node.
    pub owned: Vec<bool>,
    pub links: Vec<Link>,
    offsets: Vec<usize>,
    slots: Vec<(Source, usize)>,
}

impl LocalDomain {
    pub fn build(numbering: &CgNumbering, partitions: &[Partition], halo: &HaloMap, part: usize) -> Self {
        let npe = numbering.nodes_per_element();
        let elements = partitions[part].elements.clone();
        let part_of = |e: usize| partitions.partition_point(|p| p.elements.end <= e);

        // occurrences of every global node: (element, node) ascending in element
        let mut occ_count = vec![0usize; numbering.n_global + 1];
        for &g in &numbering.global_ids {
            occ_count[g + 1] += 1;
        }
        for g in 0..numbering.n_global {
            occ_count[g + 1] += occ_count[g];
        }
        let mut fill = occ_count.clone();
        let mut occ = vec![0usize; numbering.global_ids.len()];
        for (slot, &g) in numbering.global_ids.iter().enumerate() {
            occ[fill[g]] = slot;
            fill[g] += 1;
        }

        let mut global_ids: Vec<usize> = elements
            .clone()
            .flat_map(|e| numbering.element_ids(e).iter().copied())
            .collect();
        global_ids.sort_unstable();
        global_ids.dedup();
        let local_of = |g: usize| global_ids.binary_search(&g).unwrap();
        let element_nodes = elements
            .clone()
            .flat_map(|e| numbering.element_ids(e).iter().map(|&g| local_of(g)).collect::<Vec<_>>())
            .collect();

        let peers = halo.neighbors(part);
        let link_of = |q: usize| peers.binary_search(&q).unwrap();
        let mut links: Vec<Link> = peers.iter().map(|&peer| Link { peer, send: Vec::new(), recv_len: 0 }).collect();
        let mut offsets = vec![0];
        let mut slots = Vec::new();
        let e0 = elements.start;
        for &g in &global_ids {
            let touching = &halo.touching[g];
            for &slot in &occ[occ_count[g]..occ_count[g + 1]] {
                let e = slot / npe;
                let node = slot % npe;
                if elements.contains(&e) {
                    let local_slot = (e - e0) * npe + node;
                    slots.push((Source::Local, (e - e0) * NVARS * npe + node));
                    for &q in touching {
                        if q != part {
                            links[link_of(q)].send.push(local_slot);
                        }
                    }
                } else {
                    let k = link_of(part_of(e));
                    slots.push((Source::Remote(k), links[k].recv_len));
                    links[k].recv_len += 1;
                }
            }
            offsets.push(slots.len());
        }
        let mass = global_ids.iter().map(|&g| numbering.mass[g]).collect();
        let wall = global_ids.iter().map(|&g| numbering.wall[g]).collect();
        let owned = global_ids.iter().map(|&g| halo.owner(g) == part).collect();
        Self { part, elements, npe, global_ids, element_nodes, mass, wall, owned, links, offsets, slots }
    }

    /// Domains for every partition of a mesh.
    pub fn build_all(numbering: &CgNumbering, partitions: &[Partition]) -> Vec<LocalDomain> {
        let halo = HaloMap::build(numbering, partitions);
        (0..partitions.len()).map(|q| Self::build(numbering, partitions, &halo, q)).collect()
    }

    pub fn n_nodes(&self) -> usize {
        self.global_ids.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Pack the contributions each neighbor needs, var-major per message.
    pub fn pack(&self, contrib: &[f64]) -> Vec<Vec<f64>> {
        let npe = self.npe;
        self.links
            .iter()
            .map(|link| {
                let mut buf = vec![0.0; link.send.len() * NVARS];
                let n = link.send.len();
                for (i, &s) in link.send.iter().enumerate() {
                    let (e, node) = (s / npe, s % npe);
                    for v in 0..NVARS {
                        buf[v * n + i] = contrib[(e * NVARS + v) * npe + node];
                    }
                }
                buf
            })
            .collect()
    }

    /// Assemble contributions (local DG layout) into local CG values,
    /// exchanging halo contributions through `transport`.
    pub fn dss<T: HaloTransport>(
        &self,
        contrib: &[f64],
        transport: &mut T,
        out: &mut [f64],
    ) -> Result<(), StorageError> {
        let incoming = transport.exchange(self.pack(contrib))?;
        for (link, buf) in self.links.iter().zip(&incoming) {
            if buf.len() != link.recv_len * NVARS {
                return Err(StorageError::Protocol {
                    peer: link.peer,
                    expected: link.recv_len * NVARS,
                    got: buf.len(),
                });
            }
        }
        let npe = self.npe;
        for l in 0..self.n_nodes() {
            let slots = &self.slots[self.offsets[l]..self.offsets[l + 1]];
            for v in 0..NVARS {
                let mut sum = 0.0;
                for &(src, base) in slots {
                    sum += match src {
                        Source::Local => contrib[base + v * npe],
                        Source::Remote(k) => incoming[k][v * self.links[k].recv_len + base],
                    };
                }
                out[l * NVARS + v] = sum / self.mass[l];
            }
        }
        Ok(())
    }

    /// Copy local CG values into the local DG layout.
    pub fn scatter_local(&self, cg: &[f64], dg: &mut [f64]) {
        let npe = self.npe;
        for (slot, &l) in self.element_nodes.iter().enumerate() {
            let (e, node) = (slot / npe, slot % npe);
            for v in 0..NVARS {
                dg[(e * NVARS + v) * npe + node] = cg[l * NVARS + v];
            }
        }
    }

    /// Local CG slice of a global CG field.
    pub fn restrict(&self, global: &StateCg) -> Vec<f64> {
        self.global_ids.iter().flat_map(|&g| global.node(g).iter().copied()).collect()
    }
}

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"CSEMSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Binary snapshot: fixed header followed by little-endian f64 data in the
/// layout's native order (`[node][var]` for CG, `[element][var][node]` for DG).
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub layout: Layout,
    pub order: u32,
    pub n_elements: u64,
    pub n_nodes: u64,
    pub n_vars: u32,
    pub time: f64,
    pub step: u64,
    pub data: Vec<f64>,
}

impl Snapshot {
    /// Number of values the header promises.
    pub fn expected_len(&self) -> usize {
        data_len(self.layout, self.order, self.n_elements, self.n_nodes, self.n_vars)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), StorageError> {
        if self.data.len() != self.expected_len() {
            return Err(StorageError::Snapshot(format!(
                "header describes {} values, data has {}",
                self.expected_len(),
                self.data.len()
            )));
        }
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        let tag: u32 = match self.layout {
            Layout::Cg => 0,
            Layout::Dg => 1,
        };
        w.write_all(&tag.to_le_bytes())?;
        w.write_all(&self.order.to_le_bytes())?;
        w.write_all(&self.n_elements.to_le_bytes())?;
        w.write_all(&self.n_nodes.to_le_bytes())?;
        w.write_all(&self.n_vars.to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        w.write_all(&self.step.to_le_bytes())?;
        for x in &self.data {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, StorageError> {
        fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], StorageError> {
            let mut b = [0u8; N];
            r.read_exact(&mut b)?;
            Ok(b)
        }
        if &take::<8, _>(&mut r)? != SNAPSHOT_MAGIC {
            return Err(StorageError::Snapshot("bad magic".into()));
        }
        let version = u32::from_le_bytes(take(&mut r)?);
        if version != SNAPSHOT_VERSION {
            return Err(StorageError::Snapshot(format!("unsupported version {version}")));
        }
        let layout = match u32::from_le_bytes(take(&mut r)?) {
            0 => Layout::Cg,
            1 => Layout::Dg,
            t => return Err(StorageError::Snapshot(format!("unknown layout tag {t}"))),
        };
        let order = u32::from_le_bytes(take(&mut r)?);
        let n_elements = u64::from_le_bytes(take(&mut r)?);
        let n_nodes = u64::from_le_bytes(take(&mut r)?);
        let n_vars = u32::from_le_bytes(take(&mut r)?);
        let time = f64::from_le_bytes(take(&mut r)?);
        let step = u64::from_le_bytes(take(&mut r)?);
        let count = data_len(layout, order, n_elements, n_nodes, n_vars);
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(f64::from_le_bytes(take(&mut r)?));
        }
        Ok(Self { layout, order, n_elements, n_nodes, n_vars, time, step, data })
    }
}

fn data_len(layout: Layout, order: u32, n_elements: u64, n_nodes: u64, n_vars: u32) -> usize {
    (match layout {
        Layout::Cg => n_nodes * n_vars as u64,
        Layout::Dg => n_elements * n_vars as u64 * (order as u64 + 1).pow(3),
    }) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, build_cg_numbering, compute_metrics, partition_columns, Mapping};
    use crate::mesh::numbering::tensor_weights;
    use crate::reference::ReferenceElement;
    use rand::{Rng, SeedableRng};

    fn setup(nx: usize, nz: usize, p: usize) -> (crate::mesh::ColumnMesh, crate::mesh::MetricTerms, CgNumbering, ReferenceElement) {
        let re = ReferenceElement::new(p).unwrap();
        let mesh = build_box_mesh(nx, nx, nz, [1000.0; 3], Mapping::Identity).unwrap();
        let m = compute_metrics(&mesh, &re).unwrap();
        let num = build_cg_numbering(&mesh, &m, &re).unwrap();
        (mesh, m, num, re)
    }

    fn weighted(cg: &StateCg, m: &crate::mesh::MetricTerms, num: &CgNumbering, re: &ReferenceElement) -> StateDg {
        let mut dg = scatter(cg, num);
        let w = tensor_weights(re);
        let npe = dg.npe;
        for e in 0..dg.n_elements() {
            for v in 0..NVARS {
                for node in 0..npe {
                    dg.data[(e * NVARS + v) * npe + node] *= w[node] * m.jacobian[e * npe + node];
                }
            }
        }
        dg
    }

    #[test]
    fn scatter_constant_and_single_element() {
        let (_, _, num, _) = setup(2, 2, 2);
        let cg = StateCg { data: vec![3.5; num.n_global * NVARS] };
        assert!(scatter(&cg, &num).data.iter().all(|&x| x == 3.5));
        let (_, _, num1, _) = setup(1, 1, 3);
        let cg: StateCg = StateCg { data: (0..64 * NVARS).map(|i| i as f64).collect() };
        let dg = scatter(&cg, &num1);
        for node in 0..64 {
            for v in 0..NVARS {
                assert_eq!(dg.get(0, v, node), cg.data[num1.global_ids[node] * NVARS + v]);
            }
        }
    }

    #[test]
    fn dss_recovers_weighted_field() {
        let (_, m, num, re) = setup(2, 3, 3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let cg = StateCg { data: (0..num.n_global * NVARS).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let back = dss(&weighted(&cg, &m, &num, &re), &num).unwrap();
        for (a, b) in back.data.iter().zip(&cg.data) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn two_element_face_average() {
        let re = ReferenceElement::new(2).unwrap();
        let mesh = build_box_mesh(2, 1, 1, [2.0, 1.0, 1.0], Mapping::Identity).unwrap();
        let m = compute_metrics(&mesh, &re).unwrap();
        let num = build_cg_numbering(&mesh, &m, &re).unwrap();
        let w = tensor_weights(&re);
        let c = 0.7;
        let mut dg = StateDg::zeros(2, 27);
        for e in 0..2 {
            for node in 0..27 {
                dg.data[e * NVARS * 27 + node] = c * w[node] * m.jacobian[e * 27 + node];
            }
        }
        let out = dss(&dg, &num).unwrap();
        for g in 0..num.n_global {
            assert!((out.data[g * NVARS] - c).abs() < 1e-15);
        }
    }

    fn partitioned_dss(parts: usize, contrib: &StateDg, num: &CgNumbering, mesh: &crate::mesh::ColumnMesh) -> StateCg {
        let partitions = partition_columns(mesh, parts).unwrap();
        let domains = LocalDomain::build_all(num, &partitions);
        let transports = ChannelTransport::connect(&domains);
        let npe = contrib.npe;
        let results: Vec<(Vec<usize>, Vec<f64>)> = std::thread::scope(|s| {
            let handles: Vec<_> = domains
                .iter()
                .zip(transports)
                .map(|(d, mut t)| {
                    s.spawn(move || {
                        let r = d.elements.clone();
                        let local = &contrib.data[r.start * NVARS * npe..r.end * NVARS * npe];
                        let mut out = vec![0.0; d.n_nodes() * NVARS];
                        d.dss(local, &mut t, &mut out).unwrap();
                        (d.global_ids.clone(), out)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut global = StateCg::zeros(num.n_global);
        let mut seen = vec![false; num.n_global];
        for (ids, vals) in results {
            for (l, &g) in ids.iter().enumerate() {
                let v = &vals[l * NVARS..(l + 1) * NVARS];
                if seen[g] {
                    assert_eq!(global.node(g), v, "copies of node {g} differ");
                }
                global.data[g * NVARS..(g + 1) * NVARS].copy_from_slice(v);
                seen[g] = true;
            }
        }
        global
    }

    #[test]
    fn partitioned_dss_is_bit_identical() {
        let (mesh, _, num, re) = setup(4, 2, 3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let npe = re.nodes_per_element();
        let contrib = StateDg {
            npe,
            data: (0..mesh.n_elements() * NVARS * npe).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        let reference = dss(&contrib, &num).unwrap();
        for parts in [1, 2, 3, 4, 7] {
            assert_eq!(partitioned_dss(parts, &contrib, &num, &mesh), reference, "parts={parts}");
        }
    }

    #[test]
    fn protocol_mismatch_detected() {
        struct Short;
        impl HaloTransport for Short {
            fn exchange(&mut self, out: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, StorageError> {
                Ok(out.iter().map(|_| vec![0.0; 1]).collect())
            }
        }
        let (mesh, _, num, re) = setup(2, 1, 2);
        let partitions = partition_columns(&mesh, 2).unwrap();
        let domains = LocalDomain::build_all(&num, &partitions);
        let d = &domains[0];
        let contrib = vec![0.0; d.n_elements() * NVARS * re.nodes_per_element()];
        let mut out = vec![0.0; d.n_nodes() * NVARS];
        assert!(matches!(d.dss(&contrib, &mut Short, &mut out), Err(StorageError::Protocol { .. })));
    }

    #[test]
    fn memory_duplication_factor() {
        let (mesh, _, num, _) = setup(4, 3, 3);
        let cg = StateCg::zeros(num.n_global);
        let dg = scatter(&cg, &num);
        let ratio = dg.bytes() as f64 / cg.bytes() as f64;
        assert!((ratio - 64.0 * mesh.n_elements() as f64 / num.n_global as f64).abs() < 1e-12);
    }

    #[test]
    fn snapshot_round_trip() {
        let snap = Snapshot {
            layout: Layout::Dg,
            order: 1,
            n_elements: 2,
            n_nodes: 12,
            n_vars: 5,
            time: 1.25,
            step: 3,
            data: (0..80).map(|i| i as f64 * 0.5).collect(),
        };
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..8], SNAPSHOT_MAGIC);
        assert_eq!(buf.len(), 8 + 4 * 4 + 8 * 2 + 8 + 8 + 80 * 8);
        assert_eq!(Snapshot::read_from(buf.as_slice()).unwrap(), snap);
        buf[0] = b'X';
        assert!(Snapshot::read_from(buf.as_slice()).is_err());
    }
}
