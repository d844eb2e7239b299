//! Global numbering of unique grid points, the assembled mass matrix and
//! partition halo maps.

use std::collections::{BTreeMap, HashMap};

use super::{ColumnMesh, MeshError, MetricTerms, Partition};
use crate::reference::ReferenceElement;

/// Wall bits per global node.
pub const WALL_X: u8 = 0b001;
pub const WALL_Y: u8 = 0b010;
pub const WALL_Z: u8 = 0b100;

#[derive(Debug, Clone)]
pub struct CgNumbering {
    pub order: usize,
    pub n1d: usize,
    /// Global id of every element node, `[e * n³ + node]`.
    pub global_ids: Vec<usize>,
    pub n_global: usize,
    /// Diagonal mass M = Σ_e w_i w_j w_k J per global id.
    pub mass: Vec<f64>,
    /// Integer lattice position of each global id.
    pub lattice: Vec<[usize; 3]>,
    /// Which walls (WALL_X | WALL_Y | WALL_Z) each global id lies on.
    pub wall: Vec<u8>,
}

impl CgNumbering {
    pub fn nodes_per_element(&self) -> usize {
        self.n1d.pow(3)
    }

    pub fn element_ids(&self, e: usize) -> &[usize] {
        let npe = self.nodes_per_element();
        &self.global_ids[e * npe..(e + 1) * npe]
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }
}

/// Tensor weight w_i w_j w_k for every node of an element.
pub fn tensor_weights(re: &ReferenceElement) -> Vec<f64> {
    let n = re.n1d();
    let mut out = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                out.push(re.weights[i] * re.weights[j] * re.weights[k]);
            }
        }
    }
    out
}

pub fn build_cg_numbering(
    mesh: &ColumnMesh,
    metrics: &MetricTerms,
    re: &ReferenceElement,
) -> Result<CgNumbering, MeshError> {
    let nz = mesh.uniform_layers().ok_or_else(|| {
        MeshError::UnsupportedMesh("columns with differing layer counts give hanging nodes".into())
    })?;
    let p = re.order;
    let n = re.n1d();
    let npe = n * n * n;
    let dims = [p * mesh.nx + 1, p * mesh.ny + 1, p * nz + 1];
    let w = tensor_weights(re);

    let mut lookup: HashMap<[usize; 3], usize> = HashMap::new();
    let mut global_ids = Vec::with_capacity(mesh.n_elements() * npe);
    let mut lattice = Vec::new();
    let mut mass = Vec::new();
    for e in 0..mesh.n_elements() {
        let [ex, ey, ez] = mesh.element_lattice(e);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let key = [ex * p + i, ey * p + j, ez * p + k];
                    let next = lattice.len();
                    let id = *lookup.entry(key).or_insert(next);
                    if id == next {
                        lattice.push(key);
                        mass.push(0.0);
                    }
                    let node = i + n * (j + n * k);
                    mass[id] += w[node] * metrics.jacobian[e * npe + node];
                    global_ids.push(id);
                }
            }
        }
    }
    let wall = lattice
        .iter()
        .map(|l| {
            let mut bits = 0;
            for (d, bit) in [WALL_X, WALL_Y, WALL_Z].into_iter().enumerate() {
                if l[d] == 0 || l[d] + 1 == dims[d] {
                    bits |= bit;
                }
            }
            bits
        })
        .collect();
    Ok(CgNumbering { order: p, n1d: n, n_global: lattice.len(), global_ids, mass, lattice, wall })
}

/// Which partitions touch each global node, and the shared lists per pair.
#[derive(Debug, Clone)]
pub struct HaloMap {
    /// Sorted partition ids touching each global node.
    pub touching: Vec<Vec<usize>>,
    /// Shared global ids (ascending) for each unordered pair (a < b).
    pub shared: BTreeMap<(usize, usize), Vec<usize>>,
}

impl HaloMap {
    pub fn build(numbering: &CgNumbering, partitions: &[Partition]) -> Self {
        let mut touching: Vec<Vec<usize>> = vec![Vec::new(); numbering.n_global];
        for part in partitions {
            for e in part.elements.clone() {
                for &g in numbering.element_ids(e) {
                    let t = &mut touching[g];
                    if t.last() != Some(&part.id) {
                        t.push(part.id);
                    }
                }
            }
        }
        // partitions are visited in order, so each list is already sorted
        let mut shared: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (g, t) in touching.iter().enumerate() {
            for a in 0..t.len() {
                for b in a + 1..t.len() {
                    shared.entry((t[a], t[b])).or_default().push(g);
                }
            }
        }
        Self { touching, shared }
    }

    /// Shared ids between two partitions, in ascending order, from either side.
    pub fn shared_ids(&self, a: usize, b: usize) -> &[usize] {
        let key = (a.min(b), a.max(b));
        self.shared.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Partitions sharing at least one node with `a`, ascending.
    pub fn neighbors(&self, a: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .shared
            .keys()
            .filter_map(|&(x, y)| if x == a { Some(y) } else if y == a { Some(x) } else { None })
            .collect();
        out.sort_unstable();
        out
    }

    /// Lowest partition touching the node.
    pub fn owner(&self, g: usize) -> usize {
        self.touching[g][0]
    }
}
