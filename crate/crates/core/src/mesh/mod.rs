//! Column-structured hexahedral box mesh.
//!
//! A single macro quad is refined to a uniform quadtree level. Each leaf
//! carries a vertical column of elements, columns are kept in Morton order
//! and the elements of one column are stored contiguously bottom to top.

pub mod metrics;
pub mod morton;
pub mod numbering;
pub mod partition;

use std::f64::consts::PI;
use std::ops::Range;

use thiserror::Error;

pub use metrics::{compute_metrics, MetricTerms};
pub use morton::{morton_decode, morton_encode};
pub use numbering::{build_cg_numbering, CgNumbering, HaloMap};
pub use partition::{partition_columns, partition_quality, surface_to_volume, Partition, PartitionQuality};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("morton index out of range: {0}")]
    MortonRange(String),
    #[error("invalid mesh dimensions: {0}")]
    InvalidDimensions(String),
    #[error("element {element} is inverted (jacobian {jacobian:e} at node {node})")]
    InvertedElement { element: usize, node: usize, jacobian: f64 },
    #[error("unsupported mesh: {0}")]
    UnsupportedMesh(String),
    #[error("cannot split {columns} columns into {parts} partitions")]
    TooManyPartitions { parts: usize, columns: usize },
}

/// Smooth coordinate map applied to every node after trilinear placement.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Mapping {
    #[default]
    Identity,
    /// x' = x + a·L·sin(πx̂)sin(πŷ)sin(πẑ) per coordinate, with x̂ the
    /// position scaled to [0, 1]. Vanishes on the box walls, so the domain
    /// stays a box while interior elements get curved faces.
    Warp { amplitude: f64 },
}

impl Mapping {
    pub fn apply(&self, x: [f64; 3], origin: [f64; 3], extent: [f64; 3]) -> [f64; 3] {
        match *self {
            Mapping::Identity => x,
            Mapping::Warp { amplitude } => {
                let s: f64 = (0..3)
                    .map(|d| (PI * (x[d] - origin[d]) / extent[d]).sin())
                    .product();
                [
                    x[0] + amplitude * extent[0] * s,
                    x[1] + amplitude * extent[1] * s,
                    x[2] + amplitude * extent[2] * s,
                ]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    /// Always 0 for the box: the whole domain is one macro quad.
    pub macro_cell: usize,
    pub morton: u64,
    pub ix: usize,
    pub iy: usize,
    pub layers: usize,
    pub first_element: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub column: usize,
    pub layer: usize,
    /// Corner coordinates, index = a + 2b + 4c for the (ξ, η, ζ) corners.
    pub vertices: [[f64; 3]; 8],
    /// Unmapped axis-aligned bounds, used for trilinear node placement.
    lower: [f64; 3],
    upper: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct ColumnMesh {
    pub nx: usize,
    pub ny: usize,
    pub level: u32,
    pub origin: [f64; 3],
    pub extent: [f64; 3],
    pub mapping: Mapping,
    pub columns: Vec<Column>,
    pub elements: Vec<Element>,
}

fn check_pow2(n: usize, name: &str) -> Result<(), MeshError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(MeshError::InvalidDimensions(format!("{name}={n} is not a power of two")));
    }
    Ok(())
}

/// Uniform box: `nz` layers in every column.
pub fn build_box_mesh(
    nx: usize,
    ny: usize,
    nz: usize,
    extent: [f64; 3],
    mapping: Mapping,
) -> Result<ColumnMesh, MeshError> {
    ColumnMesh::with_layers(nx, ny, extent, mapping, |_, _| nz)
}

impl ColumnMesh {
    /// Box mesh whose column at lattice position (ix, iy) has `layers(ix, iy)`
    /// elements spread evenly over the full height.
    pub fn with_layers(
        nx: usize,
        ny: usize,
        extent: [f64; 3],
        mapping: Mapping,
        layers: impl Fn(usize, usize) -> usize,
    ) -> Result<Self, MeshError> {
        check_pow2(nx, "nx")?;
        check_pow2(ny, "ny")?;
        if extent.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(MeshError::InvalidDimensions(format!("degenerate extents {extent:?}")));
        }
        if let Mapping::Warp { amplitude } = mapping {
            if !amplitude.is_finite() {
                return Err(MeshError::InvalidDimensions("non-finite warp amplitude".into()));
            }
        }
        let level = nx.max(ny).trailing_zeros();
        let mut cells = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let m = morton_encode(ix as u64, iy as u64, level)?;
                cells.push((m, ix, iy));
            }
        }
        cells.sort_unstable();

        let origin = [0.0; 3];
        let dx = extent[0] / nx as f64;
        let dy = extent[1] / ny as f64;
        let mut columns = Vec::with_capacity(cells.len());
        let mut elements = Vec::new();
        for (c, &(morton, ix, iy)) in cells.iter().enumerate() {
            let nz = layers(ix, iy);
            if nz == 0 {
                return Err(MeshError::InvalidDimensions(format!(
                    "column ({ix}, {iy}) has zero layers"
                )));
            }
            columns.push(Column { macro_cell: 0, morton, ix, iy, layers: nz, first_element: elements.len() });
            let dz = extent[2] / nz as f64;
            for k in 0..nz {
                let lower = [ix as f64 * dx, iy as f64 * dy, k as f64 * dz];
                let upper = [
                    if ix + 1 == nx { extent[0] } else { (ix + 1) as f64 * dx },
                    if iy + 1 == ny { extent[1] } else { (iy + 1) as f64 * dy },
                    if k + 1 == nz { extent[2] } else { (k + 1) as f64 * dz },
                ];
                let mut vertices = [[0.0; 3]; 8];
                for (v, vert) in vertices.iter_mut().enumerate() {
                    let corner = [
                        if v & 1 == 0 { lower[0] } else { upper[0] },
                        if v & 2 == 0 { lower[1] } else { upper[1] },
                        if v & 4 == 0 { lower[2] } else { upper[2] },
                    ];
                    *vert = mapping.apply(corner, origin, extent);
                }
                elements.push(Element { column: c, layer: k, vertices, lower, upper });
            }
        }
        Ok(Self { nx, ny, level, origin, extent, mapping, columns, elements })
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn column_elements(&self, c: usize) -> Range<usize> {
        let col = &self.columns[c];
        col.first_element..col.first_element + col.layers
    }

    /// Layer count shared by all columns, if the mesh is conforming.
    pub fn uniform_layers(&self) -> Option<usize> {
        let first = self.columns.first()?.layers;
        self.columns.iter().all(|c| c.layers == first).then_some(first)
    }

    /// Integer (ix, iy, layer) position of an element.
    pub fn element_lattice(&self, e: usize) -> [usize; 3] {
        let el = &self.elements[e];
        let col = &self.columns[el.column];
        [col.ix, col.iy, el.layer]
    }

    /// Physical node coordinates of every element, `[e * n³ + i + n(j + n k)]`.
    pub fn node_coords(&self, points: &[f64]) -> Vec<[f64; 3]> {
        let n = points.len();
        let mut out = Vec::with_capacity(self.elements.len() * n * n * n);
        for el in &self.elements {
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let xi = [points[i], points[j], points[k]];
                        let mut x = [0.0; 3];
                        for d in 0..3 {
                            let t = 0.5 * (xi[d] + 1.0);
                            x[d] = if t == 1.0 {
                                el.upper[d]
                            } else {
                                el.lower[d] + t * (el.upper[d] - el.lower[d])
                            };
                        }
                        out.push(self.mapping.apply(x, self.origin, self.extent));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_corners() {
        let m = build_box_mesh(1, 1, 1, [1000.0; 3], Mapping::Identity).unwrap();
        assert_eq!(m.n_elements(), 1);
        assert_eq!(m.elements[0].vertices[0], [0.0, 0.0, 0.0]);
        assert_eq!(m.elements[0].vertices[7], [1000.0, 1000.0, 1000.0]);
        assert_eq!(m.elements[0].vertices[5], [1000.0, 0.0, 1000.0]);
    }

    #[test]
    fn morton_column_order() {
        let m = build_box_mesh(2, 2, 5, [1000.0; 3], Mapping::Identity).unwrap();
        let order: Vec<_> = m.columns.iter().map(|c| (c.ix, c.iy)).collect();
        assert_eq!(order, vec![(0, 0), (1, 0), (0, 1), (1, 1)]);
        let m = build_box_mesh(4, 4, 3, [1000.0; 3], Mapping::Identity).unwrap();
        assert_eq!(m.n_columns(), 16);
        assert_eq!(m.n_elements(), 48);
        assert_eq!((m.columns[0].ix, m.columns[0].iy), (0, 0));
        for (c, col) in m.columns.iter().enumerate() {
            for (k, e) in m.column_elements(c).enumerate() {
                assert_eq!(m.elements[e].column, c);
                assert_eq!(m.elements[e].layer, k);
            }
            assert!(c == 0 || m.columns[c - 1].morton < col.morton);
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(
            build_box_mesh(3, 4, 1, [1.0; 3], Mapping::Identity),
            Err(MeshError::InvalidDimensions(_))
        ));
        assert!(matches!(
            build_box_mesh(2, 2, 1, [1.0, 0.0, 1.0], Mapping::Identity),
            Err(MeshError::InvalidDimensions(_))
        ));
        assert!(build_box_mesh(2, 2, 0, [1.0; 3], Mapping::Identity).is_err());
    }

    #[test]
    fn variable_layers() {
        let m = ColumnMesh::with_layers(2, 2, [1.0; 3], Mapping::Identity, |ix, iy| 1 + ix + 2 * iy).unwrap();
        assert_eq!(m.n_elements(), 1 + 2 + 3 + 4);
        assert_eq!(m.uniform_layers(), None);
        let top = m.column_elements(3).last().unwrap();
        assert_eq!(m.elements[top].vertices[7][2], 1.0);
    }

    #[test]
    fn warp_fixes_walls() {
        let map = Mapping::Warp { amplitude: 0.05 };
        let ext = [2.0, 3.0, 4.0];
        let x = map.apply([0.0, 1.2, 2.5], [0.0; 3], ext);
        assert_eq!(x, [0.0, 1.2, 2.5]);
        let y = map.apply([1.0, 1.5, 2.0], [0.0; 3], ext);
        assert!((y[0] - 1.1).abs() < 1e-12);
        assert!((y[2] - 2.2).abs() < 1e-12);
    }
}
