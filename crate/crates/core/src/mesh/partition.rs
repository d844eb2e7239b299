//! Contiguous Morton-segment partitioning and surface-to-volume counting.

use std::collections::HashMap;
use std::ops::Range;

use super::{ColumnMesh, MeshError};

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub id: usize,
    pub columns: Range<usize>,
    pub elements: Range<usize>,
}

impl Partition {
    pub fn element_count(&self) -> usize {
        self.elements.len()
    }
}

/// Split the Morton-ordered columns into `parts` contiguous segments,
/// weighting each column by its layer count. A segment takes whole columns
/// until its cumulative weight first reaches the ideal prefix quota, while
/// leaving at least one column for every later segment.
pub fn partition_columns(mesh: &ColumnMesh, parts: usize) -> Result<Vec<Partition>, MeshError> {
    let ncol = mesh.n_columns();
    if parts == 0 || parts > ncol {
        return Err(MeshError::TooManyPartitions { parts, columns: ncol });
    }
    let total: usize = mesh.columns.iter().map(|c| c.layers).sum();
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    let mut acc = 0usize;
    for q in 0..parts {
        let remaining_parts = parts - q - 1;
        let mut end = start;
        if q + 1 == parts {
            end = ncol;
        } else {
            // quota (q+1)·W/P compared in integers: acc·P ≥ (q+1)·W
            while end < ncol - remaining_parts {
                acc += mesh.columns[end].layers;
                end += 1;
                if acc * parts >= (q + 1) * total {
                    break;
                }
            }
        }
        let e0 = mesh.columns[start].first_element;
        let e1 = if end == ncol { mesh.n_elements() } else { mesh.columns[end].first_element };
        out.push(Partition { id: q, columns: start..end, elements: e0..e1 });
        start = end;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionQuality {
    /// Faces on a partition boundary divided by element count, per partition.
    pub per_partition: Vec<f64>,
    pub max: f64,
    pub mean: f64,
}

/// Surface-to-volume ratio for an arbitrary column → partition assignment.
/// Only faces shared with an element of another partition count; wall faces
/// and faces inside a partition do not.
pub fn surface_to_volume(mesh: &ColumnMesh, assignment: &[usize], parts: usize) -> PartitionQuality {
    let mut by_pos: HashMap<(usize, usize), usize> = HashMap::new();
    for (c, col) in mesh.columns.iter().enumerate() {
        by_pos.insert((col.ix, col.iy), c);
    }
    let mut faces = vec![0usize; parts];
    let mut elems = vec![0usize; parts];
    for (c, col) in mesh.columns.iter().enumerate() {
        let a = assignment[c];
        elems[a] += col.layers;
        let nbrs = [
            (col.ix.wrapping_sub(1), col.iy),
            (col.ix + 1, col.iy),
            (col.ix, col.iy.wrapping_sub(1)),
            (col.ix, col.iy + 1),
        ];
        for pos in nbrs {
            if let Some(&d) = by_pos.get(&pos) {
                if assignment[d] != a {
                    // lateral faces at every layer both columns have
                    faces[a] += col.layers.min(mesh.columns[d].layers);
                }
            }
        }
    }
    let per_partition: Vec<f64> = faces
        .iter()
        .zip(&elems)
        .map(|(&f, &e)| if e == 0 { 0.0 } else { f as f64 / e as f64 })
        .collect();
    let max = per_partition.iter().cloned().fold(0.0, f64::max);
    let mean = if parts == 0 { 0.0 } else { per_partition.iter().sum::<f64>() / parts as f64 };
    PartitionQuality { per_partition, max, mean }
}

pub fn partition_quality(mesh: &ColumnMesh, partitions: &[Partition]) -> PartitionQuality {
    let mut assignment = vec![0; mesh.n_columns()];
    for p in partitions {
        for c in p.columns.clone() {
            assignment[c] = p.id;
        }
    }
    surface_to_volume(mesh, &assignment, partitions.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, Mapping};

    fn mesh(nx: usize, nz: usize) -> ColumnMesh {
        build_box_mesh(nx, nx, nz, [1000.0; 3], Mapping::Identity).unwrap()
    }

    #[test]
    fn single_partition() {
        let m = mesh(4, 3);
        let p = partition_columns(&m, 1).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].columns, 0..16);
        assert_eq!(p[0].element_count(), 48);
        assert_eq!(partition_quality(&m, &p).max, 0.0);
    }

    #[test]
    fn exact_and_uneven_splits() {
        let m = mesh(4, 3);
        let p = partition_columns(&m, 4).unwrap();
        assert!(p.iter().all(|q| q.element_count() == 12 && q.columns.len() == 4));
        let p = partition_columns(&m, 3).unwrap();
        let counts: Vec<_> = p.iter().map(Partition::element_count).collect();
        assert_eq!(counts, vec![18, 15, 15]);
        assert!(matches!(partition_columns(&m, 17), Err(MeshError::TooManyPartitions { .. })));
    }

    #[test]
    fn quadrants_have_four_faces_per_layer() {
        let m = mesh(4, 3);
        let p = partition_columns(&m, 4).unwrap();
        let q = partition_quality(&m, &p);
        for r in q.per_partition {
            assert!((r - 4.0 * 3.0 / 12.0).abs() < 1e-15);
        }
    }

    #[test]
    fn every_partition_nonempty() {
        let m = ColumnMesh::with_layers(2, 2, [1.0; 3], Mapping::Identity, |ix, iy| {
            if ix == 0 && iy == 0 { 50 } else { 1 }
        })
        .unwrap();
        let p = partition_columns(&m, 4).unwrap();
        assert!(p.iter().all(|q| q.columns.len() == 1));
    }
}
