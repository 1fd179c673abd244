use crate::geometry::mesh::TriMesh;
use crate::geometry::point::Point2;
use crate::{Error, Real, Result};

/// Electrodes snapped onto boundary nodes, in increasing angular order.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeLayout<T> {
    mesh_node_ids: Vec<usize>,
    angles: Vec<T>,
}

impl<T: Real> ElectrodeLayout<T> {
    pub fn mesh_node_ids(&self) -> &[usize] {
        &self.mesh_node_ids
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.mesh_node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh_node_ids.is_empty()
    }

    pub fn position(&self, mesh: &TriMesh<T>, electrode: usize) -> Point2<T> {
        mesh.node(self.mesh_node_ids[electrode])
    }
}

fn wrap_angle<T: Real>(a: T) -> T {
    let tau = T::TAU();
    let mut w = a % tau;
    if w > T::PI() {
        w -= tau;
    } else if w <= -T::PI() {
        w += tau;
    }
    w
}

/// Snaps `n` ideal angles `2 pi k / n` (about the origin) to the nearest
/// boundary node. Ties go to the earlier node of the boundary loop.
pub fn place_electrodes<T: Real>(mesh: &TriMesh<T>, n: usize) -> Result<ElectrodeLayout<T>> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 electrodes, got {n}"
        )));
    }
    let boundary = mesh.boundary_nodes();
    if boundary.len() < n {
        return Err(Error::TooFewBoundaryNodes {
            available: boundary.len(),
            requested: n,
        });
    }
    let node_angles: Vec<T> = boundary.iter().map(|&b| mesh.node(b).angle()).collect();

    let mut ids = Vec::with_capacity(n);
    let mut angles = Vec::with_capacity(n);
    let mut owner: Vec<Option<usize>> = vec![None; boundary.len()];
    for k in 0..n {
        let ideal = T::TAU() * (T::from_usize_lossy(k) / T::from_usize_lossy(n));
        let mut best = 0usize;
        let mut best_gap = T::infinity();
        for (slot, &a) in node_angles.iter().enumerate() {
            let gap = wrap_angle(a - ideal).abs();
            if gap < best_gap {
                best_gap = gap;
                best = slot;
            }
        }
        if let Some(first) = owner[best] {
            return Err(Error::DuplicateElectrode {
                first,
                second: k,
                node: boundary[best],
            });
        }
        owner[best] = Some(k);
        ids.push(boundary[best]);
        angles.push(ideal + wrap_angle(node_angles[best] - ideal));
    }
    Ok(ElectrodeLayout {
        mesh_node_ids: ids,
        angles,
    })
}
