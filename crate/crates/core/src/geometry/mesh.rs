use std::collections::BTreeSet;

use crate::geometry::point::{orient2d, Point2};
use crate::{Error, Real, Result};

/// Relative determinant threshold below which an element counts as degenerate.
pub const DEGENERATE_DET: f64 = 1e-14;

/// Planar triangulation of a convex domain with uniform conductivity.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh<T> {
    nodes: Vec<Point2<T>>,
    elements: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    conductivity: T,
}

impl<T: Real> TriMesh<T> {
    /// Validates indices, orientation and the boundary loop.
    pub fn new(
        nodes: Vec<Point2<T>>,
        elements: Vec<[usize; 3]>,
        boundary_nodes: Vec<usize>,
        conductivity: T,
    ) -> Result<Self> {
        if !(conductivity > T::zero()) || !conductivity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "conductivity must be positive, got {conductivity}"
            )));
        }
        if let Some(i) = nodes.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "node {i} has non-finite coordinates"
            )));
        }
        if elements.is_empty() {
            return Err(Error::InvalidParameter("mesh has no elements".into()));
        }
        let n = nodes.len();
        for (e, tri) in elements.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::InvalidParameter(format!(
                    "element {e} references a node outside 0..{n}"
                )));
            }
            let area2 = orient2d(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if !(area2 > T::zero()) {
                return Err(Error::InvalidParameter(format!(
                    "element {e} is not counterclockwise (signed area {})",
                    area2 / T::lit(2.0)
                )));
            }
        }
        if boundary_nodes.len() < 3 {
            return Err(Error::InvalidParameter(
                "boundary loop needs at least 3 nodes".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for &b in &boundary_nodes {
            if b >= n {
                return Err(Error::InvalidParameter(format!(
                    "boundary node {b} out of range"
                )));
            }
            if !seen.insert(b) {
                return Err(Error::InvalidParameter(format!(
                    "boundary node {b} repeated"
                )));
            }
        }
        let loop_area2: T = (0..boundary_nodes.len())
            .map(|k| {
                let p = nodes[boundary_nodes[k]];
                let q = nodes[boundary_nodes[(k + 1) % boundary_nodes.len()]];
                p.cross(q)
            })
            .sum();
        if !(loop_area2 > T::zero()) {
            return Err(Error::InvalidParameter(
                "boundary loop is not counterclockwise".into(),
            ));
        }
        Ok(TriMesh {
            nodes,
            elements,
            boundary_nodes,
            conductivity,
        })
    }

    pub fn nodes(&self) -> &[Point2<T>] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn conductivity(&self) -> T {
        self.conductivity
    }

    pub fn with_conductivity(mut self, sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "conductivity must be positive, got {sigma}"
            )));
        }
        self.conductivity = sigma;
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    #[inline]
    pub fn node(&self, i: usize) -> Point2<T> {
        self.nodes[i]
    }

    #[inline]
    pub fn vertices(&self, element: usize) -> [Point2<T>; 3] {
        let [a, b, c] = self.elements[element];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn element_area(&self, element: usize) -> T {
        let [a, b, c] = self.vertices(element);
        orient2d(a, b, c) / T::lit(2.0)
    }

    pub fn total_area(&self) -> T {
        (0..self.num_elements()).map(|e| self.element_area(e)).sum()
    }

    pub fn max_edge_length(&self) -> T {
        self.edges()
            .into_iter()
            .map(|(i, j)| self.nodes[i].distance(self.nodes[j]))
            .fold(T::zero(), T::max)
    }

    pub fn mean_edge_length(&self) -> T {
        let edges = self.edges();
        let total: T = edges
            .iter()
            .map(|&(i, j)| self.nodes[i].distance(self.nodes[j]))
            .sum();
        total / T::from_usize_lossy(edges.len())
    }

    /// Unique undirected edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeSet::new();
        for tri in &self.elements {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.into_iter().collect()
    }

    /// Edge-neighbour lists, each sorted ascending.
    pub fn node_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes()];
        for (i, j) in self.edges() {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Jacobian columns `[x2 - x1, x3 - x1]` of the affine element map.
    #[inline]
    pub fn jacobian(&self, element: usize) -> (Point2<T>, Point2<T>) {
        let [p1, p2, p3] = self.vertices(element);
        (p2 - p1, p3 - p1)
    }

    /// Solves `x = x1 + J d` for `d = (d1, d2)`. Points outside the element are
    /// extrapolated.
    pub fn barycentric(&self, element: usize, p: Point2<T>) -> Result<(T, T)> {
        let [p1, p2, p3] = self.vertices(element);
        let (c1, c2) = (p2 - p1, p3 - p1);
        let det = c1.cross(c2);
        let scale = c1.dot(c1).max(c2.dot(c2)).max((p3 - p2).dot(p3 - p2));
        if !(det.abs() > T::lit(DEGENERATE_DET) * scale) {
            return Err(Error::DegenerateElement {
                element,
                det: det.to_f64_lossy(),
            });
        }
        let r = p - p1;
        Ok((r.cross(c2) / det, c1.cross(r) / det))
    }

    /// Lowest-index element whose closed interior contains `p` up to `tol`
    /// in barycentric units.
    pub fn locate(&self, p: Point2<T>, tol: T) -> Option<(usize, (T, T))> {
        for e in 0..self.num_elements() {
            let [a, b, c] = self.vertices(e);
            let lo = a.x.min(b.x).min(c.x);
            let hi = a.x.max(b.x).max(c.x);
            let pad = (hi - lo) * tol;
            if p.x < lo - pad || p.x > hi + pad {
                continue;
            }
            let lo = a.y.min(b.y).min(c.y);
            let hi = a.y.max(b.y).max(c.y);
            let pad = (hi - lo) * tol;
            if p.y < lo - pad || p.y > hi + pad {
                continue;
            }
            if let Ok((d1, d2)) = self.barycentric(e, p) {
                if d1 >= -tol && d2 >= -tol && d1 + d2 <= T::one() + tol {
                    return Some((e, (d1, d2)));
                }
            }
        }
        None
    }

    /// Breadth-first connectivity check over mesh edges.
    pub fn is_connected(&self) -> bool {
        let adj = self.node_neighbors();
        let mut seen = vec![false; self.num_nodes()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Arc-length weights of the boundary nodes: half of each incident boundary edge.
    pub fn boundary_weights(&self) -> Vec<T> {
        let b = &self.boundary_nodes;
        let nb = b.len();
        (0..nb)
            .map(|k| {
                let prev = self.nodes[b[(k + nb - 1) % nb]];
                let next = self.nodes[b[(k + 1) % nb]];
                let here = self.nodes[b[k]];
                (here.distance(prev) + here.distance(next)) / T::lit(2.0)
            })
            .collect()
    }
}

/// Structured disk mesh centred at the origin.
///
/// Ring `k` (radius `k * radius / K`) carries `6k` equally spaced nodes
/// starting at angle zero, with `K = ceil(radius / target_h)`. Neighbouring
/// rings are zipped together by angle, giving `1 + 3K(K+1)` nodes and `6K^2`
/// elements. Meshes whose ring counts divide each other share node positions
/// bit for bit.
pub fn build_disk_mesh<T: Real>(radius: T, target_h: T) -> Result<TriMesh<T>> {
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if !(target_h > T::zero()) || !(target_h < radius) {
        return Err(Error::InvalidParameter(format!(
            "target_h must lie in (0, radius), got {target_h}"
        )));
    }
    let rings = (radius / target_h)
        .ceil()
        .to_usize()
        .ok_or_else(|| Error::InvalidParameter("ring count overflow".into()))?;
    build_disk_mesh_rings(radius, rings)
}

/// Disk mesh with an explicit number of rings.
pub fn build_disk_mesh_rings<T: Real>(radius: T, rings: usize) -> Result<TriMesh<T>> {
    if rings == 0 {
        return Err(Error::InvalidParameter(
            "at least one ring is required".into(),
        ));
    }
    let ring_start = |k: usize| if k == 0 { 0 } else { 1 + 3 * k * (k - 1) };
    let ring_len = |k: usize| if k == 0 { 1 } else { 6 * k };

    let mut nodes = Vec::with_capacity(1 + 3 * rings * (rings + 1));
    nodes.push(Point2::zero());
    let kk = T::from_usize_lossy(rings);
    for k in 1..=rings {
        let r = radius * (T::from_usize_lossy(k) / kk);
        let n = ring_len(k);
        for j in 0..n {
            let frac = T::from_usize_lossy(j) / T::from_usize_lossy(n);
            let theta = T::TAU() * frac;
            nodes.push(Point2::new(r * theta.cos(), r * theta.sin()));
        }
    }

    let mut elements = Vec::with_capacity(6 * rings * rings);
    for k in 1..=rings {
        let (n0, n1) = (ring_len(k - 1), ring_len(k));
        let (s0, s1) = (ring_start(k - 1), ring_start(k));
        let (mut i, mut o) = (0usize, 0usize);
        // Walk both rings by angle; (i + 1) / n0 vs (o + 1) / n1 is compared exactly.
        while i < n0 || o < n1 {
            let advance_outer = if k == 1 || i == n0 {
                true
            } else if o == n1 {
                false
            } else {
                (o + 1) * n0 < (i + 1) * n1
            };
            let inner = s0 + i % n0;
            if advance_outer {
                elements.push([inner, s1 + o % n1, s1 + (o + 1) % n1]);
                o += 1;
            } else {
                elements.push([inner, s1 + o % n1, s0 + (i + 1) % n0]);
                i += 1;
            }
            if k == 1 && o == n1 {
                break;
            }
        }
    }

    let boundary = (ring_start(rings)..ring_start(rings) + ring_len(rings)).collect();
    TriMesh::new(nodes, elements, boundary, T::one())
}
