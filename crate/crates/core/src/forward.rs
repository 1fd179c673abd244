//! Finite-element forward model for a current dipole in a uniform conductor.
//!
//! Solves `div(sigma grad u) = div(j_s)` with homogeneous Neumann data using
//! linear Lagrange elements, fixes the constant by a zero arc-length-weighted
//! boundary mean, and derives the line-integral data and the nodal field.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::field::NodalField;
use crate::geometry::{Chord, ElectrodeLayout, Point2, TriMesh};
use crate::linalg::{self, CsrMatrix, SkylineCholesky};
use crate::{Error, Real, Result};

/// Barycentric tolerance when locating points in elements.
pub const LOCATE_TOL: f64 = 1e-9;

/// Point current dipole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleSource<T> {
    pub location: Point2<T>,
    pub moment: Point2<T>,
}

impl<T: Real> DipoleSource<T> {
    pub fn new(location: Point2<T>, moment: Point2<T>) -> Result<Self> {
        if !location.is_finite() || !moment.is_finite() {
            return Err(Error::InvalidParameter(
                "dipole has non-finite parameters".into(),
            ));
        }
        if !(moment.norm() > T::zero()) {
            return Err(Error::InvalidParameter(
                "dipole moment must be non-zero".into(),
            ));
        }
        Ok(DipoleSource { location, moment })
    }

    /// Requires the source to sit farther than one local edge length from the
    /// boundary polygon.
    pub fn check_clearance(&self, mesh: &TriMesh<T>) -> Result<()> {
        let (element, _) = mesh
            .locate(self.location, T::lit(LOCATE_TOL))
            .ok_or_else(|| self.outside())?;
        let [a, b, c] = mesh.vertices(element);
        let local_h = a.distance(b).max(b.distance(c)).max(c.distance(a));
        let bnd = mesh.boundary_nodes();
        let clearance = (0..bnd.len())
            .map(|k| {
                point_segment_distance(
                    self.location,
                    mesh.node(bnd[k]),
                    mesh.node(bnd[(k + 1) % bnd.len()]),
                )
            })
            .fold(T::infinity(), T::min);
        if clearance > local_h {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "dipole at ({}, {}) is within one edge length ({local_h}) of the boundary",
                self.location.x, self.location.y
            )))
        }
    }

    fn outside(&self) -> Error {
        Error::SourceOutsideMesh {
            x: self.location.x.to_f64_lossy(),
            y: self.location.y.to_f64_lossy(),
        }
    }
}

fn point_segment_distance<T: Real>(p: Point2<T>, a: Point2<T>, b: Point2<T>) -> T {
    let d = b - a;
    let t = ((p - a).dot(d) / d.dot(d)).max(T::zero()).min(T::one());
    p.distance(a + d.scale(t))
}

/// Nodal electric potential.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField<T> {
    pub u: Vec<T>,
}

/// Gradients of the three linear basis functions of `element`.
pub fn basis_gradients<T: Real>(mesh: &TriMesh<T>, element: usize) -> Result<[Point2<T>; 3]> {
    let [p1, p2, p3] = mesh.vertices(element);
    let det = (p2 - p1).cross(p3 - p1);
    let scale = (p2 - p1).norm().max((p3 - p1).norm()).max((p3 - p2).norm());
    if !(det.abs() > T::lit(crate::geometry::mesh::DEGENERATE_DET) * scale * scale) {
        return Err(Error::DegenerateElement {
            element,
            det: det.to_f64_lossy(),
        });
    }
    Ok([
        Point2::new(p2.y - p3.y, p3.x - p2.x).scale(T::one() / det),
        Point2::new(p3.y - p1.y, p1.x - p3.x).scale(T::one() / det),
        Point2::new(p1.y - p2.y, p2.x - p1.x).scale(T::one() / det),
    ])
}

/// Linear-element stiffness matrix of `div(sigma grad u)` with natural
/// (homogeneous Neumann) boundary conditions.
pub fn assemble_stiffness<T: Real>(mesh: &TriMesh<T>) -> Result<CsrMatrix<T>> {
    let sigma = mesh.conductivity();
    let mut triplets = Vec::with_capacity(9 * mesh.num_elements());
    for (e, tri) in mesh.elements().iter().enumerate() {
        let g = basis_gradients(mesh, e)?;
        let w = sigma * mesh.element_area(e);
        for a in 0..3 {
            for b in 0..3 {
                triplets.push((tri[a], tri[b], w * g[a].dot(g[b])));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_nodes(), mesh.num_nodes(), triplets)
}

/// Right-hand side `b_i = q . grad(phi_i)(x0)` on the element containing the source.
pub fn dipole_rhs<T: Real>(mesh: &TriMesh<T>, src: &DipoleSource<T>) -> Result<Vec<T>> {
    let (element, _) = mesh
        .locate(src.location, T::lit(LOCATE_TOL))
        .ok_or_else(|| src.outside())?;
    let g = basis_gradients(mesh, element)?;
    let mut b = vec![T::zero(); mesh.num_nodes()];
    for (k, &node) in mesh.elements()[element].iter().enumerate() {
        b[node] += src.moment.dot(g[k]);
    }
    Ok(b)
}

/// Grounded Neumann solver: pins one node, factors once, and shifts every
/// solution to a zero arc-length-weighted boundary mean.
pub struct PoissonSolver<T> {
    stiffness: CsrMatrix<T>,
    factor: SkylineCholesky<T>,
    perm: Vec<usize>,
    pinned: usize,
    boundary: Vec<usize>,
    boundary_weights: Vec<T>,
}

impl<T: Real> PoissonSolver<T> {
    pub fn new(mesh: &TriMesh<T>) -> Result<Self> {
        if !mesh.is_connected() {
            return Err(Error::SolverFailure("mesh is not connected".into()));
        }
        let stiffness = assemble_stiffness(mesh)?;
        let perm = linalg::reverse_cuthill_mckee(&mesh.node_neighbors());
        let pinned = perm[0];
        let grounded: Vec<_> = stiffness
            .triplets()
            .filter(|&(r, c, _)| r != pinned && c != pinned)
            .chain(std::iter::once((pinned, pinned, T::one())))
            .collect();
        let grounded = CsrMatrix::from_triplets(mesh.num_nodes(), mesh.num_nodes(), grounded)?;
        let factor = SkylineCholesky::factor(&linalg::permute_symmetric(&grounded, &perm)?)?;
        Ok(PoissonSolver {
            stiffness,
            factor,
            perm,
            pinned,
            boundary: mesh.boundary_nodes().to_vec(),
            boundary_weights: mesh.boundary_weights(),
        })
    }

    pub fn stiffness(&self) -> &CsrMatrix<T> {
        &self.stiffness
    }

    /// Solves `K u = b` for a right-hand side with zero sum.
    pub fn solve(&self, b: &[T]) -> Result<PotentialField<T>> {
        let n = self.stiffness.nrows();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut pb: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        pb[0] = T::zero();
        debug_assert_eq!(self.perm[0], self.pinned);
        self.factor.solve_in_place(&mut pb);
        let mut u = vec![T::zero(); n];
        for (new, &old) in self.perm.iter().enumerate() {
            u[old] = pb[new];
        }

        let total: T = self.boundary_weights.iter().copied().sum();
        let mean: T = self
            .boundary
            .iter()
            .zip(&self.boundary_weights)
            .map(|(&k, &w)| w * u[k])
            .sum::<T>()
            / total;
        u.iter_mut().for_each(|v| *v -= mean);

        let ku = self.stiffness.mul_vec(&u)?;
        let res = linalg::norm2(&ku.iter().zip(b).map(|(&p, &q)| p - q).collect::<Vec<_>>());
        let bn = linalg::norm2(b);
        if !(res <= T::solve_tolerance() * bn) && bn > T::zero() {
            return Err(Error::SolverFailure(format!(
                "relative residual {:e} above tolerance",
                (res / bn).to_f64_lossy()
            )));
        }
        Ok(PotentialField { u })
    }
}

pub fn solve_potential<T: Real>(
    mesh: &TriMesh<T>,
    src: &DipoleSource<T>,
) -> Result<PotentialField<T>> {
    let b = dipole_rhs(mesh, src)?;
    PoissonSolver::new(mesh)?.solve(&b)
}

/// Recovered field `e = -grad u`: element gradients averaged onto nodes with
/// element-area weights.
pub fn gradient_field<T: Real>(mesh: &TriMesh<T>, u: &PotentialField<T>) -> Result<NodalField<T>> {
    let n = mesh.num_nodes();
    if u.u.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.u.len(),
        });
    }
    let mut acc = vec![Point2::zero(); n];
    let mut weight = vec![T::zero(); n];
    for (e, tri) in mesh.elements().iter().enumerate() {
        let g = basis_gradients(mesh, e)?;
        let grad = g[0].scale(u.u[tri[0]]) + g[1].scale(u.u[tri[1]]) + g[2].scale(u.u[tri[2]]);
        let area = mesh.element_area(e);
        for &node in tri {
            acc[node] = acc[node] + grad.scale(area);
            weight[node] += area;
        }
    }
    let mut field = NodalField::zeros(n);
    for i in 0..n {
        if weight[i] > T::zero() {
            field.set(i, -acc[i].scale(T::one() / weight[i]));
        }
    }
    Ok(field)
}

/// Location of every coarse node inside the fine mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMap<T> {
    pub fine_nodes: usize,
    pub entries: Vec<(usize, (T, T))>,
}

pub fn build_projection<T: Real>(
    fine: &TriMesh<T>,
    coarse: &TriMesh<T>,
) -> Result<ProjectionMap<T>> {
    let entries = coarse
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            fine.locate(p, T::lit(LOCATE_TOL))
                .ok_or(Error::NodeNotLocated { node: i })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProjectionMap {
        fine_nodes: fine.num_nodes(),
        entries,
    })
}

/// Interpolates a fine-mesh field at the coarse nodes.
pub fn project<T: Real>(
    map: &ProjectionMap<T>,
    fine: &TriMesh<T>,
    field: &NodalField<T>,
) -> Result<NodalField<T>> {
    if field.num_nodes() != map.fine_nodes || fine.num_nodes() != map.fine_nodes {
        return Err(Error::DimensionMismatch {
            expected: map.fine_nodes,
            found: field.num_nodes(),
        });
    }
    let mut out = NodalField::zeros(map.entries.len());
    for (i, &(element, (d1, d2))) in map.entries.iter().enumerate() {
        let [a, b, c] = fine.elements()[element];
        let v =
            field.at(a).scale(T::one() - d1 - d2) + field.at(b).scale(d1) + field.at(c).scale(d2);
        out.set(i, v);
    }
    Ok(out)
}

/// `u(a_i) - u(b_i)` for every chord, i.e. the integral of `-grad u` along `s_hat`.
pub fn longitudinal_data<T: Real>(
    u: &PotentialField<T>,
    layout: &ElectrodeLayout<T>,
    chords: &[Chord<T>],
) -> Result<Vec<T>> {
    let ids = layout.mesh_node_ids();
    chords
        .iter()
        .map(|c| {
            let (i, j) = c.endpoints;
            match (ids.get(i), ids.get(j)) {
                (Some(&a), Some(&b)) if a < u.u.len() && b < u.u.len() => Ok(u.u[a] - u.u[b]),
                _ => Err(Error::InvalidParameter(format!(
                    "chord {i}-{j} references an unknown electrode"
                ))),
            }
        })
        .collect()
}

/// Adds Gaussian noise rescaled so that `20 log10(|data| / |noise|)` equals
/// `snr_db` exactly. An infinite `snr_db` yields zero noise.
pub fn add_noise<T: Real>(data: &[T], snr_db: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    let norm = linalg::norm2(data);
    if !(norm > T::zero()) {
        return Err(Error::ZeroData);
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidParameter("snr_db is NaN".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok((data.to_vec(), vec![T::zero(); data.len()]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..data.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let raw_norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let target = norm.to_f64_lossy() / 10f64.powf(snr_db / 20.0);
    let scale = target / raw_norm;
    let noise: Vec<T> = raw.iter().map(|&v| T::lit(v * scale)).collect();
    let noisy = data.iter().zip(&noise).map(|(&d, &n)| d + n).collect();
    Ok((noisy, noise))
}

pub fn snr_db<T: Real>(data: &[T], noise: &[T]) -> f64 {
    20.0 * (linalg::norm2(data).to_f64_lossy() / linalg::norm2(noise).to_f64_lossy()).log10()
}
