#![allow(dead_code)]

pub mod oracle;

use vtomo::geometry::{build_disk_mesh_rings, TriMesh};
use vtomo::inverse::{build_laplacian, PenaltyWeights};
use vtomo::linalg::CsrMatrix;
use vtomo::ray::{Flavor, RayMatrix};

/// Small deterministic generator so instances do not depend on a crate version.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407))
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64)
    }

    /// Uniform on [-1, 1).
    pub fn sym(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }
}

pub struct Instance {
    pub r_long: RayMatrix<f64>,
    pub r_trans: RayMatrix<f64>,
    pub w: CsrMatrix<f64>,
    pub data: Vec<f64>,
}

/// Random sparse ray matrices on a 19-node disk mesh (2N = 38 unknowns),
/// `m >= 2N` rows, mesh Laplacian with random positive weights.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = Lcg::new(seed);
    let mesh: TriMesh<f64> = build_disk_mesh_rings(1.0, 2).unwrap();
    let n2 = 2 * mesh.num_nodes();
    let m = n2 + (seed as usize % 7);
    let random_matrix = |rng: &mut Lcg| {
        let mut t = Vec::new();
        for r in 0..m {
            for c in 0..n2 {
                if rng.next_f64() < 0.3 {
                    t.push((r, c, rng.sym()));
                }
            }
        }
        CsrMatrix::from_triplets(m, n2, t).unwrap()
    };
    let rl = random_matrix(&mut rng);
    let rt = random_matrix(&mut rng);
    let lap = build_laplacian(&mesh).unwrap();
    let w: Vec<f64> = (0..n2).map(|_| 0.5 + rng.next_f64()).collect();
    let w = PenaltyWeights::new(w).unwrap().operator(&lap).unwrap();
    let data = (0..m).map(|_| 3.0 * rng.sym()).collect();
    Instance {
        r_long: RayMatrix::from_csr(rl, Flavor::Longitudinal).unwrap(),
        r_trans: RayMatrix::from_csr(rt, Flavor::Transverse).unwrap(),
        w,
        data,
    }
}
