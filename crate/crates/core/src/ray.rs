//! Longitudinal and transverse ray matrices.

use crate::field::NodalField;
use crate::geometry::{Chord, ChordClipper, Point2, Segment, TriMesh};
use crate::linalg::CsrMatrix;
use crate::{Error, Real, Result};

/// Which field component along a chord is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    /// Component along the chord direction `s_hat`.
    Longitudinal,
    /// Component along the chord normal `s_perp`.
    Transverse,
}

impl Flavor {
    pub fn direction<T: Real>(self, chord: &Chord<T>) -> Point2<T> {
        match self {
            Flavor::Longitudinal => chord.s_hat,
            Flavor::Transverse => chord.s_perp,
        }
    }
}

/// Sparse `m x 2N` operator from a nodal field to chord integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct RayMatrix<T> {
    matrix: CsrMatrix<T>,
    flavor: Flavor,
}

impl<T: Real> RayMatrix<T> {
    pub fn from_csr(matrix: CsrMatrix<T>, flavor: Flavor) -> Result<Self> {
        if !matrix.ncols().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "ray matrix needs an even column count, got {}",
                matrix.ncols()
            )));
        }
        Ok(RayMatrix { matrix, flavor })
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn num_nodes(&self) -> usize {
        self.matrix.ncols() / 2
    }

    pub fn csr(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn apply(&self, e: &NodalField<T>) -> Result<Vec<T>> {
        self.matrix.mul_vec(e.values())
    }
}

/// Six `(column, coefficient)` contributions of one segment: x-components at
/// the three vertex ids, then y-components offset by `N`.
///
/// The coefficients integrate `dir . e` exactly for the linear interpolant of
/// the nodal field, using the barycentric coordinates of the segment midpoint.
pub fn segment_coefficients<T: Real>(
    mesh: &TriMesh<T>,
    seg: &Segment<T>,
    dir: Point2<T>,
) -> Result<[(usize, T); 6]> {
    let n = mesh.num_nodes();
    let [j1, j2, j3] = mesh.elements()[seg.element_id];
    let (c1, c2) = mesh.barycentric(seg.element_id, seg.midpoint())?;
    let len = seg.length();
    let w = [T::one() - c1 - c2, c1, c2];
    let (lx, ly) = (len * dir.x, len * dir.y);
    Ok([
        (j1, lx * w[0]),
        (j2, lx * w[1]),
        (j3, lx * w[2]),
        (j1 + n, ly * w[0]),
        (j2 + n, ly * w[1]),
        (j3 + n, ly * w[2]),
    ])
}

/// Assembles one row per chord by accumulating segment contributions.
pub fn assemble<T: Real>(
    mesh: &TriMesh<T>,
    chords: &[Chord<T>],
    flavor: Flavor,
) -> Result<RayMatrix<T>> {
    let clipper = ChordClipper::new(mesh);
    let mut triplets = Vec::new();
    for (row, chord) in chords.iter().enumerate() {
        let wrap = |e: Error| Error::Chord {
            chord: row,
            source: Box::new(e),
        };
        let dir = flavor.direction(chord);
        for seg in clipper.clip(chord).map_err(wrap)? {
            for (col, v) in segment_coefficients(mesh, &seg, dir).map_err(wrap)? {
                triplets.push((row, col, v));
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(chords.len(), 2 * mesh.num_nodes(), triplets)?;
    RayMatrix::from_csr(matrix, flavor)
}

/// Both ray matrices for the same chord set, sharing one clipping pass.
pub fn assemble_pair<T: Real>(
    mesh: &TriMesh<T>,
    chords: &[Chord<T>],
) -> Result<(RayMatrix<T>, RayMatrix<T>)> {
    let clipper = ChordClipper::new(mesh);
    let mut long = Vec::new();
    let mut trans = Vec::new();
    for (row, chord) in chords.iter().enumerate() {
        let wrap = |e: Error| Error::Chord {
            chord: row,
            source: Box::new(e),
        };
        for seg in clipper.clip(chord).map_err(wrap)? {
            for (col, v) in segment_coefficients(mesh, &seg, chord.s_hat).map_err(wrap)? {
                long.push((row, col, v));
            }
            for (col, v) in segment_coefficients(mesh, &seg, chord.s_perp).map_err(wrap)? {
                trans.push((row, col, v));
            }
        }
    }
    let cols = 2 * mesh.num_nodes();
    Ok((
        RayMatrix::from_csr(
            CsrMatrix::from_triplets(chords.len(), cols, long)?,
            Flavor::Longitudinal,
        )?,
        RayMatrix::from_csr(
            CsrMatrix::from_triplets(chords.len(), cols, trans)?,
            Flavor::Transverse,
        )?,
    ))
}

pub fn apply<T: Real>(r: &RayMatrix<T>, e: &NodalField<T>) -> Result<Vec<T>> {
    r.apply(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_disk_mesh_rings, enumerate_chords, place_electrodes, Segment};

    fn unit_triangle() -> TriMesh<f64> {
        TriMesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
            ],
            vec![[0, 1, 2]],
            vec![0, 1, 2],
            1.0,
        )
        .unwrap()
    }

    /// 10-point Gauss-Legendre rule on [0, 1].
    fn gauss10(f: impl Fn(f64) -> f64) -> f64 {
        const X: [f64; 5] = [
            0.148_874_338_981_631_2,
            0.433_395_394_129_247_2,
            0.679_409_568_299_024_4,
            0.865_063_366_688_984_5,
            0.973_906_528_517_171_7,
        ];
        const W: [f64; 5] = [
            0.295_524_224_714_752_9,
            0.269_266_719_309_996_4,
            0.219_086_362_515_982,
            0.149_451_349_150_580_6,
            0.066_671_344_308_688_1,
        ];
        let mut s = 0.0;
        for k in 0..5 {
            s += W[k] * (f(0.5 + 0.5 * X[k]) + f(0.5 - 0.5 * X[k]));
        }
        0.5 * s
    }

    fn seg_value(mesh: &TriMesh<f64>, seg: &Segment<f64>, dir: Point2<f64>, e: &[f64]) -> f64 {
        segment_coefficients(mesh, seg, dir)
            .unwrap()
            .iter()
            .map(|&(c, v)| v * e[c])
            .sum()
    }

    #[test]
    fn constant_field_on_unit_triangle() {
        let mesh = unit_triangle();
        let seg = Segment {
            element_id: 0,
            xa: Point2::new(0.0, 0.25),
            xb: Point2::new(0.75, 0.25),
        };
        let e = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let oracle = 0.75 * gauss10(|_| 1.0);
        let got = seg_value(&mesh, &seg, Point2::new(1.0, 0.0), &e);
        assert!((got - oracle).abs() < 1e-15);
        assert!((got - 0.75).abs() < 1e-15);
    }

    #[test]
    fn linear_field_on_unit_triangle() {
        let mesh = unit_triangle();
        let seg = Segment {
            element_id: 0,
            xa: Point2::new(0.0, 0.25),
            xb: Point2::new(0.75, 0.25),
        };
        // e = (x, 0) sampled at the vertices
        let e = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let got = seg_value(&mesh, &seg, Point2::new(1.0, 0.0), &e);
        let oracle = 0.75 * gauss10(|t| 0.75 * t);
        assert!((got - 0.28125).abs() < 1e-15);
        assert!((got - oracle).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_direction_annihilates_constant() {
        let mesh = unit_triangle();
        let seg = Segment {
            element_id: 0,
            xa: Point2::new(0.1, 0.1),
            xb: Point2::new(0.3, 0.6),
        };
        let e = [2.0, 2.0, 2.0, 1.0, 1.0, 1.0];
        let dir = Point2::new(-1.0, 2.0).scale(1.0 / 5f64.sqrt());
        assert!(seg_value(&mesh, &seg, dir, &e).abs() < 1e-15);
    }

    #[test]
    fn quadratic_interpolant_matches_quadrature() {
        // Segment coefficients integrate the linear interpolant of arbitrary
        // nodal values; compare to Gauss quadrature of that interpolant.
        let mesh = TriMesh::new(
            vec![
                Point2::new(0.2, -0.1),
                Point2::new(1.3, 0.4),
                Point2::new(0.1, 0.9),
            ],
            vec![[0, 1, 2]],
            vec![0, 1, 2],
            1.0,
        )
        .unwrap();
        let seg = Segment {
            element_id: 0,
            xa: Point2::new(0.3, 0.1),
            xb: Point2::new(0.7, 0.5),
        };
        let e = [0.3, -1.2, 2.5, 0.7, 0.1, -0.4];
        let dir = seg.delta().scale(1.0 / seg.length());
        let interp = |p: Point2<f64>| {
            let (d1, d2) = mesh.barycentric(0, p).unwrap();
            let w = [1.0 - d1 - d2, d1, d2];
            let ex: f64 = (0..3).map(|k| w[k] * e[k]).sum();
            let ey: f64 = (0..3).map(|k| w[k] * e[3 + k]).sum();
            Point2::new(ex, ey).dot(dir)
        };
        let oracle = seg.length() * gauss10(|t| interp(seg.xa + seg.delta().scale(t)));
        let got = seg_value(&mesh, &seg, dir, &e);
        assert!((got - oracle).abs() < 1e-14, "{got} vs {oracle}");
    }

    #[test]
    fn constant_field_rows_equal_chord_projection() {
        let mesh: TriMesh<f64> = build_disk_mesh_rings(1.0, 5).unwrap();
        let layout = place_electrodes(&mesh, 10).unwrap();
        let chords = enumerate_chords(&layout, &mesh).unwrap();
        let (rl, rt) = assemble_pair(&mesh, &chords).unwrap();
        let e = NodalField::from_fn(mesh.nodes(), |_| Point2::new(1.0, 0.0));
        let il = rl.apply(&e).unwrap();
        let it = rt.apply(&e).unwrap();
        for (k, c) in chords.iter().enumerate() {
            assert!((il[k] - c.length() * c.s_hat.x).abs() < 1e-12);
            assert!((it[k] - c.length() * c.s_perp.x).abs() < 1e-12);
        }
        assert_eq!(rl, assemble(&mesh, &chords, Flavor::Longitudinal).unwrap());
        assert_eq!(rt, assemble(&mesh, &chords, Flavor::Transverse).unwrap());
    }

    #[test]
    fn unit_probe_reads_column() {
        let mesh: TriMesh<f64> = build_disk_mesh_rings(1.0, 3).unwrap();
        let layout = place_electrodes(&mesh, 6).unwrap();
        let chords = enumerate_chords(&layout, &mesh).unwrap();
        let r = assemble(&mesh, &chords, Flavor::Longitudinal).unwrap();
        assert!(r
            .apply(&NodalField::zeros(mesh.num_nodes()))
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        let k = 0;
        let mut v = vec![0.0; 2 * mesh.num_nodes()];
        v[k] = 1.0;
        let out = r.apply(&NodalField::from_vec(v).unwrap()).unwrap();
        for (row, &o) in out.iter().enumerate() {
            assert_eq!(o, r.csr().get(row, k));
        }
        assert!(matches!(
            r.apply(&NodalField::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
