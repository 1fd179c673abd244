use crate::geometry::electrodes::ElectrodeLayout;
use crate::geometry::mesh::TriMesh;
use crate::geometry::point::Point2;
use crate::{Error, Real, Result};

/// Straight integration line between two boundary electrodes.
///
/// `s_hat` points from the lower-indexed electrode `a` to the higher-indexed
/// electrode `b`; `s_perp` is `s_hat` rotated counterclockwise by 90 degrees
/// and `l = a . s_perp` is the signed distance of the line from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord<T> {
    pub a: Point2<T>,
    pub b: Point2<T>,
    pub s_hat: Point2<T>,
    pub s_perp: Point2<T>,
    pub l: T,
    pub endpoints: (usize, usize),
}

impl<T: Real> Chord<T> {
    pub fn new(a: Point2<T>, b: Point2<T>, endpoints: (usize, usize)) -> Result<Self> {
        let d = b - a;
        let len = d.norm();
        if !(len > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "chord {}-{} has coincident endpoints",
                endpoints.0, endpoints.1
            )));
        }
        let s_hat = d.scale(T::one() / len);
        let s_perp = s_hat.perp();
        Ok(Chord {
            a,
            b,
            s_hat,
            s_perp,
            l: a.dot(s_perp),
            endpoints,
        })
    }

    pub fn length(&self) -> T {
        self.a.distance(self.b)
    }
}

/// All `n(n-1)/2` chords in lexicographic order of their electrode pairs.
pub fn enumerate_chords<T: Real>(
    layout: &ElectrodeLayout<T>,
    mesh: &TriMesh<T>,
) -> Result<Vec<Chord<T>>> {
    let n = layout.len();
    let mut chords = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            chords.push(Chord::new(
                layout.position(mesh, i),
                layout.position(mesh, j),
                (i, j),
            )?);
        }
    }
    Ok(chords)
}
