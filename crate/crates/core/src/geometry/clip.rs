use std::collections::HashMap;

use crate::geometry::chord::Chord;
use crate::geometry::mesh::TriMesh;
use crate::geometry::point::Point2;
use crate::{Error, Real, Result};

/// Segments shorter than this fraction of the chord length are discarded.
pub const MIN_SEGMENT_FRACTION: f64 = 1e-12;

/// Portion of a chord inside one element, oriented from the chord start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub element_id: usize,
    pub xa: Point2<T>,
    pub xb: Point2<T>,
}

impl<T: Real> Segment<T> {
    pub fn delta(&self) -> Point2<T> {
        self.xb - self.xa
    }

    pub fn length(&self) -> T {
        self.xa.distance(self.xb)
    }

    pub fn midpoint(&self) -> Point2<T> {
        self.xa + self.delta().scale(T::lit(0.5))
    }
}

/// Reusable chord clipper holding per-mesh lookup tables.
pub struct ChordClipper<'m, T> {
    mesh: &'m TriMesh<T>,
    bbox: Vec<[T; 4]>,
    edge_count: HashMap<(usize, usize), u8>,
}

impl<'m, T: Real> ChordClipper<'m, T> {
    pub fn new(mesh: &'m TriMesh<T>) -> Self {
        let bbox = (0..mesh.num_elements())
            .map(|e| {
                let [a, b, c] = mesh.vertices(e);
                [
                    a.x.min(b.x).min(c.x),
                    a.x.max(b.x).max(c.x),
                    a.y.min(b.y).min(c.y),
                    a.y.max(b.y).max(c.y),
                ]
            })
            .collect();
        let mut edge_count = HashMap::new();
        for tri in mesh.elements() {
            for k in 0..3 {
                let (i, j) = (tri[k], tri[(k + 1) % 3]);
                *edge_count.entry((i.min(j), i.max(j))).or_insert(0u8) += 1;
            }
        }
        ChordClipper {
            mesh,
            bbox,
            edge_count,
        }
    }

    pub fn mesh(&self) -> &'m TriMesh<T> {
        self.mesh
    }

    /// Parameter interval `[t0, t1]` of `a + t (b - a)` inside element `e`.
    ///
    /// A chord running along an edge is kept only by the element whose
    /// interior lies on the `s_perp` side, unless the edge is on the
    /// boundary and has no other owner.
    fn element_interval(&self, chord: &Chord<T>, e: usize) -> Option<(T, T)> {
        let tri = self.mesh.elements()[e];
        let d = chord.b - chord.a;
        let len = d.norm();
        let eps = T::lit(MIN_SEGMENT_FRACTION) * len;
        let (mut t0, mut t1) = (T::zero(), T::one());
        for k in 0..3 {
            let (i, j) = (tri[k], tri[(k + 1) % 3]);
            let (vi, vj) = (self.mesh.node(i), self.mesh.node(j));
            let edge = vj - vi;
            let inward = edge.perp().scale(T::one() / edge.norm());
            let f0 = inward.dot(chord.a - vi);
            let df = inward.dot(d);
            if df.abs() <= eps {
                if f0 < -eps {
                    return None;
                }
                if f0 <= eps {
                    let on_perp_side = inward.dot(chord.s_perp) > T::zero();
                    let shared = self.edge_count.get(&(i.min(j), i.max(j))).copied() == Some(2);
                    if !on_perp_side && shared {
                        return None;
                    }
                }
                continue;
            }
            let t = -f0 / df;
            if df > T::zero() {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t1 - t0 <= T::lit(MIN_SEGMENT_FRACTION) {
                return None;
            }
        }
        Some((t0, t1))
    }

    /// Intersections of `chord` with every element, ordered from `a` to `b`.
    pub fn clip(&self, chord: &Chord<T>) -> Result<Vec<Segment<T>>> {
        let (a, b) = (chord.a, chord.b);
        let pad = T::lit(MIN_SEGMENT_FRACTION) * chord.length();
        let (xlo, xhi) = (a.x.min(b.x) - pad, a.x.max(b.x) + pad);
        let (ylo, yhi) = (a.y.min(b.y) - pad, a.y.max(b.y) + pad);
        let mut hits: Vec<(T, T, usize)> = Vec::new();
        for (e, bb) in self.bbox.iter().enumerate() {
            if bb[1] < xlo || bb[0] > xhi || bb[3] < ylo || bb[2] > yhi {
                continue;
            }
            if let Some((t0, t1)) = self.element_interval(chord, e) {
                hits.push((t0, t1, e));
            }
        }
        if hits.is_empty() {
            return Err(Error::EmptyClip {
                endpoints: chord.endpoints,
            });
        }
        hits.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.2.cmp(&y.2)));
        let d = b - a;
        Ok(hits
            .into_iter()
            .map(|(t0, t1, e)| Segment {
                element_id: e,
                xa: a + d.scale(t0),
                xb: a + d.scale(t1),
            })
            .collect())
    }
}

/// One-shot convenience wrapper around [`ChordClipper`].
pub fn clip_chord<T: Real>(chord: &Chord<T>, mesh: &TriMesh<T>) -> Result<Vec<Segment<T>>> {
    ChordClipper::new(mesh).clip(chord)
}
