//! Field comparison metrics and magnitude-based source localization.

use crate::field::NodalField;
use crate::forward::DipoleSource;
use crate::geometry::TriMesh;
use crate::{Error, Real, Result};

/// Nodes whose magnitude falls below this fraction of the field maximum are
/// excluded from the ratio metrics.
pub const ZERO_MAGNITUDE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averaged<T> {
    pub value: T,
    /// Nodes skipped by the zero-magnitude guard.
    pub excluded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult<T> {
    pub mr: T,
    pub cs: T,
    pub loc_node: usize,
    pub loc_error: T,
    pub max_mag_ratio: T,
    pub mr_excluded: usize,
    pub cs_excluded: usize,
}

fn check_sizes<T: Real>(a: &NodalField<T>, b: &NodalField<T>) -> Result<()> {
    if a.num_nodes() != b.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: b.num_nodes(),
            found: a.num_nodes(),
        });
    }
    Ok(())
}

fn guard<T: Real>(mags: &[T]) -> T {
    mags.iter().fold(T::zero(), |m, &v| m.max(v)) * T::lit(ZERO_MAGNITUDE_GUARD)
}

/// Mean over nodes of `|e_hat_i| / |e_i|`.
pub fn magnitude_ratio<T: Real>(
    reconstructed: &NodalField<T>,
    truth: &NodalField<T>,
) -> Result<Averaged<T>> {
    check_sizes(reconstructed, truth)?;
    let tm = truth.magnitudes();
    let cut = guard(&tm);
    let (mut sum, mut used) = (T::zero(), 0usize);
    for (i, &t) in tm.iter().enumerate() {
        if t > cut {
            sum += reconstructed.at(i).norm() / t;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::AllNodesExcluded);
    }
    Ok(Averaged {
        value: sum / T::from_usize_lossy(used),
        excluded: tm.len() - used,
    })
}

/// Mean over nodes of the cosine between `e_hat_i` and `e_i`.
pub fn cosine_similarity<T: Real>(
    reconstructed: &NodalField<T>,
    truth: &NodalField<T>,
) -> Result<Averaged<T>> {
    check_sizes(reconstructed, truth)?;
    let rm = reconstructed.magnitudes();
    let tm = truth.magnitudes();
    let (rcut, tcut) = (guard(&rm), guard(&tm));
    let (mut sum, mut used) = (T::zero(), 0usize);
    for i in 0..tm.len() {
        if rm[i] > rcut && tm[i] > tcut {
            let c = reconstructed.at(i).dot(truth.at(i)) / (rm[i] * tm[i]);
            sum += c.max(-T::one()).min(T::one());
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::AllNodesExcluded);
    }
    Ok(Averaged {
        value: sum / T::from_usize_lossy(used),
        excluded: tm.len() - used,
    })
}

/// Node of maximal magnitude (lowest index on ties) and its distance to the source.
pub fn localize<T: Real>(
    field: &NodalField<T>,
    mesh: &TriMesh<T>,
    source: &DipoleSource<T>,
) -> Result<(usize, T)> {
    if field.num_nodes() != mesh.num_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_nodes(),
            found: field.num_nodes(),
        });
    }
    let (node, peak) = argmax_magnitude(field);
    if !(peak > T::zero()) {
        return Err(Error::ZeroField);
    }
    Ok((node, mesh.node(node).distance(source.location)))
}

pub fn argmax_magnitude<T: Real>(field: &NodalField<T>) -> (usize, T) {
    field
        .magnitudes()
        .into_iter()
        .enumerate()
        .fold(
            (0, T::zero()),
            |best, (i, v)| if v > best.1 { (i, v) } else { best },
        )
}

pub fn evaluate<T: Real>(
    reconstructed: &NodalField<T>,
    truth: &NodalField<T>,
    mesh: &TriMesh<T>,
    source: &DipoleSource<T>,
) -> Result<EvalResult<T>> {
    let mr = magnitude_ratio(reconstructed, truth)?;
    let cs = cosine_similarity(reconstructed, truth)?;
    let (loc_node, loc_error) = localize(reconstructed, mesh, source)?;
    let (_, true_peak) = argmax_magnitude(truth);
    let (_, peak) = argmax_magnitude(reconstructed);
    Ok(EvalResult {
        mr: mr.value,
        cs: cs.value,
        loc_node,
        loc_error,
        max_mag_ratio: peak / true_peak,
        mr_excluded: mr.excluded,
        cs_excluded: cs.excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_disk_mesh_rings, Point2};

    fn sample(n: usize) -> NodalField<f64> {
        let ex: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 1.5).collect();
        let ey: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).cos()).collect();
        NodalField::from_components(&ex, &ey).unwrap()
    }

    #[test]
    fn identities() {
        let e = sample(40);
        assert!((magnitude_ratio(&e, &e).unwrap().value - 1.0).abs() <= 1e-12);
        assert!((magnitude_ratio(&e.scaled(2.0), &e).unwrap().value - 2.0).abs() <= 1e-12);
        assert!((cosine_similarity(&e, &e).unwrap().value - 1.0).abs() <= 1e-12);
        assert!((cosine_similarity(&e.scaled(-1.0), &e).unwrap().value + 1.0).abs() <= 1e-12);
        let rot = e.map(|v| v.perp());
        assert!(cosine_similarity(&rot, &e).unwrap().value.abs() <= 1e-12);
        assert!((magnitude_ratio(&rot, &e).unwrap().value - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn zero_nodes_are_excluded() {
        let mut e = sample(10);
        e.set(3, Point2::new(0.0, 0.0));
        let r = magnitude_ratio(&e, &e).unwrap();
        assert_eq!(r.excluded, 1);
        assert_eq!(r.value, 1.0);
        let z = NodalField::<f64>::zeros(10);
        assert!(matches!(
            magnitude_ratio(&z, &z),
            Err(Error::AllNodesExcluded)
        ));
        assert!(matches!(
            cosine_similarity(&z, &e),
            Err(Error::AllNodesExcluded)
        ));
    }

    #[test]
    fn localize_ties_and_zero() {
        let mesh: crate::geometry::TriMesh<f64> = build_disk_mesh_rings(1.0, 2).unwrap();
        let src = DipoleSource::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)).unwrap();
        let mut f = NodalField::zeros(mesh.num_nodes());
        f.set(7, Point2::new(0.0, 2.0));
        f.set(3, Point2::new(2.0, 0.0));
        f.set(5, Point2::new(1.0, 0.0));
        let (node, err) = localize(&f, &mesh, &src).unwrap();
        assert_eq!(node, 3);
        assert!((err - mesh.node(3).norm()).abs() < 1e-15);
        let z = NodalField::zeros(mesh.num_nodes());
        assert!(matches!(localize(&z, &mesh, &src), Err(Error::ZeroField)));
    }
}
