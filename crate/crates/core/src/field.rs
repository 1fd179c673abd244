use crate::geometry::Point2;
use crate::{Error, Real, Result};

/// Nodal vector field stored as `[e1x, ..., eNx, e1y, ..., eNy]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField<T> {
    values: Vec<T>,
}

impl<T: Real> NodalField<T> {
    pub fn from_vec(values: Vec<T>) -> Result<Self> {
        if !values.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "nodal field length {} is odd",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "nodal field has non-finite entries".into(),
            ));
        }
        Ok(NodalField { values })
    }

    pub fn zeros(num_nodes: usize) -> Self {
        NodalField {
            values: vec![T::zero(); 2 * num_nodes],
        }
    }

    pub fn from_fn(points: &[Point2<T>], f: impl Fn(Point2<T>) -> Point2<T>) -> Self {
        let n = points.len();
        let mut values = vec![T::zero(); 2 * n];
        for (i, &p) in points.iter().enumerate() {
            let v = f(p);
            values[i] = v.x;
            values[n + i] = v.y;
        }
        NodalField { values }
    }

    pub fn from_components(ex: &[T], ey: &[T]) -> Result<Self> {
        if ex.len() != ey.len() {
            return Err(Error::DimensionMismatch {
                expected: ex.len(),
                found: ey.len(),
            });
        }
        let mut values = ex.to_vec();
        values.extend_from_slice(ey);
        Self::from_vec(values)
    }

    pub fn num_nodes(&self) -> usize {
        self.values.len() / 2
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn at(&self, node: usize) -> Point2<T> {
        let n = self.num_nodes();
        Point2::new(self.values[node], self.values[n + node])
    }

    pub fn set(&mut self, node: usize, v: Point2<T>) {
        let n = self.num_nodes();
        self.values[node] = v.x;
        self.values[n + node] = v.y;
    }

    pub fn magnitudes(&self) -> Vec<T> {
        (0..self.num_nodes()).map(|i| self.at(i).norm()).collect()
    }

    pub fn scaled(&self, s: T) -> Self {
        NodalField {
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    /// Applies `f` to every nodal vector.
    pub fn map(&self, f: impl Fn(Point2<T>) -> Point2<T>) -> Self {
        let n = self.num_nodes();
        let mut out = NodalField::zeros(n);
        for i in 0..n {
            out.set(i, f(self.at(i)));
        }
        out
    }

    /// Nodewise mean of equally sized fields.
    pub fn mean(fields: &[NodalField<T>]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or(Error::InvalidParameter("no fields to average".into()))?;
        let len = first.values.len();
        let mut acc = vec![T::zero(); len];
        for f in fields {
            if f.values.len() != len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    found: f.values.len(),
                });
            }
            for (a, &v) in acc.iter_mut().zip(&f.values) {
                *a += v;
            }
        }
        let k = T::from_usize_lossy(fields.len());
        acc.iter_mut().for_each(|v| *v /= k);
        Ok(NodalField { values: acc })
    }
}
