//! Observation storage shared by every stage of the pipeline.

use crate::error::DataError;

/// An ordered collection of observations of one fixed dimensionality.
///
/// Coordinates are stored row-major in a single buffer. Ground-truth labels,
/// when present, use `0` for outliers and `1..` for structures.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    dim: usize,
    coords: Vec<f64>,
    labels: Option<Vec<usize>>,
}

impl DataSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self, DataError> {
        if dim == 0 {
            return Err(DataError::ZeroDimension);
        }
        if coords.len() % dim != 0 {
            return Err(DataError::RaggedCoordinates { dim, len: coords.len() });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(DataError::NonFinite { row: pos / dim });
        }
        Ok(Self { dim, coords, labels: None })
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self, DataError> {
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (row, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(DataError::RowArity { row, expected: dim, found: r.len() });
            }
            coords.extend_from_slice(r);
        }
        Self::new(dim, coords)
    }

    /// Attaches ground-truth labels; the length must match the point count.
    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self, DataError> {
        if labels.len() != self.len() {
            return Err(DataError::LabelCount { points: self.len(), labels: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Length of the diagonal of the axis-aligned bounding box.
    pub fn bounding_box_diagonal(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.points() {
            for (d, &c) in p.iter().enumerate() {
                lo[d] = lo[d].min(c);
                hi[d] = hi[d].max(c);
            }
        }
        lo.iter()
            .zip(&hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_ragged() {
        assert!(matches!(
            DataSet::new(2, vec![0.0, 1.0, f64::NAN, 2.0]),
            Err(DataError::NonFinite { row: 1 })
        ));
        assert!(matches!(
            DataSet::new(2, vec![0.0, 1.0, 2.0]),
            Err(DataError::RaggedCoordinates { .. })
        ));
    }

    #[test]
    fn bounding_box_diagonal_of_unit_square() {
        let d = DataSet::from_rows(2, &[[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]]).unwrap();
        assert_eq!(d.len(), 3);
        assert!((d.bounding_box_diagonal() - 5.0).abs() < 1e-12);
        assert!(d.clone().with_labels(vec![1, 2]).is_err());
    }
}
