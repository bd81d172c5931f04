use thiserror::Error;

use crate::field::{same_field, Elem, Field};
use crate::fourier::{decode_index, encode_point, grid_len, ComplexGrid};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PointSetError {
    #[error("point index {index} out of range for a grid of {len} points")]
    OutOfRange { index: usize, len: usize },
    #[error("point has {got} coordinates, expected {expected}")]
    WrongArity { expected: usize, got: usize },
    #[error("coordinate {0} is not a field element")]
    BadCoordinate(u64),
}

/// Subset of `F_q^d` as sorted, unique point indices.
#[derive(Debug, Clone)]
pub struct PointSet {
    field: Field,
    d: usize,
    indices: Vec<usize>,
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        same_field(&self.field, &other.field) && self.d == other.d && self.indices == other.indices
    }
}

impl PointSet {
    /// Sorts and deduplicates `indices`.
    pub fn new(field: &Field, d: usize, mut indices: Vec<usize>) -> Result<Self, PointSetError> {
        let len = grid_len(field.q(), d).expect("grid size overflows usize");
        if let Some(&index) = indices.iter().find(|&&i| i >= len) {
            return Err(PointSetError::OutOfRange { index, len });
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self {
            field: field.clone(),
            d,
            indices,
        })
    }

    pub fn from_points<P: AsRef<[Elem]>>(
        field: &Field,
        d: usize,
        points: impl IntoIterator<Item = P>,
    ) -> Result<Self, PointSetError> {
        let q = field.q();
        let indices = points
            .into_iter()
            .map(|p| {
                let p = p.as_ref();
                if p.len() != d {
                    return Err(PointSetError::WrongArity {
                        expected: d,
                        got: p.len(),
                    });
                }
                if let Some(c) = p.iter().find(|c| c.0 >= q) {
                    return Err(PointSetError::BadCoordinate(c.0 as u64));
                }
                Ok(encode_point(q, p))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(field, d, indices)
    }

    pub fn full(field: &Field, d: usize) -> Self {
        let len = grid_len(field.q(), d).expect("grid size overflows usize");
        Self {
            field: field.clone(),
            d,
            indices: (0..len).collect(),
        }
    }

    pub fn empty(field: &Field, d: usize) -> Self {
        Self {
            field: field.clone(),
            d,
            indices: Vec::new(),
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<Elem>> + '_ {
        let q = self.field.q();
        self.indices
            .iter()
            .map(move |&i| decode_index(q, self.d, i))
    }

    pub fn indicator(&self) -> ComplexGrid {
        ComplexGrid::indicator(&self.field, self.d, self.indices.iter().copied())
    }

    /// `{x + z : x in self}`.
    pub fn translate(&self, z: &[Elem]) -> Self {
        assert_eq!(z.len(), self.d);
        let f = &self.field;
        let indices = self
            .points()
            .map(|x| {
                let moved: Vec<Elem> = x.iter().zip(z).map(|(&a, &b)| f.add(a, b)).collect();
                encode_point(f.q(), &moved)
            })
            .collect();
        Self::new(f, self.d, indices).expect("translates stay in the grid")
    }

    /// `self x last`, a subset of `F_q^{d+1}` with the new coordinate appended.
    pub fn product(&self, last: &[Elem]) -> Self {
        let len = grid_len(self.field.q(), self.d).unwrap();
        let mut indices = Vec::with_capacity(self.len() * last.len());
        for &c in last {
            indices.extend(self.indices.iter().map(|&i| i + c.index() * len));
        }
        Self::new(&self.field, self.d + 1, indices).expect("product stays in the grid")
    }
}

/// Coordinatewise difference `x - y` on point indices.
pub(crate) struct Differ<'a> {
    field: &'a Field,
    d: usize,
    q: usize,
}

impl<'a> Differ<'a> {
    pub(crate) fn new(field: &'a Field, d: usize) -> Self {
        Self {
            field,
            d,
            q: field.q() as usize,
        }
    }

    #[inline]
    pub(crate) fn sub(&self, mut x: usize, mut y: usize) -> usize {
        let mut out = 0usize;
        let mut weight = 1usize;
        for _ in 0..self.d {
            let a = Elem((x % self.q) as u32);
            let b = Elem((y % self.q) as u32);
            out += self.field.sub(a, b).index() * weight;
            x /= self.q;
            y /= self.q;
            weight *= self.q;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;

    #[test]
    fn construction_normalizes_and_validates() {
        let f = make_field(5, 1, None).unwrap();
        let s = PointSet::new(&f, 2, vec![7, 3, 7, 0]).unwrap();
        assert_eq!(s.indices(), &[0, 3, 7]);
        assert_eq!(
            PointSet::new(&f, 2, vec![25]).unwrap_err(),
            PointSetError::OutOfRange { index: 25, len: 25 }
        );
        assert!(PointSet::from_points(&f, 2, [[Elem(1)]]).is_err());
        assert!(PointSet::from_points(&f, 2, [[Elem(1), Elem(5)]]).is_err());
        let s = PointSet::from_points(&f, 2, [[Elem(1), Elem(2)]]).unwrap();
        assert_eq!(s.indices(), &[11]);
    }

    #[test]
    fn difference_matches_coordinates() {
        let f = make_field(3, 2, None).unwrap();
        let differ = Differ::new(&f, 2);
        for x in 0..81 {
            for y in (0..81).step_by(7) {
                let xc = decode_index(9, 2, x);
                let yc = decode_index(9, 2, y);
                let dc: Vec<Elem> = xc.iter().zip(&yc).map(|(&a, &b)| f.sub(a, b)).collect();
                assert_eq!(differ.sub(x, y), encode_point(9, &dc));
            }
        }
    }

    #[test]
    fn product_appends_coordinate() {
        let f = make_field(7, 1, None).unwrap();
        let e = PointSet::new(&f, 1, vec![2, 4]).unwrap();
        let p = e.product(&[Elem(0), Elem(3)]);
        assert_eq!(p.dim(), 2);
        let pts: Vec<Vec<Elem>> = p.points().collect();
        assert_eq!(
            pts,
            vec![
                vec![Elem(2), Elem(0)],
                vec![Elem(4), Elem(0)],
                vec![Elem(2), Elem(3)],
                vec![Elem(4), Elem(3)]
            ]
        );
    }
}
