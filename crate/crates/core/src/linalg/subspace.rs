use num_traits::Zero;

use super::matrix::QMatrix;
use super::rational::Rational;
use super::LinalgError;

/// A subspace of `Q^n` held as the nonzero rows of its reduced row-echelon
/// form, so equal subspaces compare equal structurally.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Subspace {
    ambient: usize,
    basis: QMatrix,
}

/// Result of [`Subspace::combine`].
#[derive(Clone, Debug)]
pub struct SubspaceOps {
    pub sum: Subspace,
    pub intersection: Subspace,
    pub contains: bool,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: QMatrix::zeros(0, ambient) }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace { ambient, basis: QMatrix::identity(ambient) }
    }

    pub fn span(ambient: usize, vectors: &[Vec<Rational>]) -> Self {
        if vectors.is_empty() {
            return Self::zero(ambient);
        }
        assert!(vectors.iter().all(|v| v.len() == ambient), "vector length mismatch");
        let (r, rank, _) = QMatrix::from_rows(vectors.to_vec()).rref();
        let rows: Vec<Vec<Rational>> = (0..rank).map(|i| r.row(i).to_vec()).collect();
        Subspace { ambient, basis: QMatrix::from_flat(rank, ambient, rows.into_iter().flatten().collect()) }
    }

    /// Coordinate subspace spanned by the given standard basis vectors.
    pub fn coordinate(ambient: usize, coords: impl IntoIterator<Item = usize>) -> Self {
        let vecs: Vec<Vec<Rational>> = coords
            .into_iter()
            .map(|c| {
                let mut v = vec![Rational::zero(); ambient];
                v[c] = Rational::from_integer(1.into());
                v
            })
            .collect();
        Self::span(ambient, &vecs)
    }

    /// Kernel of a family of linear functionals given as rows.
    pub fn annihilated_by(ambient: usize, functionals: &[Vec<Rational>]) -> Self {
        if functionals.is_empty() {
            return Self::full(ambient);
        }
        let m = QMatrix::from_rows(functionals.to_vec());
        Self::span(ambient, &m.kernel())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &QMatrix {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Vec<Rational>> {
        self.basis.row_vecs()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    fn check(&self, other: &Subspace) -> Result<(), LinalgError> {
        if self.ambient != other.ambient {
            return Err(LinalgError::DimensionMismatch { left: self.ambient, right: other.ambient });
        }
        Ok(())
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check(other)?;
        let mut v = self.basis_vectors();
        v.extend(other.basis_vectors());
        Ok(Self::span(self.ambient, &v))
    }

    /// Zassenhaus: reduce `[[A, A], [B, 0]]`; rows with vanishing left half carry
    /// the intersection in their right half.
    pub fn intersection(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check(other)?;
        let n = self.ambient;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(n));
        }
        let mut rows = Vec::new();
        for a in self.basis_vectors() {
            let mut r = a.clone();
            r.extend(a);
            rows.push(r);
        }
        for b in other.basis_vectors() {
            let mut r = b;
            r.extend(std::iter::repeat(Rational::zero()).take(n));
            rows.push(r);
        }
        let (red, rank, _) = QMatrix::from_rows(rows).rref();
        let inter: Vec<Vec<Rational>> = (0..rank)
            .map(|i| red.row(i))
            .filter(|r| r[..n].iter().all(Zero::is_zero))
            .map(|r| r[n..].to_vec())
            .collect();
        Ok(Self::span(n, &inter))
    }

    pub fn contains_subspace(&self, other: &Subspace) -> Result<bool, LinalgError> {
        Ok(&self.sum(other)? == self)
    }

    pub fn contains_vector(&self, v: &[Rational]) -> bool {
        let s = Self::span(self.ambient, &[v.to_vec()]);
        self.contains_subspace(&s).unwrap_or(false)
    }

    pub fn combine(&self, other: &Subspace) -> Result<SubspaceOps, LinalgError> {
        let sum = self.sum(other)?;
        let intersection = self.intersection(other)?;
        let contains = sum == *self;
        Ok(SubspaceOps { sum, intersection, contains })
    }

    /// Image under `v -> f(v)` into `target_dim` coordinates.
    pub fn map(&self, target_dim: usize, f: impl Fn(&[Rational]) -> Vec<Rational>) -> Subspace {
        let imgs: Vec<Vec<Rational>> = self.basis_vectors().iter().map(|v| f(v)).collect();
        Self::span(target_dim, &imgs)
    }

    /// Coordinates of `v` in the stored basis, if `v` lies in the subspace.
    pub fn coordinates(&self, v: &[Rational]) -> Option<Vec<Rational>> {
        // the basis is in RREF, so the pivot entries of v are the coordinates
        let mut coords = Vec::with_capacity(self.dim());
        let mut rest = v.to_vec();
        for i in 0..self.dim() {
            let row = self.basis.row(i);
            let pivot = row.iter().position(|x| !x.is_zero())?;
            let c = rest[pivot].clone();
            if !c.is_zero() {
                for (r, b) in rest.iter_mut().zip(row) {
                    *r -= &c * b;
                }
            }
            coords.push(c);
        }
        rest.iter().all(Zero::is_zero).then_some(coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rational::rat;

    fn v(x: &[i64]) -> Vec<Rational> {
        x.iter().map(|&a| rat(a)).collect()
    }

    #[test]
    fn full_space_absorbs() {
        let b = Subspace::span(3, &[v(&[1, 2, 3])]);
        let ops = Subspace::full(3).combine(&b).unwrap();
        assert_eq!(ops.sum, Subspace::full(3));
        assert_eq!(ops.intersection, b);
        assert!(ops.contains);
    }

    #[test]
    fn idempotent() {
        let a = Subspace::span(4, &[v(&[1, 0, 1, 0]), v(&[0, 1, 1, 1])]);
        let ops = a.combine(&a).unwrap();
        assert_eq!(ops.sum, a);
        assert_eq!(ops.intersection, a);
    }

    #[test]
    fn mismatch_is_an_error() {
        assert!(Subspace::full(2).sum(&Subspace::full(3)).is_err());
    }

    #[test]
    fn coordinates_roundtrip() {
        let a = Subspace::span(3, &[v(&[1, 1, 0]), v(&[0, 1, 1])]);
        let c = a.coordinates(&v(&[2, 5, 3])).unwrap();
        let back: Vec<Rational> = (0..3)
            .map(|j| (0..a.dim()).map(|i| &c[i] * &a.basis()[(i, j)]).sum())
            .collect();
        assert_eq!(back, v(&[2, 5, 3]));
        assert!(a.coordinates(&v(&[1, 0, 0])).is_none());
    }
}
