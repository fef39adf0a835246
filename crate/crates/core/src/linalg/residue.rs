//! Matrices over the residue rings `Z/p^N`.
//!
//! `Z/p^N` is a local ring, so elimination always pivots on an entry of minimal
//! valuation; quotients are then only taken by units times powers of `p` that
//! divide the numerator.

use std::fmt;
use std::ops::{Index, IndexMut};

use super::matrix::QMatrix;
use super::rational::{inv_mod, mul_mod, pow_u64, reduce_mod};
use super::LinalgError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Modulus {
    pub p: u64,
    pub exp: u32,
    pub m: u64,
}

impl Modulus {
    pub fn new(p: u64, exp: u32) -> Self {
        Modulus { p, exp, m: pow_u64(p, exp) }
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.m as u128) as u64
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.m - b % self.m)
    }

    pub fn neg(&self, a: u64) -> u64 {
        (self.m - a % self.m) % self.m
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.m)
    }

    pub fn inv(&self, a: u64) -> Option<u64> {
        inv_mod(a % self.m, self.m)
    }

    pub fn is_unit(&self, a: u64) -> bool {
        a % self.p != 0
    }

    /// Valuation of a residue, capped at `exp` for zero.
    pub fn valuation(&self, mut a: u64) -> u32 {
        a %= self.m;
        if a == 0 {
            return self.exp;
        }
        let mut v = 0;
        while a % self.p == 0 {
            a /= self.p;
            v += 1;
        }
        v
    }

    pub fn from_i64(&self, a: i64) -> u64 {
        a.rem_euclid(self.m as i64) as u64
    }

    pub fn pow(&self, mut base: u64, mut e: u64) -> u64 {
        let mut acc = 1 % self.m;
        base %= self.m;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// `a / b` where `v(b) <= v(a)`; the result is one of the valid quotients.
    fn div_exact(&self, a: u64, b: u64) -> u64 {
        let vb = self.valuation(b);
        let pv = pow_u64(self.p, vb);
        let unit = (b / pv) % self.m;
        let a_red = (a % self.m) / pv;
        self.mul(a_red, self.inv(unit).expect("unit part"))
    }

    pub fn all_residues(&self) -> impl Iterator<Item = u64> {
        0..self.m
    }

    pub fn units(&self) -> impl Iterator<Item = u64> + '_ {
        (1..self.m).filter(move |a| a % self.p != 0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ZpMatrix {
    modulus: Modulus,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl ZpMatrix {
    pub fn zeros(modulus: Modulus, rows: usize, cols: usize) -> Self {
        ZpMatrix { modulus, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(modulus: Modulus, n: usize) -> Self {
        let mut m = Self::zeros(modulus, n, n);
        for i in 0..n {
            m[(i, i)] = 1 % modulus.m;
        }
        m
    }

    pub fn from_data(modulus: Modulus, rows: usize, cols: usize, data: Vec<u64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        ZpMatrix { modulus, rows, cols, data: data.into_iter().map(|x| x % modulus.m).collect() }
    }

    pub fn from_ints(modulus: Modulus, rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let data = rows.iter().flat_map(|row| row.iter().map(|&x| modulus.from_i64(x))).collect();
        ZpMatrix { modulus, rows: r, cols: c, data }
    }

    /// Reduce a `p`-integral rational matrix.
    pub fn reduce(q: &QMatrix, modulus: Modulus) -> Result<Self, LinalgError> {
        let data = q
            .data()
            .iter()
            .map(|x| reduce_mod(x, modulus.p, modulus.m).ok_or(LinalgError::NotIntegral { p: modulus.p }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ZpMatrix { modulus, rows: q.rows(), cols: q.cols(), data })
    }

    /// Canonical integer lift with entries in `[0, p^N)`.
    pub fn lift(&self) -> QMatrix {
        let rows = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| super::rational::rat(self[(i, j)] as i64)).collect())
            .collect();
        QMatrix::from_rows(rows)
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u64] {
        &mut self.data
    }

    pub fn is_identity(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| self[(i, j)] == u64::from(i == j) % self.modulus.m))
    }

    pub fn mul(&self, other: &ZpMatrix) -> Result<ZpMatrix, LinalgError> {
        if self.modulus != other.modulus {
            return Err(LinalgError::RingMismatch);
        }
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch { left: self.cols, right: other.rows });
        }
        let m = self.modulus.m as u128;
        let mut out = ZpMatrix::zeros(self.modulus, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc: u128 = 0;
                for k in 0..self.cols {
                    acc = (acc + self[(i, k)] as u128 * other[(k, j)] as u128) % m;
                }
                out[(i, j)] = acc as u64;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut t = ZpMatrix::zeros(self.modulus, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn principal(&self, idx: &[usize]) -> ZpMatrix {
        let mut m = ZpMatrix::zeros(self.modulus, idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    pub fn det(&self) -> u64 {
        assert_eq!(self.rows, self.cols);
        let md = self.modulus;
        let n = self.rows;
        let mut a = self.clone();
        let mut det = 1 % md.m;
        for k in 0..n {
            // full pivoting on minimal valuation keeps every quotient well defined
            let mut best: Option<(usize, usize, u32)> = None;
            for i in k..n {
                for j in k..n {
                    let v = md.valuation(a[(i, j)]);
                    if v < md.exp && best.map_or(true, |b| v < b.2) {
                        best = Some((i, j, v));
                    }
                }
            }
            let Some((pi, pj, _)) = best else {
                return 0;
            };
            if pi != k {
                a.swap_rows(pi, k);
                det = md.neg(det);
            }
            if pj != k {
                a.swap_cols(pj, k);
                det = md.neg(det);
            }
            let pv = a[(k, k)];
            det = md.mul(det, pv);
            for i in k + 1..n {
                if a[(i, k)] == 0 {
                    continue;
                }
                let f = md.div_exact(a[(i, k)], pv);
                for j in k..n {
                    let t = md.mul(f, a[(k, j)]);
                    a[(i, j)] = md.sub(a[(i, j)], t);
                }
            }
        }
        det
    }

    /// Inverse; requires a unit determinant.
    pub fn inverse(&self) -> Result<ZpMatrix, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        let md = self.modulus;
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = ZpMatrix::identity(md, n);
        for col in 0..n {
            let piv = (col..n).find(|&r| md.is_unit(a[(r, col)])).ok_or(LinalgError::NonUnitDeterminant)?;
            a.swap_rows(piv, col);
            inv.swap_rows(piv, col);
            let pinv = md.inv(a[(col, col)]).unwrap();
            for c in 0..n {
                a[(col, c)] = md.mul(a[(col, c)], pinv);
                inv[(col, c)] = md.mul(inv[(col, c)], pinv);
            }
            for r in 0..n {
                if r == col || a[(r, col)] == 0 {
                    continue;
                }
                let f = a[(r, col)];
                for c in 0..n {
                    let t = md.mul(f, a[(col, c)]);
                    a[(r, c)] = md.sub(a[(r, c)], t);
                    let t = md.mul(f, inv[(col, c)]);
                    inv[(r, c)] = md.sub(inv[(r, c)], t);
                }
            }
        }
        Ok(inv)
    }

    /// Rank over `F_p` (only meaningful for exponent 1).
    pub fn rank_mod_p(&self) -> usize {
        let md = Modulus::new(self.modulus.p, 1);
        let mut a = ZpMatrix::from_data(md, self.rows, self.cols, self.data.clone());
        let mut row = 0;
        for col in 0..a.cols {
            if row == a.rows {
                break;
            }
            let Some(piv) = (row..a.rows).find(|&r| a[(r, col)] != 0) else {
                continue;
            };
            a.swap_rows(piv, row);
            let pinv = md.inv(a[(row, col)]).unwrap();
            for r in row + 1..a.rows {
                if a[(r, col)] == 0 {
                    continue;
                }
                let f = md.mul(a[(r, col)], pinv);
                for c in col..a.cols {
                    let t = md.mul(f, a[(row, c)]);
                    a[(r, c)] = md.sub(a[(r, c)], t);
                }
            }
            row += 1;
        }
        row
    }
}

impl Index<(usize, usize)> for ZpMatrix {
    type Output = u64;
    fn index(&self, (i, j): (usize, usize)) -> &u64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ZpMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut u64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ZpMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<u64>> = (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)]).collect()).collect();
        write!(f, "{:?} mod {}^{}", rows, self.modulus.p, self.modulus.exp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_requires_unit_det() {
        let md = Modulus::new(3, 2);
        let m = ZpMatrix::from_ints(md, &[vec![1, 3], vec![0, 1]]);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).unwrap().is_identity());
        let bad = ZpMatrix::from_ints(md, &[vec![3, 0], vec![0, 1]]);
        assert!(bad.inverse().is_err());
    }

    #[test]
    fn det_with_non_unit_pivots() {
        let md = Modulus::new(2, 3);
        // det = 2*6 - 4*2 = 4
        let m = ZpMatrix::from_ints(md, &[vec![2, 4], vec![2, 6]]);
        assert_eq!(m.det(), 4);
        let q = QMatrix::from_ints(&[vec![2, 4, 1], vec![6, 2, 0], vec![4, 4, 2]]);
        let expect = md.from_i64(q.det().to_integer().try_into().unwrap());
        assert_eq!(ZpMatrix::reduce(&q, md).unwrap().det(), expect);
    }

    #[test]
    fn ring_tags_must_agree() {
        let a = ZpMatrix::identity(Modulus::new(2, 2), 2);
        let b = ZpMatrix::identity(Modulus::new(2, 3), 2);
        assert!(matches!(a.mul(&b), Err(LinalgError::RingMismatch)));
    }
}
