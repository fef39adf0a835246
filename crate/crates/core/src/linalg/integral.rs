//! Integer-matrix algorithms: Smith normal form with column transforms,
//! lattice saturation, integral kernels and primes of rank degeneration.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::matrix::QMatrix;
use super::rational::Rational;
use super::LinalgError;

type IMat = Vec<Vec<BigInt>>;

/// Smith form `A Q = P^{-1} D`: only the diagonal and the column transform
/// (with its inverse) are tracked.
#[derive(Clone, Debug)]
pub struct SmithForm {
    /// Nonzero invariant factors `s_1 | s_2 | ... | s_r`, all positive.
    pub invariants: Vec<BigInt>,
    /// Unimodular `n x n` column transform.
    pub col_transform: IMat,
    /// Its inverse.
    pub col_transform_inv: IMat,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.invariants.len()
    }
}

fn identity(n: usize) -> IMat {
    (0..n).map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()).collect()
}

pub fn smith_form(a: &[Vec<BigInt>], cols: usize) -> SmithForm {
    let mut m: IMat = a.to_vec();
    let rows = m.len();
    let mut q = identity(cols);
    let mut qinv = identity(cols);

    // column ops: A <- A E, Q <- Q E, Qinv <- E^{-1} Qinv
    let col_axpy = |m: &mut IMat, q: &mut IMat, qinv: &mut IMat, dst: usize, src: usize, f: &BigInt| {
        // col_dst -= f * col_src
        for row in m.iter_mut() {
            let t = &row[src] * f;
            row[dst] -= t;
        }
        for row in q.iter_mut() {
            let t = &row[src] * f;
            row[dst] -= t;
        }
        // inverse: row_src of Qinv += f * row_dst
        let add: Vec<BigInt> = qinv[dst].iter().map(|x| x * f).collect();
        for (x, y) in qinv[src].iter_mut().zip(add) {
            *x += y;
        }
    };
    let col_swap = |m: &mut IMat, q: &mut IMat, qinv: &mut IMat, a: usize, b: usize| {
        if a == b {
            return;
        }
        for row in m.iter_mut() {
            row.swap(a, b);
        }
        for row in q.iter_mut() {
            row.swap(a, b);
        }
        qinv.swap(a, b);
    };

    let mut k = 0;
    while k < rows.min(cols) {
        // smallest nonzero entry in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in k..rows {
            for j in k..cols {
                if !m[i][j].is_zero() && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        m.swap(k, bi);
        col_swap(&mut m, &mut q, &mut qinv, k, bj);

        let mut clean = true;
        for i in k + 1..rows {
            if m[i][k].is_zero() {
                continue;
            }
            let f = m[i][k].div_floor(&m[k][k]);
            let pivot_row = m[k].clone();
            for (x, y) in m[i].iter_mut().zip(&pivot_row) {
                *x -= &f * y;
            }
            if !m[i][k].is_zero() {
                clean = false;
            }
        }
        for j in k + 1..cols {
            if m[k][j].is_zero() {
                continue;
            }
            let f = m[k][j].div_floor(&m[k][k]);
            col_axpy(&mut m, &mut q, &mut qinv, j, k, &f);
            if !m[k][j].is_zero() {
                clean = false;
            }
        }
        if !clean {
            continue;
        }
        // divisibility of the trailing block by the pivot
        let mut fixed = true;
        'outer: for i in k + 1..rows {
            for j in k + 1..cols {
                if !(&m[i][j] % &m[k][k]).is_zero() {
                    let row_i = m[i].clone();
                    for (x, y) in m[k].iter_mut().zip(&row_i) {
                        *x += y;
                    }
                    fixed = false;
                    break 'outer;
                }
            }
        }
        if fixed {
            k += 1;
        }
    }
    let invariants = (0..rows.min(cols)).map(|i| m[i][i].abs()).take_while(|x| !x.is_zero()).collect();
    SmithForm { invariants, col_transform: q, col_transform_inv: qinv }
}

/// Z-basis of `span_Q(rows) ∩ Z^n` (rows must be integral).
pub fn saturate(rows: &[Vec<BigInt>], n: usize) -> Vec<Vec<BigInt>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let snf = smith_form(rows, n);
    snf.col_transform_inv[..snf.rank()].to_vec()
}

/// Z-basis of the integral kernel `{x in Z^n : A x = 0}`.
pub fn integer_kernel(rows: &[Vec<BigInt>], n: usize) -> Vec<Vec<BigInt>> {
    if rows.is_empty() {
        return identity(n);
    }
    let snf = smith_form(rows, n);
    (snf.rank()..n).map(|j| (0..n).map(|i| snf.col_transform[i][j].clone()).collect()).collect()
}

/// Saturated integral basis of a rational row space.
pub fn integral_basis(m: &QMatrix) -> Vec<Vec<BigInt>> {
    saturate(&m.integer_rows(), m.cols())
}

pub fn to_rational_rows(rows: &[Vec<BigInt>]) -> Vec<Vec<Rational>> {
    rows.iter().map(|r| r.iter().map(|x| Rational::from_integer(x.clone())).collect()).collect()
}

/// Primes `p` with `rank_{F_p}(m) < generic_rank`, for an integer matrix `m`
/// whose rational rank is `generic_rank`.
pub fn integral_degeneracy_primes(m: &QMatrix, generic_rank: usize) -> Result<BTreeSet<u64>, LinalgError> {
    if !m.is_integral() {
        return Err(LinalgError::NotIntegral { p: 0 });
    }
    let rows: IMat = m.data().chunks(m.cols().max(1)).take(m.rows()).map(|r| r.iter().map(|q| q.to_integer()).collect()).collect();
    let snf = smith_form(&rows, m.cols());
    if snf.rank() < generic_rank {
        return Err(LinalgError::RankBelowGeneric { rank: snf.rank(), generic: generic_rank });
    }
    if generic_rank == 0 {
        return Ok(BTreeSet::new());
    }
    // rank over F_p drops exactly when p divides s_{generic_rank}
    Ok(prime_factors(&snf.invariants[generic_rank - 1]))
}

/// Prime divisors of |n|; `n` must be nonzero.
pub fn prime_factors(n: &BigInt) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    let mut n = n.abs().to_biguint().unwrap();
    if n.is_zero() {
        return out;
    }
    let mut d: u64 = 2;
    while d < 1 << 20 {
        let bd = BigUint::from(d);
        if &bd * &bd > n {
            break;
        }
        if (&n % &bd).is_zero() {
            out.insert(d);
            while (&n % &bd).is_zero() {
                n /= &bd;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > BigUint::one() {
        split_large(&n, &mut out);
    }
    out
}

fn split_large(n: &BigUint, out: &mut BTreeSet<u64>) {
    if n.is_one() {
        return;
    }
    if is_probable_prime(n) {
        out.insert(n.to_u64().expect("prime factor exceeds 64 bits"));
        return;
    }
    let d = pollard_rho(n);
    split_large(&d, out);
    split_large(&(n / &d), out);
}

fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    let one = BigUint::one();
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    'witness: for a in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let a = BigUint::from(a);
        if &a >= n {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x == one || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == nm1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: &BigUint) -> BigUint {
    let one = BigUint::one();
    let mut c = BigUint::one();
    loop {
        let f = |x: &BigUint| (x * x + &c) % n;
        let (mut x, mut y, mut d) = (BigUint::from(2u32), BigUint::from(2u32), one.clone());
        while d.is_one() {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            d = diff.gcd(n);
        }
        if &d != n {
            return d;
        }
        c += 1u32;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(rows: &[Vec<i64>]) -> IMat {
        rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn degeneracy_examples() {
        assert!(integral_degeneracy_primes(&QMatrix::identity(3), 3).unwrap().is_empty());
        let d = QMatrix::from_ints(&[vec![6, 0], vec![0, 1]]);
        assert_eq!(integral_degeneracy_primes(&d, 2).unwrap(), BTreeSet::from([2, 3]));
        let one = QMatrix::from_ints(&[vec![2]]);
        assert_eq!(integral_degeneracy_primes(&one, 1).unwrap(), BTreeSet::from([2]));
    }

    #[test]
    fn rank_below_generic_is_an_error() {
        let m = QMatrix::from_ints(&[vec![1, 1], vec![2, 2]]);
        assert!(matches!(integral_degeneracy_primes(&m, 2), Err(LinalgError::RankBelowGeneric { .. })));
    }

    #[test]
    fn saturation_recovers_lattice() {
        // span of (2, 2) saturates to (1, 1)
        let s = saturate(&ints(&[vec![2, 2]]), 2);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![BigInt::one(), BigInt::one()]);
    }

    #[test]
    fn kernel_is_unimodular_basis() {
        let a = ints(&[vec![2, 4, 6]]);
        let k = integer_kernel(&a, 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            let dot: BigInt = v.iter().zip(&a[0]).map(|(x, y)| x * y).sum();
            assert!(dot.is_zero());
        }
        // x + 2y + 3z = 0 has a primitive basis; the 2x3 matrix has unit 2x2 minors gcd
        let m = QMatrix::from_rows(to_rational_rows(&k));
        assert!(integral_degeneracy_primes(&m, 2).unwrap().is_empty());
    }

    #[test]
    fn factors() {
        assert_eq!(prime_factors(&BigInt::from(360)), BTreeSet::from([2, 3, 5]));
        let big = BigInt::from(1_000_003u64) * BigInt::from(998_244_353u64);
        assert_eq!(prime_factors(&big), BTreeSet::from([1_000_003, 998_244_353]));
    }
}
