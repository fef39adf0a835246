use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use proptest::prelude::*;

use normcompat::linalg::rational::rat;
use normcompat::linalg::{integral_degeneracy_primes, Modulus, QMatrix, Rational, Subspace, ZpMatrix};

fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    proptest::collection::vec(proptest::collection::vec(-3i64..=3, cols), rows)
}

/// Fraction-free Gaussian elimination over Z, counting pivots.
fn bareiss_rank(m: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let (rows, cols) = (a.len(), a.first().map_or(0, |r| r.len()));
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, piv);
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = &a[r][c] * &a[i][j] - &a[i][c] * &a[r][j];
                a[i][j] = v / &prev;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

fn to_q(v: &[Vec<i64>]) -> Vec<Vec<Rational>> {
    v.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect()
}

fn minors_gcd(m: &[Vec<i64>], k: usize) -> BigInt {
    fn combos(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        if n < k {
            return vec![];
        }
        let mut out = combos(n - 1, k);
        for mut c in combos(n - 1, k - 1) {
            c.push(n - 1);
            out.push(c);
        }
        out
    }
    let q = QMatrix::from_ints(m);
    let mut g = BigInt::zero();
    for rs in combos(q.rows(), k) {
        for cs in combos(q.cols(), k) {
            g = g.gcd(&q.submatrix(&rs, &cs).det().to_integer());
        }
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rank_matches_fraction_free_elimination(m in small_matrix(6, 9)) {
        prop_assert_eq!(QMatrix::from_ints(&m).rank(), bareiss_rank(&m));
    }

    #[test]
    fn rref_is_idempotent(m in small_matrix(5, 7)) {
        let (r, _, _) = QMatrix::from_ints(&m).rref();
        let (rr, _, _) = r.rref();
        prop_assert_eq!(rr, r);
    }

    #[test]
    fn sum_and_intersection_dimensions(a in small_matrix(3, 6), b in small_matrix(4, 6)) {
        let sa = Subspace::span(6, &to_q(&a));
        let sb = Subspace::span(6, &to_q(&b));
        let sum = sa.sum(&sb).unwrap();
        let cap = sa.intersection(&sb).unwrap();
        prop_assert_eq!(sum.dim() + cap.dim(), sa.dim() + sb.dim());
        prop_assert!(sa.contains_subspace(&cap).unwrap() && sb.contains_subspace(&cap).unwrap());
        prop_assert!(sum.contains_subspace(&sa).unwrap() && sum.contains_subspace(&sb).unwrap());
    }

    #[test]
    fn kernel_is_annihilated_and_complementary(m in small_matrix(4, 6)) {
        let q = QMatrix::from_ints(&m);
        let k = q.kernel();
        prop_assert_eq!(k.len() + q.rank(), 6);
        for v in &k {
            prop_assert!(q.apply(v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn residue_inverse_exists_iff_det_unit(
        m in small_matrix(3, 3),
        pe in prop_oneof![Just((2u64, 3u32)), Just((3, 2)), Just((5, 2))],
    ) {
        let md = Modulus::new(pe.0, pe.1);
        let z = ZpMatrix::from_ints(md, &m);
        let det_unit = md.is_unit(z.det());
        // oracle: the rational determinant reduced mod p
        let d = QMatrix::from_ints(&m).det().to_integer();
        prop_assert_eq!(det_unit, !(d % BigInt::from(pe.0)).is_zero());
        match z.inverse() {
            Ok(inv) => {
                prop_assert!(det_unit);
                prop_assert!(inv.mul(&z).unwrap().is_identity());
                prop_assert!(z.mul(&inv).unwrap().is_identity());
            }
            Err(_) => prop_assert!(!det_unit),
        }
    }

    #[test]
    fn degeneracy_primes_divide_minors(m in small_matrix(3, 4)) {
        let q = QMatrix::from_ints(&m);
        let r = q.rank();
        let primes = integral_degeneracy_primes(&q, r).unwrap();
        let g = minors_gcd(&m, r);
        for p in &primes {
            prop_assert!((&g % BigInt::from(*p)).is_zero());
            prop_assert!(ZpMatrix::from_ints(Modulus::new(*p, 1), &m).rank_mod_p() < r);
        }
        for p in [2u64, 3, 5, 7, 11, 13] {
            if !primes.contains(&p) {
                prop_assert_eq!(ZpMatrix::from_ints(Modulus::new(p, 1), &m).rank_mod_p(), r);
            }
        }
    }
}
