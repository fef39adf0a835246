//! Root datum of a group whose diagonal torus is a split maximal torus.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::linalg::integral::{integral_basis, saturate};
use crate::linalg::rational::rat;
use crate::linalg::{Modulus, QMatrix, Rational, Subspace, ZpMatrix};

use super::cocharacter::Cocharacter;
use super::descriptor::Group;
use super::GroupError;

#[derive(Clone, Debug)]
pub struct Root {
    /// Values on the cocharacter basis.
    pub functional: Vec<i64>,
    /// Primitive integral generator of the root space.
    pub vector: QMatrix,
    /// Matrix positions carrying this root.
    pub positions: Vec<(usize, usize)>,
    /// `X^k / k!` for `k = 1, 2, ...` until the power vanishes.
    exp_terms: Vec<QMatrix>,
}

impl Root {
    /// `<eta, alpha>`, read off any position of the root.
    pub fn pairing(&self, eta: &Cocharacter) -> i64 {
        let (i, j) = self.positions[0];
        eta.weight(i, j)
    }

    /// `x_alpha(t) = exp(t X_alpha)`.
    pub fn element(&self, t: &Rational) -> QMatrix {
        let n = self.vector.rows();
        let mut acc = QMatrix::identity(n);
        let mut tk = Rational::one();
        for term in &self.exp_terms {
            tk *= t;
            acc = acc.add(&term.scale(&tk));
        }
        acc
    }

    pub fn nilpotency(&self) -> usize {
        self.exp_terms.len()
    }
}

#[derive(Clone, Debug)]
pub struct RootDatum {
    pub size: usize,
    /// Z-basis of the cocharacter lattice of the diagonal torus, as diagonals.
    pub cocharacters: Vec<Vec<i64>>,
    /// Sorted by the first nonzero entry (row-major) of the root vector.
    pub roots: Vec<Root>,
}

impl RootDatum {
    pub fn new(g: &Group) -> Result<Self, GroupError> {
        let n = g.size();
        let nn = n * n;
        let diag = Subspace::coordinate(nn, (0..n).map(|i| i * n + i));
        let torus = g.lie.intersection(&diag)?;
        let diag_rows: Vec<Vec<Rational>> =
            torus.basis_vectors().iter().map(|v| (0..n).map(|i| v[i * n + i].clone()).collect()).collect();
        let cocharacters: Vec<Vec<i64>> = if diag_rows.is_empty() {
            Vec::new()
        } else {
            integral_basis(&QMatrix::from_rows(diag_rows))
                .iter()
                .map(|r| r.iter().map(|x| x.to_i64().expect("small cocharacter")).collect())
                .collect()
        };
        let rank = cocharacters.len();

        let mut classes: BTreeMap<Vec<i64>, Vec<(usize, usize)>> = BTreeMap::new();
        let mut zero_weight = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || !g.form.in_block(i, j) {
                    continue;
                }
                let f: Vec<i64> = cocharacters.iter().map(|b| b[i] - b[j]).collect();
                if f.iter().all(|&x| x == 0) {
                    zero_weight.push(i * n + j);
                } else {
                    classes.entry(f).or_default().push((i, j));
                }
            }
        }
        if !g.lie.intersection(&Subspace::coordinate(nn, zero_weight))?.is_zero() {
            return Err(GroupError::NotSplitStandard("the diagonal torus is not maximal".into()));
        }
        let mut roots = Vec::new();
        for (functional, positions) in classes {
            let space = g.lie.intersection(&Subspace::coordinate(nn, positions.iter().map(|&(i, j)| i * n + j)))?;
            match space.dim() {
                0 => continue,
                1 => {}
                d => {
                    return Err(GroupError::NotSplitStandard(format!("root space of dimension {d} at {positions:?}")))
                }
            }
            let v = &saturate(&space.basis().integer_rows(), nn)[0];
            let vector = primitive_matrix(v, n);
            let positions: Vec<(usize, usize)> =
                positions.into_iter().filter(|&(i, j)| !vector[(i, j)].is_zero()).collect();
            let exp_terms = exp_terms(&vector);
            roots.push(Root { functional, vector, positions, exp_terms });
        }
        if rank + roots.len() != g.dim() {
            return Err(GroupError::NotSplitStandard(format!(
                "torus rank {rank} plus {} roots does not give dimension {}",
                roots.len(),
                g.dim()
            )));
        }
        roots.sort_by_key(|r| first_position(&r.vector));
        Ok(RootDatum { size: n, cocharacters, roots })
    }

    pub fn rank(&self) -> usize {
        self.cocharacters.len()
    }

    /// Indices of roots pairing positively with `eta`.
    pub fn positive_for(&self, eta: &Cocharacter) -> Vec<usize> {
        (0..self.roots.len()).filter(|&a| self.roots[a].pairing(eta) > 0).collect()
    }

    pub fn negative_for(&self, eta: &Cocharacter) -> Vec<usize> {
        (0..self.roots.len()).filter(|&a| self.roots[a].pairing(eta) < 0).collect()
    }

    /// `prod_k b_k(x_k)` for nonzero rational parameters.
    pub fn torus_element(&self, params: &[Rational]) -> QMatrix {
        let d: Vec<Rational> = (0..self.size)
            .map(|i| {
                let mut acc = Rational::one();
                for (b, x) in self.cocharacters.iter().zip(params) {
                    let e = b[i];
                    for _ in 0..e.unsigned_abs() {
                        if e > 0 {
                            acc *= x;
                        } else {
                            acc /= x;
                        }
                    }
                }
                acc
            })
            .collect();
        QMatrix::diagonal(&d)
    }

    /// Residue-ring version of the root and torus parametrizations.
    pub fn reduced(&self, md: Modulus) -> Result<ResidueRoots, GroupError> {
        let terms = self
            .roots
            .iter()
            .map(|r| {
                r.exp_terms
                    .iter()
                    .map(|t| ZpMatrix::reduce(t, md).map_err(GroupError::from))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ResidueRoots { md, size: self.size, cocharacters: self.cocharacters.clone(), terms })
    }
}

/// Root-group and torus elements over `Z/p^N`.
#[derive(Clone, Debug)]
pub struct ResidueRoots {
    pub md: Modulus,
    size: usize,
    cocharacters: Vec<Vec<i64>>,
    terms: Vec<Vec<ZpMatrix>>,
}

impl ResidueRoots {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn root_element(&self, alpha: usize, t: u64) -> ZpMatrix {
        let md = self.md;
        let mut acc = ZpMatrix::identity(md, self.size);
        let mut tk = 1 % md.m;
        for term in &self.terms[alpha] {
            tk = md.mul(tk, t);
            for (a, b) in acc.data_mut().iter_mut().zip(term.data()) {
                *a = md.add(*a, md.mul(tk, *b));
            }
        }
        acc
    }

    /// Torus element for unit parameters.
    pub fn torus_element(&self, params: &[u64]) -> ZpMatrix {
        let md = self.md;
        let mut out = ZpMatrix::identity(md, self.size);
        for i in 0..self.size {
            let mut acc = 1 % md.m;
            for (b, &x) in self.cocharacters.iter().zip(params) {
                let base = if b[i] < 0 { md.inv(x).expect("unit torus parameter") } else { x };
                acc = md.mul(acc, md.pow(base, b[i].unsigned_abs()));
            }
            out[(i, i)] = acc;
        }
        out
    }
}

fn primitive_matrix(v: &[BigInt], n: usize) -> QMatrix {
    // normalize the sign so the first nonzero entry is positive
    let sign = v.iter().find(|x| !x.is_zero()).map_or(1, |x| if x.is_negative() { -1 } else { 1 });
    let data = v.iter().map(|x| Rational::from_integer(x * sign)).collect();
    QMatrix::from_flat(n, n, data)
}

fn first_position(m: &QMatrix) -> (usize, usize) {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if !m[(i, j)].is_zero() {
                return (i, j);
            }
        }
    }
    (m.rows(), m.cols())
}

fn exp_terms(x: &QMatrix) -> Vec<QMatrix> {
    let mut out = Vec::new();
    let mut term = x.clone();
    let mut k = 1;
    while !term.is_zero() {
        out.push(term.clone());
        k += 1;
        term = term.mul(x).scale(&(rat(1) / rat(k)));
    }
    out
}
