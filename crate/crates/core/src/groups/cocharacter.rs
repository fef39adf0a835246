use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::linalg::rational::rat;
use crate::linalg::{QMatrix, Rational, Subspace, ZpMatrix};

use super::character::Character;
use super::descriptor::Group;
use super::GroupError;

/// Integer cocharacter `t -> diag(t^{eta_i})` of the diagonal torus.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cocharacter(pub Vec<i64>);

impl Cocharacter {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self, i: usize, j: usize) -> i64 {
        self.0[i] - self.0[j]
    }

    pub fn max_weight(&self) -> i64 {
        let hi = self.0.iter().max().copied().unwrap_or(0);
        let lo = self.0.iter().min().copied().unwrap_or(0);
        hi - lo
    }

    /// `eta(p)`, exactly.
    pub fn tau(&self, p: u64) -> QMatrix {
        let d: Vec<Rational> = self.0.iter().map(|&e| power(p, e)).collect();
        QMatrix::diagonal(&d)
    }

    pub fn tau_inv(&self, p: u64) -> QMatrix {
        let d: Vec<Rational> = self.0.iter().map(|&e| power(p, -e)).collect();
        QMatrix::diagonal(&d)
    }

    /// Requires `diag(eta)` to lie in the Lie algebra of `g`, so that `eta`
    /// factors through the diagonal torus of `g`.
    pub fn check_for(&self, g: &Group) -> Result<(), GroupError> {
        let n = g.size();
        if self.len() != n {
            return Err(GroupError::NotACocharacter(format!("length {} but ambient size {}", self.len(), n)));
        }
        let mut v = vec![Rational::zero(); n * n];
        for i in 0..n {
            v[i * n + i] = rat(self.0[i]);
        }
        if !g.lie.contains_vector(&v) {
            return Err(GroupError::NotACocharacter(format!("{:?} does not lie in the group", self.0)));
        }
        Ok(())
    }
}

pub fn power(p: u64, e: i64) -> Rational {
    let base = Rational::from_integer(p.into());
    let mut acc = rat(1);
    for _ in 0..e.unsigned_abs() {
        acc *= &base;
    }
    if e < 0 {
        rat(1) / acc
    } else {
        acc
    }
}

/// Weight decomposition of `lie_g` under a cocharacter.
#[derive(Clone, Debug)]
pub struct ParabolicSplit {
    pub eta: Cocharacter,
    pub lie_q: Subspace,
    pub lie_qbar: Subspace,
    pub lie_n: Subspace,
    pub lie_nbar: Subspace,
    pub lie_l: Subspace,
    /// Positions `(i, j)` of positive weight inside the blocks, with weights.
    pub positive: Vec<((usize, usize), i64)>,
}

pub fn parabolic_split(g: &Group, eta: &Cocharacter) -> Result<ParabolicSplit, GroupError> {
    eta.check_for(g)?;
    let n = g.size();
    let coords = |pred: &dyn Fn(i64) -> bool| {
        (0..n).flat_map(move |i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| pred(eta.weight(i, j))).map(|(i, j)| i * n + j).collect::<Vec<_>>()
    };
    let sub = |pred: &dyn Fn(i64) -> bool| -> Result<Subspace, GroupError> {
        Ok(g.lie.intersection(&Subspace::coordinate(n * n, coords(pred)))?)
    };
    let lie_n = sub(&|w| w > 0)?;
    let lie_l = sub(&|w| w == 0)?;
    let lie_nbar = sub(&|w| w < 0)?;
    let lie_q = sub(&|w| w >= 0)?;
    let lie_qbar = sub(&|w| w <= 0)?;
    let positive = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| g.form.in_block(i, j) && eta.weight(i, j) > 0)
        .map(|(i, j)| ((i, j), eta.weight(i, j)))
        .collect();
    Ok(ParabolicSplit { eta: eta.clone(), lie_q, lie_qbar, lie_n, lie_nbar, lie_l, positive })
}

/// Membership in `Qbar(Z/p^N)`: a point of `G` whose positive-weight entries vanish.
pub fn in_qbar_mod(g: &Group, eta: &Cocharacter, x: &ZpMatrix) -> Result<bool, GroupError> {
    let n = g.size();
    for i in 0..n {
        for j in 0..n {
            if eta.weight(i, j) > 0 && x[(i, j)] != 0 {
                return Ok(false);
            }
        }
    }
    g.contains_mod(x)
}

/// The normal subgroup `L^0` of the Levi.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeviSub {
    Trivial,
    Full,
    KernelOf(Vec<Character>),
}

/// `Q^0 = N . L^0` for the parabolic `Q` of nonnegative weights.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirabolicDescriptor {
    pub eta: Cocharacter,
    pub levi_sub: LeviSub,
}

/// Zero out the entries of nonzero weight, leaving the Levi component of an
/// element of `Q` or `Qbar`.
pub fn levi_part(eta: &Cocharacter, x: &QMatrix) -> QMatrix {
    let n = x.rows();
    let mut out = QMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if eta.weight(i, j) == 0 {
                out[(i, j)] = x[(i, j)].clone();
            }
        }
    }
    out
}

pub fn levi_part_mod(eta: &Cocharacter, x: &ZpMatrix) -> ZpMatrix {
    let n = x.rows();
    let mut out = ZpMatrix::zeros(x.modulus(), n, n);
    for i in 0..n {
        for j in 0..n {
            if eta.weight(i, j) == 0 {
                out[(i, j)] = x[(i, j)];
            }
        }
    }
    out
}

impl LeviSub {
    pub fn validate(&self, g: &Group) -> Result<(), GroupError> {
        if let LeviSub::KernelOf(chars) = self {
            for c in chars {
                g.form.validate_character(c)?;
            }
        }
        Ok(())
    }

    /// Lie algebra of `L^0` inside `lie_l`.
    pub fn lie(&self, g: &Group, lie_l: &Subspace) -> Result<Subspace, GroupError> {
        Ok(match self {
            LeviSub::Trivial => Subspace::zero(lie_l.ambient_dim()),
            LeviSub::Full => lie_l.clone(),
            LeviSub::KernelOf(chars) => {
                let eqs: Vec<Vec<Rational>> = chars.iter().map(|c| g.form.character_differential(c)).collect();
                lie_l.intersection(&Subspace::annihilated_by(lie_l.ambient_dim(), &eqs))?
            }
        })
    }

    /// Whether a Levi element `l` (mod `p^r`) lies in `L^0` mod `p^r`.
    /// `l` must already be reduced to the modulus of interest.
    pub fn contains_levi_mod(&self, g: &Group, l: &ZpMatrix) -> bool {
        match self {
            LeviSub::Full => true,
            LeviSub::Trivial => l.is_identity(),
            LeviSub::KernelOf(chars) => {
                let one = 1 % l.modulus().m;
                chars.iter().all(|c| g.form.eval_character_mod(c, l) == Some(one))
            }
        }
    }

    pub fn contains_levi(&self, g: &Group, l: &QMatrix) -> bool {
        match self {
            LeviSub::Full => true,
            LeviSub::Trivial => l.is_identity(),
            LeviSub::KernelOf(chars) => chars.iter().all(|c| g.form.eval_character(c, l) == Some(rat(1))),
        }
    }
}

impl MirabolicDescriptor {
    pub fn validate(&self, g: &Group) -> Result<(), GroupError> {
        self.eta.check_for(g)?;
        self.levi_sub.validate(g)
    }

    /// `lie_n + lie_l0`.
    pub fn lie(&self, g: &Group) -> Result<Subspace, GroupError> {
        let split = parabolic_split(g, &self.eta)?;
        let l0 = self.levi_sub.lie(g, &split.lie_l)?;
        Ok(split.lie_n.sum(&l0)?)
    }

    /// Membership in `Q^0(Z/p^N)`.
    pub fn contains_mod(&self, g: &Group, x: &ZpMatrix) -> Result<bool, GroupError> {
        let n = g.size();
        for i in 0..n {
            for j in 0..n {
                if self.eta.weight(i, j) < 0 && x[(i, j)] != 0 {
                    return Ok(false);
                }
            }
        }
        if !g.contains_mod(x)? {
            return Ok(false);
        }
        Ok(self.levi_sub.contains_levi_mod(g, &levi_part_mod(&self.eta, x)))
    }

    pub fn contains(&self, g: &Group, x: &QMatrix) -> bool {
        let n = g.size();
        let upper = (0..n).all(|i| (0..n).all(|j| self.eta.weight(i, j) >= 0 || x[(i, j)].is_zero()));
        upper && g.contains(x) && self.levi_sub.contains_levi(g, &levi_part(&self.eta, x))
    }
}
