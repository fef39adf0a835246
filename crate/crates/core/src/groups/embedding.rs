use std::collections::BTreeSet;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::integral::prime_factors;
use crate::linalg::rational::rat;
use crate::linalg::{Modulus, QMatrix, Rational, Subspace, ZpMatrix};

use super::character::Character;
use super::descriptor::Group;
use super::roots::RootDatum;
use super::GroupError;

/// Where a piece of the source lands in the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// `target[dst[a], dst[b]] = source[src[a], src[b]]`.
    Block { src: Vec<usize>, dst: Vec<usize> },
    /// `target[dst, dst] = B^{-1} diag(source[src, src], I_pad) B`.
    Conjugated { src: Vec<usize>, pad: usize, dst: Vec<usize>, basis: QMatrix },
    /// A `1 x 1` target block holding a character value.
    Character { character: Character, dst: usize },
    /// A constant `1` on the diagonal.
    One { dst: usize },
}

impl Placement {
    fn dst(&self) -> Vec<usize> {
        match self {
            Placement::Block { dst, .. } | Placement::Conjugated { dst, .. } => dst.clone(),
            Placement::Character { dst, .. } | Placement::One { dst } => vec![*dst],
        }
    }
}

/// A closed embedding `iota: H -> G` built from placements, together with its
/// derivative on flattened Lie coordinates.
#[derive(Clone, Debug)]
pub struct EmbeddingMap {
    pub source: Group,
    pub target: Group,
    pub placements: Vec<Placement>,
    /// `n_G^2 x n_H^2` matrix of `d iota` on all of `gl_{n_H}`.
    pub lie_map: QMatrix,
    conj: Vec<Option<(QMatrix, QMatrix)>>,
}

/// Number of random points per prime in the multiplicativity check.
pub const SAMPLE_POINTS: usize = 50;

impl EmbeddingMap {
    pub fn new(source: Group, target: Group, placements: Vec<Placement>) -> Result<Self, GroupError> {
        let (nh, ng) = (source.size(), target.size());
        let mut seen = BTreeSet::new();
        let mut conj = Vec::new();
        for pl in &placements {
            for d in pl.dst() {
                if d >= ng || !seen.insert(d) {
                    return Err(GroupError::EmbeddingCheck(format!("target index {d} out of range or placed twice")));
                }
            }
            match pl {
                Placement::Block { src, dst } => {
                    check_src(src, nh)?;
                    if src.len() != dst.len() {
                        return Err(GroupError::EmbeddingCheck("block placement with src/dst of different sizes".into()));
                    }
                    conj.push(None);
                }
                Placement::Conjugated { src, pad, dst, basis } => {
                    check_src(src, nh)?;
                    if src.len() + pad != dst.len() || basis.rows() != dst.len() || !basis.is_square() {
                        return Err(GroupError::EmbeddingCheck("conjugated placement with inconsistent sizes".into()));
                    }
                    let inv = basis
                        .inverse()
                        .map_err(|_| GroupError::EmbeddingCheck("conjugating basis is singular".into()))?;
                    conj.push(Some((basis.clone(), inv)));
                }
                Placement::Character { character, .. } => {
                    source.form.validate_character(character)?;
                    conj.push(None);
                }
                Placement::One { .. } => conj.push(None),
            }
        }
        if seen.len() != ng {
            return Err(GroupError::EmbeddingCheck("placements do not cover every target index".into()));
        }
        let mut e = EmbeddingMap { source, target, placements, lie_map: QMatrix::zeros(ng * ng, nh * nh), conj };
        e.lie_map = e.derive_lie_map();
        e.self_check()?;
        Ok(e)
    }

    /// Identity map of a group.
    pub fn identity(g: Group) -> Result<Self, GroupError> {
        let n = g.size();
        let idx: Vec<usize> = (0..n).collect();
        Self::new(g.clone(), g, vec![Placement::Block { src: idx.clone(), dst: idx }])
    }

    fn derive_lie_map(&self) -> QMatrix {
        let (nh, ng) = (self.source.size(), self.target.size());
        let mut m = QMatrix::zeros(ng * ng, nh * nh);
        for c in 0..nh * nh {
            let mut x = QMatrix::zeros(nh, nh);
            x[(c / nh, c % nh)] = rat(1);
            let y = self.lie_apply_matrix(&x);
            for (r, v) in y.data().iter().enumerate() {
                m[(r, c)] = v.clone();
            }
        }
        m
    }

    fn lie_apply_matrix(&self, x: &QMatrix) -> QMatrix {
        let ng = self.target.size();
        let mut out = QMatrix::zeros(ng, ng);
        for (pl, conj) in self.placements.iter().zip(&self.conj) {
            match pl {
                Placement::Block { src, dst } => place(&mut out, dst, &x.principal(src)),
                Placement::Conjugated { src, pad, dst, .. } => {
                    let (b, binv) = conj.as_ref().unwrap();
                    let inner = QMatrix::direct_sum(&[x.principal(src), QMatrix::zeros(*pad, *pad)]);
                    place(&mut out, dst, &binv.mul(&inner).mul(b));
                }
                Placement::Character { character, dst } => {
                    let d = self.source.form.character_differential(character);
                    out[(*dst, *dst)] = d.iter().zip(x.data()).map(|(a, b)| a * b).sum();
                }
                Placement::One { .. } => {}
            }
        }
        out
    }

    /// `d iota` on a flattened source matrix.
    pub fn lie_apply(&self, x: &[Rational]) -> Vec<Rational> {
        self.lie_map.apply(x)
    }

    /// Image of a subspace of `lie_h`.
    pub fn lie_image(&self, s: &Subspace) -> Subspace {
        let ng = self.target.size();
        s.map(ng * ng, |v| self.lie_apply(v))
    }

    pub fn apply(&self, h: &QMatrix) -> QMatrix {
        let ng = self.target.size();
        let mut out = QMatrix::zeros(ng, ng);
        for (pl, conj) in self.placements.iter().zip(&self.conj) {
            match pl {
                Placement::Block { src, dst } => place(&mut out, dst, &h.principal(src)),
                Placement::Conjugated { src, pad, dst, .. } => {
                    let (b, binv) = conj.as_ref().unwrap();
                    let inner = QMatrix::direct_sum(&[h.principal(src), QMatrix::identity(*pad)]);
                    place(&mut out, dst, &binv.mul(&inner).mul(b));
                }
                Placement::Character { character, dst } => {
                    out[(*dst, *dst)] = self.source.form.eval_character(character, h).unwrap_or_else(Rational::zero);
                }
                Placement::One { dst } => out[(*dst, *dst)] = Rational::one(),
            }
        }
        out
    }

    pub fn apply_mod(&self, h: &ZpMatrix) -> Result<ZpMatrix, GroupError> {
        let md = h.modulus();
        let ng = self.target.size();
        let mut out = ZpMatrix::zeros(md, ng, ng);
        let put = |out: &mut ZpMatrix, dst: &[usize], m: &ZpMatrix| {
            for (a, &i) in dst.iter().enumerate() {
                for (b, &j) in dst.iter().enumerate() {
                    out[(i, j)] = m[(a, b)];
                }
            }
        };
        for (pl, conj) in self.placements.iter().zip(&self.conj) {
            match pl {
                Placement::Block { src, dst } => put(&mut out, dst, &h.principal(src)),
                Placement::Conjugated { src, pad, dst, .. } => {
                    let (b, binv) = conj.as_ref().unwrap();
                    let b = ZpMatrix::reduce(b, md)?;
                    let binv = ZpMatrix::reduce(binv, md)?;
                    let k = src.len();
                    let mut inner = ZpMatrix::identity(md, k + pad);
                    let hs = h.principal(src);
                    for a in 0..k {
                        for c in 0..k {
                            inner[(a, c)] = hs[(a, c)];
                        }
                    }
                    put(&mut out, dst, &binv.mul(&inner)?.mul(&b)?);
                }
                Placement::Character { character, dst } => {
                    out[(*dst, *dst)] = self
                        .source
                        .form
                        .eval_character_mod(character, h)
                        .ok_or_else(|| GroupError::EmbeddingCheck("character is not a unit".into()))?;
                }
                Placement::One { dst } => out[(*dst, *dst)] = 1 % md.m,
            }
        }
        Ok(out)
    }

    /// Primes dividing a denominator of a conjugating basis or its inverse.
    pub fn denominator_primes(&self) -> BTreeSet<u64> {
        let mut out = BTreeSet::new();
        for (b, binv) in self.conj.iter().flatten() {
            for x in b.data().iter().chain(binv.data()) {
                out.extend(prime_factors(x.denom()));
            }
        }
        out
    }

    fn self_check(&self) -> Result<(), GroupError> {
        let (nh, ng) = (self.source.size(), self.target.size());
        if !self.apply(&QMatrix::identity(nh)).is_identity() {
            return Err(GroupError::EmbeddingCheck("identity does not map to identity".into()));
        }
        let image = self.lie_image(&self.source.lie);
        if image.dim() != self.source.dim() {
            return Err(GroupError::EmbeddingCheck("derivative is not injective".into()));
        }
        if !self.target.lie.contains_subspace(&image)? {
            return Err(GroupError::EmbeddingCheck("derivative does not land in the target Lie algebra".into()));
        }
        let basis = self.source.lie.basis_vectors();
        let as_mat = |v: &[Rational], n: usize| QMatrix::from_flat(n, n, v.to_vec());
        for (i, x) in basis.iter().enumerate() {
            for y in &basis[i + 1..] {
                let (xm, ym) = (as_mat(x, nh), as_mat(y, nh));
                let lhs = self.lie_apply(xm.bracket(&ym).data());
                let rhs = as_mat(&self.lie_apply(x), ng).bracket(&as_mat(&self.lie_apply(y), ng));
                if lhs != rhs.data() {
                    return Err(GroupError::EmbeddingCheck("derivative does not preserve brackets".into()));
                }
            }
        }
        self.check_multiplicative()
    }

    /// `iota(x) iota(y) = iota(xy)` and `iota(x) in G` on random points of
    /// `H(F_q)` for the two smallest admissible primes `q >= 5`.
    fn check_multiplicative(&self) -> Result<(), GroupError> {
        let bad = self.denominator_primes();
        let roots = RootDatum::new(&self.source)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let primes = [5u64, 7, 11, 13, 17, 19, 23, 29, 31, 37];
        for &q in primes.iter().filter(|q| !bad.contains(q)).take(2) {
            let md = Modulus::new(q, 1);
            let rr = roots.reduced(md)?;
            let mut points = Vec::with_capacity(SAMPLE_POINTS);
            for _ in 0..SAMPLE_POINTS {
                let params: Vec<u64> = (0..roots.rank()).map(|_| rng.gen_range(1..q)).collect();
                let mut x = rr.torus_element(&params);
                for a in 0..roots.roots.len() {
                    x = x.mul(&rr.root_element(a, rng.gen_range(0..q)))?;
                }
                points.push(x);
            }
            for w in points.windows(2) {
                let (x, y) = (&w[0], &w[1]);
                let ix = self.apply_mod(x)?;
                if !self.target.contains_mod(&ix)? {
                    return Err(GroupError::EmbeddingCheck(format!("image of a point of H(F_{q}) is not in G")));
                }
                if ix.mul(&self.apply_mod(y)?)? != self.apply_mod(&x.mul(y)?)? {
                    return Err(GroupError::EmbeddingCheck(format!("not multiplicative over F_{q}")));
                }
            }
        }
        Ok(())
    }
}

fn check_src(src: &[usize], nh: usize) -> Result<(), GroupError> {
    let set: BTreeSet<_> = src.iter().collect();
    if set.len() != src.len() || src.iter().any(|&s| s >= nh) {
        return Err(GroupError::EmbeddingCheck("bad source indices".into()));
    }
    Ok(())
}

fn place(out: &mut QMatrix, dst: &[usize], m: &QMatrix) {
    for (a, &i) in dst.iter().enumerate() {
        for (b, &j) in dst.iter().enumerate() {
            out[(i, j)] = m[(a, b)].clone();
        }
    }
}
