//! The level groups `U_r`, `U_r'`, `V_r` and the parahoric `J` as congruence
//! predicates, with Iwahori factorization and coset representatives.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::groups::cocharacter::{levi_part, levi_part_mod, LeviSub};
use crate::groups::points::{enumerate_with, parabolic_points, unipotent_points};
use crate::groups::{Cocharacter, Group, GroupDescriptor, GroupError, RootDatum};
use crate::linalg::rational::{divisible_by_power, is_p_unit};
use crate::linalg::{LinalgError, Modulus, QMatrix, Rational, ZpMatrix};
use crate::spherical::Pair;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LevelError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("element is not in the level group")]
    NotInLevel,
    #[error("Iwahori factorization met a non-unit pivot")]
    NonUnitPivot,
    #[error("depth {depth} is below the congruence depth {need}")]
    DepthTooSmall { depth: u32, need: u32 },
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    U,
    Uprime,
    V,
    J,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelDescriptor {
    pub group: GroupDescriptor,
    pub eta: Cocharacter,
    pub r: u32,
    pub variant: Variant,
    pub levi_sub: LeviSub,
    /// The level is `tau^{-shift} K tau^{shift}` for the group `K` named by
    /// the other fields.
    #[serde(default)]
    pub shift: i64,
}

/// Which factor of the Iwahori decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Nbar,
    L,
    N,
}

#[derive(Clone, Debug)]
pub struct Level {
    pub desc: LevelDescriptor,
    pub p: u64,
    group: Arc<Group>,
    roots: Arc<RootDatum>,
}

impl PartialEq for Level {
    fn eq(&self, other: &Self) -> bool {
        self.desc == other.desc && self.p == other.p
    }
}

impl Level {
    pub fn new(desc: LevelDescriptor, p: u64) -> Result<Self, LevelError> {
        let group = Arc::new(Group::new(desc.group.clone())?);
        let roots = Arc::new(RootDatum::new(&group)?);
        Self::with_group(group, roots, desc, p)
    }

    pub fn with_group(group: Arc<Group>, roots: Arc<RootDatum>, desc: LevelDescriptor, p: u64) -> Result<Self, LevelError> {
        desc.eta.check_for(&group)?;
        desc.levi_sub.validate(&group)?;
        Ok(Level { desc, p, group, roots })
    }

    /// The same group and cocharacter with another `r` and variant.
    pub fn sibling(&self, r: u32, variant: Variant) -> Level {
        let mut desc = self.desc.clone();
        desc.r = r;
        desc.variant = variant;
        desc.shift = 0;
        Level { desc, p: self.p, group: self.group.clone(), roots: self.roots.clone() }
    }

    /// `tau^{-k} K tau^k`.
    pub fn conjugate(&self, k: i64) -> Level {
        let mut out = self.clone();
        out.desc.shift += k;
        out
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn roots(&self) -> &RootDatum {
        &self.roots
    }

    pub fn eta(&self) -> &Cocharacter {
        &self.desc.eta
    }

    pub fn tau(&self) -> QMatrix {
        self.desc.eta.tau(self.p)
    }

    pub fn tau_inv(&self) -> QMatrix {
        self.desc.eta.tau_inv(self.p)
    }

    /// `tau^k`, for any integer `k`.
    pub fn tau_pow(&self, k: i64) -> QMatrix {
        let eta = Cocharacter(self.desc.eta.0.iter().map(|e| e * k).collect());
        eta.tau(self.p)
    }

    /// Lower bound on `v_p` of an entry of weight `w` (before shifting).
    fn entry_bound(&self, w: i64) -> i64 {
        let r = self.desc.r as i64;
        match self.desc.variant {
            Variant::U if w > 0 => r * w,
            Variant::Uprime if w > 0 => (r + 1) * w,
            Variant::V if w < 0 => -r * w,
            Variant::J if w < 0 => 1,
            _ => 0,
        }
    }

    /// Lower bound on `v_p` of the parameter `t` for `x_alpha(t)` to lie in
    /// the level, shift included.
    pub fn root_bound(&self, alpha: usize) -> i64 {
        let w = self.roots.roots[alpha].pairing(&self.desc.eta);
        if w == 0 {
            return if self.desc.levi_sub == LeviSub::Trivial { self.levi_depth() as i64 } else { 0 };
        }
        self.entry_bound(w) - self.desc.shift * w
    }

    /// Entry bound at position `(i, j)`, shift included.
    pub fn position_bound(&self, i: usize, j: usize) -> i64 {
        let w = self.desc.eta.weight(i, j);
        self.entry_bound(w) - self.desc.shift * w
    }

    /// Same group, cocharacter, `L^0` and prime.
    pub fn same_frame(&self, other: &Level) -> bool {
        self.p == other.p
            && self.desc.group == other.desc.group
            && self.desc.eta == other.desc.eta
            && self.desc.levi_sub == other.desc.levi_sub
    }

    /// Exponent `m` such that the Levi component must lie in `L^0` mod `p^m`.
    pub fn levi_depth(&self) -> u32 {
        match self.desc.variant {
            Variant::J => 0,
            _ => self.desc.r,
        }
    }

    /// Smallest `N` such that membership depends only on `g mod p^N`.
    pub fn congruence_depth(&self) -> u32 {
        let r = self.desc.r as i64;
        let w = self.desc.eta.max_weight();
        let d = match self.desc.variant {
            Variant::U | Variant::V => (r * w).max(r),
            Variant::Uprime => (r * w + w).max(r),
            Variant::J => i64::from(w > 0),
        };
        d as u32
    }

    /// Undo the shift: `tau^s x tau^{-s}`.
    fn unshift(&self, x: &QMatrix) -> QMatrix {
        let s = self.desc.shift;
        if s == 0 {
            x.clone()
        } else {
            self.tau_pow(s).mul(x).mul(&self.tau_pow(-s))
        }
    }

    fn reshift(&self, x: &QMatrix) -> QMatrix {
        let s = self.desc.shift;
        if s == 0 {
            x.clone()
        } else {
            self.tau_pow(-s).mul(x).mul(&self.tau_pow(s))
        }
    }

    /// Exact membership for `x in G(Q_p)`, by valuations and Levi residues.
    pub fn contains(&self, x: &QMatrix) -> bool {
        let g0 = self.unshift(x);
        if !self.group.contains_integral(&g0, self.p) {
            return false;
        }
        let n = g0.rows();
        let eta = &self.desc.eta;
        for i in 0..n {
            for j in 0..n {
                if !divisible_by_power(&g0[(i, j)], self.p, self.entry_bound(eta.weight(i, j))) {
                    return false;
                }
            }
        }
        self.levi_ok(&levi_part(eta, &g0))
    }

    fn levi_ok(&self, l: &QMatrix) -> bool {
        let m = self.levi_depth();
        if m == 0 || self.desc.levi_sub == LeviSub::Full {
            return true;
        }
        match ZpMatrix::reduce(l, Modulus::new(self.p, m)) {
            Ok(lm) => self.desc.levi_sub.contains_levi_mod(&self.group, &lm),
            Err(_) => false,
        }
    }

    /// Membership of a residue class `x in G(Z/p^N)`, for `N` at least the
    /// congruence depth. Only unshifted levels are congruence subgroups.
    pub fn contains_mod(&self, x: &ZpMatrix) -> bool {
        assert_eq!(self.desc.shift, 0, "shifted levels are not congruence subgroups");
        let md = x.modulus();
        let n = x.rows();
        let eta = &self.desc.eta;
        for i in 0..n {
            for j in 0..n {
                let b = self.entry_bound(eta.weight(i, j));
                if b > 0 && (md.valuation(x[(i, j)]) as i64) < b.min(md.exp as i64) {
                    return false;
                }
            }
        }
        let m = self.levi_depth();
        if m == 0 || self.desc.levi_sub == LeviSub::Full {
            return true;
        }
        let l = truncate(&levi_part_mod(eta, x), Modulus::new(self.p, m.min(md.exp)));
        self.desc.levi_sub.contains_levi_mod(&self.group, &l)
    }

    /// Membership in one Iwahori factor of this level.
    pub fn contains_part_mod(&self, x: &ZpMatrix, part: Part) -> bool {
        let n = x.rows();
        let eta = &self.desc.eta;
        let support = |w: i64| match part {
            Part::Nbar => w < 0,
            Part::L => w == 0,
            Part::N => w > 0,
        };
        for i in 0..n {
            for j in 0..n {
                let w = eta.weight(i, j);
                let diag = if i == j { 1 % x.modulus().m } else { 0 };
                if !support(w) && part != Part::L && x[(i, j)] != diag {
                    return false;
                }
                if !support(w) && part == Part::L && x[(i, j)] != 0 {
                    return false;
                }
            }
        }
        self.contains_mod(x)
    }

    /// `[N_a : N_b]` for `b >= a`, where `N_s` has entries of weight `w`
    /// divisible by `p^{s w}`.
    pub fn n_index(&self, a: u32, b: u32) -> u128 {
        let total: i64 = self.positive_roots().iter().map(|&k| self.roots.roots[k].pairing(&self.desc.eta)).sum();
        (self.p as u128).pow((total * (b as i64 - a as i64)) as u32)
    }

    pub fn positive_roots(&self) -> Vec<usize> {
        self.roots.positive_for(&self.desc.eta)
    }

    /// Membership in `N_s`.
    pub fn in_n(&self, x: &QMatrix, s: u32) -> bool {
        let n = x.rows();
        let eta = &self.desc.eta;
        for i in 0..n {
            for j in 0..n {
                let w = eta.weight(i, j);
                let v = &x[(i, j)];
                let ok = if w > 0 {
                    divisible_by_power(v, self.p, s as i64 * w)
                } else if i == j {
                    v.is_one()
                } else {
                    v.is_zero()
                };
                if !ok {
                    return false;
                }
            }
        }
        self.group.contains(x)
    }
}

fn truncate(x: &ZpMatrix, md: Modulus) -> ZpMatrix {
    let data = x.data().iter().map(|v| v % md.m).collect();
    ZpMatrix::from_data(md, x.rows(), x.cols(), data)
}

/// `g = nbar * l * n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IwahoriFactorization {
    pub nbar: QMatrix,
    pub l: QMatrix,
    pub n: QMatrix,
}

impl IwahoriFactorization {
    pub fn recompose(&self) -> QMatrix {
        self.nbar.mul(&self.l).mul(&self.n)
    }
}

/// Block LDU factorization with blocks the weight classes of `eta`, ordered
/// by decreasing weight.
pub fn iwahori_factor(g: &QMatrix, level: &Level) -> Result<IwahoriFactorization, LevelError> {
    if matches!(level.desc.variant, Variant::U | Variant::Uprime | Variant::V) && level.desc.r == 0 {
        return Err(LevelError::Unsupported("U_0 has no Iwahori decomposition".into()));
    }
    if !level.contains(g) {
        return Err(LevelError::NotInLevel);
    }
    let g0 = level.unshift(g);
    let eta = &level.desc.eta.0;
    let n = g0.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(eta[i]));
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match classes.last_mut() {
            Some(c) if eta[c[0]] == eta[i] => c.push(i),
            _ => classes.push(vec![i]),
        }
    }
    let mut s = g0.clone();
    let mut lower = QMatrix::identity(n);
    let mut diag = QMatrix::zeros(n, n);
    let mut upper = QMatrix::identity(n);
    for (k, ck) in classes.iter().enumerate() {
        let dk = s.submatrix(ck, ck);
        if !is_p_unit(&dk.det(), level.p) {
            return Err(LevelError::NonUnitPivot);
        }
        let dk_inv = dk.inverse()?;
        for (a, &i) in ck.iter().enumerate() {
            for (b, &j) in ck.iter().enumerate() {
                diag[(i, j)] = dk[(a, b)].clone();
            }
        }
        let rest: Vec<usize> = classes[k + 1..].iter().flatten().copied().collect();
        if rest.is_empty() {
            break;
        }
        let below = s.submatrix(&rest, ck).mul(&dk_inv);
        let right = dk_inv.mul(&s.submatrix(ck, &rest));
        for (a, &i) in rest.iter().enumerate() {
            for (b, &j) in ck.iter().enumerate() {
                lower[(i, j)] = below[(a, b)].clone();
                upper[(j, i)] = right[(b, a)].clone();
            }
        }
        let update = s.submatrix(&rest, ck).mul(&right);
        for (a, &i) in rest.iter().enumerate() {
            for (b, &j) in rest.iter().enumerate() {
                let v = &s[(i, j)] - &update[(a, b)];
                s[(i, j)] = v;
            }
        }
    }
    let f = IwahoriFactorization { nbar: level.reshift(&lower), l: level.reshift(&diag), n: level.reshift(&upper) };
    if f.recompose() != *g || !level.contains(&f.nbar) || !level.contains(&f.l) || !level.contains(&f.n) {
        return Err(LevelError::NonUnitPivot);
    }
    Ok(f)
}

/// Representatives of the left cosets `N_from / N_to`: products
/// `prod x_alpha(p^{from <eta, alpha>} t_alpha)` over the positive roots in
/// the fixed root order, `0 <= t_alpha < p^{(to - from) <eta, alpha>}`.
pub fn coset_reps_n(level: &Level, from: u32, to: u32) -> Vec<QMatrix> {
    assert!(to >= from);
    let p = level.p;
    let pos = level.positive_roots();
    let eta = &level.desc.eta;
    let ranges: Vec<(u64, u64)> = pos
        .iter()
        .map(|&a| {
            let w = level.roots.roots[a].pairing(eta) as u32;
            (p.pow(from * w), p.pow((to - from) * w))
        })
        .collect();
    let bounds: Vec<u64> = ranges.iter().map(|r| r.1).collect();
    let mut digits = vec![0u64; pos.len()];
    let mut out = Vec::new();
    loop {
        let mut x = QMatrix::identity(level.group.size());
        for ((&a, &(step, _)), &c) in pos.iter().zip(&ranges).zip(&digits) {
            if c != 0 {
                x = x.mul(&level.roots.roots[a].element(&Rational::from_integer((step * c).into())));
            }
        }
        out.push(x);
        if !crate::groups::points::advance(&mut digits, &bounds) {
            break;
        }
    }
    out
}

/// Pairwise inequivalence of left coset representatives of `N_from / N_to`
/// together with the count check against `[N_from : N_to]`.
pub fn check_n_reps(level: &Level, reps: &[QMatrix], from: u32, to: u32) -> bool {
    if reps.len() as u128 != level.n_index(from, to) {
        return false;
    }
    if !reps.iter().all(|x| level.in_n(x, from)) {
        return false;
    }
    let invs: Vec<QMatrix> = reps.iter().map(|x| x.inverse().expect("unipotent")).collect();
    for i in 0..reps.len() {
        for j in i + 1..reps.len() {
            if level.in_n(&invs[i].mul(&reps[j]), to) {
                return false;
            }
        }
    }
    true
}

/// All points of the level group modulo `p^depth`, by filtering `G(Z/p^depth)`.
pub fn level_points_mod(level: &Level, depth: u32, budget: u64) -> Result<Vec<ZpMatrix>, LevelError> {
    let md = Modulus::new(level.p, depth);
    let pts = enumerate_with(&level.group, md, budget, &|_, _| true)?;
    Ok(pts.into_iter().filter(|x| level.contains_mod(x)).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub part_i: bool,
    pub part_ii: bool,
    /// `[u^{-1} Q_H^0 u ∩ U_r : u^{-1} Q_H^0 u ∩ U_r']`, observed.
    pub index: u64,
    /// `[U_r : U_r']`.
    pub expected_index: u64,
    pub reps_count: usize,
    pub points: usize,
    pub depth: u32,
    /// Elements of `u^{-1} Q_H^0 u ∩ U_r'` outside `U_{r+1}` or the reverse.
    pub part_i_witnesses: Vec<Vec<Vec<u64>>>,
    /// Coset representatives of `U_r' \ U_r` not met by `u^{-1} Q_H^0 u`.
    pub missing_cosets: Vec<Vec<Vec<String>>>,
}

fn rows_of(x: &ZpMatrix) -> Vec<Vec<u64>> {
    x.data().chunks(x.cols()).map(|r| r.to_vec()).collect()
}

/// Exhaustive check modulo `p^depth` of: (i) `u^{-1} Q_H^0 u ∩ U_r' =
/// u^{-1} Q_H^0 u ∩ U_{r+1}`, and (ii) the index equality, exhibited by
/// representatives of `U_r' \ U_r` inside `u^{-1} Q_H^0 u`.
pub fn verify_lemma(pair: &Pair, p: u64, r: u32, depth: u32, budget: u64) -> Result<LemmaReport, LevelError> {
    let cfg = &pair.config;
    let desc = LevelDescriptor {
        group: cfg.g.clone(),
        eta: cfg.eta_g.clone(),
        r,
        variant: Variant::U,
        levi_sub: cfg.levi_sub_g.clone(),
        shift: 0,
    };
    let ur = Level::with_group(Arc::new(pair.g.clone()), Arc::new(RootDatum::new(&pair.g)?), desc, p)?;
    let urp = ur.sibling(r, Variant::Uprime);
    let ur1 = ur.sibling(r + 1, Variant::U);
    let need = ur1.congruence_depth().max(urp.congruence_depth());
    if depth < need {
        return Err(LevelError::DepthTooSmall { depth, need });
    }
    let md = Modulus::new(p, depth);
    let u = ZpMatrix::reduce(&pair.u, md)?;
    let u_inv = u.inverse()?;
    let hr = RootDatum::new(&pair.h)?;
    let q = parabolic_points(&pair.h, &hr, &cfg.mirabolic_h.eta, &cfg.mirabolic_h.levi_sub, md, budget)?;

    let mut a = BTreeSet::new();
    let mut a_prime = BTreeSet::new();
    let mut a_next = BTreeSet::new();
    let mut in_a = Vec::new();
    for x in &q {
        let y = u_inv.mul(&pair.emb.apply_mod(x)?)?.mul(&u)?;
        if ur.contains_mod(&y) && a.insert(y.data().to_vec()) {
            in_a.push(y.clone());
        }
        if urp.contains_mod(&y) {
            a_prime.insert(y.data().to_vec());
        }
        if ur1.contains_mod(&y) {
            a_next.insert(y.data().to_vec());
        }
    }
    let n = pair.g.size();
    let part_i_witnesses: Vec<Vec<Vec<u64>>> = a_prime
        .symmetric_difference(&a_next)
        .take(4)
        .map(|d| rows_of(&ZpMatrix::from_data(md, n, n, d.clone())))
        .collect();
    let part_i = part_i_witnesses.is_empty();

    let expected = urp_index(&ur);
    let reps = coset_reps_n(&ur, r, r + 1);
    let index = if a_prime.is_empty() { 0 } else { (a.len() / a_prime.len()) as u64 };
    // right cosets U_r' y are met by x when x y^{-1} in U_r'; y = rho^{-1}
    let reps_mod: Vec<ZpMatrix> = reps.iter().map(|x| ZpMatrix::reduce(x, md)).collect::<Result<_, _>>()?;
    let mut hit = vec![false; reps.len()];
    for x in &in_a {
        for (k, rho) in reps_mod.iter().enumerate() {
            if !hit[k] && urp.contains_mod(&x.mul(rho)?) {
                hit[k] = true;
                break;
            }
        }
    }
    let missing_cosets: Vec<Vec<Vec<String>>> = reps
        .iter()
        .zip(&hit)
        .filter(|(_, h)| !**h)
        .take(4)
        .map(|(x, _)| x.inverse().expect("unipotent").to_strings())
        .collect();
    let part_ii = a.len() == a_prime.len() * expected as usize && missing_cosets.is_empty() && reps.len() as u64 == expected;
    Ok(LemmaReport {
        part_i,
        part_ii,
        index,
        expected_index: expected,
        reps_count: reps.len(),
        points: q.len(),
        depth,
        part_i_witnesses,
        missing_cosets,
    })
}

fn urp_index(ur: &Level) -> u64 {
    let r = ur.desc.r;
    ur.n_index(r, r + 1) as u64
}

/// Products of root elements for the roots of nonzero weight, used to sample
/// the unipotent parts of a level at a given depth.
pub fn unipotent_part_points(level: &Level, part: Part, depth: u32) -> Result<Vec<ZpMatrix>, LevelError> {
    let md = Modulus::new(level.p, depth);
    let eta = &level.desc.eta;
    let rr = level.roots.reduced(md)?;
    let alphas: Vec<usize> = match part {
        Part::N => level.roots.positive_for(eta),
        Part::Nbar => level.roots.negative_for(eta),
        Part::L => return Err(LevelError::Unsupported("the Levi part is not unipotent".into())),
    };
    let ranges: Vec<(u64, u64)> = alphas
        .iter()
        .map(|&a| {
            let w = level.roots.roots[a].pairing(eta);
            let b = level.entry_bound(w).min(depth as i64) as u32;
            (level.p.pow(b), level.p.pow(depth - b))
        })
        .collect();
    Ok(unipotent_points(&rr, &alphas, &ranges)?)
}
