//! Finitely supported functions on `G(Q_p)/U` with pushforward and pullback,
//! the orbit classes `z_r`, their shifts `xi_r`, the Hecke operator `T` and
//! the ordinary projector.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::groups::{Cocharacter, Group, GroupError, LeviSub, RootDatum};
use crate::levels::{coset_reps_n, iwahori_factor, Level, LevelDescriptor, LevelError, Variant};
use crate::linalg::integral::integer_kernel;
use crate::groups::cocharacter::power;
use crate::linalg::rational::valuation;
use crate::linalg::{Modulus, QMatrix, Rational, ZpMatrix};
use crate::spherical::{check_condition_b, check_open_orbit, Pair, SphericalError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MackeyError {
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Spherical(#[from] SphericalError),
    #[error("g^-1 U g is not contained in the target level")]
    Containment,
    #[error("classes live at different levels")]
    LevelMismatch,
    #[error("enumeration needs {estimate} elements, budget is {budget}")]
    BudgetExceeded { estimate: u128, budget: u64 },
    #[error("hypotheses of the machine not satisfied: {0}")]
    HypothesesUnmet(String),
    #[error("double coset decomposition failed: {0}")]
    Decomposition(String),
    #[error("{0}")]
    Unsupported(String),
}

impl From<crate::linalg::LinalgError> for MackeyError {
    fn from(e: crate::linalg::LinalgError) -> Self {
        MackeyError::Level(LevelError::Linalg(e))
    }
}

fn budget_check(estimate: u128, budget: u64) -> Result<(), MackeyError> {
    if estimate > budget as u128 {
        Err(MackeyError::BudgetExceeded { estimate, budget })
    } else {
        Ok(())
    }
}

/// A coset `rep * U`. Equality is `rep1^{-1} rep2 in U`.
#[derive(Clone, Debug)]
pub struct Coset {
    pub rep: QMatrix,
    pub level: Level,
}

impl Coset {
    pub fn new(rep: QMatrix, level: Level) -> Self {
        Coset { rep, level }
    }
}

impl PartialEq for Coset {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level
            && match self.rep.inverse() {
                Ok(inv) => self.level.contains(&inv.mul(&other.rep)),
                Err(_) => false,
            }
    }
}

#[derive(Clone, Debug)]
pub struct Term {
    pub rep: QMatrix,
    inv: QMatrix,
    pub coeff: BigInt,
    place: Place,
}

/// Where a coset `x U` sits: with `U = tau^{-s} K tau^s` and
/// `x tau^{-s} = h k`, `h` the Hermite basis of the lattice
/// `x tau^{-s} Z_p^n` and `k in GL_n(Z_p)`, two cosets agree iff their `h`
/// agree and `k^{-1} k' in K`, which is decided modulo `p^depth(K)`.
#[derive(Clone, Debug)]
struct Place {
    /// `None` when the Hermite form does not fit in a `u64` modulus.
    key: Option<Vec<u64>>,
    k: ZpMatrix,
    k_inv: ZpMatrix,
}

#[derive(Debug)]
struct Frame {
    unshift: QMatrix,
    base: Level,
    md: Modulus,
}

impl Frame {
    fn new(level: &Level) -> Frame {
        let s = level.desc.shift;
        let base = level.conjugate(-s);
        let md = Modulus::new(level.p, base.congruence_depth().max(1));
        Frame { unshift: level.tau_pow(-s), base, md }
    }

    fn place(&self, x: &QMatrix) -> Option<Place> {
        let y = x.mul(&self.unshift);
        let (key, h) = lattice_hermite(&y, self.base.p)?;
        let k = ZpMatrix::reduce(&h.inverse().ok()?.mul(&y), self.md).ok()?;
        let k_inv = k.inverse().ok()?;
        Some(Place { key: Some(key), k, k_inv })
    }
}

/// Column Hermite form over `Z_p` of the lattice spanned by the columns of
/// `y`: upper triangular, diagonal `p^{v_i}`, entries right of the diagonal
/// reduced mod `p^{v_i}`. Computed modulo `p^N` with `p^{N-1} Z_p^n` inside
/// the (rescaled) lattice. Returns the key and the basis.
fn lattice_hermite(y: &QMatrix, p: u64) -> Option<(Vec<u64>, QMatrix)> {
    use crate::linalg::rational::{inv_mod, mul_mod};
    let n = y.rows();
    let low = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter_map(|(i, j)| valuation(&y[(i, j)], p)).min()?;
    let s = (-low).max(0);
    let b = y.scale(&power(p, s));
    let e = valuation(&b.det(), p)?;
    let big = u32::try_from(e + 1).ok()?;
    let m = p.checked_pow(big).filter(|&m| m < 1 << 62)?;
    let r = ZpMatrix::reduce(&b, Modulus::new(p, big)).ok()?;
    let mut cols: Vec<Vec<u64>> = (0..n).map(|j| (0..n).map(|i| r[(i, j)]).collect()).collect();
    let val = |x: u64| -> u32 {
        if x == 0 {
            big
        } else {
            let mut v = 0;
            let mut x = x;
            while x % p == 0 {
                x /= p;
                v += 1;
            }
            v
        }
    };
    let axpy = |dst: &mut Vec<u64>, q: u64, src: &[u64]| {
        for (d, &x) in dst.iter_mut().zip(src) {
            *d = (*d + m - mul_mod(q % m, x, m)) % m;
        }
    };
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut h: Vec<Vec<u64>> = vec![Vec::new(); n];
    let mut exps = vec![0u32; n];
    for i in (0..n).rev() {
        let (pos, v) = remaining.iter().enumerate().map(|(k, &c)| (k, val(cols[c][i]))).min_by_key(|&(k, v)| (v, k))?;
        if v >= big {
            return None;
        }
        let c = remaining.remove(pos);
        let pv = p.pow(v);
        let unit_inv = inv_mod(cols[c][i] / pv, m)?;
        for x in cols[c].iter_mut() {
            *x = mul_mod(*x, unit_inv, m);
        }
        let pivot = cols[c].clone();
        for &o in &remaining {
            let q = cols[o][i] / pv;
            if q != 0 {
                axpy(&mut cols[o], q, &pivot);
            }
        }
        h[i] = pivot;
        exps[i] = v;
    }
    for j in 0..n {
        for i in (0..j).rev() {
            let q = h[j][i] / p.pow(exps[i]);
            if q != 0 {
                let src = h[i].clone();
                axpy(&mut h[j], q, &src);
            }
        }
    }
    let mut key = vec![s as u64];
    key.extend(exps.iter().map(|&v| v as u64));
    key.extend(h.iter().flatten().copied());
    let scale = power(p, -s);
    let basis = QMatrix::from_rows(
        (0..n).map(|i| (0..n).map(|j| Rational::from_integer(h[j][i].into()) * &scale).collect()).collect(),
    );
    Some((key, basis))
}

/// An element of `M(U)`: integer combination of distinct cosets `x U`.
#[derive(Clone, Debug)]
pub struct CompactClass {
    pub level: Level,
    terms: Vec<Term>,
    frame: Arc<Frame>,
    buckets: HashMap<Option<Vec<u64>>, Vec<usize>>,
}

impl CompactClass {
    pub fn zero(level: Level) -> Self {
        let frame = Arc::new(Frame::new(&level));
        CompactClass { level, terms: Vec::new(), frame, buckets: HashMap::new() }
    }

    pub fn delta(level: Level, rep: QMatrix) -> Self {
        let mut c = Self::zero(level);
        c.add_term(rep, BigInt::one());
        c
    }

    pub fn from_terms(level: Level, terms: impl IntoIterator<Item = (QMatrix, BigInt)>) -> Self {
        let mut c = Self::zero(level);
        for (x, a) in terms {
            c.add_term(x, a);
        }
        c
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of the coefficients.
    pub fn mass(&self) -> BigInt {
        self.terms.iter().map(|t| &t.coeff).sum()
    }

    fn place(&self, x: &QMatrix) -> Place {
        self.frame.place(x).unwrap_or_else(|| {
            let md = self.frame.md;
            Place { key: None, k: ZpMatrix::identity(md, x.rows()), k_inv: ZpMatrix::identity(md, x.rows()) }
        })
    }

    fn locate(&self, x: &QMatrix, place: &Place) -> Option<usize> {
        let bucket = self.buckets.get(&place.key)?;
        if place.key.is_none() {
            return bucket.iter().copied().find(|&k| self.level.contains(&self.terms[k].inv.mul(x)));
        }
        bucket.iter().copied().find(|&k| {
            let t = &self.terms[k].place;
            t.k == place.k || t.k_inv.mul(&place.k).map(|z| self.frame.base.contains_mod(&z)).unwrap_or(false)
        })
    }

    fn position(&self, x: &QMatrix) -> Option<usize> {
        self.locate(x, &self.place(x))
    }

    fn push(&mut self, x: QMatrix, a: BigInt, place: Place) {
        let inv = x.inverse().expect("coset representatives are invertible");
        self.buckets.entry(place.key.clone()).or_default().push(self.terms.len());
        self.terms.push(Term { rep: x, inv, coeff: a, place });
    }

    fn remove(&mut self, k: usize) {
        let last = self.terms.len() - 1;
        let key = self.terms[k].place.key.clone();
        if let Some(b) = self.buckets.get_mut(&key) {
            b.retain(|&i| i != k);
            if b.is_empty() {
                self.buckets.remove(&key);
            }
        }
        if k != last {
            let moved = self.terms[last].place.key.clone();
            if let Some(b) = self.buckets.get_mut(&moved) {
                for i in b.iter_mut() {
                    if *i == last {
                        *i = k;
                    }
                }
            }
        }
        self.terms.swap_remove(k);
    }

    /// Add `a * delta_{xU}`, merging with an equal coset.
    pub fn add_term(&mut self, x: QMatrix, a: BigInt) {
        if a.is_zero() {
            return;
        }
        let place = self.place(&x);
        match self.locate(&x, &place) {
            Some(k) => {
                self.terms[k].coeff += a;
                if self.terms[k].coeff.is_zero() {
                    self.remove(k);
                }
            }
            None => self.push(x, a, place),
        }
    }

    /// Append a coset known to be new.
    fn push_distinct(&mut self, x: QMatrix, a: BigInt) {
        if !a.is_zero() {
            let place = self.place(&x);
            self.push(x, a, place);
        }
    }

    pub fn coefficient(&self, x: &QMatrix) -> BigInt {
        self.position(x).map_or_else(BigInt::zero, |k| self.terms[k].coeff.clone())
    }

    pub fn add(&self, other: &CompactClass) -> Result<CompactClass, MackeyError> {
        if self.level != other.level {
            return Err(MackeyError::LevelMismatch);
        }
        let mut out = self.clone();
        for t in &other.terms {
            out.add_term(t.rep.clone(), t.coeff.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, a: &BigInt) -> CompactClass {
        if a.is_zero() {
            return Self::zero(self.level.clone());
        }
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= a;
        }
        out
    }

    pub fn sub(&self, other: &CompactClass) -> Result<CompactClass, MackeyError> {
        self.add(&other.scale(&BigInt::from(-1)))
    }

    /// Representatives and coefficients, for reports.
    pub fn to_strings(&self) -> Vec<(Vec<Vec<String>>, String)> {
        self.terms.iter().map(|t| (t.rep.to_strings(), t.coeff.to_string())).collect()
    }
}

impl PartialEq for CompactClass {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level
            && self.terms.len() == other.terms.len()
            && self.terms.iter().all(|t| other.coefficient(&t.rep) == t.coeff)
    }
}

/// `g` as a power of `tau` for the level's cocharacter, if it is one.
fn tau_exponent(level: &Level, g: &QMatrix) -> Option<i64> {
    let eta = &level.eta().0;
    let i = eta.iter().position(|&e| e != 0)?;
    let v = valuation(&g[(i, i)], level.p)?;
    if v % eta[i] != 0 {
        return None;
    }
    let k = v / eta[i];
    (level.tau_pow(k) == *g).then_some(k)
}

/// Sufficient test for `a ⊆ b` by comparing entry bounds and Levi conditions.
fn structurally_contained(a: &Level, b: &Level) -> bool {
    if !a.same_frame(b) {
        return false;
    }
    let n = a.group().size();
    for i in 0..n {
        for j in 0..n {
            if a.position_bound(i, j) < b.position_bound(i, j) {
                return false;
            }
        }
    }
    let (ma, mb) = (a.levi_depth(), b.levi_depth());
    mb == 0 || b.desc.levi_sub == LeviSub::Full || ma >= mb
}

fn unit_generators(p: u64, m: u32) -> Vec<Rational> {
    let r = |x: i64| Rational::from_integer(x.into());
    if p == 2 {
        return match m {
            0 | 1 => vec![r(-1), r(5)],
            _ => vec![r(1 + (1i64 << m))],
        };
    }
    if m == 0 {
        // a primitive root mod p^2 generates Z_p^x topologically
        let md = Modulus::new(p, 2);
        let order = p * (p - 1);
        let factors = crate::linalg::integral::prime_factors(&BigInt::from(order));
        let g = (2..p).find(|&g| factors.iter().all(|&q| md.pow(g, order / q) != 1)).unwrap_or(2);
        vec![r(g as i64)]
    } else {
        vec![Rational::one() + power(p, m as i64)]
    }
}

/// Cocharacters of the connected torus `T ∩ ker(chars)`, as integer
/// combinations of the basis cocharacters.
fn kernel_cocharacters(group: &Group, roots: &RootDatum, levi_sub: &LeviSub) -> Vec<Vec<i64>> {
    let rank = roots.cocharacters.len();
    let unit = |k: usize| (0..rank).map(|j| i64::from(j == k)).collect::<Vec<_>>();
    match levi_sub {
        LeviSub::Trivial => vec![],
        LeviSub::Full => (0..rank).map(unit).collect(),
        LeviSub::KernelOf(chars) => {
            let n = group.size();
            let rows: Vec<Vec<BigInt>> = chars
                .iter()
                .map(|c| {
                    let d = group.form.character_differential(c);
                    roots
                        .cocharacters
                        .iter()
                        .map(|b| {
                            let s: Rational = (0..n).map(|i| &d[i * n + i] * Rational::from_integer(b[i].into())).sum();
                            s.to_integer()
                        })
                        .collect()
                })
                .collect();
            integer_kernel(&rows, rank)
                .into_iter()
                .map(|v| v.iter().map(|x| i64::try_from(x).expect("small cocharacter")).collect())
                .collect()
        }
    }
}

fn torus_from(roots: &RootDatum, mu: &[i64], x: &Rational) -> QMatrix {
    let params: Vec<Rational> = mu
        .iter()
        .map(|&c| {
            let base = if c >= 0 { x.clone() } else { x.recip() };
            (0..c.unsigned_abs()).fold(Rational::one(), |acc, _| acc * &base)
        })
        .collect();
    roots.torus_element(&params)
}

/// Topological generators of the level: root elements at the smallest
/// allowed valuation and torus elements generating its torus part.
pub fn level_generators(level: &Level) -> Vec<QMatrix> {
    let p = level.p;
    let roots = level.roots();
    let mut out = Vec::new();
    for (a, root) in roots.roots.iter().enumerate() {
        out.push(root.element(&power(p, level.root_bound(a))));
    }
    let rank = roots.cocharacters.len();
    let m = level.levi_depth();
    let unit = |k: usize| (0..rank).map(|j| i64::from(j == k)).collect::<Vec<_>>();
    let full = m == 0 || level.desc.levi_sub == LeviSub::Full;
    let deep = if full { unit_generators(p, 0) } else { unit_generators(p, m) };
    for k in 0..rank {
        for x in &deep {
            out.push(torus_from(roots, &unit(k), x));
        }
    }
    if !full {
        if let LeviSub::KernelOf(_) = level.desc.levi_sub {
            for mu in kernel_cocharacters(level.group(), roots, &level.desc.levi_sub) {
                for x in unit_generators(p, 0) {
                    out.push(torus_from(roots, &mu, &x));
                }
            }
        }
    }
    out
}

/// Whether `g^{-1} a g ⊆ b`: by bounds when `g` is a power of `tau` or lies
/// in `a`, otherwise on generators of `a`.
pub fn conjugate_contained(a: &Level, g: &QMatrix, b: &Level) -> bool {
    if a.same_frame(b) {
        if let Some(k) = tau_exponent(a, g) {
            if structurally_contained(&a.conjugate(k), b) {
                return true;
            }
        } else if a.contains(g) && structurally_contained(a, b) {
            return true;
        }
    }
    let Ok(g_inv) = g.inverse() else { return false };
    level_generators(a).iter().all(|x| b.contains(&g_inv.mul(x).mul(g)))
}

/// `[g]_*`: `x U ↦ x g V`.
pub fn pushforward(c: &CompactClass, g: &QMatrix, target: &Level) -> Result<CompactClass, MackeyError> {
    if !conjugate_contained(&c.level, g, target) {
        return Err(MackeyError::Containment);
    }
    let mut out = CompactClass::zero(target.clone());
    for t in &c.terms {
        out.add_term(t.rep.mul(g), t.coeff.clone());
    }
    Ok(out)
}

fn units_mod(p: u64, e: u32, one_mod: u32) -> Vec<u64> {
    let m = p.pow(e);
    let q = p.pow(one_mod);
    (1..m).filter(|x| x % p != 0 && (x - 1) % q == 0).collect()
}

/// Left coset representatives of `v / u` for two levels in the same frame and
/// with the same shift, each of which has an Iwahori decomposition.
pub fn coset_reps(v: &Level, u: &Level, budget: u64) -> Result<Vec<QMatrix>, MackeyError> {
    if !v.same_frame(u) || v.desc.shift != u.desc.shift {
        return Err(MackeyError::Unsupported("coset representatives need levels in one frame".into()));
    }
    if !structurally_contained(u, v) {
        return Err(MackeyError::Containment);
    }
    if v.desc.variant != Variant::J && v.desc.r == 0 {
        return Err(MackeyError::Unsupported("the level has no Iwahori decomposition".into()));
    }
    let s = v.desc.shift;
    let (v0, u0) = (v.conjugate(-s), u.conjugate(-s));
    let p = v.p;
    let roots = v.roots();

    // torus part
    let (mv, mu) = (v0.levi_depth(), u0.levi_depth());
    let mut torus: Vec<QMatrix> = vec![QMatrix::identity(v.group().size())];
    let torus_trivial = mu == 0 || u0.desc.levi_sub == LeviSub::Full || (mv == mu && v0.desc.levi_sub == LeviSub::Trivial);
    if !torus_trivial {
        let one_mod = if v0.desc.levi_sub == LeviSub::Trivial { mv } else { 0 };
        let units = units_mod(p, mu, one_mod);
        let rank = roots.cocharacters.len();
        budget_check((units.len() as u128).saturating_pow(rank as u32), budget)?;
        let mut digits = vec![0u64; rank];
        let bounds = vec![units.len() as u64; rank];
        let mut found: Vec<(QMatrix, QMatrix)> = Vec::new();
        loop {
            let params: Vec<Rational> = digits.iter().map(|&d| Rational::from_integer(units[d as usize].into())).collect();
            let t = roots.torus_element(&params);
            if v0.contains(&t) && !found.iter().any(|(_, inv)| u0.contains(&inv.mul(&t))) {
                let inv = t.inverse()?;
                found.push((t, inv));
            }
            if !crate::groups::points::advance(&mut digits, &bounds) {
                break;
            }
        }
        torus = found.into_iter().map(|(t, _)| t).collect();
    }

    // root parts, ordered nbar, levi, n
    let eta = v0.eta();
    let mut order: Vec<usize> = (0..roots.roots.len()).collect();
    order.sort_by_key(|&a| roots.roots[a].pairing(eta).signum());
    let mut alphas = Vec::new();
    let mut ranges = Vec::new();
    let mut expected = torus.len() as u128;
    for a in order {
        let (bv, bu) = (v0.root_bound(a), u0.root_bound(a));
        if bu > bv {
            alphas.push(a);
            ranges.push((bv, p.pow((bu - bv) as u32)));
            expected = expected.saturating_mul(p.pow((bu - bv) as u32) as u128);
        }
    }
    budget_check(expected, budget)?;
    let bounds: Vec<u64> = ranges.iter().map(|r| r.1).collect();
    let w = |a: usize| roots.roots[a].pairing(eta);
    let mut reps: Vec<(QMatrix, QMatrix)> = Vec::new();
    for t in &torus {
        let mut digits = vec![0u64; alphas.len()];
        loop {
            let mut left = QMatrix::identity(v.group().size());
            let mut right = t.clone();
            for ((&a, &(b, _)), &c) in alphas.iter().zip(&ranges).zip(&digits) {
                if c != 0 {
                    let x = roots.roots[a].element(&(power(p, b) * Rational::from_integer(c.into())));
                    if w(a) < 0 {
                        left = left.mul(&x);
                    } else {
                        right = right.mul(&x);
                    }
                }
            }
            let g = left.mul(&right);
            if !reps.iter().any(|(_, inv)| u0.contains(&inv.mul(&g))) {
                let inv = g.inverse()?;
                reps.push((g, inv));
            }
            if !crate::groups::points::advance(&mut digits, &bounds) {
                break;
            }
        }
    }
    if reps.len() as u128 != expected {
        return Err(MackeyError::Unsupported(format!("found {} representatives, index is {expected}", reps.len())));
    }
    let back = |x: QMatrix| if s == 0 { x } else { v.tau_pow(-s).mul(&x).mul(&v.tau_pow(s)) };
    Ok(reps.into_iter().map(|(g, _)| back(g)).collect())
}

/// `x V ↦ sum_{gamma in V/U} x gamma U`.
pub fn pullback(c: &CompactClass, target: &Level, budget: u64) -> Result<CompactClass, MackeyError> {
    if c.level == *target {
        return Ok(c.clone());
    }
    let reps = coset_reps(&c.level, target, budget)?;
    budget_check((reps.len() as u128) * c.len() as u128, budget)?;
    let mut out = CompactClass::zero(target.clone());
    for t in &c.terms {
        for g in &reps {
            out.push_distinct(t.rep.mul(g), t.coeff.clone());
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct CartesianReport {
    pub ok: bool,
    pub double_cosets: usize,
    pub classes_checked: usize,
    pub witness: Option<String>,
}

/// Orbits of `up` on `v / u`, each as `(gamma, [(rho, rho * gamma)])` with
/// `rho` a word in the generators of `up`.
fn double_coset_orbits(v: &Level, u: &Level, up: &Level, budget: u64) -> Result<Vec<Vec<QMatrix>>, MackeyError> {
    let reps = coset_reps(v, u, budget)?;
    let inv: Vec<QMatrix> = reps.iter().map(|g| g.inverse()).collect::<Result<_, _>>()?;
    let gens = level_generators(up);
    let find = |x: &QMatrix| inv.iter().position(|i| u.contains(&i.mul(x)));
    let mut seen = vec![false; reps.len()];
    let mut orbits = Vec::new();
    for start in 0..reps.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        // elements rho * gamma, rho in up
        let mut orbit = vec![reps[start].clone()];
        let mut k = 0;
        while k < orbit.len() {
            let y = orbit[k].clone();
            for s in &gens {
                let z = s.mul(&y);
                let j = find(&z).ok_or_else(|| MackeyError::Decomposition("generator leaves V".into()))?;
                if !seen[j] {
                    seen[j] = true;
                    orbit.push(z);
                }
            }
            k += 1;
        }
        orbits.push(orbit);
    }
    Ok(orbits)
}

/// Mackey formula for `u, up ⊆ v`: restriction to `u` of induction from `up`
/// against the sum over `up \ v / u`. `drop` removes one double coset from the
/// right-hand side.
pub fn cartesian_check(
    u: &Level,
    up: &Level,
    v: &Level,
    classes: &[CompactClass],
    budget: u64,
    drop: Option<usize>,
) -> Result<CartesianReport, MackeyError> {
    let orbits = double_coset_orbits(v, u, up, budget)?;
    for (n, c) in classes.iter().enumerate() {
        if c.level != *up {
            return Err(MackeyError::LevelMismatch);
        }
        let lhs = pullback(&pushforward(c, &QMatrix::identity(v.group().size()), v)?, u, budget)?;
        let mut rhs = CompactClass::zero(u.clone());
        for (k, orbit) in orbits.iter().enumerate() {
            if Some(k) == drop {
                continue;
            }
            for t in c.terms() {
                for y in orbit {
                    rhs.add_term(t.rep.mul(y), t.coeff.clone());
                }
            }
        }
        if lhs != rhs {
            return Ok(CartesianReport {
                ok: false,
                double_cosets: orbits.len(),
                classes_checked: n + 1,
                witness: Some(format!("class {n}: lhs has {} cosets, rhs has {}", lhs.len(), rhs.len())),
            });
        }
    }
    Ok(CartesianReport { ok: true, double_cosets: orbits.len(), classes_checked: classes.len(), witness: None })
}

/// The level of `G` attached to a pair.
pub fn pair_level(pair: &Pair, p: u64, r: u32, variant: Variant) -> Result<Level, MackeyError> {
    let cfg = &pair.config;
    let desc = LevelDescriptor {
        group: cfg.g.clone(),
        eta: cfg.eta_g.clone(),
        r,
        variant,
        levi_sub: cfg.levi_sub_g.clone(),
        shift: 0,
    };
    Ok(Level::with_group(Arc::new(pair.g.clone()), Arc::new(RootDatum::new(&pair.g)?), desc, p)?)
}

/// Exact elements of `Q_H^0(Z_p)` covering `Q_H^0(Z/p^d)`.
pub fn qh0_elements(pair: &Pair, p: u64, d: u32, budget: u64) -> Result<Vec<QMatrix>, MackeyError> {
    let h = &pair.h;
    let hr = RootDatum::new(h)?;
    let mir = &pair.config.mirabolic_h;
    let eta: &Cocharacter = &mir.eta;
    let md = Modulus::new(p, d);
    let torus_levi = hr.roots.iter().all(|r| r.pairing(eta) != 0);
    let levi: Vec<QMatrix> = if torus_levi {
        let basis = kernel_cocharacters(h, &hr, &mir.levi_sub);
        let units: Vec<u64> = md.units().collect();
        budget_check((units.len() as u128).saturating_pow(basis.len() as u32), budget)?;
        let mut digits = vec![0u64; basis.len()];
        let bounds = vec![units.len() as u64; basis.len()];
        let mut out = Vec::new();
        loop {
            let mut t = QMatrix::identity(h.size());
            for (mu, &c) in basis.iter().zip(&digits) {
                t = t.mul(&torus_from(&hr, mu, &Rational::from_integer(units[c as usize].into())));
            }
            out.push(t);
            if !crate::groups::points::advance(&mut digits, &bounds) {
                break;
            }
        }
        out
    } else {
        if mir.levi_sub != LeviSub::Full {
            return Err(MackeyError::Unsupported("non-torus Levi with a proper L^0".into()));
        }
        let pts = crate::groups::points::levi_points(h, &hr, eta, &mir.levi_sub, md, budget)?;
        let lifts: Vec<QMatrix> = pts.iter().map(|x| x.lift()).collect();
        if !lifts.iter().all(|x| h.contains(x)) {
            return Err(MackeyError::Unsupported("Levi residues do not lift entrywise".into()));
        }
        lifts
    };
    let pos = hr.positive_for(eta);
    let count = (md.m as u128).saturating_pow(pos.len() as u32);
    budget_check(count.saturating_mul(levi.len() as u128), budget)?;
    let bounds = vec![md.m; pos.len()];
    let mut out = Vec::with_capacity((count as usize) * levi.len());
    let mut digits = vec![0u64; pos.len()];
    let mut unip = Vec::new();
    loop {
        let mut x = QMatrix::identity(h.size());
        for (&a, &c) in pos.iter().zip(&digits) {
            if c != 0 {
                x = x.mul(&hr.roots[a].element(&Rational::from_integer(c.into())));
            }
        }
        unip.push(x);
        if !crate::groups::points::advance(&mut digits, &bounds) {
            break;
        }
    }
    for l in &levi {
        for n in &unip {
            out.push(l.mul(n));
        }
    }
    Ok(out)
}

/// Topological generators of `Q_H^0(Z_p)`: root elements `x_alpha(1)` for
/// the roots of `N_H` and of the Levi when `L^0` is not trivial, and the
/// kernel torus evaluated at generators of `Z_p^x`.
pub fn qh0_generators(pair: &Pair, p: u64) -> Result<Vec<QMatrix>, MackeyError> {
    let h = &pair.h;
    let hr = RootDatum::new(h)?;
    let mir = &pair.config.mirabolic_h;
    let mut out = Vec::new();
    for root in &hr.roots {
        let w = root.pairing(&mir.eta);
        if w > 0 || (w == 0 && mir.levi_sub != LeviSub::Trivial) {
            out.push(root.element(&Rational::one()));
        }
    }
    for mu in kernel_cocharacters(h, &hr, &mir.levi_sub) {
        for x in unit_generators(p, 0) {
            out.push(torus_from(&hr, &mu, &x));
        }
    }
    Ok(out)
}

/// Cosets `x U` of an unshifted level with `x in G(Z_p)`, looked up through
/// residues mod `p^d`, `d` the congruence depth.
struct ResidueCosets<'a> {
    level: &'a Level,
    md: Modulus,
    seen: std::collections::HashMap<Vec<u64>, usize>,
    inverses: Vec<ZpMatrix>,
}

impl<'a> ResidueCosets<'a> {
    fn new(level: &'a Level) -> Self {
        let md = Modulus::new(level.p, level.congruence_depth().max(1));
        ResidueCosets { level, md, seen: Default::default(), inverses: Vec::new() }
    }

    /// Index of the coset of `x`, inserting it when new.
    fn insert(&mut self, x: &QMatrix) -> Result<(usize, bool), MackeyError> {
        let xr = ZpMatrix::reduce(x, self.md)?;
        if let Some(&k) = self.seen.get(xr.data()) {
            return Ok((k, false));
        }
        for (k, inv) in self.inverses.iter().enumerate() {
            if self.level.contains_mod(&inv.mul(&xr)?) {
                self.seen.insert(xr.data().to_vec(), k);
                return Ok((k, false));
            }
        }
        let k = self.inverses.len();
        self.inverses.push(xr.inverse()?);
        self.seen.insert(xr.data().to_vec(), k);
        Ok((k, true))
    }
}

/// `z_r`: the indicator of `Q_H^0(Z_p) u U_r / U_r`, as the orbit of `u U_r`
/// under generators of `Q_H^0(Z_p)`.
pub fn orbit_class(pair: &Pair, p: u64, r: u32, budget: u64) -> Result<CompactClass, MackeyError> {
    let level = pair_level(pair, p, r, Variant::U)?;
    if !pair.u_is_integral_at(p) {
        return Err(MackeyError::Unsupported(format!("u is not in G(Z_{p})")));
    }
    let gens: Vec<QMatrix> = qh0_generators(pair, p)?.iter().map(|q| pair.emb.apply(q)).collect();
    let mut index = ResidueCosets::new(&level);
    let mut orbit = vec![pair.u.clone()];
    index.insert(&pair.u)?;
    let mut k = 0;
    while k < orbit.len() {
        for g in &gens {
            let y = g.mul(&orbit[k]);
            if index.insert(&y)?.1 {
                orbit.push(y);
                budget_check(orbit.len() as u128, budget)?;
            }
        }
        k += 1;
    }
    let mut z = CompactClass::zero(level);
    for x in orbit {
        z.push_distinct(x, BigInt::one());
    }
    Ok(z)
}

/// The same class by enumerating `Q_H^0(Z/p^d)`.
pub fn orbit_class_enumerated(pair: &Pair, p: u64, r: u32, budget: u64) -> Result<CompactClass, MackeyError> {
    let level = pair_level(pair, p, r, Variant::U)?;
    let d = level.congruence_depth().max(1);
    let qs = qh0_elements(pair, p, d, budget)?;
    let mut z = CompactClass::zero(level.clone());
    let mut index = ResidueCosets::new(&level);
    for q in &qs {
        let x = pair.emb.apply(q).mul(&pair.u);
        if index.insert(&x)?.1 {
            z.push_distinct(x, BigInt::one());
        }
    }
    Ok(z)
}

/// `xi_r = [tau^r]_* z_r` at `V_r`.
pub fn shifted_class(pair: &Pair, p: u64, r: u32, budget: u64) -> Result<CompactClass, MackeyError> {
    let z = orbit_class(pair, p, r, budget)?;
    let v = z.level.sibling(r, Variant::V);
    pushforward(&z, &z.level.tau_pow(r as i64), &v)
}

fn decomposition_cache() -> &'static Mutex<HashSet<String>> {
    static CACHE: OnceLock<Mutex<HashSet<String>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashSet::new()))
}

/// Canonical form of `n N_1` for `n in N_0`: right multiplication by
/// `I + t E_ij` with `v(t) >= <eta, e_i - e_j>` reduces entry `(i, j)`
/// modulo `p^<eta, e_i - e_j>`, working up each column.
fn n_coset_key(level: &Level, n: &QMatrix) -> Result<Vec<u64>, MackeyError> {
    let eta = &level.desc.eta.0;
    let size = n.rows();
    let top = eta.iter().max().copied().unwrap_or(0) - eta.iter().min().copied().unwrap_or(0);
    let md = Modulus::new(level.p, top.max(1) as u32);
    let mut a = ZpMatrix::reduce(n, md)?;
    let mut key = Vec::new();
    for j in 0..size {
        let mut rows: Vec<usize> = (0..size).filter(|&i| eta[i] > eta[j]).collect();
        rows.sort_by_key(|&i| (eta[i], i));
        for i in rows {
            let q = level.p.pow((eta[i] - eta[j]) as u32);
            let v = a[(i, j)];
            let t = v - v % q;
            if t != 0 {
                for k in 0..size {
                    let sub = (a[(k, i)] as u128 * t as u128 % md.m as u128) as u64;
                    a[(k, j)] = (a[(k, j)] + md.m - sub) % md.m;
                }
            }
            key.push(a[(i, j)]);
        }
    }
    Ok(key)
}

/// Checks that the `gamma tau V_r`, `gamma in N_0/N_1`, are pairwise distinct
/// and permuted by generators of `V_r`, so their union is `V_r tau V_r`.
/// Distinctness is read off canonical forms in `N_0/N_1`; for `x in V_r` the
/// coset `x tau V_r` is `n tau V_r` with `n` the `N`-part of `x = n l nbar`,
/// and each match found this way is confirmed by exact membership.
pub fn verify_decomposition(level: &Level) -> Result<(), MackeyError> {
    let tau = level.tau();
    let reps = coset_reps_n(level, 0, 1);
    let mut index = HashMap::new();
    for (i, g) in reps.iter().enumerate() {
        if let Some(j) = index.insert(n_coset_key(level, g)?, i) {
            return Err(MackeyError::Decomposition(format!("cosets {j} and {i} coincide")));
        }
    }
    let cosets: Vec<QMatrix> = reps.iter().map(|g| g.mul(&tau)).collect();
    let inv: Vec<QMatrix> = cosets.iter().map(|g| g.inverse()).collect::<Result<_, _>>()?;
    let outside = || MackeyError::Decomposition("a generator moves a coset outside the union".into());
    for s in level_generators(level) {
        for (c, g) in cosets.iter().zip(&reps) {
            let x = s.mul(g);
            let f = iwahori_factor(&x.inverse()?, level).map_err(|_| outside())?;
            let i = *index.get(&n_coset_key(level, &f.n.inverse()?)?).ok_or_else(outside)?;
            if !level.contains(&inv[i].mul(&s.mul(c))) {
                return Err(outside());
            }
        }
    }
    Ok(())
}

/// `T(delta_{x V_r}) = sum_{gamma in N_0/N_1} delta_{x gamma tau V_r}`.
pub fn hecke_t(c: &CompactClass) -> Result<CompactClass, MackeyError> {
    hecke_t_within(c, u64::MAX)
}

/// `hecke_t`, refusing when `|supp c| * [N_0 : N_1]` exceeds `budget`.
pub fn hecke_t_within(c: &CompactClass, budget: u64) -> Result<CompactClass, MackeyError> {
    let level = &c.level;
    if level.desc.variant != Variant::V || level.desc.shift != 0 || level.desc.r == 0 {
        return Err(MackeyError::Unsupported("T acts on V_r for r >= 1".into()));
    }
    budget_check((c.len() as u128).max(1) * level.n_index(0, 1), budget)?;
    let key = format!("{}|{}", serde_json::to_string(&level.desc).unwrap_or_default(), level.p);
    let known = decomposition_cache().lock().map(|s| s.contains(&key)).unwrap_or(false);
    if !known {
        verify_decomposition(level)?;
        if let Ok(mut s) = decomposition_cache().lock() {
            s.insert(key);
        }
    }
    let tau = level.tau();
    let steps: Vec<QMatrix> = coset_reps_n(level, 0, 1).iter().map(|g| g.mul(&tau)).collect();
    let mut out = CompactClass::zero(level.clone());
    for t in &c.terms {
        for s in &steps {
            out.add_term(t.rep.mul(s), t.coeff.clone());
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct NormRelation {
    pub holds: bool,
    pub lhs: CompactClass,
    pub rhs: CompactClass,
    /// Cosets where the two sides differ, with `lhs - rhs` coefficients.
    pub witness: Vec<(Vec<Vec<String>>, String)>,
}

/// Open orbit at a good prime and condition (B).
pub fn check_hypotheses(pair: &Pair, p: u64, budget: u64) -> Result<(), MackeyError> {
    let orbit = check_open_orbit(pair)?;
    if !orbit.open {
        return Err(MackeyError::HypothesesUnmet("Q_H^0 u Qbar_G is not open".into()));
    }
    if orbit.bad_primes.contains(&p) || !pair.u_is_integral_at(p) {
        return Err(MackeyError::HypothesesUnmet(format!("p = {p} is a bad prime for this pair")));
    }
    let b = check_condition_b(pair, p, 1, budget)?;
    if !b.lie_ok || b.points_ok == Some(false) {
        return Err(MackeyError::HypothesesUnmet("condition (B) fails".into()));
    }
    Ok(())
}

/// `pr_*(xi_{r+1}) = T xi_r` at `V_r`.
pub fn verify_norm_relation(pair: &Pair, p: u64, r: u32, budget: u64) -> Result<NormRelation, MackeyError> {
    check_hypotheses(pair, p, budget)?;
    norm_relation_unchecked(pair, p, r, budget)
}

/// The same evaluation without checking the hypotheses.
pub fn norm_relation_unchecked(pair: &Pair, p: u64, r: u32, budget: u64) -> Result<NormRelation, MackeyError> {
    let xi = shifted_class(pair, p, r, budget)?;
    let xi_next = shifted_class(pair, p, r + 1, budget)?;
    let lhs = pushforward(&xi_next, &QMatrix::identity(pair.g.size()), &xi.level)?;
    let rhs = hecke_t_within(&xi, budget)?;
    let diff = lhs.sub(&rhs)?;
    Ok(NormRelation { holds: diff.is_empty(), lhs, rhs, witness: diff.to_strings().into_iter().take(8).collect() })
}

/// `pr_*(z_{r+1})` at `U_r'` against the pullback of `z_r` to `U_r'`.
pub fn cartesian_square(pair: &Pair, p: u64, r: u32, budget: u64) -> Result<bool, MackeyError> {
    let z = orbit_class(pair, p, r, budget)?;
    let z_next = orbit_class(pair, p, r + 1, budget)?;
    let up = z.level.sibling(r, Variant::Uprime);
    let lhs = pushforward(&z_next, &QMatrix::identity(pair.g.size()), &up)?;
    let rhs = pullback(&z, &up, budget)?;
    Ok(lhs == rhs)
}

/// `e = lim t^{n!}` over `Z/p^M`.
pub fn ordinary_projector(t: &ZpMatrix) -> Result<ZpMatrix, MackeyError> {
    let mut e = t.clone();
    let mut n = 2u64;
    loop {
        let next = zp_pow(&e, n)?;
        if next == e && e.mul(&e)? == e {
            return Ok(e);
        }
        e = next;
        n += 1;
    }
}

pub fn zp_pow(x: &ZpMatrix, mut k: u64) -> Result<ZpMatrix, MackeyError> {
    let mut acc = ZpMatrix::identity(x.modulus(), x.rows());
    let mut base = x.clone();
    while k > 0 {
        if k & 1 == 1 {
            acc = acc.mul(&base)?;
        }
        base = base.mul(&base)?;
        k >>= 1;
    }
    Ok(acc)
}

/// Classes along a tower, indexed by `r`.
#[derive(Clone, Debug)]
pub struct CompatibleFamily {
    pub classes: BTreeMap<u32, CompactClass>,
    /// Compatibility is `pr_*(c_{r+1}) = T c_r` rather than `pr_*(c_{r+1}) = c_r`.
    pub twisted: bool,
}

impl CompatibleFamily {
    pub fn r_max(&self) -> u32 {
        self.classes.keys().next_back().copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilyCheck {
    pub ok: bool,
    pub failing_r: Option<u32>,
}

pub fn family_check(f: &CompatibleFamily) -> Result<FamilyCheck, MackeyError> {
    family_check_within(f, u64::MAX)
}

pub fn family_check_within(f: &CompatibleFamily, budget: u64) -> Result<FamilyCheck, MackeyError> {
    for (&r, c) in &f.classes {
        let Some(next) = f.classes.get(&(r + 1)) else { continue };
        let lhs = pushforward(next, &QMatrix::identity(c.level.group().size()), &c.level)?;
        let rhs = if f.twisted { hecke_t_within(c, budget)? } else { c.clone() };
        if lhs != rhs {
            return Ok(FamilyCheck { ok: false, failing_r: Some(r) });
        }
    }
    Ok(FamilyCheck { ok: true, failing_r: None })
}

/// `(xi_r)_{1 <= r <= r_max}`.
pub fn machine_family(pair: &Pair, p: u64, r_max: u32, budget: u64) -> Result<CompatibleFamily, MackeyError> {
    let mut classes = BTreeMap::new();
    for r in 1..=r_max {
        classes.insert(r, shifted_class(pair, p, r, budget)?);
    }
    Ok(CompatibleFamily { classes, twisted: true })
}
