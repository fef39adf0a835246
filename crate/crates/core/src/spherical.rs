//! Open-orbit and stabilizer conditions for a pair `iota: H -> G` at a point
//! `u` of the flag variety `G / Qbar_G`.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::groups::cocharacter::{levi_part_mod, parabolic_split, LeviSub, MirabolicDescriptor, ParabolicSplit};
use crate::groups::points::{advance, parabolic_points};
use crate::groups::{Character, Cocharacter, EmbeddingMap, Group, GroupDescriptor, GroupError, Placement, RootDatum};
use crate::linalg::integral::{integer_kernel, integral_basis, prime_factors, smith_form};
use crate::linalg::rational::{is_p_unit, rat};
use crate::linalg::{LinalgError, Modulus, QMatrix, Rational, Subspace, ZpMatrix};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SphericalError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("u is not a point of G(Z_p): {0}")]
    BadU(String),
    #[error("embedding source/target do not match the pair")]
    Mismatch,
}

/// Serializable description of a pair `(H, G, iota, eta_G, Q_H^0, L_G^0, u)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub h: GroupDescriptor,
    pub g: GroupDescriptor,
    pub embedding: Vec<Placement>,
    pub eta_g: Cocharacter,
    pub mirabolic_h: MirabolicDescriptor,
    pub levi_sub_g: LeviSub,
    pub u: QMatrix,
}

/// A validated pair with derived Lie-algebra data.
#[derive(Clone, Debug)]
pub struct Pair {
    pub config: PairConfig,
    pub h: Group,
    pub g: Group,
    pub emb: EmbeddingMap,
    pub split_g: ParabolicSplit,
    pub split_h: ParabolicSplit,
    /// `Lie(Q_H^0)` in H-coordinates.
    pub lie_qh0: Subspace,
    /// Its image under `d iota`.
    pub lie_qh0_g: Subspace,
    pub u: QMatrix,
    pub u_inv: QMatrix,
}

impl Pair {
    pub fn new(config: PairConfig) -> Result<Self, SphericalError> {
        let h = Group::new(config.h.clone())?;
        let g = Group::new(config.g.clone())?;
        Self::from_parts(config, h, g)
    }

    fn from_parts(config: PairConfig, h: Group, g: Group) -> Result<Self, SphericalError> {
        let emb = EmbeddingMap::new(h.clone(), g.clone(), config.embedding.clone())?;
        Self::with_embedding(config, emb)
    }

    /// Reuse an already checked embedding (for searches over `u`).
    pub fn with_embedding(config: PairConfig, emb: EmbeddingMap) -> Result<Self, SphericalError> {
        let (h, g) = (emb.source.clone(), emb.target.clone());
        if h.descriptor != config.h || g.descriptor != config.g {
            return Err(SphericalError::Mismatch);
        }
        config.mirabolic_h.validate(&h)?;
        config.levi_sub_g.validate(&g)?;
        let split_g = parabolic_split(&g, &config.eta_g)?;
        let split_h = parabolic_split(&h, &config.mirabolic_h.eta)?;
        let lie_qh0 = config.mirabolic_h.lie(&h)?;
        let lie_qh0_g = emb.lie_image(&lie_qh0);
        let u = config.u.clone();
        if !g.contains(&u) {
            return Err(SphericalError::BadU("u does not satisfy the equations of G".into()));
        }
        if !u.is_integral() {
            return Err(SphericalError::BadU("u must have integer entries".into()));
        }
        let u_inv = u.inverse()?;
        Ok(Pair { config, h, g, emb, split_g, split_h, lie_qh0, lie_qh0_g, u, u_inv })
    }

    pub fn n_g(&self) -> usize {
        self.g.size()
    }

    /// `u X u^{-1}` on flattened coordinates.
    pub fn ad_u(&self, x: &[Rational]) -> Vec<Rational> {
        conj(&self.u, &self.u_inv, x)
    }

    /// `u^{-1} X u`.
    pub fn ad_u_inv(&self, x: &[Rational]) -> Vec<Rational> {
        conj(&self.u_inv, &self.u, x)
    }

    /// Whether `u` lies in `G(Z_p)`.
    pub fn u_is_integral_at(&self, p: u64) -> bool {
        self.g.contains_integral(&self.u, p)
    }

    pub fn flag_dim(&self) -> usize {
        self.g.dim() - self.split_g.lie_qbar.dim()
    }
}

fn conj(a: &QMatrix, a_inv: &QMatrix, x: &[Rational]) -> Vec<Rational> {
    let n = a.rows();
    a.mul(&QMatrix::from_flat(n, n, x.to_vec())).mul(a_inv).flatten()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OpenOrbit {
    pub open: bool,
    pub span_dim: usize,
    pub flag_dim: usize,
    pub stab_dim: usize,
    pub dim_qh0: usize,
    pub dim_g: usize,
    /// Primes at which openness over `Z_p` is not certified.
    pub bad_primes: BTreeSet<u64>,
}

/// Condition (A): `d iota(Lie Q_H^0) + Ad(u) Lie Qbar_G = Lie G`.
pub fn check_open_orbit(pair: &Pair) -> Result<OpenOrbit, SphericalError> {
    let a = &pair.lie_qh0_g;
    let b = pair.split_g.lie_qbar.map(pair.n_g() * pair.n_g(), |v| pair.ad_u(v));
    let span = a.sum(&b)?;
    let open = span == pair.g.lie;
    let stab = stabilizer_lie(pair)?;
    let bad_primes = if open { bad_primes(pair)? } else { BTreeSet::new() };
    Ok(OpenOrbit {
        open,
        span_dim: span.dim(),
        flag_dim: pair.flag_dim(),
        stab_dim: stab.in_g.dim(),
        dim_qh0: pair.lie_qh0.dim(),
        dim_g: pair.g.dim(),
        bad_primes,
    })
}

/// Primes where the integral span `d iota(Lie Q_H^0)_Z + Ad(u) (Lie Qbar_G)_Z`
/// fails to be all of `(Lie G)_Z`, together with primes dividing `det u` and
/// denominators of the embedding.
fn bad_primes(pair: &Pair) -> Result<BTreeSet<u64>, SphericalError> {
    let nn = pair.n_g() * pair.n_g();
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for v in integral_basis(pair.lie_qh0.basis()) {
        let v: Vec<Rational> = v.into_iter().map(Rational::from_integer).collect();
        rows.push(pair.emb.lie_apply(&v));
    }
    for v in integral_basis(pair.split_g.lie_qbar.basis()) {
        let v: Vec<Rational> = v.into_iter().map(Rational::from_integer).collect();
        rows.push(pair.ad_u(&v));
    }
    let lattice = integral_basis(pair.g.lie.basis());
    let coords = lattice_coordinates(&lattice, nn, &rows)?;
    let d = lattice.len();
    let int_rows = QMatrix::from_rows(coords).integer_rows();
    let snf = smith_form(&int_rows, d);
    let mut out = BTreeSet::new();
    if snf.rank() == d && d > 0 {
        out.extend(prime_factors(&snf.invariants[d - 1]));
    }
    let det = pair.u.det();
    out.extend(prime_factors(det.numer()));
    out.extend(pair.emb.denominator_primes());
    Ok(out)
}

/// Coordinates of vectors in a basis of full row rank (the vectors must lie
/// in its span).
fn lattice_coordinates(basis: &[Vec<BigInt>], n: usize, vecs: &[Vec<Rational>]) -> Result<Vec<Vec<Rational>>, SphericalError> {
    let b = QMatrix::from_rows(basis.iter().map(|r| r.iter().cloned().map(Rational::from_integer).collect()).collect());
    let (_, _, pivots) = b.rref();
    let sq = b.submatrix(&(0..b.rows()).collect::<Vec<_>>(), &pivots);
    let inv = sq.inverse()?;
    let mut out = Vec::new();
    for v in vecs {
        let vp: Vec<Rational> = pivots.iter().map(|&c| v[c].clone()).collect();
        // c B = v  =>  c = v_piv B_piv^{-1}
        let c: Vec<Rational> =
            (0..inv.cols()).map(|j| (0..inv.rows()).map(|i| &vp[i] * &inv[(i, j)]).sum()).collect();
        let back: Vec<Rational> = (0..n).map(|k| (0..b.rows()).map(|i| &c[i] * &b[(i, k)]).sum()).collect();
        if &back != v {
            return Err(SphericalError::Linalg(LinalgError::DimensionMismatch { left: n, right: b.rows() }));
        }
        out.push(c);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stabilizer {
    /// `Ad(u^{-1}) d iota(Lie Q_H^0) ∩ Lie Qbar_G`, in G-coordinates.
    pub in_g: Subspace,
    /// The same subalgebra pulled back to `Lie Q_H^0`, in H-coordinates.
    pub in_h: Subspace,
}

pub fn stabilizer_lie(pair: &Pair) -> Result<Stabilizer, SphericalError> {
    let ng = pair.n_g();
    let conj_img = pair.lie_qh0_g.map(ng * ng, |v| pair.ad_u_inv(v));
    let in_g = conj_img.intersection(&pair.split_g.lie_qbar)?;
    // X in Lie Q_H^0 with Ad(u^{-1}) d iota(X) vanishing at positive weights
    let basis = pair.lie_qh0.basis_vectors();
    let eta = &pair.config.eta_g;
    let pos: Vec<usize> =
        (0..ng).flat_map(|i| (0..ng).map(move |j| (i, j))).filter(|&(i, j)| eta.weight(i, j) > 0).map(|(i, j)| i * ng + j).collect();
    let nh2 = pair.h.size() * pair.h.size();
    let in_h = if basis.is_empty() {
        Subspace::zero(nh2)
    } else {
        let cols: Vec<Vec<Rational>> = basis
            .iter()
            .map(|x| {
                let y = pair.ad_u_inv(&pair.emb.lie_apply(x));
                pos.iter().map(|&k| y[k].clone()).collect()
            })
            .collect();
        let kernel = if pos.is_empty() {
            (0..basis.len()).map(|i| unit(basis.len(), i)).collect()
        } else {
            // rows: positions, columns: basis elements
            let m = QMatrix::from_rows((0..pos.len()).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect());
            m.kernel()
        };
        let vecs: Vec<Vec<Rational>> = kernel
            .iter()
            .map(|c| (0..nh2).map(|k| basis.iter().zip(c).map(|(b, ci)| &b[k] * ci).sum()).collect())
            .collect();
        Subspace::span(nh2, &vecs)
    };
    Ok(Stabilizer { in_g, in_h })
}

fn unit(n: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); n];
    v[i] = Rational::one();
    v
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionB {
    pub lie_ok: bool,
    /// `None` when the point check was skipped for budget reasons.
    pub points_ok: Option<bool>,
    pub points_checked: usize,
    pub skipped_reason: Option<String>,
}

/// Condition (B): `u^{-1} Q_H^0 u ∩ Qbar_G ⊆ Nbar_G . L_G^0`, on Lie algebras
/// and on points modulo `p^depth`.
pub fn check_condition_b(pair: &Pair, p: u64, depth: u32, budget: u64) -> Result<ConditionB, SphericalError> {
    let stab = stabilizer_lie(pair)?;
    let l0 = pair.config.levi_sub_g.lie(&pair.g, &pair.split_g.lie_l)?;
    let target = pair.split_g.lie_nbar.sum(&l0)?;
    let lie_ok = target.contains_subspace(&stab.in_g)?;

    let md = Modulus::new(p, depth);
    let hr = RootDatum::new(&pair.h)?;
    let points = match parabolic_points(&pair.h, &hr, &pair.config.mirabolic_h.eta, &pair.config.mirabolic_h.levi_sub, md, budget)
    {
        Ok(pts) => pts,
        Err(GroupError::BudgetExceeded { estimate, budget }) => {
            let reason = format!("Q_H^0 mod {p}^{depth} has about {estimate} points, budget {budget}");
            log::warn!("condition (B) point check skipped: {reason}");
            return Ok(ConditionB { lie_ok, points_ok: None, points_checked: 0, skipped_reason: Some(reason) });
        }
        Err(e) => return Err(e.into()),
    };
    let u = ZpMatrix::reduce(&pair.u, md).map_err(|_| SphericalError::BadU(format!("u is not integral at {p}")))?;
    let u_inv = u.inverse().map_err(|_| SphericalError::BadU(format!("det u is not a unit at {p}")))?;
    let eta = &pair.config.eta_g;
    let ng = pair.n_g();
    let mut ok = true;
    for q in &points {
        let x = u_inv.mul(&pair.emb.apply_mod(q)?)?.mul(&u)?;
        let in_qbar = (0..ng).all(|i| (0..ng).all(|j| eta.weight(i, j) <= 0 || x[(i, j)] == 0));
        if in_qbar && !pair.config.levi_sub_g.contains_levi_mod(&pair.g, &levi_part_mod(eta, &x)) {
            ok = false;
            break;
        }
    }
    Ok(ConditionB { lie_ok, points_ok: Some(ok), points_checked: points.len(), skipped_reason: None })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusImage {
    pub characters: Vec<Character>,
    /// `Lie(C)` as the image of `Lie H` under `d pi`, inside `Q^k`.
    pub lie_c: Subspace,
    /// `d pi` of the stabilizer.
    pub image: Subspace,
    pub proper: bool,
    /// Integral combinations of the generating characters that are nontrivial
    /// on `H` but vanish on the stabilizer.
    pub vanishing: Vec<Character>,
}

pub fn torus_image(pair: &Pair) -> Result<TorusImage, SphericalError> {
    let stab = stabilizer_lie(pair)?;
    let chars = pair.h.torus_quotient();
    let k = chars.len();
    let diffs: Vec<Vec<Rational>> = chars.iter().map(|c| pair.h.form.character_differential(c)).collect();
    let dpi = |v: &[Rational]| -> Vec<Rational> { diffs.iter().map(|d| d.iter().zip(v).map(|(a, b)| a * b).sum()).collect() };
    let lie_c = pair.h.lie.map(k, dpi);
    let image = stab.in_h.map(k, dpi);
    let proper = image != lie_c;

    let int_rows = |s: &Subspace| -> Vec<Vec<BigInt>> { if s.is_zero() { Vec::new() } else { s.basis().integer_rows() } };
    let ann_image = integer_kernel(&int_rows(&image), k);
    let ann_c = integer_kernel(&int_rows(&lie_c), k);
    let as_q = |v: &[BigInt]| -> Vec<Rational> { v.iter().cloned().map(Rational::from_integer).collect() };
    let mut span = Subspace::span(k, &ann_c.iter().map(|v| as_q(v)).collect::<Vec<_>>());
    let mut vanishing = Vec::new();
    for a in ann_image {
        let v = as_q(&a);
        if span.contains_vector(&v) {
            continue;
        }
        span = span.sum(&Subspace::span(k, &[v]))?;
        let mut c = Character::trivial();
        for (ch, e) in chars.iter().zip(&a) {
            if !e.is_zero() {
                let e: i64 = e.try_into().expect("small exponent");
                for t in &ch.terms {
                    c.terms.push(crate::groups::CharTerm { exp: t.exp * e, ..t.clone() });
                }
            }
        }
        vanishing.push(c);
    }
    Ok(TorusImage { characters: chars, lie_c, image, proper, vanishing })
}

/// How `find_u` produces candidates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    /// `prod x_alpha(t_alpha)` over the roots of `N_G`, `t in 0..p`, lexicographic.
    Enumerate,
    /// The same products with `t` uniform in `-bound..=bound`.
    Random { samples: u64, bound: i64 },
    Candidates(Vec<QMatrix>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found { u: QMatrix, tried: u64 },
    /// `dim Q_H^0 < dim G / Qbar_G`: no orbit can be open.
    DimensionObstruction { dim_qh0: usize, flag_dim: usize },
    /// Budget exhausted. This says nothing about existence.
    Exhausted { tried: u64 },
}

/// Search for `u` with an open orbit and `p` outside the bad primes; the
/// `u` field of `config` is ignored.
pub fn find_u(config: &PairConfig, strategy: &SearchStrategy, p: u64, budget: u64, seed: u64) -> Result<SearchOutcome, SphericalError> {
    let h = Group::new(config.h.clone())?;
    let g = Group::new(config.g.clone())?;
    let emb = EmbeddingMap::new(h.clone(), g.clone(), config.embedding.clone())?;
    let mut probe = config.clone();
    probe.u = QMatrix::identity(g.size());
    let base = Pair::with_embedding(probe.clone(), emb.clone())?;
    if base.lie_qh0.dim() < base.flag_dim() {
        return Ok(SearchOutcome::DimensionObstruction { dim_qh0: base.lie_qh0.dim(), flag_dim: base.flag_dim() });
    }
    let roots = RootDatum::new(&g)?;
    let pos = roots.positive_for(&config.eta_g);
    let product = |ts: &[i64]| -> QMatrix {
        let mut x = QMatrix::identity(g.size());
        for (&a, &t) in pos.iter().zip(ts) {
            if t != 0 {
                x = x.mul(&roots.roots[a].element(&rat(t)));
            }
        }
        x
    };
    let mut tried = 0u64;
    let test = |u: QMatrix| -> Result<Option<QMatrix>, SphericalError> {
        if !u.is_integral() || !g.contains(&u) || !is_p_unit(&u.det(), p) {
            return Ok(None);
        }
        let mut cfg = probe.clone();
        cfg.u = u.clone();
        let pair = Pair::with_embedding(cfg, emb.clone())?;
        let rep = check_open_orbit(&pair)?;
        Ok((rep.open && !rep.bad_primes.contains(&p)).then_some(u))
    };
    match strategy {
        SearchStrategy::Enumerate => {
            let bounds = vec![p; pos.len()];
            let mut digits = vec![0u64; pos.len()];
            loop {
                if tried >= budget {
                    break;
                }
                let ts: Vec<i64> = digits.iter().map(|&d| d as i64).collect();
                tried += 1;
                if let Some(u) = test(product(&ts))? {
                    return Ok(SearchOutcome::Found { u, tried });
                }
                if !advance(&mut digits, &bounds) {
                    break;
                }
            }
        }
        SearchStrategy::Random { samples, bound } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..(*samples).min(budget) {
                let ts: Vec<i64> = (0..pos.len()).map(|_| rng.gen_range(-bound..=*bound)).collect();
                tried += 1;
                if let Some(u) = test(product(&ts))? {
                    return Ok(SearchOutcome::Found { u, tried });
                }
            }
        }
        SearchStrategy::Candidates(list) => {
            for u in list.iter().take(budget as usize) {
                tried += 1;
                if let Some(u) = test(u.clone())? {
                    return Ok(SearchOutcome::Found { u, tried });
                }
            }
        }
    }
    Ok(SearchOutcome::Exhausted { tried })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitReport {
    pub orbit: OpenOrbit,
    pub stabilizer: Stabilizer,
    pub condition_b: ConditionB,
    pub torus: TorusImage,
}

/// Everything the spherical layer knows about a pair at `p`.
pub fn analyze(pair: &Pair, p: u64, depth: u32, budget: u64) -> Result<OrbitReport, SphericalError> {
    if !pair.u_is_integral_at(p) {
        return Err(SphericalError::BadU(format!("u is not in G(Z_{p})")));
    }
    Ok(OrbitReport {
        orbit: check_open_orbit(pair)?,
        stabilizer: stabilizer_lie(pair)?,
        condition_b: check_condition_b(pair, p, depth, budget)?,
        torus: torus_image(pair)?,
    })
}
