//! Exhaustive enumeration of `G(Z/p^N)` for small groups.

use crate::linalg::{Modulus, ZpMatrix};

use super::cocharacter::{Cocharacter, LeviSub};
use super::descriptor::{block_member_mod, Group};
use super::roots::{ResidueRoots, RootDatum};
use super::GroupError;

/// Work estimate for enumerating with the given free positions: the larger
/// of the per-block scan size and `p^{N dim G}`.
pub fn estimate(g: &Group, md: Modulus, allowed: &dyn Fn(usize, usize) -> bool) -> u128 {
    let scan: u128 = g
        .form
        .blocks
        .iter()
        .map(|b| {
            let free = b.indices().flat_map(|i| b.indices().map(move |j| (i, j))).filter(|&(i, j)| allowed(i, j)).count();
            (md.m as u128).saturating_pow(free as u32)
        })
        .fold(0u128, |a, b| a.saturating_add(b));
    scan.max((md.m as u128).saturating_pow(g.dim() as u32))
}

pub fn group_points_mod(g: &Group, p: u64, exp: u32, budget: u64) -> Result<Vec<ZpMatrix>, GroupError> {
    enumerate_with(g, Modulus::new(p, exp), budget, &|_, _| true)
}

/// Points of `G(Z/p^N)` whose entries outside `allowed` vanish, in
/// lexicographic order of the block entries (first block slowest).
pub fn enumerate_with(
    g: &Group,
    md: Modulus,
    budget: u64,
    allowed: &dyn Fn(usize, usize) -> bool,
) -> Result<Vec<ZpMatrix>, GroupError> {
    let est = estimate(g, md, allowed);
    if est > budget as u128 {
        return Err(GroupError::BudgetExceeded { estimate: est, budget });
    }
    let n = g.size();
    let mut per_block: Vec<Vec<ZpMatrix>> = Vec::new();
    for b in &g.form.blocks {
        let s = b.size;
        let free: Vec<(usize, usize)> =
            (0..s).flat_map(|i| (0..s).map(move |j| (i, j))).filter(|&(i, j)| allowed(b.offset + i, b.offset + j)).collect();
        let mut sols = Vec::new();
        let mut digits = vec![0u64; free.len()];
        loop {
            let mut m = ZpMatrix::zeros(md, s, s);
            for (&(i, j), &d) in free.iter().zip(&digits) {
                m[(i, j)] = d;
            }
            if block_member_mod(&b.kind, &m, md)? {
                sols.push(m);
            }
            // odometer, last entry fastest
            let mut k = free.len();
            let wrapped = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < md.m {
                    break false;
                }
                digits[k] = 0;
            };
            if wrapped {
                break;
            }
        }
        per_block.push(sols);
    }
    let total: u128 = per_block.iter().map(|v| v.len() as u128).product();
    if total > budget as u128 {
        return Err(GroupError::BudgetExceeded { estimate: total, budget });
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; per_block.len()];
    if per_block.iter().any(|v| v.is_empty()) {
        return Ok(out);
    }
    loop {
        let mut m = ZpMatrix::zeros(md, n, n);
        for (b, (blk, &k)) in g.form.blocks.iter().zip(per_block.iter().zip(&idx)) {
            let src = &blk[k];
            for i in 0..b.size {
                for j in 0..b.size {
                    m[(b.offset + i, b.offset + j)] = src[(i, j)];
                }
            }
        }
        if g.form.relations_hold_mod(&m) {
            out.push(m);
        }
        let mut k = idx.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < per_block[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Odometer over `digits[k] in 0..bounds[k]`, last index fastest. Returns
/// false once every tuple has been visited.
pub fn advance(digits: &mut [u64], bounds: &[u64]) -> bool {
    let mut k = digits.len();
    while k > 0 {
        k -= 1;
        digits[k] += 1;
        if digits[k] < bounds[k] {
            return true;
        }
        digits[k] = 0;
    }
    false
}

/// Points of the Levi subgroup `L(Z/p^N)` lying in `L^0`. A torus Levi is
/// parametrized by the cocharacter basis; otherwise the weight-zero entries
/// are enumerated exhaustively.
pub fn levi_points(
    g: &Group,
    roots: &RootDatum,
    eta: &Cocharacter,
    levi_sub: &LeviSub,
    md: Modulus,
    budget: u64,
) -> Result<Vec<ZpMatrix>, GroupError> {
    let levi_is_torus = roots.roots.iter().all(|r| r.pairing(eta) != 0);
    let mut out = Vec::new();
    if levi_is_torus {
        let rr = roots.reduced(md)?;
        let units: Vec<u64> = md.units().collect();
        let rank = roots.rank();
        let est = (units.len() as u128).saturating_pow(rank as u32);
        if est > budget as u128 {
            return Err(GroupError::BudgetExceeded { estimate: est, budget });
        }
        let bounds = vec![units.len() as u64; rank];
        let mut digits = vec![0u64; rank];
        loop {
            let params: Vec<u64> = digits.iter().map(|&d| units[d as usize]).collect();
            let t = rr.torus_element(&params);
            if levi_sub.contains_levi_mod(g, &t) {
                out.push(t);
            }
            if !advance(&mut digits, &bounds) {
                break;
            }
        }
    } else {
        let all = enumerate_with(g, md, budget, &|i, j| eta.weight(i, j) == 0)?;
        out.extend(all.into_iter().filter(|l| levi_sub.contains_levi_mod(g, l)));
    }
    Ok(out)
}

/// Points of `Q^0 = L^0 . N` modulo `p^N`, where `N` is generated by the
/// roots pairing positively with `eta`. Each point appears exactly once:
/// the product map over root groups is bijective on a unipotent group.
pub fn parabolic_points(
    g: &Group,
    roots: &RootDatum,
    eta: &Cocharacter,
    levi_sub: &LeviSub,
    md: Modulus,
    budget: u64,
) -> Result<Vec<ZpMatrix>, GroupError> {
    let pos = roots.positive_for(eta);
    let n_count = (md.m as u128).saturating_pow(pos.len() as u32);
    if n_count > budget as u128 {
        return Err(GroupError::BudgetExceeded { estimate: n_count, budget });
    }
    let levi = levi_points(g, roots, eta, levi_sub, md, budget)?;
    let est = n_count.saturating_mul(levi.len() as u128);
    if est > budget as u128 {
        return Err(GroupError::BudgetExceeded { estimate: est, budget });
    }
    let rr = roots.reduced(md)?;
    let unipotent = unipotent_points(&rr, &pos, &vec![(1, md.m); pos.len()])?;
    let mut out = Vec::with_capacity(est as usize);
    for l in &levi {
        for n in &unipotent {
            out.push(l.mul(n)?);
        }
    }
    Ok(out)
}

/// Products `prod_k x_{alpha_k}(t_k)` with `t_k = step_k * c`, `c in 0..count_k`,
/// for `ranges[k] = (step_k, count_k)`; last root fastest.
pub fn unipotent_points(rr: &ResidueRoots, alphas: &[usize], ranges: &[(u64, u64)]) -> Result<Vec<ZpMatrix>, GroupError> {
    let md = rr.md;
    let bounds: Vec<u64> = ranges.iter().map(|r| r.1).collect();
    let mut digits = vec![0u64; alphas.len()];
    let mut out = Vec::new();
    loop {
        let mut x = ZpMatrix::identity(md, rr.size());
        for ((&a, &(step, _)), &c) in alphas.iter().zip(ranges).zip(&digits) {
            let t = md.mul(step % md.m, c % md.m);
            if t != 0 {
                x = x.mul(&rr.root_element(a, t))?;
            }
        }
        out.push(x);
        if !advance(&mut digits, &bounds) {
            break;
        }
    }
    Ok(out)
}
