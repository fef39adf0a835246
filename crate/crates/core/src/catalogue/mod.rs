//! Indecomposable spherical pairs of Lie algebras with `dim h = dim G/B`,
//! as dimension data, and the shipped matrix examples.

pub mod examples;

use std::fmt;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Sl,
    So,
    Sp,
    T,
    E6,
    E7,
    E8,
    F4,
    G2,
}

/// A simple or one-dimensional factor. For `sp` the parameter `n` means
/// `sp_{2n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LieFactor {
    pub family: Family,
    pub n: usize,
}

pub const fn sl(n: usize) -> LieFactor {
    LieFactor { family: Family::Sl, n }
}
pub const fn so(n: usize) -> LieFactor {
    LieFactor { family: Family::So, n }
}
/// `sp_{2n}`.
pub const fn sp(n: usize) -> LieFactor {
    LieFactor { family: Family::Sp, n }
}
pub const T: LieFactor = LieFactor { family: Family::T, n: 1 };
const fn exc(family: Family) -> LieFactor {
    LieFactor { family, n: 0 }
}

impl LieFactor {
    pub fn dim(&self) -> usize {
        let n = self.n;
        match self.family {
            Family::Sl => (n * n).saturating_sub(1),
            Family::So => n * n.saturating_sub(1) / 2,
            Family::Sp => n * (2 * n + 1),
            Family::T => 1,
            Family::E6 => 78,
            Family::E7 => 133,
            Family::E8 => 248,
            Family::F4 => 52,
            Family::G2 => 14,
        }
    }

    pub fn rank(&self) -> usize {
        let n = self.n;
        match self.family {
            Family::Sl => n.saturating_sub(1),
            Family::So => n / 2,
            Family::Sp => n,
            Family::T => 1,
            Family::E6 => 6,
            Family::E7 => 7,
            Family::E8 => 8,
            Family::F4 => 4,
            Family::G2 => 2,
        }
    }

    /// `dim G/B` for the corresponding group.
    pub fn flag_dim(&self) -> usize {
        (self.dim() - self.rank()) / 2
    }

    /// Rewrite through the low-rank isomorphisms `so_2 = t`, `so_3 = sp_2 =
    /// sl_2`, `so_4 = sl_2 x sl_2`, `so_5 = sp_4`, `so_6 = sl_4`; factors of
    /// dimension zero disappear.
    pub fn normalize(&self) -> Vec<LieFactor> {
        match (self.family, self.n) {
            (Family::Sl | Family::So, 0 | 1) => vec![],
            (Family::Sp, 0) => vec![],
            (Family::So, 2) => vec![T],
            (Family::So, 3) | (Family::Sp, 1) => vec![sl(2)],
            (Family::So, 4) => vec![sl(2), sl(2)],
            (Family::So, 5) => vec![sp(2)],
            (Family::So, 6) => vec![sl(4)],
            _ => vec![*self],
        }
    }
}

impl fmt::Display for LieFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Sl => write!(f, "sl_{}", self.n),
            Family::So => write!(f, "so_{}", self.n),
            Family::Sp => write!(f, "sp_{}", 2 * self.n),
            Family::T => write!(f, "t"),
            Family::E6 => write!(f, "e6"),
            Family::E7 => write!(f, "e7"),
            Family::E8 => write!(f, "e8"),
            Family::F4 => write!(f, "f4"),
            Family::G2 => write!(f, "g2"),
        }
    }
}

pub fn normalize(factors: &[LieFactor]) -> Vec<LieFactor> {
    let mut out: Vec<LieFactor> = factors.iter().flat_map(|x| x.normalize()).collect();
    out.sort();
    out
}

pub fn describe(factors: &[LieFactor]) -> String {
    if factors.is_empty() {
        return "0".into();
    }
    factors.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" x ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    HeckeFamily,
    Sporadic,
    EisensteinCandidate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CatalogueEntry {
    pub name: String,
    pub g_factors: Vec<LieFactor>,
    pub h_factors: Vec<LieFactor>,
    pub kind: EntryKind,
    pub notes: String,
    /// Name of a shipped example realizing this entry.
    pub example: Option<String>,
}

/// An infinite family `n -> (g, h)`.
pub struct FamilyTemplate {
    pub name: &'static str,
    pub g: fn(usize) -> Vec<LieFactor>,
    pub h: fn(usize) -> Vec<LieFactor>,
    pub notes: &'static str,
    pub example: fn(usize) -> Option<String>,
}

impl FamilyTemplate {
    pub fn instantiate(&self, n: usize) -> CatalogueEntry {
        CatalogueEntry {
            name: format!("{}[n={n}]", self.name),
            g_factors: (self.g)(n),
            h_factors: (self.h)(n),
            kind: EntryKind::HeckeFamily,
            notes: self.notes.to_string(),
            example: (self.example)(n),
        }
    }
}

fn none(_: usize) -> Option<String> {
    None
}

pub fn families() -> Vec<FamilyTemplate> {
    vec![
        FamilyTemplate {
            name: "(sl_n x sl_n+1, sl_n x t)",
            g: |n| vec![sl(n), sl(n + 1)],
            h: |n| vec![sl(n), T],
            notes: "GL_n in GL_n x GL_n+1",
            example: |n| (1..=3).contains(&n).then(|| format!("diag-gln-n{n}")),
        },
        FamilyTemplate {
            name: "(so_n x so_n+1, so_n)",
            g: |n| vec![so(n), so(n + 1)],
            h: |n| vec![so(n)],
            notes: "SO_n in SO_n x SO_n+1",
            example: |n| (n == 3).then(|| "so-pair".to_string()),
        },
        FamilyTemplate { name: "(sl_n, so_n)", g: |n| vec![sl(n)], h: |n| vec![so(n)], notes: "", example: none },
        FamilyTemplate { name: "(sl_2n+1, sp_2n)", g: |n| vec![sl(2 * n + 1)], h: |n| vec![sp(n)], notes: "", example: none },
        FamilyTemplate {
            name: "(so_2n+1, so_n x so_n+1)",
            g: |n| vec![so(2 * n + 1)],
            h: |n| vec![so(n), so(n + 1)],
            notes: "",
            example: none,
        },
        FamilyTemplate {
            name: "(so_2n+1, sl_n x t)",
            g: |n| vec![so(2 * n + 1)],
            h: |n| vec![sl(n), T],
            notes: "torus factor; unitary cycles in orthogonal Shimura varieties",
            example: none,
        },
        FamilyTemplate {
            name: "(sp_2n, sl_n x t)",
            g: |n| vec![sp(n)],
            h: |n| vec![sl(n), T],
            notes: "torus factor",
            example: none,
        },
        FamilyTemplate {
            name: "(so_2n, so_n x so_n)",
            g: |n| vec![so(2 * n)],
            h: |n| vec![so(n), so(n)],
            notes: "",
            example: none,
        },
    ]
}

fn sporadic_entry(g: Vec<LieFactor>, h: Vec<LieFactor>) -> CatalogueEntry {
    CatalogueEntry {
        name: format!("({}, {})", describe(&g), describe(&h)),
        g_factors: g,
        h_factors: h,
        kind: EntryKind::Sporadic,
        notes: String::new(),
        example: None,
    }
}

pub fn sporadic() -> Vec<CatalogueEntry> {
    let sl2 = sl(2);
    vec![
        sporadic_entry(vec![sp(2), sp(2), sl2], vec![sl2, sl2, sl2]),
        sporadic_entry(vec![sp(2), sp(2), sp(2)], vec![sl2, sl2, sl2, sl2]),
        sporadic_entry(vec![sp(3), sp(2)], vec![sp(2), sl2]),
        sporadic_entry(vec![sp(4), sp(2)], vec![sp(2), sp(2)]),
        sporadic_entry(vec![sl(3), sp(2)], vec![sl2, sl2, T]),
        sporadic_entry(vec![sl(4), sl2], vec![sl2, sl2, T]),
        sporadic_entry(vec![sl(4), sp(2)], vec![sl2, sl2, sl2, T]),
        sporadic_entry(vec![exc(Family::E6)], vec![sp(4)]),
        sporadic_entry(vec![exc(Family::E7)], vec![sl(8)]),
        sporadic_entry(vec![exc(Family::E8)], vec![so(16)]),
        sporadic_entry(vec![exc(Family::F4)], vec![sp(3), sl2]),
        sporadic_entry(vec![exc(Family::G2)], vec![sl2, sl2]),
    ]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EntryCheck {
    pub ok: bool,
    pub dim_h: usize,
    pub dim_flag_g: usize,
}

pub fn check_entry(e: &CatalogueEntry) -> EntryCheck {
    let dim_h = e.h_factors.iter().map(|x| x.dim()).sum();
    let dim_flag_g = e.g_factors.iter().map(|x| x.flag_dim()).sum();
    EntryCheck { ok: dim_h == dim_flag_g, dim_h, dim_flag_g }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Filter {
    All,
    Eisenstein,
    HasTorusFactor,
}

/// Family instances for `n` in `ns` followed by the sporadic entries.
pub fn entries(ns: std::ops::RangeInclusive<usize>) -> Vec<CatalogueEntry> {
    let mut out: Vec<CatalogueEntry> = families().iter().flat_map(|f| ns.clone().map(move |n| f.instantiate(n))).collect();
    out.extend(sporadic());
    out
}

pub fn list_catalogue(filter: Filter, ns: std::ops::RangeInclusive<usize>) -> Vec<CatalogueEntry> {
    let all = entries(ns);
    match filter {
        Filter::All => all,
        Filter::HasTorusFactor => all.into_iter().filter(|e| normalize(&e.h_factors).contains(&T)).collect(),
        Filter::Eisenstein => eisenstein(&all)
            .into_iter()
            .map(|o| CatalogueEntry {
                name: format!("{} from {}", o.g_prime_name, o.source),
                g_factors: o.g_prime.clone(),
                h_factors: o.h_prime.clone(),
                kind: EntryKind::EisensteinCandidate,
                notes: format!("{} matched sl_2 factor(s)", o.matched),
                example: o.example.clone(),
            })
            .collect(),
    }
}

/// A split `g = g' x (sl_2)^k`, `h = h' x (sl_2)^k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EisensteinOutcome {
    pub source: String,
    pub matched: usize,
    pub g_prime: Vec<LieFactor>,
    pub h_prime: Vec<LieFactor>,
    pub g_prime_name: String,
    pub example: Option<String>,
}

/// Group name for `g'`: `sl_n -> GL_n`, `sp_2n -> GSp_2n`, joined by `x`.
pub fn group_name(g: &[LieFactor]) -> String {
    let mut parts: Vec<String> = g
        .iter()
        .map(|x| match x.family {
            Family::Sl => format!("GL_{}", x.n),
            Family::Sp => format!("GSp_{}", 2 * x.n),
            Family::So => format!("GSO_{}", x.n),
            _ => x.to_string(),
        })
        .collect();
    parts.sort_by(|a, b| b.cmp(a));
    parts.join(" x ")
}

fn remove_sl2(v: &[LieFactor], k: usize) -> Vec<LieFactor> {
    let mut left = k;
    v.iter()
        .filter(|x| {
            if left > 0 && **x == sl(2) {
                left -= 1;
                false
            } else {
                true
            }
        })
        .copied()
        .collect()
}

/// Matches `sl_2` factors of `g` against `sl_2` factors of `h` after
/// normalizing low-rank isomorphisms. At the level of factor lists this
/// cannot see how `h` embeds, so every count `k` up to the common number of
/// `sl_2` factors is reported.
pub fn eisenstein(entries: &[CatalogueEntry]) -> Vec<EisensteinOutcome> {
    let mut out: Vec<EisensteinOutcome> = Vec::new();
    for e in entries {
        let (g, h) = (normalize(&e.g_factors), normalize(&e.h_factors));
        let count = |v: &[LieFactor]| v.iter().filter(|x| **x == sl(2)).count();
        for k in 1..=count(&g).min(count(&h)) {
            let g_prime = remove_sl2(&g, k);
            if g_prime.is_empty() {
                continue;
            }
            let o = EisensteinOutcome {
                source: e.name.clone(),
                matched: k,
                h_prime: remove_sl2(&h, k),
                g_prime_name: group_name(&g_prime),
                g_prime,
                example: eisenstein_example(&e.name, k),
            };
            if !out.iter().any(|x| x.g_prime == o.g_prime && x.h_prime == o.h_prime) {
                out.push(o);
            }
        }
    }
    out
}

fn eisenstein_example(source: &str, k: usize) -> Option<String> {
    let name = match (source, k) {
        ("(sl_n x sl_n+1, sl_n x t)[n=2]", 1) => "gl3-gl1",
        ("(so_n x so_n+1, so_n)[n=3]", 1) => "rankin-selberg",
        ("(so_n x so_n+1, so_n)[n=4]", 2) => "gsp4-siegel",
        ("(so_n x so_n+1, so_n)[n=4]", 1) => "gsp4-gl2",
        _ => return None,
    };
    Some(name.into())
}
