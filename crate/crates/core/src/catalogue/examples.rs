//! Matrix models of the example pairs, with the claims made about them.

use crate::groups::cocharacter::{LeviSub, MirabolicDescriptor};
use crate::groups::descriptor::{antidiagonal_form, standard_symplectic};
use crate::groups::{CharKind, CharTerm, Character, Cocharacter, GroupDescriptor, Placement};
use crate::linalg::QMatrix;
use crate::spherical::PairConfig;

/// What the source text asserts about a pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Claim {
    pub open: bool,
    /// `None` when no dimension is asserted.
    pub stab_dim: Option<usize>,
    pub condition_b: Option<bool>,
    pub torus_proper: Option<bool>,
    pub dimension_obstruction: bool,
    pub note: &'static str,
}

#[derive(Clone, Debug)]
pub struct Example {
    pub name: &'static str,
    pub pair: PairConfig,
    /// Default prime for runs; `so-pair` needs an odd prime.
    pub p: u64,
    pub claim: Claim,
}

fn ints(rows: &[&[i64]]) -> QMatrix {
    QMatrix::from_ints(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

fn block(src: &[usize], dst: &[usize]) -> Placement {
    Placement::Block { src: src.to_vec(), dst: dst.to_vec() }
}

fn identity_block(n: usize) -> QMatrix {
    QMatrix::identity(n)
}

/// `x -> x_{ii} / x_{jj}` on block `b`.
fn entry_ratio(b: usize, i: usize, j: usize) -> Character {
    Character {
        terms: vec![
            CharTerm { block: b, kind: CharKind::Minor { start: i, len: 1 }, exp: 1 },
            CharTerm { block: b, kind: CharKind::Minor { start: j, len: 1 }, exp: -1 },
        ],
    }
}

fn gl_fiber(a: GroupDescriptor, b: GroupDescriptor) -> GroupDescriptor {
    GroupDescriptor::fiber(a, b, Character::det(0), Character::det(0))
}

/// `GL_n -> GL_n x_{G_m} GL_{n+1}`, `g -> (g, g ⊕ 1)`, Borel of `G`.
pub fn diagonal_gl_with(n: usize, u: QMatrix) -> PairConfig {
    let g = gl_fiber(GroupDescriptor::Gl(n), GroupDescriptor::Gl(n + 1));
    let idx: Vec<usize> = (0..n).collect();
    let second: Vec<usize> = (n..2 * n).collect();
    let mut eta: Vec<i64> = (1..=n as i64).rev().collect();
    eta.extend((0..=n as i64).rev());
    PairConfig {
        h: GroupDescriptor::Gl(n),
        g,
        embedding: vec![block(&idx, &idx), block(&idx, &second), Placement::One { dst: 2 * n }],
        eta_g: Cocharacter(eta),
        mirabolic_h: MirabolicDescriptor { eta: Cocharacter(vec![0; n]), levi_sub: LeviSub::Full },
        levi_sub_g: LeviSub::Trivial,
        u,
    }
}

pub fn modular_symbol() -> PairConfig {
    diagonal_gl_with(1, ints(&[&[1, 0, 0], &[0, 1, 1], &[0, 0, 1]]))
}

pub fn rankin_selberg() -> PairConfig {
    PairConfig {
        h: GroupDescriptor::Gl(2),
        g: gl_fiber(GroupDescriptor::Gl(2), GroupDescriptor::Gl(2)),
        embedding: vec![block(&[0, 1], &[0, 1]), block(&[0, 1], &[2, 3])],
        eta_g: Cocharacter(vec![1, 0, 1, 0]),
        mirabolic_h: MirabolicDescriptor {
            eta: Cocharacter(vec![1, 0]),
            levi_sub: LeviSub::KernelOf(vec![Character::minor(0, 1, 1)]),
        },
        levi_sub_g: LeviSub::Trivial,
        u: ints(&[&[1, 0, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 1], &[0, 0, 0, 1]]),
    }
}

fn gl2n_base(n: usize) -> (GroupDescriptor, GroupDescriptor, Vec<Placement>) {
    let h = GroupDescriptor::Product(vec![GroupDescriptor::Gl(n), GroupDescriptor::Gl(n)]);
    let idx: Vec<usize> = (0..2 * n).collect();
    (h, GroupDescriptor::Gl(2 * n), vec![block(&idx, &idx)])
}

fn upper_unipotent(n: usize, corner: &QMatrix) -> QMatrix {
    let mut u = identity_block(2 * n);
    for i in 0..n {
        for j in 0..n {
            u[(i, n + j)] = corner[(i, j)].clone();
        }
    }
    u
}

/// `GL_n x GL_n -> GL_2n` with the `(n, n)` parabolic and `u = [[I, I], [0, I]]`.
pub fn gl2n_shalika(n: usize) -> PairConfig {
    let (h, g, embedding) = gl2n_base(n);
    let mut eta = vec![1; n];
    eta.extend(vec![0; n]);
    let det_ratio = Character {
        terms: vec![
            CharTerm { block: 0, kind: CharKind::Minor { start: 0, len: n }, exp: 1 },
            CharTerm { block: 0, kind: CharKind::Minor { start: n, len: n }, exp: -1 },
        ],
    };
    PairConfig {
        h,
        g,
        embedding,
        eta_g: Cocharacter(eta),
        mirabolic_h: MirabolicDescriptor { eta: Cocharacter(vec![0; 2 * n]), levi_sub: LeviSub::Full },
        levi_sub_g: LeviSub::KernelOf(vec![det_ratio]),
        u: upper_unipotent(n, &identity_block(n)),
    }
}

/// The Borel variant with `u = [[I, J], [0, I]]`, `J` antidiagonal.
pub fn gl2n_borel(n: usize) -> PairConfig {
    let (h, g, embedding) = gl2n_base(n);
    let eta: Vec<i64> = (0..2 * n as i64).rev().collect();
    let chars = (0..n).map(|i| entry_ratio(0, i, 2 * n - 1 - i)).collect();
    PairConfig {
        h,
        g,
        embedding,
        eta_g: Cocharacter(eta),
        mirabolic_h: MirabolicDescriptor { eta: Cocharacter(vec![0; 2 * n]), levi_sub: LeviSub::Full },
        levi_sub_g: LeviSub::KernelOf(chars),
        u: upper_unipotent(n, &antidiagonal_form(n)),
    }
}

fn gl2_fiber_gl2() -> GroupDescriptor {
    gl_fiber(GroupDescriptor::Gl(2), GroupDescriptor::Gl(2))
}

/// Both GL_2 mirabolics `[[*, *], [0, 1]]` in `GL_2 x_{G_m} GL_2`.
fn double_mirabolic() -> MirabolicDescriptor {
    MirabolicDescriptor {
        eta: Cocharacter(vec![1, 0, 1, 0]),
        levi_sub: LeviSub::KernelOf(vec![Character::minor(0, 1, 1), Character::minor(1, 1, 1)]),
    }
}

/// `GL_2 x_{G_m} GL_2 -> GSp_4` on the orthogonal planes `<e1, f1>`, `<e2, f2>`,
/// Siegel parabolic, `L_G^0 = 1`.
pub fn gsp4_siegel_with(u: QMatrix) -> PairConfig {
    PairConfig {
        h: gl2_fiber_gl2(),
        g: GroupDescriptor::Gsp { form: standard_symplectic(2) },
        embedding: vec![block(&[0, 1], &[0, 2]), block(&[2, 3], &[1, 3])],
        eta_g: Cocharacter(vec![1, 1, 0, 0]),
        mirabolic_h: double_mirabolic(),
        levi_sub_g: LeviSub::Trivial,
        u,
    }
}

/// The same `H` in `GSp_4 x_{G_m} GL_2`, with `Q_H^0 = (mirabolic, *)` and the
/// Borel of `G`.
pub fn gsp4_gl2_with(u: QMatrix) -> PairConfig {
    PairConfig {
        h: gl2_fiber_gl2(),
        g: GroupDescriptor::fiber(
            GroupDescriptor::Gsp { form: standard_symplectic(2) },
            GroupDescriptor::Gl(2),
            Character::similitude(0),
            Character::det(0),
        ),
        embedding: vec![block(&[0, 1], &[0, 2]), block(&[2, 3], &[1, 3]), block(&[2, 3], &[4, 5])],
        eta_g: Cocharacter(vec![3, 2, 0, 1, 2, 1]),
        mirabolic_h: MirabolicDescriptor {
            eta: Cocharacter(vec![2, 0, 1, 1]),
            levi_sub: LeviSub::KernelOf(vec![Character::minor(0, 1, 1)]),
        },
        levi_sub_g: LeviSub::Trivial,
        u,
    }
}

/// `GL_2 x GL_1 -> GL_3 x GL_1`, `(g, x) -> (diag(g, x), x)`.
pub fn gl3_gl1_with(u: QMatrix) -> PairConfig {
    PairConfig {
        h: GroupDescriptor::Product(vec![GroupDescriptor::Gl(2), GroupDescriptor::Gl(1)]),
        g: GroupDescriptor::Product(vec![GroupDescriptor::Gl(3), GroupDescriptor::Gl(1)]),
        embedding: vec![block(&[0, 1], &[0, 1]), block(&[2], &[2]), block(&[2], &[3])],
        eta_g: Cocharacter(vec![2, 1, 0, 0]),
        mirabolic_h: MirabolicDescriptor {
            eta: Cocharacter(vec![1, 0, 0]),
            levi_sub: LeviSub::KernelOf(vec![Character::minor(0, 1, 1)]),
        },
        levi_sub_g: LeviSub::Trivial,
        u,
    }
}

fn triple_gl2() -> GroupDescriptor {
    GroupDescriptor::fiber(gl2_fiber_gl2(), GroupDescriptor::Gl(2), Character::det(0), Character::det(0))
}

fn gsp6_pair(eta: Vec<i64>, u: QMatrix) -> PairConfig {
    PairConfig {
        h: triple_gl2(),
        g: GroupDescriptor::Gsp { form: standard_symplectic(3) },
        embedding: vec![block(&[0, 1], &[0, 3]), block(&[2, 3], &[1, 4]), block(&[4, 5], &[2, 5])],
        eta_g: Cocharacter(eta),
        mirabolic_h: MirabolicDescriptor {
            eta: Cocharacter(vec![2, 0, 1, 1, 1, 1]),
            levi_sub: LeviSub::KernelOf(vec![Character::minor(0, 1, 1)]),
        },
        levi_sub_g: LeviSub::Trivial,
        u,
    }
}

/// `(GL_2)^3` fibered over `G_m` in `GSp_6`, parabolic with blocks `(1, 2, 2, 1)`.
pub fn gsp6_1221_with(u: QMatrix) -> PairConfig {
    gsp6_pair(vec![3, 2, 2, 0, 1, 1], u)
}

pub fn gsp6_borel() -> PairConfig {
    gsp6_pair(vec![3, 2, 1, -3, -2, -1], identity_block(6))
}

/// `SO(V) -> SO(V) x SO(V ⊕ <e>)` with `V` split of dimension 3 and
/// `<e, e> = 1`; the second factor is written in a basis where its form is
/// `antidiag(1, 2, 2, 1)`.
pub fn so_pair_with(u: QMatrix) -> PairConfig {
    let sv = ints(&[&[0, 0, 1], &[0, -1, 0], &[1, 0, 0]]);
    let s4 = ints(&[&[0, 0, 0, 1], &[0, 0, 2, 0], &[0, 2, 0, 0], &[1, 0, 0, 0]]);
    // columns: e1, e2 + e, e - e2, e3 in the basis (e1, e2, e3, e)
    let basis = ints(&[&[1, 0, 0, 0], &[0, 1, -1, 0], &[0, 0, 0, 1], &[0, 1, 1, 0]]);
    PairConfig {
        h: GroupDescriptor::So { form: sv.clone() },
        g: GroupDescriptor::Product(vec![GroupDescriptor::So { form: sv }, GroupDescriptor::So { form: s4 }]),
        embedding: vec![
            block(&[0, 1, 2], &[0, 1, 2]),
            Placement::Conjugated { src: vec![0, 1, 2], pad: 1, dst: vec![3, 4, 5, 6], basis },
        ],
        eta_g: Cocharacter(vec![1, 0, -1, 2, 1, -1, -2]),
        mirabolic_h: MirabolicDescriptor { eta: Cocharacter(vec![0; 3]), levi_sub: LeviSub::Full },
        levi_sub_g: LeviSub::Trivial,
        u,
    }
}

/// Points `u` found by `find_u` with the enumerate strategy at `p = 5`.
pub fn diagonal_gl(n: usize) -> PairConfig {
    let u = match n {
        1 => ints(&[&[1, 0, 0], &[0, 1, 1], &[0, 0, 1]]),
        2 => ints(&[&[1, 0, 0, 0, 0], &[0, 1, 0, 0, 0], &[0, 0, 1, 1, 1], &[0, 0, 0, 1, 0], &[0, 0, 0, 0, 1]]),
        3 => ints(&[
            &[1, 0, 0, 0, 0, 0, 0],
            &[0, 1, 0, 0, 0, 0, 0],
            &[0, 0, 1, 0, 0, 0, 0],
            &[0, 0, 0, 1, 0, 1, 1],
            &[0, 0, 0, 0, 1, 0, 1],
            &[0, 0, 0, 0, 0, 1, 0],
            &[0, 0, 0, 0, 0, 0, 1],
        ]),
        _ => panic!("no stored u for n = {n}"),
    };
    diagonal_gl_with(n, u)
}

pub fn gsp4_siegel() -> PairConfig {
    gsp4_siegel_with(ints(&[&[1, 0, 0, 1], &[0, 1, 1, 0], &[0, 0, 1, 0], &[0, 0, 0, 1]]))
}

pub fn gsp4_gl2() -> PairConfig {
    gsp4_gl2_with(ints(&[
        &[1, 0, 0, 1, 0, 0],
        &[0, 1, 1, 0, 0, 0],
        &[0, 0, 1, 0, 0, 0],
        &[0, 0, 0, 1, 0, 0],
        &[0, 0, 0, 0, 1, 1],
        &[0, 0, 0, 0, 0, 1],
    ]))
}

pub fn gl3_gl1() -> PairConfig {
    gl3_gl1_with(ints(&[&[1, 0, 1, 0], &[0, 1, 1, 0], &[0, 0, 1, 0], &[0, 0, 0, 1]]))
}

pub fn gsp6_1221() -> PairConfig {
    gsp6_1221_with(ints(&[
        &[1, 0, 0, 0, 1, 1],
        &[0, 1, 0, 1, 0, 1],
        &[0, 0, 1, 1, 1, 0],
        &[0, 0, 0, 1, 0, 0],
        &[0, 0, 0, 0, 1, 0],
        &[0, 0, 0, 0, 0, 1],
    ]))
}

pub fn so_pair() -> PairConfig {
    so_pair_with(ints(&[
        &[1, 0, 0, 0, 0, 0, 0],
        &[0, 1, 0, 0, 0, 0, 0],
        &[0, 0, 1, 0, 0, 0, 0],
        &[0, 0, 0, 1, 2, 2, -2],
        &[0, 0, 0, 0, 1, 0, -1],
        &[0, 0, 0, 0, 0, 1, -1],
        &[0, 0, 0, 0, 0, 0, 1],
    ]))
}

fn open_with(stab_dim: usize, note: &'static str) -> Claim {
    Claim {
        open: true,
        stab_dim: Some(stab_dim),
        condition_b: Some(true),
        torus_proper: None,
        dimension_obstruction: false,
        note,
    }
}

/// Every shipped example, in a fixed order. Names are the fixture file stems.
pub fn all() -> Vec<Example> {
    let mut out = vec![
        Example {
            name: "modular-symbol",
            pair: modular_symbol(),
            p: 3,
            claim: open_with(0, "diag(*, 1) has an open orbit on P^1 with trivial stabilizer"),
        },
        Example {
            name: "rankin-selberg",
            pair: rankin_selberg(),
            p: 2,
            claim: open_with(0, "the diagonal mirabolic has an open orbit on P^1 x P^1 with trivial stabilizer"),
        },
    ];
    for n in 1..=2 {
        let name = if n == 1 { "gl2n-shalika-n1" } else { "gl2n-shalika-n2" };
        out.push(Example {
            name,
            pair: gl2n_shalika(n),
            p: 2,
            claim: Claim {
                torus_proper: Some(true),
                ..open_with(n * n, "stabilizer {(X, X)}; det(h1)/det(h2) is trivial on it")
            },
        });
    }
    for n in 1..=2 {
        let name = if n == 1 { "gl2n-borel-n1" } else { "gl2n-borel-n2" };
        out.push(Example {
            name,
            pair: gl2n_borel(n),
            p: 2,
            claim: open_with(n, "stabilizer diag(x_1, ..., x_n, x_n, ..., x_1)"),
        });
    }
    out.push(Example {
        name: "gsp4-siegel",
        pair: gsp4_siegel(),
        p: 2,
        claim: open_with(0, "open on the Siegel flag variety with trivial stabilizer"),
    });
    out.push(Example {
        name: "gsp4-gl2",
        pair: gsp4_gl2(),
        p: 3,
        claim: open_with(0, "open on the Borel flag variety of GSp_4 x GL_2"),
    });
    out.push(Example {
        name: "gl3-gl1",
        pair: gl3_gl1(),
        p: 3,
        claim: open_with(0, "open on the Borel flag variety with trivial stabilizer"),
    });
    out.push(Example {
        name: "gsp6-1221",
        pair: gsp6_1221(),
        p: 3,
        claim: open_with(0, "open on the (1, 2, 2, 1) flag variety with trivial stabilizer"),
    });
    out.push(Example {
        name: "gsp6-borel",
        pair: gsp6_borel(),
        p: 3,
        claim: Claim {
            open: false,
            stab_dim: None,
            condition_b: None,
            torus_proper: None,
            dimension_obstruction: true,
            note: "dim Q_H^0 = 8 < 9 = dim of the Borel flag variety",
        },
    });
    for n in 1..=3 {
        let name = ["diag-gln-n1", "diag-gln-n2", "diag-gln-n3"][n - 1];
        out.push(Example {
            name,
            pair: diagonal_gl(n),
            p: 3,
            claim: open_with(0, "dim H = dim G/B_G = n^2 and the orbit is open"),
        });
    }
    out.push(Example {
        name: "so-pair",
        pair: so_pair(),
        p: 3,
        claim: open_with(0, "SO(V) in SO(V) x SO(V ⊕ <e>) has an open orbit on the Borel flag variety"),
    });
    out
}

pub fn by_name(name: &str) -> Option<Example> {
    all().into_iter().find(|e| e.name == name)
}
