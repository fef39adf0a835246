use normcompat::groups::descriptor::{antidiagonal_form, standard_symplectic};
use normcompat::groups::{
    group_points_mod, parabolic_split, Character, Cocharacter, EmbeddingMap, Group, GroupDescriptor, GroupError,
    Placement, RootDatum,
};
use normcompat::linalg::rational::rat;
use normcompat::linalg::{Modulus, QMatrix, Rational, ZpMatrix};

fn group(d: GroupDescriptor) -> Group {
    Group::new(d).unwrap()
}

fn gl2_fiber() -> GroupDescriptor {
    GroupDescriptor::fiber(GroupDescriptor::Gl(2), GroupDescriptor::Gl(2), Character::det(0), Character::det(0))
}

#[test]
fn gl2_has_dimension_four() {
    assert_eq!(group(GroupDescriptor::Gl(2)).dim(), 4);
}

#[test]
fn gsp4_dimension_matches_direct_kernel() {
    let g = group(GroupDescriptor::gsp(4));
    // oracle: unknowns (X, c), equations X^T J + J X - c J = 0 entrywise
    let j = standard_symplectic(2);
    let mut rows = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            let mut row = vec![rat(0); 17];
            for k in 0..4 {
                row[k * 4 + a] += j[(k, b)].clone();
                row[k * 4 + b] += j[(a, k)].clone();
            }
            row[16] = -j[(a, b)].clone();
            rows.push(row);
        }
    }
    let kernel = QMatrix::from_rows(rows).kernel();
    assert_eq!(kernel.len(), 11);
    assert_eq!(g.dim(), 11);
}

#[test]
fn fiber_product_has_dimension_seven() {
    assert_eq!(group(gl2_fiber()).dim(), 7);
}

#[test]
fn classical_dimensions() {
    let cases = vec![
        GroupDescriptor::Gl(3),
        GroupDescriptor::Sl(3),
        GroupDescriptor::sp(4),
        GroupDescriptor::gsp(6),
        GroupDescriptor::So { form: antidiagonal_form(3) },
        GroupDescriptor::So { form: antidiagonal_form(5) },
        GroupDescriptor::Product(vec![GroupDescriptor::Gl(1), GroupDescriptor::gsp(4)]),
        gl2_fiber(),
        GroupDescriptor::KernelOfCharacter { group: Box::new(GroupDescriptor::Gl(3)), character: Character::det(0) },
    ];
    for d in cases {
        assert_eq!(group(d.clone()).dim(), d.classical_dim(), "{d:?}");
    }
}

#[test]
fn gl2_parabolic() {
    let g = group(GroupDescriptor::Gl(2));
    let s = parabolic_split(&g, &Cocharacter(vec![1, 0])).unwrap();
    assert_eq!((s.lie_n.dim(), s.lie_l.dim(), s.lie_nbar.dim()), (1, 2, 1));
    assert!(s.lie_n.contains_vector(&[rat(0), rat(1), rat(0), rat(0)]));
    assert!(s.lie_nbar.contains_vector(&[rat(0), rat(0), rat(1), rat(0)]));
}

#[test]
fn siegel_parabolic_of_gsp4() {
    let g = group(GroupDescriptor::gsp(4));
    let s = parabolic_split(&g, &Cocharacter(vec![1, 1, 0, 0])).unwrap();
    assert_eq!((s.lie_n.dim(), s.lie_l.dim(), s.lie_nbar.dim()), (3, 5, 3));
    assert_eq!(s.lie_q.dim(), 8);
    assert_eq!(s.lie_qbar.dim(), 8);
    assert!(s.lie_n.intersection(&s.lie_l).unwrap().is_zero());
    assert_eq!(s.lie_n.sum(&s.lie_l).unwrap().sum(&s.lie_nbar).unwrap(), g.lie);
}

#[test]
fn trivial_cocharacter_gives_whole_group() {
    let g = group(GroupDescriptor::gsp(4));
    let s = parabolic_split(&g, &Cocharacter(vec![0; 4])).unwrap();
    assert_eq!(s.lie_l, g.lie);
    assert!(s.lie_n.is_zero() && s.lie_nbar.is_zero());
}

#[test]
fn cocharacter_must_lie_in_group() {
    let g = group(GroupDescriptor::gsp(4));
    assert!(matches!(parabolic_split(&g, &Cocharacter(vec![1, 0, 0, 0])), Err(GroupError::NotACocharacter(_))));
}

fn unit_matrix(n: usize, i: usize, j: usize) -> Vec<Rational> {
    let mut v = vec![rat(0); n * n];
    v[i * n + j] = rat(1);
    v
}

#[test]
fn stabilization_embedding_derivative() {
    let h = group(GroupDescriptor::Gl(2));
    let g = group(GroupDescriptor::Product(vec![GroupDescriptor::Gl(3), GroupDescriptor::Gl(2)]));
    let e = EmbeddingMap::new(
        h,
        g,
        vec![
            Placement::Block { src: vec![0, 1], dst: vec![0, 1] },
            Placement::One { dst: 2 },
            Placement::Block { src: vec![0, 1], dst: vec![3, 4] },
        ],
    )
    .unwrap();
    let img = e.lie_apply(&unit_matrix(2, 0, 0));
    let expected: Vec<Rational> = unit_matrix(5, 0, 0).iter().zip(unit_matrix(5, 3, 3)).map(|(a, b)| a + b).collect();
    assert_eq!(img, expected);
}

#[test]
fn determinant_placement_differentiates_to_trace() {
    let h = group(GroupDescriptor::Product(vec![GroupDescriptor::Gl(2), GroupDescriptor::Gl(2)]));
    let g = group(GroupDescriptor::Product(vec![GroupDescriptor::Gl(4), GroupDescriptor::Gl(1)]));
    let e = EmbeddingMap::new(
        h,
        g,
        vec![
            Placement::Block { src: vec![0, 1, 2, 3], dst: vec![0, 1, 2, 3] },
            Placement::Character { character: Character::det(0), dst: 4 },
        ],
    )
    .unwrap();
    let x = QMatrix::from_ints(&[vec![3, 1, 0, 0], vec![-2, 5, 0, 0], vec![0, 0, 7, 1], vec![0, 0, 4, -1]]);
    let d = e.lie_apply(x.data());
    // oracle: central difference of iota(I + tX); exact for 2x2 determinants
    let t = rat(1) / rat(1000);
    let plus = e.apply(&QMatrix::identity(4).add(&x.scale(&t)));
    let minus = e.apply(&QMatrix::identity(4).sub(&x.scale(&t)));
    let fd = plus.sub(&minus).scale(&(rat(1) / (rat(2) * t)));
    assert_eq!(d, fd.data());
    assert_eq!(d[24], rat(8));
}

#[test]
fn identity_embedding_has_identity_derivative() {
    let g = group(GroupDescriptor::gsp(4));
    let e = EmbeddingMap::identity(g).unwrap();
    assert!(e.lie_map.is_identity());
}

#[test]
fn malformed_embedding_is_rejected() {
    // transpose is an anti-homomorphism
    let h = group(GroupDescriptor::Gl(2));
    let g = group(GroupDescriptor::Gl(2));
    let swap = QMatrix::from_ints(&[vec![0, 1], vec![1, 0]]);
    let ok = EmbeddingMap::new(
        h.clone(),
        g.clone(),
        vec![Placement::Conjugated { src: vec![0, 1], pad: 0, dst: vec![0, 1], basis: swap }],
    );
    assert!(ok.is_ok());
    let bad = EmbeddingMap::new(h.clone(), g.clone(), vec![Placement::Block { src: vec![0, 0], dst: vec![0, 1] }]);
    assert!(bad.is_err());
    let det_only = EmbeddingMap::new(
        h,
        group(GroupDescriptor::Gl(1)),
        vec![Placement::Character { character: Character::det(0), dst: 0 }],
    );
    assert!(matches!(det_only, Err(GroupError::EmbeddingCheck(_))));
}

#[test]
fn torus_quotients() {
    assert_eq!(group(GroupDescriptor::Gl(3)).torus_quotient(), vec![Character::det(0)]);
    assert!(group(GroupDescriptor::sp(4)).torus_quotient().is_empty());
    assert_eq!(group(GroupDescriptor::gsp(4)).torus_quotient(), vec![Character::similitude(0)]);
    let f = group(gl2_fiber());
    let chars = f.torus_quotient();
    assert_eq!(chars.len(), 2);
    // on the fiber product the two trace functionals coincide
    assert_eq!(f.restricted_differentials(&chars).rank(), 1);
}

#[test]
fn point_counts() {
    let gl2 = group(GroupDescriptor::Gl(2));
    assert_eq!(group_points_mod(&gl2, 2, 1, 1 << 20).unwrap().len(), 6);
    assert_eq!(group_points_mod(&gl2, 2, 2, 1 << 20).unwrap().len(), 96);
    // oracle: det is trivial on GL_2(F_2), so all 6 * 6 pairs qualify
    assert_eq!(group_points_mod(&group(gl2_fiber()), 2, 1, 1 << 20).unwrap().len(), 36);
}

#[test]
fn smooth_lifting_counts() {
    // |G(F_p)| from closed forms, times p^{(N-1) dim G}
    let cases: Vec<(GroupDescriptor, u64, u32, usize)> = vec![
        (GroupDescriptor::Gl(2), 3, 2, 48 * 81),
        (GroupDescriptor::Sl(2), 2, 2, 6 * 8),
        (GroupDescriptor::Sl(2), 3, 1, 24),
        (GroupDescriptor::sp(4), 2, 1, 720),
        (GroupDescriptor::gsp(4), 2, 1, 720),
        (GroupDescriptor::So { form: antidiagonal_form(3) }, 3, 1, 24),
        (GroupDescriptor::Product(vec![GroupDescriptor::Gl(1), GroupDescriptor::Gl(2)]), 3, 1, 2 * 48),
    ];
    for (d, p, n, expected) in cases {
        let g = group(d.clone());
        assert_eq!(group_points_mod(&g, p, n, 1 << 24).unwrap().len(), expected, "{d:?} p={p} N={n}");
    }
}

#[test]
fn budget_is_reported() {
    let g = group(GroupDescriptor::gsp(4));
    match group_points_mod(&g, 3, 2, 1000) {
        Err(GroupError::BudgetExceeded { estimate, budget }) => {
            assert_eq!(budget, 1000);
            assert!(estimate > 1000);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn orthogonal_at_two_is_refused() {
    let g = group(GroupDescriptor::So { form: antidiagonal_form(3) });
    let x = ZpMatrix::identity(Modulus::new(2, 1), 3);
    assert_eq!(g.contains_mod(&x), Err(GroupError::OrthogonalAtTwo));
}

#[test]
fn root_data() {
    let cases: Vec<(GroupDescriptor, usize, usize)> = vec![
        (GroupDescriptor::Gl(3), 3, 6),
        (GroupDescriptor::gsp(4), 3, 8),
        (GroupDescriptor::sp(6), 3, 18),
        (GroupDescriptor::So { form: antidiagonal_form(5) }, 2, 8),
        (GroupDescriptor::So { form: QMatrix::from_ints(&[
            vec![0, 0, 0, 1],
            vec![0, 0, 2, 0],
            vec![0, 2, 0, 0],
            vec![1, 0, 0, 0],
        ]) }, 2, 4),
        (gl2_fiber(), 3, 4),
    ];
    for (d, rank, nroots) in cases {
        let g = group(d.clone());
        let rd = RootDatum::new(&g).unwrap();
        assert_eq!((rd.rank(), rd.roots.len()), (rank, nroots), "{d:?}");
        for r in &rd.roots {
            let x = r.element(&rat(3));
            assert!(g.contains(&x), "{d:?}");
        }
    }
}

#[test]
fn descriptor_json_roundtrip() {
    let d = gl2_fiber();
    let s = serde_json::to_string(&d).unwrap();
    assert_eq!(serde_json::from_str::<GroupDescriptor>(&s).unwrap(), d);
    let parsed: GroupDescriptor = serde_json::from_str(r#"{"gsp": {"form": [["0","1"],["-1","0"]]}}"#).unwrap();
    assert_eq!(group(parsed).dim(), 4);
}
