use std::collections::BTreeSet;

use normcompat::catalogue::examples;
use normcompat::catalogue::*;
use normcompat::groups::descriptor::{antidiagonal_form, standard_symplectic};
use normcompat::groups::{Group, GroupDescriptor, RootDatum};

/// `(dim, number of roots / 2)` of the split matrix group with this Lie algebra.
fn matrix_oracle(x: &LieFactor) -> Option<(usize, usize)> {
    let desc = match x.family {
        Family::Sl => GroupDescriptor::Sl(x.n),
        Family::Sp => GroupDescriptor::Sp { form: standard_symplectic(x.n) },
        Family::So => GroupDescriptor::So { form: antidiagonal_form(x.n) },
        _ => return None,
    };
    let g = Group::new(desc).unwrap();
    let roots = RootDatum::new(&g).unwrap();
    Some((g.dim(), roots.roots.len() / 2))
}

#[test]
fn closed_forms_match_matrix_groups() {
    for n in 2..=7 {
        for x in [sl(n), so(n), sp(n.min(4))] {
            let (dim, flag) = matrix_oracle(&x).unwrap();
            assert_eq!(x.dim(), dim, "{x}");
            assert_eq!(x.flag_dim(), flag, "{x}");
        }
    }
}

#[test]
fn exceptional_dimensions() {
    let dims: Vec<(usize, usize)> = sporadic()[7..].iter().map(|e| (e.g_factors[0].dim(), e.g_factors[0].rank())).collect();
    assert_eq!(dims, vec![(78, 6), (133, 7), (248, 8), (52, 4), (14, 2)]);
}

#[test]
fn entry_examples() {
    let e = families()[0].instantiate(2);
    assert_eq!(check_entry(&e), EntryCheck { ok: true, dim_h: 4, dim_flag_g: 4 });
    let e8 = &sporadic()[9];
    assert_eq!(check_entry(e8), EntryCheck { ok: true, dim_h: 120, dim_flag_g: 120 });
    let g2 = &sporadic()[11];
    assert_eq!(check_entry(g2), EntryCheck { ok: true, dim_h: 6, dim_flag_g: 6 });
}

#[test]
fn every_entry_has_dim_h_equal_to_flag_dim() {
    assert_eq!(families().len(), 8);
    assert_eq!(sporadic().len(), 12);
    let all = list_catalogue(Filter::All, 2..=6);
    assert_eq!(all.len(), 8 * 5 + 12);
    for e in &all {
        assert!(check_entry(e).ok, "{}", e.name);
    }
}

#[test]
fn eisenstein_outcomes() {
    let got: BTreeSet<String> = list_catalogue(Filter::Eisenstein, 2..=6).iter().map(|e| group_name(&e.g_factors)).collect();
    // GL_3 x GL_1 has semisimple part sl_3
    let expected: BTreeSet<String> =
        ["GL_2 x GL_2", "GSp_4", "GSp_4 x GL_2", "GL_3", "GL_4", "GSp_4 x GSp_4"].iter().map(|s| s.to_string()).collect();
    assert_eq!(got, expected);
    let linked: BTreeSet<String> = list_catalogue(Filter::Eisenstein, 2..=6).into_iter().filter_map(|e| e.example).collect();
    for name in ["rankin-selberg", "gsp4-siegel", "gsp4-gl2", "gl3-gl1"] {
        assert!(linked.contains(name), "{name}");
    }
}

#[test]
fn torus_filter() {
    let names: Vec<String> = list_catalogue(Filter::HasTorusFactor, 2..=6).into_iter().map(|e| e.name).collect();
    for n in 2..=6 {
        assert!(names.contains(&format!("(so_2n+1, sl_n x t)[n={n}]")));
        assert!(names.contains(&format!("(sp_2n, sl_n x t)[n={n}]")));
    }
    assert!(!names.iter().any(|n| n.contains("e8")));
}

#[test]
fn linked_examples_exist() {
    for e in list_catalogue(Filter::All, 1..=6).iter().chain(list_catalogue(Filter::Eisenstein, 2..=6).iter()) {
        if let Some(name) = &e.example {
            let ex = examples::by_name(name).unwrap_or_else(|| panic!("{name}"));
            assert!(ex.claim.open, "{name}");
        }
    }
}

#[test]
fn low_rank_isomorphisms_preserve_dimension() {
    for x in [so(2), so(3), so(4), so(5), so(6), sp(1)] {
        let d: usize = x.normalize().iter().map(|y| y.dim()).sum();
        let f: usize = x.normalize().iter().map(|y| y.flag_dim()).sum();
        assert_eq!((d, f), (x.dim(), x.flag_dim()), "{x}");
    }
}
