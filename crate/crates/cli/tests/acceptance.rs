//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the summary lines are always shown.

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use normcompat::catalogue::{self, examples, Filter};
use normcompat::groups::{Character, Cocharacter, GroupDescriptor, LeviSub};
use normcompat::levels::{coset_reps_n, verify_lemma, Level, LevelDescriptor, Variant};
use normcompat::linalg::rational::rat;
use normcompat::linalg::{Modulus, QMatrix, Rational, Subspace, ZpMatrix};
use normcompat::mackey::*;
use normcompat::spherical::{check_open_orbit, find_u, stabilizer_lie, torus_image, Pair, SearchOutcome, SearchStrategy};
use normcompat_cli::commands::{self, CatalogueFilter, Overrides};
use normcompat_cli::config::RunConfig;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn start() -> Instant {
    static START: OnceLock<Instant> = OnceLock::new();
    *START.get_or_init(Instant::now)
}

fn pair(name: &str) -> (Pair, u64) {
    let ex = examples::by_name(name).unwrap_or_else(|| panic!("no example {name}"));
    (Pair::new(ex.pair).unwrap(), ex.p)
}

/// Runs `f` and fails when it takes longer than `limit`.
fn timed<T>(label: &str, limit: Duration, f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    let t0 = Instant::now();
    let out = f().map_err(|e| format!("{label}: {e}"))?;
    let took = t0.elapsed();
    ensure!(took <= limit, "{label} took {took:?}, limit {limit:?}");
    Ok(out)
}

fn unit(n: usize, i: usize, j: usize) -> Vec<Rational> {
    let mut v = vec![rat(0); n * n];
    v[i * n + j] = rat(1);
    v
}

fn add(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn orbit_stabilizer() -> Outcome {
    let limit = Duration::from_secs(10);
    let open_trivial = |name: &str, flag: Option<usize>| {
        timed(name, limit, || {
            let (p, _) = pair(name);
            let o = check_open_orbit(&p).map_err(|e| e.to_string())?;
            ensure!(o.open && o.stab_dim == 0, "open = {}, stab_dim = {}", o.open, o.stab_dim);
            ensure!(stabilizer_lie(&p).map_err(|e| e.to_string())?.in_h.dim() == 0, "stabilizer not trivial");
            if let Some(f) = flag {
                ensure!(o.flag_dim == f, "flag_dim {} != {f}", o.flag_dim);
            }
            Ok(())
        })
    };
    // (a)
    open_trivial("modular-symbol", Some(1))?;
    open_trivial("rankin-selberg", Some(2))?;
    // (b)
    for n in 1..=3 {
        open_trivial(&format!("diag-gln-n{n}"), None)?;
    }
    // (c)
    for n in 1..=2usize {
        let m = 2 * n;
        timed(&format!("gl2n-shalika-n{n}"), limit, || {
            let (p, _) = pair(&format!("gl2n-shalika-n{n}"));
            let st = stabilizer_lie(&p).map_err(|e| e.to_string())?;
            let copy: Vec<Vec<Rational>> =
                (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| add(&unit(m, i, j), &unit(m, n + i, n + j))).collect();
            ensure!(st.in_h == Subspace::span(m * m, &copy) && st.in_h.dim() == n * n, "stabilizer is not {{(X, X)}}");
            ensure!(check_open_orbit(&p).map_err(|e| e.to_string())?.open, "not open");
            Ok(())
        })?;
        timed(&format!("gl2n-borel-n{n}"), limit, || {
            let (p, _) = pair(&format!("gl2n-borel-n{n}"));
            let st = stabilizer_lie(&p).map_err(|e| e.to_string())?;
            let torus: Vec<Vec<Rational>> = (0..n).map(|i| add(&unit(m, i, i), &unit(m, m - 1 - i, m - 1 - i))).collect();
            ensure!(st.in_h == Subspace::span(m * m, &torus) && st.in_h.dim() == n, "stabilizer is not the palindromic torus");
            ensure!(check_open_orbit(&p).map_err(|e| e.to_string())?.open, "not open");
            Ok(())
        })?;
    }
    // (d), (e)
    open_trivial("gsp4-siegel", Some(3))?;
    open_trivial("gl3-gl1", Some(3))?;
    // (f)
    timed("gsp6-borel", limit, || {
        let (p, _) = pair("gsp6-borel");
        ensure!(!check_open_orbit(&p).map_err(|e| e.to_string())?.open, "orbit reported open");
        let out = find_u(&examples::gsp6_borel(), &SearchStrategy::Enumerate, 5, 100, 0).map_err(|e| e.to_string())?;
        ensure!(out == SearchOutcome::DimensionObstruction { dim_qh0: 8, flag_dim: 9 }, "{out:?}");
        Ok(())
    })?;
    open_trivial("gsp6-1221", Some(8))?;
    Ok("12 pairs".into())
}

fn torus_images() -> Outcome {
    for n in 1..=2 {
        let (p, _) = pair(&format!("gl2n-shalika-n{n}"));
        let t = torus_image(&p).map_err(|e| e.to_string())?;
        ensure!(t.proper, "n = {n}: image is all of Lie(C)");
        let ratio = Character::det(0).times(&Character::det(1).inverse());
        let d = p.h.form.character_differential(&ratio);
        let st = stabilizer_lie(&p).map_err(|e| e.to_string())?;
        for v in st.in_h.basis_vectors() {
            let s: Rational = d.iter().zip(&v).map(|(a, b)| a * b).sum();
            ensure!(s == rat(0), "n = {n}: det(h1)/det(h2) does not vanish on the stabilizer");
        }
        let got: Vec<Vec<Rational>> = t.vanishing.iter().map(|c| p.h.form.character_differential(c)).collect();
        let neg: Vec<Rational> = d.iter().map(|x| -x).collect();
        ensure!(got.len() == 1 && (got[0] == d || got[0] == neg), "n = {n}: vanishing characters {:?}", t.vanishing);
    }
    Ok("n = 1, 2".into())
}

fn lemma() -> Outcome {
    let cases = [("modular-symbol", 3u64), ("rankin-selberg", 2), ("rankin-selberg", 3), ("gl2n-shalika-n1", 2)];
    for (name, p) in cases {
        timed(&format!("{name} p={p}"), Duration::from_secs(30), || {
            let (pr, _) = pair(name);
            let u1 = pair_level(&pr, p, 1, Variant::U).map_err(|e| e.to_string())?;
            let depth = u1.sibling(2, Variant::U).congruence_depth().max(u1.sibling(1, Variant::Uprime).congruence_depth()) + 1;
            let rep = verify_lemma(&pr, p, 1, depth, 1 << 22).map_err(|e| e.to_string())?;
            let reps = coset_reps_n(&u1, 1, 2).len() as u64;
            ensure!(rep.part_i && rep.part_ii, "{rep:?}");
            ensure!(rep.index == rep.expected_index && rep.expected_index == reps, "index {} vs {} vs {reps}", rep.index, rep.expected_index);
            Ok(())
        })?;
    }
    Ok(format!("{} cases", cases.len()))
}

fn model(two: bool, r: u32, variant: Variant, p: u64) -> Level {
    let (group, eta) = if two {
        let g = GroupDescriptor::fiber(GroupDescriptor::Gl(2), GroupDescriptor::Gl(2), Character::det(0), Character::det(0));
        (g, vec![1, 0, 1, 0])
    } else {
        (GroupDescriptor::Gl(2), vec![1, 0])
    };
    Level::new(LevelDescriptor { group, eta: Cocharacter(eta), r, variant, levi_sub: LeviSub::Trivial, shift: 0 }, p).unwrap()
}

/// A random element of `G(Z_p) tau^k`.
fn random_element(level: &Level, rng: &mut ChaCha8Rng) -> QMatrix {
    let rd = level.roots();
    let p = level.p as i64;
    let units: Vec<Rational> = (0..rd.cocharacters.len()).map(|_| rat(1 + p * rng.gen_range(0..3))).collect();
    let mut x = rd.torus_element(&units);
    for _ in 0..rng.gen_range(1..4) {
        let a = rng.gen_range(0..rd.roots.len());
        x = x.mul(&rd.roots[a].element(&rat(rng.gen_range(-3..=3))));
    }
    x.mul(&level.tau_pow(rng.gen_range(-1..=1)))
}

fn random_class(level: &Level, rng: &mut ChaCha8Rng) -> CompactClass {
    let n = rng.gen_range(1..4);
    CompactClass::from_terms(level.clone(), (0..n).map(|_| (random_element(level, rng), BigInt::from(rng.gen_range(-3..=3)))))
}

fn cartesian() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut triples, mut injected) = (0, 0);
    for k in 0..24 {
        let two = k % 3 == 2;
        let p = if two { 2 } else { [2, 3][k % 2] };
        let r = if two { 1 } else { rng.gen_range(1..=2) };
        let (u, up, v) = match rng.gen_range(0..6) {
            0 => (model(two, r + 1, Variant::U, p), model(two, r + 1, Variant::U, p), model(two, r, Variant::U, p)),
            1 => (model(two, r, Variant::Uprime, p), model(two, r + 1, Variant::U, p), model(two, r, Variant::U, p)),
            2 => (model(two, r + 1, Variant::U, p), model(two, r, Variant::Uprime, p), model(two, r, Variant::U, p)),
            3 => (model(two, r, Variant::Uprime, p), model(two, r, Variant::Uprime, p), model(two, r, Variant::U, p)),
            4 if !two => (model(two, r + 1, Variant::V, p), model(two, r + 2, Variant::V, p), model(two, r, Variant::V, p)),
            _ => (model(two, r, Variant::U, p), model(two, r, Variant::U, p), model(two, r, Variant::U, p)),
        };
        let classes: Vec<CompactClass> = (0..2).map(|_| random_class(&up, &mut rng)).collect();
        let rep = cartesian_check(&u, &up, &v, &classes, 1 << 16, None).map_err(|e| e.to_string())?;
        ensure!(rep.ok, "triple {k}: {rep:?}");
        triples += 1;
        let nontrivial = rep.double_cosets > 1 || coset_reps(&v, &u, 1 << 16).map_err(|e| e.to_string())?.len() > 1;
        if nontrivial && classes.iter().any(|c| !c.is_empty()) {
            let bad = cartesian_check(&u, &up, &v, &classes, 1 << 16, Some(0)).map_err(|e| e.to_string())?;
            ensure!(!bad.ok, "triple {k}: dropping a double coset went unnoticed");
            injected += 1;
        }
    }
    ensure!(injected >= 10, "only {injected} fault injections");
    Ok(format!("{triples} triples, {injected} faults detected"))
}

/// Criterion 5 cases: (example, p, r).
const NORM_CASES: [(&str, u64, u32); 6] = [
    ("modular-symbol", 3, 1),
    ("modular-symbol", 3, 2),
    ("rankin-selberg", 2, 1),
    ("rankin-selberg", 2, 2),
    ("gl2n-shalika-n1", 2, 1),
    ("gsp4-siegel", 2, 1),
];

fn norm_relation() -> Outcome {
    for (name, p, r) in NORM_CASES {
        timed(&format!("{name} p={p} r={r}"), Duration::from_secs(60), || {
            let (pr, _) = pair(name);
            let nr = verify_norm_relation(&pr, p, r, 1 << 16).map_err(|e| e.to_string())?;
            ensure!(nr.holds, "differs at {:?}", nr.witness);
            ensure!(!nr.lhs.is_empty(), "both sides vanish");
            Ok(())
        })?;
    }
    for (name, p) in [("modular-symbol", 3), ("rankin-selberg", 2)] {
        let (pr, _) = pair(name);
        let fam = machine_family(&pr, p, 3, 1 << 16).map_err(|e| e.to_string())?;
        let check = family_check(&fam).map_err(|e| e.to_string())?;
        ensure!(check.ok, "{name}: family fails at {:?}", check.failing_r);
    }
    Ok(format!("{} cases, families through r = 2", NORM_CASES.len()))
}

fn hecke_structure() -> Outcome {
    for (name, p, r) in NORM_CASES {
        let (pr, _) = pair(name);
        let v = pair_level(&pr, p, r, Variant::V).map_err(|e| e.to_string())?;
        verify_decomposition(&v).map_err(|e| format!("{name} r={r}: {e}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    for (name, p) in [("modular-symbol", 3), ("rankin-selberg", 2)] {
        let (pr, _) = pair(name);
        let v2 = pair_level(&pr, p, 2, Variant::V).map_err(|e| e.to_string())?;
        let v1 = v2.sibling(1, Variant::V);
        let id = QMatrix::identity(pr.g.size());
        for _ in 0..10 {
            let c = random_class(&v2, &mut rng);
            let a = pushforward(&hecke_t(&c).map_err(|e| e.to_string())?, &id, &v1).map_err(|e| e.to_string())?;
            let b = hecke_t(&pushforward(&c, &id, &v1).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            ensure!(a == b, "{name}: pr_* T != T pr_*");
            checked += 1;
        }
    }
    Ok(format!("{} decompositions, {checked} classes", NORM_CASES.len()))
}

fn zp_combine(a: &ZpMatrix, b: &ZpMatrix, sign: bool) -> ZpMatrix {
    let md = a.modulus();
    let data = a.data().iter().zip(b.data()).map(|(x, y)| md.add(*x, if sign { *y } else { (md.m - y % md.m) % md.m })).collect();
    ZpMatrix::from_data(md, a.rows(), a.cols(), data)
}

fn projector() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..100 {
        let p = [2u64, 3, 5][k % 3];
        let big = 2 + (k / 3 % 2) as u32;
        let md = Modulus::new(p, big);
        let n = rng.gen_range(2..=4);
        let rows: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..md.m as i64)).collect()).collect();
        let t = ZpMatrix::from_ints(md, &rows);
        let e = ordinary_projector(&t).map_err(|e| e.to_string())?;
        ensure!(e.mul(&e).unwrap() == e, "sample {k}: e^2 != e");
        ensure!(e.mul(&t).unwrap() == t.mul(&e).unwrap(), "sample {k}: eT != Te");
        let id = ZpMatrix::identity(md, n);
        let restricted = zp_combine(&t.mul(&e).unwrap(), &zp_combine(&id, &e, false), true);
        ensure!(md.is_unit(restricted.det()), "sample {k}: T not invertible on e");
    }
    for p in [2u64, 3, 5] {
        let md = Modulus::new(p, 2);
        let t = ZpMatrix::from_ints(md, &[vec![1, 0], vec![0, p as i64]]);
        let want = ZpMatrix::from_ints(md, &[vec![1, 0], vec![0, 0]]);
        ensure!(ordinary_projector(&t).map_err(|e| e.to_string())? == want, "diag(1, {p})");
    }
    Ok("100 samples".into())
}

fn catalogue_dims() -> Outcome {
    let all = catalogue::list_catalogue(Filter::All, 2..=6);
    ensure!(all.len() == 8 * 5 + 12, "{} entries", all.len());
    for e in &all {
        ensure!(catalogue::check_entry(e).ok, "{} fails", e.name);
    }
    let mut names: Vec<String> =
        catalogue::list_catalogue(Filter::Eisenstein, 2..=6).iter().map(|e| catalogue::group_name(&e.g_factors)).collect();
    names.sort();
    names.dedup();
    let mut want = vec!["GL_2 x GL_2", "GSp_4", "GSp_4 x GL_2", "GL_3", "GL_4", "GSp_4 x GSp_4"];
    want.sort();
    ensure!(names == want, "{names:?}");
    Ok(format!("{} entries, {} outcomes", all.len(), names.len()))
}

fn default_suite() -> String {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let ov = Overrides::default();
    let mut out = String::new();
    for ex in examples::all() {
        let cfg = RunConfig::load(&dir.join(format!("{}.config", ex.name))).unwrap();
        out += &commands::check_pair(&cfg, &ov).to_json();
        out += &commands::simulate_norm(&cfg, &ov).to_json();
        out += &commands::verify_lemma_cmd(&cfg, &ov).to_json();
    }
    out += &commands::catalogue_cmd(true, CatalogueFilter::None).to_json();
    out += &commands::catalogue_cmd(false, CatalogueFilter::Eisenstein).to_json();
    out
}

fn determinism() -> Outcome {
    let t0 = Instant::now();
    let a = default_suite();
    let once = t0.elapsed();
    let b = default_suite();
    ensure!(a == b, "reports differ between runs");
    ensure!(!a.contains("timing_ms"), "timing leaked into default reports");
    let total = start().elapsed();
    ensure!(total < Duration::from_secs(300), "acceptance run took {total:?}");
    Ok(format!("{} bytes identical, suite {once:.1?}, total {total:.1?}", a.len()))
}

fn main() {
    start();
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("orbit/stabilizer golden suite", orbit_stabilizer),
        ("torus image", torus_images),
        ("lemma brute force", lemma),
        ("cartesian squares", cartesian),
        ("norm relation", norm_relation),
        ("hecke structure", hecke_structure),
        ("ordinary projector", projector),
        ("catalogue", catalogue_dims),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("criterion {} pass: {title} ({detail}; {:.2?})", i + 1, t0.elapsed()),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL: {title}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
