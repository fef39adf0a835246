use std::path::PathBuf;
use std::process::Command;

use normcompat_cli::commands::{self, CatalogueFilter, Overrides};
use normcompat_cli::config::{ConfigError, RunConfig};
use normcompat_cli::report::{Report, Status};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.config"))
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&fixture(name)).unwrap()
}

fn statuses(r: &Report) -> Vec<(String, Status)> {
    r.records.iter().map(|x| (x.name.clone(), x.status)).collect()
}

fn bin(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_normcompat")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn check_pair_rankin_selberg_passes() {
    let r = commands::check_pair(&load("rankin-selberg"), &Overrides::default());
    assert_eq!(r.records.len(), 4);
    assert!(r.records.iter().all(|x| x.status == Status::Pass), "{:?}", statuses(&r));
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn check_pair_gsp6_borel_fails_open_orbit() {
    let r = commands::check_pair(&load("gsp6-borel"), &Overrides::default());
    assert_eq!(r.records[0].name, "open_orbit");
    assert_eq!(r.records[0].status, Status::Fail);
    assert_eq!(r.records[0].data["orbit"]["open"], false);
    assert_eq!(r.exit_code(), 1);
}

#[test]
fn simulate_norm_examples() {
    for (name, p, rmax) in [("modular-symbol", 3, 2), ("rankin-selberg", 2, 2)] {
        let ov = Overrides { p: Some(p), r_max: Some(rmax), ..Default::default() };
        let r = commands::simulate_norm(&ov.apply(load(name)).unwrap(), &ov);
        assert_eq!(r.records.len(), 2 + 2 * rmax as usize, "{name}");
        assert_eq!(r.exit_code(), 0, "{name}: {:?}", statuses(&r));
    }
}

#[test]
fn gsp4_simulation_is_opt_in() {
    let cfg = load("gsp4-siegel");
    let r = commands::simulate_norm(&cfg, &Overrides::default());
    assert_eq!(r.records.last().unwrap().status, Status::SkippedBudget);
    assert_eq!(r.exit_code(), 2);
}

#[test]
fn hypotheses_unmet_is_not_a_failure() {
    let r = commands::simulate_norm(&load("gsp6-borel"), &Overrides::default());
    assert_eq!(statuses(&r), vec![("hypotheses".to_string(), Status::HypothesesUnmet)]);
    assert_eq!(r.exit_code(), 2);
}

#[test]
fn verify_lemma_examples() {
    for (name, p) in [("modular-symbol", 3), ("rankin-selberg", 2), ("rankin-selberg", 3), ("gl2n-shalika-n1", 2)] {
        let ov = Overrides { p: Some(p), r_max: Some(1), ..Default::default() };
        let r = commands::verify_lemma_cmd(&ov.apply(load(name)).unwrap(), &ov);
        assert_eq!(r.exit_code(), 0, "{name} {p}");
        let d = &r.records[0].data["result"];
        assert_eq!(d["index"], d["reps_count"]);
    }
}

#[test]
fn find_u_is_reproducible() {
    let mut cfg = load("rankin-selberg");
    cfg.pair.u = None;
    let a = commands::find_u_cmd(&cfg, &Overrides::default()).to_json();
    let b = commands::find_u_cmd(&cfg, &Overrides::default()).to_json();
    assert_eq!(a, b);
    let r = commands::find_u_cmd(&cfg, &Overrides::default());
    assert_eq!(r.records[0].status, Status::Pass);
    let done: RunConfig = serde_json::from_value(r.records[0].data["completed_config"].clone()).unwrap();
    assert!(done.pair.u.is_some());
    let again = commands::check_pair(&done, &Overrides::default());
    assert_eq!(again.records[0].status, Status::Pass);
}

#[test]
fn find_u_reports_dimension_obstruction() {
    let r = commands::find_u_cmd(&load("gsp6-borel"), &Overrides::default());
    assert_eq!(r.records[0].status, Status::HypothesesUnmet);
    assert_eq!(r.records[0].data["reason"], "dimension obstruction, search skipped");
}

#[test]
fn catalogue_listing_and_dims() {
    let all = commands::catalogue_cmd(true, CatalogueFilter::None);
    assert_eq!(all.records.len(), 8 * 5 + 12);
    assert_eq!(all.exit_code(), 0);
    let eis = commands::catalogue_cmd(false, CatalogueFilter::Eisenstein);
    assert!(eis.records.iter().any(|r| r.name.starts_with("GL_4 from")));
}

#[test]
fn strict_parsing() {
    let text = std::fs::read_to_string(fixture("modular-symbol")).unwrap();
    let extra = text.replacen("\"p\": 3", "\"p\": 3,\n  \"q\": 1", 1);
    match RunConfig::parse(&extra, "x") {
        Err(ConfigError::Parse { field, line, .. }) => {
            assert_eq!(field, "q");
            assert!(line > 1);
        }
        other => panic!("{other:?}"),
    }
    let nonprime = text.replacen("\"p\": 3", "\"p\": 9", 1);
    assert!(matches!(RunConfig::parse(&nonprime, "x"), Err(ConfigError::Invalid { .. })));
    let zero = text.replacen("\"cosets\": 4096", "\"cosets\": 0", 1);
    assert!(matches!(RunConfig::parse(&zero, "x"), Err(ConfigError::Invalid { .. })));
    let bad_u = text.replacen("\"1\"", "\"1/2\"", 1);
    assert!(RunConfig::parse(&bad_u, "x").is_err());
}

#[test]
fn hash_ignores_formatting() {
    let cfg = load("modular-symbol");
    let compact = serde_json::to_string(&cfg).unwrap();
    assert_eq!(RunConfig::parse(&compact, "x").unwrap().hash(), cfg.hash());
}

#[test]
fn binary_exit_codes() {
    let rs = fixture("rankin-selberg");
    let (code, out) = bin(&["check-pair", rs.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains(&load("rankin-selberg").hash()));
    assert!(out.contains(env!("CARGO_PKG_VERSION")));
    assert_eq!(bin(&["check-pair", fixture("gsp6-borel").to_str().unwrap()]).0, 1);
    assert_eq!(bin(&["simulate-norm", fixture("gsp4-siegel").to_str().unwrap()]).0, 2);
    let dir = std::env::temp_dir().join("normcompat-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.config");
    std::fs::write(&bad, "{\"pair\": 1}").unwrap();
    assert_eq!(bin(&["check-pair", bad.to_str().unwrap()]).0, 64);
    assert_eq!(bin(&["no-such-command"]).0, 64);
    assert_eq!(bin(&["check-pair", "--p", "4", rs.to_str().unwrap()]).0, 64);
}

#[test]
fn json_output_is_deterministic() {
    let rs = fixture("rankin-selberg");
    let a = bin(&["simulate-norm", rs.to_str().unwrap()]).1;
    let b = bin(&["simulate-norm", rs.to_str().unwrap()]).1;
    assert_eq!(a, b);
    assert!(!a.contains("timing_ms"));
    assert!(bin(&["--timing", "simulate-norm", rs.to_str().unwrap()]).1.contains("timing_ms"));
}
