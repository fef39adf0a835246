use std::path::PathBuf;

use normcompat::catalogue::examples;
use normcompat_cli::config::RunConfig;

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Fixture files are generated from the builders; set `UPDATE_FIXTURES=1` to rewrite them.
#[test]
fn fixtures_match_builders() {
    let update = std::env::var("UPDATE_FIXTURES").is_ok();
    for ex in examples::all() {
        let want = RunConfig::from_example(&ex).to_pretty();
        let path = dir().join(format!("{}.config", ex.name));
        if update {
            std::fs::write(&path, &want).unwrap();
        }
        let got = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
        assert_eq!(got, want, "{}", ex.name);
        let parsed = RunConfig::load(&path).unwrap();
        assert_eq!(parsed.pair.to_config(), ex.pair);
    }
}

#[test]
fn every_fixture_has_a_builder() {
    let names: Vec<String> = examples::all().iter().map(|e| format!("{}.config", e.name)).collect();
    for entry in std::fs::read_dir(dir()).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        assert!(names.contains(&name), "{name}");
    }
}
