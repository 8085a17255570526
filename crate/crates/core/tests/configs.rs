use linear_dyna::harness::ExperimentConfig;

#[test]
fn shipped_configs_parse_and_round_trip() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "cfg") {
            continue;
        }
        let cfg = ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = ExperimentConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(again.canonical(), cfg.canonical(), "{}", path.display());
        assert_eq!(again.hash(), cfg.hash());
        seen += 1;
    }
    assert!(seen >= 2);
}
