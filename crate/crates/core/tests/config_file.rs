use chroma_mouse::config::{load_config, LoadError, Settings};

#[test]
fn example_config_is_the_defaults() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/chroma-mouse.example.toml");
    assert_eq!(load_config(path).unwrap(), Settings::default());
}

#[test]
fn empty_file_is_the_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.toml");
    std::fs::write(&path, "").unwrap();
    assert_eq!(load_config(&path).unwrap(), Settings::default());
}

#[test]
fn unknown_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    std::fs::write(&path, "[detect]\nthreshhold_fraction = 0.3\n").unwrap();
    let err = load_config(&path).unwrap_err();
    assert!(matches!(err, LoadError::Invalid { .. }), "{err:?}");
    assert!(
        err.to_string().contains("detect.threshhold_fraction"),
        "{err}"
    );
}

#[test]
fn bundled_scenes_load() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenes");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        chroma_mouse::source::SceneScript::load(&path)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
