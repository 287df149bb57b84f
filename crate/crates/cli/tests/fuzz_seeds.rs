use std::fs;
use std::path::PathBuf;

use qmeter_cli::{parse_args_with, parse_config_text, parse_range};

fn seeds(target: &str) -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<PathBuf> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files.into_iter().map(|p| fs::read_to_string(p).unwrap()).collect()
}

#[test]
fn config_seeds_parse_without_panicking() {
    let results: Vec<bool> = seeds("config_file")
        .iter()
        .map(|s| parse_config_text(s).is_ok())
        .collect();
    assert!(results.contains(&true) && results.contains(&false));
}

#[test]
fn range_seeds_parse_without_panicking() {
    let results: Vec<bool> = seeds("range_spec").iter().map(|s| parse_range(s).is_ok()).collect();
    assert!(results.contains(&true) && results.contains(&false));
}

#[test]
fn cli_seeds_parse_without_panicking() {
    let mut codes = Vec::new();
    for seed in seeds("cli_args") {
        let (file, args) = seed.split_once('\n').unwrap_or(("", &seed));
        let file = file.replace(';', "\n");
        let loader = move |_: &str| Ok(file.clone());
        let argv = std::iter::once("qmeter").chain(args.lines());
        codes.push(match parse_args_with(argv, &loader, None) {
            Ok(_) => -1,
            Err(err) => err.exit_code(),
        });
    }
    codes.sort();
    assert_eq!(codes, vec![-1, -1, -1, 0, 2]);
}
