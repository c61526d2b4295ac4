// Kept in its own test binary: it mutates the process environment.

use std::fs;
use std::path::Path;

use spectral_tower::cli::{run, EXIT_OK, EXIT_USAGE, SEED_ENV};

fn build(out: &Path, seed: &str) -> i32 {
    let args = [
        "spectral-tower",
        "build",
        "--family",
        "random",
        "--p",
        "0.5",
        "--spec",
        "interval 0 1",
        "--n",
        "6",
        "--tau-edge",
        "1e-9",
        "--seed",
        seed,
        "--out",
        out.to_str().unwrap(),
    ];
    run(args)
}

#[test]
fn env_seed_overrides_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    std::env::set_var(SEED_ENV, "11");
    assert_eq!(build(&a, "1"), EXIT_OK);
    assert_eq!(build(&b, "2"), EXIT_OK);
    std::env::remove_var(SEED_ENV);
    assert_eq!(build(&c, "11"), EXIT_OK);
    let manifest = |d: &Path| fs::read(d.join("manifest.json")).unwrap();
    assert_eq!(manifest(&a), manifest(&b));
    assert_eq!(manifest(&a), manifest(&c));

    std::env::set_var(SEED_ENV, "not-a-number");
    assert_eq!(build(&tmp.path().join("d"), "1"), EXIT_USAGE);
    std::env::remove_var(SEED_ENV);
}
