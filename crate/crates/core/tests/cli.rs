//! Golden tests for every subcommand, run from the workspace root against the
//! shipped corpus. `FMPARTNERS_BLESS=1` rewrites the golden files.

use std::path::{Path, PathBuf};
use std::process::Command;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.txt"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fmpartners")).args(args).current_dir(root()).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap() + &String::from_utf8(out.stderr).unwrap();
    (out.status.code().unwrap(), text)
}

fn check(name: &str, args: &[&str], code: i32) {
    let (actual_code, text) = run(args);
    assert_eq!(actual_code, code, "{name}: exit code\n{text}");
    let path = golden(name);
    if std::env::var_os("FMPARTNERS_BLESS").is_some() {
        std::fs::write(&path, &text).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(text, expected, "{name}: output differs from {}", path.display());
}

#[test]
fn validate() {
    check("validate_e_i", &["validate", "corpus/e_i.json"], 0);
    check("validate_e_omega", &["validate", "corpus/e_omega.json"], 0);
    check("validate_bad", &["validate", "crates/core/tests/data/bad_structure.json"], 2);
}

#[test]
fn dual() {
    check("dual_e_omega", &["dual", "corpus/e_omega.json"], 0);
}

#[test]
fn kl() {
    check("kl_e_i", &["kl", "corpus/e_i.json", "--class", "2*E0"], 0);
    check("kl_degenerate", &["kl", "corpus/e_i_x_e_i.json", "--class", "E0"], 1);
    check("kl_out_of_range", &["kl", "corpus/e_i.json", "--class", "E1"], 2);
}

#[test]
fn amu() {
    check("amu_e_i", &["amu", "corpus/e_i.json", "--slope", "E0/2"], 0);
    check("amu_product", &["amu", "corpus/e_i_x_e_i.json", "--slope", "(E0+E1+E2)/2"], 0);
    check("amu_reduces", &["amu", "corpus/e_i.json", "--slope", "2*E0/4"], 0);
    check("amu_zero_denominator", &["amu", "corpus/e_i.json", "--slope", "E0/0"], 2);
}

#[test]
fn partners() {
    check("partners_e_i", &["partners", "corpus/e_i.json"], 0);
    check("partners_e_omega", &["partners", "corpus/e_omega.json", "--denom-bound", "2"], 0);
}

#[test]
fn ppav_check() {
    check("ppav_e_i", &["ppav-check", "corpus/e_i.json", "--n", "3", "--l", "2"], 0);
    check("ppav_not_coprime", &["ppav-check", "corpus/e_i.json", "--n", "2", "--l", "2"], 2);
}

#[test]
fn audit() {
    check("audit_poincare", &["audit", "corpus/e_i.json", "corpus/e_i.json", "--class", "corpus/poincare_e_i.json", "--l", "1"], 0);
    check("audit_level_two", &["audit", "corpus/e_i.json", "corpus/e_i.json", "--class", "corpus/level_two_e_i.json", "--l", "2"], 0);
    check(
        "audit_block_diagonal",
        &["audit", "corpus/e_i.json", "corpus/e_i.json", "--class", "crates/core/tests/data/block_diagonal_e_i.json", "--l", "2", "--no-brute-force"],
        1,
    );
}

#[test]
fn search_n() {
    check("search_n_trivial", &["search-n", "corpus/e_i.json", "--l", "3", "--target", "corpus/subgroup_trivial_g1.json"], 0);
    check(
        "search_n_product",
        &["search-n", "corpus/e_i_x_e_i.json", "--l", "2", "--target", "corpus/subgroup_second_factor_2.json"],
        0,
    );
}

#[test]
fn regress() {
    check("regress", &["regress"], 0);
}

#[test]
fn json_reports_are_written() {
    let path = std::env::temp_dir().join(format!("fmpartners-kl-{}.json", std::process::id()));
    let (code, _) = run(&["kl", "corpus/e_i.json", "--class", "3*E0", "--json", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let _ = std::fs::remove_file(&path);
    assert_eq!(v["kernel"]["order"], 9);
    assert_eq!(v["class"], "3*E0");
}

#[test]
fn unknown_flag_is_invalid_input() {
    let (code, _) = run(&["validate", "corpus/e_i.json", "--frobnicate"]);
    assert_eq!(code, 2);
    let (code, _) = run(&["validate", "corpus/missing.json"]);
    assert_eq!(code, 2);
}
