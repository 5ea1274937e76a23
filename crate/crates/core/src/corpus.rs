//! The shipped example varieties and classes, embedded at compile time.

use crate::io::{parse_class_file, parse_subgroup_file, parse_variety, ClassFile, SubgroupFile};
use crate::varieties::TorusVariety;

pub const E_I: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/e_i.json"));
pub const E_OMEGA: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/e_omega.json"));
pub const E_I_X_E_I: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/e_i_x_e_i.json"));
pub const POINCARE_E_I: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/poincare_e_i.json"));
pub const TRIVIAL_G1: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/subgroup_trivial_g1.json"));
pub const SECOND_FACTOR_2_TORSION: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/subgroup_second_factor_2.json"));

fn load(text: &str) -> TorusVariety {
    parse_variety(text).expect("shipped corpus file parses")
}

/// `ℂ/ℤ[i]`
pub fn e_i() -> TorusVariety {
    load(E_I)
}

/// `ℂ/ℤ[ω]`, written with the scaled structure `J² = −3I`.
pub fn e_omega() -> TorusVariety {
    load(E_OMEGA)
}

pub fn e_i_x_e_i() -> TorusVariety {
    load(E_I_X_E_I)
}

/// The Poincaré class on `E_i × dual(E_i)`.
pub fn poincare_e_i() -> ClassFile {
    parse_class_file(POINCARE_E_I).expect("shipped corpus file parses")
}

pub fn trivial_g1() -> SubgroupFile {
    parse_subgroup_file(TRIVIAL_G1).expect("shipped corpus file parses")
}

/// `0 ⊕ (E_i)[2]` inside `E_i × E_i`.
pub fn second_factor_2_torsion() -> SubgroupFile {
    parse_subgroup_file(SECOND_FACTOR_2_TORSION).expect("shipped corpus file parses")
}

pub fn varieties() -> Vec<TorusVariety> {
    vec![e_i(), e_omega(), e_i_x_e_i()]
}
