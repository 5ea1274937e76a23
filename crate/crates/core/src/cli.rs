//! Command-line front end. Exit codes: 0 success or all checks pass, 1 a check
//! failed, 2 invalid input.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::io::{
    class_literal, int_mat_to_json, parse_class_literal, parse_slope_literal, rat_mat_to_json, ser_int, read_class_file,
    read_subgroup_file, read_variety, variety_to_json,
};
use crate::lattice_core::Int;
use crate::partners::{enumerate_partners, ppav_rank1_check, DEFAULT_SEARCH_BOUND};
use crate::product_audit::{audit_equivalence, projection_iso, search_n, AuditOptions, ProductClass};
use crate::regress::run_all;
use crate::slopes::{a_mu, pi1_invariants_of, Slope};
use crate::varieties::{FiniteSubgroup, NsClass, TorusVariety};

#[derive(Parser, Debug)]
#[command(name = "fmpartners", version, about = "Exact Fourier-Mukai partner computations on complex tori")]
pub struct Cli {
    /// Write a JSON report to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Worker threads for the parallel searches.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a variety file.
    Validate { variety: PathBuf },
    /// Print the dual variety.
    Dual { variety: PathBuf },
    /// Kernel of the polarization map of a class.
    Kl {
        variety: PathBuf,
        /// Class literal over the NS basis, e.g. "2*E0-E1".
        #[arg(long)]
        class: String,
    },
    /// The subvariety `A_mu` of `A x dual(A)` for a slope.
    Amu {
        variety: PathBuf,
        /// Slope literal, e.g. "E0/2".
        #[arg(long)]
        slope: String,
    },
    /// Partners from slopes within the given bounds.
    Partners {
        variety: PathBuf,
        #[arg(long, default_value_t = 1)]
        coeff_bound: i64,
        #[arg(long, default_value_t = 3)]
        denom_bound: i64,
        #[arg(long, default_value_t = DEFAULT_SEARCH_BOUND)]
        search_bound: i64,
    },
    /// Rigidity of a principally polarized variety under the slope n*L/l.
    PpavCheck {
        variety: PathBuf,
        #[arg(long)]
        n: Int,
        #[arg(long)]
        l: Int,
    },
    /// Audit a class on A x B as the slope of an equivalence kernel.
    Audit {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        class: PathBuf,
        #[arg(long)]
        l: Int,
        /// Skip the torsion enumeration.
        #[arg(long)]
        no_brute_force: bool,
    },
    /// Search a class N with K(N) meeting the l-torsion in the target subgroup.
    SearchN {
        variety: PathBuf,
        #[arg(long)]
        l: Int,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 3)]
        bound: i64,
    },
    /// Run the regression suite on the shipped corpus.
    Regress,
}

pub struct Outcome {
    pub text: String,
    pub json: Value,
    pub code: i32,
}

fn load(path: &Path) -> Result<Arc<TorusVariety>> {
    let v = read_variety(path)?;
    let report = v.validate();
    if !report.is_valid() {
        return Err(Error::InvalidVariety(report));
    }
    Ok(Arc::new(v))
}

fn ok(text: String, json: Value) -> Result<Outcome> {
    Ok(Outcome { text, json, code: 0 })
}

fn verdict(passed: bool) -> i32 {
    if passed {
        0
    } else {
        1
    }
}

fn int_json(x: &Int) -> Value {
    ser_int(x, serde_json::value::Serializer).expect("integer serializes")
}

pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Validate { variety } => {
            let v = read_variety(variety)?;
            let report = v.validate();
            if !report.is_valid() {
                return Err(Error::InvalidVariety(report));
            }
            ok("valid".into(), json!({ "name": v.name(), "valid": true, "g": v.g(), "ns_rank": v.ns_rank() }))
        }
        Command::Dual { variety } => {
            let v = load(variety)?;
            let d = variety_to_json(&v.dual());
            ok(serde_json::to_string_pretty(&d).expect("json"), d)
        }
        Command::Kl { variety, class } => {
            let v = load(variety)?;
            let coeffs = parse_class_literal(class, v.ns_basis().len())?;
            let c = NsClass::from_coefficients(v.clone(), &coeffs)?;
            if !c.is_nondegenerate() {
                return Ok(Outcome {
                    text: "class is degenerate; K(L) is infinite".into(),
                    json: json!({ "class": class_literal(&coeffs), "degenerate": true }),
                    code: 1,
                });
            }
            let k = c.kernel_group()?;
            let json = json!({ "class": class_literal(&coeffs), "kernel": k, "ample": c.is_ample() });
            ok(k.to_string(), json)
        }
        Command::Amu { variety, slope } => {
            let v = load(variety)?;
            let (coeffs, l) = parse_slope_literal(slope, v.ns_basis().len())?;
            let s = Slope::from_coefficients(v.clone(), &coeffs, &l)?;
            let amu = a_mu(&s)?;
            let inv = pi1_invariants_of(&amu)?;
            let text = format!(
                "slope {}\ndeg(pi1) = {}; rank = {}\nSigma: {}\nbasis of the member lattice:\n{}",
                s.literal(),
                inv.deg_pi1,
                inv.rank,
                inv.sigma.structure(),
                amu.basis
            );
            let json = json!({
                "slope": s.literal(),
                "deg_pi1": int_json(&inv.deg_pi1),
                "rank": int_json(&inv.rank),
                "sigma": inv.sigma.structure(),
                "basis": rat_mat_to_json(&amu.basis),
                "variety": variety_to_json(&amu.variety),
            });
            ok(text, json)
        }
        Command::Partners { variety, coeff_bound, denom_bound, search_bound } => {
            let v = load(variety)?;
            let entries = enumerate_partners(&v, *coeff_bound, *denom_bound, *search_bound)?;
            let mut lines = vec![format!("{} slopes modulo NS within the bounds", entries.len())];
            let mut rows = Vec::new();
            for e in &entries {
                let dual = if e.dual_isomorphism.is_some() { "isomorphic to the dual" } else { "no isomorphism to the dual found" };
                lines.push(format!("  {}: ns rank {}; {}", e.slope.literal(), e.fingerprint.ns_rank, dual));
                rows.push(json!({
                    "slope": e.slope.literal(),
                    "partner": variety_to_json(&e.partner.partner),
                    "fingerprint": e.fingerprint,
                    "dual_isomorphism": e.dual_isomorphism.as_ref().map(|h| int_mat_to_json(h.matrix())),
                }));
            }
            ok(lines.join("\n"), json!({ "variety": v.name(), "partners": rows }))
        }
        Command::PpavCheck { variety, n, l } => {
            let v = load(variety)?;
            let r = ppav_rank1_check(&v, n, l)?;
            let text = format!(
                "slope {}: kernel {}; quotient {} an isomorphism\n{}",
                r.slope.literal(),
                r.kernel.structure(),
                if r.certificate.is_some() { "is" } else { "is not" },
                if r.passed { "passed" } else { "failed" }
            );
            let json = json!({
                "slope": r.slope.literal(),
                "kernel": r.kernel.structure(),
                "certificate": r.certificate.as_ref().map(|h| int_mat_to_json(h.matrix())),
                "passed": r.passed,
            });
            Ok(Outcome { text, json, code: verdict(r.passed) })
        }
        Command::Audit { a, b, class, l, no_brute_force } => {
            let (a, b) = (load(a)?, load(b)?);
            let cf = read_class_file(class)?;
            let pc = ProductClass::from_parts(&a, &b, cf.class)?;
            let mut report = audit_equivalence(&pc, l, &AuditOptions { brute_force: !no_brute_force })?;
            report.class_name = cf.name;
            let mut report_json = serde_json::to_value(&report).expect("json");
            let mut text = report.to_string();
            if report.all_pass {
                let iso = projection_iso(&pc, l, DEFAULT_SEARCH_BOUND)?;
                text.push_str(&format!(
                    "\neta: A x dual(A) -> B x dual(B) unimodular; image of dual(A) in B_delta on {} torsion points: {}\ndual(A) isomorphic to B_delta: {}",
                    iso.eta_points_checked,
                    iso.eta_image_ok,
                    iso.essential_certificate.is_some()
                ));
                report_json["projection"] = json!({
                    "p": int_mat_to_json(iso.p.matrix()),
                    "q": int_mat_to_json(iso.q.matrix()),
                    "eta": int_mat_to_json(iso.eta.matrix()),
                    "delta": iso.delta.literal(),
                    "eta_image_ok": iso.eta_image_ok,
                    "essential_certificate": iso.essential_certificate.as_ref().map(|h| int_mat_to_json(h.matrix())),
                });
                let all = iso.eta_image_ok && iso.essential_certificate.is_some();
                return Ok(Outcome { text, json: report_json, code: verdict(all) });
            }
            Ok(Outcome { text, json: report_json, code: 1 })
        }
        Command::SearchN { variety, l, target, bound } => {
            let v = load(variety)?;
            let file = read_subgroup_file(target)?;
            if file.g != v.g() {
                return Err(Error::DimensionMismatch { left: v.g(), right: file.g });
            }
            let target = FiniteSubgroup::generated_by(v.clone(), &file.points()?)?;
            match search_n(&v, l, &target, *bound)? {
                Some(n) => {
                    let lit = class_literal(&n.coefficients);
                    let text = format!("N = {lit}; K(N) meets the {l}-torsion in {}", n.intersection.structure());
                    ok(text, json!({ "found": true, "n": lit, "intersection": n.intersection.structure() }))
                }
                None => Ok(Outcome {
                    text: format!("not found at bound {bound}"),
                    json: json!({ "found": false, "bound": bound }),
                    code: 1,
                }),
            }
        }
        Command::Regress => {
            let report = run_all();
            let lines: Vec<String> = report
                .criteria
                .iter()
                .map(|c| format!("{} criterion {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name))
                .collect();
            let json = serde_json::to_value(&report).expect("json");
            Ok(Outcome { text: lines.join("\n"), json, code: verdict(report.all_pass) })
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvariantViolation(_) => 1,
        _ => 2,
    }
}

/// Parses `args` (program name first), runs the command, prints the summary
/// and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: could not start {n} worker threads");
            return 2;
        }
    }
    match execute(&cli.command) {
        Ok(out) => {
            println!("{}", out.text);
            if let Some(path) = &cli.json {
                let body = serde_json::to_string_pretty(&out.json).expect("json") + "\n";
                if let Err(e) = std::fs::write(path, body) {
                    eprintln!("error: {}: {e}", path.display());
                    return 2;
                }
            }
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
