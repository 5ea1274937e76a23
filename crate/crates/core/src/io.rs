//! JSON file formats and literal parsers.
//!
//! Integers are written as JSON numbers when `|x| < 2^53` and as decimal
//! strings otherwise; rationals are always strings `"p/q"` (or `"p"`).

use std::path::Path;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lattice_core::{Int, IntMat, Rat, RatMat};
use crate::varieties::TorusVariety;

const EXACT_LIMIT: i64 = 1 << 53;

pub fn int_to_json(x: &Int) -> Value {
    match x.to_i64() {
        Some(v) if v.abs() < EXACT_LIMIT => Value::from(v),
        _ => Value::from(x.to_string()),
    }
}

pub fn rat_to_string(q: &Rat) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn ser_int<S: Serializer>(x: &Int, s: S) -> std::result::Result<S::Ok, S::Error> {
    int_to_json(x).serialize(s)
}

pub fn ser_int_vec<S: Serializer>(xs: &[Int], s: S) -> std::result::Result<S::Ok, S::Error> {
    xs.iter().map(int_to_json).collect::<Vec<_>>().serialize(s)
}

pub fn ser_int_mat<S: Serializer>(m: &IntMat, s: S) -> std::result::Result<S::Ok, S::Error> {
    int_mat_to_json(m).serialize(s)
}

pub fn ser_rat_vec<S: Serializer>(xs: &[Rat], s: S) -> std::result::Result<S::Ok, S::Error> {
    xs.iter().map(rat_to_string).collect::<Vec<_>>().serialize(s)
}

pub fn int_mat_to_json(m: &IntMat) -> Value {
    Value::Array(
        m.to_rows()
            .iter()
            .map(|r| Value::Array(r.iter().map(int_to_json).collect()))
            .collect(),
    )
}

pub fn rat_mat_to_json(m: &RatMat) -> Value {
    Value::Array(
        m.to_rows()
            .iter()
            .map(|r| Value::Array(r.iter().map(|q| Value::from(rat_to_string(q))).collect()))
            .collect(),
    )
}

pub fn parse_int(s: &str) -> Result<Int> {
    s.trim().parse::<Int>().map_err(|_| Error::Parse(format!("not an integer: {s:?}")))
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let q = parse_int(q)?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rat::new(parse_int(p)?, q))
        }
        None => Ok(Rat::from_integer(parse_int(s)?)),
    }
}

fn json_int(v: &Value) -> Result<Int> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(Int::from)
            .ok_or_else(|| Error::Parse(format!("not an integer: {n}"))),
        Value::String(s) => parse_int(s),
        other => Err(Error::Parse(format!("expected an integer, found {other}"))),
    }
}

fn json_rat(v: &Value) -> Result<Rat> {
    match v {
        Value::String(s) => parse_rat(s),
        Value::Number(_) => Ok(Rat::from_integer(json_int(v)?)),
        other => Err(Error::Parse(format!("expected a rational, found {other}"))),
    }
}

fn json_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::Parse(format!("{what} must be an array")))
}

fn json_rows<T>(v: &Value, what: &str, cell: impl Fn(&Value) -> Result<T>) -> Result<Vec<Vec<T>>> {
    let rows = json_array(v, what)?;
    let out: Vec<Vec<T>> = rows
        .iter()
        .map(|r| json_array(r, what)?.iter().map(&cell).collect::<Result<Vec<T>>>())
        .collect::<Result<_>>()?;
    if let Some(first) = out.first() {
        if out.iter().any(|r| r.len() != first.len()) || first.is_empty() {
            return Err(Error::Parse(format!("{what} is not a rectangular matrix")));
        }
    }
    Ok(out)
}

pub fn json_int_mat(v: &Value, what: &str) -> Result<IntMat> {
    let rows = json_rows(v, what, json_int)?;
    if rows.is_empty() {
        return Err(Error::Parse(format!("{what} is empty")));
    }
    Ok(IntMat::from_rows(rows))
}

pub fn json_rat_mat(v: &Value, what: &str) -> Result<RatMat> {
    let rows = json_rows(v, what, json_rat)?;
    if rows.is_empty() {
        return Err(Error::Parse(format!("{what} is empty")));
    }
    Ok(RatMat::from_rows(rows))
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::Parse(format!("missing field {key:?}")))
}

/// Reads a variety; the result is structurally well-formed but not yet validated.
pub fn variety_from_json(v: &Value) -> Result<TorusVariety> {
    let name = field(v, "name")?.as_str().ok_or_else(|| Error::Parse("name must be a string".into()))?;
    let g = json_int(field(v, "g")?)?;
    let j = json_rat_mat(field(v, "J")?, "J")?;
    if g.to_usize().map(|g| 2 * g) != Some(j.rows()) || !j.is_square() {
        return Err(Error::Parse(format!("J must be {0}x{0} for g = {g}", &g * 2)));
    }
    let ns_basis = json_array(field(v, "ns_basis")?, "ns_basis")?
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let m = json_int_mat(e, "ns_basis entry")?;
            if m.rows() != j.rows() || m.cols() != j.rows() {
                return Err(Error::Parse(format!("ns_basis[{k}] has the wrong size")));
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let polarization = json_array(field(v, "polarization")?, "polarization")?
        .iter()
        .map(json_int)
        .collect::<Result<Vec<_>>>()?;
    Ok(TorusVariety::new(name, j, ns_basis, polarization))
}

pub fn variety_to_json(v: &TorusVariety) -> Value {
    serde_json::json!({
        "name": v.name(),
        "g": v.g(),
        "J": rat_mat_to_json(v.j()),
        "ns_basis": v.ns_basis().iter().map(int_mat_to_json).collect::<Vec<_>>(),
        "polarization": v.polarization().iter().map(int_to_json).collect::<Vec<_>>(),
    })
}

pub fn parse_variety(text: &str) -> Result<TorusVariety> {
    variety_from_json(&serde_json::from_str(text)?)
}

pub fn read_variety(path: &Path) -> Result<TorusVariety> {
    parse_variety(&std::fs::read_to_string(path)?)
}

/// `{name, class}` where `class` is a square integer matrix.
#[derive(Clone, Debug)]
pub struct ClassFile {
    pub name: String,
    pub class: IntMat,
}

pub fn parse_class_file(text: &str) -> Result<ClassFile> {
    let v: Value = serde_json::from_str(text)?;
    let name = v.get("name").and_then(Value::as_str).unwrap_or("class").to_string();
    let class = json_int_mat(field(&v, "class")?, "class")?;
    if !class.is_square() {
        return Err(Error::Parse("class must be square".into()));
    }
    Ok(ClassFile { name, class })
}

pub fn read_class_file(path: &Path) -> Result<ClassFile> {
    parse_class_file(&std::fs::read_to_string(path)?)
}

/// `{g, generators}`, generators being rational points of ℚ^{2g}.
#[derive(Clone, Debug, Deserialize)]
pub struct SubgroupFile {
    pub g: usize,
    pub generators: Vec<Vec<String>>,
}

impl SubgroupFile {
    pub fn points(&self) -> Result<Vec<Vec<Rat>>> {
        self.generators
            .iter()
            .map(|p| {
                if p.len() != 2 * self.g {
                    return Err(Error::Parse(format!("generator has {} coordinates, expected {}", p.len(), 2 * self.g)));
                }
                p.iter().map(|s| parse_rat(s)).collect()
            })
            .collect()
    }
}

pub fn parse_subgroup_file(text: &str) -> Result<SubgroupFile> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_subgroup_file(path: &Path) -> Result<SubgroupFile> {
    parse_subgroup_file(&std::fs::read_to_string(path)?)
}

/// A class literal `c1*E0+c2*E1-E3` over basis names `E0, E1, …`.
pub fn parse_class_literal(s: &str, basis_len: usize) -> Result<Vec<Int>> {
    let mut coeffs = vec![Int::zero(); basis_len];
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::Parse("empty class literal".into()));
    }
    let mut terms = Vec::new();
    let mut start = 0;
    for (i, ch) in compact.char_indices() {
        if (ch == '+' || ch == '-') && i > 0 {
            terms.push(&compact[start..i]);
            start = i;
        }
    }
    terms.push(&compact[start..]);
    for term in terms {
        let (sign, body) = match term.strip_prefix('-') {
            Some(rest) => (-Int::one(), rest),
            None => (Int::one(), term.strip_prefix('+').unwrap_or(term)),
        };
        let (coef, name) = match body.split_once('*') {
            Some((c, n)) => (parse_int(c)?, n),
            None => (Int::one(), body),
        };
        let index = name
            .strip_prefix('E')
            .and_then(|k| k.parse::<usize>().ok())
            .ok_or_else(|| Error::Parse(format!("unknown basis element {name:?}")))?;
        if index >= basis_len {
            return Err(Error::Parse(format!("E{index} is out of range for an NS basis of size {basis_len}")));
        }
        coeffs[index] += sign * coef;
    }
    Ok(coeffs)
}

/// A slope literal `class/l`; a missing denominator means `l = 1`.
pub fn parse_slope_literal(s: &str, basis_len: usize) -> Result<(Vec<Int>, Int)> {
    let (num, den) = match s.rsplit_once('/') {
        Some((n, d)) => (n, parse_int(d)?),
        None => (s, Int::one()),
    };
    let num = num.trim();
    let num = num.strip_prefix('(').and_then(|n| n.strip_suffix(')')).unwrap_or(num);
    if !den.is_positive() {
        return Err(Error::ZeroDenominator);
    }
    Ok((parse_class_literal(num, basis_len)?, den))
}

pub fn class_literal(coeffs: &[Int]) -> String {
    let mut out = String::new();
    for (k, c) in coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
        if c.is_negative() {
            out.push('-');
        } else if !out.is_empty() {
            out.push('+');
        }
        out.push_str(&format!("{}*E{k}", c.abs()));
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_core::{int, rat};

    #[test]
    fn integers_switch_to_strings_beyond_2_53() {
        assert_eq!(int_to_json(&int(5)), Value::from(5));
        let big = Int::from(1u64 << 53);
        assert_eq!(int_to_json(&big), Value::from("9007199254740992"));
        assert_eq!(int_to_json(&-big), Value::from("-9007199254740992"));
    }

    #[test]
    fn rationals_round_trip() {
        for q in [rat(3, 4), rat(-1, 2), rat(5, 1), rat(0, 1)] {
            assert_eq!(parse_rat(&rat_to_string(&q)).unwrap(), q);
        }
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn class_and_slope_literals() {
        assert_eq!(parse_class_literal("2*E0", 1).unwrap(), vec![int(2)]);
        assert_eq!(parse_class_literal("E0-3*E2 + E1", 3).unwrap(), vec![int(1), int(1), int(-3)]);
        assert_eq!(parse_slope_literal("1*E0/2", 1).unwrap(), (vec![int(1)], int(2)));
        assert_eq!(parse_slope_literal("-E0", 1).unwrap(), (vec![int(-1)], int(1)));
        assert_eq!(parse_slope_literal("(E0-2*E1)/3", 2).unwrap(), (vec![int(1), int(-2)], int(3)));
        assert!(parse_class_literal("E4", 2).is_err());
        assert!(parse_slope_literal("E0/0", 1).is_err());
        assert_eq!(class_literal(&[int(1), int(0), int(-2)]), "1*E0-2*E2");
        let c = [int(3), int(-1)];
        assert_eq!(parse_class_literal(&class_literal(&c), 2).unwrap(), c.to_vec());
    }

    #[test]
    fn variety_round_trip() {
        let v = crate::corpus::e_omega();
        let back = variety_from_json(&variety_to_json(&v)).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.name(), v.name());
        assert!(parse_variety(r#"{"name":"x","g":1,"J":[["0"]],"ns_basis":[],"polarization":[]}"#).is_err());
        assert!(parse_variety("not json").is_err());
    }
}
