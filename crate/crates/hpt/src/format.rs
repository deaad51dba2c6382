//! Canonical JSON file format for complexes, retractions, perturbations,
//! isomorphisms, squares, and perturbation results.
//!
//! Serialization is hand-rolled so that output is *canonical*: keys appear
//! in a fixed order, blocks are sorted by degree, there is no insignificant
//! whitespace, and every value has exactly one rendering. Parsing a
//! canonical file and writing it back reproduces the input byte for byte,
//! which keeps golden files and content-addressed caches stable.
//!
//! Scalars are JSON integers of arbitrary size; rational entries with a
//! nontrivial denominator are strings of the form `"num/den"`. A document's
//! kind is recognized purely from its set of top-level keys.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use serde_json::Value;

use crate::bpl::PerturbedSdr;
use crate::calculus::NonDgIso;
use crate::complex::{check_maurer_cartan, ChainComplex, Perturbation};
use crate::error::{Error, Result};
use crate::graded::{GradedMap, GradedModule};
use crate::matrix::Matrix;
use crate::ring::{Ring, Scalar};
use crate::sdr::{Sdr, SdrSquare};

/// The result of perturbing a retraction, as stored on disk: the new
/// retraction, the induced perturbation of the small end, the transfer
/// isomorphism of the large end, and the nilpotency degrees used by the
/// inversion.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub result: Sdr,
    pub delta_prime: Perturbation,
    pub transfer: NonDgIso,
    pub nilpotency: BTreeMap<i64, usize>,
}

impl Bundle {
    pub fn from_run(run: &PerturbedSdr) -> Bundle {
        Bundle {
            result: run.sdr().clone(),
            delta_prime: run.delta_prime().clone(),
            transfer: run.transfer().clone(),
            nilpotency: run.certificate().indices().clone(),
        }
    }
}

/// Everything the tool can read from or write to a file.
#[derive(Clone, Debug)]
pub enum Document {
    Complex(ChainComplex),
    Retraction(Sdr),
    Perturbation(Perturbation),
    Iso(NonDgIso),
    Square(SdrSquare),
    Bundle(Bundle),
    /// A retraction together with a raw perturbation map; which side of the
    /// retraction the map perturbs is decided by the consuming command.
    Job(Sdr, GradedMap),
    Stack(Vec<Sdr>),
    Pair(Sdr, Sdr),
}

// ---------------------------------------------------------------- writing

fn push_scalar(out: &mut String, s: &Scalar) {
    match s.as_int() {
        Some(n) => out.push_str(&n.to_string()),
        None => {
            out.push('"');
            out.push_str(&s.to_string());
            out.push('"');
        }
    }
}

fn push_matrix(out: &mut String, m: &Matrix) {
    out.push('[');
    for i in 0..m.rows() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            push_scalar(out, m.get(i, j));
        }
        out.push(']');
    }
    out.push(']');
}

fn push_module(out: &mut String, m: &GradedModule) {
    out.push_str("{\"ring\":");
    out.push_str(&Value::String(m.ring().to_string()).to_string());
    out.push_str(",\"ranks\":{");
    for (n, (k, r)) in m.ranks().iter().enumerate() {
        if n > 0 {
            out.push(',');
        }
        out.push_str(&format!("\"{k}\":{r}"));
    }
    out.push('}');
    if !m.labels().is_empty() {
        out.push_str(",\"labels\":{");
        for (n, (k, names)) in m.labels().iter().enumerate() {
            if n > 0 {
                out.push(',');
            }
            out.push_str(&format!("\"{k}\":["));
            for (j, name) in names.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(name.clone()).to_string());
            }
            out.push(']');
        }
        out.push('}');
    }
    out.push('}');
}

fn push_map(out: &mut String, f: &GradedMap) {
    out.push_str("{\"degree\":");
    out.push_str(&f.degree().to_string());
    out.push_str(",\"blocks\":{");
    for (n, (k, block)) in f.blocks().iter().enumerate() {
        if n > 0 {
            out.push(',');
        }
        out.push_str(&format!("\"{k}\":"));
        push_matrix(out, block);
    }
    out.push_str("}}");
}

fn push_complex(out: &mut String, c: &ChainComplex) {
    out.push_str("{\"module\":");
    push_module(out, c.module());
    out.push_str(",\"d\":");
    push_map(out, c.d());
    out.push('}');
}

fn push_sdr(out: &mut String, s: &Sdr) {
    out.push_str("{\"source\":");
    push_complex(out, s.source());
    out.push_str(",\"target\":");
    push_complex(out, s.target());
    out.push_str(",\"f\":");
    push_map(out, s.f());
    out.push_str(",\"g\":");
    push_map(out, s.g());
    out.push_str(",\"h\":");
    push_map(out, s.h());
    out.push('}');
}

fn push_perturbation(out: &mut String, p: &Perturbation) {
    out.push_str("{\"complex\":");
    push_complex(out, p.complex());
    out.push_str(",\"delta\":");
    push_map(out, p.delta());
    out.push('}');
}

fn push_iso(out: &mut String, iso: &NonDgIso) {
    out.push_str("{\"source\":");
    push_complex(out, iso.source());
    out.push_str(",\"target\":");
    push_complex(out, iso.target());
    out.push_str(",\"alpha\":");
    push_map(out, iso.forward());
    out.push_str(",\"alpha_inv\":");
    push_map(out, iso.inverse());
    out.push('}');
}

fn push_square(out: &mut String, sq: &SdrSquare) {
    out.push_str("{\"top\":");
    push_sdr(out, sq.top());
    out.push_str(",\"bottom\":");
    push_sdr(out, sq.bottom());
    out.push_str(",\"u\":");
    push_map(out, sq.u());
    out.push_str(",\"v\":");
    push_map(out, sq.v());
    out.push('}');
}

fn push_bundle(out: &mut String, b: &Bundle) {
    out.push_str("{\"result\":");
    push_sdr(out, &b.result);
    out.push_str(",\"delta_prime\":");
    push_map(out, b.delta_prime.delta());
    out.push_str(",\"transfer\":");
    push_iso(out, &b.transfer);
    out.push_str(",\"nilpotency\":{");
    for (n, (k, idx)) in b.nilpotency.iter().enumerate() {
        if n > 0 {
            out.push(',');
        }
        out.push_str(&format!("\"{k}\":{idx}"));
    }
    out.push_str("}}");
}

/// Renders a document in canonical form. The result ends with a newline.
pub fn write_document(doc: &Document) -> String {
    let mut out = String::new();
    match doc {
        Document::Complex(c) => push_complex(&mut out, c),
        Document::Retraction(s) => push_sdr(&mut out, s),
        Document::Perturbation(p) => push_perturbation(&mut out, p),
        Document::Iso(iso) => push_iso(&mut out, iso),
        Document::Square(sq) => push_square(&mut out, sq),
        Document::Bundle(b) => push_bundle(&mut out, b),
        Document::Job(sdr, delta) => {
            out.push_str("{\"sdr\":");
            push_sdr(&mut out, sdr);
            out.push_str(",\"delta\":");
            push_map(&mut out, delta);
            out.push('}');
        }
        Document::Stack(stages) => {
            out.push_str("{\"stages\":[");
            for (n, s) in stages.iter().enumerate() {
                if n > 0 {
                    out.push(',');
                }
                push_sdr(&mut out, s);
            }
            out.push_str("]}");
        }
        Document::Pair(left, right) => {
            out.push_str("{\"left\":");
            push_sdr(&mut out, left);
            out.push_str(",\"right\":");
            push_sdr(&mut out, right);
            out.push('}');
        }
    }
    out.push('\n');
    out
}

// ---------------------------------------------------------------- parsing

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a serde_json::Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::Parse(format!("{what} must be a JSON object")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::Parse(format!("{what} must be a JSON array")))
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::Parse(format!("missing field {key:?}")))
}

/// Reads an object whose keys are integer degrees rendered as strings, e.g.
/// `{"-1": ..., "0": ...}`.
fn degree_entries<'a>(v: &'a Value, what: &str) -> Result<Vec<(i64, &'a Value)>> {
    let obj = as_object(v, what)?;
    let mut entries = Vec::new();
    for (key, value) in obj {
        let degree = key.parse::<i64>().map_err(|_| {
            Error::Parse(format!("{what} keys must be integer degrees, got {key:?}"))
        })?;
        entries.push((degree, value));
    }
    Ok(entries)
}

fn parse_bigint(v: &Value, what: &str) -> Result<BigInt> {
    match v {
        Value::Number(n) => n
            .to_string()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("{what} must be an integer, got {n}"))),
        _ => Err(Error::Parse(format!("{what} must be a number"))),
    }
}

fn parse_i64(v: &Value, what: &str) -> Result<i64> {
    i64::try_from(parse_bigint(v, what)?)
        .map_err(|_| Error::Parse(format!("{what} out of range")))
}

fn parse_usize(v: &Value, what: &str) -> Result<usize> {
    usize::try_from(parse_bigint(v, what)?)
        .map_err(|_| Error::Parse(format!("{what} must be a nonnegative integer")))
}

fn parse_scalar(v: &Value, ring: &Ring) -> Result<Scalar> {
    match v {
        Value::Number(_) => Ok(ring.from_bigint(parse_bigint(v, "matrix entry")?)),
        Value::String(s) => {
            let (num, den) = s
                .split_once('/')
                .ok_or_else(|| Error::Parse(format!("malformed scalar {s:?}")))?;
            let num = num
                .parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("malformed numerator in {s:?}")))?;
            let den = den
                .parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("malformed denominator in {s:?}")))?;
            ring.from_ratio(num, den)
        }
        _ => Err(Error::Parse("matrix entries must be integers or \"num/den\" strings".into())),
    }
}

fn parse_module(v: &Value) -> Result<GradedModule> {
    let obj = as_object(v, "module")?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "ring" | "ranks" | "labels") {
            return Err(Error::Parse(format!("unexpected module field {key:?}")));
        }
    }
    let ring = Ring::parse(
        field(obj, "ring")?
            .as_str()
            .ok_or_else(|| Error::Parse("ring must be a string".into()))?,
    )?;
    let mut ranks = Vec::new();
    for (degree, rank) in degree_entries(field(obj, "ranks")?, "ranks")? {
        ranks.push((degree, parse_usize(rank, "rank")?));
    }
    let mut module = GradedModule::new(ring, ranks);
    if let Some(labels) = obj.get("labels") {
        for (degree, names_value) in degree_entries(labels, "labels")? {
            let mut names = Vec::new();
            for name in as_array(names_value, "label names")? {
                names.push(
                    name.as_str()
                        .ok_or_else(|| Error::Parse("labels must be strings".into()))?
                        .to_string(),
                );
            }
            module.set_labels(degree, names)?;
        }
    }
    Ok(module)
}

fn parse_map(v: &Value, source: &GradedModule, target: &GradedModule) -> Result<GradedMap> {
    let obj = as_object(v, "map")?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "degree" | "blocks") {
            return Err(Error::Parse(format!("unexpected map field {key:?}")));
        }
    }
    let degree = parse_i64(field(obj, "degree")?, "map degree")?;
    let ring = *source.ring();
    let mut blocks = Vec::new();
    for (k, rows_value) in degree_entries(field(obj, "blocks")?, "blocks")? {
        let rows = as_array(rows_value, "block rows")?;
        let mut parsed: Vec<Vec<Scalar>> = Vec::new();
        for row in rows {
            let row = as_array(row, "matrix row")?;
            let mut entries = Vec::new();
            for entry in row {
                entries.push(parse_scalar(entry, &ring)?);
            }
            parsed.push(entries);
        }
        let height = parsed.len();
        let width = parsed.first().map_or(0, |r| r.len());
        if parsed.iter().any(|r| r.len() != width) {
            return Err(Error::Parse("matrix rows must all have the same length".into()));
        }
        let block = Matrix::from_fn(height, width, |i, j| parsed[i][j].clone());
        blocks.push((k, block));
    }
    GradedMap::from_blocks(source.clone(), target.clone(), degree, blocks)
}

fn parse_complex(v: &Value) -> Result<ChainComplex> {
    let obj = as_object(v, "complex")?;
    let module = parse_module(field(obj, "module")?)?;
    let d = parse_map(field(obj, "d")?, &module, &module)?;
    ChainComplex::new(module, d)
}

fn parse_sdr(v: &Value) -> Result<Sdr> {
    let obj = as_object(v, "retraction")?;
    let source = parse_complex(field(obj, "source")?)?;
    let target = parse_complex(field(obj, "target")?)?;
    let f = parse_map(field(obj, "f")?, source.module(), target.module())?;
    let g = parse_map(field(obj, "g")?, target.module(), source.module())?;
    let h = parse_map(field(obj, "h")?, source.module(), source.module())?;
    Sdr::new(source, target, f, g, h)
}

fn parse_perturbation(v: &Value) -> Result<Perturbation> {
    let obj = as_object(v, "perturbation")?;
    let complex = parse_complex(field(obj, "complex")?)?;
    let delta = parse_map(field(obj, "delta")?, complex.module(), complex.module())?;
    check_maurer_cartan(delta, &complex)
}

fn parse_iso(v: &Value) -> Result<NonDgIso> {
    let obj = as_object(v, "isomorphism")?;
    let source = parse_complex(field(obj, "source")?)?;
    let target = parse_complex(field(obj, "target")?)?;
    let alpha = parse_map(field(obj, "alpha")?, source.module(), target.module())?;
    let alpha_inv = parse_map(field(obj, "alpha_inv")?, target.module(), source.module())?;
    NonDgIso::new(source, target, alpha, alpha_inv)
}

fn parse_square(v: &Value) -> Result<SdrSquare> {
    let obj = as_object(v, "square")?;
    let top = parse_sdr(field(obj, "top")?)?;
    let bottom = parse_sdr(field(obj, "bottom")?)?;
    let u = parse_map(field(obj, "u")?, top.source().module(), bottom.source().module())?;
    let v_map = parse_map(field(obj, "v")?, top.target().module(), bottom.target().module())?;
    SdrSquare::new(top, bottom, u, v_map)
}

fn parse_bundle(v: &Value) -> Result<Bundle> {
    let obj = as_object(v, "bundle")?;
    let result = parse_sdr(field(obj, "result")?)?;
    let module = result.target().module().clone();
    let delta_prime = parse_map(field(obj, "delta_prime")?, &module, &module)?;
    // The stored small end is already perturbed; undo the perturbation to
    // recover the complex the induced perturbation lives on.
    let original_d = result.target().d().sub(&delta_prime)?;
    let original = ChainComplex::new(module, original_d)?;
    let delta_prime = check_maurer_cartan(delta_prime, &original)?;
    let transfer = parse_iso(field(obj, "transfer")?)?;
    let mut nilpotency = BTreeMap::new();
    for (k, idx) in degree_entries(field(obj, "nilpotency")?, "nilpotency")? {
        nilpotency.insert(k, parse_usize(idx, "index")?);
    }
    Ok(Bundle {
        result,
        delta_prime,
        transfer,
        nilpotency,
    })
}

/// Parses a document, recognizing its kind from the set of top-level keys.
/// Structural problems surface as [`Error::Parse`]; violations of the
/// mathematical side conditions surface as the corresponding checked error.
pub fn parse_document(text: &str) -> Result<Document> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))?;
    let obj = as_object(&v, "document")?;
    let mut keys: Vec<&str> = obj.keys().map(|s| s.as_str()).collect();
    keys.sort_unstable();
    match keys.as_slice() {
        ["d", "module"] => Ok(Document::Complex(parse_complex(&v)?)),
        ["f", "g", "h", "source", "target"] => Ok(Document::Retraction(parse_sdr(&v)?)),
        ["complex", "delta"] => Ok(Document::Perturbation(parse_perturbation(&v)?)),
        ["alpha", "alpha_inv", "source", "target"] => Ok(Document::Iso(parse_iso(&v)?)),
        ["bottom", "top", "u", "v"] => Ok(Document::Square(parse_square(&v)?)),
        ["delta_prime", "nilpotency", "result", "transfer"] => {
            Ok(Document::Bundle(parse_bundle(&v)?))
        }
        ["delta", "sdr"] => {
            let sdr = parse_sdr(field(obj, "sdr")?)?;
            let module = sdr.source().module().clone();
            let delta = parse_map(field(obj, "delta")?, &module, &module)?;
            Ok(Document::Job(sdr, delta))
        }
        ["stages"] => {
            let mut stages = Vec::new();
            for item in as_array(field(obj, "stages")?, "stages")? {
                stages.push(parse_sdr(item)?);
            }
            Ok(Document::Stack(stages))
        }
        ["left", "right"] => Ok(Document::Pair(
            parse_sdr(field(obj, "left")?)?,
            parse_sdr(field(obj, "right")?)?,
        )),
        _ => Err(Error::Parse(format!(
            "unrecognized document with keys {keys:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpl::perturb_sdr;
    use crate::fixtures;
    use crate::generator::InstanceGen;

    fn round_trip(doc: &Document) -> String {
        let text = write_document(doc);
        let parsed = parse_document(&text).unwrap();
        let again = write_document(&parsed);
        assert_eq!(text, again);
        text
    }

    #[test]
    fn complexes_round_trip_byte_for_byte() {
        round_trip(&Document::Complex(fixtures::interval()));
        round_trip(&Document::Complex(fixtures::circle()));
        round_trip(&Document::Complex(fixtures::torsion_complex(12)));
    }

    #[test]
    fn retractions_and_perturbations_round_trip() {
        round_trip(&Document::Retraction(fixtures::interval_sdr()));
        round_trip(&Document::Retraction(fixtures::circle_sdr()));
        round_trip(&Document::Perturbation(fixtures::circle_perturbation()));
        let sdr = fixtures::interval_sdr();
        let delta = fixtures::interval_perturbation().delta().clone();
        round_trip(&Document::Job(sdr, delta));
    }

    #[test]
    fn bundles_round_trip() {
        let run = perturb_sdr(&fixtures::circle_sdr(), &fixtures::circle_perturbation()).unwrap();
        round_trip(&Document::Bundle(Bundle::from_run(&run)));
    }

    #[test]
    fn squares_stacks_and_pairs_round_trip() {
        let mut g = InstanceGen::new(5, Ring::Integers, 5);
        round_trip(&Document::Square(g.square()));
        let top = fixtures::interval_sdr();
        round_trip(&Document::Stack(vec![top.clone(), Sdr::identity(top.target())]));
        round_trip(&Document::Pair(top.clone(), top));
        round_trip(&Document::Iso(g.endo_iso(&fixtures::circle())));
    }

    #[test]
    fn rational_scalars_use_fraction_strings() {
        let ring = Ring::Rationals;
        let module = GradedModule::concentrated(ring, 0, 1);
        let half = ring.from_ratio(BigInt::from(1), BigInt::from(2)).unwrap();
        let halved = GradedMap::identity(&module).scale(&half);
        let mut out = String::new();
        push_map(&mut out, &halved);
        assert!(out.contains("\"1/2\""));
        let parsed =
            parse_map(&serde_json::from_str(&out).unwrap(), &module, &module).unwrap();
        assert_eq!(parsed, halved);

        let whole = GradedMap::identity(&module).scale_i64(3);
        let mut out = String::new();
        push_map(&mut out, &whole);
        assert!(out.contains("[[3]]"), "integral rationals print as integers: {out}");
    }

    #[test]
    fn labels_survive_a_round_trip() {
        let text = round_trip(&Document::Complex(fixtures::interval()));
        assert!(text.contains("\"labels\":{\"0\":[\"a\",\"b\"],\"1\":[\"e\"]}"));
    }

    #[test]
    fn malformed_input_is_a_parse_error() {
        for text in [
            "not json",
            "[1,2]",
            "{\"module\":{\"ring\":\"Z\",\"ranks\":{}},\"extra\":1}",
            "{\"module\":{\"ring\":\"Z\",\"ranks\":{\"0\":1}},\"d\":{\"degree\":-1,\"blocks\":{\"0\":[[0.5]]}}}",
            "{\"module\":{\"ring\":\"K\",\"ranks\":{}},\"d\":{\"degree\":-1,\"blocks\":{}}}",
            "{\"module\":{\"ring\":\"Z\",\"ranks\":{\"x\":1}},\"d\":{\"degree\":-1,\"blocks\":{}}}",
        ] {
            let err = parse_document(text).unwrap_err();
            assert!(err.is_usage(), "expected usage error for {text}: {err}");
        }
    }

    #[test]
    fn mathematical_violations_are_not_usage_errors() {
        let text = "{\"module\":{\"ring\":\"Z\",\"ranks\":{\"0\":1,\"1\":1,\"2\":1}},\
                    \"d\":{\"degree\":-1,\"blocks\":{\"1\":[[1]],\"2\":[[1]]}}}";
        let err = parse_document(text).unwrap_err();
        assert!(!err.is_usage(), "a differential that fails to square to zero is mathematical: {err}");
    }

    #[test]
    fn huge_integers_survive() {
        let module = GradedModule::concentrated(Ring::Integers, 0, 1);
        let big = BigInt::parse_bytes(b"123456789012345678901234567890", 10).unwrap();
        let m = GradedMap::from_blocks(
            module.clone(),
            module.clone(),
            0,
            vec![(0, Matrix::from_fn(1, 1, |_, _| Scalar::Int(big.clone())))],
        )
        .unwrap();
        let mut out = String::new();
        push_map(&mut out, &m);
        assert!(out.contains("123456789012345678901234567890"));
        let parsed = parse_map(&serde_json::from_str(&out).unwrap(), &module, &module).unwrap();
        assert_eq!(parsed, m);
    }
}
