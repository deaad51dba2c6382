//! End-to-end tests driving the compiled binary: exit codes, golden files,
//! and the determinism contract. Refresh the checked-in corpus and golden
//! outputs with `UPDATE_GOLDEN=1 cargo test -p hpt-cli -- --test-threads=1`
//! (single-threaded so readers never race the writer).

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hpt::complex::check_maurer_cartan;
use hpt::fixtures;
use hpt::format::{write_document, Document};
use hpt::generator::InstanceGen;
use hpt::suites::{run_suite, SuiteConfig};
use hpt::{GradedMap, Ring};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hpt"))
}

fn run_cli(args: &[&str]) -> Output {
    bin().args(args).output().expect("failed to spawn the binary")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is not UTF-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is not UTF-8")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process was killed by a signal")
}

fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn fixture(name: &str) -> String {
    fixture_path(name).to_string_lossy().into_owned()
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn assert_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).expect("failed to write golden");
        return;
    }
    let expected = fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden {name}; rerun with UPDATE_GOLDEN=1"));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

/// A degree-(-1) perturbation of the minimal circle model: t maps to 2x.
fn model_perturbation() -> Document {
    let model = fixtures::circle_model();
    let delta = GradedMap::from_entries(
        model.module().clone(),
        model.module().clone(),
        -1,
        &[(1, 0, 0, 2)],
    )
    .unwrap();
    Document::Perturbation(check_maurer_cartan(delta, &model).unwrap())
}

/// Every checked-in corpus file together with the value it serializes.
fn corpus() -> Vec<(&'static str, Document)> {
    vec![
        (
            "point.json",
            Document::Complex(fixtures::point(Ring::Integers)),
        ),
        ("interval.json", Document::Complex(fixtures::interval())),
        ("circle.json", Document::Complex(fixtures::circle())),
        (
            "torsion2.json",
            Document::Complex(fixtures::torsion_complex(2)),
        ),
        (
            "interval_sdr.json",
            Document::Retraction(fixtures::interval_sdr()),
        ),
        (
            "circle_sdr.json",
            Document::Retraction(fixtures::circle_sdr()),
        ),
        (
            "interval_perturbation.json",
            Document::Perturbation(fixtures::interval_perturbation()),
        ),
        (
            "interval_feedback_perturbation.json",
            Document::Perturbation(fixtures::interval_feedback_perturbation()),
        ),
        (
            "circle_perturbation.json",
            Document::Perturbation(fixtures::circle_perturbation()),
        ),
        ("model_perturbation.json", model_perturbation()),
        (
            "stack3.json",
            Document::Stack(InstanceGen::new(20, Ring::Integers, 8).stack(3)),
        ),
        (
            "tensor_pair.json",
            Document::Pair(fixtures::interval_sdr(), fixtures::circle_sdr()),
        ),
        ("composite_witness.json", composite_witness()),
    ]
}

/// A pinned generated instance whose two transfer fillers are *not* mutually
/// inverse: the composite `theta . chi` differs from the identity. Kept in
/// the corpus as a concrete witness that the composite's closed form
/// `[d + delta, h] + g^ f^` has real content.
fn composite_witness() -> Document {
    let mut g = InstanceGen::new(21, Ring::Integers, 4);
    let inst = g.sdr();
    Document::Job(inst.sdr, inst.perturbation.delta().clone())
}

#[test]
fn corpus_files_are_canonical() {
    for (name, doc) in corpus() {
        let text = write_document(&doc);
        let path = fixture_path(name);
        if env::var_os("UPDATE_GOLDEN").is_some() {
            fs::write(&path, &text).expect("failed to write fixture");
        }
        let on_disk = fs::read_to_string(&path)
            .unwrap_or_else(|_| panic!("missing fixture {name}; rerun with UPDATE_GOLDEN=1"));
        assert_eq!(on_disk, text, "fixture {name} is stale");
    }
}

#[test]
fn every_corpus_file_validates() {
    for (name, _) in corpus() {
        let out = run_cli(&["validate", &fixture(name)]);
        assert_eq!(exit_code(&out), 0, "{name}: {}", stderr_of(&out));
    }
}

#[test]
fn validate_describes_documents() {
    let out = run_cli(&["validate", &fixture("interval_sdr.json")]);
    assert_golden("validate_interval_sdr.txt", &stdout_of(&out));
    let out = run_cli(&["validate", &fixture("stack3.json")]);
    assert_eq!(stdout_of(&out), "{\"kind\":\"stack\",\"stages\":3}\n");
}

#[test]
fn validate_rejects_the_wrong_homotopy_sign() {
    let good = fs::read_to_string(fixture_path("interval_sdr.json")).unwrap();
    let bad = good.replace(
        "\"h\":{\"degree\":1,\"blocks\":{\"0\":[[0,-1]]}}",
        "\"h\":{\"degree\":1,\"blocks\":{\"0\":[[0,1]]}}",
    );
    assert_ne!(good, bad, "expected to find the homotopy block to flip");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, bad).unwrap();
    let out = run_cli(&["validate", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    assert!(
        stderr_of(&out).contains("Dh = 1 - gf"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn empty_and_malformed_files_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(&empty, "").unwrap();
    let out = run_cli(&["validate", empty.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);

    let missing = dir.path().join("does_not_exist.json");
    let out = run_cli(&["validate", missing.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);

    let out = run_cli(&["homology", &fixture("interval_sdr.json")]);
    assert_eq!(exit_code(&out), 2, "a retraction is not a complex file");
}

#[test]
fn homology_of_the_corpus_complexes() {
    for (input, golden) in [
        ("point.json", "homology_point.txt"),
        ("interval.json", "homology_interval.txt"),
        ("circle.json", "homology_circle.txt"),
        ("torsion2.json", "homology_torsion2.txt"),
    ] {
        let out = run_cli(&["homology", &fixture(input)]);
        assert_eq!(exit_code(&out), 0, "{input}: {}", stderr_of(&out));
        assert_golden(golden, &stdout_of(&out));
    }
}

#[test]
fn perturb_writes_the_interval_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("bundle.json");
    let out = run_cli(&[
        "perturb",
        &fixture("interval_sdr.json"),
        &fixture("interval_perturbation.json"),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert_golden("perturb_interval.json", &text);

    // The perturbed projection kills b and the induced perturbation vanishes.
    match hpt::format::parse_document(&text).unwrap() {
        Document::Bundle(bundle) => {
            assert!(bundle.delta_prime.delta().is_zero());
            let f0 = bundle.result.f().block_or_zero(0);
            assert!(f0.get(0, 0).is_one());
            assert!(f0.get(0, 1).is_zero());
        }
        _ => panic!("perturb must write a bundle document"),
    }
}

#[test]
fn perturb_by_zero_returns_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let zero_path = dir.path().join("zero.json");
    let sdr = fixtures::interval_sdr();
    let zero = check_maurer_cartan(
        GradedMap::zero(sdr.source().module().clone(), sdr.source().module().clone(), -1),
        sdr.source(),
    )
    .unwrap();
    fs::write(&zero_path, write_document(&Document::Perturbation(zero))).unwrap();

    let out_path = dir.path().join("bundle.json");
    let out = run_cli(&[
        "perturb",
        &fixture("interval_sdr.json"),
        zero_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));
    match hpt::format::parse_document(&fs::read_to_string(&out_path).unwrap()).unwrap() {
        Document::Bundle(bundle) => {
            assert_eq!(bundle.result, sdr);
            assert!(bundle.delta_prime.delta().is_zero());
            assert!(bundle.transfer.forward().is_identity());
        }
        _ => panic!("perturb must write a bundle document"),
    }
}

#[test]
fn perturb_rejects_feedback_loops() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("bundle.json");
    let out = run_cli(&[
        "perturb",
        &fixture("interval_sdr.json"),
        &fixture("interval_feedback_perturbation.json"),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    let err = stderr_of(&out);
    assert!(err.contains("NotNilpotent"), "stderr: {err}");
    assert!(err.contains("degree 0"), "stderr: {err}");
    assert!(!out_path.exists(), "no output may be written on failure");
}

#[test]
fn the_composite_witness_is_genuine() {
    let text = fs::read_to_string(fixture_path("composite_witness.json")).unwrap();
    let Ok(Document::Job(sdr, delta)) = hpt::format::parse_document(&text) else {
        panic!("the witness fixture must hold a retraction with a perturbation");
    };
    let delta = check_maurer_cartan(delta, sdr.source()).unwrap();
    let composite = hpt::bpl::check_transfer_composite(&sdr, &delta).unwrap();
    assert!(
        !composite.is_identity(),
        "this instance is kept precisely because its two fillers fail to be mutually inverse"
    );
}

#[test]
fn compose_stacks_the_three_stages() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("composed.json");
    let out = run_cli(&[
        "compose",
        &fixture("stack3.json"),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert_golden("compose_stack3.json", &text);
    let check = run_cli(&["validate", out_path.to_str().unwrap()]);
    assert_eq!(exit_code(&check), 0, "{}", stderr_of(&check));
}

#[test]
fn tensor_combines_the_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("tensored.json");
    let out = run_cli(&[
        "tensor",
        &fixture("tensor_pair.json"),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert_golden("tensor_pair_result.json", &text);
    let check = run_cli(&["validate", out_path.to_str().unwrap()]);
    assert_eq!(exit_code(&check), 0, "{}", stderr_of(&check));
}

#[test]
fn push_along_carries_a_model_perturbation_up() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("pushed.json");
    let out = run_cli(&[
        "push-along",
        &fixture("circle_sdr.json"),
        &fixture("model_perturbation.json"),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert_golden("pushalong_circle.json", &text);
    let check = run_cli(&["validate", out_path.to_str().unwrap()]);
    assert_eq!(exit_code(&check), 0, "{}", stderr_of(&check));
}

#[test]
fn gen_is_deterministic_and_self_validating() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["complex", "sdr", "stacked-sdr", "perturbation", "tensor-pair"] {
        let a = dir.path().join(format!("{kind}_a.json"));
        let b = dir.path().join(format!("{kind}_b.json"));
        for path in [&a, &b] {
            let out = run_cli(&[
                "gen",
                kind,
                "--seed",
                "9",
                "--max-rank",
                "6",
                "--out",
                path.to_str().unwrap(),
            ]);
            assert_eq!(exit_code(&out), 0, "{kind}: {}", stderr_of(&out));
        }
        assert_eq!(
            fs::read(&a).unwrap(),
            fs::read(&b).unwrap(),
            "{kind}: same seed must give identical bytes"
        );
        let check = run_cli(&["validate", a.to_str().unwrap()]);
        assert_eq!(exit_code(&check), 0, "{kind}: {}", stderr_of(&check));
    }
}

#[test]
fn gen_output_is_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sdr.json");
    let out = run_cli(&[
        "gen",
        "sdr",
        "--seed",
        "2",
        "--max-rank",
        "6",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));
    assert_golden("gen_sdr_seed2.json", &fs::read_to_string(&path).unwrap());
}

#[test]
fn gen_round_trips_through_the_parser() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sq.json");
    let out = run_cli(&[
        "gen",
        "sdr",
        "--seed",
        "13",
        "--max-rank",
        "5",
        "--ring",
        "Q",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));
    let text = fs::read_to_string(&path).unwrap();
    let doc = hpt::format::parse_document(&text).unwrap();
    assert_eq!(write_document(&doc), text);
}

#[test]
fn check_runs_suites_and_matches_the_sequential_order() {
    let out = run_cli(&[
        "check", "--suite", "all", "--seed", "1", "--trials", "3", "--max-rank", "5",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));
    let text = stdout_of(&out);
    assert_golden("check_small.txt", &text);

    // The parallel run must print exactly what the sequential library run
    // reports, in the same canonical order.
    let cfg = SuiteConfig {
        seed: 1,
        trials: 3,
        ring: Ring::Integers,
        max_rank: 5,
    };
    let expected: String = run_suite("all", &cfg)
        .unwrap()
        .iter()
        .map(|r| r.line(&Ring::Integers) + "\n")
        .collect();
    assert_eq!(text, expected);
}

#[test]
fn check_single_suite_uses_the_given_seed() {
    let out = run_cli(&[
        "check", "--suite", "vertical", "--seed", "7", "--trials", "4", "--max-rank", "6",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_of(&out));
    assert!(stdout_of(&out).contains("\"seed\":7"));
}

#[test]
fn check_with_zero_trials_prints_nothing() {
    let out = run_cli(&["check", "--suite", "all", "--trials", "0"]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout_of(&out).is_empty());
}

#[test]
fn check_rejects_unknown_suites() {
    let out = run_cli(&["check", "--suite", "nonsense", "--trials", "1"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn usage_errors_from_the_parser_exit_two() {
    let out = run_cli(&["gen", "sdr", "--seed", "1", "--ring", "Zp:6", "--out", "/tmp/x.json"]);
    assert_eq!(exit_code(&out), 2, "6 is not prime");
    let out = run_cli(&["frobnicate"]);
    assert_eq!(exit_code(&out), 2);
}
