//! Command-line front end for the chain-complex toolkit: file validation,
//! perturbation, stacking, tensoring, homology, deterministic instance
//! generation, and randomized property suites.
//!
//! Exit codes: 0 on success, 1 on a mathematical violation or counterexample,
//! 2 on malformed input or I/O problems.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use clap::{Parser, Subcommand, ValueEnum};

use hpt::bpl::perturb_sdr;
use hpt::format::{parse_document, write_document, Bundle, Document};
use hpt::generator::InstanceGen;
use hpt::homology::{homology, HomologySummary};
use hpt::suites::{derive_seed, run_suite, SuiteConfig, SuiteReport, SUITE_NAMES};
use hpt::{ChainComplex, Error, Perturbation, Result, Ring, Sdr};

#[derive(Parser)]
#[command(name = "hpt", version, about = "Exact homological perturbation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a file and re-verify every certificate it carries.
    Validate { input: PathBuf },
    /// Apply a perturbation file to a retraction file and write the
    /// resulting bundle (new retraction, induced perturbation, transfer
    /// map, nilpotency indices).
    Perturb {
        sdr: PathBuf,
        delta: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stack the stages of a tower file into one retraction.
    Compose {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tensor the two retractions of a pair file.
    Tensor {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Push a perturbation of the small end of a retraction along it.
    PushAlong {
        sdr: PathBuf,
        delta: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the homology of an integral complex file.
    Homology { input: PathBuf },
    /// Write a deterministic pseudorandom instance.
    Gen {
        kind: GenKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        max_rank: usize,
        #[arg(long, default_value = "Z")]
        ring: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run randomized property suites and print one report line per theorem.
    Check {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 25)]
        trials: usize,
        #[arg(long, default_value_t = 6)]
        max_rank: usize,
        #[arg(long, default_value = "Z")]
        ring: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Complex,
    Sdr,
    StackedSdr,
    Perturbation,
    TensorPair,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn read_document(path: &Path) -> Result<Document> {
    let text = fs::read_to_string(path)?;
    parse_document(&text)
}

fn write_out(path: &Path, doc: &Document) -> Result<()> {
    fs::write(path, write_document(doc))?;
    Ok(())
}

fn expect_retraction(doc: Document, path: &Path) -> Result<Sdr> {
    match doc {
        Document::Retraction(s) => Ok(s),
        _ => Err(Error::Parse(format!(
            "{} is not a retraction file",
            path.display()
        ))),
    }
}

fn expect_perturbation(doc: Document, path: &Path) -> Result<Perturbation> {
    match doc {
        Document::Perturbation(p) => Ok(p),
        _ => Err(Error::Parse(format!(
            "{} is not a perturbation file",
            path.display()
        ))),
    }
}

fn expect_complex(doc: Document, path: &Path) -> Result<ChainComplex> {
    match doc {
        Document::Complex(c) => Ok(c),
        _ => Err(Error::Parse(format!(
            "{} is not a complex file",
            path.display()
        ))),
    }
}

/// One canonical JSON line summarizing a successfully validated document.
fn describe(doc: &Document) -> String {
    match doc {
        Document::Complex(c) => format!(
            "{{\"kind\":\"complex\",\"ring\":\"{}\",\"total_rank\":{}}}",
            c.ring(),
            c.module().total_rank()
        ),
        Document::Retraction(s) => format!(
            "{{\"kind\":\"retraction\",\"ring\":\"{}\",\"source_rank\":{},\"target_rank\":{}}}",
            s.ring(),
            s.source().module().total_rank(),
            s.target().module().total_rank()
        ),
        Document::Perturbation(p) => format!(
            "{{\"kind\":\"perturbation\",\"ring\":\"{}\",\"zero\":{}}}",
            p.complex().ring(),
            p.delta().is_zero()
        ),
        Document::Iso(i) => format!("{{\"kind\":\"isomorphism\",\"degree\":{}}}", i.degree()),
        Document::Square(_) => "{\"kind\":\"square\"}".to_string(),
        Document::Bundle(b) => format!(
            "{{\"kind\":\"bundle\",\"max_nilpotency\":{}}}",
            b.nilpotency.values().copied().max().unwrap_or(0)
        ),
        Document::Job(..) => "{\"kind\":\"job\"}".to_string(),
        Document::Stack(stages) => format!("{{\"kind\":\"stack\",\"stages\":{}}}", stages.len()),
        Document::Pair(..) => "{\"kind\":\"pair\"}".to_string(),
    }
}

/// Homology as one canonical JSON object keyed by degree; only nonzero
/// groups appear.
fn homology_json(summary: &HomologySummary) -> String {
    let mut out = String::from("{");
    for (n, (degree, group)) in summary.groups().iter().enumerate() {
        if n > 0 {
            out.push(',');
        }
        let torsion = group
            .torsion()
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&format!(
            "\"{degree}\":{{\"betti\":{},\"torsion\":[{torsion}]}}",
            group.free_rank()
        ));
    }
    out.push('}');
    out
}

/// Runs every suite on its own thread with a seed derived per suite; the
/// reports come back in canonical suite order regardless of scheduling.
fn collect_all(seed: u64, trials: usize, ring: Ring, max_rank: usize) -> Result<Vec<SuiteReport>> {
    let grouped = thread::scope(|scope| {
        let handles: Vec<_> = SUITE_NAMES
            .iter()
            .map(|name| {
                let cfg = SuiteConfig {
                    seed: derive_seed(seed, name),
                    trials,
                    ring,
                    max_rank,
                };
                scope.spawn(move || run_suite(name, &cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("suite thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(grouped.into_iter().flatten().collect())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate { input } => {
            let doc = read_document(&input)?;
            println!("{}", describe(&doc));
            Ok(())
        }
        Command::Perturb { sdr, delta, out } => {
            let sdr = expect_retraction(read_document(&sdr)?, &sdr)?;
            let delta = expect_perturbation(read_document(&delta)?, &delta)?;
            let result = perturb_sdr(&sdr, &delta)?;
            write_out(&out, &Document::Bundle(Bundle::from_run(&result)))
        }
        Command::Compose { input, out } => {
            let stages = match read_document(&input)? {
                Document::Stack(stages) if !stages.is_empty() => stages,
                Document::Stack(_) => {
                    return Err(Error::Parse("cannot compose an empty stack".into()))
                }
                _ => {
                    return Err(Error::Parse(format!(
                        "{} is not a stack file",
                        input.display()
                    )))
                }
            };
            let mut acc = stages[0].clone();
            for next in &stages[1..] {
                acc = acc.compose(next)?;
            }
            write_out(&out, &Document::Retraction(acc))
        }
        Command::Tensor { input, out } => {
            let (left, right) = match read_document(&input)? {
                Document::Pair(l, r) => (l, r),
                _ => {
                    return Err(Error::Parse(format!(
                        "{} is not a pair file",
                        input.display()
                    )))
                }
            };
            write_out(&out, &Document::Retraction(left.tensor(&right)?))
        }
        Command::PushAlong { sdr, delta, out } => {
            let sdr = expect_retraction(read_document(&sdr)?, &sdr)?;
            let delta = expect_perturbation(read_document(&delta)?, &delta)?;
            let (pushed, induced) = sdr.push_along(&delta)?;
            write_out(&out, &Document::Job(pushed, induced.delta().clone()))
        }
        Command::Homology { input } => {
            let complex = expect_complex(read_document(&input)?, &input)?;
            if *complex.ring() != Ring::Integers {
                return Err(Error::Parse("homology requires a complex over Z".into()));
            }
            println!("{}", homology_json(&homology(&complex)));
            Ok(())
        }
        Command::Gen {
            kind,
            seed,
            max_rank,
            ring,
            out,
        } => {
            let ring = Ring::parse(&ring)?;
            let mut g = InstanceGen::new(seed, ring, max_rank);
            let doc = match kind {
                GenKind::Complex => Document::Complex(g.complex()),
                GenKind::Sdr => Document::Retraction(g.sdr().sdr),
                GenKind::StackedSdr => Document::Stack(g.stack(3)),
                GenKind::Perturbation => {
                    let c = g.complex();
                    Document::Perturbation(g.complex_perturbation(&c))
                }
                GenKind::TensorPair => Document::Pair(g.sdr().sdr, g.sdr().sdr),
            };
            write_out(&out, &doc)
        }
        Command::Check {
            suite,
            seed,
            trials,
            max_rank,
            ring,
        } => {
            let ring = Ring::parse(&ring)?;
            if trials == 0 {
                return Ok(());
            }
            let reports = if suite == "all" {
                collect_all(seed, trials, ring, max_rank)?
            } else {
                let cfg = SuiteConfig {
                    seed,
                    trials,
                    ring,
                    max_rank,
                };
                run_suite(&suite, &cfg)?
            };
            let mut first_failure = None;
            for report in &reports {
                println!("{}", report.line(&ring));
                if !report.passed() && first_failure.is_none() {
                    first_failure = report.counterexample.clone();
                }
            }
            match first_failure {
                None => Ok(()),
                Some(msg) => Err(Error::Functoriality(format!("suite failure: {msg}"))),
            }
        }
    }
}
