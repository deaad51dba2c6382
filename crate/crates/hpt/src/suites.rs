//! Randomized verification suites.
//!
//! Each suite draws instances from [`InstanceGen`] and checks one family of
//! identities, reporting one line per theorem. Reports are deterministic
//! functions of the seed, the ring, the size cap, and the trial count, so a
//! failing run can be replayed exactly.

use crate::bpl::{
    check_iteration, check_tensor_functoriality, check_transfer_composite,
    check_vertical_functoriality, perturb_sdr, transfer_iso,
};
use crate::calculus::{
    conjugation_defect, inverse_derivative_defect, left_mc_defect, right_flow_defect,
    transfer_functor, TransferGenerator, TransferObject,
};
use crate::error::{Error, Result};
use crate::generator::InstanceGen;
use crate::graded::GradedMap;
use crate::homology::verify_equivalence;
use crate::ring::Ring;
use crate::sdr::{Sdr, SdrSquare};

/// Shared knobs for one suite run.
#[derive(Clone, Copy, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: usize,
    pub ring: Ring,
    pub max_rank: usize,
}

/// The outcome of hammering one theorem with random instances.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub theorem: &'static str,
    pub trials: usize,
    pub failures: usize,
    pub seed: u64,
    pub max_rank: usize,
    /// Description of the first failing trial, if any.
    pub counterexample: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    /// One canonical JSON line per theorem, stable across runs.
    pub fn line(&self, ring: &Ring) -> String {
        format!(
            "{{\"suite\":\"{}\",\"theorem\":\"{}\",\"trials\":{},\"failures\":{},\"seed\":{},\"max_rank\":{},\"ring\":\"{}\"}}",
            self.suite, self.theorem, self.trials, self.failures, self.seed, self.max_rank, ring
        )
    }
}

/// Every suite name accepted by [`run_suite`], in execution order.
pub const SUITE_NAMES: &[&str] = &[
    "identities",
    "sdr",
    "bpl",
    "vertical",
    "iteration",
    "tensor",
    "homology",
];

/// A stable per-suite seed so parallel suites draw independent streams.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    name.bytes().fold(
        seed ^ 0xcbf2_9ce4_8422_2325,
        |acc, b| (acc ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3),
    )
}

fn run<F>(
    suite: &'static str,
    theorem: &'static str,
    cfg: &SuiteConfig,
    mut body: F,
) -> SuiteReport
where
    F: FnMut(&mut InstanceGen) -> Result<()>,
{
    let mut gen = InstanceGen::new(cfg.seed, cfg.ring, cfg.max_rank);
    let mut failures = 0;
    let mut counterexample = None;
    for trial in 0..cfg.trials {
        if let Err(e) = body(&mut gen) {
            failures += 1;
            if counterexample.is_none() {
                counterexample = Some(format!("trial {trial}: {e}"));
            }
        }
    }
    SuiteReport {
        suite,
        theorem,
        trials: cfg.trials,
        failures,
        seed: cfg.seed,
        max_rank: cfg.max_rank,
        counterexample,
    }
}

fn expect_zero(map: &GradedMap, what: &str) -> Result<()> {
    if map.is_zero() {
        Ok(())
    } else {
        Err(Error::Functoriality(format!("{what} has a nonzero defect")))
    }
}

fn expect_true(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Functoriality(what.to_string()))
    }
}

/// Derivative identities of the operator calculus on invertible maps.
pub fn suite_identities(cfg: &SuiteConfig) -> Vec<SuiteReport> {
    vec![
        run("identities", "inverse-derivative", cfg, |g| {
            let c = g.complex();
            let iso = g.endo_iso(&c);
            expect_zero(&inverse_derivative_defect(&iso)?, "derivative of the inverse")
        }),
        run("identities", "log-derivative-maurer-cartan", cfg, |g| {
            let c = g.complex();
            let iso = g.endo_iso(&c);
            expect_zero(&left_mc_defect(&iso)?, "left log derivative")
        }),
        run("identities", "flow-equation", cfg, |g| {
            let c = g.complex();
            let iso = g.endo_iso(&c);
            expect_zero(&right_flow_defect(&iso)?, "right log derivative")
        }),
        run("identities", "conjugation-intertwiner", cfg, |g| {
            let c = g.complex();
            let iso = g.endo_iso(&c);
            let f = g.map_between(c.module(), c.module(), 0);
            expect_zero(&conjugation_defect(&iso, &f)?, "conjugation")?;
            let f1 = g.map_between(c.module(), c.module(), 1);
            expect_zero(&conjugation_defect(&iso, &f1)?, "degree-1 conjugation")
        }),
        run("identities", "transfer-functoriality", cfg, |g| {
            let complexes = [g.complex(), g.complex(), g.complex()];
            let objects: Vec<TransferObject> = complexes
                .iter()
                .map(|c| {
                    let (a, a_inv) = g.unimodular(c.module());
                    TransferObject::new(c, a, a_inv)
                })
                .collect::<Result<_>>()?;
            let u = g.map_between(complexes[0].module(), complexes[1].module(), 0);
            let v = g.map_between(complexes[1].module(), complexes[2].module(), 0);
            let w = v.compose(&u)?;
            let gens = [
                TransferGenerator::new("u", 0, 1, u),
                TransferGenerator::new("v", 1, 2, v),
                TransferGenerator::new("w", 0, 2, w),
            ];
            let out = transfer_functor(&objects, &gens, false)?;
            expect_true(
                out[2].conjugated == out[1].conjugated.compose(&out[0].conjugated)?,
                "transfer does not preserve composition",
            )
        }),
    ]
}

/// The algebra of retractions: relations, stacking, tensoring, pushing
/// perturbations along, and naturality squares.
pub fn suite_sdr(cfg: &SuiteConfig) -> Vec<SuiteReport> {
    vec![
        run("sdr", "retraction-relations", cfg, |g| {
            let inst = g.sdr();
            Sdr::new(
                inst.sdr.source().clone(),
                inst.sdr.target().clone(),
                inst.sdr.f().clone(),
                inst.sdr.g().clone(),
                inst.sdr.h().clone(),
            )
            .map(|_| ())
        }),
        run("sdr", "stacking", cfg, |g| {
            let tower = g.tower();
            tower.top.compose(&tower.bottom).map(|_| ())
        }),
        run("sdr", "tensor-stacking", cfg, |g| {
            let a = g.sdr().sdr;
            let b = g.sdr().sdr;
            a.tensor(&b).map(|_| ())
        }),
        run("sdr", "push-along", cfg, |g| {
            let inst = g.sdr();
            let on_target = g.complex_perturbation(inst.sdr.target());
            inst.sdr.push_along(&on_target).map(|_| ())
        }),
        run("sdr", "square-naturality", cfg, |g| {
            let sq = g.square();
            SdrSquare::new(
                sq.top().clone(),
                sq.bottom().clone(),
                sq.u().clone(),
                sq.v().clone(),
            )
            .map(|_| ())
        }),
        run("sdr", "square-composition", cfg, |g| {
            let (first, second) = g.square_stack();
            first.compose_v(&second)?;
            let (left, right) = g.square_row();
            left.compose_h(&right).map(|_| ())
        }),
    ]
}

/// The perturbation engine: the primary run, the closed form of the two
/// transfer composites, the factored log derivative of the transfer iso, and
/// neutrality of the zero perturbation.
pub fn suite_bpl(cfg: &SuiteConfig) -> Vec<SuiteReport> {
    vec![
        run("bpl", "perturbation", cfg, |g| {
            let inst = g.sdr();
            perturb_sdr(&inst.sdr, &inst.perturbation).map(|_| ())
        }),
        run("bpl", "transfer-composite", cfg, |g| {
            let inst = g.sdr();
            check_transfer_composite(&inst.sdr, &inst.perturbation).map(|_| ())
        }),
        run("bpl", "transfer-iso", cfg, |g| {
            let inst = g.sdr();
            transfer_iso(&inst.sdr, &inst.perturbation).map(|_| ())
        }),
        run("bpl", "zero-perturbation", cfg, |g| {
            let inst = g.sdr();
            let zero = crate::complex::Perturbation::zero(inst.sdr.source());
            let out = perturb_sdr(&inst.sdr, &zero)?;
            expect_true(*out.sdr() == inst.sdr, "zero perturbation changed the retraction")?;
            expect_true(
                out.transfer().forward().is_identity(),
                "zero perturbation produced a nontrivial transfer",
            )
        }),
    ]
}

/// Pushing a perturbation through a two-stage tower in one go agrees with
/// doing it stage by stage.
pub fn suite_vertical(cfg: &SuiteConfig) -> Vec<SuiteReport> {
    vec![run("vertical", "vertical-functoriality", cfg, |g| {
        let tower = g.tower();
        check_vertical_functoriality(&tower.top, &tower.bottom, &tower.perturbation)
    })]
}

/// Perturbing twice agrees with perturbing once by the sum.
pub fn suite_iteration(cfg: &SuiteConfig) -> Vec<SuiteReport> {
    vec![run("iteration", "iteration", cfg, |g| {
        let inst = g.sdr();
        check_iteration(&inst.sdr, &inst.perturbation, &inst.second)
    })]
}

/// Perturbing both tensor factors at once transfers factorwise.
pub fn suite_tensor(cfg: &SuiteConfig) -> Vec<SuiteReport> {
    vec![run("tensor", "tensor-functoriality", cfg, |g| {
        let left = g.sdr();
        let right = g.sdr();
        check_tensor_functoriality(
            &left.sdr,
            &right.sdr,
            &left.perturbation,
            &right.perturbation,
        )
    })]
}

/// Retractions preserve homology, before and after perturbing.
pub fn suite_homology(cfg: &SuiteConfig) -> Vec<SuiteReport> {
    vec![
        run("homology", "equivalence", cfg, |g| {
            let inst = g.sdr();
            verify_equivalence(&inst.sdr).map(|_| ())
        }),
        run("homology", "perturbed-equivalence", cfg, |g| {
            let inst = g.sdr();
            let out = perturb_sdr(&inst.sdr, &inst.perturbation)?;
            verify_equivalence(out.sdr()).map(|_| ())
        }),
    ]
}

/// Runs one suite by name; `"all"` runs every suite in order with seeds
/// derived per suite.
pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<Vec<SuiteReport>> {
    match name {
        "identities" => Ok(suite_identities(cfg)),
        "sdr" => Ok(suite_sdr(cfg)),
        "bpl" => Ok(suite_bpl(cfg)),
        "vertical" => Ok(suite_vertical(cfg)),
        "iteration" => Ok(suite_iteration(cfg)),
        "tensor" => Ok(suite_tensor(cfg)),
        "homology" => Ok(suite_homology(cfg)),
        "all" => {
            let mut out = Vec::new();
            for suite in SUITE_NAMES {
                let derived = SuiteConfig {
                    seed: derive_seed(cfg.seed, suite),
                    ..*cfg
                };
                out.extend(run_suite(suite, &derived)?);
            }
            Ok(out)
        }
        _ => Err(Error::Parse(format!(
            "unknown suite {name:?}; expected one of {SUITE_NAMES:?} or \"all\""
        ))),
    }
}
