//! Strong deformation retractions and the operations that preserve them:
//! stacking, tensoring, and pushing a perturbation of the small complex back
//! up to the big one.
//!
//! A retraction consists of complexes `A` (source, on top) and `B` (target,
//! at the bottom) with degree-0 chain maps `f: A -> B`, `g: B -> A` and a
//! degree `+1` homotopy `h: A -> A` subject to seven relations:
//!
//! ```text
//! Df = 0,  Dg = 0,  Dh = 1 - gf,  fg = 1,  fh = 0,  hg = 0,  hh = 0
//! ```
//!
//! Validation checks all seven and reports every violated relation together
//! with the first degree where its defect is nonzero.

use crate::complex::{check_maurer_cartan, hom_differential, ChainComplex, Perturbation};
use crate::error::{Error, Result, SdrGenerator, SdrRelation, SdrViolation};
use crate::graded::GradedMap;
use crate::ring::Ring;

/// A validated strong deformation retraction of `source` onto `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sdr {
    source: ChainComplex,
    target: ChainComplex,
    f: GradedMap,
    g: GradedMap,
    h: GradedMap,
}

impl Sdr {
    /// Validates shapes and all seven relations; every violated relation is
    /// reported, each with the first offending degree.
    pub fn new(
        source: ChainComplex,
        target: ChainComplex,
        f: GradedMap,
        g: GradedMap,
        h: GradedMap,
    ) -> Result<Sdr> {
        if f.source() != source.module() || f.target() != target.module() {
            return Err(Error::ModuleMismatch {
                context: "retraction projection",
            });
        }
        if g.source() != target.module() || g.target() != source.module() {
            return Err(Error::ModuleMismatch {
                context: "retraction inclusion",
            });
        }
        if h.source() != source.module() || h.target() != source.module() {
            return Err(Error::ModuleMismatch {
                context: "retraction homotopy",
            });
        }
        if f.degree() != 0 {
            return Err(Error::DegreeMismatch {
                context: "retraction projection",
                expected: 0,
                got: f.degree(),
            });
        }
        if g.degree() != 0 {
            return Err(Error::DegreeMismatch {
                context: "retraction inclusion",
                expected: 0,
                got: g.degree(),
            });
        }
        if h.degree() != 1 {
            return Err(Error::DegreeMismatch {
                context: "retraction homotopy",
                expected: 1,
                got: h.degree(),
            });
        }

        let id_source = GradedMap::identity(source.module());
        let id_target = GradedMap::identity(target.module());
        let defects: [(SdrRelation, GradedMap); 7] = [
            (
                SdrRelation::FChainMap,
                hom_differential(&f, &source, &target)?,
            ),
            (
                SdrRelation::GChainMap,
                hom_differential(&g, &target, &source)?,
            ),
            (
                SdrRelation::Homotopy,
                hom_differential(&h, &source, &source)?
                    .sub(&id_source)?
                    .add(&g.compose(&f)?)?,
            ),
            (SdrRelation::Retraction, f.compose(&g)?.sub(&id_target)?),
            (SdrRelation::AnnihilatesFh, f.compose(&h)?),
            (SdrRelation::AnnihilatesHg, h.compose(&g)?),
            (SdrRelation::AnnihilatesHh, h.compose(&h)?),
        ];
        let violations: Vec<SdrViolation> = defects
            .iter()
            .filter_map(|(relation, defect)| {
                defect.first_nonzero_degree().map(|degree| SdrViolation {
                    relation: *relation,
                    degree,
                })
            })
            .collect();
        if !violations.is_empty() {
            return Err(Error::Sdr(violations));
        }
        Ok(Sdr {
            source,
            target,
            f,
            g,
            h,
        })
    }

    /// The trivial retraction of a complex onto itself.
    pub fn identity(complex: &ChainComplex) -> Sdr {
        let id = GradedMap::identity(complex.module());
        let h = GradedMap::zero(complex.module().clone(), complex.module().clone(), 1);
        Sdr {
            source: complex.clone(),
            target: complex.clone(),
            f: id.clone(),
            g: id,
            h,
        }
    }

    pub fn source(&self) -> &ChainComplex {
        &self.source
    }

    pub fn target(&self) -> &ChainComplex {
        &self.target
    }

    pub fn f(&self) -> &GradedMap {
        &self.f
    }

    pub fn g(&self) -> &GradedMap {
        &self.g
    }

    pub fn h(&self) -> &GradedMap {
        &self.h
    }

    pub fn ring(&self) -> &Ring {
        self.source.ring()
    }

    /// Stacks `self: A -> B` on top of `other: B -> C`, yielding the
    /// retraction `A -> C` with
    ///
    /// ```text
    /// f1 = f' f,   g1 = g g',   h1 = h + g h' f.
    /// ```
    pub fn compose(&self, other: &Sdr) -> Result<Sdr> {
        if self.target != other.source {
            return Err(Error::ComplexMismatch {
                context: "retraction stacking",
            });
        }
        let f1 = other.f.compose(&self.f)?;
        let g1 = self.g.compose(&other.g)?;
        let h1 = self.h.add(&self.g.compose(&other.h.compose(&self.f)?)?)?;
        Sdr::new(self.source.clone(), other.target.clone(), f1, g1, h1)
    }

    /// The tensor product of two retractions,
    ///
    /// ```text
    /// (f (x) f',  g (x) g',  h (x) 1 + gf (x) h'),
    /// ```
    ///
    /// built and cross-checked as the stack of the two one-sided retractions
    /// through `B (x) A'`.
    pub fn tensor(&self, other: &Sdr) -> Result<Sdr> {
        let src = tensor_complex(&self.source, &other.source)?;
        let mid = tensor_complex(&self.target, &other.source)?;
        let tgt = tensor_complex(&self.target, &other.target)?;

        let id_tgt_l = GradedMap::identity(self.target.module());
        let id_src_r = GradedMap::identity(other.source.module());

        let left = Sdr::new(
            src.clone(),
            mid.clone(),
            self.f.tensor(&id_src_r)?,
            self.g.tensor(&id_src_r)?,
            self.h.tensor(&id_src_r)?,
        )?;
        let right = Sdr::new(
            mid,
            tgt.clone(),
            id_tgt_l.tensor(&other.f)?,
            id_tgt_l.tensor(&other.g)?,
            id_tgt_l.tensor(&other.h)?,
        )?;
        let stacked = left.compose(&right)?;

        let f1 = self.f.tensor(&other.f)?;
        let g1 = self.g.tensor(&other.g)?;
        let h1 = self.h.tensor(&id_src_r)?.add(
            &self
                .g
                .compose(&self.f)?
                .tensor(&other.h)?,
        )?;
        assert_eq!(stacked.f, f1, "tensor projection differs from stack");
        assert_eq!(stacked.g, g1, "tensor inclusion differs from stack");
        assert_eq!(stacked.h, h1, "tensor homotopy differs from stack");
        Ok(stacked)
    }

    /// Pushes a perturbation of the target back along the retraction: for
    /// `delta'` on `B`, the map `delta = g delta' f` perturbs `A`, it is
    /// intertwined with `delta'` by `f` and `g`, it anticommutes with `h`,
    /// and the same three maps form a retraction of the perturbed complexes.
    pub fn push_along(&self, delta_prime: &Perturbation) -> Result<(Sdr, Perturbation)> {
        if delta_prime.complex() != &self.target {
            return Err(Error::ComplexMismatch {
                context: "push-along perturbation",
            });
        }
        let dp = delta_prime.delta();
        let delta = self.g.compose(&dp.compose(&self.f)?)?;

        // Intertwining and anticommutation are consequences of the seven
        // relations; their failure would be an internal bug.
        assert!(
            dp.compose(&self.f)
                .unwrap()
                .sub(&self.f.compose(&delta).unwrap())
                .unwrap()
                .is_zero(),
            "delta' f = f delta must hold for delta = g delta' f"
        );
        assert!(
            delta
                .compose(&self.g)
                .unwrap()
                .sub(&self.g.compose(dp).unwrap())
                .unwrap()
                .is_zero(),
            "delta g = g delta' must hold for delta = g delta' f"
        );
        assert!(
            delta
                .compose(&self.h)
                .unwrap()
                .add(&self.h.compose(&delta).unwrap())
                .unwrap()
                .is_zero(),
            "delta h = -h delta must hold for delta = g delta' f"
        );

        let pushed = check_maurer_cartan(delta, &self.source)
            .expect("g delta' f inherits the Maurer-Cartan equation");
        let perturbed = Sdr::new(
            pushed.perturbed(),
            delta_prime.perturbed(),
            self.f.clone(),
            self.g.clone(),
            self.h.clone(),
        )?;
        Ok((perturbed, pushed))
    }
}

/// The tensor product of two complexes, with `d = d (x) 1 + 1 (x) d'`.
pub fn tensor_complex(left: &ChainComplex, right: &ChainComplex) -> Result<ChainComplex> {
    let id_l = GradedMap::identity(left.module());
    let id_r = GradedMap::identity(right.module());
    let d = left
        .d()
        .tensor(&id_r)?
        .add(&id_l.tensor(right.d())?)?;
    ChainComplex::new(left.module().tensor(right.module())?, d)
}

/// A square of two retractions connected by vertical maps `u` (between the
/// sources) and `v` (between the targets), subject to the three naturality
/// conditions
///
/// ```text
/// f' u = v f,   u g = g' v,   u h = h' u.
/// ```
///
/// The vertical maps are not required to be chain maps; [`SdrSquare::is_dg`]
/// reports whether they are.
#[derive(Clone, Debug, PartialEq)]
pub struct SdrSquare {
    top: Sdr,
    bottom: Sdr,
    u: GradedMap,
    v: GradedMap,
}

impl SdrSquare {
    pub fn new(top: Sdr, bottom: Sdr, u: GradedMap, v: GradedMap) -> Result<SdrSquare> {
        if u.source() != top.source().module()
            || u.target() != bottom.source().module()
            || u.degree() != 0
        {
            return Err(Error::ModuleMismatch {
                context: "square vertical map on sources",
            });
        }
        if v.source() != top.target().module()
            || v.target() != bottom.target().module()
            || v.degree() != 0
        {
            return Err(Error::ModuleMismatch {
                context: "square vertical map on targets",
            });
        }
        let checks = [
            (
                SdrGenerator::F,
                bottom.f().compose(&u)?.sub(&v.compose(top.f())?)?,
            ),
            (
                SdrGenerator::G,
                u.compose(top.g())?.sub(&bottom.g().compose(&v)?)?,
            ),
            (
                SdrGenerator::H,
                u.compose(top.h())?.sub(&bottom.h().compose(&u)?)?,
            ),
        ];
        for (generator, defect) in checks {
            if let Some(degree) = defect.first_nonzero_degree() {
                return Err(Error::Naturality { generator, degree });
            }
        }
        Ok(SdrSquare { top, bottom, u, v })
    }

    pub fn identity(sdr: &Sdr) -> SdrSquare {
        SdrSquare {
            top: sdr.clone(),
            bottom: sdr.clone(),
            u: GradedMap::identity(sdr.source().module()),
            v: GradedMap::identity(sdr.target().module()),
        }
    }

    pub fn top(&self) -> &Sdr {
        &self.top
    }

    pub fn bottom(&self) -> &Sdr {
        &self.bottom
    }

    pub fn u(&self) -> &GradedMap {
        &self.u
    }

    pub fn v(&self) -> &GradedMap {
        &self.v
    }

    /// True when both vertical maps are chain maps.
    pub fn is_dg(&self) -> bool {
        hom_differential(&self.u, self.top.source(), self.bottom.source())
            .map(|d| d.is_zero())
            .unwrap_or(false)
            && hom_differential(&self.v, self.top.target(), self.bottom.target())
                .map(|d| d.is_zero())
                .unwrap_or(false)
    }

    /// Vertical pasting: `self` sits above `other`, so the bottom retraction
    /// of `self` must equal the top retraction of `other`.
    pub fn compose_v(&self, other: &SdrSquare) -> Result<SdrSquare> {
        if self.bottom != other.top {
            return Err(Error::ComplexMismatch {
                context: "vertical square pasting",
            });
        }
        let u = other.u.compose(&self.u)?;
        let v = other.v.compose(&self.v)?;
        Ok(SdrSquare::new(self.top.clone(), other.bottom.clone(), u, v)
            .expect("pasted squares stay natural"))
    }

    /// Horizontal pasting along the shared middle edge: the target-side
    /// vertical map of `self` must equal the source-side vertical map of
    /// `other`, and the retractions stack.
    pub fn compose_h(&self, other: &SdrSquare) -> Result<SdrSquare> {
        if self.v != other.u {
            return Err(Error::ComplexMismatch {
                context: "horizontal square pasting",
            });
        }
        let top = self.top.compose(&other.top)?;
        let bottom = self.bottom.compose(&other.bottom)?;
        Ok(
            SdrSquare::new(top, bottom, self.u.clone(), other.v.clone())
                .expect("stacked squares stay natural"),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::GradedModule;
    use crate::testsupport::{interval_module, naive_entries};

    fn interval() -> ChainComplex {
        let m = interval_module();
        let d = GradedMap::from_entries(m.clone(), m.clone(), -1, &[(1, 0, 0, 1), (1, 1, 0, -1)])
            .unwrap();
        ChainComplex::new(m, d).unwrap()
    }

    /// The interval contracted onto the endpoint `a`.
    fn interval_sdr() -> Sdr {
        let a = interval();
        let b = ChainComplex::point(Ring::Integers);
        let f = GradedMap::from_entries(
            a.module().clone(),
            b.module().clone(),
            0,
            &[(0, 0, 0, 1), (0, 0, 1, 1)],
        )
        .unwrap();
        let g = GradedMap::from_entries(
            b.module().clone(),
            a.module().clone(),
            0,
            &[(0, 0, 0, 1)],
        )
        .unwrap();
        let h = GradedMap::from_entries(
            a.module().clone(),
            a.module().clone(),
            1,
            &[(0, 0, 1, -1)],
        )
        .unwrap();
        Sdr::new(a, b, f, g, h).unwrap()
    }

    /// Two circles glued along endpoints, retracting onto a one-loop model
    /// with zero differential.
    fn circle_sdr() -> Sdr {
        let cm = GradedModule::new(Ring::Integers, [(0, 2), (1, 2)])
            .with_labels(0, &["p", "q"])
            .with_labels(1, &["u", "v"]);
        let d = GradedMap::from_entries(
            cm.clone(),
            cm.clone(),
            -1,
            &[(1, 1, 0, 1), (1, 0, 0, -1), (1, 1, 1, 1), (1, 0, 1, -1)],
        )
        .unwrap();
        let circle = ChainComplex::new(cm.clone(), d).unwrap();
        let mm = GradedModule::new(Ring::Integers, [(0, 1), (1, 1)])
            .with_labels(0, &["m0"])
            .with_labels(1, &["m1"]);
        let model =
            ChainComplex::new(mm.clone(), GradedMap::zero(mm.clone(), mm.clone(), -1)).unwrap();
        let f = GradedMap::from_entries(
            cm.clone(),
            mm.clone(),
            0,
            &[(0, 0, 0, 1), (0, 0, 1, 1), (1, 0, 0, 1)],
        )
        .unwrap();
        let g = GradedMap::from_entries(
            mm.clone(),
            cm.clone(),
            0,
            &[(0, 0, 0, 1), (1, 0, 0, 1), (1, 1, 0, -1)],
        )
        .unwrap();
        let h =
            GradedMap::from_entries(cm.clone(), cm.clone(), 1, &[(0, 1, 1, 1)]).unwrap();
        Sdr::new(circle, model, f, g, h).unwrap()
    }

    #[test]
    fn interval_retraction_validates() {
        let sdr = interval_sdr();
        assert_eq!(sdr.source().module().total_rank(), 3);
        assert_eq!(sdr.target().module().total_rank(), 1);
    }

    #[test]
    fn circle_retraction_validates() {
        let sdr = circle_sdr();
        assert_eq!(sdr.target().module().total_rank(), 2);
        assert!(sdr.target().d().is_zero());
    }

    #[test]
    fn flipped_homotopy_is_reported() {
        let good = interval_sdr();
        let bad_h = good.h().scale_i64(-1);
        match Sdr::new(
            good.source().clone(),
            good.target().clone(),
            good.f().clone(),
            good.g().clone(),
            bad_h,
        ) {
            Err(Error::Sdr(violations)) => {
                assert_eq!(
                    violations,
                    vec![SdrViolation {
                        relation: SdrRelation::Homotopy,
                        degree: 0
                    }]
                );
            }
            other => panic!("expected a homotopy violation, got {other:?}"),
        }
    }

    #[test]
    fn all_violations_are_collected() {
        let good = interval_sdr();
        // reroute the inclusion through b: fg = 1 still holds, but both the
        // homotopy relation and hg = 0 break
        let bad_g = GradedMap::from_entries(
            good.target().module().clone(),
            good.source().module().clone(),
            0,
            &[(0, 1, 0, 1)],
        )
        .unwrap();
        match Sdr::new(
            good.source().clone(),
            good.target().clone(),
            good.f().clone(),
            bad_g,
            good.h().clone(),
        ) {
            Err(Error::Sdr(violations)) => {
                let relations: Vec<SdrRelation> =
                    violations.iter().map(|v| v.relation).collect();
                assert_eq!(
                    relations,
                    vec![SdrRelation::Homotopy, SdrRelation::AnnihilatesHg]
                );
            }
            other => panic!("expected two violations, got {other:?}"),
        }
    }

    #[test]
    fn stacking_with_identity_is_neutral() {
        let sdr = interval_sdr();
        let above = Sdr::identity(sdr.source()).compose(&sdr).unwrap();
        assert_eq!(&above, &sdr);
        let below = sdr.compose(&Sdr::identity(sdr.target())).unwrap();
        assert_eq!(&below, &sdr);
    }

    #[test]
    fn stacking_mismatched_middles_fails() {
        let sdr = interval_sdr();
        assert!(matches!(
            sdr.compose(&sdr),
            Err(Error::ComplexMismatch { .. })
        ));
    }

    #[test]
    fn tensor_of_two_interval_retractions() {
        let sdr = interval_sdr();
        let t = sdr.tensor(&sdr).unwrap();
        let ranks: Vec<(i64, usize)> = t
            .source()
            .module()
            .ranks()
            .iter()
            .map(|(&k, &r)| (k, r))
            .collect();
        assert_eq!(ranks, vec![(0, 4), (1, 4), (2, 1)]);
        assert_eq!(t.target().module().total_rank(), 1);
    }

    #[test]
    fn tensor_is_not_symmetric_in_the_homotopy() {
        let sdr = interval_sdr();
        let id = Sdr::identity(sdr.source());
        let left = sdr.tensor(&id).unwrap();
        let right = id.tensor(&sdr).unwrap();
        // h (x) 1 against 1 (x) h: same complexes, different homotopies
        assert_eq!(left.source().module(), right.source().module());
        assert_ne!(left.h(), right.h());
    }

    #[test]
    fn push_along_the_circle_model() {
        let sdr = circle_sdr();
        let dp = GradedMap::from_entries(
            sdr.target().module().clone(),
            sdr.target().module().clone(),
            -1,
            &[(1, 0, 0, 1)],
        )
        .unwrap();
        let dp = check_maurer_cartan(dp, sdr.target()).unwrap();
        let (perturbed, pushed) = sdr.push_along(&dp).unwrap();
        // g delta' f sends u to p and kills v
        assert_eq!(naive_entries(pushed.delta(), 1, 0), vec![(0, 0, 1)]);
        assert!(naive_entries(pushed.delta(), 1, 1).is_empty());
        assert_eq!(perturbed.source().d(), &sdr.source().d().add(pushed.delta()).unwrap());
        assert_eq!(perturbed.f(), sdr.f());
    }

    #[test]
    fn push_along_requires_matching_target() {
        let sdr = interval_sdr();
        let other = circle_sdr();
        let dp = Perturbation::zero(other.target());
        assert!(matches!(
            sdr.push_along(&dp),
            Err(Error::ComplexMismatch { .. })
        ));
    }

    #[test]
    fn identity_square_is_natural_and_dg() {
        let sq = SdrSquare::identity(&interval_sdr());
        assert!(sq.is_dg());
        let pasted = sq.compose_v(&sq).unwrap();
        assert_eq!(pasted, sq);
    }

    #[test]
    fn sign_flip_on_top_breaks_naturality() {
        let sdr = interval_sdr();
        let u = GradedMap::identity(sdr.source().module()).scale_i64(-1);
        let v = GradedMap::identity(sdr.target().module());
        match SdrSquare::new(sdr.clone(), sdr, u, v) {
            Err(Error::Naturality {
                generator: SdrGenerator::F,
                degree: 0,
            }) => {}
            other => panic!("expected naturality failure on f, got {other:?}"),
        }
    }

    #[test]
    fn horizontal_pasting_stacks_the_retractions() {
        let sdr = interval_sdr();
        let left = SdrSquare::identity(&sdr);
        let right = SdrSquare::identity(&Sdr::identity(sdr.target()));
        let pasted = left.compose_h(&right).unwrap();
        assert_eq!(pasted.top(), &sdr);
    }
}
