//! Calculus of invertible graded maps that are not required to commute with
//! the differentials.
//!
//! For an invertible graded map `a: A -> B` of degree `n` between complexes,
//! write `Da = d_B . a - (-1)^n a . d_A`. The derived quantities
//!
//! ```text
//! left log derivative   L(a) = a^{-1} . Da     (degree -1 endo of A)
//! right log derivative  R(a) = Da . a^{-1}     (degree -1 endo of B)
//! conjugation           c_a(f) = a . f . a^{-1}
//! ```
//!
//! satisfy exact identities that this module exposes as defect maps (each is
//! identically zero):
//!
//! ```text
//! D(a^{-1}) + (-1)^n a^{-1} (Da) a^{-1}          = 0
//! D(L(a))   + (-1)^n L(a)^2                      = 0
//! D(R(a))   - R(a)^2                             = 0
//! D(c_a f)  - (-1)^n c_a(Df) - [R(a), c_a f]     = 0
//! ```
//!
//! In particular for `n = 0` the left log derivative satisfies the
//! Maurer-Cartan equation, and conjugating a differential by a degree-0
//! automorphism yields a new differential `d' = a d a^{-1}` whose difference
//! `d' - d = -R(a)` is a certified perturbation. The transfer construction at
//! the bottom of the module applies this object by object to a diagram and
//! measures, generator by generator, the commutator obstruction to the old
//! arrows remaining chain maps for the new differentials.

use crate::complex::{check_maurer_cartan, hom_differential, ChainComplex, Perturbation};
use crate::error::{Error, Result};
use crate::graded::{koszul_sign, GradedMap};

/// An invertible graded map between complexes, carried with its exact
/// inverse. Neither direction is required to be a chain map.
#[derive(Clone, Debug)]
pub struct NonDgIso {
    source: ChainComplex,
    target: ChainComplex,
    forward: GradedMap,
    inverse: GradedMap,
}

impl NonDgIso {
    /// Validates shapes, degrees and both composites before wrapping.
    pub fn new(
        source: ChainComplex,
        target: ChainComplex,
        forward: GradedMap,
        inverse: GradedMap,
    ) -> Result<NonDgIso> {
        if forward.source() != source.module() || forward.target() != target.module() {
            return Err(Error::ModuleMismatch {
                context: "iso forward direction",
            });
        }
        if inverse.source() != target.module() || inverse.target() != source.module() {
            return Err(Error::ModuleMismatch {
                context: "iso inverse direction",
            });
        }
        if inverse.degree() != -forward.degree() {
            return Err(Error::DegreeMismatch {
                context: "iso inverse direction",
                expected: -forward.degree(),
                got: inverse.degree(),
            });
        }
        if !forward.compose(&inverse)?.is_identity() {
            return Err(Error::Compatibility {
                condition: "a . a_inv = 1",
            });
        }
        if !inverse.compose(&forward)?.is_identity() {
            return Err(Error::Compatibility {
                condition: "a_inv . a = 1",
            });
        }
        Ok(NonDgIso {
            source,
            target,
            forward,
            inverse,
        })
    }

    pub fn identity(complex: &ChainComplex) -> NonDgIso {
        let id = GradedMap::identity(complex.module());
        NonDgIso {
            source: complex.clone(),
            target: complex.clone(),
            forward: id.clone(),
            inverse: id,
        }
    }

    pub fn source(&self) -> &ChainComplex {
        &self.source
    }

    pub fn target(&self) -> &ChainComplex {
        &self.target
    }

    pub fn forward(&self) -> &GradedMap {
        &self.forward
    }

    pub fn inverse(&self) -> &GradedMap {
        &self.inverse
    }

    pub fn degree(&self) -> i64 {
        self.forward.degree()
    }

    /// `Da = d_target . a - (-1)^{|a|} a . d_source`.
    pub fn differential(&self) -> GradedMap {
        hom_differential(&self.forward, &self.source, &self.target)
            .expect("validated iso has compatible shapes")
    }

    pub fn is_chain_map(&self) -> bool {
        self.differential().is_zero()
    }

    /// `a^{-1} . Da`, a degree `-1` endomorphism of the source module.
    pub fn left_log_derivative(&self) -> GradedMap {
        self.inverse
            .compose(&self.differential())
            .expect("shapes agree")
    }

    /// `Da . a^{-1}`, a degree `-1` endomorphism of the target module.
    pub fn right_log_derivative(&self) -> GradedMap {
        self.differential()
            .compose(&self.inverse)
            .expect("shapes agree")
    }

    /// `c_a(f) = a . f . a^{-1}` for `f` an endomorphism of the source
    /// module.
    pub fn conjugate(&self, f: &GradedMap) -> Result<GradedMap> {
        self.forward.compose(&f.compose(&self.inverse)?)
    }

    /// The same iso read backwards.
    pub fn inverted(&self) -> NonDgIso {
        NonDgIso {
            source: self.target.clone(),
            target: self.source.clone(),
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// `self . other` for `other: A -> B`, `self: B -> C`.
    pub fn compose(&self, other: &NonDgIso) -> Result<NonDgIso> {
        if other.target.module() != self.source.module() || other.target.d() != self.source.d() {
            return Err(Error::ComplexMismatch {
                context: "iso composition",
            });
        }
        Ok(NonDgIso {
            source: other.source.clone(),
            target: self.target.clone(),
            forward: self.forward.compose(&other.forward)?,
            inverse: other.inverse.compose(&self.inverse)?,
        })
    }
}

/// `D(a^{-1}) + (-1)^{|a|} a^{-1} (Da) a^{-1}`; identically zero.
pub fn inverse_derivative_defect(iso: &NonDgIso) -> Result<GradedMap> {
    let d_inv = hom_differential(iso.inverse(), iso.target(), iso.source())?;
    let sandwich = iso
        .inverse()
        .compose(&iso.differential().compose(iso.inverse())?)?;
    d_inv.add(&sandwich.scale_i64(koszul_sign(iso.degree(), 1)))
}

/// `D(L(a)) + (-1)^{|a|} L(a)^2`; identically zero. For degree-0 isos this
/// says the left log derivative satisfies the Maurer-Cartan equation.
pub fn left_mc_defect(iso: &NonDgIso) -> Result<GradedMap> {
    let l = iso.left_log_derivative();
    let dl = hom_differential(&l, iso.source(), iso.source())?;
    dl.add(&l.compose(&l)?.scale_i64(koszul_sign(iso.degree(), 1)))
}

/// `D(R(a)) - R(a)^2`; identically zero in every degree.
pub fn right_flow_defect(iso: &NonDgIso) -> Result<GradedMap> {
    let r = iso.right_log_derivative();
    let dr = hom_differential(&r, iso.target(), iso.target())?;
    dr.sub(&r.compose(&r)?)
}

/// `D(c_a f) - (-1)^{|a|} c_a(Df) - [R(a), c_a f]` for `f` an endomorphism
/// of the source module; identically zero. Conjugation intertwines the hom
/// differentials up to the inner derivation by the right log derivative.
pub fn conjugation_defect(iso: &NonDgIso, f: &GradedMap) -> Result<GradedMap> {
    let cf = iso.conjugate(f)?;
    let d_cf = hom_differential(&cf, iso.target(), iso.target())?;
    let df = hom_differential(f, iso.source(), iso.source())?;
    let c_df = iso.conjugate(&df)?.scale_i64(koszul_sign(iso.degree(), 1));
    let br = iso.right_log_derivative().bracket(&cf)?;
    d_cf.sub(&c_df)?.sub(&br)
}

/// One object of a transfer problem: a complex together with a degree-0
/// automorphism of its underlying module. Conjugating the differential gives
/// the transferred complex; the difference of differentials is kept as a
/// certified perturbation.
#[derive(Clone, Debug)]
pub struct TransferObject {
    iso: NonDgIso,
    perturbation: Perturbation,
}

impl TransferObject {
    pub fn new(
        complex: &ChainComplex,
        alpha: GradedMap,
        alpha_inv: GradedMap,
    ) -> Result<TransferObject> {
        if alpha.degree() != 0 {
            return Err(Error::DegreeMismatch {
                context: "transfer automorphism",
                expected: 0,
                got: alpha.degree(),
            });
        }
        // d' = a d a^{-1} squares to zero automatically; NonDgIso::new
        // re-validates the inverse pair.
        let d_new = alpha.compose(&complex.d().compose(&alpha_inv)?)?;
        let transferred = ChainComplex::new(complex.module().clone(), d_new)?;
        let iso = NonDgIso::new(complex.clone(), transferred.clone(), alpha, alpha_inv)?;
        let delta = transferred.d().sub(complex.d())?;
        // The difference of differentials is minus the right log derivative
        // of the automorphism read as a non-dg endo-iso of the original
        // complex.
        let in_place = NonDgIso::new(
            complex.clone(),
            complex.clone(),
            iso.forward().clone(),
            iso.inverse().clone(),
        )?;
        assert_eq!(delta, in_place.right_log_derivative().neg());
        let perturbation = check_maurer_cartan(delta, complex)?;
        Ok(TransferObject { iso, perturbation })
    }

    pub fn identity(complex: &ChainComplex) -> TransferObject {
        let id = GradedMap::identity(complex.module());
        TransferObject::new(complex, id.clone(), id).expect("identity transfers trivially")
    }

    pub fn complex(&self) -> &ChainComplex {
        self.iso.source()
    }

    pub fn transferred(&self) -> &ChainComplex {
        self.iso.target()
    }

    pub fn iso(&self) -> &NonDgIso {
        &self.iso
    }

    /// `d' - d`, the certified perturbation carrying the transfer.
    pub fn delta(&self) -> &GradedMap {
        self.perturbation.delta()
    }
}

/// A named arrow between two objects of a transfer problem.
#[derive(Clone, Debug)]
pub struct TransferGenerator {
    pub name: String,
    pub source: usize,
    pub target: usize,
    pub map: GradedMap,
}

impl TransferGenerator {
    pub fn new(name: &str, source: usize, target: usize, map: GradedMap) -> TransferGenerator {
        TransferGenerator {
            name: name.to_string(),
            source,
            target,
            map,
        }
    }
}

/// The result of transferring one generator `u: a -> a'`.
#[derive(Clone, Debug)]
pub struct TransferredGenerator {
    pub name: String,
    /// `a_{a'} . u . a_a^{-1}` — always compatible with the transferred
    /// differentials in the same way `u` was with the original ones.
    pub conjugated: GradedMap,
    /// `delta_{a'} . u - (-1)^{|u|} u . delta_a`, the change in `Du` when the
    /// differentials are transferred but `u` is kept. The unmodified `u`
    /// remains a chain map for the new differentials exactly when this
    /// vanishes (given that it was one before).
    pub obstruction: GradedMap,
}

/// Transfers every generator across the object automorphisms. With `strict`
/// set, the first generator whose commutator obstruction is nonzero aborts
/// the transfer.
pub fn transfer_functor(
    objects: &[TransferObject],
    generators: &[TransferGenerator],
    strict: bool,
) -> Result<Vec<TransferredGenerator>> {
    let mut out = Vec::with_capacity(generators.len());
    for (index, gen) in generators.iter().enumerate() {
        let (src, tgt) = match (objects.get(gen.source), objects.get(gen.target)) {
            (Some(s), Some(t)) => (s, t),
            _ => {
                return Err(Error::ModuleMismatch {
                    context: "transfer generator endpoints",
                })
            }
        };
        if gen.map.source() != src.complex().module() || gen.map.target() != tgt.complex().module()
        {
            return Err(Error::ModuleMismatch {
                context: "transfer generator endpoints",
            });
        }

        let conjugated = tgt
            .iso()
            .forward()
            .compose(&gen.map.compose(src.iso().inverse())?)?;

        let obstruction = tgt.delta().compose(&gen.map)?.sub(
            &gen.map
                .compose(src.delta())?
                .scale_i64(koszul_sign(gen.map.degree(), 1)),
        )?;

        // Cross-check against the hom differentials: the obstruction is the
        // difference between Du computed with new and old differentials, and
        // conjugation preserves Du on the nose.
        let du_old = hom_differential(&gen.map, src.complex(), tgt.complex())?;
        let du_new = hom_differential(&gen.map, src.transferred(), tgt.transferred())?;
        assert_eq!(obstruction, du_new.sub(&du_old)?);
        let dc_new = hom_differential(&conjugated, src.transferred(), tgt.transferred())?;
        assert_eq!(
            dc_new,
            tgt.iso()
                .forward()
                .compose(&du_old.compose(src.iso().inverse())?)?
        );

        if strict {
            if let Some(degree) = obstruction.first_nonzero_degree() {
                return Err(Error::CommutatorObstruction { index, degree });
            }
        }
        out.push(TransferredGenerator {
            name: gen.name.clone(),
            conjugated,
            obstruction,
        });
    }
    Ok(out)
}
