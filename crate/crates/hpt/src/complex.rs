//! Bounded chain complexes, the differential on graded maps, and
//! Maurer-Cartan perturbations.
//!
//! The differential of a complex has degree `-1` and squares to zero. For a
//! graded map `f` between complexes the hom differential is the graded
//! commutator with the differentials,
//!
//! ```text
//! D f = d_target . f - (-1)^{|f|} f . d_source,
//! ```
//!
//! so `f` is a chain map exactly when `D f = 0`. A perturbation of a complex
//! is a degree `-1` endomorphism `delta` with `D delta = -delta^2`
//! (equivalently `(d + delta)^2 = 0`); perturbations are certified at
//! construction and carried around as witnesses.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graded::{koszul_sign, GradedMap, GradedModule};
use crate::matrix::Matrix;
use crate::ring::Ring;

/// A bounded chain complex of finitely generated free modules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainComplex {
    module: GradedModule,
    d: GradedMap,
}

impl ChainComplex {
    /// Builds a complex, checking that `d` is a degree `-1` endomorphism of
    /// `module` with `d . d = 0`.
    pub fn new(module: GradedModule, d: GradedMap) -> Result<ChainComplex> {
        if d.source() != &module || d.target() != &module {
            return Err(Error::ModuleMismatch {
                context: "complex differential",
            });
        }
        if d.degree() != -1 {
            return Err(Error::DegreeMismatch {
                context: "complex differential",
                expected: -1,
                got: d.degree(),
            });
        }
        let dd = d.compose(&d)?;
        if let Some(k) = dd.first_nonzero_degree() {
            return Err(Error::DifferentialSquare { degree: k });
        }
        Ok(ChainComplex { module, d })
    }

    /// The rank-one complex concentrated in degree zero.
    pub fn point(ring: Ring) -> ChainComplex {
        let m = GradedModule::concentrated(ring, 0, 1).with_labels(0, &["x"]);
        let d = GradedMap::zero(m.clone(), m.clone(), -1);
        ChainComplex { module: m, d }
    }

    pub fn module(&self) -> &GradedModule {
        &self.module
    }

    pub fn d(&self) -> &GradedMap {
        &self.d
    }

    pub fn ring(&self) -> &Ring {
        self.module.ring()
    }
}

/// `D f = d_target . f - (-1)^{|f|} f . d_source` for a graded map between
/// the underlying modules of two complexes.
pub fn hom_differential(
    f: &GradedMap,
    source: &ChainComplex,
    target: &ChainComplex,
) -> Result<GradedMap> {
    if f.source() != source.module() || f.target() != target.module() {
        return Err(Error::ModuleMismatch {
            context: "hom differential",
        });
    }
    let post = target.d().compose(f)?;
    let pre = f.compose(source.d())?.scale_i64(koszul_sign(f.degree(), 1));
    post.sub(&pre)
}

/// True when `f` commutes with the differentials.
pub fn is_chain_map(f: &GradedMap, source: &ChainComplex, target: &ChainComplex) -> Result<bool> {
    Ok(hom_differential(f, source, target)?.is_zero())
}

/// A certified perturbation: a degree `-1` endomorphism `delta` of the
/// underlying module with `D delta + delta^2 = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Perturbation {
    complex: ChainComplex,
    delta: GradedMap,
}

/// Certifies the Maurer-Cartan equation `D delta + delta^2 = 0` and wraps
/// the witness.
pub fn check_maurer_cartan(delta: GradedMap, complex: &ChainComplex) -> Result<Perturbation> {
    if delta.source() != complex.module() || delta.target() != complex.module() {
        return Err(Error::ModuleMismatch {
            context: "perturbation",
        });
    }
    if delta.degree() != -1 {
        return Err(Error::DegreeMismatch {
            context: "perturbation",
            expected: -1,
            got: delta.degree(),
        });
    }
    let defect = hom_differential(&delta, complex, complex)?
        .add(&delta.compose(&delta)?)?;
    if let Some(k) = defect.first_nonzero_degree() {
        return Err(Error::MaurerCartan { degree: k });
    }
    Ok(Perturbation {
        complex: complex.clone(),
        delta,
    })
}

impl Perturbation {
    pub fn zero(complex: &ChainComplex) -> Perturbation {
        let delta = GradedMap::zero(complex.module().clone(), complex.module().clone(), -1);
        Perturbation {
            complex: complex.clone(),
            delta,
        }
    }

    pub fn complex(&self) -> &ChainComplex {
        &self.complex
    }

    pub fn delta(&self) -> &GradedMap {
        &self.delta
    }

    pub fn is_zero(&self) -> bool {
        self.delta.is_zero()
    }

    /// The perturbed complex, carrying `d + delta`. The construction
    /// re-checks `(d + delta)^2 = 0`.
    pub fn perturbed(&self) -> ChainComplex {
        let d = self
            .complex
            .d()
            .add(&self.delta)
            .expect("delta has the shape of d");
        ChainComplex::new(self.complex.module().clone(), d)
            .expect("certified perturbation yields a complex")
    }
}

/// The chain complex of graded maps from `source` to `target`: the degree-`n`
/// component has one basis element for every matrix entry of a degree-`n`
/// map, ordered by source degree `k` ascending and row-major within each
/// block, and the differential is `E |-> D E`.
#[derive(Clone, Debug)]
pub struct HomComplex {
    complex: ChainComplex,
    source: ChainComplex,
    target: ChainComplex,
}

impl HomComplex {
    /// Builds the hom complex. When `window` is given it must cover every
    /// degree in which the hom module is nonzero.
    pub fn new(
        source: &ChainComplex,
        target: &ChainComplex,
        window: Option<(i64, i64)>,
    ) -> Result<HomComplex> {
        if source.ring() != target.ring() {
            return Err(Error::RingMismatch(*source.ring(), *target.ring()));
        }
        let ring = *source.ring();
        let (src_m, tgt_m) = (source.module(), target.module());
        let mut ranks: BTreeMap<i64, usize> = BTreeMap::new();
        for k in src_m.degrees() {
            for l in tgt_m.degrees() {
                *ranks.entry(l - k).or_insert(0) += src_m.rank(k) * tgt_m.rank(l);
            }
        }
        let ranks: BTreeMap<i64, usize> = ranks.into_iter().filter(|&(_, r)| r > 0).collect();
        if let (Some((lo, hi)), Some((&nmin, _)), Some((&nmax, _))) =
            (window, ranks.first_key_value(), ranks.last_key_value())
        {
            if lo > nmin || hi < nmax {
                return Err(Error::WindowTooSmall { lo: nmin, hi: nmax });
            }
        }
        let module = GradedModule::new(ring, ranks);

        // D(E_{(k,i,j)}) = sum_{i'} d_tgt[k+n][i',i] E_{(k,i',j)}
        //               - (-1)^n sum_{j'} d_src[k+1][j,j'] E_{(k+1,i,j')}
        let mut blocks: BTreeMap<i64, Matrix> = BTreeMap::new();
        for n in module.degrees() {
            let rows = module.rank(n - 1);
            let cols = module.rank(n);
            if rows == 0 || cols == 0 {
                continue;
            }
            let mut m = Matrix::zeros(rows, cols, &ring);
            let sign = koszul_sign(n, 1);
            for k in src_m.degrees() {
                for i in 0..tgt_m.rank(k + n) {
                    for j in 0..src_m.rank(k) {
                        let col = hom_index(src_m, tgt_m, n, k, i, j);
                        if let Some(b) = target.d().block(k + n) {
                            for i2 in 0..b.rows() {
                                let v = b.get(i2, i);
                                if v.is_zero() {
                                    continue;
                                }
                                let row = hom_index(src_m, tgt_m, n - 1, k, i2, j);
                                let cur = m.get(row, col);
                                m.set(row, col, ring.add(cur, v));
                            }
                        }
                        if let Some(b) = source.d().block(k + 1) {
                            for j2 in 0..b.cols() {
                                let v = b.get(j, j2);
                                if v.is_zero() {
                                    continue;
                                }
                                let row = hom_index(src_m, tgt_m, n - 1, k + 1, i, j2);
                                let mut v = v.clone();
                                if sign > 0 {
                                    v = ring.neg(&v);
                                }
                                let cur = m.get(row, col);
                                m.set(row, col, ring.add(cur, &v));
                            }
                        }
                    }
                }
            }
            blocks.insert(n, m);
        }
        let d = GradedMap::from_blocks(module.clone(), module.clone(), -1, blocks)?;
        let complex = ChainComplex::new(module, d)?;
        Ok(HomComplex {
            complex,
            source: source.clone(),
            target: target.clone(),
        })
    }

    pub fn complex(&self) -> &ChainComplex {
        &self.complex
    }

    pub fn source(&self) -> &ChainComplex {
        &self.source
    }

    pub fn target(&self) -> &ChainComplex {
        &self.target
    }

    /// Materializes the basis element at position `index` of hom degree `n`
    /// as an actual graded map.
    pub fn basis_map(&self, n: i64, index: usize) -> GradedMap {
        let (src_m, tgt_m) = (self.source.module(), self.target.module());
        let mut offset = 0;
        for k in src_m.degrees() {
            let block = src_m.rank(k) * tgt_m.rank(k + n);
            if index < offset + block {
                let local = index - offset;
                let cols = src_m.rank(k);
                let (i, j) = (local / cols, local % cols);
                let ring = *src_m.ring();
                let mut m = Matrix::zeros(tgt_m.rank(k + n), cols, &ring);
                m.set(i, j, ring.one());
                return GradedMap::from_blocks(src_m.clone(), tgt_m.clone(), n, [(k, m)])
                    .expect("elementary map has valid shape");
            }
            offset += block;
        }
        panic!("basis index out of range");
    }

    /// Coordinates of a degree-`n` graded map in the hom basis.
    pub fn flatten(&self, f: &GradedMap) -> Result<Vec<crate::ring::Scalar>> {
        if f.source() != self.source.module() || f.target() != self.target.module() {
            return Err(Error::ModuleMismatch { context: "flatten" });
        }
        let n = f.degree();
        let (src_m, tgt_m) = (self.source.module(), self.target.module());
        let mut out = Vec::with_capacity(self.complex.module().rank(n));
        for k in src_m.degrees() {
            let rows = tgt_m.rank(k + n);
            let cols = src_m.rank(k);
            if rows * cols == 0 {
                continue;
            }
            let b = f.block_or_zero(k);
            for i in 0..rows {
                for j in 0..cols {
                    out.push(b.get(i, j).clone());
                }
            }
        }
        Ok(out)
    }

    /// The matrix of a degree-homogeneous linear operator on graded maps,
    /// computed by evaluating it on every basis element and flattening the
    /// results. This is deliberately a second code path, independent of the
    /// direct index arithmetic used for the differential.
    pub fn operator(
        &self,
        op_degree: i64,
        op: impl Fn(&GradedMap) -> Result<GradedMap>,
    ) -> Result<GradedMap> {
        let module = self.complex.module().clone();
        let ring = *module.ring();
        let mut blocks: BTreeMap<i64, Matrix> = BTreeMap::new();
        for n in module.degrees() {
            let rows = module.rank(n + op_degree);
            let cols = module.rank(n);
            if rows == 0 || cols == 0 {
                continue;
            }
            let mut m = Matrix::zeros(rows, cols, &ring);
            for col in 0..cols {
                let image = op(&self.basis_map(n, col))?;
                if image.degree() != n + op_degree {
                    return Err(Error::DegreeMismatch {
                        context: "hom operator",
                        expected: n + op_degree,
                        got: image.degree(),
                    });
                }
                for (row, v) in self.flatten(&image)?.into_iter().enumerate() {
                    m.set(row, col, v);
                }
            }
            blocks.insert(n, m);
        }
        GradedMap::from_blocks(module.clone(), module, op_degree, blocks)
    }

    /// The post-composition operator `E |-> delta . E` on the hom complex,
    /// for `delta` an endomorphism of the target.
    pub fn post_compose(&self, delta: &GradedMap) -> Result<GradedMap> {
        self.operator(delta.degree(), |e| delta.compose(e))
    }

    /// The signed pre-composition operator `E |-> -(-1)^{|E|} E . delta` on
    /// the hom complex, for `delta` a degree `-1` endomorphism of the source.
    /// This is the perturbation induced on maps out of a perturbed complex.
    pub fn pre_compose_negated(&self, delta: &GradedMap) -> Result<GradedMap> {
        self.operator(delta.degree(), |e| {
            Ok(e.compose(delta)?.scale_i64(-koszul_sign(e.degree(), 1)))
        })
    }
}

fn hom_index(
    src: &GradedModule,
    tgt: &GradedModule,
    n: i64,
    k: i64,
    i: usize,
    j: usize,
) -> usize {
    let mut offset = 0;
    for k2 in src.degrees() {
        let rows = tgt.rank(k2 + n);
        let cols = src.rank(k2);
        if k2 == k {
            debug_assert!(i < rows && j < cols);
            return offset + i * cols + j;
        }
        offset += rows * cols;
    }
    panic!("hom basis degree out of range");
}

/// Report of a successful representability check: maps out of (and into) a
/// perturbed complex coincide with the corresponding perturbation of the hom
/// complex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniversalPropertyReport {
    /// Nonzero degree window of `Hom(B, A)`.
    pub covariant_window: Option<(i64, i64)>,
    /// Nonzero degree window of `Hom(A, B)`.
    pub contravariant_window: Option<(i64, i64)>,
}

/// Checks, bit-exactly, that for a perturbation `delta` of `A`:
/// * the differential of `Hom(B, A_delta)` equals the differential of
///   `Hom(B, A)` perturbed by post-composition with `delta`, and
/// * the differential of `Hom(A_delta, B)` equals the differential of
///   `Hom(A, B)` perturbed by signed pre-composition with `delta`;
/// both induced perturbations are certified Maurer-Cartan along the way.
pub fn check_universal_property(
    b: &ChainComplex,
    p: &Perturbation,
) -> Result<UniversalPropertyReport> {
    let a = p.complex();
    let a_pert = p.perturbed();

    let direct = HomComplex::new(b, &a_pert, None)?;
    let base = HomComplex::new(b, a, None)?;
    let post = base.post_compose(p.delta())?;
    let post = check_maurer_cartan(post, base.complex())?;
    let rebuilt = post.perturbed();
    if direct.complex().d() != rebuilt.d() {
        let diff = direct.complex().d().sub(rebuilt.d())?;
        return Err(Error::UniversalProperty {
            degree: diff.first_nonzero_degree().unwrap_or(0),
        });
    }

    let direct_dual = HomComplex::new(&a_pert, b, None)?;
    let base_dual = HomComplex::new(a, b, None)?;
    let pre = base_dual.pre_compose_negated(p.delta())?;
    let pre = check_maurer_cartan(pre, base_dual.complex())?;
    let rebuilt_dual = pre.perturbed();
    if direct_dual.complex().d() != rebuilt_dual.d() {
        let diff = direct_dual.complex().d().sub(rebuilt_dual.d())?;
        return Err(Error::UniversalProperty {
            degree: diff.first_nonzero_degree().unwrap_or(0),
        });
    }

    let window = |m: &GradedModule| Some((m.min_degree()?, m.max_degree()?));
    Ok(UniversalPropertyReport {
        covariant_window: window(base.complex().module()),
        contravariant_window: window(base_dual.complex().module()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testsupport::{
        interval_module, random_differential, random_endo, random_endo_triple,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn interval() -> ChainComplex {
        let m = interval_module();
        let d = GradedMap::from_entries(m.clone(), m.clone(), -1, &[(1, 0, 0, 1), (1, 1, 0, -1)])
            .unwrap();
        ChainComplex::new(m, d).unwrap()
    }

    fn interval_delta() -> GradedMap {
        let m = interval_module();
        GradedMap::from_entries(m.clone(), m, -1, &[(1, 0, 0, -1)]).unwrap()
    }

    #[test]
    fn d_squared_is_checked() {
        let m = GradedModule::new(Ring::Integers, [(0, 1), (1, 1), (2, 1)]);
        let d = GradedMap::from_entries(m.clone(), m.clone(), -1, &[(1, 0, 0, 1), (2, 0, 0, 1)])
            .unwrap();
        match ChainComplex::new(m, d) {
            Err(Error::DifferentialSquare { degree: 2 }) => {}
            other => panic!("expected d^2 failure at degree 2, got {other:?}"),
        }
    }

    #[test]
    fn differential_is_a_cycle() {
        let a = interval();
        let dd = hom_differential(a.d(), &a, &a).unwrap();
        assert!(dd.is_zero());
    }

    #[test]
    fn hom_differential_of_h_is_one_minus_gf() {
        let a = interval();
        let m = a.module().clone();
        let h = GradedMap::from_entries(m.clone(), m.clone(), 1, &[(0, 0, 1, -1)]).unwrap();
        let dh = hom_differential(&h, &a, &a).unwrap();
        let expected = GradedMap::from_entries(
            m.clone(),
            m,
            0,
            &[(0, 1, 1, 1), (0, 0, 1, -1), (1, 0, 0, 1)],
        )
        .unwrap();
        assert_eq!(dh, expected);
    }

    #[test]
    fn hom_differential_squares_to_zero_on_random_maps() {
        for seed in 0..40u64 {
            let (f, _, _) = random_endo_triple(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let m = f.source().clone();
            let d = random_differential(&mut rng, &m);
            let c = ChainComplex::new(m, d).unwrap();
            let df = hom_differential(&f, &c, &c).unwrap();
            let ddf = hom_differential(&df, &c, &c).unwrap();
            assert!(ddf.is_zero(), "D^2 f != 0 at seed {seed}");
        }
    }

    #[test]
    fn product_rule_for_hom_differential() {
        for seed in 0..60u64 {
            let (f, g, _) = random_endo_triple(seed);
            let m = f.source().clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(77));
            let d = random_differential(&mut rng, &m);
            let c = ChainComplex::new(m, d).unwrap();
            let lhs = hom_differential(&f.compose(&g).unwrap(), &c, &c).unwrap();
            let rhs = hom_differential(&f, &c, &c)
                .unwrap()
                .compose(&g)
                .unwrap()
                .add(
                    &f.compose(&hom_differential(&g, &c, &c).unwrap())
                        .unwrap()
                        .scale_i64(koszul_sign(f.degree(), 1)),
                )
                .unwrap();
            assert_eq!(lhs, rhs, "product rule fails at seed {seed}");
        }
    }

    #[test]
    fn maurer_cartan_accepts_and_rejects() {
        let a = interval();
        // the zero perturbation and d itself both satisfy the equation
        check_maurer_cartan(GradedMap::zero(a.module().clone(), a.module().clone(), -1), &a)
            .unwrap();
        check_maurer_cartan(a.d().clone(), &a).unwrap();
        check_maurer_cartan(interval_delta(), &a).unwrap();
        // a degree-0 map is rejected outright
        let id = GradedMap::identity(a.module());
        assert!(matches!(
            check_maurer_cartan(id, &a),
            Err(Error::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn maurer_cartan_violation_reports_degree() {
        // with d = 0 in degrees {0,1,2}, delta needs delta^2 = 0; make it fail
        let m = GradedModule::new(Ring::Integers, [(0, 1), (1, 1), (2, 1)]);
        let d = GradedMap::zero(m.clone(), m.clone(), -1);
        let c = ChainComplex::new(m.clone(), d).unwrap();
        let delta =
            GradedMap::from_entries(m.clone(), m, -1, &[(1, 0, 0, 1), (2, 0, 0, 1)]).unwrap();
        match check_maurer_cartan(delta, &c) {
            Err(Error::MaurerCartan { degree: 2 }) => {}
            other => panic!("expected Maurer-Cartan failure at degree 2, got {other:?}"),
        }
    }

    #[test]
    fn perturbed_interval_differential() {
        let a = interval();
        let p = check_maurer_cartan(interval_delta(), &a).unwrap();
        let ap = p.perturbed();
        // (d + delta)(e) = a - b - a = -b
        let expected = GradedMap::from_entries(
            a.module().clone(),
            a.module().clone(),
            -1,
            &[(1, 1, 0, -1)],
        )
        .unwrap();
        assert_eq!(ap.d(), &expected);
    }

    #[test]
    fn relative_perturbation_recovers_total() {
        for seed in 0..30u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(13));
            let a = interval();
            let m = a.module().clone();
            // any degree -1 endomorphism of the interval satisfies
            // Maurer-Cartan (delta^2 = 0 for degree reasons, D delta = 0)
            let delta = random_endo(&mut rng, &m, -1);
            let eps = random_endo(&mut rng, &m, -1);
            let p = check_maurer_cartan(delta.clone(), &a).unwrap();
            let ad = p.perturbed();
            let rel = check_maurer_cartan(eps.sub(&delta).unwrap(), &ad).unwrap();
            let two_step = rel.perturbed();
            let direct = check_maurer_cartan(eps, &a).unwrap().perturbed();
            assert_eq!(two_step, direct);
        }
    }

    #[test]
    fn hom_complex_of_point_and_interval() {
        let a = interval();
        let b = ChainComplex::point(Ring::Integers);
        let hom = HomComplex::new(&b, &a, None).unwrap();
        let ranks: Vec<(i64, usize)> = hom
            .complex()
            .module()
            .ranks()
            .iter()
            .map(|(&k, &r)| (k, r))
            .collect();
        assert_eq!(ranks, vec![(0, 2), (1, 1)]);
        // point to point: one generator in degree 0, zero differential
        let pp = HomComplex::new(&b, &b, None).unwrap();
        assert_eq!(pp.complex().module().total_rank(), 1);
        assert!(pp.complex().d().is_zero());
    }

    #[test]
    fn hom_window_must_cover_support() {
        let a = interval();
        let b = ChainComplex::point(Ring::Integers);
        assert!(HomComplex::new(&b, &a, Some((0, 1))).is_ok());
        assert!(matches!(
            HomComplex::new(&b, &a, Some((0, 0))),
            Err(Error::WindowTooSmall { lo: 0, hi: 1 })
        ));
    }

    #[test]
    fn universal_property_zero_delta() {
        let a = interval();
        let b = ChainComplex::point(Ring::Integers);
        let p = Perturbation::zero(&a);
        check_universal_property(&b, &p).unwrap();
    }

    #[test]
    fn universal_property_interval_delta() {
        let a = interval();
        let p = check_maurer_cartan(interval_delta(), &a).unwrap();
        for b in [ChainComplex::point(Ring::Integers), interval()] {
            let report = check_universal_property(&b, &p).unwrap();
            assert!(report.covariant_window.is_some());
        }
    }

    #[test]
    fn flatten_inverts_basis_map() {
        let a = interval();
        let b = ChainComplex::point(Ring::Integers);
        let hom = HomComplex::new(&b, &a, None).unwrap();
        for n in hom.complex().module().degrees().collect::<Vec<_>>() {
            for idx in 0..hom.complex().module().rank(n) {
                let e = hom.basis_map(n, idx);
                let coords = hom.flatten(&e).unwrap();
                for (pos, v) in coords.iter().enumerate() {
                    assert_eq!(v.is_zero(), pos != idx);
                }
            }
        }
    }
}
