//! Deterministic random instances for the property suites.
//!
//! Every instance is produced by the same recipe: build a transparent
//! canonical object — a complex of dots and arrows, a retraction that
//! projects away adjoined contractible pairs, a perturbation obtained by
//! conjugating the differential with a triangular automorphism — and then
//! disguise it by conjugating everything with random unimodular graded
//! automorphisms. The canonical stage makes the side conditions (exact
//! nilpotency of the homotopy feedback, the Maurer-Cartan equation) hold by
//! construction, so generation never needs to reject and retry; the
//! disguise stage hides the block structure without breaking any of the
//! identities under test.
//!
//! All randomness flows from a single seeded stream, so equal seeds
//! reproduce equal instances.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bpl::neumann_inverse;
use crate::calculus::NonDgIso;
use crate::complex::{check_maurer_cartan, hom_differential, ChainComplex, Perturbation};
use crate::graded::{GradedMap, GradedModule};
use crate::matrix::Matrix;
use crate::ring::Ring;
use crate::sdr::{Sdr, SdrSquare};

/// A retraction together with two independent admissible perturbations of
/// its large end.
pub struct GeneratedSdr {
    pub sdr: Sdr,
    pub perturbation: Perturbation,
    pub second: Perturbation,
}

/// A two-stage tower of retractions and a perturbation of the top that is
/// admissible for the top stage, the bottom stage after transfer, and the
/// stacked retraction.
pub struct GeneratedTower {
    pub top: Sdr,
    pub bottom: Sdr,
    pub perturbation: Perturbation,
}

/// Seeded source of random complexes, retractions, towers, and squares.
pub struct InstanceGen {
    rng: ChaCha8Rng,
    ring: Ring,
    max_rank: usize,
}

/// Book-keeping for contractible pairs adjoined to a base complex: pair `j`
/// consists of a generator in degree `degrees[j]` killed onto one in degree
/// `degrees[j] - 1`. Within each degree the basis is ordered base part
/// first, then top halves, then bottom halves, each in pair order.
struct PairLayout {
    base: GradedModule,
    degrees: Vec<i64>,
}

impl PairLayout {
    fn module(&self, ring: Ring) -> GradedModule {
        let mut ranks: BTreeMap<i64, usize> = BTreeMap::new();
        for k in self.base.degrees() {
            *ranks.entry(k).or_insert(0) += self.base.rank(k);
        }
        for &t in &self.degrees {
            *ranks.entry(t).or_insert(0) += 1;
            *ranks.entry(t - 1).or_insert(0) += 1;
        }
        GradedModule::new(ring, ranks.into_iter().collect::<Vec<_>>())
    }

    fn tops_at(&self, degree: i64) -> usize {
        self.degrees.iter().filter(|&&t| t == degree).count()
    }

    /// Index of the degree-`t_j` half of pair `j` inside its degree.
    fn top_pos(&self, j: usize) -> (i64, usize) {
        let t = self.degrees[j];
        let earlier = self.degrees[..j].iter().filter(|&&l| l == t).count();
        (t, self.base.rank(t) + earlier)
    }

    /// Index of the degree-`t_j - 1` half of pair `j` inside its degree.
    fn bottom_pos(&self, j: usize) -> (i64, usize) {
        let t = self.degrees[j] - 1;
        let earlier = self.degrees[..j].iter().filter(|&&l| l == t + 1).count();
        (t, self.base.rank(t) + self.tops_at(t) + earlier)
    }
}

impl InstanceGen {
    pub fn new(seed: u64, ring: Ring, max_rank: usize) -> InstanceGen {
        InstanceGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            ring,
            max_rank: max_rank.max(3),
        }
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    fn coefficient(&mut self) -> i64 {
        *[-2, -1, -1, 1, 1, 2]
            .get(self.rng.gen_range(0..6))
            .unwrap()
    }

    /// A strictly triangular degree-0 map: each basis vector goes to a
    /// combination of strictly earlier ones in the same degree.
    fn strict_triangle(&mut self, m: &GradedModule) -> GradedMap {
        let mut blocks = Vec::new();
        for k in m.degrees().collect::<Vec<_>>() {
            let r = m.rank(k);
            let mut b = Matrix::zeros(r, r, &self.ring);
            for j in 1..r {
                for i in 0..j {
                    if self.rng.gen_bool(0.5) {
                        let c = self.coefficient();
                        b.set(i, j, self.ring.from_i64(c));
                    }
                }
            }
            blocks.push((k, b));
        }
        GradedMap::from_blocks(m.clone(), m.clone(), 0, blocks).expect("triangular endomorphism")
    }

    /// `1 + s` with `s` strictly triangular, and its exact inverse.
    pub fn unipotent(&mut self, m: &GradedModule) -> (GradedMap, GradedMap) {
        let s = self.strict_triangle(m);
        let forward = GradedMap::identity(m).add(&s).expect("unipotent map");
        let (inverse, _) = neumann_inverse(&s).expect("triangular maps are nilpotent");
        (forward, inverse)
    }

    /// A unimodular degree-0 automorphism that is not triangular: the
    /// product of a lower and an upper unipotent factor.
    pub fn unimodular(&mut self, m: &GradedModule) -> (GradedMap, GradedMap) {
        let (lo, lo_inv) = self.unipotent(m);
        let up = {
            // transpose the triangular pattern by building it on reversed
            // indices
            let s = self.strict_triangle(m);
            let mut blocks = Vec::new();
            for k in m.degrees().collect::<Vec<_>>() {
                let r = m.rank(k);
                let b = s.block_or_zero(k);
                blocks.push((k, Matrix::from_fn(r, r, |i, j| b.get(r - 1 - i, r - 1 - j).clone())));
            }
            GradedMap::from_blocks(m.clone(), m.clone(), 0, blocks).expect("reversed triangle")
        };
        let up_fwd = GradedMap::identity(m).add(&up).expect("unipotent map");
        let (up_inv, _) = neumann_inverse(&up).expect("triangular maps are nilpotent");
        let forward = lo.compose(&up_fwd).expect("unimodular product");
        let inverse = up_inv.compose(&lo_inv).expect("unimodular inverse");
        assert!(forward
            .compose(&inverse)
            .expect("composable")
            .is_identity());
        (forward, inverse)
    }

    /// A random map of the requested degree with small integer entries.
    pub fn map_between(
        &mut self,
        source: &GradedModule,
        target: &GradedModule,
        degree: i64,
    ) -> GradedMap {
        let mut blocks = Vec::new();
        for k in source.degrees().collect::<Vec<_>>() {
            let rows = target.rank(k + degree);
            let cols = source.rank(k);
            let mut b = Matrix::zeros(rows, cols, &self.ring);
            for i in 0..rows {
                for j in 0..cols {
                    if self.rng.gen_bool(0.6) {
                        let c = self.coefficient();
                        b.set(i, j, self.ring.from_i64(c));
                    }
                }
            }
            blocks.push((k, b));
        }
        GradedMap::from_blocks(source.clone(), target.clone(), degree, blocks)
            .expect("random map")
    }

    /// A complex of dots and arrows: every generator is isolated, the
    /// source of one arrow, or the target of one arrow, so the differential
    /// squares to zero by construction. The result is then conjugated by a
    /// unimodular automorphism to hide the splitting.
    pub fn complex(&mut self) -> ChainComplex {
        let base = self.dots(self.max_rank);
        self.disguise_complex(&base)
    }

    fn dots(&mut self, cap: usize) -> ChainComplex {
        loop {
            let lo = self.rng.gen_range(-2i64..=0);
            let span = self.rng.gen_range(1i64..=2);
            let per_degree = cap.clamp(1, 3);
            let ranks: Vec<(i64, usize)> = (lo..=lo + span)
                .map(|k| (k, self.rng.gen_range(0..=per_degree)))
                .collect();
            let m = GradedModule::new(self.ring, ranks);
            if m.is_zero() {
                continue;
            }
            let mut entries: Vec<(i64, usize, usize, i64)> = Vec::new();
            let mut blocked: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
            let mut descending = m.degrees().collect::<Vec<_>>();
            descending.reverse();
            for k in descending {
                let mut free_targets: Vec<usize> = (0..m.rank(k - 1)).collect();
                for j in 0..m.rank(k) {
                    if blocked.get(&k).map_or(false, |v| v.contains(&j)) {
                        continue;
                    }
                    if free_targets.is_empty() || !self.rng.gen_bool(0.5) {
                        continue;
                    }
                    let pick = self.rng.gen_range(0..free_targets.len());
                    let i = free_targets.remove(pick);
                    let weight = *[1, 1, 1, -1, 2, 3].get(self.rng.gen_range(0..6)).unwrap();
                    entries.push((k, i, j, weight));
                    blocked.entry(k - 1).or_default().push(i);
                }
            }
            let d = GradedMap::from_entries(m.clone(), m.clone(), -1, &entries)
                .expect("dots differential");
            return ChainComplex::new(m, d).expect("dots complex");
        }
    }

    fn disguise_complex(&mut self, c: &ChainComplex) -> ChainComplex {
        let (phi, phi_inv) = self.unimodular(c.module());
        let d = phi
            .compose(c.d())
            .and_then(|x| x.compose(&phi_inv))
            .expect("conjugated differential");
        ChainComplex::new(c.module().clone(), d).expect("conjugated complex")
    }

    /// A perturbation of an arbitrary complex, built by conjugating the
    /// differential: `delta = psi^{-1} d psi - d`.
    pub fn complex_perturbation(&mut self, c: &ChainComplex) -> Perturbation {
        let (psi, psi_inv) = self.unimodular(c.module());
        let conj = psi_inv
            .compose(c.d())
            .and_then(|x| x.compose(&psi))
            .expect("conjugated differential");
        let delta = conj.sub(c.d()).expect("perturbation");
        check_maurer_cartan(delta, c).expect("conjugation satisfies Maurer-Cartan")
    }

    /// An invertible degree-0 map from a complex to itself that is in
    /// general not a chain map.
    pub fn endo_iso(&mut self, c: &ChainComplex) -> NonDgIso {
        let (fwd, inv) = self.unimodular(c.module());
        NonDgIso::new(c.clone(), c.clone(), fwd, inv).expect("unimodular automorphism")
    }

    fn pair_layout(&mut self, base: &GradedModule, count: usize) -> PairLayout {
        let lo = base.min_degree().unwrap_or(0);
        let hi = base.max_degree().unwrap_or(0) + 1;
        let degrees: Vec<i64> = (0..count).map(|_| self.rng.gen_range(lo..=hi)).collect();
        PairLayout {
            base: base.clone(),
            degrees,
        }
    }

    /// The canonical retraction that projects away the adjoined pairs.
    fn canonical_sdr(&mut self, base: &ChainComplex, layout: &PairLayout) -> Sdr {
        let ring = self.ring;
        let bm = base.module().clone();
        let am = layout.module(ring);

        let mut d_blocks = Vec::new();
        let mut f_blocks = Vec::new();
        let mut g_blocks = Vec::new();
        let mut h_blocks = Vec::new();
        for k in am.degrees().collect::<Vec<_>>() {
            let rows = am.rank(k - 1);
            let cols = am.rank(k);
            let db = base.d().block_or_zero(k);
            let mut d = Matrix::zeros(rows, cols, &ring);
            for i in 0..db.rows() {
                for j in 0..db.cols() {
                    d.set(i, j, db.get(i, j).clone());
                }
            }
            d_blocks.push((k, d));

            let mut f = Matrix::zeros(bm.rank(k), cols, &ring);
            let mut g = Matrix::zeros(cols, bm.rank(k), &ring);
            for i in 0..bm.rank(k) {
                f.set(i, i, ring.one());
                g.set(i, i, ring.one());
            }
            f_blocks.push((k, f));
            g_blocks.push((k, g));
            h_blocks.push((k, Matrix::zeros(am.rank(k + 1), cols, &ring)));
        }
        let mut d = GradedMap::from_blocks(am.clone(), am.clone(), -1, d_blocks)
            .expect("canonical differential");
        let f =
            GradedMap::from_blocks(am.clone(), bm.clone(), 0, f_blocks).expect("projection");
        let g =
            GradedMap::from_blocks(bm.clone(), am.clone(), 0, g_blocks).expect("inclusion");
        let mut h = GradedMap::from_blocks(am.clone(), am.clone(), 1, h_blocks)
            .expect("contraction");

        for j in 0..layout.degrees.len() {
            let (t, w) = layout.top_pos(j);
            let (_, z) = layout.bottom_pos(j);
            d = d
                .add(
                    &GradedMap::from_entries(am.clone(), am.clone(), -1, &[(t, z, w, 1)])
                        .expect("pair differential"),
                )
                .expect("assembled differential");
            h = h
                .add(
                    &GradedMap::from_entries(am.clone(), am.clone(), 1, &[(t - 1, w, z, 1)])
                        .expect("pair contraction"),
                )
                .expect("assembled contraction");
        }

        let a = ChainComplex::new(am, d).expect("canonical complex");
        Sdr::new(a, base.clone(), f, g, h).expect("canonical retraction")
    }

    /// A perturbation from a *triangular* conjugation: admissibility
    /// against the canonical contraction is automatic because the feedback
    /// through each pair only reaches strictly earlier pairs.
    fn triangular_perturbation(&mut self, c: &ChainComplex) -> Perturbation {
        let (psi, psi_inv) = self.unipotent(c.module());
        let conj = psi_inv
            .compose(c.d())
            .and_then(|x| x.compose(&psi))
            .expect("conjugated differential");
        let delta = conj.sub(c.d()).expect("perturbation");
        check_maurer_cartan(delta, c).expect("conjugation satisfies Maurer-Cartan")
    }

    fn conjugate_sdr(
        &mut self,
        sdr: &Sdr,
        src: (&GradedMap, &GradedMap),
        tgt: (&GradedMap, &GradedMap),
    ) -> Sdr {
        let a = ChainComplex::new(
            sdr.source().module().clone(),
            src.0
                .compose(sdr.source().d())
                .and_then(|x| x.compose(src.1))
                .expect("conjugated differential"),
        )
        .expect("conjugated source");
        let b = ChainComplex::new(
            sdr.target().module().clone(),
            tgt.0
                .compose(sdr.target().d())
                .and_then(|x| x.compose(tgt.1))
                .expect("conjugated differential"),
        )
        .expect("conjugated target");
        let f = tgt
            .0
            .compose(sdr.f())
            .and_then(|x| x.compose(src.1))
            .expect("conjugated projection");
        let g = src
            .0
            .compose(sdr.g())
            .and_then(|x| x.compose(tgt.1))
            .expect("conjugated inclusion");
        let h = src
            .0
            .compose(sdr.h())
            .and_then(|x| x.compose(src.1))
            .expect("conjugated contraction");
        Sdr::new(a, b, f, g, h).expect("conjugation preserves the relations")
    }

    fn conjugate_perturbation(
        &mut self,
        p: &Perturbation,
        c: &ChainComplex,
        phi: (&GradedMap, &GradedMap),
    ) -> Perturbation {
        let delta = phi
            .0
            .compose(p.delta())
            .and_then(|x| x.compose(phi.1))
            .expect("conjugated perturbation");
        check_maurer_cartan(delta, c).expect("conjugation preserves Maurer-Cartan")
    }

    /// A disguised retraction with two admissible perturbations.
    pub fn sdr(&mut self) -> GeneratedSdr {
        let base_cap = self.max_rank.saturating_sub(2).max(1);
        let base = self.dots(base_cap);
        let pairs = self.rng.gen_range(1..=2);
        let layout = self.pair_layout(base.module(), pairs);
        let canonical = self.canonical_sdr(&base, &layout);
        let p1 = self.triangular_perturbation(canonical.source());
        let p2 = self.triangular_perturbation(canonical.source());

        let (pa, pa_inv) = self.unimodular(canonical.source().module());
        let (pb, pb_inv) = self.unimodular(canonical.target().module());
        let sdr = self.conjugate_sdr(&canonical, (&pa, &pa_inv), (&pb, &pb_inv));
        let perturbation = self.conjugate_perturbation(&p1, sdr.source(), (&pa, &pa_inv));
        let second = self.conjugate_perturbation(&p2, sdr.source(), (&pa, &pa_inv));
        GeneratedSdr {
            sdr,
            perturbation,
            second,
        }
    }

    /// A disguised two-stage tower with a perturbation of the top complex
    /// that is admissible for every way of running the tower.
    pub fn tower(&mut self) -> GeneratedTower {
        let base_cap = self.max_rank.saturating_sub(4).max(1);
        let c = self.dots(base_cap);
        let pairs_b = self.rng.gen_range(1..=2);
        let layout_b = self.pair_layout(c.module(), pairs_b);
        let bottom_canonical = self.canonical_sdr(&c, &layout_b);
        let b = bottom_canonical.source().clone();
        let pairs_a = self.rng.gen_range(1..=2);
        let layout_a = self.pair_layout(b.module(), pairs_a);
        let top_canonical = self.canonical_sdr(&b, &layout_a);
        let p = self.triangular_perturbation(top_canonical.source());

        let (pa, pa_inv) = self.unimodular(top_canonical.source().module());
        let (pb, pb_inv) = self.unimodular(b.module());
        let (pc, pc_inv) = self.unimodular(c.module());
        let top = self.conjugate_sdr(&top_canonical, (&pa, &pa_inv), (&pb, &pb_inv));
        let bottom = self.conjugate_sdr(&bottom_canonical, (&pb, &pb_inv), (&pc, &pc_inv));
        let perturbation = self.conjugate_perturbation(&p, top.source(), (&pa, &pa_inv));
        GeneratedTower {
            top,
            bottom,
            perturbation,
        }
    }

    /// A disguised chain of retractions that stack: the target of each stage
    /// is the source of the next, so the stages compose into one retraction
    /// from the largest complex down to the innermost one.
    pub fn stack(&mut self, levels: usize) -> Vec<Sdr> {
        let levels = levels.max(1);
        let base_cap = self.max_rank.saturating_sub(2 * levels).max(1);
        let mut complex = self.dots(base_cap);
        let mut canonical = Vec::new();
        for _ in 0..levels {
            let pairs = self.rng.gen_range(1..=2);
            let layout = self.pair_layout(complex.module(), pairs);
            let sdr = self.canonical_sdr(&complex, &layout);
            complex = sdr.source().clone();
            canonical.push(sdr);
        }
        canonical.reverse();

        // One disguise per complex in the chain, shared by adjacent stages so
        // the stack still lines up after conjugation.
        let mut disguises = vec![self.unimodular(canonical[0].source().module())];
        for sdr in &canonical {
            disguises.push(self.unimodular(sdr.target().module()));
        }
        let mut stages = Vec::new();
        for (i, sdr) in canonical.iter().enumerate() {
            let (src, src_inv) = &disguises[i];
            let (tgt, tgt_inv) = &disguises[i + 1];
            stages.push(self.conjugate_sdr(sdr, (src, src_inv), (tgt, tgt_inv)));
        }
        stages
    }

    /// A chain automorphism of the large end of a canonical retraction:
    /// `1 + D sigma` where `sigma` pushes the bottom half of each pair into
    /// the base and into earlier pairs, so the correction is nilpotent and
    /// commutes with the differential by construction.
    fn chain_auto(
        &mut self,
        complex: &ChainComplex,
        layout: &PairLayout,
    ) -> (GradedMap, GradedMap) {
        let m = complex.module().clone();
        let mut entries: Vec<(i64, usize, usize, i64)> = Vec::new();
        for j in 0..layout.degrees.len() {
            let (t, _w) = layout.top_pos(j);
            let (zt, z) = layout.bottom_pos(j);
            for i in 0..layout.base.rank(t) {
                if self.rng.gen_bool(0.4) {
                    entries.push((zt, i, z, self.coefficient()));
                }
            }
            for l in 0..j {
                if layout.degrees[l] == layout.degrees[j] && self.rng.gen_bool(0.4) {
                    let (_, wl) = layout.top_pos(l);
                    entries.push((zt, wl, z, self.coefficient()));
                }
            }
        }
        let sigma =
            GradedMap::from_entries(m.clone(), m, 1, &entries).expect("pair shift");
        let correction = hom_differential(&sigma, complex, complex)
            .expect("differential of the shift");
        let forward = GradedMap::identity(complex.module())
            .add(&correction)
            .expect("chain automorphism");
        let (inverse, _) =
            neumann_inverse(&correction).expect("pair-directed corrections are nilpotent");
        (forward, inverse)
    }

    /// The square obtained by twisting a retraction with a chain
    /// automorphism of its large end.
    fn twist_square(&mut self, top: Sdr, layout: &PairLayout) -> SdrSquare {
        let (u, u_inv) = self.chain_auto(top.source(), layout);
        let v = GradedMap::identity(top.target().module());
        let bottom = Sdr::new(
            top.source().clone(),
            top.target().clone(),
            top.f().compose(&u_inv).expect("twisted projection"),
            u.compose(top.g()).expect("twisted inclusion"),
            u.compose(top.h())
                .and_then(|x| x.compose(&u_inv))
                .expect("twisted contraction"),
        )
        .expect("chain conjugation preserves the relations");
        SdrSquare::new(top, bottom, u, v).expect("chain conjugation is natural")
    }

    fn conjugate_square(
        &mut self,
        sq: &SdrSquare,
        src: (&GradedMap, &GradedMap),
        tgt: (&GradedMap, &GradedMap),
    ) -> SdrSquare {
        let top = self.conjugate_sdr(sq.top(), src, tgt);
        let bottom = self.conjugate_sdr(sq.bottom(), src, tgt);
        let u = src
            .0
            .compose(sq.u())
            .and_then(|x| x.compose(src.1))
            .expect("conjugated vertical map");
        let v = tgt
            .0
            .compose(sq.v())
            .and_then(|x| x.compose(tgt.1))
            .expect("conjugated vertical map");
        SdrSquare::new(top, bottom, u, v).expect("conjugation preserves naturality")
    }

    /// A naturality square between a retraction and its twist by a chain
    /// automorphism, disguised by a unimodular conjugation of both ends.
    pub fn square(&mut self) -> SdrSquare {
        let base_cap = self.max_rank.saturating_sub(2).max(1);
        let base = self.dots(base_cap);
        let pairs = self.rng.gen_range(1..=2);
        let layout = self.pair_layout(base.module(), pairs);
        let canonical = self.canonical_sdr(&base, &layout);
        let square = self.twist_square(canonical, &layout);

        let (pa, pa_inv) = self.unimodular(square.top().source().module());
        let (pb, pb_inv) = self.unimodular(square.top().target().module());
        self.conjugate_square(&square, (&pa, &pa_inv), (&pb, &pb_inv))
    }

    /// Two vertically composable squares: the bottom retraction of the
    /// first is the top retraction of the second.
    pub fn square_stack(&mut self) -> (SdrSquare, SdrSquare) {
        let base_cap = self.max_rank.saturating_sub(2).max(1);
        let base = self.dots(base_cap);
        let pairs = self.rng.gen_range(1..=2);
        let layout = self.pair_layout(base.module(), pairs);
        let canonical = self.canonical_sdr(&base, &layout);
        let first = self.twist_square(canonical, &layout);
        let second = self.twist_square(first.bottom().clone(), &layout);

        let (pa, pa_inv) = self.unimodular(first.top().source().module());
        let (pb, pb_inv) = self.unimodular(first.top().target().module());
        (
            self.conjugate_square(&first, (&pa, &pa_inv), (&pb, &pb_inv)),
            self.conjugate_square(&second, (&pa, &pa_inv), (&pb, &pb_inv)),
        )
    }

    /// Two horizontally composable squares over a tower: the right vertical
    /// map of the first square is the left vertical map of the second.
    pub fn square_row(&mut self) -> (SdrSquare, SdrSquare) {
        let base_cap = self.max_rank.saturating_sub(4).max(1);
        let c = self.dots(base_cap);
        let pairs_b = self.rng.gen_range(1..=2);
        let layout_b = self.pair_layout(c.module(), pairs_b);
        let bottom_sdr = self.canonical_sdr(&c, &layout_b);
        let b = bottom_sdr.source().clone();
        let pairs_a = self.rng.gen_range(1..=2);
        let layout_a = self.pair_layout(b.module(), pairs_a);
        let top_sdr = self.canonical_sdr(&b, &layout_a);

        let (ua, ua_inv) = self.chain_auto(top_sdr.source(), &layout_a);
        let (ub, ub_inv) = self.chain_auto(bottom_sdr.source(), &layout_b);
        let wc = GradedMap::identity(c.module());

        let left_bottom = Sdr::new(
            top_sdr.source().clone(),
            top_sdr.target().clone(),
            ub.compose(top_sdr.f())
                .and_then(|x| x.compose(&ua_inv))
                .expect("twisted projection"),
            ua.compose(top_sdr.g())
                .and_then(|x| x.compose(&ub_inv))
                .expect("twisted inclusion"),
            ua.compose(top_sdr.h())
                .and_then(|x| x.compose(&ua_inv))
                .expect("twisted contraction"),
        )
        .expect("chain conjugation preserves the relations");
        let left = SdrSquare::new(top_sdr, left_bottom, ua, ub.clone())
            .expect("chain conjugation is natural");

        let right_bottom = Sdr::new(
            bottom_sdr.source().clone(),
            bottom_sdr.target().clone(),
            bottom_sdr.f().compose(&ub_inv).expect("twisted projection"),
            ub.compose(bottom_sdr.g()).expect("twisted inclusion"),
            ub.compose(bottom_sdr.h())
                .and_then(|x| x.compose(&ub_inv))
                .expect("twisted contraction"),
        )
        .expect("chain conjugation preserves the relations");
        let right = SdrSquare::new(bottom_sdr, right_bottom, ub, wc)
            .expect("chain conjugation is natural");

        let (pa, pa_inv) = self.unimodular(left.top().source().module());
        let (pb, pb_inv) = self.unimodular(left.top().target().module());
        let (pc, pc_inv) = self.unimodular(c.module());
        (
            self.conjugate_square(&left, (&pa, &pa_inv), (&pb, &pb_inv)),
            self.conjugate_square(&right, (&pb, &pb_inv), (&pc, &pc_inv)),
        )
    }
}
