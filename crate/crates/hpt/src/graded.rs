//! Finitely generated free graded modules and graded maps between them.
//!
//! A graded map of degree `n` is stored as one dense block per source degree
//! `k`, mapping the degree-`k` component into degree `k + n`. Absent blocks
//! are zero, and all-zero blocks are dropped on construction, so equality of
//! maps is bit-exact equality of the stored blocks.
//!
//! Sign conventions used throughout the crate:
//! * graded commutator: `[a, b] = a b - (-1)^{|a||b|} b a`;
//! * tensor evaluation: `(f (x) g)(x (x) y) = (-1)^{|g| |x|} f x (x) g y`.
//!
//! The basis of a tensor product in total degree `n` is ordered by
//! `(k, i, j)` lexicographically, where `k` is the left-factor degree (in
//! ascending order), `i` the left basis index, and `j` the right basis index.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ring::{Ring, Scalar};

/// `(-1)^{ab}` as a helper for Koszul signs.
pub fn koszul_sign(a: i64, b: i64) -> i64 {
    if (a * b).rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// A finitely generated free graded module with finite degree support.
///
/// Labels are optional basis decorations; they are carried through
/// serialization but ignored by equality.
#[derive(Clone, Debug)]
pub struct GradedModule {
    ring: Ring,
    ranks: BTreeMap<i64, usize>,
    labels: BTreeMap<i64, Vec<String>>,
}

impl PartialEq for GradedModule {
    fn eq(&self, other: &Self) -> bool {
        self.ring == other.ring && self.ranks == other.ranks
    }
}

impl Eq for GradedModule {}

impl GradedModule {
    pub fn new(ring: Ring, ranks: impl IntoIterator<Item = (i64, usize)>) -> GradedModule {
        let ranks = ranks.into_iter().filter(|&(_, r)| r > 0).collect();
        GradedModule {
            ring,
            ranks,
            labels: BTreeMap::new(),
        }
    }

    /// Rank one in a single degree.
    pub fn concentrated(ring: Ring, degree: i64, rank: usize) -> GradedModule {
        GradedModule::new(ring, [(degree, rank)])
    }

    pub fn with_labels(mut self, degree: i64, labels: &[&str]) -> GradedModule {
        assert_eq!(
            self.rank(degree),
            labels.len(),
            "label count must match the rank"
        );
        self.labels
            .insert(degree, labels.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn set_labels(&mut self, degree: i64, labels: Vec<String>) -> Result<()> {
        if self.rank(degree) != labels.len() {
            return Err(Error::Parse(format!(
                "labels at degree {degree} have length {}, rank is {}",
                labels.len(),
                self.rank(degree)
            )));
        }
        self.labels.insert(degree, labels);
        Ok(())
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn rank(&self, degree: i64) -> usize {
        self.ranks.get(&degree).copied().unwrap_or(0)
    }

    pub fn ranks(&self) -> &BTreeMap<i64, usize> {
        &self.ranks
    }

    pub fn labels(&self) -> &BTreeMap<i64, Vec<String>> {
        &self.labels
    }

    pub fn degrees(&self) -> impl Iterator<Item = i64> + '_ {
        self.ranks.keys().copied()
    }

    pub fn total_rank(&self) -> usize {
        self.ranks.values().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn min_degree(&self) -> Option<i64> {
        self.ranks.keys().next().copied()
    }

    pub fn max_degree(&self) -> Option<i64> {
        self.ranks.keys().next_back().copied()
    }

    /// Tensor product of graded modules. The degree-`n` component is the sum
    /// over `k` of `self_k (x) other_{n-k}`, with the basis ordered by
    /// `(k, i, j)`, `k` ascending.
    pub fn tensor(&self, other: &GradedModule) -> Result<GradedModule> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(self.ring, other.ring));
        }
        let mut ranks: BTreeMap<i64, usize> = BTreeMap::new();
        for (&k, &rk) in &self.ranks {
            for (&l, &rl) in &other.ranks {
                *ranks.entry(k + l).or_insert(0) += rk * rl;
            }
        }
        let mut out = GradedModule::new(self.ring, ranks);
        let fully_labeled = |m: &GradedModule| m.degrees().all(|d| m.labels.contains_key(&d));
        if !self.is_zero() && !other.is_zero() && fully_labeled(self) && fully_labeled(other) {
            for n in out.ranks.keys().copied().collect::<Vec<_>>() {
                let mut names = Vec::new();
                for (k, i, j) in TensorLayout::new(self, other).basis(n) {
                    names.push(format!(
                        "{}(x){}",
                        self.labels[&k][i],
                        other.labels[&(n - k)][j]
                    ));
                }
                out.labels.insert(n, names);
            }
        }
        Ok(out)
    }
}

/// Basis bookkeeping for a tensor product: positions of `(k, i, j)` triples
/// within each total degree.
pub(crate) struct TensorLayout<'a> {
    left: &'a GradedModule,
    right: &'a GradedModule,
}

impl<'a> TensorLayout<'a> {
    pub fn new(left: &'a GradedModule, right: &'a GradedModule) -> TensorLayout<'a> {
        TensorLayout { left, right }
    }

    /// The ordered basis of total degree `n` as `(left degree, left index,
    /// right index)` triples.
    pub fn basis(&self, n: i64) -> Vec<(i64, usize, usize)> {
        let mut out = Vec::new();
        for (&k, &rk) in self.left.ranks() {
            let rl = self.right.rank(n - k);
            for i in 0..rk {
                for j in 0..rl {
                    out.push((k, i, j));
                }
            }
        }
        out
    }

    /// Position of `(k, i, j)` in the ordered basis of total degree `n`.
    pub fn index(&self, n: i64, k: i64, i: usize, j: usize) -> usize {
        let mut offset = 0;
        for (&k2, &rk) in self.left.ranks() {
            let rl = self.right.rank(n - k2);
            if k2 == k {
                return offset + i * rl + j;
            }
            offset += rk * rl;
        }
        panic!("degree {k} not present in left factor");
    }
}

/// A graded map of a fixed degree between two graded modules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedMap {
    source: GradedModule,
    target: GradedModule,
    degree: i64,
    blocks: BTreeMap<i64, Matrix>,
}

impl GradedMap {
    pub fn zero(source: GradedModule, target: GradedModule, degree: i64) -> GradedMap {
        assert_eq!(source.ring, target.ring, "modules over different rings");
        GradedMap {
            source,
            target,
            degree,
            blocks: BTreeMap::new(),
        }
    }

    pub fn identity(module: &GradedModule) -> GradedMap {
        let blocks = module
            .ranks()
            .iter()
            .map(|(&k, &r)| (k, Matrix::identity(r, module.ring())))
            .collect();
        GradedMap {
            source: module.clone(),
            target: module.clone(),
            degree: 0,
            blocks,
        }
        .normalized()
    }

    pub fn from_blocks(
        source: GradedModule,
        target: GradedModule,
        degree: i64,
        blocks: impl IntoIterator<Item = (i64, Matrix)>,
    ) -> Result<GradedMap> {
        if source.ring != target.ring {
            return Err(Error::RingMismatch(source.ring, target.ring));
        }
        let mut out = GradedMap::zero(source, target, degree);
        for (k, m) in blocks {
            let expected_rows = out.target.rank(k + degree);
            let expected_cols = out.source.rank(k);
            if m.rows() != expected_rows || m.cols() != expected_cols {
                return Err(Error::BlockShape {
                    degree: k,
                    expected_rows,
                    expected_cols,
                    rows: m.rows(),
                    cols: m.cols(),
                });
            }
            out.blocks.insert(k, m);
        }
        Ok(out.normalized())
    }

    /// Convenience constructor from a sparse list of
    /// `(source degree, target row, source column, value)` entries.
    pub fn from_entries(
        source: GradedModule,
        target: GradedModule,
        degree: i64,
        entries: &[(i64, usize, usize, i64)],
    ) -> Result<GradedMap> {
        if source.ring != target.ring {
            return Err(Error::RingMismatch(source.ring, target.ring));
        }
        let ring = source.ring;
        let mut blocks: BTreeMap<i64, Matrix> = BTreeMap::new();
        for &(k, i, j, v) in entries {
            let rows = target.rank(k + degree);
            let cols = source.rank(k);
            if i >= rows || j >= cols {
                return Err(Error::BlockShape {
                    degree: k,
                    expected_rows: rows,
                    expected_cols: cols,
                    rows: i + 1,
                    cols: j + 1,
                });
            }
            let m = blocks
                .entry(k)
                .or_insert_with(|| Matrix::zeros(rows, cols, &ring));
            let cur = m.get(i, j).clone();
            m.set(i, j, ring.add(&cur, &ring.from_i64(v)));
        }
        GradedMap::from_blocks(source, target, degree, blocks)
    }

    fn normalized(mut self) -> GradedMap {
        self.blocks
            .retain(|_, m| m.rows() > 0 && m.cols() > 0 && !m.is_zero());
        self
    }

    pub fn source(&self) -> &GradedModule {
        &self.source
    }

    pub fn target(&self) -> &GradedModule {
        &self.target
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn ring(&self) -> &Ring {
        self.source.ring()
    }

    pub fn blocks(&self) -> &BTreeMap<i64, Matrix> {
        &self.blocks
    }

    pub fn block(&self, k: i64) -> Option<&Matrix> {
        self.blocks.get(&k)
    }

    /// The block at source degree `k`, materialized as a (possibly zero)
    /// matrix of the correct shape.
    pub fn block_or_zero(&self, k: i64) -> Matrix {
        match self.blocks.get(&k) {
            Some(m) => m.clone(),
            None => Matrix::zeros(
                self.target.rank(k + self.degree),
                self.source.rank(k),
                self.ring(),
            ),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target
            && self.degree == 0
            && self == &GradedMap::identity(&self.source)
    }

    /// First source degree whose block is nonzero, used as a witness in
    /// error reports.
    pub fn first_nonzero_degree(&self) -> Option<i64> {
        self.blocks.keys().next().copied()
    }

    /// Composition `self . inner` (apply `inner` first).
    pub fn compose(&self, inner: &GradedMap) -> Result<GradedMap> {
        if inner.target != self.source {
            return Err(Error::ModuleMismatch { context: "compose" });
        }
        let ring = *self.ring();
        let mut out = GradedMap::zero(
            inner.source.clone(),
            self.target.clone(),
            self.degree + inner.degree,
        );
        for (&k, first) in &inner.blocks {
            if let Some(second) = self.blocks.get(&(k + inner.degree)) {
                out.blocks.insert(k, second.mul(first, &ring));
            }
        }
        Ok(out.normalized())
    }

    pub fn add(&self, other: &GradedMap) -> Result<GradedMap> {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &GradedMap) -> Result<GradedMap> {
        self.combine(other, true)
    }

    fn combine(&self, other: &GradedMap, subtract: bool) -> Result<GradedMap> {
        if self.source != other.source || self.target != other.target {
            return Err(Error::ModuleMismatch { context: "add" });
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                context: "add",
                expected: self.degree,
                got: other.degree,
            });
        }
        let ring = *self.ring();
        let mut out = GradedMap::zero(self.source.clone(), self.target.clone(), self.degree);
        let keys: std::collections::BTreeSet<i64> = self
            .blocks
            .keys()
            .chain(other.blocks.keys())
            .copied()
            .collect();
        for k in keys {
            let a = self.block_or_zero(k);
            let b = other.block_or_zero(k);
            let m = if subtract {
                a.sub(&b, &ring)
            } else {
                a.add(&b, &ring)
            };
            out.blocks.insert(k, m);
        }
        Ok(out.normalized())
    }

    pub fn neg(&self) -> GradedMap {
        let ring = *self.ring();
        let mut out = self.clone();
        for m in out.blocks.values_mut() {
            *m = m.neg(&ring);
        }
        out.normalized()
    }

    pub fn scale(&self, c: &Scalar) -> GradedMap {
        let ring = *self.ring();
        let mut out = self.clone();
        for m in out.blocks.values_mut() {
            *m = m.scale(c, &ring);
        }
        out.normalized()
    }

    pub fn scale_i64(&self, c: i64) -> GradedMap {
        self.scale(&self.ring().from_i64(c))
    }

    /// Graded commutator `[self, other] = self other - (-1)^{|self||other|}
    /// other self` of two endomorphisms of the same module.
    pub fn bracket(&self, other: &GradedMap) -> Result<GradedMap> {
        if self.source != self.target || other.source != other.target || self.source != other.source
        {
            return Err(Error::ModuleMismatch { context: "bracket" });
        }
        let ab = self.compose(other)?;
        let ba = other.compose(self)?;
        ab.sub(&ba.scale_i64(koszul_sign(self.degree, other.degree)))
    }

    /// Tensor product of maps with the Koszul sign:
    /// `(f (x) g)(x (x) y) = (-1)^{|g||x|} f x (x) g y`.
    pub fn tensor(&self, other: &GradedMap) -> Result<GradedMap> {
        let source = self.source.tensor(&other.source)?;
        let target = self.target.tensor(&other.target)?;
        let degree = self.degree + other.degree;
        let ring = *self.ring();
        let src_layout = TensorLayout::new(&self.source, &other.source);
        let tgt_layout = TensorLayout::new(&self.target, &other.target);
        let mut blocks: BTreeMap<i64, Matrix> = BTreeMap::new();
        for n in source.degrees() {
            let rows = target.rank(n + degree);
            let cols = source.rank(n);
            if rows == 0 || cols == 0 {
                continue;
            }
            let mut m = Matrix::zeros(rows, cols, &ring);
            for (&k, fb) in &self.blocks {
                let Some(gb) = other.blocks.get(&(n - k)) else {
                    continue;
                };
                let sign = koszul_sign(other.degree, k);
                for i2 in 0..fb.rows() {
                    for i in 0..fb.cols() {
                        let fv = fb.get(i2, i);
                        if fv.is_zero() {
                            continue;
                        }
                        for j2 in 0..gb.rows() {
                            for j in 0..gb.cols() {
                                let gv = gb.get(j2, j);
                                if gv.is_zero() {
                                    continue;
                                }
                                let col = src_layout.index(n, k, i, j);
                                let row = tgt_layout.index(n + degree, k + self.degree, i2, j2);
                                let mut v = ring.mul(fv, gv);
                                if sign < 0 {
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
        GradedMap::from_blocks(source, target, degree, blocks)
    }
}
