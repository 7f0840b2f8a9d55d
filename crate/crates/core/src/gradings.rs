//! Partitions indexing pieces, weighted gradings of formed spaces, descending
//! filtrations with their duality constraints, associated graded spaces with
//! induced forms, and graded endomorphisms of degree 2.
//!
//! The basis convention puts weight blocks in strictly decreasing order, so
//! the nonnegative part of the Lie algebra is block upper triangular and the
//! corresponding parabolic subgroup is the block-upper-triangular one. Dual
//! weight blocks V_i and V_{-i} are paired by reversed dual bases, and V_0
//! carries the split form of its kind.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field::FieldRef;
use crate::formspace::{solve_matrix_space, FormedSpace, SpaceKind};
use crate::matrix::Matrix;
use crate::subspace::{complete_basis, Subspace};

/// A partition labelling a piece. For Sp every odd part has even
/// multiplicity; for O every even part has even multiplicity.
#[derive(Clone, PartialEq, Eq, Debug, PartialOrd, Ord, serde::Serialize)]
pub struct PieceLabel {
    pub kind: SpaceKind,
    pub parts: Vec<usize>,
}

impl std::fmt::Display for PieceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

impl PieceLabel {
    pub fn new(kind: SpaceKind, parts: Vec<usize>) -> Result<PieceLabel> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("partition must be weakly decreasing".into()));
        }
        if parts.iter().any(|&p| p == 0) {
            return Err(Error::InvalidArgument("partition parts must be positive".into()));
        }
        let mut mult: BTreeMap<usize, usize> = BTreeMap::new();
        for &p in &parts {
            *mult.entry(p).or_insert(0) += 1;
        }
        match kind {
            SpaceKind::Gl => {}
            SpaceKind::Sp => {
                if mult.iter().any(|(&p, &m)| p % 2 == 1 && m % 2 == 1) {
                    return Err(Error::InvalidArgument(
                        "Sp labels need every odd part with even multiplicity".into(),
                    ));
                }
            }
            SpaceKind::O => {
                if mult.iter().any(|(&p, &m)| p % 2 == 0 && m % 2 == 1) {
                    return Err(Error::InvalidArgument(
                        "O labels need every even part with even multiplicity".into(),
                    ));
                }
            }
        }
        Ok(PieceLabel { kind, parts })
    }

    pub fn dim(&self) -> usize {
        self.parts.iter().sum()
    }

    /// All labels of the given kind and dimension, lexicographically
    /// decreasing.
    pub fn enumerate(kind: SpaceKind, dim: usize) -> Vec<PieceLabel> {
        fn rec(kind: SpaceKind, remaining: usize, max: usize, current: &mut Vec<usize>, out: &mut Vec<PieceLabel>) {
            if remaining == 0 {
                if let Ok(label) = PieceLabel::new(kind, current.clone()) {
                    out.push(label);
                }
                return;
            }
            for next in (1..=remaining.min(max)).rev() {
                current.push(next);
                rec(kind, remaining - next, next, current, out);
                current.pop();
            }
        }
        let mut out = Vec::new();
        let mut current = Vec::new();
        rec(kind, dim, dim, &mut current, &mut out);
        out
    }

    /// Weight multiplicities: each part l contributes weights l-1, l-3, ...,
    /// 1-l. Equivalently d_i = #{parts l > |i| with l = i+1 mod 2}.
    pub fn weight_dims(&self) -> BTreeMap<i32, usize> {
        let mut dims = BTreeMap::new();
        for &part in &self.parts {
            let top = part as i32 - 1;
            let mut w = top;
            while w >= -top {
                *dims.entry(w).or_insert(0) += 1;
                w -= 2;
            }
        }
        dims
    }

    /// Inverse of `weight_dims`: part l has multiplicity d_{l-1} - d_{l+1}.
    pub fn from_weight_dims(kind: SpaceKind, dims: &BTreeMap<i32, usize>) -> Result<PieceLabel> {
        let d = |i: i32| dims.get(&i).copied().unwrap_or(0);
        for (&i, &v) in dims {
            if v != d(-i) {
                return Err(Error::InvalidArgument("weight dims must be symmetric".into()));
            }
        }
        let max = dims.keys().map(|&i| i.abs()).max().unwrap_or(0);
        let mut parts = Vec::new();
        for l in (1..=(max + 1) as usize).rev() {
            let m = d(l as i32 - 1) as i64 - d(l as i32 + 1) as i64;
            if m < 0 {
                return Err(Error::InvalidArgument("weight dims are not a good grading".into()));
            }
            for _ in 0..m {
                parts.push(l);
            }
        }
        PieceLabel::new(kind, parts)
    }
}

/// A formed space with a weight decomposition. Blocks are stored in strictly
/// decreasing weight order, assigned consecutive standard basis vectors.
#[derive(Clone, PartialEq, Debug)]
pub struct GradedSpace {
    pub space: FormedSpace,
    /// (weight, dim, offset), weights strictly decreasing, dims positive.
    pub blocks: Vec<(i32, usize, usize)>,
}

impl GradedSpace {
    /// The canonical split graded arrangement of a label over a field.
    pub fn from_label(label: &PieceLabel, field: FieldRef) -> Result<GradedSpace> {
        let dims = label.weight_dims();
        Self::split_arrangement(label.kind, &dims, field)
    }

    /// Builds the split model with prescribed weight dims: dual blocks paired
    /// by reversed dual bases, V_0 split of its kind.
    pub fn split_arrangement(
        kind: SpaceKind,
        dims: &BTreeMap<i32, usize>,
        field: FieldRef,
    ) -> Result<GradedSpace> {
        let mut blocks = Vec::new();
        let mut offset = 0usize;
        for (&w, &d) in dims.iter().rev() {
            if d == 0 {
                continue;
            }
            blocks.push((w, d, offset));
            offset += d;
        }
        let n = offset;
        let find = |w: i32| blocks.iter().find(|b| b.0 == w).copied();
        let space = match kind {
            SpaceKind::Gl => FormedSpace { kind, dim: n, field, gram: None, quad: None },
            SpaceKind::Sp => {
                let mut gram = Matrix::zeros(field.clone(), n, n);
                for &(w, d, off) in &blocks {
                    if w > 0 {
                        let (_, d2, off2) = find(-w).ok_or_else(|| {
                            Error::InvalidArgument("weight dims must be symmetric".into())
                        })?;
                        if d2 != d {
                            return Err(Error::InvalidArgument("weight dims must be symmetric".into()));
                        }
                        for a in 0..d {
                            gram.set(off + a, off2 + (d - 1 - a), 1);
                            gram.set(off2 + (d - 1 - a), off + a, field.neg(1));
                        }
                    } else if w == 0 {
                        if d % 2 != 0 {
                            return Err(Error::InvalidArgument("Sp needs even d_0".into()));
                        }
                        for i in 0..d / 2 {
                            gram.set(off + 2 * i, off + 2 * i + 1, 1);
                            gram.set(off + 2 * i + 1, off + 2 * i, field.neg(1));
                        }
                    }
                }
                FormedSpace::from_symplectic(n, field, gram)?
            }
            SpaceKind::O => {
                let mut quad = Matrix::zeros(field.clone(), n, n);
                for &(w, d, off) in &blocks {
                    if w > 0 {
                        let (_, d2, off2) = find(-w).ok_or_else(|| {
                            Error::InvalidArgument("weight dims must be symmetric".into())
                        })?;
                        if d2 != d {
                            return Err(Error::InvalidArgument("weight dims must be symmetric".into()));
                        }
                        for a in 0..d {
                            quad.set(off + a, off2 + (d - 1 - a), 1);
                        }
                    } else if w == 0 {
                        for i in 0..d / 2 {
                            quad.set(off + 2 * i, off + 2 * i + 1, 1);
                        }
                        if d % 2 == 1 {
                            quad.set(off + d - 1, off + d - 1, 1);
                        }
                    }
                }
                FormedSpace::from_quadratic(n, field, quad)?
            }
        };
        let gs = GradedSpace { space, blocks };
        gs.check_structure()?;
        Ok(gs)
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn field(&self) -> &FieldRef {
        &self.space.field
    }

    pub fn weight_dims(&self) -> BTreeMap<i32, usize> {
        self.blocks.iter().map(|&(w, d, _)| (w, d)).collect()
    }

    pub fn label(&self) -> Result<PieceLabel> {
        PieceLabel::from_weight_dims(self.space.kind, &self.weight_dims())
    }

    pub fn block(&self, w: i32) -> Option<(usize, usize)> {
        self.blocks.iter().find(|b| b.0 == w).map(|&(_, d, off)| (off, d))
    }

    pub fn block_dim(&self, w: i32) -> usize {
        self.block(w).map_or(0, |(_, d)| d)
    }

    /// Weight of a standard basis index.
    pub fn weight_of(&self, index: usize) -> i32 {
        for &(w, d, off) in &self.blocks {
            if index >= off && index < off + d {
                return w;
            }
        }
        unreachable!("index outside all blocks")
    }

    pub fn top_weight(&self) -> i32 {
        self.blocks.first().map_or(0, |b| b.0)
    }

    /// Good / s-good / o-good conditions plus form compatibility with the
    /// block structure.
    pub fn check_structure(&self) -> Result<()> {
        let dims = self.weight_dims();
        let d = |i: i32| dims.get(&i).copied().unwrap_or(0);
        let m = self.top_weight().max(0);
        for i in 0..=m {
            if d(i) != d(-i) {
                return Err(Error::InvalidArgument(format!("dim V_{i} != dim V_{}", -i)));
            }
            if d(i) < d(i + 2) {
                return Err(Error::InvalidArgument(format!("dim V_{i} < dim V_{}", i + 2)));
            }
        }
        let total: usize = dims.values().sum();
        if total != self.space.dim {
            return Err(Error::InvalidArgument("weight dims do not sum to dim".into()));
        }
        match self.space.kind {
            SpaceKind::Gl => {}
            SpaceKind::Sp => {
                for (&i, &di) in &dims {
                    if i % 2 == 0 && di % 2 != 0 {
                        return Err(Error::InvalidArgument("s-good needs even dims in even weights".into()));
                    }
                }
                self.check_pairing_blocks()?;
            }
            SpaceKind::O => {
                for (&i, &di) in &dims {
                    if i.rem_euclid(2) == 1 && di % 2 != 0 {
                        return Err(Error::InvalidArgument("o-good needs even dims in odd weights".into()));
                    }
                }
                self.check_pairing_blocks()?;
                // Q vanishes on each V_i with i != 0.
                let quad = self.space.quad.as_ref().unwrap();
                for &(w, dd, off) in &self.blocks {
                    if w == 0 {
                        continue;
                    }
                    for r in off..off + dd {
                        for c in off..off + dd {
                            if quad.get(r, c) != 0 {
                                return Err(Error::InvalidArgument(format!("Q does not vanish on V_{w}")));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_pairing_blocks(&self) -> Result<()> {
        let gram = self.space.gram.as_ref().unwrap();
        // The ambient radical, when present, must live inside V_0 and is the
        // only degeneracy the weight-0 pairing block may carry.
        let rad = self.space.radical();
        if !rad.is_zero() {
            let (off0, d0) = self
                .block(0)
                .ok_or_else(|| Error::InvalidArgument("radical outside the weight blocks".into()))?;
            for r in rad.basis_rows() {
                let inside = r
                    .iter()
                    .enumerate()
                    .all(|(i, &v)| v == 0 || (i >= off0 && i < off0 + d0));
                if !inside {
                    return Err(Error::InvalidArgument("radical is not inside V_0".into()));
                }
            }
        }
        for &(wi, di, offi) in &self.blocks {
            for &(wj, dj, offj) in &self.blocks {
                let blk = gram.block(offi..offi + di, offj..offj + dj);
                if wi + wj != 0 {
                    if !blk.is_zero() {
                        return Err(Error::InvalidArgument(format!(
                            "(V_{wi}, V_{wj}) does not vanish"
                        )));
                    }
                } else {
                    let expected = if wi == 0 { di - rad.dim() } else { di };
                    if blk.rank() != expected {
                        return Err(Error::InvalidArgument(format!(
                            "pairing V_{wi} x V_{wj} is singular beyond the radical"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Entry (r, c) of a degree-s graded map may be nonzero only when
    /// weight(r) = weight(c) + s.
    pub fn degree_pattern_ok(&self, mat: &Matrix, s: i32) -> bool {
        for r in 0..self.dim() {
            let wr = self.weight_of(r);
            for c in 0..self.dim() {
                if mat.get(r, c) != 0 && wr != self.weight_of(c) + s {
                    return false;
                }
            }
        }
        true
    }

    /// Basis of the degree-2 part of the Lie algebra.
    pub fn fg2_basis(&self) -> Vec<Matrix> {
        self.fg_graded_basis(2)
    }

    /// Basis of {T in fg : T has pure graded degree s}.
    pub fn fg_graded_basis(&self, s: i32) -> Vec<Matrix> {
        let n = self.dim();
        let mut rows = self.space.lie_constraint_rows();
        for r in 0..n {
            let wr = self.weight_of(r);
            for c in 0..n {
                if wr != self.weight_of(c) + s {
                    let mut row = vec![0u16; n * n];
                    row[r * n + c] = 1;
                    rows.push(row);
                }
            }
        }
        solve_matrix_space(self.field().clone(), n, rows)
    }

    /// Basis of {T in fg : T(V_i) inside V_{>= i+s}} (weights raised by at
    /// least s).
    pub fn fg_shift_basis(&self, s: i32) -> Vec<Matrix> {
        let n = self.dim();
        let mut rows = self.space.lie_constraint_rows();
        for r in 0..n {
            let wr = self.weight_of(r);
            for c in 0..n {
                if wr < self.weight_of(c) + s {
                    let mut row = vec![0u16; n * n];
                    row[r * n + c] = 1;
                    rows.push(row);
                }
            }
        }
        solve_matrix_space(self.field().clone(), n, rows)
    }

    /// Block-diagonal membership: g preserves every V_i.
    pub fn is_block_diagonal(&self, g: &Matrix) -> bool {
        self.degree_pattern_ok(g, 0)
    }

    /// Block-upper-triangularity: g(V_{>=a}) inside V_{>=a} for all a, i.e.
    /// entries below the block diagonal vanish.
    pub fn in_parabolic(&self, g: &Matrix) -> bool {
        for r in 0..self.dim() {
            let wr = self.weight_of(r);
            for c in 0..self.dim() {
                if g.get(r, c) != 0 && wr < self.weight_of(c) {
                    return false;
                }
            }
        }
        true
    }

    /// Strictly-lower unipotent: the identity plus terms that strictly lower
    /// weights.
    pub fn in_opposite_unipotent(&self, g: &Matrix) -> bool {
        for r in 0..self.dim() {
            let wr = self.weight_of(r);
            for c in 0..self.dim() {
                let v = g.get(r, c);
                let wc = self.weight_of(c);
                if r == c {
                    if v != 1 {
                        return false;
                    }
                } else if v != 0 && wr >= wc {
                    return false;
                }
            }
        }
        true
    }

    /// Text format: `kind dim p k` then space-separated `i:d_i` pairs.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} {} {} {}\n",
            self.space.kind,
            self.dim(),
            self.field().characteristic(),
            self.field().degree()
        );
        let pairs: Vec<String> = self.blocks.iter().map(|&(w, d, _)| format!("{w}:{d}")).collect();
        s.push_str(&pairs.join(" "));
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<GradedSpace> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty grading".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::Parse("grading header must be `kind dim p k`".into()));
        }
        let kind = SpaceKind::parse(toks[0])?;
        let dim: usize = toks[1].parse().map_err(|_| Error::Parse("bad dim".into()))?;
        let p: u16 = toks[2].parse().map_err(|_| Error::Parse("bad p".into()))?;
        let k: u32 = toks[3].parse().map_err(|_| Error::Parse("bad k".into()))?;
        let field = crate::field::Field::new(p, k)?;
        let mut dims = BTreeMap::new();
        for tok in lines.flat_map(|l| l.split_whitespace()) {
            let (w, d) = tok
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad weight pair {tok:?}")))?;
            let w: i32 = w.parse().map_err(|_| Error::Parse("bad weight".into()))?;
            let d: usize = d.parse().map_err(|_| Error::Parse("bad weight dim".into()))?;
            dims.insert(w, d);
        }
        let gs = GradedSpace::split_arrangement(kind, &dims, field)?;
        if gs.dim() != dim {
            return Err(Error::Parse("grading dims do not sum to header dim".into()));
        }
        Ok(gs)
    }
}

/// An endomorphism shifting a grading by +2.
#[derive(Clone, PartialEq, Debug)]
pub struct GradedEndo {
    pub mat: Matrix,
}

impl GradedEndo {
    pub fn new(gs: &GradedSpace, mat: Matrix) -> Result<GradedEndo> {
        if mat.rows != gs.dim() || mat.cols != gs.dim() {
            return Err(Error::DimensionMismatch { expected: gs.dim(), got: mat.rows });
        }
        if !gs.degree_pattern_ok(&mat, 2) {
            return Err(Error::Precondition("matrix does not shift the grading by +2".into()));
        }
        Ok(GradedEndo { mat })
    }

    /// The block of A^n mapping the block of `from_weight` to the block of
    /// `from_weight + 2n`.
    pub fn power_block(&self, gs: &GradedSpace, from_weight: i32, n: usize) -> Result<Matrix> {
        let p = self.mat.pow(n)?;
        let (off_from, d_from) = gs
            .block(from_weight)
            .ok_or_else(|| Error::InvalidArgument(format!("no block of weight {from_weight}")))?;
        let to_weight = from_weight + 2 * n as i32;
        let (off_to, d_to) = gs
            .block(to_weight)
            .ok_or_else(|| Error::InvalidArgument(format!("no block of weight {to_weight}")))?;
        Ok(p.block(off_to..off_to + d_to, off_from..off_from + d_from))
    }
}

/// A descending filtration V_{>= a}, stored densely from the first index
/// where it equals V to the first where it vanishes.
#[derive(Clone, Debug)]
pub struct Filtration {
    pub space: FormedSpace,
    lo: i32,
    /// steps[i] = V_{>= lo + i}; steps[0] = V, last = 0.
    steps: Vec<Subspace>,
}

impl PartialEq for Filtration {
    fn eq(&self, other: &Self) -> bool {
        if self.space != other.space {
            return false;
        }
        let (lo1, hi1) = self.support();
        let (lo2, hi2) = other.support();
        if (lo1, hi1) != (lo2, hi2) {
            return false;
        }
        (lo1..=hi1).all(|a| self.step(a) == other.step(a))
    }
}
impl Eq for Filtration {}

impl Filtration {
    pub fn new(space: FormedSpace, lo: i32, steps: Vec<Subspace>) -> Result<Filtration> {
        if steps.len() < 2 || !steps[0].is_full() || !steps.last().unwrap().is_zero() {
            return Err(Error::InvalidArgument(
                "filtration must run from the full space down to zero".into(),
            ));
        }
        for w in steps.windows(2) {
            if !w[0].contains(&w[1]) {
                return Err(Error::InvalidArgument("filtration steps must descend".into()));
            }
        }
        Ok(Filtration { space, lo, steps })
    }

    pub fn from_grading(gs: &GradedSpace) -> Filtration {
        let field = gs.field().clone();
        let n = gs.dim();
        if n == 0 {
            return Filtration {
                space: gs.space.clone(),
                lo: 0,
                steps: vec![Subspace::zero(field.clone(), 0), Subspace::zero(field, 0)],
            };
        }
        let top = gs.blocks.first().unwrap().0;
        let bottom = gs.blocks.last().unwrap().0;
        let mut steps = Vec::new();
        for a in bottom..=top + 1 {
            // Blocks are consecutive in decreasing weight, so V_{>= a} is a
            // standard coordinate subspace.
            let count: usize = gs.blocks.iter().filter(|b| b.0 >= a).map(|b| b.1).sum();
            let rows: Vec<Vec<u16>> = (0..count)
                .map(|i| {
                    let mut r = vec![0u16; n];
                    r[i] = 1;
                    r
                })
                .collect();
            steps.push(Subspace::from_rows(field.clone(), n, rows));
        }
        Filtration { space: gs.space.clone(), lo: bottom, steps }
    }

    pub fn step(&self, a: i32) -> &Subspace {
        if a < self.lo {
            &self.steps[0]
        } else if a >= self.lo + self.steps.len() as i32 {
            self.steps.last().unwrap()
        } else {
            &self.steps[(a - self.lo) as usize]
        }
    }

    /// Smallest range [lo, hi] with step(lo) = V and step(hi) = 0.
    pub fn support(&self) -> (i32, i32) {
        let mut lo = self.lo;
        while lo + 1 < self.lo + self.steps.len() as i32 && self.step(lo + 1).is_full() {
            lo += 1;
        }
        let mut hi = self.lo + self.steps.len() as i32 - 1;
        while hi - 1 > lo && self.step(hi - 1).is_zero() {
            hi -= 1;
        }
        (lo, hi)
    }

    pub fn graded_dims(&self) -> BTreeMap<i32, usize> {
        let (lo, hi) = self.support();
        let mut dims = BTreeMap::new();
        for a in lo..hi {
            let d = self.step(a).dim() - self.step(a + 1).dim();
            if d > 0 {
                dims.insert(a, d);
            }
        }
        dims
    }

    pub fn label(&self) -> Result<PieceLabel> {
        PieceLabel::from_weight_dims(self.space.kind, &self.graded_dims())
    }

    /// Membership in the set of good (self-dual / Q-) filtrations.
    ///
    /// Duality is checked once per distinct positive step: the checks at
    /// repeated steps and at nonpositive indices follow from these together
    /// with the symmetry of the graded dimensions, which `label()` enforces.
    /// Q-vanishing on V_{>=1} covers all higher steps.
    pub fn validate(&self) -> Result<()> {
        self.label()?;
        let (_, hi) = self.support();
        match self.space.kind {
            SpaceKind::Gl => {}
            SpaceKind::Sp | SpaceKind::O => {
                let gram = self.space.gram.as_ref().unwrap();
                if self.space.kind == SpaceKind::O && !self.space.q_vanishes_on(self.step(1)) {
                    return Err(Error::InvalidArgument("Q does not vanish on step 1".into()));
                }
                let mut prev_dim = usize::MAX;
                for a in 1..=hi.max(1) {
                    let st = self.step(a);
                    if st.dim() == prev_dim {
                        continue;
                    }
                    prev_dim = st.dim();
                    if st.perp_with(gram) != *self.step(1 - a) {
                        return Err(Error::InvalidArgument(format!("duality fails at step {a}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// A(V_{>= a}) inside V_{>= a+2} for all a; on failure reports the first
    /// bad index.
    pub fn endo_shifts_by_two(&self, a: &Matrix) -> Result<()> {
        let (lo, hi) = self.support();
        for lvl in lo..=hi {
            let target = self.step(lvl + 2);
            for row in self.step(lvl).basis_rows() {
                let img = a.mul_vec(row)?;
                if !target.contains_vec(&img) {
                    return Err(Error::Precondition(format!(
                        "endomorphism does not shift step {lvl} into step {}",
                        lvl + 2
                    )));
                }
            }
        }
        Ok(())
    }

    /// Linear constraints on T forcing T(V_{>=a}) inside V_{>=a+s}.
    pub fn shift_constraint_rows(&self, s: i32) -> Vec<Vec<u16>> {
        let n = self.space.dim;
        let (lo, hi) = self.support();
        let mut rows = Vec::new();
        for a in lo..=hi {
            let source = self.step(a);
            let target = self.step(a + s);
            if target.is_full() {
                continue;
            }
            // Functionals annihilating the target.
            let (_, ann, _) = target.basis().rank_kernel_image();
            for v in source.basis_rows() {
                for phi in ann.basis_rows() {
                    let mut row = vec![0u16; n * n];
                    for r in 0..n {
                        if phi[r] == 0 {
                            continue;
                        }
                        for c in 0..n {
                            let f = &self.space.field;
                            row[r * n + c] = f.add(row[r * n + c], f.mul(phi[r], v[c]));
                        }
                    }
                    rows.push(row);
                }
            }
        }
        rows
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        let (lo, hi) = self.support();
        let mut out = Vec::new();
        out.extend_from_slice(&lo.to_le_bytes());
        out.extend_from_slice(&hi.to_le_bytes());
        for a in lo..=hi {
            self.step(a).canonical_bytes(&mut out);
        }
        out
    }

    /// Transforms the filtration by an invertible map: steps become images.
    pub fn transform(&self, g: &Matrix) -> Result<Filtration> {
        let mut steps = Vec::new();
        for s in &self.steps {
            let rows: Vec<Vec<u16>> = s
                .basis_rows()
                .map(|r| g.mul_vec(r))
                .collect::<Result<_>>()?;
            steps.push(Subspace::from_rows(self.space.field.clone(), self.space.dim, rows));
        }
        Filtration::new(self.space.clone(), self.lo, steps)
    }

    /// Text format: the space descriptor, then one `a dim` line per step
    /// followed by its RREF basis rows.
    pub fn to_text(&self) -> String {
        let mut s = self.space.to_descriptor();
        let (lo, hi) = self.support();
        for a in lo..=hi {
            let st = self.step(a);
            s.push_str(&format!("{} {}\n", a, st.dim()));
            for row in st.basis_rows() {
                let row: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                s.push_str(&row.join(" "));
                s.push('\n');
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Filtration> {
        let lines: Vec<&str> = text.lines().collect();
        // The descriptor spans the header plus any form blocks; find the
        // first step line, which starts with an integer step index.
        let is_step_header = |l: &str| -> bool {
            let toks: Vec<&str> = l.split_whitespace().collect();
            toks.len() == 2 && toks[0].parse::<i32>().is_ok() && toks[1].parse::<usize>().is_ok()
        };
        // Parse the descriptor by trying successively longer prefixes.
        let mut space = None;
        let mut body_start = 0;
        for (i, line) in lines.iter().enumerate() {
            if i > 0 && is_step_header(line) {
                if let Ok(s) = FormedSpace::from_descriptor(&lines[..i].join("\n")) {
                    space = Some(s);
                    body_start = i;
                    break;
                }
            }
        }
        let space = space.ok_or_else(|| Error::Parse("no step lines after the descriptor".into()))?;
        let field = space.field.clone();
        let n = space.dim;
        let mut steps: Vec<(i32, Subspace)> = Vec::new();
        let mut i = body_start;
        while i < lines.len() {
            let line = lines[i].trim();
            if line.is_empty() {
                i += 1;
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(Error::Parse(format!("expected `a dim` step line, got {line:?}")));
            }
            let a: i32 = toks[0].parse().map_err(|_| Error::Parse("bad step index".into()))?;
            let d: usize = toks[1].parse().map_err(|_| Error::Parse("bad step dim".into()))?;
            let mut rows = Vec::with_capacity(d);
            for r in 0..d {
                let row_line = lines
                    .get(i + 1 + r)
                    .ok_or_else(|| Error::Parse("truncated step basis".into()))?;
                let row: Vec<u16> = row_line
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::Parse("bad basis entry".into())))
                    .collect::<Result<_>>()?;
                if row.len() != n {
                    return Err(Error::Parse("basis row length mismatch".into()));
                }
                rows.push(row);
            }
            steps.push((a, Subspace::from_rows(field.clone(), n, rows)));
            i += 1 + d;
        }
        if steps.is_empty() {
            return Err(Error::Parse("filtration has no steps".into()));
        }
        let lo = steps.first().unwrap().0;
        for (offset, (a, _)) in steps.iter().enumerate() {
            if *a != lo + offset as i32 {
                return Err(Error::Parse("step indices must be consecutive".into()));
            }
        }
        let mut subs: Vec<Subspace> = steps.into_iter().map(|(_, s)| s).collect();
        if !subs.first().unwrap().is_full() {
            subs.insert(0, Subspace::full(field.clone(), n));
            return Filtration::new(space, lo - 1, {
                if !subs.last().unwrap().is_zero() {
                    subs.push(Subspace::zero(field, n));
                }
                subs
            });
        }
        if !subs.last().unwrap().is_zero() {
            subs.push(Subspace::zero(field, n));
        }
        Filtration::new(space, lo, subs)
    }
}

/// The associated graded of a filtration: a graded space with induced forms,
/// plus the section data needed to transport endomorphisms.
pub struct GradedFrame {
    pub graded: GradedSpace,
    /// Section vectors as rows, in block order (decreasing weight).
    pub sections: Matrix,
    /// Inverse of sections^T, turning ambient vectors into section
    /// coordinates with one multiplication.
    coord_solver: Matrix,
}

impl GradedFrame {
    pub fn new(graded: GradedSpace, sections: Matrix) -> Result<GradedFrame> {
        let coord_solver = if sections.rows == 0 {
            sections.clone()
        } else {
            sections
                .transpose()
                .inverse()?
                .ok_or_else(|| Error::Internal("sections do not form a basis".into()))?
        };
        Ok(GradedFrame { graded, sections, coord_solver })
    }

    /// Coordinates of an ambient vector in the section basis.
    pub fn coordinates(&self, v: &[u16]) -> Result<Vec<u16>> {
        self.coord_solver.mul_vec(v)
    }

    /// The graded degree-2 endomorphism induced by a filtered endomorphism.
    pub fn induce(&self, filt: &Filtration, a: &Matrix) -> Result<GradedEndo> {
        filt.endo_shifts_by_two(a)?;
        let n = self.graded.dim();
        let mut out = Matrix::zeros(self.graded.field().clone(), n, n);
        for c in 0..n {
            let w = self.graded.weight_of(c);
            let img = a.mul_vec(self.sections.row(c))?;
            let coords = self.coordinates(&img)?;
            if let Some((off, d)) = self.graded.block(w + 2) {
                for r in off..off + d {
                    out.set(r, c, coords[r]);
                }
            }
        }
        GradedEndo::new(&self.graded, out)
    }
}

/// Associated graded space of a filtration, with the induced symplectic or
/// quadratic form. Sections are chosen by greedy lowest-index completion of
/// each step inside the previous one; the induced data is independent of
/// that choice.
pub fn associated_graded(filt: &Filtration) -> Result<GradedFrame> {
    filt.validate()?;
    let field = filt.space.field.clone();
    let n = filt.space.dim;
    let (lo, hi) = filt.support();
    let mut blocks = Vec::new();
    let mut section_rows: Vec<Vec<u16>> = Vec::new();
    let mut offset = 0usize;
    for a in (lo..hi).rev() {
        let secs = complete_basis(filt.step(a), filt.step(a + 1))?;
        if secs.is_empty() {
            continue;
        }
        blocks.push((a, secs.len(), offset));
        offset += secs.len();
        section_rows.extend(secs);
    }
    let sections = if section_rows.is_empty() {
        Matrix::zeros(field.clone(), 0, n)
    } else {
        Matrix::from_rows(field.clone(), section_rows.clone()).unwrap()
    };
    let weight_of = |idx: usize| -> i32 {
        for &(w, d, off) in &blocks {
            if idx >= off && idx < off + d {
                return w;
            }
        }
        unreachable!()
    };
    let space = match filt.space.kind {
        SpaceKind::Gl => FormedSpace { kind: SpaceKind::Gl, dim: n, field, gram: None, quad: None },
        SpaceKind::Sp => {
            let mut gram = Matrix::zeros(field.clone(), n, n);
            for r in 0..n {
                for c in 0..n {
                    if weight_of(r) + weight_of(c) == 0 {
                        let v = filt.space.pair(&section_rows[r], &section_rows[c]);
                        gram.set(r, c, v);
                    }
                }
            }
            FormedSpace::from_symplectic(n, field, gram)?
        }
        SpaceKind::O => {
            let mut quad = Matrix::zeros(field.clone(), n, n);
            for r in 0..n {
                let wr = weight_of(r);
                for c in r..n {
                    let wc = weight_of(c);
                    if wr + wc == 0 {
                        if r == c {
                            quad.set(r, c, filt.space.q_value(&section_rows[r]));
                        } else {
                            quad.set(r, c, filt.space.pair(&section_rows[r], &section_rows[c]));
                        }
                    }
                }
            }
            FormedSpace::from_quadratic(n, field, quad)?
        }
    };
    let graded = GradedSpace { space, blocks };
    graded.check_structure().map_err(|e| {
        Error::Internal(format!("associated graded is not a valid graded space: {e}"))
    })?;
    GradedFrame::new(graded, sections)
}

/// Number of subspaces of dimension d in F_q^m (Gaussian binomial).
pub fn gaussian_binomial(m: usize, d: usize, q: u128) -> u128 {
    if d > m {
        return 0;
    }
    let mut num = 1u128;
    let mut den = 1u128;
    for i in 0..d {
        num *= q.pow((m - i) as u32) - 1;
        den *= q.pow((i + 1) as u32) - 1;
    }
    num / den
}

/// Visits every subspace of dimension d of F_q^m, as canonical RREF bases,
/// by enumerating pivot-column patterns and free entries.
pub fn for_each_subspace<F>(field: &FieldRef, m: usize, d: usize, cb: &mut F) -> Result<()>
where
    F: FnMut(Subspace) -> Result<()>,
{
    if d > m {
        return Ok(());
    }
    if d == 0 {
        return cb(Subspace::zero(field.clone(), m));
    }
    let mut pivots: Vec<usize> = (0..d).collect();
    loop {
        let mut free = Vec::new();
        for r in 0..d {
            for c in pivots[r] + 1..m {
                if !pivots.contains(&c) {
                    free.push((r, c));
                }
            }
        }
        let q = field.order() as u64;
        let total = q.pow(free.len() as u32);
        let mut idx = vec![0u16; free.len()];
        for _ in 0..total {
            let mut basis = Matrix::zeros(field.clone(), d, m);
            for r in 0..d {
                basis.set(r, pivots[r], 1);
            }
            for (pos, &(r, c)) in free.iter().enumerate() {
                basis.set(r, c, idx[pos]);
            }
            cb(Subspace::from_matrix_rows(&basis))?;
            for v in idx.iter_mut() {
                *v += 1;
                if (*v as usize) < field.order() {
                    break;
                }
                *v = 0;
            }
        }
        // Next pivot combination.
        let mut i = d;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            if pivots[i] < m - (d - i) {
                pivots[i] += 1;
                for j in i + 1..d {
                    pivots[j] = pivots[j - 1] + 1;
                }
                break;
            }
        }
    }
}

struct FiltEnumCtx<'a> {
    space: &'a FormedSpace,
    field: FieldRef,
    n: usize,
    budget: u64,
    visited: u64,
}

/// All filtrations of the given label type over the space, subject to the
/// duality and singularity constraints of its kind. For Sp and O only the
/// positive steps are free; the nonpositive ones are forced by duality.
pub fn enumerate_filtrations(
    space: &FormedSpace,
    label: &PieceLabel,
    budget: u64,
) -> Result<Vec<Filtration>> {
    if label.kind != space.kind || label.dim() != space.dim {
        return Err(Error::InvalidArgument("label does not match the space".into()));
    }
    let dims = label.weight_dims();
    let field = space.field.clone();
    let n = space.dim;
    let top = dims.keys().max().copied().unwrap_or(0);
    let step_dim = |a: i32| -> usize { dims.iter().filter(|(&w, _)| w >= a).map(|(_, &d)| d).sum() };
    let mut out: Vec<Filtration> = Vec::new();
    let mut ctx = FiltEnumCtx { space, field: field.clone(), n, budget, visited: 0 };

    // Levels of distinct intermediate dimension the chain must visit, ordered
    // by decreasing step index (deepest, smallest subspace first).
    let mut levels: Vec<(i32, usize)> = if space.kind == SpaceKind::Gl {
        ((-top + 1)..=top).rev().map(|a| (a, step_dim(a))).collect()
    } else {
        (1..=top.max(0)).rev().map(|a| (a, step_dim(a))).collect()
    };
    levels.retain(|&(_, d)| d > 0 && d < n);
    levels.dedup_by_key(|x| x.1);

    fn rec(
        ctx: &mut FiltEnumCtx,
        label: &PieceLabel,
        dims: &BTreeMap<i32, usize>,
        top: i32,
        levels: &[(i32, usize)],
        idx: usize,
        chain: &mut Vec<(i32, Subspace)>,
        out: &mut Vec<Filtration>,
    ) -> Result<()> {
        if idx == levels.len() {
            return assemble(ctx, label, dims, top, chain, out);
        }
        let (lvl, d) = levels[idx];
        let prev = chain
            .last()
            .map(|(_, s)| s.clone())
            .unwrap_or_else(|| Subspace::zero(ctx.field.clone(), ctx.n));
        // Candidates of dimension d containing prev; for Sp and O they must
        // stay inside perp(prev) to remain isotropic.
        let bound = match ctx.space.kind {
            SpaceKind::Gl => Subspace::full(ctx.field.clone(), ctx.n),
            _ => prev.perp_with(ctx.space.gram.as_ref().unwrap()),
        };
        let chart = crate::subspace::SubquotientChart::new(&bound, &prev)?;
        let qdim = chart.quotient_dim();
        let want = d - prev.dim();
        let count = gaussian_binomial(qdim, want, ctx.field.order() as u128);
        ctx.visited = ctx.visited.saturating_add(count as u64);
        if ctx.visited > ctx.budget {
            return Err(Error::Infeasible { needed: ctx.visited as u128, budget: ctx.budget as u128 });
        }
        let field = ctx.field.clone();
        let mut subs = Vec::new();
        for_each_subspace(&field, qdim, want, &mut |s| {
            subs.push(s);
            Ok(())
        })?;
        for s in subs {
            let mut rows: Vec<Vec<u16>> = prev.basis_rows().map(|r| r.to_vec()).collect();
            for r in s.basis_rows() {
                rows.push(chart.lift(r));
            }
            let lifted = Subspace::from_rows(ctx.field.clone(), ctx.n, rows);
            if lifted.dim() != d {
                continue;
            }
            let ok = match ctx.space.kind {
                SpaceKind::Gl => true,
                SpaceKind::Sp => {
                    let rows: Vec<&[u16]> = lifted.basis_rows().collect();
                    rows.iter()
                        .enumerate()
                        .all(|(i, r)| rows.iter().skip(i).all(|r2| ctx.space.pair(r, r2) == 0))
                }
                SpaceKind::O => ctx.space.q_vanishes_on(&lifted),
            };
            if !ok {
                continue;
            }
            chain.push((lvl, lifted));
            rec(ctx, label, dims, top, levels, idx + 1, chain, out)?;
            chain.pop();
        }
        Ok(())
    }

    fn assemble(
        ctx: &mut FiltEnumCtx,
        label: &PieceLabel,
        dims: &BTreeMap<i32, usize>,
        top: i32,
        chain: &[(i32, Subspace)],
        out: &mut Vec<Filtration>,
    ) -> Result<()> {
        let step_dim = |a: i32| -> usize { dims.iter().filter(|(&w, _)| w >= a).map(|(_, &d)| d).sum() };
        let field = ctx.field.clone();
        let n = ctx.n;
        let bottom = -top;
        let by_dim = |d: usize| -> Option<Subspace> {
            if d == n {
                Some(Subspace::full(field.clone(), n))
            } else if d == 0 {
                Some(Subspace::zero(field.clone(), n))
            } else {
                chain.iter().find(|(_, s)| s.dim() == d).map(|(_, s)| s.clone())
            }
        };
        let mut steps = Vec::new();
        for a in bottom..=top + 1 {
            let d = step_dim(a);
            let sub = match ctx.space.kind {
                SpaceKind::Gl => by_dim(d).expect("chain covers all dims"),
                _ => {
                    if a >= 1 || d == n {
                        by_dim(d).expect("positive chain covers all dims")
                    } else {
                        // Forced by duality: V_{>=a} = perp(V_{>=1-a}).
                        let dual = step_dim(1 - a);
                        let dual_sub = by_dim(dual).expect("dual step exists");
                        dual_sub.perp_with(ctx.space.gram.as_ref().unwrap())
                    }
                }
            };
            steps.push(sub);
        }
        let Ok(filt) = Filtration::new(ctx.space.clone(), bottom, steps) else {
            return Ok(());
        };
        if filt.graded_dims() == *dims
            && filt.label().map(|l| l == *label).unwrap_or(false)
            && filt.validate().is_ok()
        {
            out.push(filt);
        }
        Ok(())
    }

    let mut chain = Vec::new();
    rec(&mut ctx, label, &dims, top, &levels, 0, &mut chain, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;

    fn f2() -> FieldRef {
        Field::new(2, 1).unwrap()
    }
    fn f3() -> FieldRef {
        Field::new(3, 1).unwrap()
    }

    #[test]
    fn label_enumeration() {
        let gl3: Vec<String> = PieceLabel::enumerate(SpaceKind::Gl, 3).iter().map(|l| l.to_string()).collect();
        assert_eq!(gl3, vec!["[3]", "[2,1]", "[1,1,1]"]);
        let sp4: Vec<String> = PieceLabel::enumerate(SpaceKind::Sp, 4).iter().map(|l| l.to_string()).collect();
        assert_eq!(sp4, vec!["[4]", "[2,2]", "[2,1,1]", "[1,1,1,1]"]);
        let o5: Vec<String> = PieceLabel::enumerate(SpaceKind::O, 5).iter().map(|l| l.to_string()).collect();
        assert_eq!(o5, vec!["[5]", "[3,1,1]", "[2,2,1]", "[1,1,1,1,1]"]);
    }

    #[test]
    fn weight_dims_formula() {
        let l = PieceLabel::new(SpaceKind::Gl, vec![1, 1]).unwrap();
        assert_eq!(l.weight_dims(), BTreeMap::from([(0, 2)]));
        let l = PieceLabel::new(SpaceKind::Gl, vec![2]).unwrap();
        assert_eq!(l.weight_dims(), BTreeMap::from([(1, 1), (-1, 1)]));
        let l = PieceLabel::new(SpaceKind::Gl, vec![3, 1]).unwrap();
        assert_eq!(l.weight_dims(), BTreeMap::from([(2, 1), (0, 2), (-2, 1)]));
    }

    #[test]
    fn label_roundtrip_all_dims_up_to_8() {
        for kind in [SpaceKind::Gl, SpaceKind::Sp, SpaceKind::O] {
            for dim in 1..=8 {
                if kind == SpaceKind::Sp && dim % 2 == 1 {
                    continue;
                }
                for label in PieceLabel::enumerate(kind, dim) {
                    let dims = label.weight_dims();
                    let back = PieceLabel::from_weight_dims(kind, &dims).unwrap();
                    assert_eq!(label, back);
                }
            }
        }
    }

    #[test]
    fn graded_space_structure_all_small_labels() {
        for kind in [SpaceKind::Gl, SpaceKind::Sp, SpaceKind::O] {
            for dim in 1..=7 {
                if kind == SpaceKind::Sp && dim % 2 == 1 {
                    continue;
                }
                for label in PieceLabel::enumerate(kind, dim) {
                    for field in [f2(), f3()] {
                        let gs = GradedSpace::from_label(&label, field).unwrap();
                        assert_eq!(gs.label().unwrap(), label);
                        gs.check_structure().unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn filtration_from_grading_trivial_and_22() {
        let l = PieceLabel::new(SpaceKind::Gl, vec![1, 1, 1]).unwrap();
        let gs = GradedSpace::from_label(&l, f2()).unwrap();
        let filt = Filtration::from_grading(&gs);
        assert!(filt.step(0).is_full());
        assert!(filt.step(1).is_zero());

        let l = PieceLabel::new(SpaceKind::Gl, vec![2]).unwrap();
        let gs = GradedSpace::from_label(&l, f2()).unwrap();
        let filt = Filtration::from_grading(&gs);
        assert_eq!(filt.step(-1).dim(), 2);
        assert_eq!(filt.step(0).dim(), 1);
        assert_eq!(filt.step(1).dim(), 1);
        assert_eq!(filt.step(2).dim(), 0);
    }

    #[test]
    fn filtration_step_dims_for_31() {
        let l = PieceLabel::new(SpaceKind::Gl, vec![3, 1]).unwrap();
        let gs = GradedSpace::from_label(&l, f2()).unwrap();
        let filt = Filtration::from_grading(&gs);
        let dims: Vec<usize> = (-2..=3).map(|a| filt.step(a).dim()).collect();
        assert_eq!(dims, vec![4, 3, 3, 1, 1, 0]);
        assert_eq!(filt.label().unwrap(), l);
    }

    #[test]
    fn filtration_duality_for_forms() {
        for (kind, parts) in [
            (SpaceKind::Sp, vec![4usize]),
            (SpaceKind::Sp, vec![2, 2]),
            (SpaceKind::O, vec![3, 1, 1]),
            (SpaceKind::O, vec![5]),
            (SpaceKind::O, vec![2, 2, 1]),
        ] {
            for field in [f2(), f3()] {
                let l = PieceLabel::new(kind, parts.clone()).unwrap();
                let gs = GradedSpace::from_label(&l, field).unwrap();
                let filt = Filtration::from_grading(&gs);
                filt.validate().unwrap();
            }
        }
    }

    #[test]
    fn associated_graded_of_grading_reproduces_it() {
        for (kind, parts) in [
            (SpaceKind::Gl, vec![3usize, 1]),
            (SpaceKind::Sp, vec![2, 2]),
            (SpaceKind::O, vec![3, 1, 1]),
        ] {
            let l = PieceLabel::new(kind, parts).unwrap();
            let gs = GradedSpace::from_label(&l, f2()).unwrap();
            let filt = Filtration::from_grading(&gs);
            let frame = associated_graded(&filt).unwrap();
            assert_eq!(frame.graded.weight_dims(), gs.weight_dims());
            assert_eq!(frame.graded.space, gs.space);
            // Sections of a graded filtration are the standard basis.
            assert_eq!(frame.sections, Matrix::identity(f2(), gs.dim()));
        }
    }

    #[test]
    fn induced_map_on_jordan_block_filtration() {
        // J_3 with its canonical filtration: induced blocks are identity maps.
        let l = PieceLabel::new(SpaceKind::Gl, vec![3]).unwrap();
        let gs = GradedSpace::from_label(&l, f2()).unwrap();
        let filt = Filtration::from_grading(&gs);
        let a = Matrix::from_rows(f2(), vec![vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 0]]).unwrap();
        let frame = associated_graded(&filt).unwrap();
        let induced = frame.induce(&filt, &a).unwrap();
        assert_eq!(induced.mat, a);
        let z = Matrix::zeros(f2(), 3, 3);
        assert!(frame.induce(&filt, &z).unwrap().mat.is_zero());
    }

    #[test]
    fn induced_map_is_independent_of_sections() {
        let l = PieceLabel::new(SpaceKind::Gl, vec![3]).unwrap();
        let gs = GradedSpace::from_label(&l, f2()).unwrap();
        let filt = Filtration::from_grading(&gs);
        let a = Matrix::from_rows(f2(), vec![vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 0]]).unwrap();
        let frame = associated_graded(&filt).unwrap();
        let induced = frame.induce(&filt, &a).unwrap();
        // Shift the weight-0 section by a vector of the next step; its class
        // is unchanged, so the induced matrix must be identical.
        let mut sections = frame.sections.clone();
        sections.set(1, 0, 1);
        let frame2 = GradedFrame::new(frame.graded.clone(), sections).unwrap();
        let induced2 = frame2.induce(&filt, &a).unwrap();
        assert_eq!(induced.mat, induced2.mat);
    }

    #[test]
    fn fg2_dims_match_hand_counts() {
        // GL label [2]: fg_2 = Hom(V_{-1}, V_1), dimension 1.
        let l = PieceLabel::new(SpaceKind::Gl, vec![2]).unwrap();
        let gs = GradedSpace::from_label(&l, f2()).unwrap();
        assert_eq!(gs.fg2_basis().len(), 1);
        // GL label [3]: Hom(V_{-2},V_0) + Hom(V_0,V_2), dimension 2.
        let l = PieceLabel::new(SpaceKind::Gl, vec![3]).unwrap();
        let gs = GradedSpace::from_label(&l, f2()).unwrap();
        assert_eq!(gs.fg2_basis().len(), 2);
        assert_eq!(gs.fg_shift_basis(3).len(), 1);
    }

    #[test]
    fn subspace_enumeration_counts() {
        let mut count = 0u64;
        for_each_subspace(&f2(), 4, 2, &mut |_| {
            count += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(count as u128, gaussian_binomial(4, 2, 2));
        assert_eq!(gaussian_binomial(4, 2, 2), 35);
        let mut count3 = 0u64;
        for_each_subspace(&f3(), 3, 1, &mut |_| {
            count3 += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(count3, 13);
    }

    #[test]
    fn filtration_enumeration_gl2() {
        let space = FormedSpace::split(SpaceKind::Gl, 2, f2()).unwrap();
        let l2 = PieceLabel::new(SpaceKind::Gl, vec![2]).unwrap();
        let filts = enumerate_filtrations(&space, &l2, 1 << 20).unwrap();
        assert_eq!(filts.len(), 3); // lines in F_2^2
        let l11 = PieceLabel::new(SpaceKind::Gl, vec![1, 1]).unwrap();
        let filts = enumerate_filtrations(&space, &l11, 1 << 20).unwrap();
        assert_eq!(filts.len(), 1);
    }

    #[test]
    fn filtration_enumeration_respects_membership() {
        for (kind, dim, field) in [
            (SpaceKind::Sp, 4usize, f2()),
            (SpaceKind::O, 5, f2()),
            (SpaceKind::Sp, 4, f3()),
        ] {
            let space = FormedSpace::split(kind, dim, field).unwrap();
            for label in PieceLabel::enumerate(kind, dim) {
                let filts = enumerate_filtrations(&space, &label, 1 << 22).unwrap();
                for f in &filts {
                    f.validate().unwrap();
                    assert_eq!(f.label().unwrap(), label);
                }
                assert!(!filts.is_empty(), "no filtrations for {label} over {kind} {dim}");
            }
        }
    }

    #[test]
    fn grading_text_roundtrip() {
        let l = PieceLabel::new(SpaceKind::O, vec![3, 1, 1]).unwrap();
        let gs = GradedSpace::from_label(&l, f2()).unwrap();
        let text = gs.to_text();
        let back = GradedSpace::from_text(&text).unwrap();
        assert_eq!(gs, back);
    }

    #[test]
    fn filtration_text_roundtrip() {
        for (kind, parts, field) in [
            (SpaceKind::Gl, vec![3usize, 1], f2()),
            (SpaceKind::Sp, vec![2, 2], f3()),
            (SpaceKind::O, vec![3, 1, 1], f2()),
        ] {
            let l = PieceLabel::new(kind, parts).unwrap();
            let gs = GradedSpace::from_label(&l, field).unwrap();
            let filt = Filtration::from_grading(&gs);
            let back = Filtration::from_text(&filt.to_text()).unwrap();
            assert_eq!(filt, back);
        }
    }
}
