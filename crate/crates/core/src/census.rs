//! Exhaustive censuses: every nilpotent element of the Lie algebra and every
//! unipotent element of the group over F_q is classified into its piece and
//! subpiece, counts are aggregated per label, and the counting identities are
//! verified (totals q^#roots, the three-factor product per label, equality of
//! the nilpotent and unipotent sides, and power-of-two subpiece counts).
//!
//! Enumeration ranges are partitioned across workers; partial tallies form a
//! commutative monoid and merging them is the only synchronization point.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::field::{Field, FieldRef};
use crate::formspace::{FormedSpace, SpaceKind};
use crate::gradings::{enumerate_filtrations, GradedEndo, GradedSpace, PieceLabel};
use crate::matrix::{Matrix, SpanIter};
use crate::pieces::{
    enumerate_bang_set, enumerate_subpiece_functions, subpiece_invariant, subpiece_m_set,
    BangQuery, SubpieceLabel,
};
use crate::recovery::{classify_nilpotent, classify_unipotent};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Number of roots of the group: GL_n has n^2 - n, Sp_2n and SO_2n+1 have
/// 2n^2, split SO_2n has 2n^2 - 2n.
pub fn root_count(kind: SpaceKind, dim: usize) -> usize {
    match kind {
        SpaceKind::Gl => dim * dim - dim,
        SpaceKind::Sp => {
            let n = dim / 2;
            2 * n * n
        }
        SpaceKind::O => {
            let n = dim / 2;
            if dim % 2 == 1 {
                2 * n * n
            } else {
                2 * n * n - 2 * n
            }
        }
    }
}

/// The field F_q for a prime-power order q with p in {2,3,5,7}.
pub fn field_for_order(q: usize) -> Result<FieldRef> {
    for p in [2u16, 3, 5, 7] {
        let mut k = 0u32;
        let mut acc = 1usize;
        while acc < q {
            acc *= p as usize;
            k += 1;
        }
        if acc == q && k >= 1 {
            return Field::new(p, k);
        }
    }
    Err(Error::InvalidArgument(format!(
        "{q} is not a supported prime power (p in {{2,3,5,7}}, p^k <= 2401)"
    )))
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SubpieceCount {
    pub m: Vec<usize>,
    pub f: Vec<u8>,
    pub nilpotent_count: u64,
    pub unipotent_count: u64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct LabelReport {
    pub partition: Vec<usize>,
    pub nilpotent_count: u64,
    pub unipotent_count: u64,
    /// Distinct filtrations observed among classified elements.
    pub filtration_count: u64,
    /// Dimension of the part of the Lie algebra raising weights by >= 3.
    pub dim_g_ge3: usize,
    /// Distinguished subset cardinality on the standard grading.
    pub bang_set_count: u64,
    pub subpieces: Vec<SubpieceCount>,
    /// Cardinality of the admissible function set X for this label.
    pub x_size: u64,
    pub factorization_ok: bool,
    pub match_ok: bool,
    pub subpiece_count_power_of_two: bool,
    /// Observed subpiece count equals |X| (informational).
    pub subpiece_count_matches_x: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CensusVerdicts {
    pub totals_ok: bool,
    pub factorization_ok: bool,
    pub nil_uni_match_ok: bool,
    pub subpieces_ok: bool,
    pub all_ok: bool,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CensusReport {
    pub schema_version: u32,
    pub kind: String,
    pub dim: usize,
    pub q: usize,
    pub roots: usize,
    pub expected_total: u64,
    pub nilpotent_total: u64,
    pub unipotent_total: u64,
    pub labels: Vec<LabelReport>,
    pub verdicts: CensusVerdicts,
}

impl CensusReport {
    pub fn all_ok(&self) -> bool {
        self.verdicts.all_ok
    }

    /// One line per label: partition;nil;uni;filtrations;dim_g_ge3;bang;subpieces
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("partition;nilpotent_count;unipotent_count;filtration_count;dim_g_ge3;bang_set_count;subpiece_count\n");
        for l in &self.labels {
            let parts: Vec<String> = l.partition.iter().map(|p| p.to_string()).collect();
            s.push_str(&format!(
                "[{}];{};{};{};{};{};{}\n",
                parts.join(","),
                l.nilpotent_count,
                l.unipotent_count,
                l.filtration_count,
                l.dim_g_ge3,
                l.bang_set_count,
                l.subpieces.len()
            ));
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CensusOptions {
    pub workers: usize,
    pub budget: u64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions { workers: 1, budget: crate::element_budget() }
    }
}

/// Per-label tally; a commutative monoid under `merge`.
#[derive(Clone, Default)]
struct LabelTally {
    nil: u64,
    uni: u64,
    filts: BTreeSet<Vec<u8>>,
    subs: BTreeMap<SubpieceLabel, (u64, u64)>,
}

#[derive(Clone, Default)]
struct Tally {
    by_label: BTreeMap<Vec<usize>, LabelTally>,
}

impl Tally {
    fn record(&mut self, parts: Vec<usize>, filt_key: Vec<u8>, sub: Option<SubpieceLabel>, unipotent: bool) {
        let entry = self.by_label.entry(parts).or_default();
        if unipotent {
            entry.uni += 1;
        } else {
            entry.nil += 1;
        }
        entry.filts.insert(filt_key);
        if let Some(s) = sub {
            let slot = entry.subs.entry(s).or_insert((0, 0));
            if unipotent {
                slot.1 += 1;
            } else {
                slot.0 += 1;
            }
        }
    }

    fn merge(&mut self, other: Tally) {
        for (k, v) in other.by_label {
            let entry = self.by_label.entry(k).or_default();
            entry.nil += v.nil;
            entry.uni += v.uni;
            entry.filts.extend(v.filts);
            for (s, (n, u)) in v.subs {
                let slot = entry.subs.entry(s).or_insert((0, 0));
                slot.0 += n;
                slot.1 += u;
            }
        }
    }
}

/// Visits the nilpotent members of the Lie algebra over F_q within an index
/// range of the deterministic enumeration order.
pub fn for_each_lie_nilpotent<F>(
    space: &FormedSpace,
    range: std::ops::Range<u128>,
    cb: &mut F,
) -> Result<()>
where
    F: FnMut(&Matrix) -> Result<()>,
{
    let basis = space.lie_algebra_basis()?;
    let mut iter = SpanIter::new(space.field.clone(), basis, space.dim, space.dim);
    let total = iter.total();
    let end = range.end.min(total);
    if range.start >= end {
        return Ok(());
    }
    iter.seek(range.start);
    let mut index = range.start;
    loop {
        if iter.current().is_nilpotent()? {
            cb(iter.current())?;
        }
        index += 1;
        if index >= end || !iter.advance() {
            break;
        }
    }
    Ok(())
}

/// Total size of the Lie algebra point count q^dim(fg).
pub fn lie_algebra_points(space: &FormedSpace) -> Result<u128> {
    let basis = space.lie_algebra_basis()?;
    Ok((space.field.order() as u128).pow(basis.len() as u32))
}

/// Collects all unipotent elements of the group: 1 + nilpotent for GL, and
/// the unipotent members of the isometry enumeration for Sp and O (for O,
/// membership in the special orthogonal group).
pub fn collect_unipotents(space: &FormedSpace, budget: u64) -> Result<Vec<Matrix>> {
    let mut out = Vec::new();
    match space.kind {
        SpaceKind::Gl => {
            let total = lie_algebra_points(space)?;
            if total > budget as u128 {
                return Err(Error::Infeasible { needed: total, budget: budget as u128 });
            }
            let one = Matrix::identity(space.field.clone(), space.dim);
            for_each_lie_nilpotent(space, 0..total, &mut |m| {
                out.push(one.add(m)?);
                Ok(())
            })?;
        }
        _ => {
            // The isometry enumeration already guarantees form preservation;
            // only the special-orthogonal side condition needs a filter (and
            // it is vacuous for Sp and for O of odd dimension over p = 2).
            let needs_so_filter = space.kind == SpaceKind::O
                && !(space.field.characteristic() == 2 && space.dim % 2 == 1);
            let one = Matrix::identity(space.field.clone(), space.dim);
            space.for_each_isometry(budget, &mut |g| {
                let x = g.sub(&one)?;
                if x.is_nilpotent()? && (!needs_so_filter || space.in_group(g)?) {
                    out.push(g.clone());
                }
                Ok(())
            })?;
        }
    }
    Ok(out)
}

fn classify_and_record(space: &FormedSpace, m: &Matrix, unipotent: bool, tally: &mut Tally) -> Result<()> {
    let classified = if unipotent {
        classify_unipotent(space, m)?
    } else {
        classify_nilpotent(space, m)?
    };
    tally.record(
        classified.label.parts.clone(),
        classified.filtration.canonical_bytes(),
        classified.subpiece,
        unipotent,
    );
    Ok(())
}

/// Runs the full census for (kind, dim, q): classifies every nilpotent and
/// every unipotent element, aggregates per label and subpiece, and evaluates
/// every verdict.
pub fn run_census(kind: SpaceKind, dim: usize, q: usize, opts: CensusOptions) -> Result<CensusReport> {
    let field = field_for_order(q)?;
    let space = FormedSpace::split(kind, dim, field.clone())?;
    let budget = opts.budget;
    let workers = opts.workers.max(1);

    // Nilpotent side, partitioned by enumeration index.
    let total = lie_algebra_points(&space)?;
    if total > budget as u128 {
        return Err(Error::Infeasible { needed: total, budget: budget as u128 });
    }
    let mut tally = Tally::default();
    if workers == 1 {
        for_each_lie_nilpotent(&space, 0..total, &mut |m| {
            classify_and_record(&space, m, false, &mut tally)
        })?;
    } else {
        let chunk = total / workers as u128 + 1;
        let results: Vec<Result<Tally>> = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for w in 0..workers {
                let space = space.clone();
                let start = chunk * w as u128;
                let end = (chunk * (w as u128 + 1)).min(total);
                handles.push(scope.spawn(move || {
                    let mut local = Tally::default();
                    for_each_lie_nilpotent(&space, start..end, &mut |m| {
                        classify_and_record(&space, m, false, &mut local)
                    })?;
                    Ok(local)
                }));
            }
            handles.into_iter().map(|h| h.join().expect("census worker panicked")).collect()
        });
        for r in results {
            tally.merge(r?);
        }
    }

    // Unipotent side: collect, then classify in parallel chunks.
    let unipotents = collect_unipotents(&space, budget)?;
    if workers == 1 {
        for u in &unipotents {
            classify_and_record(&space, u, true, &mut tally)?;
        }
    } else {
        let chunk = unipotents.len() / workers + 1;
        let results: Vec<Result<Tally>> = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for slice in unipotents.chunks(chunk) {
                let space = space.clone();
                handles.push(scope.spawn(move || {
                    let mut local = Tally::default();
                    for u in slice {
                        classify_and_record(&space, u, true, &mut local)?;
                    }
                    Ok(local)
                }));
            }
            handles.into_iter().map(|h| h.join().expect("census worker panicked")).collect()
        });
        for r in results {
            tally.merge(r?);
        }
    }

    assemble_report(kind, dim, q, &space, tally, budget)
}

fn assemble_report(
    kind: SpaceKind,
    dim: usize,
    q: usize,
    space: &FormedSpace,
    tally: Tally,
    budget: u64,
) -> Result<CensusReport> {
    let roots = root_count(kind, dim);
    let expected_total = (q as u128).pow(roots as u32);
    let expected_total: u64 = expected_total
        .try_into()
        .map_err(|_| Error::Infeasible { needed: (q as u128).pow(roots as u32), budget: u64::MAX as u128 })?;

    let mut labels = Vec::new();
    let mut nil_total = 0u64;
    let mut uni_total = 0u64;
    let mut factorization_all = true;
    let mut match_all = true;
    let mut subpieces_all = true;

    for label in PieceLabel::enumerate(kind, dim) {
        let t = tally.by_label.get(&label.parts).cloned().unwrap_or_default();
        nil_total += t.nil;
        uni_total += t.uni;
        let grading = GradedSpace::from_label(&label, space.field.clone())?;
        let bang = enumerate_bang_set(&grading, budget)?.len() as u64;
        let d3 = grading.fg_shift_basis(3).len();
        let x_size = if kind == SpaceKind::O
            && space.field.characteristic() == 2
            && !subpiece_m_set(&grading).is_empty()
        {
            enumerate_subpiece_functions(&grading).len() as u64
        } else {
            1
        };
        let filt_count = t.filts.len() as u64;
        let qd3 = (q as u128).pow(d3 as u32) as u64;
        let factorization_ok =
            t.nil == filt_count * qd3 * bang && t.uni == filt_count * qd3 * bang;
        let match_ok = t.nil == t.uni
            && t.subs.values().all(|&(n, u)| n == u);
        let observed_subs = t.subs.len() as u64;
        let subpiece_count_power_of_two =
            observed_subs == 0 || observed_subs.is_power_of_two();
        let subpiece_count_matches_x = if t.subs.is_empty() {
            // Labels without the invariant count as a single subpiece.
            x_size == 1 || t.nil == 0
        } else {
            observed_subs == x_size
        };
        factorization_all &= factorization_ok;
        match_all &= match_ok;
        subpieces_all &= subpiece_count_power_of_two;
        labels.push(LabelReport {
            partition: label.parts.clone(),
            nilpotent_count: t.nil,
            unipotent_count: t.uni,
            filtration_count: filt_count,
            dim_g_ge3: d3,
            bang_set_count: bang,
            subpieces: t
                .subs
                .iter()
                .map(|(s, &(n, u))| SubpieceCount {
                    m: s.m.clone(),
                    f: s.f.clone(),
                    nilpotent_count: n,
                    unipotent_count: u,
                })
                .collect(),
            x_size,
            factorization_ok,
            match_ok,
            subpiece_count_power_of_two,
            subpiece_count_matches_x,
        });
    }

    let totals_ok = nil_total == expected_total && uni_total == expected_total;
    let all_ok = totals_ok && factorization_all && match_all && subpieces_all;
    Ok(CensusReport {
        schema_version: REPORT_SCHEMA_VERSION,
        kind: kind.to_string(),
        dim,
        q,
        roots,
        expected_total,
        nilpotent_total: nil_total,
        unipotent_total: uni_total,
        labels,
        verdicts: CensusVerdicts {
            totals_ok,
            factorization_ok: factorization_all,
            nil_uni_match_ok: match_all,
            subpieces_ok: subpieces_all,
            all_ok,
        },
    })
}

// ---------------------------------------------------------------------------
// Orbit oracle
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, serde::Serialize)]
pub struct OrbitReport {
    pub kind: String,
    pub partition: Vec<usize>,
    pub q: usize,
    pub bang_count: u64,
    pub group0_order: u64,
    pub orbit_count: usize,
    pub orbit_sizes: Vec<usize>,
    pub f_class_count: usize,
    pub x_size: u64,
    pub f_constant_on_orbits: bool,
    pub f_classes_match_x: bool,
    pub orbit_count_is_power_of_two: bool,
}

/// Block-diagonal members of the group: the Levi subgroup attached to the
/// grading.
pub fn enumerate_level_zero_group(gs: &GradedSpace, budget: u64) -> Result<Vec<Matrix>> {
    let field = gs.field().clone();
    let n = gs.dim();
    let mut basis = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if gs.weight_of(r) == gs.weight_of(c) {
                let mut m = Matrix::zeros(field.clone(), n, n);
                m.set(r, c, 1);
                basis.push(m);
            }
        }
    }
    let mut iter = SpanIter::new(field.clone(), basis, n, n);
    if iter.total() > budget as u128 {
        return Err(Error::Infeasible { needed: iter.total(), budget: budget as u128 });
    }
    let mut out = Vec::new();
    loop {
        let g = iter.current();
        let ok = match gs.space.kind {
            SpaceKind::Gl => g.inverse()?.is_some(),
            _ => gs.space.in_group(g)?,
        };
        if ok {
            out.push(g.clone());
        }
        if !iter.advance() {
            break;
        }
    }
    Ok(out)
}

/// Partitions the distinguished set into conjugation orbits of the Levi and
/// compares with the subpiece invariant classes.
pub fn orbit_oracle(gs: &GradedSpace, element_budget: u64, oracle_budget: u64) -> Result<OrbitReport> {
    let bang = enumerate_bang_set(gs, element_budget)?;
    let group = enumerate_level_zero_group(gs, oracle_budget)?;
    let key = |m: &Matrix| m.data.clone();
    let index: BTreeMap<Vec<u16>, usize> =
        bang.iter().enumerate().map(|(i, m)| (key(m), i)).collect();
    let mut orbit_of = vec![usize::MAX; bang.len()];
    let mut orbit_sizes = Vec::new();
    for start in 0..bang.len() {
        if orbit_of[start] != usize::MAX {
            continue;
        }
        let orbit_id = orbit_sizes.len();
        let mut members = BTreeSet::new();
        for g in &group {
            let ginv = g
                .inverse()?
                .ok_or_else(|| Error::Internal("group element is singular".into()))?;
            let conj = g.mul(&bang[start])?.mul(&ginv)?;
            let idx = *index
                .get(&key(&conj))
                .ok_or_else(|| Error::Internal("conjugate left the distinguished set".into()))?;
            members.insert(idx);
        }
        for &m in &members {
            orbit_of[m] = orbit_id;
        }
        orbit_sizes.push(members.len());
    }

    // Subpiece classes.
    let has_subpiece = gs.space.kind == SpaceKind::O
        && gs.field().characteristic() == 2
        && !subpiece_m_set(gs).is_empty();
    let mut class_of: Vec<Option<SubpieceLabel>> = Vec::with_capacity(bang.len());
    for a in &bang {
        if has_subpiece {
            let endo = GradedEndo::new(gs, a.clone())?;
            let q = BangQuery::new(gs, &endo)?;
            class_of.push(Some(subpiece_invariant(&q)?));
        } else {
            class_of.push(None);
        }
    }
    let distinct: BTreeSet<Option<SubpieceLabel>> = class_of.iter().cloned().collect();
    let f_class_count = if bang.is_empty() { 0 } else { distinct.len() };
    let x_size = if has_subpiece {
        enumerate_subpiece_functions(gs).len() as u64
    } else {
        1
    };
    let mut f_constant = true;
    for orbit_id in 0..orbit_sizes.len() {
        let classes: BTreeSet<&Option<SubpieceLabel>> = (0..bang.len())
            .filter(|&i| orbit_of[i] == orbit_id)
            .map(|i| &class_of[i])
            .collect();
        if classes.len() > 1 {
            f_constant = false;
        }
    }
    let orbit_count = orbit_sizes.len();
    orbit_sizes.sort_unstable();
    Ok(OrbitReport {
        kind: gs.space.kind.to_string(),
        partition: gs.label()?.parts,
        q: gs.field().order(),
        bang_count: bang.len() as u64,
        group0_order: group.len() as u64,
        orbit_count,
        orbit_sizes,
        f_class_count,
        x_size,
        f_constant_on_orbits: f_constant,
        f_classes_match_x: (f_class_count as u64) == x_size || bang.is_empty(),
        orbit_count_is_power_of_two: orbit_count == 0 || orbit_count.is_power_of_two(),
    })
}

// ---------------------------------------------------------------------------
// Polynomiality
// ---------------------------------------------------------------------------

/// Exact rational for small interpolation problems.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Ratio {
    num: i128,
    den: i128,
}

impl Ratio {
    fn new(num: i128, den: i128) -> Ratio {
        assert!(den != 0);
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i128;
        let sign = if den < 0 { -1 } else { 1 };
        Ratio { num: sign * num / g.max(1), den: sign * den / g.max(1) }
    }
    fn int(v: i128) -> Ratio {
        Ratio { num: v, den: 1 }
    }
    fn add(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }
    fn mul(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.num, self.den * o.den)
    }
    fn is_integer(self) -> bool {
        self.den == 1
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// Lagrange interpolation through exact rationals; returns coefficients from
/// constant term upward.
fn interpolate(points: &[(i128, i128)]) -> Vec<Ratio> {
    let n = points.len();
    let mut coeffs = vec![Ratio::int(0); n];
    for (i, &(xi, yi)) in points.iter().enumerate() {
        // Basis polynomial prod_{j != i} (x - x_j) / (x_i - x_j).
        let mut basis = vec![Ratio::int(0); n];
        basis[0] = Ratio::int(1);
        let mut deg = 0usize;
        let mut denom = Ratio::int(1);
        for (j, &(xj, _)) in points.iter().enumerate() {
            if j == i {
                continue;
            }
            // Multiply by (x - xj).
            for d in (0..=deg).rev() {
                let c = basis[d];
                basis[d + 1] = basis[d + 1].add(c);
                basis[d] = c.mul(Ratio::int(-xj));
            }
            deg += 1;
            denom = denom.mul(Ratio::int(xi - xj));
        }
        let scale = Ratio::new(denom.den, denom.num).mul(Ratio::int(yi));
        for d in 0..n {
            coeffs[d] = coeffs[d].add(basis[d].mul(scale));
        }
    }
    coeffs
}

fn eval(coeffs: &[Ratio], x: i128) -> Ratio {
    let mut acc = Ratio::int(0);
    for &c in coeffs.iter().rev() {
        acc = acc.mul(Ratio::int(x)).add(c);
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub enum FitStatus {
    /// Interpolated on the degree bound and verified on extra points.
    Pinned,
    /// Exactly determined by the points, integer coefficients; no slack left
    /// to cross-check.
    ExactFit,
    /// Too few points for the degree bound; reported, not judged.
    Insufficient,
    Failed(String),
}

impl FitStatus {
    pub fn is_failure(&self) -> bool {
        matches!(self, FitStatus::Failed(_))
    }
}

/// Fits an integer polynomial of bounded degree through exact points,
/// verifying any surplus points lie on it.
pub fn fit_integer_polynomial(points: &[(u128, u128)], degree_bound: usize) -> (FitStatus, Vec<i128>) {
    let pts: Vec<(i128, i128)> = points.iter().map(|&(x, y)| (x as i128, y as i128)).collect();
    if pts.len() < degree_bound + 1 {
        return (FitStatus::Insufficient, Vec::new());
    }
    let (fit_pts, check_pts) = pts.split_at(degree_bound + 1);
    let coeffs = interpolate(fit_pts);
    if coeffs.iter().any(|c| !c.is_integer()) {
        return (FitStatus::Failed("coefficients are not integers".into()), Vec::new());
    }
    for &(x, y) in check_pts {
        let v = eval(&coeffs, x);
        if !(v.is_integer() && v.num == y) {
            return (
                FitStatus::Failed(format!("value at q={x} is {y}, polynomial predicts {}", v.num)),
                Vec::new(),
            );
        }
    }
    let ints: Vec<i128> = coeffs.iter().map(|c| c.num).collect();
    let status = if check_pts.is_empty() { FitStatus::ExactFit } else { FitStatus::Pinned };
    (status, ints)
}

/// Verifies consistency of extra points against a polynomial fitted on a
/// subset (used for the odd-q / characteristic-2 comparison).
fn fit_and_check_rest(
    fit_points: &[(u128, u128)],
    check_points: &[(u128, u128)],
    degree_bound: usize,
) -> FitStatus {
    if fit_points.len() < degree_bound + 1 {
        return FitStatus::Insufficient;
    }
    let pts: Vec<(i128, i128)> = fit_points
        .iter()
        .take(degree_bound + 1)
        .map(|&(x, y)| (x as i128, y as i128))
        .collect();
    let coeffs = interpolate(&pts);
    if coeffs.iter().any(|c| !c.is_integer()) {
        return FitStatus::Failed("coefficients are not integers".into());
    }
    for &(x, y) in fit_points.iter().skip(degree_bound + 1).chain(check_points) {
        let v = eval(&coeffs, x as i128);
        if !(v.is_integer() && v.num == y as i128) {
            return FitStatus::Failed(format!(
                "value at q={x} is {y}, polynomial from fitting subset predicts {}",
                v.num
            ));
        }
    }
    FitStatus::Pinned
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct PolyLabelReport {
    pub partition: Vec<usize>,
    /// d with |G_{>=3}| = q^d; exact by construction.
    pub dim_g_ge3: usize,
    /// Degree bounds: the flag factor by dim of the negative part, the
    /// distinguished factor by dim of the weight-2 part.
    pub flag_degree_bound: usize,
    pub bang_degree_bound: usize,
    pub flag_counts: Vec<u64>,
    pub bang_counts: Vec<u64>,
    pub counts: Vec<u64>,
    pub flag_fit: FitStatus,
    pub bang_fit: FitStatus,
    pub count_fit: FitStatus,
    /// Even-q (characteristic 2) values checked against the polynomial
    /// determined by odd q, factor by factor.
    pub flag_odd_fit: FitStatus,
    pub bang_odd_fit: FitStatus,
    pub flag_coeffs: Vec<i128>,
    pub bang_coeffs: Vec<i128>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct PolyReport {
    pub kind: String,
    pub dim: usize,
    pub q_values: Vec<usize>,
    pub labels: Vec<PolyLabelReport>,
    pub all_ok: bool,
}

/// Per-label counts across a list of field sizes, fitted to integer
/// polynomials factor by factor following the product structure
/// count = (#filtrations) * q^{dim g_{>=3}} * (#distinguished).
///
/// The flag and distinguished factors are computed by direct enumeration at
/// every q, independently of any census.
pub fn verify_polynomiality(
    kind: SpaceKind,
    dim: usize,
    q_values: &[usize],
    budget: u64,
) -> Result<PolyReport> {
    let mut labels_out = Vec::new();
    let mut all_ok = true;
    for label in PieceLabel::enumerate(kind, dim) {
        let mut flag_counts = Vec::new();
        let mut bang_counts = Vec::new();
        let mut counts = Vec::new();
        let mut d3 = 0usize;
        let mut flag_bound = 0usize;
        let mut bang_bound = 0usize;
        for &q in q_values {
            let field = field_for_order(q)?;
            let grading = GradedSpace::from_label(&label, field.clone())?;
            let space = FormedSpace::split(kind, dim, field.clone())?;
            d3 = grading.fg_shift_basis(3).len();
            bang_bound = grading.fg2_basis().len();
            // Negative part of the Lie algebra = dimension of the flag
            // variety of the parabolic.
            flag_bound = space.lie_algebra_basis()?.len() - grading.fg_shift_basis(0).len();
            let flags = enumerate_filtrations(&space, &label, budget)?.len() as u64;
            let bang = enumerate_bang_set(&grading, budget)?.len() as u64;
            flag_counts.push(flags);
            bang_counts.push(bang);
            let qd3 = (q as u128).pow(d3 as u32) as u64;
            counts.push(flags * qd3 * bang);
        }
        let points = |vals: &[u64]| -> Vec<(u128, u128)> {
            q_values.iter().zip(vals).map(|(&q, &v)| (q as u128, v as u128)).collect()
        };
        let (flag_fit, flag_coeffs) = fit_integer_polynomial(&points(&flag_counts), flag_bound);
        let (bang_fit, bang_coeffs) = fit_integer_polynomial(&points(&bang_counts), bang_bound);
        let count_bound = flag_bound + d3 + bang_bound;
        let (count_fit, _) = fit_integer_polynomial(&points(&counts), count_bound);
        // Odd-q determination with even-q values checked against it, factor
        // by factor (the q^d factor is exact by construction).
        let odd_even = |vals: &[u64], bound: usize| -> FitStatus {
            let pts = points(vals);
            let odd: Vec<(u128, u128)> = pts.iter().copied().filter(|&(x, _)| x % 2 == 1).collect();
            let even: Vec<(u128, u128)> = pts.iter().copied().filter(|&(x, _)| x % 2 == 0).collect();
            fit_and_check_rest(&odd, &even, bound)
        };
        let flag_odd_fit = odd_even(&flag_counts, flag_bound);
        let bang_odd_fit = odd_even(&bang_counts, bang_bound);
        for s in [&flag_fit, &bang_fit, &count_fit, &flag_odd_fit, &bang_odd_fit] {
            if s.is_failure() {
                all_ok = false;
            }
        }
        labels_out.push(PolyLabelReport {
            partition: label.parts.clone(),
            dim_g_ge3: d3,
            flag_degree_bound: flag_bound,
            bang_degree_bound: bang_bound,
            flag_counts,
            bang_counts,
            counts,
            flag_fit,
            bang_fit,
            count_fit,
            flag_odd_fit,
            bang_odd_fit,
            flag_coeffs,
            bang_coeffs,
        });
    }
    Ok(PolyReport {
        kind: kind.to_string(),
        dim,
        q_values: q_values.to_vec(),
        labels: labels_out,
        all_ok,
    })
}
