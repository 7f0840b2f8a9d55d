//! Recovery of the unique good filtration attached to a nilpotent or
//! unipotent element, through the invariants e, f and H and a kernel/image
//! recursion; plus the perturbation stability checks that justify the
//! characteristic-2 branch.

use crate::error::{Error, Result};
use crate::formspace::{FormedSpace, SpaceKind};
use crate::gradings::{associated_graded, Filtration, GradedEndo, GradedSpace, PieceLabel};
use crate::matrix::Matrix;
use crate::pieces::{in_bang_set, subpiece_invariant, subpiece_m_set, BangQuery, SubpieceLabel};
use crate::subspace::{Subspace, SubquotientChart};

/// The recovery invariants of a nonzero nilpotent endomorphism: e is the
/// nilpotency exponent (smallest >= 2 with T^e = 0), f the quadratic
/// vanishing exponent (smallest >= 1 with Q T^f = 0, kind O only), and H the
/// recovery subspace:
///   e >= 2f      : H = ker T^{e-1}
///   e = 2f - 1   : H = ker T^{e-1} intersect {x : Q(T^{f-1} x) = 0}
///   e < 2f - 1   : H = {x : Q(T^{f-1} x) = 0}
#[derive(Clone, Debug)]
pub struct EfhData {
    pub e: usize,
    pub f: Option<usize>,
    pub h: Subspace,
}

/// Whether Q composed with T^j vanishes identically (checked on basis
/// vectors and pairwise sums).
fn q_compose_vanishes(space: &FormedSpace, tpow: &Matrix) -> bool {
    let n = space.dim;
    let cols: Vec<Vec<u16>> = (0..n).map(|j| (0..n).map(|i| tpow.get(i, j)).collect()).collect();
    for (i, c) in cols.iter().enumerate() {
        if space.q_value(c) != 0 {
            return false;
        }
        for c2 in cols.iter().skip(i + 1) {
            if space.pair(c, c2) != 0 {
                return false;
            }
        }
    }
    true
}

/// Zero set of x -> Q(U x) on a domain subspace, which must be linear there:
/// the polar form (Ux, Uy) has to vanish on the domain, making the function
/// additive. In characteristic 2 the kernel is found through the Frobenius
/// substitution; in odd characteristic vanishing of the polar form already
/// forces Q(Ux) = 0 on the whole domain.
fn additive_q_zero_set(space: &FormedSpace, u: &Matrix, domain: &Subspace) -> Result<Subspace> {
    let f = &space.field;
    let rows: Vec<Vec<u16>> = domain
        .basis_rows()
        .map(|r| u.mul_vec(r))
        .collect::<Result<_>>()?;
    for (i, r) in rows.iter().enumerate() {
        for r2 in rows.iter().skip(i) {
            if space.pair(r, r2) != 0 {
                return Err(Error::Internal(
                    "quadratic zero set is not linear: polar form does not vanish on the domain".into(),
                ));
            }
        }
    }
    if f.characteristic() != 2 {
        // Q(Ux) = (Ux, Ux)/2 = 0 across the domain.
        return Ok(domain.clone());
    }
    // Q(sum t_i v_i) = sum t_i^2 Q(U v_i); substitute s = t^2.
    let coeffs: Vec<u16> = rows.iter().map(|r| space.q_value(r)).collect();
    let sys = Matrix::from_rows(f.clone(), vec![coeffs]).unwrap();
    let (_, kernel, _) = sys.rank_kernel_image();
    let dom_rows: Vec<&[u16]> = domain.basis_rows().collect();
    let mut out_rows = Vec::new();
    for s in kernel.basis_rows() {
        let mut v = vec![0u16; space.dim];
        for (i, &si) in s.iter().enumerate() {
            if si == 0 {
                continue;
            }
            let t = f.sqrt2(si)?;
            for c in 0..space.dim {
                v[c] = f.add(v[c], f.mul(t, dom_rows[i][c]));
            }
        }
        out_rows.push(v);
    }
    Ok(Subspace::from_rows(f.clone(), space.dim, out_rows))
}

/// Successive powers 1, T, T^2, ... up to the first zero power; None when T
/// is not nilpotent.
fn power_chain(t: &Matrix) -> Result<Option<Vec<Matrix>>> {
    let n = t.rows;
    let mut powers = vec![Matrix::identity(t.field.clone(), n)];
    for e in 1..=n.max(1) {
        let next = powers[e - 1].mul(t)?;
        let zero = next.is_zero();
        powers.push(next);
        if zero {
            return Ok(Some(powers));
        }
    }
    Ok(None)
}

/// The invariants e, f, H of a nonzero nilpotent endomorphism.
pub fn efh(space: &FormedSpace, t: &Matrix) -> Result<EfhData> {
    if t.is_zero() {
        return Err(Error::Precondition("e, f, H are undefined for the zero map".into()));
    }
    let powers = power_chain(t)?
        .ok_or_else(|| Error::Precondition("endomorphism is not nilpotent".into()))?;
    efh_from_powers(space, &powers)
}

fn efh_from_powers(space: &FormedSpace, powers: &[Matrix]) -> Result<EfhData> {
    let e = powers.len() - 1;
    debug_assert!(e >= 2);
    if space.kind != SpaceKind::O {
        let (_, h, _) = powers[e - 1].rank_kernel_image();
        return Ok(EfhData { e, f: None, h });
    }
    let mut f_val = None;
    for f in 1..=e {
        if q_compose_vanishes(space, &powers[f]) {
            f_val = Some(f);
            break;
        }
    }
    let f = f_val.ok_or_else(|| Error::Internal("Q T^e must vanish for nilpotent T".into()))?;
    let h = if e >= 2 * f {
        let (_, ker, _) = powers[e - 1].rank_kernel_image();
        ker
    } else if e == 2 * f - 1 {
        let (_, ker, _) = powers[e - 1].rank_kernel_image();
        additive_q_zero_set(space, &powers[f - 1], &ker)?
    } else {
        let full = Subspace::full(space.field.clone(), space.dim);
        additive_q_zero_set(space, &powers[f - 1], &full)?
    };
    Ok(EfhData { e, f: Some(f), h })
}

/// An element together with its recovered filtration, piece label, and (for
/// kind O in characteristic 2) subpiece label.
#[derive(Clone, Debug)]
pub struct ClassifiedElement {
    pub element: Matrix,
    pub filtration: Filtration,
    pub label: PieceLabel,
    pub subpiece: Option<SubpieceLabel>,
}

impl ClassifiedElement {
    pub fn to_json(&self) -> serde_json::Value {
        let (lo, hi) = self.filtration.support();
        let steps: Vec<serde_json::Value> = (lo..=hi)
            .map(|a| {
                let st = self.filtration.step(a);
                let basis: Vec<Vec<u16>> = st.basis_rows().map(|r| r.to_vec()).collect();
                serde_json::json!({ "a": a, "dim": st.dim(), "basis": basis })
            })
            .collect();
        serde_json::json!({
            "label": { "kind": self.label.kind.to_string(), "parts": self.label.parts },
            "subpiece": self.subpiece.as_ref().map(|s| serde_json::json!({ "m": s.m, "f": s.f })),
            "steps": steps,
        })
    }
}

fn trivial_filtration(space: &FormedSpace) -> Filtration {
    let field = space.field.clone();
    let full = Subspace::full(field.clone(), space.dim);
    let zero = Subspace::zero(field, space.dim);
    Filtration::new(space.clone(), 0, vec![full, zero]).expect("trivial filtration")
}

/// The subquotient U/W with the induced form, the chart used to move between
/// the quotient and the ambient space, and the induced endomorphism of x.
fn subquotient_with_form(
    space: &FormedSpace,
    u: &Subspace,
    w: &Subspace,
    x: &Matrix,
) -> Result<(FormedSpace, SubquotientChart, Matrix)> {
    // Well-definedness of the induced form: W perpendicular to U, and (for
    // quadratic spaces) Q vanishing on W.
    if space.kind != SpaceKind::Gl {
        for wu in w.basis_rows() {
            for uu in u.basis_rows() {
                if space.pair(wu, uu) != 0 {
                    return Err(Error::Internal("modded subspace is not perpendicular".into()));
                }
            }
        }
        if space.kind == SpaceKind::O && !space.q_vanishes_on(w) {
            return Err(Error::Internal("Q does not vanish on the modded subspace".into()));
        }
    }
    let chart = SubquotientChart::new(u, w)?;
    let d = chart.quotient_dim();
    let field = space.field.clone();
    let sub_space = match space.kind {
        SpaceKind::Gl => FormedSpace { kind: SpaceKind::Gl, dim: d, field, gram: None, quad: None },
        SpaceKind::Sp => {
            let mut gram = Matrix::zeros(field.clone(), d, d);
            for i in 0..d {
                for j in 0..d {
                    gram.set(i, j, space.pair(chart.sections.row(i), chart.sections.row(j)));
                }
            }
            FormedSpace::from_symplectic(d, field, gram)?
        }
        SpaceKind::O => {
            let mut quad = Matrix::zeros(field.clone(), d, d);
            for i in 0..d {
                quad.set(i, i, space.q_value(chart.sections.row(i)));
                for j in i + 1..d {
                    quad.set(i, j, space.pair(chart.sections.row(i), chart.sections.row(j)));
                }
            }
            FormedSpace::from_quadratic(d, field, quad)?
        }
    };
    // Induced endomorphism; also checks x preserves u and w.
    for row in u.basis_rows() {
        if !u.contains_vec(&x.mul_vec(row)?) {
            return Err(Error::Internal("element does not preserve the recovery subspace".into()));
        }
    }
    for row in w.basis_rows() {
        if !w.contains_vec(&x.mul_vec(row)?) {
            return Err(Error::Internal("element does not preserve the top step".into()));
        }
    }
    let mut inner = Matrix::zeros(space.field.clone(), d, d);
    for j in 0..d {
        let img = x.mul_vec(chart.sections.row(j))?;
        let coords = chart.project(&img)?;
        for i in 0..d {
            inner.set(i, j, coords[i]);
        }
    }
    Ok((sub_space, chart, inner))
}

/// The recursive filtration recovery. For GL, Sp, and O in odd
/// characteristic the outer steps are ker x^m and im x^m with m = e-1; for O
/// in characteristic 2 they are H_x and the Q-zero part of its perp, with
/// m = max(e-1, 2f-2).
fn recover_filtration(space: &FormedSpace, x: &Matrix) -> Result<Filtration> {
    if space.dim == 0 || x.is_zero() {
        return Ok(trivial_filtration(space));
    }
    let powers = power_chain(x)?
        .ok_or_else(|| Error::Precondition("element is not nilpotent".into()))?;
    let char2_o = space.kind == SpaceKind::O && space.field.characteristic() == 2;
    let (m, lower, upper) = if char2_o {
        let data = efh_from_powers(space, &powers)?;
        let f = data.f.expect("kind O always carries f");
        let m = (data.e - 1).max(2 * f - 2);
        let lower = data.h;
        let perp = lower.perp_with(space.gram.as_ref().unwrap());
        let one = Matrix::identity(space.field.clone(), space.dim);
        let upper = additive_q_zero_set(space, &one, &perp)?;
        (m, lower, upper)
    } else {
        let e = powers.len() - 1;
        let m = e - 1;
        let (_, ker, im) = powers[m].rank_kernel_image();
        (m, ker, im)
    };
    if !lower.contains(&upper) {
        return Err(Error::Internal("recovery steps are not nested".into()));
    }
    if lower.dim() == space.dim && upper.is_zero() {
        return Err(Error::Internal("recovery did not shrink the space".into()));
    }
    let (sub_space, chart, x_inner) = subquotient_with_form(space, &lower, &upper, x)?;
    let inner = recover_filtration(&sub_space, &x_inner)?;
    // The inner filtration must fit strictly inside weights (-m, m).
    let (ilo, ihi) = inner.support();
    if ilo < -(m as i32) + 1 || ihi > m as i32 {
        return Err(Error::Internal(format!(
            "inner filtration support [{ilo}, {ihi}] escapes the outer weight window m={m}"
        )));
    }
    // Splice: V for a <= -m, lower at -m+1, lifted inner steps in between,
    // upper at m, zero above.
    let mi = m as i32;
    let field = space.field.clone();
    let mut steps = Vec::new();
    for a in -mi..=mi + 1 {
        let sub = if a <= -mi {
            Subspace::full(field.clone(), space.dim)
        } else if a == -mi + 1 {
            lower.clone()
        } else if a == mi {
            upper.clone()
        } else if a == mi + 1 {
            Subspace::zero(field.clone(), space.dim)
        } else {
            // Preimage of the inner step under lower -> lower/upper.
            let mut rows: Vec<Vec<u16>> = upper.basis_rows().map(|r| r.to_vec()).collect();
            for r in inner.step(a).basis_rows() {
                rows.push(chart.lift(r));
            }
            Subspace::from_rows(field.clone(), space.dim, rows)
        };
        steps.push(sub);
    }
    Filtration::new(space.clone(), -mi, steps)
}

/// Classification postconditions shared by both entry points: the filtration
/// is in its good family and the induced graded endomorphism lies in the
/// distinguished set. Returns the label and subpiece.
fn classify_common(
    space: &FormedSpace,
    x: &Matrix,
    filt: Filtration,
) -> Result<ClassifiedElement> {
    // associated_graded validates family membership of the filtration.
    let frame = associated_graded(&filt).map_err(|e| {
        Error::Internal(format!(
            "recovered filtration is not in its family: {e}; element:\n{}",
            x.to_text()
        ))
    })?;
    let induced = frame.induce(&filt, x).map_err(|e| {
        Error::Internal(format!(
            "element does not shift its own filtration by 2: {e}; element:\n{}",
            x.to_text()
        ))
    })?;
    let query = BangQuery::new(&frame.graded, &induced)?;
    if !in_bang_set(&query)? {
        return Err(Error::Internal(format!(
            "induced graded element is not distinguished; element:\n{}",
            x.to_text()
        )));
    }
    let label = filt.label()?;
    let subpiece = if space.kind == SpaceKind::O
        && space.field.characteristic() == 2
        && !subpiece_m_set(&frame.graded).is_empty()
    {
        Some(subpiece_invariant(&query)?)
    } else {
        None
    };
    Ok(ClassifiedElement { element: x.clone(), filtration: filt, label, subpiece })
}

/// Classifies a nilpotent Lie algebra element into its piece.
pub fn classify_nilpotent(space: &FormedSpace, x: &Matrix) -> Result<ClassifiedElement> {
    if !space.in_lie_algebra(x)? {
        return Err(Error::Precondition("element is not in the Lie algebra".into()));
    }
    if !x.is_nilpotent()? {
        return Err(Error::Precondition("element is not nilpotent".into()));
    }
    let filt = recover_filtration(space, x)?;
    classify_common(space, x, filt)
}

/// Classifies a unipotent group element into its piece via x = u - 1.
pub fn classify_unipotent(space: &FormedSpace, u: &Matrix) -> Result<ClassifiedElement> {
    if !space.in_group(u)? {
        return Err(Error::Precondition("element is not in the group".into()));
    }
    let one = Matrix::identity(space.field.clone(), space.dim);
    let x = u.sub(&one)?;
    if !x.is_nilpotent()? {
        return Err(Error::Precondition("element is not unipotent".into()));
    }
    let filt = recover_filtration(space, &x)?;
    classify_common(space, &x, filt)
}

/// Stability of e, f, H under perturbations raising weights by at least 3:
/// for T = A + C the conclusions are e_T = e_A when e_A >= 2 f_A - 1,
/// f_T = f_A when e_A < 2 f_A, H_T = V_{>= -m+1}, and m = max(e-1, 2f-2).
pub fn perturbation_check(gs: &GradedSpace, a: &GradedEndo, c: &Matrix) -> Result<bool> {
    let space = &gs.space;
    if space.kind != SpaceKind::O || space.field.characteristic() != 2 {
        return Err(Error::Precondition("perturbation check needs kind O in characteristic 2".into()));
    }
    let query = BangQuery::new(gs, a)?;
    if !in_bang_set(&query)? {
        return Err(Error::Precondition("base element must be distinguished".into()));
    }
    if !space.in_lie_algebra(c)? {
        return Err(Error::Precondition("perturbation must lie in the Lie algebra".into()));
    }
    for r in 0..gs.dim() {
        for col in 0..gs.dim() {
            if c.get(r, col) != 0 && gs.weight_of(r) < gs.weight_of(col) + 3 {
                return Err(Error::Precondition("perturbation must raise weights by at least 3".into()));
            }
        }
    }
    let m = gs.top_weight();
    if m < 1 {
        return Err(Error::Precondition("perturbation check needs top weight >= 1".into()));
    }
    let base = efh(space, &a.mat)?;
    let t = a.mat.add(c)?;
    let pert = efh(space, &t)?;
    let (be, bf) = (base.e, base.f.unwrap());
    let (te, tf) = (pert.e, pert.f.unwrap());
    let filt = Filtration::from_grading(gs);
    let expected_h = filt.step(-m + 1);
    let mut ok = true;
    // Base-side shape, the graded special case of the statements.
    ok &= m as usize == (be - 1).max(2 * bf - 2);
    ok &= base.h == *expected_h;
    // Perturbed side.
    if be >= 2 * bf - 1 {
        ok &= te == be;
    }
    if be < 2 * bf {
        ok &= tf == bf;
    }
    if be < 2 * bf - 1 {
        ok &= te < 2 * tf - 1;
    }
    ok &= pert.h == *expected_h;
    ok &= m as usize == (te - 1).max(2 * tf - 2);
    Ok(ok)
}
