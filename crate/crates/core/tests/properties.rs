//! Property-based checks of the algebraic invariants, with brute-force
//! oracles wherever one is available.

use proptest::prelude::*;

use nilpiece::census::field_for_order;
use nilpiece::field::FieldRef;
use nilpiece::formspace::{FormedSpace, SpaceKind};
use nilpiece::gradings::{GradedEndo, GradedSpace, PieceLabel};
use nilpiece::matrix::Matrix;
use nilpiece::pieces::{in_bang_set, subpiece_invariant, subpiece_m_set, BangQuery};
use nilpiece::recovery::{classify_nilpotent, classify_unipotent, efh};
use nilpiece::subspace::{quotient_map, Subspace};

fn arb_field() -> impl Strategy<Value = FieldRef> {
    prop_oneof![Just(2usize), Just(3), Just(4), Just(5), Just(7), Just(9)]
        .prop_map(|q| field_for_order(q).unwrap())
}

fn arb_matrix(field: FieldRef, rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    let q = field.order() as u16;
    proptest::collection::vec(0..q, rows * cols).prop_map(move |data| Matrix {
        field: field.clone(),
        rows,
        cols,
        data,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_equals_transpose_rank(
        (field, m) in arb_field().prop_flat_map(|f| {
            (Just(f.clone()), (1usize..=5, 1usize..=5))
                .prop_flat_map(move |(f2, (r, c))| (Just(f2), arb_matrix(f.clone(), r, c)))
        })
    ) {
        let _ = field;
        prop_assert_eq!(m.rank(), m.transpose().rank());
        let (rank, kernel, image) = m.rank_kernel_image();
        prop_assert_eq!(rank + kernel.dim(), m.cols);
        prop_assert_eq!(image.dim(), rank);
    }

    #[test]
    fn subspace_canonicalization_and_dimension_formula(
        (field, a, b) in arb_field().prop_flat_map(|f| {
            (Just(f.clone()), arb_matrix(f.clone(), 3, 5), arb_matrix(f, 3, 5))
        })
    ) {
        let u = Subspace::from_matrix_rows(&a);
        let w = Subspace::from_matrix_rows(&b);
        // Canonical form is idempotent.
        let again = Subspace::from_rows(field.clone(), 5, u.basis_rows().map(|r| r.to_vec()).collect());
        prop_assert_eq!(&again, &u);
        // dim(U) + dim(W) = dim(U + W) + dim(U n W), and containments.
        let sum = u.sum(&w).unwrap();
        let inter = u.intersect(&w).unwrap();
        prop_assert_eq!(u.dim() + w.dim(), sum.dim() + inter.dim());
        prop_assert!(sum.contains(&u) && sum.contains(&w));
        prop_assert!(u.contains(&inter) && w.contains(&inter));
    }

    #[test]
    fn quotient_map_respects_composition(
        (field, a, b) in arb_field().prop_flat_map(|f| {
            (Just(f.clone()), arb_matrix(f.clone(), 4, 4), arb_matrix(f, 4, 4))
        })
    ) {
        // Zero out the entries below the first column to make both maps
        // preserve U = V and W = span{e1}.
        let mut a = a;
        let mut b = b;
        for m in [&mut a, &mut b] {
            for r in 1..4 {
                m.set(r, 0, 0);
            }
        }
        let u = Subspace::full(field.clone(), 4);
        let w = Subspace::from_rows(field.clone(), 4, vec![vec![1, 0, 0, 0]]);
        let qa = quotient_map(&u, &w, &a).unwrap();
        let qb = quotient_map(&u, &w, &b).unwrap();
        let qab = quotient_map(&u, &w, &a.mul(&b).unwrap()).unwrap();
        prop_assert_eq!(qab, qa.mul(&qb).unwrap());
    }

    #[test]
    fn polarization_identity(
        (space, v, w) in arb_field().prop_flat_map(|f| {
            (2usize..=5).prop_flat_map(move |dim| {
                let space = FormedSpace::split(SpaceKind::O, dim, f.clone()).unwrap();
                let q = f.order() as u16;
                (
                    Just(space),
                    proptest::collection::vec(0..q, dim),
                    proptest::collection::vec(0..q, dim),
                )
            })
        })
    ) {
        let f = &space.field;
        let sum: Vec<u16> = v.iter().zip(&w).map(|(&x, &y)| f.add(x, y)).collect();
        let rhs = f.sub(f.sub(space.q_value(&sum), space.q_value(&v)), space.q_value(&w));
        prop_assert_eq!(space.pair(&v, &w), rhs);
    }
}

/// Conjugation equivariance of the whole classification: for g in the group,
/// x and gxg^-1 get the same label and subpiece, and the filtration moves by
/// g. Sampled deterministically over small groups.
#[test]
fn classification_is_equivariant() {
    for (kind, dim) in [(SpaceKind::Sp, 4usize), (SpaceKind::O, 5), (SpaceKind::Gl, 3)] {
        let field = field_for_order(2).unwrap();
        let space = FormedSpace::split(kind, dim, field.clone()).unwrap();
        // A few group elements, deterministically spread.
        let mut group = Vec::new();
        match kind {
            SpaceKind::Gl => {
                let mut count = 0;
                'outer: for bits in 0..(1u32 << (dim * dim)) {
                    let mut g = Matrix::zeros(field.clone(), dim, dim);
                    for pos in 0..dim * dim {
                        g.data[pos] = ((bits >> pos) & 1) as u16;
                    }
                    if g.inverse().unwrap().is_some() {
                        group.push(g);
                        count += 1;
                        if count >= 40 {
                            break 'outer;
                        }
                    }
                }
            }
            _ => {
                let mut seen = 0u32;
                space
                    .for_each_isometry(1 << 20, &mut |g| {
                        seen += 1;
                        if seen % 37 == 0 && group.len() < 40 && space.in_group(g)? {
                            group.push(g.clone());
                        }
                        Ok(())
                    })
                    .unwrap();
            }
        }
        assert!(group.len() >= 10);
        // A few nilpotent elements.
        let basis = space.lie_algebra_basis().unwrap();
        let mut iter = nilpiece::matrix::SpanIter::new(field.clone(), basis, dim, dim);
        let mut samples = Vec::new();
        let mut step = 0u32;
        loop {
            step += 1;
            if step % 11 == 0 && iter.current().is_nilpotent().unwrap() {
                samples.push(iter.current().clone());
                if samples.len() >= 12 {
                    break;
                }
            }
            if !iter.advance() {
                break;
            }
        }
        for x in &samples {
            let base = classify_nilpotent(&space, x).unwrap();
            for g in &group {
                let ginv = g.inverse().unwrap().unwrap();
                let conj = g.mul(x).unwrap().mul(&ginv).unwrap();
                let moved = classify_nilpotent(&space, &conj).unwrap();
                assert_eq!(moved.label, base.label);
                assert_eq!(moved.subpiece, base.subpiece);
                assert_eq!(moved.filtration, base.filtration.transform(g).unwrap());
            }
        }
    }
}

/// Ad-invariance of distinguished membership and of the subpiece invariant
/// under the Levi subgroup.
#[test]
fn distinguished_set_is_levi_invariant() {
    let field = field_for_order(2).unwrap();
    for parts in [vec![3usize, 1, 1], vec![5], vec![2, 2, 1]] {
        let label = PieceLabel::new(SpaceKind::O, parts).unwrap();
        let gs = GradedSpace::from_label(&label, field.clone()).unwrap();
        let levi = nilpiece::census::enumerate_level_zero_group(&gs, 1 << 18).unwrap();
        let basis = gs.fg2_basis();
        let mut iter = nilpiece::matrix::SpanIter::new(field.clone(), basis, gs.dim(), gs.dim());
        loop {
            let a = iter.current().clone();
            let endo = GradedEndo::new(&gs, a.clone()).unwrap();
            let q = BangQuery::new(&gs, &endo).unwrap();
            let member = in_bang_set(&q).unwrap();
            let sub = if member && !subpiece_m_set(&gs).is_empty() {
                Some(subpiece_invariant(&q).unwrap())
            } else {
                None
            };
            for g in levi.iter().step_by(3) {
                let ginv = g.inverse().unwrap().unwrap();
                let conj = g.mul(&a).unwrap().mul(&ginv).unwrap();
                let cendo = GradedEndo::new(&gs, conj).unwrap();
                let cq = BangQuery::new(&gs, &cendo).unwrap();
                assert_eq!(in_bang_set(&cq).unwrap(), member);
                if member && !subpiece_m_set(&gs).is_empty() {
                    assert_eq!(subpiece_invariant(&cq).unwrap(), *sub.as_ref().unwrap());
                }
            }
            if !iter.advance() {
                break;
            }
        }
    }
}

/// The recovered filtration's outer steps agree with the invariants they
/// are built from: ker/im of x^m away from characteristic 2 orthogonal
/// spaces, and H_x in that case.
#[test]
fn recovered_steps_match_invariants() {
    // GL and Sp at q = 2, kernel/image route.
    for (kind, dim) in [(SpaceKind::Gl, 4usize), (SpaceKind::Sp, 4)] {
        let field = field_for_order(2).unwrap();
        let space = FormedSpace::split(kind, dim, field.clone()).unwrap();
        let basis = space.lie_algebra_basis().unwrap();
        let mut iter = nilpiece::matrix::SpanIter::new(field.clone(), basis, dim, dim);
        let mut tested = 0;
        loop {
            let x = iter.current().clone();
            if !x.is_zero() && x.is_nilpotent().unwrap() {
                let e = x.nilpotency_index().unwrap().unwrap();
                let m = e - 1;
                let c = classify_nilpotent(&space, &x).unwrap();
                let (_, ker, im) = x.pow(m).unwrap().rank_kernel_image();
                assert_eq!(*c.filtration.step(-(m as i32) + 1), ker);
                assert_eq!(*c.filtration.step(m as i32), im);
                tested += 1;
            }
            if tested > 200 || !iter.advance() {
                break;
            }
        }
        assert!(tested > 50);
    }
    // O at q = 2: the lower step is H_x and the splice is driven by
    // m = max(e-1, 2f-2).
    let field = field_for_order(2).unwrap();
    let space = FormedSpace::split(SpaceKind::O, 5, field.clone()).unwrap();
    let basis = space.lie_algebra_basis().unwrap();
    let mut iter = nilpiece::matrix::SpanIter::new(field.clone(), basis, 5, 5);
    let mut tested = 0;
    loop {
        let x = iter.current().clone();
        if !x.is_zero() && x.is_nilpotent().unwrap() {
            let data = efh(&space, &x).unwrap();
            let m = (data.e - 1).max(2 * data.f.unwrap() - 2) as i32;
            let c = classify_nilpotent(&space, &x).unwrap();
            assert_eq!(*c.filtration.step(-m + 1), data.h, "H mismatch for\n{}", x.to_text());
            let (lo, hi) = c.filtration.support();
            assert_eq!((lo, hi), (-m, m + 1));
            tested += 1;
        }
        if !iter.advance() {
            break;
        }
    }
    assert_eq!(tested, 255);
}

/// Unipotent classification agrees with nilpotent classification through
/// u = 1 + x whenever x lies in both domains (GL, where they coincide).
#[test]
fn gl_unipotent_matches_nilpotent_shift() {
    let field = field_for_order(3).unwrap();
    let space = FormedSpace::split(SpaceKind::Gl, 3, field.clone()).unwrap();
    let one = Matrix::identity(field.clone(), 3);
    let total = nilpiece::census::lie_algebra_points(&space).unwrap();
    nilpiece::census::for_each_lie_nilpotent(&space, 0..total, &mut |x| {
        let u = one.add(x)?;
        let cn = classify_nilpotent(&space, x)?;
        let cu = classify_unipotent(&space, &u)?;
        assert_eq!(cn.label, cu.label);
        assert_eq!(cn.filtration, cu.filtration);
        Ok(())
    })
    .unwrap();
}
