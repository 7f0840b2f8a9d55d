//! Subspaces of F_q^n in canonical form.
//!
//! A subspace is stored as the reduced row echelon form of its row span, so
//! equality of subspaces is plain data equality.

use crate::error::{Error, Result};
use crate::field::FieldRef;
use crate::matrix::Matrix;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Subspace {
    pub field: FieldRef,
    pub ambient: usize,
    /// RREF basis; rows are nonzero with strictly increasing pivot columns.
    basis: Matrix,
}

impl Subspace {
    pub fn from_rows(field: FieldRef, ambient: usize, rows: Vec<Vec<u16>>) -> Subspace {
        let m = Matrix::from_rows(field.clone(), rows).expect("ragged basis rows");
        debug_assert!(m.rows == 0 || m.cols == ambient);
        Self::from_span(field, ambient, &m)
    }

    pub fn from_matrix_rows(m: &Matrix) -> Subspace {
        Self::from_span(m.field.clone(), m.cols, m)
    }

    fn from_span(field: FieldRef, ambient: usize, m: &Matrix) -> Subspace {
        if m.rows == 0 {
            return Subspace { field: field.clone(), ambient, basis: Matrix::zeros(field, 0, ambient) };
        }
        let (rref, pivots) = m.rref();
        let basis = rref.block(0..pivots.len(), 0..ambient);
        Subspace { field, ambient, basis }
    }

    pub fn zero(field: FieldRef, ambient: usize) -> Subspace {
        Subspace { field: field.clone(), ambient, basis: Matrix::zeros(field, 0, ambient) }
    }

    pub fn full(field: FieldRef, ambient: usize) -> Subspace {
        Subspace { field: field.clone(), ambient, basis: Matrix::identity(field, ambient) }
    }

    pub fn dim(&self) -> usize {
        self.basis.rows
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn basis_rows(&self) -> impl Iterator<Item = &[u16]> {
        (0..self.basis.rows).map(move |i| self.basis.row(i))
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient
    }

    fn check_compatible(&self, other: &Subspace) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        if self.ambient != other.ambient {
            return Err(Error::DimensionMismatch { expected: self.ambient, got: other.ambient });
        }
        Ok(())
    }

    /// Reduces `v` against the basis; returns the residue.
    fn reduce(&self, v: &[u16]) -> Vec<u16> {
        let f = &self.field;
        let mut v = v.to_vec();
        for i in 0..self.basis.rows {
            let pivot = self.basis.row(i).iter().position(|&x| x != 0).unwrap();
            if v[pivot] != 0 {
                let s = v[pivot];
                for j in 0..self.ambient {
                    v[j] = f.sub(v[j], f.mul(s, self.basis.get(i, j)));
                }
            }
        }
        v
    }

    pub fn contains_vec(&self, v: &[u16]) -> bool {
        debug_assert_eq!(v.len(), self.ambient);
        self.reduce(v).iter().all(|&x| x == 0)
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        other.basis_rows().all(|r| self.contains_vec(r))
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.check_compatible(other)?;
        let mut rows: Vec<Vec<u16>> = self.basis_rows().map(|r| r.to_vec()).collect();
        rows.extend(other.basis_rows().map(|r| r.to_vec()));
        Ok(Subspace::from_rows(self.field.clone(), self.ambient, rows))
    }

    /// Zassenhaus intersection.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        self.check_compatible(other)?;
        let n = self.ambient;
        let mut rows = Vec::new();
        for r in self.basis_rows() {
            let mut row = r.to_vec();
            row.extend_from_slice(r);
            rows.push(row);
        }
        for r in other.basis_rows() {
            let mut row = r.to_vec();
            row.extend(vec![0u16; n]);
            rows.push(row);
        }
        if rows.is_empty() {
            return Ok(Subspace::zero(self.field.clone(), n));
        }
        let m = Matrix::from_rows(self.field.clone(), rows).unwrap();
        let (rref, _) = m.rref();
        let mut inter_rows = Vec::new();
        for i in 0..rref.rows {
            let left_zero = (0..n).all(|j| rref.get(i, j) == 0);
            let right = rref.row(i)[n..].to_vec();
            if left_zero && right.iter().any(|&x| x != 0) {
                inter_rows.push(right);
            }
        }
        Ok(Subspace::from_rows(self.field.clone(), n, inter_rows))
    }

    /// {x : basis * gram * x = 0}, the orthogonal complement for `gram`.
    pub fn perp_with(&self, gram: &Matrix) -> Subspace {
        if self.dim() == 0 {
            return Subspace::full(self.field.clone(), self.ambient);
        }
        let rows = self.basis.mul(gram).expect("gram shape");
        let (_, kernel, _) = rows.rank_kernel_image();
        kernel
    }

    /// Stable byte encoding for use as a set or map key.
    pub fn canonical_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.ambient as u16).to_le_bytes());
        out.extend_from_slice(&(self.dim() as u16).to_le_bytes());
        for &v in &self.basis.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

/// Greedy completion: extends a basis of `w` to a basis of `u` by scanning
/// the canonical basis rows of `u` in order and keeping those outside the
/// running span. Returns the section vectors, a transversal of u/w.
pub fn complete_basis(u: &Subspace, w: &Subspace) -> Result<Vec<Vec<u16>>> {
    if !u.contains(w) {
        return Err(Error::Precondition("completion requires w inside u".into()));
    }
    // Incremental mutually-reduced span: rows have pairwise distinct pivots
    // and vanish at each other's pivot columns, so one reduction pass per
    // candidate is exact.
    let f = &u.field;
    let mut reduced: Vec<(usize, Vec<u16>)> = w
        .basis_rows()
        .map(|r| (r.iter().position(|&x| x != 0).unwrap(), r.to_vec()))
        .collect();
    let mut sections = Vec::new();
    for row in u.basis_rows() {
        let mut v = row.to_vec();
        for (piv, r) in &reduced {
            if v[*piv] != 0 {
                let s = v[*piv];
                for j in 0..v.len() {
                    v[j] = f.sub(v[j], f.mul(s, r[j]));
                }
            }
        }
        if let Some(piv) = v.iter().position(|&x| x != 0) {
            sections.push(row.to_vec());
            let inv = f.inv(v[piv])?;
            for x in v.iter_mut() {
                *x = f.mul(*x, inv);
            }
            for (_, r) in reduced.iter_mut() {
                if r[piv] != 0 {
                    let s = r[piv];
                    for j in 0..r.len() {
                        r[j] = f.sub(r[j], f.mul(s, v[j]));
                    }
                }
            }
            reduced.push((piv, v));
        }
    }
    debug_assert_eq!(sections.len(), u.dim() - w.dim());
    Ok(sections)
}

/// Coordinates on a quotient u/w through a fixed transversal.
#[derive(Clone, Debug)]
pub struct SubquotientChart {
    pub sub: Subspace,
    pub modsub: Subspace,
    /// Section vectors, one row per quotient basis vector.
    pub sections: Matrix,
    /// Columns are [w basis | sections]; used to coordinatize elements of u.
    frame_cols: Matrix,
}

impl SubquotientChart {
    pub fn new(u: &Subspace, w: &Subspace) -> Result<SubquotientChart> {
        let sections = complete_basis(u, w)?;
        let field = u.field.clone();
        let n = u.ambient;
        let t = sections.len();
        let mut sec = Matrix::zeros(field.clone(), t, n);
        for (i, s) in sections.iter().enumerate() {
            for j in 0..n {
                sec.set(i, j, s[j]);
            }
        }
        let mut frame = Matrix::zeros(field.clone(), n, w.dim() + t);
        for (c, row) in w.basis_rows().enumerate() {
            for i in 0..n {
                frame.set(i, c, row[i]);
            }
        }
        for (c, s) in sections.iter().enumerate() {
            for i in 0..n {
                frame.set(i, w.dim() + c, s[i]);
            }
        }
        Ok(SubquotientChart { sub: u.clone(), modsub: w.clone(), sections: sec, frame_cols: frame })
    }

    pub fn quotient_dim(&self) -> usize {
        self.sections.rows
    }

    /// Quotient coordinates of `v`, which must lie in `sub`.
    pub fn project(&self, v: &[u16]) -> Result<Vec<u16>> {
        let x = self
            .frame_cols
            .solve(v)?
            .ok_or_else(|| Error::Precondition("vector outside the subspace".into()))?;
        Ok(x[self.modsub.dim()..].to_vec())
    }

    /// A representative of the class with the given quotient coordinates.
    pub fn lift(&self, coords: &[u16]) -> Vec<u16> {
        let f = &self.sections.field;
        let n = self.sections.cols;
        let mut out = vec![0u16; n];
        for (i, &c) in coords.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for j in 0..n {
                out[j] = f.add(out[j], f.mul(c, self.sections.get(i, j)));
            }
        }
        out
    }
}

/// Matrix of the endomorphism induced by `a` on u/w, in the transversal basis
/// given by greedy lowest-index completion.
/// Requires w inside u, a(u) inside u, and a(w) inside w.
pub fn quotient_map(u: &Subspace, w: &Subspace, a: &Matrix) -> Result<Matrix> {
    for row in u.basis_rows() {
        let img = a.mul_vec(row)?;
        if !u.contains_vec(&img) {
            return Err(Error::Precondition(format!(
                "map does not preserve the subspace: image of {row:?} escapes"
            )));
        }
    }
    for row in w.basis_rows() {
        let img = a.mul_vec(row)?;
        if !w.contains_vec(&img) {
            return Err(Error::Precondition(format!(
                "map does not preserve the modded subspace: image of {row:?} escapes"
            )));
        }
    }
    let chart = SubquotientChart::new(u, w)?;
    let t = chart.quotient_dim();
    let mut out = Matrix::zeros(u.field.clone(), t, t);
    for j in 0..t {
        let img = a.mul_vec(chart.sections.row(j))?;
        let coords = chart.project(&img)?;
        for i in 0..t {
            out.set(i, j, coords[i]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Field, FieldRef};

    fn f2() -> FieldRef {
        Field::new(2, 1).unwrap()
    }
    fn f3() -> FieldRef {
        Field::new(3, 1).unwrap()
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let s = Subspace::from_rows(f2(), 3, vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]);
        let again = Subspace::from_rows(f2(), 3, s.basis_rows().map(|r| r.to_vec()).collect());
        assert_eq!(s, again);
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn sum_and_intersection_trivial_cases() {
        let u = Subspace::from_rows(f2(), 2, vec![vec![1, 0]]);
        assert_eq!(u.sum(&u).unwrap(), u);
        assert_eq!(u.intersect(&u).unwrap(), u);
        let w = Subspace::from_rows(f2(), 2, vec![vec![0, 1]]);
        assert_eq!(u.sum(&w).unwrap(), Subspace::full(f2(), 2));
        assert!(u.intersect(&w).unwrap().is_zero());
    }

    #[test]
    fn plane_intersection_matches_enumeration() {
        let u = Subspace::from_rows(f2(), 3, vec![vec![1, 0, 0], vec![0, 1, 0]]);
        let w = Subspace::from_rows(f2(), 3, vec![vec![0, 1, 0], vec![0, 0, 1]]);
        let inter = u.intersect(&w).unwrap();
        assert_eq!(inter, Subspace::from_rows(f2(), 3, vec![vec![0, 1, 0]]));
        // Oracle: enumerate all 8 vectors of F_2^3.
        for bits in 0..8u16 {
            let v = [bits & 1, (bits >> 1) & 1, (bits >> 2) & 1];
            let both = u.contains_vec(&v) && w.contains_vec(&v);
            assert_eq!(both, inter.contains_vec(&v));
        }
    }

    #[test]
    fn quotient_map_trivial_and_jordan() {
        // W = 0, U = V: the induced map is A itself.
        let a = Matrix::from_rows(f3(), vec![vec![1, 2], vec![0, 1]]).unwrap();
        let u = Subspace::full(f3(), 2);
        let w = Subspace::zero(f3(), 2);
        assert_eq!(quotient_map(&u, &w, &a).unwrap(), a);

        // J_3 over F_2: U = ker A^2 (dim 2), W = im A^2 (dim 1); induced map 0.
        let j3 = Matrix::from_rows(f2(), vec![vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 0]]).unwrap();
        let sq = j3.pow(2).unwrap();
        let (_, ker, im) = sq.rank_kernel_image();
        assert_eq!(ker.dim(), 2);
        assert_eq!(im.dim(), 1);
        assert!(ker.contains(&im));
        let q = quotient_map(&ker, &im, &j3).unwrap();
        assert_eq!(q.rows, 1);
        assert!(q.is_zero());
    }

    #[test]
    fn quotient_map_j2_plus_j1_mod_image() {
        // A = J_2 + J_1 over F_3, U = V, W = im A: induced map on the
        // 2-dimensional quotient is zero (brute-force oracle below).
        let a = Matrix::from_rows(f3(), vec![vec![0, 1, 0], vec![0, 0, 0], vec![0, 0, 0]]).unwrap();
        let (_, _, im) = a.rank_kernel_image();
        assert_eq!(im.dim(), 1);
        let u = Subspace::full(f3(), 3);
        let q = quotient_map(&u, &im, &a).unwrap();
        assert_eq!(q.rows, 2);
        assert!(q.is_zero());
        // Oracle: A maps everything into im A, so every class maps to zero.
        for x in 0..27u16 {
            let v = [x % 3, (x / 3) % 3, (x / 9) % 3];
            assert!(im.contains_vec(&a.mul_vec(&v).unwrap()));
        }
    }

    #[test]
    fn quotient_map_rejects_nonpreserving() {
        let a = Matrix::from_rows(f2(), vec![vec![0, 0], vec![1, 0]]).unwrap();
        let u = Subspace::from_rows(f2(), 2, vec![vec![1, 0]]);
        let w = Subspace::zero(f2(), 2);
        assert!(quotient_map(&u, &w, &a).is_err());
    }

    #[test]
    fn quotient_respects_composition() {
        // Upper-triangular maps preserve the standard flag; check
        // induced(AB) = induced(A) * induced(B) on V / span{e1}.
        let f = f3();
        let u = Subspace::full(f.clone(), 3);
        let w = Subspace::from_rows(f.clone(), 3, vec![vec![1, 0, 0]]);
        let mk = |rows: Vec<Vec<u16>>| Matrix::from_rows(f.clone(), rows).unwrap();
        let a = mk(vec![vec![1, 2, 0], vec![0, 2, 1], vec![0, 0, 1]]);
        let b = mk(vec![vec![2, 0, 1], vec![0, 1, 2], vec![0, 0, 2]]);
        let ab = a.mul(&b).unwrap();
        let qa = quotient_map(&u, &w, &a).unwrap();
        let qb = quotient_map(&u, &w, &b).unwrap();
        let qab = quotient_map(&u, &w, &ab).unwrap();
        assert_eq!(qab, qa.mul(&qb).unwrap());
    }
}
