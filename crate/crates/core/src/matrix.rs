//! Dense matrices over a finite field, acting on column vectors from the
//! left. Vectors are coordinate tuples in the ambient standard basis.

use crate::error::{Error, Result};
use crate::field::FieldRef;
use crate::subspace::Subspace;

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    pub field: FieldRef,
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries, values in 0..q.
    pub data: Vec<u16>,
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} over {:?}", self.rows, self.cols, self.field)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(field: FieldRef, rows: usize, cols: usize) -> Self {
        Matrix { field, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: FieldRef, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(field: FieldRef, rows: Vec<Vec<u16>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch { expected: c, got: row.len() });
            }
            for &v in row {
                if v as usize >= field.order() {
                    return Err(Error::InvalidArgument(format!("entry {v} out of field range")));
                }
                data.push(v);
            }
        }
        Ok(Matrix { field, rows: r, cols: c, data })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u16 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u16) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u16] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    fn check_same_field(&self, other: &Matrix) -> Result<()> {
        if self.field != other.field {
            return Err(Error::FieldMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_field(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.rows * self.cols, got: other.rows * other.cols });
        }
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.add(a, b)).collect();
        Ok(Matrix { field: self.field.clone(), rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_field(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.rows * self.cols, got: other.rows * other.cols });
        }
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.sub(a, b)).collect();
        Ok(Matrix { field: self.field.clone(), rows: self.rows, cols: self.cols, data })
    }

    pub fn neg(&self) -> Matrix {
        let f = &self.field;
        let data = self.data.iter().map(|&a| f.neg(a)).collect();
        Matrix { field: self.field.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: u16) -> Matrix {
        let f = &self.field;
        let data = self.data.iter().map(|&a| f.mul(a, s)).collect();
        Matrix { field: self.field.clone(), rows: self.rows, cols: self.cols, data }
    }

    /// In-place `self += s * other`; shapes must already agree.
    pub fn add_scaled_assign(&mut self, other: &Matrix, s: u16) {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        let f = self.field.clone();
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = f.add(*a, f.mul(s, b));
        }
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_field(other)?;
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let f = &self.field;
        let mut out = Matrix::zeros(self.field.clone(), self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = f.add(out.get(i, j), f.mul(a, other.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Matrix power; `pow(0)` is the identity.
    pub fn pow(&self, e: usize) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::Precondition("power of a non-square matrix".into()));
        }
        let mut acc = Matrix::identity(self.field.clone(), self.rows);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.field.clone(), self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// `self * v` for a column vector v.
    pub fn mul_vec(&self, v: &[u16]) -> Result<Vec<u16>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        let f = &self.field;
        let mut out = vec![0u16; self.rows];
        for i in 0..self.rows {
            let mut acc = 0u16;
            for j in 0..self.cols {
                acc = f.add(acc, f.mul(self.get(i, j), v[j]));
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// `T^n = 0` with n = rows; the standard nilpotency criterion.
    pub fn is_nilpotent(&self) -> Result<bool> {
        if !self.is_square() {
            return Err(Error::Precondition("nilpotency of a non-square matrix".into()));
        }
        let mut m = self.clone();
        let mut e = 1usize;
        while e < self.rows {
            m = m.mul(&m)?;
            e *= 2;
        }
        Ok(m.is_zero())
    }

    /// Nilpotency index: smallest e >= 1 with T^e = 0, or None.
    pub fn nilpotency_index(&self) -> Result<Option<usize>> {
        if !self.is_nilpotent()? {
            return Ok(None);
        }
        let mut m = Matrix::identity(self.field.clone(), self.rows);
        for e in 1..=self.rows.max(1) {
            m = m.mul(self)?;
            if m.is_zero() {
                return Ok(Some(e));
            }
        }
        unreachable!("nilpotent matrix must vanish by its dimension");
    }

    /// Reduced row echelon form together with the pivot columns.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let f = self.field.clone();
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| m.get(i, c) != 0) else {
                continue;
            };
            for j in 0..m.cols {
                let (a, b) = (m.get(r, j), m.get(pr, j));
                m.set(r, j, b);
                m.set(pr, j, a);
            }
            let inv = f.inv(m.get(r, c)).expect("pivot nonzero");
            for j in 0..m.cols {
                m.set(r, j, f.mul(m.get(r, j), inv));
            }
            for i in 0..m.rows {
                if i != r && m.get(i, c) != 0 {
                    let s = m.get(i, c);
                    for j in 0..m.cols {
                        let v = f.sub(m.get(i, j), f.mul(s, m.get(r, j)));
                        m.set(i, j, v);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Rank, right null space, and column space of `self`.
    pub fn rank_kernel_image(&self) -> (usize, Subspace, Subspace) {
        let (rref, pivots) = self.rref();
        let rank = pivots.len();
        let f = self.field.clone();
        // Kernel: for each free column, one basis vector.
        let mut kernel_rows = Vec::new();
        let pivot_set: Vec<Option<usize>> = {
            let mut v = vec![None; self.cols];
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = Some(r);
            }
            v
        };
        for free in 0..self.cols {
            if pivot_set[free].is_some() {
                continue;
            }
            let mut vec = vec![0u16; self.cols];
            vec[free] = 1;
            for (c, pr) in pivot_set.iter().enumerate() {
                if let Some(r) = pr {
                    vec[c] = f.neg(rref.get(*r, free));
                }
            }
            kernel_rows.push(vec);
        }
        let kernel = Subspace::from_rows(f.clone(), self.cols, kernel_rows);
        let image = Subspace::from_matrix_rows(&self.transpose());
        (rank, kernel, image)
    }

    /// One solution of `self * x = b`, if any.
    pub fn solve(&self, b: &[u16]) -> Result<Option<Vec<u16>>> {
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: b.len() });
        }
        let f = self.field.clone();
        let mut aug = Matrix::zeros(f.clone(), self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, self.cols, b[i]);
        }
        let (r, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return Ok(None);
        }
        let mut x = vec![0u16; self.cols];
        for (row, &c) in pivots.iter().enumerate() {
            x[c] = r.get(row, self.cols);
        }
        Ok(Some(x))
    }

    /// Inverse of a square matrix, if nonsingular.
    pub fn inverse(&self) -> Result<Option<Matrix>> {
        if !self.is_square() {
            return Err(Error::Precondition("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let f = self.field.clone();
        let mut aug = Matrix::zeros(f, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, n + i, 1);
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Ok(None);
        }
        let mut out = Matrix::zeros(self.field.clone(), n, n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, r.get(i, n + j));
            }
        }
        Ok(Some(out))
    }

    /// Submatrix of the given row and column ranges.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Matrix {
        let mut out = Matrix::zeros(self.field.clone(), rows.len(), cols.len());
        for (oi, i) in rows.clone().enumerate() {
            for (oj, j) in cols.clone().enumerate() {
                out.set(oi, oj, self.get(i, j));
            }
        }
        out
    }

    /// Rank-one update `self += col * row` for an outer product.
    pub fn add_outer_assign(&mut self, col: &[u16], row: &[u16]) {
        debug_assert_eq!(col.len(), self.rows);
        debug_assert_eq!(row.len(), self.cols);
        let f = self.field.clone();
        for i in 0..self.rows {
            if col[i] == 0 {
                continue;
            }
            for j in 0..self.cols {
                let v = f.add(self.get(i, j), f.mul(col[i], row[j]));
                self.set(i, j, v);
            }
        }
    }

    /// Re-interprets entries through a field embedding table.
    pub fn map_field(&self, target: FieldRef, table: &[u16]) -> Matrix {
        let data = self.data.iter().map(|&v| table[v as usize]).collect();
        Matrix { field: target, rows: self.rows, cols: self.cols, data }
    }

    /// Text format: first line `rows cols p k`, then row-major entries.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} {} {} {}\n",
            self.rows,
            self.cols,
            self.field.characteristic(),
            self.field.degree()
        );
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Matrix> {
        let mut tokens = text.split_whitespace();
        let mut next_usize = |name: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {name}")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad {name}")))
        };
        let rows = next_usize("rows")?;
        let cols = next_usize("cols")?;
        let p = next_usize("p")? as u16;
        let k = next_usize("k")? as u32;
        let field = crate::field::Field::new(p, k)?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let v = next_usize("entry")? as u16;
            if v as usize >= field.order() {
                return Err(Error::Parse(format!("entry {v} out of range for field")));
            }
            data.push(v);
        }
        if tokens.next().is_some() {
            return Err(Error::Parse("trailing tokens after matrix entries".into()));
        }
        Ok(Matrix { field, rows, cols, data })
    }
}

/// Walks every F_q-linear combination of a set of basis matrices in
/// deterministic odometer order (first coefficient fastest). Each step adds
/// the field difference of consecutive digit values times the basis matrix,
/// so the running matrix always equals the exact linear combination.
pub struct SpanIter {
    field: FieldRef,
    basis: Vec<Matrix>,
    digits: Vec<u16>,
    current: Matrix,
}

impl SpanIter {
    pub fn new(field: FieldRef, basis: Vec<Matrix>, rows: usize, cols: usize) -> SpanIter {
        let current = Matrix::zeros(field.clone(), rows, cols);
        let digits = vec![0u16; basis.len()];
        SpanIter { field, basis, digits, current }
    }

    pub fn total(&self) -> u128 {
        (self.field.order() as u128).pow(self.basis.len() as u32)
    }

    pub fn current(&self) -> &Matrix {
        &self.current
    }

    /// Jumps to the combination with the given odometer index.
    pub fn seek(&mut self, index: u128) {
        let q = self.field.order() as u128;
        let mut ix = index;
        self.current = Matrix::zeros(self.field.clone(), self.current.rows, self.current.cols);
        for (pos, d) in self.digits.iter_mut().enumerate() {
            *d = (ix % q) as u16;
            ix /= q;
            if *d != 0 {
                self.current.add_scaled_assign(&self.basis[pos], *d);
            }
        }
    }

    /// Steps to the next combination; false once the walk wraps around.
    pub fn advance(&mut self) -> bool {
        for pos in 0..self.digits.len() {
            let old = self.digits[pos];
            let new = old + 1;
            if (new as usize) < self.field.order() {
                self.digits[pos] = new;
                let delta = self.field.sub(new, old);
                self.current.add_scaled_assign(&self.basis[pos], delta);
                return true;
            }
            self.digits[pos] = 0;
            self.current.add_scaled_assign(&self.basis[pos], self.field.neg(old));
        }
        false
    }
}

/// `u^T * gram * v`.
pub fn bilinear(gram: &Matrix, u: &[u16], v: &[u16]) -> u16 {
    let f = &gram.field;
    let mut acc = 0u16;
    for i in 0..gram.rows {
        if u[i] == 0 {
            continue;
        }
        let mut row_acc = 0u16;
        for j in 0..gram.cols {
            row_acc = f.add(row_acc, f.mul(gram.get(i, j), v[j]));
        }
        acc = f.add(acc, f.mul(u[i], row_acc));
    }
    acc
}
