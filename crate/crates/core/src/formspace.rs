//! Vector spaces with symplectic or quadratic structure, membership tests
//! for the associated Lie algebras and groups, and exact group enumeration.
//!
//! Characteristic 2 gets the full treatment: a quadratic form is stored as an
//! upper-triangular coefficient table (its Gram matrix does not determine it
//! when p = 2), nondegeneracy allows a one-dimensional radical on which Q is
//! injective, and the Dickson invariant distinguishes the two cosets of the
//! special orthogonal group where that distinction exists.

use crate::error::{Error, Result};
use crate::field::{Field, FieldRef};
use crate::matrix::{bilinear, Matrix};
use crate::subspace::{quotient_map, Subspace};

#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum SpaceKind {
    Gl,
    Sp,
    O,
}

impl SpaceKind {
    pub fn parse(s: &str) -> Result<SpaceKind> {
        match s.to_ascii_uppercase().as_str() {
            "GL" => Ok(SpaceKind::Gl),
            "SP" => Ok(SpaceKind::Sp),
            "O" | "SO" => Ok(SpaceKind::O),
            _ => Err(Error::Parse(format!("unknown kind {s:?} (expected GL, Sp or O)"))),
        }
    }
}

impl std::fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpaceKind::Gl => write!(f, "GL"),
            SpaceKind::Sp => write!(f, "Sp"),
            SpaceKind::O => write!(f, "O"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GroupMembership {
    NotMember,
    InSp,
    InODickson0,
    InODickson1,
}

/// A vector space of one of the kinds GL, Sp, O over a small finite field.
///
/// For Sp the alternating Gram matrix is stored; for O the quadratic form is
/// stored as an upper-triangular table `quad` with Q(v) = sum_{i<=j} q_ij
/// v_i v_j, and `gram` is its polarization (v,v') = Q(v+v') - Q(v) - Q(v').
#[derive(Clone, PartialEq, Debug)]
pub struct FormedSpace {
    pub kind: SpaceKind,
    pub dim: usize,
    pub field: FieldRef,
    pub gram: Option<Matrix>,
    pub quad: Option<Matrix>,
}

impl FormedSpace {
    /// Standard split model: hyperbolic pairs (e_i, f_i) interleaved, and for
    /// O of odd dimension a final vector z with Q(z) = 1 (the radical of the
    /// bilinear form when p = 2).
    pub fn split(kind: SpaceKind, dim: usize, field: FieldRef) -> Result<FormedSpace> {
        match kind {
            SpaceKind::Gl => {
                if dim == 0 {
                    return Ok(FormedSpace { kind, dim, field, gram: None, quad: None });
                }
                Ok(FormedSpace { kind, dim, field, gram: None, quad: None })
            }
            SpaceKind::Sp => {
                if dim % 2 != 0 {
                    return Err(Error::InvalidArgument("symplectic spaces have even dimension".into()));
                }
                let mut gram = Matrix::zeros(field.clone(), dim, dim);
                for i in 0..dim / 2 {
                    gram.set(2 * i, 2 * i + 1, 1);
                    gram.set(2 * i + 1, 2 * i, field.neg(1));
                }
                let space = FormedSpace { kind, dim, field, gram: Some(gram), quad: None };
                space.validate()?;
                Ok(space)
            }
            SpaceKind::O => {
                let mut quad = Matrix::zeros(field.clone(), dim, dim);
                for i in 0..dim / 2 {
                    quad.set(2 * i, 2 * i + 1, 1);
                }
                if dim % 2 == 1 {
                    quad.set(dim - 1, dim - 1, 1);
                }
                FormedSpace::from_quadratic(dim, field, quad)
            }
        }
    }

    /// O-space from an upper-triangular coefficient table; the Gram matrix is
    /// derived by polarization and nondegeneracy is checked.
    pub fn from_quadratic(dim: usize, field: FieldRef, quad: Matrix) -> Result<FormedSpace> {
        for i in 0..dim {
            for j in 0..i {
                if quad.get(i, j) != 0 {
                    return Err(Error::InvalidArgument("quad table must be upper-triangular".into()));
                }
            }
        }
        let gram = quad.add(&quad.transpose())?;
        let space = FormedSpace { kind: SpaceKind::O, dim, field, gram: Some(gram), quad: Some(quad) };
        space.validate()?;
        Ok(space)
    }

    /// Sp-space from an explicit Gram matrix.
    pub fn from_symplectic(dim: usize, field: FieldRef, gram: Matrix) -> Result<FormedSpace> {
        let space = FormedSpace { kind: SpaceKind::Sp, dim, field, gram: Some(gram), quad: None };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SpaceKind::Gl => Ok(()),
            SpaceKind::Sp => {
                if self.dim % 2 != 0 {
                    return Err(Error::InvalidArgument("symplectic spaces have even dimension".into()));
                }
                let g = self.gram.as_ref().ok_or_else(|| Error::InvalidArgument("Sp needs a Gram matrix".into()))?;
                let f = &self.field;
                for i in 0..self.dim {
                    if g.get(i, i) != 0 {
                        return Err(Error::InvalidArgument("symplectic form must be alternating".into()));
                    }
                    for j in 0..self.dim {
                        if g.get(i, j) != f.neg(g.get(j, i)) {
                            return Err(Error::InvalidArgument("symplectic form must be skew".into()));
                        }
                    }
                }
                if g.rank() != self.dim {
                    return Err(Error::InvalidArgument("symplectic form must be nonsingular".into()));
                }
                Ok(())
            }
            SpaceKind::O => {
                let g = self.gram.as_ref().ok_or_else(|| Error::InvalidArgument("O needs a Gram matrix".into()))?;
                let q = self.quad.as_ref().ok_or_else(|| Error::InvalidArgument("O needs a quad table".into()))?;
                // Gram must be the polarization of Q on all basis pairs.
                let expected = q.add(&q.transpose())?;
                if *g != expected {
                    return Err(Error::InvalidArgument("Gram matrix is not the polarization of Q".into()));
                }
                let rad = self.radical();
                if self.field.characteristic() != 2 {
                    if !rad.is_zero() {
                        return Err(Error::InvalidArgument("degenerate quadratic form (p odd)".into()));
                    }
                } else {
                    if rad.dim() > 1 {
                        return Err(Error::InvalidArgument("radical of dimension > 1".into()));
                    }
                    if rad.dim() == 1 {
                        let r = rad.basis().row(0);
                        if self.q_value(r) == 0 {
                            return Err(Error::InvalidArgument("Q vanishes on the radical".into()));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Radical of the bilinear form; the zero space for GL and Sp.
    pub fn radical(&self) -> Subspace {
        match &self.gram {
            None => Subspace::zero(self.field.clone(), self.dim),
            Some(g) => {
                let (_, kernel, _) = g.rank_kernel_image();
                kernel
            }
        }
    }

    /// (u, v) through the Gram matrix.
    pub fn pair(&self, u: &[u16], v: &[u16]) -> u16 {
        match &self.gram {
            Some(g) => bilinear(g, u, v),
            None => 0,
        }
    }

    /// Q(v) for O-spaces.
    pub fn q_value(&self, v: &[u16]) -> u16 {
        let q = self.quad.as_ref().expect("q_value on a non-quadratic space");
        let f = &self.field;
        let mut acc = 0u16;
        for i in 0..self.dim {
            if v[i] == 0 {
                continue;
            }
            for j in i..self.dim {
                acc = f.add(acc, f.mul(q.get(i, j), f.mul(v[i], v[j])));
            }
        }
        acc
    }

    /// Q vanishes identically on the subspace. Checked on basis vectors and
    /// pairwise sums, which is complete for a quadratic form.
    pub fn q_vanishes_on(&self, s: &Subspace) -> bool {
        let rows: Vec<&[u16]> = s.basis_rows().collect();
        for (i, r) in rows.iter().enumerate() {
            if self.q_value(r) != 0 {
                return false;
            }
            for r2 in rows.iter().skip(i + 1) {
                if self.pair(r, r2) != 0 {
                    return false;
                }
            }
        }
        true
    }

    /// Membership in the Lie algebra: everything for GL, skew-adjointness for
    /// Sp, and for O the conditions (Tv, v) = 0 for all v (checked on basis
    /// vectors plus pairwise sums) together with T vanishing on the radical.
    pub fn in_lie_algebra(&self, t: &Matrix) -> Result<bool> {
        if t.rows != self.dim || t.cols != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: t.rows });
        }
        if t.field != self.field {
            return Err(Error::FieldMismatch);
        }
        match self.kind {
            SpaceKind::Gl => Ok(true),
            SpaceKind::Sp => {
                let f = &self.field;
                let n = self.dim;
                let cols: Vec<Vec<u16>> = (0..n).map(|j| (0..n).map(|i| t.get(i, j)).collect()).collect();
                let e: Vec<Vec<u16>> = (0..n)
                    .map(|i| (0..n).map(|j| u16::from(i == j)).collect())
                    .collect();
                for i in 0..n {
                    for j in 0..n {
                        let lhs = f.add(self.pair(&cols[i], &e[j]), self.pair(&e[i], &cols[j]));
                        if lhs != 0 {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            SpaceKind::O => {
                let f = &self.field;
                let n = self.dim;
                let cols: Vec<Vec<u16>> = (0..n).map(|j| (0..n).map(|i| t.get(i, j)).collect()).collect();
                let e: Vec<Vec<u16>> = (0..n)
                    .map(|i| (0..n).map(|j| u16::from(i == j)).collect())
                    .collect();
                for i in 0..n {
                    if self.pair(&cols[i], &e[i]) != 0 {
                        return Ok(false);
                    }
                    for j in i + 1..n {
                        let s = f.add(self.pair(&cols[i], &e[j]), self.pair(&cols[j], &e[i]));
                        if s != 0 {
                            return Ok(false);
                        }
                    }
                }
                let rad = self.radical();
                for r in rad.basis_rows() {
                    if t.mul_vec(r)?.iter().any(|&x| x != 0) {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// A basis of the Lie algebra as a subspace of End(V).
    pub fn lie_algebra_basis(&self) -> Result<Vec<Matrix>> {
        let n = self.dim;
        if self.kind == SpaceKind::Gl {
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut m = Matrix::zeros(self.field.clone(), n, n);
                    m.set(i, j, 1);
                    out.push(m);
                }
            }
            return Ok(out);
        }
        let rows = self.lie_constraint_rows();
        Ok(solve_matrix_space(self.field.clone(), n, rows))
    }

    /// Linear constraints on the entries of T cutting out the Lie algebra,
    /// each row of length dim^2 over the entry order T[r][c] -> r*dim + c.
    pub fn lie_constraint_rows(&self) -> Vec<Vec<u16>> {
        let n = self.dim;
        let f = &self.field;
        let mut rows = Vec::new();
        let g = match &self.gram {
            Some(g) => g,
            None => return rows,
        };
        match self.kind {
            SpaceKind::Gl => {}
            SpaceKind::Sp => {
                // (Te_i, e_j) + (e_i, Te_j) = 0:
                // sum_r T[r][i] G[r][j] + sum_r G[i][r] T[r][j] = 0.
                for i in 0..n {
                    for j in 0..n {
                        let mut row = vec![0u16; n * n];
                        for r in 0..n {
                            row[r * n + i] = f.add(row[r * n + i], g.get(r, j));
                            row[r * n + j] = f.add(row[r * n + j], g.get(i, r));
                        }
                        rows.push(row);
                    }
                }
            }
            SpaceKind::O => {
                // (Te_i, e_i) = 0 and (Te_i, e_j) + (Te_j, e_i) = 0 for i < j.
                for i in 0..n {
                    let mut row = vec![0u16; n * n];
                    for r in 0..n {
                        row[r * n + i] = g.get(r, i);
                    }
                    rows.push(row);
                    for j in i + 1..n {
                        let mut row = vec![0u16; n * n];
                        for r in 0..n {
                            row[r * n + i] = f.add(row[r * n + i], g.get(r, j));
                            row[r * n + j] = f.add(row[r * n + j], g.get(r, i));
                        }
                        rows.push(row);
                    }
                }
                // T annihilates the radical.
                for r in self.radical().basis_rows() {
                    for out_coord in 0..n {
                        let mut row = vec![0u16; n * n];
                        for c in 0..n {
                            row[out_coord * n + c] = r[c];
                        }
                        rows.push(row);
                    }
                }
            }
        }
        rows
    }

    /// Classifies g: form preservation for Sp; Q-preservation plus the
    /// Dickson invariant for O. The Dickson invariant is rank(g - 1 on V/R)
    /// mod 2 when p = 2, and the determinant class when p is odd.
    pub fn group_membership(&self, g: &Matrix) -> Result<GroupMembership> {
        if g.rows != self.dim || g.cols != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: g.rows });
        }
        match self.kind {
            SpaceKind::Gl => Err(Error::Precondition("group_membership is for Sp and O kinds".into())),
            SpaceKind::Sp => {
                let gr = self.gram.as_ref().unwrap();
                let ok = g.transpose().mul(gr)?.mul(g)? == *gr;
                Ok(if ok { GroupMembership::InSp } else { GroupMembership::NotMember })
            }
            SpaceKind::O => {
                if !self.preserves_q(g)? {
                    return Ok(GroupMembership::NotMember);
                }
                if self.dickson(g)? == 0 {
                    Ok(GroupMembership::InODickson0)
                } else {
                    Ok(GroupMembership::InODickson1)
                }
            }
        }
    }

    /// Q(gv) = Q(v) for all v, checked on basis vectors and pairwise sums.
    pub fn preserves_q(&self, g: &Matrix) -> Result<bool> {
        let n = self.dim;
        let cols: Vec<Vec<u16>> = (0..n).map(|j| (0..n).map(|i| g.get(i, j)).collect()).collect();
        for (j, c) in cols.iter().enumerate() {
            let mut e = vec![0u16; n];
            e[j] = 1;
            if self.q_value(c) != self.q_value(&e) {
                return Ok(false);
            }
        }
        let gram = self.gram.as_ref().unwrap();
        for i in 0..n {
            for j in i + 1..n {
                if self.pair(&cols[i], &cols[j]) != gram.get(i, j) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Dickson invariant of a Q-preserving map.
    pub fn dickson(&self, g: &Matrix) -> Result<u8> {
        if self.field.characteristic() != 2 {
            let det = determinant(g);
            return Ok(u8::from(det != 1));
        }
        let one = Matrix::identity(self.field.clone(), self.dim);
        let gm1 = g.sub(&one)?;
        let rad = self.radical();
        if rad.is_zero() {
            return Ok((gm1.rank() % 2) as u8);
        }
        let full = Subspace::full(self.field.clone(), self.dim);
        let induced = quotient_map(&full, &rad, &gm1)?;
        Ok((induced.rank() % 2) as u8)
    }

    /// True membership in the group G of this kind: GL(V), Sp(V), or SO(V).
    /// For O in characteristic 2 and odd dimension, O(V) is connected and
    /// every Q-preserving map belongs to SO(V); in even dimension SO is the
    /// Dickson-0 half, and for odd characteristic the determinant-1 half.
    pub fn in_group(&self, g: &Matrix) -> Result<bool> {
        match self.kind {
            SpaceKind::Gl => Ok(g.inverse()?.is_some()),
            SpaceKind::Sp => Ok(self.group_membership(g)? == GroupMembership::InSp),
            SpaceKind::O => {
                if !self.preserves_q(g)? {
                    return Ok(false);
                }
                if self.field.characteristic() == 2 && self.dim % 2 == 1 {
                    return Ok(true);
                }
                Ok(self.dickson(g)? == 0)
            }
        }
    }

    /// Classical order of G(F_q): GL_n, Sp_2n, SO_2n+1, or split SO_2n.
    pub fn group_order_formula(&self) -> u128 {
        let q = self.field.order() as u128;
        let n = self.dim;
        match self.kind {
            SpaceKind::Gl => {
                let mut acc = 1u128;
                for i in 0..n {
                    acc *= q.pow(n as u32) - q.pow(i as u32);
                }
                acc
            }
            SpaceKind::Sp => sp_order(q, n / 2),
            SpaceKind::O => {
                if n % 2 == 1 {
                    sp_order(q, n / 2)
                } else {
                    let m = n / 2;
                    let mut acc = q.pow((m * (m - 1)) as u32) * (q.pow(m as u32) - 1);
                    for i in 1..m {
                        acc *= q.pow(2 * i as u32) - 1;
                    }
                    acc
                }
            }
        }
    }

    /// Visits every isometry of the form: all of Sp(V) for kind Sp, all of
    /// O(V) for kind O. Columns are grown left to right, solving the linear
    /// pairing constraints and filtering by Q, so only partial isometries
    /// are ever explored.
    pub fn for_each_isometry<F>(&self, budget: u64, cb: &mut F) -> Result<()>
    where
        F: FnMut(&Matrix) -> Result<()>,
    {
        if self.kind == SpaceKind::Gl {
            return Err(Error::Precondition("isometry enumeration is for Sp and O kinds".into()));
        }
        let full_order = match self.kind {
            SpaceKind::Sp => self.group_order_formula(),
            SpaceKind::O => {
                let so = self.group_order_formula();
                if self.field.characteristic() == 2 && self.dim % 2 == 1 {
                    so
                } else {
                    2 * so
                }
            }
            SpaceKind::Gl => unreachable!(),
        };
        if full_order > budget as u128 {
            return Err(Error::Infeasible { needed: full_order, budget: budget as u128 });
        }
        let n = self.dim;
        if n == 0 {
            return cb(&Matrix::zeros(self.field.clone(), 0, 0));
        }
        let mut cols: Vec<Vec<u16>> = Vec::with_capacity(n);
        self.isometry_backtrack(&mut cols, cb)
    }

    fn isometry_backtrack<F>(&self, cols: &mut Vec<Vec<u16>>, cb: &mut F) -> Result<()>
    where
        F: FnMut(&Matrix) -> Result<()>,
    {
        let n = self.dim;
        let j = cols.len();
        if j == n {
            let mut g = Matrix::zeros(self.field.clone(), n, n);
            for (c, col) in cols.iter().enumerate() {
                for r in 0..n {
                    g.set(r, c, col[r]);
                }
            }
            return cb(&g);
        }
        let f = self.field.clone();
        let gram = self.gram.as_ref().unwrap();
        // Linear constraints: (c_i, x) = gram[i][j] for i < j.
        let mut sys = Matrix::zeros(f.clone(), j, n);
        let mut rhs = vec![0u16; j];
        for i in 0..j {
            for c in 0..n {
                let mut acc = 0u16;
                for r in 0..n {
                    acc = f.add(acc, f.mul(cols[i][r], gram.get(r, c)));
                }
                sys.set(i, c, acc);
            }
            rhs[i] = gram.get(i, j);
        }
        let Some(particular) = sys.solve(&rhs)? else {
            return Ok(());
        };
        let (_, kernel, _) = sys.rank_kernel_image();
        let kdim = kernel.dim();
        let q = f.order() as u64;
        let count = q.pow(kdim as u32);
        let want_q = if self.kind == SpaceKind::O {
            let mut e = vec![0u16; n];
            e[j] = 1;
            Some(self.q_value(&e))
        } else {
            None
        };
        let mut idx = vec![0u16; kdim];
        for _ in 0..count {
            let mut cand = particular.clone();
            for (r, &t) in idx.iter().enumerate() {
                if t != 0 {
                    for c in 0..n {
                        cand[c] = f.add(cand[c], f.mul(t, kernel.basis().get(r, c)));
                    }
                }
            }
            let ok = match want_q {
                Some(w) => self.q_value(&cand) == w,
                None => true,
            };
            if ok {
                cols.push(cand);
                self.isometry_backtrack(cols, cb)?;
                cols.pop();
            }
            // Odometer.
            for d in idx.iter_mut() {
                *d += 1;
                if (*d as usize) < f.order() {
                    break;
                }
                *d = 0;
            }
        }
        Ok(())
    }

    /// |G(F_q)| by exhaustive isometry enumeration, filtered to the group
    /// (Sp, or the special orthogonal part for O).
    pub fn group_order_enumerated(&self, budget: u64) -> Result<u128> {
        if self.kind == SpaceKind::Gl {
            let n = self.dim;
            let q = self.field.order() as u128;
            let total = q.pow((n * n) as u32);
            if total > budget as u128 {
                return Err(Error::Infeasible { needed: total, budget: budget as u128 });
            }
            let mut count = 0u128;
            let mut m = Matrix::zeros(self.field.clone(), n, n);
            let cells = n * n;
            let mut idx = vec![0u16; cells];
            loop {
                for (pos, &v) in idx.iter().enumerate() {
                    m.data[pos] = v;
                }
                if m.inverse()?.is_some() {
                    count += 1;
                }
                let mut done = true;
                for d in idx.iter_mut() {
                    *d += 1;
                    if (*d as usize) < self.field.order() {
                        done = false;
                        break;
                    }
                    *d = 0;
                }
                if done {
                    break;
                }
            }
            return Ok(count);
        }
        let mut count = 0u128;
        self.for_each_isometry(budget, &mut |g| {
            if self.in_group(g)? {
                count += 1;
            }
            Ok(())
        })?;
        Ok(count)
    }

    /// Text descriptor: `kind dim p k` on the first line, then optional
    /// `gram` / `quad` blocks in the matrix text format.
    pub fn to_descriptor(&self) -> String {
        let mut s = format!(
            "{} {} {} {}\n",
            self.kind,
            self.dim,
            self.field.characteristic(),
            self.field.degree()
        );
        if self.kind == SpaceKind::Sp {
            s.push_str("gram\n");
            s.push_str(&self.gram.as_ref().unwrap().to_text());
        }
        if self.kind == SpaceKind::O {
            s.push_str("quad\n");
            s.push_str(&self.quad.as_ref().unwrap().to_text());
        }
        s
    }

    pub fn from_descriptor(text: &str) -> Result<FormedSpace> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty descriptor".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::Parse("descriptor header must be `kind dim p k`".into()));
        }
        let kind = SpaceKind::parse(toks[0])?;
        let dim: usize = toks[1].parse().map_err(|_| Error::Parse("bad dim".into()))?;
        let p: u16 = toks[2].parse().map_err(|_| Error::Parse("bad p".into()))?;
        let k: u32 = toks[3].parse().map_err(|_| Error::Parse("bad k".into()))?;
        let field = Field::new(p, k)?;
        let rest: Vec<&str> = lines.collect();
        if rest.iter().all(|l| l.trim().is_empty()) {
            return FormedSpace::split(kind, dim, field);
        }
        let mut gram = None;
        let mut quad = None;
        let mut i = 0;
        while i < rest.len() {
            let tag = rest[i].trim();
            if tag.is_empty() {
                i += 1;
                continue;
            }
            // A matrix block spans 1 header line plus `rows` entry lines.
            let take_block = |start: usize| -> Result<(Matrix, usize)> {
                let header = rest
                    .get(start)
                    .ok_or_else(|| Error::Parse("missing matrix block".into()))?;
                let rows: usize = header
                    .split_whitespace()
                    .next()
                    .ok_or_else(|| Error::Parse("bad matrix header".into()))?
                    .parse()
                    .map_err(|_| Error::Parse("bad matrix header".into()))?;
                let end = start + 1 + rows;
                if end > rest.len() {
                    return Err(Error::Parse("truncated matrix block".into()));
                }
                let m = Matrix::from_text(&rest[start..end].join("\n"))?;
                Ok((m, end))
            };
            match tag {
                "gram" => {
                    let (m, next) = take_block(i + 1)?;
                    gram = Some(m);
                    i = next;
                }
                "quad" => {
                    let (m, next) = take_block(i + 1)?;
                    quad = Some(m);
                    i = next;
                }
                other => return Err(Error::Parse(format!("unexpected block tag {other:?}"))),
            }
        }
        match kind {
            SpaceKind::Gl => FormedSpace::split(SpaceKind::Gl, dim, field),
            SpaceKind::Sp => {
                let gram = gram.ok_or_else(|| Error::Parse("Sp descriptor needs a gram block".into()))?;
                FormedSpace::from_symplectic(dim, field, gram)
            }
            SpaceKind::O => {
                let quad = quad.ok_or_else(|| Error::Parse("O descriptor needs a quad block".into()))?;
                FormedSpace::from_quadratic(dim, field, quad)
            }
        }
    }
}

fn sp_order(q: u128, n: usize) -> u128 {
    let mut acc = q.pow((n * n) as u32);
    for i in 1..=n {
        acc *= q.pow(2 * i as u32) - 1;
    }
    acc
}

pub fn determinant(m: &Matrix) -> u16 {
    let f = m.field.clone();
    let n = m.rows;
    let mut a = m.clone();
    let mut det = 1u16;
    for c in 0..n {
        let Some(pr) = (c..n).find(|&i| a.get(i, c) != 0) else {
            return 0;
        };
        if pr != c {
            for j in 0..n {
                let (x, y) = (a.get(c, j), a.get(pr, j));
                a.set(c, j, y);
                a.set(pr, j, x);
            }
            det = f.neg(det);
        }
        det = f.mul(det, a.get(c, c));
        let inv = f.inv(a.get(c, c)).unwrap();
        for i in c + 1..n {
            if a.get(i, c) != 0 {
                let s = f.mul(a.get(i, c), inv);
                for j in c..n {
                    let v = f.sub(a.get(i, j), f.mul(s, a.get(c, j)));
                    a.set(i, j, v);
                }
            }
        }
    }
    det
}

/// Kernel of a system of linear constraints over matrix entries, returned as
/// a basis of n x n matrices (entry order T[r][c] -> r*n + c).
pub fn solve_matrix_space(field: FieldRef, n: usize, rows: Vec<Vec<u16>>) -> Vec<Matrix> {
    if n == 0 {
        return Vec::new();
    }
    if rows.is_empty() {
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n * n {
            let mut m = Matrix::zeros(field.clone(), n, n);
            m.data[i] = 1;
            out.push(m);
        }
        return out;
    }
    let sys = Matrix::from_rows(field.clone(), rows).unwrap();
    let (_, kernel, _) = sys.rank_kernel_image();
    let mut out = Vec::with_capacity(kernel.dim());
    for row in kernel.basis_rows() {
        let mut m = Matrix::zeros(field.clone(), n, n);
        m.data.copy_from_slice(row);
        out.push(m);
    }
    out
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
    fn split_sp2_gram() {
        let s = FormedSpace::split(SpaceKind::Sp, 2, f2()).unwrap();
        let g = s.gram.as_ref().unwrap();
        assert_eq!(g.data, vec![0, 1, 1, 0]);
        assert!(FormedSpace::split(SpaceKind::Sp, 3, f2()).is_err());
    }

    #[test]
    fn split_o2_hyperbolic() {
        let s = FormedSpace::split(SpaceKind::O, 2, f2()).unwrap();
        assert_eq!(s.q_value(&[1, 0]), 0);
        assert_eq!(s.q_value(&[0, 1]), 0);
        assert_eq!(s.q_value(&[1, 1]), 1);
        assert_eq!(s.gram.as_ref().unwrap().data, vec![0, 1, 1, 0]);
        assert!(s.radical().is_zero());
    }

    #[test]
    fn split_o3_radical() {
        let s = FormedSpace::split(SpaceKind::O, 3, f2()).unwrap();
        // Q = x1 x2 + x3^2.
        assert_eq!(s.q_value(&[1, 1, 0]), 1);
        assert_eq!(s.q_value(&[0, 0, 1]), 1);
        let rad = s.radical();
        assert_eq!(rad.dim(), 1);
        assert!(rad.contains_vec(&[0, 0, 1]));
        // Oracle: (v, e_i) = 0 for all i over all 8 vectors exactly on the radical.
        for bits in 0..8u16 {
            let v = [bits & 1, (bits >> 1) & 1, (bits >> 2) & 1];
            let mut in_rad = true;
            for i in 0..3 {
                let mut e = [0u16; 3];
                e[i] = 1;
                if s.pair(&v, &e) != 0 {
                    in_rad = false;
                }
            }
            assert_eq!(in_rad, rad.contains_vec(&v));
        }
    }

    #[test]
    fn polarization_consistency_random() {
        for (p, k) in [(2u16, 1u32), (2, 2), (3, 1), (5, 1)] {
            let field = Field::new(p, k).unwrap();
            let s = FormedSpace::split(SpaceKind::O, 4, field.clone()).unwrap();
            let mut state = 99u64;
            for _ in 0..50 {
                let mut v = [0u16; 4];
                let mut w = [0u16; 4];
                for i in 0..4 {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(99);
                    v[i] = ((state >> 17) % field.order() as u64) as u16;
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(99);
                    w[i] = ((state >> 23) % field.order() as u64) as u16;
                }
                let sum: Vec<u16> = (0..4).map(|i| field.add(v[i], w[i])).collect();
                let rhs = field.sub(field.sub(s.q_value(&sum), s.q_value(&v)), s.q_value(&w));
                assert_eq!(s.pair(&v, &w), rhs);
            }
        }
    }

    #[test]
    fn lie_membership_basics() {
        let sp2 = FormedSpace::split(SpaceKind::Sp, 2, f2()).unwrap();
        assert!(sp2.in_lie_algebra(&Matrix::zeros(f2(), 2, 2)).unwrap());
        // In char 2 the identity is skew-adjoint: (v,v') + (v,v') = 0.
        assert!(sp2.in_lie_algebra(&Matrix::identity(f2(), 2)).unwrap());

        let o3 = FormedSpace::split(SpaceKind::O, 3, f2()).unwrap();
        // Any T moving the radical vector z is outside fo(V).
        let mut t = Matrix::zeros(f2(), 3, 3);
        t.set(0, 2, 1);
        assert!(!o3.in_lie_algebra(&t).unwrap());
    }

    #[test]
    fn lie_membership_matches_all_vector_oracle_o3() {
        // Definitional check: (Tv, v) = 0 for every vector v, plus T|rad = 0,
        // over all 2^9 matrices for dim 3 over F_2.
        let o3 = FormedSpace::split(SpaceKind::O, 3, f2()).unwrap();
        let rad = o3.radical();
        for bits in 0..512u32 {
            let mut t = Matrix::zeros(f2(), 3, 3);
            for pos in 0..9 {
                t.data[pos] = ((bits >> pos) & 1) as u16;
            }
            let mut oracle = true;
            for vb in 0..8u16 {
                let v = [vb & 1, (vb >> 1) & 1, (vb >> 2) & 1];
                let tv = t.mul_vec(&v).unwrap();
                if o3.pair(&tv, &v) != 0 {
                    oracle = false;
                    break;
                }
            }
            if oracle {
                for r in rad.basis_rows() {
                    if t.mul_vec(r).unwrap().iter().any(|&x| x != 0) {
                        oracle = false;
                    }
                }
            }
            assert_eq!(oracle, o3.in_lie_algebra(&t).unwrap(), "disagree at bits {bits}");
        }
    }

    #[test]
    fn lie_algebra_dimensions() {
        let sp4 = FormedSpace::split(SpaceKind::Sp, 4, f2()).unwrap();
        assert_eq!(sp4.lie_algebra_basis().unwrap().len(), 10);
        let o5 = FormedSpace::split(SpaceKind::O, 5, f2()).unwrap();
        assert_eq!(o5.lie_algebra_basis().unwrap().len(), 10);
        let o5_3 = FormedSpace::split(SpaceKind::O, 5, f3()).unwrap();
        assert_eq!(o5_3.lie_algebra_basis().unwrap().len(), 10);
        let gl3 = FormedSpace::split(SpaceKind::Gl, 3, f2()).unwrap();
        assert_eq!(gl3.lie_algebra_basis().unwrap().len(), 9);
    }

    #[test]
    fn group_membership_identity_and_swap() {
        let sp2 = FormedSpace::split(SpaceKind::Sp, 2, f2()).unwrap();
        assert_eq!(
            sp2.group_membership(&Matrix::identity(f2(), 2)).unwrap(),
            GroupMembership::InSp
        );
        let transvection = Matrix::from_rows(f2(), vec![vec![1, 1], vec![0, 1]]).unwrap();
        assert_eq!(sp2.group_membership(&transvection).unwrap(), GroupMembership::InSp);

        let o2 = FormedSpace::split(SpaceKind::O, 2, f2()).unwrap();
        let swap = Matrix::from_rows(f2(), vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(o2.group_membership(&swap).unwrap(), GroupMembership::InODickson1);
        assert!(!o2.in_group(&swap).unwrap());
        // |O+_2(F_2)| = 2 and SO has order 1: only the identity.
        let mut members = 0;
        let mut so_members = 0;
        o2.for_each_isometry(1000, &mut |g| {
            members += 1;
            if o2.in_group(g).unwrap() {
                so_members += 1;
            }
            Ok(())
        })
        .unwrap();
        assert_eq!(members, 2);
        assert_eq!(so_members, 1);
    }

    #[test]
    fn group_orders_match_formulas() {
        let sp2 = FormedSpace::split(SpaceKind::Sp, 2, f2()).unwrap();
        assert_eq!(sp2.group_order_formula(), 6);
        assert_eq!(sp2.group_order_enumerated(1 << 20).unwrap(), 6);

        let sp4 = FormedSpace::split(SpaceKind::Sp, 4, f2()).unwrap();
        assert_eq!(sp4.group_order_formula(), 720);
        assert_eq!(sp4.group_order_enumerated(1 << 20).unwrap(), 720);

        let so3 = FormedSpace::split(SpaceKind::O, 3, f2()).unwrap();
        assert_eq!(so3.group_order_formula(), 6);
        assert_eq!(so3.group_order_enumerated(1 << 20).unwrap(), 6);

        let so4 = FormedSpace::split(SpaceKind::O, 4, f2()).unwrap();
        assert_eq!(so4.group_order_formula(), 36);
        assert_eq!(so4.group_order_enumerated(1 << 20).unwrap(), 36);

        let so5_3 = FormedSpace::split(SpaceKind::O, 5, f3()).unwrap();
        assert_eq!(so5_3.group_order_formula(), 51840);

        let gl2 = FormedSpace::split(SpaceKind::Gl, 2, f2()).unwrap();
        assert_eq!(gl2.group_order_formula(), 6);
        assert_eq!(gl2.group_order_enumerated(1 << 20).unwrap(), 6);
    }

    #[test]
    fn sp_closure_exhaustive_sp2() {
        let sp2 = FormedSpace::split(SpaceKind::Sp, 2, f2()).unwrap();
        let mut elems = Vec::new();
        sp2.for_each_isometry(1000, &mut |g| {
            elems.push(g.clone());
            Ok(())
        })
        .unwrap();
        assert_eq!(elems.len(), 6);
        for a in &elems {
            assert!(elems.contains(&a.inverse().unwrap().unwrap()));
            for b in &elems {
                assert!(elems.contains(&a.mul(b).unwrap()));
            }
        }
    }

    #[test]
    fn dickson_is_homomorphism_o4() {
        let o4 = FormedSpace::split(SpaceKind::O, 4, f2()).unwrap();
        let mut elems = Vec::new();
        o4.for_each_isometry(1 << 16, &mut |g| {
            elems.push((g.clone(), o4.dickson(g).unwrap()));
            Ok(())
        })
        .unwrap();
        assert_eq!(elems.len(), 72);
        for (a, da) in &elems {
            for (b, db) in &elems {
                let ab = a.mul(b).unwrap();
                assert_eq!(o4.dickson(&ab).unwrap(), (da + db) % 2);
            }
        }
    }

    #[test]
    fn descriptor_roundtrip() {
        for (kind, dim) in [(SpaceKind::Gl, 3), (SpaceKind::Sp, 4), (SpaceKind::O, 5)] {
            let s = FormedSpace::split(kind, dim, f2()).unwrap();
            let back = FormedSpace::from_descriptor(&s.to_descriptor()).unwrap();
            assert_eq!(s, back);
        }
        let short = FormedSpace::from_descriptor("O 3 2 1").unwrap();
        assert_eq!(short, FormedSpace::split(SpaceKind::O, 3, f2()).unwrap());
    }
}
