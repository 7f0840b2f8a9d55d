//! Finite fields F_{p^k} for p in {2,3,5,7} and p^k <= 2401.
//!
//! Elements are stored as `u16` values in `0..q`. The value encodes the
//! coefficients of a polynomial residue in base p: the element
//! c_0 + c_1*x + ... + c_{k-1}*x^{k-1} is stored as c_0 + c_1*p + ... Each
//! field uses one canonical modulus: the lexicographically smallest monic
//! irreducible polynomial of degree k over F_p, where candidates are ordered
//! by the base-p value of their non-leading coefficients. Irreducibility is
//! verified at construction by trial division. This makes every census
//! bit-reproducible.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Fields with at most this many elements get full add/mul/inv tables.
const TABLE_MAX: usize = 729;

pub type FieldRef = Arc<Field>;

pub struct Field {
    p: u16,
    k: u32,
    q: usize,
    /// Monic modulus, little-endian coefficients, length k+1. For k = 1 this
    /// is x itself and plays no role in arithmetic.
    modulus: Vec<u16>,
    add_table: Vec<u16>,
    mul_table: Vec<u16>,
    inv_table: Vec<u16>,
    neg_table: Vec<u16>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "F_{}^{} (q={})", self.p, self.k, self.q)
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k
    }
}
impl Eq for Field {}

impl Field {
    pub fn new(p: u16, k: u32) -> Result<FieldRef> {
        if !matches!(p, 2 | 3 | 5 | 7) {
            return Err(Error::InvalidArgument(format!(
                "characteristic {p} not supported (need 2, 3, 5 or 7)"
            )));
        }
        if k == 0 || k > 4 {
            return Err(Error::InvalidArgument(format!(
                "extension degree {k} not supported (need 1 <= k <= 4)"
            )));
        }
        let q = (p as usize).pow(k);
        if q > 2401 {
            return Err(Error::InvalidArgument(format!("field size {q} exceeds 2401")));
        }
        let modulus = canonical_modulus(p, k);
        debug_assert!(is_irreducible(&modulus, p));
        let mut field = Field {
            p,
            k,
            q,
            modulus,
            add_table: Vec::new(),
            mul_table: Vec::new(),
            inv_table: Vec::new(),
            neg_table: Vec::new(),
        };
        field.neg_table = (0..q).map(|a| field.neg_raw(a as u16)).collect();
        if q <= TABLE_MAX {
            field.add_table = (0..q * q)
                .map(|i| field.add_raw((i / q) as u16, (i % q) as u16))
                .collect();
            field.mul_table = (0..q * q)
                .map(|i| field.mul_raw((i / q) as u16, (i % q) as u16))
                .collect();
            let mut inv = vec![0u16; q];
            for a in 1..q as u16 {
                if inv[a as usize] != 0 {
                    continue;
                }
                for b in 1..q as u16 {
                    if field.mul_raw(a, b) == 1 {
                        inv[a as usize] = b;
                        inv[b as usize] = a;
                        break;
                    }
                }
            }
            field.inv_table = inv;
        }
        Ok(Arc::new(field))
    }

    pub fn characteristic(&self) -> u16 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    /// Number of elements p^k.
    pub fn order(&self) -> usize {
        self.q
    }

    /// Little-endian coefficients of the canonical modulus.
    pub fn modulus(&self) -> &[u16] {
        &self.modulus
    }

    /// Iterates all elements in value order: 0, 1, 2, ...
    pub fn elements(&self) -> impl Iterator<Item = u16> {
        0..self.q as u16
    }

    #[inline]
    pub fn add(&self, a: u16, b: u16) -> u16 {
        if self.add_table.is_empty() {
            self.add_raw(a, b)
        } else {
            self.add_table[a as usize * self.q + b as usize]
        }
    }

    #[inline]
    pub fn neg(&self, a: u16) -> u16 {
        self.neg_table[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: u16, b: u16) -> u16 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if self.mul_table.is_empty() {
            self.mul_raw(a, b)
        } else {
            self.mul_table[a as usize * self.q + b as usize]
        }
    }

    pub fn inv(&self, a: u16) -> Result<u16> {
        if a == 0 {
            return Err(Error::InvalidArgument("inverse of zero".into()));
        }
        if !self.inv_table.is_empty() {
            return Ok(self.inv_table[a as usize]);
        }
        Ok(self.pow(a, (self.q - 2) as u64))
    }

    pub fn pow(&self, a: u16, mut e: u64) -> u16 {
        let mut base = a;
        let mut acc = 1u16;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Unique square root in characteristic 2 (inverse Frobenius).
    pub fn sqrt2(&self, a: u16) -> Result<u16> {
        if self.p != 2 {
            return Err(Error::InvalidArgument(
                "sqrt2 only defined in characteristic 2".into(),
            ));
        }
        // x -> x^2 is a bijection, and a = (a^{q/2})^2.
        Ok(self.pow(a, (self.q / 2) as u64))
    }

    fn digits(&self, a: u16) -> [u16; 4] {
        let mut d = [0u16; 4];
        let mut v = a;
        for slot in d.iter_mut().take(self.k as usize) {
            *slot = v % self.p;
            v /= self.p;
        }
        d
    }

    fn from_digits(&self, d: &[u16]) -> u16 {
        let mut v = 0u16;
        for i in (0..self.k as usize).rev() {
            v = v * self.p + d[i] % self.p;
        }
        v
    }

    fn add_raw(&self, a: u16, b: u16) -> u16 {
        let da = self.digits(a);
        let db = self.digits(b);
        let mut out = [0u16; 4];
        for i in 0..self.k as usize {
            out[i] = (da[i] + db[i]) % self.p;
        }
        self.from_digits(&out)
    }

    fn neg_raw(&self, a: u16) -> u16 {
        let da = self.digits(a);
        let mut out = [0u16; 4];
        for i in 0..self.k as usize {
            out[i] = (self.p - da[i]) % self.p;
        }
        self.from_digits(&out)
    }

    fn mul_raw(&self, a: u16, b: u16) -> u16 {
        let k = self.k as usize;
        if k == 1 {
            return (a as u32 * b as u32 % self.p as u32) as u16;
        }
        let da = self.digits(a);
        let db = self.digits(b);
        let mut prod = [0u32; 8];
        for i in 0..k {
            if da[i] == 0 {
                continue;
            }
            for j in 0..k {
                prod[i + j] += da[i] as u32 * db[j] as u32;
            }
        }
        // Reduce degree >= k terms using x^k = -(modulus tail).
        for deg in (k..2 * k - 1).rev() {
            let c = prod[deg] % self.p as u32;
            prod[deg] = 0;
            if c == 0 {
                continue;
            }
            for (i, &m) in self.modulus.iter().enumerate().take(k) {
                // x^deg = x^{deg-k} * x^k = x^{deg-k} * (-tail)
                let sub = c * m as u32 % self.p as u32;
                let cur = prod[deg - k + i] % self.p as u32;
                prod[deg - k + i] = (cur + self.p as u32 - sub) % self.p as u32;
            }
        }
        let out: Vec<u16> = (0..k).map(|i| (prod[i] % self.p as u32) as u16).collect();
        self.from_digits(&out)
    }

    /// The scalar `n mod p` viewed as a field element.
    pub fn from_int(&self, n: i64) -> u16 {
        (n.rem_euclid(self.p as i64)) as u16
    }

    /// Embedding of this field into `target`, as a value-indexed table.
    /// Exists when target is an extension of the same characteristic whose
    /// degree is a multiple of ours; the canonical root (first in element
    /// order) of our modulus is used, so the embedding is deterministic.
    pub fn embedding_into(&self, target: &Field) -> Result<Vec<u16>> {
        if self.p != target.p {
            return Err(Error::InvalidArgument("different characteristic".into()));
        }
        if target.k % self.k != 0 {
            return Err(Error::InvalidArgument(format!(
                "F_{}^{} does not embed in F_{}^{}",
                self.p, self.k, target.p, target.k
            )));
        }
        if self.k == 1 {
            // Prime subfield embeds value-for-value.
            return Ok((0..self.q as u16).collect());
        }
        // Find the first root of our modulus in the target field.
        let root = target
            .elements()
            .find(|&z| {
                let mut acc = 0u16;
                for &c in self.modulus.iter().rev() {
                    acc = target.add(target.mul(acc, z), c % self.p);
                }
                acc == 0
            })
            .ok_or_else(|| Error::Internal("modulus has no root in extension".into()))?;
        let mut table = vec![0u16; self.q];
        for a in 0..self.q as u16 {
            let d = self.digits(a);
            let mut acc = 0u16;
            for i in (0..self.k as usize).rev() {
                acc = target.add(target.mul(acc, root), d[i]);
            }
            table[a as usize] = acc;
        }
        Ok(table)
    }
}

/// Lexicographically smallest monic irreducible polynomial of degree k
/// over F_p, candidates ordered by the base-p value of the low coefficients.
fn canonical_modulus(p: u16, k: u32) -> Vec<u16> {
    let deg = k as usize;
    if deg == 1 {
        return vec![0, 1]; // x
    }
    let count = (p as u64).pow(k);
    for tail in 0..count {
        let mut poly = vec![0u16; deg + 1];
        let mut v = tail;
        for slot in poly.iter_mut().take(deg) {
            *slot = (v % p as u64) as u16;
            v /= p as u64;
        }
        poly[deg] = 1;
        if is_irreducible(&poly, p) {
            return poly;
        }
    }
    unreachable!("irreducible polynomials of every degree exist over F_p");
}

/// Trial division by all monic polynomials of degree 1..=deg/2.
fn is_irreducible(poly: &[u16], p: u16) -> bool {
    let deg = poly.len() - 1;
    if deg == 1 {
        return true;
    }
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for tail in 0..count {
            let mut div = vec![0u16; d + 1];
            let mut v = tail;
            for slot in div.iter_mut().take(d) {
                *slot = (v % p as u64) as u16;
                v /= p as u64;
            }
            div[d] = 1;
            if poly_rem_is_zero(poly, &div, p) {
                return false;
            }
        }
    }
    true
}

fn poly_rem_is_zero(num: &[u16], div: &[u16], p: u16) -> bool {
    let mut rem: Vec<u16> = num.to_vec();
    let d = div.len() - 1;
    while rem.len() > d {
        let lead = *rem.last().unwrap() % p;
        let shift = rem.len() - 1 - d;
        if lead != 0 {
            for i in 0..=d {
                let idx = shift + i;
                let sub = lead as u32 * div[i] as u32 % p as u32;
                rem[idx] = ((rem[idx] as u32 + p as u32 - sub) % p as u32) as u16;
            }
        }
        rem.pop();
    }
    rem.iter().all(|&c| c % p == 0)
}
