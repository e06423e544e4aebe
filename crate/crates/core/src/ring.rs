//! Exact arithmetic in the ring of integers O_d of an imaginary quadratic
//! field, with residue rings, Bezout solving, Chinese remaindering, and
//! principal-generator extraction by planar lattice reduction.
//!
//! Elements are stored as integral-basis coordinates `x + y*w` where
//! `w = (1+sqrt(d))/2` when `d = 1 mod 4` and `w = sqrt(d)` otherwise.
//! Everything is arbitrary precision; there is no floating point anywhere.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;
use thiserror::Error;

use crate::intmat;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum RingError {
    #[error("element is not divisible by the divisor")]
    NotDivisible,
    #[error("elements do not generate the unit ideal")]
    NotCoprime,
    #[error("element is not invertible modulo the given modulus")]
    NotInvertible,
    #[error("ideal has no single generator (nontrivial ideal class)")]
    NonPrincipal,
    #[error("invalid ring: {0}")]
    BadRing(String),
}

/// Description of the ring O_d for a squarefree negative integer d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingDesc {
    d: i64,
    half_basis: bool,
    disc: i64,
    unit_count: u8,
}

impl RingDesc {
    pub fn new(d: i64) -> Result<Self, RingError> {
        if d >= 0 {
            return Err(RingError::BadRing(format!("d = {d} must be negative")));
        }
        if !is_squarefree(-d) {
            return Err(RingError::BadRing(format!("d = {d} is not squarefree")));
        }
        let half_basis = d.rem_euclid(4) == 1;
        let disc = if half_basis { d } else { 4 * d };
        let unit_count = match d {
            -1 => 4,
            -3 => 6,
            _ => 2,
        };
        Ok(RingDesc {
            d,
            half_basis,
            disc,
            unit_count,
        })
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn half_basis(&self) -> bool {
        self.half_basis
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    /// The order m of the unit group.
    pub fn unit_count(&self) -> u8 {
        self.unit_count
    }

    /// `w^2` expressed in the basis: `w^2 = wsq_const + wsq_w * w`.
    fn wsq(&self) -> (BigInt, BigInt) {
        if self.half_basis {
            (BigInt::from((self.d - 1) / 4), BigInt::one())
        } else {
            (BigInt::from(self.d), BigInt::zero())
        }
    }

    pub fn zero(&self) -> RingElem {
        RingElem::from_coords(0, 0)
    }

    pub fn one(&self) -> RingElem {
        RingElem::from_coords(1, 0)
    }

    pub fn omega(&self) -> RingElem {
        RingElem::from_coords(0, 1)
    }

    pub fn int(&self, n: i64) -> RingElem {
        RingElem::from_coords(n, 0)
    }

    pub fn add(&self, a: &RingElem, b: &RingElem) -> RingElem {
        RingElem {
            x: &a.x + &b.x,
            y: &a.y + &b.y,
        }
    }

    pub fn sub(&self, a: &RingElem, b: &RingElem) -> RingElem {
        RingElem {
            x: &a.x - &b.x,
            y: &a.y - &b.y,
        }
    }

    pub fn neg(&self, a: &RingElem) -> RingElem {
        RingElem {
            x: -&a.x,
            y: -&a.y,
        }
    }

    pub fn mul(&self, a: &RingElem, b: &RingElem) -> RingElem {
        let (c, s) = self.wsq();
        let cross = &a.x * &b.y + &a.y * &b.x;
        let yy = &a.y * &b.y;
        RingElem {
            x: &a.x * &b.x + &yy * &c,
            y: cross + yy * s,
        }
    }

    /// Complex conjugation; a ring involution fixing Z.
    pub fn conj(&self, a: &RingElem) -> RingElem {
        if self.half_basis {
            RingElem {
                x: &a.x + &a.y,
                y: -&a.y,
            }
        } else {
            RingElem {
                x: a.x.clone(),
                y: -&a.y,
            }
        }
    }

    /// Field norm as a rational integer; nonnegative, zero only at zero.
    pub fn norm(&self, a: &RingElem) -> BigInt {
        if self.half_basis {
            let c = BigInt::from((1 - self.d) / 4);
            &a.x * &a.x + &a.x * &a.y + &a.y * &a.y * c
        } else {
            let c = BigInt::from(-self.d);
            &a.x * &a.x + &a.y * &a.y * c
        }
    }

    pub fn trace(&self, a: &RingElem) -> BigInt {
        if self.half_basis {
            (&a.x << 1u32) + &a.y
        } else {
            &a.x << 1u32
        }
    }

    pub fn is_unit(&self, a: &RingElem) -> bool {
        self.norm(a).is_one()
    }

    pub fn pow(&self, a: &RingElem, mut n: u64) -> RingElem {
        let mut base = a.clone();
        let mut acc = self.one();
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            n >>= 1;
            if n > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// Exact division: returns c with `b * c = a`, or `NotDivisible`.
    /// Computed as `a * conj(b) / norm(b)` with per-coordinate checks.
    pub fn div_exact(&self, a: &RingElem, b: &RingElem) -> Result<RingElem, RingError> {
        let n = self.norm(b);
        if n.is_zero() {
            return Err(RingError::NotDivisible);
        }
        let t = self.mul(a, &self.conj(b));
        let (qx, rx) = t.x.div_rem(&n);
        let (qy, ry) = t.y.div_rem(&n);
        if !rx.is_zero() || !ry.is_zero() {
            return Err(RingError::NotDivisible);
        }
        Ok(RingElem { x: qx, y: qy })
    }

    pub fn divides(&self, b: &RingElem, a: &RingElem) -> bool {
        self.div_exact(a, b).is_ok()
    }

    /// Inverse of a unit.
    pub fn unit_inv(&self, u: &RingElem) -> RingElem {
        debug_assert!(self.is_unit(u));
        self.conj(u)
    }

    /// All units of the ring, in canonical element order.
    pub fn units(&self) -> Vec<RingElem> {
        let mut out = Vec::new();
        for x in -1i64..=1 {
            for y in -1i64..=1 {
                let e = RingElem::from_coords(x, y);
                if self.norm(&e).is_one() {
                    out.push(e);
                }
            }
        }
        out.sort_by(|a, b| self.cmp_canonical(a, b));
        debug_assert_eq!(out.len(), self.unit_count as usize);
        out
    }

    /// Canonical total order: ascending norm, ties by (x, y).
    pub fn cmp_canonical(&self, a: &RingElem, b: &RingElem) -> std::cmp::Ordering {
        self.norm(a)
            .cmp(&self.norm(b))
            .then_with(|| a.x.cmp(&b.x))
            .then_with(|| a.y.cmp(&b.y))
    }

    /// Canonical associate: the unit multiple of `e` least in canonical
    /// order. Returns (canonical element, unit u with canonical = u * e).
    pub fn canonical_associate(&self, e: &RingElem) -> (RingElem, RingElem) {
        let mut best: Option<(RingElem, RingElem)> = None;
        for u in self.units() {
            let cand = self.mul(&u, e);
            match &best {
                None => best = Some((cand, u)),
                Some((b, _)) => {
                    if self.cmp_canonical(&cand, b) == std::cmp::Ordering::Less {
                        best = Some((cand, u));
                    }
                }
            }
        }
        best.unwrap()
    }

    /// Columns of the multiplication-by-`a` matrix in the basis (1, w).
    fn mult_columns(&self, a: &RingElem) -> [[BigInt; 2]; 2] {
        let aw = self.mul(a, &self.omega());
        [[a.x.clone(), a.y.clone()], [aw.x, aw.y]]
    }

    /// One solution of `a*u + b*v = 1`, not normalized. All solutions for
    /// `u` agree modulo (b), so callers may canonicalize freely.
    fn bezout_raw(&self, a: &RingElem, b: &RingElem) -> Result<(RingElem, RingElem), RingError> {
        if a.is_zero() && b.is_zero() {
            return Err(RingError::NotCoprime);
        }
        if let Some(out) = self.bezout_i128(a, b) {
            return out.ok_or(RingError::NotCoprime);
        }
        let ca = self.mult_columns(a);
        let cb = self.mult_columns(b);
        let cols = vec![
            ca[0].clone(),
            ca[1].clone(),
            cb[0].clone(),
            cb[1].clone(),
        ];
        let target = [BigInt::one(), BigInt::zero()];
        let z = intmat::solve_columns(&cols, &target).ok_or(RingError::NotCoprime)?;
        let u = RingElem {
            x: z[0].clone(),
            y: z[1].clone(),
        };
        let v = RingElem {
            x: z[2].clone(),
            y: z[3].clone(),
        };
        Ok((u, v))
    }

    /// Machine-integer solve for small operands; exact, with conservative
    /// bounds and checked arithmetic so any overflow falls back to the
    /// arbitrary-precision path. Returns None when it cannot decide.
    fn bezout_i128(&self, a: &RingElem, b: &RingElem) -> Option<Option<(RingElem, RingElem)>> {
        const LIM: i128 = 1 << 20;
        let small = |v: &BigInt| -> Option<i128> {
            let x = i128::try_from(v).ok()?;
            (x.abs() < LIM).then_some(x)
        };
        let (ax, ay) = (small(&a.x)?, small(&a.y)?);
        let (bx, by) = (small(&b.x)?, small(&b.y)?);
        let wc = if self.half_basis {
            ((self.d as i128 - 1) / 4, 1i128)
        } else {
            (self.d as i128, 0i128)
        };
        // columns of multiplication by a then b, with tracked preimages
        let mul_w = |x: i128, y: i128| (y * wc.0, x + y * wc.1);
        let mut cols: [([i128; 2], [i128; 4]); 4] = [
            ([ax, ay], [1, 0, 0, 0]),
            {
                let (wx, wy) = mul_w(ax, ay);
                ([wx, wy], [0, 1, 0, 0])
            },
            ([bx, by], [0, 0, 1, 0]),
            {
                let (wx, wy) = mul_w(bx, by);
                ([wx, wy], [0, 0, 0, 1])
            },
        ];

        fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
            if b == 0 {
                return (a.abs(), a.signum(), 0);
            }
            let (g, s, t) = ext_gcd(b, a.rem_euclid(b));
            (g, t, s - a.div_euclid(b) * t)
        }
        let combine = |p: &([i128; 2], [i128; 4]),
                       s: i128,
                       q: &([i128; 2], [i128; 4]),
                       t: i128|
         -> Option<([i128; 2], [i128; 4])> {
            let mut v = [0i128; 2];
            let mut pre = [0i128; 4];
            for i in 0..2 {
                v[i] = p.0[i].checked_mul(s)?.checked_add(q.0[i].checked_mul(t)?)?;
            }
            for i in 0..4 {
                pre[i] = p.1[i].checked_mul(s)?.checked_add(q.1[i].checked_mul(t)?)?;
            }
            Some((v, pre))
        };

        let mut y_pivot: Option<([i128; 2], [i128; 4])> = None;
        let mut x_pool: Vec<([i128; 2], [i128; 4])> = Vec::with_capacity(4);
        for c in cols.iter_mut() {
            let col = (c.0, c.1);
            if col.0[1] == 0 {
                x_pool.push(col);
                continue;
            }
            match y_pivot.take() {
                None => y_pivot = Some(col),
                Some(p) => {
                    let (g, s, t) = ext_gcd(p.0[1], col.0[1]);
                    let newp = combine(&p, s, &col, t)?;
                    let killed = combine(&col, p.0[1] / g, &p, -(col.0[1] / g))?;
                    y_pivot = Some(newp);
                    x_pool.push(killed);
                }
            }
        }
        let mut x_pivot: Option<([i128; 2], [i128; 4])> = None;
        for col in x_pool {
            if col.0[0] == 0 {
                continue;
            }
            match x_pivot.take() {
                None => x_pivot = Some(col),
                Some(p) => {
                    let (_, s, t) = ext_gcd(p.0[0], col.0[0]);
                    x_pivot = Some(combine(&p, s, &col, t)?);
                }
            }
        }
        // Target (1, 0): its y-component forces the y-pivot weight to be
        // zero, so solvability reduces to the x-pivot being a unit.
        let _ = y_pivot;
        let (h11, pre_x) = match &x_pivot {
            Some(p) => (p.0[0], p.1),
            None => return Some(None),
        };
        if h11.abs() != 1 {
            return Some(None);
        }
        let w_x = h11.signum();
        let z: Vec<i128> = pre_x.iter().map(|p| p * w_x).collect();
        let u = RingElem {
            x: BigInt::from(z[0]),
            y: BigInt::from(z[1]),
        };
        let v = RingElem {
            x: BigInt::from(z[2]),
            y: BigInt::from(z[3]),
        };
        Some(Some((u, v)))
    }

    /// Solve `a*u + b*v = 1` exactly. `NotCoprime` iff (a, b) is a proper
    /// ideal. The returned `u` is the canonical residue mod b when b != 0;
    /// since any two solutions for u agree mod (b), the result does not
    /// depend on the internal solve path.
    pub fn bezout(&self, a: &RingElem, b: &RingElem) -> Result<(RingElem, RingElem), RingError> {
        let (u, v) = self.bezout_raw(a, b)?;
        debug_assert!(self
            .add(&self.mul(a, &u), &self.mul(b, &v))
            .is_one_elem());
        if b.is_zero() {
            return Ok((u, v));
        }
        // Canonicalize: u mod (b), then v recomputed exactly.
        let rr = ResidueRing::new(*self, b.clone());
        let u = rr.reduce(&u);
        let v = self.div_exact(&self.sub(&self.one(), &self.mul(a, &u)), b)?;
        Ok((u, v))
    }

    pub fn is_primitive_pair(&self, a: &RingElem, b: &RingElem) -> bool {
        self.bezout_raw(a, b).is_ok()
    }

    /// Chinese remainder: x = r1 mod (m1), x = r2 mod (m2), canonical mod
    /// m1*m2. `NotCoprime` when the moduli share a prime.
    pub fn crt_pair(
        &self,
        m1: &RingElem,
        r1: &RingElem,
        m2: &RingElem,
        r2: &RingElem,
    ) -> Result<RingElem, RingError> {
        let (u, v) = self.bezout(m1, m2)?;
        // x = r1*m2*v + r2*m1*u
        let x = self.add(
            &self.mul(r1, &self.mul(m2, &v)),
            &self.mul(r2, &self.mul(m1, &u)),
        );
        let m = self.mul(m1, m2);
        if self.norm(&m).is_one() {
            return Ok(self.zero());
        }
        let rr = ResidueRing::new(*self, m);
        Ok(rr.reduce(&x))
    }

    /// A single generator of the ideal (g1, g2), by Lagrange-Gauss reduction
    /// of the ideal lattice under the norm form. `NonPrincipal` when the
    /// shortest vector's norm exceeds the lattice-determinant ideal norm
    /// (possible only when the class number exceeds 1).
    pub fn ideal_generator(&self, g1: &RingElem, g2: &RingElem) -> Result<RingElem, RingError> {
        if g1.is_zero() && g2.is_zero() {
            return Err(RingError::NonPrincipal);
        }
        if g2.is_zero() {
            return Ok(self.canonical_associate(g1).0);
        }
        if g1.is_zero() {
            return Ok(self.canonical_associate(g2).0);
        }
        let c1 = self.mult_columns(g1);
        let c2 = self.mult_columns(g2);
        let cols = [c1[0].clone(), c1[1].clone(), c2[0].clone(), c2[1].clone()];
        let h = intmat::hnf_full_rank(&cols);
        let ideal_norm = &h[0][0] * &h[1][1];
        let v1 = [h[0][0].clone(), h[1][0].clone()];
        let v2 = [h[0][1].clone(), h[1][1].clone()];
        let q = |v: &[BigInt; 2]| {
            self.norm(&RingElem {
                x: v[0].clone(),
                y: v[1].clone(),
            })
        };
        let b2 = |u: &[BigInt; 2], v: &[BigInt; 2]| {
            let sum = RingElem {
                x: &u[0] + &v[0],
                y: &u[1] + &v[1],
            };
            self.norm(&sum) - q(u) - q(v)
        };
        let (mut short, _) = intmat::lagrange_reduce(v1, v2, q, b2);
        let g = RingElem {
            y: std::mem::take(&mut short[1]),
            x: std::mem::take(&mut short[0]),
        };
        if self.norm(&g) != ideal_norm {
            return Err(RingError::NonPrincipal);
        }
        Ok(self.canonical_associate(&g).0)
    }
}

fn is_squarefree(mut n: i64) -> bool {
    if n <= 0 {
        return false;
    }
    let mut p = 2i64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

/// An element x + y*w of O_d in integral-basis coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingElem {
    pub x: BigInt,
    pub y: BigInt,
}

impl RingElem {
    pub fn new(x: BigInt, y: BigInt) -> Self {
        RingElem { x, y }
    }

    pub fn from_coords(x: i64, y: i64) -> Self {
        RingElem {
            x: BigInt::from(x),
            y: BigInt::from(y),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    fn is_one_elem(&self) -> bool {
        self.x.is_one() && self.y.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.is_one_elem()
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.y.is_zero() {
            write!(f, "{}", self.x)
        } else if self.x.is_zero() {
            write!(f, "{}w", self.y)
        } else {
            write!(f, "{}{:+}w", self.x, self.y)
        }
    }
}

/// The finite ring O_d/(q), represented by the column Hermite normal form
/// of the lattice q*O_d. Representatives have coordinates in the HNF box.
#[derive(Debug, Clone)]
pub struct ResidueRing {
    ring: RingDesc,
    modulus: RingElem,
    /// [[h11, h12], [0, h22]]; columns (h11, 0) and (h12, h22) span q*O_d.
    basis: [[BigInt; 2]; 2],
    size: BigInt,
}

impl ResidueRing {
    pub fn new(ring: RingDesc, modulus: RingElem) -> Self {
        assert!(!modulus.is_zero(), "modulus must be nonzero");
        let cols = ring.mult_columns(&modulus);
        let basis = intmat::hnf_full_rank(&[cols[0].clone(), cols[1].clone()]);
        let size = &basis[0][0] * &basis[1][1];
        debug_assert_eq!(size, ring.norm(&modulus).abs());
        ResidueRing {
            ring,
            modulus,
            basis,
            size,
        }
    }

    pub fn ring(&self) -> &RingDesc {
        &self.ring
    }

    pub fn modulus(&self) -> &RingElem {
        &self.modulus
    }

    pub fn basis(&self) -> &[[BigInt; 2]; 2] {
        &self.basis
    }

    /// Number of residue classes, |norm(q)|.
    pub fn size(&self) -> &BigInt {
        &self.size
    }

    /// Canonical representative: coordinates reduced by the HNF basis,
    /// `0 <= y < h22` then `0 <= x < h11`. Idempotent and deterministic.
    pub fn reduce(&self, e: &RingElem) -> RingElem {
        let h11 = &self.basis[0][0];
        let h12 = &self.basis[0][1];
        let h22 = &self.basis[1][1];
        let k2 = intmat::div_floor(&e.y, h22);
        let y = &e.y - &k2 * h22;
        let x_mid = &e.x - &k2 * h12;
        let k1 = intmat::div_floor(&x_mid, h11);
        let x = x_mid - &k1 * h11;
        RingElem { x, y }
    }

    pub fn is_zero(&self, e: &RingElem) -> bool {
        self.reduce(e).is_zero()
    }

    pub fn eq_mod(&self, a: &RingElem, b: &RingElem) -> bool {
        self.reduce(&self.ring.sub(a, b)).is_zero()
    }

    pub fn add(&self, a: &RingElem, b: &RingElem) -> RingElem {
        self.reduce(&self.ring.add(a, b))
    }

    pub fn mul(&self, a: &RingElem, b: &RingElem) -> RingElem {
        self.reduce(&self.ring.mul(a, b))
    }

    /// Multiplicative inverse modulo (q); `NotInvertible` iff e and q share
    /// a prime ideal. Canonical: solutions agree modulo the lattice.
    pub fn invert(&self, e: &RingElem) -> Result<RingElem, RingError> {
        match self.ring.bezout_raw(e, &self.modulus) {
            Ok((u, _)) => Ok(self.reduce(&u)),
            Err(RingError::NotCoprime) => Err(RingError::NotInvertible),
            Err(other) => Err(other),
        }
    }

    pub fn pow(&self, e: &RingElem, n: &BigInt) -> RingElem {
        assert!(!n.is_negative());
        let mut base = self.reduce(e);
        let mut acc = self.reduce(&self.ring.one());
        let mut n = n.clone();
        while n.is_positive() {
            if n.is_odd() {
                acc = self.mul(&acc, &base);
            }
            n >>= 1;
            if n.is_positive() {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// All canonical representatives, in HNF-box lex order (x fastest).
    pub fn residues(&self) -> impl Iterator<Item = RingElem> + '_ {
        let h11 = self.basis[0][0].clone();
        let h22 = self.basis[1][1].clone();
        let mut x = BigInt::zero();
        let mut y = BigInt::zero();
        let mut done = self.size.is_zero();
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = RingElem {
                x: x.clone(),
                y: y.clone(),
            };
            x += 1;
            if x == h11 {
                x = BigInt::zero();
                y += 1;
                if y == h22 {
                    done = true;
                }
            }
            Some(out)
        })
    }
}

/// Ring plus element constructors used across tests.
pub fn ring(d: i64) -> RingDesc {
    RingDesc::new(d).expect("valid ring")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(x: i64, y: i64) -> RingElem {
        RingElem::from_coords(x, y)
    }

    #[test]
    fn descriptor_invariants() {
        let g = ring(-1);
        assert!(!g.half_basis());
        assert_eq!(g.disc(), -4);
        assert_eq!(g.unit_count(), 4);
        let e3 = ring(-3);
        assert!(e3.half_basis());
        assert_eq!(e3.disc(), -3);
        assert_eq!(e3.unit_count(), 6);
        let r7 = ring(-7);
        assert!(r7.half_basis());
        assert_eq!(r7.unit_count(), 2);
        let r19 = ring(-19);
        assert!(r19.half_basis());
        assert_eq!(r19.disc(), -19);
        assert!(RingDesc::new(-4).is_err());
        assert!(RingDesc::new(5).is_err());
        assert!(RingDesc::new(-12).is_err());
    }

    #[test]
    fn gaussian_product() {
        // (1+i)(1-i) = 2
        let g = ring(-1);
        let p = g.mul(&e(1, 1), &e(1, -1));
        assert_eq!(p, e(2, 0));
    }

    #[test]
    fn additive_inverse() {
        let g = ring(-7);
        let a = e(3, -5);
        assert!(g.add(&a, &g.neg(&a)).is_zero());
    }

    #[test]
    fn conj_in_half_basis() {
        // d = -7: conj(w) = 1 - w
        let r = ring(-7);
        assert_eq!(r.conj(&e(0, 1)), e(1, -1));
    }

    #[test]
    fn norms_and_traces() {
        let r7 = ring(-7);
        assert_eq!(r7.norm(&e(1, 1)), BigInt::from(4));
        let g = ring(-1);
        assert_eq!(g.norm(&e(1, 2)), BigInt::from(5));
        assert_eq!(g.norm(&e(0, 0)), BigInt::from(0));
        assert_eq!(r7.trace(&e(1, 1)), BigInt::from(3));
    }

    #[test]
    fn div_exact_cases() {
        let g = ring(-1);
        // 2 / (1+i) = 1-i
        assert_eq!(g.div_exact(&e(2, 0), &e(1, 1)).unwrap(), e(1, -1));
        let any = e(-4, 7);
        assert_eq!(g.div_exact(&any, &e(1, 0)).unwrap(), any);
        assert_eq!(
            g.div_exact(&e(1, 1), &e(2, 0)),
            Err(RingError::NotDivisible)
        );
    }

    #[test]
    fn unit_groups() {
        let g = ring(-1);
        let us = g.units();
        assert_eq!(us.len(), 4);
        assert!(us.contains(&e(0, 1)) && us.contains(&e(-1, 0)));
        let r3 = ring(-3);
        let us3 = r3.units();
        assert_eq!(us3.len(), 6);
        assert!(us3.contains(&e(0, 1)) && us3.contains(&e(1, -1)));
        assert_eq!(ring(-7).units().len(), 2);
        for u in r3.units() {
            assert!(r3.mul(&u, &r3.unit_inv(&u)).is_one());
        }
    }

    #[test]
    fn bezout_contract() {
        let g = ring(-1);
        let (u, v) = g.bezout(&e(2, 0), &e(1, 2)).unwrap();
        let lhs = g.add(&g.mul(&e(2, 0), &u), &g.mul(&e(1, 2), &v));
        assert!(lhs.is_one());
        assert_eq!(g.bezout(&e(1, 0), &e(0, 0)).unwrap(), (e(1, 0), e(0, 0)));
        // (1+i) and 2 share the ramified prime above 2.
        assert_eq!(g.bezout(&e(1, 1), &e(2, 0)), Err(RingError::NotCoprime));
    }

    #[test]
    fn residue_reduction() {
        let g = ring(-1);
        let rr = ResidueRing::new(g, e(1, 2));
        assert_eq!(rr.size(), &BigInt::from(5));
        // modulus reduces to zero
        assert!(rr.reduce(&e(1, 2)).is_zero());
        // idempotence
        let r = rr.reduce(&e(-3, 11));
        assert_eq!(rr.reduce(&r), r);
        // i = 2 mod (1+2i), by brute force over the 5 residues
        let mut hits = Vec::new();
        for cand in rr.residues() {
            if rr.eq_mod(&cand, &e(0, 1)) {
                hits.push(cand);
            }
        }
        assert_eq!(hits, vec![e(2, 0)]);
        assert_eq!(rr.reduce(&e(0, 1)), e(2, 0));
    }

    #[test]
    fn residue_inverse() {
        let g = ring(-1);
        let rr = ResidueRing::new(g, e(1, 2));
        assert_eq!(rr.invert(&e(2, 0)).unwrap(), e(3, 0));
        assert!(rr.invert(&e(1, 0)).unwrap().is_one());
        let rr2 = ResidueRing::new(g, e(2, 0));
        assert_eq!(rr2.invert(&e(1, 1)), Err(RingError::NotInvertible));
    }

    #[test]
    fn crt_cases() {
        let g = ring(-1);
        assert!(g
            .crt_pair(&e(3, 0), &e(0, 0), &e(1, 1), &e(0, 0))
            .unwrap()
            .is_zero());
        // trivial second modulus: result is r mod (m)
        let r = g
            .crt_pair(&e(3, 0), &e(2, 0), &e(1, 0), &e(7, 5))
            .unwrap();
        let rr = ResidueRing::new(g, e(3, 0));
        assert!(rr.eq_mod(&r, &e(2, 0)));
        assert_eq!(r, rr.reduce(&r));
        // x = 1 mod 3, x = 0 mod (1+i): verify both memberships
        let x = g
            .crt_pair(&e(3, 0), &e(1, 0), &e(1, 1), &e(0, 0))
            .unwrap();
        assert!(ResidueRing::new(g, e(3, 0)).eq_mod(&x, &e(1, 0)));
        assert!(ResidueRing::new(g, e(1, 1)).is_zero(&x));
    }

    #[test]
    fn ideal_generators() {
        let g = ring(-1);
        let gen = g.ideal_generator(&e(-3, 2), &e(0, 0)).unwrap();
        assert_eq!(g.norm(&gen), BigInt::from(13));
        // (5, 2+i) = (2+i)
        let gen = g.ideal_generator(&e(5, 0), &e(2, 1)).unwrap();
        assert_eq!(g.norm(&gen), BigInt::from(5));
        assert!(g.divides(&gen, &e(5, 0)));
        assert!(g.divides(&gen, &e(2, 1)));
        // d = -5: (2, 1+sqrt(-5)) is not principal
        let r5 = ring(-5);
        assert_eq!(
            r5.ideal_generator(&e(2, 0), &e(1, 1)),
            Err(RingError::NonPrincipal)
        );
    }

    #[test]
    fn ideal_generator_divides_inputs() {
        let g = ring(-7);
        let a = e(6, 3);
        let b = e(9, -12);
        let gen = g.ideal_generator(&a, &b).unwrap();
        assert!(g.divides(&gen, &a));
        assert!(g.divides(&gen, &b));
    }
}
