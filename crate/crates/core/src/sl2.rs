//! Exact 2x2 matrix algebra over O_d and the trace-recurrence machinery:
//! the Q-polynomial sequence, fast evaluation of u_n, the closed-form
//! (v, w) split of u_n, row completion, and same-first-row fixups.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::ring::{RingDesc, RingElem, RingError};

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum Sl2Error {
    #[error("pair is not primitive")]
    NotPrimitive,
    #[error("first rows do not coincide")]
    RowMismatch,
    #[error("degenerate trace or vanishing u-value in the recurrence split")]
    DegenerateTrace,
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// A 2x2 matrix over O_d; pipeline matrices all have determinant 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix2 {
    pub a: RingElem,
    pub b: RingElem,
    pub c: RingElem,
    pub d: RingElem,
}

impl Matrix2 {
    pub fn new(a: RingElem, b: RingElem, c: RingElem, d: RingElem) -> Self {
        Matrix2 { a, b, c, d }
    }

    pub fn identity(ring: &RingDesc) -> Self {
        Matrix2 {
            a: ring.one(),
            b: ring.zero(),
            c: ring.zero(),
            d: ring.one(),
        }
    }

    pub fn from_ints(axy: (i64, i64), bxy: (i64, i64), cxy: (i64, i64), dxy: (i64, i64)) -> Self {
        Matrix2 {
            a: RingElem::from_coords(axy.0, axy.1),
            b: RingElem::from_coords(bxy.0, bxy.1),
            c: RingElem::from_coords(cxy.0, cxy.1),
            d: RingElem::from_coords(dxy.0, dxy.1),
        }
    }

    pub fn det(&self, ring: &RingDesc) -> RingElem {
        ring.sub(&ring.mul(&self.a, &self.d), &ring.mul(&self.b, &self.c))
    }

    pub fn trace(&self, ring: &RingDesc) -> RingElem {
        ring.add(&self.a, &self.d)
    }

    pub fn mul(&self, ring: &RingDesc, other: &Matrix2) -> Matrix2 {
        Matrix2 {
            a: ring.add(
                &ring.mul(&self.a, &other.a),
                &ring.mul(&self.b, &other.c),
            ),
            b: ring.add(
                &ring.mul(&self.a, &other.b),
                &ring.mul(&self.b, &other.d),
            ),
            c: ring.add(
                &ring.mul(&self.c, &other.a),
                &ring.mul(&self.d, &other.c),
            ),
            d: ring.add(
                &ring.mul(&self.c, &other.b),
                &ring.mul(&self.d, &other.d),
            ),
        }
    }

    /// Adjugate inverse; valid for determinant-1 matrices.
    pub fn inv(&self, ring: &RingDesc) -> Matrix2 {
        debug_assert!(self.det(ring).is_one());
        Matrix2 {
            a: self.d.clone(),
            b: ring.neg(&self.b),
            c: ring.neg(&self.c),
            d: self.a.clone(),
        }
    }

    pub fn transpose(&self) -> Matrix2 {
        Matrix2 {
            a: self.a.clone(),
            b: self.c.clone(),
            c: self.b.clone(),
            d: self.d.clone(),
        }
    }

    pub fn pow(&self, ring: &RingDesc, mut n: u64) -> Matrix2 {
        let mut base = self.clone();
        let mut acc = Matrix2::identity(ring);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(ring, &base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(ring, &base);
            }
        }
        acc
    }

    pub fn first_row(&self) -> (RingElem, RingElem) {
        (self.a.clone(), self.b.clone())
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_one() && self.b.is_zero() && self.c.is_zero() && self.d.is_one()
    }
}

/// Integer polynomial with arbitrary-precision coefficients, low degree
/// first, normalized to have no trailing zero leading coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntPoly {
    pub coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        IntPoly { coeffs }
    }

    pub fn zero() -> Self {
        IntPoly { coeffs: vec![] }
    }

    pub fn constant(c: i64) -> Self {
        IntPoly::new(vec![BigInt::from(c)])
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn sub(&self, other: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![BigInt::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] -= c;
        }
        IntPoly::new(out)
    }

    pub fn mul(&self, other: &IntPoly) -> IntPoly {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }

    /// Multiply by t (shift coefficients up).
    pub fn mul_t(&self) -> IntPoly {
        if self.coeffs.is_empty() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero()];
        out.extend(self.coeffs.iter().cloned());
        IntPoly::new(out)
    }

    pub fn eval(&self, ring: &RingDesc, t: &RingElem) -> RingElem {
        let mut acc = ring.zero();
        for c in self.coeffs.iter().rev() {
            acc = ring.mul(&acc, t);
            acc = ring.add(&acc, &RingElem::new(c.clone(), BigInt::zero()));
        }
        acc
    }
}

/// The polynomial sequence with Q_{-1} = -1, Q_0 = 0, Q_{i+1} = t Q_i - Q_{i-1}.
/// `n >= -1`.
pub fn q_poly(n: i64) -> IntPoly {
    assert!(n >= -1);
    let mut prev = IntPoly::constant(-1); // Q_{-1}
    if n == -1 {
        return prev;
    }
    let mut cur = IntPoly::zero(); // Q_0
    for _ in 0..n {
        let next = cur.mul_t().sub(&prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// (u_{n-1}, u_n) where u_i = Q_i(tau), by fast doubling on the companion
/// recurrence: O(log n) big-integer multiplications.
pub fn u_pair(ring: &RingDesc, tau: &RingElem, n: u64) -> (RingElem, RingElem) {
    // step(k) = (u_k, u_{k+1}), doubling with
    //   u_{2k}   = u_k * (2 u_{k+1} - tau u_k)
    //   u_{2k+1} = u_{k+1}^2 - u_k^2
    fn step(ring: &RingDesc, tau: &RingElem, k: u64) -> (RingElem, RingElem) {
        if k == 0 {
            return (ring.zero(), ring.one());
        }
        let (uk, uk1) = step(ring, tau, k / 2);
        let two_uk1 = ring.add(&uk1, &uk1);
        let u2k = ring.mul(&uk, &ring.sub(&two_uk1, &ring.mul(tau, &uk)));
        let u2k1 = ring.sub(&ring.mul(&uk1, &uk1), &ring.mul(&uk, &uk));
        if k % 2 == 0 {
            (u2k, u2k1)
        } else {
            let u2k2 = ring.sub(&ring.mul(tau, &u2k1), &u2k);
            (u2k1, u2k2)
        }
    }
    if n == 0 {
        return (ring.int(-1), ring.zero());
    }
    step(ring, tau, n - 1)
}

/// The companion value u_{k+1} - u_{k-1}.
pub fn u_companion(ring: &RingDesc, tau: &RingElem, k: u64) -> RingElem {
    let (uk, uk1) = u_pair(ring, tau, k + 1);
    // u_{k-1} = tau*u_k - u_{k+1}
    let uk_1 = ring.sub(&ring.mul(tau, &uk), &uk1);
    ring.sub(&uk1, &uk_1)
}

/// Closed-form split u_n = v * w with v | u_{n-1} - 1 and w | u_{n-1} + 1:
///   n = 2k:   v = u_{k+1} - u_{k-1},  w = u_k
///   n = 2k+1: v = u_{k+1} - u_k,      w = u_{k+1} + u_k
/// All three divisibility claims are checked exactly before returning.
pub fn vw_split(ring: &RingDesc, tau: &RingElem, n: u64) -> Result<(RingElem, RingElem), Sl2Error> {
    assert!(n >= 2);
    let k = n / 2;
    let (ukm1, uk) = u_pair(ring, tau, k);
    let uk1 = ring.sub(&ring.mul(tau, &uk), &ukm1);
    let (v, w) = if n % 2 == 0 {
        (ring.sub(&uk1, &ukm1), uk.clone())
    } else {
        (ring.sub(&uk1, &uk), ring.add(&uk1, &uk))
    };
    let (unm1, un) = u_pair(ring, tau, n);
    if un.is_zero() || v.is_zero() || w.is_zero() {
        return Err(Sl2Error::DegenerateTrace);
    }
    let prod = ring.mul(&v, &w);
    if prod != un {
        return Err(Sl2Error::DegenerateTrace);
    }
    let one = ring.one();
    if ring.div_exact(&ring.sub(&unm1, &one), &v).is_err() {
        return Err(Sl2Error::DegenerateTrace);
    }
    if ring.div_exact(&ring.add(&unm1, &one), &w).is_err() {
        return Err(Sl2Error::DegenerateTrace);
    }
    Ok((v, w))
}

/// True when the trace is one of the rational integers 0, +/-1, +/-2, where
/// the u-sequence is periodic or parabolic and the split degenerates.
pub fn trace_is_degenerate(tau: &RingElem) -> bool {
    tau.y.is_zero() && tau.x.abs() <= BigInt::from(2)
}

/// First row of alpha^n together with (u_n, u_{n-1}), via the two-term
/// matrix identity: a_n = a u_n - u_{n-1}, b_n = b u_n. Cross-checked
/// against binary exponentiation for n <= 64.
pub fn power_first_row(
    ring: &RingDesc,
    alpha: &Matrix2,
    n: u64,
) -> (RingElem, RingElem, RingElem, RingElem) {
    assert!(n >= 1);
    let tau = alpha.trace(ring);
    let (unm1, un) = u_pair(ring, &tau, n);
    let an = ring.sub(&ring.mul(&alpha.a, &un), &unm1);
    let bn = ring.mul(&alpha.b, &un);
    if n <= 64 {
        let direct = alpha.pow(ring, n);
        assert_eq!(direct.a, an, "power first-row formula mismatch");
        assert_eq!(direct.b, bn, "power first-row formula mismatch");
    }
    (an, bn, un, unm1)
}

/// Complete a primitive row (a, b) to a determinant-1 matrix
/// [[a, b], [-v, u]] using a*u + b*v = 1.
pub fn complete_row(ring: &RingDesc, a: &RingElem, b: &RingElem) -> Result<Matrix2, Sl2Error> {
    let (u, v) = ring.bezout(a, b).map_err(|_| Sl2Error::NotPrimitive)?;
    let m = Matrix2::new(a.clone(), b.clone(), ring.neg(&v), u);
    debug_assert!(m.det(ring).is_one());
    Ok(m)
}

/// For det-1 matrices with equal first rows, the r with
/// m2 = [[1,0],[r,1]] * m. Errors if the rows differ.
pub fn row_fixup(ring: &RingDesc, m: &Matrix2, m2: &Matrix2) -> Result<RingElem, Sl2Error> {
    let t = m2.mul(ring, &m.inv(ring));
    if !t.a.is_one() || !t.b.is_zero() || !t.d.is_one() {
        return Err(Sl2Error::RowMismatch);
    }
    Ok(t.c)
}
