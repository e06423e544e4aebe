//! Small exact integer linear algebra over Z: extended gcd folds, column
//! Hermite forms for rank-2 lattices in Z^2, solving 2xN systems, and
//! Lagrange-Gauss reduction of a planar lattice under a positive form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Floor division (rounds toward negative infinity).
pub fn div_floor(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

/// Nearest-integer division, ties rounded toward positive infinity.
/// `b` must be nonzero.
pub fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    // round(a/b) = floor((2a + b) / 2b)
    let two_a = a << 1u32;
    let two_b = b << 1u32;
    (two_a + b).div_floor(&two_b)
}

/// A vector in Z^2 paired with the Z-combination of the original generators
/// that produced it. Used to solve linear systems by column reduction while
/// remembering preimages.
#[derive(Clone, Debug)]
struct TrackedCol {
    v: [BigInt; 2],
    pre: Vec<BigInt>,
}

fn col_combine(a: &TrackedCol, s: &BigInt, b: &TrackedCol, t: &BigInt) -> TrackedCol {
    TrackedCol {
        v: [&a.v[0] * s + &b.v[0] * t, &a.v[1] * s + &b.v[1] * t],
        pre: a
            .pre
            .iter()
            .zip(&b.pre)
            .map(|(x, y)| x * s + y * t)
            .collect(),
    }
}

/// Column Hermite basis of the sublattice of Z^2 generated by `cols`,
/// together with preimages expressing each basis vector as a combination of
/// the inputs. Returns `(x_pivot, y_pivot)` where `x_pivot.v = (h11, 0)`
/// with `h11 > 0` (or zero column if the lattice has no x-axis component)
/// and `y_pivot.v = (h12, h22)` with `h22 > 0` (zero if rank < 2 in y).
fn hermite_cols(cols: &[[BigInt; 2]]) -> (TrackedCol, TrackedCol) {
    let n = cols.len();
    let zero_pre = |_: usize| vec![BigInt::zero(); n];
    let mut y_pivot: Option<TrackedCol> = None;
    let mut x_pool: Vec<TrackedCol> = Vec::new();

    for (i, c) in cols.iter().enumerate() {
        let mut pre = zero_pre(i);
        pre[i] = BigInt::one();
        let col = TrackedCol {
            v: [c[0].clone(), c[1].clone()],
            pre,
        };
        if col.v[1].is_zero() {
            x_pool.push(col);
            continue;
        }
        match y_pivot.take() {
            None => y_pivot = Some(col),
            Some(p) => {
                // Fold: combine p and col so one has y-entry gcd, other zero.
                let e = p.v[1].extended_gcd(&col.v[1]);
                let new_pivot = col_combine(&p, &e.x, &col, &e.y);
                let vg = &p.v[1] / &e.gcd;
                let wg = &col.v[1] / &e.gcd;
                let killed = col_combine(&col, &vg, &p, &(-wg));
                debug_assert!(killed.v[1].is_zero());
                debug_assert_eq!(new_pivot.v[1], e.gcd);
                x_pool.push(killed);
                y_pivot = Some(new_pivot);
            }
        }
    }

    let mut y_pivot = y_pivot.unwrap_or(TrackedCol {
        v: [BigInt::zero(), BigInt::zero()],
        pre: vec![BigInt::zero(); n],
    });
    if y_pivot.v[1].is_negative() {
        let m = -BigInt::one();
        y_pivot = col_combine(
            &y_pivot,
            &m,
            &TrackedCol {
                v: [BigInt::zero(), BigInt::zero()],
                pre: vec![BigInt::zero(); n],
            },
            &BigInt::zero(),
        );
    }

    let mut x_pivot: Option<TrackedCol> = None;
    for col in x_pool {
        if col.v[0].is_zero() {
            continue;
        }
        match x_pivot.take() {
            None => x_pivot = Some(col),
            Some(p) => {
                let e = p.v[0].extended_gcd(&col.v[0]);
                let newp = col_combine(&p, &e.x, &col, &e.y);
                debug_assert_eq!(newp.v[0], e.gcd);
                x_pivot = Some(newp);
            }
        }
    }
    let mut x_pivot = x_pivot.unwrap_or(TrackedCol {
        v: [BigInt::zero(), BigInt::zero()],
        pre: vec![BigInt::zero(); n],
    });
    if x_pivot.v[0].is_negative() {
        x_pivot.v[0] = -&x_pivot.v[0];
        x_pivot.v[1] = -&x_pivot.v[1];
        for p in &mut x_pivot.pre {
            *p = -&*p;
        }
    }
    (x_pivot, y_pivot)
}

/// Canonical column Hermite normal form of the lattice spanned by `cols`.
/// Returns `[[h11, h12], [0, h22]]` with `h11, h22 > 0` and `0 <= h12 < h11`.
/// Panics if the lattice does not have full rank 2.
pub fn hnf_full_rank(cols: &[[BigInt; 2]]) -> [[BigInt; 2]; 2] {
    let (xp, mut yp) = hermite_cols(cols);
    let h11 = xp.v[0].clone();
    assert!(
        h11.is_positive() && yp.v[1].is_positive(),
        "lattice not of full rank"
    );
    // Normalize h12 into [0, h11).
    let k = div_floor(&yp.v[0], &h11);
    yp.v[0] -= &k * &h11;
    [[h11, yp.v[0].clone()], [BigInt::zero(), yp.v[1].clone()]]
}

/// Solve `sum_i z_i * cols_i = target` over Z. Returns the coefficient
/// vector `z` if a solution exists.
pub fn solve_columns(cols: &[[BigInt; 2]], target: &[BigInt; 2]) -> Option<Vec<BigInt>> {
    let (xp, yp) = hermite_cols(cols);
    let (h11, h21, h22) = (&xp.v[0], &yp.v[0], &yp.v[1]);
    // Solve w_y * (h21, h22) + w_x * (h11, 0) = target.
    let w_y = if h22.is_zero() {
        if !target[1].is_zero() {
            return None;
        }
        BigInt::zero()
    } else {
        let (q, r) = target[1].div_rem(h22);
        if !r.is_zero() {
            return None;
        }
        q
    };
    let rem_x = &target[0] - h21 * &w_y;
    let w_x = if h11.is_zero() {
        if !rem_x.is_zero() {
            return None;
        }
        BigInt::zero()
    } else {
        let (q, r) = rem_x.div_rem(h11);
        if !r.is_zero() {
            return None;
        }
        q
    };
    Some(
        xp.pre
            .iter()
            .zip(&yp.pre)
            .map(|(a, b)| a * &w_x + b * &w_y)
            .collect(),
    )
}

/// Lagrange-Gauss reduction of the lattice spanned by `v1, v2` in Z^2 under
/// a positive-definite integer quadratic form. `q` evaluates the form and
/// `bil2` the doubled bilinear form `2B(u, v) = Q(u+v) - Q(u) - Q(v)`.
/// Returns a basis with the first vector shortest in the lattice.
pub fn lagrange_reduce<Q, B>(
    mut v1: [BigInt; 2],
    mut v2: [BigInt; 2],
    q: Q,
    bil2: B,
) -> ([BigInt; 2], [BigInt; 2])
where
    Q: Fn(&[BigInt; 2]) -> BigInt,
    B: Fn(&[BigInt; 2], &[BigInt; 2]) -> BigInt,
{
    if q(&v1) > q(&v2) {
        std::mem::swap(&mut v1, &mut v2);
    }
    loop {
        // mu = round(B(v1,v2)/Q(v1)) = round(2B / 2Q)
        let n1 = q(&v1);
        assert!(n1.is_positive(), "degenerate lattice vector");
        let mu = div_round(&bil2(&v1, &v2), &(&n1 << 1u32));
        let r = [&v2[0] - &mu * &v1[0], &v2[1] - &mu * &v1[1]];
        if q(&r) >= n1 {
            return (v1, [v2[0].clone(), v2[1].clone()]);
        }
        v2 = v1;
        v1 = r;
    }
}
