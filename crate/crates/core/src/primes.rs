//! Primality and factorization of ring elements, unit-group exponents,
//! prime searches in arithmetic progressions, power-residue tests and root
//! extraction in residue fields, and diagnostic odd-place Hilbert symbols.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::ring::{ResidueRing, RingDesc, RingElem, RingError};

pub const DEFAULT_PSEUDOPRIME_ROUNDS: u32 = 40;
pub const DEFAULT_SEARCH_BUDGET: u64 = 200_000;
pub const DEFAULT_EPSILON_BRUTE_CAP: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum PrimesError {
    #[error("search exhausted after {trials} trials: {what}")]
    SearchExhausted { what: String, trials: u64 },
    #[error("pair is not primitive")]
    NotPrimitive,
    #[error("m does not divide the residue field order minus one")]
    BadModulus,
    #[error("element is not an m-th power residue")]
    NotResidue,
    #[error("residue characteristic 2 is out of range for the tame symbol")]
    EvenPlace,
    #[error("local unit group too large for direct exponent computation")]
    TooLarge,
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// Classification of a ring element as a prime element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrimeKind {
    /// Degree-1 prime over a split rational prime; |norm| = p unramified.
    SplitDeg1 { residue_char: BigInt },
    /// Unit multiple of an inert rational prime; |norm| = p^2.
    InertDeg2 { residue_char: BigInt },
    /// Degree-1 prime over a ramified rational prime (p divides disc).
    Ramified { residue_char: BigInt },
    NotPrime,
}

impl PrimeKind {
    pub fn is_prime(&self) -> bool {
        !matches!(self, PrimeKind::NotPrime)
    }

    pub fn residue_char(&self) -> Option<&BigInt> {
        match self {
            PrimeKind::SplitDeg1 { residue_char }
            | PrimeKind::InertDeg2 { residue_char }
            | PrimeKind::Ramified { residue_char } => Some(residue_char),
            PrimeKind::NotPrime => None,
        }
    }

    /// Residue field size: p for degree 1, p^2 for degree 2.
    pub fn field_size(&self) -> Option<BigInt> {
        match self {
            PrimeKind::SplitDeg1 { residue_char } | PrimeKind::Ramified { residue_char } => {
                Some(residue_char.clone())
            }
            PrimeKind::InertDeg2 { residue_char } => Some(residue_char * residue_char),
            PrimeKind::NotPrime => None,
        }
    }
}

/// Exact factorization of a nonzero element into a unit and prime powers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub unit: RingElem,
    pub factors: Vec<(RingElem, u32)>,
}

// ---------------------------------------------------------------------------
// Rational integer primality and factoring
// ---------------------------------------------------------------------------

fn modpow_int(base: &BigInt, exp: &BigInt, modulus: &BigInt) -> BigInt {
    base.modpow(exp, modulus)
}

/// Miller-Rabin strong pseudoprime test for one base.
fn mr_witness(n: &BigInt, base: &BigInt) -> bool {
    // Returns true if `base` witnesses n composite.
    let one = BigInt::one();
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    let b = base % n;
    if b.is_zero() {
        return false;
    }
    let mut x = modpow_int(&b, &d, n);
    if x.is_one() || x == nm1 {
        return false;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == nm1 {
            return false;
        }
    }
    true
}

const SMALL_PRIMES_FOR_BASES: [u64; 46] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199,
];

/// Deterministic below 3.3e24 via the fixed 12-witness set; above that,
/// strong-pseudoprime rounds with the first `rounds` prime bases.
pub fn is_rational_prime(n: &BigInt, rounds: u32) -> bool {
    if n < &BigInt::from(2) {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let pb = BigInt::from(p);
        if n == &pb {
            return true;
        }
        if (n % &pb).is_zero() {
            return false;
        }
    }
    let deterministic_limit = BigInt::parse_bytes(b"3317044064679887385961981", 10).unwrap();
    let bases: &[u64] = if n < &deterministic_limit {
        &SMALL_PRIMES_FOR_BASES[..12]
    } else {
        let k = (rounds as usize).clamp(12, SMALL_PRIMES_FOR_BASES.len());
        &SMALL_PRIMES_FOR_BASES[..k]
    };
    for &b in bases {
        if mr_witness(n, &BigInt::from(b)) {
            return false;
        }
    }
    true
}

fn pollard_rho(n: &BigInt) -> BigInt {
    // Brent's variant with deterministic parameter sequence.
    let one = BigInt::one();
    if n.is_even() {
        return BigInt::from(2);
    }
    let mut c = BigInt::one();
    loop {
        let mut x = BigInt::from(2);
        let mut y = BigInt::from(2);
        let mut d = BigInt::one();
        let f = |v: &BigInt| (v * v + &c) % n;
        let mut count = 0u64;
        while d.is_one() {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            if diff.is_zero() {
                break;
            }
            d = diff.gcd(n);
            count += 1;
            if count > 1_000_000 {
                break;
            }
        }
        if d > one && &d < n {
            return d;
        }
        c += 1;
    }
}

/// Factor a positive integer by trial division then Pollard rho.
pub fn factor_integer(n: &BigInt, rounds: u32) -> Vec<(BigInt, u32)> {
    assert!(n.is_positive());
    let mut out: Vec<(BigInt, u32)> = Vec::new();
    let mut rem = n.clone();
    let push = |p: BigInt, out: &mut Vec<(BigInt, u32)>| {
        for entry in out.iter_mut() {
            if entry.0 == p {
                entry.1 += 1;
                return;
            }
        }
        out.push((p, 1));
    };
    let mut p = BigInt::from(2);
    while &p * &p <= rem && p < BigInt::from(10_000) {
        while (&rem % &p).is_zero() {
            rem /= &p;
            push(p.clone(), &mut out);
        }
        p += 1;
    }
    let mut stack = vec![rem];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if is_rational_prime(&m, rounds) {
            push(m, &mut out);
            continue;
        }
        let d = pollard_rho(&m);
        stack.push(&m / &d);
        stack.push(d);
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// Jacobi symbol (a/n) for odd positive n.
pub fn jacobi(a: &BigInt, n: &BigInt) -> i32 {
    assert!(n.is_positive() && n.is_odd());
    let mut a = a.mod_floor(n);
    let mut n = n.clone();
    let mut t = 1i32;
    while !a.is_zero() {
        while a.is_even() {
            a >>= 1;
            let r = (&n % 8u32).to_u32().unwrap();
            if r == 3 || r == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if (&a % 4u32).to_u32().unwrap() == 3 && (&n % 4u32).to_u32().unwrap() == 3 {
            t = -t;
        }
        a = a.mod_floor(&n);
    }
    if n.is_one() {
        t
    } else {
        0
    }
}

// ---------------------------------------------------------------------------
// Prime elements
// ---------------------------------------------------------------------------

/// Classify a nonzero non-unit element as a prime element of O_d.
pub fn is_prime_elem(ring: &RingDesc, q: &RingElem, rounds: u32) -> PrimeKind {
    let n = ring.norm(q);
    if n <= BigInt::one() {
        return PrimeKind::NotPrime;
    }
    if is_rational_prime(&n, rounds) {
        let ramified = (BigInt::from(ring.disc()) % &n).is_zero();
        return if ramified {
            PrimeKind::Ramified { residue_char: n }
        } else {
            PrimeKind::SplitDeg1 { residue_char: n }
        };
    }
    // Degree 2: q must be a unit multiple of an inert rational prime p.
    let p = n.sqrt();
    if &p * &p != n || !is_rational_prime(&p, rounds) {
        return PrimeKind::NotPrime;
    }
    let p_elem = RingElem::new(p.clone(), BigInt::zero());
    match ring.div_exact(q, &p_elem) {
        Ok(u) if ring.is_unit(&u) => {}
        _ => return PrimeKind::NotPrime,
    }
    let inert = if p == BigInt::from(2) {
        ring.d().rem_euclid(8) == 5
    } else {
        jacobi(&BigInt::from(ring.d()), &p) == -1
    };
    if inert {
        PrimeKind::InertDeg2 { residue_char: p }
    } else {
        PrimeKind::NotPrime
    }
}

/// Square root mod an odd rational prime via Tonelli-Shanks, with the
/// smallest non-residue base. `a` need not be reduced.
fn sqrt_mod_prime(a: &BigInt, p: &BigInt) -> Option<BigInt> {
    let a = a.mod_floor(p);
    if a.is_zero() {
        return Some(BigInt::zero());
    }
    if p == &BigInt::from(2) {
        return Some(a);
    }
    if jacobi(&a, p) != 1 {
        return None;
    }
    let one = BigInt::one();
    let pm1 = p - &one;
    if (p % 4u32).to_u32().unwrap() == 3 {
        let r = modpow_int(&a, &((p + 1u32) >> 2), p);
        return Some(r);
    }
    let s = pm1.trailing_zeros().unwrap();
    let q = &pm1 >> s;
    let mut z = BigInt::from(2);
    while jacobi(&z, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = modpow_int(&z, &q, p);
    let mut t = modpow_int(&a, &q, p);
    let mut r = modpow_int(&a, &((&q + 1u32) >> 1), p);
    while !t.is_one() {
        let mut i = 0u64;
        let mut tt = t.clone();
        while !tt.is_one() {
            tt = (&tt * &tt) % p;
            i += 1;
            if i == m {
                return None;
            }
        }
        let b = modpow_int(&c, &(BigInt::one() << (m - i - 1)), p);
        m = i;
        c = (&b * &b) % p;
        t = (&t * &c) % p;
        r = (&r * &b) % p;
    }
    Some(r)
}

/// A canonical prime element above the rational prime p, together with its
/// conjugate when p is not inert. Returns `(pi, Some(conj))` for split p,
/// `(pi, None)` for ramified p, and `(p itself, None)` for inert p.
fn prime_above(
    ring: &RingDesc,
    p: &BigInt,
    rounds: u32,
) -> Result<(RingElem, Option<RingElem>), PrimesError> {
    let two = BigInt::from(2);
    let inert = if p == &two {
        ring.d().rem_euclid(8) == 5
    } else {
        !(BigInt::from(ring.d()) % p).is_zero() && jacobi(&BigInt::from(ring.d()), p) == -1
    };
    if inert {
        return Ok((RingElem::new(p.clone(), BigInt::zero()), None));
    }
    // Find a root of the minimal polynomial of w mod p, then reduce the
    // ideal (p, w - r) to a generator.
    let root = if p == &two {
        if ring.half_basis() {
            // x^2 - x - (d-1)/4 = 0 mod 2 has the root 0 iff (d-1)/4 is even.
            let c = BigInt::from((ring.d() - 1) / 4);
            if c.is_even() {
                BigInt::zero()
            } else {
                BigInt::one()
            }
        } else {
            BigInt::from(ring.d()).mod_floor(&two)
        }
    } else if ring.half_basis() {
        // roots of x^2 - x + (1-d)/4: x = (1 +/- sqrt(d)) / 2 mod p
        let s = sqrt_mod_prime(&BigInt::from(ring.d()), p).ok_or_else(|| {
            PrimesError::SearchExhausted {
                what: "no square root of d found for a non-inert prime".into(),
                trials: 0,
            }
        })?;
        let inv2 = modpow_int(&two, &(p - 2u32), p);
        ((BigInt::one() + s) * inv2).mod_floor(p)
    } else {
        sqrt_mod_prime(&BigInt::from(ring.d()), p).ok_or_else(|| PrimesError::SearchExhausted {
            what: "no square root of d found for a non-inert prime".into(),
            trials: 0,
        })?
    };
    let gen = ring.ideal_generator(
        &RingElem::new(p.clone(), BigInt::zero()),
        &RingElem::new(-root, BigInt::one()),
    )?;
    debug_assert!(is_prime_elem(ring, &gen, rounds).is_prime());
    let ramified = (BigInt::from(ring.disc()) % p).is_zero();
    if ramified {
        Ok((gen, None))
    } else {
        let conj = ring.canonical_associate(&ring.conj(&gen)).0;
        Ok((gen, Some(conj)))
    }
}

/// Factor a nonzero element into a unit and canonical prime elements,
/// verified by re-multiplication.
pub fn factor_elem(
    ring: &RingDesc,
    q: &RingElem,
    rounds: u32,
) -> Result<Factorization, PrimesError> {
    assert!(!q.is_zero());
    let n = ring.norm(q);
    let mut rem = q.clone();
    let mut factors: Vec<(RingElem, u32)> = Vec::new();
    if !n.is_one() {
        for (p, _) in factor_integer(&n, rounds) {
            let (pi, conj) = prime_above(ring, &p, rounds)?;
            let mut mult = 0u32;
            while let Ok(next) = ring.div_exact(&rem, &pi) {
                rem = next;
                mult += 1;
            }
            if mult > 0 {
                factors.push((pi, mult));
            }
            if let Some(pic) = conj {
                let mut multc = 0u32;
                while let Ok(next) = ring.div_exact(&rem, &pic) {
                    rem = next;
                    multc += 1;
                }
                if multc > 0 {
                    factors.push((pic, multc));
                }
            }
        }
    }
    if !ring.is_unit(&rem) {
        return Err(RingError::NonPrincipal.into());
    }
    let mut check = rem.clone();
    for (p, k) in &factors {
        check = ring.mul(&check, &ring.pow(p, *k as u64));
    }
    assert_eq!(&check, q, "factorization re-multiplication failed");
    Ok(Factorization {
        unit: rem,
        factors,
    })
}

// ---------------------------------------------------------------------------
// Unit-group exponents
// ---------------------------------------------------------------------------

/// Exponent of (O_d/q)^x. Prime moduli use the residue-field order minus
/// one; higher prime powers fall back to direct computation bounded by
/// `brute_cap`.
pub fn epsilon(
    ring: &RingDesc,
    q: &RingElem,
    rounds: u32,
    brute_cap: u64,
) -> Result<BigInt, PrimesError> {
    assert!(!q.is_zero() && !ring.is_unit(q));
    let kind = is_prime_elem(ring, q, rounds);
    if let Some(f) = kind.field_size() {
        return Ok(f - 1u32);
    }
    let fac = factor_elem(ring, q, rounds)?;
    let mut exp = BigInt::one();
    for (p, k) in &fac.factors {
        let local = if *k == 1 {
            is_prime_elem(ring, p, rounds)
                .field_size()
                .expect("factor is prime")
                - 1u32
        } else {
            let modulus = ring.pow(p, *k as u64);
            brute_force_exponent(ring, &modulus, rounds, brute_cap)?
        };
        exp = exp.lcm(&local);
    }
    Ok(exp)
}

/// Exponent of the unit group of O_d/(modulus) by direct enumeration in
/// machine arithmetic (the size cap keeps every product within i128).
/// Element orders are computed against the factored unit-group size, which
/// comes from the modulus factorization.
fn brute_force_exponent(
    ring: &RingDesc,
    modulus: &RingElem,
    rounds: u32,
    brute_cap: u64,
) -> Result<BigInt, PrimesError> {
    let rr = ResidueRing::new(*ring, modulus.clone());
    if rr.size() > &BigInt::from(brute_cap.min(1 << 30)) {
        return Err(PrimesError::TooLarge);
    }
    // Unit count from the factorization of the modulus:
    // |(O/q)^x| = prod |O/pi^k|^x = prod F^(k-1) (F - 1).
    let fac = factor_elem(ring, modulus, rounds)?;
    let mut group_order: i128 = 1;
    for (p, k) in &fac.factors {
        let f = i128::try_from(&is_prime_elem(ring, p, rounds).field_size().unwrap())
            .map_err(|_| PrimesError::TooLarge)?;
        group_order *= f.pow(*k - 1) * (f - 1);
    }
    let order_factors = factor_i128(group_order);

    let half = ring.half_basis();
    let d = ring.d() as i128;
    let basis = rr.basis();
    let h11 = i128::try_from(&basis[0][0]).map_err(|_| PrimesError::TooLarge)?;
    let h12 = i128::try_from(&basis[0][1]).map_err(|_| PrimesError::TooLarge)?;
    let h22 = i128::try_from(&basis[1][1]).map_err(|_| PrimesError::TooLarge)?;
    let reduce = |x: i128, y: i128| -> (i128, i128) {
        let k2 = y.div_euclid(h22);
        let y = y - k2 * h22;
        let x = x - k2 * h12;
        (x.rem_euclid(h11), y)
    };
    let mul = |a: (i128, i128), b: (i128, i128)| -> (i128, i128) {
        let cross = a.0 * b.1 + a.1 * b.0;
        let yy = a.1 * b.1;
        if half {
            reduce(a.0 * b.0 + yy * ((d - 1) / 4), cross + yy)
        } else {
            reduce(a.0 * b.0 + yy * d, cross)
        }
    };
    let pow = |a: (i128, i128), mut n: i128| -> (i128, i128) {
        let mut base = a;
        let mut acc = (1i128, 0i128);
        while n > 0 {
            if n & 1 == 1 {
                acc = mul(acc, base);
            }
            n >>= 1;
            if n > 0 {
                base = mul(base, base);
            }
        }
        acc
    };

    let mut exp: i128 = 1;
    'elems: for y in 0..h22 {
        for x in 0..h11 {
            let e = RingElem::from_coords(x as i64, y as i64);
            if !ring.is_primitive_pair(&e, modulus) {
                continue;
            }
            let mut ord = group_order;
            for &(p, k) in &order_factors {
                for _ in 0..k {
                    if ord % p == 0 && pow((x, y), ord / p) == (1, 0) {
                        ord /= p;
                    } else {
                        break;
                    }
                }
            }
            exp = exp / exp.gcd(&ord) * ord;
            if exp == group_order {
                break 'elems;
            }
        }
    }
    Ok(BigInt::from(exp))
}

fn factor_i128(mut n: i128) -> Vec<(i128, u32)> {
    let mut out = Vec::new();
    let mut p: i128 = 2;
    while p * p <= n {
        let mut k = 0;
        while n % p == 0 {
            n /= p;
            k += 1;
        }
        if k > 0 {
            out.push((p, k));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

// ---------------------------------------------------------------------------
// Canonical enumeration and prime searches
// ---------------------------------------------------------------------------

/// Enumerates all ring elements in canonical order: ascending norm, ties
/// broken by (x, y) ascending. Coordinates are bounded by the budget scale,
/// so i64 arithmetic suffices internally.
pub struct ElemEnumerator {
    ring: RingDesc,
    norm: i64,
    stage: Vec<RingElem>,
    pos: usize,
}

impl ElemEnumerator {
    pub fn new(ring: RingDesc) -> Self {
        ElemEnumerator {
            ring,
            norm: -1,
            stage: Vec::new(),
            pos: 0,
        }
    }

    fn fill_stage(&mut self) {
        let d = self.ring.d();
        let n = self.norm;
        let mut out: Vec<(i64, i64)> = Vec::new();
        if self.ring.half_basis() {
            // x^2 + xy + cy^2 = n, disc of the quadratic in x: d*y^2 + 4n >= 0
            let ymax = isqrt_i64(4 * n / (-d));
            for y in -ymax..=ymax {
                let disc = d * y * y + 4 * n;
                if disc < 0 {
                    continue;
                }
                let t = isqrt_i64(disc);
                if t * t != disc {
                    continue;
                }
                for xx in [(-y + t), (-y - t)] {
                    if xx.rem_euclid(2) == 0 {
                        out.push((xx / 2, y));
                    }
                }
            }
        } else {
            let ymax = isqrt_i64(n / (-d));
            for y in -ymax..=ymax {
                let rest = n + d * y * y;
                if rest < 0 {
                    continue;
                }
                let x = isqrt_i64(rest);
                if x * x != rest {
                    continue;
                }
                out.push((x, y));
                if x != 0 {
                    out.push((-x, y));
                }
            }
        }
        out.sort();
        out.dedup();
        self.stage = out
            .into_iter()
            .map(|(x, y)| RingElem::from_coords(x, y))
            .collect();
        self.pos = 0;
    }
}

impl Iterator for ElemEnumerator {
    type Item = RingElem;

    fn next(&mut self) -> Option<RingElem> {
        loop {
            if self.pos < self.stage.len() {
                let e = self.stage[self.pos].clone();
                self.pos += 1;
                return Some(e);
            }
            self.norm += 1;
            self.fill_stage();
        }
    }
}

fn isqrt_i64(n: i64) -> i64 {
    if n < 0 {
        return -1;
    }
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Side constraints for prime searches in arithmetic progressions.
#[derive(Debug, Clone, Default)]
pub struct PrimeConstraints {
    /// The found prime must not divide any of these elements.
    pub avoid_divisor_of: Vec<RingElem>,
    /// Required residue class: q = residue mod (modulus).
    pub residue_class: Option<(RingElem, RingElem)>,
    /// Residue characteristic must be coprime to this integer.
    pub char_coprime_to: Option<BigInt>,
    /// |norm(q)| must be coprime to this integer.
    pub norm_coprime_to: Option<BigInt>,
}

impl PrimeConstraints {
    fn admits(&self, ring: &RingDesc, q: &RingElem, kind: &PrimeKind) -> bool {
        for e in &self.avoid_divisor_of {
            if ring.divides(q, e) {
                return false;
            }
        }
        if let Some((m, r)) = &self.residue_class {
            let rr = ResidueRing::new(*ring, m.clone());
            if !rr.eq_mod(q, r) {
                return false;
            }
        }
        if let Some(k) = &self.char_coprime_to {
            let p = kind.residue_char().expect("prime kind");
            if !p.gcd(k).is_one() {
                return false;
            }
        }
        if let Some(k) = &self.norm_coprime_to {
            if !ring.norm(q).gcd(k).is_one() {
                return false;
            }
        }
        true
    }
}

/// Iterator over prime hits `q = base + modulus * n` with `n` in canonical
/// order, subject to constraints, within a trial budget.
pub struct PrimeProgression {
    ring: RingDesc,
    base: RingElem,
    modulus: RingElem,
    constraints: PrimeConstraints,
    rounds: u32,
    en: ElemEnumerator,
    budget: u64,
    pub trials: u64,
}

impl PrimeProgression {
    pub fn new(
        ring: RingDesc,
        base: RingElem,
        modulus: RingElem,
        constraints: PrimeConstraints,
        rounds: u32,
        budget: u64,
    ) -> Result<Self, PrimesError> {
        if ring.bezout(&base, &modulus).is_err() {
            return Err(PrimesError::NotPrimitive);
        }
        Ok(PrimeProgression {
            ring,
            base,
            modulus,
            constraints,
            rounds,
            en: ElemEnumerator::new(ring),
            budget,
            trials: 0,
        })
    }
}

impl Iterator for PrimeProgression {
    type Item = (RingElem, RingElem);

    fn next(&mut self) -> Option<(RingElem, RingElem)> {
        while self.trials < self.budget {
            let n = self.en.next()?;
            self.trials += 1;
            let q = self
                .ring
                .add(&self.base, &self.ring.mul(&self.modulus, &n));
            let kind = is_prime_elem(&self.ring, &q, self.rounds);
            if !kind.is_prime() {
                continue;
            }
            if !self.constraints.admits(&self.ring, &q, &kind) {
                continue;
            }
            return Some((n, q));
        }
        None
    }
}

/// First prime `q = base + modulus*n` in the canonical enumeration order
/// satisfying the constraints. Effective stand-in for the density theorem
/// on primes in primitive progressions.
pub fn hasse_search(
    ring: &RingDesc,
    base: &RingElem,
    modulus: &RingElem,
    constraints: PrimeConstraints,
    rounds: u32,
    budget: u64,
) -> Result<(RingElem, RingElem), PrimesError> {
    let mut it = PrimeProgression::new(
        *ring,
        base.clone(),
        modulus.clone(),
        constraints,
        rounds,
        budget,
    )?;
    match it.next() {
        Some(hit) => Ok(hit),
        None => Err(PrimesError::SearchExhausted {
            what: format!("prime in progression {} + ({})*n", base, modulus),
            trials: it.trials,
        }),
    }
}

// ---------------------------------------------------------------------------
// Power residues and roots in residue fields
// ---------------------------------------------------------------------------

/// Residue field of a prime element: the residue ring plus its size.
pub struct ResidueField {
    pub rr: ResidueRing,
    pub size: BigInt,
}

impl ResidueField {
    pub fn new(ring: &RingDesc, q: &RingElem, rounds: u32) -> Result<Self, PrimesError> {
        let kind = is_prime_elem(ring, q, rounds);
        let size = kind.field_size().ok_or(PrimesError::BadModulus)?;
        Ok(ResidueField {
            rr: ResidueRing::new(*ring, q.clone()),
            size,
        })
    }
}

/// True iff `s^((F-1)/m) = 1` in the residue field of prime q.
pub fn mth_power_residue(
    ring: &RingDesc,
    s: &RingElem,
    q: &RingElem,
    m: u64,
    rounds: u32,
) -> Result<bool, PrimesError> {
    let f = ResidueField::new(ring, q, rounds)?;
    let fm1 = &f.size - 1u32;
    if !(&fm1 % m).is_zero() {
        return Err(PrimesError::BadModulus);
    }
    if f.rr.is_zero(s) {
        return Err(RingError::NotInvertible.into());
    }
    let e = &fm1 / m;
    Ok(f.rr.pow(s, &e).is_one())
}

/// First element in the canonical order (ascending norm, ties by (x, y))
/// whose image is not an l-th power residue. Canonical order matters: in a
/// degree-2 residue field every prime-field element is a square, so the
/// search must reach elements with a nonzero second coordinate early.
fn canonical_non_residue(f: &ResidueField, l: u64) -> RingElem {
    let e = (&f.size - 1u32) / l;
    for g in ElemEnumerator::new(*f.rr.ring()) {
        if f.rr.is_zero(&g) {
            continue;
        }
        if !f.rr.pow(&g, &e).is_one() {
            return f.rr.reduce(&g);
        }
    }
    unreachable!("residue field has a non-l-th-power for l | F-1")
}

/// One l-th root (l prime, l | F-1) of an l-th power residue `s`, by the
/// Adleman-Manders-Miller construction; for l = 2 this is Tonelli-Shanks
/// generalized to both residue-field degrees.
fn amm_root(f: &ResidueField, s: &RingElem, l: u64) -> Result<RingElem, PrimesError> {
    let one = f.rr.reduce(&f.rr.ring().one());
    let fm1 = &f.size - 1u32;
    let lb = BigInt::from(l);
    // F - 1 = l^e * k with l not dividing k
    let mut e = 0u32;
    let mut k = fm1.clone();
    while (&k % &lb).is_zero() {
        k /= &lb;
        e += 1;
    }
    // Sylow generator
    let g = canonical_non_residue(f, l);
    let gs = f.rr.pow(&g, &k);
    // x0 = s^(li) with l*li = 1 + k*j
    let li = if k.is_one() {
        BigInt::zero()
    } else {
        let eg = lb.extended_gcd(&k);
        debug_assert!(eg.gcd.is_one());
        eg.x.mod_floor(&k)
    };
    let j = (&lb * &li - 1u32) / &k;
    let x0 = f.rr.pow(s, &li);
    // h = s^k lies in the Sylow subgroup and is an l-th power there.
    let h = f.rr.pow(s, &k);
    let dl = sylow_dlog(f, &gs, &h, l, e, &one)?;
    if !(&dl % &lb).is_zero() {
        return Err(PrimesError::NotResidue);
    }
    let y = f.rr.pow(&gs, &(&dl / &lb));
    // x = x0 * y^{-j}: y^{-j} = y^{l^e - (j mod l^e)} within the Sylow group.
    let sylow_order = lb.pow(e);
    let jm = (&j).mod_floor(&sylow_order);
    let y_negj = f.rr.pow(&y, &((&sylow_order - &jm) % &sylow_order));
    let x = f.rr.mul(&x0, &y_negj);
    debug_assert!(f.rr.eq_mod(&f.rr.pow(&x, &lb), s));
    Ok(x)
}

/// Discrete log in the cyclic l-Sylow subgroup generated by gs (order l^e).
fn sylow_dlog(
    f: &ResidueField,
    gs: &RingElem,
    h: &RingElem,
    l: u64,
    e: u32,
    one: &RingElem,
) -> Result<BigInt, PrimesError> {
    let lb = BigInt::from(l);
    let order = lb.pow(e);
    // Pohlig-Hellman digit extraction.
    let mut digits = BigInt::zero();
    let mut base_pow = BigInt::one();
    let gamma = f.rr.pow(gs, &lb.pow(e.saturating_sub(1))); // order l
    let mut cur = f.rr.reduce(h);
    for i in 0..e {
        let exp = lb.pow(e - 1 - i);
        let probe = f.rr.pow(&cur, &exp);
        // probe = gamma^digit
        let mut digit = None;
        let mut acc = f.rr.reduce(one);
        for dcand in 0..l {
            if f.rr.eq_mod(&acc, &probe) {
                digit = Some(dcand);
                break;
            }
            acc = f.rr.mul(&acc, &gamma);
        }
        let digit = digit.ok_or(PrimesError::NotResidue)?;
        if digit != 0 {
            let contrib = &base_pow * digit;
            // divide out gs^{-contrib}
            let inv_exp = (&order - &contrib).mod_floor(&order);
            cur = f.rr.mul(&cur, &f.rr.pow(gs, &inv_exp));
            digits += contrib;
        }
        base_pow *= &lb;
    }
    Ok(digits)
}

fn small_prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        while m % p == 0 {
            out.push(p);
            m /= p;
        }
        p += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

/// An m-th root of s modulo the prime element q, for m dividing F - 1.
/// The result is the root least in canonical element order among all m-th
/// roots, so it is deterministic and independent of internal choices.
/// Verified by re-powering before returning.
pub fn mth_root_mod(
    ring: &RingDesc,
    s: &RingElem,
    q: &RingElem,
    m: u64,
    rounds: u32,
) -> Result<RingElem, PrimesError> {
    assert!(m >= 1);
    let f = ResidueField::new(ring, q, rounds)?;
    let fm1 = &f.size - 1u32;
    if !(&fm1 % m).is_zero() {
        return Err(PrimesError::BadModulus);
    }
    if f.rr.is_zero(s) {
        return Err(RingError::NotInvertible.into());
    }
    if !f.rr.pow(s, &(&fm1 / m)).is_one() {
        return Err(PrimesError::NotResidue);
    }
    // Peel prime factors of m, adjusting by roots of unity so each
    // intermediate value stays a residue for the remaining index.
    let mut root = f.rr.reduce(s);
    let mut remaining: Vec<u64> = small_prime_factors(m);
    while let Some(l) = remaining.pop() {
        let rest: u64 = remaining.iter().product();
        let base = amm_root(&f, &root, l)?;
        if rest == 1 {
            root = base;
            continue;
        }
        // multiply by l-th roots of unity until the value is a rest-th residue
        let zeta = {
            let g = canonical_non_residue(&f, l);
            f.rr.pow(&g, &(&fm1 / l))
        };
        let mut cand = base;
        let mut found = false;
        for _ in 0..l {
            if f.rr.pow(&cand, &(&fm1 / rest)).is_one() {
                found = true;
                break;
            }
            cand = f.rr.mul(&cand, &zeta);
        }
        if !found {
            return Err(PrimesError::NotResidue);
        }
        root = cand;
    }
    // Canonical tie-break: least m-th root in canonical element order.
    let zeta_m = primitive_root_of_unity(&f, m);
    let mut best = root.clone();
    let mut cur = root;
    for _ in 1..m {
        cur = f.rr.mul(&cur, &zeta_m);
        if ring.cmp_canonical(&cur, &best) == std::cmp::Ordering::Less {
            best = cur.clone();
        }
    }
    let check = f.rr.pow(&best, &BigInt::from(m));
    assert!(f.rr.eq_mod(&check, s), "m-th root verification failed");
    Ok(best)
}

/// A root of unity of exact order m in the residue field (m | F - 1),
/// found from the first canonical element whose (F-1)/m power has order m.
fn primitive_root_of_unity(f: &ResidueField, m: u64) -> RingElem {
    if m == 1 {
        return f.rr.reduce(&f.rr.ring().one());
    }
    let fm1 = &f.size - 1u32;
    let exps: Vec<BigInt> = small_prime_factors(m)
        .into_iter()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|l| BigInt::from(m / l))
        .collect();
    for h in ElemEnumerator::new(*f.rr.ring()) {
        if f.rr.is_zero(&h) {
            continue;
        }
        let z = f.rr.pow(&h, &(&fm1 / m));
        if !z.is_one() && exps.iter().all(|e| !f.rr.pow(&z, e).is_one()) {
            return z;
        }
    }
    unreachable!("cyclic group of order F-1 contains an element of order m")
}

// ---------------------------------------------------------------------------
// Tame Hilbert symbol at odd places (diagnostic)
// ---------------------------------------------------------------------------

/// Tame symbol at the odd prime q: with a = v_q(alpha), b = v_q(beta),
/// returns the quadratic character of (-1)^(ab) * alpha^b / beta^a in the
/// residue field.
pub fn hilbert_odd(
    ring: &RingDesc,
    alpha: &RingElem,
    beta: &RingElem,
    q: &RingElem,
    rounds: u32,
) -> Result<i32, PrimesError> {
    assert!(!alpha.is_zero() && !beta.is_zero());
    let kind = is_prime_elem(ring, q, rounds);
    let p = kind.residue_char().ok_or(PrimesError::BadModulus)?;
    if p == &BigInt::from(2) {
        return Err(PrimesError::EvenPlace);
    }
    let f = ResidueField::new(ring, q, rounds)?;
    let strip = |e: &RingElem| {
        let mut v = 0u64;
        let mut cur = e.clone();
        while let Ok(next) = ring.div_exact(&cur, q) {
            cur = next;
            v += 1;
        }
        (v, cur)
    };
    let (a, alpha0) = strip(alpha);
    let (b, beta0) = strip(beta);
    let mut u = f.rr.mul(
        &f.rr.pow(&alpha0, &BigInt::from(b)),
        &f.rr.pow(&f.rr.invert(&beta0)?, &BigInt::from(a)),
    );
    if (a * b) % 2 == 1 {
        u = f.rr.reduce(&ring.neg(&u));
    }
    let chi = f.rr.pow(&u, &((&f.size - 1u32) >> 1));
    if chi.is_one() {
        Ok(1)
    } else {
        debug_assert!(f.rr.eq_mod(&chi, &ring.neg(&ring.one())));
        Ok(-1)
    }
}
