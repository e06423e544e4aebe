//! The registry of bounded polynomial matrix families, factor evaluation,
//! the certificate data model, and the verifier.
//!
//! Every family contains the identity at some parameter value, and every
//! evaluated factor has determinant 1. Certificates are ordered factor
//! words whose exact left-to-right product is the target matrix.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ring::{RingDesc, RingElem, RingError};
use crate::sl2::Matrix2;

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum FamilyError {
    #[error("MAGIC factor is not integral after the z5 division (implementation bug)")]
    MagicNotIntegral,
    #[error("ZWORD matrix must be integral with determinant 1")]
    BadZword,
    #[error("certificate verification failed: {0}")]
    VerificationFailed(String),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// An explicit 2x2 integer matrix of determinant 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMat2 {
    pub rows: [[BigInt; 2]; 2],
}

impl IntMat2 {
    pub fn new(rows: [[i64; 2]; 2]) -> Self {
        IntMat2 {
            rows: [
                [BigInt::from(rows[0][0]), BigInt::from(rows[0][1])],
                [BigInt::from(rows[1][0]), BigInt::from(rows[1][1])],
            ],
        }
    }

    pub fn det(&self) -> BigInt {
        &self.rows[0][0] * &self.rows[1][1] - &self.rows[0][1] * &self.rows[1][0]
    }

    /// Adjugate; the inverse for determinant-1 matrices.
    pub fn adjugate(&self) -> IntMat2 {
        IntMat2 {
            rows: [
                [self.rows[1][1].clone(), -&self.rows[0][1]],
                [-&self.rows[1][0], self.rows[0][0].clone()],
            ],
        }
    }

    pub fn to_matrix2(&self) -> Matrix2 {
        let e = |v: &BigInt| RingElem::new(v.clone(), BigInt::zero());
        Matrix2::new(
            e(&self.rows[0][0]),
            e(&self.rows[0][1]),
            e(&self.rows[1][0]),
            e(&self.rows[1][1]),
        )
    }

    /// [[0, -1], [1, 0]]: right multiplication sends a row (a, b) to (b, -a).
    pub fn j() -> Self {
        IntMat2::new([[0, -1], [1, 0]])
    }

    /// [[0, 1], [-1, 0]] = j^-1.
    pub fn j_inv() -> Self {
        IntMat2::new([[0, 1], [-1, 0]])
    }

    pub fn neg_identity() -> Self {
        IntMat2::new([[-1, 0], [0, -1]])
    }

    pub fn is_identity(&self) -> bool {
        self.rows[0][0].is_one()
            && self.rows[0][1].is_zero()
            && self.rows[1][0].is_zero()
            && self.rows[1][1].is_one()
    }
}

/// One registry family instance with its parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    /// [[1, r], [0, 1]]
    E12(RingElem),
    /// [[1, 0], [r, 1]]
    E21(RingElem),
    /// An explicit SL2(Z) matrix.
    Zword(IntMat2),
    /// The five-parameter family from the conjugated rank-one-update word,
    /// evaluated at (z1, .., z5).
    Magic([RingElem; 5]),
}

/// A registry-family reference with parameters and an inverse flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub family: Family,
    pub inverse: bool,
    pub origin: Option<String>,
}

impl Factor {
    pub fn e12(r: RingElem) -> Self {
        Factor {
            family: Family::E12(r),
            inverse: false,
            origin: None,
        }
    }

    pub fn e21(r: RingElem) -> Self {
        Factor {
            family: Family::E21(r),
            inverse: false,
            origin: None,
        }
    }

    pub fn zword(m: IntMat2) -> Self {
        Factor {
            family: Family::Zword(m),
            inverse: false,
            origin: None,
        }
    }

    pub fn magic(z: [RingElem; 5]) -> Self {
        Factor {
            family: Family::Magic(z),
            inverse: false,
            origin: None,
        }
    }

    pub fn with_origin(mut self, origin: &str) -> Self {
        self.origin = Some(origin.to_string());
        self
    }

    /// The inverse as a registry factor. Elementary and integer factors
    /// invert in closed form; MAGIC toggles the inverse flag.
    pub fn inverted(&self, ring: &RingDesc) -> Factor {
        let family = match &self.family {
            Family::E12(r) => Family::E12(ring.neg(r)),
            Family::E21(r) => Family::E21(ring.neg(r)),
            Family::Zword(m) => Family::Zword(m.adjugate()),
            Family::Magic(z) => {
                return Factor {
                    family: Family::Magic(z.clone()),
                    inverse: !self.inverse,
                    origin: self.origin.clone(),
                }
            }
        };
        Factor {
            family,
            inverse: self.inverse,
            origin: self.origin.clone(),
        }
    }
}

/// The rank-one-update word W(x1, x2, x3, x4) = N * M * N * J with
/// M = I + [[-x1 x3, x1^2], [-x3^2, x1 x3]] and
/// N = I + [[-x2 x4, x2^2], [-x4^2, x2 x4]].
/// When (x1..x4) are the entries of a determinant-1 matrix A, W = A * A^T;
/// this is asserted whenever it applies.
pub fn wfam_check(ring: &RingDesc, x: &[RingElem; 4]) -> Matrix2 {
    let w = wfam_eval(ring, x);
    let a = Matrix2::new(x[0].clone(), x[1].clone(), x[2].clone(), x[3].clone());
    if a.det(ring).is_one() {
        let aat = a.mul(ring, &a.transpose());
        assert_eq!(w, aat, "W(entries of A) must equal A * A^T");
    }
    w
}

fn wfam_eval(ring: &RingDesc, x: &[RingElem; 4]) -> Matrix2 {
    let (x1, x2, x3, x4) = (&x[0], &x[1], &x[2], &x[3]);
    let one = ring.one();
    let m = Matrix2::new(
        ring.sub(&one, &ring.mul(x1, x3)),
        ring.mul(x1, x1),
        ring.neg(&ring.mul(x3, x3)),
        ring.add(&one, &ring.mul(x1, x3)),
    );
    let n = Matrix2::new(
        ring.sub(&one, &ring.mul(x2, x4)),
        ring.mul(x2, x2),
        ring.neg(&ring.mul(x4, x4)),
        ring.add(&one, &ring.mul(x2, x4)),
    );
    let j = IntMat2::j().to_matrix2();
    n.mul(ring, &m).mul(ring, &n).mul(ring, &j)
}

/// Evaluate one factor to its exact matrix.
pub fn eval_factor(ring: &RingDesc, f: &Factor) -> Result<Matrix2, FamilyError> {
    let base = match &f.family {
        Family::E12(r) => Matrix2::new(ring.one(), r.clone(), ring.zero(), ring.one()),
        Family::E21(r) => Matrix2::new(ring.one(), ring.zero(), r.clone(), ring.one()),
        Family::Zword(m) => {
            if !m.det().is_one() {
                return Err(FamilyError::BadZword);
            }
            m.to_matrix2()
        }
        Family::Magic(z) => eval_magic(ring, z)?,
    };
    debug_assert!(base.det(ring).is_one());
    Ok(if f.inverse { base.inv(ring) } else { base })
}

/// MAGIC(z1..z5) = D * W(1 + z5 z1, z5 z2, z5 z3, 1 + z5 z4) * D^-1 with
/// D = diag(z5, 1); the (2,1) entry division by z5 is always exact. The
/// specialization at z5 = 0 is the identity.
fn eval_magic(ring: &RingDesc, z: &[RingElem; 5]) -> Result<Matrix2, FamilyError> {
    let z5 = &z[4];
    if z5.is_zero() {
        return Ok(Matrix2::identity(ring));
    }
    let one = ring.one();
    let x = [
        ring.add(&one, &ring.mul(z5, &z[0])),
        ring.mul(z5, &z[1]),
        ring.mul(z5, &z[2]),
        ring.add(&one, &ring.mul(z5, &z[3])),
    ];
    let w = wfam_eval(ring, &x);
    let c = ring
        .div_exact(&w.c, z5)
        .map_err(|_| FamilyError::MagicNotIntegral)?;
    Ok(Matrix2::new(
        w.a,
        ring.mul(z5, &w.b),
        c,
        w.d,
    ))
}

/// An ordered factor word claiming a product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub ring: RingDesc,
    pub target: Matrix2,
    pub factors: Vec<Factor>,
}

/// Exact left-to-right product of the factor word.
pub fn eval_certificate(c: &Certificate) -> Result<Matrix2, FamilyError> {
    let mut acc = Matrix2::identity(&c.ring);
    for f in &c.factors {
        acc = acc.mul(&c.ring, &eval_factor(&c.ring, f)?);
    }
    Ok(acc)
}

/// Outcome of verification: the product matched, or the first differing
/// entry (1-indexed row, column) with the two values, or a malformed factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyOutcome {
    Ok,
    Mismatch(MismatchReport),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MismatchReport {
    Product {
        entry: (usize, usize),
        expected: RingElem,
        got: RingElem,
    },
    BadFactor {
        index: usize,
        reason: String,
    },
}

impl std::fmt::Display for MismatchReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MismatchReport::Product {
                entry,
                expected,
                got,
            } => write!(
                f,
                "product differs from target at entry ({}, {}): expected {}, got {}",
                entry.0, entry.1, expected, got
            ),
            MismatchReport::BadFactor { index, reason } => {
                write!(f, "factor {} is malformed: {}", index, reason)
            }
        }
    }
}

/// Ok iff the factor product equals the target exactly and every factor is
/// well-formed.
pub fn verify_certificate(c: &Certificate) -> VerifyOutcome {
    let mut acc = Matrix2::identity(&c.ring);
    for (i, f) in c.factors.iter().enumerate() {
        match eval_factor(&c.ring, f) {
            Ok(m) => {
                if !m.det(&c.ring).is_one() {
                    return VerifyOutcome::Mismatch(MismatchReport::BadFactor {
                        index: i,
                        reason: "determinant is not 1".into(),
                    });
                }
                acc = acc.mul(&c.ring, &m);
            }
            Err(err) => {
                return VerifyOutcome::Mismatch(MismatchReport::BadFactor {
                    index: i,
                    reason: err.to_string(),
                })
            }
        }
    }
    let got = [
        [&acc.a, &acc.b],
        [&acc.c, &acc.d],
    ];
    let want = [
        [&c.target.a, &c.target.b],
        [&c.target.c, &c.target.d],
    ];
    for r in 0..2 {
        for col in 0..2 {
            if got[r][col] != want[r][col] {
                return VerifyOutcome::Mismatch(MismatchReport::Product {
                    entry: (r + 1, col + 1),
                    expected: want[r][col].clone(),
                    got: got[r][col].clone(),
                });
            }
        }
    }
    VerifyOutcome::Ok
}

// ---------------------------------------------------------------------------
// JSON schema (bit-exact; all integers as decimal strings)
// ---------------------------------------------------------------------------

fn elem_to_wire(e: &RingElem) -> [String; 2] {
    [e.x.to_string(), e.y.to_string()]
}

fn elem_from_wire(w: &[String; 2]) -> Result<RingElem, String> {
    let parse = |s: &str| {
        BigInt::parse_bytes(s.as_bytes(), 10).ok_or_else(|| format!("bad integer string {s:?}"))
    };
    Ok(RingElem::new(parse(&w[0])?, parse(&w[1])?))
}

fn matrix_to_wire(m: &Matrix2) -> [[[String; 2]; 2]; 2] {
    [
        [elem_to_wire(&m.a), elem_to_wire(&m.b)],
        [elem_to_wire(&m.c), elem_to_wire(&m.d)],
    ]
}

fn matrix_from_wire(w: &[[[String; 2]; 2]; 2]) -> Result<Matrix2, String> {
    Ok(Matrix2::new(
        elem_from_wire(&w[0][0])?,
        elem_from_wire(&w[0][1])?,
        elem_from_wire(&w[1][0])?,
        elem_from_wire(&w[1][1])?,
    ))
}

#[derive(Serialize, Deserialize)]
struct WireRing {
    d: i64,
}

#[derive(Serialize, Deserialize)]
struct WireFactor {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<Vec<[String; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<[[String; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inverse: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    origin: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct WireCertificate {
    ring: WireRing,
    target: [[[String; 2]; 2]; 2],
    factors: Vec<WireFactor>,
}

impl Serialize for Certificate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let factors = self
            .factors
            .iter()
            .map(|f| {
                let (family, params, matrix) = match &f.family {
                    Family::E12(r) => ("E12", Some(vec![elem_to_wire(r)]), None),
                    Family::E21(r) => ("E21", Some(vec![elem_to_wire(r)]), None),
                    Family::Zword(m) => (
                        "ZWORD",
                        None,
                        Some([
                            [m.rows[0][0].to_string(), m.rows[0][1].to_string()],
                            [m.rows[1][0].to_string(), m.rows[1][1].to_string()],
                        ]),
                    ),
                    Family::Magic(z) => ("MAGIC", Some(z.iter().map(elem_to_wire).collect()), None),
                };
                WireFactor {
                    family: family.to_string(),
                    params,
                    matrix,
                    inverse: if f.inverse { Some(true) } else { None },
                    origin: f.origin.clone(),
                }
            })
            .collect();
        WireCertificate {
            ring: WireRing { d: self.ring.d() },
            target: matrix_to_wire(&self.target),
            factors,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Certificate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = WireCertificate::deserialize(d)?;
        let ring = RingDesc::new(wire.ring.d).map_err(D::Error::custom)?;
        let target = matrix_from_wire(&wire.target).map_err(D::Error::custom)?;
        let mut factors = Vec::with_capacity(wire.factors.len());
        for (i, wf) in wire.factors.iter().enumerate() {
            let family = match wf.family.as_str() {
                "E12" | "E21" => {
                    let params = wf
                        .params
                        .as_ref()
                        .filter(|p| p.len() == 1)
                        .ok_or_else(|| {
                            D::Error::custom(format!("factor {i}: expected 1 parameter"))
                        })?;
                    let r = elem_from_wire(&params[0]).map_err(D::Error::custom)?;
                    if wf.family == "E12" {
                        Family::E12(r)
                    } else {
                        Family::E21(r)
                    }
                }
                "ZWORD" => {
                    let m = wf.matrix.as_ref().ok_or_else(|| {
                        D::Error::custom(format!("factor {i}: ZWORD requires a matrix"))
                    })?;
                    let parse = |s: &String| {
                        BigInt::parse_bytes(s.as_bytes(), 10)
                            .ok_or_else(|| D::Error::custom(format!("bad integer {s:?}")))
                    };
                    Family::Zword(IntMat2 {
                        rows: [
                            [parse(&m[0][0])?, parse(&m[0][1])?],
                            [parse(&m[1][0])?, parse(&m[1][1])?],
                        ],
                    })
                }
                "MAGIC" => {
                    let params = wf
                        .params
                        .as_ref()
                        .filter(|p| p.len() == 5)
                        .ok_or_else(|| {
                            D::Error::custom(format!("factor {i}: expected 5 parameters"))
                        })?;
                    let mut z: Vec<RingElem> = Vec::with_capacity(5);
                    for p in params {
                        z.push(elem_from_wire(p).map_err(D::Error::custom)?);
                    }
                    Family::Magic(z.try_into().expect("length checked"))
                }
                other => {
                    return Err(D::Error::custom(format!(
                        "factor {i}: unknown family {other:?}"
                    )))
                }
            };
            factors.push(Factor {
                family,
                inverse: wf.inverse.unwrap_or(false),
                origin: wf.origin.clone(),
            });
        }
        Ok(Certificate {
            ring,
            target,
            factors,
        })
    }
}

/// Wire form of a bare matrix (the `--matrix` input format of the CLI).
pub fn matrix_to_json(m: &Matrix2) -> serde_json::Value {
    serde_json::to_value(matrix_to_wire(m)).expect("matrix serialization")
}

pub fn matrix_from_json(v: &serde_json::Value) -> Result<Matrix2, String> {
    let wire: [[[String; 2]; 2]; 2] =
        serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
    matrix_from_wire(&wire)
}
