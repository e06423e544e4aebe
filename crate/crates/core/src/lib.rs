//! Exact factorization of SL2 over the ring of integers of an imaginary
//! quadratic field into bounded words of factors from a fixed registry of
//! polynomial matrix families, with machine-checkable certificates.
//!
//! The crate is organized as:
//! - [`ring`]: arbitrary-precision arithmetic in O_d, residue rings, Bezout
//!   solving, CRT, and principal-generator extraction.
//! - [`primes`]: primality and factorization of ring elements, prime
//!   searches in arithmetic progressions, residue-field root extraction,
//!   and tame Hilbert symbols.
//! - [`sl2`]: exact 2x2 matrix algebra and the trace-recurrence machinery.
//! - [`families`]: the registry of bounded matrix families, the certificate
//!   data model, and the verifier.
//! - [`reduce`]: the equivalence-chain engine that factors a matrix into a
//!   flat certificate.
//! - [`wordgen`]: seeded generation of determinant-1 test matrices as
//!   bounded words of elementary factors.

pub mod families;
mod intmat;
pub mod primes;
pub mod reduce;
pub mod ring;
pub mod sl2;
pub mod wordgen;
