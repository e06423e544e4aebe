//! The equivalence-chain engine: executes size reduction and the proof
//! chains on a primitive row while accumulating left/right registry factor
//! words, then unwinds everything into a flat certificate for a full
//! determinant-1 matrix.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::HashSet;
use thiserror::Error;

use crate::families::{
    eval_factor, verify_certificate, Certificate, Factor, FamilyError, IntMat2, VerifyOutcome,
};
use crate::primes::{
    epsilon, factor_integer, is_prime_elem, mth_power_residue, mth_root_mod,
    PrimeConstraints, PrimeProgression, PrimesError,
};
use crate::ring::{ResidueRing, RingDesc, RingElem, RingError};
use crate::sl2::{
    complete_row, power_first_row, row_fixup, trace_is_degenerate, vw_split, Matrix2, Sl2Error,
};

#[derive(Debug, Error, Clone)]
pub enum ReduceError {
    #[error("input matrix does not have determinant 1")]
    NotUnimodular,
    #[error("pair is not primitive")]
    NotPrimitive,
    #[error("required exponent {0} exceeds the configured budget")]
    ExponentBudget(u64),
    #[error("no admissible companion prime found within the search window")]
    CompanionExhausted,
    #[error("degenerate trace persisted through all retries")]
    DegenerateTrace,
    #[error("assembled certificate failed verification: {0} (internal bug)")]
    VerificationFailed(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Primes(#[from] PrimesError),
    #[error(transparent)]
    Sl2(#[from] Sl2Error),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// Search budgets, pseudoprime rounds, candidate windows, retry limits, and
/// the RNG seed used by callers that generate inputs. All pipeline steps
/// are deterministic given a fixed config.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub search_budget: u64,
    pub pseudoprime_rounds: u32,
    pub epsilon_window: usize,
    pub retry_limit: u32,
    pub seed: u64,
    /// Node cap for the stall-escape search during size reduction.
    pub descent_node_cap: usize,
    /// Largest exponent t the power chains may be asked to expand.
    pub max_exponent: u64,
    /// Size cap for direct unit-group exponent computation.
    pub epsilon_brute_cap: u64,
    /// Size reduction stops once both coordinate norms are at most this,
    /// handing the pair to the power pipeline while it is cheap; 0 reduces
    /// as far as the moves allow.
    pub descent_stop_norm: u64,
    /// Cap on (exponent) x (decimal digits of the trace) for a power
    /// chain, an estimate of the largest integers the chain will carry.
    pub max_chain_digits: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            search_budget: 200_000,
            pseudoprime_rounds: 40,
            epsilon_window: 8,
            retry_limit: 8,
            seed: 0,
            descent_node_cap: 20_000,
            max_exponent: 2_000,
            epsilon_brute_cap: 1_000_000,
            descent_stop_norm: 60,
            max_chain_digits: 150,
        }
    }
}

/// Counters reported per factorization run.
#[derive(Debug, Clone, Default)]
pub struct RunStats {
    /// Total progression candidates examined across all searches.
    pub trials: u64,
    /// Largest power-chain exponent expanded.
    pub max_exponent: u64,
    /// Cofactor reductions executed.
    pub reduce_b_calls: u64,
    /// Root extractions: (prime q, prime p, candidates discarded before the
    /// extraction succeeded).
    pub root_events: Vec<(RingElem, RingElem, u32)>,
}

impl RunStats {
    fn absorb(&mut self, other: RunStats) {
        self.trials += other.trials;
        self.max_exponent = self.max_exponent.max(other.max_exponent);
        self.reduce_b_calls += other.reduce_b_calls;
        self.root_events.extend(other.root_events);
    }
}

#[derive(Debug, Clone)]
struct Step {
    left: Vec<Factor>,
    right: Vec<Factor>,
    matrix_after: Matrix2,
}

/// A primitive row, a completing matrix, and the accumulated left/right
/// factor words relating it to the pipeline start: at every step,
/// `matrix = (product of all left words) * start_matrix * (product of all
/// right words)` exactly, and the tracked pair is the matrix first row.
#[derive(Debug, Clone)]
pub struct PairState {
    pub ring: RingDesc,
    start_matrix: Matrix2,
    matrix: Matrix2,
    steps: Vec<Step>,
    pub cfg: PipelineConfig,
    pub stats: RunStats,
}

impl PairState {
    pub fn from_pair(
        ring: RingDesc,
        a: &RingElem,
        b: &RingElem,
        cfg: PipelineConfig,
    ) -> Result<Self, ReduceError> {
        let m = complete_row(&ring, a, b).map_err(|_| ReduceError::NotPrimitive)?;
        Ok(PairState {
            ring,
            start_matrix: m.clone(),
            matrix: m,
            steps: Vec::new(),
            cfg,
            stats: RunStats::default(),
        })
    }

    fn from_matrix(ring: RingDesc, m: Matrix2, cfg: PipelineConfig) -> Self {
        PairState {
            ring,
            start_matrix: m.clone(),
            matrix: m,
            steps: Vec::new(),
            cfg,
            stats: RunStats::default(),
        }
    }

    pub fn pair(&self) -> (RingElem, RingElem) {
        self.matrix.first_row()
    }

    pub fn matrix(&self) -> &Matrix2 {
        &self.matrix
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn factor_count(&self) -> usize {
        self.steps
            .iter()
            .map(|s| s.left.len() + s.right.len())
            .sum()
    }

    /// Apply one step: matrix := (prod left) * matrix * (prod right).
    /// Identity factors are elided from the record.
    fn apply_step(&mut self, left: Vec<Factor>, right: Vec<Factor>) -> Result<(), ReduceError> {
        let mut kept_left = Vec::with_capacity(left.len());
        let mut lm = Matrix2::identity(&self.ring);
        for f in left {
            let m = eval_factor(&self.ring, &f)?;
            if m.is_identity() {
                continue;
            }
            lm = lm.mul(&self.ring, &m);
            kept_left.push(f);
        }
        let mut kept_right = Vec::with_capacity(right.len());
        let mut rm = Matrix2::identity(&self.ring);
        for f in right {
            let m = eval_factor(&self.ring, &f)?;
            if m.is_identity() {
                continue;
            }
            rm = rm.mul(&self.ring, &m);
            kept_right.push(f);
        }
        if kept_left.is_empty() && kept_right.is_empty() {
            return Ok(());
        }
        self.matrix = lm.mul(&self.ring, &self.matrix).mul(&self.ring, &rm);
        debug_assert!(self.matrix.det(&self.ring).is_one());
        debug_assert!(
            self.ring
                .is_primitive_pair(&self.matrix.a, &self.matrix.b),
            "step broke primitivity"
        );
        self.steps.push(Step {
            left: kept_left,
            right: kept_right,
            matrix_after: self.matrix.clone(),
        });
        Ok(())
    }

    /// Soundness: every step record satisfies
    /// matrix_after = (prod left) * matrix_before * (prod right) exactly.
    pub fn verify_steps(&self) -> Result<(), ReduceError> {
        let mut cur = self.start_matrix.clone();
        for (i, s) in self.steps.iter().enumerate() {
            let mut lm = Matrix2::identity(&self.ring);
            for f in &s.left {
                lm = lm.mul(&self.ring, &eval_factor(&self.ring, f)?);
            }
            let mut rm = Matrix2::identity(&self.ring);
            for f in &s.right {
                rm = rm.mul(&self.ring, &eval_factor(&self.ring, f)?);
            }
            cur = lm.mul(&self.ring, &cur).mul(&self.ring, &rm);
            if cur != s.matrix_after {
                return Err(ReduceError::VerificationFailed(format!(
                    "step {i} does not reproduce its recorded matrix"
                )));
            }
        }
        Ok(())
    }

    /// Total accumulated words: matrix = eval(left) * start * eval(right).
    fn total_words(&self) -> (Vec<Factor>, Vec<Factor>) {
        let mut left = Vec::new();
        for s in self.steps.iter().rev() {
            left.extend(s.left.iter().cloned());
        }
        let mut right = Vec::new();
        for s in &self.steps {
            right.extend(s.right.iter().cloned());
        }
        (left, right)
    }

    fn invert_word(&self, word: &[Factor]) -> Vec<Factor> {
        word.iter().rev().map(|f| f.inverted(&self.ring)).collect()
    }

    /// Replace the state by the source of a forward chain: given a
    /// procedure that maps a fresh state at `target_pair` onto the current
    /// pair, splice the inverted word so this state lands on `target_pair`.
    fn run_reversed<F>(
        &mut self,
        target_pair: (RingElem, RingElem),
        origin: &str,
        forward: F,
    ) -> Result<(), ReduceError>
    where
        F: FnOnce(&mut PairState) -> Result<(), ReduceError>,
    {
        let mut scratch = PairState::from_pair(
            self.ring,
            &target_pair.0,
            &target_pair.1,
            self.cfg.clone(),
        )?;
        forward(&mut scratch)?;
        assert_eq!(
            scratch.pair(),
            self.pair(),
            "reversed chain must land on the current pair"
        );
        let r = row_fixup(&self.ring, &scratch.matrix, &self.matrix)?;
        let (fl, fr) = scratch.total_words();
        let mut left = self.invert_word(&fl);
        if !r.is_zero() {
            left.push(Factor::e21(self.ring.neg(&r)).with_origin(origin));
        }
        let right = self.invert_word(&fr);
        let expect = scratch.start_matrix.clone();
        self.stats.absorb(scratch.stats);
        self.apply_step(left, right)?;
        debug_assert_eq!(self.matrix, expect);
        Ok(())
    }

    /// Assemble the flat certificate for `target`, whose first row must be
    /// the row this state started from. Requires the terminal pair (1, 0).
    pub fn into_certificate(self, target: &Matrix2) -> Result<Certificate, ReduceError> {
        let (one_, zero_) = self.pair();
        assert!(one_.is_one() && zero_.is_zero(), "terminal pair must be (1, 0)");
        self.verify_steps()?;
        let ring = self.ring;
        let r0 = row_fixup(&ring, &self.start_matrix, target)?;
        let (left, right) = self.total_words();
        let c_term = self.matrix.c.clone();
        let mut factors = Vec::new();
        if !r0.is_zero() {
            factors.push(Factor::e21(r0).with_origin("row-fixup"));
        }
        factors.extend(self.invert_word(&left));
        if !c_term.is_zero() {
            factors.push(Factor::e21(c_term).with_origin("terminal"));
        }
        factors.extend(self.invert_word(&right));
        let cert = Certificate {
            ring,
            target: target.clone(),
            factors,
        };
        match verify_certificate(&cert) {
            VerifyOutcome::Ok => Ok(cert),
            VerifyOutcome::Mismatch(rep) => Err(ReduceError::VerificationFailed(rep.to_string())),
        }
    }
}

// ---------------------------------------------------------------------------
// Elementary moves
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    First,
    Second,
}

/// Shift one coordinate by a multiple of the other; the defining moves of
/// the pair equivalence. First: (a, b) -> (a + b t, b) via E21(t);
/// second: (a, b) -> (a, b + a t) via E12(t).
pub fn pair_shift(st: &mut PairState, which: Coord, t: &RingElem) -> Result<(), ReduceError> {
    if t.is_zero() {
        return Ok(());
    }
    let f = match which {
        Coord::First => Factor::e21(t.clone()),
        Coord::Second => Factor::e12(t.clone()),
    };
    st.apply_step(vec![], vec![f])
}

fn zword_right(st: &mut PairState, m: IntMat2, origin: &str) -> Result<(), ReduceError> {
    st.apply_step(vec![], vec![Factor::zword(m).with_origin(origin)])
}

// ---------------------------------------------------------------------------
// Square reduction
// ---------------------------------------------------------------------------

/// On a state with pair (1 + a b, b^2 c), land on (1 + a b, c). The caller
/// supplies the witnesses (a, b, c); the step solves the determinant
/// constraint for the two free parameters, rewrites the state matrix as the
/// first constrained-family matrix by a row fixup, and converts it to the
/// transposed second one whose first row drops the square.
pub fn reduce_square(
    st: &mut PairState,
    a: &RingElem,
    b: &RingElem,
    c: &RingElem,
) -> Result<(), ReduceError> {
    let ring = st.ring;
    let one = ring.one();
    let p = ring.add(&one, &ring.mul(a, b));
    let bsq_c = ring.mul(&ring.mul(b, b), c);
    assert_eq!(st.pair(), (p.clone(), bsq_c.clone()), "witness mismatch");

    if ring.is_unit(&p) {
        // (u, b^2 c) -> (u, c) with one shift.
        let t = ring.mul(&ring.unit_inv(&p), &ring.sub(c, &bsq_c));
        pair_shift(st, Coord::Second, &t)?;
        return Ok(());
    }

    let rr = ResidueRing::new(ring, p.clone());
    let bc = ring.mul(b, c);
    let z3 = rr.mul(&rr.invert(&bc)?, a);
    let z4 = ring.div_exact(&ring.sub(&ring.mul(&bc, &z3), a), &p)?;
    // z1 + z4 + z5 (z1 z4 - z2 z3) = 0 holds exactly by construction.
    let z = [a.clone(), c.clone(), z3.clone(), z4.clone(), b.clone()];
    let constraint = ring.add(
        &ring.add(&z[0], &z[3]),
        &ring.mul(&z[4], &ring.sub(&ring.mul(&z[0], &z[3]), &ring.mul(&z[1], &z[2]))),
    );
    assert!(constraint.is_zero(), "determinant constraint must vanish");

    let g1 = Matrix2::new(
        p.clone(),
        bsq_c,
        z3,
        ring.add(&one, &ring.mul(b, &z4)),
    );
    debug_assert!(g1.det(&ring).is_one());
    let r = row_fixup(&ring, &st.matrix, &g1)?;
    if !r.is_zero() {
        st.apply_step(
            vec![Factor::e21(r).with_origin("square-reduction")],
            vec![],
        )?;
    }
    st.apply_step(
        vec![
            Factor::zword(IntMat2::j_inv()).with_origin("square-reduction"),
            Factor {
                family: crate::families::Family::Magic(z),
                inverse: true,
                origin: Some("square-reduction".into()),
            },
        ],
        vec![Factor::zword(IntMat2::j()).with_origin("square-reduction")],
    )?;
    assert_eq!(st.pair(), (p, c.clone()), "square reduction landed wrong");
    Ok(())
}

// ---------------------------------------------------------------------------
// Cofactor reduction
// ---------------------------------------------------------------------------

/// On a state with pair (1 + a b, b c), land on (1 + a b, c). Runs the
/// prime-replacement chain: c is replaced by a prime, a by four times a
/// prime, c again by a prime 1 mod 8q, the square root of -a mod p is
/// extracted and verified, the square is dropped, and the replacements are
/// undone.
pub fn reduce_b(
    st: &mut PairState,
    a: &RingElem,
    b: &RingElem,
    c: &RingElem,
) -> Result<(), ReduceError> {
    let ring = st.ring;
    let one = ring.one();
    let p0 = ring.add(&one, &ring.mul(a, b));
    let bc = ring.mul(b, c);
    assert_eq!(st.pair(), (p0.clone(), bc.clone()), "witness mismatch");
    st.stats.reduce_b_calls += 1;

    if ring.is_unit(&p0) {
        let t = ring.mul(&ring.unit_inv(&p0), &ring.sub(c, &bc));
        pair_shift(st, Coord::Second, &t)?;
        return Ok(());
    }
    if b.is_one() {
        return Ok(()); // (1 + a, c) already
    }

    let rounds = st.cfg.pseudoprime_rounds;
    let budget = st.cfg.search_budget;
    let two_a = ring.mul(&ring.int(2), a);

    // (i) replace c by a prime c' = c mod (1 + a b), not dividing 2a.
    let cp = if is_prime_elem(&ring, c, rounds).is_prime() && !ring.divides(c, &two_a) {
        c.clone()
    } else {
        let constraints = PrimeConstraints {
            avoid_divisor_of: vec![two_a.clone()],
            ..Default::default()
        };
        let mut it = PrimeProgression::new(ring, c.clone(), p0.clone(), constraints, rounds, budget)?;
        let hit = it.next();
        st.stats.trials += it.trials;
        let (_, q) = hit.ok_or(PrimesError::SearchExhausted {
            what: "prime replacement for the cofactor".into(),
            trials: budget,
        })?;
        q
    };
    let d1 = ring.div_exact(&ring.sub(&cp, c), &p0)?;
    pair_shift(st, Coord::Second, &ring.mul(b, &d1))?;

    // (ii) replace a by 4*q with q prime of odd residue characteristic:
    // e = -a c'^{-1} mod 4, q = (a + c' e)/4.
    let four = ring.int(4);
    let rr4 = ResidueRing::new(ring, four.clone());
    let e0 = rr4.mul(&rr4.invert(&cp)?, &ring.neg(a));
    let base = ring.div_exact(&ring.add(a, &ring.mul(&cp, &e0)), &four)?;
    let constraints = PrimeConstraints {
        norm_coprime_to: Some(BigInt::from(2)),
        ..Default::default()
    };
    let mut it = PrimeProgression::new(ring, base, cp.clone(), constraints, rounds, budget)?;
    let hit = it.next();
    st.stats.trials += it.trials;
    let (k, qt) = hit.ok_or(PrimesError::SearchExhausted {
        what: "prime quarter of the replaced first witness".into(),
        trials: budget,
    })?;
    let e = ring.add(&e0, &ring.mul(&four, &k));
    let big_a = ring.mul(&four, &qt);
    debug_assert_eq!(big_a, ring.add(a, &ring.mul(&cp, &e)));
    pair_shift(st, Coord::First, &e)?;
    let p1 = ring.add(&one, &ring.mul(&big_a, b));
    debug_assert_eq!(st.pair().0, p1);

    // (iii) prime p = c' mod (1 + A b), p = 1 mod 8q; retry until -A is a
    // square mod p.
    let eight_q = ring.mul(&ring.int(8), &qt);
    let x0 = ring.crt_pair(&p1, &cp, &eight_q, &one)?;
    let modulus = ring.mul(&p1, &eight_q);
    let mut it = PrimeProgression::new(
        ring,
        x0,
        modulus,
        PrimeConstraints::default(),
        rounds,
        budget,
    )?;
    let neg_a = ring.neg(&big_a);
    let mut found: Option<(RingElem, RingElem)> = None;
    let mut retries = 0u32;
    while retries <= st.cfg.retry_limit {
        let Some((_, p)) = it.next() else { break };
        if mth_power_residue(&ring, &neg_a, &p, 2, rounds)? {
            let r = mth_root_mod(&ring, &neg_a, &p, 2, rounds)?;
            found = Some((p, r));
            break;
        }
        retries += 1;
    }
    st.stats.trials += it.trials;
    st.stats.root_events.push((
        qt.clone(),
        found.as_ref().map(|(p, _)| p.clone()).unwrap_or_else(|| ring.zero()),
        retries,
    ));
    let (p, r) = found.ok_or(PrimesError::NotResidue)?;
    let f = ring.div_exact(&ring.sub(&p, &cp), &p1)?;
    pair_shift(st, Coord::Second, &ring.mul(b, &f))?;

    // (iv) A = -r^2 mod p: move the first coordinate onto 1 - r^2 b.
    let r_sq = ring.mul(&r, &r);
    let t4 = ring.neg(&ring.div_exact(&ring.add(&big_a, &r_sq), &p)?);
    pair_shift(st, Coord::First, &t4)?;
    debug_assert_eq!(st.pair().0, ring.sub(&one, &ring.mul(&r_sq, b)));

    // (v) expose the square: second coordinate r^2 b^2 p.
    pair_shift(st, Coord::Second, &ring.neg(&ring.mul(b, &p)))?;

    // (vi) drop it.
    reduce_square(st, &ring.neg(&r), &ring.mul(&r, b), &p)?;

    // (vii)..(x) undo the replacements.
    pair_shift(st, Coord::First, &ring.div_exact(&ring.mul(b, &ring.add(&big_a, &r_sq)), &p)?)?;
    pair_shift(st, Coord::Second, &ring.neg(&f))?;
    pair_shift(st, Coord::First, &ring.neg(&ring.mul(b, &e)))?;
    pair_shift(st, Coord::Second, &ring.neg(&d1))?;

    assert_eq!(st.pair(), (p0, c.clone()), "cofactor reduction landed wrong");
    Ok(())
}

// ---------------------------------------------------------------------------
// Power chains
// ---------------------------------------------------------------------------

/// On a state with pair (a^n, b) where alpha has first row (a, b) and
/// determinant 1, land on the first row (a_n, b_n) of alpha^n.
pub fn reduce_power(st: &mut PairState, alpha: &Matrix2, n: u64) -> Result<(), ReduceError> {
    let ring = st.ring;
    assert!(n >= 1);
    assert!(alpha.det(&ring).is_one());
    let a = &alpha.a;
    let b = &alpha.b;
    let a_pow = ring.pow(a, n);
    assert_eq!(st.pair(), (a_pow.clone(), b.clone()), "pair/alpha mismatch");
    if n == 1 {
        return Ok(());
    }
    st.stats.max_exponent = st.stats.max_exponent.max(n);
    let (an, bn, _un, _unm1) = power_first_row(&ring, alpha, n);

    // a_n = a^n mod b always; align the first coordinate.
    if an != a_pow {
        let t = ring.div_exact(&ring.sub(&an, &a_pow), b)?;
        pair_shift(st, Coord::First, &t)?;
    }
    if ring.is_unit(&an) {
        let t = ring.mul(&ring.unit_inv(&an), &ring.sub(&bn, b));
        pair_shift(st, Coord::Second, &t)?;
        assert_eq!(st.pair(), (an, bn));
        return Ok(());
    }

    let tau = alpha.trace(&ring);
    if trace_is_degenerate(&tau) {
        return Err(ReduceError::DegenerateTrace);
    }
    if n.saturating_mul(digits10(&tau)) > st.cfg.max_chain_digits {
        return Err(ReduceError::ExponentBudget(n));
    }
    let (v, w) = vw_split(&ring, &tau, n)?;

    // (a_n, b) ~ (-a_n, -b) ~ (-a_n, -b v) ~ (a_n, b v) ~ (a_n, b v w).
    zword_right(st, IntMat2::neg_identity(), "power-chain")?;
    let s_prime = ring.div_exact(&ring.sub(&ring.neg(&an), &ring.one()), &v)?;
    let neg_b = ring.neg(b);
    let target = (ring.neg(&an), ring.mul(&v, &neg_b));
    let (sp, vv, nb) = (s_prime.clone(), v.clone(), neg_b.clone());
    st.run_reversed(target, "power-chain", move |scr| reduce_b(scr, &sp, &vv, &nb))?;

    zword_right(st, IntMat2::neg_identity(), "power-chain")?;
    let s = ring.div_exact(&ring.sub(&an, &ring.one()), &w)?;
    let bv = ring.mul(b, &v);
    let target = (an.clone(), ring.mul(&bv, &w));
    let (ss, ww, bvv) = (s.clone(), w.clone(), bv.clone());
    st.run_reversed(target, "power-chain", move |scr| reduce_b(scr, &ss, &ww, &bvv))?;

    assert_eq!(st.pair(), (an, bn), "power chain landed wrong");
    Ok(())
}

// ---------------------------------------------------------------------------
// Companion prime search
// ---------------------------------------------------------------------------

/// Primes c with b*c = u mod (aa) and gcd(eps(b), eps(c)) = m * gamma,
/// ranked by the exponent t they would force in the power chains (then by
/// canonical order). At most `window` qualifying candidates are collected.
pub fn companion_prime_candidates(
    ring: &RingDesc,
    aa: &RingElem,
    b: &RingElem,
    u: &RingElem,
    gamma_target: u64,
    cfg: &PipelineConfig,
    stats: &mut RunStats,
) -> Result<Vec<RingElem>, ReduceError> {
    let m = BigInt::from(ring.unit_count());
    let kind = is_prime_elem(ring, b, cfg.pseudoprime_rounds);
    let p = kind.residue_char().ok_or(ReduceError::NotPrimitive)?;
    assert!(p.gcd(&m).is_one(), "residue characteristic must be prime to m");
    let eps_b = epsilon(ring, b, cfg.pseudoprime_rounds, cfg.epsilon_brute_cap)?;
    let rr = ResidueRing::new(*ring, aa.clone());
    let c0 = rr.mul(&rr.invert(b)?, u);
    let g_target = &m * gamma_target;
    let mut it = PrimeProgression::new(
        *ring,
        c0,
        aa.clone(),
        PrimeConstraints::default(),
        cfg.pseudoprime_rounds,
        cfg.search_budget,
    )?;
    let mut hits: Vec<(BigInt, RingElem)> = Vec::new();
    for (_, c) in it.by_ref() {
        if ring.is_unit(&c) {
            continue;
        }
        let eps_c = epsilon(ring, &c, cfg.pseudoprime_rounds, cfg.epsilon_brute_cap)?;
        if eps_b.gcd(&eps_c) != g_target {
            continue;
        }
        let t = minimal_exponent(&eps_b, &eps_c, &g_target);
        hits.push((t, c));
        if hits.len() >= cfg.epsilon_window {
            break;
        }
    }
    stats.trials += it.trials;
    if hits.is_empty() {
        return Err(ReduceError::CompanionExhausted);
    }
    hits.sort_by(|x, y| x.0.cmp(&y.0).then_with(|| ring.cmp_canonical(&x.1, &y.1)));
    Ok(hits.into_iter().map(|(_, c)| c).collect())
}

/// The first-ranked companion prime (postconditions asserted: congruence
/// and exponent gcd).
pub fn companion_prime_search(
    ring: &RingDesc,
    aa: &RingElem,
    b: &RingElem,
    u: &RingElem,
    gamma_target: u64,
    cfg: &PipelineConfig,
    stats: &mut RunStats,
) -> Result<RingElem, ReduceError> {
    let c = companion_prime_candidates(ring, aa, b, u, gamma_target, cfg, stats)?
        .into_iter()
        .next()
        .expect("nonempty candidate list");
    let rr = ResidueRing::new(*ring, aa.clone());
    assert!(rr.eq_mod(&ring.mul(b, &c), u), "companion congruence");
    let eps_b = epsilon(ring, b, cfg.pseudoprime_rounds, cfg.epsilon_brute_cap)?;
    let eps_c = epsilon(ring, &c, cfg.pseudoprime_rounds, cfg.epsilon_brute_cap)?;
    assert_eq!(
        eps_b.gcd(&eps_c),
        BigInt::from(ring.unit_count()) * gamma_target,
        "companion exponent gcd"
    );
    Ok(c)
}

/// Decimal digit estimate of the larger coordinate, used to bound the
/// integer sizes a power chain of a given exponent will produce.
fn digits10(e: &RingElem) -> u64 {
    let bits = e.x.bits().max(e.y.bits()).max(1);
    bits * 302 / 1000 + 1
}

/// Minimal t > g with eps_b | t and t = g mod eps_c, where g = m*gamma =
/// gcd(eps_b, eps_c); s = t - g is then positive and divisible by eps_c.
fn minimal_exponent(eps_b: &BigInt, eps_c: &BigInt, g: &BigInt) -> BigInt {
    let b_red = eps_b / g;
    let c_red = eps_c / g;
    let mut k = if c_red.is_one() {
        BigInt::one()
    } else {
        let e = b_red.extended_gcd(&c_red);
        debug_assert!(e.gcd.is_one());
        let k0 = e.x.mod_floor(&c_red);
        if k0.is_zero() {
            c_red.clone()
        } else {
            k0
        }
    };
    let mut t = &k * eps_b;
    while t <= *g {
        k += &c_red;
        t = &k * eps_b;
    }
    t
}

use num_integer::Integer;

// ---------------------------------------------------------------------------
// The m-th power reduction
// ---------------------------------------------------------------------------

/// Word for alpha^n built on a fresh chain from (1, 0):
/// (1,0) -> (1, b) -> (a^n, b) -> first row of alpha^n -> fixup. Returns the
/// factor word whose product is exactly alpha^n.
fn power_word(
    parent: &mut PairState,
    alpha: &Matrix2,
    n: u64,
    origin: &str,
) -> Result<Vec<Factor>, ReduceError> {
    let ring = parent.ring;
    if n as u64 > parent.cfg.max_exponent {
        return Err(ReduceError::ExponentBudget(n));
    }
    let mut st = PairState::from_pair(ring, &ring.one(), &ring.zero(), parent.cfg.clone())?;
    pair_shift(&mut st, Coord::Second, &alpha.b)?;
    let a_pow = ring.pow(&alpha.a, n);
    let k = ring.div_exact(&ring.sub(&a_pow, &ring.one()), &alpha.b)?;
    pair_shift(&mut st, Coord::First, &k)?;
    reduce_power(&mut st, alpha, n)?;
    let direct = alpha.pow(&ring, n);
    let r = row_fixup(&ring, &st.matrix, &direct)?;
    if !r.is_zero() {
        st.apply_step(vec![Factor::e21(r).with_origin(origin)], vec![])?;
    }
    debug_assert_eq!(st.matrix, direct);
    let (left, right) = st.total_words();
    parent.stats.absorb(st.stats);
    let mut word = left;
    word.extend(right);
    Ok(word)
}

/// Word for alpha^{-n}: alpha^{-n} = J (alpha^T)^n J^{-1}-conjugate via the
/// transpose identity, using the chain for (alpha^T)^n.
fn inverse_power_word(
    parent: &mut PairState,
    alpha: &Matrix2,
    n: u64,
    origin: &str,
) -> Result<Vec<Factor>, ReduceError> {
    let transposed = alpha.transpose();
    let inner = power_word(parent, &transposed, n, origin)?;
    let mut word = vec![Factor::zword(IntMat2::j()).with_origin(origin)];
    word.extend(inner);
    word.push(Factor::zword(IntMat2::j_inv()).with_origin(origin));
    Ok(word)
}

struct Block {
    gamma: u64,
    h: i64,
    n_mat: Matrix2,
}

/// On a state with pair (a^m, b), b prime with residue characteristic
/// coprime to m and the discriminant, land on (1, 0). Class number one
/// collapses to a single block with gamma = 1; in general the ramified
/// primes are covered by a partition of unity over the per-prime gammas.
pub fn reduce_mth(st: &mut PairState, a: &RingElem, b: &RingElem) -> Result<(), ReduceError> {
    let ring = st.ring;
    let m = ring.unit_count() as u64;
    assert!(!a.is_zero() && !b.is_zero());
    let a_pow_m = ring.pow(a, m);
    assert_eq!(st.pair(), (a_pow_m, b.clone()), "pair must be (a^m, b)");
    let kind = is_prime_elem(&ring, b, st.cfg.pseudoprime_rounds);
    let p_b = kind.residue_char().ok_or(ReduceError::NotPrimitive)?.clone();
    assert!(
        p_b.gcd(&(BigInt::from(m) * BigInt::from(ring.disc().abs()))).is_one(),
        "residue characteristic of b must avoid m and the discriminant"
    );

    let blocks = choose_blocks(st, a, b)?;
    // M := the first block's completion of (a, b).
    let m_mat = blocks[0].n_mat.clone();

    // Assemble the word for M^m = prod_i M^{m h_i gamma_i}.
    let mut word_mm: Vec<Factor> = Vec::new();
    for (i, blk) in blocks.iter().enumerate() {
        let eps_b = epsilon(&ring, b, st.cfg.pseudoprime_rounds, st.cfg.epsilon_brute_cap)?;
        let c = &blk.n_mat.c;
        let eps_c = epsilon(&ring, c, st.cfg.pseudoprime_rounds, st.cfg.epsilon_brute_cap)?;
        let g = BigInt::from(m) * blk.gamma;
        debug_assert_eq!(eps_b.gcd(&eps_c), g);
        let t_big = minimal_exponent(&eps_b, &eps_c, &g);
        let s_big = &t_big - &g;
        let t = t_big
            .to_u64()
            .filter(|t| *t <= st.cfg.max_exponent)
            .ok_or_else(|| {
                ReduceError::ExponentBudget(t_big.to_u64().unwrap_or(u64::MAX))
            })?;
        let s = s_big.to_u64().expect("s < t");
        st.stats.max_exponent = st.stats.max_exponent.max(t);

        // N^{m gamma} = N^t * N^{-s}.
        let mut w_block = power_word(st, &blk.n_mat, t, "mth-power")?;
        w_block.extend(inverse_power_word(st, &blk.n_mat, s, "mth-power")?);

        // N^{m gamma h} by |h| concatenations, inverted for negative h.
        let reps = blk.h.unsigned_abs();
        let mut w_pow: Vec<Factor> = Vec::new();
        for _ in 0..reps {
            w_pow.extend(w_block.iter().cloned());
        }
        if blk.h < 0 {
            w_pow = w_pow.iter().rev().map(|f| f.inverted(&ring)).collect();
        }

        if i == 0 {
            word_mm.extend(w_pow);
        } else {
            // Transport the N_i word to an M word through the shared pair
            // (a^K, b), K = m gamma_i |h_i|.
            let k_exp = m
                .checked_mul(blk.gamma)
                .and_then(|x| x.checked_mul(reps as u64))
                .ok_or(ReduceError::ExponentBudget(u64::MAX))?;
            let w_m_abs = transported_power_word(st, &m_mat, &blk.n_mat, k_exp, &w_pow)?;
            if blk.h < 0 {
                word_mm.extend(
                    w_m_abs.iter().rev().map(|f| f.inverted(&ring)),
                );
            } else {
                word_mm.extend(w_m_abs);
            }
        }
    }

    // Transport the state onto M^m, then cancel it with the word.
    reduce_power(st, &m_mat, m)?;
    let direct = m_mat.pow(&ring, m);
    let r = row_fixup(&ring, &st.matrix, &direct)?;
    if !r.is_zero() {
        st.apply_step(vec![Factor::e21(r).with_origin("mth-power")], vec![])?;
    }
    debug_assert_eq!(st.matrix, direct);
    let cancel = st.invert_word(&word_mm);
    st.apply_step(cancel, vec![])?;
    let (p1, p2) = st.pair();
    assert!(p1.is_one() && p2.is_zero(), "m-th power reduction landed wrong");
    Ok(())
}

/// Word for M^K (K = m gamma |h| >= 1) given the word for N^K, by running
/// the power chain between the shared pair (a^K, b) and both matrices.
fn transported_power_word(
    parent: &mut PairState,
    m_mat: &Matrix2,
    n_mat: &Matrix2,
    k_exp: u64,
    word_n_pow: &[Factor],
) -> Result<Vec<Factor>, ReduceError> {
    let ring = parent.ring;
    if k_exp > parent.cfg.max_exponent {
        return Err(ReduceError::ExponentBudget(k_exp));
    }
    // Scratch from M^K: reverse the power chain down to (a^K, b), then run
    // it forward to N^K.
    let mk = m_mat.pow(&ring, k_exp);
    let mut scratch = PairState::from_matrix(ring, mk.clone(), parent.cfg.clone());
    let a_pow = ring.pow(&m_mat.a, k_exp);
    let target = (a_pow, m_mat.b.clone());
    let mm = m_mat.clone();
    scratch.run_reversed(target, "mth-power", move |scr| {
        reduce_power(scr, &mm, k_exp)
    })?;
    reduce_power(&mut scratch, n_mat, k_exp)?;
    let nk = n_mat.pow(&ring, k_exp);
    let r = row_fixup(&ring, &scratch.matrix, &nk)?;
    if !r.is_zero() {
        scratch.apply_step(vec![Factor::e21(r).with_origin("mth-power")], vec![])?;
    }
    // N^K = L * M^K * R, so  word(M^K) = L^-1 word(N^K) R^-1.
    let (l, rgt) = scratch.total_words();
    let mut word = scratch.invert_word(&l);
    word.extend(word_n_pow.iter().cloned());
    word.extend(scratch.invert_word(&rgt));
    parent.stats.absorb(scratch.stats);
    Ok(word)
}

/// Choose the companion blocks. A gamma = 1 companion yields the single
/// block partition h = 1 regardless of how many primes ramify; otherwise
/// one block per ramified prime with a partition of unity over the gammas.
fn choose_blocks(
    st: &mut PairState,
    a: &RingElem,
    b: &RingElem,
) -> Result<Vec<Block>, ReduceError> {
    let ring = st.ring;
    let minus_one = ring.int(-1);
    let mut stats = RunStats::default();

    let pick = |gamma: u64, st: &mut PairState, stats: &mut RunStats| -> Result<Option<Block>, ReduceError> {
        let cands = match companion_prime_candidates(&ring, a, b, &minus_one, gamma, &st.cfg, stats) {
            Ok(c) => c,
            Err(ReduceError::CompanionExhausted) => return Ok(None),
            Err(e) => return Err(e),
        };
        for c in cands {
            let d = match ring.div_exact(
                &ring.add(&ring.one(), &ring.mul(b, &c)),
                a,
            ) {
                Ok(d) => d,
                Err(_) => continue,
            };
            let n_mat = Matrix2::new(a.clone(), b.clone(), c, d);
            debug_assert!(n_mat.det(&ring).is_one());
            if trace_is_degenerate(&n_mat.trace(&ring)) {
                continue;
            }
            return Ok(Some(Block { gamma, h: 1, n_mat }));
        }
        Ok(None)
    };

    // gamma = 1 short-circuit (always available when the class number is 1).
    if let Some(blk) = pick(1, st, &mut stats)? {
        st.stats.absorb(stats);
        return Ok(vec![blk]);
    }

    // General partition: for each ramified prime p_i, a block whose gamma
    // avoids p_i, with all gamma prime divisors ramified.
    let ram: Vec<BigInt> = factor_integer(
        &BigInt::from(ring.disc().abs()),
        st.cfg.pseudoprime_rounds,
    )
    .into_iter()
    .map(|(p, _)| p)
    .collect();
    let mut found: Vec<(u64, Block)> = Vec::new();
    for p_i in &ram {
        let mut block = None;
        'gamma: for gamma in gamma_schedule(&ram, p_i) {
            if let Some(blk) = pick(gamma, st, &mut stats)? {
                block = Some(blk);
                break 'gamma;
            }
        }
        let blk = block.ok_or(ReduceError::CompanionExhausted)?;
        found.push((blk.gamma, blk));
    }
    // Partition of unity: sum h_i gamma_i = 1.
    let gammas: Vec<i64> = found.iter().map(|(g, _)| *g as i64).collect();
    let hs = bezout_many(&gammas).ok_or(ReduceError::CompanionExhausted)?;
    let blocks = found
        .into_iter()
        .zip(hs)
        .map(|((gamma, mut blk), h)| {
            blk.gamma = gamma;
            blk.h = h;
            blk
        })
        .filter(|b| b.h != 0)
        .collect::<Vec<_>>();
    st.stats.absorb(stats);
    if blocks.is_empty() {
        return Err(ReduceError::CompanionExhausted);
    }
    Ok(blocks)
}

/// Candidate gammas for one ramified prime: products of the other ramified
/// primes, small ones first (1 is tried by the caller separately).
fn gamma_schedule(ram: &[BigInt], avoid: &BigInt) -> Vec<u64> {
    let others: Vec<u64> = ram
        .iter()
        .filter(|p| *p != avoid)
        .filter_map(|p| p.to_u64())
        .collect();
    let mut out = vec![1u64];
    for &p in &others {
        let mut next = Vec::new();
        for &g in &out {
            if let Some(gp) = g.checked_mul(p) {
                next.push(gp);
            }
        }
        out.extend(next);
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Integers h_i with sum h_i g_i = gcd(g_1..g_k); None unless the gcd is 1.
fn bezout_many(gs: &[i64]) -> Option<Vec<i64>> {
    let mut acc = 0i64;
    let mut coefs: Vec<i64> = Vec::new();
    for &g in gs {
        if acc == 0 {
            acc = g;
            coefs.push(1);
            continue;
        }
        let e = BigInt::from(acc).extended_gcd(&BigInt::from(g));
        let x = e.x.to_i64()?;
        let y = e.y.to_i64()?;
        for c in coefs.iter_mut() {
            *c *= x;
        }
        coefs.push(y);
        acc = e.gcd.to_i64()?;
    }
    if acc == 1 {
        Some(coefs)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Entering the m-th power form
// ---------------------------------------------------------------------------

/// On a state with primitive pair (s, t), s and t nonzero and s not a unit:
/// find a prime q = t + s n whose residue field order is 1 mod m and prime
/// to m and the discriminant, with s an m-th power residue mod q; extract
/// the root a and land on (a^m, q). Returns (a, q).
pub fn make_mth_power(st: &mut PairState) -> Result<(RingElem, RingElem), ReduceError> {
    let ring = st.ring;
    let (s, t) = st.pair();
    assert!(!s.is_zero() && !t.is_zero(), "coordinates must be nonzero");
    assert!(!ring.is_unit(&s), "first coordinate must not be a unit");
    let m = ring.unit_count() as u64;
    let rounds = st.cfg.pseudoprime_rounds;
    let m_disc = BigInt::from(m) * BigInt::from(ring.disc().abs());
    let constraints = PrimeConstraints {
        char_coprime_to: Some(m_disc),
        ..Default::default()
    };
    let mut it = PrimeProgression::new(
        ring,
        t.clone(),
        s.clone(),
        constraints,
        rounds,
        st.cfg.search_budget,
    )?;
    // Collect a window of admissible primes and keep the one with the
    // smallest residue field: its unit-group exponent drives every chain
    // length downstream.
    let mut window: Vec<(BigInt, RingElem, RingElem)> = Vec::new();
    for (n, q) in it.by_ref() {
        let f = is_prime_elem(&ring, &q, rounds)
            .field_size()
            .expect("progression yields primes");
        if !((&f - 1u32) % m).is_zero() {
            continue;
        }
        if !mth_power_residue(&ring, &s, &q, m, rounds)? {
            continue;
        }
        window.push((f, n, q));
        if window.len() >= st.cfg.epsilon_window {
            break;
        }
    }
    st.stats.trials += it.trials;
    let mut best: Option<(BigInt, RingElem, RingElem)> = None;
    for cand in window {
        match &best {
            Some((f, _, _)) if *f <= cand.0 => {}
            _ => best = Some(cand),
        }
    }
    let (_, n, q) = best.ok_or(PrimesError::SearchExhausted {
        what: "prime progression entry with an m-th power residue".into(),
        trials: st.cfg.search_budget,
    })?;
    let a = mth_root_mod(&ring, &s, &q, m, rounds)?;
    pair_shift(st, Coord::Second, &n)?;
    debug_assert_eq!(st.pair().1, q);
    let a_pow = ring.pow(&a, m);
    let k = ring.div_exact(&ring.sub(&a_pow, &s), &q)?;
    pair_shift(st, Coord::First, &k)?;
    assert_eq!(st.pair(), (a_pow, q.clone()));
    Ok((a, q))
}

// ---------------------------------------------------------------------------
// Degenerate pairs
// ---------------------------------------------------------------------------

/// If a coordinate is zero or a unit, land on (1, 0) by shifts, a swap,
/// and the diagonal-unit word diag(u, u^-1) = E12(u) E21(-u^-1) E12(u) J.
/// Returns false (leaving the state untouched) for non-degenerate pairs.
pub fn normalize_degenerate(st: &mut PairState) -> Result<bool, ReduceError> {
    let ring = st.ring;
    let (p, q) = st.pair();
    let unit_word = |u: &RingElem| -> Vec<Factor> {
        // diag(u^-1, u): sends (u, 0) to (1, 0).
        if u.is_one() {
            return vec![];
        }
        let ui = ring.unit_inv(u);
        if ui == ring.int(-1) {
            return vec![Factor::zword(IntMat2::neg_identity()).with_origin("normalize")];
        }
        vec![
            Factor::e12(ui.clone()).with_origin("normalize"),
            Factor::e21(ring.neg(u)).with_origin("normalize"),
            Factor::e12(ui).with_origin("normalize"),
            Factor::zword(IntMat2::j()).with_origin("normalize"),
        ]
    };
    if ring.is_unit(&p) {
        if !q.is_zero() {
            let t = ring.neg(&ring.mul(&ring.unit_inv(&p), &q));
            pair_shift(st, Coord::Second, &t)?;
        }
        st.apply_step(vec![], unit_word(&p))?;
    } else if ring.is_unit(&q) {
        if !p.is_zero() {
            let t = ring.neg(&ring.mul(&ring.unit_inv(&q), &p));
            pair_shift(st, Coord::First, &t)?;
        }
        zword_right(st, IntMat2::j(), "normalize")?;
        st.apply_step(vec![], unit_word(&q))?;
    } else {
        return Ok(false);
    }
    let (a, b) = st.pair();
    assert!(a.is_one() && b.is_zero(), "normalization landed wrong");
    Ok(true)
}

// ---------------------------------------------------------------------------
// Size reduction (descent)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    ShiftFirst,
    ShiftSecond,
    Swap,
}

/// Virtual descent machine: tracks the pair under shifts and swaps while
/// emitting registry factors with the swaps conjugated away, so a descent
/// of R rounds costs R factors plus one trailing ZWORD.
struct Descent {
    ring: RingDesc,
    p: RingElem,
    q: RingElem,
    parity: u8,
    word: Vec<Factor>,
}

impl Descent {
    fn new(ring: RingDesc, p: RingElem, q: RingElem) -> Self {
        Descent {
            ring,
            p,
            q,
            parity: 0,
            word: Vec::new(),
        }
    }

    fn apply(&mut self, mv: Move, t: &RingElem) {
        match mv {
            Move::Swap => {
                let new_p = std::mem::replace(&mut self.q, self.ring.zero());
                self.q = self.ring.neg(&self.p);
                self.p = new_p;
                self.parity = (self.parity + 1) % 4;
            }
            Move::ShiftSecond => {
                if t.is_zero() {
                    return;
                }
                self.q = self.ring.add(&self.q, &self.ring.mul(&self.p, t));
                let f = if self.parity % 2 == 0 {
                    Factor::e12(t.clone())
                } else {
                    Factor::e21(self.ring.neg(t))
                };
                self.word.push(f.with_origin("descent"));
            }
            Move::ShiftFirst => {
                if t.is_zero() {
                    return;
                }
                self.p = self.ring.add(&self.p, &self.ring.mul(&self.q, t));
                let f = if self.parity % 2 == 0 {
                    Factor::e21(t.clone())
                } else {
                    Factor::e12(self.ring.neg(t))
                };
                self.word.push(f.with_origin("descent"));
            }
        }
    }

    fn finish(mut self) -> (Vec<Factor>, (RingElem, RingElem)) {
        let tail = match self.parity {
            0 => None,
            1 => Some(IntMat2::j()),
            2 => Some(IntMat2::neg_identity()),
            _ => Some(IntMat2::j_inv()),
        };
        if let Some(m) = tail {
            self.word.push(Factor::zword(m).with_origin("descent"));
        }
        (self.word, (self.p, self.q))
    }
}

/// Candidate multipliers t near the rational quotient -num/den that could
/// minimize the shifted coordinate.
fn quotient_candidates(ring: &RingDesc, num: &RingElem, den: &RingElem) -> Vec<RingElem> {
    let n = ring.norm(den);
    let t0 = ring.mul(&ring.neg(num), &ring.conj(den));
    let fx = crate::intmat::div_floor(&t0.x, &n);
    let fy = crate::intmat::div_floor(&t0.y, &n);
    let mut out = Vec::with_capacity(16);
    for dx in -1i64..=2 {
        for dy in -1i64..=2 {
            out.push(RingElem::new(&fx + dx, &fy + dy));
        }
    }
    out
}

fn best_shift(
    ring: &RingDesc,
    keep: &RingElem,
    change: &RingElem,
) -> (RingElem, RingElem, BigInt) {
    // minimize norm(change + keep * t)
    let mut best: Option<(RingElem, RingElem, BigInt)> = None;
    for t in quotient_candidates(ring, change, keep) {
        let v = ring.add(change, &ring.mul(keep, &t));
        let n = ring.norm(&v);
        match &best {
            Some((_, _, bn)) if *bn <= n => {}
            _ => best = Some((t, v, n)),
        }
    }
    best.expect("candidate set is nonempty")
}

fn is_degenerate_pair(ring: &RingDesc, p: &RingElem, q: &RingElem) -> bool {
    p.is_zero() || q.is_zero() || ring.is_unit(p) || ring.is_unit(q)
}

/// Greedy norm descent with a bounded best-first escape search on stalls.
/// Reduces the pair until both norms are at most `stop_norm` (0 = as far
/// as the move set allows); the state afterwards is degenerate, small, or
/// genuinely stuck for the elementary moves.
pub fn descend(st: &mut PairState, stop_norm: u64) -> Result<(), ReduceError> {
    let ring = st.ring;
    let (p0, q0) = st.pair();
    let stop = BigInt::from(stop_norm);
    let mut d = Descent::new(ring, p0, q0);
    let mut rounds = 0u32;
    loop {
        rounds += 1;
        if rounds > 100_000 {
            break;
        }
        if is_degenerate_pair(&ring, &d.p, &d.q) {
            break;
        }
        if stop_norm > 0 && ring.norm(&d.p).max(ring.norm(&d.q)) <= stop {
            break;
        }
        if ring.norm(&d.p) > ring.norm(&d.q) {
            d.apply(Move::Swap, &ring.zero());
            continue;
        }
        let nq = ring.norm(&d.q);
        let (t, _, n_best) = best_shift(&ring, &d.p, &d.q);
        if n_best < nq {
            d.apply(Move::ShiftSecond, &t);
            continue;
        }
        let np = ring.norm(&d.p);
        let (s, _, n_best_p) = best_shift(&ring, &d.q, &d.p);
        if n_best_p < np {
            d.apply(Move::ShiftFirst, &s);
            continue;
        }
        // Stalled: bounded best-first escape.
        match escape_stall(&ring, &d.p, &d.q, st.cfg.descent_node_cap) {
            Some(path) => {
                for (mv, t) in path {
                    d.apply(mv, &t);
                }
            }
            None => break,
        }
    }
    let (word, (p, q)) = d.finish();
    st.apply_step(vec![], word)?;
    debug_assert_eq!(st.pair(), (p, q));
    Ok(())
}

/// Best-first search over shift/swap moves for a state of strictly smaller
/// minimum norm (or a degenerate one). Returns the move path on success.
fn escape_stall(
    ring: &RingDesc,
    p: &RingElem,
    q: &RingElem,
    node_cap: usize,
) -> Option<Vec<(Move, RingElem)>> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(Clone)]
    struct Node {
        p: RingElem,
        q: RingElem,
        parent: usize,
        mv: Option<(Move, RingElem)>,
    }

    let entry_min = ring.norm(p).min(ring.norm(q));
    let mut arena: Vec<Node> = vec![Node {
        p: p.clone(),
        q: q.clone(),
        parent: usize::MAX,
        mv: None,
    }];
    let mut heap: BinaryHeap<(Reverse<BigInt>, usize)> = BinaryHeap::new();
    let mut seen: HashSet<(RingElem, RingElem)> = HashSet::new();
    seen.insert((p.clone(), q.clone()));
    heap.push((Reverse(ring.norm(p) + ring.norm(q)), 0));

    let reconstruct = |arena: &[Node], mut i: usize| {
        let mut path = Vec::new();
        while i != usize::MAX {
            if let Some(mv) = &arena[i].mv {
                path.push(mv.clone());
            }
            i = arena[i].parent;
        }
        path.reverse();
        path
    };

    while let Some((_, idx)) = heap.pop() {
        if arena.len() > node_cap {
            return None;
        }
        let (cp, cq) = (arena[idx].p.clone(), arena[idx].q.clone());
        let mut children: Vec<(Move, RingElem, RingElem, RingElem)> = Vec::new();
        // swap
        children.push((Move::Swap, ring.zero(), cq.clone(), ring.neg(&cp)));
        if !cp.is_zero() {
            for t in quotient_candidates(ring, &cq, &cp) {
                let nq2 = ring.add(&cq, &ring.mul(&cp, &t));
                children.push((Move::ShiftSecond, t, cp.clone(), nq2));
            }
        }
        if !cq.is_zero() {
            for t in quotient_candidates(ring, &cp, &cq) {
                let np2 = ring.add(&cp, &ring.mul(&cq, &t));
                children.push((Move::ShiftFirst, t, np2, cq.clone()));
            }
        }
        for (mv, t, np, nq) in children {
            if !seen.insert((np.clone(), nq.clone())) {
                continue;
            }
            let id = arena.len();
            arena.push(Node {
                p: np.clone(),
                q: nq.clone(),
                parent: idx,
                mv: Some((mv, t)),
            });
            let min_n = ring.norm(&np).min(ring.norm(&nq));
            if is_degenerate_pair(ring, &np, &nq) || min_n < entry_min {
                return Some(reconstruct(&arena, id));
            }
            heap.push((Reverse(ring.norm(&np) + ring.norm(&nq)), id));
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Top-level factorization
// ---------------------------------------------------------------------------

/// The m-th power pipeline on a reduced non-degenerate pair.
fn run_power_pipeline(st: &mut PairState) -> Result<(), ReduceError> {
    // Put the smaller coordinate first: the progression searched by
    // make_mth_power has modulus equal to the first coordinate.
    let ring = st.ring;
    let (p, q) = st.pair();
    if ring.norm(&p) > ring.norm(&q) {
        zword_right(st, IntMat2::j(), "descent")?;
    }
    let (a_root, q) = make_mth_power(st)?;
    reduce_mth(st, &a_root, &q)
}

/// Factor a primitive row down to the terminal pair (1, 0): size reduction
/// down to the configured threshold, then either the degenerate
/// normalization or the m-th power pipeline. If the pipeline fails at the
/// threshold (budget or degenerate-trace exhaustion), the pair is reduced
/// as far as the moves allow and the pipeline is the last resort.
pub fn factorize_row(
    ring: RingDesc,
    a: &RingElem,
    b: &RingElem,
    cfg: PipelineConfig,
) -> Result<PairState, ReduceError> {
    let stop = cfg.descent_stop_norm;
    let mut st = PairState::from_pair(ring, a, b, cfg)?;
    descend(&mut st, stop)?;
    if normalize_degenerate(&mut st)? {
        return Ok(st);
    }
    let mut attempt = st.clone();
    match run_power_pipeline(&mut attempt) {
        Ok(()) => return Ok(attempt),
        Err(ReduceError::VerificationFailed(msg)) => {
            return Err(ReduceError::VerificationFailed(msg))
        }
        Err(_) => {}
    }
    descend(&mut st, 0)?;
    if normalize_degenerate(&mut st)? {
        return Ok(st);
    }
    run_power_pipeline(&mut st)?;
    Ok(st)
}

/// Factor a determinant-1 matrix into a verified flat certificate.
pub fn factorize_matrix(
    ring: RingDesc,
    m: &Matrix2,
    cfg: PipelineConfig,
) -> Result<(Certificate, RunStats), ReduceError> {
    if !m.det(&ring).is_one() {
        return Err(ReduceError::NotUnimodular);
    }
    let (a, b) = m.first_row();
    let st = factorize_row(ring, &a, &b, cfg)?;
    let stats = st.stats.clone();
    let cert = st.into_certificate(m)?;
    Ok((cert, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::ring;

    fn e(x: i64, y: i64) -> RingElem {
        RingElem::from_coords(x, y)
    }

    fn fresh(d: i64, a: (i64, i64), b: (i64, i64)) -> PairState {
        PairState::from_pair(
            ring(d),
            &e(a.0, a.1),
            &e(b.0, b.1),
            PipelineConfig::default(),
        )
        .unwrap()
    }

    fn check_state(st: &PairState) {
        let (l, r) = st.total_words();
        let g = st.ring;
        let mut acc = Matrix2::identity(&g);
        for f in &l {
            acc = acc.mul(&g, &eval_factor(&g, f).unwrap());
        }
        acc = acc.mul(&g, &st.start_matrix);
        for f in &r {
            acc = acc.mul(&g, &eval_factor(&g, f).unwrap());
        }
        assert_eq!(&acc, st.matrix(), "accumulated words do not reproduce the matrix");
    }

    #[test]
    fn shifts_track_words() {
        let mut st = fresh(-1, (2, 0), (1, 2));
        pair_shift(&mut st, Coord::Second, &e(0, 0)).unwrap();
        assert_eq!(st.step_count(), 0);
        pair_shift(&mut st, Coord::Second, &e(3, 1)).unwrap();
        pair_shift(&mut st, Coord::First, &e(-1, 0)).unwrap();
        pair_shift(&mut st, Coord::First, &e(1, 0)).unwrap();
        pair_shift(&mut st, Coord::Second, &e(-3, -1)).unwrap();
        assert_eq!(st.pair(), (e(2, 0), e(1, 2)));
        check_state(&st);
    }

    #[test]
    fn square_reduction_unit_path() {
        // a = 0: (1, c b^2) -> (1, c)
        let g = ring(-1);
        let b = e(2, 1);
        let c = e(3, -1);
        let q0 = g.mul(&g.mul(&b, &b), &c);
        let mut st = PairState::from_pair(g, &g.one(), &q0, PipelineConfig::default()).unwrap();
        reduce_square(&mut st, &g.zero(), &b, &c).unwrap();
        assert_eq!(st.pair(), (g.one(), c));
        check_state(&st);
    }

    #[test]
    fn square_reduction_b_one() {
        // d = -7, b = 1: source equals target, word still valid.
        // (1 + w, w) is primitive; the pair (2, w) of the obvious variant
        // is not, since w divides 2 here.
        let mut st = fresh(-7, (1, 1), (0, 1));
        reduce_square(&mut st, &e(0, 1), &e(1, 0), &e(0, 1)).unwrap();
        assert_eq!(st.pair(), (e(1, 1), e(0, 1)));
        check_state(&st);
    }

    #[test]
    fn square_reduction_generic() {
        // d = -1, a = 1, b = 2, c = 1: (3, 4) -> (3, 1)
        let mut st = fresh(-1, (3, 0), (4, 0));
        reduce_square(&mut st, &e(1, 0), &e(2, 0), &e(1, 0)).unwrap();
        assert_eq!(st.pair(), (e(3, 0), e(1, 0)));
        check_state(&st);
    }

    #[test]
    fn square_reduction_complex_witnesses() {
        let g = ring(-7);
        let (a, b, c) = (e(1, 1), e(0, 1), e(2, -1));
        let p = g.add(&g.one(), &g.mul(&a, &b));
        let q = g.mul(&g.mul(&b, &b), &c);
        assert!(g.is_primitive_pair(&p, &q), "test pair must be primitive");
        let mut st = PairState::from_pair(g, &p, &q, PipelineConfig::default()).unwrap();
        reduce_square(&mut st, &a, &b, &c).unwrap();
        assert_eq!(st.pair(), (p, c));
        check_state(&st);
    }

    #[test]
    fn cofactor_reduction_unit_first() {
        // a = 0: (1, b c) -> (1, c)
        let g = ring(-1);
        let b = e(0, 1);
        let c = e(5, 2);
        let mut st =
            PairState::from_pair(g, &g.one(), &g.mul(&b, &c), PipelineConfig::default()).unwrap();
        reduce_b(&mut st, &g.zero(), &b, &c).unwrap();
        assert_eq!(st.pair(), (g.one(), c));
        check_state(&st);
    }

    #[test]
    fn cofactor_reduction_generic() {
        // d = -7, small primitive instance with non-unit b
        let g = ring(-7);
        let (a, b, c) = (e(1, 0), e(0, 1), e(3, 0));
        let p = g.add(&g.one(), &g.mul(&a, &b));
        let bc = g.mul(&b, &c);
        assert!(g.is_primitive_pair(&p, &bc));
        let mut st = PairState::from_pair(g, &p, &bc, PipelineConfig::default()).unwrap();
        reduce_b(&mut st, &a, &b, &c).unwrap();
        assert_eq!(st.pair(), (p, c));
        check_state(&st);
        assert_eq!(st.stats.reduce_b_calls, 1);
        assert!(!st.stats.root_events.is_empty());
    }

    #[test]
    fn cofactor_reduction_unit_b() {
        // b a (non-one) unit: postcondition still lands on (1 + a b, c)
        let g = ring(-1);
        let (a, b, c) = (e(2, 0), e(0, 1), e(3, 0));
        let p = g.add(&g.one(), &g.mul(&a, &b));
        let bc = g.mul(&b, &c);
        let mut st = PairState::from_pair(g, &p, &bc, PipelineConfig::default()).unwrap();
        reduce_b(&mut st, &a, &b, &c).unwrap();
        assert_eq!(st.pair(), (p, c));
        check_state(&st);
    }

    #[test]
    fn power_chain_identity_and_triangular() {
        let g = ring(-1);
        // n = 1 is a no-op
        let alpha = Matrix2::from_ints((1, 0), (1, 0), (1, 0), (2, 0));
        let mut st = fresh(-1, (1, 0), (1, 0));
        reduce_power(&mut st, &alpha, 1).unwrap();
        assert_eq!(st.step_count(), 0);
        // upper triangular with unit diagonal: shift-only path
        let tri = Matrix2::new(e(0, 1), e(3, 0), g.zero(), g.neg(&e(0, 1)));
        assert!(tri.det(&g).is_one());
        let a3 = g.pow(&tri.a, 3);
        let mut st = PairState::from_pair(g, &a3, &tri.b, PipelineConfig::default()).unwrap();
        reduce_power(&mut st, &tri, 3).unwrap();
        let direct = tri.pow(&g, 3);
        assert_eq!(st.pair(), direct.first_row());
        check_state(&st);
    }

    #[test]
    fn power_chain_generic() {
        // d = -1, alpha = [[1,1],[1,2]], n = 2: (1, 1) ~ (2, 3)
        let alpha = Matrix2::from_ints((1, 0), (1, 0), (1, 0), (2, 0));
        let mut st = fresh(-1, (1, 0), (1, 0));
        reduce_power(&mut st, &alpha, 2).unwrap();
        assert_eq!(st.pair(), (e(2, 0), e(3, 0)));
        check_state(&st);
    }

    #[test]
    fn degenerate_normalization() {
        // (0, u)
        let g = ring(-1);
        let mut st = PairState::from_pair(g, &g.zero(), &e(0, 1), PipelineConfig::default()).unwrap();
        assert!(normalize_degenerate(&mut st).unwrap());
        assert_eq!(st.pair(), (g.one(), g.zero()));
        check_state(&st);
        // (u, x)
        let mut st = PairState::from_pair(g, &e(0, -1), &e(7, 3), PipelineConfig::default()).unwrap();
        assert!(normalize_degenerate(&mut st).unwrap());
        assert_eq!(st.pair(), (g.one(), g.zero()));
        check_state(&st);
        // generic pair untouched
        let mut st = fresh(-1, (3, 0), (1, 1));
        assert!(!normalize_degenerate(&mut st).unwrap());
        assert_eq!(st.step_count(), 0);
    }

    #[test]
    fn diag_unit_word_identity() {
        // E12(u) E21(-u^-1) E12(u) J = diag(u, u^-1), by direct product
        for d in [-1i64, -3] {
            let g = ring(d);
            for u in g.units() {
                let ui = g.unit_inv(&u);
                let prod = eval_factor(&g, &Factor::e12(u.clone()))
                    .unwrap()
                    .mul(&g, &eval_factor(&g, &Factor::e21(g.neg(&ui))).unwrap())
                    .mul(&g, &eval_factor(&g, &Factor::e12(u.clone())).unwrap())
                    .mul(&g, &IntMat2::j().to_matrix2());
                let want = Matrix2::new(u.clone(), g.zero(), g.zero(), ui);
                assert_eq!(prod, want);
            }
        }
    }

    #[test]
    fn descent_unwinds_elementary_words() {
        let g = ring(-1);
        // (1+3i, 3) from E12(3) E21(i)
        let mut st = PairState::from_pair(g, &e(1, 3), &e(3, 0), PipelineConfig::default()).unwrap();
        descend(&mut st, 0).unwrap();
        let (p, q) = st.pair();
        assert!(is_degenerate_pair(&g, &p, &q), "descent should finish this pair");
        check_state(&st);
        assert!(normalize_degenerate(&mut st).unwrap());
        check_state(&st);
    }

    #[test]
    fn make_mth_power_example() {
        // d = -1, (s, t) = (3, 1): q = 1 + 3n prime with 3 a 4th power
        let mut st = fresh(-1, (3, 0), (1, 0));
        let (a, q) = make_mth_power(&mut st).unwrap();
        let g = st.ring;
        assert!(is_prime_elem(&g, &q, 40).is_prime());
        let rr = ResidueRing::new(g, q.clone());
        assert!(rr.eq_mod(&g.pow(&a, 4), &e(3, 0)));
        assert_eq!(st.pair(), (g.pow(&a, 4), q));
        check_state(&st);
    }

    #[test]
    fn companion_search_small() {
        let g = ring(-1);
        let cfg = PipelineConfig::default();
        let mut stats = RunStats::default();
        // aa = 3, b = 2 + i (norm 5, char 5 coprime to m = 4)
        let c = companion_prime_search(&g, &e(3, 0), &e(2, 1), &g.int(-1), 1, &cfg, &mut stats)
            .unwrap();
        assert!(is_prime_elem(&g, &c, 40).is_prime());
        let rr = ResidueRing::new(g, e(3, 0));
        assert!(rr.eq_mod(&g.mul(&e(2, 1), &c), &g.int(-1)));
    }

    #[test]
    fn full_row_on_stuck_pair() {
        // d = -19 is not norm-Euclidean; feed the heavy path a small pair.
        let g = ring(-19);
        // find a small primitive non-degenerate pair that stalls descent
        let mut st = fresh(-19, (3, 0), (1, 1));
        descend(&mut st, 0).unwrap();
        let (p, q) = st.pair();
        if is_degenerate_pair(&g, &p, &q) {
            // fully reduced; nothing heavy to exercise here
            return;
        }
        check_state(&st);
    }

    #[test]
    fn factorize_identity_and_elementary() {
        let g = ring(-1);
        let (cert, _) =
            factorize_matrix(g, &Matrix2::identity(&g), PipelineConfig::default()).unwrap();
        assert!(cert.factors.is_empty());
        let m = eval_factor(&g, &Factor::e12(e(5, -2))).unwrap();
        let (cert, _) = factorize_matrix(g, &m, PipelineConfig::default()).unwrap();
        assert_eq!(cert.factors.len(), 1);
        assert_eq!(verify_certificate(&cert), VerifyOutcome::Ok);
        let bad = Matrix2::from_ints((2, 0), (0, 0), (0, 0), (1, 0));
        assert!(matches!(
            factorize_matrix(g, &bad, PipelineConfig::default()),
            Err(ReduceError::NotUnimodular)
        ));
    }

    #[test]
    fn factorize_generic_word() {
        let g = ring(-1);
        let m = eval_factor(&g, &Factor::e12(e(2, 1)))
            .unwrap()
            .mul(&g, &eval_factor(&g, &Factor::e21(e(-1, 2))).unwrap())
            .mul(&g, &eval_factor(&g, &Factor::e12(e(0, -3))).unwrap());
        let (cert, _) = factorize_matrix(g, &m, PipelineConfig::default()).unwrap();
        assert_eq!(verify_certificate(&cert), VerifyOutcome::Ok);
        assert_eq!(cert.target, m);
    }

    #[test]
    fn reduce_mth_small_instance() {
        // d = -7, m = 2: hand the pipeline (a^2, b) directly with b a prime
        // of norm coprime to 2*7.
        let g = ring(-7);
        let a = e(2, 1);
        let b = e(3, 1); // norm 9 + 3 + 2*1 = wait: 9 + 3*1 + 2 = 14? use norm fn
        let _ = b;
        // pick b prime with norm coprime to 14: norm(1+2w) = 1 + 2 + 8 = 11
        let b = e(1, 2);
        assert!(is_prime_elem(&g, &b, 40).is_prime());
        assert!(g.is_primitive_pair(&a, &b));
        let a2 = g.pow(&a, 2);
        let mut st = PairState::from_pair(g, &a2, &b, PipelineConfig::default()).unwrap();
        reduce_mth(&mut st, &a, &b).unwrap();
        assert_eq!(st.pair(), (g.one(), g.zero()));
        check_state(&st);
    }
}
