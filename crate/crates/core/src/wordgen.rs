//! Seeded generation of determinant-1 test matrices as bounded words of
//! random elementary and integer factors: inputs are guaranteed unimodular
//! with controllable size, and identical seeds give identical matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::families::{eval_factor, Factor, IntMat2};
use crate::ring::{RingDesc, RingElem};
use crate::sl2::Matrix2;

/// Parameters for one generated word.
#[derive(Debug, Clone, Copy)]
pub struct WordGenConfig {
    pub word_len: u32,
    pub param_max_norm: u64,
    pub seed: u64,
}

impl Default for WordGenConfig {
    fn default() -> Self {
        WordGenConfig {
            word_len: 8,
            param_max_norm: 20,
            seed: 0,
        }
    }
}

/// Deterministic per-(field, index) stream derived from the batch seed.
fn rng_for(cfg: &WordGenConfig, d: i64, index: u64) -> ChaCha8Rng {
    let mix = cfg
        .seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((d as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9))
        .wrapping_add(index.wrapping_mul(0x94d0_49bb_1331_11eb));
    ChaCha8Rng::seed_from_u64(mix)
}

/// A random element with norm at most `max_norm`, by rejection in the
/// coordinate box.
fn random_elem(ring: &RingDesc, rng: &mut ChaCha8Rng, max_norm: u64) -> RingElem {
    let bound = (max_norm as f64).sqrt() as i64 + 1;
    loop {
        let x = rng.gen_range(-bound..=bound);
        let y = rng.gen_range(-bound..=bound);
        let e = RingElem::from_coords(x, y);
        if ring.norm(&e) <= max_norm.into() {
            return e;
        }
    }
}

fn random_zword(rng: &mut ChaCha8Rng) -> IntMat2 {
    match rng.gen_range(0u32..4) {
        0 => IntMat2::j(),
        1 => IntMat2::j_inv(),
        2 => IntMat2::neg_identity(),
        _ => {
            let k = rng.gen_range(-4i64..=4);
            if rng.gen_bool(0.5) {
                IntMat2::new([[1, k], [0, 1]])
            } else {
                IntMat2::new([[1, 0], [k, 1]])
            }
        }
    }
}

/// The `index`-th seeded matrix for the field: a product of `word_len`
/// random E12/E21/ZWORD factors with parameter norms bounded by
/// `param_max_norm`.
pub fn generate_matrix(ring: &RingDesc, cfg: &WordGenConfig, index: u64) -> Matrix2 {
    let mut rng = rng_for(cfg, ring.d(), index);
    let mut m = Matrix2::identity(ring);
    for _ in 0..cfg.word_len {
        let f = match rng.gen_range(0u32..4) {
            0 | 1 => {
                let p = random_elem(ring, &mut rng, cfg.param_max_norm);
                if rng.gen_bool(0.5) {
                    Factor::e12(p)
                } else {
                    Factor::e21(p)
                }
            }
            2 => {
                let p = random_elem(ring, &mut rng, cfg.param_max_norm);
                Factor::e12(p)
            }
            _ => Factor::zword(random_zword(&mut rng)),
        };
        m = m.mul(ring, &eval_factor(ring, &f).expect("generator factors are well-formed"));
    }
    m
}
