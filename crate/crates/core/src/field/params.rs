use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ceil_scaled, factor_distinct, is_prime, is_primitive_root, next_prime_at_least};
use crate::error::{Error, Result};

/// The prime pair for the sparse construction: `q` is the table length and
/// `p` (an `m_bits`-bit prime) is a primitive root modulo `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldParams {
    pub q: u64,
    pub p: u64,
    pub factors_q_minus_1: Vec<u64>,
    pub m_bits: u32,
}

impl FieldParams {
    /// Rebuilds the parameter record from a stored `(p, q)` pair, checking
    /// every invariant.
    pub fn from_primes(p: u64, q: u64) -> Result<Self> {
        if q < 2 || !is_prime(q) {
            return Err(Error::InvalidParams(format!("table length {q} is not prime")));
        }
        if !(2..super::MAX_MODULUS).contains(&p) || !is_prime(p) {
            return Err(Error::InvalidParams(format!(
                "field size {p} is not a prime below 2^63"
            )));
        }
        let factors = factors_of_q_minus_1(q)?;
        if !is_primitive_root(p, q, &factors) {
            return Err(Error::InvalidParams(format!("{p} is not a primitive root mod {q}")));
        }
        Ok(FieldParams {
            q,
            p,
            factors_q_minus_1: factors,
            m_bits: 64 - p.leading_zeros(),
        })
    }
}

fn factors_of_q_minus_1(q: u64) -> Result<Vec<u64>> {
    if q == 2 {
        Ok(Vec::new())
    } else {
        factor_distinct(q - 1)
    }
}

/// Upper bound on candidate draws while searching for `p`.
pub const SETUP_DRAW_BUDGET: u64 = 1_000_000;

/// Picks `q` as the first prime `>= ceil(n(1+eps))` and samples an
/// `m_bits`-bit prime `p` that generates `F_q^*`.
///
/// Candidates are tested for the primitive-root property directly through
/// the factorization of `q - 1`, which accepts the same set as enumerating
/// every generator `g^i` with `gcd(i, q-1) = 1`.
pub fn setup_params(n: u64, m_bits: u32, eps: f64, seed: u64) -> Result<FieldParams> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParams(format!("eps must be positive, got {eps}")));
    }
    if !(2..=63).contains(&m_bits) {
        return Err(Error::InvalidParams(format!("m_bits must be in [2, 63], got {m_bits}")));
    }
    let q = next_prime_at_least(ceil_scaled(n, 1.0 + eps));
    if q >= 1u64 << m_bits {
        return Err(Error::InvalidParams(format!(
            "2^{m_bits} must exceed the table length {q}"
        )));
    }
    let factors = factors_of_q_minus_1(q)?;

    let lo = 1u64 << (m_bits - 1);
    let hi = (1u64 << m_bits) - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..SETUP_DRAW_BUDGET {
        let p = rng.random_range(lo..=hi);
        if is_primitive_root(p, q, &factors) && is_prime(p) {
            return Ok(FieldParams {
                q,
                p,
                factors_q_minus_1: factors,
                m_bits,
            });
        }
    }
    Err(Error::RetryBudget(SETUP_DRAW_BUDGET))
}
