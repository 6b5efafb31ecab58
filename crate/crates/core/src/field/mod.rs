//! Prime-field arithmetic, primality, primitive roots and the prime pair
//! `(p, q)` used by the sparse construction.

mod circulant;
mod params;
mod poly;

pub use circulant::{
    circulant_det, circulant_matrix, count_sparse_matrices, cyclic_orbit_size, cyclic_shift_span_dim, determinant,
    rank, sparse_column_histogram, CirculantSpec, COUNT_BUDGET,
};
pub use params::{setup_params, FieldParams, SETUP_DRAW_BUDGET};
pub use poly::{cyclotomic_factor_degrees, is_cyclotomic_irreducible};

use crate::error::{Error, Result};
use crate::hashing::splitmix64;

/// Largest supported field modulus (exclusive).
pub const MAX_MODULUS: u64 = 1 << 63;

pub const DEFAULT_MR_ROUNDS: u32 = 40;

/// Arithmetic in `F_p`. Elements are canonical residues in `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    /// `p` is trusted to be prime; only the size bounds are checked.
    pub fn new(p: u64) -> Result<Self> {
        if !(2..MAX_MODULUS).contains(&p) {
            return Err(Error::InvalidParams(format!("field modulus {p} outside [2, 2^63)")));
        }
        Ok(PrimeField { p })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, a: u64) -> u64 {
        a % self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        // a, b < 2^63 so no overflow
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.p)
    }

    pub fn pow(&self, a: u64, e: u64) -> u64 {
        pow_mod(a, e, self.p)
    }

    pub fn inv(&self, a: u64) -> Result<u64> {
        let a = self.reduce(a);
        if a == 0 {
            return Err(Error::DivisionByZero(self.p));
        }
        Ok(self.pow(a, self.p - 2))
    }
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(m)) as u64
}

pub fn pow_mod(mut base: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primality {
    ProbablyPrime,
    Composite,
}

const SMALL_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Miller–Rabin with `rounds` witnesses. The first witnesses are the twelve
/// smallest primes (a deterministic test for every 64-bit input); any further
/// rounds use pseudo-random witnesses derived from `n`.
pub fn miller_rabin(n: u64, rounds: u32) -> Primality {
    use Primality::*;
    if n < 2 {
        return Composite;
    }
    for &sp in &SMALL_PRIMES {
        if n == sp {
            return ProbablyPrime;
        }
        if n.is_multiple_of(sp) {
            return Composite;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    let witness = |a: u64| -> bool {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            return false;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                return false;
            }
        }
        true
    };
    let mut state = n;
    for i in 0..rounds.max(1) {
        let a = match SMALL_PRIMES.get(i as usize) {
            Some(&a) => a,
            None => {
                state = splitmix64(state);
                2 + state % (n - 3)
            }
        };
        if witness(a) {
            return Composite;
        }
    }
    ProbablyPrime
}

pub fn is_prime(n: u64) -> bool {
    miller_rabin(n, DEFAULT_MR_ROUNDS) == Primality::ProbablyPrime
}

pub fn next_prime_at_least(x: u64) -> u64 {
    let mut c = x.max(2);
    while !is_prime(c) {
        c += 1;
    }
    c
}

/// Trial-division budget for [`factor_distinct`].
pub const MAX_FACTOR_INPUT: u64 = 1 << 40;

/// Distinct prime factors of `n`, ascending.
pub fn factor_distinct(mut n: u64) -> Result<Vec<u64>> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("cannot factor {n}")));
    }
    if n > MAX_FACTOR_INPUT {
        return Err(Error::UnsupportedSize(format!(
            "{n} exceeds the trial division budget 2^40"
        )));
    }
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            out.push(f);
            while n.is_multiple_of(f) {
                n /= f;
            }
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    Ok(out)
}

/// Multiplicative order of `a` modulo prime `q`, given the distinct prime
/// factors of `q - 1`. Returns 0 when `a ≡ 0`.
pub fn multiplicative_order(a: u64, q: u64, factors_q_minus_1: &[u64]) -> u64 {
    let a = a % q;
    if a == 0 {
        return 0;
    }
    let mut order = q - 1;
    for &f in factors_q_minus_1 {
        while order.is_multiple_of(f) && pow_mod(a, order / f, q) == 1 {
            order /= f;
        }
    }
    order
}

pub fn is_primitive_root(g: u64, q: u64, factors_q_minus_1: &[u64]) -> bool {
    let g = g % q;
    g != 0 && factors_q_minus_1.iter().all(|&f| pow_mod(g, (q - 1) / f, q) != 1)
}

/// Smallest primitive root modulo prime `q`. For `q = 2` the group is
/// trivial and 1 is returned.
pub fn find_primitive_root(q: u64, factors_q_minus_1: &[u64]) -> u64 {
    if q == 2 {
        return 1;
    }
    (2..q)
        .find(|&g| is_primitive_root(g, q, factors_q_minus_1))
        .expect("every prime has a primitive root")
}

/// `ceil(n * factor)`, treating values within floating-point noise of an
/// integer as that integer (so `100 * 1.05` gives 105, not 106).
pub fn ceil_scaled(n: u64, factor: f64) -> u64 {
    let x = n as f64 * factor;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}
