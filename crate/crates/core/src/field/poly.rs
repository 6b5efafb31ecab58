//! Dense polynomials over `F_p`, just enough for distinct-degree
//! factorization of the cyclotomic polynomial `1 + x + ... + x^(q-1)`.

use super::PrimeField;
use crate::error::{Error, Result};

/// Coefficients low degree first, no trailing zeros (zero poly = empty).
type Poly = Vec<u64>;

fn trim(mut a: Poly) -> Poly {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn degree(a: &Poly) -> Option<usize> {
    a.len().checked_sub(1)
}

fn sub(a: &Poly, b: &Poly, f: &PrimeField) -> Poly {
    let n = a.len().max(b.len());
    trim(
        (0..n)
            .map(|i| f.sub(*a.get(i).unwrap_or(&0), *b.get(i).unwrap_or(&0)))
            .collect(),
    )
}

fn mul(a: &Poly, b: &Poly, f: &PrimeField) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = f.add(out[i + j], f.mul(x, y));
        }
    }
    trim(out)
}

fn divrem(a: &Poly, b: &Poly, f: &PrimeField) -> (Poly, Poly) {
    let db = degree(b).expect("division by zero polynomial");
    let lead_inv = f.inv(b[db]).expect("leading coefficient nonzero");
    let mut r = a.clone();
    let mut quot = vec![0; a.len().saturating_sub(db).max(1)];
    while let Some(dr) = degree(&r) {
        if dr < db {
            break;
        }
        let c = f.mul(r[dr], lead_inv);
        let shift = dr - db;
        quot[shift] = c;
        for (i, &bc) in b.iter().enumerate() {
            r[shift + i] = f.sub(r[shift + i], f.mul(c, bc));
        }
        r = trim(r);
    }
    (trim(quot), r)
}

fn rem(a: &Poly, b: &Poly, f: &PrimeField) -> Poly {
    divrem(a, b, f).1
}

fn gcd(a: &Poly, b: &Poly, f: &PrimeField) -> Poly {
    let (mut a, mut b) = (a.clone(), b.clone());
    while !b.is_empty() {
        let r = rem(&a, &b, f);
        a = b;
        b = r;
    }
    // monic
    if let Some(d) = degree(&a) {
        let inv = f.inv(a[d]).expect("nonzero");
        a.iter_mut().for_each(|c| *c = f.mul(*c, inv));
    }
    a
}

fn pow_mod_poly(base: &Poly, mut e: u64, modulus: &Poly, f: &PrimeField) -> Poly {
    let mut acc: Poly = vec![1];
    let mut b = rem(base, modulus, f);
    while e > 0 {
        if e & 1 == 1 {
            acc = rem(&mul(&acc, &b, f), modulus, f);
        }
        b = rem(&mul(&b, &b, f), modulus, f);
        e >>= 1;
    }
    acc
}

/// Degrees of the irreducible factors of `1 + x + ... + x^(q-1)` over
/// `F_p`, ascending. Requires `p != q` so the polynomial is squarefree.
pub fn cyclotomic_factor_degrees(q: u64, p: u64) -> Result<Vec<usize>> {
    if q < 2 || p == q {
        return Err(Error::InvalidParams(format!("need q >= 2 and p != q, got q={q} p={p}")));
    }
    let f = PrimeField::new(p)?;
    let mut rest: Poly = vec![1; q as usize];
    let x: Poly = vec![0, 1];
    let mut h = x.clone();
    let mut degrees = Vec::new();
    let mut d = 0;
    while let Some(dr) = degree(&rest) {
        if dr == 0 {
            break;
        }
        d += 1;
        if 2 * d > dr {
            // what remains is irreducible
            degrees.push(dr);
            break;
        }
        h = pow_mod_poly(&h, p, &rest, &f);
        let g = gcd(&rest, &sub(&h, &x, &f), &f);
        let dg = degree(&g).unwrap_or(0);
        if dg > 0 {
            degrees.extend(std::iter::repeat_n(d, dg / d));
            rest = divrem(&rest, &g, &f).0;
            h = rem(&h, &rest, &f);
        }
    }
    degrees.sort_unstable();
    Ok(degrees)
}

pub fn is_cyclotomic_irreducible(q: u64, p: u64) -> Result<bool> {
    Ok(cyclotomic_factor_degrees(q, p)?.len() == 1)
}
