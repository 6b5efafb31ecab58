//! Circulant matrices, cyclic-shift spans and exhaustive sparse-matrix
//! counts over small prime fields. These are the objects behind the
//! rank-growth guarantee of the sparse construction, exposed so the
//! guarantee can be checked directly.

use super::PrimeField;
use crate::error::{Error, Result};

/// A vector whose successive cyclic shifts form a circulant matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CirculantSpec {
    pub w: Vec<u64>,
}

impl CirculantSpec {
    pub fn new(w: Vec<u64>, p: u64) -> Self {
        CirculantSpec {
            w: w.into_iter().map(|x| x % p).collect(),
        }
    }
}

/// Row `i` is `w` cyclically shifted right `i` times:
/// `W[i][j] = w[(j - i) mod q]`.
pub fn circulant_matrix(w: &[u64]) -> Vec<Vec<u64>> {
    let q = w.len();
    (0..q).map(|i| (0..q).map(|j| w[(j + q - i) % q]).collect()).collect()
}

/// Reduces `m` to row echelon form in place; returns (rank, determinant of
/// the leading square part when the matrix is square).
fn eliminate(m: &mut [Vec<u64>], f: &PrimeField) -> (usize, u64) {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut det = 1u64;
    let mut rank = 0;
    for col in 0..cols {
        let Some(piv) = (rank..rows).find(|&r| m[r][col] != 0) else {
            det = 0;
            continue;
        };
        if piv != rank {
            m.swap(piv, rank);
            det = f.neg(det);
        }
        let pv = m[rank][col];
        det = f.mul(det, pv);
        let inv = f.inv(pv).expect("pivot is nonzero");
        let (top, below) = m.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        for row in below {
            let factor = f.mul(row[col], inv);
            if factor == 0 {
                continue;
            }
            for (x, &y) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x = f.sub(*x, f.mul(factor, y));
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    if rows != cols || rank < rows {
        det = 0;
    }
    (rank, det)
}

/// Rank over `F_p` by dense Gaussian elimination.
pub fn rank(matrix: &[Vec<u64>], p: u64) -> Result<usize> {
    let f = PrimeField::new(p)?;
    let mut m: Vec<Vec<u64>> = matrix
        .iter()
        .map(|r| r.iter().map(|&x| f.reduce(x)).collect())
        .collect();
    Ok(eliminate(&mut m, &f).0)
}

/// Determinant over `F_p` of a square matrix.
pub fn determinant(matrix: &[Vec<u64>], p: u64) -> Result<u64> {
    let f = PrimeField::new(p)?;
    if matrix.iter().any(|r| r.len() != matrix.len()) {
        return Err(Error::InvalidParams("determinant needs a square matrix".into()));
    }
    if matrix.is_empty() {
        return Ok(1);
    }
    let mut m: Vec<Vec<u64>> = matrix
        .iter()
        .map(|r| r.iter().map(|&x| f.reduce(x)).collect())
        .collect();
    Ok(eliminate(&mut m, &f).1)
}

pub fn circulant_det(spec: &CirculantSpec, p: u64) -> Result<u64> {
    if spec.w.is_empty() {
        return Err(Error::InvalidParams("circulant of an empty vector".into()));
    }
    determinant(&circulant_matrix(&spec.w), p)
}

/// Dimension of the span of `w` and all its cyclic shifts.
pub fn cyclic_shift_span_dim(w: &[u64], p: u64) -> Result<usize> {
    if w.is_empty() {
        return Err(Error::InvalidParams("empty vector".into()));
    }
    rank(&circulant_matrix(w), p)
}

/// Number of distinct vectors among the cyclic shifts of `w`.
pub fn cyclic_orbit_size(w: &[u64]) -> usize {
    let q = w.len();
    // the orbit size is the least positive period
    (1..=q)
        .find(|&k| q.is_multiple_of(k) && (0..q).all(|i| w[i] == w[(i + k) % q]))
        .unwrap_or(0)
}

/// Enumeration budget: `p^(n*r)` matrices at most.
pub const COUNT_BUDGET: u64 = 1 << 24;

/// Exhaustively enumerates every `n x r` matrix over `Z/pZ` and returns
/// `h` with `h[s]` = number of matrices in which every column has exactly
/// `s` nonzero entries.
pub fn sparse_column_histogram(n: usize, r: usize, p: u64) -> Result<Vec<u64>> {
    if n == 0 || r == 0 || p < 2 {
        return Err(Error::InvalidParams(format!(
            "need n, r >= 1 and p >= 2, got n={n} r={r} p={p}"
        )));
    }
    let cells = n * r;
    let total = u32::try_from(cells)
        .ok()
        .and_then(|c| p.checked_pow(c))
        .filter(|&t| t <= COUNT_BUDGET)
        .ok_or_else(|| Error::UnsupportedSize(format!("{p}^({n}*{r}) exceeds 2^24")))?;

    // column-major odometer over all cells
    let mut digits = vec![0u64; cells];
    let mut col_nonzero = vec![0usize; r];
    // columns_with[v] = how many columns currently hold v nonzeros
    let mut columns_with = vec![0usize; n + 1];
    columns_with[0] = r;
    let mut hist = vec![0u64; n + 1];
    for step in 0..total {
        let v = col_nonzero[0];
        if columns_with[v] == r {
            hist[v] += 1;
        }
        if step + 1 == total {
            break;
        }
        let mut i = 0;
        loop {
            let col = i / n;
            let d = digits[i] + 1;
            if d == p {
                digits[i] = 0;
                // p-1 -> 0 drops a nonzero
                let c = col_nonzero[col];
                columns_with[c] -= 1;
                columns_with[c - 1] += 1;
                col_nonzero[col] = c - 1;
                i += 1;
            } else {
                digits[i] = d;
                if d == 1 {
                    let c = col_nonzero[col];
                    columns_with[c] -= 1;
                    columns_with[c + 1] += 1;
                    col_nonzero[col] = c + 1;
                }
                break;
            }
        }
    }
    Ok(hist)
}

/// Number of `n x r` matrices over `F_p` with exactly `s` nonzero entries
/// in every column, by exhaustive enumeration.
pub fn count_sparse_matrices(n: usize, r: usize, s: usize, p: u64) -> Result<u64> {
    let hist = sparse_column_histogram(n, r, p)?;
    Ok(hist.get(s).copied().unwrap_or(0))
}
