//! Space-optimal Bloomier filter over a prime field.
//!
//! Each key `x` contributes one `s`-sparse equation
//! `h0(x) + sum_t h_t(x) * g[h_{t+s}(x)] = f(x)  (mod p)` to a system in the
//! `q` unknowns `g`. Candidate equations come from hash blocks `B_0, B_1, ...`;
//! a key takes the first block whose row is independent of the rows
//! accepted so far. Queries evaluate the blocks in the same order and return
//! the first residue below `2^k`.

use crate::bits::PackedArray;
use crate::error::{Error, Result};
use crate::field::{setup_params, FieldParams, PrimeField};
use crate::graph_filter::check_pairs;
use crate::hashing::{derive_block, derive_seed, HashBlock, HashSpec};

pub const DEFAULT_MAX_BLOCKS: u32 = 64;
pub const DEFAULT_MAX_REBUILDS: u32 = 16;

const TAG_FIELD: u64 = 0x0066_6965_6c64;
const TAG_TABLE: u64 = 0x0074_6162_6c65;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseParams {
    /// Hashed terms per equation.
    pub s: usize,
    /// Table slack: `q` is the first prime `>= n(1 + eps)`.
    pub eps: f64,
    /// Bit length of the field prime `p`.
    pub m_bits: u32,
    pub k: u32,
    pub max_blocks: u32,
    pub max_rebuilds: u32,
}

impl SparseParams {
    pub fn new(s: usize, eps: f64, m_bits: u32, k: u32) -> Self {
        SparseParams {
            s,
            eps,
            m_bits,
            k,
            max_blocks: DEFAULT_MAX_BLOCKS,
            max_rebuilds: DEFAULT_MAX_REBUILDS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.s < 2 {
            return bad(format!("s must be at least 2, got {}", self.s));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(2..=63).contains(&self.m_bits) || self.m_bits < self.k {
            return bad(format!("m_bits must be in [max(k, 2), 63], got {}", self.m_bits));
        }
        if self.max_blocks == 0 || self.max_rebuilds == 0 {
            return bad("max_blocks and max_rebuilds must be at least 1".into());
        }
        Ok(())
    }

    /// Smallest `m_bits` for which `n * 2^k / p <= 1/2`.
    pub fn min_verified_m_bits(n: usize, k: u32) -> u32 {
        let log_n = if n <= 1 {
            0
        } else {
            usize::BITS - (n - 1).leading_zeros()
        };
        k + log_n + 1
    }
}

/// One candidate equation: `(column, coefficient)` pairs with distinct
/// columns and nonzero coefficients, sorted by column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseRow {
    pub key_id: usize,
    pub block_index: u32,
    pub entries: Vec<(usize, u64)>,
}

/// Builds the row of `key` under `block`. Entries are written in hash order,
/// so a later column collision overwrites an earlier coefficient, and zero
/// coefficients are dropped.
pub fn assemble_row(key_id: usize, key: &[u8], block: &HashBlock) -> SparseRow {
    SparseRow {
        key_id,
        block_index: block.block_index,
        entries: row_entries(key, block),
    }
}

fn row_entries(key: &[u8], block: &HashBlock) -> Vec<(usize, u64)> {
    let s = block.s();
    let mut entries: Vec<(usize, u64)> = Vec::with_capacity(s);
    for t in 0..s {
        let col = block.column(t).eval(key) as usize;
        let coef = block.coefficient(t).eval(key);
        match entries.iter_mut().find(|e| e.0 == col) {
            Some(e) => e.1 = coef,
            None => entries.push((col, coef)),
        }
    }
    entries.retain(|e| e.1 != 0);
    entries.sort_unstable_by_key(|e| e.0);
    entries
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Append {
    Accepted,
    Rejected,
}

/// A stored row in reduced form: `g[pivot] + sum coef * g[col] = rhs`, where
/// every `col` is a non-pivot column.
#[derive(Debug, Clone)]
struct PivotRow {
    pivot: usize,
    entries: Vec<(u32, u64)>,
    rhs: u64,
    source: usize,
}

const NO_PIVOT: u32 = u32::MAX;

/// Incrementally maintained reduced row echelon form of a sparse system over
/// `F_p` with `q` columns.
///
/// Each accepted row is normalised on its pivot and eliminated from every
/// stored row through a column occurrence index, so stored rows mention
/// only free columns and solving is a single pass.
#[derive(Debug, Clone)]
pub struct EliminationState {
    field: PrimeField,
    q: usize,
    rows: Vec<PivotRow>,
    pivot_row: Vec<u32>,
    /// Rows that may hold each free column; may contain stale ids.
    occurrences: Vec<Vec<u32>>,
}

impl EliminationState {
    pub fn new(q: usize, p: u64) -> Result<Self> {
        if q == 0 || q >= NO_PIVOT as usize {
            return Err(Error::InvalidParams(format!("unsupported column count {q}")));
        }
        Ok(EliminationState {
            field: PrimeField::new(p)?,
            q,
            rows: Vec::new(),
            pivot_row: vec![NO_PIVOT; q],
            occurrences: vec![Vec::new(); q],
        })
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn columns(&self) -> usize {
        self.q
    }

    pub fn modulus(&self) -> u64 {
        self.field.modulus()
    }

    pub fn is_pivot(&self, col: usize) -> bool {
        self.pivot_row[col] != NO_PIVOT
    }

    /// Reduces `entries` (with right-hand side `rhs`) against the stored
    /// pivots. Returns the surviving free-column terms and the reduced rhs.
    pub fn reduce(&self, entries: &[(usize, u64)], rhs: u64) -> (Vec<(usize, u64)>, u64) {
        let f = &self.field;
        let mut terms: Vec<(u32, u64)> = Vec::with_capacity(entries.len() * 2);
        let mut rhs = f.reduce(rhs);
        for &(col, coef) in entries {
            assert!(col < self.q, "column {col} outside table of {}", self.q);
            let coef = f.reduce(coef);
            if coef == 0 {
                continue;
            }
            match self.pivot_row[col] {
                NO_PIVOT => terms.push((col as u32, coef)),
                r => {
                    let row = &self.rows[r as usize];
                    rhs = f.sub(rhs, f.mul(coef, row.rhs));
                    for &(c, a) in &row.entries {
                        terms.push((c, f.neg(f.mul(coef, a))));
                    }
                }
            }
        }
        terms.sort_unstable_by_key(|t| t.0);
        let mut out: Vec<(usize, u64)> = Vec::with_capacity(terms.len());
        for (c, a) in terms {
            match out.last_mut() {
                Some(last) if last.0 == c as usize => last.1 = f.add(last.1, a),
                _ => out.push((c as usize, a)),
            }
        }
        out.retain(|t| t.1 != 0);
        (out, rhs)
    }

    /// True iff the row is not in the span of the stored rows.
    pub fn is_independent(&self, entries: &[(usize, u64)]) -> bool {
        !self.reduce(entries, 0).0.is_empty()
    }

    /// Adds the equation `sum coef * g[col] = rhs` if it raises the rank.
    /// A rejected row leaves the state untouched.
    pub fn try_append(&mut self, entries: &[(usize, u64)], rhs: u64) -> Append {
        self.try_append_from(entries, rhs, self.rows.len())
    }

    fn try_append_from(&mut self, entries: &[(usize, u64)], rhs: u64, source: usize) -> Append {
        let (residual, rhs) = self.reduce(entries, rhs);
        if residual.is_empty() {
            return Append::Rejected;
        }
        self.install(residual, rhs, source);
        Append::Accepted
    }

    fn live_occurrences(&mut self, col: usize) -> Vec<u32> {
        let mut ids = std::mem::take(&mut self.occurrences[col]);
        ids.sort_unstable();
        ids.dedup();
        ids.retain(|&r| {
            self.rows[r as usize]
                .entries
                .binary_search_by_key(&(col as u32), |e| e.0)
                .is_ok()
        });
        ids
    }

    fn install(&mut self, residual: Vec<(usize, u64)>, rhs: u64, source: usize) {
        let f = self.field;
        // fewest occurrences keeps the fill-in small
        let (pi, &(pivot, lead)) = residual
            .iter()
            .enumerate()
            .min_by_key(|(_, &(c, _))| (self.occurrences[c].len(), c))
            .expect("residual is nonempty");
        let inv = f.inv(lead).expect("residual coefficients are nonzero");
        let entries: Vec<(u32, u64)> = residual
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != pi)
            .map(|(_, &(c, a))| (c as u32, f.mul(a, inv)))
            .collect();
        let rhs = f.mul(rhs, inv);
        let new_id = self.rows.len() as u32;

        for r in self.live_occurrences(pivot) {
            let row = &mut self.rows[r as usize];
            let at = row
                .entries
                .binary_search_by_key(&(pivot as u32), |e| e.0)
                .expect("live occurrence");
            let a = row.entries.remove(at).1;
            row.rhs = f.sub(row.rhs, f.mul(a, rhs));
            let old = std::mem::take(&mut row.entries);
            let mut merged = Vec::with_capacity(old.len() + entries.len());
            let (mut i, mut j) = (0, 0);
            while i < old.len() || j < entries.len() {
                let take_old = j == entries.len() || (i < old.len() && old[i].0 < entries[j].0);
                let take_new = i == old.len() || (j < entries.len() && entries[j].0 < old[i].0);
                if take_old {
                    merged.push(old[i]);
                    i += 1;
                } else if take_new {
                    let (c, b) = entries[j];
                    merged.push((c, f.neg(f.mul(a, b))));
                    self.occurrences[c as usize].push(r);
                    j += 1;
                } else {
                    let (c, b) = entries[j];
                    let v = f.sub(old[i].1, f.mul(a, b));
                    if v != 0 {
                        merged.push((c, v));
                    }
                    i += 1;
                    j += 1;
                }
            }
            self.rows[r as usize].entries = merged;
        }

        for &(c, _) in &entries {
            self.occurrences[c as usize].push(new_id);
        }
        self.pivot_row[pivot] = new_id;
        self.rows.push(PivotRow {
            pivot,
            entries,
            rhs,
            source,
        });
    }

    /// One solution of the accepted system, with every free column set to 0.
    pub fn solve(&self) -> Vec<u64> {
        let mut g = vec![0u64; self.q];
        for row in &self.rows {
            // free columns are zero, so only the rhs survives
            g[row.pivot] = row.rhs;
        }
        g
    }

    /// Identifier passed when each stored row was accepted, in pivot order.
    pub fn sources(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().map(|r| r.source)
    }
}

/// A solved sparse-scheme table together with its hash functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseFilter {
    n: usize,
    k: u32,
    s: usize,
    field: FieldParams,
    seed: u64,
    h0: HashSpec,
    blocks: Vec<HashBlock>,
    table: PackedArray,
}

/// Output of [`create_table`]: the filter and, per key, the block whose
/// row was accepted.
#[derive(Debug, Clone)]
pub struct TableBuild {
    pub filter: SparseFilter,
    pub accepted_block: Vec<u32>,
}

fn h0_spec(seed: u64, p: u64) -> Result<HashSpec> {
    HashSpec::new(seed, 0, p)
}

fn blocks_for(seed: u64, r: u32, s: usize, field: &FieldParams) -> Result<Vec<HashBlock>> {
    (0..r).map(|j| derive_block(seed, j, s, field.p, field.q)).collect()
}

/// Builds the full-rank system for `pairs` and solves it.
pub fn create_table<K: AsRef<[u8]>>(
    pairs: &[(K, u64)],
    params: &SparseParams,
    field: &FieldParams,
    master_seed: u64,
) -> Result<TableBuild> {
    params.validate()?;
    check_pairs(pairs, params.k)?;
    if pairs.len() as u64 > field.q {
        return Err(Error::InvalidParams(format!(
            "{} keys exceed the table length {}",
            pairs.len(),
            field.q
        )));
    }
    // with 2^k > p (only when k = m_bits) every value must still be a residue
    if let Some(i) = pairs.iter().position(|(_, v)| *v >= field.p) {
        return Err(Error::InvalidParams(format!(
            "value at input position {i} is not below the field size {}",
            field.p
        )));
    }
    let f = PrimeField::new(field.p)?;
    let h0 = h0_spec(master_seed, field.p)?;
    let mut state = EliminationState::new(field.q as usize, field.p)?;
    let mut blocks: Vec<HashBlock> = Vec::new();
    let mut accepted_block = Vec::with_capacity(pairs.len());
    for (i, (key, value)) in pairs.iter().enumerate() {
        let key = key.as_ref();
        let rhs = f.sub(*value, h0.eval(key));
        let mut accepted = None;
        for j in 0..params.max_blocks {
            if j as usize == blocks.len() {
                blocks.push(derive_block(master_seed, j, params.s, field.p, field.q)?);
            }
            let entries = row_entries(key, &blocks[j as usize]);
            if state.try_append_from(&entries, rhs, i) == Append::Accepted {
                accepted = Some(j);
                break;
            }
        }
        match accepted {
            Some(j) => accepted_block.push(j),
            None => {
                return Err(Error::BuildFailure {
                    attempts: params.max_blocks,
                    reason: format!(
                        "key {i}: no independent row in {} blocks (rank {}, q {})",
                        params.max_blocks,
                        state.rank(),
                        field.q
                    ),
                })
            }
        }
    }
    let r = accepted_block.iter().max().map_or(0, |&j| j + 1);
    blocks.truncate(r as usize);
    let g = state.solve();
    Ok(TableBuild {
        filter: SparseFilter {
            n: pairs.len(),
            k: params.k,
            s: params.s,
            field: field.clone(),
            seed: master_seed,
            h0,
            blocks,
            table: PackedArray::from_values(field.m_bits, &g),
        },
        accepted_block,
    })
}

impl SparseFilter {
    /// Reassembles a filter from stored parts; used by the codec.
    pub fn from_parts(
        n: usize,
        k: u32,
        s: usize,
        field: FieldParams,
        seed: u64,
        blocks_used: u32,
        table: PackedArray,
    ) -> Result<Self> {
        if s < 2 || k == 0 || k > field.m_bits {
            return Err(Error::InvalidParams(format!(
                "inconsistent s={s}, k={k}, p={}",
                field.p
            )));
        }
        if table.len() as u64 != field.q || table.width() != field.m_bits {
            return Err(Error::InvalidParams("table shape does not match the field".into()));
        }
        if table.iter().any(|v| v >= field.p) {
            return Err(Error::InvalidParams("table entry not reduced modulo p".into()));
        }
        if n as u64 > field.q {
            return Err(Error::InvalidParams(format!(
                "{n} keys exceed table length {}",
                field.q
            )));
        }
        Ok(SparseFilter {
            n,
            k,
            s,
            h0: h0_spec(seed, field.p)?,
            blocks: blocks_for(seed, blocks_used, s, &field)?,
            field,
            seed,
            table,
        })
    }

    fn evaluate(&self, key: &[u8], block: &HashBlock, h0: u64) -> u64 {
        let p = u128::from(self.field.p);
        let mut y = u128::from(h0);
        for (col, coef) in row_entries(key, block) {
            y = (y + u128::from(coef) * u128::from(self.table.get(col))) % p;
        }
        y as u64
    }

    /// Probes the blocks in order and returns the first residue below
    /// `2^k`; `None` stands for ⊥.
    pub fn query(&self, key: &[u8]) -> Option<u64> {
        let h0 = self.h0.eval(key);
        let limit = 1u64 << self.k;
        self.blocks
            .iter()
            .map(|b| self.evaluate(key, b, h0))
            .find(|&y| y < limit)
    }

    /// Value of the equation of `key` under block `j`.
    pub fn equation_value(&self, key: &[u8], j: u32) -> Option<u64> {
        let block = self.blocks.get(j as usize)?;
        Some(self.evaluate(key, block, self.h0.eval(key)))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of hash blocks `r` probed by queries.
    pub fn blocks_used(&self) -> u32 {
        self.blocks.len() as u32
    }

    pub fn blocks(&self) -> &[HashBlock] {
        &self.blocks
    }

    pub fn table(&self) -> &PackedArray {
        &self.table
    }

    pub fn table_bits(&self) -> usize {
        self.table.bit_len()
    }
}

/// A sparse filter checked to answer every stored key correctly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifiedSparseFilter {
    pub filter: SparseFilter,
    /// Number of tables built, including the accepted one.
    pub iterations: u32,
}

impl VerifiedSparseFilter {
    pub fn query(&self, key: &[u8]) -> Option<u64> {
        self.filter.query(key)
    }
}

/// Sets up `(p, q)` for `pairs` and builds a verified filter.
pub fn build_verified<K: AsRef<[u8]>>(
    pairs: &[(K, u64)],
    params: &SparseParams,
    master_seed: u64,
) -> Result<VerifiedSparseFilter> {
    params.validate()?;
    let field = setup_params(
        pairs.len().max(1) as u64,
        params.m_bits,
        params.eps,
        derive_seed(master_seed, TAG_FIELD, 0),
    )?;
    build_verified_with_field(pairs, params, &field, master_seed)
}

/// Builds tables with fresh hash seeds until every stored key queries to
/// its own value.
pub fn build_verified_with_field<K: AsRef<[u8]>>(
    pairs: &[(K, u64)],
    params: &SparseParams,
    field: &FieldParams,
    master_seed: u64,
) -> Result<VerifiedSparseFilter> {
    params.validate()?;
    let need = SparseParams::min_verified_m_bits(pairs.len(), params.k);
    if params.m_bits < need {
        return Err(Error::InvalidParams(format!(
            "m_bits {} too small for {} keys at k={}; need at least {need}",
            params.m_bits,
            pairs.len(),
            params.k
        )));
    }
    let mut last_failure = None;
    for it in 0..params.max_rebuilds {
        let seed = derive_seed(master_seed, TAG_TABLE, u64::from(it));
        let build = match create_table(pairs, params, field, seed) {
            Ok(b) => b,
            Err(e @ Error::BuildFailure { .. }) => {
                last_failure = Some(e.to_string());
                continue;
            }
            Err(e) => return Err(e),
        };
        let filter = build.filter;
        if pairs
            .iter()
            .all(|(key, value)| filter.query(key.as_ref()) == Some(*value))
        {
            return Ok(VerifiedSparseFilter {
                filter,
                iterations: it + 1,
            });
        }
        last_failure = Some("a stored key answered from an earlier block".into());
    }
    Err(Error::BuildFailure {
        attempts: params.max_rebuilds,
        reason: last_failure.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::pow_mod;
    use crate::hashing::splitmix64;

    fn pairs(n: usize, k: u32, seed: u64) -> Vec<(Vec<u8>, u64)> {
        (0..n)
            .map(|i| (format!("key_{i}").into_bytes(), splitmix64(seed ^ i as u64) % (1 << k)))
            .collect()
    }

    /// Block whose hash values are fixed: a tiny stand-in for the family.
    fn block_with(s: usize, coefs: &[u64], cols: &[u64], p: u64, q: u64) -> (HashBlock, Vec<u8>) {
        // search a key whose hashes hit the requested values
        let block = derive_block(5, 0, s, p, q).unwrap();
        for i in 0u64.. {
            let key = i.to_le_bytes();
            let ok =
                (0..s).all(|t| block.coefficient(t).eval(&key) == coefs[t] && block.column(t).eval(&key) == cols[t]);
            if ok {
                return (block, key.to_vec());
            }
        }
        unreachable!()
    }

    #[test]
    fn overwrite_rule() {
        // p = 5, q = 3 keeps the key search short
        let (b, key) = block_with(2, &[3, 4], &[2, 2], 5, 3);
        assert_eq!(assemble_row(0, &key, &b).entries, vec![(2, 4)]);
        let (b, key) = block_with(2, &[0, 4], &[1, 2], 5, 3);
        assert_eq!(assemble_row(0, &key, &b).entries, vec![(2, 4)]);
        let (b, key) = block_with(2, &[3, 4], &[2, 0], 5, 3);
        assert_eq!(assemble_row(0, &key, &b).entries, vec![(0, 4), (2, 3)]);
        // a later zero coefficient erases the earlier entry in that column
        let (b, key) = block_with(2, &[3, 0], &[1, 1], 5, 3);
        assert!(assemble_row(0, &key, &b).entries.is_empty());
    }

    #[test]
    fn append_basics() {
        let mut st = EliminationState::new(5, 7).unwrap();
        assert_eq!(st.try_append(&[], 3), Append::Rejected);
        assert_eq!(st.try_append(&[(0, 2), (3, 1)], 1), Append::Accepted);
        assert_eq!(st.rank(), 1);
        assert_eq!(st.try_append(&[(0, 2), (3, 1)], 5), Append::Rejected);
        assert_eq!(st.try_append(&[(0, 4), (3, 2)], 0), Append::Rejected);
        assert_eq!(st.rank(), 1);
        assert_eq!(st.try_append(&[(3, 1), (4, 1)], 2), Append::Accepted);
        assert_eq!(st.rank(), 2);
    }

    fn naive_solve(rows: &[Vec<u64>], rhs: &[u64], p: u64) -> (usize, Option<Vec<u64>>) {
        let n = rows.len();
        let q = rows.first().map_or(0, Vec::len);
        let mut a: Vec<Vec<u64>> = rows
            .iter()
            .zip(rhs)
            .map(|(r, &b)| r.iter().copied().chain([b]).collect())
            .collect();
        let mut rank = 0;
        let mut pivots = Vec::new();
        for col in 0..q {
            let Some(pr) = (rank..n).find(|&r| !a[r][col].is_multiple_of(p)) else {
                continue;
            };
            a.swap(pr, rank);
            let inv = pow_mod(a[rank][col], p - 2, p);
            for x in a[rank].iter_mut() {
                *x = *x * inv % p;
            }
            let pivot_row = a[rank].clone();
            for (r, row) in a.iter_mut().enumerate() {
                if r != rank && row[col] != 0 {
                    let fct = row[col];
                    for (x, &y) in row.iter_mut().zip(&pivot_row) {
                        *x = (*x + p * p - fct * y % p) % p;
                    }
                }
            }
            pivots.push(col);
            rank += 1;
        }
        let consistent = a[rank..].iter().all(|r| r[q] == 0);
        let sol = consistent.then(|| {
            let mut g = vec![0; q];
            for (i, &c) in pivots.iter().enumerate() {
                g[c] = a[i][q];
            }
            g
        });
        (rank, sol)
    }

    #[test]
    fn elimination_matches_naive_oracle() {
        let mut s = 99u64;
        let mut next = || {
            s = splitmix64(s);
            s
        };
        for trial in 0..400 {
            let p = [2u64, 3, 5, 7, 11, 13][trial % 6];
            let n = 1 + (next() % 12) as usize;
            let q = 1 + (next() % 12) as usize;
            let dense = trial % 3 == 0;
            let rows: Vec<Vec<u64>> = (0..n)
                .map(|_| {
                    (0..q)
                        .map(|_| if dense || next() % 3 == 0 { next() % p } else { 0 })
                        .collect()
                })
                .collect();
            let rhs: Vec<u64> = (0..n).map(|_| next() % p).collect();

            let mut st = EliminationState::new(q, p).unwrap();
            let mut kept = Vec::new();
            for (i, row) in rows.iter().enumerate() {
                let entries: Vec<(usize, u64)> = row
                    .iter()
                    .enumerate()
                    .filter(|e| *e.1 != 0)
                    .map(|(c, &v)| (c, v))
                    .collect();
                if st.try_append(&entries, rhs[i]) == Append::Accepted {
                    kept.push(i);
                }
            }
            let (naive_rank, _) = naive_solve(&rows, &vec![0; n], p);
            assert_eq!(st.rank(), naive_rank);
            let kr: Vec<Vec<u64>> = kept.iter().map(|&i| rows[i].clone()).collect();
            let kb: Vec<u64> = kept.iter().map(|&i| rhs[i]).collect();
            let (_, oracle) = naive_solve(&kr, &kb, p);
            let oracle = oracle.expect("independent rows are consistent");
            let g = st.solve();
            for (r, b) in kr.iter().zip(&kb) {
                let lhs = r.iter().zip(&g).fold(0, |acc, (a, x)| (acc + a * x) % p);
                assert_eq!(lhs, *b);
            }
            if st.rank() == q {
                assert_eq!(g, oracle);
            }
        }
    }

    #[test]
    fn rank_never_decreases() {
        let mut st = EliminationState::new(31, 101).unwrap();
        let block = derive_block(3, 0, 3, 101, 31).unwrap();
        for i in 0..200u64 {
            let before = st.rank();
            let row = assemble_row(0, &i.to_le_bytes(), &block);
            match st.try_append(&row.entries, i) {
                Append::Accepted => assert_eq!(st.rank(), before + 1),
                Append::Rejected => assert_eq!(st.rank(), before),
            }
        }
        assert_eq!(st.rank(), 31);
    }

    fn recheck(build: &TableBuild, pairs: &[(Vec<u8>, u64)]) {
        let f = &build.filter;
        for (i, (key, value)) in pairs.iter().enumerate() {
            assert_eq!(f.equation_value(key, build.accepted_block[i]), Some(*value));
        }
    }

    #[test]
    fn equations_hold_after_build() {
        let field = setup_params(50, 31, 0.05, 4).unwrap();
        assert_eq!(field.q, 53);
        for s in [2, 3] {
            let p = pairs(50, 8, 7);
            let params = SparseParams::new(s, 0.05, 31, 8);
            let build = create_table(&p, &params, &field, 11).unwrap();
            recheck(&build, &p);
        }
    }

    #[test]
    fn single_key() {
        let field = setup_params(1, 31, 0.05, 4).unwrap();
        let p = pairs(1, 8, 1);
        let build = create_table(&p, &SparseParams::new(2, 0.05, 31, 8), &field, 2).unwrap();
        recheck(&build, &p);
        let nonzero = build.filter.table().iter().filter(|&v| v != 0).count();
        assert!(nonzero <= 1);
    }

    #[test]
    fn verified_build_answers_members() {
        let p = pairs(300, 8, 2);
        let params = SparseParams::new(2, 0.1, 31, 8);
        let v = build_verified(&p, &params, 5).unwrap();
        assert!(v.iterations >= 1);
        for (key, value) in &p {
            assert_eq!(v.query(key), Some(*value));
        }
        assert_eq!(v.filter.table_bits() as u64, v.filter.field().q * 31);
    }

    #[test]
    fn empty_verified() {
        let p: Vec<(Vec<u8>, u64)> = Vec::new();
        let v = build_verified(&p, &SparseParams::new(2, 0.05, 31, 8), 1).unwrap();
        assert_eq!(v.iterations, 1);
        assert_eq!(v.filter.blocks_used(), 0);
        assert_eq!(v.query(b"anything"), None);
    }

    #[test]
    fn full_range_never_bottom() {
        // k = m_bits: every residue below p < 2^k is in range
        let field = setup_params(20, 8, 0.1, 1).unwrap();
        let p = pairs(20, 8, 3)
            .into_iter()
            .map(|(k, v)| (k, v % field.p))
            .collect::<Vec<_>>();
        let build = create_table(&p, &SparseParams::new(2, 0.1, 8, 8), &field, 3).unwrap();
        for i in 0..500u64 {
            assert!(build.filter.query(&i.to_le_bytes()).is_some());
        }
    }

    #[test]
    fn parameter_checks() {
        assert!(SparseParams::new(1, 0.1, 31, 8).validate().is_err());
        assert!(SparseParams::new(2, 0.0, 31, 8).validate().is_err());
        assert!(SparseParams::new(2, 0.1, 7, 8).validate().is_err());
        assert_eq!(SparseParams::min_verified_m_bits(1000, 8), 19);
        assert_eq!(SparseParams::min_verified_m_bits(1024, 8), 19);
        assert_eq!(SparseParams::min_verified_m_bits(1, 8), 9);
        let p = pairs(100, 8, 1);
        assert!(matches!(
            build_verified(&p, &SparseParams::new(2, 0.1, 12, 8), 0),
            Err(Error::InvalidParams(_))
        ));
        let dup = vec![(b"x".to_vec(), 1), (b"x".to_vec(), 1)];
        assert_eq!(
            build_verified(&dup, &SparseParams::new(2, 0.1, 31, 8), 0),
            Err(Error::DuplicateKey(1))
        );
    }
}
