//! Byte images of filters and the TSV corpus format.
//!
//! An image is the magic `BLF1`, a version byte, a scheme byte and a record.
//! A record is nine little-endian `u64` header fields
//!
//! ```text
//! n, table_len, modulus (m or p), q, k, s, seed, attempt, count
//! ```
//!
//! followed by the bit-packed table (`table_len` entries of
//! `ceil(log2 modulus)` bits, MSB first, zero-padded to a byte). Graph
//! filters store `q = s = count = 0`; sparse filters store `count = r`, the
//! number of hash blocks. A bucketed image stores `count = b` and no table,
//! then `b` sparse records.

use std::collections::HashSet;
use std::io::BufRead;

use crate::bits::{width_for_modulus, PackedArray};
use crate::bucketed_filter::BucketedFilter;
use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::graph_filter::GraphFilter;
use crate::sparse_filter::SparseFilter;

pub const MAGIC: &[u8; 4] = b"BLF1";
pub const VERSION: u8 = 1;
pub const SCHEME_GRAPH: u8 = 1;
pub const SCHEME_SPARSE: u8 = 2;
pub const SCHEME_BUCKETED: u8 = 3;

const PREAMBLE_LEN: usize = 6;
const HEADER_FIELDS: usize = 9;
pub const RECORD_HEADER_LEN: usize = HEADER_FIELDS * 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Filter {
    Graph(GraphFilter),
    Sparse(SparseFilter),
    Bucketed(BucketedFilter),
}

impl Filter {
    pub fn query(&self, key: &[u8]) -> Option<u64> {
        match self {
            Filter::Graph(f) => f.query(key),
            Filter::Sparse(f) => f.query(key),
            Filter::Bucketed(f) => f.query(key),
        }
    }

    pub fn scheme_id(&self) -> u8 {
        match self {
            Filter::Graph(_) => SCHEME_GRAPH,
            Filter::Sparse(_) => SCHEME_SPARSE,
            Filter::Bucketed(_) => SCHEME_BUCKETED,
        }
    }

    pub fn scheme_name(&self) -> &'static str {
        match self {
            Filter::Graph(_) => "graph",
            Filter::Sparse(_) => "sparse",
            Filter::Bucketed(_) => "bucketed",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Filter::Graph(f) => f.len(),
            Filter::Sparse(f) => f.len(),
            Filter::Bucketed(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn k(&self) -> u32 {
        match self {
            Filter::Graph(f) => f.k(),
            Filter::Sparse(f) => f.k(),
            Filter::Bucketed(f) => f.k(),
        }
    }

    /// Bits of table payload, excluding headers and byte padding.
    pub fn table_bits(&self) -> usize {
        match self {
            Filter::Graph(f) => f.table_bits(),
            Filter::Sparse(f) => f.table_bits(),
            Filter::Bucketed(f) => f.table_bits(),
        }
    }
}

impl From<GraphFilter> for Filter {
    fn from(f: GraphFilter) -> Self {
        Filter::Graph(f)
    }
}

impl From<SparseFilter> for Filter {
    fn from(f: SparseFilter) -> Self {
        Filter::Sparse(f)
    }
}

impl From<BucketedFilter> for Filter {
    fn from(f: BucketedFilter) -> Self {
        Filter::Bucketed(f)
    }
}

fn put_header(out: &mut Vec<u8>, fields: [u64; HEADER_FIELDS]) {
    for v in fields {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn put_sparse(out: &mut Vec<u8>, f: &SparseFilter) {
    let field = f.field();
    put_header(
        out,
        [
            f.len() as u64,
            f.table().len() as u64,
            field.p,
            field.q,
            u64::from(f.k()),
            f.s() as u64,
            f.seed(),
            0,
            u64::from(f.blocks_used()),
        ],
    );
    f.table().write_bytes(out);
}

pub fn encode(filter: &Filter) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(filter.scheme_id());
    match filter {
        Filter::Graph(f) => {
            put_header(
                &mut out,
                [
                    f.len() as u64,
                    f.table().len() as u64,
                    f.modulus(),
                    0,
                    u64::from(f.k()),
                    0,
                    f.master_seed(),
                    u64::from(f.attempt()),
                    0,
                ],
            );
            f.table().write_bytes(&mut out);
        }
        Filter::Sparse(f) => put_sparse(&mut out, f),
        Filter::Bucketed(f) => {
            let entries: usize = f.filters().iter().map(|s| s.table().len()).sum();
            put_header(
                &mut out,
                [
                    f.len() as u64,
                    entries as u64,
                    0,
                    0,
                    u64::from(f.k()),
                    f.filters()[0].s() as u64,
                    f.bucket_seed(),
                    0,
                    f.bucket_count() as u64,
                ],
            );
            for s in f.filters() {
                put_sparse(&mut out, s);
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail<T>(&self, offset: usize, msg: impl Into<String>) -> Result<T> {
        Err(Error::Format {
            offset,
            msg: msg.into(),
        })
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let remaining = self.bytes.len() - self.pos;
        if len > remaining {
            return self.fail(
                self.pos,
                format!("truncated {what}: need {len} bytes, have {remaining}"),
            );
        }
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn header(&mut self) -> Result<(usize, Header)> {
        let start = self.pos;
        let raw = self.take(RECORD_HEADER_LEN, "header")?;
        let mut f = [0u64; HEADER_FIELDS];
        for (i, chunk) in raw.chunks_exact(8).enumerate() {
            f[i] = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        Ok((
            start,
            Header {
                n: f[0],
                table_len: f[1],
                modulus: f[2],
                q: f[3],
                k: f[4],
                s: f[5],
                seed: f[6],
                attempt: f[7],
                count: f[8],
            },
        ))
    }

    /// Reads a table after checking its declared size against the input.
    fn table(&mut self, len: u64, width: u32) -> Result<PackedArray> {
        let start = self.pos;
        let bits = u128::from(len) * u128::from(width);
        let bytes = bits.div_ceil(8);
        let remaining = (self.bytes.len() - self.pos) as u128;
        if bytes > remaining {
            return self.fail(start, format!("truncated table: need {bytes} bytes, have {remaining}"));
        }
        let raw = self.take(bytes as usize, "table")?;
        Ok(PackedArray::from_bytes(width, len as usize, raw))
    }
}

struct Header {
    n: u64,
    table_len: u64,
    modulus: u64,
    q: u64,
    k: u64,
    s: u64,
    seed: u64,
    attempt: u64,
    count: u64,
}

fn small<T: TryFrom<u64>>(r: &Reader, offset: usize, v: u64, what: &str) -> Result<T> {
    T::try_from(v).or_else(|_| r.fail(offset, format!("{what} {v} out of range")))
}

fn read_sparse(r: &mut Reader) -> Result<SparseFilter> {
    let (at, h) = r.header()?;
    if h.table_len != h.q {
        return r.fail(at, format!("table length {} differs from q {}", h.table_len, h.q));
    }
    let field = match FieldParams::from_primes(h.modulus, h.q) {
        Ok(f) => f,
        Err(e) => return r.fail(at, e.to_string()),
    };
    let k = small::<u32>(r, at, h.k, "k")?;
    let s = small::<usize>(r, at, h.s, "s")?;
    let blocks = small::<u32>(r, at, h.count, "block count")?;
    let n = small::<usize>(r, at, h.n, "n")?;
    let table = r.table(h.table_len, field.m_bits)?;
    SparseFilter::from_parts(n, k, s, field, h.seed, blocks, table).or_else(|e| r.fail(at, e.to_string()))
}

pub fn decode(bytes: &[u8]) -> Result<Filter> {
    let mut r = Reader { bytes, pos: 0 };
    let pre = r.take(PREAMBLE_LEN, "preamble")?;
    if &pre[..4] != MAGIC {
        return r.fail(0, "bad magic");
    }
    if pre[4] != VERSION {
        return r.fail(4, format!("unsupported version {}", pre[4]));
    }
    let filter = match pre[5] {
        SCHEME_GRAPH => {
            let (at, h) = r.header()?;
            if h.q != 0 || h.s != 0 || h.count != 0 {
                return r.fail(at, "graph record with sparse fields set");
            }
            if h.modulus < 2 {
                return r.fail(at, format!("modulus {} below 2", h.modulus));
            }
            let k = small::<u32>(&r, at, h.k, "k")?;
            let attempt = small::<u32>(&r, at, h.attempt, "attempt")?;
            let n = small::<usize>(&r, at, h.n, "n")?;
            let table = r.table(h.table_len, width_for_modulus(h.modulus))?;
            Filter::Graph(
                GraphFilter::from_parts(n, h.modulus, k, h.seed, attempt, table)
                    .or_else(|e| r.fail(at, e.to_string()))?,
            )
        }
        SCHEME_SPARSE => Filter::Sparse(read_sparse(&mut r)?),
        SCHEME_BUCKETED => {
            let (at, h) = r.header()?;
            // each bucket needs at least a header
            if h.count == 0 || h.count > ((bytes.len() - r.pos) / RECORD_HEADER_LEN) as u64 {
                return r.fail(at, format!("bucket count {} inconsistent with image size", h.count));
            }
            let n = small::<usize>(&r, at, h.n, "n")?;
            let mut filters = Vec::with_capacity(h.count as usize);
            for _ in 0..h.count {
                let f = read_sparse(&mut r)?;
                if u64::from(f.k()) != h.k || f.s() as u64 != h.s {
                    return r.fail(at, "bucket parameters differ from the image header");
                }
                filters.push(f);
            }
            let total: usize = filters.iter().map(|f| f.table().len()).sum();
            if total as u64 != h.table_len {
                return r.fail(at, "bucket tables do not add up to the declared length");
            }
            Filter::Bucketed(BucketedFilter::from_parts(n, h.seed, filters).or_else(|e| r.fail(at, e.to_string()))?)
        }
        other => return Err(Error::UnsupportedScheme(other)),
    };
    if r.pos != bytes.len() {
        return r.fail(r.pos, format!("{} trailing bytes", bytes.len() - r.pos));
    }
    Ok(filter)
}

/// Reads `key<TAB>value` lines. Values must be decimal and below `2^k`;
/// duplicate keys are rejected. Line numbers in errors are 1-based.
pub fn read_tsv<R: BufRead>(reader: R, k: u32) -> Result<Vec<(Vec<u8>, u64)>> {
    if k == 0 || k > 63 {
        return Err(Error::InvalidParams(format!("k must be in [1, 63], got {k}")));
    }
    let mut out = Vec::new();
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: String| Error::Input { line: line_no, msg };
        let line = line.map_err(|e| err(e.to_string()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let (key, value) = line
            .split_once('\t')
            .ok_or_else(|| err("expected key<TAB>value".into()))?;
        let value: u64 = value
            .parse()
            .map_err(|_| err(format!("value {value:?} is not a nonnegative decimal")))?;
        if value >= 1u64 << k {
            return Err(err(format!("value {value} does not fit in {k} bits")));
        }
        if !seen.insert(key.as_bytes().to_vec()) {
            return Err(err(format!("duplicate key {key:?}")));
        }
        out.push((key.as_bytes().to_vec(), value));
    }
    Ok(out)
}
