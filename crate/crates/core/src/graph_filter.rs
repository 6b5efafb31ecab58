//! Bloomier filter over `Z/mZ` built from an acyclic random graph.
//!
//! Every key `x` becomes the edge `(h1(x), h2(x))` of a graph on
//! `ceil(c n)` vertices. Once the graph is acyclic the equations
//! `g[h1(x)] + g[h2(x)] + h3(x) = f(x) (mod m)` are solved by a BFS from one
//! zero-valued root per component. A query recomputes the left-hand side and
//! answers `None` (⊥) when the residue falls outside `[0, 2^k)`.

use std::collections::{HashMap, HashSet};

use crate::bits::{width_for_modulus, PackedArray};
use crate::error::{Error, Result};
use crate::field::ceil_scaled;
use crate::hashing::HashSpec;

pub const DEFAULT_MAX_TRIES: u32 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphParams {
    /// Vertex expansion; the table has `ceil(c n)` entries.
    pub c: f64,
    /// Ring modulus `m`.
    pub modulus: u64,
    /// Value width in bits.
    pub k: u32,
    pub max_tries: u32,
    /// Largest connected component (in vertices) accepted by mutable
    /// builds. `None` selects [`default_component_cap`].
    pub component_cap: Option<usize>,
}

impl GraphParams {
    pub fn new(c: f64, modulus: u64, k: u32) -> Self {
        GraphParams {
            c,
            modulus,
            k,
            max_tries: DEFAULT_MAX_TRIES,
            component_cap: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.c.is_finite() && self.c > 2.0) {
            return bad(format!("expansion c must exceed 2, got {}", self.c));
        }
        if self.modulus < 2 {
            return bad(format!("modulus must be at least 2, got {}", self.modulus));
        }
        if self.k == 0 || self.k > 63 {
            return bad(format!("k must be in [1, 63], got {}", self.k));
        }
        if self.modulus < 1u64 << self.k {
            return bad(format!("modulus {} is smaller than 2^{}", self.modulus, self.k));
        }
        if self.max_tries == 0 {
            return bad("max_tries must be at least 1".into());
        }
        if self.component_cap == Some(0) {
            return bad("component_cap must be at least 1".into());
        }
        Ok(())
    }

    pub fn vertex_count(&self, n: usize) -> usize {
        ceil_scaled(n as u64, self.c) as usize
    }
}

/// Default bound on the largest component for mutable builds,
/// `ceil(8 ln max(n, 2))`. Graphs above the cap are regenerated like cyclic
/// ones.
pub fn default_component_cap(n: usize) -> usize {
    (8.0 * (n.max(2) as f64).ln()).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub key_id: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildGraph {
    pub vertex_count: usize,
    pub edges: Vec<Edge>,
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let gp = self.parent[self.parent[x] as usize];
            self.parent[x] = gp;
            x = gp as usize;
        }
        x
    }

    /// Returns false when `a` and `b` are already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }

    fn component_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }
}

/// Checks acyclicity with union-find. Returns the largest component size in
/// vertices, or the index of the first edge that closes a self-loop,
/// repeated edge or cycle.
fn acyclic_largest_component(graph: &BuildGraph) -> std::result::Result<usize, usize> {
    let mut uf = UnionFind::new(graph.vertex_count);
    let mut largest = usize::from(graph.vertex_count > 0);
    for (i, e) in graph.edges.iter().enumerate() {
        // a self-loop or a parallel edge joins an already-connected pair
        if !uf.union(e.u, e.v) {
            return Err(i);
        }
        largest = largest.max(uf.component_size(e.u));
    }
    Ok(largest)
}

/// True iff the graph has no self-loops, no repeated vertex pairs and no
/// cycles.
pub fn is_simple_acyclic(graph: &BuildGraph) -> bool {
    if graph
        .edges
        .iter()
        .any(|e| e.u >= graph.vertex_count || e.v >= graph.vertex_count)
    {
        return false;
    }
    acyclic_largest_component(graph).is_ok()
}

/// Compressed adjacency: for vertex `v`, `slots[offsets[v]..offsets[v+1]]`
/// holds `(neighbour, edge index)` in edge order. Indices are stored as
/// `u32` like the union-find arrays.
#[derive(Debug, Clone)]
struct Adjacency {
    offsets: Vec<u32>,
    slots: Vec<(u32, u32)>,
}

impl Adjacency {
    fn new(vertex_count: usize, edges: &[Edge]) -> Self {
        let mut offsets = vec![0u32; vertex_count + 1];
        for e in edges {
            offsets[e.u + 1] += 1;
            offsets[e.v + 1] += 1;
        }
        for i in 0..vertex_count {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut slots = vec![(0, 0); offsets[vertex_count] as usize];
        for (i, e) in edges.iter().enumerate() {
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                slots[fill[a] as usize] = (b as u32, i as u32);
                fill[a] += 1;
            }
        }
        Adjacency { offsets, slots }
    }

    fn degree(&self, v: usize) -> usize {
        (self.offsets[v + 1] - self.offsets[v]) as usize
    }

    fn neighbours(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.slots[self.offsets[v] as usize..self.offsets[v + 1] as usize]
            .iter()
            .map(|&(w, e)| (w as usize, e as usize))
    }
}

/// Marks the root of a BFS walk, which has no parent edge.
const NO_EDGE: usize = usize::MAX;

/// Walks the tree containing `root` breadth-first with `g[root] = 0`,
/// leaving `(vertex, parent edge, g value)` in `walk` in visit order. The
/// component must be a tree; an edge is never walked back.
fn solve_component(
    root: usize,
    adj: &Adjacency,
    edges: &[Edge],
    values: &[u64],
    h3: &[u64],
    m: u64,
    walk: &mut Vec<(usize, usize, u64)>,
) {
    // inputs are below m, so a wrapped difference lands back in [0, m)
    let sub = |a: u64, b: u64| {
        if a >= b {
            a - b
        } else {
            a.wrapping_sub(b).wrapping_add(m)
        }
    };
    walk.clear();
    walk.push((root, NO_EDGE, 0));
    let mut next = 0;
    while let Some(&(v, parent, gv)) = walk.get(next) {
        next += 1;
        for (w, ei) in adj.neighbours(v) {
            if ei != parent {
                let key = edges[ei].key_id;
                walk.push((w, ei, sub(sub(values[key], gv), h3[key])));
            }
        }
    }
}

/// Solves `g[u] + g[v] + h3 = value (mod m)` for every edge of an acyclic
/// graph. `values` and `h3_values` are indexed by `key_id`. Each component
/// is rooted at its lowest-numbered vertex; isolated vertices stay 0.
pub fn back_substitute(graph: &BuildGraph, values: &[u64], h3_values: &[u64], modulus: u64) -> Result<Vec<u64>> {
    if modulus < 2 {
        return Err(Error::InvalidParams("modulus must be at least 2".into()));
    }
    check_vertex_count(graph.vertex_count)?;
    if !is_simple_acyclic(graph) {
        return Err(Error::InvalidParams(
            "graph has a self-loop, repeated edge or cycle".into(),
        ));
    }
    Ok(solve_forest(graph, values, h3_values, modulus))
}

fn solve_forest(graph: &BuildGraph, values: &[u64], h3_values: &[u64], modulus: u64) -> Vec<u64> {
    let adj = Adjacency::new(graph.vertex_count, &graph.edges);
    let mut g = vec![0u64; graph.vertex_count];
    let mut seen = vec![false; graph.vertex_count];
    let mut walk = Vec::new();
    for v in 0..graph.vertex_count {
        if !seen[v] && adj.degree(v) > 0 {
            solve_component(v, &adj, &graph.edges, values, h3_values, modulus, &mut walk);
            for &(w, _, gw) in &walk {
                g[w] = gw;
                seen[w] = true;
            }
        }
    }
    g
}

/// Hash functions of one graph attempt. `h2` is drawn from the vertices
/// other than `h1(x)`, so graphs never contain self-loops.
#[derive(Debug, Clone, Copy)]
struct GraphHashes {
    h1: HashSpec,
    h2_offset: Option<HashSpec>,
    h3: HashSpec,
    vertex_count: usize,
}

impl GraphHashes {
    fn new(master_seed: u64, attempt: u32, vertex_count: usize, modulus: u64) -> Result<Self> {
        let (h1, h2_offset) = if vertex_count >= 2 {
            (
                HashSpec::new(master_seed, 1 + 2 * attempt, vertex_count as u64)?,
                Some(HashSpec::new(master_seed, 2 + 2 * attempt, vertex_count as u64 - 1)?),
            )
        } else {
            // no edges can exist; the specs are never evaluated
            (HashSpec::new(master_seed, 1 + 2 * attempt, 1)?, None)
        };
        Ok(GraphHashes {
            h1,
            h2_offset,
            h3: HashSpec::new(master_seed, 0, modulus)?,
            vertex_count,
        })
    }

    #[inline]
    fn vertices(&self, key: &[u8]) -> (usize, usize) {
        let u = self.h1.eval(key) as usize;
        let off = self.h2_offset.map_or(0, |h| h.eval(key)) as usize;
        (u, (u + 1 + off) % self.vertex_count)
    }
}

fn check_vertex_count(vertex_count: usize) -> Result<()> {
    if vertex_count > u32::MAX as usize {
        return Err(Error::UnsupportedSize(format!(
            "{vertex_count} vertices exceed 2^32 - 1"
        )));
    }
    Ok(())
}

fn check_values<K>(pairs: &[(K, u64)], k: u32) -> Result<()> {
    match pairs.iter().position(|(_, v)| *v >= 1u64 << k) {
        Some(i) => Err(Error::ValueOutOfRange {
            index: i,
            value: pairs[i].1,
            k,
        }),
        None => Ok(()),
    }
}

pub(crate) fn check_pairs<K: AsRef<[u8]>>(pairs: &[(K, u64)], k: u32) -> Result<()> {
    check_values(pairs, k)?;
    let mut seen = HashSet::with_capacity(pairs.len());
    match pairs.iter().position(|(key, _)| !seen.insert(key.as_ref())) {
        Some(i) => Err(Error::DuplicateKey(i)),
        None => Ok(()),
    }
}

/// Immutable graph-scheme filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphFilter {
    n: usize,
    modulus: u64,
    k: u32,
    master_seed: u64,
    attempt: u32,
    table: PackedArray,
}

struct Accepted {
    attempt: u32,
    hashes: GraphHashes,
    graph: BuildGraph,
    largest_component: usize,
}

fn find_acyclic<K: AsRef<[u8]>>(
    pairs: &[(K, u64)],
    params: &GraphParams,
    master_seed: u64,
    cap: Option<usize>,
) -> Result<Accepted> {
    check_values(pairs, params.k)?;
    let vertex_count = params.vertex_count(pairs.len());
    check_vertex_count(vertex_count)?;
    // a repeated key is a repeated edge in every attempt, so only keys whose
    // edge was rejected need a duplicate search
    for attempt in 0..params.max_tries {
        let hashes = GraphHashes::new(master_seed, attempt, vertex_count, params.modulus)?;
        let edges = pairs
            .iter()
            .enumerate()
            .map(|(i, (key, _))| {
                let (u, v) = hashes.vertices(key.as_ref());
                Edge { u, v, key_id: i }
            })
            .collect();
        let graph = BuildGraph { vertex_count, edges };
        match acyclic_largest_component(&graph) {
            Ok(largest) if cap.is_none_or(|c| largest <= c) => {
                return Ok(Accepted {
                    attempt,
                    hashes,
                    graph,
                    largest_component: largest,
                })
            }
            Ok(_) => {}
            Err(i) => {
                let key = pairs[i].0.as_ref();
                if pairs[..i].iter().any(|(other, _)| other.as_ref() == key) {
                    check_pairs(pairs, params.k)?;
                }
            }
        }
    }
    check_pairs(pairs, params.k)?;
    Err(Error::BuildFailure {
        attempts: params.max_tries,
        reason: match cap {
            Some(c) => format!("no acyclic graph with components <= {c} vertices"),
            None => "no acyclic graph found".into(),
        },
    })
}

impl GraphFilter {
    pub fn build<K: AsRef<[u8]>>(pairs: &[(K, u64)], params: &GraphParams, master_seed: u64) -> Result<Self> {
        params.validate()?;
        let acc = find_acyclic(pairs, params, master_seed, None)?;
        let (values, h3) = edge_labels(pairs, &acc.hashes);
        let g = solve_forest(&acc.graph, &values, &h3, params.modulus);
        Ok(GraphFilter::from_table(
            pairs.len(),
            params,
            master_seed,
            acc.attempt,
            &g,
        ))
    }

    fn from_table(n: usize, params: &GraphParams, master_seed: u64, attempt: u32, g: &[u64]) -> Self {
        GraphFilter {
            n,
            modulus: params.modulus,
            k: params.k,
            master_seed,
            attempt,
            table: PackedArray::from_values(width_for_modulus(params.modulus), g),
        }
    }

    /// Reassembles a filter from stored parts; used by the codec.
    pub fn from_parts(
        n: usize,
        modulus: u64,
        k: u32,
        master_seed: u64,
        attempt: u32,
        table: PackedArray,
    ) -> Result<Self> {
        if modulus < 2 || k == 0 || k > 63 || modulus < 1u64 << k {
            return Err(Error::InvalidParams(format!(
                "modulus {modulus} and k {k} are inconsistent"
            )));
        }
        if table.width() != width_for_modulus(modulus) {
            return Err(Error::InvalidParams("table width does not match modulus".into()));
        }
        if (n == 0) != table.is_empty() || (n > 0 && table.len() < 2) {
            return Err(Error::InvalidParams(format!(
                "table of {} entries cannot hold {n} keys",
                table.len()
            )));
        }
        if table.iter().any(|v| v >= modulus) {
            return Err(Error::InvalidParams("table entry not reduced modulo m".into()));
        }
        Ok(GraphFilter {
            n,
            modulus,
            k,
            master_seed,
            attempt,
            table,
        })
    }

    fn hashes(&self) -> GraphHashes {
        GraphHashes::new(self.master_seed, self.attempt, self.table.len(), self.modulus)
            .expect("modulus validated at construction")
    }

    /// Returns `f(x)` for stored keys; `None` stands for ⊥.
    pub fn query(&self, key: &[u8]) -> Option<u64> {
        let hashes = self.hashes();
        let m = u128::from(self.modulus);
        let mut y = u128::from(hashes.h3.eval(key));
        if !self.table.is_empty() {
            let (u, v) = hashes.vertices(key);
            y += u128::from(self.table.get(u)) + u128::from(self.table.get(v));
        }
        let y = (y % m) as u64;
        (y < 1u64 << self.k).then_some(y)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Zero-based index of the accepted graph attempt.
    pub fn attempt(&self) -> u32 {
        self.attempt
    }

    /// Number of graphs generated, including the accepted one.
    pub fn attempts(&self) -> u32 {
        self.attempt + 1
    }

    pub fn vertex_count(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &PackedArray {
        &self.table
    }

    pub fn table_bits(&self) -> usize {
        self.table.bit_len()
    }

    /// The two table positions probed for `key`.
    pub fn positions(&self, key: &[u8]) -> Option<(usize, usize)> {
        (!self.table.is_empty()).then(|| self.hashes().vertices(key))
    }
}

fn edge_labels<K: AsRef<[u8]>>(pairs: &[(K, u64)], hashes: &GraphHashes) -> (Vec<u64>, Vec<u64>) {
    pairs
        .iter()
        .map(|(key, value)| (*value, hashes.h3.eval(key.as_ref())))
        .unzip()
}

/// Graph-scheme filter that keeps its graph so stored values can be changed
/// in time proportional to one component.
#[derive(Debug, Clone)]
pub struct MutableGraphFilter {
    filter: GraphFilter,
    edges: Vec<Edge>,
    values: Vec<u64>,
    h3: Vec<u64>,
    adjacency: Adjacency,
    /// Root (lowest vertex) of each vertex's component.
    component_root: Vec<usize>,
    key_index: HashMap<Vec<u8>, usize>,
    cap: usize,
    largest_component: usize,
}

impl MutableGraphFilter {
    pub fn build<K: AsRef<[u8]>>(pairs: &[(K, u64)], params: &GraphParams, master_seed: u64) -> Result<Self> {
        params.validate()?;
        let cap = params
            .component_cap
            .unwrap_or_else(|| default_component_cap(pairs.len()));
        let acc = find_acyclic(pairs, params, master_seed, Some(cap))?;
        let (values, h3) = edge_labels(pairs, &acc.hashes);
        let vc = acc.graph.vertex_count;
        let adjacency = Adjacency::new(vc, &acc.graph.edges);
        let mut g = vec![0u64; vc];
        let mut seen = vec![false; vc];
        let mut component_root: Vec<usize> = (0..vc).collect();
        let mut walk = Vec::new();
        for v in 0..vc {
            if !seen[v] && adjacency.degree(v) > 0 {
                solve_component(v, &adjacency, &acc.graph.edges, &values, &h3, params.modulus, &mut walk);
                for &(w, _, gw) in &walk {
                    g[w] = gw;
                    seen[w] = true;
                    component_root[w] = v;
                }
            }
        }
        let key_index = pairs
            .iter()
            .enumerate()
            .map(|(i, (key, _))| (key.as_ref().to_vec(), i))
            .collect();
        Ok(MutableGraphFilter {
            filter: GraphFilter::from_table(pairs.len(), params, master_seed, acc.attempt, &g),
            edges: acc.graph.edges,
            values,
            h3,
            adjacency,
            component_root,
            key_index,
            cap,
            largest_component: acc.largest_component,
        })
    }

    pub fn filter(&self) -> &GraphFilter {
        &self.filter
    }

    pub fn into_filter(self) -> GraphFilter {
        self.filter
    }

    pub fn query(&self, key: &[u8]) -> Option<u64> {
        self.filter.query(key)
    }

    pub fn component_cap(&self) -> usize {
        self.cap
    }

    pub fn largest_component(&self) -> usize {
        self.largest_component
    }

    /// Number of vertices in the component holding `key`'s edge.
    pub fn component_size(&self, key: &[u8]) -> Result<usize> {
        let e = *self.key_index.get(key).ok_or(Error::UnknownKey)?;
        let root = self.component_root[self.edges[e].u];
        Ok(self.component_root.iter().filter(|&&r| r == root).count())
    }

    pub fn graph(&self) -> BuildGraph {
        BuildGraph {
            vertex_count: self.filter.vertex_count(),
            edges: self.edges.clone(),
        }
    }

    /// Changes the stored value of `key` and re-solves its component.
    /// Returns the number of table entries recomputed.
    pub fn update_value(&mut self, key: &[u8], new_value: u64) -> Result<usize> {
        let e = *self.key_index.get(key).ok_or(Error::UnknownKey)?;
        let k = self.filter.k;
        if new_value >= 1u64 << k {
            return Err(Error::ValueOutOfRange {
                index: e,
                value: new_value,
                k,
            });
        }
        self.values[e] = new_value;
        let root = self.component_root[self.edges[e].u];
        let mut walk = Vec::new();
        solve_component(
            root,
            &self.adjacency,
            &self.edges,
            &self.values,
            &self.h3,
            self.filter.modulus,
            &mut walk,
        );
        for &(w, _, gw) in &walk {
            self.filter.table.set(w, gw);
        }
        Ok(walk.len())
    }
}
