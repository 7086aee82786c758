//! Regular quasi-cyclic LDPC codes with degree-3 variable nodes.
//!
//! A base matrix with three ones per column is lifted by `Z x Z` circulant
//! permutations. Shifts are picked greedily, edge by edge, from a seeded
//! random order so that no 4-cycle appears and, where possible, no 6-cycle.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const VARIABLE_DEGREE: usize = 3;

/// Minimum number of base rows; smaller protographs leave too few shift choices.
const MIN_BASE_ROWS: usize = 5;

/// Independent lifting attempts before giving up on girth 6.
pub const MAX_LIFT_ATTEMPTS: u32 = 16;

/// Sparse binary parity-check matrix, stored as sorted column indices per check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n_cols: usize,
    rows: Vec<Vec<u32>>,
    girth: Option<u32>,
    rank: usize,
    seed: u64,
    lifting: usize,
}

impl ParityCheckMatrix {
    /// Builds a matrix from explicit check rows. `seed` and `lifting` are
    /// carried as metadata only.
    pub fn from_rows(
        n_cols: usize,
        mut rows: Vec<Vec<u32>>,
        seed: u64,
        lifting: usize,
    ) -> Result<Self> {
        if n_cols == 0 || rows.is_empty() {
            return Err(Error::CodeParameters("empty parity-check matrix".into()));
        }
        for (i, r) in rows.iter_mut().enumerate() {
            r.sort_unstable();
            if r.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::CodeParameters(format!(
                    "check {i} lists a column twice"
                )));
            }
            if r.last().is_some_and(|&c| c as usize >= n_cols) {
                return Err(Error::CodeParameters(format!(
                    "check {i} exceeds {n_cols} columns"
                )));
            }
        }
        let mut h = Self {
            n_cols,
            rows,
            girth: None,
            rank: 0,
            seed,
            lifting,
        };
        h.girth = girth(&h);
        h.rank = gf2_rank(&h);
        Ok(h)
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    /// Length of the shortest cycle of the Tanner graph; `None` if acyclic.
    pub fn girth(&self) -> Option<u32> {
        self.girth
    }

    /// GF(2) rank.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of linearly dependent checks.
    pub fn rank_deficiency(&self) -> usize {
        self.n_rows() - self.rank
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Circulant size, 1 for unstructured matrices.
    pub fn lifting(&self) -> usize {
        self.lifting
    }

    pub fn edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `1 - rank / n`.
    pub fn rate(&self) -> f64 {
        1.0 - self.rank as f64 / self.n_cols as f64
    }

    pub fn column_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_cols];
        for r in &self.rows {
            for &c in r {
                d[c as usize] += 1;
            }
        }
        d
    }

    pub fn check_degrees(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    /// Checks attached to each column.
    pub fn columns(&self) -> Vec<Vec<u32>> {
        let mut cols = vec![Vec::with_capacity(VARIABLE_DEGREE); self.n_cols];
        for (i, r) in self.rows.iter().enumerate() {
            for &c in r {
                cols[c as usize].push(i as u32);
            }
        }
        cols
    }

    pub fn syndrome(&self, word: &[u8]) -> Vec<u8> {
        self.rows
            .iter()
            .map(|r| r.iter().fold(0u8, |acc, &c| acc ^ (word[c as usize] & 1)))
            .collect()
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == self.n_cols
            && self
                .rows
                .iter()
                .all(|r| r.iter().fold(0u8, |acc, &c| acc ^ (word[c as usize] & 1)) == 0)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A closed walk in the base graph: edge indices with alternating signs.
struct BaseCycle {
    edges: Vec<usize>,
}

impl BaseCycle {
    /// The lifted cycle closes iff the alternating shift sum vanishes mod `z`.
    fn closes(&self, shifts: &[usize], z: usize) -> bool {
        let mut s = 0usize;
        for (i, &e) in self.edges.iter().enumerate() {
            if i % 2 == 0 {
                s += shifts[e];
            } else {
                s += z - shifts[e];
            }
        }
        s % z == 0
    }
}

/// Regular `(3, dc)` code of length `n` and design rate `rate`, with check
/// degrees as even as the base matrix allows.
pub fn construct_ldpc(n: usize, rate: f64, seed: u64) -> Result<ParityCheckMatrix> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::CodeParameters(format!("rate {rate} outside (0, 1)")));
    }
    let m = libm::round(n as f64 * (1.0 - rate)) as usize;
    if m < MIN_BASE_ROWS || m >= n || 3 * n < 2 * m {
        return Err(Error::CodeParameters(format!(
            "no regular code with n = {n}, {m} checks"
        )));
    }
    let g = gcd(n, m);
    let z = (1..=g)
        .rev()
        .find(|z| g % z == 0 && m / z >= MIN_BASE_ROWS)
        .ok_or_else(|| Error::CodeParameters(format!("no lifting for n = {n}, {m} checks")))?;
    let (mb, nb) = (m / z, n / z);

    // Base edge e = 3j + t sits in column j, row e mod mb: check degrees differ by at most one.
    let edges: Vec<(usize, usize)> = (0..VARIABLE_DEGREE * nb)
        .map(|e| (e % mb, e / VARIABLE_DEGREE))
        .collect();
    let (short, long) = base_cycles(&edges, mb, nb);

    let mut attempt_seed = seed;
    for _ in 0..MAX_LIFT_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed);
        if let Some(shifts) = lift(&edges, z, &short, &long, &mut rng) {
            let mut rows = vec![Vec::new(); m];
            for (e, &(r, c)) in edges.iter().enumerate() {
                for k in 0..z {
                    rows[r * z + k].push((c * z + (k + shifts[e]) % z) as u32);
                }
            }
            let h = ParityCheckMatrix::from_rows(n, rows, seed, z)?;
            if h.girth().map_or(true, |g| g >= 6) {
                return Ok(h);
            }
        }
        attempt_seed = attempt_seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    }
    Err(Error::GirthUnreachable {
        target: 6,
        attempts: MAX_LIFT_ATTEMPTS,
    })
}

/// Base-graph 4- and 6-cycles, grouped by their largest edge index.
fn base_cycles(
    edges: &[(usize, usize)],
    mb: usize,
    nb: usize,
) -> (Vec<Vec<BaseCycle>>, Vec<Vec<BaseCycle>>) {
    let mut at = vec![vec![None; nb]; mb];
    for (e, &(r, c)) in edges.iter().enumerate() {
        at[r][c] = Some(e);
    }
    let col_rows: Vec<Vec<usize>> = (0..nb)
        .map(|c| (0..mb).filter(|&r| at[r][c].is_some()).collect())
        .collect();
    let row_cols: Vec<Vec<usize>> = (0..mb)
        .map(|r| (0..nb).filter(|&c| at[r][c].is_some()).collect())
        .collect();
    let e = |r: usize, c: usize| at[r][c].unwrap();
    let mut short: Vec<Vec<BaseCycle>> = (0..edges.len()).map(|_| Vec::new()).collect();
    let mut long: Vec<Vec<BaseCycle>> = (0..edges.len()).map(|_| Vec::new()).collect();

    for a in 0..nb {
        for &i in &col_rows[a] {
            for &j in &col_rows[a] {
                if j == i {
                    continue;
                }
                for &b in &row_cols[j] {
                    if b == a {
                        continue;
                    }
                    // 4-cycle i-a-j-b, kept once: a < b, i < j.
                    if a < b && i < j && at[i][b].is_some() {
                        let cyc = vec![e(i, a), e(j, a), e(j, b), e(i, b)];
                        let top = *cyc.iter().max().unwrap();
                        short[top].push(BaseCycle { edges: cyc });
                    }
                    for &l in &col_rows[b] {
                        if l == j || l == i {
                            continue;
                        }
                        for &c in &row_cols[l] {
                            if c == b || c == a || at[i][c].is_none() {
                                continue;
                            }
                            // Each 6-cycle is walked 12 times; keep the walk starting at its
                            // smallest column and heading to the smaller of its two neighbours.
                            if a > b.min(c) || b > c {
                                continue;
                            }
                            let cyc = vec![e(i, a), e(j, a), e(j, b), e(l, b), e(l, c), e(i, c)];
                            let top = *cyc.iter().max().unwrap();
                            long[top].push(BaseCycle { edges: cyc });
                        }
                    }
                }
            }
        }
    }
    (short, long)
}

fn lift(
    edges: &[(usize, usize)],
    z: usize,
    short: &[Vec<BaseCycle>],
    long: &[Vec<BaseCycle>],
    rng: &mut ChaCha8Rng,
) -> Option<Vec<usize>> {
    let mut shifts = vec![0usize; edges.len()];
    let mut order: Vec<usize> = (0..z).collect();
    for e in 0..edges.len() {
        order.shuffle(rng);
        let mut fallback = None;
        let mut chosen = None;
        for &s in &order {
            shifts[e] = s;
            if short[e].iter().any(|c| c.closes(&shifts, z)) {
                continue;
            }
            if long[e].iter().any(|c| c.closes(&shifts, z)) {
                fallback.get_or_insert(s);
                continue;
            }
            chosen = Some(s);
            break;
        }
        shifts[e] = chosen.or(fallback)?;
    }
    Some(shifts)
}

/// Exact girth by breadth-first search from every variable node, pruned at
/// half the shortest cycle found so far.
pub fn girth(h: &ParityCheckMatrix) -> Option<u32> {
    let n = h.n_cols();
    let cols = h.columns();
    let total = n + h.n_rows();
    let mut dist = vec![u32::MAX; total];
    let mut parent = vec![usize::MAX; total];
    let mut touched = Vec::new();
    let mut queue = VecDeque::new();
    let mut best = u32::MAX;
    for root in 0..n {
        for &t in &touched {
            dist[t] = u32::MAX;
            parent[t] = usize::MAX;
        }
        touched.clear();
        queue.clear();
        dist[root] = 0;
        touched.push(root);
        queue.push_back(root);
        'bfs: while let Some(u) = queue.pop_front() {
            if 2 * (dist[u] + 1) > best {
                break;
            }
            let neighbours: &[u32] = if u < n { &cols[u] } else { h.row(u - n) };
            for &w in neighbours {
                let w = if u < n { n + w as usize } else { w as usize };
                if w == parent[u] {
                    continue;
                }
                if dist[w] == u32::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    touched.push(w);
                    queue.push_back(w);
                } else {
                    best = best.min(dist[u] + dist[w] + 1);
                    if 2 * dist[u] + 1 >= best {
                        break 'bfs;
                    }
                }
            }
        }
    }
    (best != u32::MAX).then_some(best)
}

/// Dense GF(2) rows packed into 64-bit words.
#[derive(Debug, Clone)]
pub(crate) struct PackedRows {
    words: usize,
    data: Vec<u64>,
}

impl PackedRows {
    pub(crate) fn from_matrix(h: &ParityCheckMatrix) -> Self {
        let words = h.n_cols().div_ceil(64);
        let mut data = vec![0u64; words * h.n_rows()];
        for (i, r) in h.rows().iter().enumerate() {
            for &c in r {
                data[i * words + c as usize / 64] |= 1 << (c % 64);
            }
        }
        Self { words, data }
    }

    pub(crate) fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.words..(i + 1) * self.words]
    }

    fn get(&self, i: usize, c: usize) -> bool {
        self.data[i * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    fn swap(&mut self, a: usize, b: usize) {
        if a != b {
            for w in 0..self.words {
                self.data.swap(a * self.words + w, b * self.words + w);
            }
        }
    }

    /// Row `dst ^= row src`, only from word `from` on.
    fn xor_into(&mut self, dst: usize, src: usize, from: usize) {
        let (d, s) = (dst * self.words, src * self.words);
        for w in from..self.words {
            let v = self.data[s + w];
            self.data[d + w] ^= v;
        }
    }

    /// Gauss-Jordan elimination with pivots taken from `columns` in order.
    /// Returns the pivot column of each of the first `rank` rows.
    pub(crate) fn reduce(&mut self, rows: usize, columns: &[usize]) -> Vec<usize> {
        let mut pivots = Vec::new();
        for &c in columns {
            let r = pivots.len();
            if r == rows {
                break;
            }
            let Some(p) = (r..rows).find(|&i| self.get(i, c)) else {
                continue;
            };
            self.swap(r, p);
            for i in 0..rows {
                if i != r && self.get(i, c) {
                    self.xor_into(i, r, 0);
                }
            }
            pivots.push(c);
        }
        pivots
    }

    pub(crate) fn row_is_zero(&self, i: usize) -> bool {
        self.row(i).iter().all(|&w| w == 0)
    }
}

/// Forward elimination only, enough for the rank.
fn gf2_rank(h: &ParityCheckMatrix) -> usize {
    let mut p = PackedRows::from_matrix(h);
    let rows = h.n_rows();
    let mut rank = 0;
    for c in 0..h.n_cols() {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&i| p.get(i, c)) else {
            continue;
        };
        p.swap(rank, piv);
        for i in rank + 1..rows {
            if p.get(i, c) {
                p.xor_into(i, rank, c / 64);
            }
        }
        rank += 1;
    }
    rank
}

/// Systematic encoder whose parity bits occupy a chosen set of columns.
#[derive(Debug, Clone)]
pub struct SystematicEncoder {
    n: usize,
    reduced: PackedRows,
    /// Parity column of each reduced row.
    parity_columns: Vec<usize>,
    /// Remaining columns in increasing order; they carry the message.
    info_columns: Vec<usize>,
    rank_deficiency: usize,
}

impl SystematicEncoder {
    /// Places parity on a subset of `allowed` (tried in order). Fails if some
    /// check cannot be satisfied from those columns alone.
    pub fn new(h: &ParityCheckMatrix, allowed: &[usize]) -> Result<Self> {
        if let Some(&c) = allowed.iter().find(|&&c| c >= h.n_cols()) {
            return Err(Error::CodeParameters(format!(
                "parity column {c} out of range"
            )));
        }
        let mut reduced = PackedRows::from_matrix(h);
        let rows = h.n_rows();
        let parity_columns = reduced.reduce(rows, allowed);
        if (parity_columns.len()..rows).any(|i| !reduced.row_is_zero(i)) {
            return Err(Error::CodeParameters(
                "parity columns do not span the check space".into(),
            ));
        }
        let mut is_parity = vec![false; h.n_cols()];
        for &c in &parity_columns {
            is_parity[c] = true;
        }
        let info_columns = (0..h.n_cols()).filter(|&c| !is_parity[c]).collect();
        Ok(Self {
            n: h.n_cols(),
            rank_deficiency: rows - parity_columns.len(),
            reduced,
            parity_columns,
            info_columns,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Message length.
    pub fn k(&self) -> usize {
        self.info_columns.len()
    }

    pub fn parity_columns(&self) -> &[usize] {
        &self.parity_columns
    }

    pub fn info_columns(&self) -> &[usize] {
        &self.info_columns
    }

    pub fn rank_deficiency(&self) -> usize {
        self.rank_deficiency
    }

    /// Codeword with `info` on [`SystematicEncoder::info_columns`].
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::LengthMismatch {
                expected: self.k(),
                got: info.len(),
            });
        }
        let mut word = vec![0u8; self.n];
        let mut packed = vec![0u64; self.n.div_ceil(64)];
        for (&c, &b) in self.info_columns.iter().zip(info) {
            word[c] = b & 1;
            packed[c / 64] |= ((b & 1) as u64) << (c % 64);
        }
        for (i, &c) in self.parity_columns.iter().enumerate() {
            let ones: u32 = self
                .reduced
                .row(i)
                .iter()
                .zip(&packed)
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            word[c] = (ones & 1) as u8;
        }
        Ok(word)
    }
}
