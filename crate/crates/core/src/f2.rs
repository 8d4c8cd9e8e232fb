//! Packed linear algebra over F2.
//!
//! Bits are stored little-endian inside `u64` words. Matrices are row-major
//! with a fixed word stride per row.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{BitXor, BitXorAssign};
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

#[inline]
fn xor_words(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum F2Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, ones: I) -> Self {
        let mut v = Self::zeros(len);
        for i in ones {
            v.flip(i);
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector from the low `len` bits of `mask`.
    pub fn from_mask(len: usize, mask: u64) -> Self {
        assert!(len <= WORD);
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = if len == WORD { mask } else { mask & ((1u64 << len) - 1) };
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let bit = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= bit;
        } else {
            self.words[i / WORD] &= !bit;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Inner product over F2.
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len);
        let mut acc = 0u32;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= (a & b).count_ones() & 1;
        }
        acc == 1
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD + t)
                }
            })
        })
    }

    pub fn first_one(&self) -> Option<usize> {
        self.iter_ones().next()
    }

    /// Compares supports as sorted index lists, lexicographically.
    pub fn cmp_support(&self, other: &BitVector) -> Ordering {
        let mut a = self.iter_ones();
        let mut b = other.iter_ones();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(x), Some(y)) if x != y => return x.cmp(&y),
                _ => {}
            }
        }
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({})", self.to_bitstring())
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

impl FromStr for BitVector {
    type Err = F2Error;

    fn from_str(s: &str) -> Result<Self, F2Error> {
        let s = s.trim();
        let mut v = BitVector::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                other => return Err(F2Error::Parse(format!("unexpected character {other:?}"))),
            }
        }
        Ok(v)
    }
}

impl BitXorAssign<&BitVector> for BitVector {
    fn bitxor_assign(&mut self, rhs: &BitVector) {
        assert_eq!(self.len, rhs.len);
        xor_words(&mut self.words, &rhs.words);
    }
}

impl BitXor for &BitVector {
    type Output = BitVector;

    fn bitxor(self, rhs: &BitVector) -> BitVector {
        let mut out = self.clone();
        out ^= rhs;
        out
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BitMatrix {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Panics if rows have differing lengths.
    pub fn from_rows(cols: usize, rows: &[BitVector]) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "row {i} has wrong length");
            m.row_words_mut(i).copy_from_slice(r.words());
        }
        m
    }

    pub fn from_supports(cols: usize, supports: &[Vec<usize>]) -> Self {
        let mut m = Self::zeros(supports.len(), cols);
        for (i, s) in supports.iter().enumerate() {
            for &j in s {
                m.flip(i, j);
            }
        }
        m
    }

    /// Parses rows written as 0/1 strings, e.g. `["1100", "0110"]`.
    pub fn from_bitstrings(rows: &[&str]) -> Result<Self, F2Error> {
        let parsed: Vec<BitVector> = rows.iter().map(|r| r.parse()).collect::<Result<_, _>>()?;
        let cols = parsed.first().map_or(0, |r| r.len());
        if let Some(bad) = parsed.iter().find(|r| r.len() != cols) {
            return Err(F2Error::Dimension {
                expected: cols,
                got: bad.len(),
            });
        }
        Ok(Self::from_rows(cols, &parsed))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let idx = r * self.stride + c / WORD;
        let bit = 1u64 << (c % WORD);
        if value {
            self.data[idx] |= bit;
        } else {
            self.data[idx] &= !bit;
        }
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.stride + c / WORD] ^= 1u64 << (c % WORD);
    }

    pub fn row(&self, i: usize) -> BitVector {
        BitVector {
            len: self.cols,
            words: self.row_words(i).to_vec(),
        }
    }

    pub fn row_support(&self, i: usize) -> Vec<usize> {
        let words = self.row_words(i);
        let mut out = Vec::new();
        for (wi, &w) in words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                out.push(wi * WORD + w.trailing_zeros() as usize);
                w &= w - 1;
            }
        }
        out
    }

    pub fn push_row(&mut self, row: &BitVector) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row.words());
        self.rows += 1;
    }

    pub fn row_weight(&self, i: usize) -> usize {
        self.row_words(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn col_weights(&self) -> Vec<usize> {
        let mut out = vec![0; self.cols];
        for r in 0..self.rows {
            for c in self.row_support(r) {
                out[c] += 1;
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.data.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    /// Row `dst` ^= row `src`.
    fn xor_row_into(&mut self, dst: usize, src: usize) {
        debug_assert_ne!(dst, src);
        let s = self.stride;
        if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * s);
            xor_words(&mut lo[dst * s..(dst + 1) * s], &hi[..s]);
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            xor_words(&mut hi[..s], &lo[src * s..(src + 1) * s]);
        }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row_support(r) {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Computes `M v`.
    pub fn mul_vec(&self, v: &BitVector) -> BitVector {
        assert_eq!(v.len(), self.cols);
        let mut out = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            let mut acc = 0u32;
            for (a, b) in self.row_words(r).iter().zip(v.words()) {
                acc ^= (a & b).count_ones();
            }
            if acc & 1 == 1 {
                out.set(r, true);
            }
        }
        out
    }

    /// Computes `self * other^T`; both operands share the column count.
    pub fn mul_transpose(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.cols);
        let mut out = BitMatrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row_words(i);
            for j in 0..other.rows {
                let mut acc = 0u32;
                for (x, y) in a.iter().zip(other.row_words(j)) {
                    acc ^= (x & y).count_ones();
                }
                if acc & 1 == 1 {
                    out.set(i, j, true);
                }
            }
        }
        out
    }

    pub fn vstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.cols, other.cols);
        let mut out = self.clone();
        out.data.extend_from_slice(&other.data);
        out.rows += other.rows;
        out
    }

    /// Reduces to reduced row echelon form in place, applying the same row
    /// operations to `rhs` when given. Returns the pivot column of each of the
    /// leading `rank` rows.
    fn rref_with(&mut self, mut rhs: Option<&mut BitVector>) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c)) else {
                continue;
            };
            self.swap_rows(r, p);
            if let Some(b) = rhs.as_deref_mut() {
                let (x, y) = (b.get(r), b.get(p));
                b.set(r, y);
                b.set(p, x);
            }
            for i in 0..self.rows {
                if i != r && self.get(i, c) {
                    self.xor_row_into(i, r);
                    if let Some(b) = rhs.as_deref_mut() {
                        if b.get(r) {
                            b.flip(i);
                        }
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref_with(None).len()
    }

    /// Solves `M x = b`. Free variables are set to zero.
    pub fn solve(&self, b: &BitVector) -> Result<Option<BitVector>, F2Error> {
        if b.len() != self.rows {
            return Err(F2Error::Dimension {
                expected: self.rows,
                got: b.len(),
            });
        }
        let mut m = self.clone();
        let mut rhs = b.clone();
        let pivots = m.rref_with(Some(&mut rhs));
        if (pivots.len()..self.rows).any(|i| rhs.get(i)) {
            return Ok(None);
        }
        let mut x = BitVector::zeros(self.cols);
        for (r, &c) in pivots.iter().enumerate() {
            if rhs.get(r) {
                x.set(c, true);
            }
        }
        Ok(Some(x))
    }

    /// Basis of `{v : M v = 0}`, one vector per row.
    pub fn kernel_basis(&self) -> BitMatrix {
        let mut m = self.clone();
        let pivots = m.rref_with(None);
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let mut basis = BitMatrix::zeros(0, self.cols);
        for f in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = BitVector::zeros(self.cols);
            v.set(f, true);
            for (r, &c) in pivots.iter().enumerate() {
                if m.get(r, f) {
                    v.set(c, true);
                }
            }
            basis.push_row(&v);
        }
        basis
    }

    pub fn in_rowspace(&self, v: &BitVector) -> Result<bool, F2Error> {
        if v.len() != self.cols {
            return Err(F2Error::Dimension {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok(RowBasis::from_matrix(self).contains(v))
    }

    /// Parses the text format written by `Display`.
    pub fn parse_text(text: &str) -> Result<Self, F2Error> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| F2Error::Parse("missing header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| F2Error::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_, _>>()?;
        let [rows, cols] = dims[..] else {
            return Err(F2Error::Parse(format!("bad header {header:?}")));
        };
        let mut m = BitMatrix::zeros(0, cols);
        for _ in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| F2Error::Parse("missing row".into()))?;
            let v: BitVector = line.parse()?;
            if v.len() != cols {
                return Err(F2Error::Dimension {
                    expected: cols,
                    got: v.len(),
                });
            }
            m.push_row(&v);
        }
        Ok(m)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row(r))?;
        }
        Ok(())
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "{}", self.row(r))?;
        }
        Ok(())
    }
}

/// Incremental echelon basis supporting fast membership queries.
#[derive(Clone, Debug)]
pub struct RowBasis {
    cols: usize,
    rows: Vec<BitVector>,
    pivots: Vec<usize>,
}

impl RowBasis {
    pub fn new(cols: usize) -> Self {
        RowBasis {
            cols,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn from_matrix(m: &BitMatrix) -> Self {
        let mut b = Self::new(m.cols());
        for r in 0..m.rows() {
            b.insert(&m.row(r));
        }
        b
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the basis in place.
    pub fn reduce(&self, v: &mut BitVector) {
        assert_eq!(v.len(), self.cols);
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v.get(p) {
                *v ^= row;
            }
        }
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        let mut w = v.clone();
        self.reduce(&mut w);
        w.is_zero()
    }

    /// Adds `v`; returns false when it was already in the span.
    pub fn insert(&mut self, v: &BitVector) -> bool {
        let mut w = v.clone();
        self.reduce(&mut w);
        match w.first_one() {
            None => false,
            Some(p) => {
                for row in &mut self.rows {
                    if row.get(p) {
                        *row ^= &w;
                    }
                }
                self.rows.push(w);
                self.pivots.push(p);
                true
            }
        }
    }
}

/// Rank of a matrix given by row supports over `cols` columns.
///
/// Exact for any input. Columns of weight one or two are handled by
/// union-find on the left kernel, so only heavier columns reach dense
/// elimination.
pub fn sparse_rank(rows: &[Vec<usize>], cols: usize) -> usize {
    let m = rows.len();
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); cols];
    for (r, support) in rows.iter().enumerate() {
        for &c in support {
            col_rows[c].push(r);
        }
    }
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for c in &mut col_rows {
        // Repeated entries cancel.
        c.sort_unstable();
        let mut dedup: Vec<usize> = Vec::with_capacity(c.len());
        for &r in c.iter() {
            if dedup.last() == Some(&r) {
                dedup.pop();
            } else {
                dedup.push(r);
            }
        }
        *c = dedup;
        if c.len() == 2 {
            let (a, b) = (find(&mut parent, c[0]), find(&mut parent, c[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut forced_zero = vec![false; m];
    for c in col_rows.iter().filter(|c| c.len() == 1) {
        let root = find(&mut parent, c[0]);
        forced_zero[root] = true;
    }
    let mut comp = vec![usize::MAX; m];
    let mut free = 0;
    for r in 0..m {
        let root = find(&mut parent, r);
        if root == r && !forced_zero[r] {
            comp[r] = free;
            free += 1;
        }
    }
    let mut constraints = BitMatrix::zeros(0, free);
    for c in col_rows.iter().filter(|c| c.len() >= 3) {
        let mut v = BitVector::zeros(free);
        for &r in c {
            let root = find(&mut parent, r);
            if comp[root] != usize::MAX {
                v.flip(comp[root]);
            }
        }
        if !v.is_zero() {
            constraints.push_row(&v);
        }
    }
    let kernel_dim = free - constraints.rank();
    m - kernel_dim
}

/// Samples `row_count` independent rows uniformly from the kernel of `hz`,
/// so the result `H` satisfies `H hz^T = 0`.
pub fn sample_orthogonal<R: Rng + ?Sized>(hz: &BitMatrix, row_count: usize, rng: &mut R) -> BitMatrix {
    let kernel = hz.kernel_basis();
    let mut out = BitMatrix::zeros(0, hz.cols());
    for _ in 0..row_count {
        let mut v = BitVector::zeros(hz.cols());
        for b in 0..kernel.rows() {
            if rng.gen::<bool>() {
                xor_words(&mut v.words, kernel.row_words(b));
            }
        }
        out.push_row(&v);
    }
    out
}
