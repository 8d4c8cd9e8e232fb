//! CSS codes, the random ensemble, and brute-force oracles for small codes.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::f2::{sample_orthogonal, BitMatrix, BitVector, F2Error, RowBasis};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CssError {
    #[error("X check {x_row} anticommutes with Z check {z_row}")]
    Orthogonality { x_row: usize, z_row: usize },
    #[error("{kind} check count {rows} is out of range for n = {n}")]
    RateOutOfRange { kind: char, rows: usize, n: usize },
    #[error("code encodes no logical qubits")]
    NoLogicals,
    #[error("code too large for exhaustive search ({0})")]
    TooLarge(String),
    #[error("syndrome is not realizable")]
    NoSolution,
    #[error(transparent)]
    F2(#[from] F2Error),
}

/// Which Pauli type an error or logical operator has.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PauliType {
    X,
    Z,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CssCode {
    hx: BitMatrix,
    hz: BitMatrix,
}

impl CssCode {
    pub fn new(hx: BitMatrix, hz: BitMatrix) -> Result<Self, CssError> {
        if hx.cols() != hz.cols() {
            return Err(F2Error::Dimension {
                expected: hx.cols(),
                got: hz.cols(),
            }
            .into());
        }
        Ok(CssCode { hx, hz })
    }

    /// The [[7,1,3]] Steane code.
    pub fn steane() -> Self {
        let h = BitMatrix::from_bitstrings(&["1111000", "1100110", "1010101"]).unwrap();
        CssCode {
            hx: h.clone(),
            hz: h,
        }
    }

    pub fn n(&self) -> usize {
        self.hx.cols()
    }

    pub fn hx(&self) -> &BitMatrix {
        &self.hx
    }

    pub fn hz(&self) -> &BitMatrix {
        &self.hz
    }

    /// Check matrix that detects errors of type `t`.
    pub fn checks_against(&self, t: PauliType) -> &BitMatrix {
        match t {
            PauliType::Z => &self.hx,
            PauliType::X => &self.hz,
        }
    }

    /// Stabilizers of the same type as errors of type `t`.
    pub fn stabilizers_of(&self, t: PauliType) -> &BitMatrix {
        match t {
            PauliType::Z => &self.hz,
            PauliType::X => &self.hx,
        }
    }

    pub fn k(&self) -> usize {
        self.n()
            .saturating_sub(self.hx.rank() + self.hz.rank())
    }

    /// Max row or column weight over both check matrices.
    pub fn sparsity(&self) -> usize {
        let rows = (0..self.hx.rows())
            .map(|r| self.hx.row_weight(r))
            .chain((0..self.hz.rows()).map(|r| self.hz.row_weight(r)));
        let cols = self.hx.col_weights().into_iter().chain(self.hz.col_weights());
        rows.chain(cols).max().unwrap_or(0)
    }

    pub fn check_orthogonal(&self) -> Result<(), CssError> {
        let prod = self.hx.mul_transpose(&self.hz);
        for x_row in 0..prod.rows() {
            if let Some(z_row) = prod.row(x_row).first_one() {
                return Err(CssError::Orthogonality { x_row, z_row });
            }
        }
        Ok(())
    }

    /// Orthogonality plus check counts strictly between 0 and n/2.
    pub fn validate(&self) -> Result<(), CssError> {
        self.check_orthogonal()?;
        let n = self.n();
        for (kind, rows) in [('X', self.hx.rows()), ('Z', self.hz.rows())] {
            if rows == 0 || 2 * rows >= n {
                return Err(CssError::RateOutOfRange { kind, rows, n });
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        format!("HX\n{}HZ\n{}", self.hx, self.hz)
    }

    pub fn parse_text(text: &str) -> Result<Self, CssError> {
        let bad = |msg: &str| CssError::F2(F2Error::Parse(msg.to_string()));
        let hx_at = text.find("HX").ok_or_else(|| bad("missing HX block"))?;
        let hz_at = text.find("HZ").ok_or_else(|| bad("missing HZ block"))?;
        if hz_at < hx_at {
            return Err(bad("HX block must come first"));
        }
        let hx = BitMatrix::parse_text(&text[hx_at + 2..hz_at])?;
        let hz = BitMatrix::parse_text(&text[hz_at + 2..])?;
        CssCode::new(hx, hz)
    }
}

impl fmt::Debug for CssCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CssCode(n={}, HX={:?}, HZ={:?})", self.n(), self.hx, self.hz)
    }
}

/// Samples a code with uniform `HZ` and `HX` uniform over matrices orthogonal to it.
pub fn sample_css<R: Rng + ?Sized>(
    n: usize,
    x_checks: usize,
    z_checks: usize,
    rng: &mut R,
) -> Result<CssCode, CssError> {
    for (kind, rows) in [('X', x_checks), ('Z', z_checks)] {
        if rows == 0 || rows >= n {
            return Err(CssError::RateOutOfRange { kind, rows, n });
        }
    }
    let mut hz = BitMatrix::zeros(z_checks, n);
    for r in 0..z_checks {
        for c in 0..n {
            hz.set(r, c, rng.gen());
        }
    }
    let hx = sample_orthogonal(&hz, x_checks, rng);
    CssCode::new(hx, hz)
}

/// Lowest-weight nontrivial logical of type `t` with weight at most `w_max`.
pub fn min_weight_logical(code: &CssCode, t: PauliType, w_max: usize) -> Option<BitVector> {
    let checks = code.checks_against(t);
    let stabs = RowBasis::from_matrix(code.stabilizers_of(t));
    let cols: Vec<BitVector> = {
        let tr = checks.transpose();
        (0..tr.rows()).map(|c| tr.row(c)).collect()
    };
    let n = code.n();

    fn dfs(
        start: usize,
        left: usize,
        syn: &BitVector,
        chosen: &mut Vec<usize>,
        cols: &[BitVector],
        stabs: &RowBasis,
        n: usize,
    ) -> Option<BitVector> {
        if left == 0 {
            if syn.is_zero() {
                let v = BitVector::from_indices(n, chosen.iter().copied());
                if !stabs.contains(&v) {
                    return Some(v);
                }
            }
            return None;
        }
        for i in start..=n - left {
            chosen.push(i);
            let next = syn ^ &cols[i];
            let found = dfs(i + 1, left - 1, &next, chosen, cols, stabs, n);
            chosen.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }

    let zero = BitVector::zeros(checks.rows());
    (1..=w_max.min(n)).find_map(|w| dfs(0, w, &zero, &mut Vec::new(), &cols, &stabs, n))
}

/// Returns `(d_X, d_Z)`, or `None` when either exceeds `w_max`.
pub fn min_distance(code: &CssCode, w_max: usize) -> Result<Option<(usize, usize)>, CssError> {
    if code.k() == 0 {
        return Err(CssError::NoLogicals);
    }
    let dx = min_weight_logical(code, PauliType::X, w_max).map(|v| v.weight());
    let dz = min_weight_logical(code, PauliType::Z, w_max).map(|v| v.weight());
    Ok(dx.zip(dz))
}

/// Whether `d_X = d_Z` (exact, searched up to weight n).
pub fn is_balanced(code: &CssCode) -> Result<bool, CssError> {
    Ok(matches!(min_distance(code, code.n())?, Some((dx, dz)) if dx == dz))
}

/// Syndrome of each basis state in `0..2^n`, packed as u64 masks.
pub(crate) fn syndrome_table(checks: &BitMatrix) -> Result<Vec<u64>, CssError> {
    let n = checks.cols();
    if n > 20 {
        return Err(CssError::TooLarge(format!("n = {n} > 20")));
    }
    if checks.rows() > 64 {
        return Err(CssError::TooLarge(format!("{} checks > 64", checks.rows())));
    }
    let tr = checks.transpose();
    let cols: Vec<u64> = (0..n).map(|c| tr.row(c).words().first().copied().unwrap_or(0)).collect();
    let mut syn = vec![0u64; 1 << n];
    for s in 1..syn.len() {
        syn[s] = syn[s & (s - 1)] ^ cols[s.trailing_zeros() as usize];
    }
    Ok(syn)
}

/// Echelon form of the rows of `m` as `u32` masks, for fast rowspace tests.
pub(crate) struct MaskBasis {
    rows: Vec<(u32, u32)>,
}

impl MaskBasis {
    pub(crate) fn new(m: &BitMatrix) -> Self {
        let mut rows: Vec<(u32, u32)> = Vec::new();
        for r in 0..m.rows() {
            let mut v = m.row(r).words().first().copied().unwrap_or(0) as u32;
            for &(p, row) in &rows {
                if v & p != 0 {
                    v ^= row;
                }
            }
            if v != 0 {
                let p = 1u32 << (31 - v.leading_zeros());
                for entry in rows.iter_mut() {
                    if entry.1 & p != 0 {
                        entry.1 ^= v;
                    }
                }
                rows.push((p, v));
            }
        }
        MaskBasis { rows }
    }

    pub(crate) fn contains(&self, mut v: u32) -> bool {
        for &(p, row) in &self.rows {
            if v & p != 0 {
                v ^= row;
            }
        }
        v == 0
    }
}

/// Minimum over single-flip paths from the identity to a nontrivial logical of
/// type `t` of the largest syndrome weight met on the path.
pub fn energy_barrier_bruteforce(code: &CssCode, t: PauliType) -> Result<usize, CssError> {
    if code.k() == 0 {
        return Err(CssError::NoLogicals);
    }
    let n = code.n();
    let syn = syndrome_table(code.checks_against(t))?;
    let stabs = MaskBasis::new(code.stabilizers_of(t));
    let weight = |s: usize| syn[s].count_ones() as usize;
    let max_cost = code.checks_against(t).rows();
    let mut dist = vec![usize::MAX; 1 << n];
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); max_cost + 1];
    dist[0] = 0;
    buckets[0].push(0);
    for cost in 0..=max_cost {
        while let Some(s) = buckets[cost].pop() {
            let s = s as usize;
            if dist[s] != cost {
                continue;
            }
            if syn[s] == 0 && !stabs.contains(s as u32) {
                return Ok(cost);
            }
            for b in 0..n {
                let nb = s ^ (1 << b);
                let c = cost.max(weight(nb));
                if c < dist[nb] {
                    dist[nb] = c;
                    buckets[c].push(nb as u32);
                }
            }
        }
    }
    unreachable!("k >= 1 guarantees a reachable logical")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct YElement {
    pub vector: BitVector,
    /// Index of the `HZ` row this element truncates.
    pub row: usize,
    /// Number of leading positions kept; later entries are zeroed.
    pub cut: usize,
}

/// Prefix truncations of the rows of `HZ`, deduplicated, zero excluded.
#[derive(Clone, Debug, Default)]
pub struct YSet {
    pub elements: Vec<YElement>,
}

impl YSet {
    pub fn build(hz: &BitMatrix) -> Self {
        let n = hz.cols();
        let mut elements: Vec<YElement> = Vec::new();
        for row in 0..hz.rows() {
            let full = hz.row(row);
            let mut prefix = BitVector::zeros(n);
            for cut in 1..=n {
                if !full.get(cut - 1) {
                    continue;
                }
                prefix.set(cut - 1, true);
                if !elements.iter().any(|e| e.vector == prefix) {
                    elements.push(YElement {
                        vector: prefix.clone(),
                        row,
                        cut,
                    });
                }
            }
        }
        YSet { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Smallest subset of `yset` whose `HX` syndrome equals `syndrome`, XORed.
pub fn decode_min_y_weight(code: &CssCode, yset: &YSet, syndrome: &BitVector) -> Result<BitVector, CssError> {
    let hx = code.hx();
    if syndrome.len() != hx.rows() {
        return Err(F2Error::Dimension {
            expected: hx.rows(),
            got: syndrome.len(),
        }
        .into());
    }
    let syns: Vec<BitVector> = yset.elements.iter().map(|e| hx.mul_vec(&e.vector)).collect();
    let mut span = RowBasis::new(hx.rows());
    for s in &syns {
        span.insert(s);
    }
    if !span.contains(syndrome) {
        return Err(CssError::NoSolution);
    }

    fn search(start: usize, left: usize, rem: &BitVector, syns: &[BitVector], chosen: &mut Vec<usize>) -> bool {
        if left == 0 {
            return rem.is_zero();
        }
        for i in start..syns.len() {
            if syns.len() - i < left {
                break;
            }
            chosen.push(i);
            if search(i + 1, left - 1, &(rem ^ &syns[i]), syns, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }

    for depth in 0..=syns.len() {
        let mut chosen = Vec::new();
        if search(0, depth, syndrome, &syns, &mut chosen) {
            let mut out = BitVector::zeros(code.n());
            for i in chosen {
                out ^= &yset.elements[i].vector;
            }
            return Ok(out);
        }
    }
    Err(CssError::NoSolution)
}

/// Minimum-weight vector with the given `HX` syndrome; ties go to the
/// lexicographically smallest support.
pub fn decode_min_weight(code: &CssCode, syndrome: &BitVector) -> Result<BitVector, CssError> {
    let n = code.n();
    if n > 24 {
        return Err(CssError::TooLarge(format!("n = {n} > 24")));
    }
    let x0 = code.hx().solve(syndrome)?.ok_or(CssError::NoSolution)?;
    let kernel = code.hx().kernel_basis();
    let to_mask = |v: &BitVector| v.words().first().copied().unwrap_or(0) as u32;
    let basis: Vec<u32> = (0..kernel.rows()).map(|r| to_mask(&kernel.row(r))).collect();
    let better = |a: u32, b: u32| match a.count_ones().cmp(&b.count_ones()) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => {
            let diff = a ^ b;
            diff != 0 && a & diff & diff.wrapping_neg() != 0
        }
    };
    let mut cur = to_mask(&x0);
    let mut best = cur;
    for i in 1u64..(1u64 << basis.len()) {
        cur ^= basis[i.trailing_zeros() as usize];
        if better(cur, best) {
            best = cur;
        }
    }
    Ok(BitVector::from_mask(n, best as u64))
}

/// Decoder for Z errors on the input code, used inside the concatenated decoder.
pub trait InputDecoder: Sync {
    fn decode(&self, code: &CssCode, syndrome: &BitVector) -> Result<BitVector, CssError>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MinWeightDecoder;

impl InputDecoder for MinWeightDecoder {
    fn decode(&self, code: &CssCode, syndrome: &BitVector) -> Result<BitVector, CssError> {
        decode_min_weight(code, syndrome)
    }
}

#[derive(Clone, Debug)]
pub struct MinYWeightDecoder {
    pub yset: YSet,
}

impl MinYWeightDecoder {
    pub fn new(code: &CssCode) -> Self {
        MinYWeightDecoder {
            yset: YSet::build(code.hz()),
        }
    }
}

impl InputDecoder for MinYWeightDecoder {
    fn decode(&self, code: &CssCode, syndrome: &BitVector) -> Result<BitVector, CssError> {
        decode_min_y_weight(code, &self.yset, syndrome)
    }
}
