//! Exact maximum-weight matching on general graphs (Edmonds' blossom
//! algorithm, primal-dual form with integer duals), and the minimum-weight
//! perfect matching with boundary mirrors used by the layer decoders.

use thiserror::Error;

const NONE: usize = usize::MAX;

struct Blossom<'a> {
    nv: usize,
    edges: &'a [(usize, usize, i64)],
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<usize>,
    label: Vec<u8>,
    labelend: Vec<usize>,
    inblossom: Vec<usize>,
    parent: Vec<usize>,
    childs: Vec<Vec<usize>>,
    base: Vec<usize>,
    endps: Vec<Vec<usize>>,
    bestedge: Vec<usize>,
    bestedges: Vec<Option<Vec<usize>>>,
    unused: Vec<usize>,
    dual: Vec<i64>,
    allowed: Vec<bool>,
    queue: Vec<usize>,
}

impl<'a> Blossom<'a> {
    fn new(nv: usize, edges: &'a [(usize, usize, i64)]) -> Self {
        let maxw = edges.iter().map(|e| e.2).max().unwrap_or(0).max(0);
        let mut endpoint = Vec::with_capacity(2 * edges.len());
        let mut neighbend = vec![Vec::new(); nv];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            endpoint.push(i);
            endpoint.push(j);
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        let mut base: Vec<usize> = (0..nv).collect();
        base.extend(std::iter::repeat(NONE).take(nv));
        let mut dual = vec![maxw; nv];
        dual.extend(std::iter::repeat(0).take(nv));
        Blossom {
            nv,
            edges,
            endpoint,
            neighbend,
            mate: vec![NONE; nv],
            label: vec![0; 2 * nv],
            labelend: vec![NONE; 2 * nv],
            inblossom: (0..nv).collect(),
            parent: vec![NONE; 2 * nv],
            childs: vec![Vec::new(); 2 * nv],
            base,
            endps: vec![Vec::new(); 2 * nv],
            bestedge: vec![NONE; 2 * nv],
            bestedges: vec![None; 2 * nv],
            unused: (nv..2 * nv).collect(),
            dual,
            allowed: vec![false; edges.len()],
            queue: Vec::new(),
        }
    }

    fn slack(&self, k: usize) -> i64 {
        let (i, j, w) = self.edges[k];
        self.dual[i] + self.dual[j] - 2 * w
    }

    fn leaves(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![b];
        while let Some(t) = stack.pop() {
            if t < self.nv {
                out.push(t);
            } else {
                stack.extend(self.childs[t].iter().rev());
            }
        }
        out
    }

    fn assign_label(&mut self, w: usize, t: u8, p: usize) {
        let b = self.inblossom[w];
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = NONE;
        self.bestedge[b] = NONE;
        if t == 1 {
            let leaves = self.leaves(b);
            self.queue.extend(leaves);
        } else {
            let mb = self.mate[self.base[b]];
            self.assign_label(self.endpoint[mb], 1, mb ^ 1);
        }
    }

    /// Returns the base of the new blossom, or NONE for an augmenting path.
    fn scan_blossom(&mut self, mut v: usize, mut w: usize) -> usize {
        let mut path = Vec::new();
        let mut found = NONE;
        while v != NONE || w != NONE {
            let mut b = self.inblossom[v];
            if self.label[b] & 4 != 0 {
                found = self.base[b];
                break;
            }
            path.push(b);
            self.label[b] = 5;
            if self.labelend[b] == NONE {
                v = NONE;
            } else {
                v = self.endpoint[self.labelend[b]];
                b = self.inblossom[v];
                v = self.endpoint[self.labelend[b]];
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        found
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unused.pop().expect("blossom slot");
        self.base[b] = base;
        self.parent[b] = NONE;
        self.parent[bb] = b;
        let mut path = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.parent[bv] = b;
            path.push(bv);
            endps.push(self.labelend[bv]);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        path.push(bb);
        path.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.parent[bw] = b;
            path.push(bw);
            endps.push(self.labelend[bw] ^ 1);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }
        self.childs[b] = path.clone();
        self.endps[b] = endps;
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dual[b] = 0;
        for leaf in self.leaves(b) {
            if self.label[self.inblossom[leaf]] == 2 {
                self.queue.push(leaf);
            }
            self.inblossom[leaf] = b;
        }
        let mut bestedgeto = vec![NONE; 2 * self.nv];
        for &sub in &path {
            let lists: Vec<Vec<usize>> = match self.bestedges[sub].take() {
                Some(list) => vec![list],
                None => self
                    .leaves(sub)
                    .into_iter()
                    .map(|leaf| self.neighbend[leaf].iter().map(|p| p / 2).collect())
                    .collect(),
            };
            for list in lists {
                for k in list {
                    let (mut i, mut j, _) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let _ = i;
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == 1
                        && (bestedgeto[bj] == NONE || self.slack(k) < self.slack(bestedgeto[bj]))
                    {
                        bestedgeto[bj] = k;
                    }
                }
            }
            self.bestedge[sub] = NONE;
        }
        let list: Vec<usize> = bestedgeto.into_iter().filter(|&k| k != NONE).collect();
        self.bestedge[b] = NONE;
        for &k in &list {
            if self.bestedge[b] == NONE || self.slack(k) < self.slack(self.bestedge[b]) {
                self.bestedge[b] = k;
            }
        }
        self.bestedges[b] = Some(list);
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        let childs = self.childs[b].clone();
        for &s in &childs {
            self.parent[s] = NONE;
            if s < self.nv {
                self.inblossom[s] = s;
            } else if endstage && self.dual[s] == 0 {
                self.expand_blossom(s, endstage);
            } else {
                for leaf in self.leaves(s) {
                    self.inblossom[leaf] = s;
                }
            }
        }
        if !endstage && self.label[b] == 2 {
            let len = childs.len() as isize;
            let entry = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];
            let mut j = childs.iter().position(|&c| c == entry).unwrap() as isize;
            let (jstep, trick): (isize, usize) = if j & 1 == 1 {
                j -= len;
                (1, 0)
            } else {
                (-1, 1)
            };
            let at = |j: isize| -> usize { j.rem_euclid(len) as usize };
            let mut p = self.labelend[b];
            while j != 0 {
                let q = self.endps[b][at(j - trick as isize)];
                self.label[self.endpoint[p ^ 1]] = 0;
                self.label[self.endpoint[q ^ trick ^ 1]] = 0;
                self.assign_label(self.endpoint[p ^ 1], 2, p);
                self.allowed[q / 2] = true;
                j += jstep;
                p = self.endps[b][at(j - trick as isize)] ^ trick;
                self.allowed[p / 2] = true;
                j += jstep;
            }
            let bv = childs[at(j)];
            let ep = self.endpoint[p ^ 1];
            self.label[ep] = 2;
            self.label[bv] = 2;
            self.labelend[ep] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;
            j += jstep;
            while childs[at(j)] != entry {
                let bv = childs[at(j)];
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                let labelled = self.leaves(bv).into_iter().find(|&v| self.label[v] != 0);
                if let Some(v) = labelled {
                    self.label[v] = 0;
                    let mb = self.mate[self.base[bv]];
                    self.label[self.endpoint[mb]] = 0;
                    self.assign_label(v, 2, self.labelend[v]);
                }
                j += jstep;
            }
        }
        self.label[b] = u8::MAX;
        self.labelend[b] = NONE;
        self.childs[b].clear();
        self.endps[b].clear();
        self.base[b] = NONE;
        self.bestedges[b] = None;
        self.bestedge[b] = NONE;
        self.unused.push(b);
    }

    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.parent[t] != b {
            t = self.parent[t];
        }
        if t >= self.nv {
            self.augment_blossom(t, v);
        }
        let len = self.childs[b].len() as isize;
        let i = self.childs[b].iter().position(|&c| c == t).unwrap();
        let mut j = i as isize;
        let (jstep, trick): (isize, usize) = if i & 1 == 1 {
            j -= len;
            (1, 0)
        } else {
            (-1, 1)
        };
        let at = |j: isize| -> usize { j.rem_euclid(len) as usize };
        while j != 0 {
            j += jstep;
            let t = self.childs[b][at(j)];
            let p = self.endps[b][at(j - trick as isize)] ^ trick;
            if t >= self.nv {
                self.augment_blossom(t, self.endpoint[p]);
            }
            j += jstep;
            let t = self.childs[b][at(j)];
            if t >= self.nv {
                self.augment_blossom(t, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }
        self.childs[b].rotate_left(i);
        self.endps[b].rotate_left(i);
        self.base[b] = self.base[self.childs[b][0]];
    }

    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (mut s, mut p) in [(v, 2 * k + 1), (w, 2 * k)] {
            loop {
                let bs = self.inblossom[s];
                if bs >= self.nv {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                if bt >= self.nv {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    fn run(mut self, max_cardinality: bool) -> Vec<Option<usize>> {
        let nv = self.nv;
        for _ in 0..nv {
            self.label.iter_mut().for_each(|l| *l = 0);
            self.bestedge.iter_mut().for_each(|e| *e = NONE);
            for b in nv..2 * nv {
                self.bestedges[b] = None;
            }
            self.allowed.iter_mut().for_each(|a| *a = false);
            self.queue.clear();
            for v in 0..nv {
                if self.mate[v] == NONE && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, NONE);
                }
            }
            let mut augmented = false;
            loop {
                while let Some(v) = if augmented { None } else { self.queue.pop() } {
                    for idx in 0..self.neighbend[v].len() {
                        let p = self.neighbend[v][idx];
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = 0;
                        if !self.allowed[k] {
                            kslack = self.slack(k);
                            if kslack <= 0 {
                                self.allowed[k] = true;
                            }
                        }
                        if self.allowed[k] {
                            if self.label[self.inblossom[w]] == 0 {
                                self.assign_label(w, 2, p ^ 1);
                            } else if self.label[self.inblossom[w]] == 1 {
                                let base = self.scan_blossom(v, w);
                                if base != NONE {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == 0 {
                                self.label[w] = 2;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == NONE || kslack < self.slack(self.bestedge[b]) {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == 0
                            && (self.bestedge[w] == NONE || kslack < self.slack(self.bestedge[w]))
                        {
                            self.bestedge[w] = k;
                        }
                    }
                }
                if augmented {
                    break;
                }

                // Dual adjustment.
                let mut deltatype = 0;
                let mut delta = 0i64;
                let mut deltaedge = NONE;
                let mut deltablossom = NONE;
                if !max_cardinality {
                    deltatype = 1;
                    delta = *self.dual[..nv].iter().min().unwrap();
                }
                for v in 0..nv {
                    if self.label[self.inblossom[v]] == 0 && self.bestedge[v] != NONE {
                        let d = self.slack(self.bestedge[v]);
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                for b in 0..2 * nv {
                    if self.parent[b] == NONE && self.label[b] == 1 && self.bestedge[b] != NONE {
                        let d = self.slack(self.bestedge[b]) / 2;
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                for b in nv..2 * nv {
                    if self.base[b] != NONE
                        && self.parent[b] == NONE
                        && self.label[b] == 2
                        && (deltatype == 0 || self.dual[b] < delta)
                    {
                        delta = self.dual[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }
                if deltatype == 0 {
                    deltatype = 1;
                    delta = self.dual[..nv].iter().min().copied().unwrap().max(0);
                }
                for v in 0..nv {
                    match self.label[self.inblossom[v]] {
                        1 => self.dual[v] -= delta,
                        2 => self.dual[v] += delta,
                        _ => {}
                    }
                }
                for b in nv..2 * nv {
                    if self.base[b] != NONE && self.parent[b] == NONE {
                        match self.label[b] {
                            1 => self.dual[b] += delta,
                            2 => self.dual[b] -= delta,
                            _ => {}
                        }
                    }
                }
                match deltatype {
                    1 => break,
                    2 => {
                        self.allowed[deltaedge] = true;
                        let (mut i, j, _) = self.edges[deltaedge];
                        if self.label[self.inblossom[i]] == 0 {
                            i = j;
                        }
                        self.queue.push(i);
                    }
                    3 => {
                        self.allowed[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        self.queue.push(i);
                    }
                    _ => self.expand_blossom(deltablossom, false),
                }
            }
            if !augmented {
                break;
            }
            for b in nv..2 * nv {
                if self.parent[b] == NONE && self.base[b] != NONE && self.label[b] == 1 && self.dual[b] == 0 {
                    self.expand_blossom(b, true);
                }
            }
        }
        self.mate
            .iter()
            .map(|&m| if m == NONE { None } else { Some(self.endpoint[m]) })
            .collect()
    }
}

/// Maximum-weight matching of a general graph with integer weights.
/// With `max_cardinality`, the maximum weight among maximum-cardinality
/// matchings. Returns the mate of each vertex.
pub fn max_weight_matching(n: usize, edges: &[(usize, usize, i64)], max_cardinality: bool) -> Vec<Option<usize>> {
    if n == 0 {
        return Vec::new();
    }
    // Doubling keeps every dual update integral.
    let doubled: Vec<(usize, usize, i64)> = edges
        .iter()
        .filter(|e| e.0 != e.1)
        .map(|&(i, j, w)| (i, j, 2 * w))
        .collect();
    Blossom::new(n, &doubled).run(max_cardinality)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchingError {
    #[error("odd number of excitations ({0}) with no boundary to absorb one")]
    OddParityNoBoundary(usize),
}

/// How an excitation was matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pairing {
    Pair(usize, usize),
    Boundary(usize),
}

/// Minimum-cost perfect matching where excitation `i` may also pair with its
/// own boundary mirror at cost `boundary[i]` (when present).
///
/// `cost(i, j)` must be symmetric and non-negative.
pub fn match_with_boundary(
    count: usize,
    cost: impl Fn(usize, usize) -> i64,
    boundary: &[Option<i64>],
) -> Result<(Vec<Pairing>, i64), MatchingError> {
    assert_eq!(boundary.len(), count);
    let any_boundary = boundary.iter().any(Option::is_some);
    if count % 2 == 1 && !any_boundary {
        return Err(MatchingError::OddParityNoBoundary(count));
    }
    if count == 0 {
        return Ok((Vec::new(), 0));
    }
    let mut costs: Vec<(usize, usize, i64)> = Vec::new();
    for i in 0..count {
        for j in i + 1..count {
            costs.push((i, j, cost(i, j)));
        }
    }
    let mirror = |i: usize| count + i;
    let mut nodes = count;
    if any_boundary {
        nodes = 2 * count;
        for (i, b) in boundary.iter().enumerate() {
            if let Some(b) = b {
                costs.push((i, mirror(i), *b));
            }
        }
        for i in 0..count {
            for j in i + 1..count {
                costs.push((mirror(i), mirror(j), 0));
            }
        }
    }
    let top = costs.iter().map(|e| e.2).max().unwrap_or(0) + 1;
    let weighted: Vec<(usize, usize, i64)> = costs.iter().map(|&(i, j, c)| (i, j, top - c)).collect();
    let mate = max_weight_matching(nodes, &weighted, true);
    let mut pairs = Vec::new();
    let mut total = 0;
    for i in 0..count {
        match mate[i] {
            Some(j) if j < count => {
                if i < j {
                    pairs.push(Pairing::Pair(i, j));
                    total += cost(i, j);
                }
            }
            Some(j) => {
                debug_assert_eq!(j, mirror(i));
                pairs.push(Pairing::Boundary(i));
                total += boundary[i].expect("mirror edge exists");
            }
            None => unreachable!("complete graph has a perfect matching"),
        }
    }
    Ok((pairs, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_max(n: usize, edges: &[(usize, usize, i64)], max_card: bool) -> (usize, i64) {
        fn rec(
            k: usize,
            used: &mut Vec<bool>,
            edges: &[(usize, usize, i64)],
            card: usize,
            w: i64,
            best: &mut (usize, i64),
            max_card: bool,
        ) {
            if k == edges.len() {
                let better = if max_card {
                    (card, w) > *best
                } else {
                    w > best.1
                };
                if better {
                    *best = (card, w);
                }
                return;
            }
            rec(k + 1, used, edges, card, w, best, max_card);
            let (i, j, wt) = edges[k];
            if !used[i] && !used[j] {
                used[i] = true;
                used[j] = true;
                rec(k + 1, used, edges, card + 1, w + wt, best, max_card);
                used[i] = false;
                used[j] = false;
            }
        }
        let mut best = (0, 0);
        rec(0, &mut vec![false; n], edges, 0, 0, &mut best, max_card);
        best
    }

    fn check(n: usize, edges: &[(usize, usize, i64)], max_card: bool) {
        let mate = max_weight_matching(n, edges, max_card);
        let mut w = 0;
        let mut card = 0;
        for (i, m) in mate.iter().enumerate() {
            if let Some(j) = *m {
                assert_eq!(mate[j], Some(i));
                if i < j {
                    card += 1;
                    w += edges
                        .iter()
                        .filter(|e| (e.0 == i && e.1 == j) || (e.0 == j && e.1 == i))
                        .map(|e| e.2)
                        .max()
                        .expect("matched along an edge");
                }
            }
        }
        let (bc, bw) = brute_max(n, edges, max_card);
        assert_eq!(w, bw, "edges {edges:?}");
        if max_card {
            assert_eq!(card, bc);
        }
    }

    #[test]
    fn small_known_cases() {
        assert_eq!(max_weight_matching(0, &[], false), Vec::<Option<usize>>::new());
        assert_eq!(max_weight_matching(2, &[(0, 1, 1)], false), vec![Some(1), Some(0)]);
        assert_eq!(
            max_weight_matching(4, &[(0, 1, 10), (1, 2, 11), (2, 3, 10)], false),
            vec![Some(1), Some(0), Some(3), Some(2)]
        );
        // Blossom: triangle plus pendant edges.
        check(6, &[(0, 1, 8), (0, 2, 9), (1, 2, 10), (2, 3, 7), (0, 4, 5), (3, 5, 6)], false);
        check(6, &[(0, 1, 8), (0, 2, 9), (1, 2, 10), (2, 3, 7), (0, 4, 5), (3, 5, 6)], true);
    }

    #[test]
    fn random_graphs_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..600 {
            let n = rng.gen_range(2..9);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(0.55) {
                        edges.push((i, j, rng.gen_range(0..20)));
                    }
                }
            }
            if edges.len() > 16 {
                edges.truncate(16);
            }
            check(n, &edges, trial % 2 == 0);
        }
    }

    /// Exhaustive optimum over pairings, with optional boundary mirrors.
    fn brute_boundary(count: usize, cost: &dyn Fn(usize, usize) -> i64, boundary: &[Option<i64>]) -> Option<i64> {
        fn rec(left: &[usize], cost: &dyn Fn(usize, usize) -> i64, boundary: &[Option<i64>]) -> Option<i64> {
            let Some((&first, rest)) = left.split_first() else { return Some(0) };
            let mut best: Option<i64> = None;
            if let Some(b) = boundary[first] {
                if let Some(r) = rec(rest, cost, boundary) {
                    best = Some(b + r);
                }
            }
            for (idx, &other) in rest.iter().enumerate() {
                let mut remaining = rest.to_vec();
                remaining.remove(idx);
                if let Some(r) = rec(&remaining, cost, boundary) {
                    let c = cost(first, other) + r;
                    best = Some(best.map_or(c, |b| b.min(c)));
                }
            }
            best
        }
        rec(&(0..count).collect::<Vec<_>>(), cost, boundary)
    }

    #[test]
    fn boundary_matching_examples() {
        let (p, w) = match_with_boundary(0, |_, _| 0, &[]).unwrap();
        assert!(p.is_empty() && w == 0);
        // Two excitations at distance 3, far from any boundary.
        let pts = [(5i64, 5i64), (7, 6)];
        let d = |i: usize, j: usize| (pts[i].0 - pts[j].0).abs() + (pts[i].1 - pts[j].1).abs();
        let (p, w) = match_with_boundary(2, d, &[Some(5), Some(5)]).unwrap();
        assert_eq!((p, w), (vec![Pairing::Pair(0, 1)], 3));
        // One excitation next to a boundary, the other far away.
        let (p, w) = match_with_boundary(2, |_, _| 9, &[Some(1), Some(2)]).unwrap();
        assert_eq!((p, w), (vec![Pairing::Boundary(0), Pairing::Boundary(1)], 3));
        assert_eq!(
            match_with_boundary(3, |_, _| 1, &[None, None, None]),
            Err(MatchingError::OddParityNoBoundary(3))
        );
    }

    #[test]
    fn boundary_matching_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..500 {
            let count = rng.gen_range(0..=10);
            let pts: Vec<(i64, i64)> = (0..count).map(|_| (rng.gen_range(0..12), rng.gen_range(0..12))).collect();
            let with_boundary = rng.gen_bool(0.7) || count % 2 == 1;
            let boundary: Vec<Option<i64>> = pts
                .iter()
                .map(|p| with_boundary.then(|| p.0.min(12 - p.0).min(p.1)))
                .collect();
            let cost = |i: usize, j: usize| (pts[i].0 - pts[j].0).abs() + (pts[i].1 - pts[j].1).abs();
            let (pairs, total) = match_with_boundary(count, cost, &boundary).unwrap();
            assert_eq!(Some(total), brute_boundary(count, &cost, &boundary));
            let mut seen = vec![0; count];
            for p in pairs {
                match p {
                    Pairing::Pair(i, j) => {
                        seen[i] += 1;
                        seen[j] += 1;
                    }
                    Pairing::Boundary(i) => seen[i] += 1,
                }
            }
            assert!(seen.iter().all(|&s| s == 1));
        }
    }

    #[test]
    fn larger_instances_match_subset_dp() {
        // Bitmask DP gives the exact optimum for up to ~16 excitations.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..40 {
            let count = rng.gen_range(10..=16);
            let pts: Vec<(i64, i64)> = (0..count).map(|_| (rng.gen_range(0..30), rng.gen_range(0..30))).collect();
            let boundary: Vec<Option<i64>> = pts.iter().map(|p| Some(p.1.min(30 - p.1))).collect();
            let cost = |i: usize, j: usize| (pts[i].0 - pts[j].0).abs() + (pts[i].1 - pts[j].1).abs();
            let mut dp = vec![i64::MAX; 1 << count];
            dp[0] = 0;
            for mask in 1usize..1 << count {
                let i = mask.trailing_zeros() as usize;
                let rest = mask & !(1 << i);
                let mut best = dp[rest].saturating_add(boundary[i].unwrap());
                let mut r = rest;
                while r != 0 {
                    let j = r.trailing_zeros() as usize;
                    r &= r - 1;
                    best = best.min(dp[rest & !(1 << j)].saturating_add(cost(i, j)));
                }
                dp[mask] = best;
            }
            let (_, total) = match_with_boundary(count, cost, &boundary).unwrap();
            assert_eq!(total, dp[(1 << count) - 1]);
        }
    }
}
