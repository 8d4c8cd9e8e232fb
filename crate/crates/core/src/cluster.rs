//! Cluster decoder for X errors on a layer code: clusters of Z-check
//! excitations grow on the decoding hypergraph until each can be annihilated
//! by hyperedges it fully contains.

use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::f2::{BitMatrix, BitVector};
use crate::layer::{Boundary, LayerCode};
use crate::matching::{match_with_boundary, Pairing};
use crate::uf::UnionFind;

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeClass {
    /// One vertex: the qubit sits on a smooth side.
    SmoothBoundary,
    /// Two vertices, next to a rough side.
    RoughBoundary,
    /// Two vertices in the bulk of one region.
    Regional,
    /// Three or more vertices spanning several regions.
    Defect,
    /// In no check; invisible to the decoder.
    Unchecked,
}

/// Vertices are Z checks, hyperedges are qubits.
#[derive(Clone, Debug)]
pub struct DecodingHypergraph {
    edges: Vec<Vec<usize>>,
    incident: Vec<Vec<usize>>,
    class: Vec<EdgeClass>,
    region: Vec<usize>,
    num_regions: usize,
}

impl DecodingHypergraph {
    /// Hypergraph from explicit edge lists. Regions are the components under
    /// weight-2 edges, so weight-2 edges never count as defects.
    pub fn new(num_vertices: usize, edges: Vec<Vec<usize>>) -> Self {
        let mut incident = vec![Vec::new(); num_vertices];
        let mut uf = UnionFind::new(num_vertices);
        for (e, vs) in edges.iter().enumerate() {
            for &v in vs {
                incident[v].push(e);
            }
            if let [a, b] = vs[..] {
                uf.union(a, b);
            }
        }
        let mut ids = HashMap::new();
        let region: Vec<usize> = (0..num_vertices)
            .map(|v| {
                let next = ids.len();
                *ids.entry(uf.find(v)).or_insert(next)
            })
            .collect();
        let class = edges
            .iter()
            .map(|vs| match vs.len() {
                0 => EdgeClass::Unchecked,
                1 => EdgeClass::SmoothBoundary,
                2 => EdgeClass::Regional,
                _ => EdgeClass::Defect,
            })
            .collect();
        DecodingHypergraph {
            edges,
            incident,
            class,
            num_regions: ids.len(),
            region,
        }
    }

    pub fn build(layer: &LayerCode) -> Self {
        let edges: Vec<Vec<usize>> = (0..layer.num_qubits())
            .map(|q| layer.qubit_z_checks(q).to_vec())
            .collect();
        let mut g = Self::new(layer.z_checks().len(), edges);
        for q in 0..layer.num_qubits() {
            if g.class[q] != EdgeClass::Regional {
                continue;
            }
            let site = layer.qubit_site(q);
            let patch = &layer.patches()[site.patch];
            let ends = if site.u2 % 2 != 0 {
                [(site.u2 - 1, site.v2), (site.u2 + 1, site.v2)]
            } else {
                [(site.u2, site.v2 - 1), (site.u2, site.v2 + 1)]
            };
            let lims = [2 * patch.u.0, 2 * patch.u.1, 2 * patch.v.0, 2 * patch.v.1];
            let touches_rough = ends.iter().any(|&(u2, v2)| {
                [u2, u2, v2, v2]
                    .iter()
                    .zip(lims)
                    .zip(patch.sides)
                    .any(|((&c, lim), side)| c == lim && side == Boundary::Rough)
            });
            if touches_rough {
                g.class[q] = EdgeClass::RoughBoundary;
            }
        }
        g
    }

    pub fn num_vertices(&self) -> usize {
        self.incident.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> &[usize] {
        &self.edges[e]
    }

    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    pub fn class(&self, e: usize) -> EdgeClass {
        self.class[e]
    }

    pub fn region(&self, v: usize) -> usize {
        self.region[v]
    }

    pub fn num_regions(&self) -> usize {
        self.num_regions
    }

    /// Sorted region ids touched by a defect edge.
    pub fn edge_type(&self, e: usize) -> Option<Vec<usize>> {
        (self.class[e] == EdgeClass::Defect).then(|| {
            let mut t: Vec<usize> = self.edges[e].iter().map(|&v| self.region[v]).collect();
            t.sort_unstable();
            t.dedup();
            t
        })
    }

    /// Distinct defect types, sorted.
    pub fn defect_types(&self) -> Vec<Vec<usize>> {
        let mut types: Vec<Vec<usize>> = (0..self.num_edges()).filter_map(|e| self.edge_type(e)).collect();
        types.sort();
        types.dedup();
        types
    }

    pub fn syndrome(&self, error: &BitVector) -> BitVector {
        let mut s = BitVector::zeros(self.num_vertices());
        for e in error.iter_ones() {
            for &v in &self.edges[e] {
                s.flip(v);
            }
        }
        s
    }

    /// Decides whether the excitations of cluster `vertices` can be removed
    /// by hyperedges lying entirely inside it. Returns the defect edges to
    /// flip, or `None`.
    pub fn is_correctable(&self, vertices: &[usize], excited: &[usize]) -> Option<Vec<usize>> {
        let view = ClusterView::new(self, vertices, excited);
        view.solve()
    }

    /// Correction annihilating exactly the cluster's excitations, using only
    /// hyperedges inside the cluster. `flips` must come from `is_correctable`.
    pub fn extract_correction(&self, vertices: &[usize], excited: &[usize], flips: &[usize]) -> Vec<usize> {
        ClusterView::new(self, vertices, excited).extract(flips)
    }
}

/// Local working state for one cluster.
struct ClusterView<'g> {
    g: &'g DecodingHypergraph,
    vertices: Vec<usize>,
    local: HashMap<usize, usize>,
    charge: Vec<bool>,
    internal: Vec<usize>,
    sub: Vec<usize>,
    smooth: Vec<bool>,
}

impl<'g> ClusterView<'g> {
    fn new(g: &'g DecodingHypergraph, vertices: &[usize], excited: &[usize]) -> Self {
        let mut vertices = vertices.to_vec();
        vertices.sort_unstable();
        vertices.dedup();
        let local: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut charge = vec![false; vertices.len()];
        for v in excited {
            let i = local[v];
            charge[i] = !charge[i];
        }
        let mut internal: Vec<usize> = vertices
            .iter()
            .flat_map(|&v| g.incident[v].iter().copied())
            .filter(|&e| g.edges[e].iter().all(|v| local.contains_key(v)))
            .collect();
        internal.sort_unstable();
        internal.dedup();
        let mut uf = UnionFind::new(vertices.len());
        for &e in &internal {
            if let [a, b] = g.edges[e][..] {
                uf.union(local[&a], local[&b]);
            }
        }
        let sub: Vec<usize> = (0..vertices.len()).map(|i| uf.find(i)).collect();
        let mut smooth = vec![false; vertices.len()];
        for &e in &internal {
            if let [a] = g.edges[e][..] {
                smooth[sub[local[&a]]] = true;
            }
        }
        ClusterView {
            g,
            vertices,
            local,
            charge,
            internal,
            sub,
            smooth,
        }
    }

    /// Subregions whose parity is constrained, by root.
    fn constrained(&self) -> Vec<usize> {
        let mut roots: Vec<usize> = (0..self.vertices.len())
            .filter(|&i| self.sub[i] == i && !self.smooth[i])
            .collect();
        roots.sort_unstable();
        roots
    }

    fn signature(&self, e: usize) -> Vec<usize> {
        let mut odd: Vec<usize> = Vec::new();
        for v in &self.g.edges[e] {
            let r = self.sub[self.local[v]];
            if !self.smooth[r] {
                match odd.iter().position(|&x| x == r) {
                    Some(p) => {
                        odd.swap_remove(p);
                    }
                    None => odd.push(r),
                }
            }
        }
        odd.sort_unstable();
        odd
    }

    fn solve(&self) -> Option<Vec<usize>> {
        let rows = self.constrained();
        let row_of: HashMap<usize, usize> = rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let mut parity = BitVector::zeros(rows.len());
        for i in 0..self.vertices.len() {
            if self.charge[i] {
                if let Some(&row) = row_of.get(&self.sub[i]) {
                    parity.flip(row);
                }
            }
        }
        if parity.is_zero() {
            return Some(Vec::new());
        }
        // One representative per distinct signature: D(T). Among equals,
        // keep the edge whose flip leaves the fewest excitations.
        let mut reps: Vec<(usize, Vec<usize>, isize)> = Vec::new();
        for &e in &self.internal {
            if self.g.class[e] != EdgeClass::Defect {
                continue;
            }
            let sig = self.signature(e);
            if sig.is_empty() {
                continue;
            }
            let gain: isize = self.g.edges[e]
                .iter()
                .map(|v| if self.charge[self.local[v]] { -1 } else { 1 })
                .sum();
            match reps.iter_mut().find(|(_, s, _)| *s == sig) {
                Some(rep) if gain < rep.2 => *rep = (e, sig, gain),
                Some(_) => {}
                None => reps.push((e, sig, gain)),
            }
        }
        let mut m = BitMatrix::zeros(rows.len(), reps.len());
        for (c, (_, sig, _)) in reps.iter().enumerate() {
            for r in sig {
                m.set(row_of[r], c, true);
            }
        }
        let x = m.solve(&parity).expect("dimensions agree")?;
        Some(x.iter_ones().map(|c| reps[c].0).collect())
    }

    fn extract(mut self, flips: &[usize]) -> Vec<usize> {
        let mut correction: Vec<usize> = Vec::new();
        for &e in flips {
            correction.push(e);
            for v in &self.g.edges[e] {
                let i = self.local[v];
                self.charge[i] = !self.charge[i];
            }
        }
        let n = self.vertices.len();
        // Regional adjacency and smooth edges inside the cluster.
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut smooth_edge = vec![NONE; n];
        for &e in &self.internal {
            match self.g.edges[e][..] {
                [a] => {
                    let i = self.local[&a];
                    if smooth_edge[i] == NONE {
                        smooth_edge[i] = e;
                    }
                }
                [a, b] => {
                    let (i, j) = (self.local[&a], self.local[&b]);
                    adj[i].push((j, e));
                    adj[j].push((i, e));
                }
                _ => {}
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..n {
            if self.charge[i] {
                members.entry(self.sub[i]).or_default().push(i);
            }
        }
        let mut roots: Vec<usize> = members.keys().copied().collect();
        roots.sort_unstable();
        for root in roots {
            // Match the subregion's excitations along shortest in-cluster
            // paths, with the smooth boundary as an optional partner.
            let charged = &members[&root];
            let trees: Vec<(Vec<usize>, Vec<(usize, usize)>)> = charged.iter().map(|&c| bfs(&adj, c)).collect();
            let exits: Vec<Option<(i64, usize)>> = trees
                .iter()
                .map(|(dist, _)| {
                    (0..n)
                        .filter(|&i| smooth_edge[i] != NONE && dist[i] != NONE)
                        .map(|i| (dist[i] as i64 + 1, i))
                        .min()
                })
                .collect();
            let boundary: Vec<Option<i64>> = exits.iter().map(|x| x.map(|(d, _)| d)).collect();
            let cost = |a: usize, b: usize| trees[a].0[charged[b]] as i64;
            let (pairs, _) = match_with_boundary(charged.len(), cost, &boundary)
                .expect("correctable subregions have even charge or a boundary");
            for pairing in pairs {
                let (tree, mut at) = match pairing {
                    Pairing::Pair(a, b) => (&trees[a].1, charged[b]),
                    Pairing::Boundary(a) => {
                        let exit = exits[a].unwrap().1;
                        correction.push(smooth_edge[exit]);
                        (&trees[a].1, exit)
                    }
                };
                while tree[at].0 != NONE {
                    correction.push(tree[at].1);
                    at = tree[at].0;
                }
            }
        }
        // Cancel repeated flips.
        correction.sort_unstable();
        let mut out: Vec<usize> = Vec::with_capacity(correction.len());
        for e in correction {
            if out.last() == Some(&e) {
                out.pop();
            } else {
                out.push(e);
            }
        }
        out
    }
}

/// Breadth-first distances and parent links, visiting neighbors in ascending order.
fn bfs(adj: &[Vec<(usize, usize)>], source: usize) -> (Vec<usize>, Vec<(usize, usize)>) {
    let mut dist = vec![NONE; adj.len()];
    let mut parent = vec![(NONE, NONE); adj.len()];
    dist[source] = 0;
    let mut queue = std::collections::VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &(w, e) in &adj[v] {
            if dist[w] == NONE {
                dist[w] = dist[v] + 1;
                parent[w] = (v, e);
                queue.push_back(w);
            }
        }
    }
    (dist, parent)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schedule {
    /// Radius grows by one per step.
    #[default]
    Linear,
    /// Radius reaches 4^t after step t.
    Exponential,
}

impl FromStr for Schedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(Schedule::Linear),
            "exponential" => Ok(Schedule::Exponential),
            other => Err(format!("unknown schedule {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClusterConfig {
    pub schedule: Schedule,
    /// Re-solve every active cluster each step instead of only those whose
    /// vertex set changed. Results are identical; this only costs time.
    pub recheck_all: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub clusters: usize,
    pub sizes: Vec<usize>,
    pub merges: usize,
    pub corrected: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error("syndrome has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("syndrome is not produced by any X error")]
    Unrealizable,
}

struct Cluster {
    vertices: Vec<usize>,
    frontier: Vec<usize>,
    excited: Vec<usize>,
    dirty: bool,
}

pub struct ClusterDecoder {
    graph: DecodingHypergraph,
    config: ClusterConfig,
}

impl ClusterDecoder {
    pub fn new(graph: DecodingHypergraph, config: ClusterConfig) -> Self {
        ClusterDecoder { graph, config }
    }

    pub fn for_layer(layer: &LayerCode, config: ClusterConfig) -> Self {
        Self::new(DecodingHypergraph::build(layer), config)
    }

    pub fn graph(&self) -> &DecodingHypergraph {
        &self.graph
    }

    pub fn decode(&self, syndrome: &BitVector) -> Result<BitVector, ClusterError> {
        self.run(syndrome, None)
    }

    pub fn decode_traced(&self, syndrome: &BitVector) -> Result<(BitVector, Vec<TraceStep>), ClusterError> {
        let mut trace = Vec::new();
        let c = self.run(syndrome, Some(&mut trace))?;
        Ok((c, trace))
    }

    fn run(&self, syndrome: &BitVector, mut trace: Option<&mut Vec<TraceStep>>) -> Result<BitVector, ClusterError> {
        let g = &self.graph;
        let nv = g.num_vertices();
        if syndrome.len() != nv {
            return Err(ClusterError::Length {
                expected: nv,
                got: syndrome.len(),
            });
        }
        let mut correction = BitVector::zeros(g.num_edges());
        let mut owner = vec![NONE; nv];
        let mut clusters: Vec<Option<Cluster>> = Vec::new();
        for v in syndrome.iter_ones() {
            owner[v] = clusters.len();
            clusters.push(Some(Cluster {
                vertices: vec![v],
                frontier: vec![v],
                excited: vec![v],
                dirty: true,
            }));
        }
        let mut step = 0;
        while clusters.iter().any(Option::is_some) {
            step += 1;
            let layers = match self.config.schedule {
                Schedule::Linear => 1,
                Schedule::Exponential => {
                    let hi = 4usize.saturating_pow(step as u32);
                    hi - hi / 4
                }
            };
            let mut merges = 0;
            let mut grew = false;
            for _ in 0..layers {
                let (g_any, m) = self.grow_layer(&mut clusters, &mut owner);
                grew |= g_any;
                merges += m;
                if !g_any && m == 0 {
                    break;
                }
            }
            // Check, then correct, every changed cluster.
            let mut corrected = 0;
            for slot in clusters.iter_mut() {
                let Some(c) = slot else { continue };
                if !(c.dirty || self.config.recheck_all) {
                    continue;
                }
                c.dirty = false;
                if let Some(flips) = g.is_correctable(&c.vertices, &c.excited) {
                    for e in g.extract_correction(&c.vertices, &c.excited, &flips) {
                        correction.flip(e);
                    }
                    for &v in &c.vertices {
                        owner[v] = NONE;
                    }
                    *slot = None;
                    corrected += 1;
                }
            }
            if let Some(t) = trace.as_deref_mut() {
                let sizes: Vec<usize> = clusters.iter().flatten().map(|c| c.vertices.len()).collect();
                t.push(TraceStep {
                    step,
                    clusters: sizes.len(),
                    sizes,
                    merges,
                    corrected,
                });
            }
            if !grew && merges == 0 && corrected == 0 {
                return Err(ClusterError::Unrealizable);
            }
        }
        Ok(correction)
    }

    /// Grows every active cluster by one hypergraph layer, then merges
    /// clusters that met. Returns whether anything grew and the merge count.
    fn grow_layer(&self, clusters: &mut [Option<Cluster>], owner: &mut [usize]) -> (bool, usize) {
        let g = &self.graph;
        let mut uf = UnionFind::new(clusters.len());
        let mut grew = false;
        let mut merges = 0;
        for id in 0..clusters.len() {
            let Some(c) = clusters[id].as_mut() else { continue };
            let mut next = Vec::new();
            for &v in &c.frontier {
                for &e in &g.incident[v] {
                    for &w in &g.edges[e] {
                        if owner[w] == NONE {
                            owner[w] = id;
                            next.push(w);
                        } else if owner[w] != id && uf.find(owner[w]) != uf.find(id) {
                            uf.union(owner[w], id);
                            merges += 1;
                        }
                    }
                }
            }
            if !next.is_empty() {
                grew = true;
                c.dirty = true;
            }
            c.vertices.extend_from_slice(&next);
            c.frontier = next;
        }
        if merges > 0 {
            for id in 0..clusters.len() {
                let root = uf.find(id);
                if root == id || clusters[id].is_none() {
                    continue;
                }
                let absorbed = clusters[id].take().unwrap();
                for &v in &absorbed.vertices {
                    owner[v] = root;
                }
                let target = clusters[root].as_mut().expect("roots stay active");
                target.vertices.extend(absorbed.vertices);
                target.frontier.extend(absorbed.frontier);
                target.excited.extend(absorbed.excited);
                target.dirty = true;
            }
        }
        (grew, merges)
    }
}
