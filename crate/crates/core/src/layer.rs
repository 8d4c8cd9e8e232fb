//! Layer code construction.
//!
//! Every qubit, X check and Z check of the input code gets its own
//! surface-code patch (a Q-, X- or Z-layer). Qubits sit on edges, X checks on
//! vertices and Z checks on faces. Patches never share qubits. Where two
//! patches intersect along a line, checks of one patch absorb a qubit of the
//! other so that anyons split according to the input code's check matrices:
//!
//! * Q/X line (X-layer `a` at height `z_a`, Q-layer `j`, `HX[a][j] = 1`): each
//!   X-layer vertex on the line absorbs the Q edge rising from `z_a`, and each
//!   Q face just above `z_a` absorbs the X-layer edge below it on the line.
//! * Q/Z line (Z-layer `b` at `x_b`, `HZ[b][j] = 1`): each Q vertex on the line
//!   absorbs the Z-layer edge leaving the line toward `+y`, and each Z-layer face
//!   on that side absorbs the Q edge on the line.
//! * X/Z segment (common support of X check `a` and Z check `b`, paired in
//!   order): X-layer vertices on `(y_1, y_2]` absorb the Z-layer edge rising from
//!   `z_a`, and Z-layer faces on `[y_1, y_2)` absorb the X-layer edge along the
//!   segment.
//!
//! Check weights stay at most 6 and all checks commute.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::css::{CssCode, CssError, PauliType};
use crate::f2::{sparse_rank, BitMatrix, BitVector, RowBasis};
use crate::uf::UnionFind;

#[derive(Debug, Error)]
pub enum LayerError {
    #[error("invalid input code: {0}")]
    InvalidInput(String),
    #[error("construction invariant violated: {0}")]
    Invariant(String),
    #[error("location {0} is not a lattice vertex of that layer")]
    OffLattice(String),
    #[error("operator is not a nontrivial logical of the input code")]
    TrivialLogical,
    #[error("import mismatch: {0}")]
    Import(String),
    #[error(transparent)]
    Css(#[from] CssError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LayerKind {
    Q,
    X,
    Z,
}

/// A layer, indexed from 1 within its kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LayerId {
    pub kind: LayerKind,
    pub index: usize,
}

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{}", self.kind, self.index)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// X- and Z-layers span the full y range.
    Extended,
    /// X- and Z-layers stop one spacing past their outermost Q-layer.
    #[default]
    Terminated,
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "extended" => Ok(Variant::Extended),
            "terminated" | "original-termination" | "original" => Ok(Variant::Terminated),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Extended => "extended",
            Variant::Terminated => "original-termination",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Smooth,
    Rough,
}

/// One surface-code layer. `u` and `v` are global coordinates along the two
/// in-plane axes; `normal` is the fixed coordinate along the third.
///
/// Q: (u, v, normal) = (x, z, y). X: (x, y, z). Z: (y, z, x).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub id: LayerId,
    pub u: (i64, i64),
    pub v: (i64, i64),
    pub normal: i64,
    /// Sides at u low, u high, v low, v high.
    pub sides: [Boundary; 4],
}

impl Patch {
    fn rough(&self, side: usize) -> bool {
        self.sides[side] == Boundary::Rough
    }

    pub fn contains_vertex(&self, u: i64, v: i64) -> bool {
        (self.u.0..=self.u.1).contains(&u) && (self.v.0..=self.v.1).contains(&v)
    }

    pub fn vertex_has_check(&self, u: i64, v: i64) -> bool {
        self.contains_vertex(u, v)
            && !(u == self.u.0 && self.rough(0))
            && !(u == self.u.1 && self.rough(1))
            && !(v == self.v.0 && self.rough(2))
            && !(v == self.v.1 && self.rough(3))
    }

    /// Edge at doubled coordinates; exactly one of `u2`, `v2` is odd.
    pub fn edge_exists(&self, u2: i64, v2: i64) -> bool {
        match (u2.rem_euclid(2), v2.rem_euclid(2)) {
            (1, 0) => {
                let (u, v) = ((u2 - 1) / 2, v2 / 2);
                (self.u.0..self.u.1).contains(&u)
                    && (self.v.0..=self.v.1).contains(&v)
                    && !(v == self.v.0 && self.rough(2))
                    && !(v == self.v.1 && self.rough(3))
            }
            (0, 1) => {
                let (u, v) = (u2 / 2, (v2 - 1) / 2);
                (self.u.0..=self.u.1).contains(&u)
                    && (self.v.0..self.v.1).contains(&v)
                    && !(u == self.u.0 && self.rough(0))
                    && !(u == self.u.1 && self.rough(1))
            }
            _ => false,
        }
    }

    pub fn face_exists(&self, u: i64, v: i64) -> bool {
        (self.u.0..self.u.1).contains(&u) && (self.v.0..self.v.1).contains(&v)
    }

    /// Doubled global coordinates of a doubled in-plane point.
    pub fn to_xyz(&self, u2: i64, v2: i64) -> [i64; 3] {
        let n2 = 2 * self.normal;
        match self.id.kind {
            LayerKind::Q => [u2, n2, v2],
            LayerKind::X => [u2, v2, n2],
            LayerKind::Z => [n2, u2, v2],
        }
    }
}

/// A lattice element of one patch, in doubled in-plane coordinates: vertices
/// have both even, faces both odd, edges one of each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    pub patch: usize,
    pub u2: i64,
    pub v2: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DefectKind {
    QX,
    QZ,
    XZ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// A line where two layers are coupled. Endpoints are lattice coordinates.
///
/// Junction behavior: an e on the Q-layer crossing a QX line leaves an e on
/// the X-layer; an e on the Z-layer crossing a QZ line leaves an e on the
/// Q-layer; an e on the Z-layer crossing an XZ segment leaves an e on the
/// X-layer. m anyons split the same way with the roles of the layers swapped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectLine {
    pub kind: DefectKind,
    pub layers: [LayerId; 2],
    pub axis: Axis,
    pub start: [i64; 3],
    pub end: [i64; 3],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub layer: LayerId,
    /// Member Z checks, ascending.
    pub checks: Vec<usize>,
    /// Whether some qubit of the region lies on a smooth boundary.
    pub smooth_boundary: bool,
    /// Defect lines whose coupled qubits touch the region.
    pub defects: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Anyon {
    /// Violated X check, created by Z operators.
    E,
    /// Violated Z check, created by X operators.
    M,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Junction {
    Bulk,
    SmoothBoundary,
    RoughBoundary,
    Defect(DefectKind),
}

/// A vertex of a layer, in lattice coordinates of that patch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub layer: LayerId,
    pub u: i64,
    pub v: i64,
}

/// A single-qubit operator next to a location together with the anyons it
/// creates. Applying it twice is the identity, so the listed anyons fuse to
/// the vacuum at that junction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionMove {
    pub anyon: Anyon,
    pub qubit: usize,
    pub junction: Junction,
    /// (check index, owning layer) pairs: X checks for `E`, Z checks for `M`.
    pub excitations: Vec<(usize, LayerId)>,
}

/// Paired logical representatives: `z[i] . x[j] = [i == j]`.
#[derive(Clone, Debug)]
pub struct LogicalBasis {
    pub z: Vec<BitVector>,
    pub x: Vec<BitVector>,
}

impl LogicalBasis {
    /// Whether an X-type operator with trivial Z syndrome acts nontrivially.
    pub fn x_is_logical(&self, op: &BitVector) -> bool {
        self.z.iter().any(|z| z.dot(op))
    }

    /// Whether a Z-type operator with trivial X syndrome acts nontrivially.
    pub fn z_is_logical(&self, op: &BitVector) -> bool {
        self.x.iter().any(|x| x.dot(op))
    }
}

#[derive(Clone, Debug)]
pub struct LayerCode {
    input: CssCode,
    spacing: i64,
    variant: Variant,
    dims: [i64; 3],
    patches: Vec<Patch>,
    q_patch: Vec<usize>,
    x_patch: Vec<Option<usize>>,
    z_patch: Vec<Option<usize>>,
    qubits: Vec<Site>,
    x_sites: Vec<Site>,
    z_sites: Vec<Site>,
    qubit_index: HashMap<Site, usize>,
    x_index: HashMap<Site, usize>,
    z_index: HashMap<Site, usize>,
    x_checks: Vec<Vec<usize>>,
    z_checks: Vec<Vec<usize>>,
    qubit_x: Vec<Vec<usize>>,
    qubit_z: Vec<Vec<usize>>,
    qubit_defect: Vec<Option<usize>>,
    defects: Vec<DefectLine>,
    regions: Vec<Region>,
    z_region: Vec<usize>,
}

fn sorted_sites(patches: &[Patch], keep: impl Fn(&Patch, i64, i64) -> bool) -> Vec<Site> {
    let mut out = Vec::new();
    for (p, patch) in patches.iter().enumerate() {
        for u2 in 2 * patch.u.0..=2 * patch.u.1 {
            for v2 in 2 * patch.v.0..=2 * patch.v.1 {
                if keep(patch, u2, v2) {
                    out.push(Site { patch: p, u2, v2 });
                }
            }
        }
    }
    // Patches are created in (kind, index) order and in-plane order matches
    // global coordinate order, so this is lexicographic in (layer, coordinate).
    out.sort();
    out
}

impl LayerCode {
    pub fn build(input: &CssCode, spacing: usize, variant: Variant) -> Result<LayerCode, LayerError> {
        input
            .check_orthogonal()
            .map_err(|e| LayerError::InvalidInput(e.to_string()))?;
        if spacing == 0 {
            return Err(LayerError::InvalidInput("layer spacing must be at least 1".into()));
        }
        let k = spacing as i64;
        let (hx, hz) = (input.hx(), input.hz());
        let (n, nx, nz) = (input.n(), hx.rows(), hz.rows());
        let dims = [(nz as i64 + 1) * k, (n as i64 + 1) * k, (nx as i64 + 1) * k];
        let y_of = |j: usize| (j as i64 + 1) * k;
        let z_of = |a: usize| (a as i64 + 1) * k;
        let x_of = |b: usize| (b as i64 + 1) * k;
        let y_range = |support: &[usize]| -> Option<(i64, i64)> {
            match variant {
                Variant::Extended => Some((0, dims[1])),
                Variant::Terminated => {
                    let (first, last) = (support.first()?, support.last()?);
                    Some((y_of(*first) - k, y_of(*last) + k))
                }
            }
        };

        let mut patches = Vec::new();
        let mut q_patch = Vec::new();
        for j in 0..n {
            q_patch.push(patches.len());
            patches.push(Patch {
                id: LayerId { kind: LayerKind::Q, index: j + 1 },
                u: (0, dims[0]),
                v: (0, dims[2]),
                normal: y_of(j),
                sides: [Boundary::Smooth, Boundary::Smooth, Boundary::Rough, Boundary::Rough],
            });
        }
        let mut x_patch = Vec::new();
        for a in 0..nx {
            let support = hx.row_support(a);
            x_patch.push(y_range(&support).map(|v| {
                patches.push(Patch {
                    id: LayerId { kind: LayerKind::X, index: a + 1 },
                    u: (0, dims[0]),
                    v,
                    normal: z_of(a),
                    sides: [Boundary::Smooth; 4],
                });
                patches.len() - 1
            }));
        }
        let mut z_patch = Vec::new();
        for b in 0..nz {
            let support = hz.row_support(b);
            z_patch.push(y_range(&support).map(|u| {
                patches.push(Patch {
                    id: LayerId { kind: LayerKind::Z, index: b + 1 },
                    u,
                    v: (0, dims[2]),
                    normal: x_of(b),
                    sides: [Boundary::Rough; 4],
                });
                patches.len() - 1
            }));
        }

        let qubits = sorted_sites(&patches, |p, u2, v2| p.edge_exists(u2, v2));
        let x_sites = sorted_sites(&patches, |p, u2, v2| {
            u2 % 2 == 0 && v2 % 2 == 0 && p.vertex_has_check(u2 / 2, v2 / 2)
        });
        let z_sites = sorted_sites(&patches, |p, u2, v2| {
            u2 % 2 == 1 && v2 % 2 == 1 && p.face_exists((u2 - 1) / 2, (v2 - 1) / 2)
        });
        let index_of = |sites: &[Site]| -> HashMap<Site, usize> {
            sites.iter().enumerate().map(|(i, s)| (*s, i)).collect()
        };
        let qubit_index = index_of(&qubits);
        let x_index = index_of(&x_sites);
        let z_index = index_of(&z_sites);

        let edge = |p: usize, u2: i64, v2: i64| -> Option<usize> {
            qubit_index.get(&Site { patch: p, u2, v2 }).copied()
        };
        let neighbors = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        let mut x_checks: Vec<Vec<usize>> = x_sites
            .iter()
            .map(|s| {
                neighbors
                    .iter()
                    .filter_map(|(du, dv)| edge(s.patch, s.u2 + du, s.v2 + dv))
                    .collect()
            })
            .collect();
        let mut z_checks: Vec<Vec<usize>> = z_sites
            .iter()
            .map(|s| {
                neighbors
                    .iter()
                    .filter_map(|(du, dv)| edge(s.patch, s.u2 + du, s.v2 + dv))
                    .collect()
            })
            .collect();

        let mut qubit_defect = vec![None; qubits.len()];
        let mut defects = Vec::new();
        let missing = |what: &str| LayerError::Invariant(format!("missing {what} while coupling layers"));
        // Vertex and face lookups take lattice (not doubled) coordinates.
        let xv = |p: usize, u: i64, v: i64| x_index.get(&Site { patch: p, u2: 2 * u, v2: 2 * v }).copied();
        let zf = |p: usize, u: i64, v: i64| {
            z_index
                .get(&Site { patch: p, u2: 2 * u + 1, v2: 2 * v + 1 })
                .copied()
        };
        let u_edge = |p: usize, u: i64, v: i64| edge(p, 2 * u + 1, 2 * v);
        let v_edge = |p: usize, u: i64, v: i64| edge(p, 2 * u, 2 * v + 1);

        for a in 0..nx {
            for j in hx.row_support(a) {
                let (pq, px) = (q_patch[j], x_patch[a].ok_or_else(|| missing("X-layer"))?);
                let (y, za) = (y_of(j), z_of(a));
                let id = defects.len();
                defects.push(DefectLine {
                    kind: DefectKind::QX,
                    layers: [patches[pq].id, patches[px].id],
                    axis: Axis::X,
                    start: [0, y, za],
                    end: [dims[0], y, za],
                });
                for x in 0..=dims[0] {
                    let q = v_edge(pq, x, za).ok_or_else(|| missing("Q edge"))?;
                    x_checks[xv(px, x, y).ok_or_else(|| missing("X vertex"))?].push(q);
                    qubit_defect[q] = Some(id);
                }
                for x in 0..dims[0] {
                    let q = u_edge(px, x, y).ok_or_else(|| missing("X edge"))?;
                    z_checks[zf(pq, x, za).ok_or_else(|| missing("Q face"))?].push(q);
                    qubit_defect[q] = Some(id);
                }
            }
        }
        for b in 0..nz {
            for j in hz.row_support(b) {
                let (pq, pz) = (q_patch[j], z_patch[b].ok_or_else(|| missing("Z-layer"))?);
                let (y, xb) = (y_of(j), x_of(b));
                let id = defects.len();
                defects.push(DefectLine {
                    kind: DefectKind::QZ,
                    layers: [patches[pq].id, patches[pz].id],
                    axis: Axis::Z,
                    start: [xb, y, 0],
                    end: [xb, y, dims[2]],
                });
                for z in 1..dims[2] {
                    let q = u_edge(pz, y, z).ok_or_else(|| missing("Z edge"))?;
                    x_checks[xv(pq, xb, z).ok_or_else(|| missing("Q vertex"))?].push(q);
                    qubit_defect[q] = Some(id);
                }
                for z in 0..dims[2] {
                    let q = v_edge(pq, xb, z).ok_or_else(|| missing("Q edge"))?;
                    z_checks[zf(pz, y, z).ok_or_else(|| missing("Z face"))?].push(q);
                    qubit_defect[q] = Some(id);
                }
            }
        }
        for a in 0..nx {
            for b in 0..nz {
                let common: Vec<usize> = hx
                    .row_support(a)
                    .into_iter()
                    .filter(|&j| hz.get(b, j))
                    .collect();
                for pair in common.chunks(2) {
                    let [j1, j2] = pair else {
                        return Err(LayerError::InvalidInput("odd common support".into()));
                    };
                    let (px, pz) = (x_patch[a].unwrap(), z_patch[b].unwrap());
                    let (y1, y2, za, xb) = (y_of(*j1), y_of(*j2), z_of(a), x_of(b));
                    let id = defects.len();
                    defects.push(DefectLine {
                        kind: DefectKind::XZ,
                        layers: [patches[px].id, patches[pz].id],
                        axis: Axis::Y,
                        start: [xb, y1, za],
                        end: [xb, y2, za],
                    });
                    for p in y1 + 1..=y2 {
                        let q = v_edge(pz, p, za).ok_or_else(|| missing("Z edge"))?;
                        x_checks[xv(px, xb, p).ok_or_else(|| missing("X vertex"))?].push(q);
                        qubit_defect[q] = Some(id);
                    }
                    for p in y1..y2 {
                        let q = v_edge(px, xb, p).ok_or_else(|| missing("X edge"))?;
                        z_checks[zf(pz, p, za).ok_or_else(|| missing("Z face"))?].push(q);
                        qubit_defect[q] = Some(id);
                    }
                }
            }
        }
        for c in x_checks.iter_mut().chain(z_checks.iter_mut()) {
            c.sort_unstable();
        }

        let incidence = |checks: &[Vec<usize>]| {
            let mut out = vec![Vec::new(); qubits.len()];
            for (i, c) in checks.iter().enumerate() {
                for &q in c {
                    out[q].push(i);
                }
            }
            out
        };
        let qubit_x = incidence(&x_checks);
        let qubit_z = incidence(&z_checks);

        let mut code = LayerCode {
            input: input.clone(),
            spacing: k,
            variant,
            dims,
            patches,
            q_patch,
            x_patch,
            z_patch,
            qubits,
            x_sites,
            z_sites,
            qubit_index,
            x_index,
            z_index,
            x_checks,
            z_checks,
            qubit_x,
            qubit_z,
            qubit_defect,
            defects,
            regions: Vec::new(),
            z_region: Vec::new(),
        };
        code.verify_local_invariants()?;
        code.compute_regions();
        Ok(code)
    }

    fn verify_local_invariants(&self) -> Result<(), LayerError> {
        if let Some(w) = self.max_check_weight().filter(|&w| w > 6) {
            return Err(LayerError::Invariant(format!("check of weight {w}")));
        }
        let mut parity = vec![0u8; self.z_checks.len()];
        for (i, xc) in self.x_checks.iter().enumerate() {
            for &q in xc {
                for &z in &self.qubit_z[q] {
                    parity[z] ^= 1;
                }
            }
            for &q in xc {
                for &z in &self.qubit_z[q] {
                    if parity[z] == 1 {
                        return Err(LayerError::Invariant(format!(
                            "X check {i} anticommutes with Z check {z}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn compute_regions(&mut self) {
        let m = self.z_checks.len();
        let mut uf = UnionFind::new(m);
        for zs in &self.qubit_z {
            if let [a, b] = zs[..] {
                uf.union(a, b);
            }
        }
        let mut region_of_root: HashMap<usize, usize> = HashMap::new();
        self.z_region = vec![0; m];
        self.regions.clear();
        for c in 0..m {
            let root = uf.find(c);
            let next = region_of_root.len();
            let r = *region_of_root.entry(root).or_insert(next);
            if r == self.regions.len() {
                self.regions.push(Region {
                    layer: self.patches[self.z_sites[c].patch].id,
                    checks: Vec::new(),
                    smooth_boundary: false,
                    defects: Vec::new(),
                });
            }
            self.regions[r].checks.push(c);
            self.z_region[c] = r;
        }
        for (q, zs) in self.qubit_z.iter().enumerate() {
            if zs.len() == 1 {
                self.regions[self.z_region[zs[0]]].smooth_boundary = true;
            }
            if let Some(d) = self.qubit_defect[q] {
                for &z in zs {
                    let region = &mut self.regions[self.z_region[z]];
                    if !region.defects.contains(&d) {
                        region.defects.push(d);
                    }
                }
            }
        }
        for region in &mut self.regions {
            region.defects.sort_unstable();
        }
    }

    pub fn input(&self) -> &CssCode {
        &self.input
    }

    pub fn spacing(&self) -> usize {
        self.spacing as usize
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Linear lengths along x, y, z.
    pub fn dims(&self) -> [i64; 3] {
        self.dims
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn patch_index(&self, id: LayerId) -> Option<usize> {
        match id.kind {
            LayerKind::Q => self.q_patch.get(id.index.checked_sub(1)?).copied(),
            LayerKind::X => *self.x_patch.get(id.index.checked_sub(1)?)?,
            LayerKind::Z => *self.z_patch.get(id.index.checked_sub(1)?)?,
        }
    }

    pub fn x_checks(&self) -> &[Vec<usize>] {
        &self.x_checks
    }

    pub fn z_checks(&self) -> &[Vec<usize>] {
        &self.z_checks
    }

    pub fn qubit_x_checks(&self, q: usize) -> &[usize] {
        &self.qubit_x[q]
    }

    pub fn qubit_z_checks(&self, q: usize) -> &[usize] {
        &self.qubit_z[q]
    }

    pub fn qubit_site(&self, q: usize) -> Site {
        self.qubits[q]
    }

    pub fn x_check_site(&self, i: usize) -> Site {
        self.x_sites[i]
    }

    pub fn z_check_site(&self, i: usize) -> Site {
        self.z_sites[i]
    }

    pub fn qubit_layer(&self, q: usize) -> LayerId {
        self.patches[self.qubits[q].patch].id
    }

    /// Doubled global coordinates of a qubit.
    pub fn qubit_coord(&self, q: usize) -> [i64; 3] {
        let s = self.qubits[q];
        self.patches[s.patch].to_xyz(s.u2, s.v2)
    }

    pub fn qubit_defect(&self, q: usize) -> Option<usize> {
        self.qubit_defect[q]
    }

    pub fn qubit_at(&self, site: Site) -> Option<usize> {
        self.qubit_index.get(&site).copied()
    }

    pub fn x_check_at(&self, site: Site) -> Option<usize> {
        self.x_index.get(&site).copied()
    }

    pub fn z_check_at(&self, site: Site) -> Option<usize> {
        self.z_index.get(&site).copied()
    }

    pub fn defects(&self) -> &[DefectLine] {
        &self.defects
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn z_region(&self, check: usize) -> usize {
        self.z_region[check]
    }

    pub fn max_check_weight(&self) -> Option<usize> {
        self.x_checks.iter().chain(&self.z_checks).map(Vec::len).max()
    }

    pub fn hx(&self) -> BitMatrix {
        BitMatrix::from_supports(self.num_qubits(), &self.x_checks)
    }

    pub fn hz(&self) -> BitMatrix {
        BitMatrix::from_supports(self.num_qubits(), &self.z_checks)
    }

    pub fn k(&self) -> usize {
        let n = self.num_qubits();
        n - sparse_rank(&self.x_checks, n) - sparse_rank(&self.z_checks, n)
    }

    /// Violated X checks of a Z-type operator.
    pub fn x_syndrome(&self, z_op: &BitVector) -> BitVector {
        let mut s = BitVector::zeros(self.x_checks.len());
        for q in z_op.iter_ones() {
            for &c in &self.qubit_x[q] {
                s.flip(c);
            }
        }
        s
    }

    /// Violated Z checks of an X-type operator.
    pub fn z_syndrome(&self, x_op: &BitVector) -> BitVector {
        let mut s = BitVector::zeros(self.z_checks.len());
        for q in x_op.iter_ones() {
            for &c in &self.qubit_z[q] {
                s.flip(c);
            }
        }
        s
    }

    fn edge_qubit(&self, patch: usize, u2: i64, v2: i64) -> usize {
        self.qubit_index[&Site { patch, u2, v2 }]
    }

    /// Z-type layer logical for an input Z logical `g`: full-height strings on
    /// the Q-layers in `supp(g)` along the smooth side `x = 0`, with the
    /// resulting X-layer excitations joined pairwise along `x = 0`.
    pub fn quasiconcatenated_logical(&self, g: &BitVector) -> Result<BitVector, LayerError> {
        self.quasiconcatenated(g, PauliType::Z)
    }

    /// X-type counterpart: strings along the bottom row of the Q-layers in
    /// `supp(h)`, joined pairwise on the Z-layers.
    pub fn quasiconcatenated_x_logical(&self, h: &BitVector) -> Result<BitVector, LayerError> {
        self.quasiconcatenated(h, PauliType::X)
    }

    fn quasiconcatenated(&self, g: &BitVector, t: PauliType) -> Result<BitVector, LayerError> {
        let input = &self.input;
        let checks = input.checks_against(t);
        let stabs = input.stabilizers_of(t);
        if g.len() != input.n() || !checks.mul_vec(g).is_zero() || stabs.in_rowspace(g).map_err(CssError::from)? {
            return Err(LayerError::TrivialLogical);
        }
        let mut op = BitVector::zeros(self.num_qubits());
        let support: Vec<usize> = g.iter_ones().collect();
        let k = self.spacing;
        for &j in &support {
            op ^= &self.q_layer_string(j, t);
        }
        for r in 0..checks.rows() {
            let hits: Vec<usize> = support.iter().copied().filter(|&j| checks.get(r, j)).collect();
            for pair in hits.chunks(2) {
                let (y1, y2) = ((pair[0] as i64 + 1) * k, (pair[1] as i64 + 1) * k);
                match t {
                    PauliType::Z => {
                        let p = self.x_patch[r].expect("X-layer with support");
                        for y in y1..y2 {
                            op.flip(self.edge_qubit(p, 0, 2 * y + 1));
                        }
                    }
                    PauliType::X => {
                        let p = self.z_patch[r].expect("Z-layer with support");
                        for y in y1 + 1..=y2 {
                            op.flip(self.edge_qubit(p, 2 * y, 1));
                        }
                    }
                }
            }
        }
        Ok(op)
    }

    /// String across Q-layer `j` between its condensing sides: Z type runs
    /// the full height along `x = 0`, X type the full width along the bottom row.
    pub fn q_layer_string(&self, j: usize, t: PauliType) -> BitVector {
        let p = self.q_patch[j];
        let mut op = BitVector::zeros(self.num_qubits());
        match t {
            PauliType::Z => {
                for z in 0..self.dims[2] {
                    op.flip(self.edge_qubit(p, 0, 2 * z + 1));
                }
            }
            PauliType::X => {
                for x in 0..=self.dims[0] {
                    op.flip(self.edge_qubit(p, 2 * x, 1));
                }
            }
        }
        op
    }

    /// Representatives of `k` independent logical classes for each type,
    /// built from input-code logicals and paired symplectically.
    pub fn logical_basis(&self) -> LogicalBasis {
        let zs: Vec<BitVector> = input_logicals(&self.input, PauliType::Z)
            .iter()
            .map(|g| self.quasiconcatenated_logical(g).expect("input logical"))
            .collect();
        let xs: Vec<BitVector> = input_logicals(&self.input, PauliType::X)
            .iter()
            .map(|h| self.quasiconcatenated_x_logical(h).expect("input logical"))
            .collect();
        LogicalBasis { x: pair_dual(&zs, &xs), z: zs }
    }

    /// Elementary single-qubit moves at a vertex of a layer.
    pub fn fusion_moves(&self, loc: Location) -> Result<Vec<FusionMove>, LayerError> {
        let off = || LayerError::OffLattice(format!("{} ({}, {})", loc.layer, loc.u, loc.v));
        let p = self.patch_index(loc.layer).ok_or_else(off)?;
        if !self.patches[p].contains_vertex(loc.u, loc.v) {
            return Err(off());
        }
        let mut moves = Vec::new();
        for (du, dv) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            let site = Site {
                patch: p,
                u2: 2 * loc.u + du,
                v2: 2 * loc.v + dv,
            };
            let Some(q) = self.qubit_at(site) else { continue };
            for anyon in [Anyon::E, Anyon::M] {
                let (checks, sites) = match anyon {
                    Anyon::E => (&self.qubit_x[q], &self.x_sites),
                    Anyon::M => (&self.qubit_z[q], &self.z_sites),
                };
                let excitations: Vec<(usize, LayerId)> = checks
                    .iter()
                    .map(|&c| (c, self.patches[sites[c].patch].id))
                    .collect();
                let multi_layer = excitations.iter().any(|e| e.1 != excitations[0].1);
                let junction = match (multi_layer, excitations.len(), anyon) {
                    (true, _, _) => Junction::Defect(self.defects[self.qubit_defect[q].expect("coupled qubit")].kind),
                    (false, 1, Anyon::E) => Junction::RoughBoundary,
                    (false, 1, Anyon::M) => Junction::SmoothBoundary,
                    _ => Junction::Bulk,
                };
                moves.push(FusionMove {
                    anyon,
                    qubit: q,
                    junction,
                    excitations,
                });
            }
        }
        Ok(moves)
    }

    pub fn export(&self) -> LayerExport {
        LayerExport {
            hx: self.hx().to_string(),
            hz: self.hz().to_string(),
            geometry: serde_json::to_string_pretty(&self.geometry()).expect("geometry serializes"),
        }
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            input: self.input.to_text(),
            spacing: self.spacing as usize,
            variant: self.variant,
            dims: self.dims,
            qubits: (0..self.num_qubits())
                .map(|q| {
                    let [x2, y2, z2] = self.qubit_coord(q);
                    QubitRecord {
                        x2,
                        y2,
                        z2,
                        layer: self.qubit_layer(q),
                    }
                })
                .collect(),
            defects: self.defects.clone(),
            regions: self.regions.clone(),
        }
    }

    /// Rebuilds from exported text and checks that everything matches bit for bit.
    pub fn import(hx: &str, hz: &str, geometry: &str) -> Result<LayerCode, LayerError> {
        let geo: Geometry = serde_json::from_str(geometry)?;
        let input = CssCode::parse_text(&geo.input)?;
        let code = LayerCode::build(&input, geo.spacing, geo.variant)?;
        let hx = BitMatrix::parse_text(hx).map_err(CssError::from)?;
        let hz = BitMatrix::parse_text(hz).map_err(CssError::from)?;
        if hx != code.hx() || hz != code.hz() {
            return Err(LayerError::Import("check matrices differ from the rebuilt code".into()));
        }
        if geo != code.geometry() {
            return Err(LayerError::Import("geometry differs from the rebuilt code".into()));
        }
        Ok(code)
    }
}

/// Basis of nontrivial logical classes of type `t` for a CSS code.
pub fn input_logicals(code: &CssCode, t: PauliType) -> Vec<BitVector> {
    let mut span = RowBasis::from_matrix(code.stabilizers_of(t));
    let kernel = code.checks_against(t).kernel_basis();
    (0..kernel.rows())
        .map(|r| kernel.row(r))
        .filter(|v| span.insert(v))
        .collect()
}

/// Recombines `xs` so that `zs[i] . out[j] = [i == j]`. Panics when the
/// pairing matrix is singular.
pub fn pair_dual(zs: &[BitVector], xs: &[BitVector]) -> Vec<BitVector> {
    let k = zs.len();
    assert_eq!(k, xs.len(), "logical counts differ");
    let mut pairing = BitMatrix::zeros(k, k);
    for (i, z) in zs.iter().enumerate() {
        for (j, x) in xs.iter().enumerate() {
            pairing.set(i, j, z.dot(x));
        }
    }
    (0..k)
        .map(|j| {
            let coeffs = pairing
                .solve(&BitVector::from_indices(k, [j]))
                .expect("square system")
                .expect("pairing matrix must be invertible");
            let mut out = BitVector::zeros(xs[0].len());
            for l in coeffs.iter_ones() {
                out ^= &xs[l];
            }
            out
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitRecord {
    pub x2: i64,
    pub y2: i64,
    pub z2: i64,
    pub layer: LayerId,
}

/// JSON sidecar describing a layer code. Coordinates are doubled so that edge
/// midpoints are integers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    pub input: String,
    pub spacing: usize,
    pub variant: Variant,
    pub dims: [i64; 3],
    pub qubits: Vec<QubitRecord>,
    pub defects: Vec<DefectLine>,
    pub regions: Vec<Region>,
}

#[derive(Clone, Debug)]
pub struct LayerExport {
    pub hx: String,
    pub hz: String,
    pub geometry: String,
}
