//! Exact bookkeeping of vertices, pieces and volumes.
//!
//! Pieces are the connected components of the revealed edge set, maintained
//! by a union-find structure. Every piece carries its committed and
//! uncommitted volume as integer counts of `1/k` units together with a
//! per-color histogram, so every comparison the algorithms make is exact.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::params::Params;

pub type VertexId = u32;
pub type PieceId = u32;
/// Servers are numbered 1..=ell; color c originates on server c.
pub type Color = u32;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown piece {0}")]
    UnknownPiece(PieceId),
    #[error("commit preconditions violated for piece {0}")]
    CommitPrecondition(PieceId),
    #[error("monochromatic piece {0} lacks uncommitted majority vertices; invariant 2 broken upstream")]
    InsufficientMajorityVertices(PieceId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub color: Color,
    pub committed: bool,
}

/// Per-color counts for one piece: total vertices and committed vertices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorHistogram {
    /// Indexed by `color - 1`.
    pub total: Vec<u32>,
    pub committed: Vec<u32>,
}

impl ColorHistogram {
    fn new(ell: u32) -> Self {
        ColorHistogram {
            total: vec![0; ell as usize],
            committed: vec![0; ell as usize],
        }
    }

    fn absorb(&mut self, other: &ColorHistogram) {
        for (a, b) in self.total.iter_mut().zip(&other.total) {
            *a += b;
        }
        for (a, b) in self.committed.iter_mut().zip(&other.committed) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Piece {
    pub id: PieceId,
    pub committed_units: u64,
    pub uncommitted_units: u64,
    pub histogram: ColorHistogram,
    /// Vertex ids, unsorted; merged small-to-large.
    pub vertices: Vec<VertexId>,
}

impl Piece {
    pub fn size_units(&self) -> u64 {
        self.committed_units + self.uncommitted_units
    }
}

/// Classification of one piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceClass {
    /// Committed volume divided by delta.
    pub class: u32,
    pub majority_color: Color,
    pub monochromatic: bool,
}

impl PieceClass {
    pub fn is_large(&self) -> bool {
        self.class > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MergeKind {
    /// p1, p2 and pm are all monochromatic for the same server.
    MonochromaticFor(Color),
    NonMonochromatic,
}

/// Record of one merge: `p1` is the smaller piece (ties broken towards the
/// lower piece id), `pm` the freshly created result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub p1: PieceId,
    pub p2: PieceId,
    pub pm: PieceId,
    pub p1_size_units: u64,
    pub p1_uncommitted_units: u64,
    pub p2_size_units: u64,
    pub class1: u32,
    pub class2: u32,
    pub class_m: u32,
    pub p1_class: PieceClass,
    pub p2_class: PieceClass,
    pub pm_class: PieceClass,
    pub kind: MergeKind,
    pub edge: (VertexId, VertexId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MergeOutcome {
    SamePiece,
    Merged(MergeEvent),
}

/// One reported invariant violation; the checker never panics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub piece: PieceId,
    pub rule: &'static str,
    pub detail: String,
}

/// The mutable core state: vertices, union-find, piece registry.
#[derive(Debug, Clone)]
pub struct CoreState {
    pub params: Params,
    pub vertices: Vec<Vertex>,
    parent: Vec<u32>,
    rank: Vec<u8>,
    /// Union-find root -> piece id.
    root_piece: Vec<PieceId>,
    pieces: BTreeMap<PieceId, Piece>,
    next_piece_id: PieceId,
}

impl CoreState {
    /// Fresh state: every vertex is its own singleton piece. Vertex `v` has
    /// color `v / k + 1`.
    pub fn new(params: Params) -> Self {
        let n = params.n_vertices() as usize;
        let ell = params.ell;
        let mut vertices = Vec::with_capacity(n);
        let mut pieces = BTreeMap::new();
        let mut root_piece = Vec::with_capacity(n);
        for v in 0..n {
            let color = (v as u64 / params.k) as u32 + 1;
            vertices.push(Vertex {
                color,
                committed: false,
            });
            let mut hist = ColorHistogram::new(ell);
            hist.total[(color - 1) as usize] = 1;
            pieces.insert(
                v as PieceId,
                Piece {
                    id: v as PieceId,
                    committed_units: 0,
                    uncommitted_units: 1,
                    histogram: hist,
                    vertices: vec![v as VertexId],
                },
            );
            root_piece.push(v as PieceId);
        }
        CoreState {
            params,
            vertices,
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            root_piece,
            pieces,
            next_piece_id: n as PieceId,
        }
    }

    fn find(&mut self, v: u32) -> u32 {
        let mut root = v;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = v;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    pub fn piece_of(&mut self, v: VertexId) -> Result<PieceId, ModelError> {
        if (v as usize) >= self.vertices.len() {
            return Err(ModelError::UnknownVertex(v));
        }
        let root = self.find(v);
        Ok(self.root_piece[root as usize])
    }

    pub fn piece(&self, id: PieceId) -> Result<&Piece, ModelError> {
        self.pieces.get(&id).ok_or(ModelError::UnknownPiece(id))
    }

    pub fn pieces(&self) -> impl Iterator<Item = &Piece> {
        self.pieces.values()
    }

    pub fn n_pieces(&self) -> usize {
        self.pieces.len()
    }

    /// Registers an edge. If the endpoints already share a piece this is a
    /// no-op; otherwise the two pieces merge and the event is reported with
    /// `p1` the smaller piece (ties towards the lower piece id).
    pub fn register_edge(&mut self, u: VertexId, v: VertexId) -> Result<MergeOutcome, ModelError> {
        let pu = self.piece_of(u)?;
        let pv = self.piece_of(v)?;
        if pu == pv {
            return Ok(MergeOutcome::SamePiece);
        }
        let (su, sv) = (
            self.pieces[&pu].size_units(),
            self.pieces[&pv].size_units(),
        );
        let (p1, p2) = if (su, pu) < (sv, pv) { (pu, pv) } else { (pv, pu) };

        let c1 = self.classify_piece(p1)?;
        let c2 = self.classify_piece(p2)?;

        let piece1 = self.pieces.remove(&p1).unwrap();
        let piece2 = self.pieces.remove(&p2).unwrap();
        let pm = self.next_piece_id;
        self.next_piece_id += 1;

        let (mut big, small) = if piece1.vertices.len() >= piece2.vertices.len() {
            (piece1, piece2)
        } else {
            (piece2, piece1)
        };
        big.committed_units += small.committed_units;
        big.uncommitted_units += small.uncommitted_units;
        big.histogram.absorb(&small.histogram);
        big.vertices.extend_from_slice(&small.vertices);
        big.id = pm;

        // Union-find union by rank.
        let ru = self.find(u);
        let rv = self.find(v);
        let root = if self.rank[ru as usize] < self.rank[rv as usize] {
            self.parent[ru as usize] = rv;
            rv
        } else if self.rank[ru as usize] > self.rank[rv as usize] {
            self.parent[rv as usize] = ru;
            ru
        } else {
            self.parent[rv as usize] = ru;
            self.rank[ru as usize] += 1;
            ru
        };
        self.root_piece[root as usize] = pm;
        self.pieces.insert(pm, big);

        let cm = self.classify_piece(pm)?;
        let kind = match (c1.monochromatic, c2.monochromatic, cm.monochromatic) {
            (true, true, true)
                if c1.majority_color == c2.majority_color
                    && c2.majority_color == cm.majority_color =>
            {
                MergeKind::MonochromaticFor(cm.majority_color)
            }
            _ => MergeKind::NonMonochromatic,
        };
        let s1 = su.min(sv);
        let s2 = su.max(sv);
        let p1_uncommitted = s1 - (c1.class as u64) * self.params.d();
        Ok(MergeOutcome::Merged(MergeEvent {
            p1,
            p2,
            pm,
            p1_size_units: s1,
            p1_uncommitted_units: p1_uncommitted,
            p2_size_units: s2,
            class1: c1.class,
            class2: c2.class,
            class_m: cm.class,
            p1_class: c1,
            p2_class: c2,
            pm_class: cm,
            kind,
            edge: (u, v),
        }))
    }

    /// Size class, majority color and monochromaticity of a piece.
    ///
    /// Majority ties break towards the smallest color. A large piece is
    /// monochromatic for its majority server if the foreign volume is at most
    /// delta; a small piece if the foreign volume is below an eps-fraction of
    /// its volume.
    pub fn classify_piece(&self, p: PieceId) -> Result<PieceClass, ModelError> {
        let piece = self.piece(p)?;
        let (mut best_color, mut best_count) = (1u32, 0u32);
        for (idx, &count) in piece.histogram.total.iter().enumerate() {
            if count > best_count {
                best_count = count;
                best_color = idx as u32 + 1;
            }
        }
        let size = piece.size_units();
        let foreign = size - best_count as u64;
        let class = (piece.committed_units / self.params.d()) as u32;
        let monochromatic = if class > 0 {
            foreign <= self.params.d()
        } else {
            self.params.foreign_below_eps_fraction(foreign, size)
        };
        Ok(PieceClass {
            class,
            majority_color: best_color,
            monochromatic,
        })
    }

    /// Commits volume delta for `pm`: exactly `delta*k` vertices flip to
    /// committed, lowest vertex id first. For a monochromatic piece only
    /// majority-colored vertices are selected. Returns the committed ids.
    pub fn commit_step(&mut self, pm: PieceId) -> Result<Vec<VertexId>, ModelError> {
        let class = self.classify_piece(pm)?;
        let d = self.params.d();
        let eps_ok = !self
            .params
            .units_below_eps(self.piece(pm)?.size_units());
        if !eps_ok || self.piece(pm)?.uncommitted_units <= 2 * d {
            return Err(ModelError::CommitPrecondition(pm));
        }
        let piece = self.pieces.get_mut(&pm).unwrap();
        let mut eligible: Vec<VertexId> = piece
            .vertices
            .iter()
            .copied()
            .filter(|&v| {
                let vert = &self.vertices[v as usize];
                !vert.committed
                    && (!class.monochromatic || vert.color == class.majority_color)
            })
            .collect();
        if (eligible.len() as u64) < d {
            return Err(ModelError::InsufficientMajorityVertices(pm));
        }
        eligible.sort_unstable();
        eligible.truncate(d as usize);
        for &v in &eligible {
            self.vertices[v as usize].committed = true;
            piece.histogram.committed[(self.vertices[v as usize].color - 1) as usize] += 1;
        }
        piece.committed_units += d;
        piece.uncommitted_units -= d;
        Ok(eligible)
    }

    /// Checks Invariants 1-3 for every piece. Only meaningful at stable
    /// points, i.e. after the commit loop ran.
    pub fn check_volume_invariants(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let d = self.params.d();
        for piece in self.pieces.values() {
            let size = piece.size_units();
            let small = piece.committed_units == 0;
            // Invariant 1: small iff |p| < eps.
            if small != self.params.units_below_eps(size) {
                out.push(Violation {
                    piece: piece.id,
                    rule: "invariant-1",
                    detail: format!(
                        "small={} but size_units={} (eps*k={}*{}/{})",
                        small, size, self.params.eps_num, self.params.k, self.params.eps_den
                    ),
                });
            }
            // Invariant 2: committed volume a positive multiple of delta for
            // large pieces; monochromatic large pieces committed only in the
            // majority color.
            if piece.committed_units % d != 0 {
                out.push(Violation {
                    piece: piece.id,
                    rule: "invariant-2",
                    detail: format!("committed_units={} not a multiple of d={}", piece.committed_units, d),
                });
            }
            let class = self
                .classify_piece(piece.id)
                .expect("piece exists");
            if !small && class.monochromatic {
                let majority_committed =
                    piece.histogram.committed[(class.majority_color - 1) as usize] as u64;
                if majority_committed != piece.committed_units {
                    out.push(Violation {
                        piece: piece.id,
                        rule: "invariant-2",
                        detail: format!(
                            "monochromatic piece has {} committed units, only {} of majority color",
                            piece.committed_units, majority_committed
                        ),
                    });
                }
            }
            // Invariant 3: uncommitted <= 2*delta (large) or <= eps (small).
            if small {
                if !self.params.units_at_most_eps(piece.uncommitted_units) {
                    out.push(Violation {
                        piece: piece.id,
                        rule: "invariant-3",
                        detail: format!("small piece uncommitted_units={}", piece.uncommitted_units),
                    });
                }
            } else if piece.uncommitted_units > 2 * d {
                out.push(Violation {
                    piece: piece.id,
                    rule: "invariant-3",
                    detail: format!("large piece uncommitted_units={} > 2d={}", piece.uncommitted_units, 2 * d),
                });
            }
        }
        out
    }

    /// Cross-checks the union-find pieces against a from-scratch BFS over
    /// `edges`. Returns true when they agree.
    pub fn pieces_match_components(&mut self, edges: &[(VertexId, VertexId)]) -> bool {
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        let mut comp = vec![u32::MAX; n];
        let mut next = 0u32;
        for start in 0..n {
            if comp[start] != u32::MAX {
                continue;
            }
            let mut queue = vec![start as u32];
            comp[start] = next;
            while let Some(v) = queue.pop() {
                for &w in &adj[v as usize] {
                    if comp[w as usize] == u32::MAX {
                        comp[w as usize] = next;
                        queue.push(w);
                    }
                }
            }
            next += 1;
        }
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                let same_piece = self.piece_of(u).unwrap() == self.piece_of(v).unwrap();
                if same_piece != (comp[u as usize] == comp[v as usize]) {
                    return false;
                }
            }
        }
        true
    }
}

/// JSON snapshot of the model plus a piece->server assignment, used by the
/// harness for golden tests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub params: Params,
    pub vertices: Vec<Vertex>,
    pub pieces: Vec<PieceSnapshot>,
    pub assignment: Vec<(PieceId, u32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceSnapshot {
    pub id: PieceId,
    pub committed_units: u64,
    pub uncommitted_units: u64,
    pub vertices: Vec<VertexId>,
}

impl CoreState {
    pub fn snapshot(&self, assignment: &BTreeMap<PieceId, u32>) -> StateSnapshot {
        StateSnapshot {
            params: self.params.clone(),
            vertices: self.vertices.clone(),
            pieces: self
                .pieces
                .values()
                .map(|p| {
                    let mut vs = p.vertices.clone();
                    vs.sort_unstable();
                    PieceSnapshot {
                        id: p.id,
                        committed_units: p.committed_units,
                        uncommitted_units: p.uncommitted_units,
                        vertices: vs,
                    }
                })
                .collect(),
            assignment: assignment.iter().map(|(&p, &s)| (p, s)).collect(),
        }
    }
}
