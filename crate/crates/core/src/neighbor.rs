//! Neighbor maps and the rep-tile decision.
//!
//! For words `u ≠ v` of equal length the map `γ = H_u^{-1} H_v` describes how
//! the piece addressed by `v` sits relative to the piece addressed by `u`.
//! Appending letters `(i, j)` to `(u, v)` turns `γ` into
//! `h_i^{-1} ∘ (g γ g^{-1}) ∘ h_j`, so all such maps are generated from the
//! roots `h_i^{-1} h_j` (`i ≠ j`). Only maps with `A ∩ γ(A) ≠ ∅` matter, and
//! those have translation sup-norm at most `2R`; that bound keeps the graph
//! finite. Candidates are further required to move the attractor's bounding
//! box onto itself partially, a necessary condition for `A ∩ γ(A) ≠ ∅` that
//! prunes far more. A node lies on an infinite path exactly when
//! `A ∩ γ(A) ≠ ∅`, so trimming nodes without successors leaves the true
//! neighbor maps, whichever necessary condition was used for pruning.
//!
//! The system is a rep-tile iff the identity is not among them.

use std::collections::{BTreeSet, HashSet, VecDeque};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::ifs::{bounding_radius, word_maps_at_level, RepTileSystem};
use crate::lattice::LatticeIsometry;
use crate::spectral::{spectral_radius, SparseCountMatrix};

/// Default node budget for standalone analysis.
pub const DEFAULT_NODE_BUDGET: usize = 200_000;

/// Edge label: the pair of appended letters (zero-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub i: u8,
    pub j: u8,
}

/// Result of expanding one node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Children {
    /// Children within the translation bound, one entry per label.
    pub kept: Vec<(Label, LatticeIsometry)>,
    /// Children dropped by the bound.
    pub pruned: Vec<(Label, LatticeIsometry)>,
}

/// Integer translation windows derived from a bounding box `[lo, hi]` of the
/// attractor: `γ(box) ∩ box ≠ ∅` iff, for every column `j` with entry `s` in
/// row `i`, `t_i` lies in `window[i][j][s]`.
struct BoxWindow {
    window: [[[(i64, i64); 2]; 3]; 3],
}

impl BoxWindow {
    fn new(s: &RepTileSystem) -> Self {
        let (lo, hi) = attractor_box(s);
        // Outer rounding keeps the test a necessary condition despite f64.
        const SLACK: f64 = 1e-6;
        let mut window = [[[(0, 0); 2]; 3]; 3];
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                // s = +1: image [lo_j, hi_j]; s = -1: image [-hi_j, -lo_j].
                window[i][j][0] = (
                    (lo[i] - hi[j] - SLACK).ceil() as i64,
                    (hi[i] - lo[j] + SLACK).floor() as i64,
                );
                window[i][j][1] = (
                    (lo[i] + lo[j] - SLACK).ceil() as i64,
                    (hi[i] + hi[j] + SLACK).floor() as i64,
                );
            }
        }
        BoxWindow { window }
    }

    #[inline]
    fn admits(&self, gamma: &LatticeIsometry) -> bool {
        let t = gamma.translation().coords();
        (0..t.len()).all(|j| {
            let (i, sign) = gamma.matrix().column(j);
            let (a, b) = self.window[i][j][usize::from(sign < 0)];
            a <= t[i] && t[i] <= b
        })
    }
}

/// An axis-aligned box containing the attractor, from iterating
/// `B ↦ hull ∪ f_k(B)` on `[-R, R]^d`; each iterate contains the attractor.
fn attractor_box(s: &RepTileSystem) -> ([f64; 3], [f64; 3]) {
    let r = bounding_radius(s) as f64;
    let (mut lo, mut hi) = ([-r; 3], [r; 3]);
    for _ in 0..64 {
        let (mut nlo, mut nhi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
        for h in s.maps() {
            let v = h.translation().coords();
            for j in 0..s.dim() {
                let (i, sign) = h.matrix().column(j);
                let (a, b) = if sign > 0 { (lo[j], hi[j]) } else { (-hi[j], -lo[j]) };
                nlo[i] = nlo[i].min((a + v[i] as f64) / 2.0);
                nhi[i] = nhi[i].max((b + v[i] as f64) / 2.0);
            }
        }
        for i in 0..s.dim() {
            // Never grow: the previous box is also valid.
            lo[i] = lo[i].max(nlo[i]);
            hi[i] = hi[i].min(nhi[i]);
        }
    }
    (lo, hi)
}

/// Precomputed data for fast child generation.
struct Expander {
    maps: Vec<LatticeIsometry>,
    inverses: Vec<LatticeIsometry>,
    bound: i64,
    window: Option<BoxWindow>,
}

impl Expander {
    fn new(s: &RepTileSystem, box_pruning: bool) -> Self {
        Expander {
            maps: s.maps().to_vec(),
            inverses: s.maps().iter().map(|h| h.inverse()).collect(),
            bound: 2 * bounding_radius(s),
            window: box_pruning.then(|| BoxWindow::new(s)),
        }
    }

    #[inline]
    fn keeps(&self, gamma: &LatticeIsometry) -> bool {
        gamma.translation().sup_norm() <= self.bound
            && self.window.as_ref().is_none_or(|w| w.admits(gamma))
    }

    #[inline]
    fn for_each_child(&self, gamma: &LatticeIsometry, mut f: impl FnMut(Label, LatticeIsometry, bool)) {
        let d = gamma.doubled();
        for (j, hj) in self.maps.iter().enumerate() {
            let dj = d.compose_unchecked(hj);
            for (i, hi_inv) in self.inverses.iter().enumerate() {
                let child = hi_inv.compose_unchecked(&dj);
                let keep = self.keeps(&child);
                f(
                    Label {
                        i: i as u8,
                        j: j as u8,
                    },
                    child,
                    keep,
                );
            }
        }
    }
}

/// `{ h_i^{-1} h_j : i ≠ j }` passing the pruning test, sorted.
pub fn root_candidates(s: &RepTileSystem) -> Vec<LatticeIsometry> {
    root_candidates_with(&Expander::new(s, true), s)
}

fn root_candidates_with(expander: &Expander, s: &RepTileSystem) -> Vec<LatticeIsometry> {
    let mut roots = BTreeSet::new();
    for (i, hi) in s.maps().iter().enumerate() {
        let inv = hi.inverse();
        for (j, hj) in s.maps().iter().enumerate() {
            if i != j {
                let r = inv.compose_unchecked(hj);
                if expander.keeps(&r) {
                    roots.insert(r);
                }
            }
        }
    }
    roots.into_iter().collect()
}

/// Rep-tile decision by walking the neighbor graph backwards from the
/// identity. The parents of `c` under `(i, j)` are `halve(h_i ∘ c ∘ h_j^{-1})`
/// when that is integral and passes the pruning test, so the walk visits
/// exactly the kept nodes with a path to the identity; the system is a
/// rep-tile iff none of them is a root.
///
/// The parity condition makes this set far smaller than the forward graph,
/// which is what makes it the cheap first stage of the search.
pub fn decide_by_preimages(s: &RepTileSystem, node_budget: usize) -> Result<bool> {
    let expander = Expander::new(s, true);
    let roots: FxHashSet<LatticeIsometry> = root_candidates_with(&expander, s).into_iter().collect();
    let id = LatticeIsometry::identity(s.dim())?;
    if roots.contains(&id) {
        return Ok(false);
    }
    let mut seen = FxHashSet::default();
    seen.insert(id);
    let mut stack = vec![id];
    while let Some(c) = stack.pop() {
        for hi in &expander.maps {
            let left = hi.compose_unchecked(&c);
            for hj_inv in &expander.inverses {
                let Some(p) = left.compose_unchecked(hj_inv).halved() else {
                    continue;
                };
                if !expander.keeps(&p) || !seen.insert(p) {
                    continue;
                }
                if roots.contains(&p) {
                    return Ok(false);
                }
                if seen.len() > node_budget {
                    return Err(Error::Inconclusive { budget: node_budget });
                }
                stack.push(p);
            }
        }
    }
    Ok(true)
}

/// Children of `gamma` under every label `(i, j)`, labels in row-major order
/// of `(j, i)`.
pub fn children(s: &RepTileSystem, gamma: &LatticeIsometry) -> Children {
    let mut out = Children::default();
    Expander::new(s, true).for_each_child(gamma, |label, child, keep| {
        if keep {
            out.kept.push((label, child));
        } else {
            out.pruned.push((label, child));
        }
    });
    out
}

/// Options for [`build_graph_with`].
#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    pub node_budget: usize,
    /// Stop as soon as the identity is generated. The decision is then
    /// already known (not a rep-tile) and the graph is left partial.
    pub stop_at_identity: bool,
    /// Prune with the bounding-box test on top of the sup-norm bound. Both
    /// are necessary conditions, so the outcome does not depend on this; the
    /// box test only keeps the graph smaller.
    pub box_pruning: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            node_budget: DEFAULT_NODE_BUDGET,
            stop_at_identity: false,
            box_pruning: true,
        }
    }
}

/// The neighbor graph of a system.
#[derive(Clone, Debug)]
pub struct NeighborGraph {
    dim: usize,
    m: usize,
    bound: i64,
    nodes: Vec<LatticeIsometry>,
    index: FxHashMap<LatticeIsometry, u32>,
    /// CSR adjacency: edges of node `k` are `edge_start[k]..edge_start[k+1]`.
    edge_start: Vec<u32>,
    edge_target: Vec<u32>,
    edge_label: Vec<Label>,
    roots: Vec<u32>,
    survivor: Vec<bool>,
    reachable: Vec<bool>,
    identity: Option<u32>,
    pruned: usize,
    budget: usize,
    budget_exceeded: bool,
    complete: bool,
}

/// Breadth-first closure of the roots under [`children`], followed by trimming.
pub fn build_graph(s: &RepTileSystem, node_budget: usize) -> NeighborGraph {
    build_graph_with(
        s,
        BuildOptions {
            node_budget,
            ..BuildOptions::default()
        },
    )
}

pub fn build_graph_with(s: &RepTileSystem, opts: BuildOptions) -> NeighborGraph {
    let expander = Expander::new(s, opts.box_pruning);
    let budget = opts.node_budget.max(1);
    let roots = root_candidates_with(&expander, s);
    let mut g = NeighborGraph {
        dim: s.dim(),
        m: s.m(),
        bound: expander.bound,
        nodes: Vec::new(),
        index: FxHashMap::default(),
        edge_start: vec![0],
        edge_target: Vec::new(),
        edge_label: Vec::new(),
        roots: Vec::new(),
        survivor: Vec::new(),
        reachable: Vec::new(),
        identity: None,
        pruned: 0,
        budget,
        budget_exceeded: false,
        complete: false,
    };

    let mut stop = false;
    for r in roots {
        if g.nodes.len() >= budget {
            g.budget_exceeded = true;
            stop = true;
            break;
        }
        let k = g.insert(r);
        g.roots.push(k);
        if r.is_identity() && opts.stop_at_identity {
            stop = true;
        }
    }

    // Nodes are expanded in insertion order, which is breadth-first order.
    let mut next = 0usize;
    while !stop && next < g.nodes.len() {
        let gamma = g.nodes[next];
        let mut overflow = false;
        let mut hit_identity = false;
        expander.for_each_child(&gamma, |label, child, keep| {
            if overflow {
                return;
            }
            if !keep {
                g.pruned += 1;
                return;
            }
            let target = match g.index.get(&child) {
                Some(&t) => t,
                None => {
                    if g.nodes.len() >= budget {
                        overflow = true;
                        return;
                    }
                    if child.is_identity() {
                        hit_identity = true;
                    }
                    g.insert(child)
                }
            };
            g.edge_target.push(target);
            g.edge_label.push(label);
        });
        if overflow {
            g.budget_exceeded = true;
            // Keep the CSR layout consistent for the partially expanded node.
            g.edge_start.push(g.edge_target.len() as u32);
            break;
        }
        g.edge_start.push(g.edge_target.len() as u32);
        next += 1;
        if hit_identity && opts.stop_at_identity {
            break;
        }
    }
    // Unexpanded nodes get empty edge lists.
    while g.edge_start.len() < g.nodes.len() + 1 {
        g.edge_start.push(g.edge_target.len() as u32);
    }
    g.complete = !g.budget_exceeded && next == g.nodes.len();

    let all = vec![true; g.nodes.len()];
    g.survivor = g.trim(&all);
    g.reachable = g.reach_from_roots();
    g
}

impl NeighborGraph {
    fn insert(&mut self, gamma: LatticeIsometry) -> u32 {
        let k = self.nodes.len() as u32;
        self.nodes.push(gamma);
        self.index.insert(gamma, k);
        if gamma.is_identity() {
            self.identity = Some(k);
        }
        k
    }

    fn out_edges(&self, k: usize) -> impl Iterator<Item = (Label, usize)> + '_ {
        let (a, b) = (self.edge_start[k] as usize, self.edge_start[k + 1] as usize);
        self.edge_label[a..b]
            .iter()
            .zip(&self.edge_target[a..b])
            .map(|(l, &t)| (*l, t as usize))
    }

    /// Greatest subset of `alive` in which every node has an edge into the
    /// subset.
    pub fn trim(&self, alive: &[bool]) -> Vec<bool> {
        let n = self.nodes.len();
        let mut alive = alive.to_vec();
        let mut outdeg = vec![0usize; n];
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
        for k in 0..n {
            if !alive[k] {
                continue;
            }
            for (_, t) in self.out_edges(k) {
                if alive[t] {
                    outdeg[k] += 1;
                    preds[t].push(k as u32);
                }
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&k| alive[k] && outdeg[k] == 0).collect();
        while let Some(k) = queue.pop_front() {
            if !alive[k] {
                continue;
            }
            alive[k] = false;
            for &p in &preds[k] {
                let p = p as usize;
                if alive[p] {
                    outdeg[p] -= 1;
                    if outdeg[p] == 0 {
                        queue.push_back(p);
                    }
                }
            }
        }
        alive
    }

    fn reach_from_roots(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &r in &self.roots {
            let r = r as usize;
            if self.survivor[r] && !seen[r] {
                seen[r] = true;
                queue.push_back(r);
            }
        }
        while let Some(k) = queue.pop_front() {
            for (_, t) in self.out_edges(k) {
                if self.survivor[t] && !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of pieces of the underlying system.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Translation bound `2R` applied to every node.
    pub fn translation_bound(&self) -> i64 {
        self.bound
    }

    pub fn nodes(&self) -> &[LatticeIsometry] {
        &self.nodes
    }

    pub fn roots(&self) -> Vec<LatticeIsometry> {
        self.roots.iter().map(|&r| self.nodes[r as usize]).collect()
    }

    pub fn survivors(&self) -> Vec<LatticeIsometry> {
        self.select(&self.survivor)
    }

    #[cfg(test)]
    pub(crate) fn survivor_mask(&self) -> &[bool] {
        &self.survivor
    }

    /// Survivors reachable from surviving roots, sorted.
    pub fn reachable_survivors(&self) -> Vec<LatticeIsometry> {
        self.select(&self.reachable)
    }

    fn select(&self, mask: &[bool]) -> Vec<LatticeIsometry> {
        let mut v: Vec<_> = self
            .nodes
            .iter()
            .zip(mask)
            .filter(|(_, &keep)| keep)
            .map(|(n, _)| *n)
            .collect();
        v.sort();
        v
    }

    /// All edges `(source, label, target)` in construction order.
    pub fn edges(&self) -> Vec<(LatticeIsometry, Label, LatticeIsometry)> {
        (0..self.nodes.len())
            .flat_map(|k| {
                self.out_edges(k)
                    .map(move |(l, t)| (self.nodes[k], l, self.nodes[t]))
            })
            .collect()
    }

    pub fn pruned_count(&self) -> usize {
        self.pruned
    }

    pub fn node_budget_exceeded(&self) -> bool {
        self.budget_exceeded
    }

    /// Whether the closure ran to completion.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    fn identity_reachable(&self) -> bool {
        // Every node descends from a root, and the identity has a self-loop
        // under every (i, i), so generating it settles the question even when
        // the closure was cut short.
        self.identity.is_some()
    }

    pub fn contains_reachable(&self, gamma: &LatticeIsometry) -> bool {
        self.index
            .get(gamma)
            .is_some_and(|&k| self.reachable[k as usize])
    }

    /// `true` iff the identity is not a neighbor map, i.e. the pieces have
    /// disjoint interiors.
    pub fn decide_rep_tile(&self) -> Result<bool> {
        if self.identity_reachable() {
            return Ok(false);
        }
        if self.budget_exceeded || !self.complete {
            return Err(Error::Inconclusive {
                budget: self.budget,
            });
        }
        Ok(true)
    }

    /// The neighbor maps: reachable survivors without the identity, sorted.
    pub fn neighbor_maps(&self) -> Vec<LatticeIsometry> {
        self.reachable_survivors()
            .into_iter()
            .filter(|g| !g.is_identity())
            .collect()
    }

    pub fn neighbor_count(&self) -> Result<usize> {
        self.decide_rep_tile()?;
        Ok(self.neighbor_maps().len())
    }

    /// Boundary substitution matrix on the reachable non-identity survivors
    /// (in the order of [`Self::neighbor_maps`]).
    pub fn boundary_matrix(&self) -> (Vec<LatticeIsometry>, SparseCountMatrix) {
        let maps = self.neighbor_maps();
        let pos: FxHashMap<u32, usize> = maps
            .iter()
            .enumerate()
            .map(|(p, g)| (self.index[g], p))
            .collect();
        let mut b = SparseCountMatrix::new(maps.len());
        for (p, g) in maps.iter().enumerate() {
            let k = self.index[g] as usize;
            for (_, t) in self.out_edges(k) {
                if let Some(&q) = pos.get(&(t as u32)) {
                    b.add(p, q, 1);
                }
            }
        }
        (maps, b)
    }

    /// `log2` of the spectral radius of the boundary matrix.
    pub fn boundary_dimension(&self) -> Result<f64> {
        if !self.decide_rep_tile()? {
            return Err(Error::Argument(
                "boundary dimension is only defined for rep-tiles".into(),
            ));
        }
        let (_, b) = self.boundary_matrix();
        let lambda = spectral_radius(&b)?;
        if lambda < 1.0 {
            return Ok(0.0);
        }
        Ok(lambda.log2().clamp(0.0, self.dim as f64))
    }

    /// Piece adjacency and Hata connectedness: pieces `i` and `j` touch iff
    /// `h_i^{-1} h_j` is a neighbor map.
    pub fn hata_connected(&self, s: &RepTileSystem) -> (bool, PieceAdjacency) {
        let m = s.m();
        let mut adj = vec![vec![false; m]; m];
        for (i, hi) in s.maps().iter().enumerate() {
            let inv = hi.inverse();
            for (j, hj) in s.maps().iter().enumerate() {
                adj[i][j] = i == j || self.contains_reachable(&inv.compose_unchecked(hj));
            }
        }
        let adjacency = PieceAdjacency(adj);
        (adjacency.is_connected(), adjacency)
    }
}

/// Symmetric piece-contact matrix with a true diagonal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PieceAdjacency(pub Vec<Vec<bool>>);

impl PieceAdjacency {
    pub fn is_connected(&self) -> bool {
        let m = self.0.len();
        if m == 0 {
            return true;
        }
        let mut seen = vec![false; m];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..m {
                if self.0[i][j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|x| x)
    }

    /// Number of other pieces each piece touches, sorted ascending.
    pub fn degree_sequence(&self) -> Vec<u32> {
        let mut d: Vec<u32> = self
            .0
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .filter(|&(j, &x)| x && j != i)
                    .count() as u32
            })
            .collect();
        d.sort_unstable();
        d
    }
}

/// Summary of one analysis run.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisReport {
    pub is_rep_tile: bool,
    pub neighbor_count: usize,
    /// `None` unless the system is a rep-tile.
    pub boundary_dimension: Option<f64>,
    pub connected: bool,
    pub piece_adjacency: PieceAdjacency,
    pub node_budget_exceeded: bool,
}

/// Builds the graph and derives every reported quantity. Budget exhaustion is
/// reported through `node_budget_exceeded`, not as an error.
pub fn analyze(s: &RepTileSystem, node_budget: usize) -> Result<AnalysisReport> {
    analyze_graph(s, &build_graph(s, node_budget))
}

pub fn analyze_graph(s: &RepTileSystem, g: &NeighborGraph) -> Result<AnalysisReport> {
    let (connected, piece_adjacency) = g.hata_connected(s);
    match g.decide_rep_tile() {
        Err(Error::Inconclusive { .. }) => Ok(AnalysisReport {
            is_rep_tile: false,
            neighbor_count: 0,
            boundary_dimension: None,
            connected,
            piece_adjacency,
            node_budget_exceeded: true,
        }),
        Err(e) => Err(e),
        Ok(is_rep_tile) => Ok(AnalysisReport {
            is_rep_tile,
            neighbor_count: g.neighbor_maps().len(),
            boundary_dimension: if is_rep_tile {
                Some(g.boundary_dimension()?)
            } else {
                None
            },
            connected,
            piece_adjacency,
            node_budget_exceeded: false,
        }),
    }
}

/// One-sided overlap test: `true` iff two distinct words of equal length
/// `≤ max_len` have the same word map. A collision means two pieces coincide,
/// so the system cannot be a rep-tile; no collision proves nothing.
pub fn overlap_oracle(s: &RepTileSystem, max_len: u32) -> bool {
    for level in 1..=max_len.max(1) {
        let maps = word_maps_at_level(s, level);
        let mut seen = HashSet::with_capacity(maps.len());
        if !maps.into_iter().all(|h| seen.insert(h)) {
            return true;
        }
    }
    false
}
