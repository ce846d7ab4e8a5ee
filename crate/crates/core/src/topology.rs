//! Voxel geometry: outer approximations of attractors and the topology of
//! finite unions of unit cells (components, Euler characteristic, cavities,
//! handles).
//!
//! Cells are closed unit cubes (squares in 2D) `[c, c+1]^d`. Topological
//! invariants refer to the closed cubical complex they span; the complement is
//! the open rest of space. This pairs 26-connectivity of the solid with
//! 6-connectivity of the complement (8/4 in the plane).

use std::collections::VecDeque;

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::ifs::{bounding_radius, RepTileSystem};
use crate::lattice::LatticeIsometry;

/// Deepest level accepted by [`voxelize`].
pub const MAX_VOXEL_LEVEL: u32 = 8;
/// Refuse to materialise more cells than this.
pub const MAX_CELLS: usize = 1 << 24;

pub type Cell = [i64; 3];

/// A finite set of integer cells. In 2D the third coordinate is always 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoxelSet {
    dim: usize,
    level: u32,
    cells: FxHashSet<Cell>,
}

impl VoxelSet {
    pub fn new(dim: usize, level: u32) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(VoxelSet {
            dim,
            level,
            cells: FxHashSet::default(),
        })
    }

    pub fn from_cells(dim: usize, level: u32, cells: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let mut v = VoxelSet::new(dim, level)?;
        for c in cells {
            v.insert(c)?;
        }
        Ok(v)
    }

    /// Returns whether the cell was new.
    pub fn insert(&mut self, c: Cell) -> Result<bool> {
        if self.dim == 2 && c[2] != 0 {
            return Err(Error::validation("cell", "planar cells must have z = 0"));
        }
        Ok(self.cells.insert(c))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: &Cell) -> bool {
        self.cells.contains(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter()
    }

    /// Cells in lexicographic order.
    pub fn sorted_cells(&self) -> Vec<Cell> {
        let mut v: Vec<Cell> = self.cells.iter().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn translated(&self, by: Cell) -> VoxelSet {
        let by = if self.dim == 2 { [by[0], by[1], 0] } else { by };
        VoxelSet {
            dim: self.dim,
            level: self.level,
            cells: self
                .cells
                .iter()
                .map(|c| [c[0] + by[0], c[1] + by[1], c[2] + by[2]])
                .collect(),
        }
    }

    /// Inclusive bounds `(lo, hi)` per axis, `None` when empty.
    pub fn bounds(&self) -> Option<(Cell, Cell)> {
        let mut it = self.cells.iter();
        let first = *it.next()?;
        let (mut lo, mut hi) = (first, first);
        for c in it {
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        Some((lo, hi))
    }

    fn axes(&self) -> usize {
        self.dim
    }
}

/// Axis-aligned integer box `[lo, hi)` (half-open in cell terms).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct IntBox {
    pub lo: Cell,
    pub hi: Cell,
}

impl IntBox {
    pub fn new(lo: Cell, hi: Cell) -> Result<Self> {
        if (0..3).any(|a| hi[a] < lo[a]) {
            return Err(Error::validation("box", format!("empty extent {lo:?}..{hi:?}")));
        }
        Ok(IntBox { lo, hi })
    }

    pub fn volume(&self) -> i64 {
        (0..3).map(|a| self.hi[a] - self.lo[a]).product()
    }

    pub fn extents(&self) -> Cell {
        [
            self.hi[0] - self.lo[0],
            self.hi[1] - self.lo[1],
            self.hi[2] - self.lo[2],
        ]
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let [x0, y0, z0] = self.lo;
        let [x1, y1, z1] = self.hi;
        (x0..x1).flat_map(move |x| (y0..y1).flat_map(move |y| (z0..z1).map(move |z| [x, y, z])))
    }
}

/// Exact cell decomposition of a union of boxes with disjoint interiors.
pub fn voxel_from_boxes(boxes: &[IntBox]) -> Result<VoxelSet> {
    let mut v = VoxelSet::new(3, 0)?;
    for (k, b) in boxes.iter().enumerate() {
        for c in b.cells() {
            if !v.cells.insert(c) {
                return Err(Error::validation(
                    format!("boxes[{k}]"),
                    format!("overlaps an earlier box at cell {c:?}"),
                ));
            }
        }
    }
    Ok(v)
}

/// Outer approximation of the attractor at resolution `2^-level`: every cell
/// of side `2^-level` meeting some box `H_w([-R, R]^d)`, `|w| = level`, stored
/// at integer scale `2^level`.
pub fn voxelize(s: &RepTileSystem, level: u32) -> Result<VoxelSet> {
    if level > MAX_VOXEL_LEVEL {
        return Err(Error::Resource(format!(
            "voxel level {level} exceeds the limit {MAX_VOXEL_LEVEL}"
        )));
    }
    let dim = s.dim();
    let r = bounding_radius(s);
    let centers = word_translations(s, level)?;
    let per_box = (2 * r as usize).pow(dim as u32);
    if centers.len().saturating_mul(per_box) > 4 * MAX_CELLS {
        return Err(Error::Resource("voxelization too large".into()));
    }
    let mut v = VoxelSet::new(dim, level)?;
    let zr = if dim == 3 { r } else { 0 };
    let zspan = if dim == 3 { 2 * r } else { 1 };
    for t in centers {
        let b = IntBox {
            lo: [t[0] - r, t[1] - r, t[2] - zr],
            hi: [t[0] + r, t[1] + r, t[2] - zr + zspan],
        };
        v.cells.extend(b.cells());
        if v.cells.len() > MAX_CELLS {
            return Err(Error::Resource("voxelization too large".into()));
        }
    }
    Ok(v)
}

/// Picture-quality approximation at scale `2^level`: the cells
/// `H_w([0,1]^d)` for all words of length `level`. For a rep-tile they have the
/// right total volume and lie within a bounded distance of `2^level · A`.
pub fn digit_cells(s: &RepTileSystem, level: u32) -> Result<VoxelSet> {
    let dim = s.dim();
    let mut v = VoxelSet::new(dim, level)?;
    for h in word_maps_dedup(s, level)? {
        let m = h.matrix();
        let t = h.translation().coords();
        let mut c = [0i64; 3];
        for (row, slot) in c.iter_mut().enumerate().take(dim) {
            // Row `row` of M has a single ±1; the image interval starts at t or t−1.
            let negative = (0..dim).any(|col| m.entry(row, col) < 0);
            *slot = t[row] - i64::from(negative);
        }
        v.cells.insert(c);
    }
    Ok(v)
}

/// Distinct translations of the word maps of length `level`. Word maps are
/// deduplicated level by level since the children of `H_w` depend only on
/// `H_w`.
fn word_translations(s: &RepTileSystem, level: u32) -> Result<FxHashSet<Cell>> {
    let dim = s.dim();
    Ok(word_maps_dedup(s, level)?
        .iter()
        .map(|h| {
            let t = h.translation().coords();
            [t[0], t[1], if dim == 3 { t[2] } else { 0 }]
        })
        .collect())
}

fn word_maps_dedup(s: &RepTileSystem, level: u32) -> Result<FxHashSet<LatticeIsometry>> {
    if level > MAX_VOXEL_LEVEL {
        return Err(Error::Resource(format!(
            "voxel level {level} exceeds the limit {MAX_VOXEL_LEVEL}"
        )));
    }
    let dim = s.dim();
    let mut states: FxHashSet<LatticeIsometry> = FxHashSet::default();
    states.insert(LatticeIsometry::identity(dim)?);
    for _ in 0..level {
        let mut next = FxHashSet::default();
        for h in &states {
            let d = h.doubled();
            next.extend(s.maps().iter().map(|hk| d.compose_unchecked(hk)));
        }
        if next.len() > MAX_CELLS {
            return Err(Error::Resource("too many distinct word maps".into()));
        }
        states = next;
    }
    Ok(states)
}

fn face_offsets(dim: usize) -> Vec<Cell> {
    let mut out = Vec::new();
    for a in 0..dim {
        for s in [-1, 1] {
            let mut d = [0; 3];
            d[a] = s;
            out.push(d);
        }
    }
    out
}

fn all_offsets(dim: usize) -> Vec<Cell> {
    let zr = if dim == 3 { -1..=1 } else { 0..=0 };
    let mut out = Vec::new();
    for x in -1..=1 {
        for y in -1..=1 {
            for z in zr.clone() {
                if (x, y, z) != (0, 0, 0) {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

fn add(c: &Cell, d: &Cell) -> Cell {
    [c[0] + d[0], c[1] + d[1], c[2] + d[2]]
}

fn count_components(cells: &FxHashSet<Cell>, offsets: &[Cell]) -> usize {
    let mut seen: FxHashSet<Cell> = FxHashSet::default();
    let mut count = 0;
    let mut queue = VecDeque::new();
    for c in cells {
        if !seen.insert(*c) {
            continue;
        }
        count += 1;
        queue.push_back(*c);
        while let Some(p) = queue.pop_front() {
            for d in offsets {
                let q = add(&p, d);
                if cells.contains(&q) && seen.insert(q) {
                    queue.push_back(q);
                }
            }
        }
    }
    count
}

/// Face-adjacent connected components.
pub fn components(v: &VoxelSet) -> usize {
    count_components(&v.cells, &face_offsets(v.axes()))
}

/// Connected components of the closed complex (cells touching at a corner
/// count as connected).
pub fn closed_components(v: &VoxelSet) -> usize {
    count_components(&v.cells, &all_offsets(v.axes()))
}

/// `V − E + F (− C)` of the closed cubical complex spanned by the cells.
pub fn euler_characteristic(v: &VoxelSet) -> i64 {
    // Faces of every dimension, in doubled coordinates: a cell `c` has centre
    // `2c+1` and its closure consists of the points `2c + {0,1,2}^d`. The
    // number of odd coordinates is the face dimension.
    let dim = v.axes();
    let mut faces: FxHashSet<Cell> = FxHashSet::default();
    let zr = if dim == 3 { 0..=2 } else { 0..=0 };
    for c in &v.cells {
        for dx in 0..=2 {
            for dy in 0..=2 {
                for dz in zr.clone() {
                    faces.insert([2 * c[0] + dx, 2 * c[1] + dy, 2 * c[2] + dz]);
                }
            }
        }
    }
    faces
        .iter()
        .map(|f| {
            let odd = f.iter().filter(|x| x.rem_euclid(2) == 1).count();
            if odd % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .sum()
}

/// Dense occupancy grid over the bounding box padded by one cell.
struct Grid {
    lo: Cell,
    size: [usize; 3],
    occupied: Vec<bool>,
}

impl Grid {
    fn new(v: &VoxelSet) -> Option<Grid> {
        let (lo, hi) = v.bounds()?;
        let pad = |a: usize| if a < v.axes() { 1 } else { 0 };
        let lo = [lo[0] - pad(0), lo[1] - pad(1), lo[2] - pad(2)];
        let size = [
            (hi[0] + pad(0) - lo[0] + 1) as usize,
            (hi[1] + pad(1) - lo[1] + 1) as usize,
            (hi[2] + pad(2) - lo[2] + 1) as usize,
        ];
        let mut g = Grid {
            lo,
            size,
            occupied: vec![false; size[0] * size[1] * size[2]],
        };
        for c in &v.cells {
            let i = g.index(c);
            g.occupied[i] = true;
        }
        Some(g)
    }

    fn index(&self, c: &Cell) -> usize {
        let x = (c[0] - self.lo[0]) as usize;
        let y = (c[1] - self.lo[1]) as usize;
        let z = (c[2] - self.lo[2]) as usize;
        (x * self.size[1] + y) * self.size[2] + z
    }

    fn cell(&self, i: usize) -> Cell {
        let z = i % self.size[2];
        let y = (i / self.size[2]) % self.size[1];
        let x = i / (self.size[1] * self.size[2]);
        [
            self.lo[0] + x as i64,
            self.lo[1] + y as i64,
            self.lo[2] + z as i64,
        ]
    }

    fn inside(&self, c: &Cell) -> bool {
        (0..3).all(|a| c[a] >= self.lo[a] && c[a] < self.lo[a] + self.size[a] as i64)
    }
}

/// Bounded face-connected components of the complement, computed in the
/// bounding box padded by one cell (the outer shell is always unbounded).
pub fn cavities(v: &VoxelSet) -> usize {
    let Some(g) = Grid::new(v) else {
        return 0;
    };
    let offsets = face_offsets(v.axes());
    let mut seen = g.occupied.clone();
    let mut components = 0usize;
    let mut queue = VecDeque::new();
    // Index 0 is a padded corner, hence in the unbounded component.
    for start in 0..seen.len() {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let c = g.cell(i);
            for d in &offsets {
                let q = add(&c, d);
                if g.inside(&q) {
                    let j = g.index(&q);
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    components - 1
}

/// True when no critical configuration occurs, i.e. when face- and
/// corner-connectivity agree for both the set and its complement. For such
/// sets `components == closed_components`.
pub fn is_well_composed(v: &VoxelSet) -> bool {
    let dim = v.axes();
    let zr = if dim == 3 { 0..=1 } else { 0..=0 };
    let mut corners: FxHashSet<Cell> = FxHashSet::default();
    for c in &v.cells {
        for dx in 0..=1 {
            for dy in 0..=1 {
                for dz in zr.clone() {
                    corners.insert([c[0] + dx, c[1] + dy, c[2] + dz]);
                }
            }
        }
    }
    for p in corners {
        // Occupancy of the 2^d cells around lattice point `p`.
        let occ = |dx: i64, dy: i64, dz: i64| v.cells.contains(&[p[0] - dx, p[1] - dy, p[2] - dz]);
        if dim == 2 {
            let (a, b, c, d) = (occ(0, 0, 0), occ(1, 0, 0), occ(0, 1, 0), occ(1, 1, 0));
            if a == d && b == c && a != b {
                return false;
            }
            continue;
        }
        let mut block = [false; 8];
        for (k, slot) in block.iter_mut().enumerate() {
            *slot = occ((k >> 2 & 1) as i64, (k >> 1 & 1) as i64, (k & 1) as i64);
        }
        // Edge rings: fix one axis, look at the 2x2 square of the other two.
        for axis in 0..3 {
            for fixed in 0..2 {
                let sq: Vec<bool> = (0..8)
                    .filter(|k| (k >> (2 - axis)) & 1 == fixed)
                    .map(|k| block[k])
                    .collect();
                // Within a square the order is (00, 01, 10, 11).
                if sq[0] == sq[3] && sq[1] == sq[2] && sq[0] != sq[1] {
                    return false;
                }
            }
        }
        // Vertex: exactly one antipodal pair in (or out).
        let count = block.iter().filter(|&&b| b).count();
        if count == 2 || count == 6 {
            for k in 0..4 {
                if block[k] == block[7 - k] && block[k] == (count == 2) {
                    return false;
                }
            }
        }
    }
    true
}

/// Face components of the cells whose whole `3^d` neighbourhood lies in the
/// set. A heuristic stand-in for the number of interior components; it is
/// not an exact invariant of the limit set.
pub fn interior_components_estimate(v: &VoxelSet) -> usize {
    let offsets = all_offsets(v.axes());
    let core: FxHashSet<Cell> = v
        .cells
        .iter()
        .filter(|c| offsets.iter().all(|d| v.cells.contains(&add(c, d))))
        .copied()
        .collect();
    count_components(&core, &face_offsets(v.axes()))
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct TopologyReport {
    /// Face-adjacent components.
    pub components: usize,
    pub euler_characteristic: i64,
    pub cavities: usize,
    /// First Betti number of the closed complex,
    /// `closed_components + cavities − euler_characteristic`.
    pub handles: i64,
    /// Heuristic, see [`interior_components_estimate`].
    pub interior_components_estimate: usize,
    /// When true, `components` equals the closed-complex component count and
    /// `handles = components + cavities − euler_characteristic`.
    pub well_composed: bool,
}

/// Components, Euler characteristic, cavities and handles of a solid.
pub fn hole_report(v: &VoxelSet) -> Result<TopologyReport> {
    if v.dim != 3 {
        return Err(Error::Argument("hole report needs a 3-dimensional voxel set".into()));
    }
    let euler = euler_characteristic(v);
    let cav = cavities(v);
    Ok(TopologyReport {
        components: components(v),
        euler_characteristic: euler,
        cavities: cav,
        handles: closed_components(v) as i64 + cav as i64 - euler,
        interior_components_estimate: interior_components_estimate(v),
        well_composed: is_well_composed(v),
    })
}
