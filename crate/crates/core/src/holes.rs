//! Constraint search for a simple 3D rep-tile with one hole, built from four
//! `4×2×1` plates.
//!
//! The tile `T` is a union of four disjoint plates placed in the box
//! `B = [0,8]×[0,4]×[0,2]` such that `T` and its image under a half-turn `ρ`
//! of `B` partition `B`. Then `2T` is the union of the four doubled plates,
//! each of which is a congruent copy of `B = T ∪ ρ(T)`, so `T` is an 8-rep-tile
//! with maps `φ_k` and `φ_k ∘ ρ`, where `φ_k` carries `B` onto the doubled
//! plate `k`.
//!
//! Cells of `B` are encoded as bits of a `u64`: bit `(x·4 + y)·2 + z`.

use crate::error::{Error, Result};
use crate::ifs::RepTileSystem;
use crate::lattice::LatticeIsometry;
use crate::neighbor::{build_graph, DEFAULT_NODE_BUDGET};
use crate::topology::{hole_report, voxel_from_boxes, IntBox, TopologyReport, VoxelSet};

/// Extents of the enclosing box.
pub const BOX: [i64; 3] = [8, 4, 2];
/// Extents of one plate, up to axis order.
pub const PLATE: [i64; 3] = [4, 2, 1];

fn bit(c: [i64; 3]) -> u64 {
    1u64 << ((c[0] * BOX[1] + c[1]) * BOX[2] + c[2])
}

fn mask_of(b: &IntBox) -> u64 {
    b.cells().fold(0, |m, c| m | bit(c))
}

/// Half-turn of `B` about an axis through its centre.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum HalfTurn {
    X,
    Y,
    Z,
}

impl HalfTurn {
    pub const ALL: [HalfTurn; 3] = [HalfTurn::X, HalfTurn::Y, HalfTurn::Z];

    fn axis(self) -> usize {
        self as usize
    }

    /// Image of a unit cell.
    pub fn apply_cell(self, c: [i64; 3]) -> [i64; 3] {
        let mut out = c;
        for a in 0..3 {
            if a != self.axis() {
                out[a] = BOX[a] - 1 - c[a];
            }
        }
        out
    }

    /// The half-turn as a lattice isometry of space, mapping `B` onto itself.
    pub fn isometry(self) -> LatticeIsometry {
        let mut signs = [-1i64; 3];
        let mut v = BOX;
        signs[self.axis()] = 1;
        v[self.axis()] = 0;
        LatticeIsometry::from_parts(&[0, 1, 2], &signs, &v).expect("valid half-turn")
    }

    fn apply_mask(self, m: u64) -> u64 {
        let mut out = 0;
        for x in 0..BOX[0] {
            for y in 0..BOX[1] {
                for z in 0..BOX[2] {
                    if m & bit([x, y, z]) != 0 {
                        out |= bit(self.apply_cell([x, y, z]));
                    }
                }
            }
        }
        out
    }
}

/// All placements of a plate inside `B`, ordered by orientation then corner.
pub fn plate_placements() -> Vec<IntBox> {
    let mut out = Vec::new();
    for e in orientations() {
        for x in 0..=BOX[0] - e[0] {
            for y in 0..=BOX[1] - e[1] {
                for z in 0..=BOX[2] - e[2] {
                    let lo = [x, y, z];
                    out.push(IntBox {
                        lo,
                        hi: [x + e[0], y + e[1], z + e[2]],
                    });
                }
            }
        }
    }
    out
}

fn orientations() -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for p in [[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 0, 1], [1, 2, 0], [2, 1, 0]] {
        let e = [PLATE[p[0]], PLATE[p[1]], PLATE[p[2]]];
        if (0..3).all(|a| e[a] <= BOX[a]) && !out.contains(&e) {
            out.push(e);
        }
    }
    out
}

/// Four plates plus the half-turn exchanging the tile with the rest of `B`.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct PlateLayout {
    pub plates: [IntBox; 4],
    pub half_turn: HalfTurn,
}

impl PlateLayout {
    pub fn voxels(&self) -> VoxelSet {
        voxel_from_boxes(&self.plates).expect("plates are disjoint")
    }

    /// The induced 8-map system `φ_k, φ_k ∘ ρ` for `k = 1..4`.
    pub fn induced_system(&self) -> RepTileSystem {
        let rho = self.half_turn.isometry();
        let mut maps = Vec::with_capacity(8);
        for p in &self.plates {
            let e = p.extents();
            // Axis j of B (length BOX[j]) goes to the plate axis of half that length.
            let perm: Vec<usize> = (0..3)
                .map(|j| (0..3).find(|&i| 2 * e[i] == BOX[j]).expect("plate extents"))
                .collect();
            let v: Vec<i64> = p.lo.iter().map(|x| 2 * x).collect();
            let phi = LatticeIsometry::from_parts(&perm, &[1, 1, 1], &v).expect("valid map");
            maps.push(phi);
            maps.push(phi.compose(&rho).expect("same dim"));
        }
        RepTileSystem::new(3, maps).expect("eight maps")
    }
}

/// Every layout whose tile and half-turned tile partition `B`. Layouts are
/// listed by half-turn, then by lexicographic placement indices.
pub fn partition_layouts() -> Vec<PlateLayout> {
    let placements = plate_placements();
    let masks: Vec<u64> = placements.iter().map(mask_of).collect();
    let n = placements.len();
    let mut out = Vec::new();
    for turn in HalfTurn::ALL {
        let turned: Vec<u64> = masks.iter().map(|&m| turn.apply_mask(m)).collect();
        for a in 0..n {
            let (u1, r1) = (masks[a], turned[a]);
            if u1 & r1 != 0 {
                continue;
            }
            for b in a + 1..n {
                let (u2, r2) = (u1 | masks[b], r1 | turned[b]);
                if u1 & masks[b] != 0 || u2 & r2 != 0 {
                    continue;
                }
                for c in b + 1..n {
                    let (u3, r3) = (u2 | masks[c], r2 | turned[c]);
                    if u2 & masks[c] != 0 || u3 & r3 != 0 {
                        continue;
                    }
                    for d in c + 1..n {
                        let (u4, r4) = (u3 | masks[d], r3 | turned[d]);
                        if u3 & masks[d] == 0 && u4 & r4 == 0 {
                            out.push(PlateLayout {
                                plates: [placements[a], placements[b], placements[c], placements[d]],
                                half_turn: turn,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// A layout that passed every check.
#[derive(Clone, Debug, serde::Serialize)]
pub struct HoleTile {
    pub layout: PlateLayout,
    pub report: TopologyReport,
    #[serde(skip)]
    pub system: RepTileSystem,
    /// Number of partitioning layouts examined, and how many had one handle.
    pub layouts_examined: usize,
    pub single_hole_layouts: usize,
}

/// First partitioning layout whose tile is face-connected, well composed, has
/// exactly one handle, and whose induced system verifies as a rep-tile.
pub fn find_hole_tile() -> Result<HoleTile> {
    let layouts = partition_layouts();
    let mut single = 0;
    let mut found = None;
    for layout in &layouts {
        let report = hole_report(&layout.voxels())?;
        if report.components != 1 || report.handles != 1 || !report.well_composed {
            continue;
        }
        single += 1;
        if found.is_none() {
            let system = layout.induced_system();
            if build_graph(&system, DEFAULT_NODE_BUDGET).decide_rep_tile()? {
                found = Some((layout.clone(), report, system));
            }
        }
    }
    let (layout, report, system) =
        found.ok_or_else(|| Error::Argument("no plate layout satisfies the constraints".into()))?;
    Ok(HoleTile {
        layout,
        report,
        system,
        layouts_examined: layouts.len(),
        single_hole_layouts: single,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::word_maps_at_level;

    #[test]
    fn placement_count() {
        // (4,2,1): 5·3·2, (2,4,1): 7·1·2, (4,1,2): 5·4·1, (1,4,2): 8·1·1.
        assert_eq!(plate_placements().len(), 30 + 14 + 20 + 8);
        assert!(plate_placements().iter().all(|b| b.volume() == 8));
    }

    #[test]
    fn half_turns_are_involutions_of_the_box() {
        for t in HalfTurn::ALL {
            let full = (1u128 << 64) - 1;
            assert_eq!(t.apply_mask(full as u64), full as u64);
            for x in 0..8 {
                let c = [x, x % 4, x % 2];
                assert_eq!(t.apply_cell(t.apply_cell(c)), c);
            }
            let iso = t.isometry();
            assert!(iso.compose(&iso).unwrap().is_identity());
            // The continuous map sends the cell [c, c+1] to [ρ(c), ρ(c)+1].
            let c = [1, 2, 0];
            let corner = iso.apply(&crate::lattice::IntVector::new(&[2, 3, 1]).unwrap()).unwrap();
            let img = t.apply_cell(c);
            let lo: Vec<i64> = (0..3).map(|a| img[a].min(corner.coords()[a])).collect();
            assert_eq!(lo, img.to_vec());
        }
    }

    #[test]
    fn layouts_partition_the_box() {
        let layouts = partition_layouts();
        assert!(!layouts.is_empty());
        for l in layouts.iter().take(200) {
            let t = mask_of(&l.plates[0]) | mask_of(&l.plates[1]) | mask_of(&l.plates[2]) | mask_of(&l.plates[3]);
            assert_eq!(t.count_ones(), 32);
            assert_eq!(t | l.half_turn.apply_mask(t), u64::MAX);
        }
    }

    #[test]
    fn induced_system_reproduces_the_tile() {
        let l = &partition_layouts()[0];
        let s = l.induced_system();
        // Level-1 pieces: each image of a unit cell of T under h_k lands in 2T.
        let t = l.voxels();
        let doubled: std::collections::HashSet<[i64; 3]> = t
            .iter()
            .flat_map(|c| {
                let c = *c;
                (0..8).map(move |k| [2 * c[0] + (k >> 2 & 1), 2 * c[1] + (k >> 1 & 1), 2 * c[2] + (k & 1)])
            })
            .collect();
        let mut covered = std::collections::HashSet::new();
        for h in word_maps_at_level(&s, 1) {
            for c in t.iter() {
                // Image of the cell [c, c+1]: min corner of the mapped corners.
                let a = h.apply(&crate::lattice::IntVector::new(c).unwrap()).unwrap();
                let b = h
                    .apply(&crate::lattice::IntVector::new(&[c[0] + 1, c[1] + 1, c[2] + 1]).unwrap())
                    .unwrap();
                let lo = [0, 1, 2].map(|i| a.coords()[i].min(b.coords()[i]));
                assert!(doubled.contains(&lo), "{lo:?} outside 2T");
                assert!(covered.insert(lo), "pieces overlap at {lo:?}");
            }
        }
        assert_eq!(covered.len(), doubled.len());
    }

    #[test]
    fn finds_a_hole_tile() {
        let found = find_hole_tile().unwrap();
        let r = &found.report;
        assert_eq!((r.components, r.handles), (1, 1));
        assert!(r.well_composed);
        assert!(build_graph(&found.system, DEFAULT_NODE_BUDGET).decide_rep_tile().unwrap());
        // The half-turned copy (the rest of the box) has the same topology.
        let turn = found.layout.half_turn;
        let rest = VoxelSet::from_cells(3, 0, found.layout.voxels().iter().map(|&c| turn.apply_cell(c))).unwrap();
        assert_eq!(&hole_report(&rest).unwrap(), r);
        eprintln!(
            "{} layouts, {} with one hole; chosen {:?}",
            found.layouts_examined, found.single_hole_layouts, found.layout
        );
    }
}
