//! Shareable geometry: supertile patches, quad meshes of voxel solids and SVG
//! drawings of planar tiles. All output is byte-deterministic.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde_json::json;

use crate::error::{Error, Result};
use crate::ifs::{word_maps_at_level, RepTileSystem};
use crate::lattice::LatticeIsometry;
use crate::topology::{Cell, VoxelSet};

/// Deepest supertile level accepted.
pub const MAX_PATCH_LEVEL: u32 = 6;

/// Sixteen-colour palette, cycled by placement index.
pub const PALETTE: [&str; 16] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#17becf",
];

/// Copies of the tile filling the level-`level` supertile, one per word.
#[derive(Clone, Debug, PartialEq)]
pub struct TilingPatch {
    pub level: u32,
    pub placements: Vec<LatticeIsometry>,
}

/// Placements `H_w` for all words of length `level`, in lexicographic word
/// order. The caller is responsible for having verified the system.
pub fn supertile_patch(s: &RepTileSystem, level: u32) -> Result<TilingPatch> {
    if level > MAX_PATCH_LEVEL {
        return Err(Error::Resource(format!(
            "patch level {level} exceeds the limit {MAX_PATCH_LEVEL}"
        )));
    }
    Ok(TilingPatch {
        level,
        placements: word_maps_at_level(s, level),
    })
}

impl TilingPatch {
    /// JSON document listing the placements.
    pub fn to_json(&self) -> Vec<u8> {
        let placements: Vec<_> = self
            .placements
            .iter()
            .map(|h| {
                json!({
                    "perm": h.matrix().perm(),
                    "signs": h.matrix().signs(),
                    "v": h.translation().coords(),
                })
            })
            .collect();
        let doc = json!({ "level": self.level, "placements": placements });
        let mut out = serde_json::to_vec_pretty(&doc).expect("serializable");
        out.push(b'\n');
        out
    }
}

/// Image of the unit cell `c` (at scale `2^cell_level`) under a placement.
fn place_cell(h: &LatticeIsometry, c: &Cell, cell_level: u32, dim: usize) -> Cell {
    let scale = 1i64 << cell_level;
    let m = h.matrix();
    let t = h.translation().coords();
    let mut out = [0i64; 3];
    for (row, slot) in out.iter_mut().enumerate().take(dim) {
        let col = (0..dim).find(|&col| m.entry(row, col) != 0).expect("one entry per row");
        let e = m.entry(row, col);
        // [c, c+1] maps to [e·c, e·c + e]; take the lower end.
        let lo = if e > 0 { c[col] } else { -c[col] - 1 };
        *slot = lo + scale * t[row];
    }
    out
}

/// Quad mesh of the exposed cell faces: `v x y z` lines, then `f a b c d`
/// lines with 1-based indices. Quads are oriented outward; vertices are
/// numbered in order of first use while scanning cells lexicographically.
pub fn mesh_export(v: &VoxelSet) -> Result<Vec<u8>> {
    if v.dim() != 3 {
        return Err(Error::Argument("mesh export needs a 3-dimensional voxel set".into()));
    }
    let mut index: HashMap<Cell, usize> = HashMap::new();
    let mut vertices: Vec<Cell> = Vec::new();
    let mut faces: Vec<[usize; 4]> = Vec::new();
    for c in v.sorted_cells() {
        for axis in 0..3 {
            let (b, d) = ((axis + 1) % 3, (axis + 2) % 3);
            for sign in [-1i64, 1] {
                let mut nb = c;
                nb[axis] += sign;
                if v.contains(&nb) {
                    continue;
                }
                let mut base = c;
                if sign > 0 {
                    base[axis] += 1;
                }
                let step = |p: Cell, a: usize| {
                    let mut q = p;
                    q[a] += 1;
                    q
                };
                // base, +e_b, +e_b+e_d, +e_d has normal e_axis.
                let mut quad = [base, step(base, b), step(step(base, b), d), step(base, d)];
                if sign < 0 {
                    quad.reverse();
                }
                let ids = quad.map(|p| {
                    *index.entry(p).or_insert_with(|| {
                        vertices.push(p);
                        vertices.len()
                    })
                });
                faces.push(ids);
            }
        }
    }
    let mut out = String::new();
    writeln!(out, "# {} cells, {} vertices, {} quads", v.len(), vertices.len(), faces.len()).unwrap();
    for p in &vertices {
        writeln!(out, "v {} {} {}", p[0], p[1], p[2]).unwrap();
    }
    for f in &faces {
        writeln!(out, "f {} {} {} {}", f[0], f[1], f[2], f[3]).unwrap();
    }
    Ok(out.into_bytes())
}

/// SVG drawing of a planar tile given by its cells. Without a patch the tile
/// is drawn once; with a patch every placement gets one `<path>` coloured by
/// its index. Cells are at scale `2^tile.level()`; the y axis points up.
pub fn svg_export(tile: &VoxelSet, patch: Option<&TilingPatch>) -> Result<Vec<u8>> {
    if tile.dim() != 2 {
        return Err(Error::Argument("svg export needs a 2-dimensional voxel set".into()));
    }
    let cells = tile.sorted_cells();
    let copies: Vec<Vec<Cell>> = match patch {
        None => vec![cells],
        Some(p) => p
            .placements
            .iter()
            .map(|h| {
                let mut placed: Vec<Cell> = cells.iter().map(|c| place_cell(h, c, tile.level(), 2)).collect();
                placed.sort_unstable();
                placed
            })
            .collect(),
    };
    let all = copies.iter().flatten();
    let (mut x0, mut y0, mut x1, mut y1) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
    for c in all {
        x0 = x0.min(c[0]);
        x1 = x1.max(c[0] + 1);
        // Flip: cell row y covers svg rows [-y-1, -y].
        y0 = y0.min(-c[1] - 1);
        y1 = y1.max(-c[1]);
    }
    if x0 > x1 {
        (x0, y0, x1, y1) = (0, 0, 1, 1);
    }
    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" shape-rendering="crispEdges">"#,
        x0,
        y0,
        x1 - x0,
        y1 - y0
    )
    .unwrap();
    for (k, copy) in copies.iter().enumerate() {
        let mut d = String::new();
        for c in copy {
            if !d.is_empty() {
                d.push(' ');
            }
            write!(d, "M{} {}h1v1h-1z", c[0], -c[1] - 1).unwrap();
        }
        writeln!(out, r#"<path id="copy{k}" fill="{}" d="{d}"/>"#, PALETTE[k % PALETTE.len()]).unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    Ok(out.into_bytes())
}

/// All cells covered by the copies of a tile in a patch, in any dimension.
pub fn patch_cells(tile: &VoxelSet, patch: &TilingPatch) -> Vec<Cell> {
    let mut out: Vec<Cell> = patch
        .placements
        .iter()
        .flat_map(|h| tile.iter().map(move |c| place_cell(h, c, tile.level(), tile.dim())))
        .collect();
    out.sort_unstable();
    out
}
