//! Rep-tile systems `g(A) = h_1(A) ∪ … ∪ h_m(A)` with `g(x) = 2x`.
//!
//! The piece maps are `f_k = g^{-1} ∘ h_k`. A word `w = (w_1, …, w_n)` names
//! the level-`n` piece `f_{w_1} ∘ … ∘ f_{w_n}(A)`; the first letter is the
//! outermost (coarsest) subdivision. Multiplying through by `g^n` gives the
//! integer isometry [`word_map`] that places that piece inside `g^n(A)`.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::lattice::{check_dim, enumerate_matrices, LatticeIsometry};

/// The data `(h_1, …, h_m)` of a lattice rep-tile candidate, `m = 2^dim`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RepTileSystem {
    dim: usize,
    maps: Vec<LatticeIsometry>,
}

impl RepTileSystem {
    pub fn new(dim: usize, maps: Vec<LatticeIsometry>) -> Result<Self> {
        check_dim(dim)?;
        let m = 1usize << dim;
        if maps.len() != m {
            return Err(Error::validation(
                "maps",
                format!("expected {m} maps for dim {dim}, found {}", maps.len()),
            ));
        }
        if let Some((k, h)) = maps.iter().enumerate().find(|(_, h)| h.dim() != dim) {
            return Err(Error::validation(
                format!("maps[{k}]"),
                format!("dimension {} does not match system dimension {dim}", h.dim()),
            ));
        }
        Ok(RepTileSystem { dim, maps })
    }

    /// The standard `2 × … × 2` subdivision of the unit square or cube:
    /// translations by `{0,1}^dim`.
    pub fn unit_cube(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let maps = (0..1i64 << dim)
            .map(|k| {
                let v: Vec<i64> = (0..dim).map(|j| (k >> (dim - 1 - j)) & 1).collect();
                LatticeIsometry::translation_by(&v)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, maps)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of pieces, `2^dim`.
    #[inline]
    pub fn m(&self) -> usize {
        self.maps.len()
    }

    #[inline]
    pub fn maps(&self) -> &[LatticeIsometry] {
        &self.maps
    }

    /// Same system with the maps listed in a different order.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let maps = order
            .iter()
            .map(|&k| {
                self.maps
                    .get(k)
                    .copied()
                    .ok_or_else(|| Error::Argument(format!("map index {k} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.dim, maps)
    }
}

/// The four-map block construction: `g(A) = C ∪ f1(C)`, `C = D ∪ f2(D)`,
/// `D = f3(A) ∪ f4(A)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockSystem {
    pub f1: LatticeIsometry,
    pub f2: LatticeIsometry,
    pub f3: LatticeIsometry,
    pub f4: LatticeIsometry,
}

impl BlockSystem {
    pub fn new(
        f1: LatticeIsometry,
        f2: LatticeIsometry,
        f3: LatticeIsometry,
        f4: LatticeIsometry,
    ) -> Result<Self> {
        for (name, f) in [("f1", &f1), ("f2", &f2), ("f3", &f3), ("f4", &f4)] {
            if f.dim() != 3 {
                return Err(Error::validation(
                    name,
                    format!("block systems are three-dimensional, found dim {}", f.dim()),
                ));
            }
        }
        Ok(BlockSystem { f1, f2, f3, f4 })
    }

    pub fn maps(&self) -> [&LatticeIsometry; 4] {
        [&self.f1, &self.f2, &self.f3, &self.f4]
    }
}

/// Expands a block system into its eight maps, in the order
/// `f3, f4, f2f3, f2f4, f1f3, f1f4, f1f2f3, f1f2f4`.
pub fn block_expand(b: &BlockSystem) -> RepTileSystem {
    let BlockSystem { f1, f2, f3, f4 } = b;
    let f1f2 = f1.compose_unchecked(f2);
    let maps = vec![
        *f3,
        *f4,
        f2.compose_unchecked(f3),
        f2.compose_unchecked(f4),
        f1.compose_unchecked(f3),
        f1.compose_unchecked(f4),
        f1f2.compose_unchecked(f3),
        f1f2.compose_unchecked(f4),
    ];
    RepTileSystem { dim: 3, maps }
}

/// A piece address, letters are zero-based map indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

/// `H_w = g^n ∘ f_{w_1} ∘ … ∘ f_{w_n}` as an integer isometry.
///
/// Computed by the recursion `H_{w k} = (g H_w g^{-1}) ∘ h_k`.
pub fn word_map(s: &RepTileSystem, w: &Word) -> Result<LatticeIsometry> {
    let (&first, rest) = w
        .0
        .split_first()
        .ok_or_else(|| Error::Argument("word_map needs a nonempty word".into()))?;
    let letter = |k: usize| {
        s.maps
            .get(k)
            .ok_or_else(|| Error::Argument(format!("letter {k} out of range 0..{}", s.m())))
    };
    let mut acc = *letter(first)?;
    for &k in rest {
        acc = acc.doubled().compose_unchecked(letter(k)?);
    }
    Ok(acc)
}

/// All `H_w` for words of length `level` in lexicographic word order.
/// Level 0 yields the identity (empty word).
pub fn word_maps_at_level(s: &RepTileSystem, level: u32) -> Vec<LatticeIsometry> {
    let mut current = vec![LatticeIsometry::identity(s.dim).expect("valid dim")];
    for _ in 0..level {
        current = current
            .iter()
            .flat_map(|h| {
                let d = h.doubled();
                s.maps.iter().map(move |hk| d.compose_unchecked(hk))
            })
            .collect();
    }
    current
}

/// `R = max(1, max_k ‖v_k‖∞)`. The attractor lies in `[-R, R]^dim`.
pub fn bounding_radius(s: &RepTileSystem) -> i64 {
    s.maps
        .iter()
        .map(|h| h.translation().sup_norm())
        .max()
        .unwrap_or(0)
        .max(1)
}

/// Size of the search space: `(|matrices(dim)| · (2·range + 1)^dim)^num_maps`.
pub fn data_space_count(dim: usize, range: u64, num_maps: u32) -> Result<BigUint> {
    let matrices = enumerate_matrices(dim)?.len() as u64;
    if num_maps == 0 {
        return Err(Error::Argument("num_maps must be at least 1".into()));
    }
    let per_map = BigUint::from(matrices) * BigUint::from(2 * range + 1).pow(dim as u32);
    Ok(per_map.pow(num_maps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::IntVector;
    use proptest::prelude::*;

    fn t(v: &[i64]) -> LatticeIsometry {
        LatticeIsometry::translation_by(v).unwrap()
    }

    #[test]
    fn map_count_is_validated() {
        let maps = vec![t(&[0, 0, 0]); 7];
        let err = RepTileSystem::new(3, maps).unwrap_err();
        assert!(err.to_string().contains("expected 8 maps"), "{err}");
        assert!(RepTileSystem::new(2, vec![t(&[0, 0, 0]); 4]).is_err());
    }

    #[test]
    fn identity_blocks_expand_to_identities() {
        let id = LatticeIsometry::identity(3).unwrap();
        let b = BlockSystem::new(id, id, id, id).unwrap();
        let s = block_expand(&b);
        assert_eq!(s.m(), 8);
        assert!(s.maps().iter().all(|h| h.is_identity()));
    }

    #[test]
    fn translation_blocks_add_up() {
        let (tt, u, w) = ([1, 2, 3], [10, 20, 30], [100, 200, 300]);
        let b = BlockSystem::new(
            t(&w),
            t(&u),
            LatticeIsometry::identity(3).unwrap(),
            t(&tt),
        )
        .unwrap();
        let s = block_expand(&b);
        let sum = |xs: &[[i64; 3]]| -> Vec<i64> {
            (0..3).map(|j| xs.iter().map(|x| x[j]).sum()).collect()
        };
        let expected = [
            sum(&[]),
            sum(&[tt]),
            sum(&[u]),
            sum(&[u, tt]),
            sum(&[w]),
            sum(&[w, tt]),
            sum(&[w, u]),
            sum(&[w, u, tt]),
        ];
        for (h, e) in s.maps().iter().zip(expected.iter()) {
            let e = if e.is_empty() { vec![0, 0, 0] } else { e.clone() };
            assert!(h.matrix().is_identity());
            assert_eq!(h.translation().coords(), &e[..]);
        }
    }

    #[test]
    fn plate_block_enumerates_box_corners() {
        let b = BlockSystem::new(
            t(&[4, 0, 0]),
            t(&[0, 2, 0]),
            LatticeIsometry::identity(3).unwrap(),
            t(&[0, 0, 1]),
        )
        .unwrap();
        let got: Vec<Vec<i64>> = block_expand(&b)
            .maps()
            .iter()
            .map(|h| h.translation().coords().to_vec())
            .collect();
        // Brute force: walk the documented order f3, f4, f2f3, f2f4, f1f3, ...
        let mut want = Vec::new();
        for a in [0, 4] {
            for bb in [0, 2] {
                for c in [0, 1] {
                    want.push(vec![a, bb, c]);
                }
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn block_maps_must_be_3d() {
        let id2 = LatticeIsometry::identity(2).unwrap();
        let id3 = LatticeIsometry::identity(3).unwrap();
        assert!(BlockSystem::new(id3, id3, id3, id2).is_err());
    }

    #[test]
    fn word_map_examples() {
        let cube = RepTileSystem::unit_cube(3).unwrap();
        for k in 0..8 {
            assert_eq!(word_map(&cube, &Word(vec![k])).unwrap(), cube.maps()[k]);
        }
        for k in 0..8 {
            for j in 0..8 {
                let h = word_map(&cube, &Word(vec![k, j])).unwrap();
                let vk = cube.maps()[k].translation();
                let vj = cube.maps()[j].translation();
                assert_eq!(h, t(vk.scaled(2).add(vj).unwrap().coords()));
            }
        }
        assert!(word_map(&cube, &Word(vec![])).is_err());
        assert!(word_map(&cube, &Word(vec![8])).is_err());

        let id = LatticeIsometry::identity(2).unwrap();
        let s = RepTileSystem::new(2, vec![id; 4]).unwrap();
        assert!(word_map(&s, &Word(vec![0, 3, 2, 1])).unwrap().is_identity());
    }

    #[test]
    fn bounding_radius_examples() {
        let id = LatticeIsometry::identity(3).unwrap();
        assert_eq!(bounding_radius(&RepTileSystem::new(3, vec![id; 8]).unwrap()), 1);
        assert_eq!(bounding_radius(&RepTileSystem::unit_cube(3).unwrap()), 1);
        let mut maps = vec![id; 8];
        maps[5] = t(&[-7, 3, 10]);
        assert_eq!(bounding_radius(&RepTileSystem::new(3, maps).unwrap()), 10);
    }

    #[test]
    fn data_space_counts() {
        assert_eq!(data_space_count(3, 10, 1).unwrap(), BigUint::from(444_528u32));
        assert_eq!(data_space_count(2, 1, 1).unwrap(), BigUint::from(72u32));
        assert!(data_space_count(4, 1, 1).is_err());
        assert!(data_space_count(3, 1, 0).is_err());
    }

    fn arb_system(dim: usize, range: i64) -> impl Strategy<Value = RepTileSystem> {
        let n: usize = if dim == 2 { 8 } else { 48 };
        proptest::collection::vec(
            (0..n, proptest::collection::vec(-range..=range, dim)),
            1 << dim,
        )
        .prop_map(move |raw| {
            let ms = enumerate_matrices(dim).unwrap();
            let maps = raw
                .into_iter()
                .map(|(k, v)| LatticeIsometry::new(ms[k], IntVector::new(&v).unwrap()).unwrap())
                .collect();
            RepTileSystem::new(dim, maps).unwrap()
        })
    }

    /// Closed form `M_{w1}…M_{wn} x + Σ 2^{n-i} (M_{w1}…M_{w(i-1)}) v_{wi}`.
    fn closed_form(s: &RepTileSystem, w: &[usize]) -> LatticeIsometry {
        let n = w.len();
        let mut prefix = LatticeIsometry::identity(s.dim()).unwrap();
        let mut v = IntVector::zero(s.dim()).unwrap();
        for (i, &k) in w.iter().enumerate() {
            let h = s.maps()[k];
            let mv = prefix.matrix().apply(h.translation()).unwrap();
            v = v.add(&mv.scaled(1 << (n - 1 - i))).unwrap();
            prefix = LatticeIsometry::new(
                prefix.matrix().mul(h.matrix()).unwrap(),
                IntVector::zero(s.dim()).unwrap(),
            )
            .unwrap();
        }
        LatticeIsometry::new(*prefix.matrix(), v).unwrap()
    }

    proptest! {
        #[test]
        fn recursion_matches_closed_form(
            s in arb_system(3, 5),
            w in proptest::collection::vec(0usize..8, 1..6)
        ) {
            prop_assert_eq!(word_map(&s, &Word(w.clone())).unwrap(), closed_form(&s, &w));
        }

        #[test]
        fn concatenation_law(
            s in arb_system(2, 4),
            u in proptest::collection::vec(0usize..4, 1..4),
            v in proptest::collection::vec(0usize..4, 1..4),
        ) {
            let (u, v) = (Word(u), Word(v));
            let huv = word_map(&s, &u.concat(&v)).unwrap();
            let hu = word_map(&s, &u).unwrap().conjugate_by_expansion(v.len() as u32);
            let hv = word_map(&s, &v).unwrap();
            prop_assert_eq!(huv, hu.compose(&hv).unwrap());
        }

        #[test]
        fn word_translation_bound(
            s in arb_system(3, 6),
            w in proptest::collection::vec(0usize..8, 1..7)
        ) {
            let n = w.len() as u32;
            let h = word_map(&s, &Word(w)).unwrap();
            prop_assert!(h.translation().sup_norm() <= ((1i64 << n) - 1) * bounding_radius(&s));
        }

        #[test]
        fn level_listing_matches_word_map(s in arb_system(2, 3), level in 1u32..4) {
            let all = word_maps_at_level(&s, level);
            prop_assert_eq!(all.len(), 4usize.pow(level));
            for (idx, h) in all.iter().enumerate() {
                let mut letters = vec![0; level as usize];
                let mut r = idx;
                for slot in letters.iter_mut().rev() {
                    *slot = r % 4;
                    r /= 4;
                }
                prop_assert_eq!(*h, word_map(&s, &Word(letters)).unwrap());
            }
        }

        #[test]
        fn block_expansion_composes(s in arb_system(3, 3)) {
            let m = s.maps();
            let b = BlockSystem::new(m[0], m[1], m[2], m[3]).unwrap();
            let e = block_expand(&b);
            let c = |a: &LatticeIsometry, b: &LatticeIsometry| a.compose(b).unwrap();
            prop_assert_eq!(e.maps()[3], c(&m[1], &m[3]));
            prop_assert_eq!(e.maps()[6], c(&c(&m[0], &m[1]), &m[2]));
            prop_assert_eq!(e.maps()[7], c(&m[0], &c(&m[1], &m[3])));
        }
    }

    #[test]
    fn data_space_count_matches_repeated_multiplication() {
        for dim in [2usize, 3] {
            for range in 0..4u64 {
                let per = if dim == 2 { 8u64 } else { 48 } * (2 * range + 1).pow(dim as u32);
                let mut acc = BigUint::from(1u32);
                for k in 1..=9u32 {
                    acc *= per;
                    assert_eq!(data_space_count(dim, range, k).unwrap(), acc);
                }
            }
        }
    }
}
