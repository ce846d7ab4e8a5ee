//! Lattice isometries `x ↦ Mx + v` of `Z^d` for `d ∈ {2, 3}`.
//!
//! `M` is a signed permutation matrix (one `±1` per row and column), stored
//! as a permutation plus a sign vector so that the invariant holds by
//! construction. Column `j` of `M` is `signs[j] · e_{perm[j]}`.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};

/// Largest supported dimension; vectors are stored inline with this length.
pub const MAX_DIM: usize = 3;

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// An integer vector of dimension 2 or 3. Unused trailing slots are zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntVector {
    dim: u8,
    coords: [i64; MAX_DIM],
}

impl IntVector {
    pub fn new(coords: &[i64]) -> Result<Self> {
        check_dim(coords.len())?;
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(IntVector {
            dim: coords.len() as u8,
            coords: c,
        })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(IntVector {
            dim: dim as u8,
            coords: [0; MAX_DIM],
        })
    }

    pub(crate) fn from_array(dim: usize, coords: [i64; MAX_DIM]) -> Self {
        debug_assert!(coords[dim..].iter().all(|&c| c == 0));
        IntVector {
            dim: dim as u8,
            coords,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim()]
    }

    pub fn sup_norm(&self) -> i64 {
        self.coords.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn scaled(&self, k: i64) -> Self {
        let mut c = self.coords;
        c.iter_mut().for_each(|x| *x *= k);
        IntVector { dim: self.dim, coords: c }
    }

    pub fn add(&self, other: &IntVector) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.add_unchecked(other))
    }

    #[inline]
    fn add_unchecked(&self, other: &IntVector) -> Self {
        let mut c = self.coords;
        for (a, b) in c.iter_mut().zip(other.coords.iter()) {
            *a += b;
        }
        IntVector { dim: self.dim, coords: c }
    }
}

impl fmt::Debug for IntVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

/// A signed permutation matrix.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignedPermMatrix {
    dim: u8,
    perm: [u8; MAX_DIM],
    signs: [i8; MAX_DIM],
}

impl SignedPermMatrix {
    /// Builds a matrix from a permutation and a sign vector, validating both.
    pub fn new(perm: &[usize], signs: &[i64]) -> Result<Self> {
        check_dim(perm.len())?;
        same_dim(perm.len(), signs.len())?;
        let dim = perm.len();
        let mut seen = [false; MAX_DIM];
        for &p in perm {
            if p >= dim || seen[p] {
                return Err(Error::validation(
                    "perm",
                    format!("{perm:?} is not a permutation of 0..{dim}"),
                ));
            }
            seen[p] = true;
        }
        if let Some(s) = signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(Error::validation(
                "signs",
                format!("entry {s} is not +1 or -1"),
            ));
        }
        let mut m = Self::identity_unchecked(dim);
        for j in 0..dim {
            m.perm[j] = perm[j] as u8;
            m.signs[j] = signs[j] as i8;
        }
        Ok(m)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::identity_unchecked(dim))
    }

    fn identity_unchecked(dim: usize) -> Self {
        // Unused slots stay fixed so that structural equality is meaningful.
        SignedPermMatrix {
            dim: dim as u8,
            perm: [0, 1, 2],
            signs: [1; MAX_DIM],
        }
    }

    /// Builds a matrix from a dense `dim × dim` array, rejecting anything that
    /// is not a signed permutation.
    pub fn from_dense(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        let mut perm = vec![usize::MAX; dim];
        let mut signs = vec![0; dim];
        for (r, row) in rows.iter().enumerate() {
            same_dim(dim, row.len())?;
            for (c, &e) in row.iter().enumerate() {
                match e {
                    0 => {}
                    1 | -1 if perm[c] == usize::MAX => {
                        perm[c] = r;
                        signs[c] = e;
                    }
                    _ => {
                        return Err(Error::validation(
                            "matrix",
                            format!("entry ({r},{c}) = {e} breaks the signed-permutation form"),
                        ))
                    }
                }
            }
        }
        if perm.contains(&usize::MAX) {
            return Err(Error::validation("matrix", "a column has no nonzero entry"));
        }
        Self::new(&perm, &signs)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn perm(&self) -> Vec<usize> {
        self.perm[..self.dim()].iter().map(|&p| p as usize).collect()
    }

    pub fn signs(&self) -> Vec<i64> {
        self.signs[..self.dim()].iter().map(|&s| s as i64).collect()
    }

    pub fn is_identity(&self) -> bool {
        (0..self.dim()).all(|j| self.perm[j] as usize == j && self.signs[j] == 1)
    }

    /// Entry `(row, col)` of the dense matrix.
    pub fn entry(&self, row: usize, col: usize) -> i64 {
        if self.perm[col] as usize == row {
            self.signs[col] as i64
        } else {
            0
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let d = self.dim();
        (0..d)
            .map(|r| (0..d).map(|c| self.entry(r, c)).collect())
            .collect()
    }

    /// Row index and sign of the nonzero entry in column `j`.
    #[inline]
    pub(crate) fn column(&self, j: usize) -> (usize, i64) {
        (self.perm[j] as usize, self.signs[j] as i64)
    }

    #[inline]
    pub(crate) fn mul_raw(&self, x: &[i64; MAX_DIM]) -> [i64; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for j in 0..self.dim() {
            out[self.perm[j] as usize] = self.signs[j] as i64 * x[j];
        }
        out
    }

    pub fn apply(&self, x: &IntVector) -> Result<IntVector> {
        same_dim(self.dim(), x.dim())?;
        Ok(IntVector::from_array(self.dim(), self.mul_raw(&x.coords)))
    }

    /// Matrix product `self · other`.
    #[inline]
    pub(crate) fn mul_unchecked(&self, other: &SignedPermMatrix) -> SignedPermMatrix {
        let mut m = *self;
        for j in 0..self.dim() {
            let pj = other.perm[j] as usize;
            m.perm[j] = self.perm[pj];
            m.signs[j] = other.signs[j] * self.signs[pj];
        }
        m
    }

    pub fn mul(&self, other: &SignedPermMatrix) -> Result<SignedPermMatrix> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.mul_unchecked(other))
    }

    /// Inverse, which for a signed permutation is the transpose.
    pub fn transpose(&self) -> SignedPermMatrix {
        let mut m = *self;
        for j in 0..self.dim() {
            let p = self.perm[j] as usize;
            m.perm[p] = j as u8;
            m.signs[p] = self.signs[j];
        }
        m
    }

    /// Ordering key: permutation first, then signs with `+1 < -1`.
    fn order_key(&self) -> ([u8; MAX_DIM], [u8; MAX_DIM]) {
        let mut s = [0u8; MAX_DIM];
        for j in 0..MAX_DIM {
            s[j] = u8::from(self.signs[j] < 0);
        }
        (self.perm, s)
    }
}

impl PartialOrd for SignedPermMatrix {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SignedPermMatrix {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then_with(|| self.order_key().cmp(&other.order_key()))
    }
}

impl fmt::Debug for SignedPermMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "perm={:?} signs={:?}", self.perm(), self.signs())
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in permutations(n - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|r| if r >= first { r + 1 } else { r }));
            out.push(p);
        }
    }
    out
}

/// All `2^d · d!` signed permutation matrices of dimension `dim`, ordered
/// lexicographically on `(perm, signs)` with `+1 < -1`.
pub fn enumerate_matrices(dim: usize) -> Result<Vec<SignedPermMatrix>> {
    check_dim(dim)?;
    let mut out = Vec::new();
    for perm in permutations(dim) {
        for mask in 0..(1u32 << dim) {
            // The first coordinate is the most significant bit of the mask.
            let signs: Vec<i64> = (0..dim)
                .map(|j| if mask >> (dim - 1 - j) & 1 == 1 { -1 } else { 1 })
                .collect();
            out.push(SignedPermMatrix::new(&perm, &signs)?);
        }
    }
    Ok(out)
}

/// An isometry `x ↦ Mx + v` of the integer lattice.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct LatticeIsometry {
    matrix: SignedPermMatrix,
    translation: IntVector,
}

impl LatticeIsometry {
    pub fn new(matrix: SignedPermMatrix, translation: IntVector) -> Result<Self> {
        same_dim(matrix.dim(), translation.dim())?;
        Ok(LatticeIsometry {
            matrix,
            translation,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Ok(LatticeIsometry {
            matrix: SignedPermMatrix::identity(dim)?,
            translation: IntVector::zero(dim)?,
        })
    }

    pub fn translation_by(v: &[i64]) -> Result<Self> {
        let translation = IntVector::new(v)?;
        Ok(LatticeIsometry {
            matrix: SignedPermMatrix::identity_unchecked(translation.dim()),
            translation,
        })
    }

    /// Convenience constructor from raw `(perm, signs, v)` data.
    pub fn from_parts(perm: &[usize], signs: &[i64], v: &[i64]) -> Result<Self> {
        Self::new(SignedPermMatrix::new(perm, signs)?, IntVector::new(v)?)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &SignedPermMatrix {
        &self.matrix
    }

    #[inline]
    pub fn translation(&self) -> &IntVector {
        &self.translation
    }

    pub fn apply(&self, x: &IntVector) -> Result<IntVector> {
        same_dim(self.dim(), x.dim())?;
        Ok(self.apply_unchecked(x))
    }

    #[inline]
    pub(crate) fn apply_unchecked(&self, x: &IntVector) -> IntVector {
        let mx = self.matrix.mul_raw(&x.coords);
        IntVector::from_array(self.dim(), mx).add_unchecked(&self.translation)
    }

    /// `self ∘ other`, i.e. `x ↦ self(other(x))`.
    pub fn compose(&self, other: &LatticeIsometry) -> Result<LatticeIsometry> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.compose_unchecked(other))
    }

    #[inline]
    pub(crate) fn compose_unchecked(&self, other: &LatticeIsometry) -> LatticeIsometry {
        LatticeIsometry {
            matrix: self.matrix.mul_unchecked(&other.matrix),
            translation: self.apply_unchecked(&other.translation),
        }
    }

    pub fn inverse(&self) -> LatticeIsometry {
        let mt = self.matrix.transpose();
        let t = IntVector::from_array(self.dim(), mt.mul_raw(&self.translation.coords)).scaled(-1);
        LatticeIsometry {
            matrix: mt,
            translation: t,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.matrix.is_identity() && self.translation.is_zero()
    }

    /// Conjugation by `g^k` with `g(x) = 2x`: the matrix is kept and the
    /// translation multiplied by `2^k`.
    #[inline]
    pub fn conjugate_by_expansion(&self, k: u32) -> LatticeIsometry {
        LatticeIsometry {
            matrix: self.matrix,
            translation: self.translation.scaled(1 << k),
        }
    }

    /// `g ∘ self ∘ g^{-1}`.
    #[inline]
    pub fn doubled(&self) -> LatticeIsometry {
        self.conjugate_by_expansion(1)
    }

    /// Inverse of [`doubled`](Self::doubled), when the translation is even.
    #[inline]
    pub fn halved(&self) -> Option<LatticeIsometry> {
        let t = &self.translation.coords;
        if t.iter().any(|c| c % 2 != 0) {
            return None;
        }
        Some(LatticeIsometry {
            matrix: self.matrix,
            translation: IntVector::from_array(self.dim(), [t[0] / 2, t[1] / 2, t[2] / 2]),
        })
    }
}

// Hashing sits on the hot path of graph construction; two words instead of a
// field-by-field walk. Equal values give equal words, as `Eq` requires.
impl Hash for LatticeIsometry {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let m = &self.matrix;
        let mut code = m.dim as u64;
        for j in 0..MAX_DIM {
            code = code << 3 | (m.perm[j] as u64) << 1 | u64::from(m.signs[j] < 0);
        }
        let t = &self.translation.coords;
        state.write_u64((t[0] as u32 as u64) | (t[1] as u64) << 32);
        state.write_u64((t[2] as u32 as u64) | code << 32);
    }
}

impl PartialOrd for LatticeIsometry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LatticeIsometry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.matrix
            .cmp(&other.matrix)
            .then_with(|| self.translation.cmp(&other.translation))
    }
}

impl fmt::Debug for LatticeIsometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?} v={:?}]", self.matrix, self.translation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iso(perm: &[usize], signs: &[i64], v: &[i64]) -> LatticeIsometry {
        LatticeIsometry::from_parts(perm, signs, v).unwrap()
    }

    #[test]
    fn group_orders() {
        assert_eq!(enumerate_matrices(2).unwrap().len(), 8);
        assert_eq!(enumerate_matrices(3).unwrap().len(), 48);
        assert!(matches!(
            enumerate_matrices(4),
            Err(Error::UnsupportedDimension(4))
        ));
        assert!(enumerate_matrices(1).is_err());
    }

    #[test]
    fn canonical_order_starts_with_identity() {
        for d in [2, 3] {
            let ms = enumerate_matrices(d).unwrap();
            assert!(ms[0].is_identity());
            assert!(ms.windows(2).all(|w| w[0] < w[1]));
        }
        let ms = enumerate_matrices(2).unwrap();
        assert_eq!(ms[1].signs(), vec![1, -1]);
        assert_eq!(ms[4].perm(), vec![1, 0]);
    }

    #[test]
    fn matrices_are_orthogonal_and_distinct() {
        for d in [2, 3] {
            let ms = enumerate_matrices(d).unwrap();
            let set: std::collections::HashSet<_> = ms.iter().collect();
            assert_eq!(set.len(), ms.len());
            for m in &ms {
                let dense = m.to_dense();
                for r in 0..d {
                    for c in 0..d {
                        let dot: i64 = (0..d).map(|k| dense[r][k] * dense[c][k]).sum();
                        assert_eq!(dot, i64::from(r == c));
                    }
                }
                assert_eq!(SignedPermMatrix::from_dense(&dense).unwrap(), *m);
            }
        }
    }

    #[test]
    fn dense_import_validates() {
        assert!(SignedPermMatrix::from_dense(&[vec![1, 1], vec![0, 1]]).is_err());
        assert!(SignedPermMatrix::from_dense(&[vec![2, 0], vec![0, 1]]).is_err());
        assert!(SignedPermMatrix::from_dense(&[vec![0, 0], vec![0, 1]]).is_err());
        let rot = SignedPermMatrix::from_dense(&[vec![0, -1], vec![1, 0]]).unwrap();
        assert_eq!(rot.perm(), vec![1, 0]);
        assert_eq!(rot.signs(), vec![1, -1]);
    }

    #[test]
    fn apply_examples() {
        let h = LatticeIsometry::translation_by(&[1, 2]).unwrap();
        assert_eq!(
            h.apply(&IntVector::zero(2).unwrap()).unwrap().coords(),
            &[1, 2]
        );
        // perm=(1,0), signs=(1,-1): e0 -> e1, e1 -> -e0, a quarter turn.
        let rot = iso(&[1, 0], &[1, -1], &[0, 0]);
        let x = IntVector::new(&[1, 0]).unwrap();
        let y = rot.apply(&x).unwrap();
        assert_eq!(y.coords(), &[0, 1]);
        assert_eq!(y.sup_norm(), 1);
        assert_eq!(rot.apply(&y).unwrap().coords(), &[-1, 0]);
        assert!(matches!(
            rot.apply(&IntVector::new(&[1, 0, 0]).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn identity_predicates() {
        assert!(LatticeIsometry::identity(3).unwrap().is_identity());
        assert!(!LatticeIsometry::translation_by(&[1, 0, 0])
            .unwrap()
            .is_identity());
        assert!(!iso(&[0, 1, 2], &[-1, 1, 1], &[0, 0, 0]).is_identity());
    }

    #[test]
    fn inverse_examples() {
        let id = LatticeIsometry::identity(2).unwrap();
        assert_eq!(id.inverse(), id);
        let t = LatticeIsometry::translation_by(&[3, -1]).unwrap();
        assert_eq!(
            t.inverse(),
            LatticeIsometry::translation_by(&[-3, 1]).unwrap()
        );
    }

    #[test]
    fn compose_rejects_mixed_dimensions() {
        let a = LatticeIsometry::identity(2).unwrap();
        let b = LatticeIsometry::identity(3).unwrap();
        assert!(a.compose(&b).is_err());
    }

    fn arb_iso(dim: usize) -> impl Strategy<Value = LatticeIsometry> {
        let n: usize = if dim == 2 { 8 } else { 48 };
        (0usize..n, proptest::collection::vec(-20i64..=20, dim)).prop_map(move |(k, v)| {
            let m = enumerate_matrices(dim).unwrap()[k];
            LatticeIsometry::new(m, IntVector::new(&v).unwrap()).unwrap()
        })
    }

    fn arb_point(dim: usize) -> impl Strategy<Value = IntVector> {
        proptest::collection::vec(-30i64..=30, dim).prop_map(|v| IntVector::new(&v).unwrap())
    }

    proptest! {
        #[test]
        fn compose_matches_sequential_apply(
            a in arb_iso(3), b in arb_iso(3), x in arb_point(3)
        ) {
            let ab = a.compose(&b).unwrap();
            prop_assert_eq!(ab.apply(&x).unwrap(), a.apply(&b.apply(&x).unwrap()).unwrap());
        }

        #[test]
        fn inverse_is_two_sided(h in arb_iso(3), x in arb_point(3)) {
            let id = LatticeIsometry::identity(3).unwrap();
            prop_assert_eq!(h.compose(&h.inverse()).unwrap(), id);
            prop_assert_eq!(h.inverse().compose(&h).unwrap(), id);
            prop_assert_eq!(h.inverse().inverse(), h);
            prop_assert_eq!(h.inverse().apply(&h.apply(&x).unwrap()).unwrap(), x);
        }

        #[test]
        fn composition_is_associative(a in arb_iso(2), b in arb_iso(2), c in arb_iso(2)) {
            prop_assert_eq!(
                a.compose(&b.compose(&c).unwrap()).unwrap(),
                a.compose(&b).unwrap().compose(&c).unwrap()
            );
        }

        #[test]
        fn identity_is_neutral(h in arb_iso(3)) {
            let id = LatticeIsometry::identity(3).unwrap();
            prop_assert_eq!(id.compose(&h).unwrap(), h);
            prop_assert_eq!(h.compose(&id).unwrap(), h);
        }

        #[test]
        fn isometries_preserve_norms(m in 0usize..48, x in arb_point(3)) {
            let m = enumerate_matrices(3).unwrap()[m];
            let y = m.apply(&x).unwrap();
            prop_assert_eq!(y.sup_norm(), x.sup_norm());
            let sq = |v: &IntVector| v.coords().iter().map(|c| c * c).sum::<i64>();
            prop_assert_eq!(sq(&y), sq(&x));
        }

        #[test]
        fn closure_keeps_signed_permutation_form(a in arb_iso(3), b in arb_iso(3)) {
            let m = a.compose(&b).unwrap().matrix().to_dense();
            prop_assert!(SignedPermMatrix::from_dense(&m).is_ok());
        }
    }
}
