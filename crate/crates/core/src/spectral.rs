//! Spectral radius of sparse nonnegative integer matrices.
//!
//! The matrix is split into strongly connected components; the spectral
//! radius is the maximum over the irreducible diagonal blocks. Each block is
//! handled by power iteration on `B + I` (primitive whenever `B` is
//! irreducible) from the all-ones vector, stopped by the Collatz–Wielandt
//! bracket `min (Ax)_i / x_i ≤ ρ(A) ≤ max (Ax)_i / x_i`.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};

/// Relative width of the Collatz–Wielandt bracket at which iteration stops.
pub const TOLERANCE: f64 = 1e-9;
/// Iteration cap per irreducible block.
pub const MAX_ITERATIONS: usize = 10_000;

/// A square matrix with nonnegative integer entries stored as a list of
/// `(row, col, weight)` triples. Repeated triples add up.
#[derive(Clone, Debug, Default)]
pub struct SparseCountMatrix {
    n: usize,
    entries: Vec<(usize, usize, u64)>,
}

impl SparseCountMatrix {
    pub fn new(n: usize) -> Self {
        SparseCountMatrix {
            n,
            entries: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, row: usize, col: usize, weight: u64) {
        assert!(row < self.n && col < self.n, "entry out of range");
        if weight > 0 {
            self.entries.push((row, col, weight));
        }
    }

    pub fn from_dense(rows: &[Vec<u64>]) -> Self {
        let mut m = SparseCountMatrix::new(rows.len());
        for (r, row) in rows.iter().enumerate() {
            for (c, &w) in row.iter().enumerate() {
                m.add(r, c, w);
            }
        }
        m
    }
}

/// Spectral radius of `m`.
pub fn spectral_radius(m: &SparseCountMatrix) -> Result<f64> {
    if m.n == 0 {
        return Ok(0.0);
    }
    let mut g = DiGraph::<(), u64>::with_capacity(m.n, m.entries.len());
    let nodes: Vec<_> = (0..m.n).map(|_| g.add_node(())).collect();
    for &(r, c, w) in &m.entries {
        g.add_edge(nodes[r], nodes[c], w);
    }
    let mut component = vec![usize::MAX; m.n];
    let sccs = tarjan_scc(&g);
    for (k, scc) in sccs.iter().enumerate() {
        for v in scc {
            component[v.index()] = k;
        }
    }

    // Row-sorted entries of each block, in block-local indices.
    let mut local = vec![0usize; m.n];
    for scc in &sccs {
        for (i, v) in scc.iter().enumerate() {
            local[v.index()] = i;
        }
    }
    let mut blocks: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); sccs.len()];
    for &(r, c, w) in &m.entries {
        if component[r] == component[c] {
            blocks[component[r]].push((local[r], local[c], w as f64));
        }
    }

    let mut rho: f64 = 0.0;
    for (k, scc) in sccs.iter().enumerate() {
        let entries = &blocks[k];
        if entries.is_empty() {
            continue; // single vertex without a loop
        }
        rho = rho.max(irreducible_radius(scc.len(), entries)?);
    }
    Ok(rho)
}

fn irreducible_radius(n: usize, entries: &[(usize, usize, f64)]) -> Result<f64> {
    if n == 1 {
        return Ok(entries.iter().map(|e| e.2).sum());
    }
    let mut x = vec![1.0f64; n];
    let mut y = vec![0.0f64; n];
    let mut estimate = f64::NAN;
    for _ in 0..MAX_ITERATIONS {
        y.copy_from_slice(&x);
        for &(r, c, w) in entries {
            y[r] += w * x[c];
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (yi, xi) in y.iter().zip(&x) {
            let q = yi / xi;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        estimate = 0.5 * (lo + hi) - 1.0;
        if hi - lo <= TOLERANCE * hi {
            return Ok(estimate);
        }
        let norm = y.iter().cloned().fold(0.0, f64::max);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    Err(Error::Numerical {
        iterations: MAX_ITERATIONS,
        estimate,
        last_iterate: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-8 * b.abs().max(1.0)
    }

    #[test]
    fn small_known_radii() {
        assert_eq!(spectral_radius(&SparseCountMatrix::new(0)).unwrap(), 0.0);
        // Nilpotent.
        let m = SparseCountMatrix::from_dense(&[vec![0, 1], vec![0, 0]]);
        assert_eq!(spectral_radius(&m).unwrap(), 0.0);
        // Fibonacci matrix: golden ratio.
        let m = SparseCountMatrix::from_dense(&[vec![1, 1], vec![1, 0]]);
        assert!(close(spectral_radius(&m).unwrap(), (1.0 + 5f64.sqrt()) / 2.0));
        // Periodic (a 2-cycle with weights 2 and 8): radius 4.
        let m = SparseCountMatrix::from_dense(&[vec![0, 2], vec![8, 0]]);
        assert!(close(spectral_radius(&m).unwrap(), 4.0));
    }

    #[test]
    fn reducible_with_jordan_block() {
        // [[4,1],[0,4]] defeats plain power iteration; the block split does not.
        let m = SparseCountMatrix::from_dense(&[vec![4, 1], vec![0, 4]]);
        assert_eq!(spectral_radius(&m).unwrap(), 4.0);
        // Upper triangular chain of blocks, largest hidden at the end.
        let m = SparseCountMatrix::from_dense(&[
            vec![1, 3, 0, 0],
            vec![0, 1, 1, 0],
            vec![0, 0, 2, 1],
            vec![0, 0, 1, 2],
        ]);
        assert!(close(spectral_radius(&m).unwrap(), 3.0));
    }

    #[test]
    fn repeated_entries_accumulate() {
        let mut m = SparseCountMatrix::new(1);
        m.add(0, 0, 1);
        m.add(0, 0, 1);
        assert_eq!(spectral_radius(&m).unwrap(), 2.0);
    }

    /// Independent oracle: largest eigenvalue modulus from a dense
    /// eigen-decomposition.
    fn radius_by_eigenvalues(a: &[[f64; 4]; 4]) -> f64 {
        let m = nalgebra::Matrix4::from_fn(|i, j| a[i][j]);
        m.complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    proptest::proptest! {
        #[test]
        fn matches_dense_eigenvalues(entries in proptest::collection::vec(0u64..4, 16)) {
            let mut a = [[0.0; 4]; 4];
            let mut rows = vec![vec![0u64; 4]; 4];
            for (k, &w) in entries.iter().enumerate() {
                // Sparsify so that reducible and nilpotent cases show up.
                let w = if w == 3 { 0 } else { w };
                a[k / 4][k % 4] = w as f64;
                rows[k / 4][k % 4] = w;
            }
            let got = spectral_radius(&SparseCountMatrix::from_dense(&rows)).unwrap();
            // Dense eigensolvers lose digits on defective eigenvalues, hence the loose bound.
            let want = radius_by_eigenvalues(&a);
            proptest::prop_assert!((got - want).abs() < 1e-3 * want.max(1.0), "{got} vs {want}");
        }
    }
}
