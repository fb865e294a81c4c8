//! Exact sparse linear algebra over the rationals.
//!
//! Deterministic by construction: the pivot is always the lowest-index
//! nonzero column, rows are processed in order, particular solutions set
//! free variables to zero, and kernel bases come from unit free variables
//! in column order. All downstream model constructions rely on this.

use std::collections::BTreeMap;

use num::traits::Zero;

use crate::rational::Q;

/// Sparse triplet matrix over `Q`. No stored zeros, no duplicate positions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), Q>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set(&mut self, r: usize, c: usize, v: Q) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        if v.is_zero() {
            self.entries.remove(&(r, c));
        } else {
            self.entries.insert((r, c), v);
        }
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: Q) {
        if v.is_zero() {
            return;
        }
        let cur = self.get(r, c) + v;
        self.set(r, c, cur);
    }

    /// Absent positions read as zero.
    pub fn get(&self, r: usize, c: usize) -> Q {
        self.entries.get(&(r, c)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn from_rows(rows: &[Vec<Q>]) -> Self {
        let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
        let mut m = SparseMatrix::new(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    fn to_row_maps(&self) -> Vec<BTreeMap<usize, Q>> {
        let mut rows = vec![BTreeMap::new(); self.rows];
        for (&(r, c), v) in &self.entries {
            rows[r].insert(c, v.clone());
        }
        rows
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[Q]) -> Vec<Q> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![Q::zero(); self.rows];
        for (&(r, c), v) in &self.entries {
            if !x[c].is_zero() {
                out[r] += v * &x[c];
            }
        }
        out
    }

    /// Reduced row echelon form with the list of pivot columns.
    pub fn rref(&self) -> (SparseMatrix, Vec<usize>) {
        let (rows, pivots) = rref_rows(self.to_row_maps());
        let mut m = SparseMatrix::new(self.rows, self.cols);
        for (i, row) in rows.iter().enumerate() {
            for (c, v) in row {
                m.set(i, *c, v.clone());
            }
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Solves `m x = b`. Returns a particular solution (free variables zero)
    /// and a kernel basis, or `None` when inconsistent.
    pub fn solve(&self, b: &[Q]) -> Option<(Vec<Q>, Vec<Vec<Q>>)> {
        assert_eq!(b.len(), self.rows);
        let mut rows = self.to_row_maps();
        // augmented column at index `cols`
        for (i, v) in b.iter().enumerate() {
            if !v.is_zero() {
                rows[i].insert(self.cols, v.clone());
            }
        }
        let (rows, pivots) = rref_rows(rows);
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![Q::zero(); self.cols];
        for (i, &p) in pivots.iter().enumerate() {
            x[p] = rows[i].get(&self.cols).cloned().unwrap_or_else(Q::zero);
        }
        let kernel = kernel_from_rref(&rows, &pivots, self.cols);
        Some((x, kernel))
    }

    /// Basis of the null space, deterministic order.
    pub fn kernel_basis(&self) -> Vec<Vec<Q>> {
        let (rows, pivots) = rref_rows(self.to_row_maps());
        kernel_from_rref(&rows, &pivots, self.cols)
    }
}

/// Row-echelon reduction of sparse rows; returns reduced rows (pivot rows
/// first, in pivot-column order) and the pivot columns.
fn rref_rows(rows: Vec<BTreeMap<usize, Q>>) -> (Vec<BTreeMap<usize, Q>>, Vec<usize>) {
    let mut reducer = RowReducer::new();
    for row in rows {
        reducer.offer(row);
    }
    reducer.finish()
}

fn kernel_from_rref(
    rows: &[BTreeMap<usize, Q>],
    pivots: &[usize],
    cols: usize,
) -> Vec<Vec<Q>> {
    let pivot_set: BTreeMap<usize, usize> =
        pivots.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_set.contains_key(&free) {
            continue;
        }
        let mut v = vec![Q::zero(); cols];
        v[free] = Q::from_integer(1.into());
        for (&p, &i) in &pivot_set {
            if let Some(c) = rows[i].get(&free) {
                v[p] = -c.clone();
            }
        }
        // normalize to leading entry +1
        let lead = v.iter().find(|x| !x.is_zero()).cloned().unwrap();
        for x in v.iter_mut() {
            *x /= lead.clone();
        }
        basis.push(v);
    }
    basis
}

/// Incremental Gaussian elimination: rows are offered one at a time and kept
/// only when independent of those already held.
pub struct RowReducer {
    // sorted by pivot column
    rows: Vec<(usize, BTreeMap<usize, Q>)>,
}

impl Default for RowReducer {
    fn default() -> Self {
        Self::new()
    }
}

impl RowReducer {
    pub fn new() -> Self {
        RowReducer { rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `row` against the held rows. Returns true when the row was
    /// independent (and is now held).
    pub fn offer(&mut self, row: BTreeMap<usize, Q>) -> bool {
        match self.reduce_full(row) {
            Some((p, r)) => {
                let pos = self.rows.partition_point(|(q, _)| *q < p);
                self.rows.insert(pos, (p, r));
                true
            }
            None => false,
        }
    }

    /// Reduces without inserting; `Some` means independent.
    pub fn reduces_to_zero(&self, row: BTreeMap<usize, Q>) -> bool {
        self.reduce_full(row).is_none()
    }

    fn reduce_full(&self, mut row: BTreeMap<usize, Q>) -> Option<(usize, BTreeMap<usize, Q>)> {
        loop {
            let p = match row.keys().next() {
                Some(&p) => p,
                None => return None,
            };
            match self.rows.binary_search_by_key(&p, |(q, _)| *q) {
                Ok(i) => {
                    let factor = row[&p].clone();
                    let other = self.rows[i].1.clone();
                    for (c, v) in other {
                        let cur = row.remove(&c).unwrap_or_else(Q::zero) - &factor * v;
                        if !cur.is_zero() {
                            row.insert(c, cur);
                        }
                    }
                }
                Err(_) => {
                    // normalize to leading 1
                    let lead = row[&p].clone();
                    for v in row.values_mut() {
                        *v /= lead.clone();
                    }
                    return Some((p, row));
                }
            }
        }
    }

    /// Full back-substitution pass, yielding reduced rows and pivot columns.
    pub fn finish(mut self) -> (Vec<BTreeMap<usize, Q>>, Vec<usize>) {
        let pivots: Vec<usize> = self.rows.iter().map(|(p, _)| *p).collect();
        // eliminate pivot columns above
        for i in (0..self.rows.len()).rev() {
            let (p, row) = self.rows[i].clone();
            for j in 0..i {
                let coeff = self.rows[j].1.get(&p).cloned();
                if let Some(coeff) = coeff {
                    for (c, v) in &row {
                        let cur = self.rows[j].1.remove(c).unwrap_or_else(Q::zero)
                            - &coeff * v;
                        if !cur.is_zero() {
                            self.rows[j].1.insert(*c, cur);
                        }
                    }
                }
            }
        }
        (self.rows.into_iter().map(|(_, r)| r).collect(), pivots)
    }
}
