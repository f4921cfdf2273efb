//! Constrained edit distance between a long sequence `X` (length `N`) and a
//! short one `Y` (length `M`) allowing only deletions from `X` and
//! substitutions, with runs of consecutive deletions bounded by `kmax`.
//!
//! Cell `(i, j)` (rows `i = 0..=N-M`, columns `j = 1..=M`) holds the cheapest
//! way to align `y_1..y_j` with `x_1..x_{i+j}` such that `x_{i+j}` is matched
//! to `y_j`; `i` bits have been deleted so far. A cell is *present* only if
//! some complete alignment can pass through it:
//!
//! ```text
//! i <= j * kmax   and   N - M - i <= (M - j + 1) * kmax
//! ```
//!
//! The recursion is
//!
//! ```text
//! w(i,1) = i + [x_{i+1} != y_1]
//! w(i,j) = min_{0<=k<=min(i,kmax)} w(i-k, j-1) + k + [x_{i+j} != y_j]
//! ```
//!
//! and the distance is `min_i w(i,M) + N - M - i` over the last column.

use std::fmt;

use crate::corebits::Bits;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq)]
pub struct EditMatrix {
    n: usize,
    m: usize,
    kmax: usize,
    rows: usize,
    /// Column-major, `cells[(j-1) * rows + i]`.
    cells: Vec<Option<u32>>,
    columns: usize,
    stop_column: Option<usize>,
}

#[inline]
fn cost(k: usize, x: u8, y: u8) -> u32 {
    k as u32 + (x != y) as u32
}

impl EditMatrix {
    /// Fills the matrix column by column. With a threshold, halts at the first
    /// stop column (every present cell has `w(i,j) + N - M - i > T`).
    pub fn compute(x: &Bits, y: &Bits, kmax: usize, threshold: Option<u32>) -> Result<Self> {
        let (n, m) = (x.len(), y.len());
        if m == 0 || m > n || kmax == 0 {
            return Err(Error::Dimensions { n, m, kmax });
        }
        let gap = n - m;
        if gap > (m + 1) * kmax {
            return Err(Error::Infeasible { gap, m, kmax });
        }
        let rows = gap + 1;
        let mut mat = EditMatrix {
            n,
            m,
            kmax,
            rows,
            cells: vec![None; rows * m],
            columns: 0,
            stop_column: None,
        };
        let (xs, ys) = (x.as_slice(), y.as_slice());

        for j in 1..=m {
            let yj = ys[j - 1];
            for i in mat.row_range(j) {
                let value = if j == 1 {
                    cost(i, xs[i], yj)
                } else {
                    let mut best = u32::MAX;
                    for k in 0..=i.min(kmax) {
                        if let Some(prev) = mat.cells[(j - 2) * rows + i - k] {
                            best = best.min(prev + cost(k, xs[i + j - 1], yj));
                        }
                    }
                    debug_assert!(best != u32::MAX, "present cell without predecessor");
                    best
                };
                mat.cells[(j - 1) * rows + i] = Some(value);
            }
            mat.columns = j;
            if let Some(t) = threshold {
                if mat.column_exceeds(j, t) {
                    mat.stop_column = Some(j);
                    break;
                }
            }
        }
        Ok(mat)
    }

    /// Rows present in column `j` under the reachability rule.
    pub fn row_range(&self, j: usize) -> std::ops::RangeInclusive<usize> {
        let gap = self.n - self.m;
        let hi = gap.min(j * self.kmax);
        let lo = gap.saturating_sub((self.m - j + 1) * self.kmax);
        lo..=hi
    }

    pub fn is_present(&self, i: usize, j: usize) -> bool {
        j >= 1 && j <= self.m && self.row_range(j).contains(&i)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn stop_column(&self) -> Option<usize> {
        self.stop_column
    }

    pub fn columns_computed(&self) -> usize {
        self.columns
    }

    /// Value of cell `(i, j)`; `None` when absent or not computed.
    pub fn cell(&self, i: usize, j: usize) -> Option<u32> {
        if j == 0 || j > self.columns || i >= self.rows {
            return None;
        }
        self.cells[(j - 1) * self.rows + i]
    }

    fn column_exceeds(&self, j: usize, t: u32) -> bool {
        let gap = self.n - self.m;
        (0..self.rows).all(|i| match self.cells[(j - 1) * self.rows + i] {
            Some(w) => w as u64 + (gap - i) as u64 > t as u64,
            None => true,
        })
    }

    /// Whether computed column `j` is a stop column for threshold `t`.
    pub fn is_stop_column(&self, j: usize, t: u32) -> Result<bool> {
        if j == 0 || j > self.columns {
            return Err(Error::ColumnNotComputed {
                column: j,
                computed: self.columns,
            });
        }
        Ok(self.column_exceeds(j, t))
    }

    /// First computed column that is a stop column for `t`. Any column that
    /// stops under some threshold also stops under every smaller one, so a
    /// matrix computed under `T0` answers this exactly for every `t <= T0`.
    pub fn first_stop_column(&self, t: u32) -> Option<usize> {
        (1..=self.columns).find(|&j| self.column_exceeds(j, t))
    }

    pub fn edit_distance(&self) -> Result<u32> {
        if let Some(j) = self.stop_column {
            return Err(Error::Stopped(j));
        }
        let gap = self.n - self.m;
        Ok((0..self.rows)
            .filter_map(|i| self.cell(i, self.m).map(|w| w + (gap - i) as u32))
            .min()
            .expect("last column has a present cell"))
    }

    /// Rows of the matrix as the text grid `0 0 1 - -`.
    pub fn dump(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for EditMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (1..=self.m)
                .map(|j| match self.cell(i, j) {
                    Some(w) => w.to_string(),
                    None => "-".to_string(),
                })
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for EditMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "EditMatrix(N={}, M={}, kmax={}, stop={:?})\n{}",
            self.n, self.m, self.kmax, self.stop_column, self
        )
    }
}

pub fn compute_matrix(x: &Bits, y: &Bits, kmax: usize, threshold: Option<u32>) -> Result<EditMatrix> {
    EditMatrix::compute(x, y, kmax, threshold)
}

pub fn edit_distance(matrix: &EditMatrix) -> Result<u32> {
    matrix.edit_distance()
}

pub fn is_stop_column(matrix: &EditMatrix, j: usize, t: u32) -> Result<bool> {
    matrix.is_stop_column(j, t)
}
