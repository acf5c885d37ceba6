use std::io::Write;

use crate::error::{Error, Result};

/// Compressed sparse row matrix. Entries within a row are sorted by column
/// and unique; duplicate triplets are summed during construction.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::Dimension(format!(
                    "triplet ({r}, {c}) outside {nrows} x {ncols} matrix"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        // Stable sort: duplicates keep push order, so symmetric assembly
        // loops produce bitwise-symmetric sums.
        sorted.sort_by_key(|t| (t.0, t.1));

        let mut row_counts = vec![0usize; nrows];
        let mut col_idx: Vec<usize> = Vec::with_capacity(sorted.len());
        let mut vals: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            if prev == Some((r, c)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(c);
                vals.push(v);
                row_counts[r] += 1;
                prev = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        for r in 0..nrows {
            row_ptr[r + 1] = row_ptr[r] + row_counts[r];
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            vals,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.vals[a..b])
    }

    /// Entry (i, j), zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "spmv dimension mismatch");
        let mut y = vec![0.0; self.nrows];
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            *yi = acc;
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut ptr = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            ptr[c + 1] += 1;
        }
        for c in 0..self.ncols {
            ptr[c + 1] += ptr[c];
        }
        let mut col_idx = vec![0usize; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        let mut next = ptr.clone();
        for i in 0..self.nrows {
            let (cols, v) = self.row(i);
            for (c, val) in cols.iter().zip(v) {
                let slot = next[*c];
                col_idx[slot] = i;
                vals[slot] = *val;
                next[*c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: ptr,
            col_idx,
            vals,
        }
    }

    /// Stored entries as (row, col, value) in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            self.col_idx[a..b]
                .iter()
                .zip(&self.vals[a..b])
                .map(move |(c, v)| (i, *c, *v))
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |a_ij - a_ji| over the combined sparsity pattern.
    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols, "asymmetry needs a square matrix");
        let t = self.transpose();
        let mut worst = 0.0f64;
        for (i, j, v) in self.entries() {
            worst = worst.max((v - t.get(i, j)).abs());
        }
        worst
    }

    /// Plain text dump, one `row col value` line per stored entry, sorted by
    /// row then column.
    pub fn write_coo(&self, out: &mut impl Write) -> std::io::Result<()> {
        for (i, j, v) in self.entries() {
            writeln!(out, "{i} {j} {v:.16e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort_columns() {
        let a = CsrMatrix::from_triplets(
            2,
            3,
            &[(1, 2, 4.0), (0, 1, 1.0), (1, 2, -1.0), (0, 0, 2.0), (1, 0, 3.0)],
        )
        .unwrap();
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.get(1, 0), 3.0);
        assert_eq!(a.get(1, 2), 3.0);
        assert_eq!(a.get(0, 2), 0.0);
        let (cols, _) = a.row(1);
        assert_eq!(cols, &[0, 2]);
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        let r = CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn spmv_matches_dense_product() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 2.0), (0, 2, 1.0), (1, 1, -3.0), (2, 0, 4.0), (2, 2, 5.0)],
        )
        .unwrap();
        let y = a.mul_vec(&[1.0, 2.0, 3.0]);
        assert_eq!(y, vec![5.0, -6.0, 19.0]);
    }

    #[test]
    fn transpose_round_trips() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 1, 1.5), (1, 0, -2.0), (1, 2, 7.0)]).unwrap();
        let t = a.transpose();
        assert_eq!(t.nrows(), 3);
        assert_eq!(t.ncols(), 2);
        for (i, j, v) in a.entries() {
            assert_eq!(t.get(j, i), v);
        }
        let tt = t.transpose();
        for (i, j, v) in a.entries() {
            assert_eq!(tt.get(i, j), v);
        }
    }

    #[test]
    fn coo_dump_is_sorted_row_major() {
        let a = CsrMatrix::from_triplets(2, 2, &[(1, 0, 3.0), (0, 1, 2.0), (0, 0, 1.0)]).unwrap();
        let mut buf = Vec::new();
        a.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("0 0 "));
        assert!(lines[1].starts_with("0 1 "));
        assert!(lines[2].starts_with("1 0 "));
    }

    use proptest::prelude::*;

    fn triplets() -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
        proptest::collection::vec((0..6usize, 0..5usize, -100.0f64..100.0), 0..40)
    }

    proptest! {
        #[test]
        fn transpose_is_an_involution(t in triplets()) {
            let a = CsrMatrix::from_triplets(6, 5, &t).unwrap();
            let tt = a.transpose().transpose();
            prop_assert_eq!(a.nnz(), tt.nnz());
            for ((i, j, v), (ti, tj, tv)) in a.entries().zip(tt.entries()) {
                prop_assert_eq!((i, j), (ti, tj));
                prop_assert_eq!(v, tv);
            }
        }

        #[test]
        fn spmv_agrees_with_a_dense_product(
            t in triplets(),
            x in proptest::collection::vec(-10.0f64..10.0, 5),
        ) {
            let a = CsrMatrix::from_triplets(6, 5, &t).unwrap();
            let mut dense = [[0.0f64; 5]; 6];
            for (i, j, v) in a.entries() {
                dense[i][j] = v;
            }
            let y = a.mul_vec(&x);
            for (i, row) in dense.iter().enumerate() {
                // Skipping zeros leaves the accumulation order unchanged, so
                // the sparse product is exact against this reference.
                let want: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
                prop_assert_eq!(y[i], want);
            }
        }
    }
}
