use crate::error::{Error, Result};
use crate::linalg::{norm2, rcm_order, CsrMatrix};

const NOT_PIVOTAL: usize = usize::MAX;

/// Sparse LU factorization with partial pivoting, computed on a reverse
/// Cuthill-McKee reordering of the matrix. Left-looking: each column is a
/// sparse triangular solve against the L built so far, with the pattern
/// found by depth-first search.
///
/// Factor once, solve many times: the time-stepping loop reuses one
/// factorization for every step.
pub struct SparseLu {
    n: usize,
    /// order[new] = old, applied symmetrically to rows and columns.
    order: Vec<usize>,
    /// Row pivoting: permuted-matrix row -> pivot position.
    pinv: Vec<usize>,
    // L is unit lower triangular; the implicit diagonal is not stored.
    l_ptr: Vec<usize>,
    l_rows: Vec<usize>,
    l_vals: Vec<f64>,
    // U columns store the diagonal entry last.
    u_ptr: Vec<usize>,
    u_rows: Vec<usize>,
    u_vals: Vec<f64>,
}

impl SparseLu {
    pub fn factorize(a: &CsrMatrix) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols(), "factorize needs a square matrix");
        let n = a.nrows();
        let order = rcm_order(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }

        // Permuted matrix in column-major form, rows sorted within columns.
        let mut bcols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in a.entries() {
            bcols[inv[j]].push((inv[i], v));
        }
        for col in &mut bcols {
            col.sort_unstable_by_key(|e| e.0);
        }

        let tiny = 1e-14 * a.max_abs().max(f64::MIN_POSITIVE);

        let mut pinv = vec![NOT_PIVOTAL; n];
        // L columns during factorization hold (permuted-row, multiplier).
        let mut l_cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        let mut u_ptr = vec![0usize];
        let mut u_rows: Vec<usize> = Vec::new();
        let mut u_vals: Vec<f64> = Vec::new();

        let mut x = vec![0.0f64; n];
        let mut mark = vec![false; n];
        let mut topo: Vec<usize> = Vec::with_capacity(64);
        let mut dfs: Vec<(usize, usize)> = Vec::with_capacity(64);

        for k in 0..n {
            // Pattern of L^{-1} B[:, k] by DFS through the columns of L.
            topo.clear();
            for &(r, _) in &bcols[k] {
                if mark[r] {
                    continue;
                }
                mark[r] = true;
                dfs.push((r, 0));
                while let Some(top) = dfs.len().checked_sub(1) {
                    let (v, pos) = dfs[top];
                    let col = pinv[v];
                    if col != NOT_PIVOTAL && pos < l_cols[col].len() {
                        dfs[top].1 += 1;
                        let child = l_cols[col][pos].0;
                        if !mark[child] {
                            mark[child] = true;
                            dfs.push((child, 0));
                        }
                    } else {
                        dfs.pop();
                        topo.push(v);
                    }
                }
            }

            for &(r, v) in &bcols[k] {
                x[r] = v;
            }
            // Reverse post-order is topological: a pivot's updates land
            // before the target row is consumed.
            for &v in topo.iter().rev() {
                let col = pinv[v];
                if col == NOT_PIVOTAL {
                    continue;
                }
                let xv = x[v];
                if xv != 0.0 {
                    for &(r, lv) in &l_cols[col] {
                        x[r] -= lv * xv;
                    }
                }
            }

            let mut piv_row = NOT_PIVOTAL;
            let mut piv_abs = 0.0f64;
            for &v in &topo {
                if pinv[v] == NOT_PIVOTAL && x[v].abs() > piv_abs {
                    piv_abs = x[v].abs();
                    piv_row = v;
                }
            }
            if piv_row == NOT_PIVOTAL || piv_abs <= tiny {
                let row = if piv_row == NOT_PIVOTAL { order[k] } else { order[piv_row] };
                return Err(Error::Singular { row });
            }
            let pivot = x[piv_row];

            for &v in &topo {
                if pinv[v] != NOT_PIVOTAL {
                    u_rows.push(pinv[v]);
                    u_vals.push(x[v]);
                }
            }
            u_rows.push(k);
            u_vals.push(pivot);
            u_ptr.push(u_rows.len());

            let mut lcol = Vec::new();
            for &v in &topo {
                if pinv[v] == NOT_PIVOTAL && v != piv_row {
                    let lv = x[v] / pivot;
                    if lv != 0.0 {
                        lcol.push((v, lv));
                    }
                }
            }
            l_cols.push(lcol);
            pinv[piv_row] = k;

            for &v in &topo {
                x[v] = 0.0;
                mark[v] = false;
            }
        }

        // Remap L rows into pivot order and flatten.
        let mut l_ptr = vec![0usize; n + 1];
        let mut l_rows = Vec::new();
        let mut l_vals = Vec::new();
        for (c, col) in l_cols.iter().enumerate() {
            for &(v, lv) in col {
                l_rows.push(pinv[v]);
                l_vals.push(lv);
            }
            l_ptr[c + 1] = l_rows.len();
        }

        Ok(SparseLu {
            n,
            order,
            pinv,
            l_ptr,
            l_rows,
            l_vals,
            u_ptr,
            u_rows,
            u_vals,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries in the factors, a fill measure for diagnostics.
    pub fn factor_nnz(&self) -> usize {
        self.l_vals.len() + self.u_vals.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "solve rhs length mismatch");
        let n = self.n;
        // w = P * (b restricted to the fill-reducing order)
        let mut w = vec![0.0; n];
        for v in 0..n {
            w[self.pinv[v]] = b[self.order[v]];
        }
        // L w = w, unit lower triangular
        for c in 0..n {
            let wc = w[c];
            if wc != 0.0 {
                for p in self.l_ptr[c]..self.l_ptr[c + 1] {
                    w[self.l_rows[p]] -= self.l_vals[p] * wc;
                }
            }
        }
        // U w = w, diagonal stored last in each column
        for c in (0..n).rev() {
            let last = self.u_ptr[c + 1] - 1;
            debug_assert_eq!(self.u_rows[last], c);
            let zc = w[c] / self.u_vals[last];
            w[c] = zc;
            if zc != 0.0 {
                for p in self.u_ptr[c]..last {
                    w[self.u_rows[p]] -= self.u_vals[p] * zc;
                }
            }
        }
        let mut xout = vec![0.0; n];
        for j in 0..n {
            xout[self.order[j]] = w[j];
        }
        xout
    }

    /// Solve and verify the residual against the original matrix. The
    /// time-stepping loop uses this so a quietly bad factorization cannot
    /// produce plausible-looking trajectories.
    pub fn solve_checked(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let x = self.solve(b);
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = ax.iter().zip(b).map(|(u, v)| u - v).collect();
        let bound = 1e-10 * (1.0 + norm2(b));
        let rn = norm2(&r);
        if rn > bound {
            return Err(Error::Numerical(format!(
                "linear solve residual {rn:.3e} exceeds {bound:.3e}"
            )));
        }
        Ok(x)
    }
}
