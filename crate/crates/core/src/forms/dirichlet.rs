//! Essential boundary conditions by symmetric elimination: constrained rows
//! and columns are replaced by identity, and the raw matrix acting on the
//! boundary extension corrects the right hand side of every free row,
//! including the pressure constraint rows coupled to the boundary trace.

use super::{ProblemData, Spaces};
use crate::error::Result;
use crate::linalg::CsrMatrix;

/// Prescribed trace at every constrained W dof, zero elsewhere; full system
/// length so it can multiply the raw matrix directly.
pub fn boundary_values(spaces: &Spaces, problem: &dyn ProblemData, t: f64) -> Vec<f64> {
    let l = spaces.layout;
    let mut out = vec![0.0; l.n_total()];
    for &d in &spaces.velocity.dirichlet {
        let v = problem.velocity(spaces.velocity.coords[d], t);
        out[l.vx(d)] = v[0];
        out[l.vy(d)] = v[1];
    }
    for &d in &spaces.head.dirichlet {
        out[l.head(d)] = problem.head(spaces.head.coords[d], t);
    }
    out
}

/// Replaces constrained rows and columns by the identity. The matrix must be
/// square and the indices in range.
pub fn constrain_matrix(a: &CsrMatrix, constrained: &[usize]) -> Result<CsrMatrix> {
    assert_eq!(a.nrows(), a.ncols());
    let mut mask = vec![false; a.nrows()];
    for &d in constrained {
        mask[d] = true;
    }
    let mut trips = Vec::new();
    for (i, j, v) in a.entries() {
        if !mask[i] && !mask[j] {
            trips.push((i, j, v));
        }
    }
    for &d in constrained {
        trips.push((d, d, 1.0));
    }
    CsrMatrix::from_triplets(a.nrows(), a.ncols(), &trips)
}

/// Right hand side of the constrained system: free rows lose the raw-matrix
/// action on the boundary extension, constrained rows carry the prescribed
/// value. `values` must be zero at free positions.
pub fn constrained_rhs(
    a_raw: &CsrMatrix,
    rhs: &[f64],
    constrained: &[usize],
    values: &[f64],
) -> Vec<f64> {
    assert_eq!(rhs.len(), a_raw.nrows());
    assert_eq!(values.len(), a_raw.ncols());
    let correction = a_raw.mul_vec(values);
    let mut out: Vec<f64> = rhs
        .iter()
        .zip(&correction)
        .map(|(b, c)| b - c)
        .collect();
    for &d in constrained {
        out[d] = values[d];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dense_solve, DenseMatrix};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn csr(n: usize, entries: &[(usize, usize, f64)]) -> CsrMatrix {
        CsrMatrix::from_triplets(n, n, entries).unwrap()
    }

    #[test]
    fn elimination_zeroes_rows_and_columns() {
        let a = csr(
            3,
            &[
                (0, 0, 2.0),
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
                (1, 2, 1.0),
                (2, 1, 1.0),
                (2, 2, 4.0),
            ],
        );
        let c = constrain_matrix(&a, &[1]).unwrap();
        assert_eq!(c.get(0, 0), 2.0);
        assert_eq!(c.get(0, 1), 0.0);
        assert_eq!(c.get(1, 0), 0.0);
        assert_eq!(c.get(1, 1), 1.0);
        assert_eq!(c.get(1, 2), 0.0);
        assert_eq!(c.get(2, 1), 0.0);
        assert_eq!(c.get(2, 2), 4.0);
        assert_eq!(c.max_asymmetry(), 0.0);
    }

    #[test]
    fn rhs_correction_moves_boundary_data_to_free_rows() {
        let a = csr(
            3,
            &[
                (0, 0, 2.0),
                (0, 1, 1.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
                (1, 2, 1.0),
                (2, 1, 1.0),
                (2, 2, 4.0),
            ],
        );
        let mut values = vec![0.0; 3];
        values[1] = 5.0;
        let b = constrained_rhs(&a, &[1.0, 2.0, 3.0], &[1], &values);
        assert_eq!(b, vec![1.0 - 5.0, 5.0, 3.0 - 5.0]);
    }

    #[test]
    fn constrained_solve_matches_reduced_system() {
        let n = 6;
        let mut rng = StdRng::seed_from_u64(11);
        let mut dense = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = rng.gen_range(-1.0..1.0);
                dense.add_to(i, j, v);
                dense.add_to(j, i, v);
            }
            dense.add_to(i, i, 2.0 * n as f64);
        }
        let mut trips = Vec::new();
        for i in 0..n {
            for j in 0..n {
                trips.push((i, j, dense.get(i, j)));
            }
        }
        let a = csr(n, &trips);
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let constrained = [0usize, 3];
        let mut values = vec![0.0; n];
        values[0] = 2.0;
        values[3] = -1.0;

        let ac = constrain_matrix(&a, &constrained).unwrap();
        let bc = constrained_rhs(&a, &rhs, &constrained, &values);
        let x = dense_solve(&DenseMatrix::from_csr(&ac), &bc).unwrap();

        assert!((x[0] - 2.0).abs() < 1e-14);
        assert!((x[3] + 1.0).abs() < 1e-14);
        // Free rows of the raw system hold with the prescribed values in
        // place.
        let residual = a.mul_vec(&x);
        for i in 0..n {
            if constrained.contains(&i) {
                continue;
            }
            assert!((residual[i] - rhs[i]).abs() < 1e-12, "row {i}");
        }
    }
}
