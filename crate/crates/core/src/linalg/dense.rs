use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// Row-major dense matrix. Used by the brute-force reference solver and by
/// small diagnostic computations; never on the production solve path.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn from_csr(a: &CsrMatrix) -> Self {
        let mut d = DenseMatrix::zeros(a.nrows(), a.ncols());
        for (i, j, v) in a.entries() {
            d.data[i * a.ncols() + j] = v;
        }
        d
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "dense matvec dimension mismatch");
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }
}

/// Gaussian elimination with partial pivoting. Reference route for checking
/// the sparse factorization; kept deliberately simple.
pub fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "dense_solve needs a square matrix");
    assert_eq!(n, b.len(), "dense_solve rhs length mismatch");
    assert!(n <= 2000, "dense_solve is for reference-sized systems");

    let mut m = a.clone();
    let mut x: Vec<f64> = b.to_vec();
    let scale = m.data.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let tiny = 1e-14 * scale.max(1.0);

    for k in 0..n {
        let mut piv = k;
        let mut best = m.get(k, k).abs();
        for i in (k + 1)..n {
            let v = m.get(i, k).abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best < tiny {
            return Err(Error::Singular { row: k });
        }
        if piv != k {
            for j in 0..n {
                let t = m.get(k, j);
                m.set(k, j, m.get(piv, j));
                m.set(piv, j, t);
            }
            x.swap(k, piv);
        }
        let d = m.get(k, k);
        for i in (k + 1)..n {
            let f = m.get(i, k) / d;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                let v = m.get(i, j) - f * m.get(k, j);
                m.set(i, j, v);
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in (k + 1)..n {
            s -= m.get(k, j) * x[j];
        }
        x[k] = s / m.get(k, k);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;

    #[test]
    fn solves_a_fixed_3x3_system() {
        let mut a = DenseMatrix::zeros(3, 3);
        // Rows chosen so pivoting is exercised (zero leading entry).
        let rows = [[0.0, 2.0, 1.0], [1.0, 1.0, 1.0], [2.0, 0.0, -1.0]];
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                a.set(i, j, *v);
            }
        }
        let b = [4.0, 3.0, -1.0];
        let x = dense_solve(&a, &b).unwrap();
        let r: Vec<f64> = a
            .mul_vec(&x)
            .iter()
            .zip(&b)
            .map(|(ax, bi)| ax - bi)
            .collect();
        assert!(norm2(&r) < 1e-13);
    }

    #[test]
    fn reports_singular_row() {
        let mut a = DenseMatrix::zeros(2, 2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 4.0);
        match dense_solve(&a, &[1.0, 2.0]) {
            Err(crate::Error::Singular { row }) => assert_eq!(row, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn random_systems_have_small_residuals() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for n in [5, 20, 50] {
            let mut a = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    a.set(i, j, rng.gen_range(-1.0..1.0));
                }
                // diagonal boost keeps the random matrix comfortably regular
                a.add_to(i, i, 3.0);
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = dense_solve(&a, &b).unwrap();
            let ax = a.mul_vec(&x);
            let r: Vec<f64> = ax.iter().zip(&b).map(|(u, v)| u - v).collect();
            assert!(norm2(&r) < 1e-12 * (1.0 + norm2(&b)));
        }
    }
}
