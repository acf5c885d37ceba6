//! Gauss-Legendre rules on [-1, 1] and tensor products on the square.
//! Nodes are Newton-refined Legendre roots, so any point count works; the
//! assembly default is 3 points per axis, error norms use one more.

#[derive(Debug, Clone)]
pub struct QuadRule1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct QuadRule2d {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Legendre P_n and its derivative at x, by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gauss_1d(n: usize) -> QuadRule1d {
    assert!(n >= 1, "quadrature needs at least one point");
    if n == 1 {
        return QuadRule1d {
            points: vec![0.0],
            weights: vec![2.0],
        };
    }
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Solve for the lower half; mirror for exact symmetry.
    for i in 0..n.div_ceil(2) {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        points[i] = x;
        weights[i] = w;
        points[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    QuadRule1d { points, weights }
}

pub fn gauss_2d(n_per_axis: usize) -> QuadRule2d {
    let line = gauss_1d(n_per_axis);
    let mut points = Vec::with_capacity(n_per_axis * n_per_axis);
    let mut weights = Vec::with_capacity(n_per_axis * n_per_axis);
    for (j, &eta) in line.points.iter().enumerate() {
        for (i, &xi) in line.points.iter().enumerate() {
            points.push([xi, eta]);
            weights.push(line.weights[i] * line.weights[j]);
        }
    }
    QuadRule2d { points, weights }
}
