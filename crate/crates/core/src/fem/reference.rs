//! Shape functions on the reference square [-1, 1]^2.
//!
//! Node order: Q1 corners counter-clockwise from (-1, -1); Q2 adds edge
//! midpoints (bottom, right, top, left) and then the center; Q0 is one node
//! at the center. Edge-interior nodes of Q2 make every basis function of a
//! non-edge node vanish on the whole edge, which the interface assembly
//! relies on.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElemKind {
    /// Piecewise constant, one node per cell.
    Q0,
    /// Bilinear, four corner nodes.
    Q1,
    /// Biquadratic, nine nodes.
    Q2,
}

impl ElemKind {
    pub fn node_count(&self) -> usize {
        match self {
            ElemKind::Q0 => 1,
            ElemKind::Q1 => 4,
            ElemKind::Q2 => 9,
        }
    }

    /// Reference coordinates of the nodes, in local order.
    pub fn node_coords(&self) -> &'static [[f64; 2]] {
        match self {
            ElemKind::Q0 => &[[0.0, 0.0]],
            ElemKind::Q1 => &[[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
            ElemKind::Q2 => &[
                [-1.0, -1.0],
                [1.0, -1.0],
                [1.0, 1.0],
                [-1.0, 1.0],
                [0.0, -1.0],
                [1.0, 0.0],
                [0.0, 1.0],
                [-1.0, 0.0],
                [0.0, 0.0],
            ],
        }
    }
}

// 1D Lagrange basis on {-1, 0, 1}, indexed by the node position.
fn lag1(pos: f64, s: f64) -> f64 {
    if pos < -0.5 {
        0.5 * s * (s - 1.0)
    } else if pos > 0.5 {
        0.5 * s * (s + 1.0)
    } else {
        1.0 - s * s
    }
}

fn lag1_d(pos: f64, s: f64) -> f64 {
    if pos < -0.5 {
        s - 0.5
    } else if pos > 0.5 {
        s + 0.5
    } else {
        -2.0 * s
    }
}

/// Values of all shape functions at a reference point.
pub fn shape_values(kind: ElemKind, xi: f64, eta: f64) -> Vec<f64> {
    match kind {
        ElemKind::Q0 => vec![1.0],
        ElemKind::Q1 => vec![
            0.25 * (1.0 - xi) * (1.0 - eta),
            0.25 * (1.0 + xi) * (1.0 - eta),
            0.25 * (1.0 + xi) * (1.0 + eta),
            0.25 * (1.0 - xi) * (1.0 + eta),
        ],
        ElemKind::Q2 => kind
            .node_coords()
            .iter()
            .map(|n| lag1(n[0], xi) * lag1(n[1], eta))
            .collect(),
    }
}

/// Reference-coordinate gradients (d/dxi, d/deta) of all shape functions.
pub fn shape_gradients(kind: ElemKind, xi: f64, eta: f64) -> Vec<[f64; 2]> {
    match kind {
        ElemKind::Q0 => vec![[0.0, 0.0]],
        ElemKind::Q1 => vec![
            [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
            [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
            [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
            [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
        ],
        ElemKind::Q2 => kind
            .node_coords()
            .iter()
            .map(|n| {
                [
                    lag1_d(n[0], xi) * lag1(n[1], eta),
                    lag1(n[0], xi) * lag1_d(n[1], eta),
                ]
            })
            .collect(),
    }
}
