use crate::fem::reference::{shape_gradients, shape_values, ElemKind};
use crate::mesh::{Mesh, Point};

/// Isoparametric bilinear map from the reference square to one cell.
#[derive(Debug, Clone, Copy)]
pub struct CellMap {
    corners: [Point; 4],
}

impl CellMap {
    pub fn from_cell(mesh: &Mesh, cell: usize) -> Self {
        CellMap {
            corners: mesh.cell_corners(cell),
        }
    }

    pub fn from_corners(corners: [Point; 4]) -> Self {
        CellMap { corners }
    }

    pub fn to_physical(&self, xi: f64, eta: f64) -> Point {
        let n = shape_values(ElemKind::Q1, xi, eta);
        let mut x = 0.0;
        let mut y = 0.0;
        for (ni, c) in n.iter().zip(&self.corners) {
            x += ni * c.x;
            y += ni * c.y;
        }
        Point { x, y }
    }

    /// Jacobian [[dx/dxi, dx/deta], [dy/dxi, dy/deta]].
    pub fn jacobian(&self, xi: f64, eta: f64) -> [[f64; 2]; 2] {
        let g = shape_gradients(ElemKind::Q1, xi, eta);
        let mut j = [[0.0; 2]; 2];
        for (gi, c) in g.iter().zip(&self.corners) {
            j[0][0] += gi[0] * c.x;
            j[0][1] += gi[1] * c.x;
            j[1][0] += gi[0] * c.y;
            j[1][1] += gi[1] * c.y;
        }
        j
    }

    pub fn det_jacobian(&self, xi: f64, eta: f64) -> f64 {
        let j = self.jacobian(xi, eta);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }

    /// Push reference gradients to physical ones: grad_x N = J^{-T} grad_ref N.
    pub fn physical_gradients(&self, xi: f64, eta: f64, ref_grads: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let j = self.jacobian(xi, eta);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        assert!(det > 0.0, "degenerate or inverted cell, det = {det}");
        let inv_t = [
            [j[1][1] / det, -j[1][0] / det],
            [-j[0][1] / det, j[0][0] / det],
        ];
        ref_grads
            .iter()
            .map(|g| {
                [
                    inv_t[0][0] * g[0] + inv_t[0][1] * g[1],
                    inv_t[1][0] * g[0] + inv_t[1][1] * g[1],
                ]
            })
            .collect()
    }

    /// Invert the map by Newton iteration. Exact in one step for affine
    /// cells; a few steps cover general bilinear ones.
    pub fn to_reference(&self, p: Point) -> [f64; 2] {
        let mut xi = 0.0;
        let mut eta = 0.0;
        for _ in 0..20 {
            let q = self.to_physical(xi, eta);
            let rx = q.x - p.x;
            let ry = q.y - p.y;
            if rx.abs() + ry.abs() < 1e-14 {
                break;
            }
            let j = self.jacobian(xi, eta);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            xi -= (j[1][1] * rx - j[0][1] * ry) / det;
            eta -= (-j[1][0] * rx + j[0][0] * ry) / det;
        }
        [xi, eta]
    }
}
