//! Independent reference assembly for small structured meshes. Every block
//! is built from closed-form integrals of 1D Lagrange polynomials on
//! axis-aligned rectangles, with its own coordinate-keyed dof numbering, so
//! it shares no evaluation path with the quadrature assembler. Intended for
//! meshes of a handful of cells; everything is dense.

use std::collections::HashMap;

use crate::linalg::DenseMatrix;
use crate::mesh::{Mesh, Point, Subdomain};

/// Integrals of the quadratic 1D basis {l0, l1, l2} on [-1, 1] with nodes
/// {-1, 0, 1}: values x values.
const M1: [[f64; 3]; 3] = [
    [4.0 / 15.0, 2.0 / 15.0, -1.0 / 15.0],
    [2.0 / 15.0, 16.0 / 15.0, 2.0 / 15.0],
    [-1.0 / 15.0, 2.0 / 15.0, 4.0 / 15.0],
];

/// Derivatives x derivatives.
const K1: [[f64; 3]; 3] = [
    [7.0 / 6.0, -4.0 / 3.0, 1.0 / 6.0],
    [-4.0 / 3.0, 8.0 / 3.0, -4.0 / 3.0],
    [1.0 / 6.0, -4.0 / 3.0, 7.0 / 6.0],
];

/// Values x derivatives: G[i][j] = integral of l_i l_j'.
const G1: [[f64; 3]; 3] = [
    [-0.5, 2.0 / 3.0, -1.0 / 6.0],
    [-2.0 / 3.0, 0.0, 2.0 / 3.0],
    [1.0 / 6.0, -2.0 / 3.0, 0.5],
];

/// Linear values x quadratic values.
const MC: [[f64; 3]; 2] = [
    [1.0 / 3.0, 2.0 / 3.0, 0.0],
    [0.0, 2.0 / 3.0, 1.0 / 3.0],
];

/// Linear values x quadratic derivatives.
const GC: [[f64; 3]; 2] = [
    [-5.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [-1.0 / 6.0, -2.0 / 3.0, 5.0 / 6.0],
];

/// Unweighted matrix blocks in the oracle's own numbering; the coordinate
/// lists define it. Weights and signs are applied by the caller when
/// predicting production matrices.
pub struct OracleBlocks {
    pub vel_coords: Vec<Point>,
    pub head_coords: Vec<Point>,
    pub pressure_coords: Vec<Point>,
    pub vel_mass: DenseMatrix,
    pub vel_stiff: DenseMatrix,
    pub head_mass: DenseMatrix,
    pub head_stiff: DenseMatrix,
    pub head_stiff_k: DenseMatrix,
    /// Interface integral of velocity basis pairs.
    pub trace_vv: DenseMatrix,
    /// Interface integral of velocity basis times head basis.
    pub trace_vh: DenseMatrix,
    /// Pressure value times velocity x derivative, unsigned.
    pub div_x: DenseMatrix,
    pub div_y: DenseMatrix,
    pub mean: Vec<f64>,
}

fn coord_key(p: Point) -> (i64, i64) {
    ((p.x * 1e9).round() as i64, (p.y * 1e9).round() as i64)
}

struct Numbering {
    ids: HashMap<(i64, i64), usize>,
    coords: Vec<Point>,
}

impl Numbering {
    fn new() -> Self {
        Numbering {
            ids: HashMap::new(),
            coords: Vec::new(),
        }
    }

    fn get(&mut self, p: Point) -> usize {
        let next = self.coords.len();
        match self.ids.entry(coord_key(p)) {
            std::collections::hash_map::Entry::Occupied(o) => *o.get(),
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(next);
                self.coords.push(p);
                next
            }
        }
    }
}

/// Lower-left corner and side lengths of an axis-aligned cell.
fn cell_box(mesh: &Mesh, c: usize) -> (f64, f64, f64, f64) {
    let co = mesh.cell_corners(c);
    let tol = 1e-12;
    assert!(
        (co[0].y - co[1].y).abs() < tol && (co[0].x - co[3].x).abs() < tol,
        "oracle handles axis-aligned cells only"
    );
    (co[0].x, co[0].y, co[1].x - co[0].x, co[3].y - co[0].y)
}

fn q2_node(x0: f64, y0: f64, hx: f64, hy: f64, ix: usize, iy: usize) -> Point {
    Point {
        x: x0 + 0.5 * hx * ix as f64,
        y: y0 + 0.5 * hy * iy as f64,
    }
}

pub fn assemble_blocks(mesh: &Mesh) -> OracleBlocks {
    let mut vel = Numbering::new();
    let mut head = Numbering::new();
    let mut pres = Numbering::new();

    // First pass fixes the numbering so the matrices can be sized.
    for c in 0..mesh.cells.len() {
        let (x0, y0, hx, hy) = cell_box(mesh, c);
        match mesh.cells[c].subdomain {
            Subdomain::Fluid => {
                for iy in 0..3 {
                    for ix in 0..3 {
                        vel.get(q2_node(x0, y0, hx, hy, ix, iy));
                    }
                }
                for qy in 0..2 {
                    for qx in 0..2 {
                        pres.get(Point {
                            x: x0 + hx * qx as f64,
                            y: y0 + hy * qy as f64,
                        });
                    }
                }
            }
            Subdomain::Porous => {
                for iy in 0..3 {
                    for ix in 0..3 {
                        head.get(q2_node(x0, y0, hx, hy, ix, iy));
                    }
                }
            }
        }
    }

    let nv = vel.coords.len();
    let nh = head.coords.len();
    let np = pres.coords.len();
    let mut blocks = OracleBlocks {
        vel_coords: Vec::new(),
        head_coords: Vec::new(),
        pressure_coords: Vec::new(),
        vel_mass: DenseMatrix::zeros(nv, nv),
        vel_stiff: DenseMatrix::zeros(nv, nv),
        head_mass: DenseMatrix::zeros(nh, nh),
        head_stiff: DenseMatrix::zeros(nh, nh),
        head_stiff_k: DenseMatrix::zeros(nh, nh),
        trace_vv: DenseMatrix::zeros(nv, nv),
        trace_vh: DenseMatrix::zeros(nv, nh),
        div_x: DenseMatrix::zeros(np, nv),
        div_y: DenseMatrix::zeros(np, nv),
        mean: vec![0.0; np],
    };

    let iy_interface = mesh.geometry.interface_y;
    let tol = 1e-9;

    for c in 0..mesh.cells.len() {
        let (x0, y0, hx, hy) = cell_box(mesh, c);
        match mesh.cells[c].subdomain {
            Subdomain::Fluid => {
                for iy in 0..3 {
                    for ix in 0..3 {
                        let i = vel.get(q2_node(x0, y0, hx, hy, ix, iy));
                        for jy in 0..3 {
                            for jx in 0..3 {
                                let j = vel.get(q2_node(x0, y0, hx, hy, jx, jy));
                                blocks.vel_mass.add_to(
                                    i,
                                    j,
                                    0.25 * hx * hy * M1[ix][jx] * M1[iy][jy],
                                );
                                blocks.vel_stiff.add_to(
                                    i,
                                    j,
                                    (hy / hx) * K1[ix][jx] * M1[iy][jy]
                                        + (hx / hy) * M1[ix][jx] * K1[iy][jy],
                                );
                            }
                        }
                        for qy in 0..2 {
                            for qx in 0..2 {
                                let q = pres.get(Point {
                                    x: x0 + hx * qx as f64,
                                    y: y0 + hy * qy as f64,
                                });
                                blocks.div_x.add_to(
                                    q,
                                    i,
                                    0.5 * hy * GC[qx][ix] * MC[qy][iy],
                                );
                                blocks.div_y.add_to(
                                    q,
                                    i,
                                    0.5 * hx * MC[qx][ix] * GC[qy][iy],
                                );
                            }
                        }
                    }
                }
                for qy in 0..2 {
                    for qx in 0..2 {
                        let q = pres.get(Point {
                            x: x0 + hx * qx as f64,
                            y: y0 + hy * qy as f64,
                        });
                        blocks.mean[q] += 0.25 * hx * hy;
                    }
                }
                // Interface trace terms live on fluid cells whose bottom
                // side sits on the interface line.
                if (y0 - iy_interface).abs() < tol {
                    for ix in 0..3 {
                        let i = vel.get(q2_node(x0, y0, hx, hy, ix, 0));
                        for jx in 0..3 {
                            let j = vel.get(q2_node(x0, y0, hx, hy, jx, 0));
                            blocks.trace_vv.add_to(i, j, 0.5 * hx * M1[ix][jx]);
                        }
                    }
                    // Find the porous cell sharing this span.
                    for cp in 0..mesh.cells.len() {
                        if mesh.cells[cp].subdomain != Subdomain::Porous {
                            continue;
                        }
                        let (px0, py0, phx, phy) = cell_box(mesh, cp);
                        if (py0 + phy - iy_interface).abs() > tol
                            || (px0 - x0).abs() > tol
                            || (phx - hx).abs() > tol
                        {
                            continue;
                        }
                        for ix in 0..3 {
                            let i = vel.get(q2_node(x0, y0, hx, hy, ix, 0));
                            for jx in 0..3 {
                                let j = head.get(q2_node(px0, py0, phx, phy, jx, 2));
                                blocks.trace_vh.add_to(i, j, 0.5 * hx * M1[ix][jx]);
                            }
                        }
                    }
                }
            }
            Subdomain::Porous => {
                for iy in 0..3 {
                    for ix in 0..3 {
                        let i = head.get(q2_node(x0, y0, hx, hy, ix, iy));
                        for jy in 0..3 {
                            for jx in 0..3 {
                                let j = head.get(q2_node(x0, y0, hx, hy, jx, jy));
                                blocks.head_mass.add_to(
                                    i,
                                    j,
                                    0.25 * hx * hy * M1[ix][jx] * M1[iy][jy],
                                );
                                blocks.head_stiff.add_to(
                                    i,
                                    j,
                                    (hy / hx) * K1[ix][jx] * M1[iy][jy]
                                        + (hx / hy) * M1[ix][jx] * K1[iy][jy],
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    blocks.vel_coords = vel.coords;
    blocks.head_coords = head.coords;
    blocks.pressure_coords = pres.coords;
    blocks
}

/// Conductivity-weighted head stiffness: combines the unweighted pieces with
/// the tensor entries. Kept separate from `assemble_blocks` because the
/// anisotropic cross term needs its own closed forms.
pub fn head_stiffness_weighted(mesh: &Mesh, km: [[f64; 2]; 2]) -> (Vec<Point>, DenseMatrix) {
    let mut head = Numbering::new();
    for c in 0..mesh.cells.len() {
        if mesh.cells[c].subdomain != Subdomain::Porous {
            continue;
        }
        let (x0, y0, hx, hy) = cell_box(mesh, c);
        for iy in 0..3 {
            for ix in 0..3 {
                head.get(q2_node(x0, y0, hx, hy, ix, iy));
            }
        }
    }
    let nh = head.coords.len();
    let mut out = DenseMatrix::zeros(nh, nh);
    for c in 0..mesh.cells.len() {
        if mesh.cells[c].subdomain != Subdomain::Porous {
            continue;
        }
        let (x0, y0, hx, hy) = cell_box(mesh, c);
        for iy in 0..3 {
            for ix in 0..3 {
                let i = head.get(q2_node(x0, y0, hx, hy, ix, iy));
                for jy in 0..3 {
                    for jx in 0..3 {
                        let j = head.get(q2_node(x0, y0, hx, hy, jx, jy));
                        // dx dx and dy dy terms scale like the isotropic
                        // stiffness; the mixed term's Jacobian factors
                        // cancel exactly.
                        let xx = (hy / hx) * K1[ix][jx] * M1[iy][jy];
                        let yy = (hx / hy) * M1[ix][jx] * K1[iy][jy];
                        let xy = G1[jx][ix] * G1[iy][jy] + G1[ix][jx] * G1[jy][iy];
                        out.add_to(i, j, km[0][0] * xx + km[0][1] * xy + km[1][1] * yy);
                    }
                }
            }
        }
    }
    (head.coords, out)
}

/// Index of the oracle dof at each production dof's coordinate.
pub fn match_dofs(oracle: &[Point], production: &[Point]) -> Vec<usize> {
    production
        .iter()
        .map(|p| {
            oracle
                .iter()
                .position(|q| (p.x - q.x).abs() + (p.y - q.y).abs() < 1e-9)
                .unwrap_or_else(|| panic!("no oracle dof at ({}, {})", p.x, p.y))
        })
        .collect()
}
