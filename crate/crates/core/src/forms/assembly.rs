//! Quadrature assembly of the system matrices and load vectors.

use crate::error::Result;
use crate::fem::{gauss_1d, gauss_2d, shape_gradients, shape_values, CellMap, DofMap, ElemKind};
use crate::linalg::CsrMatrix;
use crate::mesh::{Mesh, Point, Subdomain};

use super::{
    HydraulicTensor, PhysicalParams, ProblemData, Spaces, SystemOperators,
};

/// Gauss point counts per direction for cell and edge integrals.
#[derive(Debug, Clone, Copy)]
pub struct QuadOrders {
    pub cell: usize,
    pub edge: usize,
}

impl Default for QuadOrders {
    fn default() -> Self {
        QuadOrders { cell: 3, edge: 3 }
    }
}

/// Reference-element data at every cell quadrature point.
struct CellTables {
    pts: Vec<(f64, f64, f64)>,
    vals: Vec<Vec<f64>>,
    grads: Vec<Vec<[f64; 2]>>,
}

fn cell_tables(kind: ElemKind, order: usize) -> CellTables {
    let rule = gauss_2d(order);
    let mut pts = Vec::with_capacity(rule.points.len());
    let mut vals = Vec::with_capacity(rule.points.len());
    let mut grads = Vec::with_capacity(rule.points.len());
    for (&[xi, eta], &w) in rule.points.iter().zip(&rule.weights) {
        pts.push((xi, eta, w));
        vals.push(shape_values(kind, xi, eta));
        grads.push(shape_gradients(kind, xi, eta));
    }
    CellTables { pts, vals, grads }
}

/// One physical quadrature point on an interface edge together with its
/// reference coordinates in the adjacent fluid and porous cells.
struct InterfaceQp {
    point: Point,
    weight: f64,
    fluid_cell: usize,
    porous_cell: usize,
    fluid_ref: [f64; 2],
    porous_ref: [f64; 2],
}

fn interface_qps(mesh: &Mesh, order: usize) -> Vec<InterfaceQp> {
    let rule = gauss_1d(order);
    let mut out = Vec::new();
    for e in mesh.interface_edges() {
        let (cf, cp) = mesh.interface_cell_pair(e);
        let (a, b) = mesh.edges[e].vertices;
        let (p0, p1) = {
            let pa = mesh.vertices[a];
            let pb = mesh.vertices[b];
            if pa.x <= pb.x {
                (pa, pb)
            } else {
                (pb, pa)
            }
        };
        let mid = Point {
            x: 0.5 * (p0.x + p1.x),
            y: 0.5 * (p0.y + p1.y),
        };
        let half = Point {
            x: 0.5 * (p1.x - p0.x),
            y: 0.5 * (p1.y - p0.y),
        };
        let jac = (half.x * half.x + half.y * half.y).sqrt();
        let fluid_map = CellMap::from_cell(mesh, cf);
        let porous_map = CellMap::from_cell(mesh, cp);
        for (&s, &w) in rule.points.iter().zip(&rule.weights) {
            let point = Point {
                x: mid.x + s * half.x,
                y: mid.y + s * half.y,
            };
            out.push(InterfaceQp {
                point,
                weight: w * jac,
                fluid_cell: cf,
                porous_cell: cp,
                fluid_ref: fluid_map.to_reference(point),
                porous_ref: porous_map.to_reference(point),
            });
        }
    }
    out
}

/// Triplets of the scalar mass matrix in the dofmap's own numbering.
fn scalar_mass(mesh: &Mesh, dm: &DofMap, order: usize) -> Vec<(usize, usize, f64)> {
    let tables = cell_tables(dm.kind, order);
    let mut trips = Vec::new();
    for (c, dofs) in dm.cell_dofs.iter().enumerate() {
        if dofs.is_empty() {
            continue;
        }
        let map = CellMap::from_cell(mesh, c);
        for (q, &(xi, eta, w)) in tables.pts.iter().enumerate() {
            let wd = w * map.det_jacobian(xi, eta);
            let vals = &tables.vals[q];
            for (i, &di) in dofs.iter().enumerate() {
                for (j, &dj) in dofs.iter().enumerate() {
                    // Grouped product keeps the sum bitwise symmetric.
                    trips.push((di, dj, wd * (vals[i] * vals[j])));
                }
            }
        }
    }
    trips
}

/// Triplets of grad . K grad with an optional constant tensor; identity
/// when absent.
fn scalar_stiffness(
    mesh: &Mesh,
    dm: &DofMap,
    k: Option<[[f64; 2]; 2]>,
    order: usize,
) -> Vec<(usize, usize, f64)> {
    let tables = cell_tables(dm.kind, order);
    let mut trips = Vec::new();
    for (c, dofs) in dm.cell_dofs.iter().enumerate() {
        if dofs.is_empty() {
            continue;
        }
        let map = CellMap::from_cell(mesh, c);
        for (q, &(xi, eta, w)) in tables.pts.iter().enumerate() {
            let wd = w * map.det_jacobian(xi, eta);
            let g = map.physical_gradients(xi, eta, &tables.grads[q]);
            for (i, &di) in dofs.iter().enumerate() {
                for (j, &dj) in dofs.iter().enumerate() {
                    let v = match k {
                        None => g[i][0] * g[j][0] + g[i][1] * g[j][1],
                        Some(k) => {
                            let kg = [
                                k[0][0] * g[j][0] + k[0][1] * g[j][1],
                                k[1][0] * g[j][0] + k[1][1] * g[j][1],
                            ];
                            g[i][0] * kg[0] + g[i][1] * kg[1]
                        }
                    };
                    trips.push((di, dj, wd * v));
                }
            }
        }
    }
    trips
}

pub fn assemble_operators(
    mesh: &Mesh,
    spaces: &Spaces,
    params: &PhysicalParams,
    k: &HydraulicTensor,
    quad: &QuadOrders,
) -> Result<SystemOperators> {
    params.validate()?;
    k.validate()?;
    let l = spaces.layout;
    let nw = l.n_w();
    let eta = params.eta;
    let rho_g = params.rho_g();
    let n_f = mesh.geometry.interface_normal_fluid();
    let tau = mesh.geometry.interface_tangent();

    let vel_mass = scalar_mass(mesh, &spaces.velocity, quad.cell);
    let head_mass = scalar_mass(mesh, &spaces.head, quad.cell);
    let vel_stiff = scalar_stiffness(mesh, &spaces.velocity, None, quad.cell);
    let head_stiff_k = scalar_stiffness(mesh, &spaces.head, Some(k.matrix()), quad.cell);
    let head_stiff = scalar_stiffness(mesh, &spaces.head, None, quad.cell);

    let mut mass = Vec::new();
    for &(i, j, v) in &vel_mass {
        mass.push((l.vx(i), l.vx(j), eta * v));
        mass.push((l.vy(i), l.vy(j), eta * v));
    }
    for &(i, j, v) in &head_mass {
        mass.push((l.head(i), l.head(j), rho_g * params.s0 * v));
    }

    let mut b_mat = Vec::new();
    let mut grad_gram = Vec::new();
    let mut vel_seminorm = Vec::new();
    for &(i, j, v) in &vel_stiff {
        for comp in 0..2 {
            b_mat.push((l.velocity(comp, i), l.velocity(comp, j), eta * params.nu * v));
            grad_gram.push((l.velocity(comp, i), l.velocity(comp, j), eta * params.nu * v));
            vel_seminorm.push((comp * l.n_vcomp + i, comp * l.n_vcomp + j, v));
        }
    }
    for &(i, j, v) in &head_stiff_k {
        b_mat.push((l.head(i), l.head(j), rho_g * v));
    }
    for &(i, j, v) in &head_stiff {
        grad_gram.push((l.head(i), l.head(j), rho_g * k.k_max * v));
    }

    // Tangential slip term and the skew normal-flux coupling live on the
    // interface; all cell basis functions are evaluated on the trace, the
    // ones not supported there vanish identically.
    let slip = eta * k.slip_weight(params.alpha, tau);
    let mut c_i = Vec::new();
    for qp in interface_qps(mesh, quad.edge) {
        let vdofs = &spaces.velocity.cell_dofs[qp.fluid_cell];
        let hdofs = &spaces.head.cell_dofs[qp.porous_cell];
        let [fx, fe] = qp.fluid_ref;
        let [px, pe] = qp.porous_ref;
        let vvals = shape_values(spaces.velocity.kind, fx, fe);
        let hvals = shape_values(spaces.head.kind, px, pe);
        for (i, &di) in vdofs.iter().enumerate() {
            if vvals[i] == 0.0 {
                continue;
            }
            for (j, &dj) in vdofs.iter().enumerate() {
                if vvals[j] == 0.0 {
                    continue;
                }
                for a in 0..2 {
                    for b in 0..2 {
                        let tt = tau[a] * tau[b];
                        if tt == 0.0 {
                            continue;
                        }
                        b_mat.push((
                            l.velocity(a, di),
                            l.velocity(b, dj),
                            qp.weight * slip * tt * (vvals[i] * vvals[j]),
                        ));
                    }
                }
            }
            for (j, &dj) in hdofs.iter().enumerate() {
                if hvals[j] == 0.0 {
                    continue;
                }
                for a in 0..2 {
                    if n_f[a] == 0.0 {
                        continue;
                    }
                    let t = qp.weight * eta * rho_g * vvals[i] * n_f[a] * hvals[j];
                    c_i.push((l.velocity(a, di), l.head(dj), t));
                    c_i.push((l.head(dj), l.velocity(a, di), -t));
                }
            }
        }
    }

    // Pressure rows: the divergence coupling and the mean constraint.
    let vel_tables = cell_tables(spaces.velocity.kind, quad.cell);
    let np = spaces.pressure.n_dofs;
    let mut bdiv = Vec::new();
    let mut mean_vec = vec![0.0; np];
    let mut pressure_mass = Vec::new();
    for c in mesh.cells_of(Subdomain::Fluid) {
        let vdofs = &spaces.velocity.cell_dofs[c];
        let map = CellMap::from_cell(mesh, c);
        for (q, &(xi, eta_r, w)) in vel_tables.pts.iter().enumerate() {
            let wd = w * map.det_jacobian(xi, eta_r);
            let g = map.physical_gradients(xi, eta_r, &vel_tables.grads[q]);
            let (pids, pvals) = spaces.pressure.cell_basis(c, xi, eta_r);
            for (pi, &pd) in pids.iter().enumerate() {
                mean_vec[pd] += wd * pvals[pi];
                for (pj, &pe) in pids.iter().enumerate() {
                    pressure_mass.push((pd, pe, wd * (pvals[pi] * pvals[pj])));
                }
                for (i, &di) in vdofs.iter().enumerate() {
                    for a in 0..2 {
                        bdiv.push((pd, l.velocity(a, di), -eta * wd * pvals[pi] * g[i][a]));
                    }
                }
            }
        }
    }
    Ok(SystemOperators {
        layout: l,
        mass: CsrMatrix::from_triplets(nw, nw, &mass)?,
        b_mat: CsrMatrix::from_triplets(nw, nw, &b_mat)?,
        c_i: CsrMatrix::from_triplets(nw, nw, &c_i)?,
        bdiv: CsrMatrix::from_triplets(np, nw, &bdiv)?,
        mean_vec,
        grad_gram: CsrMatrix::from_triplets(nw, nw, &grad_gram)?,
        vel_seminorm: CsrMatrix::from_triplets(2 * l.n_vcomp, 2 * l.n_vcomp, &vel_seminorm)?,
        pressure_mass: CsrMatrix::from_triplets(np, np, &pressure_mass)?,
        dirichlet: spaces.dirichlet_w(),
    })
}

/// Volumetric load at time t: weighted body force on the velocity block and
/// weighted source on the head block. Length n_total, pressure rows zero.
pub fn assemble_load(
    mesh: &Mesh,
    spaces: &Spaces,
    params: &PhysicalParams,
    problem: &dyn ProblemData,
    t: f64,
    quad: &QuadOrders,
) -> Vec<f64> {
    let l = spaces.layout;
    let mut rhs = vec![0.0; l.n_total()];
    let tables = cell_tables(spaces.velocity.kind, quad.cell);
    for c in mesh.cells_of(Subdomain::Fluid) {
        let dofs = &spaces.velocity.cell_dofs[c];
        let map = CellMap::from_cell(mesh, c);
        for (q, &(xi, eta, w)) in tables.pts.iter().enumerate() {
            let wd = w * map.det_jacobian(xi, eta);
            let p = map.to_physical(xi, eta);
            let f = problem.forcing(p, t);
            for (i, &di) in dofs.iter().enumerate() {
                let v = tables.vals[q][i];
                rhs[l.vx(di)] += wd * params.eta * f[0] * v;
                rhs[l.vy(di)] += wd * params.eta * f[1] * v;
            }
        }
    }
    let tables = cell_tables(spaces.head.kind, quad.cell);
    for c in mesh.cells_of(Subdomain::Porous) {
        let dofs = &spaces.head.cell_dofs[c];
        let map = CellMap::from_cell(mesh, c);
        for (q, &(xi, eta, w)) in tables.pts.iter().enumerate() {
            let wd = w * map.det_jacobian(xi, eta);
            let p = map.to_physical(xi, eta);
            let g0 = problem.source(p, t);
            for (i, &di) in dofs.iter().enumerate() {
                rhs[l.head(di)] += wd * params.rho_g() * g0 * tables.vals[q][i];
            }
        }
    }
    rhs
}

/// Interface correction load for fields that violate the coupling
/// conditions. Added to the volumetric load when the run asks for it.
pub fn assemble_interface_consistency_load(
    mesh: &Mesh,
    spaces: &Spaces,
    params: &PhysicalParams,
    problem: &dyn ProblemData,
    t: f64,
    quad: &QuadOrders,
) -> Vec<f64> {
    let l = spaces.layout;
    let mut rhs = vec![0.0; l.n_total()];
    let eta = params.eta;
    let rho_g = params.rho_g();
    let n_f = mesh.geometry.interface_normal_fluid();
    let tau = mesh.geometry.interface_tangent();
    for qp in interface_qps(mesh, quad.edge) {
        let d = problem.interface_defect(qp.point.x, t);
        let vdofs = &spaces.velocity.cell_dofs[qp.fluid_cell];
        let hdofs = &spaces.head.cell_dofs[qp.porous_cell];
        let [fx, fe] = qp.fluid_ref;
        let [px, pe] = qp.porous_ref;
        let vvals = shape_values(spaces.velocity.kind, fx, fe);
        let hvals = shape_values(spaces.head.kind, px, pe);
        for (i, &di) in vdofs.iter().enumerate() {
            if vvals[i] == 0.0 {
                continue;
            }
            for a in 0..2 {
                let dir = -d.r_force * n_f[a] + d.r_bjs * tau[a];
                if dir != 0.0 {
                    rhs[l.velocity(a, di)] += qp.weight * eta * dir * vvals[i];
                }
            }
        }
        for (j, &dj) in hdofs.iter().enumerate() {
            if hvals[j] != 0.0 {
                rhs[l.head(dj)] -= qp.weight * eta * rho_g * d.r_mass * hvals[j];
            }
        }
    }
    rhs
}
