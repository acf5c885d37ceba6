//! Discrete norms, errors against reference fields, convergence orders,
//! the inf-sup diagnostic, and the convergence-table text format.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fem::{build_dofmap, gauss_2d, shape_gradients, shape_values, CellMap, ElemKind};
use crate::forms::{PhysicalParams, ProblemData, Spaces, SystemOperators};
use crate::mesh::{Mesh, Subdomain};

/// Norms induced by the assembled Gram matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Weighted field norm of the evolving block.
    FieldL2,
    /// Weighted gradient norm of the evolving block.
    FieldGrad,
    PressureL2,
}

pub fn norm(ops: &SystemOperators, kind: NormKind, x: &[f64]) -> f64 {
    let gram = match kind {
        NormKind::FieldL2 => &ops.mass,
        NormKind::FieldGrad => &ops.grad_gram,
        NormKind::PressureL2 => &ops.pressure_mass,
    };
    assert_eq!(x.len(), gram.nrows(), "vector length does not match norm");
    let gx = gram.mul_vec(x);
    let sq: f64 = x.iter().zip(&gx).map(|(a, b)| a * b).sum();
    sq.max(0.0).sqrt()
}

/// Field errors of a full solution vector against reference fields at one
/// time, integrated cellwise with the given Gauss order.
#[derive(Debug, Clone, Copy)]
pub struct ErrorNorms {
    pub err_w: f64,
    pub err_p: f64,
    pub w_exact: f64,
    pub w_h: f64,
    pub p_exact: f64,
}

pub fn error_vs_exact(
    mesh: &Mesh,
    spaces: &Spaces,
    params: &PhysicalParams,
    problem: &dyn ProblemData,
    t: f64,
    solution: &[f64],
    order: usize,
) -> ErrorNorms {
    let l = spaces.layout;
    assert_eq!(solution.len(), l.n_total());
    let vx = &solution[..l.n_vcomp];
    let vy = &solution[l.n_vcomp..2 * l.n_vcomp];
    let hd = &solution[2 * l.n_vcomp..l.n_w()];
    let pr = &solution[l.n_w()..l.n_w() + l.n_pressure];

    let rule = gauss_2d(order);
    let shapes: Vec<Vec<f64>> = rule
        .points
        .iter()
        .map(|&[xi, eta]| shape_values(ElemKind::Q2, xi, eta))
        .collect();

    let mut err_w2 = 0.0;
    let mut err_p2 = 0.0;
    let mut w_exact2 = 0.0;
    let mut w_h2 = 0.0;
    let mut p_exact2 = 0.0;

    for c in mesh.cells_of(Subdomain::Fluid) {
        let map = CellMap::from_cell(mesh, c);
        for (q, &[xi, eta]) in rule.points.iter().enumerate() {
            let wd = rule.weights[q] * map.det_jacobian(xi, eta);
            let p = map.to_physical(xi, eta);
            let vh = [
                spaces.velocity.eval_on_cell(c, &shapes[q], vx),
                spaces.velocity.eval_on_cell(c, &shapes[q], vy),
            ];
            let v = problem.velocity(p, t);
            let dv = (v[0] - vh[0]).powi(2) + (v[1] - vh[1]).powi(2);
            err_w2 += params.eta * wd * dv;
            w_exact2 += params.eta * wd * (v[0] * v[0] + v[1] * v[1]);
            w_h2 += params.eta * wd * (vh[0] * vh[0] + vh[1] * vh[1]);
            let ph = spaces.pressure.eval_on_cell(c, xi, eta, pr);
            let pe = problem.pressure(p, t);
            err_p2 += wd * (pe - ph) * (pe - ph);
            p_exact2 += wd * pe * pe;
        }
    }
    let w_head = params.rho_g() * params.s0;
    for c in mesh.cells_of(Subdomain::Porous) {
        let map = CellMap::from_cell(mesh, c);
        for (q, &[xi, eta]) in rule.points.iter().enumerate() {
            let wd = rule.weights[q] * map.det_jacobian(xi, eta);
            let p = map.to_physical(xi, eta);
            let hh = spaces.head.eval_on_cell(c, &shapes[q], hd);
            let he = problem.head(p, t);
            err_w2 += w_head * wd * (he - hh) * (he - hh);
            w_exact2 += w_head * wd * he * he;
            w_h2 += w_head * wd * hh * hh;
        }
    }

    ErrorNorms {
        err_w: err_w2.max(0.0).sqrt(),
        err_p: err_p2.max(0.0).sqrt(),
        w_exact: w_exact2.max(0.0).sqrt(),
        w_h: w_h2.max(0.0).sqrt(),
        p_exact: p_exact2.max(0.0).sqrt(),
    }
}

/// log2 ratio of errors on consecutive halved levels.
pub fn conv_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Smallest singular value of the scaled divergence coupling, the discrete
/// pressure-velocity stability constant. Production matrices carry the
/// porosity weight, which is divided back out.
pub fn infsup_estimate(ops: &SystemOperators, params: &PhysicalParams) -> Result<f64> {
    let nvel = ops.vel_seminorm.nrows();
    let mut keep = vec![true; nvel];
    for &d in &ops.dirichlet {
        if d < nvel {
            keep[d] = false;
        }
    }
    let free: Vec<usize> = (0..nvel).filter(|&i| keep[i]).collect();
    let mut newid = vec![usize::MAX; nvel];
    for (k, &i) in free.iter().enumerate() {
        newid[i] = k;
    }
    let nf = free.len();
    let np = ops.pressure_mass.nrows();
    let mut gv = DMatrix::zeros(nf, nf);
    for (i, j, v) in ops.vel_seminorm.entries() {
        if keep[i] && keep[j] {
            gv[(newid[i], newid[j])] = v;
        }
    }
    let mut b = DMatrix::zeros(np, nf);
    for (q, j, v) in ops.bdiv.entries() {
        if j < nvel && keep[j] {
            b[(q, newid[j])] = -v / params.eta;
        }
    }
    let mut gp = DMatrix::zeros(np, np);
    for (i, j, v) in ops.pressure_mass.entries() {
        gp[(i, j)] = v;
    }
    infsup_from_parts(b, gv, gp)
}

/// The same estimate for an equal-order bilinear pair on the fluid
/// subdomain. Diagnostic only: this pair is unstable and the estimate
/// degenerates under refinement.
pub fn infsup_equal_order(mesh: &Mesh) -> Result<f64> {
    let vel = build_dofmap(mesh, ElemKind::Q1, Subdomain::Fluid, true);
    let pres = build_dofmap(mesh, ElemKind::Q1, Subdomain::Fluid, false);
    let nv = vel.n_dofs;
    let np = pres.n_dofs;
    let rule = gauss_2d(2);

    let mut keep = vec![true; 2 * nv];
    for &d in &vel.dirichlet {
        keep[d] = false;
        keep[nv + d] = false;
    }
    let free: Vec<usize> = (0..2 * nv).filter(|&i| keep[i]).collect();
    let mut newid = vec![usize::MAX; 2 * nv];
    for (k, &i) in free.iter().enumerate() {
        newid[i] = k;
    }
    let nf = free.len();
    let mut gv = DMatrix::zeros(nf, nf);
    let mut b = DMatrix::zeros(np, nf);

    for c in mesh.cells_of(Subdomain::Fluid) {
        let dofs = &vel.cell_dofs[c];
        let pdofs = &pres.cell_dofs[c];
        let map = CellMap::from_cell(mesh, c);
        for (q, &[xi, eta]) in rule.points.iter().enumerate() {
            let wd = rule.weights[q] * map.det_jacobian(xi, eta);
            let vals = shape_values(ElemKind::Q1, xi, eta);
            let grads = map.physical_gradients(xi, eta, &shape_gradients(ElemKind::Q1, xi, eta));
            for (i, &di) in dofs.iter().enumerate() {
                for comp in 0..2 {
                    let gi = comp * nv + di;
                    if !keep[gi] {
                        continue;
                    }
                    for (j, &dj) in dofs.iter().enumerate() {
                        let gj = comp * nv + dj;
                        if keep[gj] {
                            gv[(newid[gi], newid[gj])] +=
                                wd * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                        }
                    }
                    for (pi, &pd) in pdofs.iter().enumerate() {
                        b[(pd, newid[gi])] += wd * vals[pi] * grads[i][comp];
                    }
                }
            }
        }
    }
    let mut gp = DMatrix::zeros(np, np);
    for c in mesh.cells_of(Subdomain::Fluid) {
        let pdofs = &pres.cell_dofs[c];
        let map = CellMap::from_cell(mesh, c);
        for (q, &[xi, eta]) in rule.points.iter().enumerate() {
            let wd = rule.weights[q] * map.det_jacobian(xi, eta);
            let vals = shape_values(ElemKind::Q1, xi, eta);
            for (pi, &pd) in pdofs.iter().enumerate() {
                for (pj, &pe) in pdofs.iter().enumerate() {
                    gp[(pd, pe)] += wd * (vals[pi] * vals[pj]);
                }
            }
        }
    }
    infsup_from_parts(b, gv, gp)
}

fn infsup_from_parts(b: DMatrix<f64>, gv: DMatrix<f64>, gp: DMatrix<f64>) -> Result<f64> {
    let nf = gv.nrows();
    if nf > 4000 {
        return Err(Error::Dimension(format!(
            "stability diagnostic is dense only, {nf} velocity dofs exceed the cap"
        )));
    }
    let chol_v = gv
        .cholesky()
        .ok_or_else(|| Error::Numerical("velocity Gram is not positive definite".into()))?;
    // S = B G_v^{-1} B^T, then the generalized problem S q = lambda G_p q.
    let x = chol_v.solve(&b.transpose());
    let s = &b * x;
    let chol_p = gp
        .cholesky()
        .ok_or_else(|| Error::Numerical("pressure Gram is not positive definite".into()))?;
    let l = chol_p.l();
    let a = l
        .solve_lower_triangular(&s)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let m = l
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let sym = 0.5 * (&m + m.transpose());
    let eig = sym.symmetric_eigen();
    let lambda = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(lambda.max(0.0).sqrt())
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRecord {
    pub param: f64,
    pub norm_w_exact: f64,
    pub norm_w_h: f64,
    pub err_w: f64,
    pub err_p: f64,
    pub cpu_s: f64,
}

/// Render the table: one row per level, orders derived from consecutive
/// rows via log2 ratios of errors over log2 ratios of the parameter.
pub fn emit_table(records: &[ConvergenceRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::Config("convergence table needs at least one record".into()));
    }
    let mut out = String::new();
    out.push_str("param, norm_w_exact, norm_w_h, err_w, CO_w, err_p, CO_p, cpu_s\n");
    for (i, r) in records.iter().enumerate() {
        let orders = if i == 0 {
            (String::new(), String::new())
        } else {
            let prev = &records[i - 1];
            let scale = (prev.param / r.param).log2();
            let co_w = conv_order(prev.err_w, r.err_w) / scale;
            let co_p = conv_order(prev.err_p, r.err_p) / scale;
            (format!("{co_w:.4}"), format!("{co_p:.4}"))
        };
        writeln!(
            out,
            "{:.6e}, {:.6e}, {:.6e}, {:.6e}, {}, {:.6e}, {}, {:.3}",
            r.param, r.norm_w_exact, r.norm_w_h, r.err_w, orders.0, r.err_p, orders.1, r.cpu_s
        )
        .expect("string write");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{
        assemble_operators, HydraulicTensor, InterfaceDefect, PressureKind, QuadOrders,
    };
    use crate::mesh::{build_structured, Point};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn params() -> PhysicalParams {
        PhysicalParams {
            nu: 0.1,
            eta: 0.01,
            rho: 1000.0,
            g: 10.0,
            s0: 1e-3,
            alpha: 1.0,
        }
    }

    fn tensor() -> HydraulicTensor {
        HydraulicTensor {
            k_min: 0.01,
            k_max: 1.0,
            theta: 0.0,
        }
    }

    fn setup(n: usize) -> (Mesh, Spaces, SystemOperators) {
        let mesh = build_structured(Default::default(), n).unwrap();
        let spaces = Spaces::build(&mesh, PressureKind::Q1);
        let ops =
            assemble_operators(&mesh, &spaces, &params(), &tensor(), &QuadOrders::default())
                .unwrap();
        (mesh, spaces, ops)
    }

    /// Static fields that lie exactly in the discrete spaces.
    struct PolyData;

    impl ProblemData for PolyData {
        fn velocity(&self, p: Point, _t: f64) -> [f64; 2] {
            [p.x * p.x + p.y, p.x * p.y]
        }
        fn pressure(&self, p: Point, _t: f64) -> f64 {
            1.0 - p.x
        }
        fn head(&self, p: Point, _t: f64) -> f64 {
            p.x * p.x + 2.0 * p.y * p.y
        }
        fn forcing(&self, _p: Point, _t: f64) -> [f64; 2] {
            [0.0; 2]
        }
        fn source(&self, _p: Point, _t: f64) -> f64 {
            0.0
        }
        fn velocity_laplacian(&self, _p: Point, _t: f64) -> [f64; 2] {
            [0.0; 2]
        }
        fn pressure_gradient(&self, _p: Point, _t: f64) -> [f64; 2] {
            [0.0; 2]
        }
        fn head_flux_div(&self, _p: Point, _t: f64) -> f64 {
            0.0
        }
        fn interface_defect(&self, _x: f64, _t: f64) -> InterfaceDefect {
            InterfaceDefect::default()
        }
    }

    /// A single cubic component, constant in the others; its bilinear trace
    /// has a closed-form interpolation gap.
    struct CubicData;

    impl ProblemData for CubicData {
        fn velocity(&self, p: Point, _t: f64) -> [f64; 2] {
            [p.x * p.x * p.x, 0.0]
        }
        fn pressure(&self, _p: Point, _t: f64) -> f64 {
            0.0
        }
        fn head(&self, _p: Point, _t: f64) -> f64 {
            0.0
        }
        fn forcing(&self, _p: Point, _t: f64) -> [f64; 2] {
            [0.0; 2]
        }
        fn source(&self, _p: Point, _t: f64) -> f64 {
            0.0
        }
        fn velocity_laplacian(&self, _p: Point, _t: f64) -> [f64; 2] {
            [0.0; 2]
        }
        fn pressure_gradient(&self, _p: Point, _t: f64) -> [f64; 2] {
            [0.0; 2]
        }
        fn head_flux_div(&self, _p: Point, _t: f64) -> f64 {
            0.0
        }
        fn interface_defect(&self, _x: f64, _t: f64) -> InterfaceDefect {
            InterfaceDefect::default()
        }
    }

    fn interpolant(spaces: &Spaces, problem: &dyn ProblemData, t: f64) -> Vec<f64> {
        let l = spaces.layout;
        let mut sol = vec![0.0; l.n_total()];
        for (d, &p) in spaces.velocity.coords.iter().enumerate() {
            let v = problem.velocity(p, t);
            sol[l.vx(d)] = v[0];
            sol[l.vy(d)] = v[1];
        }
        for (d, &p) in spaces.head.coords.iter().enumerate() {
            sol[l.head(d)] = problem.head(p, t);
        }
        for (d, &p) in spaces.pressure.q1.coords.iter().enumerate() {
            sol[l.pressure(d)] = problem.pressure(p, t);
        }
        sol
    }

    #[test]
    fn norms_are_homogeneous_and_subadditive() {
        let (_, spaces, ops) = setup(2);
        let mut rng = StdRng::seed_from_u64(17);
        let l = spaces.layout;
        for kind in [NormKind::FieldL2, NormKind::FieldGrad, NormKind::PressureL2] {
            let n = match kind {
                NormKind::PressureL2 => l.n_pressure,
                _ => l.n_w(),
            };
            for _ in 0..10 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let c: f64 = rng.gen_range(-3.0..3.0);
                let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
                let nx = norm(&ops, kind, &x);
                assert!((norm(&ops, kind, &cx) - c.abs() * nx).abs() < 1e-13 * (1.0 + nx));
                let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
                let ny = norm(&ops, kind, &y);
                assert!(norm(&ops, kind, &xy) <= nx + ny + 1e-12);
            }
        }
    }

    #[test]
    fn representable_fields_have_zero_error() {
        let (mesh, spaces, _) = setup(2);
        let sol = interpolant(&spaces, &PolyData, 0.0);
        let e = error_vs_exact(&mesh, &spaces, &params(), &PolyData, 0.0, &sol, 4);
        assert!(e.err_w < 1e-11 * e.w_exact, "err_w = {}", e.err_w);
        assert!(e.err_p < 1e-12 * (1.0 + e.p_exact), "err_p = {}", e.err_p);
        assert!((e.w_h - e.w_exact).abs() < 1e-10 * e.w_exact);
    }

    #[test]
    fn error_of_zero_solution_is_the_field_norm() {
        let (mesh, spaces, _) = setup(1);
        let sol = vec![0.0; spaces.layout.n_total()];
        let e = error_vs_exact(&mesh, &spaces, &params(), &PolyData, 0.0, &sol, 4);
        assert!((e.err_w - e.w_exact).abs() < 1e-13 * e.w_exact);
        assert!((e.err_p - e.p_exact).abs() < 1e-13);
        assert!(e.w_h == 0.0);
    }

    #[test]
    fn cubic_interpolation_gap_matches_closed_form() {
        // One cell across the fluid layer; the interpolant of x^3 on a
        // quadratic basis leaves the classical cubic remainder whose
        // squared integral over the unit cell is 1/840.
        let (mesh, spaces, _) = setup(1);
        let sol = interpolant(&spaces, &CubicData, 0.0);
        let e = error_vs_exact(&mesh, &spaces, &params(), &CubicData, 0.0, &sol, 4);
        let exact = (params().eta / 840.0).sqrt();
        assert!(
            (e.err_w - exact).abs() < 1e-12,
            "got {}, want {exact}",
            e.err_w
        );
    }

    #[test]
    fn convergence_orders_from_published_style_pairs() {
        assert!((conv_order(2.0135e-2, 1.2685e-3) - 3.9885).abs() < 5e-4);
        assert!((conv_order(5.3705e-2, 1.3767e-2) - 1.9638).abs() < 5e-4);
        // Rescaling both errors by a common factor leaves the order alone.
        let a = conv_order(3.2e-3, 8.1e-4);
        let b = conv_order(7.0 * 3.2e-3, 7.0 * 8.1e-4);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn stable_pair_estimate_is_bounded_away_from_zero() {
        let (_, _, ops) = setup(2);
        let beta2 = infsup_estimate(&ops, &params()).unwrap();
        let (_, _, ops3) = setup(3);
        let beta3 = infsup_estimate(&ops3, &params()).unwrap();
        assert!(beta2 > 0.05, "beta(2) = {beta2}");
        assert!(beta3 > 0.05, "beta(3) = {beta3}");
        assert!(beta2 < 2.0 && beta3 < 2.0);
    }

    #[test]
    fn equal_order_pair_estimate_degenerates() {
        let mesh2 = build_structured(Default::default(), 2).unwrap();
        let mesh6 = build_structured(Default::default(), 6).unwrap();
        let b2 = infsup_equal_order(&mesh2).unwrap();
        let b6 = infsup_equal_order(&mesh6).unwrap();
        assert!(
            b6 < 0.5 * b2 || b6 < 1e-6,
            "no degeneration: beta(2) = {b2}, beta(6) = {b6}"
        );
    }

    #[test]
    fn table_layout_and_derived_orders() {
        assert!(emit_table(&[]).is_err());
        let r1 = ConvergenceRecord {
            param: 0.25,
            norm_w_exact: 1.5,
            norm_w_h: 1.49,
            err_w: 4.0e-2,
            err_p: 8.0e-2,
            cpu_s: 0.5,
        };
        let one = emit_table(&[r1]).unwrap();
        let mut lines = one.lines();
        assert_eq!(
            lines.next().unwrap(),
            "param, norm_w_exact, norm_w_h, err_w, CO_w, err_p, CO_p, cpu_s"
        );
        let row = lines.next().unwrap();
        assert!(row.contains(", , "), "blank order fields in {row}");

        let r2 = ConvergenceRecord {
            param: 0.125,
            err_w: 5.0e-3,
            err_p: 4.0e-2,
            ..r1
        };
        let two = emit_table(&[r1, r2]).unwrap();
        let second = two.lines().nth(2).unwrap();
        let fields: Vec<&str> = second.split(", ").collect();
        let co_w: f64 = fields[4].parse().unwrap();
        let co_p: f64 = fields[6].parse().unwrap();
        assert!((co_w - 3.0).abs() < 1e-9, "CO_w = {co_w}");
        assert!((co_p - 1.0).abs() < 1e-9, "CO_p = {co_p}");
    }
}
