//! Time marching: the three-level scheme with its predictor start-up, the
//! single-level reference scheme, constrained projections, and the free
//! decay driver used as a stability witness.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::analysis::{error_vs_exact, norm, NormKind};
use crate::error::{Error, Result};
use crate::fem::{gauss_2d, shape_values, CellMap};
use crate::forms::{
    assemble_interface_consistency_load, assemble_load, boundary_values, constrain_matrix,
    constrained_rhs, PhysicalParams, ProblemData, QuadOrders, Spaces, SystemOperators,
};
use crate::linalg::{CsrMatrix, SparseLu};
use crate::mesh::{Mesh, Point, Subdomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Second order three-level scheme.
    Bdf2,
    /// First order reference scheme.
    BackwardEuler,
}

/// Coefficients of the implicit update: the new state solves
/// (M + lead*A) w = M (hist[0] w_cur + hist[1] w_prev) + lead * load.
#[derive(Debug, Clone, Copy)]
pub struct SchemeWeights {
    pub lead: f64,
    pub hist: [f64; 2],
}

pub fn scheme_weights(scheme: Scheme, sigma: f64) -> SchemeWeights {
    match scheme {
        Scheme::Bdf2 => SchemeWeights {
            lead: 2.0 * sigma / 3.0,
            hist: [4.0 / 3.0, -1.0 / 3.0],
        },
        Scheme::BackwardEuler => SchemeWeights {
            lead: sigma,
            hist: [1.0, 0.0],
        },
    }
}

/// Three-level backward difference, exact on quadratics.
pub fn bdf2_time_derivative(w_new: f64, w_cur: f64, w_old: f64, sigma: f64) -> f64 {
    (3.0 * w_new - 4.0 * w_cur + w_old) / (2.0 * sigma)
}

/// Uniform grid on [0, t_end]; the step must divide the interval.
#[derive(Debug, Clone, Copy)]
pub struct TimeGrid {
    pub sigma: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(sigma: f64, t_end: f64) -> Result<Self> {
        if !(sigma > 0.0) || !(t_end > 0.0) {
            return Err(Error::Config(format!(
                "time grid needs positive step and horizon, got sigma = {sigma}, t_end = {t_end}"
            )));
        }
        let ratio = t_end / sigma;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
            return Err(Error::Config(format!(
                "step {sigma} does not divide horizon {t_end}"
            )));
        }
        Ok(TimeGrid {
            sigma,
            n_steps: n as usize,
        })
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.sigma
    }
}

/// Homogeneous data: zero forcing, source, and traces.
pub struct ZeroProblem;

impl ProblemData for ZeroProblem {
    fn velocity(&self, _p: Point, _t: f64) -> [f64; 2] {
        [0.0; 2]
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
    fn interface_defect(&self, _x: f64, _t: f64) -> crate::forms::InterfaceDefect {
        crate::forms::InterfaceDefect::default()
    }
}

fn bordered(ops: &SystemOperators, lead: f64, include_forms: bool) -> Result<CsrMatrix> {
    let l = ops.layout;
    let n = l.n_total();
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    for (i, j, v) in ops.mass.entries() {
        trips.push((i, j, v));
    }
    if include_forms {
        for (i, j, v) in ops.b_mat.entries() {
            trips.push((i, j, lead * v));
        }
        for (i, j, v) in ops.c_i.entries() {
            trips.push((i, j, lead * v));
        }
    }
    for (q, j, v) in ops.bdiv.entries() {
        trips.push((l.pressure(q), j, v));
        trips.push((j, l.pressure(q), lead * v));
    }
    for (q, &v) in ops.mean_vec.iter().enumerate() {
        trips.push((l.pressure(q), l.multiplier(), v));
        trips.push((l.multiplier(), l.pressure(q), v));
    }
    CsrMatrix::from_triplets(n, n, &trips)
}

/// Implicit-step matrix for one scheme and step size.
pub fn system_matrix(ops: &SystemOperators, lead: f64) -> Result<CsrMatrix> {
    bordered(ops, lead, true)
}

/// Matrix of the constrained projection: mass block bordered by the
/// divergence constraint and the zero-mean pin.
pub fn projection_matrix(ops: &SystemOperators) -> Result<CsrMatrix> {
    bordered(ops, 1.0, false)
}

/// Weighted inner product of given fields against every basis function,
/// the right hand side of a projection. Full system length.
pub fn weighted_field_load(
    mesh: &Mesh,
    spaces: &Spaces,
    params: &PhysicalParams,
    vel: impl Fn(Point) -> [f64; 2],
    head: impl Fn(Point) -> f64,
    order: usize,
) -> Vec<f64> {
    let l = spaces.layout;
    let mut rhs = vec![0.0; l.n_total()];
    let rule = gauss_2d(order);
    for c in mesh.cells_of(Subdomain::Fluid) {
        let dofs = &spaces.velocity.cell_dofs[c];
        let map = CellMap::from_cell(mesh, c);
        for (q, &[xi, eta]) in rule.points.iter().enumerate() {
            let wd = rule.weights[q] * map.det_jacobian(xi, eta);
            let v = vel(map.to_physical(xi, eta));
            let vals = shape_values(spaces.velocity.kind, xi, eta);
            for (i, &di) in dofs.iter().enumerate() {
                rhs[l.vx(di)] += wd * params.eta * v[0] * vals[i];
                rhs[l.vy(di)] += wd * params.eta * v[1] * vals[i];
            }
        }
    }
    let w_head = params.rho_g() * params.s0;
    for c in mesh.cells_of(Subdomain::Porous) {
        let dofs = &spaces.head.cell_dofs[c];
        let map = CellMap::from_cell(mesh, c);
        for (q, &[xi, eta]) in rule.points.iter().enumerate() {
            let wd = rule.weights[q] * map.det_jacobian(xi, eta);
            let h = head(map.to_physical(xi, eta));
            let vals = shape_values(spaces.head.kind, xi, eta);
            for (i, &di) in dofs.iter().enumerate() {
                rhs[l.head(di)] += wd * w_head * h * vals[i];
            }
        }
    }
    rhs
}

/// Projection onto the discretely divergence-free part of the product
/// space, with prescribed boundary traces. Factorized once, reused for the
/// initial state and the predictor.
pub struct Projector {
    raw: CsrMatrix,
    constrained: CsrMatrix,
    lu: SparseLu,
    dofs: Vec<usize>,
}

impl Projector {
    pub fn new(ops: &SystemOperators) -> Result<Self> {
        let raw = projection_matrix(ops)?;
        let constrained = constrain_matrix(&raw, &ops.dirichlet)?;
        let lu = SparseLu::factorize(&constrained)?;
        Ok(Projector {
            raw,
            constrained,
            lu,
            dofs: ops.dirichlet.clone(),
        })
    }

    /// `load` is the weighted field load, `bvals` the prescribed trace.
    /// Returns the full bordered solution; the leading block is the
    /// projected state.
    pub fn project(&self, load: &[f64], bvals: &[f64]) -> Result<Vec<f64>> {
        let rhs = constrained_rhs(&self.raw, load, &self.dofs, bvals);
        self.lu.solve_checked(&self.constrained, &rhs)
    }
}

/// One factorized implicit step.
pub struct Stepper {
    raw: CsrMatrix,
    constrained: CsrMatrix,
    lu: SparseLu,
    dofs: Vec<usize>,
    n_w: usize,
    pub weights: SchemeWeights,
}

impl Stepper {
    pub fn new(ops: &SystemOperators, scheme: Scheme, sigma: f64) -> Result<Self> {
        let weights = scheme_weights(scheme, sigma);
        let raw = system_matrix(ops, weights.lead)?;
        let constrained = constrain_matrix(&raw, &ops.dirichlet)?;
        let lu = SparseLu::factorize(&constrained)?;
        Ok(Stepper {
            raw,
            constrained,
            lu,
            dofs: ops.dirichlet.clone(),
            n_w: ops.layout.n_w(),
            weights,
        })
    }

    /// Advance one step. `load` is the unscaled volumetric load at the new
    /// time, `bvals` the trace there. Returns the full bordered solution.
    pub fn advance(
        &self,
        ops: &SystemOperators,
        w_cur: &[f64],
        w_prev: &[f64],
        load: &[f64],
        bvals: &[f64],
    ) -> Result<Vec<f64>> {
        let combo: Vec<f64> = w_cur
            .iter()
            .zip(w_prev)
            .map(|(c, p)| self.weights.hist[0] * c + self.weights.hist[1] * p)
            .collect();
        let hist = ops.mass.mul_vec(&combo);
        let mut rhs = vec![0.0; self.raw.nrows()];
        rhs[..self.n_w].copy_from_slice(&hist);
        for (r, l) in rhs.iter_mut().zip(load) {
            *r += self.weights.lead * l;
        }
        let rhs = constrained_rhs(&self.raw, &rhs, &self.dofs, bvals);
        self.lu.solve_checked(&self.constrained, &rhs)
    }
}

/// Residual of the divergence constraint rows for a full bordered solution.
pub fn div_residual(ops: &SystemOperators, x: &[f64]) -> f64 {
    let l = ops.layout;
    let bw = ops.bdiv.mul_vec(&x[..l.n_w()]);
    let lambda = x[l.multiplier()];
    bw.iter()
        .zip(&ops.mean_vec)
        .map(|(r, m)| (r + m * lambda).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Zero-mean projection of the reference pressure at t = 0, for the first
/// diagnostics row. No later step uses it.
fn project_initial_pressure(
    mesh: &Mesh,
    spaces: &Spaces,
    ops: &SystemOperators,
    problem: &dyn ProblemData,
    order: usize,
) -> Result<Vec<f64>> {
    let np = spaces.layout.n_pressure;
    let mut trips: Vec<(usize, usize, f64)> = ops.pressure_mass.entries().collect();
    for (q, &v) in ops.mean_vec.iter().enumerate() {
        trips.push((q, np, v));
        trips.push((np, q, v));
    }
    let a = CsrMatrix::from_triplets(np + 1, np + 1, &trips)?;
    let lu = SparseLu::factorize(&a)?;
    let mut rhs = vec![0.0; np + 1];
    let rule = gauss_2d(order);
    for c in mesh.cells_of(Subdomain::Fluid) {
        let map = CellMap::from_cell(mesh, c);
        for (q, &[xi, eta]) in rule.points.iter().enumerate() {
            let wd = rule.weights[q] * map.det_jacobian(xi, eta);
            let pe = problem.pressure(map.to_physical(xi, eta), 0.0);
            let (ids, vals) = spaces.pressure.cell_basis(c, xi, eta);
            for (k, &pd) in ids.iter().enumerate() {
                rhs[pd] += wd * pe * vals[k];
            }
        }
    }
    let mut x = lu.solve_checked(&a, &rhs)?;
    x.truncate(np);
    Ok(x)
}

/// First-order-in-time start-up guesses built from the reference fields at
/// t = 0 and their strong-form time derivatives.
pub fn taylor_predictor<'a>(
    problem: &'a dyn ProblemData,
    params: &'a PhysicalParams,
    sigma: f64,
) -> (
    impl Fn(Point) -> [f64; 2] + 'a,
    impl Fn(Point) -> f64 + 'a,
) {
    let nu = params.nu;
    let s0 = params.s0;
    let vel = move |p: Point| {
        let v = problem.velocity(p, 0.0);
        let lap = problem.velocity_laplacian(p, 0.0);
        let gp = problem.pressure_gradient(p, 0.0);
        let f = problem.forcing(p, 0.0);
        [
            v[0] + sigma * (nu * lap[0] - gp[0] + f[0]),
            v[1] + sigma * (nu * lap[1] - gp[1] + f[1]),
        ]
    };
    let head = move |p: Point| {
        let h = problem.head(p, 0.0);
        let flux = problem.head_flux_div(p, 0.0);
        let g0 = problem.source(p, 0.0);
        h + sigma / s0 * (flux + g0)
    };
    (vel, head)
}

/// One row of the per-step diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    pub err_w: f64,
    pub err_p: f64,
    pub div_residual: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub steps: Vec<StepRecord>,
    /// Running maxima over n >= 1.
    pub max_err_w: f64,
    pub max_err_p: f64,
    pub max_w_exact: f64,
    pub max_w_h: f64,
    pub max_div_residual: f64,
    /// Wall clock of the marching loop alone.
    pub cpu_s: f64,
}

/// How the second history level is produced when the three-level scheme
/// needs one before regular marching can begin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Starter {
    /// Project a first-order strong-form expansion of the reference fields,
    /// then recover the pressure from one reference-scheme solve.
    #[default]
    Taylor,
    /// Take field and pressure together from one reference-scheme step.
    BackwardEuler,
}

/// A configured transient solve on fixed discrete structures.
pub struct Transient<'a> {
    pub mesh: &'a Mesh,
    pub spaces: &'a Spaces,
    pub ops: &'a SystemOperators,
    pub params: &'a PhysicalParams,
    pub quad: QuadOrders,
    pub scheme: Scheme,
    pub starter: Starter,
    pub sigma: f64,
    pub t_end: f64,
    pub consistency_load: bool,
}

impl Transient<'_> {
    fn load_at(&self, problem: &dyn ProblemData, t: f64) -> Vec<f64> {
        let mut load = assemble_load(self.mesh, self.spaces, self.params, problem, t, &self.quad);
        if self.consistency_load {
            let extra = assemble_interface_consistency_load(
                self.mesh,
                self.spaces,
                self.params,
                problem,
                t,
                &self.quad,
            );
            for (l, e) in load.iter_mut().zip(&extra) {
                *l += e;
            }
        }
        load
    }

    pub fn run(&self, problem: &dyn ProblemData) -> Result<RunResult> {
        let grid = TimeGrid::new(self.sigma, self.t_end)?;
        let l = self.spaces.layout;
        let err_order = self.quad.cell + 1;
        let proj = Projector::new(self.ops)?;

        let load0 = weighted_field_load(
            self.mesh,
            self.spaces,
            self.params,
            |p| problem.velocity(p, 0.0),
            |p| problem.head(p, 0.0),
            self.quad.cell,
        );
        let x0 = proj.project(&load0, &boundary_values(self.spaces, problem, 0.0))?;
        let p0 = project_initial_pressure(self.mesh, self.spaces, self.ops, problem, err_order)?;

        let mut full0 = vec![0.0; l.n_total()];
        full0[..l.n_w()].copy_from_slice(&x0[..l.n_w()]);
        full0[l.n_w()..l.n_w() + l.n_pressure].copy_from_slice(&p0);
        let e0 = error_vs_exact(
            self.mesh,
            self.spaces,
            self.params,
            problem,
            0.0,
            &full0,
            err_order,
        );
        let mut steps = vec![StepRecord {
            n: 0,
            t: 0.0,
            err_w: e0.err_w,
            err_p: e0.err_p,
            div_residual: div_residual(self.ops, &x0),
        }];

        let mut max_err_w: f64 = 0.0;
        let mut max_err_p: f64 = 0.0;
        let mut max_w_exact: f64 = 0.0;
        let mut max_w_h: f64 = 0.0;
        let mut max_div: f64 = 0.0;

        let mut w_prev = x0[..l.n_w()].to_vec();
        let mut w_cur: Vec<f64>;
        let stepper = Stepper::new(self.ops, self.scheme, self.sigma)?;
        let first_marched;

        match self.scheme {
            Scheme::Bdf2 => {
                let t1 = grid.t(1);
                let bvals1 = boundary_values(self.spaces, problem, t1);
                let be = Stepper::new(self.ops, Scheme::BackwardEuler, self.sigma)?;
                let xbe = be.advance(self.ops, &w_prev, &w_prev, &self.load_at(problem, t1), &bvals1)?;

                let (full1, dr1) = match self.starter {
                    Starter::Taylor => {
                        // Predictor state for the second history level; the
                        // reference-scheme solve only donates its pressure.
                        let (vel_bar, head_bar) =
                            taylor_predictor(problem, self.params, self.sigma);
                        let load1 = weighted_field_load(
                            self.mesh,
                            self.spaces,
                            self.params,
                            vel_bar,
                            head_bar,
                            self.quad.cell,
                        );
                        let x1 = proj.project(&load1, &bvals1)?;
                        let dr = div_residual(self.ops, &x1);
                        let mut full = vec![0.0; l.n_total()];
                        full[..l.n_w()].copy_from_slice(&x1[..l.n_w()]);
                        full[l.n_w()..].copy_from_slice(&xbe[l.n_w()..]);
                        (full, dr)
                    }
                    Starter::BackwardEuler => {
                        let dr = div_residual(self.ops, &xbe);
                        (xbe, dr)
                    }
                };
                let e1 = error_vs_exact(
                    self.mesh,
                    self.spaces,
                    self.params,
                    problem,
                    t1,
                    &full1,
                    err_order,
                );
                steps.push(StepRecord {
                    n: 1,
                    t: t1,
                    err_w: e1.err_w,
                    err_p: e1.err_p,
                    div_residual: dr1,
                });
                max_err_w = e1.err_w;
                max_err_p = e1.err_p;
                max_w_exact = e1.w_exact;
                max_w_h = e1.w_h;
                max_div = dr1;

                w_cur = full1[..l.n_w()].to_vec();
                first_marched = 2;
            }
            Scheme::BackwardEuler => {
                w_cur = w_prev.clone();
                first_marched = 1;
            }
        }

        let clock = Instant::now();
        for n in first_marched..=grid.n_steps {
            let t = grid.t(n);
            let bvals = boundary_values(self.spaces, problem, t);
            let x = stepper.advance(self.ops, &w_cur, &w_prev, &self.load_at(problem, t), &bvals)?;
            let e = error_vs_exact(
                self.mesh,
                self.spaces,
                self.params,
                problem,
                t,
                &x,
                err_order,
            );
            let dr = div_residual(self.ops, &x);
            steps.push(StepRecord {
                n,
                t,
                err_w: e.err_w,
                err_p: e.err_p,
                div_residual: dr,
            });
            max_err_w = max_err_w.max(e.err_w);
            max_err_p = max_err_p.max(e.err_p);
            max_w_exact = max_w_exact.max(e.w_exact);
            max_w_h = max_w_h.max(e.w_h);
            max_div = max_div.max(dr);
            w_prev = std::mem::replace(&mut w_cur, x[..l.n_w()].to_vec());
        }
        let cpu_s = clock.elapsed().as_secs_f64();

        Ok(RunResult {
            steps,
            max_err_w,
            max_err_p,
            max_w_exact,
            max_w_h,
            max_div_residual: max_div,
            cpu_s,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecayResult {
    pub init_norm: f64,
    pub max_norm: f64,
    pub final_norm: f64,
}

/// March homogeneous data from a random start, both history levels equal.
/// A stable scheme keeps every later state inside a fixed multiple of the
/// initial one.
pub fn free_decay(
    spaces: &Spaces,
    ops: &SystemOperators,
    sigma: f64,
    t_end: f64,
    seed: u64,
) -> Result<DecayResult> {
    let grid = TimeGrid::new(sigma, t_end)?;
    let l = spaces.layout;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut w0: Vec<f64> = (0..l.n_w()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for &d in &ops.dirichlet {
        w0[d] = 0.0;
    }
    let init_norm = norm(ops, NormKind::FieldL2, &w0);

    let stepper = Stepper::new(ops, Scheme::Bdf2, sigma)?;
    let zero_load = vec![0.0; l.n_total()];
    let zero_bvals = vec![0.0; l.n_total()];
    let mut w_prev = w0.clone();
    let mut w_cur = w0;
    let mut max_norm = init_norm;
    let mut final_norm = init_norm;
    for _ in 2..=grid.n_steps {
        let x = stepper.advance(ops, &w_cur, &w_prev, &zero_load, &zero_bvals)?;
        final_norm = norm(ops, NormKind::FieldL2, &x[..l.n_w()]);
        max_norm = max_norm.max(final_norm);
        w_prev = std::mem::replace(&mut w_cur, x[..l.n_w()].to_vec());
    }
    Ok(DecayResult {
        init_norm,
        max_norm,
        final_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{assemble_operators, HydraulicTensor, PressureKind};
    use crate::mesh::build_structured;
    use crate::mms::ManufacturedSolution;

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

    #[test]
    fn weights_reproduce_scalar_recurrences() {
        // Scalar model: (1 + lead) w_new = hist[0] w_cur + hist[1] w_prev.
        let w = scheme_weights(Scheme::Bdf2, 0.1);
        let w2 = (w.hist[0] + w.hist[1]) / (1.0 + w.lead);
        assert!((w2 - 0.9375).abs() < 1e-15);
        let b = scheme_weights(Scheme::BackwardEuler, 0.1);
        let w1 = b.hist[0] / (1.0 + b.lead);
        assert!((w1 - 1.0 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn three_level_derivative_is_exact_on_quadratics() {
        let f = |t: f64| 3.0 * t * t - 2.0 * t + 0.5;
        let df = |t: f64| 6.0 * t - 2.0;
        for &(t, s) in &[(1.0, 0.25), (0.3, 0.05), (2.0, 0.5)] {
            let d = bdf2_time_derivative(f(t), f(t - s), f(t - 2.0 * s), s);
            assert!((d - df(t)).abs() < 1e-13, "t = {t}, sigma = {s}");
        }
        // Cubic truncation: w = t^3 at t = 1 with sigma = 1/2 gives 2.5.
        let d = bdf2_time_derivative(1.0, 0.125, 0.0, 0.5);
        assert!((d - 2.5).abs() < 1e-15);
    }

    #[test]
    fn grid_requires_divisible_horizon() {
        let g = TimeGrid::new(0.25, 1.0).unwrap();
        assert_eq!(g.n_steps, 4);
        assert_eq!(g.t(3), 0.75);
        assert!(TimeGrid::new(0.3, 1.0).is_err());
        assert!(TimeGrid::new(-0.1, 1.0).is_err());
        assert!(TimeGrid::new(0.1, 0.0).is_err());
    }

    #[test]
    fn bordered_matrix_couples_constraint_rows_both_ways() {
        let (_, spaces, ops) = setup(1);
        let l = spaces.layout;
        let lead = 0.2;
        let a = system_matrix(&ops, lead).unwrap();
        for (q, j, v) in ops.bdiv.entries() {
            let row = l.pressure(q);
            assert_eq!(a.get(row, j), v);
            assert_eq!(a.get(j, row), lead * v);
        }
        let m = l.multiplier();
        for (q, &v) in ops.mean_vec.iter().enumerate() {
            assert_eq!(a.get(l.pressure(q), m), v);
            assert_eq!(a.get(m, l.pressure(q)), v);
        }
    }

    #[test]
    fn projection_fixes_representable_solenoidal_fields() {
        let (mesh, spaces, ops) = setup(2);
        let l = spaces.layout;
        let vel = |p: Point| [p.y * p.y, p.x * p.x];
        let head = |p: Point| p.x * p.x + 2.0 * p.y * p.y;
        let load = weighted_field_load(&mesh, &spaces, &params(), vel, head, 3);
        let mut bvals = vec![0.0; l.n_total()];
        for &d in &spaces.velocity.dirichlet {
            let v = vel(spaces.velocity.coords[d]);
            bvals[l.vx(d)] = v[0];
            bvals[l.vy(d)] = v[1];
        }
        for &d in &spaces.head.dirichlet {
            bvals[l.head(d)] = head(spaces.head.coords[d]);
        }
        let proj = Projector::new(&ops).unwrap();
        let x = proj.project(&load, &bvals).unwrap();
        for (d, &p) in spaces.velocity.coords.iter().enumerate() {
            let v = vel(p);
            assert!((x[l.vx(d)] - v[0]).abs() < 1e-9, "vx at {p:?}");
            assert!((x[l.vy(d)] - v[1]).abs() < 1e-9, "vy at {p:?}");
        }
        for (d, &p) in spaces.head.coords.iter().enumerate() {
            assert!((x[l.head(d)] - head(p)).abs() < 1e-9, "head at {p:?}");
        }
    }

    #[test]
    fn manufactured_march_keeps_constraint_tight() {
        let (mesh, spaces, ops) = setup(2);
        let p = params();
        let problem = ManufacturedSolution::new(p, tensor());
        let tr = Transient {
            mesh: &mesh,
            spaces: &spaces,
            ops: &ops,
            params: &p,
            quad: QuadOrders::default(),
            scheme: Scheme::Bdf2,
            starter: Starter::Taylor,
            sigma: 0.125,
            t_end: 0.5,
            consistency_load: true,
        };
        let out = tr.run(&problem).unwrap();
        assert_eq!(out.steps.len(), 5);
        assert!(out.max_div_residual < 1e-9, "div = {}", out.max_div_residual);
        assert!(out.max_err_w < 0.5 * out.max_w_exact);
        assert!(out.cpu_s >= 0.0);
    }

    #[test]
    fn reference_scheme_runs_and_reports_every_level() {
        let (mesh, spaces, ops) = setup(2);
        let p = params();
        let problem = ManufacturedSolution::new(p, tensor());
        let tr = Transient {
            mesh: &mesh,
            spaces: &spaces,
            ops: &ops,
            params: &p,
            quad: QuadOrders::default(),
            scheme: Scheme::BackwardEuler,
            starter: Starter::Taylor,
            sigma: 0.25,
            t_end: 1.0,
            consistency_load: true,
        };
        let out = tr.run(&problem).unwrap();
        assert_eq!(out.steps.len(), 5);
        assert_eq!(out.steps[0].n, 0);
        assert!(out.steps.iter().all(|s| s.div_residual < 1e-9));
    }

    #[test]
    fn free_decay_stays_bounded() {
        let (_, spaces, ops) = setup(2);
        let out = free_decay(&spaces, &ops, 0.5, 4.0, 7).unwrap();
        assert!(out.max_norm <= 2.0 * out.init_norm, "{out:?}");
        assert!(out.final_norm <= out.max_norm);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn three_level_derivative_is_exact_on_arbitrary_quadratics(
            a in -5.0f64..5.0,
            b in -5.0f64..5.0,
            c in -5.0f64..5.0,
            t in 0.1f64..4.0,
            sigma in 0.01f64..0.5,
        ) {
            let f = |t: f64| a * t * t + b * t + c;
            let d = bdf2_time_derivative(f(t), f(t - sigma), f(t - 2.0 * sigma), sigma);
            let want = 2.0 * a * t + b;
            let scale = (a.abs() + b.abs() + c.abs() + 1.0) / sigma;
            prop_assert!((d - want).abs() <= 1e-12 * scale, "d = {d}, want = {want}");
        }

        #[test]
        fn scalar_recurrences_contract_for_any_step(sigma in 1e-3f64..10.0) {
            // Both schemes applied to w' = -w must damp: the amplification
            // factor of the resulting recurrence stays inside the unit disk.
            let be = scheme_weights(Scheme::BackwardEuler, sigma);
            prop_assert!(be.hist[0] / (1.0 + be.lead) < 1.0);
            let w = scheme_weights(Scheme::Bdf2, sigma);
            // Roots of (1 + lead) z^2 - hist[0] z - hist[1] = 0.
            let aa = 1.0 + w.lead;
            let disc = w.hist[0] * w.hist[0] + 4.0 * aa * w.hist[1];
            let mag = if disc >= 0.0 {
                let r1 = (w.hist[0] + disc.sqrt()) / (2.0 * aa);
                let r2 = (w.hist[0] - disc.sqrt()) / (2.0 * aa);
                r1.abs().max(r2.abs())
            } else {
                (-w.hist[1] / aa).sqrt()
            };
            prop_assert!(mag < 1.0, "sigma = {sigma}, |root| = {mag}");
        }
    }
}
