//! Named structural properties of the discrete operators and the marching
//! scheme. The `check` subcommand prints one verdict per property; the
//! acceptance suite runs the same registry.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::analysis::{infsup_equal_order, infsup_estimate};
use crate::fem::{gauss_2d, CellMap};
use crate::forms::{
    assemble_operators, HydraulicTensor, PhysicalParams, PressureKind, ProblemData, QuadOrders,
    Spaces, SystemOperators,
};
use crate::linalg::{dense_solve, CsrMatrix, DenseMatrix, SparseLu};
use crate::mesh::{build_structured, Geometry, Mesh, Rect, Subdomain};
use crate::mms::ManufacturedSolution;
use crate::oracle;
use crate::timestep::{
    bdf2_time_derivative, free_decay, scheme_weights, system_matrix, taylor_predictor, Scheme,
    Starter, Transient,
};

pub type CheckResult = std::result::Result<(), String>;

pub struct PropertyCheck {
    pub name: &'static str,
    pub run: fn() -> CheckResult,
}

/// Largest violation of skew symmetry, zero for an exactly skew matrix.
pub fn skewness_defect(c: &CsrMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, j, v) in c.entries() {
        worst = worst.max((v + c.get(j, i)).abs());
    }
    worst
}

fn reference_params() -> PhysicalParams {
    PhysicalParams {
        nu: 0.1,
        eta: 0.01,
        rho: 1000.0,
        g: 10.0,
        s0: 1e-3,
        alpha: 1.0,
    }
}

fn reference_tensor() -> HydraulicTensor {
    HydraulicTensor {
        k_min: 0.01,
        k_max: 1.0,
        theta: 0.0,
    }
}

fn build(n: usize, theta: f64) -> Result<(Mesh, Spaces, SystemOperators), String> {
    let mesh = build_structured(Default::default(), n).map_err(|e| e.to_string())?;
    let spaces = Spaces::build(&mesh, PressureKind::Q1);
    let k = HydraulicTensor {
        theta,
        ..reference_tensor()
    };
    let ops = assemble_operators(&mesh, &spaces, &reference_params(), &k, &QuadOrders::default())
        .map_err(|e| e.to_string())?;
    Ok((mesh, spaces, ops))
}

fn check_operator_symmetry() -> CheckResult {
    for theta in [0.0, 0.4] {
        let (_, _, ops) = build(2, theta)?;
        let rel = ops.b_mat.max_asymmetry() / ops.b_mat.max_abs();
        if rel > 1e-12 {
            return Err(format!(
                "relative asymmetry {rel:.3e} at tensor angle {theta}"
            ));
        }
    }
    Ok(())
}

fn check_mass_bitwise_symmetry() -> CheckResult {
    let (_, _, ops) = build(2, 0.3)?;
    if ops.mass.max_asymmetry() != 0.0 {
        return Err(format!(
            "mass asymmetry {:.3e}",
            ops.mass.max_asymmetry()
        ));
    }
    if ops.pressure_mass.max_asymmetry() != 0.0 {
        return Err(format!(
            "pressure mass asymmetry {:.3e}",
            ops.pressure_mass.max_asymmetry()
        ));
    }
    Ok(())
}

fn check_coupling_exact_skewness() -> CheckResult {
    let (_, _, ops) = build(2, 0.0)?;
    let defect = skewness_defect(&ops.c_i);
    if defect != 0.0 {
        return Err(format!("skewness defect {defect:.3e}"));
    }
    Ok(())
}

fn check_coupling_vanishes_on_diagonal() -> CheckResult {
    let (_, spaces, ops) = build(2, 0.0)?;
    let n = spaces.layout.n_w();
    let mut rng = StdRng::seed_from_u64(3);
    let scale = ops.c_i.max_abs();
    for _ in 0..20 {
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cz = ops.c_i.mul_vec(&z);
        let quad: f64 = z.iter().zip(&cz).map(|(a, b)| a * b).sum();
        let bound = 1e-12 * scale * z.iter().map(|v| v * v).sum::<f64>();
        if quad.abs() > bound {
            return Err(format!("z'Cz = {quad:.3e} exceeds {bound:.3e}"));
        }
    }
    Ok(())
}

fn check_operator_coercivity_floor() -> CheckResult {
    let (_, spaces, ops) = build(2, 0.3)?;
    let k = reference_tensor();
    let floor = k.k_min / k.k_max;
    let n = spaces.layout.n_w();
    let mut rng = StdRng::seed_from_u64(11);
    for trial in 0..100 {
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bz = ops.b_mat.mul_vec(&z);
        let energy: f64 = z.iter().zip(&bz).map(|(a, b)| a * b).sum();
        let gz = ops.grad_gram.mul_vec(&z);
        let seminorm: f64 = z.iter().zip(&gz).map(|(a, b)| a * b).sum();
        if energy < floor * seminorm - 1e-10 {
            return Err(format!(
                "trial {trial}: energy {energy:.6e} below floor {:.6e}",
                floor * seminorm
            ));
        }
    }
    Ok(())
}

fn check_three_level_derivative_quadratic_exact() -> CheckResult {
    let f = |t: f64| 1.7 * t * t - 0.3 * t + 2.0;
    let df = |t: f64| 3.4 * t - 0.3;
    for &(t, s) in &[(1.0, 0.25), (0.37, 0.01), (5.0, 1.5)] {
        let d = bdf2_time_derivative(f(t), f(t - s), f(t - 2.0 * s), s);
        if (d - df(t)).abs() > 1e-13 * (1.0 + df(t).abs()) {
            return Err(format!("t = {t}, step = {s}: got {d}, want {}", df(t)));
        }
    }
    Ok(())
}

fn check_scheme_recurrence_frozen_values() -> CheckResult {
    let w = scheme_weights(Scheme::Bdf2, 0.1);
    let w2 = (w.hist[0] + w.hist[1]) / (1.0 + w.lead);
    if (w2 - 0.9375).abs() > 1e-15 {
        return Err(format!("three-level scalar update {w2}, want 0.9375"));
    }
    let b = scheme_weights(Scheme::BackwardEuler, 0.1);
    let w1 = b.hist[0] / (1.0 + b.lead);
    if (w1 - 1.0 / 1.1).abs() > 1e-15 {
        return Err(format!("reference scalar update {w1}, want {}", 1.0 / 1.1));
    }
    Ok(())
}

fn check_march_divergence_residual() -> CheckResult {
    let (mesh, spaces, ops) = build(2, 0.0)?;
    let p = reference_params();
    let problem = ManufacturedSolution::new(p, reference_tensor());
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
    let out = tr.run(&problem).map_err(|e| e.to_string())?;
    for s in &out.steps {
        if s.div_residual > 1e-9 {
            return Err(format!(
                "step {}: divergence residual {:.3e}",
                s.n, s.div_residual
            ));
        }
    }
    Ok(())
}

fn oracle_meshes() -> Result<Vec<Mesh>, String> {
    let wide = Geometry {
        fluid: Rect {
            x_min: 0.0,
            x_max: 2.0,
            y_min: 1.0,
            y_max: 2.0,
        },
        porous: Rect {
            x_min: 0.0,
            x_max: 2.0,
            y_min: 0.0,
            y_max: 1.0,
        },
        interface_y: 1.0,
    };
    Ok(vec![
        build_structured(Default::default(), 1).map_err(|e| e.to_string())?,
        build_structured(wide, 1).map_err(|e| e.to_string())?,
    ])
}

fn compare_to_oracle(mesh: &Mesh) -> CheckResult {
    let p = reference_params();
    let k = reference_tensor();
    let spaces = Spaces::build(mesh, PressureKind::Q1);
    let ops = assemble_operators(mesh, &spaces, &p, &k, &QuadOrders::default())
        .map_err(|e| e.to_string())?;
    let o = oracle::assemble_blocks(mesh);
    let pv = oracle::match_dofs(&o.vel_coords, &spaces.velocity.coords);
    let ph = oracle::match_dofs(&o.head_coords, &spaces.head.coords);
    let pp = oracle::match_dofs(&o.pressure_coords, &spaces.pressure.q1.coords);
    let (hw_coords, hw) = oracle::head_stiffness_weighted(mesh, k.matrix());
    let phw = oracle::match_dofs(&hw_coords, &spaces.head.coords);

    let l = spaces.layout;
    let nv = l.n_vcomp;
    let nh = spaces.head.n_dofs;
    let np = spaces.layout.n_pressure;
    let eta = p.eta;
    let rho_g = p.rho_g();
    let tau = mesh.geometry.interface_tangent();
    let slip = eta * k.slip_weight(p.alpha, tau);

    let mut worst: (f64, &str) = (0.0, "");
    let mut record = |diff: f64, what: &'static str| {
        if diff > worst.0 {
            worst = (diff, what);
        }
    };

    // Everything below walks the full dense index space in both routes, so
    // spurious extra entries are caught as well as wrong values.
    for gi in 0..l.n_w() {
        let (ci, i) = if gi < nv {
            (0, gi)
        } else if gi < 2 * nv {
            (1, gi - nv)
        } else {
            (2, gi - 2 * nv)
        };
        for gj in 0..l.n_w() {
            let (cj, j) = if gj < nv {
                (0, gj)
            } else if gj < 2 * nv {
                (1, gj - nv)
            } else {
                (2, gj - 2 * nv)
            };
            let mass_ref = if ci == cj && ci < 2 {
                eta * o.vel_mass.get(pv[i], pv[j])
            } else if ci == 2 && cj == 2 {
                rho_g * p.s0 * o.head_mass.get(ph[i], ph[j])
            } else {
                0.0
            };
            record((ops.mass.get(gi, gj) - mass_ref).abs(), "mass");

            let b_ref = if ci == cj && ci < 2 {
                let mut v = eta * p.nu * o.vel_stiff.get(pv[i], pv[j]);
                if ci == 0 {
                    v += slip * o.trace_vv.get(pv[i], pv[j]);
                }
                v
            } else if ci == 2 && cj == 2 {
                rho_g * hw.get(phw[i], phw[j])
            } else {
                0.0
            };
            record((ops.b_mat.get(gi, gj) - b_ref).abs(), "form");

            let c_ref = if ci == 1 && cj == 2 {
                -eta * rho_g * o.trace_vh.get(pv[i], ph[j])
            } else if ci == 2 && cj == 1 {
                eta * rho_g * o.trace_vh.get(pv[j], ph[i])
            } else {
                0.0
            };
            record((ops.c_i.get(gi, gj) - c_ref).abs(), "coupling");

            let g_ref = if ci == cj && ci < 2 {
                eta * p.nu * o.vel_stiff.get(pv[i], pv[j])
            } else if ci == 2 && cj == 2 {
                rho_g * k.k_max * o.head_stiff.get(ph[i], ph[j])
            } else {
                0.0
            };
            record((ops.grad_gram.get(gi, gj) - g_ref).abs(), "gradient gram");
        }
    }
    for q in 0..np {
        for j in 0..nv {
            let dx = -eta * o.div_x.get(pp[q], pv[j]);
            let dy = -eta * o.div_y.get(pp[q], pv[j]);
            record((ops.bdiv.get(q, l.velocity(0, j)) - dx).abs(), "divergence");
            record((ops.bdiv.get(q, l.velocity(1, j)) - dy).abs(), "divergence");
        }
        for j in 0..nh {
            record(ops.bdiv.get(q, l.head(j)).abs(), "divergence");
        }
        record((ops.mean_vec[q] - o.mean[pp[q]]).abs(), "mean vector");
    }

    let scale = ops.b_mat.max_abs().max(ops.mass.max_abs()).max(1.0);
    if worst.0 > 1e-12 * scale {
        return Err(format!(
            "{} block differs from the closed-form route by {:.3e} ({} cells)",
            worst.1,
            worst.0,
            mesh.cell_count(Subdomain::Fluid) + mesh.cell_count(Subdomain::Porous)
        ));
    }
    Ok(())
}

fn check_assembly_matches_closed_form_oracle() -> CheckResult {
    for mesh in oracle_meshes()? {
        compare_to_oracle(&mesh)?;
    }
    Ok(())
}

fn check_sparse_lu_matches_dense_solve() -> CheckResult {
    let n = 500;
    let mut rng = StdRng::seed_from_u64(42);
    let mut trips = Vec::new();
    for i in 0..n {
        trips.push((i, i, 20.0 + rng.gen_range(0.0..1.0)));
        for off in 1..=5usize {
            if i + off < n {
                trips.push((i, i + off, rng.gen_range(-1.5..1.5)));
                trips.push((i + off, i, rng.gen_range(-1.5..1.5)));
            }
        }
    }
    let a = CsrMatrix::from_triplets(n, n, &trips).map_err(|e| e.to_string())?;
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let lu = SparseLu::factorize(&a).map_err(|e| e.to_string())?;
    let xs = lu.solve_checked(&a, &b).map_err(|e| e.to_string())?;
    let xd = dense_solve(&DenseMatrix::from_csr(&a), &b).map_err(|e| e.to_string())?;
    let diff = xs
        .iter()
        .zip(&xd)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0f64, f64::max);
    if diff > 1e-9 {
        return Err(format!("solution routes differ by {diff:.3e} at n = {n}"));
    }
    Ok(())
}

fn check_stable_pair_infsup_uniform() -> CheckResult {
    let p = reference_params();
    let mut betas = Vec::new();
    for n in [2usize, 4, 8] {
        let (_, _, ops) = build(n, 0.0)?;
        betas.push(infsup_estimate(&ops, &p).map_err(|e| e.to_string())?);
    }
    let max = betas.iter().cloned().fold(0.0f64, f64::max);
    let min = betas.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        return Err(format!("estimate collapsed: {betas:?}"));
    }
    let variation = (max - min) / max;
    if variation >= 0.25 {
        return Err(format!("variation {variation:.3} across {betas:?}"));
    }
    Ok(())
}

fn check_equal_order_pair_infsup_degenerates() -> CheckResult {
    let mesh2 = build_structured(Default::default(), 2).map_err(|e| e.to_string())?;
    let mesh6 = build_structured(Default::default(), 6).map_err(|e| e.to_string())?;
    let b2 = infsup_equal_order(&mesh2).map_err(|e| e.to_string())?;
    let b6 = infsup_equal_order(&mesh6).map_err(|e| e.to_string())?;
    if b6 < 0.5 * b2 || b6 < 1e-6 {
        Ok(())
    } else {
        Err(format!("no degeneration: {b2:.4e} -> {b6:.4e}"))
    }
}

/// Weighted distance of the predictor fields to the reference fields at the
/// predicted time, by quadrature.
pub fn predictor_field_error(
    mesh: &Mesh,
    params: &PhysicalParams,
    problem: &dyn ProblemData,
    sigma: f64,
) -> f64 {
    let (vel_bar, head_bar) = taylor_predictor(problem, params, sigma);
    let rule = gauss_2d(4);
    let mut err2 = 0.0;
    for c in mesh.cells_of(Subdomain::Fluid) {
        let map = CellMap::from_cell(mesh, c);
        for (q, &[xi, eta_r]) in rule.points.iter().enumerate() {
            let wd = rule.weights[q] * map.det_jacobian(xi, eta_r);
            let pt = map.to_physical(xi, eta_r);
            let vb = vel_bar(pt);
            let ve = problem.velocity(pt, sigma);
            err2 += params.eta * wd * ((vb[0] - ve[0]).powi(2) + (vb[1] - ve[1]).powi(2));
        }
    }
    let w_head = params.rho_g() * params.s0;
    for c in mesh.cells_of(Subdomain::Porous) {
        let map = CellMap::from_cell(mesh, c);
        for (q, &[xi, eta_r]) in rule.points.iter().enumerate() {
            let wd = rule.weights[q] * map.det_jacobian(xi, eta_r);
            let pt = map.to_physical(xi, eta_r);
            let hb = head_bar(pt);
            let he = problem.head(pt, sigma);
            err2 += w_head * wd * (hb - he) * (hb - he);
        }
    }
    err2.max(0.0).sqrt()
}

fn check_predictor_error_quarters_when_step_halves() -> CheckResult {
    let mesh = build_structured(Default::default(), 8).map_err(|e| e.to_string())?;
    let p = reference_params();
    let problem = ManufacturedSolution::new(p, reference_tensor());
    let e1 = predictor_field_error(&mesh, &p, &problem, 0.25);
    let e2 = predictor_field_error(&mesh, &p, &problem, 0.125);
    let ratio = e1 / e2;
    if !(3.4..=4.6).contains(&ratio) {
        return Err(format!("ratio {ratio:.3} outside [3.4, 4.6]"));
    }
    Ok(())
}

fn check_free_decay_norm_bounded() -> CheckResult {
    let (_, spaces, ops) = build(8, 0.0)?;
    let out = free_decay(&spaces, &ops, 0.5, 10.0, 2024).map_err(|e| e.to_string())?;
    if out.max_norm > 2.0 * out.init_norm {
        return Err(format!(
            "norm grew: start {:.4e}, peak {:.4e}",
            out.init_norm, out.max_norm
        ));
    }
    Ok(())
}

fn check_constrained_rows_are_identity() -> CheckResult {
    let (_, _, ops) = build(1, 0.0)?;
    let raw = system_matrix(&ops, 0.2).map_err(|e| e.to_string())?;
    let a = crate::forms::constrain_matrix(&raw, &ops.dirichlet).map_err(|e| e.to_string())?;
    let mut constrained = vec![false; a.nrows()];
    for &d in &ops.dirichlet {
        constrained[d] = true;
    }
    for (i, j, v) in a.entries() {
        if constrained[i] || constrained[j] {
            let expect = if i == j { 1.0 } else { 0.0 };
            if v != expect {
                return Err(format!("entry ({i}, {j}) = {v} after constraining"));
            }
        }
    }
    for &d in &ops.dirichlet {
        if a.get(d, d) != 1.0 {
            return Err(format!("missing unit diagonal at {d}"));
        }
    }
    Ok(())
}

fn check_mean_vector_integrates_area() -> CheckResult {
    for (mesh, area) in oracle_meshes()?.into_iter().zip([1.0, 2.0]) {
        let spaces = Spaces::build(&mesh, PressureKind::Q1);
        let ops = assemble_operators(
            &mesh,
            &spaces,
            &reference_params(),
            &reference_tensor(),
            &QuadOrders::default(),
        )
        .map_err(|e| e.to_string())?;
        let total: f64 = ops.mean_vec.iter().sum();
        if (total - area).abs() > 1e-12 {
            return Err(format!("constant integrates to {total}, want {area}"));
        }
    }
    Ok(())
}

pub fn all_checks() -> Vec<PropertyCheck> {
    vec![
        PropertyCheck {
            name: "operator_symmetry",
            run: check_operator_symmetry,
        },
        PropertyCheck {
            name: "mass_bitwise_symmetry",
            run: check_mass_bitwise_symmetry,
        },
        PropertyCheck {
            name: "coupling_exact_skewness",
            run: check_coupling_exact_skewness,
        },
        PropertyCheck {
            name: "coupling_vanishes_on_diagonal",
            run: check_coupling_vanishes_on_diagonal,
        },
        PropertyCheck {
            name: "operator_coercivity_floor",
            run: check_operator_coercivity_floor,
        },
        PropertyCheck {
            name: "three_level_derivative_quadratic_exact",
            run: check_three_level_derivative_quadratic_exact,
        },
        PropertyCheck {
            name: "scheme_recurrence_frozen_values",
            run: check_scheme_recurrence_frozen_values,
        },
        PropertyCheck {
            name: "march_divergence_residual",
            run: check_march_divergence_residual,
        },
        PropertyCheck {
            name: "assembly_matches_closed_form_oracle",
            run: check_assembly_matches_closed_form_oracle,
        },
        PropertyCheck {
            name: "sparse_lu_matches_dense_solve",
            run: check_sparse_lu_matches_dense_solve,
        },
        PropertyCheck {
            name: "stable_pair_infsup_uniform",
            run: check_stable_pair_infsup_uniform,
        },
        PropertyCheck {
            name: "equal_order_pair_infsup_degenerates",
            run: check_equal_order_pair_infsup_degenerates,
        },
        PropertyCheck {
            name: "predictor_error_quarters_when_step_halves",
            run: check_predictor_error_quarters_when_step_halves,
        },
        PropertyCheck {
            name: "free_decay_norm_bounded",
            run: check_free_decay_norm_bounded,
        },
        PropertyCheck {
            name: "constrained_rows_are_identity",
            run: check_constrained_rows_are_identity,
        },
        PropertyCheck {
            name: "mean_vector_integrates_area",
            run: check_mean_vector_integrates_area,
        },
    ]
}
