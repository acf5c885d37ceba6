//! Dual-route check: every production operator block is rebuilt from the
//! closed-form per-cell integrals and compared entry by entry over the full
//! index space, so missing entries are caught in both directions.

// The dense walk indexes parallel row/column spaces on purpose.
#![allow(clippy::needless_range_loop)]

use stokes_darcy::forms::{
    assemble_operators, HydraulicTensor, PhysicalParams, PressureKind, QuadOrders, Spaces,
};
use stokes_darcy::mesh::{build_structured, Geometry, Mesh, Rect};
use stokes_darcy::oracle;

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

fn wide_geometry() -> Geometry {
    Geometry {
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
    }
}

fn deep_geometry() -> Geometry {
    Geometry {
        fluid: Rect {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 1.0,
            y_max: 2.0,
        },
        porous: Rect {
            x_min: 0.0,
            x_max: 1.0,
            y_min: -1.0,
            y_max: 1.0,
        },
        interface_y: 1.0,
    }
}

/// Walks the whole dense index space of every block and returns the largest
/// entry difference between the production route and the composed oracle.
fn worst_gap(mesh: &Mesh, p: &PhysicalParams, k: &HydraulicTensor) -> (f64, &'static str, f64) {
    let spaces = Spaces::build(mesh, PressureKind::Q1);
    let ops = assemble_operators(mesh, &spaces, p, k, &QuadOrders::default()).unwrap();
    let o = oracle::assemble_blocks(mesh);
    let pv = oracle::match_dofs(&o.vel_coords, &spaces.velocity.coords);
    let ph = oracle::match_dofs(&o.head_coords, &spaces.head.coords);
    let pp = oracle::match_dofs(&o.pressure_coords, &spaces.pressure.q1.coords);
    let (hw_coords, hw) = oracle::head_stiffness_weighted(mesh, k.matrix());
    let phw = oracle::match_dofs(&hw_coords, &spaces.head.coords);

    let l = spaces.layout;
    let nv = l.n_vcomp;
    let eta = p.eta;
    let rho_g = p.rho_g();
    let slip = eta * k.slip_weight(p.alpha, mesh.geometry.interface_tangent());

    let mut worst = (0.0f64, "none");
    let mut push = |d: f64, what: &'static str| {
        if d > worst.0 {
            worst = (d, what);
        }
    };
    let decode = |gi: usize| {
        if gi < nv {
            (0usize, gi)
        } else if gi < 2 * nv {
            (1, gi - nv)
        } else {
            (2, gi - 2 * nv)
        }
    };

    for gi in 0..l.n_w() {
        let (ci, i) = decode(gi);
        for gj in 0..l.n_w() {
            let (cj, j) = decode(gj);
            let mass = if ci == cj && ci < 2 {
                eta * o.vel_mass.get(pv[i], pv[j])
            } else if ci == 2 && cj == 2 {
                rho_g * p.s0 * o.head_mass.get(ph[i], ph[j])
            } else {
                0.0
            };
            push((ops.mass.get(gi, gj) - mass).abs(), "mass");

            let form = if ci == cj && ci < 2 {
                eta * p.nu * o.vel_stiff.get(pv[i], pv[j])
                    + if ci == 0 {
                        slip * o.trace_vv.get(pv[i], pv[j])
                    } else {
                        0.0
                    }
            } else if ci == 2 && cj == 2 {
                rho_g * hw.get(phw[i], phw[j])
            } else {
                0.0
            };
            push((ops.b_mat.get(gi, gj) - form).abs(), "energy form");

            let coupling = if ci == 1 && cj == 2 {
                -eta * rho_g * o.trace_vh.get(pv[i], ph[j])
            } else if ci == 2 && cj == 1 {
                eta * rho_g * o.trace_vh.get(pv[j], ph[i])
            } else {
                0.0
            };
            push((ops.c_i.get(gi, gj) - coupling).abs(), "interface coupling");

            let gram = if ci == cj && ci < 2 {
                eta * p.nu * o.vel_stiff.get(pv[i], pv[j])
            } else if ci == 2 && cj == 2 {
                rho_g * k.k_max * o.head_stiff.get(ph[i], ph[j])
            } else {
                0.0
            };
            push((ops.grad_gram.get(gi, gj) - gram).abs(), "gradient gram");
        }
    }
    for q in 0..l.n_pressure {
        for j in 0..nv {
            let dx = -eta * o.div_x.get(pp[q], pv[j]);
            let dy = -eta * o.div_y.get(pp[q], pv[j]);
            push((ops.bdiv.get(q, l.velocity(0, j)) - dx).abs(), "divergence");
            push((ops.bdiv.get(q, l.velocity(1, j)) - dy).abs(), "divergence");
        }
        for j in 0..spaces.head.n_dofs {
            push(ops.bdiv.get(q, l.head(j)).abs(), "divergence");
        }
        push((ops.mean_vec[q] - o.mean[pp[q]]).abs(), "mean vector");
    }

    let scale = ops.b_mat.max_abs().max(ops.mass.max_abs()).max(1.0);
    (worst.0, worst.1, scale)
}

#[test]
fn unit_boxes_agree_with_oracle() {
    let mesh = build_structured(Default::default(), 1).unwrap();
    let (gap, what, scale) = worst_gap(&mesh, &params(), &tensor(0.0));
    assert!(gap <= 1e-12 * scale, "{what} differs by {gap:.3e}");
}

#[test]
fn wide_domain_agrees_with_oracle() {
    let mesh = build_structured(wide_geometry(), 1).unwrap();
    let (gap, what, scale) = worst_gap(&mesh, &params(), &tensor(0.0));
    assert!(gap <= 1e-12 * scale, "{what} differs by {gap:.3e}");
}

#[test]
fn deep_porous_layer_agrees_with_oracle() {
    let mesh = build_structured(deep_geometry(), 1).unwrap();
    let (gap, what, scale) = worst_gap(&mesh, &params(), &tensor(0.0));
    assert!(gap <= 1e-12 * scale, "{what} differs by {gap:.3e}");
}

#[test]
fn rotated_conductivity_agrees_with_oracle() {
    let mesh = build_structured(Default::default(), 1).unwrap();
    let (gap, what, scale) = worst_gap(&mesh, &params(), &tensor(0.5));
    assert!(gap <= 1e-12 * scale, "{what} differs by {gap:.3e}");
}

#[test]
fn refined_mesh_agrees_with_oracle() {
    let mesh = build_structured(Default::default(), 2).unwrap();
    let (gap, what, scale) = worst_gap(&mesh, &params(), &tensor(0.3));
    assert!(gap <= 1e-12 * scale, "{what} differs by {gap:.3e}");
}

fn tensor(theta: f64) -> HydraulicTensor {
    HydraulicTensor {
        k_min: 0.01,
        k_max: 1.0,
        theta,
    }
}
