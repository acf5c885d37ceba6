//! Closed-form reference fields on the default two-layer geometry: a
//! divergence-free velocity, a zero-mean pressure, and a head that vanishes
//! on the outer porous boundary, all sharing a cos(t) time factor so the
//! initial time derivative vanishes. The body force and source are derived
//! from the interior equations; the interface residuals of the triple feed
//! the consistency load.

use std::f64::consts::PI;

use crate::forms::{HydraulicTensor, InterfaceDefect, PhysicalParams, ProblemData};
use crate::mesh::Point;

#[derive(Debug, Clone, Copy)]
pub struct ManufacturedSolution {
    pub params: PhysicalParams,
    pub k: HydraulicTensor,
}

/// Shared axial factor 2 - pi sin(pi x); integrates to zero over (0,1).
fn axial(x: f64) -> f64 {
    2.0 - PI * (PI * x).sin()
}

fn axial_d(x: f64) -> f64 {
    -PI * PI * (PI * x).cos()
}

fn axial_dd(x: f64) -> f64 {
    PI * PI * PI * (PI * x).sin()
}

/// Vertical factor of the head, zero at y = 0 and one at y = 1.
fn vert(y: f64) -> f64 {
    1.0 - y - (PI * y).cos()
}

fn vert_d(y: f64) -> f64 {
    -1.0 + PI * (PI * y).sin()
}

fn vert_dd(y: f64) -> f64 {
    PI * PI * (PI * y).cos()
}

impl ManufacturedSolution {
    pub fn new(params: PhysicalParams, k: HydraulicTensor) -> Self {
        ManufacturedSolution { params, k }
    }

    pub fn velocity_t(&self, p: Point, t: f64) -> [f64; 2] {
        let s = -t.sin();
        let (x, y) = (p.x, p.y);
        [
            (x * x * (y - 1.0) * (y - 1.0) + y) * s,
            (2.0 / 3.0 * x * (1.0 - y).powi(3) + axial(x)) * s,
        ]
    }

    pub fn head_t(&self, p: Point, t: f64) -> f64 {
        -t.sin() * axial(p.x) * vert(p.y)
    }

    /// grad[i][j] = d v_i / d x_j.
    pub fn velocity_grad(&self, p: Point, t: f64) -> [[f64; 2]; 2] {
        let c = t.cos();
        let (x, y) = (p.x, p.y);
        [
            [
                2.0 * x * (y - 1.0) * (y - 1.0) * c,
                (2.0 * x * x * (y - 1.0) + 1.0) * c,
            ],
            [
                (2.0 / 3.0 * (1.0 - y).powi(3) + axial_d(x)) * c,
                -2.0 * x * (1.0 - y) * (1.0 - y) * c,
            ],
        ]
    }

    pub fn head_grad(&self, p: Point, t: f64) -> [f64; 2] {
        let c = t.cos();
        [axial_d(p.x) * vert(p.y) * c, axial(p.x) * vert_d(p.y) * c]
    }

    pub fn head_hessian(&self, p: Point, t: f64) -> [[f64; 2]; 2] {
        let c = t.cos();
        let (x, y) = (p.x, p.y);
        let xy = axial_d(x) * vert_d(y) * c;
        [
            [axial_dd(x) * vert(y) * c, xy],
            [xy, axial(x) * vert_dd(y) * c],
        ]
    }
}

impl ProblemData for ManufacturedSolution {
    fn velocity(&self, p: Point, t: f64) -> [f64; 2] {
        let c = t.cos();
        let (x, y) = (p.x, p.y);
        [
            (x * x * (y - 1.0) * (y - 1.0) + y) * c,
            (2.0 / 3.0 * x * (1.0 - y).powi(3) + axial(x)) * c,
        ]
    }

    fn pressure(&self, p: Point, t: f64) -> f64 {
        axial(p.x) * (0.5 * PI * p.y).sin() * t.cos()
    }

    fn head(&self, p: Point, t: f64) -> f64 {
        axial(p.x) * vert(p.y) * t.cos()
    }

    fn forcing(&self, p: Point, t: f64) -> [f64; 2] {
        let vt = self.velocity_t(p, t);
        let lap = self.velocity_laplacian(p, t);
        let pg = self.pressure_gradient(p, t);
        [
            vt[0] - self.params.nu * lap[0] + pg[0],
            vt[1] - self.params.nu * lap[1] + pg[1],
        ]
    }

    fn source(&self, p: Point, t: f64) -> f64 {
        self.params.s0 * self.head_t(p, t) - self.head_flux_div(p, t)
    }

    fn velocity_laplacian(&self, p: Point, t: f64) -> [f64; 2] {
        let c = t.cos();
        let (x, y) = (p.x, p.y);
        [
            (2.0 * (y - 1.0) * (y - 1.0) + 2.0 * x * x) * c,
            (axial_dd(x) + 4.0 * x * (1.0 - y)) * c,
        ]
    }

    fn pressure_gradient(&self, p: Point, t: f64) -> [f64; 2] {
        let c = t.cos();
        let (x, y) = (p.x, p.y);
        [
            axial_d(x) * (0.5 * PI * y).sin() * c,
            axial(x) * 0.5 * PI * (0.5 * PI * y).cos() * c,
        ]
    }

    fn head_flux_div(&self, p: Point, t: f64) -> f64 {
        let h = self.head_hessian(p, t);
        let km = self.k.matrix();
        km[0][0] * h[0][0] + 2.0 * km[0][1] * h[0][1] + km[1][1] * h[1][1]
    }

    fn interface_defect(&self, x: f64, t: f64) -> InterfaceDefect {
        let p = Point { x, y: 1.0 };
        let n_f = [0.0, -1.0];
        let n_p = [0.0, 1.0];
        let tau = [1.0, 0.0];
        let v = self.velocity(p, t);
        let g = self.velocity_grad(p, t);
        let hg = self.head_grad(p, t);
        let km = self.k.matrix();
        let flux = [
            km[0][0] * hg[0] + km[0][1] * hg[1],
            km[1][0] * hg[0] + km[1][1] * hg[1],
        ];
        let r_mass = (v[0] * n_f[0] + v[1] * n_f[1])
            - (flux[0] * n_p[0] + flux[1] * n_p[1]) / self.params.eta;
        let gn = [
            g[0][0] * n_f[0] + g[0][1] * n_f[1],
            g[1][0] * n_f[0] + g[1][1] * n_f[1],
        ];
        let r_force = self.pressure(p, t) - self.params.nu * (n_f[0] * gn[0] + n_f[1] * gn[1])
            - self.params.rho_g() * self.head(p, t);
        let r_bjs = self.params.nu * (tau[0] * gn[0] + tau[1] * gn[1])
            + self.k.slip_weight(self.params.alpha, tau) * (v[0] * tau[0] + v[1] * tau[1]);
        InterfaceDefect {
            r_mass,
            r_force,
            r_bjs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn baseline() -> ManufacturedSolution {
        ManufacturedSolution::new(
            PhysicalParams {
                nu: 0.1,
                eta: 0.01,
                rho: 1000.0,
                g: 10.0,
                s0: 1e-3,
                alpha: 1.0,
            },
            HydraulicTensor {
                k_min: 0.01,
                k_max: 1.0,
                theta: 0.0,
            },
        )
    }

    fn rotated() -> ManufacturedSolution {
        let mut m = baseline();
        m.k.theta = 0.6;
        m
    }

    fn sample_points(rng: &mut StdRng, n: usize) -> Vec<(Point, f64)> {
        (0..n)
            .map(|_| {
                (
                    Point {
                        x: rng.gen_range(0.05..0.95),
                        y: rng.gen_range(0.05..1.95),
                    },
                    rng.gen_range(0.0..2.0),
                )
            })
            .collect()
    }

    #[test]
    fn pinned_point_values() {
        let m = baseline();
        let p = Point { x: 0.0, y: 1.0 };
        let v = m.velocity(p, 0.0);
        assert!((v[0] - 1.0).abs() < 1e-15);
        assert!((v[1] - 2.0).abs() < 1e-15);
        assert!((m.pressure(p, 0.0) - 2.0).abs() < 1e-15);
        assert!(m.head(Point { x: 0.0, y: 0.0 }, 0.0).abs() < 1e-15);
        // The x body force at this point reduces to the pressure slope.
        let f = m.forcing(p, 0.0);
        assert!((f[0] + PI * PI).abs() < 1e-12);
    }

    #[test]
    fn velocity_is_divergence_free() {
        let mut rng = StdRng::seed_from_u64(3);
        let m = baseline();
        for (p, t) in sample_points(&mut rng, 50) {
            let g = m.velocity_grad(p, t);
            assert!((g[0][0] + g[1][1]).abs() < 1e-13, "at {p:?}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = StdRng::seed_from_u64(4);
        let m = rotated();
        let h = 1e-6;
        for (p, t) in sample_points(&mut rng, 20) {
            let (x, y) = (p.x, p.y);
            let px = |d: f64| Point { x: x + d, y };
            let py = |d: f64| Point { x, y: y + d };

            let g = m.velocity_grad(p, t);
            for comp in 0..2 {
                let dx = (m.velocity(px(h), t)[comp] - m.velocity(px(-h), t)[comp]) / (2.0 * h);
                let dy = (m.velocity(py(h), t)[comp] - m.velocity(py(-h), t)[comp]) / (2.0 * h);
                assert!((g[comp][0] - dx).abs() < 1e-6);
                assert!((g[comp][1] - dy).abs() < 1e-6);
            }

            let pg = m.pressure_gradient(p, t);
            let dx = (m.pressure(px(h), t) - m.pressure(px(-h), t)) / (2.0 * h);
            let dy = (m.pressure(py(h), t) - m.pressure(py(-h), t)) / (2.0 * h);
            assert!((pg[0] - dx).abs() < 1e-6);
            assert!((pg[1] - dy).abs() < 1e-6);

            let hgrad = m.head_grad(p, t);
            let dx = (m.head(px(h), t) - m.head(px(-h), t)) / (2.0 * h);
            let dy = (m.head(py(h), t) - m.head(py(-h), t)) / (2.0 * h);
            assert!((hgrad[0] - dx).abs() < 1e-6);
            assert!((hgrad[1] - dy).abs() < 1e-6);

            let dt = 1e-6;
            let vt = m.velocity_t(p, t);
            for comp in 0..2 {
                let fd = (m.velocity(p, t + dt)[comp] - m.velocity(p, t - dt)[comp]) / (2.0 * dt);
                assert!((vt[comp] - fd).abs() < 1e-6);
            }
            let fd = (m.head(p, t + dt) - m.head(p, t - dt)) / (2.0 * dt);
            assert!((m.head_t(p, t) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn second_derivatives_match_finite_differences() {
        let mut rng = StdRng::seed_from_u64(5);
        let m = rotated();
        let h = 1e-5;
        for (p, t) in sample_points(&mut rng, 10) {
            let (x, y) = (p.x, p.y);
            let lap = m.velocity_laplacian(p, t);
            for comp in 0..2 {
                let f = |px: f64, py: f64| m.velocity(Point { x: px, y: py }, t)[comp];
                let fd = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h)
                    + (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
                assert!((lap[comp] - fd).abs() < 1e-4, "component {comp} at {p:?}");
            }

            let hess = m.head_hessian(p, t);
            let hx = |d: f64| m.head_grad(Point { x: x + d, y }, t);
            let hy = |d: f64| m.head_grad(Point { x, y: y + d }, t);
            let fd_xx = (hx(h)[0] - hx(-h)[0]) / (2.0 * h);
            let fd_xy = (hy(h)[0] - hy(-h)[0]) / (2.0 * h);
            let fd_yy = (hy(h)[1] - hy(-h)[1]) / (2.0 * h);
            assert!((hess[0][0] - fd_xx).abs() < 1e-5);
            assert!((hess[0][1] - fd_xy).abs() < 1e-5);
            assert!((hess[1][1] - fd_yy).abs() < 1e-5);
        }
    }

    #[test]
    fn flux_divergence_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(6);
        let m = rotated();
        let km = m.k.matrix();
        let h = 1e-5;
        let flux = |p: Point, t: f64| {
            let g = m.head_grad(p, t);
            [
                km[0][0] * g[0] + km[0][1] * g[1],
                km[1][0] * g[0] + km[1][1] * g[1],
            ]
        };
        for (p, t) in sample_points(&mut rng, 10) {
            let (x, y) = (p.x, p.y);
            let fd = (flux(Point { x: x + h, y }, t)[0] - flux(Point { x: x - h, y }, t)[0])
                / (2.0 * h)
                + (flux(Point { x, y: y + h }, t)[1] - flux(Point { x, y: y - h }, t)[1])
                    / (2.0 * h);
            assert!((m.head_flux_div(p, t) - fd).abs() < 1e-5);
        }
    }

    #[test]
    fn interface_residuals_reduce_to_closed_forms() {
        let m = baseline();
        for (x, t) in [(0.0, 0.0), (0.3, 0.4), (0.77, 1.2)] {
            let d = m.interface_defect(x, t);
            let a = axial(x) * t.cos();
            // k_min / eta = 1 makes the mass flux exactly continuous.
            assert!(d.r_mass.abs() < 1e-12, "at x={x}");
            let force = (1.0 - m.params.rho_g()) * a;
            assert!((d.r_force - force).abs() < 1e-9 * force.abs());
            let bjs = (m.params.alpha / m.k.k_max.sqrt() - m.params.nu) * t.cos();
            assert!((d.r_bjs - bjs).abs() < 1e-12);
        }
    }

    #[test]
    fn mass_defect_appears_when_conductivity_and_porosity_disagree() {
        let mut m = baseline();
        m.params.eta = 0.1;
        let x = 0.3;
        let t = 0.5;
        let d = m.interface_defect(x, t);
        let expected = (m.k.k_min / m.params.eta - 1.0) * axial(x) * t.cos();
        assert!(
            (d.r_mass - expected).abs() < 1e-12,
            "got {}, want {expected}",
            d.r_mass
        );
    }

    #[test]
    fn pressure_has_zero_mean_on_the_fluid_layer() {
        let m = baseline();
        let rule = crate::fem::gauss_2d(6);
        let mut total = 0.0;
        // Map the reference square onto the fluid layer.
        for (&[xi, eta], &w) in rule.points.iter().zip(&rule.weights) {
            let p = Point {
                x: 0.5 * (xi + 1.0),
                y: 1.0 + 0.5 * (eta + 1.0),
            };
            total += w * 0.25 * m.pressure(p, 0.7);
        }
        assert!(total.abs() < 1e-9, "mean {total}");
    }

    #[test]
    fn source_tracks_storativity() {
        let m = baseline();
        let p = Point { x: 0.4, y: 0.3 };
        let t = 0.9;
        let flux = m.head_flux_div(p, t);
        let got = m.source(p, t);
        assert!((got - (m.params.s0 * m.head_t(p, t) - flux)).abs() < 1e-14);
    }
}
