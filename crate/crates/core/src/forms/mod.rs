//! Physical parameters, discrete spaces, and the bilinear-form matrices of
//! the coupled problem.
//!
//! Unknown ordering in the W block: velocity x component, velocity y
//! component, hydraulic head. Pressure dofs and the scalar zero-mean
//! multiplier follow in the full saddle system.

mod assembly;
mod dirichlet;

pub use assembly::{
    assemble_interface_consistency_load, assemble_load, assemble_operators, QuadOrders,
};
pub use dirichlet::{boundary_values, constrain_matrix, constrained_rhs};

use crate::error::{Error, Result};
use crate::fem::{build_dofmap, DofMap, ElemKind};
use crate::linalg::CsrMatrix;
use crate::mesh::{Mesh, Point, Subdomain};

/// Fluid and porous medium constants. All strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Kinematic viscosity of the free fluid.
    pub nu: f64,
    /// Volumetric porosity.
    pub eta: f64,
    /// Fluid density.
    pub rho: f64,
    /// Gravitational acceleration.
    pub g: f64,
    /// Specific storativity of the porous layer.
    pub s0: f64,
    /// Slip coefficient of the tangential interface condition.
    pub alpha: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("nu", self.nu),
            ("eta", self.eta),
            ("rho", self.rho),
            ("g", self.g),
            ("s0", self.s0),
            ("alpha", self.alpha),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "parameter {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn rho_g(&self) -> f64 {
        self.rho * self.g
    }
}

/// Symmetric positive definite hydraulic conductivity, given by its
/// eigenvalues and the rotation of the principal axes. theta = 0 aligns
/// k_max with the x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydraulicTensor {
    pub k_min: f64,
    pub k_max: f64,
    pub theta: f64,
}

impl HydraulicTensor {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_min > 0.0) || !(self.k_max >= self.k_min) {
            return Err(Error::Config(format!(
                "conductivity eigenvalues must satisfy 0 < k_min <= k_max, got {} and {}",
                self.k_min, self.k_max
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.theta.sin_cos();
        let d = self.k_max - self.k_min;
        [
            [c * c * self.k_max + s * s * self.k_min, c * s * d],
            [c * s * d, s * s * self.k_max + c * c * self.k_min],
        ]
    }

    /// tau^T K tau for a unit tangent.
    pub fn tangential(&self, tau: [f64; 2]) -> f64 {
        let k = self.matrix();
        let kt = [
            k[0][0] * tau[0] + k[0][1] * tau[1],
            k[1][0] * tau[0] + k[1][1] * tau[1],
        ];
        tau[0] * kt[0] + tau[1] * kt[1]
    }

    /// Weight of the tangential slip term.
    pub fn slip_weight(&self, alpha: f64, tau: [f64; 2]) -> f64 {
        alpha / self.tangential(tau).sqrt()
    }
}

/// Interface residuals of a field triple that does not satisfy the coupling
/// conditions exactly; they feed the consistency load.
#[derive(Debug, Clone, Copy, Default)]
pub struct InterfaceDefect {
    /// v.n_f - (1/eta) (K grad phi).n_p
    pub r_mass: f64,
    /// (p - nu n'(grad v)n) - rho g phi
    pub r_force: f64,
    /// nu tau'(grad v)n + alpha/sqrt(tau'K tau) v.tau
    pub r_bjs: f64,
}

/// Everything the time stepping needs to know about the continuous problem:
/// exact traces for boundary and initial data, volumetric forcing, and the
/// pieces of the first-step Taylor predictor.
pub trait ProblemData {
    fn velocity(&self, p: Point, t: f64) -> [f64; 2];
    fn pressure(&self, p: Point, t: f64) -> f64;
    fn head(&self, p: Point, t: f64) -> f64;
    fn forcing(&self, p: Point, t: f64) -> [f64; 2];
    fn source(&self, p: Point, t: f64) -> f64;
    fn velocity_laplacian(&self, p: Point, t: f64) -> [f64; 2];
    fn pressure_gradient(&self, p: Point, t: f64) -> [f64; 2];
    /// div(K grad phi).
    fn head_flux_div(&self, p: Point, t: f64) -> f64;
    fn interface_defect(&self, x: f64, t: f64) -> InterfaceDefect;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureKind {
    Q1,
    /// Q1 enriched with cellwise constants; the first fluid cell's constant
    /// is pinned to zero to remove the redundancy with the Q1 constants.
    Q1Q0,
}

/// Pressure space on the fluid subdomain.
#[derive(Debug, Clone)]
pub struct PressureSpace {
    pub kind: PressureKind,
    pub q1: DofMap,
    pub q0: Option<DofMap>,
    pub n_dofs: usize,
}

impl PressureSpace {
    pub fn build(mesh: &Mesh, kind: PressureKind) -> Self {
        let q1 = build_dofmap(mesh, ElemKind::Q1, Subdomain::Fluid, false);
        let (q0, n_dofs) = match kind {
            PressureKind::Q1 => (None, q1.n_dofs),
            PressureKind::Q1Q0 => {
                let q0 = build_dofmap(mesh, ElemKind::Q0, Subdomain::Fluid, false);
                let n = q1.n_dofs + q0.n_dofs - 1;
                (Some(q0), n)
            }
        };
        PressureSpace {
            kind,
            q1,
            q0,
            n_dofs,
        }
    }

    /// Pressure dof ids and basis values on one fluid cell at a reference
    /// point. The pinned constant is omitted from both lists.
    pub fn cell_basis(&self, cell: usize, xi: f64, eta: f64) -> (Vec<usize>, Vec<f64>) {
        let mut ids = self.q1.cell_dofs[cell].clone();
        let mut vals = crate::fem::shape_values(ElemKind::Q1, xi, eta);
        if let Some(q0) = &self.q0 {
            let d = q0.cell_dofs[cell][0];
            if d > 0 {
                ids.push(self.q1.n_dofs + d - 1);
                vals.push(1.0);
            }
        }
        (ids, vals)
    }

    pub fn eval_on_cell(&self, cell: usize, xi: f64, eta: f64, coeffs: &[f64]) -> f64 {
        let (ids, vals) = self.cell_basis(cell, xi, eta);
        ids.iter().zip(&vals).map(|(&d, v)| coeffs[d] * v).sum()
    }
}

/// Index layout of the monolithic unknown vector:
/// [velocity x | velocity y | head | pressure | multiplier].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemLayout {
    pub n_vcomp: usize,
    pub n_head: usize,
    pub n_pressure: usize,
}

impl SystemLayout {
    pub fn vx(&self, d: usize) -> usize {
        debug_assert!(d < self.n_vcomp);
        d
    }

    pub fn vy(&self, d: usize) -> usize {
        debug_assert!(d < self.n_vcomp);
        self.n_vcomp + d
    }

    pub fn velocity(&self, comp: usize, d: usize) -> usize {
        debug_assert!(comp < 2);
        comp * self.n_vcomp + d
    }

    pub fn head(&self, d: usize) -> usize {
        debug_assert!(d < self.n_head);
        2 * self.n_vcomp + d
    }

    pub fn pressure(&self, d: usize) -> usize {
        debug_assert!(d < self.n_pressure);
        self.n_w() + d
    }

    pub fn multiplier(&self) -> usize {
        self.n_w() + self.n_pressure
    }

    /// Size of the evolving block (velocity components and head).
    pub fn n_w(&self) -> usize {
        2 * self.n_vcomp + self.n_head
    }

    pub fn n_total(&self) -> usize {
        self.n_w() + self.n_pressure + 1
    }
}

/// The discrete spaces of the coupled system on one mesh.
#[derive(Debug, Clone)]
pub struct Spaces {
    /// One scalar Q2 component on the fluid; used for both velocity
    /// components via the layout offsets.
    pub velocity: DofMap,
    pub head: DofMap,
    pub pressure: PressureSpace,
    pub layout: SystemLayout,
}

impl Spaces {
    pub fn build(mesh: &Mesh, pressure: PressureKind) -> Self {
        let velocity = build_dofmap(mesh, ElemKind::Q2, Subdomain::Fluid, true);
        let head = build_dofmap(mesh, ElemKind::Q2, Subdomain::Porous, true);
        let pressure = PressureSpace::build(mesh, pressure);
        let layout = SystemLayout {
            n_vcomp: velocity.n_dofs,
            n_head: head.n_dofs,
            n_pressure: pressure.n_dofs,
        };
        Spaces {
            velocity,
            head,
            pressure,
            layout,
        }
    }

    /// Global indices (into the W block) of all essentially constrained
    /// dofs, sorted.
    pub fn dirichlet_w(&self) -> Vec<usize> {
        let l = self.layout;
        let mut out = Vec::new();
        for &d in &self.velocity.dirichlet {
            out.push(l.vx(d));
        }
        for &d in &self.velocity.dirichlet {
            out.push(l.vy(d));
        }
        for &d in &self.head.dirichlet {
            out.push(l.head(d));
        }
        out.sort_unstable();
        out
    }
}

/// Assembled matrices of the semidiscrete system, all on the raw
/// (unconstrained) spaces.
#[derive(Debug, Clone)]
pub struct SystemOperators {
    pub layout: SystemLayout,
    /// Weighted mass of the W block: eta on velocity, rho g s0 on head.
    pub mass: CsrMatrix,
    /// Symmetric part: viscous stiffness, slip term, conductivity stiffness.
    pub b_mat: CsrMatrix,
    /// Skew interface coupling between head and normal velocity.
    pub c_i: CsrMatrix,
    /// Pressure-velocity coupling, -eta (q, div u); rows are pressure dofs,
    /// columns the W block.
    pub bdiv: CsrMatrix,
    /// Integral of each pressure basis function; the zero-mean constraint.
    pub mean_vec: Vec<f64>,
    /// Gram matrix of the gradient norm: eta nu velocity seminorm plus
    /// rho g k_max head seminorm.
    pub grad_gram: CsrMatrix,
    /// Unweighted velocity gradient Gram on the two velocity components.
    pub vel_seminorm: CsrMatrix,
    pub pressure_mass: CsrMatrix,
    /// Constrained W dofs, sorted.
    pub dirichlet: Vec<usize>,
}
