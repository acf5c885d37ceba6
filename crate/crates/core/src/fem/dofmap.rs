use std::collections::HashMap;

use crate::fem::reference::ElemKind;
use crate::mesh::{EdgeTag, Mesh, Point, Subdomain};

/// Continuous-Lagrange dof numbering for one scalar field on one subdomain.
/// Global ids are assigned on first encounter while sweeping the
/// subdomain's cells in mesh order, so numbering is deterministic.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub kind: ElemKind,
    pub subdomain: Subdomain,
    pub n_dofs: usize,
    /// Per mesh cell, global dof ids in local node order. Empty for cells
    /// outside the subdomain.
    pub cell_dofs: Vec<Vec<usize>>,
    pub coords: Vec<Point>,
    /// Dofs on the exterior boundary of the subdomain (never the
    /// interface), sorted ascending. Empty for spaces built without
    /// essential conditions.
    pub dirichlet: Vec<usize>,
}

#[derive(Hash, PartialEq, Eq, Clone, Copy)]
enum Entity {
    Vertex(usize),
    Edge(usize),
    Cell(usize),
}

/// Number the dofs of `kind` on `subdomain`. With `constrain_exterior`,
/// dofs lying on exterior edges of the subdomain are collected as the
/// Dirichlet set; interface dofs always stay free.
pub fn build_dofmap(
    mesh: &Mesh,
    kind: ElemKind,
    subdomain: Subdomain,
    constrain_exterior: bool,
) -> DofMap {
    let mut ids: HashMap<Entity, usize> = HashMap::new();
    let mut coords: Vec<Point> = Vec::new();
    let mut cell_dofs: Vec<Vec<usize>> = vec![Vec::new(); mesh.cells.len()];

    let mut assign = |entity: Entity, at: Point, coords: &mut Vec<Point>| -> usize {
        let next = coords.len();
        match ids.entry(entity) {
            std::collections::hash_map::Entry::Occupied(o) => *o.get(),
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(next);
                coords.push(at);
                next
            }
        }
    };

    for c in 0..mesh.cells.len() {
        if mesh.cells[c].subdomain != subdomain {
            continue;
        }
        let cell = &mesh.cells[c];
        let mut dofs = Vec::with_capacity(kind.node_count());
        match kind {
            ElemKind::Q0 => {
                dofs.push(assign(Entity::Cell(c), mesh.cell_centroid(c), &mut coords));
            }
            ElemKind::Q1 => {
                for &v in &cell.vertices {
                    dofs.push(assign(Entity::Vertex(v), mesh.vertices[v], &mut coords));
                }
            }
            ElemKind::Q2 => {
                for &v in &cell.vertices {
                    dofs.push(assign(Entity::Vertex(v), mesh.vertices[v], &mut coords));
                }
                for &e in &cell.edges {
                    dofs.push(assign(Entity::Edge(e), mesh.edge_midpoint(e), &mut coords));
                }
                dofs.push(assign(Entity::Cell(c), mesh.cell_centroid(c), &mut coords));
            }
        }
        cell_dofs[c] = dofs;
    }

    let mut dirichlet = Vec::new();
    if constrain_exterior {
        let exterior_tag = match subdomain {
            Subdomain::Fluid => EdgeTag::ExteriorFluid,
            Subdomain::Porous => EdgeTag::ExteriorPorous,
        };
        let mut seen = vec![false; coords.len()];
        for (e, edge) in mesh.edges.iter().enumerate() {
            if edge.tag != exterior_tag {
                continue;
            }
            let mut mark = |entity: Entity| {
                if let Some(&d) = ids.get(&entity) {
                    if !seen[d] {
                        seen[d] = true;
                        dirichlet.push(d);
                    }
                }
            };
            mark(Entity::Vertex(edge.vertices.0));
            mark(Entity::Vertex(edge.vertices.1));
            if kind == ElemKind::Q2 {
                mark(Entity::Edge(e));
            }
        }
        dirichlet.sort_unstable();
    }

    DofMap {
        kind,
        subdomain,
        n_dofs: coords.len(),
        cell_dofs,
        coords,
        dirichlet,
    }
}

impl DofMap {
    /// Evaluate a coefficient field at a reference point of one cell.
    pub fn eval_on_cell(&self, cell: usize, shape: &[f64], coeffs: &[f64]) -> f64 {
        let dofs = &self.cell_dofs[cell];
        debug_assert_eq!(dofs.len(), shape.len());
        dofs.iter().zip(shape).map(|(&d, s)| coeffs[d] * s).sum()
    }

    /// Coefficients interpolating `f` at the dof points.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.coords.iter().map(|&p| f(p)).collect()
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.dirichlet.binary_search(&dof).is_ok()
    }
}
