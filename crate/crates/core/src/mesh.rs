//! Structured conforming quadrilateral mesh of the two-layer domain: a free
//! flow rectangle stacked on a porous rectangle, sharing one horizontal
//! interface line.
//!
//! Conventions: cell vertices are counter-clockwise from the lower-left
//! corner; cell edges are listed bottom, right, top, left; edge vertex pairs
//! are stored with the smaller index first. The interface normal points out
//! of the fluid, i.e. downward.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

/// Two stacked rectangles joined along `y = interface_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub fluid: Rect,
    pub porous: Rect,
    pub interface_y: f64,
}

impl Default for Geometry {
    /// Unit fluid square over unit porous square, interface at y = 1.
    fn default() -> Self {
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
                y_min: 0.0,
                y_max: 1.0,
            },
            interface_y: 1.0,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let tol = 1e-12;
        if self.fluid.width() <= tol || self.porous.width() <= tol {
            return Err(Error::Geometry("shared interface segment is empty".into()));
        }
        if self.fluid.height() <= tol || self.porous.height() <= tol {
            return Err(Error::Geometry("subdomain has no height".into()));
        }
        if (self.fluid.x_min - self.porous.x_min).abs() > tol
            || (self.fluid.x_max - self.porous.x_max).abs() > tol
        {
            return Err(Error::Geometry(
                "fluid and porous rectangles span different x ranges".into(),
            ));
        }
        if (self.fluid.y_min - self.interface_y).abs() > tol
            || (self.porous.y_max - self.interface_y).abs() > tol
        {
            return Err(Error::Geometry(
                "rectangles do not meet at the interface line".into(),
            ));
        }
        Ok(())
    }

    /// Unit normal on the interface pointing out of the fluid.
    pub fn interface_normal_fluid(&self) -> [f64; 2] {
        [0.0, -1.0]
    }

    /// Unit tangent along the interface.
    pub fn interface_tangent(&self) -> [f64; 2] {
        [1.0, 0.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subdomain {
    Fluid,
    Porous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeTag {
    Interior,
    Interface,
    ExteriorFluid,
    ExteriorPorous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct Cell {
    /// Counter-clockwise from the lower-left corner.
    pub vertices: [usize; 4],
    /// Bottom, right, top, left.
    pub edges: [usize; 4],
    pub subdomain: Subdomain,
}

#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoint vertex indices, smaller first.
    pub vertices: (usize, usize),
    /// Incident cells; boundary edges have one.
    pub cells: (usize, Option<usize>),
    pub tag: EdgeTag,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub geometry: Geometry,
    pub vertices: Vec<Point>,
    pub cells: Vec<Cell>,
    pub edges: Vec<Edge>,
    /// Largest cell diameter.
    pub h_max: f64,
}

/// Build the structured mesh with `n` cells per unit length in each
/// direction (so the default unit-square subdomains get n x n cells each).
pub fn build_structured(geometry: Geometry, n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::Config("mesh resolution n must be at least 1".into()));
    }
    geometry.validate()?;

    let cells_along = |len: f64| -> usize { (len * n as f64).round().max(1.0) as usize };
    let nx = cells_along(geometry.fluid.width());
    let ny_p = cells_along(geometry.porous.height());
    let ny_f = cells_along(geometry.fluid.height());

    let dx = geometry.fluid.width() / nx as f64;
    let dy_p = geometry.porous.height() / ny_p as f64;
    let dy_f = geometry.fluid.height() / ny_f as f64;

    // One global lattice; the interface row is generated once, so interface
    // vertex coordinates are bitwise shared by both subdomains.
    let xs: Vec<f64> = (0..=nx)
        .map(|i| geometry.porous.x_min + i as f64 * dx)
        .collect();
    let mut ys: Vec<f64> = (0..=ny_p)
        .map(|j| geometry.porous.y_min + j as f64 * dy_p)
        .collect();
    ys.extend((1..=ny_f).map(|j| geometry.interface_y + j as f64 * dy_f));

    let mut vertices = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            vertices.push(Point { x, y });
        }
    }
    let vid = |row: usize, i: usize| row * (nx + 1) + i;

    let mut cells = Vec::with_capacity(nx * (ny_p + ny_f));
    let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    for row in 0..(ny_p + ny_f) {
        let subdomain = if row < ny_p {
            Subdomain::Porous
        } else {
            Subdomain::Fluid
        };
        for i in 0..nx {
            let vs = [
                vid(row, i),
                vid(row, i + 1),
                vid(row + 1, i + 1),
                vid(row + 1, i),
            ];
            let cell_id = cells.len();
            let local_edges = [
                (vs[0], vs[1]),
                (vs[1], vs[2]),
                (vs[3], vs[2]),
                (vs[0], vs[3]),
            ];
            let mut eids = [0usize; 4];
            for (k, &(a, b)) in local_edges.iter().enumerate() {
                let key = if a < b { (a, b) } else { (b, a) };
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: key,
                        cells: (cell_id, None),
                        tag: EdgeTag::Interior,
                    });
                    edges.len() - 1
                });
                if edges[id].cells.0 != cell_id {
                    edges[id].cells.1 = Some(cell_id);
                }
                eids[k] = id;
            }
            cells.push(Cell {
                vertices: vs,
                edges: eids,
                subdomain,
            });
        }
    }

    let mut mesh = Mesh {
        geometry,
        vertices,
        cells,
        edges,
        h_max: (dx * dx + dy_p.max(dy_f).powi(2)).sqrt(),
    };
    let tags = classify_boundary(&mesh);
    for (e, t) in mesh.edges.iter_mut().zip(tags) {
        e.tag = t;
    }
    Ok(mesh)
}

/// Derive every edge's tag from cell incidence: two cells in the same
/// subdomain make an interior edge, two in different subdomains the
/// interface, and a single cell an exterior edge of that cell's subdomain.
pub fn classify_boundary(mesh: &Mesh) -> Vec<EdgeTag> {
    mesh.edges
        .iter()
        .map(|e| {
            let s0 = mesh.cells[e.cells.0].subdomain;
            match e.cells.1 {
                Some(c1) => {
                    if mesh.cells[c1].subdomain == s0 {
                        EdgeTag::Interior
                    } else {
                        EdgeTag::Interface
                    }
                }
                None => match s0 {
                    Subdomain::Fluid => EdgeTag::ExteriorFluid,
                    Subdomain::Porous => EdgeTag::ExteriorPorous,
                },
            }
        })
        .collect()
}

impl Mesh {
    pub fn cell_count(&self, subdomain: Subdomain) -> usize {
        self.cells.iter().filter(|c| c.subdomain == subdomain).count()
    }

    /// Cell indices of one subdomain, in construction order.
    pub fn cells_of(&self, subdomain: Subdomain) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&c| self.cells[c].subdomain == subdomain)
            .collect()
    }

    pub fn interface_edges(&self) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].tag == EdgeTag::Interface)
            .collect()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let (a, b) = self.edges[e].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        ((pa.x - pb.x).powi(2) + (pa.y - pb.y).powi(2)).sqrt()
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let (a, b) = self.edges[e].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        Point {
            x: 0.5 * (pa.x + pb.x),
            y: 0.5 * (pa.y + pb.y),
        }
    }

    pub fn cell_corners(&self, c: usize) -> [Point; 4] {
        let vs = self.cells[c].vertices;
        [
            self.vertices[vs[0]],
            self.vertices[vs[1]],
            self.vertices[vs[2]],
            self.vertices[vs[3]],
        ]
    }

    pub fn cell_centroid(&self, c: usize) -> Point {
        let ps = self.cell_corners(c);
        Point {
            x: 0.25 * (ps[0].x + ps[1].x + ps[2].x + ps[3].x),
            y: 0.25 * (ps[0].y + ps[1].y + ps[2].y + ps[3].y),
        }
    }

    /// For the fluid (resp. porous) cell incident to an interface edge,
    /// which local edge (0 bottom, 1 right, 2 top, 3 left) it is.
    pub fn local_edge_index(&self, cell: usize, edge: usize) -> usize {
        self.cells[cell]
            .edges
            .iter()
            .position(|&e| e == edge)
            .expect("edge belongs to cell")
    }

    /// Fluid and porous cells incident to an interface edge.
    pub fn interface_cell_pair(&self, e: usize) -> (usize, usize) {
        let edge = &self.edges[e];
        assert_eq!(edge.tag, EdgeTag::Interface, "not an interface edge");
        let c0 = edge.cells.0;
        let c1 = edge.cells.1.expect("interface edge has two cells");
        match self.cells[c0].subdomain {
            Subdomain::Fluid => (c0, c1),
            Subdomain::Porous => (c1, c0),
        }
    }

    /// Plain-text dump: one `v x y` line per vertex, then one
    /// `c i0 i1 i2 i3 tag` line per cell.
    pub fn write_dump(&self, out: &mut impl Write) -> std::io::Result<()> {
        for p in &self.vertices {
            writeln!(out, "v {} {}", p.x, p.y)?;
        }
        for c in &self.cells {
            let tag = match c.subdomain {
                Subdomain::Fluid => "fluid",
                Subdomain::Porous => "porous",
            };
            let v = c.vertices;
            writeln!(out, "c {} {} {} {} {}", v[0], v[1], v[2], v[3], tag)?;
        }
        Ok(())
    }
}
