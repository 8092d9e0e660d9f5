use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub(crate) const NONE: u32 = u32::MAX;

/// Geometry of the discrete domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridMode {
    /// Box `[0,L]^dim`, unknowns at interior vertices.
    Cartesian { dim: usize },
    /// Ball of radius `R` in formal dimension `n`, radially symmetric
    /// unknowns at shell midpoints.
    Radial { n: u32 },
}

/// Serializable grid description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub mode: GridMode,
    /// Box side `L` or ball radius `R`.
    pub extent: f64,
    /// Cells per axis (radial: number of shells).
    pub cells: usize,
    pub t_horizon: f64,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Comp {
    pub plus: u32,
    pub minus: u32,
    pub inv_len: f64,
}

/// A quadrature element carrying a constant discrete gradient.
///
/// Cartesian mode uses the Kuhn triangulation of every cell, so each gradient
/// component is a two-point difference along one edge of the simplex; radial
/// mode uses one element per shell face.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Element {
    pub weight: f64,
    /// Weight share per vertex, used to average element quantities to nodes.
    pub share: f64,
    pub comps: [Comp; 3],
    pub verts: [u32; 4],
    /// Barycentre (radial: midpoint between the two shell centres).
    pub centroid: [f64; 3],
}

#[derive(Clone, Debug)]
pub struct Grid {
    spec: GridSpec,
    h: f64,
    /// Interior vertices per axis (Cartesian) or shells (radial).
    per_axis: usize,
    volumes: Vec<f64>,
    pub(crate) elements: Vec<Element>,
}

/// Surface measure of the unit sphere in `R^n`.
pub fn unit_sphere_measure(n: u32) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * unit_sphere_measure(n - 2),
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        if !(spec.extent > 0.0 && spec.extent.is_finite()) {
            return domain("grid extent must be positive");
        }
        if !(spec.t_horizon > 0.0 && spec.t_horizon.is_finite()) {
            return domain("grid time horizon must be positive");
        }
        let h = spec.extent / spec.cells as f64;
        match spec.mode {
            GridMode::Cartesian { dim } => {
                if !(1..=3).contains(&dim) {
                    return domain(format!("cartesian dimension must be 1, 2 or 3, got {dim}"));
                }
                if spec.cells < 2 {
                    return domain("cartesian grids need at least 2 cells per axis");
                }
                Ok(Self::cartesian(spec, dim, h))
            }
            GridMode::Radial { n } => {
                if n < 2 {
                    return domain("radial grids need formal dimension N >= 2");
                }
                if spec.cells < 1 {
                    return domain("radial grids need at least one shell");
                }
                Ok(Self::radial(spec, n, h))
            }
        }
    }

    pub fn cartesian_unit(dim: usize, cells: usize, t_horizon: f64) -> Result<Self> {
        Self::new(GridSpec {
            mode: GridMode::Cartesian { dim },
            extent: 1.0,
            cells,
            t_horizon,
        })
    }

    pub fn radial_ball(n: u32, radius: f64, cells: usize, t_horizon: f64) -> Result<Self> {
        Self::new(GridSpec {
            mode: GridMode::Radial { n },
            extent: radius,
            cells,
            t_horizon,
        })
    }

    fn cartesian(spec: GridSpec, dim: usize, h: f64) -> Self {
        let m = spec.cells - 1;
        let nodes = m.pow(dim as u32);
        let volumes = vec![h.powi(dim as i32); nodes];
        let fact: usize = (1..=dim).product();
        let weight = h.powi(dim as i32) / fact as f64;
        let share = weight / (dim + 1) as f64;
        let perms = permutations(dim);
        let c = spec.cells;
        let node_index = |v: &[usize]| -> u32 {
            if v.iter().any(|&x| x == 0 || x == c) {
                return NONE;
            }
            v.iter().fold(0usize, |acc, &x| acc * m + (x - 1)) as u32
        };
        let mut elements = Vec::with_capacity(c.pow(dim as u32) * fact);
        let mut corner = vec![0usize; dim];
        loop {
            for perm in &perms {
                let mut v = corner.clone();
                let mut verts = [NONE; 4];
                let mut comps = [Comp { plus: NONE, minus: NONE, inv_len: 0.0 }; 3];
                let mut centroid = [0.0; 3];
                verts[0] = node_index(&v);
                for a in 0..dim {
                    centroid[a] += v[a] as f64;
                }
                for (k, &axis) in perm.iter().enumerate() {
                    let prev = node_index(&v);
                    v[axis] += 1;
                    let next = node_index(&v);
                    verts[k + 1] = next;
                    for a in 0..dim {
                        centroid[a] += v[a] as f64;
                    }
                    comps[axis] = Comp {
                        plus: next,
                        minus: prev,
                        inv_len: 1.0 / h,
                    };
                }
                for x in centroid.iter_mut().take(dim) {
                    *x *= h / (dim + 1) as f64;
                }
                elements.push(Element {
                    weight,
                    share,
                    comps,
                    verts,
                    centroid,
                });
            }
            let mut a = dim;
            loop {
                if a == 0 {
                    return Grid {
                        spec,
                        h,
                        per_axis: m,
                        volumes,
                        elements,
                    };
                }
                a -= 1;
                corner[a] += 1;
                if corner[a] < c {
                    break;
                }
                corner[a] = 0;
            }
        }
    }

    fn radial(spec: GridSpec, n: u32, h: f64) -> Self {
        let cells = spec.cells;
        let s = unit_sphere_measure(n);
        let nf = n as f64;
        let r = |i: usize| i as f64 * h;
        let volumes = (0..cells)
            .map(|i| s * (r(i + 1).powf(nf) - r(i).powf(nf)) / nf)
            .collect();
        let mut elements = Vec::with_capacity(cells);
        let none = Comp { plus: NONE, minus: NONE, inv_len: 0.0 };
        for i in 0..cells {
            let rf = r(i + 1);
            let area = s * rf.powf(nf - 1.0);
            let (plus, dist) = if i + 1 < cells { ((i + 1) as u32, h) } else { (NONE, 0.5 * h) };
            let weight = area * dist;
            elements.push(Element {
                weight,
                share: weight / 2.0,
                comps: [
                    Comp {
                        plus,
                        minus: i as u32,
                        inv_len: 1.0 / dist,
                    },
                    none,
                    none,
                ],
                verts: [i as u32, plus, NONE, NONE],
                centroid: [rf + 0.5 * dist - 0.5 * h, 0.0, 0.0],
            });
        }
        Grid {
            spec,
            h,
            per_axis: cells,
            volumes,
            elements,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn mode(&self) -> GridMode {
        self.spec.mode
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cells(&self) -> usize {
        self.spec.cells
    }

    pub fn t_horizon(&self) -> f64 {
        self.spec.t_horizon
    }

    /// Number of unknowns.
    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    /// Unknowns per axis.
    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    /// Number of gradient components per element.
    pub fn comp_dim(&self) -> usize {
        match self.spec.mode {
            GridMode::Cartesian { dim } => dim,
            GridMode::Radial { .. } => 1,
        }
    }

    pub fn verts_per_element(&self) -> usize {
        self.comp_dim() + 1
    }

    /// Spatial dimension of the underlying problem (radial: formal `N`).
    pub fn effective_dim(&self) -> u32 {
        match self.spec.mode {
            GridMode::Cartesian { dim } => dim as u32,
            GridMode::Radial { n } => n,
        }
    }

    /// Control volume of each unknown.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub(crate) fn element_vertices(&self) -> impl Iterator<Item = [u32; 4]> + '_ {
        self.elements.iter().map(|e| e.verts)
    }

    pub fn element_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.elements.iter().map(|e| e.weight)
    }

    /// Measure of the continuous domain.
    pub fn domain_measure(&self) -> f64 {
        match self.spec.mode {
            GridMode::Cartesian { dim } => self.spec.extent.powi(dim as i32),
            GridMode::Radial { n } => unit_sphere_measure(n) * self.spec.extent.powi(n as i32) / n as f64,
        }
    }

    /// Coordinates of unknown `i` (radial: the shell-midpoint radius).
    pub fn coords(&self, i: usize) -> Vec<f64> {
        match self.spec.mode {
            GridMode::Cartesian { dim } => {
                let m = self.per_axis;
                let mut out = vec![0.0; dim];
                let mut rest = i;
                for a in (0..dim).rev() {
                    out[a] = ((rest % m) + 1) as f64 * self.h;
                    rest /= m;
                }
                out
            }
            GridMode::Radial { .. } => vec![(i as f64 + 0.5) * self.h],
        }
    }

    /// Distance of unknown `i` from the domain centre (box centre or origin).
    pub fn radius(&self, i: usize) -> f64 {
        match self.spec.mode {
            GridMode::Cartesian { .. } => {
                let c = 0.5 * self.spec.extent;
                self.coords(i).iter().map(|x| (x - c) * (x - c)).sum::<f64>().sqrt()
            }
            GridMode::Radial { .. } => (i as f64 + 0.5) * self.h,
        }
    }

    /// Samples a closed-form function at every unknown.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.coords(i))).collect()
    }
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(d - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, d - 1);
            out.push(q);
        }
    }
    out
}
