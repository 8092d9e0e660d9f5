use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Grid, GridMode};

const NONE: u32 = u32::MAX;

enum Kind {
    /// Storage `[lower | diag | upper]`, each of length `n`.
    Tri,
    Sparse {
        symbolic: SymbolicSparseColMat<usize>,
        lu: SymbolicLu<usize>,
    },
}

/// Sparsity pattern of the node-coupling matrix and the matching solver.
///
/// The symbolic factorization is computed once per grid.
pub(crate) struct LinearWorkspace {
    n: usize,
    nv: usize,
    elem_pos: Vec<usize>,
    diag_pos: Vec<usize>,
    len: usize,
    kind: Kind,
}

impl LinearWorkspace {
    pub fn new(grid: &Grid) -> Result<Self> {
        let n = grid.len();
        let nv = grid.verts_per_element();
        let tri = matches!(grid.mode(), GridMode::Radial { .. } | GridMode::Cartesian { dim: 1 });
        let verts: Vec<[u32; 4]> = grid.element_vertices().collect();
        if tri {
            let pos = |r: usize, c: usize| -> usize {
                if c == r {
                    n + r
                } else if c + 1 == r {
                    r
                } else {
                    debug_assert_eq!(c, r + 1);
                    2 * n + r
                }
            };
            let elem_pos = element_positions(&verts, nv, pos);
            return Ok(LinearWorkspace {
                n,
                nv,
                elem_pos,
                diag_pos: (0..n).map(|i| n + i).collect(),
                len: 3 * n,
                kind: Kind::Tri,
            });
        }
        let mut cols: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for v in &verts {
            for &a in &v[..nv] {
                for &b in &v[..nv] {
                    if a != NONE && b != NONE {
                        cols[b as usize].push(a as usize);
                    }
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0usize);
        for c in cols.iter_mut() {
            c.sort_unstable();
            c.dedup();
            row_idx.extend_from_slice(c);
            col_ptr.push(row_idx.len());
        }
        let pos = |r: usize, c: usize| -> usize {
            let start = col_ptr[c];
            start + row_idx[start..col_ptr[c + 1]].binary_search(&r).expect("entry in pattern")
        };
        let elem_pos = element_positions(&verts, nv, pos);
        let diag_pos = (0..n).map(|i| pos(i, i)).collect();
        let len = row_idx.len();
        let symbolic = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        let lu = SymbolicLu::try_new(symbolic.as_ref())
            .map_err(|e| Error::Numerical(format!("symbolic LU failed: {e:?}")))?;
        Ok(LinearWorkspace {
            n,
            nv,
            elem_pos,
            diag_pos,
            len,
            kind: Kind::Sparse { symbolic, lu },
        })
    }

    pub fn value_len(&self) -> usize {
        self.len
    }

    /// Storage slots of element `e`'s local `nv × nv` block, row-major.
    #[inline]
    pub fn element_slots(&self, e: usize) -> &[usize] {
        let k = self.nv * self.nv;
        &self.elem_pos[e * k..(e + 1) * k]
    }

    #[inline]
    pub fn diag_slot(&self, i: usize) -> usize {
        self.diag_pos[i]
    }

    pub fn solve(&self, values: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        match &self.kind {
            Kind::Tri => thomas(self.n, values, rhs),
            Kind::Sparse { symbolic, lu } => {
                let mat = SparseColMatRef::new(symbolic.as_ref(), values);
                let lu = Lu::try_new_with_symbolic(lu.clone(), mat)
                    .map_err(|e| Error::Numerical(format!("sparse LU failed: {e:?}")))?;
                let b = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
                let x = lu.solve(&b);
                let out: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Numerical("sparse solve produced non-finite values".into()));
                }
                Ok(out)
            }
        }
    }
}

fn element_positions(verts: &[[u32; 4]], nv: usize, pos: impl Fn(usize, usize) -> usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(verts.len() * nv * nv);
    for v in verts {
        for &a in &v[..nv] {
            for &b in &v[..nv] {
                out.push(if a == NONE || b == NONE {
                    usize::MAX
                } else {
                    pos(a as usize, b as usize)
                });
            }
        }
    }
    out
}

fn thomas(n: usize, values: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let (lower, rest) = values.split_at(n);
    let (diag, upper) = rest.split_at(n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Numerical("zero pivot in tridiagonal solve".into()));
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Numerical("zero pivot in tridiagonal solve".into()));
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(grid: Grid) {
        // assemble the p = 2 stiffness plus identity and solve against a known vector
        let ws = LinearWorkspace::new(&grid).unwrap();
        let mut vals = vec![0.0; ws.value_len()];
        let nv = grid.verts_per_element();
        for (e, w) in grid.element_weights().enumerate() {
            let slots = ws.element_slots(e);
            for a in 0..nv {
                for b in 0..nv {
                    let s = slots[a * nv + b];
                    if s != usize::MAX {
                        vals[s] += if a == b { w } else { -w / nv as f64 };
                    }
                }
            }
        }
        for i in 0..grid.len() {
            vals[ws.diag_slot(i)] += 10.0;
        }
        let x: Vec<f64> = (0..grid.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        // b = M x computed through the same slots
        let mut b = vec![0.0; grid.len()];
        let verts: Vec<[u32; 4]> = grid.element_vertices().collect();
        for (e, w) in grid.element_weights().enumerate() {
            let v = verts[e];
            for a in 0..nv {
                for bb in 0..nv {
                    if v[a] != NONE && v[bb] != NONE {
                        let m = if a == bb { w } else { -w / nv as f64 };
                        b[v[a] as usize] += m * x[v[bb] as usize];
                    }
                }
            }
        }
        for i in 0..grid.len() {
            b[i] += 10.0 * x[i];
        }
        let sol = ws.solve(&vals, &b).unwrap();
        for (s, t) in sol.iter().zip(&x) {
            assert!((s - t).abs() < 1e-10);
        }
    }

    #[test]
    fn solves_on_all_modes() {
        check(Grid::cartesian_unit(1, 20, 1.0).unwrap());
        check(Grid::cartesian_unit(2, 9, 1.0).unwrap());
        check(Grid::cartesian_unit(3, 5, 1.0).unwrap());
        check(Grid::radial_ball(3, 1.0, 15, 1.0).unwrap());
    }
}
