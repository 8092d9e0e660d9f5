use super::coefficient::CoefficientMatrix;
use super::grid::{Element, Grid, NONE};
use super::{Field, VectorField};
use crate::error::{domain, Result};

#[inline]
pub(crate) fn node_value(u: &[f64], i: u32) -> f64 {
    if i == NONE {
        0.0
    } else {
        u[i as usize]
    }
}

/// Gradient of `u` on one element, written into `out[..comp_dim]`.
#[inline]
pub(crate) fn element_gradient(el: &Element, u: &[f64], d: usize, out: &mut [f64]) {
    for k in 0..d {
        let c = el.comps[k];
        out[k] = (node_value(u, c.plus) - node_value(u, c.minus)) * c.inv_len;
    }
}

pub(crate) fn gradient_values(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let d = grid.comp_dim();
    let mut out = vec![0.0; grid.element_count() * d];
    for (e, el) in grid.elements.iter().enumerate() {
        element_gradient(el, u, d, &mut out[e * d..(e + 1) * d]);
    }
    out
}

pub fn discrete_gradient(u: &Field) -> VectorField {
    let data = gradient_values(u.grid(), u.values());
    VectorField {
        grid: u.grid().clone(),
        data,
    }
}

/// `Σ_e w_e F_e · ∂ξ_e/∂u_i`, i.e. `-V_i (div F)_i`.
pub(crate) fn weak_divergence(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let d = grid.comp_dim();
    let mut out = vec![0.0; grid.len()];
    for (e, el) in grid.elements.iter().enumerate() {
        for k in 0..d {
            let c = el.comps[k];
            let v = el.weight * f[e * d + k] * c.inv_len;
            if c.plus != NONE {
                out[c.plus as usize] += v;
            }
            if c.minus != NONE {
                out[c.minus as usize] -= v;
            }
        }
    }
    out
}

/// Negative adjoint of [`discrete_gradient`] with respect to the element and
/// node inner products.
pub fn discrete_divergence(f: &VectorField) -> Field {
    let grid = f.grid();
    let mut vals = weak_divergence(grid, f.data());
    for (v, vol) in vals.iter_mut().zip(grid.volumes()) {
        *v = -*v / vol;
    }
    Field {
        grid: grid.clone(),
        values: vals,
    }
}

/// `Σ_i V_i u_i v_i`.
pub fn inner_nodes(u: &Field, v: &Field) -> f64 {
    u.grid()
        .volumes()
        .iter()
        .zip(u.values().iter().zip(v.values()))
        .map(|(w, (a, b))| w * a * b)
        .sum()
}

/// `Σ_e w_e F_e · G_e`.
pub fn inner_elements(f: &VectorField, g: &VectorField) -> f64 {
    let d = f.grid().comp_dim();
    f.grid()
        .elements
        .iter()
        .enumerate()
        .map(|(e, el)| {
            let dot: f64 = (0..d).map(|k| f.data()[e * d + k] * g.data()[e * d + k]).sum();
            el.weight * dot
        })
        .sum()
}

/// Scalar factor `(|ξ|² + ε²)^{(p-2)/2}`, with the value 0 at `s = 0`.
#[inline]
pub(crate) fn flux_factor(norm2: f64, p: f64, eps: f64) -> f64 {
    let s = norm2 + eps * eps;
    if s == 0.0 {
        if p >= 2.0 {
            return if p == 2.0 { 1.0 } else { 0.0 };
        }
        return 0.0;
    }
    s.powf(0.5 * (p - 2.0))
}

/// Regularized flux `A ∇u (|∇u|² + ε²)^{(p-2)/2}` on every element.
pub fn p_flux(u: &Field, p: f64, eps: f64, a: &CoefficientMatrix) -> Result<VectorField> {
    if !(p > 1.0) {
        return domain(format!("p_flux requires p > 1, got {p}"));
    }
    if !(eps >= 0.0) {
        return domain("p_flux requires eps >= 0");
    }
    let grid = u.grid();
    let d = grid.comp_dim();
    let mut xi = gradient_values(grid, u.values());
    let mut tmp = [0.0; 3];
    for e in 0..grid.element_count() {
        let g = &mut xi[e * d..(e + 1) * d];
        let n2: f64 = g.iter().map(|x| x * x).sum();
        let fac = flux_factor(n2, p, eps);
        a.apply(e, g, &mut tmp);
        for k in 0..d {
            g[k] = tmp[k] * fac;
        }
    }
    Ok(VectorField {
        grid: grid.clone(),
        data: xi,
    })
}

/// Averages per-element values to nodes with weights `w_e / #vertices`.
pub fn element_to_nodes(grid: &Grid, per_element: &[f64]) -> Vec<f64> {
    let mut num = vec![0.0; grid.len()];
    let mut den = vec![0.0; grid.len()];
    let nv = grid.verts_per_element();
    for (el, &v) in grid.elements.iter().zip(per_element) {
        for &i in &el.verts[..nv] {
            if i != NONE {
                num[i as usize] += el.share * v;
                den[i as usize] += el.share;
            }
        }
    }
    num.iter().zip(&den).map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 }).collect()
}

#[inline]
pub fn truncate_value_t(v: f64, k: f64) -> f64 {
    v.clamp(-k, k)
}

/// `G_k(v) = v - T_k(v)`, nudged by a few ulps so that `T_k(v) + G_k(v) == v`
/// in floating point whenever some double achieves it. For `|v| > 2k` none may
/// exist (the exact sum can fall on a rounding tie); the defect is then one ulp of `v`.
#[inline]
pub fn truncate_value_g(v: f64, k: f64) -> f64 {
    let t = truncate_value_t(v, k);
    if t == v {
        return 0.0;
    }
    let mut g = v - t;
    for _ in 0..4 {
        let s = t + g;
        if s == v {
            break;
        }
        g = if s < v { g.next_up() } else { g.next_down() };
    }
    g
}

/// `T_k(v) = max(-k, min(k, v))`, pointwise.
pub fn truncate_t(u: &Field, k: f64) -> Field {
    u.map(|v| truncate_value_t(v, k))
}

/// `G_k(v) = (|v| - k)_+ sign(v)`, pointwise.
pub fn truncate_g(u: &Field, k: f64) -> Field {
    u.map(|v| truncate_value_g(v, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(g: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
        Field::new(g.clone(), (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn random_vf(g: &Arc<Grid>, rng: &mut ChaCha8Rng) -> VectorField {
        let n = g.element_count() * g.comp_dim();
        VectorField::new(g.clone(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn summation_by_parts_all_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grids = [
            Grid::cartesian_unit(1, 17, 1.0).unwrap(),
            Grid::cartesian_unit(2, 9, 1.0).unwrap(),
            Grid::cartesian_unit(3, 5, 1.0).unwrap(),
            Grid::radial_ball(3, 1.0, 20, 1.0).unwrap(),
        ];
        for g in grids {
            let g = Arc::new(g);
            for _ in 0..10 {
                let u = random_field(&g, &mut rng);
                let f = random_vf(&g, &mut rng);
                let lhs = inner_elements(&discrete_gradient(&u), &f);
                let rhs = -inner_nodes(&u, &discrete_divergence(&f));
                assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{lhs} {rhs}");
            }
        }
    }

    #[test]
    fn ramp_has_constant_gradient() {
        let g = Arc::new(Grid::cartesian_unit(1, 10, 1.0).unwrap());
        let u = Field::from_fn(g.clone(), |x| 3.0 * x[0]);
        let grad = discrete_gradient(&u);
        // interior elements only: the last element sees the zero trace
        for e in 1..g.element_count() - 1 {
            assert!((grad.element(e)[0] - 3.0).abs() < 1e-13);
        }
        assert!(discrete_gradient(&Field::zeros(g)).data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn five_point_stencil_at_p2() {
        let g = Arc::new(Grid::cartesian_unit(2, 8, 1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_field(&g, &mut rng);
        let a = CoefficientMatrix::identity(&g);
        let div = discrete_divergence(&p_flux(&u, 2.0, 0.37, &a).unwrap());
        let m = g.per_axis();
        let h = g.h();
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= m as isize || j >= m as isize {
                0.0
            } else {
                u.values()[i as usize * m + j as usize]
            }
        };
        for i in 0..m as isize {
            for j in 0..m as isize {
                let lap = (at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - 4.0 * at(i, j)) / (h * h);
                let got = div.values()[i as usize * m + j as usize];
                assert!((got - lap).abs() <= 1e-10 * (1.0 + lap.abs()), "{got} vs {lap}");
            }
        }
    }

    #[test]
    fn seven_point_stencil_at_p2() {
        let g = Arc::new(Grid::cartesian_unit(3, 5, 1.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_field(&g, &mut rng);
        let div = discrete_divergence(&p_flux(&u, 2.0, 0.0, &CoefficientMatrix::identity(&g)).unwrap());
        let m = g.per_axis() as isize;
        let h = g.h();
        let at = |i: isize, j: isize, k: isize| -> f64 {
            if [i, j, k].iter().any(|&x| x < 0 || x >= m) {
                0.0
            } else {
                u.values()[((i * m + j) * m + k) as usize]
            }
        };
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let lap = (at(i + 1, j, k) + at(i - 1, j, k) + at(i, j + 1, k) + at(i, j - 1, k)
                        + at(i, j, k + 1)
                        + at(i, j, k - 1)
                        - 6.0 * at(i, j, k))
                        / (h * h);
                    let got = div.values()[((i * m + j) * m + k) as usize];
                    assert!((got - lap).abs() <= 1e-10 * (1.0 + lap.abs()));
                }
            }
        }
    }

    #[test]
    fn flux_examples() {
        let g = Arc::new(Grid::cartesian_unit(1, 64, 1.0).unwrap());
        let u = Field::from_fn(g.clone(), |x| x[0] * (1.0 - x[0]) / 2.0);
        let a = CoefficientMatrix::identity(&g);
        let div = discrete_divergence(&p_flux(&u, 2.0, 1e-3, &a).unwrap());
        for v in div.values() {
            assert!((v + 1.0).abs() < 1e-9);
        }
        let g2 = Arc::new(Grid::cartesian_unit(2, 8, 1.0).unwrap());
        let ramp = Field::from_fn(g2.clone(), |x| 2.0 * x[0] + 2.0 * x[1]);
        let fl = p_flux(&ramp, 3.0, 0.0, &CoefficientMatrix::identity(&g2)).unwrap();
        // an element away from the boundary
        let e = (3 * 8 + 3) * 2;
        let mag = fl.element(e).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((mag - 8.0).abs() < 1e-12);
        assert!(p_flux(&ramp, 1.0, 0.0, &CoefficientMatrix::identity(&g2)).is_err());
        let zero = p_flux(&Field::zeros(g2.clone()), 1.5, 0.0, &CoefficientMatrix::identity(&g2)).unwrap();
        assert!(zero.data().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn truncation_examples() {
        assert_eq!((truncate_value_t(3.0, 2.0), truncate_value_g(3.0, 2.0)), (2.0, 1.0));
        assert_eq!((truncate_value_t(-3.0, 2.0), truncate_value_g(-3.0, 2.0)), (-2.0, -1.0));
        assert_eq!((truncate_value_t(1.5, 2.0), truncate_value_g(1.5, 2.0)), (1.5, 0.0));
    }
}
