use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{domain, Result};

/// How the diffusion matrix `A(x)` is generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientModel {
    Identity,
    Scalar { value: f64 },
    /// Per-element symmetric matrices with eigenvalues drawn uniformly in
    /// `[alpha, lambda]` and a uniformly random orientation.
    RandomSpd { alpha: f64, lambda: f64, seed: u64 },
}

impl Default for CoefficientModel {
    fn default() -> Self {
        CoefficientModel::Identity
    }
}

/// Symmetric coefficient matrix, constant on each quadrature element.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix {
    model: CoefficientModel,
    dim: usize,
    alpha: f64,
    lambda: f64,
    mats: Option<Vec<f64>>,
}

impl CoefficientMatrix {
    pub fn identity(grid: &Grid) -> Self {
        Self::build(grid, CoefficientModel::Identity).expect("identity is valid")
    }

    pub fn build(grid: &Grid, model: CoefficientModel) -> Result<Self> {
        let dim = grid.comp_dim();
        match model {
            CoefficientModel::Identity => Ok(CoefficientMatrix {
                model,
                dim,
                alpha: 1.0,
                lambda: 1.0,
                mats: None,
            }),
            CoefficientModel::Scalar { value } => {
                if !(value > 0.0 && value.is_finite()) {
                    return domain("scalar coefficient must be positive");
                }
                Ok(CoefficientMatrix {
                    model,
                    dim,
                    alpha: value,
                    lambda: value,
                    mats: None,
                })
            }
            CoefficientModel::RandomSpd { alpha, lambda, seed } => {
                if !(alpha > 0.0 && lambda >= alpha && lambda.is_finite()) {
                    return domain("random coefficient bounds need 0 < alpha <= lambda");
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut mats = Vec::with_capacity(grid.element_count() * dim * dim);
                for _ in 0..grid.element_count() {
                    let eig: Vec<f64> = (0..dim).map(|_| rng.gen_range(alpha..=lambda)).collect();
                    let q = random_rotation(dim, &mut rng);
                    for i in 0..dim {
                        for j in 0..dim {
                            let v: f64 = (0..dim).map(|k| q[i * dim + k] * eig[k] * q[j * dim + k]).sum();
                            mats.push(v);
                        }
                    }
                }
                Ok(CoefficientMatrix {
                    model,
                    dim,
                    alpha,
                    lambda,
                    mats: Some(mats),
                })
            }
        }
    }

    pub fn model(&self) -> &CoefficientModel {
        &self.model
    }

    /// Ellipticity bounds `(alpha, Lambda)`.
    pub fn bounds(&self) -> (f64, f64) {
        (self.alpha, self.lambda)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.model, CoefficientModel::Identity)
    }

    /// Matrix of element `e`, row-major.
    pub fn matrix(&self, e: usize) -> Vec<f64> {
        let d = self.dim;
        match &self.mats {
            Some(m) => m[e * d * d..(e + 1) * d * d].to_vec(),
            None => {
                let c = self.alpha;
                (0..d * d).map(|k| if k % (d + 1) == 0 { c } else { 0.0 }).collect()
            }
        }
    }

    /// Matrix of element `e` in a fixed row-major `3 × 3` buffer (stride `dim`).
    #[inline]
    pub(crate) fn local(&self, e: usize) -> [f64; 9] {
        let d = self.dim;
        let mut out = [0.0; 9];
        match &self.mats {
            None => {
                for k in 0..d {
                    out[k * d + k] = self.alpha;
                }
            }
            Some(m) => out[..d * d].copy_from_slice(&m[e * d * d..(e + 1) * d * d]),
        }
        out
    }

    /// `out = A_e ξ`.
    #[inline]
    pub(crate) fn apply(&self, e: usize, xi: &[f64], out: &mut [f64]) {
        let d = self.dim;
        match &self.mats {
            None => {
                for k in 0..d {
                    out[k] = self.alpha * xi[k];
                }
            }
            Some(m) => {
                let a = &m[e * d * d..(e + 1) * d * d];
                for i in 0..d {
                    out[i] = (0..d).map(|j| a[i * d + j] * xi[j]).sum();
                }
            }
        }
    }
}

fn random_rotation(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match dim {
        1 => vec![1.0],
        2 => {
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            vec![t.cos(), -t.sin(), t.sin(), t.cos()]
        }
        _ => {
            // uniform unit quaternion
            let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
            let tau = std::f64::consts::TAU;
            let a = (1.0 - u1).sqrt() * (tau * u2).sin();
            let b = (1.0 - u1).sqrt() * (tau * u2).cos();
            let c = u1.sqrt() * (tau * u3).sin();
            let w = u1.sqrt() * (tau * u3).cos();
            vec![
                1.0 - 2.0 * (b * b + c * c),
                2.0 * (a * b - c * w),
                2.0 * (a * c + b * w),
                2.0 * (a * b + c * w),
                1.0 - 2.0 * (a * a + c * c),
                2.0 * (b * c - a * w),
                2.0 * (a * c - b * w),
                2.0 * (b * c + a * w),
                1.0 - 2.0 * (a * a + b * b),
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_spd_respects_bounds() {
        for dim in 1..=3 {
            let g = Grid::cartesian_unit(dim, 6, 1.0).unwrap();
            let a = CoefficientMatrix::build(
                &g,
                CoefficientModel::RandomSpd { alpha: 0.5, lambda: 2.0, seed: 7 },
            )
            .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let mut out = [0.0; 3];
            for e in 0..g.element_count() {
                let m = a.matrix(e);
                for i in 0..dim {
                    for j in 0..dim {
                        assert!((m[i * dim + j] - m[j * dim + i]).abs() < 1e-14);
                    }
                }
                let xi: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                a.apply(e, &xi, &mut out);
                let q: f64 = (0..dim).map(|k| xi[k] * out[k]).sum();
                let n2: f64 = xi.iter().map(|x| x * x).sum();
                assert!(q >= 0.5 * n2 - 1e-12 && q <= 2.0 * n2 + 1e-12);
            }
        }
    }

    #[test]
    fn seeded_is_deterministic() {
        let g = Grid::cartesian_unit(2, 5, 1.0).unwrap();
        let m = CoefficientModel::RandomSpd { alpha: 1.0, lambda: 3.0, seed: 42 };
        assert_eq!(CoefficientMatrix::build(&g, m.clone()).unwrap(), CoefficientMatrix::build(&g, m).unwrap());
    }
}
