//! Exponent calculus and regime classification.
//!
//! All comparisons are exact: exponents are stored as rationals (see
//! [`Exponent`]) so that boundary cases such as `q = p - N/(N+2)` land in a
//! definite regime.

mod atlas;
mod classify;
mod exponent;
pub mod formulas;

pub use atlas::{atlas, atlas_csv, atlas_range, atlas_svg, Atlas, AtlasRow, Breakpoint, PRange};
pub use classify::{
    admissible_data, classify, classify_with_datum, DataSpaceSpec, MSubcase, Regime, RegimeReport,
    SolutionNotion,
};
pub use exponent::{Exponent, ExtExponent};
pub use formulas::{
    a_cap, b_of_a, b_of_nu, beta_exponent, critical_sigma, eta_gradient, eta_gradient_via_beta,
    lambda_harnack, nu_mixed, nu_of_a, stationary_m_bound, sublinear_exponents,
    superlinear_threshold, SublinearExponents,
};

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use formulas::{check_dim_p, qi, raw};

/// The structural exponents `(N, p, q, γ)` of the problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemExponents {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: Exponent,
    pub q: Exponent,
    pub gamma: f64,
}

impl ProblemExponents {
    /// Validated constructor: `N ≥ 2`, `1 < p < N`, `0 < q ≤ p`, `γ > 0`.
    pub fn new(n: u32, p: f64, q: f64, gamma: f64) -> Result<Self> {
        let p = Exponent::from_f64(p)?;
        let q = Exponent::from_f64(q)?;
        Self::from_exact(n, p, q, gamma)
    }

    pub fn from_exact(n: u32, p: Exponent, q: Exponent, gamma: f64) -> Result<Self> {
        let e = Self::shape_exact(n, p, q)?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return domain(format!("gamma must be positive, got {gamma}"));
        }
        Ok(ProblemExponents { gamma, ..e })
    }

    /// Exponents for classification only; `γ` is set to 1.
    pub fn shape(n: u32, p: f64, q: f64) -> Result<Self> {
        Self::shape_exact(n, Exponent::from_f64(p)?, Exponent::from_f64(q)?)
    }

    pub fn shape_exact(n: u32, p: Exponent, q: Exponent) -> Result<Self> {
        check_dim_p(n, p.as_rational())?;
        if !q.as_rational().is_positive() {
            return domain(format!("q must satisfy q > 0, got {q}"));
        }
        if q > p {
            return domain(format!("supernatural growth: q = {q} exceeds p = {p}"));
        }
        Ok(ProblemExponents { n, p, q, gamma: 1.0 })
    }

    pub fn p(&self) -> f64 {
        self.p.value()
    }

    pub fn q(&self) -> f64 {
        self.q.value()
    }

    pub fn derived(&self) -> DerivedExponents {
        let (n, p, q) = (self.n, self.p.as_rational(), self.q.as_rational());
        let thr = raw::superlinear_threshold(n, p);
        let has_sigma = *q < *p && *q > p - qi(1) && *q > thr;
        let sigma = has_sigma.then(|| raw::sigma(n, p, q));
        let beta = sigma.as_ref().filter(|s| **s >= qi(1)).map(|s| raw::beta(s, p));
        let q1 = raw::q_sigma1(n, p);
        let q2 = raw::q_sigma2(n, p);
        let orange = *q > q1 && *q < q2 && *q > thr;
        let eta = orange.then(|| raw::eta_direct(n, p, q));
        let f = |r: num_rational::BigRational| Exponent::from_rational(r).value();
        DerivedExponents {
            sigma: sigma.map(f),
            beta: beta.map(f),
            eta_grad: eta.map(f),
            q_superlinear: f(thr),
            q_sigma2: f(q2),
            q_sigma1: f(q1),
            lambda_harnack: f(raw::lambda_harnack(n, p)),
        }
    }
}

/// Critical exponents derived from `(N, p, q)`.
///
/// `sigma` is present whenever `max{p-1, q_superlinear} < q < p`, `beta`
/// additionally needs `sigma ≥ 1`, and `eta_grad` is reported only in the
/// infinite-energy range `q_sigma1 < q < q_sigma2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    pub sigma: Option<f64>,
    pub beta: Option<f64>,
    pub eta_grad: Option<f64>,
    pub q_superlinear: f64,
    pub q_sigma2: f64,
    pub q_sigma1: f64,
    pub lambda_harnack: f64,
}
