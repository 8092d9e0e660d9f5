//! Closed-form exponent formulas.
//!
//! Every formula is evaluated in exact rational arithmetic on [`Exponent`]
//! inputs; the `f64` entry points convert their arguments through the
//! shortest round-trip decimal first.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use super::exponent::{Exponent, ExtExponent};
use crate::error::{domain, Result};

type Q = BigRational;

pub(crate) fn qi(i: i64) -> Q {
    BigRational::from_integer(BigInt::from(i))
}

fn max_q(a: Q, b: Q) -> Q {
    if a >= b {
        a
    } else {
        b
    }
}

fn ex(x: f64, what: &str) -> Result<Exponent> {
    Exponent::from_f64(x).map_err(|_| crate::Error::Domain(format!("{what} must be finite")))
}

pub(crate) fn check_dim_p(n: u32, p: &Q) -> Result<()> {
    if n < 2 {
        return domain(format!("dimension N must be >= 2, got {n}"));
    }
    if *p <= qi(1) {
        return domain(format!("p must satisfy p > 1, got {}", Exponent::from_rational(p.clone())));
    }
    if *p >= qi(n as i64) {
        return domain(format!(
            "p must satisfy p < N = {n}, got {}",
            Exponent::from_rational(p.clone())
        ));
    }
    Ok(())
}

/// Raw formulas without range checks.
pub(crate) mod raw {
    use super::*;

    pub fn sigma(n: u32, p: &Q, q: &Q) -> Q {
        let nq = qi(n as i64);
        nq * (q - (p - qi(1))) / (p - q)
    }

    pub fn beta(sigma: &Q, p: &Q) -> Q {
        (sigma + p - qi(2)) / p
    }

    pub fn linear_threshold(n: u32, p: &Q) -> Q {
        let nq = qi(n as i64);
        (p * (&nq + qi(1)) - &nq) / (nq + qi(2))
    }

    pub fn superlinear_threshold(n: u32, p: &Q) -> Q {
        max_q(p / qi(2), linear_threshold(n, p))
    }

    /// `p - N/(N+2)`: the datum exponent reaches 2 here.
    pub fn q_sigma2(n: u32, p: &Q) -> Q {
        let nq = qi(n as i64);
        p - &nq / (&nq + qi(2))
    }

    /// `p - N/(N+1)`: the datum exponent reaches 1 here.
    pub fn q_sigma1(n: u32, p: &Q) -> Q {
        let nq = qi(n as i64);
        p - &nq / (&nq + qi(1))
    }

    pub fn a_cap(n: u32, p: &Q) -> Q {
        let nq = qi(n as i64);
        let s = p * (&nq + qi(2)) / &nq;
        &s / (&s - qi(1))
    }

    pub fn nu_of_a(n: u32, p: &Q, a: &Q) -> Q {
        let nq = qi(n as i64);
        &nq * (a * (p - qi(1)) - (p - qi(2))) / (&nq - p * (a - qi(1)))
    }

    pub fn b_of_nu(n: u32, p: &Q, nu: &Q) -> Q {
        let nq = qi(n as i64);
        (&nq * (nu + p - qi(2)) + nu * p) / (nq + nu)
    }

    pub fn b_of_a(n: u32, p: &Q, a: &Q) -> Q {
        let nq = qi(n as i64);
        a * (p * (&nq + qi(1)) - &nq) / (nq - a + qi(2))
    }

    pub fn eta_direct(n: u32, p: &Q, q: &Q) -> Q {
        let nq = qi(n as i64);
        nq * (q - (p - qi(1))) + qi(2) * q - p
    }

    pub fn eta_via_beta(n: u32, p: &Q, q: &Q) -> Q {
        let nq = qi(n as i64);
        let s = sigma(n, p, q);
        let b = beta(&s, p);
        p * (&nq * b + &s) / (nq + s)
    }

    pub fn lambda_harnack(n: u32, p: &Q) -> Q {
        let nq = qi(n as i64);
        p * (&nq + qi(1)) - qi(2) * nq
    }
}

/// Exact entry points on [`Exponent`] values.
pub mod exact {
    use super::*;

    /// Critical initial-datum exponent `N(q-(p-1))/(p-q)`.
    pub fn critical_sigma(n: u32, p: &Exponent, q: &Exponent) -> Result<Exponent> {
        let (p, q) = (p.as_rational(), q.as_rational());
        check_dim_p(n, p)?;
        if q >= p {
            return domain("critical sigma requires q < p");
        }
        if *q <= p - qi(1) {
            return domain("critical sigma requires q > p - 1");
        }
        let thr = raw::superlinear_threshold(n, p);
        if *q <= thr {
            return domain(format!(
                "critical sigma requires q above the superlinear threshold {}",
                Exponent::from_rational(thr)
            ));
        }
        Ok(Exponent::from_rational(raw::sigma(n, p, q)))
    }

    pub fn beta_exponent(sigma: &Exponent, p: &Exponent) -> Result<Exponent> {
        let (s, p) = (sigma.as_rational(), p.as_rational());
        if *s < qi(1) {
            return domain("beta requires sigma >= 1");
        }
        if *p <= qi(1) {
            return domain("beta requires p > 1");
        }
        Ok(Exponent::from_rational(raw::beta(s, p)))
    }

    pub fn superlinear_threshold(n: u32, p: &Exponent) -> Result<Exponent> {
        check_dim_p(n, p.as_rational())?;
        Ok(Exponent::from_rational(raw::superlinear_threshold(n, p.as_rational())))
    }

    pub fn nu_of_a(n: u32, p: &Exponent, a: &Exponent) -> Result<Exponent> {
        let (p, a) = (p.as_rational(), a.as_rational());
        check_a(n, p, a)?;
        Ok(Exponent::from_rational(raw::nu_of_a(n, p, a)))
    }

    pub fn b_of_nu(n: u32, p: &Exponent, nu: &Exponent) -> Result<Exponent> {
        let (p, nu) = (p.as_rational(), nu.as_rational());
        check_dim_p(n, p)?;
        if *nu < qi(1) {
            return domain("b(nu) requires nu >= 1");
        }
        Ok(Exponent::from_rational(raw::b_of_nu(n, p, nu)))
    }

    pub fn b_of_a(n: u32, p: &Exponent, a: &Exponent) -> Result<Exponent> {
        let (p, a) = (p.as_rational(), a.as_rational());
        check_a(n, p, a)?;
        Ok(Exponent::from_rational(raw::b_of_a(n, p, a)))
    }

    /// Datum exponent for forcing in `L^r(0,T;L^m)` at the lowest regularity.
    pub fn nu_mixed(n: u32, p: &Exponent, m: &ExtExponent, r: &ExtExponent) -> Result<Exponent> {
        let p = p.as_rational();
        check_dim_p(n, p)?;
        let nq = qi(n as i64);
        let value = match (m, r) {
            (ExtExponent::Finite(m), ExtExponent::Finite(r)) => {
                let (m, r) = (m.as_rational(), r.as_rational());
                let den = &nq * r - p * m * (r - qi(1));
                if !den.is_positive() {
                    return domain("nu_mixed: denominator N r - p m (r-1) must be positive");
                }
                &nq * m * (r * (p - qi(1)) - (p - qi(2))) / den
            }
            (ExtExponent::Finite(m), ExtExponent::Infinite) => {
                let m = m.as_rational();
                let den = &nq - p * m;
                if !den.is_positive() {
                    return domain("nu_mixed: denominator N - p m must be positive for r = inf");
                }
                &nq * m * (p - qi(1)) / den
            }
            (ExtExponent::Infinite, _) => {
                return domain("nu_mixed: denominator must be positive (m = inf)")
            }
        };
        Ok(Exponent::from_rational(value))
    }

    pub fn eta_gradient(n: u32, p: &Exponent, q: &Exponent) -> Result<Exponent> {
        let (pr, qr) = (p.as_rational(), q.as_rational());
        check_dim_p(n, pr)?;
        let lo = max_q(raw::q_sigma1(n, pr), raw::superlinear_threshold(n, pr));
        if !(*qr > lo && *qr < raw::q_sigma2(n, pr)) {
            return domain("eta_gradient requires exponents in the infinite-energy (orange) range");
        }
        Ok(Exponent::from_rational(raw::eta_direct(n, pr, qr)))
    }

    pub fn lambda_harnack(n: u32, p: &Exponent) -> Result<Exponent> {
        check_dim_p(n, p.as_rational())?;
        Ok(Exponent::from_rational(raw::lambda_harnack(n, p.as_rational())))
    }

    fn check_a(n: u32, p: &Q, a: &Q) -> Result<()> {
        check_dim_p(n, p)?;
        if *a < qi(1) {
            return domain("a must satisfy a >= 1");
        }
        let cap = raw::a_cap(n, p);
        if *a > cap {
            return domain(format!(
                "a must not exceed the energy cap (p(N+2)/N)' = {}",
                Exponent::from_rational(cap)
            ));
        }
        let nq = qi(n as i64);
        if !(nq - p * (a - qi(1))).is_positive() {
            return domain("nu(a): denominator N - p(a-1) must be positive");
        }
        Ok(())
    }
}

/// `N(q-(p-1))/(p-q)`, the minimal Lebesgue exponent of the initial datum.
pub fn critical_sigma(n: u32, p: f64, q: f64) -> Result<f64> {
    exact::critical_sigma(n, &ex(p, "p")?, &ex(q, "q")?).map(|e| e.value())
}

/// `(sigma + p - 2)/p`.
pub fn beta_exponent(sigma: f64, p: f64) -> Result<f64> {
    exact::beta_exponent(&ex(sigma, "sigma")?, &ex(p, "p")?).map(|e| e.value())
}

/// `max{p/2, (N(p-1)+p)/(N+2)}`.
pub fn superlinear_threshold(n: u32, p: f64) -> Result<f64> {
    exact::superlinear_threshold(n, &ex(p, "p")?).map(|e| e.value())
}

pub fn nu_of_a(n: u32, p: f64, a: f64) -> Result<f64> {
    exact::nu_of_a(n, &ex(p, "p")?, &ex(a, "a")?).map(|e| e.value())
}

pub fn b_of_nu(n: u32, p: f64, nu: f64) -> Result<f64> {
    exact::b_of_nu(n, &ex(p, "p")?, &ex(nu, "nu")?).map(|e| e.value())
}

pub fn b_of_a(n: u32, p: f64, a: f64) -> Result<f64> {
    exact::b_of_a(n, &ex(p, "p")?, &ex(a, "a")?).map(|e| e.value())
}

/// The largest admissible `a`, i.e. the conjugate of `p(N+2)/N`.
pub fn a_cap(n: u32, p: f64) -> Result<f64> {
    let p = ex(p, "p")?;
    check_dim_p(n, p.as_rational())?;
    Ok(Exponent::from_rational(raw::a_cap(n, p.as_rational())).value())
}

/// `r = f64::INFINITY` is accepted and evaluated as the limit.
pub fn nu_mixed(n: u32, p: f64, m: f64, r: f64) -> Result<f64> {
    exact::nu_mixed(n, &ex(p, "p")?, &ExtExponent::finite(m)?, &ExtExponent::finite(r)?)
        .map(|e| e.value())
}

/// Gradient integrability `N(q-(p-1)) + 2q - p` in the orange range.
pub fn eta_gradient(n: u32, p: f64, q: f64) -> Result<f64> {
    exact::eta_gradient(n, &ex(p, "p")?, &ex(q, "q")?).map(|e| e.value())
}

/// Second closed form `p(Nβ+σ)/(N+σ)`; agrees with [`eta_gradient`].
pub fn eta_gradient_via_beta(n: u32, p: f64, q: f64) -> Result<f64> {
    let (pe, qe) = (ex(p, "p")?, ex(q, "q")?);
    exact::eta_gradient(n, &pe, &qe)?;
    Ok(Exponent::from_rational(raw::eta_via_beta(n, pe.as_rational(), qe.as_rational())).value())
}

/// `p(N+1) - 2N`.
pub fn lambda_harnack(n: u32, p: f64) -> Result<f64> {
    exact::lambda_harnack(n, &ex(p, "p")?).map(|e| e.value())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublinearExponents {
    pub mu: f64,
    pub b: f64,
}

/// Energy exponent `μ` and gradient integrability `b` for sublinear growth.
pub fn sublinear_exponents(n: u32, p: f64, m: f64) -> Result<SublinearExponents> {
    let (pe, me) = (ex(p, "p")?, ex(m, "m")?);
    let (p, m) = (pe.as_rational(), me.as_rational());
    if !(*p > qi(1) && *p < qi(2)) {
        return domain("sublinear exponents require 1 < p < 2");
    }
    if *m < qi(1) {
        return domain("sublinear exponents require m >= 1");
    }
    let nq = qi(n as i64);
    let mu = (m + p - qi(2)) / p;
    let split = qi(2) * &nq / (&nq + m);
    let b = if *p <= split {
        p * m / qi(2)
    } else {
        (&nq * (m - qi(2) + p) + p * m) / (nq + m)
    };
    Ok(SublinearExponents {
        mu: Exponent::from_rational(mu).value(),
        b: Exponent::from_rational(b).value(),
    })
}

/// Smallest `m` allowed with `r = ∞`: `N(q-(p-1))/q`.
pub fn stationary_m_bound(n: u32, p: f64, q: f64) -> Result<f64> {
    let (pe, qe) = (ex(p, "p")?, ex(q, "q")?);
    check_dim_p(n, pe.as_rational())?;
    let (p, q) = (pe.as_rational(), qe.as_rational());
    if !q.is_positive() {
        return domain("q must be positive");
    }
    Ok(Exponent::from_rational(qi(n as i64) * (q - (p - qi(1))) / q).value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn sigma_examples() {
        assert!(close(critical_sigma(3, 2.0, 1.5).unwrap(), 3.0));
        // p = 2 reduces to N(q-1)/(2-q)
        let q: f64 = 1.7;
        assert!(close(critical_sigma(4, 2.0, q).unwrap(), 4.0 * (q - 1.0) / (2.0 - q)));
        let err = critical_sigma(3, 2.0, 2.5).unwrap_err().to_string();
        assert!(err.contains("q < p"), "{err}");
        assert!(critical_sigma(3, 3.5, 3.0).unwrap_err().to_string().contains("p < N"));
        assert!(critical_sigma(3, 2.0, 0.9).is_err());
    }

    #[test]
    fn sigma_breakpoints_are_exact() {
        for n in [2u32, 3, 5, 10] {
            let nn = n as i64;
            for (num, den) in [(3, 2), (7, 4), (19, 10), (2, 1), (5, 2)] {
                let p = Exponent::from_ratio(num, den);
                if p.as_rational() >= &qi(nn) {
                    continue;
                }
                let q2 = Exponent::from_rational(p.as_rational() - qi(nn) / qi(nn + 2));
                if let Ok(s) = exact::critical_sigma(n, &p, &q2) {
                    assert_eq!(s, Exponent::from_integer(2));
                }
                let q1 = Exponent::from_rational(p.as_rational() - qi(nn) / qi(nn + 1));
                if let Ok(s) = exact::critical_sigma(n, &p, &q1) {
                    assert_eq!(s, Exponent::from_integer(1));
                }
            }
        }
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_exponent(2.0, 1.7).unwrap(), 1.0);
        assert!(close(beta_exponent(3.0, 2.0).unwrap(), 1.5));
        let sigma = critical_sigma(3, 2.0, 1.35).unwrap();
        let b = beta_exponent(sigma, 2.0).unwrap();
        assert!(close(b, 0.807_692_307_692_307_7) && b < 1.0);
        assert!(beta_exponent(0.5, 2.0).is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(superlinear_threshold(4, 2.0).unwrap(), 1.0);
        assert_eq!(superlinear_threshold(3, 1.5).unwrap(), 0.75);
        assert!(close(superlinear_threshold(5, 3.0).unwrap(), 13.0 / 7.0));
        for n in 3..12u32 {
            let p = Exponent::from_integer(2);
            let half = p.as_rational() / qi(2);
            assert_eq!(raw::linear_threshold(n, p.as_rational()), half);
        }
    }

    #[test]
    fn nu_and_b() {
        for (n, p) in [(3u32, 2.0), (4, 1.5), (5, 3.3)] {
            assert_eq!(nu_of_a(n, p, 1.0).unwrap(), 1.0);
            let cap = Exponent::from_rational(raw::a_cap(n, &Exponent::from_f64(p).unwrap().into_rational()));
            let nu = exact::nu_of_a(n, &Exponent::from_f64(p).unwrap(), &cap).unwrap();
            assert_eq!(nu, Exponent::from_integer(2));
            assert!(close(b_of_nu(n, p, 2.0).unwrap(), p));
            let expected = (p * (n as f64 + 1.0) - n as f64) / (n as f64 + 1.0);
            assert!(close(b_of_a(n, p, 1.0).unwrap(), expected));
        }
        assert!(close(nu_of_a(3, 2.0, 1.2).unwrap(), 3.6 / 2.6));
        assert!(close(b_of_nu(3, 2.0, 1.0).unwrap(), 1.25));
        assert!(close(b_of_a(3, 2.0, 1.0).unwrap(), 1.25));
        assert!(nu_of_a(3, 2.0, 1.5).unwrap_err().to_string().contains("cap"));
        assert!(nu_of_a(3, 2.0, 0.5).is_err());
    }

    #[test]
    fn mixed_norm_curve() {
        assert!(close(nu_mixed(3, 2.0, 2.0, 2.0).unwrap(), 6.0));
        assert_eq!(nu_mixed(3, 2.0, 1.2, 1.2).unwrap(), nu_of_a(3, 2.0, 1.2).unwrap());
        // r = 1 collapses to nu = m for every m
        for m in [1.0, 1.3, 2.0, 2.7] {
            assert!(close(nu_mixed(3, 2.0, m, 1.0).unwrap(), m));
        }
        assert!(nu_mixed(3, 2.0, 3.0, 3.0).is_err());
        assert!(close(nu_mixed(3, 2.0, 1.0, f64::INFINITY).unwrap(), 3.0));
    }

    #[test]
    fn eta_examples() {
        assert!(close(eta_gradient(3, 2.0, 1.35).unwrap(), 1.75));
        assert!(close(eta_gradient_via_beta(3, 2.0, 1.35).unwrap(), 1.75));
        // approaching the finite-energy boundary q -> p - N/(N+2) = 1.4 gives eta -> p
        let near = eta_gradient(3, 2.0, 1.4 - 1e-9).unwrap();
        assert!((near - 2.0).abs() < 1e-8);
        assert!(eta_gradient(3, 2.0, 1.5).is_err());
    }

    #[test]
    fn sublinear() {
        let s = sublinear_exponents(3, 1.5, 2.0).unwrap();
        assert!(close(s.mu, 1.0) && close(s.b, 1.5));
        let s = sublinear_exponents(3, 1.1, 1.0).unwrap();
        assert!(close(s.b, 0.55));
        for p in [1.1, 1.4, 1.9] {
            assert!(close(sublinear_exponents(2, p, 2.0).unwrap().mu, 1.0));
        }
        assert!(sublinear_exponents(3, 2.5, 1.0).is_err());
    }

    #[test]
    fn harnack_exponent() {
        assert_eq!(lambda_harnack(3, 2.0).unwrap(), 2.0);
        assert_eq!(lambda_harnack(3, 2.5).unwrap(), 4.0);
    }
}
