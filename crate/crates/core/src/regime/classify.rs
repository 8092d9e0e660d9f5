use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::exponent::{Exponent, ExtExponent};
use super::formulas::{qi, raw};
use super::{DerivedExponents, ProblemExponents};
use crate::error::{domain, Result};

/// Integrability subcase of the sublinear regime, by the datum exponent `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MSubcase {
    #[serde(rename = "mGE2")]
    MGe2,
    #[serde(rename = "mIn12")]
    MIn12,
    #[serde(rename = "mEQ1")]
    MEq1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    FiniteEnergyRed,
    InfiniteEnergyOrange,
    RenormalizedYellow,
    BoundaryLLogL,
    LinearBorderline,
    Sublinear(MSubcase),
    NaturalGrowth,
}

impl Regime {
    /// Short lower-case tag used in CSV output.
    pub fn tag(&self) -> &'static str {
        match self {
            Regime::FiniteEnergyRed => "red",
            Regime::InfiniteEnergyOrange => "orange",
            Regime::RenormalizedYellow => "yellow",
            Regime::BoundaryLLogL => "boundary_llogl",
            Regime::LinearBorderline => "linear_borderline",
            Regime::Sublinear(_) => "sublinear",
            Regime::NaturalGrowth => "natural_growth",
        }
    }

    pub fn is_superlinear(&self) -> bool {
        matches!(
            self,
            Regime::FiniteEnergyRed
                | Regime::InfiniteEnergyOrange
                | Regime::RenormalizedYellow
                | Regime::BoundaryLLogL
        )
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Sublinear(m) => write!(f, "Sublinear({m:?})"),
            other => write!(f, "{other:?}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolutionNotion {
    WeakFiniteEnergy,
    TruncationRenormalized,
    FullyRenormalized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub exponents: ProblemExponents,
    pub derived: DerivedExponents,
    pub regime: Regime,
    /// Lebesgue exponent required of `u₀`; `None` outside the solver's scope.
    pub required_sigma: Option<f64>,
    pub solution_notion: Option<SolutionNotion>,
    pub datum_space: String,
    pub forcing_space: String,
    pub notes: String,
}

/// Integrability of the forcing `f ∈ L^r(0,T;L^m)` and of the datum `u₀ ∈ L^σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSpaceSpec {
    pub m: ExtExponent,
    pub r: ExtExponent,
    pub sigma_datum: ExtExponent,
}

impl DataSpaceSpec {
    pub fn new(m: f64, r: f64, sigma_datum: f64) -> Result<Self> {
        Ok(DataSpaceSpec {
            m: ExtExponent::finite(m)?,
            r: ExtExponent::finite(r)?,
            sigma_datum: ExtExponent::finite(sigma_datum)?,
        })
    }
}

/// Regime of `(N, p, q)` per the colored q-intervals.
///
/// Boundary memberships: `q = p - N/(N+2)` is red, `q = p - N/(N+1)` has its
/// own tag, `q` equal to the linear-growth threshold with `p ≥ 2` is
/// `LinearBorderline`, `q ≤ p/2` is sublinear and `q = p` is natural growth.
/// Without a datum exponent the sublinear subcase is the weakest one allowed
/// by `q`: `m = 1` for `q < p/2` and `1 < m < 2` for `q = p/2`.
pub fn classify(e: &ProblemExponents) -> RegimeReport {
    classify_inner(e, None).expect("classification without datum is total")
}

/// As [`classify`], with the sublinear subcase chosen from the datum exponent `m`.
pub fn classify_with_datum(e: &ProblemExponents, m: f64) -> Result<RegimeReport> {
    let m = Exponent::from_f64(m)?;
    if *m.as_rational() < qi(1) {
        return domain("datum exponent m must satisfy m >= 1");
    }
    classify_inner(e, Some(m))
}

fn regime_of(e: &ProblemExponents, m: Option<&Exponent>) -> Result<Regime> {
    let (n, p, q) = (e.n, e.p.as_rational(), e.q.as_rational());
    if q > p {
        return domain("supernatural growth");
    }
    if q == p {
        return Ok(Regime::NaturalGrowth);
    }
    let lin = raw::linear_threshold(n, p);
    let thr = raw::superlinear_threshold(n, p);
    if *q <= thr {
        if *q == lin && *p >= qi(2) {
            return Ok(Regime::LinearBorderline);
        }
        let half = p / qi(2);
        let sub = match m {
            None if *q < half => MSubcase::MEq1,
            None => MSubcase::MIn12,
            Some(m) => {
                let m = m.as_rational();
                if *m >= qi(2) {
                    MSubcase::MGe2
                } else if *m > qi(1) {
                    MSubcase::MIn12
                } else if *q < half {
                    MSubcase::MEq1
                } else {
                    return domain("an L^1 datum (m = 1) requires q < p/2");
                }
            }
        };
        return Ok(Regime::Sublinear(sub));
    }
    let q2 = raw::q_sigma2(n, p);
    let q1 = raw::q_sigma1(n, p);
    Ok(if *q >= q2 {
        Regime::FiniteEnergyRed
    } else if *q > q1 {
        Regime::InfiniteEnergyOrange
    } else if *q == q1 {
        Regime::BoundaryLLogL
    } else {
        Regime::RenormalizedYellow
    })
}

pub(crate) fn regime_exact(e: &ProblemExponents) -> Regime {
    regime_of(e, None).expect("validated exponents")
}

fn classify_inner(e: &ProblemExponents, m: Option<Exponent>) -> Result<RegimeReport> {
    let regime = regime_of(e, m.as_ref())?;
    let derived = e.derived();
    let sigma_txt = derived.sigma.map(|s| format!("{s}")).unwrap_or_default();
    let m_txt = m.as_ref().map(|m| m.to_string()).unwrap_or_else(|| "m".into());
    let (required_sigma, notion, datum, forcing, notes) = match regime {
        Regime::FiniteEnergyRed => (
            derived.sigma,
            Some(SolutionNotion::WeakFiniteEnergy),
            format!("L^{sigma_txt}(Ω)"),
            "L^r(0,T;L^m(Ω)) with Nσ/m + (N(p-2)+pσ)/r ≤ N(p-1)+pσ".to_string(),
            "σ ≥ 2: finite energy solutions".to_string(),
        ),
        Regime::InfiniteEnergyOrange => (
            derived.sigma,
            Some(SolutionNotion::TruncationRenormalized),
            format!("L^{sigma_txt}(Ω)"),
            "L^r(0,T;L^m(Ω)) with Nσ/m + (N(p-2)+pσ)/r ≤ N(p-1)+pσ".to_string(),
            "1 < σ < 2: infinite energy solutions, T_k(u) has finite energy".to_string(),
        ),
        Regime::BoundaryLLogL => (
            Some(1.0),
            Some(SolutionNotion::TruncationRenormalized),
            "L^{1+ω}(Ω), ω > 0".to_string(),
            "L^1(Q_T)".to_string(),
            "q = p - N/(N+1): σ = 1 is not enough, the datum needs a little more than L^1"
                .to_string(),
        ),
        Regime::RenormalizedYellow => (
            Some(1.0),
            Some(SolutionNotion::FullyRenormalized),
            "L^1(Ω)".to_string(),
            "L^1(Q_T)".to_string(),
            "renormalized solutions with L^1 data".to_string(),
        ),
        Regime::LinearBorderline => (
            None,
            None,
            "not classified".to_string(),
            "not classified".to_string(),
            "q equals the linear-growth threshold (p(N+1)-N)/(N+2); excluded from solver claims"
                .to_string(),
        ),
        Regime::Sublinear(sub) => {
            let (sig, notion) = match sub {
                MSubcase::MGe2 => (2.0, SolutionNotion::WeakFiniteEnergy),
                MSubcase::MIn12 => (1.0, SolutionNotion::TruncationRenormalized),
                MSubcase::MEq1 => (1.0, SolutionNotion::FullyRenormalized),
            };
            let sig = m.as_ref().map(|m| m.value()).unwrap_or(sig);
            let datum = match (sub, &m) {
                (MSubcase::MIn12, None) => "L^m(Ω), m > 1".to_string(),
                (_, None) => format!("L^{sig}(Ω)"),
                (_, Some(_)) => format!("L^{m_txt}(Ω)"),
            };
            (
                Some(sig),
                Some(notion),
                datum,
                format!("L^1(0,T;L^{m_txt}(Ω))"),
                if e.q.as_rational() * qi(2) == *e.p.as_rational() {
                    "q = p/2: linear growth, data in L^m with m > 1".to_string()
                } else {
                    "sublinear growth: estimates through the data norms".to_string()
                },
            )
        }
        Regime::NaturalGrowth => (
            None,
            None,
            "not classified".to_string(),
            "not classified".to_string(),
            "q = p: natural growth, outside the solver's scope".to_string(),
        ),
    };
    Ok(RegimeReport {
        exponents: e.clone(),
        derived,
        regime,
        required_sigma,
        solution_notion: notion,
        datum_space: datum,
        forcing_space: forcing,
        notes,
    })
}

/// Whether the data spaces are admissible for the regime of `e`.
///
/// In the red and orange regimes this is the mixed-norm inequality
/// `Nσ/m + (N(p-2)+pσ)/r ≤ N(p-1)+pσ` (equality admitted, `1/∞ = 0`)
/// together with `sigma_datum ≥ σ`. The `L^1` regimes ask for `m, r ≥ 1`
/// and `sigma_datum ≥ 1` (strictly above 1 on the `L log L` boundary).
pub fn admissible_data(e: &ProblemExponents, spec: &DataSpaceSpec) -> bool {
    if !(spec.m.at_least_one() && spec.r.at_least_one()) || spec.sigma_datum.is_negative_or_zero() {
        return false;
    }
    let (n, p, q) = (e.n, e.p.as_rational(), e.q.as_rational());
    let ge = |x: &ExtExponent, bound: &BigRational| match x {
        ExtExponent::Infinite => true,
        ExtExponent::Finite(v) => v.as_rational() >= bound,
    };
    match regime_exact(e) {
        Regime::FiniteEnergyRed | Regime::InfiniteEnergyOrange => {
            let nq = qi(n as i64);
            let sigma = raw::sigma(n, p, q);
            let lhs = spec.m.reciprocal_times(&(&nq * &sigma))
                + spec.r.reciprocal_times(&(&nq * (p - qi(2)) + p * &sigma));
            let rhs = &nq * (p - qi(1)) + p * &sigma;
            lhs <= rhs && ge(&spec.sigma_datum, &sigma)
        }
        Regime::RenormalizedYellow => ge(&spec.sigma_datum, &qi(1)),
        Regime::BoundaryLLogL => match &spec.sigma_datum {
            ExtExponent::Infinite => true,
            ExtExponent::Finite(v) => *v.as_rational() > qi(1),
        },
        Regime::Sublinear(_) => {
            let strict = q * qi(2) == *p;
            let datum_ok = match &spec.sigma_datum {
                ExtExponent::Infinite => true,
                ExtExponent::Finite(v) if strict => *v.as_rational() > qi(1),
                ExtExponent::Finite(v) => *v.as_rational() >= qi(1),
            };
            let forcing_ok = match (&spec.m, &spec.sigma_datum) {
                (ExtExponent::Infinite, _) => true,
                (_, ExtExponent::Infinite) => false,
                (ExtExponent::Finite(m), ExtExponent::Finite(s)) => m >= s,
            };
            datum_ok && forcing_ok
        }
        Regime::LinearBorderline | Regime::NaturalGrowth => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(n: u32, p: f64, q: f64) -> Regime {
        classify(&ProblemExponents::shape(n, p, q).unwrap()).regime
    }

    #[test]
    fn canonical_examples() {
        let r = classify(&ProblemExponents::shape(3, 2.0, 1.5).unwrap());
        assert_eq!(r.regime, Regime::FiniteEnergyRed);
        assert_eq!(r.required_sigma, Some(3.0));
        assert_eq!(r.solution_notion, Some(SolutionNotion::WeakFiniteEnergy));
        let r = classify(&ProblemExponents::shape(3, 2.0, 1.35).unwrap());
        assert_eq!(r.regime, Regime::InfiniteEnergyOrange);
        let s = r.required_sigma.unwrap();
        assert!(s > 1.0 && s < 2.0 && (s - 1.615_384_615_384_615_4).abs() < 1e-12);
        let r = classify(&ProblemExponents::shape(3, 2.0, 1.1).unwrap());
        assert_eq!(r.regime, Regime::RenormalizedYellow);
        assert_eq!(r.required_sigma, Some(1.0));
        assert_eq!(r.datum_space, "L^1(Ω)");
        assert_eq!(reg(3, 1.5, 0.7), Regime::Sublinear(MSubcase::MEq1));
        assert_eq!(reg(3, 2.0, 2.0), Regime::NaturalGrowth);
    }

    #[test]
    fn boundary_memberships() {
        assert_eq!(reg(3, 2.0, 1.4), Regime::FiniteEnergyRed);
        assert_eq!(reg(3, 2.0, 1.25), Regime::BoundaryLLogL);
        assert_eq!(reg(3, 2.0, 1.0), Regime::LinearBorderline);
        // the decimal 1.8571428571428572 lies just above 13/7
        assert_eq!(reg(5, 3.0, 13.0 / 7.0), Regime::RenormalizedYellow);
        let e = ProblemExponents::shape_exact(5, Exponent::from_integer(3), Exponent::from_ratio(13, 7)).unwrap();
        assert_eq!(classify(&e).regime, Regime::LinearBorderline);
        assert_eq!(reg(3, 1.5, 0.75), Regime::Sublinear(MSubcase::MIn12));
        let r = classify(&ProblemExponents::shape(3, 2.0, 1.25).unwrap());
        assert_eq!(r.datum_space, "L^{1+ω}(Ω), ω > 0");
    }

    #[test]
    fn sublinear_subcases_from_datum() {
        let e = ProblemExponents::shape(3, 1.5, 0.7).unwrap();
        assert_eq!(classify_with_datum(&e, 2.5).unwrap().regime, Regime::Sublinear(MSubcase::MGe2));
        assert_eq!(classify_with_datum(&e, 1.5).unwrap().regime, Regime::Sublinear(MSubcase::MIn12));
        assert_eq!(classify_with_datum(&e, 1.0).unwrap().regime, Regime::Sublinear(MSubcase::MEq1));
        let lin = ProblemExponents::shape(3, 1.5, 0.75).unwrap();
        assert!(classify_with_datum(&lin, 1.0).is_err());
        assert!(classify_with_datum(&e, 0.5).is_err());
    }

    #[test]
    fn forcing_admissibility() {
        let e = ProblemExponents::shape(3, 2.0, 1.5).unwrap();
        let inf = f64::INFINITY;
        assert!(admissible_data(&e, &DataSpaceSpec::new(1.0, inf, 3.0).unwrap()));
        assert!(!admissible_data(&e, &DataSpaceSpec::new(0.9, inf, 3.0).unwrap()));
        assert!(admissible_data(&e, &DataSpaceSpec::new(inf, inf, 3.0).unwrap()));
        assert!(!admissible_data(&e, &DataSpaceSpec::new(inf, inf, 2.5).unwrap()));
        let y = ProblemExponents::shape(3, 2.0, 1.1).unwrap();
        assert!(admissible_data(&y, &DataSpaceSpec::new(1.0, 1.0, 1.0).unwrap()));
        let b = ProblemExponents::shape(3, 2.0, 1.25).unwrap();
        assert!(!admissible_data(&b, &DataSpaceSpec::new(1.0, 1.0, 1.0).unwrap()));
        assert!(admissible_data(&b, &DataSpaceSpec::new(1.0, 1.0, 1.01).unwrap()));
    }
}
