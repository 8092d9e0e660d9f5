use std::fmt::Write as _;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::classify::regime_exact;
use super::exponent::Exponent;
use super::formulas::{check_dim_p, qi, raw};
use super::ProblemExponents;
use crate::error::{domain, Result};

/// The six named q-breakpoints, in tie-breaking order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Breakpoint {
    HalfP,
    LinearThreshold,
    PMinusOne,
    Sigma1,
    Sigma2,
    P,
}

impl Breakpoint {
    pub fn label(&self) -> &'static str {
        match self {
            Breakpoint::HalfP => "p/2",
            Breakpoint::LinearThreshold => "(p(N+1)-N)/(N+2)",
            Breakpoint::PMinusOne => "p-1",
            Breakpoint::Sigma1 => "p-N/(N+1)",
            Breakpoint::Sigma2 => "p-N/(N+2)",
            Breakpoint::P => "p",
        }
    }

    fn value(&self, n: u32, p: &BigRational) -> BigRational {
        match self {
            Breakpoint::HalfP => p / qi(2),
            Breakpoint::LinearThreshold => raw::linear_threshold(n, p),
            Breakpoint::PMinusOne => p - qi(1),
            Breakpoint::Sigma1 => raw::q_sigma1(n, p),
            Breakpoint::Sigma2 => raw::q_sigma2(n, p),
            Breakpoint::P => p.clone(),
        }
    }
}

const ALL: [Breakpoint; 6] = [
    Breakpoint::HalfP,
    Breakpoint::LinearThreshold,
    Breakpoint::PMinusOne,
    Breakpoint::Sigma1,
    Breakpoint::Sigma2,
    Breakpoint::P,
];

/// Range of `p` that fixes the layout of the regime diagram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PRange {
    /// `2 ≤ p < N`
    Degenerate,
    /// `2N/(N+1) < p < 2`
    MildlySingular,
    /// `2N/(N+2) < p ≤ 2N/(N+1)`
    Singular,
    /// `1 < p ≤ 2N/(N+2)`
    StronglySingular,
}

impl PRange {
    pub fn of(n: u32, p: &Exponent) -> PRange {
        let p = p.as_rational();
        let nq = qi(n as i64);
        if *p >= qi(2) {
            PRange::Degenerate
        } else if *p > qi(2) * &nq / (&nq + qi(1)) {
            PRange::MildlySingular
        } else if *p > qi(2) * &nq / (&nq + qi(2)) {
            PRange::Singular
        } else {
            PRange::StronglySingular
        }
    }

    pub fn caption(&self) -> &'static str {
        match self {
            PRange::Degenerate => "2 <= p < N",
            PRange::MildlySingular => "2N/(N+1) < p < 2",
            PRange::Singular => "2N/(N+2) < p <= 2N/(N+1)",
            PRange::StronglySingular => "1 < p <= 2N/(N+2)",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasRow {
    pub breakpoint: Breakpoint,
    pub q_break: Exponent,
    pub regime_left: String,
    pub regime_right: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atlas {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: Exponent,
    pub p_range: PRange,
    pub rows: Vec<AtlasRow>,
}

fn tag_at(n: u32, p: &Exponent, q: BigRational) -> String {
    let e = ProblemExponents::shape_exact(n, p.clone(), Exponent::from_rational(q))
        .expect("midpoint lies in (0, p)");
    regime_exact(&e).tag().to_string()
}

/// Sorted breakpoints for `(N, p)` with the regime on either side of each.
///
/// The regime left/right of a breakpoint is the classification at the
/// midpoint of the adjacent interval between distinct breakpoints (the
/// leftmost interval starts at 0); beyond `q = p` it is `supernatural`.
pub fn atlas(n: u32, p: &Exponent) -> Result<Atlas> {
    let pr = p.as_rational();
    check_dim_p(n, pr)?;
    let mut pts: Vec<(BigRational, Breakpoint)> = ALL.iter().map(|b| (b.value(n, pr), *b)).collect();
    pts.sort();
    let mut distinct: Vec<BigRational> = pts.iter().map(|(v, _)| v.clone()).collect();
    distinct.dedup();
    let rows = pts
        .into_iter()
        .map(|(v, b)| {
            let j = distinct.iter().position(|d| *d == v).unwrap();
            let lo = if j == 0 { qi(0) } else { distinct[j - 1].clone() };
            let left = tag_at(n, p, (&lo + &v) / qi(2));
            let right = if j + 1 < distinct.len() {
                tag_at(n, p, (&v + &distinct[j + 1]) / qi(2))
            } else {
                "supernatural".to_string()
            };
            AtlasRow {
                breakpoint: b,
                q_break: Exponent::from_rational(v),
                regime_left: left,
                regime_right: right,
            }
        })
        .collect();
    Ok(Atlas {
        n,
        p: p.clone(),
        p_range: PRange::of(n, p),
        rows,
    })
}

/// Atlases at `samples` equally spaced values of `p` in `[p_lo, p_hi]`.
pub fn atlas_range(n: u32, p_lo: &Exponent, p_hi: &Exponent, samples: usize) -> Result<Vec<Atlas>> {
    if samples == 0 {
        return domain("atlas needs at least one p sample");
    }
    if p_lo > p_hi {
        return domain("atlas p range is empty");
    }
    (0..samples)
        .map(|k| {
            let p = if samples == 1 {
                p_lo.clone()
            } else {
                let t = BigRational::new(k.into(), (samples - 1).into());
                Exponent::from_rational(p_lo.as_rational() + t * (p_hi.as_rational() - p_lo.as_rational()))
            };
            atlas(n, &p)
        })
        .collect()
}

/// CSV with columns `N,p,q_break,regime_left,regime_right`.
pub fn atlas_csv(atlases: &[Atlas]) -> String {
    let mut out = String::from("N,p,q_break,regime_left,regime_right\n");
    for a in atlases {
        for r in &a.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                a.n,
                a.p.value(),
                r.q_break.value(),
                r.regime_left,
                r.regime_right
            );
        }
    }
    out
}

fn color(tag: &str) -> &'static str {
    match tag {
        "sublinear" => "#bdbdbd",
        "yellow" => "#f5d328",
        "orange" => "#f39c34",
        "red" => "#d73027",
        _ => "#ffffff",
    }
}

/// Static SVG 1.1 drawing of the colored q-axis, one band per atlas.
pub fn atlas_svg(atlases: &[Atlas]) -> String {
    let width = 760.0;
    let (x0, x1) = (150.0, 730.0);
    let band = 26.0;
    let row_h = 64.0;
    let q_max = atlases.iter().map(|a| a.p.value()).fold(1.0_f64, f64::max);
    let sx = |q: f64| x0 + (x1 - x0) * q / q_max;
    let height = 50.0 + row_h * atlases.len() as f64 + 40.0;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let title = atlases.first().map(|a| format!("Regime atlas, N = {}", a.n)).unwrap_or_default();
    let _ = writeln!(s, r#"<text x="10" y="20" font-size="14">{title}</text>"#);
    for (i, a) in atlases.iter().enumerate() {
        let y = 40.0 + row_h * i as f64;
        let _ = writeln!(s, r#"<g id="p{i}">"#);
        let _ = writeln!(
            s,
            r#"<text x="10" y="{:.1}">p = {}</text>"#,
            y + band * 0.5,
            a.p.value()
        );
        let _ = writeln!(
            s,
            r#"<text x="10" y="{:.1}" font-size="9">{}</text>"#,
            y + band * 0.5 + 12.0,
            a.p_range.caption().replace('<', "&lt;")
        );
        let mut prev = 0.0;
        let mut distinct: Vec<(f64, &str)> = Vec::new();
        for r in &a.rows {
            let v = r.q_break.value();
            if distinct.last().map(|d| d.0) != Some(v) {
                distinct.push((v, r.regime_left.as_str()));
            }
        }
        for (v, tag) in &distinct {
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{y:.1}" width="{:.2}" height="{band}" fill="{}" stroke="none"><title>{tag}</title></rect>"#,
                sx(prev),
                sx(*v) - sx(prev),
                color(tag)
            );
            prev = *v;
        }
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.1}" x2="{:.2}" y2="{:.1}" stroke="black"/>"#,
            sx(0.0),
            y + band,
            sx(q_max),
            y + band
        );
        for (k, (v, _)) in distinct.iter().enumerate() {
            let x = sx(*v);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{y:.1}" x2="{x:.2}" y2="{:.1}" stroke="black"/>"#,
                y + band + 4.0
            );
            let dy = if k % 2 == 0 { 14.0 } else { 24.0 };
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle" font-size="9">{}</text>"#,
                y + band + dy,
                fmt_short(*v)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    let ly = height - 18.0;
    for (k, tag) in ["sublinear", "yellow", "orange", "red"].iter().enumerate() {
        let x = x0 + 110.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{ly:.1}">{tag}</text>"#,
            ly - 10.0,
            color(tag),
            x + 16.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_short(v: f64) -> String {
    let t = format!("{v:.4}");
    let t = t.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_order_at_p2() {
        let a = atlas(3, &Exponent::from_integer(2)).unwrap();
        let vals: Vec<f64> = a.rows.iter().map(|r| r.q_break.value()).collect();
        assert_eq!(vals, vec![1.0, 1.0, 1.0, 1.25, 1.4, 2.0]);
        assert_eq!(a.p_range, PRange::Degenerate);
        let sig1 = a.rows.iter().find(|r| r.breakpoint == Breakpoint::Sigma1).unwrap();
        assert_eq!(sig1.regime_left, "yellow");
        assert_eq!(sig1.regime_right, "orange");
        assert_eq!(a.rows[5].regime_right, "supernatural");
    }

    #[test]
    fn fig4_has_no_yellow() {
        let a = atlas(3, &Exponent::from_ratio(11, 10)).unwrap();
        assert_eq!(a.p_range, PRange::StronglySingular);
        assert!(a.rows.iter().all(|r| r.regime_left != "yellow" && r.regime_right != "yellow"));
        let b = atlas(3, &Exponent::from_ratio(6, 5)).unwrap();
        assert_eq!(b.p_range, PRange::StronglySingular);
    }

    #[test]
    fn fig2_ordering() {
        let a = atlas(3, &Exponent::from_ratio(9, 5)).unwrap();
        assert_eq!(a.p_range, PRange::MildlySingular);
        let order: Vec<Breakpoint> = a.rows.iter().map(|r| r.breakpoint).collect();
        assert_eq!(order[0], Breakpoint::PMinusOne);
        assert_eq!(order[1], Breakpoint::LinearThreshold);
        assert_eq!(order[2], Breakpoint::HalfP);
    }

    #[test]
    fn svg_is_deterministic() {
        let xs = atlas_range(3, &Exponent::from_ratio(11, 10), &Exponent::from_ratio(5, 2), 4).unwrap();
        assert_eq!(atlas_svg(&xs), atlas_svg(&xs));
        assert!(atlas_svg(&xs).starts_with("<?xml"));
    }
}
