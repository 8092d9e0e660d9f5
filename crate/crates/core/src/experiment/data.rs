use std::path::Path;

use super::scenario::{DatumProfile, DatumSpec, ForcingFamily, ForcingSpec};
use crate::error::{domain, Error, Result};
use crate::field::norms::lebesgue_raw;
use crate::field::{read_binary, unit_sphere_measure, Grid, GridMode};

/// `(1 - s)³₊` with `s = |y|²/ρ²`.
pub fn smooth_bump(dist2: f64, radius: f64) -> f64 {
    let s = 1.0 - dist2 / (radius * radius);
    if s > 0.0 {
        s * s * s
    } else {
        0.0
    }
}

fn default_center(grid: &Grid) -> Vec<f64> {
    match grid.mode() {
        GridMode::Cartesian { dim } => vec![0.5 * grid.spec().extent; dim],
        GridMode::Radial { .. } => vec![0.0],
    }
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn check_center(grid: &Grid, c: &Option<Vec<f64>>) -> Result<Vec<f64>> {
    match (grid.mode(), c) {
        (_, None) => Ok(default_center(grid)),
        (GridMode::Radial { .. }, Some(_)) => domain("radial profiles are centred at the origin"),
        (GridMode::Cartesian { dim }, Some(c)) if c.len() != dim => domain("centre has the wrong dimension"),
        (_, Some(c)) => Ok(c.clone()),
    }
}

/// Mean of `f` over the control volume of unknown `i`, by a midpoint rule with
/// `sub` points per axis (radial: weighted by `r^{N-1}`).
pub fn cell_mean(grid: &Grid, i: usize, sub: usize, f: &impl Fn(&[f64]) -> f64) -> f64 {
    let h = grid.h();
    match grid.mode() {
        GridMode::Radial { n } => {
            let r0 = i as f64 * h;
            let (mut num, mut den) = (0.0, 0.0);
            for k in 0..sub {
                let r = r0 + (k as f64 + 0.5) * h / sub as f64;
                let w = r.powi(n as i32 - 1);
                num += w * f(&[r]);
                den += w;
            }
            num / den
        }
        GridMode::Cartesian { dim } => {
            let x = grid.coords(i);
            let total = sub.pow(dim as u32);
            let mut pt = vec![0.0; dim];
            let mut acc = 0.0;
            for idx in 0..total {
                let mut rest = idx;
                for a in 0..dim {
                    let k = rest % sub;
                    rest /= sub;
                    pt[a] = x[a] - 0.5 * h + (k as f64 + 0.5) * h / sub as f64;
                }
                acc += f(&pt);
            }
            acc / total as f64
        }
    }
}

/// `A |x - c|^{-N/η+ω}` on `|x - c| < ρ`, as `L^η` means over control
/// volumes. Radial shells are integrated in closed form, so the discrete
/// `L^η` norm equals the continuous one.
pub fn power_law_datum(grid: &Grid, eta: f64, omega: f64, amplitude: f64, support: f64) -> Result<Vec<f64>> {
    if !(eta >= 1.0) {
        return domain("power-law datum needs eta >= 1");
    }
    if !(omega > 0.0) {
        return domain("power-law datum needs omega > 0");
    }
    let nd = grid.effective_dim() as f64;
    let expo = -nd / eta + omega;
    let a = omega * eta;
    match grid.mode() {
        GridMode::Radial { n } => {
            let s = unit_sphere_measure(n);
            let h = grid.h();
            Ok((0..grid.len())
                .map(|i| {
                    let r0 = (i as f64 * h).min(support);
                    let r1 = ((i + 1) as f64 * h).min(support);
                    let mass = amplitude.abs().powf(eta) * s * (r1.powf(a) - r0.powf(a)) / a;
                    amplitude.signum() * (mass / grid.volumes()[i]).powf(1.0 / eta)
                })
                .collect())
        }
        GridMode::Cartesian { .. } => {
            let c = default_center(grid);
            let f = |x: &[f64]| {
                let r = dist2(x, &c).sqrt();
                if r < support {
                    (amplitude.abs() * r.powf(expo)).powf(eta)
                } else {
                    0.0
                }
            };
            Ok((0..grid.len())
                .map(|i| amplitude.signum() * cell_mean(grid, i, 8, &f).powf(1.0 / eta))
                .collect())
        }
    }
}

/// Spike `A j^{N/m} bump(j (x - c))`, sampled by cell means.
pub fn spike_forcing(grid: &Grid, j: f64, m: f64, amplitude: f64, radius: f64, center: &[f64]) -> Vec<f64> {
    let nd = grid.effective_dim() as f64;
    let scale = amplitude * j.powf(nd / m);
    let f = |x: &[f64]| scale * smooth_bump(j * j * dist2(x, center), radius);
    (0..grid.len()).map(|i| cell_mean(grid, i, 8, &f)).collect()
}

fn read_values(grid: &Grid, path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(b"SPLB1") {
        let field = read_binary(&bytes)?;
        let (a, b) = (field.grid().spec(), grid.spec());
        if a.mode != b.mode || a.cells != b.cells || a.extent != b.extent {
            return Err(Error::Format("binary field was written on a different grid".into()));
        }
        return Ok(field.into_values());
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::Format("field file is neither SPLB1 nor UTF-8".into()))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let last = line.rsplit(',').next().unwrap_or("").trim();
        if last.is_empty() {
            continue;
        }
        match last.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if k == 0 => continue,
            Err(_) => return Err(Error::Format(format!("line {}: `{last}` is not a number", k + 1))),
        }
    }
    if out.len() != grid.len() {
        return Err(Error::Format(format!(
            "field file has {} values, the grid has {} unknowns",
            out.len(),
            grid.len()
        )));
    }
    Ok(out)
}

/// Samples the initial datum; `norm_exponent` is used when normalizing.
pub fn sample_datum(spec: &DatumSpec, grid: &Grid, norm_exponent: f64, base: &Path) -> Result<Vec<f64>> {
    let ext = grid.spec().extent;
    let a = spec.amplitude;
    let c = check_center(grid, &spec.center)?;
    let radial = matches!(grid.mode(), GridMode::Radial { .. });
    let mut v = match spec.profile {
        DatumProfile::Sine => grid.sample(|x| {
            if radial {
                let s = std::f64::consts::PI * x[0] / ext;
                a * s.sin() / s
            } else {
                a * x.iter().map(|xi| (std::f64::consts::PI * xi / ext).sin()).product::<f64>()
            }
        }),
        DatumProfile::Bump => {
            let rho = spec.radius.unwrap_or(0.25 * ext);
            grid.sample(|x| a * smooth_bump(dist2(x, &c), rho))
        }
        DatumProfile::Gaussian => {
            let w = spec.width.unwrap_or(0.1 * ext);
            grid.sample(|x| a * (-dist2(x, &c) / (2.0 * w * w)).exp())
        }
        DatumProfile::Constant => vec![a; grid.len()],
        DatumProfile::PowerLaw => {
            let eta = spec.eta.ok_or_else(|| Error::Domain("power_law needs eta".into()))?;
            let support = spec.radius.unwrap_or(if radial { ext } else { 0.5 * ext });
            power_law_datum(grid, eta, spec.omega.unwrap_or(0.01), a, support)?
        }
        DatumProfile::File => {
            let path = spec.path.as_ref().ok_or_else(|| Error::Domain("file datum needs path".into()))?;
            read_values(grid, &base.join(path))?
        }
    };
    if spec.normalize {
        let s = norm_exponent;
        let current = lebesgue_raw(grid.volumes(), &v, s);
        if !(current > 0.0) {
            return domain("cannot normalize a zero datum");
        }
        let k = spec.norm_value.unwrap_or(1.0) / current;
        v.iter_mut().for_each(|x| *x *= k);
    }
    Ok(v)
}

pub fn sample_forcing(spec: &ForcingSpec, grid: &Grid, base: &Path) -> Result<Vec<f64>> {
    let ext = grid.spec().extent;
    let a = spec.amplitude.unwrap_or(1.0);
    let c = check_center(grid, &spec.center)?;
    let rho = spec.radius.unwrap_or(0.25 * ext);
    Ok(match spec.family {
        ForcingFamily::None => vec![0.0; grid.len()],
        ForcingFamily::Constant => vec![a; grid.len()],
        ForcingFamily::Bump => {
            let f = |x: &[f64]| a * smooth_bump(dist2(x, &c), rho);
            (0..grid.len()).map(|i| cell_mean(grid, i, 4, &f)).collect()
        }
        ForcingFamily::Spike => {
            let m = spec.m.ok_or_else(|| Error::Domain("spike forcing needs m".into()))?;
            spike_forcing(grid, spec.j.unwrap_or(1.0), m, a, rho, &c)
        }
        ForcingFamily::File => {
            let path = spec.path.as_ref().ok_or_else(|| Error::Domain("file forcing needs path".into()))?;
            read_values(grid, &base.join(path))?
        }
    })
}
