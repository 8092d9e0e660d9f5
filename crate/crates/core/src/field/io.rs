use std::fmt::Write as _;
use std::sync::Arc;

use super::grid::{Grid, GridMode, GridSpec};
use super::{Field, Trajectory};
use crate::error::{Error, Result};

const MAGIC: &[u8; 5] = b"SPLB1";

fn coord_header(grid: &Grid) -> &'static str {
    match grid.mode() {
        GridMode::Cartesian { dim: 1 } => "x",
        GridMode::Cartesian { dim: 2 } => "x,y",
        GridMode::Cartesian { .. } => "x,y,z",
        GridMode::Radial { .. } => "r",
    }
}

fn write_row(out: &mut String, coords: &[f64], value: f64) {
    for c in coords {
        let _ = write!(out, "{c},");
    }
    let _ = writeln!(out, "{value:e}");
}

/// CSV with one row per unknown: coordinates then value.
pub fn field_to_csv(u: &Field) -> String {
    let grid = u.grid();
    let mut out = format!("{},value\n", coord_header(grid));
    for (i, v) in u.values().iter().enumerate() {
        write_row(&mut out, &grid.coords(i), *v);
    }
    out
}

/// Long-format CSV: `t`, coordinates, value.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let grid = traj.grid();
    let mut out = format!("t,{},value\n", coord_header(grid));
    for (t, s) in traj.times().iter().zip(traj.states()) {
        for (i, v) in s.iter().enumerate() {
            let _ = write!(out, "{t:e},");
            write_row(&mut out, &grid.coords(i), *v);
        }
    }
    out
}

/// Binary dump: magic `SPLB1`, grid header, then little-endian doubles in
/// row-major order.
pub fn write_binary(u: &Field) -> Vec<u8> {
    let spec = u.grid().spec();
    let (mode, d) = match spec.mode {
        GridMode::Cartesian { dim } => (0u8, dim as u32),
        GridMode::Radial { n } => (1u8, n),
    };
    let mut out = Vec::with_capacity(42 + 8 * u.values().len());
    out.extend_from_slice(MAGIC);
    out.push(mode);
    out.extend_from_slice(&d.to_le_bytes());
    out.extend_from_slice(&(spec.cells as u64).to_le_bytes());
    out.extend_from_slice(&spec.extent.to_le_bytes());
    out.extend_from_slice(&spec.t_horizon.to_le_bytes());
    out.extend_from_slice(&(u.values().len() as u64).to_le_bytes());
    for v in u.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("binary field is truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_binary(bytes: &[u8]) -> Result<Field> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(5)? != MAGIC {
        return Err(Error::Format("missing SPLB1 magic".into()));
    }
    let mode = r.take(1)?[0];
    let d = r.u32()?;
    let cells = r.u64()? as usize;
    let extent = r.f64()?;
    let t_horizon = r.f64()?;
    let count = r.u64()? as usize;
    let mode = match mode {
        0 => GridMode::Cartesian { dim: d as usize },
        1 => GridMode::Radial { n: d },
        other => return Err(Error::Format(format!("unknown grid mode tag {other}"))),
    };
    let grid = Grid::new(GridSpec {
        mode,
        extent,
        cells,
        t_horizon,
    })
    .map_err(|e| Error::Format(format!("invalid grid header: {e}")))?;
    if count != grid.len() {
        return Err(Error::Format("value count does not match the grid".into()));
    }
    let values = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after field data".into()));
    }
    Field::new(Arc::new(grid), values)
}
