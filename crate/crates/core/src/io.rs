//! On-disk formats.
//!
//! | file     | header               | payload                                         |
//! |----------|----------------------|-------------------------------------------------|
//! | raster   | `PUW1 <rows> <cols>\n`  | `rows*cols` little-endian `f64`, row-major     |
//! | shifts   | `PUWS1 <rows> <cols>\n` | `a` then `b` as `i8` in `{-1, 0, 1}`, row-major |
//! | beliefs  | `PUWB1 <rows> <cols>\n` | `alpha` then `beta` triples as LE `f64`        |
//!
//! `<rows> <cols>` always describe the pixel grid. Heatmaps are written as
//! binary 8-bit PGM (`P5`), and per-temperature solver traces as CSV.

use std::io::{BufRead, Read, Write};

use ndarray::Array2;

use crate::grid::ShiftField;
use crate::model::{BeliefField, Triple};
use crate::solver::TemperatureRecord;
use crate::{Error, Result};

pub const RASTER_MAGIC: &str = "PUW1";
pub const SHIFT_MAGIC: &str = "PUWS1";
pub const BELIEF_MAGIC: &str = "PUWB1";

/// Upper bound on header length, so garbage input fails fast.
const MAX_HEADER: usize = 64;

fn write_header<W: Write>(w: &mut W, magic: &str, rows: usize, cols: usize) -> Result<()> {
    writeln!(w, "{magic} {rows} {cols}")?;
    Ok(())
}

fn read_header<R: BufRead>(r: &mut R, magic: &str) -> Result<(usize, usize)> {
    let mut line = Vec::new();
    r.by_ref()
        .take(MAX_HEADER as u64)
        .read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Format(format!("missing or overlong {magic} header")));
    }
    let text = std::str::from_utf8(&line[..line.len() - 1])
        .map_err(|_| Error::Format("header is not ASCII".into()))?;
    let mut parts = text.split(' ');
    let (Some(m), Some(rows), Some(cols), None) =
        (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(Error::Format(format!(
            "expected `{magic} <rows> <cols>`, got {text:?}"
        )));
    };
    if m != magic {
        return Err(Error::Format(format!("expected magic {magic}, got {m:?}")));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad dimension {s:?} in header")))
    };
    let (rows, cols) = (parse(rows)?, parse(cols)?);
    if rows < 2 || cols < 2 {
        return Err(Error::GridTooSmall { rows, cols });
    }
    Ok((rows, cols))
}

fn read_exact_payload<R: Read>(r: &mut R, len: usize) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(len);
    r.by_ref().take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(Error::Format(format!(
            "payload truncated: expected {len} bytes, got {}",
            buf.len()
        )));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(buf)
}

fn f64s(bytes: &[u8]) -> impl Iterator<Item = f64> + '_ {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
}

pub fn write_raster<W: Write>(w: &mut W, raster: &Array2<f64>) -> Result<()> {
    let (rows, cols) = raster.dim();
    write_header(w, RASTER_MAGIC, rows, cols)?;
    let mut buf = Vec::with_capacity(8 * raster.len());
    for v in raster.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_raster<R: BufRead>(r: &mut R) -> Result<Array2<f64>> {
    let (rows, cols) = read_header(r, RASTER_MAGIC)?;
    let bytes = read_exact_payload(r, 8 * rows * cols)?;
    Ok(Array2::from_shape_vec((rows, cols), f64s(&bytes).collect()).expect("payload sized"))
}

pub fn write_shifts<W: Write>(w: &mut W, shifts: &ShiftField) -> Result<()> {
    let (rows, cols) = shifts.dim();
    write_header(w, SHIFT_MAGIC, rows, cols)?;
    let buf: Vec<u8> = shifts
        .a()
        .iter()
        .chain(shifts.b().iter())
        .map(|&k| k as u8)
        .collect();
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_shifts<R: BufRead>(r: &mut R) -> Result<ShiftField> {
    let (rows, cols) = read_header(r, SHIFT_MAGIC)?;
    let na = rows * (cols - 1);
    let nb = (rows - 1) * cols;
    let bytes = read_exact_payload(r, na + nb)?;
    let vals: Vec<i8> = bytes.iter().map(|&b| b as i8).collect();
    if let Some(&bad) = vals.iter().find(|v| !(-1..=1).contains(*v)) {
        return Err(Error::Format(format!(
            "shift value {bad} outside {{-1, 0, 1}}"
        )));
    }
    let a = Array2::from_shape_vec((rows, cols - 1), vals[..na].to_vec()).expect("sized");
    let b = Array2::from_shape_vec((rows - 1, cols), vals[na..].to_vec()).expect("sized");
    ShiftField::new(a, b)
}

pub fn write_beliefs<W: Write>(w: &mut W, beliefs: &BeliefField) -> Result<()> {
    let (rows, cols) = beliefs.dim();
    write_header(w, BELIEF_MAGIC, rows, cols)?;
    let mut buf = Vec::with_capacity(24 * beliefs.edge_count());
    for t in beliefs.alpha().iter().chain(beliefs.beta().iter()) {
        for p in t {
            buf.extend_from_slice(&p.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_beliefs<R: BufRead>(r: &mut R) -> Result<BeliefField> {
    let (rows, cols) = read_header(r, BELIEF_MAGIC)?;
    let na = rows * (cols - 1);
    let nb = (rows - 1) * cols;
    let bytes = read_exact_payload(r, 24 * (na + nb))?;
    let vals: Vec<f64> = f64s(&bytes).collect();
    let triples: Vec<Triple> = vals.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let alpha = Array2::from_shape_vec((rows, cols - 1), triples[..na].to_vec()).expect("sized");
    let beta = Array2::from_shape_vec((rows - 1, cols), triples[na..].to_vec()).expect("sized");
    BeliefField::new(alpha, beta)
}

/// Min-max scaled 8-bit binary PGM. With `invert`, the largest value is
/// black. Returns the `(min, max)` that were mapped to the grey range.
pub fn write_pgm<W: Write>(w: &mut W, raster: &Array2<f64>, invert: bool) -> Result<(f64, f64)> {
    let (rows, cols) = raster.dim();
    let (lo, hi) = raster
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    write!(w, "P5\n{cols} {rows}\n255\n")?;
    let px: Vec<u8> = raster
        .iter()
        .map(|&v| {
            let t = if span > 0.0 { (v - lo) / span } else { 0.0 };
            let t = if invert { 1.0 - t } else { t };
            (t * 255.0).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    w.write_all(&px)?;
    Ok((lo, hi))
}

pub const REPORT_HEADER: &str = "temperature,inv_temperature,sweeps,F,curl_violations,mean_entropy";

/// One CSV row per temperature.
pub fn write_report<W: Write>(w: &mut W, records: &[TemperatureRecord]) -> Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.temperature,
            r.inv_temperature(),
            r.sweeps,
            r.free_energy(),
            r.curl_violations,
            r.mean_entropy
        )?;
    }
    Ok(())
}

/// A parsed report row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub temperature: f64,
    pub inv_temperature: f64,
    pub sweeps: usize,
    pub free_energy: f64,
    pub curl_violations: usize,
    pub mean_entropy: f64,
}

pub fn read_report<R: BufRead>(r: R) -> Result<Vec<ReportRow>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != REPORT_HEADER {
        return Err(Error::Format("missing report header".into()));
    }
    let bad = |l: &str| Error::Format(format!("bad report row {l:?}"));
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(&line));
        }
        rows.push(ReportRow {
            temperature: f[0].parse().map_err(|_| bad(&line))?,
            inv_temperature: f[1].parse().map_err(|_| bad(&line))?,
            sweeps: f[2].parse().map_err(|_| bad(&line))?,
            free_energy: f[3].parse().map_err(|_| bad(&line))?,
            curl_violations: f[4].parse().map_err(|_| bad(&line))?,
            mean_entropy: f[5].parse().map_err(|_| bad(&line))?,
        });
    }
    Ok(rows)
}
