//! Synthetic terrain with known ground truth, and error metrics.

use std::fmt::Write as _;
use std::str::FromStr;

use ndarray::{Array2, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::grid::{wrap, ShiftField, UnwrappedSurface, WrappedImage};
use crate::lsq::wrap_centered;
use crate::{Error, Result};

/// A Gaussian bump `amplitude * exp(-r² / (2 width²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub row: f64,
    pub col: f64,
    /// Wavelengths.
    pub amplitude: f64,
    /// Pixels.
    pub width: f64,
}

/// Recipe for a synthetic surface: a planar ramp, Gaussian bumps and white
/// Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainSpec {
    pub rows: usize,
    pub cols: usize,
    /// Wavelengths per column step.
    pub slope_x: f64,
    /// Wavelengths per row step.
    pub slope_y: f64,
    pub bumps: Vec<Bump>,
    /// Standard deviation of per-pixel noise, wavelengths.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for TerrainSpec {
    fn default() -> Self {
        Self::smooth(100, 100)
    }
}

impl TerrainSpec {
    /// Ramp plus two broad bumps scaled to the grid size, and one narrow
    /// mound of fixed pixel size. The mound's flanks are steep enough that a
    /// few true steps exceed half a wavelength, so edgewise rounding leaves
    /// curl violations that inference has to resolve.
    pub fn smooth(rows: usize, cols: usize) -> Self {
        let (r, c) = (rows as f64, cols as f64);
        let scale = r.min(c) / 100.0;
        Self {
            rows,
            cols,
            slope_x: 0.02,
            slope_y: 0.03,
            bumps: vec![
                Bump {
                    row: 0.35 * r,
                    col: 0.40 * c,
                    amplitude: 2.0 * scale,
                    width: 18.0 * scale,
                },
                Bump {
                    row: 0.70 * r,
                    col: 0.65 * c,
                    amplitude: -1.5 * scale,
                    width: 25.0 * scale,
                },
                Bump {
                    row: 0.30 * r,
                    col: 0.75 * c,
                    amplitude: 3.0,
                    width: 3.5,
                },
            ],
            noise_std: 0.0,
            seed: 0,
        }
    }

    /// The smooth recipe plus noise and a second, wider steep mound.
    pub fn hard(rows: usize, cols: usize, seed: u64) -> Self {
        let mut spec = Self::smooth(rows, cols);
        spec.bumps.push(Bump {
            row: 0.75 * rows as f64,
            col: 0.25 * cols as f64,
            amplitude: 5.0,
            width: 6.0,
        });
        spec.noise_std = 0.05;
        spec.seed = seed;
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::GridTooSmall {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let finite = [self.slope_x, self.slope_y, self.noise_std]
            .into_iter()
            .chain(
                self.bumps
                    .iter()
                    .flat_map(|b| [b.row, b.col, b.amplitude, b.width]),
            )
            .all(f64::is_finite);
        if !finite {
            return Err(Error::InvalidParameter(
                "terrain parameters must be finite".into(),
            ));
        }
        if self.noise_std < 0.0 {
            return Err(Error::InvalidParameter(
                "noise_std must be nonnegative".into(),
            ));
        }
        if let Some(b) = self.bumps.iter().find(|b| b.width <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bump width {} must be positive",
                b.width
            )));
        }
        Ok(())
    }

    /// `key = value` lines, one bump per `bump = row, col, amplitude, width` line.
    pub fn to_config(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "rows = {}", self.rows);
        let _ = writeln!(s, "cols = {}", self.cols);
        let _ = writeln!(s, "slope_x = {}", self.slope_x);
        let _ = writeln!(s, "slope_y = {}", self.slope_y);
        let _ = writeln!(s, "noise_std = {}", self.noise_std);
        let _ = writeln!(s, "seed = {}", self.seed);
        for b in &self.bumps {
            let _ = writeln!(
                s,
                "bump = {}, {}, {}, {}",
                b.row, b.col, b.amplitude, b.width
            );
        }
        s
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str, line: usize) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: bad value {v:?} for {key}")))
}

impl FromStr for TerrainSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut rows = None;
        let mut cols = None;
        let mut spec = TerrainSpec {
            rows: 0,
            cols: 0,
            slope_x: 0.0,
            slope_y: 0.0,
            bumps: Vec::new(),
            noise_std: 0.0,
            seed: 0,
        };
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {line}: expected `key = value`")))?;
            let key = key.trim();
            match key {
                "rows" => rows = Some(parse_num(key, value, line)?),
                "cols" => cols = Some(parse_num(key, value, line)?),
                "slope_x" => spec.slope_x = parse_num(key, value, line)?,
                "slope_y" => spec.slope_y = parse_num(key, value, line)?,
                "noise_std" => spec.noise_std = parse_num(key, value, line)?,
                "seed" => spec.seed = parse_num(key, value, line)?,
                "bump" => {
                    let parts = value
                        .split(',')
                        .map(|p| parse_num::<f64>(key, p, line))
                        .collect::<Result<Vec<_>>>()?;
                    let [row, col, amplitude, width] = parts[..] else {
                        return Err(Error::Format(format!(
                            "line {line}: bump needs row, col, amplitude, width"
                        )));
                    };
                    spec.bumps.push(Bump {
                        row,
                        col,
                        amplitude,
                        width,
                    });
                }
                other => return Err(Error::Format(format!("line {line}: unknown key {other:?}"))),
            }
        }
        spec.rows = rows.ok_or_else(|| Error::Format("missing key `rows`".into()))?;
        spec.cols = cols.ok_or_else(|| Error::Format("missing key `cols`".into()))?;
        Ok(spec)
    }
}

/// Evaluate the terrain recipe; deterministic for a fixed seed.
pub fn generate(spec: &TerrainSpec) -> Result<UnwrappedSurface> {
    spec.validate()?;
    let mut psi = Array2::from_shape_fn((spec.rows, spec.cols), |(i, j)| {
        let (y, x) = (i as f64, j as f64);
        let mut v = spec.slope_x * x + spec.slope_y * y;
        for b in &spec.bumps {
            let r2 = (y - b.row).powi(2) + (x - b.col).powi(2);
            v += b.amplitude * (-r2 / (2.0 * b.width * b.width)).exp();
        }
        v
    });
    if spec.noise_std > 0.0 {
        let normal =
            Normal::new(0.0, spec.noise_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for v in psi.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(UnwrappedSurface::new(psi))
}

fn true_shift(phi0: f64, phi1: f64, step: f64) -> Option<i8> {
    if step.abs() >= 1.5 {
        return None;
    }
    let k = (phi1 - phi0 - step).round();
    (k.abs() <= 1.0).then_some(k as i8)
}

/// Wrap a surface and recover the exact shifts that integrate back to it.
pub fn wrap_surface(surface: &UnwrappedSurface) -> Result<(WrappedImage, ShiftField)> {
    let (rows, cols) = surface.dim();
    if rows < 2 || cols < 2 {
        return Err(Error::GridTooSmall { rows, cols });
    }
    let psi = &surface.psi;
    let phi = psi.iter().map(|&v| wrap(v)).collect::<Result<Vec<_>>>()?;
    let phi = Array2::from_shape_vec((rows, cols), phi).expect("same shape");

    let mut a = Array2::zeros((rows, cols - 1));
    for ((i, j), k) in a.indexed_iter_mut() {
        let step = psi[(i, j + 1)] - psi[(i, j)];
        *k = true_shift(phi[(i, j)], phi[(i, j + 1)], step).ok_or(Error::NotSmooth {
            row: i,
            col: j,
            direction: "right",
            step,
        })?;
    }
    let mut b = Array2::zeros((rows - 1, cols));
    for ((i, j), k) in b.indexed_iter_mut() {
        let step = psi[(i + 1, j)] - psi[(i, j)];
        *k = true_shift(phi[(i, j)], phi[(i + 1, j)], step).ok_or(Error::NotSmooth {
            row: i,
            col: j,
            direction: "lower",
            step,
        })?;
    }
    Ok((WrappedImage::new(phi)?, ShiftField::new(a, b)?))
}

/// Comparison of an estimated surface with the ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Integer added to the estimate before comparing.
    pub offset: i64,
    /// RMSE after the offset.
    pub rmse: f64,
    pub max_abs_deviation: f64,
    /// `max_abs_deviation < 1e-6`.
    pub exact_match: bool,
    /// RMSE of the estimate minus the truth, reduced into `[-0.5, 0.5)`.
    pub wrapped_rmse: f64,
}

pub const EXACT_MATCH_TOL: f64 = 1e-6;

fn rms(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    (s / n as f64).sqrt()
}

pub fn evaluate(truth: &UnwrappedSurface, estimate: &UnwrappedSurface) -> Result<Metrics> {
    if truth.dim() != estimate.dim() {
        return Err(Error::ShapeMismatch(format!(
            "truth is {:?}, estimate is {:?}",
            truth.dim(),
            estimate.dim()
        )));
    }
    let diff = &truth.psi - &estimate.psi;
    let offset = diff.mean().unwrap_or(0.0).round();
    let resid = diff.mapv(|d| d - offset);
    let max_abs_deviation = resid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut wrapped = Vec::with_capacity(diff.len());
    Zip::from(&diff).for_each(|&d| wrapped.push(wrap_centered(-d)));
    Ok(Metrics {
        offset: offset as i64,
        rmse: rms(resid.iter().copied()),
        max_abs_deviation,
        exact_match: max_abs_deviation < EXACT_MATCH_TOL,
        wrapped_rmse: rms(wrapped.into_iter()),
    })
}

/// RMSE of `surface - phi` reduced into `[-0.5, 0.5)`: how far the surface is
/// from being congruent with the observation.
pub fn wrapped_residual_rmse(img: &WrappedImage, surface: &UnwrappedSurface) -> Result<f64> {
    if img.dim() != surface.dim() {
        return Err(Error::ShapeMismatch(format!(
            "image is {:?}, surface is {:?}",
            img.dim(),
            surface.dim()
        )));
    }
    Ok(rms(surface
        .psi
        .iter()
        .zip(img.phi().iter())
        .map(|(s, p)| wrap_centered(s - p))))
}
