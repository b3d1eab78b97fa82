//! Grid geometry, wrapping arithmetic, shift fields and their integration.
//!
//! Indexing is `(row, col)`. Horizontal shifts `a[(i, j)]` sit on the edge
//! between `(i, j)` and `(i, j + 1)`; vertical shifts `b[(i, j)]` sit on the
//! edge between `(i, j)` and `(i + 1, j)`. Plaquette `(i, j)` is the 2x2 loop
//! with top-left corner `(i, j)`.

use ndarray::Array2;

use crate::{Error, Result};

/// Reduce a real number modulo one into `[0, 1)`.
pub fn wrap(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    let r = x - x.floor();
    // x - floor(x) can round up to exactly 1.0 for tiny negative x.
    Ok(if r >= 1.0 { 0.0 } else { r })
}

/// The shift in `{-1, 0, 1}` closest to a raw phase difference.
///
/// Ties at `|d| = 0.5` round away from zero.
pub fn local_shift_guess(d: f64) -> Result<i8> {
    if !d.is_finite() {
        return Err(Error::NonFinite(d));
    }
    if d.abs() >= 1.0 {
        return Err(Error::DifferenceOutOfRange(d));
    }
    Ok(d.round() as i8)
}

/// An `R x C` raster of phases in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WrappedImage {
    phi: Array2<f64>,
}

impl WrappedImage {
    pub fn new(phi: Array2<f64>) -> Result<Self> {
        let (rows, cols) = phi.dim();
        if rows < 2 || cols < 2 {
            return Err(Error::GridTooSmall { rows, cols });
        }
        for ((row, col), &value) in phi.indexed_iter() {
            if !(0.0..1.0).contains(&value) {
                return Err(Error::PhaseOutOfRange { row, col, value });
            }
        }
        Ok(Self { phi })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let phi = Array2::from_shape_vec((rows, cols), data)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Self::new(phi)
    }

    pub fn phi(&self) -> &Array2<f64> {
        &self.phi
    }

    pub fn rows(&self) -> usize {
        self.phi.nrows()
    }

    pub fn cols(&self) -> usize {
        self.phi.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.phi.dim()
    }

    /// Raw difference across horizontal edge `(i, j)`.
    #[inline]
    pub fn dx(&self, i: usize, j: usize) -> f64 {
        self.phi[(i, j + 1)] - self.phi[(i, j)]
    }

    /// Raw difference across vertical edge `(i, j)`.
    #[inline]
    pub fn dy(&self, i: usize, j: usize) -> f64 {
        self.phi[(i + 1, j)] - self.phi[(i, j)]
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.phi
    }
}

/// Integer shifts on every horizontal (`a`) and vertical (`b`) edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftField {
    a: Array2<i8>,
    b: Array2<i8>,
}

impl ShiftField {
    /// `a` must be `R x (C-1)` and `b` must be `(R-1) x C`.
    pub fn new(a: Array2<i8>, b: Array2<i8>) -> Result<Self> {
        let (ar, ac) = a.dim();
        let (br, bc) = b.dim();
        if ar != br + 1 || bc != ac + 1 {
            return Err(Error::ShapeMismatch(format!(
                "a is {ar}x{ac} and b is {br}x{bc}; expected R x (C-1) and (R-1) x C"
            )));
        }
        let (rows, cols) = (ar, bc);
        if rows < 2 || cols < 2 {
            return Err(Error::GridTooSmall { rows, cols });
        }
        if let Some(&bad) = a.iter().chain(b.iter()).find(|v| !(-1..=1).contains(*v)) {
            return Err(Error::InvalidShift(bad));
        }
        Ok(Self { a, b })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::GridTooSmall { rows, cols });
        }
        Ok(Self {
            a: Array2::zeros((rows, cols - 1)),
            b: Array2::zeros((rows - 1, cols)),
        })
    }

    pub fn a(&self) -> &Array2<i8> {
        &self.a
    }

    pub fn b(&self) -> &Array2<i8> {
        &self.b
    }

    /// Dimensions `(R, C)` of the pixel grid the shifts live on.
    pub fn dim(&self) -> (usize, usize) {
        (self.a.nrows(), self.b.ncols())
    }

    pub fn edge_count(&self) -> usize {
        self.a.len() + self.b.len()
    }

    fn check_matches(&self, img: &WrappedImage) -> Result<()> {
        if self.dim() != img.dim() {
            return Err(Error::ShapeMismatch(format!(
                "shifts are for a {:?} grid, image is {:?}",
                self.dim(),
                img.dim()
            )));
        }
        Ok(())
    }
}

/// Signed shift sums around every plaquette.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurlMap {
    pub c: Array2<i8>,
    pub violation_count: usize,
}

impl CurlMap {
    pub fn is_curl_free(&self) -> bool {
        self.violation_count == 0
    }
}

/// Curl of a shift field: `c = a[i,j] + b[i,j+1] - a[i+1,j] - b[i,j]`.
pub fn curl(shifts: &ShiftField) -> CurlMap {
    let (rows, cols) = shifts.dim();
    let (a, b) = (&shifts.a, &shifts.b);
    let c = Array2::from_shape_fn((rows - 1, cols - 1), |(i, j)| {
        a[(i, j)] + b[(i, j + 1)] - a[(i + 1, j)] - b[(i, j)]
    });
    let violation_count = c.iter().filter(|&&v| v != 0).count();
    CurlMap { c, violation_count }
}

/// Apply [`local_shift_guess`] independently on every edge.
pub fn greedy_shift_field(img: &WrappedImage) -> ShiftField {
    let (rows, cols) = img.dim();
    // Differences of values in [0, 1) always lie in (-1, 1).
    let a = Array2::from_shape_fn((rows, cols - 1), |(i, j)| img.dx(i, j).round() as i8);
    let b = Array2::from_shape_fn((rows - 1, cols), |(i, j)| img.dy(i, j).round() as i8);
    ShiftField { a, b }
}

/// Per-edge unwrapped differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub gx: Array2<f64>,
    pub gy: Array2<f64>,
}

impl GradientField {
    /// `gx = dphi_x - a`, `gy = dphi_y - b`. Curl is not checked.
    pub fn from_shifts(img: &WrappedImage, shifts: &ShiftField) -> Result<Self> {
        shifts.check_matches(img)?;
        let (rows, cols) = img.dim();
        let gx = Array2::from_shape_fn((rows, cols - 1), |(i, j)| {
            img.dx(i, j) - f64::from(shifts.a[(i, j)])
        });
        let gy = Array2::from_shape_fn((rows - 1, cols), |(i, j)| {
            img.dy(i, j) - f64::from(shifts.b[(i, j)])
        });
        Ok(Self { gx, gy })
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.gx.nrows(), self.gy.ncols())
    }

    /// `gx[i,j] + gy[i,j+1] - gx[i+1,j] - gy[i,j]` per plaquette.
    pub fn circulation(&self) -> Array2<f64> {
        let (rows, cols) = self.dim();
        Array2::from_shape_fn((rows - 1, cols - 1), |(i, j)| {
            self.gx[(i, j)] + self.gy[(i, j + 1)] - self.gx[(i + 1, j)] - self.gy[(i, j)]
        })
    }
}

/// A real-valued surface in units of wavelengths.
#[derive(Debug, Clone, PartialEq)]
pub struct UnwrappedSurface {
    pub psi: Array2<f64>,
}

impl UnwrappedSurface {
    pub fn new(psi: Array2<f64>) -> Self {
        Self { psi }
    }

    pub fn dim(&self) -> (usize, usize) {
        self.psi.dim()
    }

    pub fn rows(&self) -> usize {
        self.psi.nrows()
    }

    pub fn cols(&self) -> usize {
        self.psi.ncols()
    }
}

/// Integrate a curl-free shift field into a surface anchored at
/// `psi[0][0] = phi[0][0]`.
///
/// Walks row 0 left to right, then each column downwards.
pub fn integrate(img: &WrappedImage, shifts: &ShiftField) -> Result<UnwrappedSurface> {
    shifts.check_matches(img)?;
    let violations = curl(shifts).violation_count;
    if violations != 0 {
        return Err(Error::CurlViolations(violations));
    }
    let g = GradientField::from_shifts(img, shifts)?;
    let (rows, cols) = img.dim();
    let mut psi = Array2::zeros((rows, cols));
    psi[(0, 0)] = img.phi()[(0, 0)];
    for j in 1..cols {
        psi[(0, j)] = psi[(0, j - 1)] + g.gx[(0, j - 1)];
    }
    for j in 0..cols {
        for i in 1..rows {
            psi[(i, j)] = psi[(i - 1, j)] + g.gy[(i - 1, j)];
        }
    }
    Ok(UnwrappedSurface { psi })
}
