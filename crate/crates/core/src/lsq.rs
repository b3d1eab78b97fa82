//! Unweighted least-squares surface fitting.
//!
//! Given a target gradient field `g`, find the surface minimizing
//! `Σ (ψ[i,j+1] - ψ[i,j] - gx)² + Σ (ψ[i+1,j] - ψ[i,j] - gy)²`. The normal
//! equations are the Neumann graph-Laplacian system `L ψ = div g`, solved here
//! by matrix-free conjugate gradients. The system is singular along the
//! constant vector; the right-hand side is always orthogonal to it, and the
//! level is fixed afterwards by matching a requested mean.

use ndarray::{Array2, Zip};

use crate::grid::{GradientField, ShiftField, UnwrappedSurface, WrappedImage};
use crate::{Error, Result};

/// Reduce a real into `[-0.5, 0.5)`.
#[inline]
pub fn wrap_centered(d: f64) -> f64 {
    d - (d + 0.5).floor()
}

/// Wrapped phase differences on every edge.
pub fn wrapped_gradient(img: &WrappedImage) -> GradientField {
    let (rows, cols) = img.dim();
    GradientField {
        gx: Array2::from_shape_fn((rows, cols - 1), |(i, j)| wrap_centered(img.dx(i, j))),
        gy: Array2::from_shape_fn((rows - 1, cols), |(i, j)| wrap_centered(img.dy(i, j))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonStats {
    pub iterations: usize,
    /// `||div g - L ψ|| / ||div g||` at exit.
    pub relative_residual: f64,
    /// The least-squares objective at the returned surface.
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct PoissonProblem {
    target: GradientField,
    tolerance: f64,
    max_iterations: usize,
}

impl PoissonProblem {
    pub const DEFAULT_TOLERANCE: f64 = 1e-8;

    pub fn new(target: GradientField) -> Result<Self> {
        let (rows, cols) = (target.gx.nrows(), target.gy.ncols());
        if target.gx.dim() != (rows, cols.saturating_sub(1))
            || target.gy.dim() != (rows.saturating_sub(1), cols)
        {
            return Err(Error::ShapeMismatch(format!(
                "gx is {:?} and gy is {:?}",
                target.gx.dim(),
                target.gy.dim()
            )));
        }
        if rows < 2 || cols < 2 {
            return Err(Error::GridTooSmall { rows, cols });
        }
        Ok(Self {
            target,
            tolerance: Self::DEFAULT_TOLERANCE,
            max_iterations: 10 * (rows + cols),
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn dim(&self) -> (usize, usize) {
        self.target.dim()
    }

    /// Right-hand side of the normal equations.
    fn divergence(&self) -> Array2<f64> {
        let g = &self.target;
        let mut b = Array2::zeros(self.dim());
        for ((i, j), &v) in g.gx.indexed_iter() {
            b[(i, j)] -= v;
            b[(i, j + 1)] += v;
        }
        for ((i, j), &v) in g.gy.indexed_iter() {
            b[(i, j)] -= v;
            b[(i + 1, j)] += v;
        }
        b
    }

    /// Least-squares surface whose mean is `mean`.
    pub fn solve(&self, mean: f64) -> Result<(UnwrappedSurface, PoissonStats)> {
        let b = self.divergence();
        let (mut x, iterations, relative_residual) =
            conjugate_gradient(&b, self.tolerance, self.max_iterations);
        if relative_residual > self.tolerance {
            return Err(Error::SolverNotConverged {
                iterations,
                residual: relative_residual,
            });
        }
        let shift = mean - x.mean().unwrap_or(0.0);
        x.mapv_inplace(|v| v + shift);
        let objective = self.objective(&x);
        Ok((
            UnwrappedSurface::new(x),
            PoissonStats {
                iterations,
                relative_residual,
                objective,
            },
        ))
    }

    pub fn objective(&self, psi: &Array2<f64>) -> f64 {
        let g = &self.target;
        let mut s = 0.0;
        for ((i, j), &v) in g.gx.indexed_iter() {
            let r = psi[(i, j + 1)] - psi[(i, j)] - v;
            s += r * r;
        }
        for ((i, j), &v) in g.gy.indexed_iter() {
            let r = psi[(i + 1, j)] - psi[(i, j)] - v;
            s += r * r;
        }
        s
    }
}

/// `L x` for the 4-neighbour graph Laplacian with free (Neumann) borders.
pub fn apply_laplacian(x: &Array2<f64>, out: &mut Array2<f64>) {
    let (rows, cols) = x.dim();
    for i in 0..rows {
        for j in 0..cols {
            let c = x[(i, j)];
            let mut acc = 0.0;
            if j > 0 {
                acc += c - x[(i, j - 1)];
            }
            if j + 1 < cols {
                acc += c - x[(i, j + 1)];
            }
            if i > 0 {
                acc += c - x[(i - 1, j)];
            }
            if i + 1 < rows {
                acc += c - x[(i + 1, j)];
            }
            out[(i, j)] = acc;
        }
    }
}

fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |s, &x, &y| s + x * y)
}

/// Plain CG from zero. Returns `(x, iterations, relative residual)`.
fn conjugate_gradient(b: &Array2<f64>, tol: f64, max_iter: usize) -> (Array2<f64>, usize, f64) {
    let mut x = Array2::zeros(b.dim());
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return (x, 0, 0.0);
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = Array2::zeros(b.dim());
    let mut rr = dot(&r, &r);
    let mut it = 0;
    while it < max_iter && rr.sqrt() > tol * b_norm {
        apply_laplacian(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let step = rr / pap;
        x.scaled_add(step, &p);
        r.scaled_add(-step, &ap);
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        Zip::from(&mut p)
            .and(&r)
            .for_each(|p, &r| *p = r + beta * *p);
        rr = rr_next;
        it += 1;
    }
    (x, it, rr.sqrt() / b_norm)
}

/// Least-squares unwrapping of the wrapped phase differences, with the mean
/// of the result pinned to the mean of the input.
pub fn lsq_unwrap(img: &WrappedImage) -> Result<UnwrappedSurface> {
    fit_gradient(img, wrapped_gradient(img))
}

/// Least-squares fit to the gradient implied by `shifts`, which may carry
/// curl violations.
pub fn hybrid_unwrap(img: &WrappedImage, shifts: &ShiftField) -> Result<UnwrappedSurface> {
    fit_gradient(img, GradientField::from_shifts(img, shifts)?)
}

fn fit_gradient(img: &WrappedImage, g: GradientField) -> Result<UnwrappedSurface> {
    let mean = img.phi().mean().unwrap_or(0.0);
    PoissonProblem::new(g)?.solve(mean).map(|(s, _)| s)
}
