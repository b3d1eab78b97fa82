//! Energy of the relaxed gradient-field model and the variational free energy.
//!
//! The joint over shifts and phases is `p(a, b, phi) ∝ exp(-E)` with
//!
//! ```text
//! E = Σ_plaquettes c² / T + Σ_edges (d - k)² / (2σ²)
//! ```
//!
//! where `c` is the plaquette curl and `d - k` the unwrapped difference on
//! an edge. Beliefs are independent categorical distributions over
//! `k ∈ {-1, 0, 1}` on every edge, and the free energy is
//! `F = Σ q log q + E_q[E]`.
//!
//! Under the factorized belief the plaquette term reduces to moments of the
//! four independent edge variables: `E[c²] = (Σ s·μ)² + Σ var`.

use ndarray::Array2;

use crate::grid::{curl, ShiftField, WrappedImage};
use crate::{Error, Result};

/// Probabilities for shifts `-1, 0, 1`, in that order.
pub type Triple = [f64; 3];

/// Entries are floored here after every solver update.
pub const PROB_FLOOR: f64 = 1e-12;

/// The shift alphabet, aligned with [`Triple`] positions.
pub const SHIFTS: [i8; 3] = [-1, 0, 1];

const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    temperature: f64,
    sigma: f64,
}

impl ModelParams {
    pub const DEFAULT_SIGMA: f64 = 0.5;

    pub fn new(temperature: f64, sigma: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { temperature, sigma })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `1 / (2σ²)`
    #[inline]
    pub fn data_weight(&self) -> f64 {
        0.5 / (self.sigma * self.sigma)
    }

    pub fn with_temperature(self, temperature: f64) -> Result<Self> {
        Self::new(temperature, self.sigma)
    }
}

#[inline]
pub(crate) fn triple_mean(t: &Triple) -> f64 {
    t[2] - t[0]
}

#[inline]
pub(crate) fn triple_var(t: &Triple) -> f64 {
    let m = t[2] - t[0];
    t[0] + t[2] - m * m
}

/// `Σ_k q_k ln q_k` with `0 ln 0 = 0`.
#[inline]
pub fn neg_entropy(t: &Triple) -> f64 {
    t.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum()
}

fn check_triple(t: &Triple, edge: impl FnOnce() -> String) -> Result<()> {
    let reason = if t.iter().any(|p| !p.is_finite() || *p < 0.0) {
        Some("entries must be finite and nonnegative".to_string())
    } else {
        let s: f64 = t.iter().sum();
        ((s - 1.0).abs() > SIMPLEX_TOL).then(|| format!("entries sum to {s}"))
    };
    match reason {
        Some(reason) => Err(Error::InvalidBelief {
            edge: edge(),
            reason,
        }),
        None => Ok(()),
    }
}

/// Variational parameters: a categorical belief over `{-1, 0, 1}` per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefField {
    pub(crate) alpha: Array2<Triple>,
    pub(crate) beta: Array2<Triple>,
}

impl BeliefField {
    pub fn new(alpha: Array2<Triple>, beta: Array2<Triple>) -> Result<Self> {
        let (ar, ac) = alpha.dim();
        let (br, bc) = beta.dim();
        if ar != br + 1 || bc != ac + 1 {
            return Err(Error::ShapeMismatch(format!(
                "alpha is {ar}x{ac} and beta is {br}x{bc}; expected R x (C-1) and (R-1) x C"
            )));
        }
        if ar < 2 || bc < 2 {
            return Err(Error::GridTooSmall { rows: ar, cols: bc });
        }
        let field = Self { alpha, beta };
        field.validate()?;
        Ok(field)
    }

    /// Every edge at `(1/3, 1/3, 1/3)`.
    pub fn uniform(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::GridTooSmall { rows, cols });
        }
        let u = [1.0 / 3.0; 3];
        Ok(Self {
            alpha: Array2::from_elem((rows, cols - 1), u),
            beta: Array2::from_elem((rows - 1, cols), u),
        })
    }

    /// Point masses at the given shifts.
    pub fn from_shifts(shifts: &ShiftField) -> Self {
        let point = |k: i8| {
            let mut t = [0.0; 3];
            t[(k + 1) as usize] = 1.0;
            t
        };
        Self {
            alpha: shifts.a().mapv(point),
            beta: shifts.b().mapv(point),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for ((i, j), t) in self.alpha.indexed_iter() {
            check_triple(t, || format!("a({i}, {j})"))?;
        }
        for ((i, j), t) in self.beta.indexed_iter() {
            check_triple(t, || format!("b({i}, {j})"))?;
        }
        Ok(())
    }

    pub fn alpha(&self) -> &Array2<Triple> {
        &self.alpha
    }

    pub fn beta(&self) -> &Array2<Triple> {
        &self.beta
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.alpha.nrows(), self.beta.ncols())
    }

    pub fn edge_count(&self) -> usize {
        self.alpha.len() + self.beta.len()
    }

    /// The four edges of plaquette `(i, j)` with their curl signs.
    #[inline]
    pub(crate) fn plaquette(&self, i: usize, j: usize) -> [(&Triple, f64); 4] {
        [
            (&self.alpha[(i, j)], 1.0),
            (&self.beta[(i, j + 1)], 1.0),
            (&self.alpha[(i + 1, j)], -1.0),
            (&self.beta[(i, j)], -1.0),
        ]
    }

    /// Mean and variance of the curl of plaquette `(i, j)` under the belief.
    #[inline]
    pub(crate) fn plaquette_moments(&self, i: usize, j: usize) -> (f64, f64) {
        self.plaquette(i, j)
            .iter()
            .fold((0.0, 0.0), |(m, v), (t, s)| {
                (m + s * triple_mean(t), v + triple_var(t))
            })
    }

    fn check_matches(&self, img: &WrappedImage) -> Result<()> {
        if self.dim() != img.dim() {
            return Err(Error::ShapeMismatch(format!(
                "beliefs are for a {:?} grid, image is {:?}",
                self.dim(),
                img.dim()
            )));
        }
        Ok(())
    }
}

/// Expected squared curl `E_q[(k + l - m - n)²]` of plaquette `(i, j)`.
pub fn expected_plaquette_curl_sq(beliefs: &BeliefField, i: usize, j: usize) -> Result<f64> {
    let (rows, cols) = beliefs.dim();
    if i + 1 >= rows || j + 1 >= cols {
        return Err(Error::IndexOutOfRange(format!(
            "plaquette ({i}, {j}) on a {rows}x{cols} grid"
        )));
    }
    let (m, v) = beliefs.plaquette_moments(i, j);
    Ok(m * m + v)
}

/// `-ln p(a, b, phi)` up to the normalizing constant.
pub fn joint_energy(img: &WrappedImage, shifts: &ShiftField, params: &ModelParams) -> Result<f64> {
    if shifts.dim() != img.dim() {
        return Err(Error::ShapeMismatch(format!(
            "shifts are for a {:?} grid, image is {:?}",
            shifts.dim(),
            img.dim()
        )));
    }
    let prior: f64 = curl(shifts)
        .c
        .iter()
        .map(|&c| f64::from(c) * f64::from(c))
        .sum::<f64>()
        / params.temperature();
    let (rows, cols) = img.dim();
    let mut data = 0.0;
    for i in 0..rows {
        for j in 0..cols - 1 {
            let r = img.dx(i, j) - f64::from(shifts.a()[(i, j)]);
            data += r * r;
        }
    }
    for i in 0..rows - 1 {
        for j in 0..cols {
            let r = img.dy(i, j) - f64::from(shifts.b()[(i, j)]);
            data += r * r;
        }
    }
    Ok(prior + params.data_weight() * data)
}

/// The three parts of the free energy, already scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeEnergyTerms {
    /// `Σ q ln q` over every edge (the negated belief entropy).
    pub neg_entropy: f64,
    /// `(1/T) Σ E_q[c²]`
    pub curl: f64,
    /// `(1/2σ²) Σ E_q[(d - k)²]`
    pub data: f64,
}

impl FreeEnergyTerms {
    pub fn total(&self) -> f64 {
        self.neg_entropy + self.curl + self.data
    }
}

#[inline]
fn expected_sq_residual(t: &Triple, d: f64) -> f64 {
    t.iter()
        .zip(SHIFTS)
        .map(|(&p, k)| {
            let r = d - f64::from(k);
            p * r * r
        })
        .sum()
}

/// Free energy split into its entropy, curl and data parts.
pub fn free_energy_terms(
    img: &WrappedImage,
    beliefs: &BeliefField,
    params: &ModelParams,
) -> Result<FreeEnergyTerms> {
    beliefs.check_matches(img)?;
    beliefs.validate()?;
    Ok(free_energy_terms_unchecked(img, beliefs, params))
}

pub(crate) fn free_energy_terms_unchecked(
    img: &WrappedImage,
    beliefs: &BeliefField,
    params: &ModelParams,
) -> FreeEnergyTerms {
    let (rows, cols) = img.dim();
    let mut neg_entropy = 0.0;
    let mut data = 0.0;
    for ((i, j), t) in beliefs.alpha.indexed_iter() {
        neg_entropy += self::neg_entropy(t);
        data += expected_sq_residual(t, img.dx(i, j));
    }
    for ((i, j), t) in beliefs.beta.indexed_iter() {
        neg_entropy += self::neg_entropy(t);
        data += expected_sq_residual(t, img.dy(i, j));
    }
    let mut curl = 0.0;
    for i in 0..rows - 1 {
        for j in 0..cols - 1 {
            let (m, v) = beliefs.plaquette_moments(i, j);
            curl += m * m + v;
        }
    }
    FreeEnergyTerms {
        neg_entropy,
        curl: curl / params.temperature(),
        data: data * params.data_weight(),
    }
}

/// Variational free energy `F = Σ q ln q + E_q[E]`.
pub fn free_energy(img: &WrappedImage, beliefs: &BeliefField, params: &ModelParams) -> Result<f64> {
    free_energy_terms(img, beliefs, params).map(|t| t.total())
}
