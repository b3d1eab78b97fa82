//! WebAssembly bindings for the browser demo in `www/`.
//!
//! A [`Demo`] holds one synthetic terrain and offers three operations:
//! wrapping it, annealing the shift beliefs (violation and entropy curves
//! plus an entropy map), and comparing the result with least squares.

use puw::solver::{AnnealSchedule, SolveReport};
use puw::synth::{evaluate, generate, wrap_surface, wrapped_residual_rmse, TerrainSpec};
use puw::{curl, entropy_map, greedy_shift_field, hybrid_unwrap, integrate, lsq_unwrap};
use puw::{UnwrappedSurface, WrappedImage};
use wasm_bindgen::prelude::*;

fn js(e: puw::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Min-max scaled grey RGBA pixels, row-major. `invert` maps the maximum to black.
pub fn grey_rgba<'a>(values: impl Iterator<Item = &'a f64> + Clone, invert: bool) -> Vec<u8> {
    let (lo, hi) = values
        .clone()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    values
        .flat_map(|&v| {
            let t = if span > 0.0 { (v - lo) / span } else { 0.0 };
            let g = ((if invert { 1.0 - t } else { t }) * 255.0).round() as u8;
            [g, g, g, 255]
        })
        .collect()
}

#[wasm_bindgen]
pub struct Demo {
    truth: UnwrappedSurface,
    img: WrappedImage,
    report: Option<SolveReport>,
}

#[wasm_bindgen]
impl Demo {
    /// Square terrain of side `size`; `hard` adds noise and a steep mound.
    #[wasm_bindgen(constructor)]
    pub fn new(size: usize, hard: bool, seed: u32) -> Result<Demo, JsError> {
        let spec = if hard {
            TerrainSpec::hard(size, size, u64::from(seed))
        } else {
            TerrainSpec {
                seed: u64::from(seed),
                ..TerrainSpec::smooth(size, size)
            }
        };
        let truth = generate(&spec).map_err(js)?;
        let (img, _) = wrap_surface(&truth).map_err(js)?;
        Ok(Demo {
            truth,
            img,
            report: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.img.rows()
    }

    pub fn cols(&self) -> usize {
        self.img.cols()
    }

    pub fn truth_rgba(&self) -> Vec<u8> {
        grey_rgba(self.truth.psi.iter(), false)
    }

    pub fn wrapped_rgba(&self) -> Vec<u8> {
        grey_rgba(self.img.phi().iter(), false)
    }

    /// Curl violations left by rounding every edge independently.
    pub fn greedy_violations(&self) -> usize {
        curl(&greedy_shift_field(&self.img)).violation_count
    }

    /// Run the annealer. Returns `[1/T, violations, mean entropy]` per
    /// temperature, flattened.
    pub fn anneal(
        &mut self,
        t_start: f64,
        t_end: f64,
        steps: usize,
        sigma: f64,
    ) -> Result<Vec<f64>, JsError> {
        let schedule = AnnealSchedule::geometric(
            t_start,
            t_end,
            steps,
            AnnealSchedule::DEFAULT_SWEEPS,
            AnnealSchedule::DEFAULT_TOLERANCE,
        )
        .map_err(js)?;
        let report = puw::anneal(&self.img, &schedule, sigma).map_err(js)?;
        let curve = report
            .records
            .iter()
            .flat_map(|r| {
                [
                    r.inv_temperature(),
                    r.curl_violations as f64,
                    r.mean_entropy,
                ]
            })
            .collect();
        self.report = Some(report);
        Ok(curve)
    }

    /// Per-pixel belief entropy of the last run; black is uncertain.
    pub fn entropy_rgba(&self) -> Result<Vec<u8>, JsError> {
        let report = self
            .report
            .as_ref()
            .ok_or_else(|| JsError::new("run anneal first"))?;
        Ok(grey_rgba(
            entropy_map(&report.beliefs).per_pixel().iter(),
            true,
        ))
    }

    /// Compare the last run (integrated, or least-squares fitted if it left
    /// curl violations) with plain least squares.
    pub fn compare(&self) -> Result<Comparison, JsError> {
        let report = self
            .report
            .as_ref()
            .ok_or_else(|| JsError::new("run anneal first"))?;
        let hybrid = report.final_violations() > 0;
        let mf = if hybrid {
            hybrid_unwrap(&self.img, &report.shifts)
        } else {
            integrate(&self.img, &report.shifts)
        }
        .map_err(js)?;
        let ls = lsq_unwrap(&self.img).map_err(js)?;
        let m_mf = evaluate(&self.truth, &mf).map_err(js)?;
        let m_ls = evaluate(&self.truth, &ls).map_err(js)?;
        Ok(Comparison {
            variational_rmse: m_mf.rmse,
            lsq_rmse: m_ls.rmse,
            variational_wrapped_rmse: wrapped_residual_rmse(&self.img, &mf).map_err(js)?,
            lsq_wrapped_rmse: wrapped_residual_rmse(&self.img, &ls).map_err(js)?,
            exact: m_mf.exact_match,
            hybrid,
            variational: grey_rgba(mf.psi.iter(), false),
            lsq: grey_rgba(ls.psi.iter(), false),
        })
    }
}

#[wasm_bindgen]
pub struct Comparison {
    pub variational_rmse: f64,
    pub lsq_rmse: f64,
    /// RMS distance of each surface from congruence with the wrapped input.
    pub variational_wrapped_rmse: f64,
    pub lsq_wrapped_rmse: f64,
    pub exact: bool,
    /// The variational surface came from the least-squares fallback.
    pub hybrid: bool,
    variational: Vec<u8>,
    lsq: Vec<u8>,
}

#[wasm_bindgen]
impl Comparison {
    pub fn variational_rgba(&self) -> Vec<u8> {
        self.variational.clone()
    }

    pub fn lsq_rgba(&self) -> Vec<u8> {
        self.lsq.clone()
    }
}
