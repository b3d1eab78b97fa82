//! Annealed mean-field minimization of the free energy.
//!
//! Each edge's belief is replaced in turn by the exact minimizer of `F` over
//! that one triple with every other triple held fixed. Within the feasible
//! set `{q_k >= PROB_FLOOR, Σ q_k = 1}` that minimizer is
//! `q_k = max(PROB_FLOOR, exp(-e_k - λ))`, with `e_k` the expected energy of
//! the edge taking shift `k`, so a sweep never increases `F`.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::{curl, ShiftField, WrappedImage};
use crate::model::{
    free_energy_terms_unchecked, neg_entropy, triple_mean, BeliefField, ModelParams, Triple,
    PROB_FLOOR, SHIFTS,
};
use crate::{Error, Result};

/// One edge of the pixel grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    /// Between `(row, col)` and `(row, col + 1)`.
    Horizontal(usize, usize),
    /// Between `(row, col)` and `(row + 1, col)`.
    Vertical(usize, usize),
}

impl Edge {
    fn check(self, rows: usize, cols: usize) -> Result<()> {
        let ok = match self {
            Edge::Horizontal(i, j) => i < rows && j + 1 < cols,
            Edge::Vertical(i, j) => i + 1 < rows && j < cols,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange(format!(
                "{self:?} on a {rows}x{cols} grid"
            )))
        }
    }
}

/// All edges in raster order: horizontal edges first, then vertical.
pub fn raster_edges(rows: usize, cols: usize) -> Vec<Edge> {
    let mut edges = Vec::with_capacity(rows * (cols - 1) + (rows - 1) * cols);
    for i in 0..rows {
        for j in 0..cols - 1 {
            edges.push(Edge::Horizontal(i, j));
        }
    }
    for i in 0..rows - 1 {
        for j in 0..cols {
            edges.push(Edge::Vertical(i, j));
        }
    }
    edges
}

/// Expected energy of each shift value on `edge`, given all other beliefs.
fn edge_energies(
    img: &WrappedImage,
    q: &BeliefField,
    params: &ModelParams,
    edge: Edge,
) -> [f64; 3] {
    let (rows, cols) = img.dim();
    let inv_t = 1.0 / params.temperature();
    let wd = params.data_weight();

    // (plaquette, sign of this edge in it)
    let mut plaquettes: [Option<(usize, usize, f64)>; 2] = [None, None];
    let (d, own) = match edge {
        Edge::Horizontal(i, j) => {
            if i + 1 < rows {
                plaquettes[0] = Some((i, j, 1.0));
            }
            if i > 0 {
                plaquettes[1] = Some((i - 1, j, -1.0));
            }
            (img.dx(i, j), &q.alpha[(i, j)])
        }
        Edge::Vertical(i, j) => {
            if j + 1 < cols {
                plaquettes[0] = Some((i, j, -1.0));
            }
            if j > 0 {
                plaquettes[1] = Some((i, j - 1, 1.0));
            }
            (img.dy(i, j), &q.beta[(i, j)])
        }
    };

    let own_mean = triple_mean(own);
    let mut e = [0.0; 3];
    for (slot, &k) in e.iter_mut().zip(SHIFTS.iter()) {
        let r = d - f64::from(k);
        *slot = wd * r * r;
    }
    for &(pi, pj, s) in plaquettes.iter().flatten() {
        let (m, _) = q.plaquette_moments(pi, pj);
        // E[(s k + rest)^2] = (k + s * mean(rest))^2 + var(rest); the variance
        // does not depend on k.
        let rest = m - s * own_mean;
        for (slot, &k) in e.iter_mut().zip(SHIFTS.iter()) {
            let c = f64::from(k) + s * rest;
            *slot += inv_t * c * c;
        }
    }
    e
}

/// Minimize `Σ q ln q + Σ q e` over the floored simplex.
fn floored_gibbs(e: [f64; 3]) -> Triple {
    let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
    let w = e.map(|x| (e_min - x).exp());
    let mut clamped = [false; 3];
    loop {
        let free_mass = 1.0 - PROB_FLOOR * clamped.iter().filter(|&&c| c).count() as f64;
        let free_w: f64 = (0..3).filter(|&k| !clamped[k]).map(|k| w[k]).sum();
        let scale = free_mass / free_w;
        let mut changed = false;
        for k in 0..3 {
            if !clamped[k] && scale * w[k] < PROB_FLOOR {
                clamped[k] = true;
                changed = true;
            }
        }
        if !changed {
            let mut t = [0.0; 3];
            for k in 0..3 {
                t[k] = if clamped[k] { PROB_FLOOR } else { scale * w[k] };
            }
            return t;
        }
    }
}

/// The triple that minimizes `F` on `edge` with every other belief fixed.
pub fn coordinate_update(
    img: &WrappedImage,
    beliefs: &BeliefField,
    params: &ModelParams,
    edge: Edge,
) -> Result<Triple> {
    let (rows, cols) = img.dim();
    edge.check(rows, cols)?;
    if beliefs.dim() != img.dim() {
        return Err(Error::ShapeMismatch(format!(
            "beliefs are for a {:?} grid, image is {:?}",
            beliefs.dim(),
            img.dim()
        )));
    }
    Ok(floored_gibbs(edge_energies(img, beliefs, params, edge)))
}

fn update_in_place(img: &WrappedImage, q: &mut BeliefField, params: &ModelParams, edge: Edge) {
    let t = floored_gibbs(edge_energies(img, q, params, edge));
    match edge {
        Edge::Horizontal(i, j) => q.alpha[(i, j)] = t,
        Edge::Vertical(i, j) => q.beta[(i, j)] = t,
    }
}

/// Update every edge once in `edges` order; returns the new free energy.
pub fn sweep_edges(
    img: &WrappedImage,
    beliefs: &mut BeliefField,
    params: &ModelParams,
    edges: &[Edge],
) -> Result<f64> {
    let (rows, cols) = img.dim();
    if beliefs.dim() != (rows, cols) {
        return Err(Error::ShapeMismatch(format!(
            "beliefs are for a {:?} grid, image is {:?}",
            beliefs.dim(),
            img.dim()
        )));
    }
    for &e in edges {
        e.check(rows, cols)?;
    }
    for &e in edges {
        update_in_place(img, beliefs, params, e);
    }
    Ok(free_energy_terms_unchecked(img, beliefs, params).total())
}

/// One raster-order pass of [`coordinate_update`] over all edges.
pub fn sweep(img: &WrappedImage, beliefs: &mut BeliefField, params: &ModelParams) -> Result<f64> {
    let (rows, cols) = img.dim();
    sweep_edges(img, beliefs, params, &raster_edges(rows, cols))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    #[default]
    Raster,
    /// Edges reshuffled before every sweep from a seeded generator.
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealSchedule {
    temperatures: Vec<f64>,
    max_sweeps_per_temp: usize,
    f_tolerance: f64,
    order: SweepOrder,
}

impl AnnealSchedule {
    pub const DEFAULT_T_START: f64 = 10.0;
    pub const DEFAULT_T_END: f64 = 0.05;
    pub const DEFAULT_STEPS: usize = 20;
    pub const DEFAULT_SWEEPS: usize = 10;
    pub const DEFAULT_TOLERANCE: f64 = 1e-7;

    pub fn new(
        temperatures: Vec<f64>,
        max_sweeps_per_temp: usize,
        f_tolerance: f64,
    ) -> Result<Self> {
        if temperatures.is_empty() {
            return Err(Error::InvalidParameter(
                "schedule has no temperatures".into(),
            ));
        }
        if let Some(t) = temperatures.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "temperature {t} is not positive and finite"
            )));
        }
        if temperatures.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter(
                "temperatures must be strictly decreasing".into(),
            ));
        }
        if max_sweeps_per_temp == 0 {
            return Err(Error::InvalidParameter(
                "max sweeps per temperature must be positive".into(),
            ));
        }
        if !(f_tolerance.is_finite() && f_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "free-energy tolerance must be positive, got {f_tolerance}"
            )));
        }
        Ok(Self {
            temperatures,
            max_sweeps_per_temp,
            f_tolerance,
            order: SweepOrder::Raster,
        })
    }

    /// `steps` temperatures spaced geometrically from `t_start` to `t_end`.
    /// A single step uses `t_start` alone.
    pub fn geometric(
        t_start: f64,
        t_end: f64,
        steps: usize,
        max_sweeps_per_temp: usize,
        f_tolerance: f64,
    ) -> Result<Self> {
        let temperatures = match steps {
            0 => Vec::new(),
            1 => vec![t_start],
            n => {
                let ratio = (t_end / t_start).powf(1.0 / (n - 1) as f64);
                (0..n)
                    .map(|s| {
                        if s == n - 1 {
                            t_end
                        } else {
                            t_start * ratio.powi(s as i32)
                        }
                    })
                    .collect()
            }
        };
        Self::new(temperatures, max_sweeps_per_temp, f_tolerance)
    }

    pub fn with_order(mut self, order: SweepOrder) -> Self {
        self.order = order;
        self
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.temperatures
    }

    pub fn max_sweeps_per_temp(&self) -> usize {
        self.max_sweeps_per_temp
    }

    pub fn f_tolerance(&self) -> f64 {
        self.f_tolerance
    }

    pub fn order(&self) -> SweepOrder {
        self.order
    }
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self::geometric(
            Self::DEFAULT_T_START,
            Self::DEFAULT_T_END,
            Self::DEFAULT_STEPS,
            Self::DEFAULT_SWEEPS,
            Self::DEFAULT_TOLERANCE,
        )
        .expect("default schedule is valid")
    }
}

/// State at the end of one temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureRecord {
    pub temperature: f64,
    pub sweeps: usize,
    /// Free energy on entry, then after every sweep.
    pub free_energy_trace: Vec<f64>,
    pub curl_violations: usize,
    /// Mean edge entropy (nats) on entry to this temperature.
    pub start_mean_entropy: f64,
    /// Mean edge entropy (nats) after the last sweep.
    pub mean_entropy: f64,
    pub converged: bool,
}

impl TemperatureRecord {
    pub fn free_energy(&self) -> f64 {
        *self
            .free_energy_trace
            .last()
            .expect("trace holds the entry value")
    }

    pub fn inv_temperature(&self) -> f64 {
        1.0 / self.temperature
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub records: Vec<TemperatureRecord>,
    pub beliefs: BeliefField,
    pub shifts: ShiftField,
    /// Whether the final temperature met the free-energy tolerance.
    pub converged: bool,
}

impl SolveReport {
    pub fn final_violations(&self) -> usize {
        self.records.last().map_or(0, |r| r.curl_violations)
    }
}

/// Anneal from uniform beliefs.
pub fn anneal(img: &WrappedImage, schedule: &AnnealSchedule, sigma: f64) -> Result<SolveReport> {
    let (rows, cols) = img.dim();
    anneal_from(
        img,
        schedule,
        sigma,
        BeliefField::uniform(rows, cols)?,
        |_, _| {},
    )
}

/// Anneal from `init`, calling `observe` after every temperature.
pub fn anneal_from(
    img: &WrappedImage,
    schedule: &AnnealSchedule,
    sigma: f64,
    init: BeliefField,
    mut observe: impl FnMut(&TemperatureRecord, &BeliefField),
) -> Result<SolveReport> {
    let base = ModelParams::new(schedule.temperatures[0], sigma)?;
    if init.dim() != img.dim() {
        return Err(Error::ShapeMismatch(format!(
            "initial beliefs are for a {:?} grid, image is {:?}",
            init.dim(),
            img.dim()
        )));
    }
    init.validate()?;
    let (rows, cols) = img.dim();
    let mut edges = raster_edges(rows, cols);
    let mut rng = match schedule.order {
        SweepOrder::Raster => None,
        SweepOrder::Shuffled { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };

    let mut q = init;
    let mut records = Vec::with_capacity(schedule.temperatures.len());
    for &t in &schedule.temperatures {
        let params = base.with_temperature(t)?;
        let start_mean_entropy = entropy_map(&q).mean();
        let mut trace = vec![free_energy_terms_unchecked(img, &q, &params).total()];
        let mut converged = false;
        let mut sweeps = 0;
        while sweeps < schedule.max_sweeps_per_temp {
            if let Some(rng) = rng.as_mut() {
                edges.shuffle(rng);
            }
            let before = *trace.last().unwrap();
            let after = sweep_edges(img, &mut q, &params, &edges)?;
            trace.push(after);
            sweeps += 1;
            if (before - after).abs() <= schedule.f_tolerance * before.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        let record = TemperatureRecord {
            temperature: t,
            sweeps,
            free_energy_trace: trace,
            curl_violations: curl(&extract_map_shifts(&q)).violation_count,
            start_mean_entropy,
            mean_entropy: entropy_map(&q).mean(),
            converged,
        };
        observe(&record, &q);
        records.push(record);
    }
    let shifts = extract_map_shifts(&q);
    let converged = records.last().is_some_and(|r| r.converged);
    Ok(SolveReport {
        records,
        beliefs: q,
        shifts,
        converged,
    })
}

/// Index of the most probable shift; ties prefer 0, then +1, then -1.
#[inline]
pub fn argmax_shift(t: &Triple) -> i8 {
    let mut best = 1;
    for k in [2, 0] {
        if t[k] > t[best] {
            best = k;
        }
    }
    SHIFTS[best]
}

/// The most probable shift on every edge.
pub fn extract_map_shifts(beliefs: &BeliefField) -> ShiftField {
    ShiftField::new(
        beliefs.alpha.map(argmax_shift),
        beliefs.beta.map(argmax_shift),
    )
    .expect("belief field shapes are consistent")
}

/// Per-edge belief entropy in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyMap {
    pub horizontal: Array2<f64>,
    pub vertical: Array2<f64>,
}

impl EntropyMap {
    pub fn mean(&self) -> f64 {
        let n = self.horizontal.len() + self.vertical.len();
        (self.horizontal.sum() + self.vertical.sum()) / n as f64
    }

    /// Per-pixel mean of the entropies of the incident edges, for display.
    pub fn per_pixel(&self) -> Array2<f64> {
        let rows = self.horizontal.nrows();
        let cols = self.vertical.ncols();
        let mut acc = Array2::<f64>::zeros((rows, cols));
        let mut count = Array2::<f64>::zeros((rows, cols));
        for ((i, j), &h) in self.horizontal.indexed_iter() {
            for p in [(i, j), (i, j + 1)] {
                acc[p] += h;
                count[p] += 1.0;
            }
        }
        for ((i, j), &h) in self.vertical.indexed_iter() {
            for p in [(i, j), (i + 1, j)] {
                acc[p] += h;
                count[p] += 1.0;
            }
        }
        acc / count
    }
}

pub fn entropy_map(beliefs: &BeliefField) -> EntropyMap {
    let h = |t: &Triple| (-neg_entropy(t)).max(0.0);
    EntropyMap {
        horizontal: beliefs.alpha.map(h),
        vertical: beliefs.beta.map(h),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn argmax_and_ties() {
        assert_eq!(argmax_shift(&[0.1, 0.2, 0.7]), 1);
        assert_eq!(argmax_shift(&[0.7, 0.2, 0.1]), -1);
        assert_eq!(argmax_shift(&[1.0 / 3.0; 3]), 0);
        assert_eq!(argmax_shift(&[0.4, 0.2, 0.4]), 1);
        assert_eq!(argmax_shift(&[0.0, 0.0, 1.0]), 1);
    }

    #[test]
    fn entropy_examples() {
        let q = BeliefField::new(
            Array2::from_shape_vec((2, 1), vec![[1.0 / 3.0; 3], [0.0, 1.0, 0.0]]).unwrap(),
            Array2::from_shape_vec((1, 2), vec![[0.5, 0.5, 0.0], [0.0, 0.0, 1.0]]).unwrap(),
        )
        .unwrap();
        let h = entropy_map(&q);
        assert!((h.horizontal[(0, 0)] - 3f64.ln()).abs() < 1e-12);
        assert_eq!(h.horizontal[(1, 0)], 0.0);
        assert!((h.vertical[(0, 0)] - 2f64.ln()).abs() < 1e-12);
        assert_eq!(h.vertical[(0, 1)], 0.0);
    }

    #[test]
    fn map_of_point_masses_is_identity() {
        let shifts = ShiftField::new(array![[1i8, -1], [0, 1]], array![[0i8, -1, 1]]).unwrap();
        assert_eq!(
            extract_map_shifts(&BeliefField::from_shifts(&shifts)),
            shifts
        );
    }

    #[test]
    fn high_temperature_update_is_data_only() {
        // d = 0.6 on the only horizontal edge of a 2x2 grid's top row.
        let img = WrappedImage::new(array![[0.2, 0.8], [0.2, 0.8]]).unwrap();
        let q = BeliefField::uniform(2, 2).unwrap();
        let p = ModelParams::new(1e12, 0.3).unwrap();
        let t = coordinate_update(&img, &q, &p, Edge::Horizontal(0, 0)).unwrap();
        let w: Vec<f64> = [1.6f64, 0.6, -0.4]
            .iter()
            .map(|r| (-(r * r) / 0.18).exp())
            .collect();
        let z: f64 = w.iter().sum();
        for k in 0..3 {
            assert!((t[k] - (w[k] / z).max(PROB_FLOOR)).abs() < 1e-9);
        }
        assert_eq!(argmax_shift(&t), 1);
    }

    #[test]
    fn zero_neighbours_zero_difference() {
        let img = WrappedImage::new(Array2::from_elem((3, 3), 0.4)).unwrap();
        let q = BeliefField::from_shifts(&ShiftField::zeros(3, 3).unwrap());
        let p = ModelParams::new(1.0, 0.3).unwrap();
        for e in raster_edges(3, 3) {
            let t = coordinate_update(&img, &q, &p, e).unwrap();
            assert_eq!(argmax_shift(&t), 0);
            assert!((t[0] - t[2]).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_edges_rejected() {
        let img = WrappedImage::new(Array2::zeros((2, 3))).unwrap();
        let q = BeliefField::uniform(2, 3).unwrap();
        let p = ModelParams::new(1.0, 0.3).unwrap();
        assert!(coordinate_update(&img, &q, &p, Edge::Horizontal(0, 2)).is_err());
        assert!(coordinate_update(&img, &q, &p, Edge::Vertical(1, 0)).is_err());
        assert!(coordinate_update(&img, &q, &p, Edge::Vertical(0, 2)).is_ok());
    }

    #[test]
    fn floored_gibbs_respects_floor() {
        let t = floored_gibbs([0.0, 500.0, 1000.0]);
        assert_eq!(t[1], PROB_FLOOR);
        assert_eq!(t[2], PROB_FLOOR);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_validation() {
        assert!(AnnealSchedule::new(vec![], 5, 1e-7).is_err());
        assert!(AnnealSchedule::new(vec![1.0, 1.0], 5, 1e-7).is_err());
        assert!(AnnealSchedule::new(vec![1.0, 2.0], 5, 1e-7).is_err());
        assert!(AnnealSchedule::new(vec![1.0, -2.0], 5, 1e-7).is_err());
        assert!(AnnealSchedule::new(vec![2.0, 1.0], 0, 1e-7).is_err());
        assert!(AnnealSchedule::new(vec![2.0, 1.0], 5, 0.0).is_err());
        let s = AnnealSchedule::default();
        assert_eq!(s.temperatures().len(), 20);
        assert_eq!(s.temperatures()[0], 10.0);
        assert_eq!(*s.temperatures().last().unwrap(), 0.05);
        let ratio = s.temperatures()[1] / s.temperatures()[0];
        assert!((ratio - 0.7565).abs() < 1e-3);
        assert_eq!(
            AnnealSchedule::geometric(1e6, 1.0, 1, 3, 1e-7)
                .unwrap()
                .temperatures(),
            &[1e6]
        );
    }

    #[test]
    fn constant_image_collapses_in_one_sweep() {
        let img = WrappedImage::new(Array2::from_elem((5, 5), 0.3)).unwrap();
        let mut q = BeliefField::uniform(5, 5).unwrap();
        let p = ModelParams::new(1.0, 0.3).unwrap();
        sweep(&img, &mut q, &p).unwrap();
        assert!(extract_map_shifts(&q).a().iter().all(|&k| k == 0));
        assert!(entropy_map(&q).mean() < 0.05);
        q.validate().unwrap();
    }
}
