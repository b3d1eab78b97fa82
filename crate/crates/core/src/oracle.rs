//! Exhaustive enumeration of the shift posterior on tiny grids.

use ndarray::Array2;

use crate::grid::{ShiftField, WrappedImage};
use crate::model::{joint_energy, BeliefField, ModelParams, Triple};
use crate::solver::{raster_edges, Edge};
use crate::{Error, Result};

/// 3^12 = 531441 configurations.
pub const MAX_EDGES: usize = 12;

/// Exact posterior `p(a, b | phi)` over every shift configuration.
#[derive(Debug, Clone)]
pub struct ExactPosterior {
    rows: usize,
    cols: usize,
    probabilities: Vec<f64>,
    log_partition: f64,
    map_index: usize,
    marginals: BeliefField,
}

impl ExactPosterior {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `ln Z` with `Z = Σ exp(-E)` over all configurations.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn partition_value(&self) -> f64 {
        self.log_partition.exp()
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Configuration number `index`; edge `e` in raster order holds base-3
    /// digit `e` minus one.
    pub fn config(&self, index: usize) -> ShiftField {
        decode(self.rows, self.cols, index)
    }

    pub fn map_config(&self) -> ShiftField {
        self.config(self.map_index)
    }

    pub fn map_probability(&self) -> f64 {
        self.probabilities[self.map_index]
    }

    /// Per-edge marginal triples, laid out like a [`BeliefField`].
    pub fn edge_marginals(&self) -> &BeliefField {
        &self.marginals
    }
}

fn decode(rows: usize, cols: usize, mut index: usize) -> ShiftField {
    let mut a = Array2::zeros((rows, cols - 1));
    let mut b = Array2::zeros((rows - 1, cols));
    for edge in raster_edges(rows, cols) {
        let k = (index % 3) as i8 - 1;
        index /= 3;
        match edge {
            Edge::Horizontal(i, j) => a[(i, j)] = k,
            Edge::Vertical(i, j) => b[(i, j)] = k,
        }
    }
    ShiftField::new(a, b).expect("decoded shapes are consistent")
}

pub fn enumerate(img: &WrappedImage, params: &ModelParams) -> Result<ExactPosterior> {
    let (rows, cols) = img.dim();
    let edges = raster_edges(rows, cols);
    if edges.len() > MAX_EDGES {
        return Err(Error::GridTooLarge {
            edges: edges.len(),
            max: MAX_EDGES,
        });
    }
    let n = 3usize.pow(edges.len() as u32);
    let energies = (0..n)
        .map(|c| joint_energy(img, &decode(rows, cols, c), params))
        .collect::<Result<Vec<_>>>()?;
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| (e_min - e).exp()).collect();
    let total: f64 = weights.iter().sum();
    let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let log_partition = -e_min + total.ln();

    let mut map_index = 0;
    for (c, &p) in probabilities.iter().enumerate() {
        if p > probabilities[map_index] {
            map_index = c;
        }
    }

    let mut alpha = Array2::<Triple>::from_elem((rows, cols - 1), [0.0; 3]);
    let mut beta = Array2::<Triple>::from_elem((rows - 1, cols), [0.0; 3]);
    for (c, &p) in probabilities.iter().enumerate() {
        let mut code = c;
        for &edge in &edges {
            let slot = code % 3;
            code /= 3;
            match edge {
                Edge::Horizontal(i, j) => alpha[(i, j)][slot] += p,
                Edge::Vertical(i, j) => beta[(i, j)][slot] += p,
            }
        }
    }

    Ok(ExactPosterior {
        rows,
        cols,
        probabilities,
        log_partition,
        map_index,
        marginals: BeliefField::new(alpha, beta)?,
    })
}
