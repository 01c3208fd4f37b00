//! Optimal quadratic quantizers of the standard normal law.
//!
//! A [`Grid`] is an `N`-point codebook in `R^d` together with the
//! probabilities of its Voronoi cells and its quadratic distortion
//! `E min_i |Z - x_i|^2`. One-dimensional grids are computed
//! deterministically from closed-form cell moments; multi-dimensional grids
//! are learned from Gaussian samples.

mod io;
mod kdtree;
mod multi_dim;
mod one_dim;

pub use io::{read_grid, read_grid_from, write_grid};
pub use kdtree::KdTree;
pub use multi_dim::{optimal_grid_nd, NdQuantizerConfig, NdReport};
pub use one_dim::{cell_bounds_1d, optimal_grid_1d, stationarity_residual_1d};

use crate::error::{Error, Result};

/// An `N`-point quantizer with companion cell weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    distortion: f64,
}

impl Grid {
    /// Builds a grid from row-major points, validating the weight invariants.
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>, distortion: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("grid dimension must be positive"));
        }
        if points.len() != dim * weights.len() || weights.is_empty() {
            return Err(Error::invalid(format!(
                "grid has {} coordinates for {} weights in dimension {dim}",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("grid weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("grid weights sum to {total}")));
        }
        if points.iter().any(|x| !x.is_finite()) || !(distortion >= 0.0) {
            return Err(Error::invalid("grid points and distortion must be finite"));
        }
        Ok(Self {
            dim,
            points,
            weights,
            distortion,
        })
    }

    /// The one-point quantizer at the origin.
    pub fn origin(dim: usize) -> Self {
        Self {
            dim,
            points: vec![0.0; dim],
            weights: vec![1.0],
            distortion: dim as f64,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn distortion(&self) -> f64 {
        self.distortion
    }

    /// Sorts points lexicographically, carrying the weights along.
    pub(crate) fn sort_lexicographic(&mut self) {
        let d = self.dim;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.point(a)
                .iter()
                .zip(self.point(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut points = Vec::with_capacity(self.points.len());
        let mut weights = Vec::with_capacity(self.len());
        for &i in &order {
            points.extend_from_slice(&self.points[i * d..(i + 1) * d]);
            weights.push(self.weights[i]);
        }
        self.points = points;
        self.weights = weights;
    }

    /// Mean `sum_i w_i x_i` of the quantized law.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for i in 0..self.len() {
            for (acc, x) in m.iter_mut().zip(self.point(i)) {
                *acc += self.weights[i] * x;
            }
        }
        m
    }
}

/// Index of the grid point closest to `point`; ties go to the lowest index.
pub fn nearest_index(point: &[f64], grid: &Grid) -> usize {
    debug_assert_eq!(point.len(), grid.dim());
    if grid.dim() == 1 {
        return nearest_sorted(point[0], grid.points());
    }
    let mut best = (f64::INFINITY, 0);
    for i in 0..grid.len() {
        let d2 = squared_distance(point, grid.point(i));
        if d2 < best.0 {
            best = (d2, i);
        }
    }
    best.1
}

/// Nearest neighbour in a strictly increasing sequence, lowest index on ties.
pub fn nearest_sorted(x: f64, sorted: &[f64]) -> usize {
    let idx = sorted.partition_point(|&p| p < x);
    if idx == 0 {
        return 0;
    }
    if idx == sorted.len() {
        return sorted.len() - 1;
    }
    let below = x - sorted[idx - 1];
    let above = sorted[idx] - x;
    if above < below {
        idx
    } else {
        idx - 1
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest-neighbour locator that picks binary search in 1D and a kd-tree otherwise.
#[derive(Debug, Clone)]
pub enum Locator {
    Sorted(Vec<f64>),
    Tree(KdTree),
}

impl Locator {
    pub fn new(grid: &Grid) -> Self {
        if grid.dim() == 1 {
            Locator::Sorted(grid.points().to_vec())
        } else {
            Locator::Tree(KdTree::new(grid.dim(), grid.points()))
        }
    }

    #[inline]
    pub fn nearest(&self, point: &[f64]) -> usize {
        match self {
            Locator::Sorted(p) => nearest_sorted(point[0], p),
            Locator::Tree(t) => t.nearest(point),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_1d(points: &[f64]) -> Grid {
        let w = vec![1.0 / points.len() as f64; points.len()];
        Grid::new(1, points.to_vec(), w, 0.0).unwrap()
    }

    #[test]
    fn nearest_basic() {
        let g = grid_1d(&[-1.0, 0.0, 1.0]);
        assert_eq!(nearest_index(&[0.5 - 1e-9], &g), 1);
        assert_eq!(nearest_index(&[0.5], &g), 1);
        assert_eq!(nearest_index(&[-7.0], &g), 0);
        assert_eq!(nearest_index(&[7.0], &g), 2);
    }

    #[test]
    fn nearest_tie_goes_to_lowest_index() {
        let g = grid_1d(&[0.0, 1.0]);
        assert_eq!(nearest_index(&[0.5], &g), 0);
        let g2 = Grid::new(2, vec![1.0, 0.0, -1.0, 0.0], vec![0.5, 0.5], 0.0).unwrap();
        assert_eq!(nearest_index(&[0.0, 3.0], &g2), 0);
    }

    #[test]
    fn nearest_is_identity_on_grid_points() {
        let g = grid_1d(&[-2.0, -0.5, 0.1, 0.4, 3.0]);
        for i in 0..g.len() {
            assert_eq!(nearest_index(g.point(i), &g), i);
        }
        assert_eq!(nearest_index(&[0.4], &g), 3);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(Grid::new(1, vec![0.0, 1.0], vec![0.5, 0.6], 0.0).is_err());
        assert!(Grid::new(1, vec![0.0], vec![1.0, 0.0], 0.0).is_err());
    }
}
