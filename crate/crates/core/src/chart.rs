//! Rectangular coordinate charts and node-valued fields on them.
//!
//! Nodes are stored row-major with the last axis varying fastest. Every cell
//! (hypercube between neighbouring nodes) is split into `n!` Kuhn simplices
//! along the chains `corner -> corner + e_{π(0)} -> ... -> corner + 1`; the
//! volume, energy and capacity routines all work on this triangulation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest topological dimension supported by the grid solvers.
pub const MAX_GRID_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridChart {
    lower: Vec<f64>,
    upper: Vec<f64>,
    resolution: Vec<usize>,
    #[serde(skip)]
    spacing: Vec<f64>,
    #[serde(skip)]
    strides: Vec<usize>,
}

impl GridChart {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        let n = lower.len();
        if n == 0 || upper.len() != n || resolution.len() != n {
            return invalid("chart corners and resolution must have the same positive length");
        }
        if n > MAX_GRID_DIM {
            return invalid(format!(
                "grid charts support at most {MAX_GRID_DIM} dimensions, got {n}"
            ));
        }
        let mut spacing = Vec::with_capacity(n);
        for k in 0..n {
            if !(lower[k].is_finite() && upper[k].is_finite()) {
                return invalid("chart corners must be finite");
            }
            if resolution[k] < 2 {
                return invalid(format!("axis {k} needs at least 2 nodes"));
            }
            let h = (upper[k] - lower[k]) / (resolution[k] - 1) as f64;
            if h <= 0.0 {
                return invalid(format!("axis {k}: upper corner must exceed lower corner"));
            }
            spacing.push(h);
        }
        let mut strides = vec![1; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * resolution[k + 1];
        }
        Ok(Self {
            lower,
            upper,
            resolution,
            spacing,
            strides,
        })
    }

    /// Symmetric box `[-half_width_k, half_width_k]` around `center`.
    pub fn centered(center: &[f64], half_width: &[f64], resolution: Vec<usize>) -> Result<Self> {
        let lower = center.iter().zip(half_width).map(|(c, w)| c - w).collect();
        let upper = center.iter().zip(half_width).map(|(c, w)| c + w).collect();
        Self::new(lower, upper, resolution)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn node_count(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn cell_count(&self) -> usize {
        self.resolution.iter().map(|r| r - 1).product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Euclidean length of the chart's main diagonal.
    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.spacing.iter().map(|h| h * h).sum::<f64>().sqrt()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .enumerate()
                .all(|(k, &x)| x >= self.lower[k] && x <= self.upper[k])
    }

    pub fn require_min_nodes(&self, required: usize) -> Result<()> {
        for (axis, &nodes) in self.resolution.iter().enumerate() {
            if nodes < required {
                return Err(Error::ChartTooCoarse {
                    axis,
                    nodes,
                    required,
                });
            }
        }
        Ok(())
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for k in 0..self.dim() {
            out[k] = index / self.strides[k];
            index %= self.strides[k];
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn node_coords(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.node_coords_into(index, &mut out);
        out
    }

    pub fn node_coords_into(&self, mut index: usize, out: &mut [f64]) {
        for k in 0..self.dim() {
            let i = index / self.strides[k];
            index %= self.strides[k];
            out[k] = self.lower[k] + i as f64 * self.spacing[k];
        }
    }

    /// True when the node touches the chart boundary.
    pub fn is_boundary_node(&self, index: usize) -> bool {
        let mut rest = index;
        for k in 0..self.dim() {
            let i = rest / self.strides[k];
            rest %= self.strides[k];
            if i == 0 || i + 1 == self.resolution[k] {
                return true;
            }
        }
        false
    }

    /// Node index of the base corner of cell `cell`.
    pub fn cell_base_node(&self, mut cell: usize) -> usize {
        let n = self.dim();
        let mut node = 0;
        let mut cell_stride = 1;
        let mut cell_strides = vec![0; n];
        for k in (0..n).rev() {
            cell_strides[k] = cell_stride;
            cell_stride *= self.resolution[k] - 1;
        }
        for k in 0..n {
            let i = cell / cell_strides[k];
            cell %= cell_strides[k];
            node += i * self.strides[k];
        }
        node
    }

    /// Index offsets (relative to the base node) of the `2^n` cell corners, by bitmask.
    pub fn corner_offsets(&self) -> Vec<usize> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .filter(|k| mask >> k & 1 == 1)
                    .map(|k| self.strides[k])
                    .sum()
            })
            .collect()
    }

    pub fn cell_center(&self, cell: usize) -> Vec<f64> {
        let mut c = self.node_coords(self.cell_base_node(cell));
        for (x, h) in c.iter_mut().zip(&self.spacing) {
            *x += 0.5 * h;
        }
        c
    }

    /// Node nearest to `point` (clamped into the chart).
    pub fn nearest_node(&self, point: &[f64]) -> usize {
        let multi: Vec<usize> = (0..self.dim())
            .map(|k| {
                let f = ((point[k] - self.lower[k]) / self.spacing[k]).round();
                f.clamp(0.0, (self.resolution[k] - 1) as f64) as usize
            })
            .collect();
        self.flat_index(&multi)
    }

    /// Base cell multi-index and local coordinates in `[0,1]^n` for a point inside the chart.
    pub fn locate(&self, point: &[f64]) -> Option<(Vec<usize>, Vec<f64>)> {
        if !self.contains(point) {
            return None;
        }
        let mut base = Vec::with_capacity(self.dim());
        let mut frac = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let s = (point[k] - self.lower[k]) / self.spacing[k];
            let i = (s.floor() as usize).min(self.resolution[k] - 2);
            base.push(i);
            frac.push((s - i as f64).clamp(0.0, 1.0));
        }
        Some((base, frac))
    }

    /// Number of nodes of `other` along each axis must match for node-wise comparisons.
    pub fn same_grid(&self, other: &GridChart) -> bool {
        self.resolution == other.resolution
            && self
                .lower
                .iter()
                .zip(&other.lower)
                .chain(self.upper.iter().zip(&other.upper))
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
    }

    /// Rebuild derived fields after deserialization.
    pub fn rebuilt(self) -> Result<Self> {
        Self::new(self.lower, self.upper, self.resolution)
    }
}

/// Kuhn triangulation of the unit `n`-cube: for every permutation the chain of
/// corner bitmasks and the axis crossed at each step.
#[derive(Debug, Clone)]
pub struct KuhnTable {
    pub chains: Vec<Vec<usize>>,
    pub axes: Vec<Vec<usize>>,
}

impl KuhnTable {
    pub fn new(n: usize) -> Self {
        let mut chains = Vec::new();
        let mut axes = Vec::new();
        for perm in permutations(n) {
            let mut mask = 0usize;
            let mut chain = vec![0usize];
            for &k in &perm {
                mask |= 1 << k;
                chain.push(mask);
            }
            chains.push(chain);
            axes.push(perm);
        }
        Self { chains, axes }
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }
}

pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

pub(crate) fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// One real value per chart node, with an optional validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    chart: GridChart,
    values: Vec<f64>,
    mask: Option<Vec<bool>>,
}

impl ScalarField {
    pub fn new(chart: GridChart, values: Vec<f64>) -> Result<Self> {
        if values.len() != chart.node_count() {
            return invalid(format!(
                "field has {} values but chart has {} nodes",
                values.len(),
                chart.node_count()
            ));
        }
        Ok(Self {
            chart,
            values,
            mask: None,
        })
    }

    pub fn from_fn(chart: &GridChart, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; chart.dim()];
        let values = (0..chart.node_count())
            .map(|i| {
                chart.node_coords_into(i, &mut x);
                f(&x)
            })
            .collect();
        Self {
            chart: chart.clone(),
            values,
            mask: None,
        }
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.values.len() {
            return invalid("mask length differs from node count");
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[index])
    }

    /// Multilinear interpolation; `None` outside the chart.
    pub fn interpolate(&self, point: &[f64]) -> Option<f64> {
        let (base, frac) = self.chart.locate(point)?;
        let n = self.chart.dim();
        let base_index = self.chart.flat_index(&base);
        let strides = self.chart.strides();
        let mut acc = 0.0;
        for mask in 0..1usize << n {
            let mut w = 1.0;
            let mut idx = base_index;
            for k in 0..n {
                if mask >> k & 1 == 1 {
                    w *= frac[k];
                    idx += strides[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        Some(acc)
    }

    /// Node-wise linear combination `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &ScalarField, beta: f64) -> Result<ScalarField> {
        if !self.chart.same_grid(&other.chart) {
            return invalid("fields live on different charts");
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        ScalarField::new(self.chart.clone(), values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_counts() {
        let c = GridChart::new(vec![-1.0, 0.0], vec![1.0, 2.0], vec![5, 3]).unwrap();
        assert_eq!(c.spacing(), &[0.5, 1.0]);
        assert_eq!(c.node_count(), 15);
        assert_eq!(c.cell_count(), 8);
        assert_eq!(c.node_coords(c.flat_index(&[4, 2])), vec![1.0, 2.0]);
        assert_eq!(c.multi_index(7), vec![2, 1]);
    }

    #[test]
    fn rejects_degenerate_axes() {
        assert!(GridChart::new(vec![0.0], vec![0.0], vec![3]).is_err());
        assert!(GridChart::new(vec![0.0], vec![1.0], vec![1]).is_err());
        assert!(GridChart::new(vec![0.0; 4], vec![1.0; 4], vec![3; 4]).is_err());
    }

    #[test]
    fn kuhn_table_covers_the_cube() {
        let t = KuhnTable::new(3);
        assert_eq!(t.len(), 6);
        for chain in &t.chains {
            assert_eq!(chain[0], 0);
            assert_eq!(chain[3], 7);
        }
    }

    #[test]
    fn interpolation_is_exact_for_multilinear_functions() {
        let c = GridChart::new(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 1.0], vec![4, 5, 3]).unwrap();
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[2];
        let field = ScalarField::from_fn(&c, f);
        let p = [0.37, 1.23, 0.81];
        assert!((field.interpolate(&p).unwrap() - f(&p)).abs() < 1e-12);
        assert!(field.interpolate(&[2.0, 0.0, 0.0]).is_none());
    }

    #[test]
    fn cell_base_nodes_enumerate_all_cells() {
        let c = GridChart::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![3, 4]).unwrap();
        let bases: Vec<usize> = (0..c.cell_count()).map(|i| c.cell_base_node(i)).collect();
        assert_eq!(bases, vec![0, 1, 2, 4, 5, 6]);
    }
}
