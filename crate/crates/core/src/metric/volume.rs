//! Volumes of sublevel sets of piecewise-linear fields on the Kuhn triangulation.

use rayon::prelude::*;

use super::distance::DistanceField;
use crate::chart::{factorial, GridChart, KuhnTable};
use crate::error::{Error, Result};
use crate::function::ScalarFn;

/// Fraction of a simplex on which the linear interpolant of `f` is below `r`.
/// `f` must be sorted ascending and have `dim + 1` entries, `dim ≤ 3`.
pub(crate) fn simplex_fraction_below(f: &[f64], r: f64) -> f64 {
    let k = f.len() - 1;
    if r <= f[0] {
        return 0.0;
    }
    if r >= f[k] {
        return 1.0;
    }
    match k {
        0 => 1.0,
        1 => (r - f[0]) / (f[1] - f[0]),
        2 => {
            if r <= f[1] {
                (r - f[0]) / (f[1] - f[0]) * ((r - f[0]) / (f[2] - f[0]))
            } else {
                1.0 - (f[2] - r) / (f[2] - f[0]) * ((f[2] - r) / (f[2] - f[1]))
            }
        }
        3 => {
            if r <= f[1] {
                let t = r - f[0];
                t / (f[1] - f[0]) * (t / (f[2] - f[0])) * (t / (f[3] - f[0]))
            } else if r >= f[2] {
                let t = f[3] - r;
                1.0 - t / (f[3] - f[0]) * (t / (f[3] - f[1])) * (t / (f[3] - f[2]))
            } else {
                middle_fraction(f, r).clamp(0.0, 1.0)
            }
        }
        _ => unreachable!("simplices of dimension above 3 are not supported"),
    }
}

/// Tetrahedron with `f1 < r < f2`: divided difference of
/// `g(s) = (r−s)^3 / ((f2−s)(f3−s))` over `f0, f1`.
fn middle_fraction(f: &[f64], r: f64) -> f64 {
    let g = |s: f64| (r - s).powi(3) / ((f[2] - s) * (f[3] - s));
    let gap = f[1] - f[0];
    if gap > 1e-6 * (f[3] - f[0]) {
        (g(f[0]) - g(f[1])) / gap
    } else {
        let s = 0.5 * (f[0] + f[1]);
        let (a, b, t) = (f[2] - s, f[3] - s, r - s);
        3.0 * t * t / (a * b) - t.powi(3) * (1.0 / (a * a * b) + 1.0 / (a * b * b))
    }
}

/// Fraction of a simplex with `lo < f < hi`.
pub(crate) fn simplex_fraction_between(sorted: &[f64], lo: f64, hi: f64) -> f64 {
    (simplex_fraction_below(sorted, hi) - simplex_fraction_below(sorted, lo)).max(0.0)
}

/// Per-cell weights, the Kuhn table and the cell enumeration shared by
/// integrals over piecewise-linear fields.
pub(crate) struct CellMesh {
    pub chart: GridChart,
    pub kuhn: KuhnTable,
    pub corners: Vec<usize>,
    pub bases: Vec<usize>,
    /// `density(cell centre) × cell volume`.
    pub weights: Vec<f64>,
}

impl CellMesh {
    pub fn new(chart: &GridChart, density: &ScalarFn) -> Self {
        let bases: Vec<usize> = (0..chart.cell_count())
            .map(|c| chart.cell_base_node(c))
            .collect();
        let vol = chart.cell_volume();
        let weights = match density.as_const() {
            Some(c) => vec![c * vol; bases.len()],
            None => (0..bases.len())
                .into_par_iter()
                .map(|c| density.eval(&chart.cell_center(c)) * vol)
                .collect(),
        };
        Self {
            chart: chart.clone(),
            kuhn: KuhnTable::new(chart.dim()),
            corners: chart.corner_offsets(),
            bases,
            weights,
        }
    }

    pub fn simplex_share(&self) -> f64 {
        1.0 / factorial(self.chart.dim()) as f64
    }

    /// Sorted vertex values of simplex `s` of the cell with base node `base`.
    #[inline]
    pub fn sorted_values(
        &self,
        values: &[f64],
        base: usize,
        s: usize,
        out: &mut [f64; 4],
    ) -> usize {
        let chain = &self.kuhn.chains[s];
        for (j, &mask) in chain.iter().enumerate() {
            out[j] = values[base + self.corners[mask]];
        }
        let k = chain.len();
        out[..k].sort_unstable_by(|a, b| a.total_cmp(b));
        k
    }

    /// Weighted measure of `{lo < f < hi}` inside one cell.
    pub fn cell_measure_between(&self, values: &[f64], cell: usize, lo: f64, hi: f64) -> f64 {
        let base = self.bases[cell];
        let mut buf = [0.0; 4];
        let mut acc = 0.0;
        for s in 0..self.kuhn.len() {
            let k = self.sorted_values(values, base, s, &mut buf);
            acc += simplex_fraction_between(&buf[..k], lo, hi);
        }
        acc * self.simplex_share() * self.weights[cell]
    }
}

/// Repeated ball volumes `v(r)` of one distance field.
pub struct BallVolumes {
    mesh: CellMesh,
    values: Vec<f64>,
    /// Cells ordered by their maximum distance.
    order: Vec<usize>,
    cell_max: Vec<f64>,
    cell_min: Vec<f64>,
    /// `prefix[k]` = total weight of `order[..k]`.
    prefix: Vec<f64>,
    max_width: f64,
    boundary_distance: f64,
}

impl BallVolumes {
    pub fn new(dist: &DistanceField, density: &ScalarFn) -> Self {
        let mesh = CellMesh::new(dist.chart(), density);
        let values = dist.values().to_vec();
        let (cell_min, cell_max): (Vec<f64>, Vec<f64>) = mesh
            .bases
            .iter()
            .map(|&b| {
                mesh.corners
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &o| {
                        let v = values[b + o];
                        let v = if v.is_nan() { f64::INFINITY } else { v };
                        (lo.min(v), hi.max(v))
                    })
            })
            .unzip();
        let mut order: Vec<usize> = (0..cell_max.len()).collect();
        order.sort_by(|&a, &b| cell_max[a].total_cmp(&cell_max[b]).then(a.cmp(&b)));
        let mut prefix = Vec::with_capacity(order.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &c in &order {
            acc += mesh.weights[c];
            prefix.push(acc);
        }
        let max_width = cell_min
            .iter()
            .zip(&cell_max)
            .filter(|(_, hi)| hi.is_finite())
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max);
        Self {
            boundary_distance: dist.boundary_distance(),
            mesh,
            values,
            order,
            cell_max,
            cell_min,
            prefix,
            max_width,
        }
    }

    /// Radii below this are not clipped by the chart.
    pub fn boundary_distance(&self) -> f64 {
        self.boundary_distance
    }

    /// `v(r)` without the clipping check.
    pub fn volume_unchecked(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let inside = self.order.partition_point(|&c| self.cell_max[c] <= r);
        let mut total = self.prefix[inside];
        for &c in &self.order[inside..] {
            if self.cell_max[c] > r + self.max_width {
                break;
            }
            if self.cell_min[c] < r {
                total += self
                    .mesh
                    .cell_measure_between(&self.values, c, f64::NEG_INFINITY, r);
            }
        }
        total
    }

    pub fn volume(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "radius must be nonnegative, got {r}"
            )));
        }
        if r >= self.boundary_distance {
            return Err(Error::BallClipped {
                radius: r,
                boundary_distance: self.boundary_distance,
            });
        }
        Ok(self.volume_unchecked(r))
    }
}

/// `v(r)`: density-weighted measure of `{dist < r}` for the piecewise-linear
/// interpolant of the distance field.
pub fn ball_volume(dist: &DistanceField, r: f64, density: &ScalarFn) -> Result<f64> {
    BallVolumes::new(dist, density).volume(r)
}
