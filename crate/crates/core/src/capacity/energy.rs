//! Discrete `p`-energy `∫ |∇_H u|^p dv` of continuous piecewise-linear
//! functions on the Kuhn triangulation.
//!
//! The horizontal frame and density are frozen at cell centres. Gradients are
//! assembled in two deterministic phases: per-cell corner contributions, then
//! a fixed-order gather per node.

use rayon::prelude::*;

use crate::chart::{factorial, GridChart, KuhnTable, ScalarField};
use crate::error::{invalid, Result};
use crate::sr::SubRiemannianStructure;

const MAX_CORNERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Power {
    Two,
    Three,
    Four,
    General(f64),
}

impl Power {
    fn new(p: f64) -> Self {
        if p == 2.0 {
            Power::Two
        } else if p == 3.0 {
            Power::Three
        } else if p == 4.0 {
            Power::Four
        } else {
            Power::General(p)
        }
    }

    /// `(s2^{p/2}, p·s2^{(p−2)/2})` for `s2 = |∇_H u|²`.
    #[inline]
    fn eval(self, s2: f64) -> (f64, f64) {
        match self {
            Power::Two => (s2, 2.0),
            Power::Three => {
                let s = s2.sqrt();
                (s2 * s, 3.0 * s)
            }
            Power::Four => (s2 * s2, 4.0 * s2),
            Power::General(p) => {
                if s2 == 0.0 {
                    (0.0, 0.0)
                } else {
                    let e = s2.powf(0.5 * p);
                    (e, p * e / s2)
                }
            }
        }
    }
}

/// Grid geometry plus frame and weights on a subset of cells.
pub(crate) struct EnergyMesh {
    pub chart: GridChart,
    n: usize,
    d: usize,
    kuhn: KuhnTable,
    corners: Vec<usize>,
    pub bases: Vec<usize>,
    /// Row-major `d × n` frame per listed cell.
    frame: Vec<f64>,
    /// `density × cell volume / n!` per listed cell.
    weight: Vec<f64>,
    inv_h: Vec<f64>,
}

impl EnergyMesh {
    pub fn new(s: &SubRiemannianStructure, chart: &GridChart, cells: Vec<usize>) -> Result<Self> {
        if chart.dim() != s.n() {
            return invalid(format!(
                "chart has {} axes but the structure has dimension {}",
                chart.dim(),
                s.n()
            ));
        }
        let n = s.n();
        let d = s.d();
        let share = chart.cell_volume() / factorial(n) as f64;
        let per_cell: Vec<(usize, Vec<f64>, f64)> = cells
            .par_iter()
            .map(|&c| {
                let x = chart.cell_center(c);
                let mut a = vec![0.0; d * n];
                s.horizontal_at(&x, &mut a);
                (chart.cell_base_node(c), a, s.density().eval(&x) * share)
            })
            .collect();
        let mut bases = Vec::with_capacity(cells.len());
        let mut frame = Vec::with_capacity(cells.len() * d * n);
        let mut weight = Vec::with_capacity(cells.len());
        for (b, a, w) in per_cell {
            bases.push(b);
            frame.extend(a);
            weight.push(w);
        }
        if frame.iter().chain(&weight).any(|v| !v.is_finite()) {
            return invalid("frame or density is not finite on the chart");
        }
        Ok(Self {
            chart: chart.clone(),
            n,
            d,
            kuhn: KuhnTable::new(n),
            corners: chart.corner_offsets(),
            bases,
            frame,
            weight,
            inv_h: chart.spacing().iter().map(|h| 1.0 / h).collect(),
        })
    }

    pub fn all_cells(s: &SubRiemannianStructure, chart: &GridChart) -> Result<Self> {
        Self::new(s, chart, (0..chart.cell_count()).collect())
    }

    /// Energy of one listed cell and, optionally, `∂E/∂u` at its corners.
    #[inline]
    fn cell(
        &self,
        slot: usize,
        u: &[f64],
        power: Power,
        grad: Option<&mut [f64; MAX_CORNERS]>,
    ) -> f64 {
        let n = self.n;
        let d = self.d;
        let base = self.bases[slot];
        let a = &self.frame[slot * d * n..(slot + 1) * d * n];
        let w = self.weight[slot];
        let mut corner_u = [0.0; MAX_CORNERS];
        for (mask, off) in self.corners.iter().enumerate() {
            corner_u[mask] = u[base + off];
        }
        let mut energy = 0.0;
        let mut gout = grad;
        if let Some(g) = gout.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for (chain, axes) in self.kuhn.chains.iter().zip(&self.kuhn.axes) {
            let mut du = [0.0; 3];
            for (j, &k) in axes.iter().enumerate() {
                du[k] = (corner_u[chain[j + 1]] - corner_u[chain[j]]) * self.inv_h[k];
            }
            let mut xu = [0.0; 3];
            let mut s2 = 0.0;
            for i in 0..d {
                let row = &a[i * n..(i + 1) * n];
                let mut v = 0.0;
                for k in 0..n {
                    v += row[k] * du[k];
                }
                xu[i] = v;
                s2 += v * v;
            }
            let (e, factor) = power.eval(s2);
            energy += e;
            if let Some(g) = gout.as_deref_mut() {
                if factor == 0.0 {
                    continue;
                }
                for (j, &k) in axes.iter().enumerate() {
                    let mut q = 0.0;
                    for i in 0..d {
                        q += a[i * n + k] * xu[i];
                    }
                    let q = w * factor * q * self.inv_h[k];
                    g[chain[j + 1]] += q;
                    g[chain[j]] -= q;
                }
            }
        }
        energy * w
    }

    /// Total energy over the listed cells (fixed summation order).
    pub fn energy(&self, u: &[f64], p: f64) -> f64 {
        let power = Power::new(p);
        let per: Vec<f64> = (0..self.bases.len())
            .into_par_iter()
            .map(|slot| self.cell(slot, u, power, None))
            .collect();
        per.iter().sum()
    }

    /// Per-cell energies and corner gradients into `buf` (one entry per listed cell).
    pub fn energy_and_corner_grads(
        &self,
        u: &[f64],
        p: f64,
        buf: &mut [(f64, [f64; MAX_CORNERS])],
    ) -> f64 {
        let power = Power::new(p);
        buf.par_iter_mut().enumerate().for_each(|(slot, out)| {
            out.0 = self.cell(slot, u, power, Some(&mut out.1));
        });
        buf.iter().map(|o| o.0).sum()
    }

    /// Stiffness diagonal with each simplex weighted by `|∇_H u|^{p−2}`
    /// (`|∇_H u|` floored at 1e-3); unweighted when `u` is empty.
    pub fn stiffness_diagonal(&self, u: &[f64], p: f64) -> Vec<f64> {
        let n = self.n;
        let d = self.d;
        let mut diag = vec![0.0; self.chart.node_count()];
        for slot in 0..self.bases.len() {
            let base = self.bases[slot];
            let a = &self.frame[slot * d * n..(slot + 1) * d * n];
            let w = self.weight[slot];
            for (chain, axes) in self.kuhn.chains.iter().zip(&self.kuhn.axes) {
                let scale = if u.is_empty() || p == 2.0 {
                    1.0
                } else {
                    let mut du = [0.0; 3];
                    for (j, &k) in axes.iter().enumerate() {
                        du[k] = (u[base + self.corners[chain[j + 1]]]
                            - u[base + self.corners[chain[j]]])
                            * self.inv_h[k];
                    }
                    let mut s2 = 0.0;
                    for i in 0..d {
                        let v: f64 = (0..n).map(|k| a[i * n + k] * du[k]).sum();
                        s2 += v * v;
                    }
                    s2.max(1e-6).powf(0.5 * (p - 2.0))
                };
                // ∂(∇u)/∂u_c for each chain vertex c
                for (pos, &mask) in chain.iter().enumerate() {
                    let mut dv = [0.0; 3];
                    if pos > 0 {
                        let k = axes[pos - 1];
                        dv[k] += self.inv_h[k];
                    }
                    if pos < n {
                        let k = axes[pos];
                        dv[k] -= self.inv_h[k];
                    }
                    let mut s2 = 0.0;
                    for i in 0..d {
                        let mut v = 0.0;
                        for k in 0..n {
                            v += a[i * n + k] * dv[k];
                        }
                        s2 += v * v;
                    }
                    diag[base + self.corners[mask]] += 2.0 * w * scale * s2;
                }
            }
        }
        diag
    }

    /// Visits every simplex with its sorted vertex values, `|∇_H u|²` and weight.
    pub fn for_each_simplex(&self, u: &[f64], mut f: impl FnMut(&[f64], f64, f64)) {
        let n = self.n;
        let d = self.d;
        let mut sorted = [0.0; 4];
        for slot in 0..self.bases.len() {
            let base = self.bases[slot];
            let a = &self.frame[slot * d * n..(slot + 1) * d * n];
            for (chain, axes) in self.kuhn.chains.iter().zip(&self.kuhn.axes) {
                let mut du = [0.0; 3];
                for (j, &k) in axes.iter().enumerate() {
                    du[k] = (u[base + self.corners[chain[j + 1]]]
                        - u[base + self.corners[chain[j]]])
                        * self.inv_h[k];
                }
                let mut s2 = 0.0;
                for i in 0..d {
                    let v: f64 = (0..n).map(|k| a[i * n + k] * du[k]).sum();
                    s2 += v * v;
                }
                for (j, &mask) in chain.iter().enumerate() {
                    sorted[j] = u[base + self.corners[mask]];
                }
                sorted[..=n].sort_unstable_by(|x, y| x.total_cmp(y));
                f(&sorted[..=n], s2, self.weight[slot]);
            }
        }
    }

    pub fn corner_offsets(&self) -> &[usize] {
        &self.corners
    }
}

/// `∫ |∇_H u|^p dv` of the piecewise-linear interpolant of `u` over the whole chart.
pub fn capacity_energy(s: &SubRiemannianStructure, u: &ScalarField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return invalid(format!("energy exponent must be at least 1, got {p}"));
    }
    let mesh = EnergyMesh::all_cells(s, u.chart())?;
    Ok(mesh.energy(u.values(), p))
}
