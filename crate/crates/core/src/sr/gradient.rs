use rayon::prelude::*;

use super::structure::SubRiemannianStructure;
use crate::chart::{GridChart, ScalarField};
use crate::error::{invalid, Result};

/// Frame components `X_i u` of the horizontal gradient at every node.
#[derive(Debug, Clone)]
pub struct HorizontalVectorField {
    chart: GridChart,
    d: usize,
    components: Vec<f64>,
    mask: Vec<bool>,
}

impl HorizontalVectorField {
    pub fn chart(&self) -> &GridChart {
        &self.chart
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// The `d` components at `node`.
    pub fn at(&self, node: usize) -> &[f64] {
        &self.components[node * self.d..(node + 1) * self.d]
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    /// False at nodes that used a one-sided difference.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn norm(&self, node: usize) -> f64 {
        self.at(node).iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn norms(&self) -> ScalarField {
        let values = (0..self.chart.node_count()).map(|i| self.norm(i)).collect();
        ScalarField::new(self.chart.clone(), values)
            .and_then(|f| f.with_mask(self.mask.clone()))
            .expect("node count matches chart")
    }
}

/// `X_i u` by central differences along each frame direction, with the step
/// chosen so the offset moves at most one cell along any axis. Off-node values
/// are multilinear interpolants; nodes whose stencil leaves the chart fall back
/// to a one-sided difference and are masked.
pub fn horizontal_gradient(
    u: &ScalarField,
    s: &SubRiemannianStructure,
) -> Result<HorizontalVectorField> {
    let chart = u.chart();
    if chart.dim() != s.n() {
        return invalid(format!(
            "chart has {} axes but the structure has dimension {}",
            chart.dim(),
            s.n()
        ));
    }
    chart.require_min_nodes(3)?;
    let n = s.n();
    let d = s.d();
    let h = chart.spacing();
    let per_node: Vec<(Vec<f64>, bool)> = (0..chart.node_count())
        .into_par_iter()
        .map(|node| {
            let x = chart.node_coords(node);
            let mut comps = vec![0.0; d];
            let mut interior = !chart.is_boundary_node(node);
            let u0 = u.values()[node];
            let mut coeffs = vec![0.0; n];
            let mut xp = vec![0.0; n];
            let mut xm = vec![0.0; n];
            for (i, field) in s.horizontal_frame().iter().enumerate() {
                field.eval_into(&x, &mut coeffs);
                let reach = coeffs
                    .iter()
                    .zip(h)
                    .map(|(c, hk)| c.abs() / hk)
                    .fold(0.0, f64::max);
                if reach == 0.0 {
                    continue;
                }
                let eps = 1.0 / reach;
                for k in 0..n {
                    xp[k] = x[k] + eps * coeffs[k];
                    xm[k] = x[k] - eps * coeffs[k];
                }
                comps[i] = match (u.interpolate(&xp), u.interpolate(&xm)) {
                    (Some(up), Some(um)) => (up - um) / (2.0 * eps),
                    (Some(up), None) => {
                        interior = false;
                        (up - u0) / eps
                    }
                    (None, Some(um)) => {
                        interior = false;
                        (u0 - um) / eps
                    }
                    (None, None) => {
                        interior = false;
                        0.0
                    }
                };
            }
            (comps, interior)
        })
        .collect();
    let mut components = Vec::with_capacity(d * per_node.len());
    let mut mask = Vec::with_capacity(per_node.len());
    for (c, ok) in per_node {
        components.extend(c);
        mask.push(ok);
    }
    Ok(HorizontalVectorField {
        chart: chart.clone(),
        d,
        components,
        mask,
    })
}
