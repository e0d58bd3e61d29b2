use serde::Serialize;

use super::distance::DistanceField;
use super::growth::growth_profile_from_distance;
use super::volume::{simplex_fraction_between, CellMesh};
use crate::chart::{GridChart, ScalarField};
use crate::error::{invalid, Error, Result};
use crate::function::ScalarFn;
use crate::sr::{horizontal_gradient, SubRiemannianStructure};

/// Nodes with `|∇_H u|` below this fraction of the maximum are masked.
pub const DEGENERATE_GRADIENT: f64 = 1e-6;
/// Largest tolerated fraction of masked nodes.
pub const MAX_MASKED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct CoareaReport {
    /// `∫_{t_0 < u < t_K} f dv` from the piecewise-linear interpolant of `u`.
    pub lhs: f64,
    /// `Σ_k Δt_k · L_k` from the node-banded level integrals.
    pub rhs: f64,
    /// `|lhs − rhs| / |lhs|`.
    pub residual: f64,
    pub levels: Vec<f64>,
    /// `L_k ≈ ∫_{u = t} f dσ / |∇_H u|` for each band `[t_k, t_{k+1})`.
    pub level_integrals: Vec<f64>,
    pub masked_fraction: f64,
}

/// Trapezoidal node weights `density(x_i) · Π_k h_k · 2^{−#boundary axes}`.
pub(crate) fn node_weights(chart: &GridChart, density: &ScalarFn) -> Vec<f64> {
    let vol = chart.cell_volume();
    let res = chart.resolution();
    let c = density.as_const();
    let mut x = vec![0.0; chart.dim()];
    (0..chart.node_count())
        .map(|i| {
            let multi = chart.multi_index(i);
            let mut w = vol;
            for k in 0..chart.dim() {
                if multi[k] == 0 || multi[k] + 1 == res[k] {
                    w *= 0.5;
                }
            }
            let rho = match c {
                Some(c) => c,
                None => {
                    chart.node_coords_into(i, &mut x);
                    density.eval(&x)
                }
            };
            w * rho
        })
        .collect()
}

/// Band index of `value` among increasing `levels` (`[t_k, t_{k+1})`).
pub(crate) fn band_of(levels: &[f64], value: f64) -> Option<usize> {
    if !(value >= levels[0] && value < levels[levels.len() - 1]) {
        return None;
    }
    Some(levels.partition_point(|&t| t <= value) - 1)
}

pub(crate) fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.len() < 2 {
        return invalid("at least two levels are required");
    }
    if levels.iter().any(|t| !t.is_finite()) || levels.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("levels must be finite and strictly increasing");
    }
    Ok(())
}

/// Per-node mask of degenerate horizontal gradients among nodes with
/// `lo ≤ u ≤ hi`; errors when more than 1% of those nodes are degenerate.
pub(crate) fn degenerate_mask(
    norms: &[f64],
    u: &[f64],
    lo: f64,
    hi: f64,
) -> Result<(Vec<bool>, f64)> {
    let in_range = |i: usize| u[i] >= lo && u[i] <= hi;
    let gmax = (0..u.len())
        .filter(|&i| in_range(i))
        .map(|i| norms[i])
        .fold(0.0, f64::max);
    let mut mask = vec![false; u.len()];
    let mut count = 0usize;
    let mut degenerate = 0usize;
    for i in 0..u.len() {
        if in_range(i) {
            count += 1;
            if norms[i] <= DEGENERATE_GRADIENT * gmax {
                mask[i] = true;
                degenerate += 1;
            }
        }
    }
    let fraction = degenerate as f64 / count.max(1) as f64;
    if fraction > MAX_MASKED_FRACTION {
        return Err(Error::DegenerateGradient {
            fraction,
            limit: MAX_MASKED_FRACTION,
        });
    }
    Ok((mask, fraction))
}

/// Compares `∫ f dv` with `∫ dt ∫_{u=t} f dσ/|∇_H u|` over the given level bands.
///
/// The surface integrals are band volumes of `f` (node quadrature, degenerate
/// nodes excluded) divided by the band width; the volume side integrates the
/// piecewise-linear interpolant exactly, so the residual measures the
/// discretisation gap between the two.
pub fn coarea_check(
    u: &ScalarField,
    f: &ScalarField,
    s: &SubRiemannianStructure,
    levels: &[f64],
) -> Result<CoareaReport> {
    check_levels(levels)?;
    let chart = u.chart();
    if !chart.same_grid(f.chart()) {
        return invalid("u and f live on different charts");
    }
    let (lo, hi) = (levels[0], levels[levels.len() - 1]);
    let grad = horizontal_gradient(u, s)?;
    let norms: Vec<f64> = (0..chart.node_count()).map(|i| grad.norm(i)).collect();
    let (mask, masked_fraction) = degenerate_mask(&norms, u.values(), lo, hi)?;

    let mesh = CellMesh::new(chart, s.density());
    let share = mesh.simplex_share();
    let mut lhs = 0.0;
    let mut buf = [0.0; 4];
    for cell in 0..mesh.bases.len() {
        let base = mesh.bases[cell];
        for simplex in 0..mesh.kuhn.len() {
            let chain = &mesh.kuhn.chains[simplex];
            let f_mean = chain
                .iter()
                .map(|&c| f.values()[base + mesh.corners[c]])
                .sum::<f64>()
                / chain.len() as f64;
            if f_mean == 0.0 {
                continue;
            }
            let k = mesh.sorted_values(u.values(), base, simplex, &mut buf);
            lhs +=
                f_mean * share * mesh.weights[cell] * simplex_fraction_between(&buf[..k], lo, hi);
        }
    }

    let weights = node_weights(chart, s.density());
    let mut band_sums = vec![0.0; levels.len() - 1];
    for i in 0..chart.node_count() {
        if mask[i] {
            continue;
        }
        if let Some(b) = band_of(levels, u.values()[i]) {
            band_sums[b] += f.values()[i] * weights[i];
        }
    }
    let level_integrals: Vec<f64> = band_sums
        .iter()
        .zip(levels.windows(2))
        .map(|(sum, w)| sum / (w[1] - w[0]))
        .collect();
    let rhs: f64 = level_integrals
        .iter()
        .zip(levels.windows(2))
        .map(|(l, w)| l * (w[1] - w[0]))
        .sum();
    let residual = if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else if lhs == 0.0 {
        f64::INFINITY
    } else {
        (lhs - rhs).abs() / lhs.abs()
    };
    Ok(CoareaReport {
        lhs,
        rhs,
        residual,
        levels: levels.to_vec(),
        level_integrals,
        masked_fraction,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereAreaReport {
    /// Band midpoints.
    pub radii: Vec<f64>,
    /// `V'(r)` at each midpoint from differenced ball volumes.
    pub derivative: Vec<f64>,
    /// Banded coarea integrals `∫_{d=t} dσ/|∇_H d|` of the same bands.
    pub banded: Vec<f64>,
    /// Largest `|banded/derivative − 1|` over the bands.
    pub residual: f64,
    pub coarea: CoareaReport,
}

/// `V'(r) = S(r)` for `u = dist`: differenced ball volumes against the banded
/// coarea integrals with `f ≡ 1`, band by band.
pub fn sphere_area_check(
    s: &SubRiemannianStructure,
    dist: &DistanceField,
    levels: &[f64],
) -> Result<SphereAreaReport> {
    check_levels(levels)?;
    if levels[0] <= 0.0 {
        return invalid("levels must be positive radii");
    }
    let ones = ScalarField::from_fn(dist.chart(), |_| 1.0);
    let coarea = coarea_check(dist.field(), &ones, s, levels)?;
    let radii: Vec<f64> = levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let profile = growth_profile_from_distance(dist, s.density(), &radii, s.m())?;
    let derivative = profile.areas();
    let residual = coarea
        .level_integrals
        .iter()
        .zip(&derivative)
        .map(|(l, d)| {
            if *d > 0.0 {
                (l / d - 1.0).abs()
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    Ok(SphereAreaReport {
        radii,
        derivative,
        banded: coarea.level_integrals.clone(),
        residual,
        coarea,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sr::build_builtin;
    use std::f64::consts::PI;

    #[test]
    fn annulus_in_the_plane() {
        let e = build_builtin("euclidean", &[2]).unwrap();
        let c = GridChart::new(vec![-2.5, -2.5], vec![2.5, 2.5], vec![161, 161]).unwrap();
        let u = ScalarField::from_fn(&c, |x| x[0].hypot(x[1]));
        let one = ScalarField::from_fn(&c, |_| 1.0);
        let levels: Vec<f64> = (0..=10).map(|i| 1.0 + 0.1 * i as f64).collect();
        let r = coarea_check(&u, &one, &e, &levels).unwrap();
        assert!((r.lhs - 3.0 * PI).abs() < 0.01 * 3.0 * PI);
        assert!(r.residual < 0.05, "{r:?}");
        // band integrals approximate the circumference 2πt at mid-band
        assert!((r.level_integrals[0] - 2.0 * PI * 1.05).abs() < 0.05 * 2.0 * PI * 1.05);
        let zero = ScalarField::from_fn(&c, |_| 0.0);
        assert_eq!(coarea_check(&u, &zero, &e, &levels).unwrap().residual, 0.0);
        let d = DistanceField::from_field(u, vec![0.0, 0.0]).unwrap();
        let sa = sphere_area_check(&e, &d, &levels).unwrap();
        assert!(sa.residual < 0.05, "{:?}", sa.banded);
        assert!((sa.derivative[0] - 2.0 * PI * 1.05).abs() < 0.02 * 2.0 * PI);
    }

    #[test]
    fn flat_function_is_degenerate() {
        let e = build_builtin("euclidean", &[2]).unwrap();
        let c = GridChart::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![21, 21]).unwrap();
        let u = ScalarField::from_fn(&c, |x| if x[0] < 0.0 { 0.5 } else { 0.5 + x[0] });
        let one = ScalarField::from_fn(&c, |_| 1.0);
        assert!(matches!(
            coarea_check(&u, &one, &e, &[0.4, 1.0]),
            Err(Error::DegenerateGradient { .. })
        ));
    }
}
