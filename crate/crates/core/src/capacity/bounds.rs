use serde::Serialize;

use super::energy::EnergyMesh;
use crate::chart::ScalarField;
use crate::error::{invalid, Error, Result};
use crate::metric::{degenerate_mask, simplex_fraction_between, BallVolumes, DistanceField};
use crate::quad::{fit_power, integrate};
use crate::sr::{horizontal_gradient, SubRiemannianStructure};

/// Smallest accepted exponent.
pub const MIN_EXPONENT: f64 = 1.1;

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if !(p >= MIN_EXPONENT) || !p.is_finite() {
        return invalid(format!(
            "capacity exponent must be finite and at least {MIN_EXPONENT}, got {p}"
        ));
    }
    Ok(())
}

pub(crate) fn check_radii(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > a && b.is_finite()) {
        return invalid(format!(
            "annulus radii must satisfy 0 < a < b, got a={a}, b={b}"
        ));
    }
    Ok(())
}

/// `(∫_a^b S(r)^{−1/(p−1)} dr)^{1−p}`, the energy of the best radial function.
pub fn capacity_upper_bound_radial(
    area_samples: &[(f64, f64)],
    a: f64,
    b: f64,
    p: f64,
) -> Result<f64> {
    check_exponent(p)?;
    check_radii(a, b)?;
    let (r, s): (Vec<f64>, Vec<f64>) = area_samples.iter().cloned().unzip();
    if let Some(i) = s.iter().position(|v| !(*v > 0.0)) {
        return invalid(format!(
            "sphere area {} at r={} is not positive",
            s[i], r[i]
        ));
    }
    let ys: Vec<f64> = s.iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect();
    let integral = integrate(&r, &ys, a, b)?;
    Ok(integral.powf(1.0 - p))
}

/// Samples `(v, P(v))` of an isoperimetric function.
#[derive(Debug, Clone, Serialize)]
pub struct IsoperimetricProfile {
    pub samples: Vec<(f64, f64)>,
    /// Domain family the infimum was taken over.
    pub provenance: String,
}

impl IsoperimetricProfile {
    pub fn new(samples: Vec<(f64, f64)>, provenance: impl Into<String>) -> Result<Self> {
        if samples.len() < 2 {
            return invalid("an isoperimetric profile needs at least two samples");
        }
        if samples
            .iter()
            .any(|(v, p)| !(v.is_finite() && p.is_finite() && *p >= 0.0 && *v >= 0.0))
        {
            return invalid("profile samples must be finite and nonnegative");
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return invalid("profile volumes must be strictly increasing");
        }
        Ok(Self {
            samples,
            provenance: provenance.into(),
        })
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.1).collect()
    }

    /// `P ↦ c·P`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|&(v, p)| (v, c * p)).collect(),
            provenance: self.provenance.clone(),
        }
    }
}

pub const METRIC_BALL_FAMILY: &str = "metric-ball family";

/// `S(r) ≈ (v(r+δ) − v(r−δ)) / 2δ` with `δ` at most one grid spacing.
pub(crate) fn sphere_area_at(balls: &BallVolumes, r: f64, h: f64) -> f64 {
    let limit = balls.boundary_distance();
    let delta = h.min(0.5 * r).min(0.5 * (limit - r));
    (balls.volume_unchecked(r + delta) - balls.volume_unchecked(r - delta)) / (2.0 * delta)
}

/// `P(v) := S(r)` where `v(r) = v`, over the metric balls of `dist`.
pub fn isoperimetric_profile(
    s: &SubRiemannianStructure,
    dist: &DistanceField,
    volumes: &[f64],
) -> Result<IsoperimetricProfile> {
    let balls = BallVolumes::new(dist, s.density());
    let h = dist.chart().spacing().iter().cloned().fold(0.0, f64::max);
    let limit = balls.boundary_distance();
    let r_max = limit - 2.0 * h;
    let v_max = balls.volume_unchecked(r_max);
    let mut samples = Vec::with_capacity(volumes.len());
    for &v in volumes {
        if !(v > 0.0 && v <= v_max) {
            return invalid(format!(
                "volume {v} is outside the range (0, {v_max}] of unclipped balls on this chart"
            ));
        }
        let (mut lo, mut hi) = (0.0, r_max);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if balls.volume_unchecked(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        let r = 0.5 * (lo + hi);
        samples.push((v, sphere_area_at(&balls, r, h)));
    }
    IsoperimetricProfile::new(samples, METRIC_BALL_FAMILY)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    /// `(∫_0^{vol_D} P^{−p/(p−1)} dv)^{1−p}`; 0 when the integral diverges.
    pub value: f64,
    /// Bound from the sampled range alone (not a valid lower bound by itself).
    pub truncated_value: f64,
    /// Power-law estimate of `∫_0^{v_0} P^{−p/(p−1)} dv`; infinite when divergent.
    pub tail: f64,
    pub tail_diverges: bool,
    /// `P` vanishes somewhere in the range.
    pub degenerate: bool,
}

/// Lower bound `(∫_0^{vol_D} dv / P(v)^{p/(p−1)})^{1−p}`.
///
/// Below the smallest sample `v_0` the profile is extended by the power law
/// through its first three samples.
pub fn capacity_lower_bound(
    profile: &IsoperimetricProfile,
    vol_d: f64,
    p: f64,
) -> Result<LowerBound> {
    check_exponent(p)?;
    let vs = profile.volumes();
    let ps = profile.values();
    let v0 = vs[0];
    if !(vol_d > v0 && vol_d <= vs[vs.len() - 1] * (1.0 + 1e-12)) {
        return invalid(format!(
            "domain volume {vol_d} is outside the profile range ({v0}, {}]",
            vs[vs.len() - 1]
        ));
    }
    let q = p / (p - 1.0);
    let upto = vs.partition_point(|&v| v <= vol_d).min(vs.len());
    if ps[..upto.max(1)].iter().any(|&v| v <= 0.0) || ps[upto.min(vs.len() - 1)] <= 0.0 {
        return Ok(LowerBound {
            value: 0.0,
            truncated_value: 0.0,
            tail: f64::INFINITY,
            tail_diverges: true,
            degenerate: true,
        });
    }
    let ys: Vec<f64> = ps
        .iter()
        .map(|v| if *v > 0.0 { v.powf(-q) } else { f64::INFINITY })
        .collect();
    let body = integrate(&vs, &ys, v0, vol_d.min(vs[vs.len() - 1]))?;
    let truncated_value = body.powf(1.0 - p);
    let tail = if v0 == 0.0 {
        0.0
    } else {
        let k = vs.len().min(3);
        let fit = fit_power(&vs[..k], &ps[..k])?;
        // ∫_0^{v0} (c v^α)^{−q} dv converges iff αq < 1
        let exponent = 1.0 - fit.k * q;
        if exponent <= 1e-9 {
            f64::INFINITY
        } else {
            fit.c.powf(-q) * v0.powf(exponent) / exponent
        }
    };
    let tail_diverges = !tail.is_finite();
    let value = if tail_diverges {
        0.0
    } else {
        (body + tail).powf(1.0 - p)
    };
    Ok(LowerBound {
        value,
        truncated_value,
        tail,
        tail_diverges,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormSpace {
    Euclidean,
    Heisenberg,
}

/// `Γ(k/2)` for positive integers `k`.
fn gamma_half(k: usize) -> f64 {
    let mut g = if k % 2 == 0 {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    let mut j = if k % 2 == 0 { 2 } else { 1 };
    while j < k {
        g *= j as f64 / 2.0;
        j += 2;
    }
    g
}

/// Area `2π^{n/2}/Γ(n/2)` of the unit sphere in `ℝⁿ`.
pub fn unit_sphere_area(n: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Conformal capacity of a spherical condenser: `ω_{n−1}(ln b/a)^{1−n}` in
/// `ℝⁿ`, `ω_{n−1}(ln b/a)^{−n}` for the Heisenberg group with topological dimension `n`.
pub fn closed_form_capacity(space: ClosedFormSpace, n: usize, a: f64, b: f64) -> Result<f64> {
    check_radii(a, b)?;
    if n < 2 {
        return invalid(format!("closed forms need n ≥ 2, got {n}"));
    }
    let l = (b / a).ln();
    let omega = unit_sphere_area(n);
    Ok(match space {
        ClosedFormSpace::Euclidean => omega * l.powf(1.0 - n as f64),
        ClosedFormSpace::Heisenberg => omega * l.powf(-(n as f64)),
    })
}

/// Number of level bands used by [`capacity_levelset`].
pub const LEVELSET_BANDS: usize = 50;

/// `(∫_0^1 dt / (∫_{u=t} |∇_H u|^{p−1} dσ)^{1/(p−1)})^{1−p}` with the inner
/// integrals taken as band energies divided by the band width.
pub fn capacity_levelset(u: &ScalarField, s: &SubRiemannianStructure, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return invalid(format!("the level-set form needs p > 1, got {p}"));
    }
    let vals = u.values();
    const EPS: f64 = 1e-12;
    if vals.iter().any(|v| !(*v >= -EPS && *v <= 1.0 + EPS)) {
        return invalid("u takes values outside [0, 1]");
    }
    if !vals.iter().any(|v| *v <= EPS) || !vals.iter().any(|v| *v >= 1.0 - EPS) {
        return invalid("u has no 0 or no 1 plateau");
    }
    let grad = horizontal_gradient(u, s)?;
    let norms: Vec<f64> = (0..vals.len()).map(|i| grad.norm(i)).collect();
    let interior: Vec<f64> = vals
        .iter()
        .zip(grad.mask())
        .map(|(v, inner)| if *inner { *v } else { f64::NAN })
        .collect();
    degenerate_mask(&norms, &interior, EPS, 1.0 - EPS)?;

    let mesh = EnergyMesh::all_cells(s, u.chart())?;
    let k = LEVELSET_BANDS;
    let dt = 1.0 / k as f64;
    let mut bands = vec![0.0; k];
    mesh.for_each_simplex(vals, |sorted, s2, w| {
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        if hi <= lo || s2 == 0.0 {
            return;
        }
        let e = w * s2.powf(0.5 * p);
        let first = ((lo / dt).floor().max(0.0) as usize).min(k - 1);
        let last = ((hi / dt).ceil() as usize).clamp(first + 1, k);
        for (j, band) in bands.iter_mut().enumerate().take(last).skip(first) {
            *band += e * simplex_fraction_between(sorted, j as f64 * dt, (j + 1) as f64 * dt);
        }
    });
    let mut outer = 0.0;
    for (j, b) in bands.iter().enumerate() {
        if !(*b > 0.0) {
            return invalid(format!(
                "level band {j} carries no energy; u is not admissible"
            ));
        }
        outer += dt * (b / dt).powf(-1.0 / (p - 1.0));
    }
    Ok(outer.powf(1.0 - p))
}

/// `∫ ρ^m dv` for `ρ = |∇_H dist| / (dist · ln(b/a))` on the annulus `a < dist < b`:
/// an upper bound for the modulus of the curves joining its boundary components.
pub fn modulus_radial_bound(
    s: &SubRiemannianStructure,
    dist: &DistanceField,
    a: f64,
    b: f64,
) -> Result<f64> {
    check_radii(a, b)?;
    let limit = dist.boundary_distance();
    if b >= limit {
        return Err(Error::BallClipped {
            radius: b,
            boundary_distance: limit,
        });
    }
    let m = s.m() as f64;
    let l = (b / a).ln();
    let vals = dist.values();
    let chart = dist.chart();
    let cells: Vec<usize> = (0..chart.cell_count())
        .filter(|&c| {
            let base = chart.cell_base_node(c);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for off in chart.corner_offsets() {
                lo = lo.min(vals[base + off]);
                hi = hi.max(vals[base + off]);
            }
            hi > a && lo < b
        })
        .collect();
    let mesh = EnergyMesh::new(s, chart, cells)?;
    let mut total = 0.0;
    let mut vanishing = false;
    mesh.for_each_simplex(vals, |sorted, s2, w| {
        let frac = simplex_fraction_between(sorted, a, b);
        if frac == 0.0 {
            return;
        }
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        if !(mean > 0.0) {
            vanishing = true;
            return;
        }
        total += w * frac * (s2.sqrt() / (mean * l)).powf(m);
    });
    if vanishing {
        return invalid("the distance vanishes inside the annulus");
    }
    Ok(total)
}
